#include "psmc/expr.hpp"

#include <cctype>

namespace psmc {

namespace {

struct Lexer {
    const std::string& text;
    std::size_t pos = 0;

    explicit Lexer(const std::string& t) : text(t) {}

    void skip_ws() {
        while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
    }

    bool eof() {
        skip_ws();
        return pos >= text.size();
    }

    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }

    bool consume(const char* tok) {
        skip_ws();
        std::size_t n = 0;
        while (tok[n]) ++n;
        if (text.compare(pos, n, tok) != 0) return false;
        // Avoid matching "<" against "<=" and identifiers against prefixes.
        if (std::isalpha(static_cast<unsigned char>(tok[0]))) {
            char next = pos + n < text.size() ? text[pos + n] : '\0';
            if (std::isalnum(static_cast<unsigned char>(next)) || next == '_') return false;
        }
        pos += n;
        return true;
    }

    [[noreturn]] void fail(const std::string& msg) { throw ExprError(msg, pos); }
};

struct Parser {
    Lexer lex;

    explicit Parser(const std::string& t) : lex(t) {}

    ExprPtr parse() {
        ExprPtr e = parse_or();
        if (!lex.eof()) lex.fail("unexpected trailing input");
        return e;
    }

    ExprPtr parse_or() {
        ExprPtr e = parse_and();
        while (lex.consume("||")) e = binary(BinOp::Or, e, parse_and());
        return e;
    }

    ExprPtr parse_and() {
        ExprPtr e = parse_cmp();
        while (lex.consume("&&")) e = binary(BinOp::And, e, parse_cmp());
        return e;
    }

    ExprPtr parse_cmp() {
        ExprPtr e = parse_add();
        // Comparisons are non-associative: a < b < c is rejected.
        if (lex.consume("<=")) return binary(BinOp::Le, e, parse_add());
        if (lex.consume(">=")) return binary(BinOp::Ge, e, parse_add());
        if (lex.consume("==")) return binary(BinOp::Eq, e, parse_add());
        if (lex.consume("!=")) return binary(BinOp::Ne, e, parse_add());
        if (lex.consume("<")) return binary(BinOp::Lt, e, parse_add());
        if (lex.consume(">")) return binary(BinOp::Gt, e, parse_add());
        return e;
    }

    ExprPtr parse_add() {
        ExprPtr e = parse_mul();
        for (;;) {
            if (lex.consume("+")) e = binary(BinOp::Add, e, parse_mul());
            else if (lex.consume("-")) e = binary(BinOp::Sub, e, parse_mul());
            else return e;
        }
    }

    ExprPtr parse_mul() {
        ExprPtr e = parse_unary();
        for (;;) {
            if (lex.consume("*")) e = binary(BinOp::Mul, e, parse_unary());
            else if (lex.consume("/")) e = binary(BinOp::Div, e, parse_unary());
            else return e;
        }
    }

    ExprPtr parse_unary() {
        if (lex.consume("-")) return unary(UnOp::Neg, parse_unary());
        if (lex.consume("!")) return unary(UnOp::Not, parse_unary());
        return parse_primary();
    }

    ExprPtr parse_primary() {
        lex.skip_ws();
        if (lex.pos >= lex.text.size()) lex.fail("unexpected end of expression");
        char c = lex.text[lex.pos];
        if (c == '(') {
            ++lex.pos;
            ExprPtr e = parse_or();
            if (!lex.consume(")")) lex.fail("expected ')'");
            return e;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) return parse_number();
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name();
        lex.fail(std::string("unexpected character '") + c + "'");
    }

    ExprPtr parse_number() {
        std::size_t start = lex.pos;
        long long v = 0;
        while (lex.pos < lex.text.size() &&
               std::isdigit(static_cast<unsigned char>(lex.text[lex.pos]))) {
            v = v * 10 + (lex.text[lex.pos] - '0');
            if (v < 0) throw ExprError("integer literal overflows", start);
            ++lex.pos;
        }
        return Expr::literal(v);
    }

    ExprPtr parse_name() {
        std::size_t start = lex.pos;
        while (lex.pos < lex.text.size()) {
            char c = lex.text[lex.pos];
            if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') ++lex.pos;
            else break;
        }
        std::string name = lex.text.substr(start, lex.pos - start);
        if (name == "true") return Expr::literal(1);
        if (name == "false") return Expr::literal(0);
        std::vector<ExprPtr> indices;
        while (lex.peek() == '[') {
            ++lex.pos;
            indices.push_back(parse_or());
            if (!lex.consume("]")) lex.fail("expected ']'");
        }
        auto e = std::make_shared<Expr>();
        if (indices.empty()) {
            e->kind = Expr::Kind::Name;
            e->name = name;
        } else {
            e->kind = Expr::Kind::Index;
            e->name = name;
            e->operands = std::move(indices);
        }
        return e;
    }

    static ExprPtr binary(BinOp op, ExprPtr a, ExprPtr b) {
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::Binary;
        e->bop = op;
        e->operands = {std::move(a), std::move(b)};
        return e;
    }

    static ExprPtr unary(UnOp op, ExprPtr a) {
        auto e = std::make_shared<Expr>();
        e->kind = Expr::Kind::Unary;
        e->uop = op;
        e->operands = {std::move(a)};
        return e;
    }
};

long long apply_bin(BinOp op, long long a, long long b) {
    switch (op) {
        case BinOp::Add: return a + b;
        case BinOp::Sub: return a - b;
        case BinOp::Mul: return a * b;
        case BinOp::Div:
            if (b == 0) throw EvalError("division by zero");
            return a / b;
        case BinOp::Lt: return a < b ? 1 : 0;
        case BinOp::Le: return a <= b ? 1 : 0;
        case BinOp::Gt: return a > b ? 1 : 0;
        case BinOp::Ge: return a >= b ? 1 : 0;
        case BinOp::Eq: return a == b ? 1 : 0;
        case BinOp::Ne: return a != b ? 1 : 0;
        case BinOp::And: return (a != 0 && b != 0) ? 1 : 0;
        case BinOp::Or: return (a != 0 || b != 0) ? 1 : 0;
    }
    throw EvalError("bad operator");
}

const char* bin_text(BinOp op) {
    switch (op) {
        case BinOp::Add: return "+";
        case BinOp::Sub: return "-";
        case BinOp::Mul: return "*";
        case BinOp::Div: return "/";
        case BinOp::Lt: return "<";
        case BinOp::Le: return "<=";
        case BinOp::Gt: return ">";
        case BinOp::Ge: return ">=";
        case BinOp::Eq: return "==";
        case BinOp::Ne: return "!=";
        case BinOp::And: return "&&";
        case BinOp::Or: return "||";
    }
    return "?";
}

}  // namespace

ExprPtr parse_expr(const std::string& text) {
    Parser p(text);
    return p.parse();
}

std::string expr_to_string(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Int:
            return e.value < 0 ? "(" + std::to_string(e.value) + ")" : std::to_string(e.value);
        case Expr::Kind::Name:
        case Expr::Kind::Var:
            return e.name;
        case Expr::Kind::Index:
        case Expr::Kind::MatRef: {
            std::string s = e.name;
            for (const auto& ix : e.operands) s += "[" + expr_to_string(*ix) + "]";
            return s;
        }
        case Expr::Kind::Unary:
            return std::string(e.uop == UnOp::Neg ? "-" : "!") + "(" +
                   expr_to_string(*e.operands[0]) + ")";
        case Expr::Kind::Binary:
            return "(" + expr_to_string(*e.operands[0]) + " " + bin_text(e.bop) + " " +
                   expr_to_string(*e.operands[1]) + ")";
    }
    return "?";
}

ExprPtr compile_expr(const ExprPtr& e, const ExprScope& scope) {
    switch (e->kind) {
        case Expr::Kind::Int:
        case Expr::Kind::Var:
        case Expr::Kind::MatRef:
            return e;
        case Expr::Kind::Name: {
            if (auto v = scope.constant(e->name)) return Expr::literal(*v);
            if (int slot = scope.variable_slot(e->name); slot >= 0) {
                auto out = std::make_shared<Expr>();
                out->kind = Expr::Kind::Var;
                out->slot = slot;
                out->name = e->name;
                return out;
            }
            throw EvalError("unknown identifier '" + e->name + "'");
        }
        case Expr::Kind::Index: {
            int m = scope.matrix_slot(e->name);
            if (m < 0) throw EvalError("'" + e->name + "' is not an indexable constant");
            if (e->operands.size() != 2)
                throw EvalError("matrix '" + e->name + "' requires exactly two indices");
            std::vector<ExprPtr> idx;
            for (const auto& op : e->operands) idx.push_back(compile_expr(op, scope));
            if (idx[0]->kind == Expr::Kind::Int && idx[1]->kind == Expr::Kind::Int) {
                auto entry = scope.matrix_entry(m, idx[0]->value, idx[1]->value);
                if (!entry)
                    throw EvalError("matrix index out of range in '" + expr_to_string(*e) + "'");
                return Expr::literal(*entry ? 1 : 0);
            }
            auto out = std::make_shared<Expr>();
            out->kind = Expr::Kind::MatRef;
            out->slot = m;
            out->name = e->name;
            out->operands = std::move(idx);
            return out;
        }
        case Expr::Kind::Unary: {
            ExprPtr a = compile_expr(e->operands[0], scope);
            if (a->kind == Expr::Kind::Int)
                return Expr::literal(e->uop == UnOp::Neg ? -a->value : (a->value == 0 ? 1 : 0));
            auto out = std::make_shared<Expr>();
            out->kind = Expr::Kind::Unary;
            out->uop = e->uop;
            out->operands = {std::move(a)};
            return out;
        }
        case Expr::Kind::Binary: {
            ExprPtr a = compile_expr(e->operands[0], scope);
            ExprPtr b = compile_expr(e->operands[1], scope);
            if (a->kind == Expr::Kind::Int && b->kind == Expr::Kind::Int)
                return Expr::literal(apply_bin(e->bop, a->value, b->value));
            auto out = std::make_shared<Expr>();
            out->kind = Expr::Kind::Binary;
            out->bop = e->bop;
            out->operands = {std::move(a), std::move(b)};
            return out;
        }
    }
    throw EvalError("bad expression node");
}

long long eval_expr(const Expr& e, std::span<const long long> vars, const void* matrix_ctx,
                    MatrixLookup matrix_entry) {
    switch (e.kind) {
        case Expr::Kind::Int: return e.value;
        case Expr::Kind::Var: return vars[static_cast<std::size_t>(e.slot)];
        case Expr::Kind::MatRef: {
            long long i = eval_expr(*e.operands[0], vars, matrix_ctx, matrix_entry);
            long long j = eval_expr(*e.operands[1], vars, matrix_ctx, matrix_entry);
            if (!matrix_entry) throw EvalError("matrix lookup unavailable");
            return matrix_entry(matrix_ctx, e.slot, i, j) ? 1 : 0;
        }
        case Expr::Kind::Unary: {
            long long a = eval_expr(*e.operands[0], vars, matrix_ctx, matrix_entry);
            return e.uop == UnOp::Neg ? -a : (a == 0 ? 1 : 0);
        }
        case Expr::Kind::Binary: {
            // && and || short-circuit (both sides are side-effect free, but a
            // guarded division like  b != 0 && a/b > 2  must not trap).
            if (e.bop == BinOp::And) {
                if (eval_expr(*e.operands[0], vars, matrix_ctx, matrix_entry) == 0) return 0;
                return eval_expr(*e.operands[1], vars, matrix_ctx, matrix_entry) != 0 ? 1 : 0;
            }
            if (e.bop == BinOp::Or) {
                if (eval_expr(*e.operands[0], vars, matrix_ctx, matrix_entry) != 0) return 1;
                return eval_expr(*e.operands[1], vars, matrix_ctx, matrix_entry) != 0 ? 1 : 0;
            }
            long long a = eval_expr(*e.operands[0], vars, matrix_ctx, matrix_entry);
            long long b = eval_expr(*e.operands[1], vars, matrix_ctx, matrix_entry);
            return apply_bin(e.bop, a, b);
        }
        case Expr::Kind::Name:
        case Expr::Kind::Index:
            throw EvalError("expression contains unresolved name '" + e.name + "'");
    }
    throw EvalError("bad expression node");
}

bool expr_is_constant(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Int: return true;
        case Expr::Kind::Var:
        case Expr::Kind::MatRef:
        case Expr::Kind::Name:
        case Expr::Kind::Index: return false;
        default:
            for (const auto& op : e.operands)
                if (!expr_is_constant(*op)) return false;
            return true;
    }
}

void collect_names(const Expr& e, std::vector<std::string>& out) {
    if (e.kind == Expr::Kind::Name || e.kind == Expr::Kind::Index) out.push_back(e.name);
    for (const auto& op : e.operands) collect_names(*op, out);
}

}  // namespace psmc
