#include "psmc/query.hpp"

#include <cctype>
#include <memory>

namespace psmc {

RelOp negate_rel(RelOp op) {
    switch (op) {
        case RelOp::Lt: return RelOp::Ge;
        case RelOp::Le: return RelOp::Gt;
        case RelOp::Gt: return RelOp::Le;
        case RelOp::Ge: return RelOp::Lt;
        case RelOp::Eq: return RelOp::Ne;
        case RelOp::Ne: return RelOp::Eq;
    }
    return RelOp::Eq;
}

namespace {

struct PNode {
    enum class Kind { And, Or, Not, Leaf };
    Kind kind = Kind::Leaf;
    std::vector<PNode> kids;
    Atom leaf;
};

struct Cursor {
    const std::string& text;
    std::size_t pos = 0;

    explicit Cursor(const std::string& t) : text(t) {}

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
        if (std::isalpha(static_cast<unsigned char>(tok[0]))) {
            char next = pos + n < text.size() ? text[pos + n] : '\0';
            if (std::isalnum(static_cast<unsigned char>(next)) || next == '_') return false;
        }
        pos += n;
        return true;
    }
    void expect(const char* tok) {
        if (!consume(tok)) fail(std::string("expected '") + tok + "'");
    }
    [[noreturn]] void fail(const std::string& msg) {
        throw QueryError("query error at offset " + std::to_string(pos) + ": " + msg);
    }

    std::string ident() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_'))
            ++pos;
        if (pos == start) fail("expected an identifier");
        return text.substr(start, pos - start);
    }

    long long integer() {
        skip_ws();
        bool neg = consume("-");
        std::size_t start = pos;
        long long v = 0;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            v = v * 10 + (text[pos] - '0');
            ++pos;
        }
        if (pos == start) fail("expected an integer");
        return neg ? -v : v;
    }

    double number() {
        skip_ws();
        std::size_t start = pos;
        while (pos < text.size() &&
               (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.'))
            ++pos;
        if (pos == start) fail("expected a number");
        return std::stod(text.substr(start, pos - start));
    }
};

// A reference "Inst(args).member" / "Inst.member" / bare name, pre-resolution.
struct Ref {
    bool qualified = false;
    std::string instance;
    std::vector<long long> args;
    bool has_args = false;  // parenthesis present
    std::string member;     // or the bare name when !qualified
};

struct QueryParser {
    Cursor cur;
    const Network& net;

    QueryParser(const Network& n, const std::string& text) : cur(text), net(n) {}

    Formula parse() {
        Formula f;
        f.text = cur.text;
        cur.expect("Pr");
        cur.expect("[");
        // Observer reference.
        f.observer = resolve_observer();
        cur.expect("<=");
        f.bound = cur.number();
        if (f.bound < 0) cur.fail("cost bound must be >= 0");
        cur.expect("]");
        cur.expect("(");
        cur.expect("<>");
        PNode pred = parse_or();
        cur.expect(")");
        if (!cur.eof()) cur.fail("unexpected trailing input");
        f.dnf = to_dnf(normalize(pred, false));
        return f;
    }

    // --- predicate grammar ---

    PNode parse_or() {
        PNode n = parse_and();
        if (cur.peek() != '|') return n;
        PNode out;
        out.kind = PNode::Kind::Or;
        out.kids.push_back(std::move(n));
        while (cur.consume("||")) out.kids.push_back(parse_and());
        return out;
    }

    PNode parse_and() {
        PNode n = parse_unary();
        if (cur.peek() != '&') return n;
        PNode out;
        out.kind = PNode::Kind::And;
        out.kids.push_back(std::move(n));
        while (cur.consume("&&")) out.kids.push_back(parse_unary());
        return out;
    }

    PNode parse_unary() {
        if (cur.consume("!")) {
            PNode out;
            out.kind = PNode::Kind::Not;
            out.kids.push_back(parse_unary());
            return out;
        }
        if (cur.peek() == '(') {
            cur.expect("(");
            PNode n = parse_or();
            cur.expect(")");
            return n;
        }
        return parse_atom();
    }

    PNode parse_atom() {
        // operand [relop operand]
        auto [lhs, loc_atom] = parse_operand();
        RelOp op;
        if (cur.consume("<=")) op = RelOp::Le;
        else if (cur.consume(">=")) op = RelOp::Ge;
        else if (cur.consume("==")) op = RelOp::Eq;
        else if (cur.consume("!=")) op = RelOp::Ne;
        else if (cur.consume("<")) op = RelOp::Lt;
        else if (cur.consume(">")) op = RelOp::Gt;
        else {
            if (!loc_atom) cur.fail("a bare reference must be a location test");
            PNode n;
            n.leaf = *loc_atom;
            return n;
        }
        if (loc_atom) cur.fail("a location test cannot be compared");
        auto [rhs, rloc] = parse_operand();
        if (rloc) cur.fail("a location test cannot be compared");
        PNode n;
        n.leaf.kind = Atom::Kind::Compare;
        n.leaf.lhs = lhs;
        n.leaf.rhs = rhs;
        n.leaf.op = op;
        return n;
    }

    // Returns the operand, or an InLocation atom when the reference names a
    // location.
    std::pair<Operand, std::optional<Atom>> parse_operand() {
        cur.skip_ws();
        char c = cur.peek();
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '-') {
            Operand o;
            o.kind = Operand::Kind::Const;
            o.value = cur.integer();
            return {o, std::nullopt};
        }
        Ref ref = parse_ref();
        return resolve_ref(ref);
    }

    Ref parse_ref() {
        Ref ref;
        ref.member = cur.ident();
        if (cur.peek() == '(') {
            cur.expect("(");
            ref.has_args = true;
            if (cur.peek() != ')') {
                ref.args.push_back(cur.integer());
                while (cur.consume(",")) ref.args.push_back(cur.integer());
            }
            cur.expect(")");
        }
        if (cur.peek() == '.') {
            cur.expect(".");
            ref.qualified = true;
            ref.instance = ref.member;
            ref.member = cur.ident();
        } else if (ref.has_args) {
            cur.fail("instance reference needs a .member");
        }
        return ref;
    }

    // --- resolution ---

    int find_instance_checked(const Ref& ref) {
        int found = -1, count = 0;
        for (std::size_t i = 0; i < net.instances.size(); ++i) {
            const auto& inst = net.instances[i];
            if (inst.template_name != ref.instance) continue;
            if (ref.has_args && inst.args != ref.args) continue;
            if (!ref.has_args && !inst.args.empty()) continue;
            found = static_cast<int>(i);
            ++count;
        }
        if (count == 0) cur.fail("no instance matches '" + ref.instance + "'");
        if (count > 1) cur.fail("ambiguous instance reference '" + ref.instance + "'");
        return found;
    }

    std::pair<Operand, std::optional<Atom>> resolve_ref(const Ref& ref) {
        Operand o;
        if (!ref.qualified) {
            if (ref.member == "time") {
                o.kind = Operand::Kind::Clock;
                o.slot = 0;
                return {o, std::nullopt};
            }
            if (int slot = net.find_global(ref.member); slot >= 0) {
                o.kind = Operand::Kind::Var;
                o.slot = slot;
                return {o, std::nullopt};
            }
            // A bare clock name, if unique across instances.
            int clock_slot = -1, hits = 0;
            for (const auto& inst : net.instances) {
                int c = inst.find_clock(ref.member);
                if (c >= 0) {
                    clock_slot = inst.clock_base + c;
                    ++hits;
                }
            }
            if (hits == 1) {
                o.kind = Operand::Kind::Clock;
                o.slot = clock_slot;
                return {o, std::nullopt};
            }
            if (hits > 1) cur.fail("clock '" + ref.member + "' is ambiguous; qualify it");
            cur.fail("unknown identifier '" + ref.member + "'");
        }
        const int inst_idx = find_instance_checked(ref);
        const RtInstance& inst = net.instances[static_cast<std::size_t>(inst_idx)];
        if (int loc = inst.find_location(ref.member); loc >= 0) {
            Atom a;
            a.kind = Atom::Kind::InLocation;
            a.inst = inst_idx;
            a.loc = loc;
            return {o, a};
        }
        if (int c = inst.find_clock(ref.member); c >= 0) {
            o.kind = Operand::Kind::Clock;
            o.slot = inst.clock_base + c;
            return {o, std::nullopt};
        }
        if (ref.member == "time") {  // per-instance view of global time
            o.kind = Operand::Kind::Clock;
            o.slot = 0;
            return {o, std::nullopt};
        }
        if (int v = inst.find_local(ref.member); v >= 0) {
            o.kind = Operand::Kind::Var;
            o.slot = inst.var_base + v;
            return {o, std::nullopt};
        }
        cur.fail("'" + ref.member + "' is not a location, clock or variable of " + inst.display);
    }

    int resolve_observer() {
        cur.skip_ws();
        Ref ref = parse_ref();
        auto [op, loc] = resolve_ref(ref);
        if (loc || op.kind != Operand::Kind::Clock)
            cur.fail("observer must be a clock reference");
        validate_observer(op.slot);
        return op.slot;
    }

    // The observer must never be reset and must grow at rate 1 everywhere.
    void validate_observer(int slot) {
        if (slot == 0) return;  // global time by construction
        for (const auto& inst : net.instances) {
            if (slot < inst.clock_base || slot >= inst.clock_base + inst.nclocks) continue;
            const int local = slot - inst.clock_base;
            for (const auto& loc : inst.locations)
                if (loc.rates[static_cast<std::size_t>(local)] != 1)
                    cur.fail("observer clock '" + inst.clock_names[static_cast<std::size_t>(local)] +
                             "' has rate != 1 in location '" + loc.name + "'");
            for (const auto& e : inst.edges)
                for (int r : e.resets)
                    if (r == slot)
                        cur.fail("observer clock '" +
                                 inst.clock_names[static_cast<std::size_t>(local)] +
                                 "' is reset by an edge of " + inst.display);
        }
    }

    // --- normalization ---

    // Negation-normal form: push Not down to the leaves.
    PNode normalize(const PNode& n, bool negate) {
        switch (n.kind) {
            case PNode::Kind::Leaf: {
                PNode out = n;
                if (negate) {
                    if (out.leaf.kind == Atom::Kind::InLocation)
                        out.leaf.negated = !out.leaf.negated;
                    else out.leaf.op = negate_rel(out.leaf.op);
                }
                return out;
            }
            case PNode::Kind::Not: return normalize(n.kids[0], !negate);
            case PNode::Kind::And:
            case PNode::Kind::Or: {
                PNode out;
                const bool flip = negate;
                out.kind = (n.kind == PNode::Kind::And) == !flip ? PNode::Kind::And
                                                                 : PNode::Kind::Or;
                for (const auto& k : n.kids) out.kids.push_back(normalize(k, negate));
                return out;
            }
        }
        return n;
    }

    std::vector<std::vector<Atom>> to_dnf(const PNode& n) {
        switch (n.kind) {
            case PNode::Kind::Leaf: return {{n.leaf}};
            case PNode::Kind::Or: {
                std::vector<std::vector<Atom>> out;
                for (const auto& k : n.kids) {
                    auto sub = to_dnf(k);
                    out.insert(out.end(), sub.begin(), sub.end());
                }
                return out;
            }
            case PNode::Kind::And: {
                std::vector<std::vector<Atom>> out = {{}};
                for (const auto& k : n.kids) {
                    auto sub = to_dnf(k);
                    std::vector<std::vector<Atom>> next;
                    for (const auto& left : out)
                        for (const auto& right : sub) {
                            auto conj = left;
                            conj.insert(conj.end(), right.begin(), right.end());
                            next.push_back(std::move(conj));
                        }
                    out = std::move(next);
                    if (out.size() > 4096)
                        throw QueryError("predicate explodes past 4096 DNF conjuncts");
                }
                return out;
            }
            case PNode::Kind::Not: break;  // eliminated by normalize
        }
        throw QueryError("internal: unnormalized predicate");
    }
};

}  // namespace

Formula parse_query(const Network& net, const std::string& text) {
    QueryParser p(net, text);
    return p.parse();
}

}  // namespace psmc
