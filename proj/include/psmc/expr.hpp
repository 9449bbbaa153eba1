#pragma once

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

// Integer expression mini-language used for constants, guards, bounds,
// weights and updates. Grammar and semantics are documented in
// docs/model-format.md. Comparisons and logical operators yield 0/1;
// `/` is truncating integer division and traps on a zero divisor.

namespace psmc {

struct ExprError : std::runtime_error {
    ExprError(const std::string& msg, std::size_t pos)
        : std::runtime_error(msg + " (at offset " + std::to_string(pos) + ")"), position(pos) {}
    std::size_t position;
};

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class BinOp { Add, Sub, Mul, Div, Lt, Le, Gt, Ge, Eq, Ne, And, Or };
enum class UnOp { Neg, Not };

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind {
        Int,     // literal                      -> value
        Name,    // unresolved identifier        -> name
        Var,     // resolved variable slot       -> slot
        MatRef,  // resolved matrix              -> slot (matrix table index), operands = indices
        Index,   // unresolved name[i][j]        -> name, operands = indices
        Unary,   // operands[0]
        Binary,  // operands[0], operands[1]
    };

    Kind kind = Kind::Int;
    long long value = 0;
    int slot = -1;
    std::string name;
    UnOp uop{};
    BinOp bop{};
    std::vector<ExprPtr> operands;

    static ExprPtr literal(long long v) {
        auto e = std::make_shared<Expr>();
        e->kind = Kind::Int;
        e->value = v;
        return e;
    }
};

// Parses the mini-language; throws ExprError with the byte offset on failure.
ExprPtr parse_expr(const std::string& text);

// Renders an expression back to parsable text (used by model serialization).
std::string expr_to_string(const Expr& e);

// Name resolution callbacks for fold/compile.
struct ExprScope {
    // Value of a plain name if it is a known integer (constant, argument).
    virtual std::optional<long long> constant(const std::string&) const { return std::nullopt; }
    // Mutable-variable slot for a name, or -1.
    virtual int variable_slot(const std::string&) const { return -1; }
    // Matrix table index for a name, or -1.
    virtual int matrix_slot(const std::string&) const { return -1; }
    // Matrix entry when both the matrix and the indices are known.
    virtual std::optional<bool> matrix_entry(int, long long, long long) const {
        return std::nullopt;
    }
    virtual ~ExprScope() = default;
};

// Rewrites an expression against a scope: known names become literals,
// variable names become Var slots, matrix accesses with constant indices
// fold to literals and dynamic ones become MatRef. Unknown names throw
// EvalError. Constant subtrees are folded (division by zero traps here
// when both operands are constant).
ExprPtr compile_expr(const ExprPtr& e, const ExprScope& scope);

// Evaluates a fully compiled expression. `vars` is the flat variable
// array; `matrix_entry` resolves MatRef nodes (may be null when the
// expression is known to contain none).
using MatrixLookup = bool (*)(const void* ctx, int matrix, long long i, long long j);
long long eval_expr(const Expr& e, std::span<const long long> vars,
                    const void* matrix_ctx = nullptr, MatrixLookup matrix_entry = nullptr);

// True when the compiled expression references no Var or MatRef node.
bool expr_is_constant(const Expr& e);

// Collects unresolved names (Kind::Name / Kind::Index bases).
void collect_names(const Expr& e, std::vector<std::string>& out);

}  // namespace psmc
