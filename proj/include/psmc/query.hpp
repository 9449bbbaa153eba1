#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "psmc/model.hpp"

// Cost-bounded reachability queries:
//   Pr[ <observer> <= <bound> ]( <> <predicate> )
// Grammar and resolution rules are documented in docs/query-format.md.

namespace psmc {

struct QueryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class RelOp { Lt, Le, Gt, Ge, Eq, Ne };

RelOp negate_rel(RelOp op);

struct Operand {
    enum class Kind { Const, Var, Clock };
    Kind kind = Kind::Const;
    long long value = 0;  // Const
    int slot = -1;        // Var / Clock
};

struct Atom {
    enum class Kind { InLocation, Compare };
    Kind kind = Kind::Compare;
    // InLocation
    bool negated = false;
    int inst = -1, loc = -1;
    // Compare
    Operand lhs, rhs;
    RelOp op = RelOp::Le;

    bool is_discrete() const {
        return kind == Kind::InLocation || (lhs.kind != Operand::Kind::Clock &&
                                            rhs.kind != Operand::Kind::Clock);
    }
};

struct Formula {
    int observer = 0;  // clock slot, 0 = global time
    double bound = 0;  // C
    std::vector<std::vector<Atom>> dnf;
    std::string text;  // original query, echoed in outputs
};

// Parses and resolves a query against a concrete network. Validates that the
// observer clock is never reset and grows at rate 1 in every location.
Formula parse_query(const Network& net, const std::string& text);

}  // namespace psmc
