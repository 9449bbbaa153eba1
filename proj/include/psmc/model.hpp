#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "psmc/expr.hpp"

// Parametrized networks of priced timed automata: the document model,
// parameter spaces, assignment enumeration and instantiation into a
// concrete runtime Network. The JSON document format is specified in
// docs/model-format.md.

namespace psmc {

struct ModelError : std::runtime_error {
    ModelError(const std::string& path, const std::string& msg)
        : std::runtime_error(path.empty() ? msg : path + ": " + msg), element_path(path) {}
    std::string element_path;
};

// --- document types -------------------------------------------------------

enum class CmpOp { Lt, Le, Gt, Ge };

struct ClockBound {
    std::string clock;
    CmpOp op;
    ExprPtr bound;
};

struct LocationDef {
    std::string name;
    std::vector<ClockBound> invariant;
    std::vector<std::pair<std::string, ExprPtr>> rates;  // clock -> cost rate
    ExprPtr exp_i, exp_j;                                // exponential delay rate i/j, optional
};

enum class SyncKind { None, Send, Receive };

struct SyncDef {
    SyncKind kind = SyncKind::None;
    std::string channel;
    ExprPtr index;  // null for scalar channels
};

struct UpdateDef {
    std::string var;
    ExprPtr value;
};

struct EdgeDef {
    std::string from, to;
    std::vector<ClockBound> guard_clocks;
    ExprPtr guard_data;  // null means true
    SyncDef sync;
    std::vector<std::string> resets;
    std::vector<UpdateDef> updates;
    ExprPtr weight;  // null means 1
};

struct VarDecl {
    std::string name;
    ExprPtr init;
    ExprPtr min, max;  // folded at instantiation
};

struct TemplateDef {
    std::string name;
    std::vector<std::string> params;
    std::vector<std::string> clocks;
    std::vector<VarDecl> locals;
    std::vector<LocationDef> locations;
    std::string initial;
    std::vector<EdgeDef> edges;
};

struct ChannelDecl {
    std::string name;
    bool broadcast = false;
    ExprPtr size;  // null for a scalar channel
};

struct IntRangeDomain {
    long long lo = 0, hi = 0;
};

struct MatrixDomain {
    int n = 1;
    bool symmetric = false;
    bool zero_diagonal = false;
};

using ParamDomain = std::variant<IntRangeDomain, MatrixDomain>;

// Dense square boolean matrix, row-major.
struct BoolMatrix {
    int n = 0;
    std::vector<std::uint8_t> bits;

    BoolMatrix() = default;
    explicit BoolMatrix(int size) : n(size), bits(static_cast<std::size_t>(size) * size, 0) {}

    bool at(int i, int j) const { return bits[static_cast<std::size_t>(i) * n + j] != 0; }
    void set(int i, int j, bool v) { bits[static_cast<std::size_t>(i) * n + j] = v ? 1 : 0; }

    // Row-major 0/1 string, used for duplicate detection and CSV cells.
    std::string pattern() const {
        std::string s;
        s.reserve(bits.size());
        for (auto b : bits) s.push_back(b ? '1' : '0');
        return s;
    }

    bool operator==(const BoolMatrix& o) const { return n == o.n && bits == o.bits; }
};

using ConstValue = std::variant<long long, BoolMatrix>;

struct ConstDecl {
    std::string name;
    std::optional<ConstValue> value;     // concrete
    std::optional<ParamDomain> domain;   // placeholder
    ExprPtr expr;                        // derived from earlier constants
};

struct InstanceDef {
    std::string template_name;
    std::vector<ExprPtr> args;
    // Replicated instantiation: expands to `count` instances of a
    // single-parameter template with arguments 0..count-1.
    ExprPtr count;
};

struct ParametrizedModel {
    std::vector<ConstDecl> constants;
    std::vector<ChannelDecl> channels;
    std::vector<VarDecl> globals;
    std::vector<TemplateDef> templates;
    std::vector<InstanceDef> instances;

    const TemplateDef* find_template(const std::string& name) const;
};

// --- parameter spaces -----------------------------------------------------

struct ParameterSpace {
    std::vector<std::pair<std::string, ParamDomain>> entries;  // document order

    // Saturates at 2^63-1.
    unsigned long long cardinality() const;
    bool empty() const { return entries.empty(); }
};

using Assignment = std::map<std::string, ConstValue>;

// --- runtime network ------------------------------------------------------

struct RtClockBound {
    int clock;  // global clock slot
    CmpOp op;
    long long bound;
};

struct RtEdge {
    int from, to;
    std::vector<RtClockBound> guard_clocks;
    ExprPtr guard_data;  // compiled; null = true
    SyncKind sync = SyncKind::None;
    int channel_base = -1;
    ExprPtr channel_index;  // compiled; null for scalar
    bool channel_broadcast = false;
    std::vector<int> resets;                            // global clock slots
    std::vector<std::pair<int, ExprPtr>> updates;       // var slot, compiled rhs
    long long weight = 1;
};

struct RtLocation {
    std::string name;
    std::vector<RtClockBound> invariant;
    std::vector<long long> rates;  // per instance clock, local order
    bool has_exp = false;
    double exp_rate = 0.0;  // i/j
    std::vector<int> out_edges;
    // Whether any outgoing edge can be initiated here (receive edges are
    // passive); passive locations never join the delay race.
    bool active = false;
};

struct RtInstance {
    std::string template_name;
    std::vector<long long> args;
    std::string display;  // e.g. "Train(0)"
    int clock_base = 0;   // first global clock slot of this instance
    int nclocks = 0;
    std::vector<std::string> clock_names;
    int var_base = 0;  // first variable slot of this instance's locals
    int nlocals = 0;
    std::vector<std::string> local_names;
    int initial_location = 0;
    std::vector<RtLocation> locations;
    std::vector<RtEdge> edges;

    int find_location(const std::string& name) const;
    int find_clock(const std::string& name) const;   // local index or -1
    int find_local(const std::string& name) const;   // local index or -1
};

struct VarInfo {
    std::string name;  // qualified for locals, e.g. "Train(0).count"
    long long init = 0, min = 0, max = 0;
};

struct ChannelInfo {
    std::string name;
    bool broadcast = false;
    long long size = 0;  // 0 = scalar
    int base = 0;        // flattened channel id of index 0
};

struct Network {
    std::vector<RtInstance> instances;
    std::vector<VarInfo> vars;  // globals first, then per-instance locals
    std::size_t nglobals = 0;
    std::vector<ChannelInfo> channels;
    std::vector<BoolMatrix> matrices;
    std::vector<std::string> matrix_names;
    int nclocks = 1;  // slot 0 is the implicit global clock `time`

    int find_instance(const std::string& tmpl, const std::vector<long long>& args) const;
    int find_global(const std::string& name) const;  // var slot or -1
    static bool matrix_lookup(const void* ctx, int matrix, long long i, long long j);
};

// --- operations -----------------------------------------------------------

// Parses and statically validates a model document. Syntax errors carry
// line/column; semantic errors carry the offending element path.
ParametrizedModel parse_model(const std::string& text);
ParametrizedModel parse_model_file(const std::string& path);

std::string serialize_model(const ParametrizedModel& pm);

ParameterSpace parameter_space(const ParametrizedModel& pm);

// All assignments in lexicographic order (first declared parameter varies
// slowest; ranges ascend, matrices ascend by row-major bit pattern).
// Throws ModelError when the cardinality exceeds 2^31.
std::vector<Assignment> enumerate_assignments(const ParameterSpace& space);

// Cardinality of one domain (saturating).
unsigned long long domain_cardinality(const ParamDomain& d);
bool value_in_domain(const ConstValue& v, const ParamDomain& d);

// Replaces placeholder constants with the assigned concrete values,
// leaving everything else untouched. The result serializes/parses as a
// placeholder-free model.
ParametrizedModel apply_assignment(const ParametrizedModel& pm, const Assignment& a);

// Full instantiation: substitutes placeholders, folds every constant
// expression and produces a validated runtime Network.
Network instantiate(const ParametrizedModel& pm, const Assignment& a);

}  // namespace psmc
