#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "psmc/model.hpp"
#include "psmc/query.hpp"
#include "psmc/rng.hpp"

// Stochastic simulation of a Network: per-instance delay races, weighted
// edge choice, channel synchronization, and exact interval-based monitoring
// of cost-bounded reachability formulas along a run. Draw-consumption order
// is fixed and documented in docs/rng.md.

namespace psmc {

struct RunError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr long long kDefaultStepLimit = 10'000'000;

// --- interval sets ---------------------------------------------------------

struct Interval {
    double lo = 0, hi = 0;
    bool lo_open = false, hi_open = false;

    bool empty() const { return lo > hi || (lo == hi && (lo_open || hi_open)); }
    double measure() const { return empty() ? 0.0 : hi - lo; }
};

// Union of disjoint intervals, kept sorted. Small by construction (one
// interval per clock constraint, two for a != atom).
class IntervalSet {
  public:
    static IntervalSet whole(double lo, double hi);
    static IntervalSet empty_set() { return IntervalSet{}; }
    // Solution of  c + s*t  op  0  intersected with [lo, hi].
    static IntervalSet linear(double c, double s, RelOp op, double lo, double hi);

    void intersect(const IntervalSet& other);
    void unite(const IntervalSet& other);

    bool empty() const { return parts_.empty(); }
    double inf() const;      // infimum of a non-empty set
    double measure() const;  // total length
    // Point at measure-fraction u in [0,1); for zero-measure sets the
    // smallest attained point (degenerate parts are closed by construction).
    double pick(double u) const;

    const std::vector<Interval>& parts() const { return parts_; }
    void add(Interval iv);  // must stay disjoint & ordered when used directly

  private:
    std::vector<Interval> parts_;
};

// --- simulation state ------------------------------------------------------

struct SimState {
    std::vector<int> locs;        // per instance
    std::vector<double> clocks;   // slot 0 is the global clock `time`
    std::vector<long long> vars;  // globals then per-instance locals
};

SimState initial_state(const Network& net);

// Supremum of delays from `s` that keep the instance's location invariant
// satisfied (clocks grow at the location's rates); +inf when unbounded.
double delay_interval(const Network& net, const SimState& s, int inst);

// Draws the instance's delay: uniform on [0, d_max] when bounded, else
// exponential with the location's exp rate. d_max == 0 consumes no draw.
double sample_delay(const Network& net, const SimState& s, int inst, double d_max, RngStream& rng);

// --- stepping --------------------------------------------------------------

struct StepPlan {
    enum class Kind { Move, Deadlock, Quiesce };
    Kind kind = Kind::Quiesce;
    double delay = 0;  // applied delay (Move) or the reachable wall (Deadlock)
    int winner = -1;
    int edge = -1;  // winner's edge (index into its instance edge table)
    int receiver = -1, receiver_edge = -1;               // handshake partner
    std::vector<std::pair<int, int>> broadcast_receivers;  // (instance, edge)
};

// Resolves the stochastic race without touching the state.
StepPlan plan_step(const Network& net, const SimState& s, RngStream& rng);

// Advances clocks and takes the planned transition (no-op for
// Deadlock/Quiesce). Throws RunError when an update leaves a variable's
// declared range.
void apply_step(const Network& net, SimState& s, const StepPlan& plan);

StepPlan step(const Network& net, SimState& s, RngStream& rng);

// Instance invariant check, used by tests and debug assertions.
bool invariant_holds(const Network& net, const SimState& s, int inst);

// --- monitoring ------------------------------------------------------------

// Earliest t in [0, cap] at which some DNF conjunct of the predicate holds;
// discrete atoms are constant over the delay and clock atoms are solved
// exactly from linear clock growth. The observer window must already be
// folded into `cap` by the caller.
std::optional<double> satisfy_point(const Network& net, const SimState& s, const Formula& f,
                                    double cap);

// Boundary-only evaluation of the predicate (t = 0), used by differential
// tests against the interval method.
bool predicate_holds_now(const Network& net, const SimState& s, const Formula& f);

struct RunOutcome {
    bool satisfied = false;
    long long steps = 0;
    double observer = 0;  // value of the observer clock at the decision point
    bool deadlocked = false;
    bool step_limited = false;
};

RunOutcome check_run(const Network& net, const Formula& f, RngStream& rng,
                     long long step_limit = kDefaultStepLimit);

}  // namespace psmc
