#include <doctest.h>

#include <cmath>

#include "psmc/sim.hpp"
#include "random_models.hpp"

using namespace psmc;

namespace {

Network make(const std::string& text) { return instantiate(parse_model(text), {}); }

const char* kStartModel = R"json({
  "templates": [{
    "name": "W", "clocks": ["x"],
    "locations": [{"name": "Start", "exp_rate": [1, 1]}, {"name": "End"}],
    "initial": "Start",
    "edges": [{"from": "Start", "to": "End"}]
  }],
  "instances": [{"template": "W", "args": []}]
})json";

// Oracle-side atom evaluation at delay t: plain arithmetic on linearly
// grown clocks, no interval reasoning.
double oracle_operand(const Network& net, const SimState& s, const Operand& o, double t) {
    switch (o.kind) {
        case Operand::Kind::Const: return static_cast<double>(o.value);
        case Operand::Kind::Var: return static_cast<double>(s.vars[static_cast<std::size_t>(o.slot)]);
        case Operand::Kind::Clock: {
            if (o.slot == 0) return s.clocks[0] + t;
            for (std::size_t i = 0; i < net.instances.size(); ++i) {
                const auto& inst = net.instances[i];
                if (o.slot < inst.clock_base || o.slot >= inst.clock_base + inst.nclocks) continue;
                const auto& loc = inst.locations[static_cast<std::size_t>(s.locs[i])];
                const double rate = static_cast<double>(
                    loc.rates[static_cast<std::size_t>(o.slot - inst.clock_base)]);
                return s.clocks[static_cast<std::size_t>(o.slot)] + rate * t;
            }
            return 0;
        }
    }
    return 0;
}

bool oracle_atom(const Network& net, const SimState& s, const Atom& a, double t) {
    if (a.kind == Atom::Kind::InLocation) {
        const bool in = s.locs[static_cast<std::size_t>(a.inst)] == a.loc;
        return a.negated ? !in : in;
    }
    const double l = oracle_operand(net, s, a.lhs, t);
    const double r = oracle_operand(net, s, a.rhs, t);
    switch (a.op) {
        case RelOp::Lt: return l < r;
        case RelOp::Le: return l <= r;
        case RelOp::Gt: return l > r;
        case RelOp::Ge: return l >= r;
        case RelOp::Eq: return l == r;
        case RelOp::Ne: return l != r;
    }
    return false;
}

bool oracle_predicate_at(const Network& net, const SimState& s, const Formula& f, double t) {
    for (const auto& conj : f.dnf) {
        bool all = true;
        for (const auto& a : conj)
            if (!oracle_atom(net, s, a, t)) {
                all = false;
                break;
            }
        if (all) return true;
    }
    return false;
}

// Fine-grained time discretization over [0, cap]: the grid plus both ends.
std::optional<double> oracle_sat_point(const Network& net, const SimState& s, const Formula& f,
                                       double cap, double grid) {
    if (cap < 0) return std::nullopt;
    for (double t = 0;; t += grid) {
        if (t > cap) t = cap;
        if (oracle_predicate_at(net, s, f, t)) return t;
        if (t >= cap) return std::nullopt;
    }
}

}  // namespace

TEST_SUITE("monitor") {
    TEST_CASE("a zero-cost bound accepts a predicate that holds initially") {
        const Network net = make(kStartModel);
        const Formula f = parse_query(net, "Pr[time<=0](<> W().Start)");
        RngStream rng(1);
        const RunOutcome out = check_run(net, f, rng);
        CHECK(out.satisfied);
        CHECK(out.steps == 0);
        CHECK(out.observer == 0.0);
    }

    TEST_CASE("satisfaction strictly inside a delay is caught exactly") {
        // x grows 0 -> 7 in one delay; x >= 5 holds from t=5 although no
        // discrete transition happens there.
        const char* doc = R"json({
          "templates": [{
            "name": "A", "clocks": ["x"],
            "locations": [{"name": "L", "invariant": [{"clock": "x", "op": "<=", "bound": 7}]},
                          {"name": "M"}],
            "initial": "L",
            "edges": [{"from": "L", "to": "M",
                       "guard_clocks": [{"clock": "x", "op": ">=", "bound": 7}]}]
          }],
          "instances": [{"template": "A", "args": []}]
        })json";
        const Network net = make(doc);
        const Formula f = parse_query(net, "Pr[time<=10](<> x >= 5 && A().L)");
        RngStream rng(9);
        const RunOutcome out = check_run(net, f, rng);
        CHECK(out.satisfied);
        CHECK(out.observer == doctest::Approx(5.0));

        // The same crossing is invisible to boundary-only evaluation.
        SimState s = initial_state(net);
        CHECK(!predicate_holds_now(net, s, f));
        RngStream rng2(9);
        step(net, s, rng2);
        CHECK(!predicate_holds_now(net, s, f));

        // With the bound below the crossing the run fails.
        const Formula tight = parse_query(net, "Pr[time<=4](<> x >= 5 && A().L)");
        RngStream rng3(9);
        const RunOutcome miss = check_run(net, tight, rng3);
        CHECK(!miss.satisfied);
        CHECK(miss.observer == doctest::Approx(4.0));
    }

    TEST_CASE("interval monitoring agrees with a fine time-discretization oracle") {
        RngStream gen(20240809);
        int satisfied_runs = 0, checked_runs = 0, inconclusive = 0;
        const double grid = 1e-3;
        for (int m = 0; m < 300; ++m) {
            const auto rm = fixtures::random_model(gen);
            Network net{};
            Formula f{};
            try {
                net = make(rm.model);
                f = parse_query(net, rm.query);
            } catch (const std::exception&) {
                continue;  // generator occasionally builds rejected corner cases
            }
            for (int run = 0; run < 3; ++run) {
                RngStream rng(gen.next_u64());
                SimState s = initial_state(net);
                bool int_sat = false, ora_sat = false, undecided = false;
                for (int k = 0; k < 60; ++k) {
                    const double window = f.bound - s.clocks[static_cast<std::size_t>(f.observer)];
                    StepPlan plan = plan_step(net, s, rng);
                    const double cap = plan.kind == StepPlan::Kind::Quiesce
                                           ? window
                                           : std::min(plan.delay, window);
                    const auto ipoint = satisfy_point(net, s, f, cap);
                    const auto opoint = oracle_sat_point(net, s, f, cap, grid);
                    if (ipoint && opoint) {
                        // Agreement, and the interval method is never later.
                        CHECK(*ipoint <= *opoint + grid);
                        int_sat = ora_sat = true;
                        break;
                    }
                    if (!ipoint && opoint) {
                        FAIL("oracle found a satisfaction point the interval method missed");
                    }
                    if (ipoint && !opoint) {
                        // The window may be narrower than the grid; the oracle
                        // evaluator itself must confirm the reported point.
                        CHECK(oracle_predicate_at(net, s, f, *ipoint));
                        ++inconclusive;
                        undecided = true;
                        break;
                    }
                    if (plan.kind != StepPlan::Kind::Move || plan.delay > window) break;
                    apply_step(net, s, plan);
                }
                if (undecided) continue;
                ++checked_runs;
                CHECK(int_sat == ora_sat);
                if (int_sat) ++satisfied_runs;
            }
        }
        // The generator has to produce a healthy mix to mean anything.
        CHECK(checked_runs > 300);
        CHECK(satisfied_runs > 30);
        CHECK(checked_runs - satisfied_runs > 30);
    }

    TEST_CASE("boundary-only evaluation equals the interval method on discrete atoms") {
        RngStream gen(777);
        int agreements = 0;
        for (int m = 0; m < 120; ++m) {
            const auto rm = fixtures::random_model(gen);
            Network net{};
            try {
                net = make(rm.model);
            } catch (const std::exception&) {
                continue;
            }
            // Discrete-only predicate: variable and location atoms.
            Formula f{};
            try {
                f = parse_query(net, "Pr[time<=6](<> v >= 2 || T0().L1)");
            } catch (const std::exception&) {
                continue;
            }
            // Discrete atoms are constant over a delay, so interval
            // satisfaction in a window is equivalent to the predicate holding
            // at the window's start state. Assert the equivalence per state.
            RngStream rng(gen.next_u64());
            SimState s = initial_state(net);
            for (int k = 0; k < 80; ++k) {
                const double window = f.bound - s.clocks[0];
                StepPlan plan = plan_step(net, s, rng);
                const double cap =
                    plan.kind == StepPlan::Kind::Quiesce ? window : std::min(plan.delay, window);
                const bool interval_sat = satisfy_point(net, s, f, cap).has_value();
                const bool boundary_sat = window >= 0 && predicate_holds_now(net, s, f);
                CHECK(interval_sat == boundary_sat);
                if (interval_sat || plan.kind != StepPlan::Kind::Move || plan.delay > window)
                    break;
                apply_step(net, s, plan);
            }
            ++agreements;
        }
        CHECK(agreements > 60);
    }
}
