#include "psmc/sim.hpp"

#include <algorithm>
#include <cmath>

namespace psmc {

// --- interval sets ----------------------------------------------------------

IntervalSet IntervalSet::whole(double lo, double hi) {
    IntervalSet s;
    Interval iv{lo, hi, false, false};
    if (!iv.empty()) s.parts_.push_back(iv);
    return s;
}

void IntervalSet::add(Interval iv) {
    if (!iv.empty()) parts_.push_back(iv);
}

IntervalSet IntervalSet::linear(double c, double s, RelOp op, double lo, double hi) {
    // Solution set of c + s*t op 0 within [lo, hi].
    IntervalSet out;
    if (lo > hi) return out;
    if (s == 0.0) {
        bool holds = false;
        switch (op) {
            case RelOp::Lt: holds = c < 0; break;
            case RelOp::Le: holds = c <= 0; break;
            case RelOp::Gt: holds = c > 0; break;
            case RelOp::Ge: holds = c >= 0; break;
            case RelOp::Eq: holds = c == 0; break;
            case RelOp::Ne: holds = c != 0; break;
        }
        if (holds) out.add(Interval{lo, hi, false, false});
        return out;
    }
    const double root = -c / s;
    // {t : t < root} or {t <= root}, clipped to [lo, hi].
    auto add_left = [&](bool open) {
        if (root > hi) out.add(Interval{lo, hi, false, false});
        else out.add(Interval{lo, root, false, open});
    };
    // {t : t > root} or {t >= root}, clipped to [lo, hi].
    auto add_right = [&](bool open) {
        if (root < lo) out.add(Interval{lo, hi, false, false});
        else out.add(Interval{root, hi, open, false});
    };
    const bool increasing = s > 0;  // value grows with t
    switch (op) {
        case RelOp::Lt: increasing ? add_left(true) : add_right(true); break;
        case RelOp::Le: increasing ? add_left(false) : add_right(false); break;
        case RelOp::Gt: increasing ? add_right(true) : add_left(true); break;
        case RelOp::Ge: increasing ? add_right(false) : add_left(false); break;
        case RelOp::Eq:
            if (root >= lo && root <= hi) out.add(Interval{root, root, false, false});
            break;
        case RelOp::Ne:
            add_left(true);
            add_right(true);
            break;
    }
    return out;
}

namespace {

// a strictly left of b with no contact
bool interval_before(const Interval& a, const Interval& b) {
    if (a.hi < b.lo) return true;
    if (a.hi == b.lo) return a.hi_open && b.lo_open;
    return false;
}

Interval intersect_one(const Interval& a, const Interval& b) {
    Interval r;
    if (a.lo > b.lo || (a.lo == b.lo && a.lo_open)) {
        r.lo = a.lo;
        r.lo_open = a.lo_open;
    } else {
        r.lo = b.lo;
        r.lo_open = b.lo_open;
    }
    if (a.hi < b.hi || (a.hi == b.hi && a.hi_open)) {
        r.hi = a.hi;
        r.hi_open = a.hi_open;
    } else {
        r.hi = b.hi;
        r.hi_open = b.hi_open;
    }
    return r;
}

}  // namespace

void IntervalSet::intersect(const IntervalSet& other) {
    std::vector<Interval> out;
    for (const auto& a : parts_)
        for (const auto& b : other.parts_) {
            Interval r = intersect_one(a, b);
            if (!r.empty()) out.push_back(r);
        }
    std::sort(out.begin(), out.end(), [](const Interval& x, const Interval& y) {
        return x.lo < y.lo || (x.lo == y.lo && !x.lo_open && y.lo_open);
    });
    parts_ = std::move(out);
}

void IntervalSet::unite(const IntervalSet& other) {
    std::vector<Interval> all = parts_;
    all.insert(all.end(), other.parts_.begin(), other.parts_.end());
    std::sort(all.begin(), all.end(), [](const Interval& x, const Interval& y) {
        return x.lo < y.lo || (x.lo == y.lo && !x.lo_open && y.lo_open);
    });
    std::vector<Interval> merged;
    for (const auto& iv : all) {
        if (merged.empty() || interval_before(merged.back(), iv)) {
            merged.push_back(iv);
        } else {
            Interval& last = merged.back();
            if (iv.hi > last.hi || (iv.hi == last.hi && last.hi_open && !iv.hi_open)) {
                last.hi = iv.hi;
                last.hi_open = iv.hi_open;
            }
        }
    }
    parts_ = std::move(merged);
}

double IntervalSet::inf() const { return parts_.front().lo; }

double IntervalSet::measure() const {
    double m = 0;
    for (const auto& iv : parts_) m += iv.measure();
    return m;
}

double IntervalSet::pick(double u) const {
    const double total = measure();
    if (total <= 0.0) {
        // Zero-measure set: points only; the earliest one.
        return parts_.front().lo;
    }
    double target = u * total;
    for (const auto& iv : parts_) {
        const double len = iv.measure();
        if (target <= len) {
            double t = iv.lo + target;
            if (t == iv.lo && iv.lo_open) t = std::nextafter(t, iv.hi);
            if (t == iv.hi && iv.hi_open) t = std::nextafter(t, iv.lo);
            return t;
        }
        target -= len;
    }
    return parts_.back().hi;
}

// --- state ------------------------------------------------------------------

SimState initial_state(const Network& net) {
    SimState s;
    s.locs.reserve(net.instances.size());
    for (const auto& inst : net.instances) s.locs.push_back(inst.initial_location);
    s.clocks.assign(static_cast<std::size_t>(net.nclocks), 0.0);
    s.vars.reserve(net.vars.size());
    for (const auto& v : net.vars) s.vars.push_back(v.init);
    return s;
}

namespace {

// Rate of a global clock slot under the instance's current location.
long long clock_rate(const Network& net, const SimState& s, int slot) {
    if (slot == 0) return 1;  // global time
    for (std::size_t i = 0; i < net.instances.size(); ++i) {
        const auto& inst = net.instances[i];
        if (slot >= inst.clock_base && slot < inst.clock_base + inst.nclocks) {
            const auto& loc = inst.locations[static_cast<std::size_t>(s.locs[i])];
            return loc.rates[static_cast<std::size_t>(slot - inst.clock_base)];
        }
    }
    return 1;
}

bool bound_holds(CmpOp op, double x, double n) {
    switch (op) {
        case CmpOp::Lt: return x < n;
        case CmpOp::Le: return x <= n;
        case CmpOp::Gt: return x > n;
        case CmpOp::Ge: return x >= n;
    }
    return false;
}

RelOp to_rel(CmpOp op) {
    switch (op) {
        case CmpOp::Lt: return RelOp::Lt;
        case CmpOp::Le: return RelOp::Le;
        case CmpOp::Gt: return RelOp::Gt;
        case CmpOp::Ge: return RelOp::Ge;
    }
    return RelOp::Le;
}

// Satisfying delay set of one clock bound for an instance at its current
// location: clock(t) = v0 + rate*t, constraint clock(t) op bound.
IntervalSet bound_delay_set(const Network& net, const SimState& s, int inst_idx,
                            const RtClockBound& b, double lo, double hi) {
    const RtInstance& inst = net.instances[static_cast<std::size_t>(inst_idx)];
    const auto& loc =
        inst.locations[static_cast<std::size_t>(s.locs[static_cast<std::size_t>(inst_idx)])];
    const double v0 = s.clocks[static_cast<std::size_t>(b.clock)];
    const double rate =
        static_cast<double>(loc.rates[static_cast<std::size_t>(b.clock - inst.clock_base)]);
    // v0 + rate*t - bound  op  0
    return IntervalSet::linear(v0 - static_cast<double>(b.bound), rate, to_rel(b.op), lo, hi);
}

long long eval_guard(const Network& net, const SimState& s, const ExprPtr& e) {
    if (!e) return 1;
    return eval_expr(*e, s.vars, &net, &Network::matrix_lookup);
}

// Runtime channel id of a sync edge.
long long channel_id(const Network& net, const SimState& s, const RtEdge& e) {
    if (!e.channel_index) return e.channel_base;
    long long idx = eval_expr(*e.channel_index, s.vars, &net, &Network::matrix_lookup);
    const ChannelInfo* info = nullptr;
    for (const auto& c : net.channels)
        if (c.base == e.channel_base) info = &c;
    if (!info || idx < 0 || idx >= std::max<long long>(info->size, 1))
        throw RunError("channel index " + std::to_string(idx) + " out of range");
    return e.channel_base + idx;
}

// Delay interval over which an edge's own guards hold (clock guards solved
// exactly, data guard constant over the delay).
IntervalSet edge_guard_set(const Network& net, const SimState& s, int inst_idx, const RtEdge& e,
                           double lo, double hi) {
    if (eval_guard(net, s, e.guard_data) == 0) return IntervalSet::empty_set();
    IntervalSet set = IntervalSet::whole(lo, hi);
    for (const auto& b : e.guard_clocks) {
        set.intersect(bound_delay_set(net, s, inst_idx, b, lo, hi));
        if (set.empty()) break;
    }
    return set;
}

// All (receiver instance, edge) pairs ready to receive on `chan` at delay d.
void ready_receivers(const Network& net, const SimState& s, int sender, long long chan, double d,
                     std::vector<std::pair<int, int>>& out) {
    out.clear();
    for (std::size_t r = 0; r < net.instances.size(); ++r) {
        if (static_cast<int>(r) == sender) continue;
        const RtInstance& inst = net.instances[r];
        const auto& loc = inst.locations[static_cast<std::size_t>(s.locs[r])];
        for (int ei : loc.out_edges) {
            const RtEdge& e = inst.edges[static_cast<std::size_t>(ei)];
            if (e.sync != SyncKind::Receive) continue;
            if (channel_id(net, s, e) != chan) continue;
            IntervalSet g = edge_guard_set(net, s, static_cast<int>(r), e, d, d);
            if (!g.empty()) out.emplace_back(static_cast<int>(r), ei);
        }
    }
}

// Delay set over which at least one receiver is ready on `chan`.
IntervalSet receiver_ready_set(const Network& net, const SimState& s, int sender, long long chan,
                               double lo, double hi) {
    IntervalSet acc;
    for (std::size_t r = 0; r < net.instances.size(); ++r) {
        if (static_cast<int>(r) == sender) continue;
        const RtInstance& inst = net.instances[r];
        const auto& loc = inst.locations[static_cast<std::size_t>(s.locs[r])];
        for (int ei : loc.out_edges) {
            const RtEdge& e = inst.edges[static_cast<std::size_t>(ei)];
            if (e.sync != SyncKind::Receive) continue;
            if (channel_id(net, s, e) != chan) continue;
            acc.unite(edge_guard_set(net, s, static_cast<int>(r), e, lo, hi));
        }
    }
    return acc;
}

// Is the edge a possible initiation for the winner at delay d?
bool edge_initiable(const Network& net, const SimState& s, int inst_idx, const RtEdge& e,
                    double d) {
    if (e.sync == SyncKind::Receive) return false;  // inputs are passive
    if (edge_guard_set(net, s, inst_idx, e, d, d).empty()) return false;
    if (e.sync == SyncKind::Send && !e.channel_broadcast) {
        std::vector<std::pair<int, int>> rs;
        ready_receivers(net, s, inst_idx, channel_id(net, s, e), d, rs);
        return !rs.empty();
    }
    return true;
}

}  // namespace

double delay_interval(const Network& net, const SimState& s, int inst_idx) {
    const RtInstance& inst = net.instances[static_cast<std::size_t>(inst_idx)];
    const auto& loc = inst.locations[static_cast<std::size_t>(s.locs[static_cast<std::size_t>(inst_idx)])];
    double d_max = kInf;
    for (const auto& b : loc.invariant) {
        if (b.op != CmpOp::Lt && b.op != CmpOp::Le) continue;  // lower bounds stay satisfied
        const long long rate = loc.rates[static_cast<std::size_t>(b.clock - inst.clock_base)];
        if (rate <= 0) continue;
        const double room =
            (static_cast<double>(b.bound) - s.clocks[static_cast<std::size_t>(b.clock)]) /
            static_cast<double>(rate);
        d_max = std::min(d_max, std::max(room, 0.0));
    }
    return d_max;
}

double sample_delay(const Network& net, const SimState& s, int inst_idx, double d_max,
                    RngStream& rng) {
    if (d_max != kInf) return rng.uniform(d_max);
    const RtInstance& inst = net.instances[static_cast<std::size_t>(inst_idx)];
    const auto& loc = inst.locations[static_cast<std::size_t>(s.locs[static_cast<std::size_t>(inst_idx)])];
    if (!loc.has_exp)
        throw RunError("instance " + inst.display + " is unbounded in '" + loc.name +
                       "' without exp_rate");
    return rng.exponential(loc.exp_rate);
}

StepPlan plan_step(const Network& net, const SimState& s, RngStream& rng) {
    const std::size_t n = net.instances.size();
    double global_cap = kInf;
    double best = kInf;
    std::vector<double> samples(n, kInf);
    for (std::size_t i = 0; i < n; ++i) {
        const RtInstance& inst = net.instances[i];
        const auto& loc = inst.locations[static_cast<std::size_t>(s.locs[i])];
        const double d_max = delay_interval(net, s, static_cast<int>(i));
        global_cap = std::min(global_cap, d_max);
        if (!loc.active) continue;  // passive: contributes no sample
        samples[i] = sample_delay(net, s, static_cast<int>(i), d_max, rng);
        best = std::min(best, samples[i]);
    }

    StepPlan plan;
    if (best == kInf) {
        plan.kind = global_cap == kInf ? StepPlan::Kind::Quiesce : StepPlan::Kind::Deadlock;
        plan.delay = global_cap;
        return plan;
    }
    if (best > global_cap) {
        // Some passive instance's invariant walls time off first.
        plan.kind = StepPlan::Kind::Deadlock;
        plan.delay = global_cap;
        return plan;
    }

    // Winner: minimum sample, ties broken uniformly.
    int winner = -1;
    int ties = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (samples[i] == best) ++ties;
    if (ties > 1) {
        const double u = rng.next_unit();
        int target = std::min(static_cast<int>(u * ties), ties - 1);
        for (std::size_t i = 0; i < n; ++i) {
            if (samples[i] != best) continue;
            if (target-- == 0) {
                winner = static_cast<int>(i);
                break;
            }
        }
    } else {
        for (std::size_t i = 0; i < n; ++i)
            if (samples[i] == best) winner = static_cast<int>(i);
    }

    const RtInstance& winst = net.instances[static_cast<std::size_t>(winner)];
    const auto& wloc = winst.locations[static_cast<std::size_t>(s.locs[static_cast<std::size_t>(winner)])];
    double delay = best;

    auto collect_candidates = [&](double d, std::vector<int>& out) {
        out.clear();
        for (int ei : wloc.out_edges)
            if (edge_initiable(net, s, winner, winst.edges[static_cast<std::size_t>(ei)], d))
                out.push_back(ei);
    };

    std::vector<int> candidates;
    collect_candidates(delay, candidates);
    if (candidates.empty()) {
        // No edge is enabled at the sampled delay: resample within the
        // enabled sub-window, or declare the run deadlocked.
        const double cap = std::min(delay_interval(net, s, winner), global_cap);
        IntervalSet enabled;
        for (int ei : wloc.out_edges) {
            const RtEdge& e = winst.edges[static_cast<std::size_t>(ei)];
            if (e.sync == SyncKind::Receive) continue;
            IntervalSet g = edge_guard_set(net, s, winner, e, 0.0, cap);
            if (g.empty()) continue;
            if (e.sync == SyncKind::Send && !e.channel_broadcast)
                g.intersect(receiver_ready_set(net, s, winner, channel_id(net, s, e), 0.0, cap));
            enabled.unite(g);
        }
        if (enabled.empty()) {
            // Nothing the winner can ever take; time may still flow to the
            // nearest invariant wall before the run dies.
            plan.kind = StepPlan::Kind::Deadlock;
            plan.delay = cap;
            return plan;
        }
        delay = enabled.measure() > 0 ? enabled.pick(rng.next_unit()) : enabled.pick(0.0);
        collect_candidates(delay, candidates);
    }

    plan.kind = StepPlan::Kind::Move;
    plan.winner = winner;
    plan.delay = delay;

    // Weighted edge choice.
    if (candidates.size() == 1) {
        plan.edge = candidates[0];
    } else {
        std::vector<long long> weights;
        weights.reserve(candidates.size());
        for (int ei : candidates)
            weights.push_back(winst.edges[static_cast<std::size_t>(ei)].weight);
        plan.edge = candidates[rng.weighted_pick(weights)];
    }

    const RtEdge& chosen = winst.edges[static_cast<std::size_t>(plan.edge)];
    if (chosen.sync == SyncKind::Send) {
        const long long chan = channel_id(net, s, chosen);
        std::vector<std::pair<int, int>> rs;
        ready_receivers(net, s, winner, chan, delay, rs);
        if (chosen.channel_broadcast) {
            // Every ready receiver joins; each picks among its own ready
            // edges, weight-proportionally, in instance order.
            std::vector<std::pair<int, int>> chosen_rs;
            std::size_t i = 0;
            while (i < rs.size()) {
                std::size_t j = i;
                while (j < rs.size() && rs[j].first == rs[i].first) ++j;
                if (j - i == 1) {
                    chosen_rs.push_back(rs[i]);
                } else {
                    std::vector<long long> w;
                    for (std::size_t k = i; k < j; ++k)
                        w.push_back(net.instances[static_cast<std::size_t>(rs[k].first)]
                                        .edges[static_cast<std::size_t>(rs[k].second)]
                                        .weight);
                    chosen_rs.push_back(rs[i + rng.weighted_pick(w)]);
                }
                i = j;
            }
            plan.broadcast_receivers = std::move(chosen_rs);
        } else {
            // Handshake: weight-proportional choice among ready pairs.
            std::vector<long long> w;
            w.reserve(rs.size());
            for (const auto& [r, ei] : rs)
                w.push_back(net.instances[static_cast<std::size_t>(r)]
                                .edges[static_cast<std::size_t>(ei)]
                                .weight);
            const auto& pick = rs[rng.weighted_pick(w)];
            plan.receiver = pick.first;
            plan.receiver_edge = pick.second;
        }
    }
    return plan;
}

namespace {

void take_edge(const Network& net, SimState& s, int inst_idx, int edge_idx) {
    const RtInstance& inst = net.instances[static_cast<std::size_t>(inst_idx)];
    const RtEdge& e = inst.edges[static_cast<std::size_t>(edge_idx)];
    for (int slot : e.resets) s.clocks[static_cast<std::size_t>(slot)] = 0.0;
    for (const auto& [slot, rhs] : e.updates) {
        const long long v = eval_expr(*rhs, s.vars, &net, &Network::matrix_lookup);
        const VarInfo& info = net.vars[static_cast<std::size_t>(slot)];
        if (v < info.min || v > info.max)
            throw RunError("update leaves '" + info.name + "' out of range: " + std::to_string(v));
        s.vars[static_cast<std::size_t>(slot)] = v;
    }
    s.locs[static_cast<std::size_t>(inst_idx)] = e.to;
}

}  // namespace

void apply_step(const Network& net, SimState& s, const StepPlan& plan) {
    if (plan.kind != StepPlan::Kind::Move) return;
    // Clocks advance at their instance's current-location rates.
    for (std::size_t i = 0; i < net.instances.size(); ++i) {
        const RtInstance& inst = net.instances[i];
        const auto& loc = inst.locations[static_cast<std::size_t>(s.locs[i])];
        for (int c = 0; c < inst.nclocks; ++c)
            s.clocks[static_cast<std::size_t>(inst.clock_base + c)] +=
                plan.delay * static_cast<double>(loc.rates[static_cast<std::size_t>(c)]);
    }
    s.clocks[0] += plan.delay;

    // Sender first, then receivers in instance order.
    take_edge(net, s, plan.winner, plan.edge);
    if (plan.receiver >= 0) take_edge(net, s, plan.receiver, plan.receiver_edge);
    for (const auto& [r, ei] : plan.broadcast_receivers) take_edge(net, s, r, ei);
}

StepPlan step(const Network& net, SimState& s, RngStream& rng) {
    StepPlan plan = plan_step(net, s, rng);
    apply_step(net, s, plan);
    return plan;
}

bool invariant_holds(const Network& net, const SimState& s, int inst_idx) {
    const RtInstance& inst = net.instances[static_cast<std::size_t>(inst_idx)];
    const auto& loc = inst.locations[static_cast<std::size_t>(s.locs[static_cast<std::size_t>(inst_idx)])];
    for (const auto& b : loc.invariant)
        if (!bound_holds(b.op, s.clocks[static_cast<std::size_t>(b.clock)],
                         static_cast<double>(b.bound)))
            return false;
    return true;
}

// --- monitoring --------------------------------------------------------------

namespace {

double operand_value(const Network&, const SimState& s, const Operand& o) {
    switch (o.kind) {
        case Operand::Kind::Const: return static_cast<double>(o.value);
        case Operand::Kind::Var:
            return static_cast<double>(s.vars[static_cast<std::size_t>(o.slot)]);
        case Operand::Kind::Clock: return s.clocks[static_cast<std::size_t>(o.slot)];
    }
    return 0;
}

double operand_slope(const Network& net, const SimState& s, const Operand& o) {
    if (o.kind != Operand::Kind::Clock) return 0;
    return static_cast<double>(clock_rate(net, s, o.slot));
}

bool rel_holds(RelOp op, double a, double b) {
    switch (op) {
        case RelOp::Lt: return a < b;
        case RelOp::Le: return a <= b;
        case RelOp::Gt: return a > b;
        case RelOp::Ge: return a >= b;
        case RelOp::Eq: return a == b;
        case RelOp::Ne: return a != b;
    }
    return false;
}

bool atom_holds_now(const Network& net, const SimState& s, const Atom& a) {
    if (a.kind == Atom::Kind::InLocation) {
        const bool in = s.locs[static_cast<std::size_t>(a.inst)] == a.loc;
        return a.negated ? !in : in;
    }
    return rel_holds(a.op, operand_value(net, s, a.lhs), operand_value(net, s, a.rhs));
}

}  // namespace

bool predicate_holds_now(const Network& net, const SimState& s, const Formula& f) {
    for (const auto& conj : f.dnf) {
        bool all = true;
        for (const auto& a : conj)
            if (!atom_holds_now(net, s, a)) {
                all = false;
                break;
            }
        if (all) return true;
    }
    return false;
}

std::optional<double> satisfy_point(const Network& net, const SimState& s, const Formula& f,
                                    double cap) {
    if (cap < 0) return std::nullopt;
    std::optional<double> best;
    for (const auto& conj : f.dnf) {
        bool discrete_ok = true;
        IntervalSet set = IntervalSet::whole(0.0, cap);
        for (const auto& a : conj) {
            if (a.is_discrete()) {
                if (!atom_holds_now(net, s, a)) {
                    discrete_ok = false;
                    break;
                }
                continue;
            }
            // lhs(t) op rhs(t), both linear in t.
            const double c = operand_value(net, s, a.lhs) - operand_value(net, s, a.rhs);
            const double slope = operand_slope(net, s, a.lhs) - operand_slope(net, s, a.rhs);
            set.intersect(IntervalSet::linear(c, slope, a.op, 0.0, cap));
            if (set.empty()) break;
        }
        if (!discrete_ok || set.empty()) continue;
        const double t = set.inf();
        if (!best || t < *best) best = t;
    }
    return best;
}

RunOutcome check_run(const Network& net, const Formula& f, RngStream& rng, long long step_limit) {
    RunOutcome out;
    SimState s = initial_state(net);
    for (;;) {
        const double obs = s.clocks[static_cast<std::size_t>(f.observer)];
        const double window = f.bound - obs;
        StepPlan plan = plan_step(net, s, rng);
        const double cap =
            plan.kind == StepPlan::Kind::Quiesce ? window : std::min(plan.delay, window);
        if (auto t = satisfy_point(net, s, f, cap)) {
            out.satisfied = true;
            out.observer = obs + *t;
            return out;
        }
        if (plan.kind == StepPlan::Kind::Quiesce) {
            out.observer = f.bound;
            return out;
        }
        if (plan.kind == StepPlan::Kind::Deadlock) {
            out.deadlocked = true;
            out.observer = obs + std::max(std::min(plan.delay, window), 0.0);
            return out;
        }
        if (plan.delay > window) {
            out.observer = f.bound;  // the observer crosses the bound mid-delay
            return out;
        }
        apply_step(net, s, plan);
        ++out.steps;
        if (out.steps >= step_limit) {
            out.step_limited = true;
            out.observer = s.clocks[static_cast<std::size_t>(f.observer)];
            return out;
        }
    }
}

}  // namespace psmc
