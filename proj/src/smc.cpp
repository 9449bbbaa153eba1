#include "psmc/smc.hpp"

#include <cmath>
#include <cstdio>

namespace psmc {

void HypothesisTask::validate() const {
    if (!(alpha > 0 && alpha < 1) || !(beta > 0 && beta < 1))
        throw TaskError("alpha and beta must lie in (0,1)");
    if (delta0 < 0 || delta1 < 0) throw TaskError("indifference widths must be >= 0");
    if (!(p1() >= 0) || !(p0() <= 1) || !(p1() < p0()))
        throw TaskError("need 0 <= theta-delta1 < theta+delta0 <= 1");
}

void EstimationTask::validate() const {
    if (!(eps > 0 && eps < 1)) throw TaskError("eps must lie in (0,1)");
    if (!(alpha > 0 && alpha < 1)) throw TaskError("alpha must lie in (0,1)");
}

SprtThresholds sprt_thresholds(double alpha, double beta) {
    if (!(alpha > 0 && alpha < 1) || !(beta > 0 && beta < 1))
        throw TaskError("alpha and beta must lie in (0,1)");
    return {std::log((1.0 - beta) / alpha), std::log(beta / (1.0 - alpha))};
}

SprtState SprtState::init(const HypothesisTask& task) {
    task.validate();
    SprtState st;
    const auto th = sprt_thresholds(task.alpha, task.beta);
    st.accept_h1_at = th.accept_h1_at;
    st.accept_h0_at = th.accept_h0_at;
    return st;
}

SprtStatus SprtState::status() const {
    if (llr >= accept_h1_at) return SprtStatus::AcceptH1;
    if (llr <= accept_h0_at) return SprtStatus::AcceptH0;
    return SprtStatus::Continue;
}

double SprtState::recompute_llr(const HypothesisTask& task) const {
    const double ls = std::log(task.p1() / task.p0());
    const double lf = std::log((1.0 - task.p1()) / (1.0 - task.p0()));
    // Guard 0 * inf (p1 == 0 or p0 == 1 are legal boundary tasks).
    const double a = successes == 0 ? 0.0 : static_cast<double>(successes) * ls;
    const double b = n == successes ? 0.0 : static_cast<double>(n - successes) * lf;
    return a + b;
}

SprtStatus sprt_update(SprtState& st, const HypothesisTask& task, bool outcome) {
    return sprt_batch_update(st, task, 1, outcome ? 1 : 0);
}

SprtStatus sprt_batch_update(SprtState& st, const HypothesisTask& task, long long batch,
                             long long successes) {
    if (successes < 0 || successes > batch) throw TaskError("batch successes out of range");
    if (batch == 0) return st.status();
    const double ls = std::log(task.p1() / task.p0());
    const double lf = std::log((1.0 - task.p1()) / (1.0 - task.p0()));
    const double a = successes == 0 ? 0.0 : static_cast<double>(successes) * ls;
    const double b = batch == successes ? 0.0 : static_cast<double>(batch - successes) * lf;
    st.llr += a + b;
    st.n += batch;
    st.successes += successes;
    return st.status();
}

long long chernoff_runs(double eps, double alpha) {
    if (!(eps > 0 && eps < 1) || !(alpha > 0 && alpha < 1))
        throw TaskError("eps and alpha must lie in (0,1)");
    return static_cast<long long>(std::ceil(std::log(2.0 / alpha) / (2.0 * eps * eps)));
}

std::string verdict_record(const Verdict& v, std::uint64_t seed) {
    char buf[256];
    if (v.kind == Verdict::Kind::Estimate) {
        std::snprintf(buf, sizeof buf, "estimate p=%.17g eps=%g alpha=%g runs=%lld seed=%llu",
                      v.p_hat, v.eps, v.alpha, v.runs_used,
                      static_cast<unsigned long long>(seed));
    } else {
        std::snprintf(buf, sizeof buf, "verdict=%s runs=%lld llr=%.17g seed=%llu",
                      v.kind == Verdict::Kind::AcceptH0 ? "H0" : "H1", v.runs_used, v.llr,
                      static_cast<unsigned long long>(seed));
    }
    return buf;
}

}  // namespace psmc
