#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

// Statistical cores: Wald's sequential probability ratio test with an
// indifference region, and fixed-sample estimation with the two-sided
// Hoeffding run count.

namespace psmc {

struct TaskError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// H0: p >= theta + delta0   vs   H1: p <= theta - delta1.
struct HypothesisTask {
    double theta = 0.5;
    double delta0 = 0.01, delta1 = 0.01;
    double alpha = 0.05;  // P(accept H0 | H1)
    double beta = 0.05;   // P(accept H1 | H0)

    double p0() const { return theta + delta0; }
    double p1() const { return theta - delta1; }
    void validate() const;
};

struct EstimationTask {
    double eps = 0.05;   // interval half-width
    double alpha = 0.05; // 1 - confidence
    void validate() const;
};

struct SprtThresholds {
    double accept_h1_at;  // A = ln((1-beta)/alpha), upper
    double accept_h0_at;  // B = ln(beta/(1-alpha)), lower
};

SprtThresholds sprt_thresholds(double alpha, double beta);

enum class SprtStatus { Continue, AcceptH0, AcceptH1 };

// Running log-likelihood ratio ln L(p1)/L(p0): a success adds ln(p1/p0) < 0,
// a failure adds ln((1-p1)/(1-p0)) > 0.
struct SprtState {
    double llr = 0;
    long long n = 0;
    long long successes = 0;
    double accept_h1_at = 0, accept_h0_at = 0;

    static SprtState init(const HypothesisTask& task);
    SprtStatus status() const;
    // llr recomputed from scratch out of (n, successes); the incremental
    // value must track this within numerical noise.
    double recompute_llr(const HypothesisTask& task) const;
};

SprtStatus sprt_update(SprtState& st, const HypothesisTask& task, bool outcome);

// Aggregated form: identical terminal decision and llr as `batch` single
// updates whose threshold checks are deferred to the batch boundary.
SprtStatus sprt_batch_update(SprtState& st, const HypothesisTask& task, long long batch,
                             long long successes);

// N = ceil(ln(2/alpha) / (2 eps^2)).
long long chernoff_runs(double eps, double alpha);

struct Verdict {
    enum class Kind { AcceptH0, AcceptH1, Estimate };
    Kind kind = Kind::AcceptH0;
    double p_hat = 0, eps = 0, alpha = 0;  // estimation
    double llr = 0;                        // hypothesis
    long long runs_used = 0;
    double wall_seconds = 0;
};

// Single-line machine-readable record (stable formatting, replayable).
std::string verdict_record(const Verdict& v, std::uint64_t seed);

}  // namespace psmc
