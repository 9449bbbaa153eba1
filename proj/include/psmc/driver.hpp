#pragma once

#include "psmc/ledger.hpp"
#include "psmc/sim.hpp"
#include "psmc/smc.hpp"

// Local drivers: run SMC tasks on in-process executors. Hypothesis testing
// uses the same ledger discipline as the wire protocol (executors play the
// worker role), so local and distributed verdicts coincide for equal
// (seed, workers, batch, buffer).

namespace psmc {

struct LocalRunConfig {
    std::uint32_t jobs = 1;
    std::uint32_t batch = 32;
    std::uint32_t buffer = 4;
    std::uint64_t seed = 0;
    bool safe_bounds = false;
    long long step_limit = kDefaultStepLimit;
};

// Simulates `count` runs off one stream (run after run) and returns the
// number of satisfied ones.
long long simulate_batch(const Network& net, const Formula& f, RngStream& stream,
                         long long count, long long step_limit = kDefaultStepLimit);

Verdict run_hypothesis(const Network& net, const Formula& f, const HypothesisTask& task,
                       const LocalRunConfig& cfg);

Verdict run_estimation(const Network& net, const Formula& f, const EstimationTask& task,
                       const LocalRunConfig& cfg);

// Estimation with an explicit run count (scaling experiments); the verdict
// reports eps/alpha as given without deriving the count from them.
Verdict run_estimation_fixed(const Network& net, const Formula& f, long long runs,
                             const EstimationTask& task, const LocalRunConfig& cfg);

}  // namespace psmc
