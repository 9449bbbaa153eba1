#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "psmc/smc.hpp"

// Deterministic round-robin commit ledger for distributed hypothesis
// testing. Batch results may arrive in any order; the SPRT statistic only
// ever consumes them in strict (round, worker) order, so the verdict is a
// pure function of batch contents, independent of arrival timing.

namespace psmc {

struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DistConfig {
    std::uint32_t workers = 1;
    std::uint32_t batch_size = 32;
    std::uint32_t buffer = 4;  // max uncommitted batches per worker
    std::uint64_t master_seed = 0;
    bool safe_bounds = false;

    void validate() const {
        if (workers < 1 || batch_size < 1 || buffer < 1)
            throw ProtocolError("workers, batch and buffer must all be >= 1");
    }
};

struct BatchResult {
    std::uint32_t worker_id = 0;
    std::uint64_t round = 0;
    std::uint32_t count = 0;
    std::uint32_t successes = 0;
};

// Estimation work split: ceil(N/B) batches assigned round-robin, the last
// one truncated so the total is exactly N. Worker w's local round j maps to
// global batch w + j*W; master and workers derive the same plan from
// (total, batch, workers).
struct BatchPlan {
    long long total = 0;
    std::uint32_t batch = 1;
    std::uint32_t workers = 1;

    long long nbatches() const { return (total + batch - 1) / batch; }
    long long batches_for(std::uint32_t w) const {
        const long long m = nbatches();
        return m / workers + (m % workers > w ? 1 : 0);
    }
    long long global_index(std::uint32_t w, long long local) const {
        return w + local * static_cast<long long>(workers);
    }
    long long size_of_global(long long b) const {
        const long long m = nbatches();
        return b == m - 1 ? total - (m - 1) * static_cast<long long>(batch) : batch;
    }
};

class Ledger {
  public:
    Ledger(const HypothesisTask& task, const DistConfig& cfg);

    // Buffers one result. Rejects duplicates, already-committed slots,
    // out-of-range worker ids and window overflows.
    void receive(const BatchResult& r);

    // Commits every available frontier batch in (round, worker) order,
    // applying the SPRT batch update at each boundary. Terminal states are
    // sticky; later results are ignored.
    SprtStatus commit_ready();

    // Early decision from safe Binomial bounds: every missing batch up to
    // the highest received slot is replaced by 0 and by batch_size
    // successes; when both extreme trajectories first terminate with the
    // same status, that status is sound for every completion.
    std::optional<SprtStatus> safe_bounds_decision() const;

    SprtStatus status() const { return terminal_ ? *terminal_ : st_.status(); }
    const SprtState& state() const { return st_; }
    long long committed_runs() const { return st_.n; }
    std::uint64_t committed_batches() const { return committed_; }
    std::uint64_t frontier_round() const { return next_round_; }
    std::uint32_t frontier_worker() const { return next_worker_; }
    std::uint32_t pending_for(std::uint32_t worker) const;
    bool frontier_pending() const;

    // Marks the ledger terminal with an externally decided status (the safe
    // bounds path); subsequent results are discarded.
    void force_terminal(SprtStatus s);

  private:
    std::uint64_t slot_key(std::uint64_t round, std::uint32_t worker) const {
        return round * cfg_.workers + worker;
    }

    HypothesisTask task_;
    DistConfig cfg_;
    SprtState st_;
    std::uint64_t next_round_ = 0;
    std::uint32_t next_worker_ = 0;
    std::uint64_t committed_ = 0;
    std::optional<SprtStatus> terminal_;
    std::map<std::uint64_t, BatchResult> pending_;  // keyed by slot index
};

}  // namespace psmc
