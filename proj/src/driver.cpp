#include "psmc/driver.hpp"

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

namespace psmc {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

long long simulate_batch(const Network& net, const Formula& f, RngStream& stream,
                         long long count, long long step_limit) {
    long long successes = 0;
    for (long long i = 0; i < count; ++i)
        if (check_run(net, f, stream, step_limit).satisfied) ++successes;
    return successes;
}

Verdict run_hypothesis(const Network& net, const Formula& f, const HypothesisTask& task,
                       const LocalRunConfig& cfg) {
    task.validate();
    const auto start = Clock::now();
    DistConfig dist{cfg.jobs, cfg.batch, cfg.buffer, cfg.seed, cfg.safe_bounds};
    dist.validate();

    Ledger ledger(task, dist);
    std::mutex mu;
    std::condition_variable cv;
    bool stop = false;
    std::exception_ptr error;

    // Rounds of worker w committed so far: the frontier has passed (r, w)
    // for every r < this.
    auto committed_rounds = [&](std::uint32_t w) {
        return ledger.frontier_round() + (w < ledger.frontier_worker() ? 1 : 0);
    };

    auto worker = [&](std::uint32_t w) {
        RngStream stream(seed_for_worker(cfg.seed, w));
        try {
            for (std::uint64_t round = 0;; ++round) {
                {
                    std::unique_lock lock(mu);
                    cv.wait(lock, [&] { return stop || round - committed_rounds(w) < cfg.buffer; });
                    if (stop) return;
                }
                const long long succ =
                    simulate_batch(net, f, stream, cfg.batch, cfg.step_limit);
                std::unique_lock lock(mu);
                if (stop) return;
                ledger.receive({w, round, cfg.batch, static_cast<std::uint32_t>(succ)});
                SprtStatus s = ledger.commit_ready();
                if (s == SprtStatus::Continue && cfg.safe_bounds && !ledger.frontier_pending()) {
                    if (auto sb = ledger.safe_bounds_decision()) {
                        ledger.force_terminal(*sb);
                        s = *sb;
                    }
                }
                if (s != SprtStatus::Continue) stop = true;
                cv.notify_all();
            }
        } catch (...) {
            std::unique_lock lock(mu);
            if (!error) error = std::current_exception();
            stop = true;
            cv.notify_all();
        }
    };

    std::vector<std::thread> pool;
    pool.reserve(cfg.jobs);
    for (std::uint32_t w = 0; w < cfg.jobs; ++w) pool.emplace_back(worker, w);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);

    Verdict v;
    v.kind = ledger.status() == SprtStatus::AcceptH0 ? Verdict::Kind::AcceptH0
                                                     : Verdict::Kind::AcceptH1;
    v.runs_used = ledger.committed_runs();
    v.llr = ledger.state().llr;
    v.wall_seconds = seconds_since(start);
    return v;
}

namespace {

Verdict estimate_n_runs(const Network& net, const Formula& f, long long total,
                        const EstimationTask& task, const LocalRunConfig& cfg) {
    const auto start = Clock::now();
    const long long batch = cfg.batch;
    const long long nbatches = (total + batch - 1) / batch;

    // Batches are seeded by batch index, not by executor, so the outcome
    // multiset (and p_hat) does not depend on the number of jobs.
    std::atomic<long long> next{0};
    std::atomic<long long> successes{0};
    std::mutex err_mu;
    std::exception_ptr error;

    auto runner = [&] {
        try {
            for (;;) {
                const long long b = next.fetch_add(1);
                if (b >= nbatches) return;
                const long long size = b == nbatches - 1 ? total - (nbatches - 1) * batch : batch;
                RngStream stream(seed_for_worker(cfg.seed, static_cast<std::uint32_t>(b)));
                successes += simulate_batch(net, f, stream, size, cfg.step_limit);
            }
        } catch (...) {
            std::lock_guard lock(err_mu);
            if (!error) error = std::current_exception();
            next.store(nbatches);
        }
    };

    std::vector<std::thread> pool;
    const std::uint32_t jobs = std::max(1u, cfg.jobs);
    pool.reserve(jobs);
    for (std::uint32_t j = 0; j < jobs; ++j) pool.emplace_back(runner);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);

    Verdict v;
    v.kind = Verdict::Kind::Estimate;
    v.p_hat = static_cast<double>(successes.load()) / static_cast<double>(total);
    v.eps = task.eps;
    v.alpha = task.alpha;
    v.runs_used = total;
    v.wall_seconds = seconds_since(start);
    return v;
}

}  // namespace

Verdict run_estimation(const Network& net, const Formula& f, const EstimationTask& task,
                       const LocalRunConfig& cfg) {
    task.validate();
    return estimate_n_runs(net, f, chernoff_runs(task.eps, task.alpha), task, cfg);
}

Verdict run_estimation_fixed(const Network& net, const Formula& f, long long runs,
                             const EstimationTask& task, const LocalRunConfig& cfg) {
    if (runs < 1) throw TaskError("run count must be >= 1");
    return estimate_n_runs(net, f, runs, task, cfg);
}

}  // namespace psmc
