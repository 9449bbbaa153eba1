#include "psmc/ledger.hpp"

namespace psmc {

Ledger::Ledger(const HypothesisTask& task, const DistConfig& cfg) : task_(task), cfg_(cfg) {
    cfg_.validate();
    st_ = SprtState::init(task_);
}

std::uint32_t Ledger::pending_for(std::uint32_t worker) const {
    std::uint32_t n = 0;
    for (const auto& [slot, r] : pending_)
        if (r.worker_id == worker) ++n;
    return n;
}

bool Ledger::frontier_pending() const {
    return pending_.count(slot_key(next_round_, next_worker_)) > 0;
}

void Ledger::receive(const BatchResult& r) {
    if (terminal_) return;  // decision already made; late results are dropped
    if (r.worker_id >= cfg_.workers)
        throw ProtocolError("batch from unknown worker " + std::to_string(r.worker_id));
    if (r.count != cfg_.batch_size)
        throw ProtocolError("batch size mismatch: got " + std::to_string(r.count));
    if (r.successes > r.count) throw ProtocolError("batch successes exceed count");
    const std::uint64_t key = slot_key(r.round, r.worker_id);
    const std::uint64_t frontier = slot_key(next_round_, next_worker_);
    if (key < frontier) throw ProtocolError("batch repeats a committed slot");
    if (!pending_.emplace(key, r).second) throw ProtocolError("duplicate batch result");
    if (pending_for(r.worker_id) > cfg_.buffer)
        throw ProtocolError("worker " + std::to_string(r.worker_id) +
                            " exceeded its batch window");
}

SprtStatus Ledger::commit_ready() {
    if (terminal_) return *terminal_;
    for (;;) {
        auto it = pending_.find(slot_key(next_round_, next_worker_));
        if (it == pending_.end()) return SprtStatus::Continue;
        const BatchResult r = it->second;
        pending_.erase(it);
        ++committed_;
        if (++next_worker_ == cfg_.workers) {
            next_worker_ = 0;
            ++next_round_;
        }
        const SprtStatus s = sprt_batch_update(st_, task_, r.count, r.successes);
        if (s != SprtStatus::Continue) {
            terminal_ = s;
            pending_.clear();
            return s;
        }
    }
}

std::optional<SprtStatus> Ledger::safe_bounds_decision() const {
    if (terminal_) return terminal_;
    if (pending_.empty() || frontier_pending()) return std::nullopt;

    const std::uint64_t first = slot_key(next_round_, next_worker_);
    const std::uint64_t last = pending_.rbegin()->first;

    // Walk both extreme trajectories over [first, last], checking the
    // thresholds at every batch boundary; each trajectory keeps its first
    // terminal status.
    SprtState low = st_, high = st_;  // low: missing = all failures, high: all successes
    std::optional<SprtStatus> low_final, high_final;
    for (std::uint64_t slot = first; slot <= last; ++slot) {
        auto it = pending_.find(slot);
        const long long got =
            it != pending_.end() ? static_cast<long long>(it->second.successes) : -1LL;
        if (!low_final) {
            const SprtStatus s = sprt_batch_update(low, task_, cfg_.batch_size,
                                                   got >= 0 ? got : 0);
            if (s != SprtStatus::Continue) low_final = s;
        }
        if (!high_final) {
            const SprtStatus s = sprt_batch_update(high, task_, cfg_.batch_size,
                                                   got >= 0 ? got : cfg_.batch_size);
            if (s != SprtStatus::Continue) high_final = s;
        }
        if (low_final && high_final) break;
    }
    if (low_final && high_final && *low_final == *high_final) return *low_final;
    return std::nullopt;
}

void Ledger::force_terminal(SprtStatus s) {
    terminal_ = s;
    pending_.clear();
}

}  // namespace psmc
