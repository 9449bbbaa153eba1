#pragma once

#include <optional>
#include <string>

#include "psmc/ledger.hpp"
#include "psmc/protocol.hpp"
#include "psmc/sim.hpp"

namespace psmc {

struct MasterOptions {
    DistConfig cfg;
    std::string model_text;  // placeholder-free model document for CONFIG
    std::string query;
    std::optional<HypothesisTask> hypothesis;
    std::optional<EstimationTask> estimation;
    long long step_limit = kDefaultStepLimit;
};

// Runs one session over an already-bound listener: registers cfg.workers
// workers, distributes the task, and returns the verdict. A worker that
// disconnects is replaced by the next connection, which replays the same
// seed and round indices, so the verdict is unaffected.
Verdict master_session(TcpListener& listener, const MasterOptions& opt);

}  // namespace psmc
