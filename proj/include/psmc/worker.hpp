#pragma once

#include <functional>

#include "psmc/protocol.hpp"

namespace psmc {

struct WorkerHooks {
    // Called right before every BATCH send; tests inject delays here.
    std::function<void(const nlohmann::json&)> before_send;
};

// Registers with a master, generates batches from the assigned seeded
// stream, and honors the batch window. Returns when STOP arrives; throws
// NetError/ProtocolError on connection loss or protocol violations.
void worker_loop(TcpConn conn, const WorkerHooks& hooks = {});

}  // namespace psmc
