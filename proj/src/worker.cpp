#include "psmc/worker.hpp"

#include <condition_variable>
#include <mutex>
#include <thread>

#include "psmc/driver.hpp"
#include "psmc/ledger.hpp"
#include "psmc/model.hpp"

namespace psmc {

using nlohmann::json;

void worker_loop(TcpConn conn, const WorkerHooks& hooks) {
    send_message(conn, {{"type", "hello"}, {"proto", kProtocolVersion}});

    json assign = recv_message(conn);
    if (assign.value("type", "") == "abort")
        throw ProtocolError("master aborted: " + assign.value("reason", ""));
    if (assign.value("type", "") != "assign") throw ProtocolError("expected ASSIGN");
    const std::uint32_t wid = assign.at("worker_id").get<std::uint32_t>();

    json config = recv_message(conn);
    if (config.value("type", "") != "config") throw ProtocolError("expected CONFIG");

    const Network net = instantiate(parse_model(config.at("model").dump()), {});
    const Formula formula = parse_query(net, config.at("query").get<std::string>());
    const std::uint64_t seed = config.at("seed").get<std::uint64_t>();
    const std::uint32_t batch = config.at("batch").get<std::uint32_t>();
    const std::uint32_t buffer = config.at("buffer").get<std::uint32_t>();
    const std::uint32_t workers = config.at("workers").get<std::uint32_t>();
    const std::uint64_t resume = config.value("resume_round", 0ULL);
    const long long step_limit = config.value("step_limit", kDefaultStepLimit);
    const bool estimating = config.value("mode", "check") == "estimate";

    // Reader: tracks ACKs for the send window and watches for STOP/ABORT.
    std::mutex mu;
    std::condition_variable cv;
    std::uint64_t acked = 0;
    bool stopped = false, aborted = false;
    std::string abort_reason;

    std::thread reader([&] {
        try {
            for (;;) {
                json msg = recv_message(conn);
                const std::string type = msg.value("type", "");
                std::lock_guard lock(mu);
                if (type == "ack") {
                    ++acked;
                } else if (type == "stop") {
                    stopped = true;
                } else if (type == "abort") {
                    stopped = aborted = true;
                    abort_reason = msg.value("reason", "");
                } else {
                    stopped = aborted = true;
                    abort_reason = "unexpected message '" + type + "'";
                }
                cv.notify_all();
                if (stopped) return;
            }
        } catch (...) {
            std::lock_guard lock(mu);
            if (!stopped) {
                aborted = true;
                abort_reason = "connection lost";
            }
            stopped = true;
            cv.notify_all();
        }
    });

    RngStream stream(seed);
    std::uint64_t sent = 0;
    bool clean = false;

    auto window_wait = [&] {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return stopped || sent - acked < buffer; });
        return !stopped;
    };
    auto is_stopped = [&] {
        std::lock_guard lock(mu);
        return stopped;
    };
    auto emit = [&](std::uint64_t round, std::uint32_t count, long long successes) {
        json msg = {{"type", "batch"},
                    {"worker_id", wid},
                    {"round", round},
                    {"count", count},
                    {"successes", successes}};
        if (hooks.before_send) hooks.before_send(msg);
        try {
            send_message(conn, msg);
        } catch (const NetError&) {
            if (is_stopped()) return false;  // raced with STOP
            throw;
        }
        ++sent;
        return true;
    };

    try {
        if (estimating) {
            BatchPlan plan{config.at("total_runs").get<long long>(), batch, workers};
            const long long mine = plan.batches_for(wid);
            for (long long j = 0; j < mine; ++j) {
                const long long size = plan.size_of_global(plan.global_index(wid, j));
                if (static_cast<std::uint64_t>(j) >= resume && !window_wait()) break;
                const long long succ = simulate_batch(net, formula, stream, size, step_limit);
                if (static_cast<std::uint64_t>(j) < resume) continue;  // replayed, already counted
                if (is_stopped()) break;
                if (!emit(static_cast<std::uint64_t>(j), static_cast<std::uint32_t>(size), succ))
                    break;
            }
            std::unique_lock lock(mu);
            cv.wait(lock, [&] { return stopped; });
            clean = !aborted;
        } else {
            for (std::uint64_t round = 0;; ++round) {
                if (round >= resume && !window_wait()) break;
                const long long succ = simulate_batch(net, formula, stream, batch, step_limit);
                if (round < resume) continue;  // replay for stream position only
                if (is_stopped()) break;
                if (!emit(round, batch, succ)) break;
            }
            std::lock_guard lock(mu);
            clean = !aborted;
        }
    } catch (...) {
        conn.shutdown_both();
        reader.join();
        throw;
    }

    conn.shutdown_both();
    reader.join();
    if (!clean) throw ProtocolError("worker aborted: " + abort_reason);
}

}  // namespace psmc
