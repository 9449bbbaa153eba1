#include "psmc/master.hpp"

#include <condition_variable>
#include <deque>
#include <mutex>
#include <thread>
#include <vector>

namespace psmc {

using nlohmann::json;

namespace {

struct Event {
    enum class Kind { Message, Gone, NewConn };
    Kind kind;
    std::uint32_t wid = 0;
    std::uint64_t gen = 0;
    json msg;
    TcpConn conn;  // NewConn only; HELLO already consumed
};

struct Session {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<Event> events;

    void push(Event e) {
        std::lock_guard lock(mu);
        events.push_back(std::move(e));
        cv.notify_all();
    }
    Event pop() {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return !events.empty(); });
        Event e = std::move(events.front());
        events.pop_front();
        return e;
    }
};

struct WorkerSlot {
    TcpConn conn;
    std::thread reader;
    bool alive = false;
    std::uint64_t gen = 0;            // bumps on every (re)assignment
    std::uint64_t received = 0;       // batches received across connections
};

void reader_thread(Session& session, TcpConn& conn, std::uint32_t wid, std::uint64_t gen) {
    try {
        for (;;) {
            json msg = recv_message(conn);
            session.push({Event::Kind::Message, wid, gen, std::move(msg), TcpConn{}});
        }
    } catch (...) {
        session.push({Event::Kind::Gone, wid, gen, {}, TcpConn{}});
    }
}

}  // namespace

Verdict master_session(TcpListener& listener, const MasterOptions& opt) {
    opt.cfg.validate();
    if (opt.hypothesis.has_value() == opt.estimation.has_value())
        throw ProtocolError("master needs exactly one of a hypothesis or an estimation task");
    const bool estimating = opt.estimation.has_value();
    if (estimating) opt.estimation->validate();
    else opt.hypothesis->validate();

    const json model_doc = json::parse(opt.model_text);
    const std::uint32_t W = opt.cfg.workers;

    Session session;
    std::vector<WorkerSlot> slots(W);
    std::uint32_t assigned = 0;

    // Accepts connections and completes the HELLO handshake off the reactor.
    std::thread acceptor([&] {
        try {
            for (;;) {
                TcpConn conn = listener.accept_conn();
                try {
                    json hello = recv_message(conn);
                    if (hello.value("type", "") != "hello" ||
                        hello.value("proto", -1) != kProtocolVersion) {
                        send_message(conn, {{"type", "abort"},
                                            {"reason", "protocol version mismatch"}});
                        continue;
                    }
                } catch (const NetError&) {
                    continue;  // handshake failed; drop the connection
                }
                session.push({Event::Kind::NewConn, 0, 0, {}, std::move(conn)});
            }
        } catch (...) {
            // listener closed: session is ending
        }
    });

    std::optional<Ledger> ledger;
    if (!estimating) ledger.emplace(*opt.hypothesis, opt.cfg);
    BatchPlan plan{0, opt.cfg.batch_size, W};
    long long est_successes = 0, est_batches_done = 0;
    if (estimating) plan.total = chernoff_runs(opt.estimation->eps, opt.estimation->alpha);

    std::uint64_t acked_slots = 0;  // ledger slots [0, acked_slots) confirmed to workers

    auto config_for = [&](std::uint32_t wid, std::uint64_t resume) {
        json task;
        if (estimating) task = {{"eps", opt.estimation->eps}, {"alpha", opt.estimation->alpha}};
        else
            task = {{"theta", opt.hypothesis->theta},
                    {"delta0", opt.hypothesis->delta0},
                    {"delta1", opt.hypothesis->delta1},
                    {"alpha", opt.hypothesis->alpha},
                    {"beta", opt.hypothesis->beta}};
        json cfg = {{"type", "config"},
                    {"mode", estimating ? "estimate" : "check"},
                    {"model", model_doc},
                    {"query", opt.query},
                    {"task", task},
                    {"seed", seed_for_worker(opt.cfg.master_seed, wid)},
                    {"batch", opt.cfg.batch_size},
                    {"buffer", opt.cfg.buffer},
                    {"workers", W},
                    {"resume_round", resume},
                    {"step_limit", opt.step_limit}};
        if (estimating) cfg["total_runs"] = plan.total;
        return cfg;
    };

    // Sending to a worker whose connection just died must not kill the
    // session; the Gone event is already on its way.
    auto safe_send = [&](std::uint32_t wid, const json& msg) {
        WorkerSlot& slot = slots[wid];
        if (!slot.alive) return;
        try {
            send_message(slot.conn, msg);
        } catch (const NetError&) {
            slot.alive = false;
            slot.conn.shutdown_both();
        }
    };

    auto attach = [&](std::uint32_t wid, TcpConn conn) {
        WorkerSlot& slot = slots[wid];
        if (slot.reader.joinable()) slot.reader.join();
        slot.conn = std::move(conn);
        slot.alive = true;
        ++slot.gen;
        safe_send(wid, {{"type", "assign"}, {"worker_id", wid}});
        safe_send(wid, config_for(wid, slot.received));
        if (slot.alive)
            slot.reader = std::thread(reader_thread, std::ref(session), std::ref(slot.conn), wid,
                                      slot.gen);
    };

    auto shutdown_all = [&](const json* final_msg) {
        for (auto& slot : slots) {
            if (slot.alive && final_msg) {
                try {
                    send_message(slot.conn, *final_msg);
                } catch (const NetError&) {
                }
            }
        }
        listener.close();
        for (auto& slot : slots) slot.conn.shutdown_both();
        acceptor.join();
        for (auto& slot : slots) {
            if (slot.reader.joinable()) slot.reader.join();
            slot.conn.close();
        }
    };

    try {
        for (;;) {
            Event ev = session.pop();
            if (ev.kind == Event::Kind::NewConn) {
                // First free slot: an unassigned id, else a dead worker to
                // replace (same seed, resumed round index).
                std::uint32_t wid = W;
                if (assigned < W) wid = assigned++;
                else
                    for (std::uint32_t i = 0; i < W; ++i)
                        if (!slots[i].alive) {
                            wid = i;
                            break;
                        }
                if (wid == W) {
                    try {
                        send_message(ev.conn, {{"type", "abort"},
                                               {"reason", "session already has all workers"}});
                    } catch (const NetError&) {
                    }
                    continue;
                }
                attach(wid, std::move(ev.conn));
                continue;
            }
            if (ev.gen != slots[ev.wid].gen) continue;  // stale connection event
            if (ev.kind == Event::Kind::Gone) {
                slots[ev.wid].alive = false;
                slots[ev.wid].conn.close();
                continue;
            }

            const json& msg = ev.msg;
            const std::string type = msg.value("type", "");
            if (type != "batch")
                throw ProtocolError("unexpected message '" + type + "' from worker");
            BatchResult r;
            r.worker_id = msg.at("worker_id").get<std::uint32_t>();
            r.round = msg.at("round").get<std::uint64_t>();
            r.count = msg.at("count").get<std::uint32_t>();
            r.successes = msg.at("successes").get<std::uint32_t>();
            if (r.worker_id != ev.wid)
                throw ProtocolError("batch carries a foreign worker id");
            if (r.round != slots[ev.wid].received)
                throw ProtocolError("batch round " + std::to_string(r.round) +
                                    " out of sequence for worker " + std::to_string(ev.wid));
            ++slots[ev.wid].received;

            if (estimating) {
                const long long global = plan.global_index(ev.wid, static_cast<long long>(r.round));
                if (global >= plan.nbatches() || r.count != plan.size_of_global(global))
                    throw ProtocolError("estimation batch does not match the plan");
                if (r.successes > r.count) throw ProtocolError("successes exceed batch size");
                est_successes += r.successes;
                ++est_batches_done;
                safe_send(ev.wid, {{"type", "ack"}, {"worker_id", ev.wid}, {"round", r.round}});
                if (est_batches_done == plan.nbatches()) {
                    Verdict v;
                    v.kind = Verdict::Kind::Estimate;
                    v.p_hat = static_cast<double>(est_successes) /
                              static_cast<double>(plan.total);
                    v.eps = opt.estimation->eps;
                    v.alpha = opt.estimation->alpha;
                    v.runs_used = plan.total;
                    json stop = {{"type", "stop"}, {"verdict", verdict_to_json(v)}};
                    shutdown_all(&stop);
                    return v;
                }
                continue;
            }

            ledger->receive(r);
            SprtStatus s = ledger->commit_ready();
            // Acknowledge every newly committed slot to its worker.
            const std::uint64_t committed = ledger->committed_batches();
            for (; acked_slots < committed; ++acked_slots) {
                const std::uint32_t w = static_cast<std::uint32_t>(acked_slots % W);
                const std::uint64_t round = acked_slots / W;
                safe_send(w, {{"type", "ack"}, {"worker_id", w}, {"round", round}});
            }
            if (s == SprtStatus::Continue && opt.cfg.safe_bounds &&
                !ledger->frontier_pending()) {
                if (auto sb = ledger->safe_bounds_decision()) {
                    ledger->force_terminal(*sb);
                    s = *sb;
                }
            }
            if (s != SprtStatus::Continue) {
                Verdict v;
                v.kind = s == SprtStatus::AcceptH0 ? Verdict::Kind::AcceptH0
                                                   : Verdict::Kind::AcceptH1;
                v.runs_used = ledger->committed_runs();
                v.llr = ledger->state().llr;
                json stop = {{"type", "stop"}, {"verdict", verdict_to_json(v)}};
                shutdown_all(&stop);
                return v;
            }
        }
    } catch (...) {
        json abort = {{"type", "abort"}, {"reason", "session aborted"}};
        shutdown_all(&abort);
        throw;
    }
}

}  // namespace psmc
