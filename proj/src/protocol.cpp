#include "psmc/protocol.hpp"

namespace psmc {

using nlohmann::json;

void send_message(TcpConn& conn, const json& msg) {
    const std::string body = msg.dump();
    if (body.size() > kMaxMessageBytes) throw NetError("message exceeds the size limit");
    const std::uint32_t n = static_cast<std::uint32_t>(body.size());
    unsigned char prefix[4] = {static_cast<unsigned char>(n >> 24),
                               static_cast<unsigned char>(n >> 16),
                               static_cast<unsigned char>(n >> 8),
                               static_cast<unsigned char>(n)};
    conn.send_all(prefix, 4);
    conn.send_all(body.data(), body.size());
}

json recv_message(TcpConn& conn) {
    unsigned char prefix[4];
    conn.recv_all(prefix, 4);
    const std::uint32_t n = (static_cast<std::uint32_t>(prefix[0]) << 24) |
                            (static_cast<std::uint32_t>(prefix[1]) << 16) |
                            (static_cast<std::uint32_t>(prefix[2]) << 8) |
                            static_cast<std::uint32_t>(prefix[3]);
    if (n > kMaxMessageBytes) throw NetError("incoming message exceeds the size limit");
    std::string body(n, '\0');
    conn.recv_all(body.data(), n);
    try {
        return json::parse(body);
    } catch (const json::parse_error& e) {
        throw NetError(std::string("malformed message: ") + e.what());
    }
}

json verdict_to_json(const Verdict& v) {
    json j;
    switch (v.kind) {
        case Verdict::Kind::AcceptH0: j["kind"] = "H0"; break;
        case Verdict::Kind::AcceptH1: j["kind"] = "H1"; break;
        case Verdict::Kind::Estimate: j["kind"] = "estimate"; break;
    }
    j["runs"] = v.runs_used;
    j["llr"] = v.llr;
    j["p_hat"] = v.p_hat;
    j["eps"] = v.eps;
    j["alpha"] = v.alpha;
    return j;
}

Verdict verdict_from_json(const nlohmann::json& j) {
    Verdict v;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "H0") v.kind = Verdict::Kind::AcceptH0;
    else if (kind == "H1") v.kind = Verdict::Kind::AcceptH1;
    else if (kind == "estimate") v.kind = Verdict::Kind::Estimate;
    else throw NetError("bad verdict kind '" + kind + "'");
    v.runs_used = j.at("runs").get<long long>();
    v.llr = j.at("llr").get<double>();
    v.p_hat = j.at("p_hat").get<double>();
    v.eps = j.at("eps").get<double>();
    v.alpha = j.at("alpha").get<double>();
    return v;
}

}  // namespace psmc
