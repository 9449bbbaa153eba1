#pragma once

#include <json.hpp>

#include "psmc/net.hpp"
#include "psmc/smc.hpp"

// Wire protocol: each message is a 4-byte big-endian length prefix followed
// by that many bytes of UTF-8 JSON. Message schemas live in docs/protocol.md.

namespace psmc {

constexpr int kProtocolVersion = 1;
constexpr std::size_t kMaxMessageBytes = 64u << 20;

void send_message(TcpConn& conn, const nlohmann::json& msg);
nlohmann::json recv_message(TcpConn& conn);

nlohmann::json verdict_to_json(const Verdict& v);
Verdict verdict_from_json(const nlohmann::json& j);

}  // namespace psmc
