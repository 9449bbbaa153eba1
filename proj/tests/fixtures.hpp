#pragma once

#include <string>

// Shared model documents for tests.

namespace fixtures {

// One template, one location with a rate-1 clock, no edges.
inline const char* kMinimal = R"json({
  "templates": [
    {"name": "A", "clocks": ["c"],
     "locations": [{"name": "Only", "rates": {"c": 1}}],
     "initial": "Only"}
  ],
  "instances": [{"template": "A", "args": []}]
})json";

// Train-style template whose initial location leaves with rate 1/RATE.
inline const char* kTrainRate = R"json({
  "constants": {"RATE": "#range(1,20)"},
  "templates": [
    {"name": "Train", "params": ["id"], "clocks": ["x"],
     "locations": [
       {"name": "Safe", "exp_rate": [1, "RATE"]},
       {"name": "Appr", "invariant": [{"clock": "x", "op": "<=", "bound": 10}]}
     ],
     "initial": "Safe",
     "edges": [
       {"from": "Safe", "to": "Appr", "resets": ["x"]},
       {"from": "Appr", "to": "Safe", "guard_clocks": [{"clock": "x", "op": ">=", "bound": 10}]}
     ]}
  ],
  "instances": [{"template": "Train", "args": [0]}]
})json";

// Weighted coin: one zero-delay choice into Good/Bad sinks.
inline std::string bernoulli(long long w_good, long long w_bad) {
    return std::string(R"json({
  "constants": {"WG": )json") +
           std::to_string(w_good) + R"json(, "WB": )json" + std::to_string(w_bad) + R"json(},
  "templates": [
    {"name": "Coin", "clocks": ["u"],
     "locations": [
       {"name": "Start", "invariant": [{"clock": "u", "op": "<=", "bound": 0}]},
       {"name": "Good"},
       {"name": "Bad"}
     ],
     "initial": "Start",
     "edges": [
       {"from": "Start", "to": "Good", "weight": "WG"},
       {"from": "Start", "to": "Bad", "weight": "WB"}
     ]}
  ],
  "instances": [{"template": "Coin", "args": []}]
})json";
}

// A -> B with exponential rate 1; P(reach B by time t) = 1 - e^-t.
inline const char* kExpModel = R"json({
  "templates": [
    {"name": "Proc", "clocks": ["x"],
     "locations": [{"name": "A", "exp_rate": [1, 1]}, {"name": "B"}],
     "initial": "A",
     "edges": [{"from": "A", "to": "B"}]}
  ],
  "instances": [{"template": "Proc", "args": []}]
})json";

inline const char* kExpQuery = "Pr[time<=1](<> Proc().B)";

// Broadcast sender with two receivers listening on appr[0] / appr[1].
inline const char* kBroadcast = R"json({
  "channels": [{"name": "appr", "kind": "broadcast", "size": 2}],
  "variables": [{"name": "got", "init": 0, "min": 0, "max": 10}],
  "templates": [
    {"name": "Sender", "clocks": ["x"],
     "locations": [
       {"name": "S", "invariant": [{"clock": "x", "op": "<=", "bound": 1}]},
       {"name": "Done"}
     ],
     "initial": "S",
     "edges": [{"from": "S", "to": "Done",
                "guard_clocks": [{"clock": "x", "op": ">=", "bound": 1}],
                "sync": "appr[0]!"}]},
    {"name": "Recv", "params": ["id"],
     "locations": [{"name": "Wait"}, {"name": "Heard"}],
     "initial": "Wait",
     "edges": [{"from": "Wait", "to": "Heard", "sync": "appr[id]?",
                "updates": ["got = got + 1"]}]}
  ],
  "instances": [
    {"template": "Sender", "args": []},
    {"template": "Recv", "count": 2}
  ]
})json";

// Handshake value passing through a global.
inline const char* kHandshake = R"json({
  "channels": [{"name": "ping", "kind": "handshake"}],
  "variables": [{"name": "last", "init": -1, "min": -1, "max": 100}],
  "templates": [
    {"name": "Client", "params": ["id"], "clocks": ["x"],
     "locations": [
       {"name": "Idle", "exp_rate": [1, 2]},
       {"name": "Sent"}
     ],
     "initial": "Idle",
     "edges": [{"from": "Idle", "to": "Sent", "sync": "ping!", "updates": ["last = id"]}]},
    {"name": "Server",
     "locations": [{"name": "Up"}],
     "initial": "Up",
     "edges": [{"from": "Up", "to": "Up", "sync": "ping?"}]}
  ],
  "instances": [
    {"template": "Client", "count": 3},
    {"template": "Server", "args": []}
  ]
})json";

// Two-player three-slot transmission game with a referee; strategy weights
// W0 (player 0) and W (player 1) out of 10. Decisions fall on even times,
// the referee scores on odd times; every timed wait is one unit long so the
// forced exits of the racing components line up.
inline const char* kSlotGame = R"json({
  "constants": {"W0": "#range(1,9)", "W": "#range(1,9)", "SLOTS": 3},
  "variables": [
    {"name": "t0", "init": 0, "min": 0, "max": 1},
    {"name": "t1", "init": 0, "min": 0, "max": 1},
    {"name": "w0", "init": 0, "min": 0, "max": 1},
    {"name": "w1", "init": 0, "min": 0, "max": 1},
    {"name": "s", "init": 0, "min": 0, "max": 10}
  ],
  "templates": [
    {"name": "P0", "clocks": ["x"],
     "locations": [
       {"name": "Decide", "invariant": [{"clock": "x", "op": "<=", "bound": 0}]},
       {"name": "TxH", "invariant": [{"clock": "x", "op": "<=", "bound": 1}]},
       {"name": "TxT", "invariant": [{"clock": "x", "op": "<=", "bound": 2}]},
       {"name": "IdH", "invariant": [{"clock": "x", "op": "<=", "bound": 1}]},
       {"name": "IdT", "invariant": [{"clock": "x", "op": "<=", "bound": 2}]}
     ],
     "initial": "Decide",
     "edges": [
       {"from": "Decide", "to": "TxH", "weight": "W0", "updates": ["t0 = 1"], "resets": ["x"]},
       {"from": "Decide", "to": "IdH", "weight": "10 - W0", "resets": ["x"]},
       {"from": "TxH", "to": "TxT", "guard_clocks": [{"clock": "x", "op": ">=", "bound": 1}]},
       {"from": "TxT", "to": "Decide", "guard_clocks": [{"clock": "x", "op": ">=", "bound": 2}], "resets": ["x"]},
       {"from": "IdH", "to": "IdT", "guard_clocks": [{"clock": "x", "op": ">=", "bound": 1}]},
       {"from": "IdT", "to": "Decide", "guard_clocks": [{"clock": "x", "op": ">=", "bound": 2}], "resets": ["x"]}
     ]},
    {"name": "P1", "clocks": ["x"],
     "locations": [
       {"name": "Decide", "invariant": [{"clock": "x", "op": "<=", "bound": 0}]},
       {"name": "TxH", "invariant": [{"clock": "x", "op": "<=", "bound": 1}]},
       {"name": "TxT", "invariant": [{"clock": "x", "op": "<=", "bound": 2}]},
       {"name": "IdH", "invariant": [{"clock": "x", "op": "<=", "bound": 1}]},
       {"name": "IdT", "invariant": [{"clock": "x", "op": "<=", "bound": 2}]}
     ],
     "initial": "Decide",
     "edges": [
       {"from": "Decide", "to": "TxH", "weight": "W", "updates": ["t1 = 1"], "resets": ["x"]},
       {"from": "Decide", "to": "IdH", "weight": "10 - W", "resets": ["x"]},
       {"from": "TxH", "to": "TxT", "guard_clocks": [{"clock": "x", "op": ">=", "bound": 1}]},
       {"from": "TxT", "to": "Decide", "guard_clocks": [{"clock": "x", "op": ">=", "bound": 2}], "resets": ["x"]},
       {"from": "IdH", "to": "IdT", "guard_clocks": [{"clock": "x", "op": ">=", "bound": 1}]},
       {"from": "IdT", "to": "Decide", "guard_clocks": [{"clock": "x", "op": ">=", "bound": 2}], "resets": ["x"]}
     ]},
    {"name": "Referee", "clocks": ["c"],
     "locations": [
       {"name": "Start", "invariant": [{"clock": "c", "op": "<=", "bound": 1}]},
       {"name": "W1", "invariant": [{"clock": "c", "op": "<=", "bound": 1}]},
       {"name": "W2", "invariant": [{"clock": "c", "op": "<=", "bound": 2}]},
       {"name": "Done"}
     ],
     "initial": "Start",
     "edges": [
       {"from": "Start", "to": "W1",
        "guard_clocks": [{"clock": "c", "op": ">=", "bound": 1}],
        "updates": ["w0 = w0 || (t0 && !t1)", "w1 = w1 || (t1 && !t0)", "t0 = 0", "t1 = 0", "s = s + 1"],
        "resets": ["c"]},
       {"from": "W1", "to": "W2", "guard_clocks": [{"clock": "c", "op": ">=", "bound": 1}]},
       {"from": "W2", "to": "W1",
        "guard_clocks": [{"clock": "c", "op": ">=", "bound": 2}],
        "guard_data": "s < SLOTS",
        "updates": ["w0 = w0 || (t0 && !t1)", "w1 = w1 || (t1 && !t0)", "t0 = 0", "t1 = 0", "s = s + 1"],
        "resets": ["c"]},
       {"from": "W2", "to": "Done",
        "guard_clocks": [{"clock": "c", "op": ">=", "bound": 2}],
        "guard_data": "s >= SLOTS"}
     ]}
  ],
  "instances": [
    {"template": "P0", "args": []},
    {"template": "P1", "args": []},
    {"template": "Referee", "args": []}
  ]
})json";

inline const char* kSlotGameQuery = "Pr[time<=7](<> w0 >= 1)";

}  // namespace fixtures
