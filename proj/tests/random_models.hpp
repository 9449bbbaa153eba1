#pragma once

#include <string>

#include "psmc/rng.hpp"

// Random small models and queries for differential monitoring tests.
// Generated as JSON so they pass through the full parse/validate path.

namespace fixtures {

struct RandomModel {
    std::string model;
    std::string query;
};

inline RandomModel random_model(psmc::RngStream& rng) {
    auto pick = [&](int n) { return static_cast<int>(rng.next_unit() * n); };

    const int ninst = 1 + pick(2);
    std::string doc = R"({
  "variables": [{"name": "v", "init": 0, "min": 0, "max": 25}],
  "templates": [)";
    for (int t = 0; t < ninst; ++t) {
        if (t) doc += ",";
        const int nlocs = 2 + pick(2);
        const int nclocks = 1 + pick(2);
        std::string clocks = "[\"x\"";
        if (nclocks == 2) clocks += ", \"y\"";
        clocks += "]";
        doc += "\n    {\"name\": \"T" + std::to_string(t) + "\", \"clocks\": " + clocks +
               ", \"locations\": [";
        std::vector<bool> bounded(static_cast<std::size_t>(nlocs));
        for (int l = 0; l < nlocs; ++l) {
            if (l) doc += ",";
            const int bound = 2 + pick(5);
            const bool has_inv = rng.next_unit() < 0.7;
            bounded[static_cast<std::size_t>(l)] = has_inv;
            doc += "{\"name\": \"L" + std::to_string(l) + "\"";
            if (has_inv)
                doc += ", \"invariant\": [{\"clock\": \"x\", \"op\": \"<=\", \"bound\": " +
                       std::to_string(bound) + "}]";
            else
                doc += ", \"exp_rate\": [1, " + std::to_string(1 + pick(3)) + "]";
            if (nclocks == 2 && rng.next_unit() < 0.5)
                doc += ", \"rates\": {\"y\": " + std::to_string(pick(4)) + "}";
            doc += "}";
        }
        doc += "], \"initial\": \"L0\", \"edges\": [";
        const int nedges = nlocs + pick(3);
        for (int e = 0; e < nedges; ++e) {
            if (e) doc += ",";
            const int from = e < nlocs ? e : pick(nlocs);  // every location gets an edge
            const int to = pick(nlocs);
            doc += "{\"from\": \"L" + std::to_string(from) + "\", \"to\": \"L" +
                   std::to_string(to) + "\"";
            if (rng.next_unit() < 0.4)
                doc += ", \"guard_clocks\": [{\"clock\": \"x\", \"op\": \">=\", \"bound\": " +
                       std::to_string(1 + pick(3)) + "}]";
            if (rng.next_unit() < 0.6) doc += ", \"resets\": [\"x\"]";
            if (rng.next_unit() < 0.4) doc += ", \"updates\": [\"v = (v + 1) * (v < 20)\"]";
            doc += ", \"weight\": " + std::to_string(1 + pick(3)) + "}";
        }
        doc += "]}";
    }
    doc += "\n  ],\n  \"instances\": [";
    for (int t = 0; t < ninst; ++t) {
        if (t) doc += ",";
        doc += "{\"template\": \"T" + std::to_string(t) + "\", \"args\": []}";
    }
    doc += "]\n}";

    // Random predicate: 1..3 atoms over clocks, locations and the variable.
    std::string pred;
    const int natoms = 1 + pick(3);
    for (int a = 0; a < natoms; ++a) {
        if (a) pred += rng.next_unit() < 0.5 ? " && " : " || ";
        const int kind = pick(3);
        if (kind == 0) {
            const char* ops[] = {">=", "<=", ">", "<"};
            pred += "T0().x " + std::string(ops[pick(4)]) + " " + std::to_string(1 + pick(5));
        } else if (kind == 1) {
            pred += "v >= " + std::to_string(1 + pick(4));
        } else {
            pred += "T0().L" + std::to_string(pick(2));
        }
    }
    const int bound = 2 + pick(6);
    RandomModel out;
    out.model = std::move(doc);
    out.query = "Pr[time<=" + std::to_string(bound) + "](<> " + pred + ")";
    return out;
}

}  // namespace fixtures
