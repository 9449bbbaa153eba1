#include "psmc/topo.hpp"

#include <algorithm>
#include <atomic>
#include <istream>
#include <map>
#include <ostream>
#include <thread>

#include "psmc/rng.hpp"

namespace psmc {

int Topology::degree(int node) const {
    int d = 0;
    for (int j = 0; j < adj.n; ++j)
        if (j != node && adj.at(node, j)) ++d;
    return d;
}

RandomTopologies random_topologies(int n, int count, double density, std::uint64_t seed,
                                   bool symmetric) {
    if (n < 1 || count < 1) throw ModelError("", "need n >= 1 and count >= 1");
    if (density < 0 || density > 1) throw ModelError("", "density must lie in [0,1]");
    RandomTopologies out;
    out.topologies.reserve(static_cast<std::size_t>(count));
    RngStream rng(seed);
    std::map<std::string, int> seen;
    for (int c = 0; c < count; ++c) {
        Topology t;
        t.adj = BoolMatrix(n);
        t.gateway = 0;
        if (symmetric) {
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    const bool bit = rng.next_unit() < density;
                    t.adj.set(i, j, bit);
                    t.adj.set(j, i, bit);
                }
        } else {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    if (i != j) t.adj.set(i, j, rng.next_unit() < density);
        }
        if (++seen[t.canonical()] > 1) ++out.duplicates;
        out.topologies.push_back(std::move(t));
    }
    return out;
}

namespace {

void grow(BoolMatrix& adj, int k, int n, std::vector<BoolMatrix>& bases) {
    if (k == n) {
        bases.push_back(adj);
        return;
    }
    // (a) connect the new node to every older node
    for (int i = 0; i < k; ++i) {
        adj.set(i, k, true);
        adj.set(k, i, true);
    }
    grow(adj, k + 1, n, bases);
    // (b) leave it isolated
    for (int i = 0; i < k; ++i) {
        adj.set(i, k, false);
        adj.set(k, i, false);
    }
    grow(adj, k + 1, n, bases);
}

}  // namespace

std::vector<BoolMatrix> heuristic_base_graphs(int n) {
    if (n < 1) throw ModelError("", "need n >= 1");
    std::vector<BoolMatrix> bases;
    BoolMatrix adj(n);
    grow(adj, 1, n, bases);
    return bases;
}

std::vector<Topology> generate_topologies(int n) {
    const std::vector<BoolMatrix> bases = heuristic_base_graphs(n);
    std::vector<Topology> out;
    for (const auto& base : bases) {
        for (int g = 0; g < n; ++g) {
            Topology t{base, g};
            if (n >= 2 && t.degree(g) == 0) continue;  // unreachable gateway
            out.push_back(std::move(t));
        }
    }
    return out;
}

void write_topology(std::ostream& os, const Topology& t) {
    os << t.adj.n << " " << t.gateway << "\n";
    for (int i = 0; i < t.adj.n; ++i) {
        for (int j = 0; j < t.adj.n; ++j) os << (t.adj.at(i, j) ? '1' : '0');
        os << "\n";
    }
}

Topology read_topology(std::istream& is) {
    Topology t;
    int n = 0;
    if (!(is >> n >> t.gateway) || n < 1) throw ModelError("", "bad topology header");
    t.adj = BoolMatrix(n);
    for (int i = 0; i < n; ++i) {
        std::string row;
        if (!(is >> row) || static_cast<int>(row.size()) != n)
            throw ModelError("", "bad topology row " + std::to_string(i));
        for (int j = 0; j < n; ++j) t.adj.set(i, j, row[static_cast<std::size_t>(j)] == '1');
    }
    return t;
}

SweepResult topology_sweep(const ParametrizedModel& pm, const std::string& query,
                           const EstimationTask& task, const std::vector<Topology>& topologies,
                           const SweepConfig& cfg) {
    task.validate();
    const ParameterSpace space = parameter_space(pm);
    std::string matrix_name;
    const MatrixDomain* matrix_dom = nullptr;
    bool has_gateway_param = false;
    for (const auto& [name, dom] : space.entries) {
        if (const auto* m = std::get_if<MatrixDomain>(&dom)) {
            if (matrix_dom) throw ModelError("", "model has more than one matrix placeholder");
            matrix_name = name;
            matrix_dom = m;
        } else if (name == "GATEWAY") {
            has_gateway_param = true;
        }
    }
    if (!matrix_dom) throw ModelError("", "model has no boolean-matrix placeholder");
    for (const auto& t : topologies)
        if (t.adj.n != matrix_dom->n)
            throw ModelError("", "topology size " + std::to_string(t.adj.n) +
                                     " does not match the placeholder size " +
                                     std::to_string(matrix_dom->n));

    SweepResult out;
    out.eps = task.eps;
    out.alpha = task.alpha;
    out.param_names.push_back(matrix_name);
    if (has_gateway_param) out.param_names.push_back("GATEWAY");
    out.rows.resize(topologies.size());

    std::atomic<std::size_t> cursor{0};
    auto runner = [&] {
        for (;;) {
            const std::size_t i = cursor.fetch_add(1);
            if (i >= topologies.size()) return;
            Assignment a;
            a.emplace(matrix_name, ConstValue{topologies[i].adj});
            if (has_gateway_param)
                a.emplace("GATEWAY", ConstValue{static_cast<long long>(topologies[i].gateway)});
            out.rows[i] = estimate_assignment(pm, query, task, cfg, std::move(a),
                                              seed_for_worker(cfg.seed, static_cast<std::uint32_t>(i)));
        }
    };
    const std::uint32_t jobs =
        std::max<std::uint32_t>(1, std::min<std::uint32_t>(cfg.jobs, topologies.size()));
    std::vector<std::thread> pool;
    pool.reserve(jobs);
    for (std::uint32_t t = 0; t < jobs; ++t) pool.emplace_back(runner);
    for (auto& t : pool) t.join();
    return out;
}

}  // namespace psmc
