#pragma once

#include <iosfwd>

#include "psmc/sweep.hpp"

// Network topology generation: random adjacency draws with duplicate
// accounting, and the recursive connect-all/isolated growth heuristic with
// gateway enumeration.

namespace psmc {

struct Topology {
    BoolMatrix adj;
    int gateway = 0;

    std::string canonical() const { return adj.pattern() + ":" + std::to_string(gateway); }
    int degree(int node) const;
};

struct RandomTopologies {
    std::vector<Topology> topologies;
    int duplicates = 0;  // exact duplicates, reported but kept
};

// `count` draws with each off-diagonal entry Bernoulli(density); symmetric
// mode mirrors the upper triangle. The gateway is fixed at node 0.
RandomTopologies random_topologies(int n, int count, double density, std::uint64_t seed,
                                   bool symmetric = true);

// Recursive growth: every new node is either connected to all older nodes
// or isolated, giving 2^(n-1) base graphs in depth-first order with the
// connect-all branch explored first.
std::vector<BoolMatrix> heuristic_base_graphs(int n);

// One topology per (base graph, gateway) pair, dropping gateways of degree
// 0 for n >= 2. Output order: base generation order, then gateway index.
std::vector<Topology> generate_topologies(int n);

// First line "n gateway", then n rows of 0/1 characters.
void write_topology(std::ostream& os, const Topology& t);
Topology read_topology(std::istream& is);

// One estimation per topology against the model's single boolean-matrix
// placeholder (and, when declared, an integer GATEWAY placeholder). Rows
// keep enumeration order; ranked CSV output sorts by descending p_hat.
SweepResult topology_sweep(const ParametrizedModel& pm, const std::string& query,
                           const EstimationTask& task, const std::vector<Topology>& topologies,
                           const SweepConfig& cfg);

}  // namespace psmc
