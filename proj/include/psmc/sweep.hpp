#pragma once

#include <iosfwd>

#include "psmc/driver.hpp"
#include "psmc/model.hpp"

// Parametric exploration: grid sweeps over the parameter space, symmetric
// Nash-equilibrium search over a strategy grid, and per-topology sweeps.
// Assignments are independent jobs, dispatched one per executor.

namespace psmc {

struct SweepConfig {
    std::uint32_t jobs = 1;
    std::uint64_t seed = 0;
    std::uint32_t batch = 32;  // batch size of the per-assignment estimations
    long long step_limit = kDefaultStepLimit;
};

struct SweepRow {
    Assignment assignment;
    double p_hat = 0;
    long long runs = 0;
    double wall_ms = 0;
    std::string status = "ok";
};

struct SweepResult {
    std::vector<std::string> param_names;  // document order
    double eps = 0, alpha = 0;
    std::vector<SweepRow> rows;  // enumeration order
};

// One estimation per assignment; failures are recorded in the row status
// and the sweep continues.
SweepResult sweep(const ParametrizedModel& pm, const std::string& query,
                  const EstimationTask& task, const SweepConfig& cfg);

// CSV per docs/cli.md: parameter columns, then p_hat,eps,alpha,runs,wall_ms,
// status. `ranked` prepends an `order` column and sorts by descending p_hat.
void write_sweep_csv(std::ostream& os, const SweepResult& r, bool ranked = false);

// One estimation for one concrete assignment; failures land in the row
// status instead of propagating. Shared by sweep and topology_sweep.
SweepRow estimate_assignment(const ParametrizedModel& pm, const std::string& query,
                             const EstimationTask& task, const SweepConfig& cfg, Assignment a,
                             std::uint64_t row_seed);

// --- symmetric games --------------------------------------------------------

struct SymmetricGame {
    ParametrizedModel pm;
    std::string deviant_param;  // strategy constant of player 0
    std::string common_param;   // strategy constant of everyone else
    std::vector<long long> grid;
    std::string query;  // player-0 goal
    EstimationTask task;
};

struct UtilityMatrix {
    std::vector<long long> grid;
    std::vector<std::vector<double>> u;  // u[deviant][common]

    std::vector<double> diagonal() const;
};

UtilityMatrix utility_matrix(const SymmetricGame& game, std::uint64_t seed,
                             const SweepConfig& cfg);

struct NashResult {
    std::vector<long long> equilibria;  // ascending
    long long optimum = 0;              // argmax of the diagonal
};

// p is an equilibrium iff u[p][p] >= max_p' u[p'][p] - tol.
NashResult find_nash(const UtilityMatrix& um, double tol);

void write_utility_csv(std::ostream& os, const UtilityMatrix& um);
std::string nash_summary(const NashResult& r);

}  // namespace psmc
