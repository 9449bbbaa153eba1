#include "psmc/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ostream>
#include <thread>

#include "psmc/query.hpp"

namespace psmc {

namespace {

std::string value_cell(const ConstValue& v) {
    if (const auto* i = std::get_if<long long>(&v)) return std::to_string(*i);
    return std::get<BoolMatrix>(v).pattern();
}

std::string fmt_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", x);
    return buf;
}

// Dispatches one independent job per row index across cfg.jobs executors.
template <typename Job>
void parallel_rows(std::size_t count, std::uint32_t jobs, Job job) {
    if (count == 0) return;
    std::atomic<std::size_t> next{0};
    auto runner = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            job(i);
        }
    };
    const std::uint32_t n = std::max(1u, std::min<std::uint32_t>(jobs, count));
    std::vector<std::thread> pool;
    pool.reserve(n);
    for (std::uint32_t t = 0; t < n; ++t) pool.emplace_back(runner);
    for (auto& t : pool) t.join();
}

}  // namespace

SweepRow estimate_assignment(const ParametrizedModel& pm, const std::string& query,
                             const EstimationTask& task, const SweepConfig& cfg, Assignment a,
                             std::uint64_t row_seed) {
    SweepRow row;
    row.assignment = std::move(a);
    const auto start = std::chrono::steady_clock::now();
    try {
        const Network net = instantiate(pm, row.assignment);
        const Formula f = parse_query(net, query);
        LocalRunConfig lc;
        lc.jobs = 1;  // one assignment per executor; no nested parallelism
        lc.batch = cfg.batch;
        lc.seed = row_seed;
        lc.step_limit = cfg.step_limit;
        const Verdict v = run_estimation(net, f, task, lc);
        row.p_hat = v.p_hat;
        row.runs = v.runs_used;
    } catch (const std::exception& e) {
        row.status = std::string("error: ") + e.what();
    }
    row.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
            .count();
    return row;
}

SweepResult sweep(const ParametrizedModel& pm, const std::string& query,
                  const EstimationTask& task, const SweepConfig& cfg) {
    task.validate();
    const ParameterSpace space = parameter_space(pm);
    std::vector<Assignment> assignments = enumerate_assignments(space);
    if (assignments.empty()) assignments.push_back({});  // concrete model, single row

    SweepResult out;
    out.eps = task.eps;
    out.alpha = task.alpha;
    for (const auto& [name, dom] : space.entries) out.param_names.push_back(name);
    out.rows.resize(assignments.size());

    parallel_rows(assignments.size(), cfg.jobs, [&](std::size_t i) {
        out.rows[i] = estimate_assignment(pm, query, task, cfg, std::move(assignments[i]),
                                   seed_for_worker(cfg.seed, static_cast<std::uint32_t>(i)));
    });
    return out;
}

void write_sweep_csv(std::ostream& os, const SweepResult& r, bool ranked) {
    if (ranked) os << "order,";
    for (const auto& name : r.param_names) os << name << ",";
    os << "p_hat,eps,alpha,runs,wall_ms,status\n";

    std::vector<std::size_t> order(r.rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    if (ranked)
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return r.rows[a].p_hat > r.rows[b].p_hat;
        });

    for (std::size_t i : order) {
        const SweepRow& row = r.rows[i];
        if (ranked) os << i << ",";
        for (const auto& name : r.param_names) {
            auto it = row.assignment.find(name);
            os << (it != row.assignment.end() ? value_cell(it->second) : "") << ",";
        }
        std::string status = row.status;
        std::replace(status.begin(), status.end(), ',', ';');
        os << fmt_double(row.p_hat) << "," << fmt_double(r.eps) << "," << fmt_double(r.alpha)
           << "," << row.runs << "," << fmt_double(row.wall_ms) << "," << status << "\n";
    }
}

// --- symmetric games ---------------------------------------------------------

std::vector<double> UtilityMatrix::diagonal() const {
    std::vector<double> d;
    d.reserve(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) d.push_back(u[i][i]);
    return d;
}

UtilityMatrix utility_matrix(const SymmetricGame& game, std::uint64_t seed,
                             const SweepConfig& cfg) {
    game.task.validate();
    if (game.grid.size() < 2) throw ModelError("", "strategy grid needs at least two points");
    const ParameterSpace space = parameter_space(game.pm);
    const ParamDomain *dev_dom = nullptr, *common_dom = nullptr;
    for (const auto& [name, dom] : space.entries) {
        if (name == game.deviant_param) dev_dom = &dom;
        if (name == game.common_param) common_dom = &dom;
    }
    if (!dev_dom || !common_dom)
        throw ModelError("", "model lacks the strategy parameters '" + game.deviant_param +
                                 "'/'" + game.common_param + "'");
    for (long long g : game.grid)
        if (!value_in_domain(ConstValue{g}, *dev_dom) || !value_in_domain(ConstValue{g}, *common_dom))
            throw ModelError("", "grid value " + std::to_string(g) + " outside the parameter domain");

    const std::size_t k = game.grid.size();
    UtilityMatrix um;
    um.grid = game.grid;
    um.u.assign(k, std::vector<double>(k, 0.0));

    std::vector<std::string> errors(k * k);
    parallel_rows(k * k, cfg.jobs, [&](std::size_t cell) {
        const std::size_t i = cell / k, j = cell % k;
        Assignment a;
        a.emplace(game.deviant_param, ConstValue{game.grid[i]});
        a.emplace(game.common_param, ConstValue{game.grid[j]});
        SweepRow row = estimate_assignment(game.pm, game.query, game.task, cfg, std::move(a),
                                    seed_for_worker(seed, static_cast<std::uint32_t>(cell)));
        if (row.status != "ok") errors[cell] = row.status;
        um.u[i][j] = row.p_hat;
    });
    for (const auto& e : errors)
        if (!e.empty()) throw ModelError("", "utility estimation failed: " + e);
    return um;
}

NashResult find_nash(const UtilityMatrix& um, double tol) {
    NashResult out;
    const std::size_t k = um.grid.size();
    for (std::size_t p = 0; p < k; ++p) {
        double col_max = um.u[0][p];
        for (std::size_t q = 1; q < k; ++q) col_max = std::max(col_max, um.u[q][p]);
        if (um.u[p][p] >= col_max - tol) out.equilibria.push_back(um.grid[p]);
    }
    std::sort(out.equilibria.begin(), out.equilibria.end());
    std::size_t best = 0;
    for (std::size_t p = 1; p < k; ++p)
        if (um.u[p][p] > um.u[best][best]) best = p;
    out.optimum = um.grid[best];
    return out;
}

void write_utility_csv(std::ostream& os, const UtilityMatrix& um) {
    os << "deviant\\common";
    for (long long g : um.grid) os << "," << g;
    os << "\n";
    for (std::size_t i = 0; i < um.grid.size(); ++i) {
        os << um.grid[i];
        for (std::size_t j = 0; j < um.grid.size(); ++j) os << "," << fmt_double(um.u[i][j]);
        os << "\n";
    }
}

std::string nash_summary(const NashResult& r) {
    std::string s = "nash=";
    for (std::size_t i = 0; i < r.equilibria.size(); ++i)
        s += (i ? "," : "") + std::to_string(r.equilibria[i]);
    if (r.equilibria.empty()) s += "none";
    s += " opt=" + std::to_string(r.optimum);
    return s;
}

}  // namespace psmc
