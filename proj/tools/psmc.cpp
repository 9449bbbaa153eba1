// Command-line front end: statistical checking, estimation, parametric
// sweeps, Nash-equilibrium search, topology generation, and the
// master/worker distribution endpoints.
//
// Exit codes: 0 = H0 accepted / success, 1 = H1 accepted, 2 = usage or
// validation error, 3 = runtime or protocol error.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <thread>

#include "psmc/driver.hpp"
#include "psmc/master.hpp"
#include "psmc/sweep.hpp"
#include "psmc/topo.hpp"
#include "psmc/version.hpp"
#include "psmc/worker.hpp"

namespace {

using namespace psmc;

constexpr int kExitH0 = 0;
constexpr int kExitH1 = 1;
constexpr int kExitUsage = 2;
constexpr int kExitRuntime = 3;

void print_stamp() { std::cout << "# " << kToolName << " " << kToolVersion << "\n"; }

std::uint64_t pick_seed(std::uint64_t explicit_seed, bool have_seed) {
    if (have_seed) return explicit_seed;
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) | rd();
}

// --param NAME=VALUE; integers directly, matrices as row-major 0/1 strings.
Assignment parse_params(const ParametrizedModel& pm, const std::vector<std::string>& params) {
    const ParameterSpace space = parameter_space(pm);
    Assignment a;
    for (const auto& p : params) {
        const auto eq = p.find('=');
        if (eq == std::string::npos)
            throw ModelError("", "--param expects NAME=VALUE, got '" + p + "'");
        const std::string name = p.substr(0, eq);
        const std::string value = p.substr(eq + 1);
        const ParamDomain* dom = nullptr;
        for (const auto& [n, d] : space.entries)
            if (n == name) dom = &d;
        if (!dom) throw ModelError("", "'" + name + "' is not a parameter of this model");
        if (const auto* m = std::get_if<MatrixDomain>(dom)) {
            const std::size_t need = static_cast<std::size_t>(m->n) * m->n;
            if (value.size() != need)
                throw ModelError("", "matrix value for '" + name + "' needs " +
                                         std::to_string(need) + " 0/1 characters");
            BoolMatrix mat(m->n);
            for (int i = 0; i < m->n; ++i)
                for (int j = 0; j < m->n; ++j) {
                    const char c = value[static_cast<std::size_t>(i) * m->n + j];
                    if (c != '0' && c != '1')
                        throw ModelError("", "matrix value for '" + name + "' must be 0/1");
                    mat.set(i, j, c == '1');
                }
            a.emplace(name, ConstValue{std::move(mat)});
        } else {
            a.emplace(name, ConstValue{static_cast<long long>(std::stoll(value))});
        }
    }
    return a;
}

struct CommonModelArgs {
    std::string model_path;
    std::string query;
    std::vector<std::string> params;
    std::uint64_t seed = 0;
    bool have_seed = false;
    std::uint32_t jobs = std::max(1u, std::thread::hardware_concurrency());
    long long step_limit = kDefaultStepLimit;
};

void add_common(CLI::App* cmd, CommonModelArgs& args, bool with_query = true) {
    cmd->add_option("model", args.model_path, "model document (JSON)")->required();
    if (with_query) cmd->add_option("--query", args.query, "reachability query")->required();
    cmd->add_option("--param", args.params, "pin a parameter, NAME=VALUE (repeatable)");
    cmd->add_option("--seed", args.seed, "master seed (echoed; defaults to entropy)")
        ->each([&](const std::string&) { args.have_seed = true; });
    cmd->add_option("--jobs", args.jobs, "local executors");
    cmd->add_option("--step-limit", args.step_limit, "discrete steps per run before giving up");
}

struct HypArgs {
    double theta = 0.5, delta = 0.01, delta0 = -1, delta1 = -1;
    double alpha = 0.05, beta = 0.05;
    std::uint32_t batch = 32, buffer = 4;
    bool safe_bounds = false;
};

void add_hypothesis(CLI::App* cmd, HypArgs& h, bool required) {
    auto* t = cmd->add_option("--theta", h.theta, "probability threshold");
    if (required) t->required();
    cmd->add_option("--delta", h.delta, "symmetric indifference half-width");
    cmd->add_option("--delta0", h.delta0, "upper indifference half-width (overrides --delta)");
    cmd->add_option("--delta1", h.delta1, "lower indifference half-width (overrides --delta)");
    cmd->add_option("--alpha", h.alpha, "false positive bound");
    cmd->add_option("--beta", h.beta, "false negative bound");
    cmd->add_option("--batch", h.batch, "runs per batch");
    cmd->add_option("--buffer", h.buffer, "batches a worker may run ahead");
    cmd->add_flag("--safe-bounds", h.safe_bounds, "decide early from safe Binomial bounds");
}

HypothesisTask to_task(const HypArgs& h) {
    HypothesisTask t;
    t.theta = h.theta;
    t.delta0 = h.delta0 >= 0 ? h.delta0 : h.delta;
    t.delta1 = h.delta1 >= 0 ? h.delta1 : h.delta;
    t.alpha = h.alpha;
    t.beta = h.beta;
    t.validate();
    return t;
}

std::vector<long long> parse_grid(const std::string& s) {
    // a..b:step over integers
    const auto dots = s.find("..");
    const auto colon = s.find(':', dots == std::string::npos ? 0 : dots + 2);
    if (dots == std::string::npos || colon == std::string::npos)
        throw ModelError("", "--grid expects a..b:step, got '" + s + "'");
    const long long a = std::stoll(s.substr(0, dots));
    const long long b = std::stoll(s.substr(dots + 2, colon - dots - 2));
    const long long step = std::stoll(s.substr(colon + 1));
    if (step < 1 || b < a) throw ModelError("", "--grid needs a <= b and step >= 1");
    std::vector<long long> grid;
    for (long long v = a; v <= b; v += step) grid.push_back(v);
    return grid;
}

int exit_code_for(const Verdict& v) {
    return v.kind == Verdict::Kind::AcceptH1 ? kExitH1 : kExitH0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"statistical model checker for networks of priced timed automata"};
    app.require_subcommand(1);

    // check -------------------------------------------------------------
    CommonModelArgs check_args;
    HypArgs check_hyp;
    auto* check = app.add_subcommand("check", "sequential hypothesis test of Pr >= theta");
    add_common(check, check_args);
    add_hypothesis(check, check_hyp, true);

    // estimate ----------------------------------------------------------
    CommonModelArgs est_args;
    double est_eps = 0.05, est_alpha = 0.05;
    std::uint32_t est_batch = 32;
    auto* estimate = app.add_subcommand("estimate", "fixed-sample probability estimation");
    add_common(estimate, est_args);
    estimate->add_option("--eps", est_eps, "approximation half-width")->required();
    estimate->add_option("--alpha", est_alpha, "1 - confidence")->required();
    estimate->add_option("--batch", est_batch, "runs per batch");

    // master ------------------------------------------------------------
    CommonModelArgs master_args;
    HypArgs master_hyp;
    std::string listen_ep = "0.0.0.0:0";
    std::uint32_t master_workers = 1;
    double master_eps = -1, master_alpha_est = 0.05;
    auto* master = app.add_subcommand("master", "run a distributed session");
    add_common(master, master_args);
    master->add_option("--listen", listen_ep, "HOST:PORT to listen on")->required();
    master->add_option("--workers", master_workers, "worker count")->required();
    add_hypothesis(master, master_hyp, false);
    master->add_option("--eps", master_eps, "estimation half-width (estimation mode)");
    master->add_option("--est-alpha", master_alpha_est, "estimation 1 - confidence");

    // worker ------------------------------------------------------------
    std::string connect_ep;
    auto* worker = app.add_subcommand("worker", "serve simulations to a master");
    worker->add_option("--connect", connect_ep, "HOST:PORT of the master")->required();

    // sweep ---------------------------------------------------------------
    CommonModelArgs sweep_args;
    double sweep_eps = 0.05, sweep_alpha = 0.05;
    std::string sweep_out;
    auto* sweep_cmd = app.add_subcommand("sweep", "estimate across the whole parameter space");
    add_common(sweep_cmd, sweep_args);
    sweep_cmd->add_option("--eps", sweep_eps, "approximation half-width")->required();
    sweep_cmd->add_option("--alpha", sweep_alpha, "1 - confidence")->required();
    sweep_cmd->add_option("--out", sweep_out, "CSV output path")->required();

    // nash ----------------------------------------------------------------
    CommonModelArgs nash_args;
    std::uint32_t nash_players = 2;
    std::string nash_grid, nash_out, nash_query;
    std::string nash_dev = "W0", nash_common = "W";
    double nash_eps = 0.01, nash_alpha = 0.05, nash_tol = -1;
    auto* nash = app.add_subcommand("nash", "symmetric Nash equilibrium search on a grid");
    nash->add_option("model", nash_args.model_path, "model document (JSON)")->required();
    nash->add_option("--players", nash_players, "declared player count")->required();
    nash->add_option("--grid", nash_grid, "strategy grid a..b:step")->required();
    nash->add_option("--query-template", nash_query, "player-0 goal query")->required();
    nash->add_option("--eps", nash_eps, "approximation half-width");
    nash->add_option("--alpha", nash_alpha, "1 - confidence");
    nash->add_option("--tol", nash_tol, "equilibrium tolerance (default 2*eps)");
    nash->add_option("--deviant-param", nash_dev, "player-0 strategy constant");
    nash->add_option("--common-param", nash_common, "other players' strategy constant");
    nash->add_option("--out", nash_out, "utility matrix CSV path")->required();
    nash->add_option("--seed", nash_args.seed, "master seed")
        ->each([&](const std::string&) { nash_args.have_seed = true; });
    nash->add_option("--jobs", nash_args.jobs, "local executors");
    nash->add_option("--step-limit", nash_args.step_limit, "steps per run before giving up");

    // topo ----------------------------------------------------------------
    int topo_nodes = 0, topo_random = 0;
    double topo_density = 0.5;
    bool topo_generate = false;
    std::string topo_out;
    std::uint64_t topo_seed = 0;
    bool topo_have_seed = false;
    auto* topo = app.add_subcommand("topo", "generate network topologies");
    topo->add_option("--nodes", topo_nodes, "node count")->required();
    auto* tr = topo->add_option("--random", topo_random, "random topology count");
    topo->add_option("--density", topo_density, "edge probability for --random");
    auto* tg = topo->add_flag("--generate", topo_generate, "recursive heuristic enumeration");
    tr->excludes(tg);
    topo->add_option("--out", topo_out, "output directory")->required();
    topo->add_option("--seed", topo_seed, "seed for --random")
        ->each([&](const std::string&) { topo_have_seed = true; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*check) {
            const HypothesisTask task = to_task(check_hyp);
            const auto pm = parse_model_file(check_args.model_path);
            const auto assignment = parse_params(pm, check_args.params);
            const Network net = instantiate(pm, assignment);
            const Formula f = parse_query(net, check_args.query);
            const std::uint64_t seed = pick_seed(check_args.seed, check_args.have_seed);
            LocalRunConfig cfg{check_args.jobs, check_hyp.batch, check_hyp.buffer, seed,
                               check_hyp.safe_bounds, check_args.step_limit};
            print_stamp();
            const Verdict v = run_hypothesis(net, f, task, cfg);
            std::cout << verdict_record(v, seed) << "\n";
            return exit_code_for(v);
        }
        if (*estimate) {
            EstimationTask task{est_eps, est_alpha};
            task.validate();
            const auto pm = parse_model_file(est_args.model_path);
            const auto assignment = parse_params(pm, est_args.params);
            const Network net = instantiate(pm, assignment);
            const Formula f = parse_query(net, est_args.query);
            const std::uint64_t seed = pick_seed(est_args.seed, est_args.have_seed);
            LocalRunConfig cfg{est_args.jobs, est_batch, 4, seed, false, est_args.step_limit};
            print_stamp();
            const Verdict v = run_estimation(net, f, task, cfg);
            std::cout << verdict_record(v, seed) << "\n";
            return kExitH0;
        }
        if (*master) {
            const bool estimating = master_eps >= 0;
            const auto pm = parse_model_file(master_args.model_path);
            const auto assignment = parse_params(pm, master_args.params);
            const ParametrizedModel concrete = apply_assignment(pm, assignment);
            {
                // Validate locally before involving workers.
                const Network net = instantiate(concrete, {});
                parse_query(net, master_args.query);
            }
            const std::uint64_t seed = pick_seed(master_args.seed, master_args.have_seed);
            MasterOptions opt;
            opt.cfg = DistConfig{master_workers, master_hyp.batch, master_hyp.buffer, seed,
                                 master_hyp.safe_bounds};
            opt.model_text = serialize_model(concrete);
            opt.query = master_args.query;
            opt.step_limit = master_args.step_limit;
            if (estimating) {
                EstimationTask t{master_eps, master_alpha_est};
                t.validate();
                opt.estimation = t;
            } else {
                opt.hypothesis = to_task(master_hyp);
            }
            auto [host, port] = parse_endpoint(listen_ep);
            TcpListener listener(host, port);
            std::cerr << "listening on port " << listener.port() << " for " << master_workers
                      << " worker(s)\n";
            print_stamp();
            const Verdict v = master_session(listener, opt);
            std::cout << verdict_record(v, seed) << "\n";
            return estimating ? kExitH0 : exit_code_for(v);
        }
        if (*worker) {
            auto [host, port] = parse_endpoint(connect_ep);
            worker_loop(TcpConn::connect_to(host, port));
            return kExitH0;
        }
        if (*sweep_cmd) {
            EstimationTask task{sweep_eps, sweep_alpha};
            task.validate();
            const auto pm = parse_model_file(sweep_args.model_path);
            const std::uint64_t seed = pick_seed(sweep_args.seed, sweep_args.have_seed);
            SweepConfig cfg{sweep_args.jobs, seed, 32, sweep_args.step_limit};
            const SweepResult result = sweep(pm, sweep_args.query, task, cfg);
            std::ofstream out(sweep_out, std::ios::binary);
            if (!out) throw RunError("cannot open output file '" + sweep_out + "'");
            write_sweep_csv(out, result);
            print_stamp();
            std::cout << "sweep rows=" << result.rows.size() << " out=" << sweep_out
                      << " seed=" << seed << "\n";
            return kExitH0;
        }
        if (*nash) {
            if (nash_players < 2) throw ModelError("", "--players must be >= 2");
            SymmetricGame game;
            game.pm = parse_model_file(nash_args.model_path);
            game.deviant_param = nash_dev;
            game.common_param = nash_common;
            game.grid = parse_grid(nash_grid);
            game.query = nash_query;
            game.task = EstimationTask{nash_eps, nash_alpha};
            game.task.validate();
            const std::uint64_t seed = pick_seed(nash_args.seed, nash_args.have_seed);
            SweepConfig cfg{nash_args.jobs, seed, 32, nash_args.step_limit};
            const UtilityMatrix um = utility_matrix(game, seed, cfg);
            const double tol = nash_tol >= 0 ? nash_tol : 2 * nash_eps;
            const NashResult nr = find_nash(um, tol);
            std::ofstream out(nash_out, std::ios::binary);
            if (!out) throw RunError("cannot open output file '" + nash_out + "'");
            write_utility_csv(out, um);
            print_stamp();
            std::cout << "players=" << nash_players << " " << nash_summary(nr)
                      << " tol=" << tol << " seed=" << seed << "\n";
            return kExitH0;
        }
        if (*topo) {
            if (!topo_generate && topo_random < 1)
                throw ModelError("", "choose --random COUNT or --generate");
            std::filesystem::create_directories(topo_out);
            std::vector<Topology> ts;
            int duplicates = 0;
            const std::uint64_t seed = pick_seed(topo_seed, topo_have_seed);
            if (topo_generate) {
                ts = generate_topologies(topo_nodes);
            } else {
                auto r = random_topologies(topo_nodes, topo_random, topo_density, seed);
                ts = std::move(r.topologies);
                duplicates = r.duplicates;
            }
            for (std::size_t i = 0; i < ts.size(); ++i) {
                char name[32];
                std::snprintf(name, sizeof name, "topo_%05zu.txt", i);
                std::ofstream out(std::filesystem::path(topo_out) / name, std::ios::binary);
                if (!out) throw RunError("cannot write into '" + topo_out + "'");
                write_topology(out, ts[i]);
            }
            print_stamp();
            std::cout << "topologies=" << ts.size();
            if (!topo_generate) std::cout << " duplicates=" << duplicates << " seed=" << seed;
            std::cout << " out=" << topo_out << "\n";
            return kExitH0;
        }
    } catch (const TaskError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const QueryError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const ExprError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitUsage;
}
