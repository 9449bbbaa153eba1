#include <doctest.h>

#include <cmath>
#include <sstream>

#include "fixtures.hpp"
#include "psmc/sweep.hpp"

using namespace psmc;

namespace {

// Coin whose success weight is the swept parameter: p = P/10.
const char* kSweepCoin = R"json({
  "constants": {"P": "#range(1,4)"},
  "templates": [{
    "name": "Coin", "clocks": ["u"],
    "locations": [{"name": "Start", "invariant": [{"clock": "u", "op": "<=", "bound": 0}]},
                  {"name": "Good"}, {"name": "Bad"}],
    "initial": "Start",
    "edges": [
      {"from": "Start", "to": "Good", "weight": "P"},
      {"from": "Start", "to": "Bad", "weight": "10 - P"}
    ]
  }],
  "instances": [{"template": "Coin", "args": []}]
})json";

}  // namespace

TEST_SUITE("sweep") {
    TEST_CASE("one row per assignment, in enumeration order") {
        const ParametrizedModel pm = parse_model(kSweepCoin);
        EstimationTask task{0.05, 0.05};
        SweepConfig cfg{2, 9, 32, kDefaultStepLimit};
        const SweepResult r = sweep(pm, "Pr[time<=1](<> Coin().Good)", task, cfg);
        REQUIRE(r.rows.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(std::get<long long>(r.rows[i].assignment.at("P")) ==
                  static_cast<long long>(i + 1));
            CHECK(r.rows[i].status == "ok");
            CHECK(r.rows[i].runs == 738);
            CHECK(std::abs(r.rows[i].p_hat - 0.1 * static_cast<double>(i + 1)) < 0.06);
        }
    }

    TEST_CASE("an empty parameter space yields the single concrete row") {
        const ParametrizedModel pm = parse_model(fixtures::kExpModel);
        EstimationTask task{0.05, 0.05};
        SweepConfig cfg{1, 4, 32, kDefaultStepLimit};
        const SweepResult r = sweep(pm, fixtures::kExpQuery, task, cfg);
        REQUIRE(r.rows.size() == 1);
        CHECK(r.rows[0].status == "ok");
        CHECK(std::abs(r.rows[0].p_hat - 0.632) < 0.06);
    }

    TEST_CASE("an initially true predicate estimates to one everywhere") {
        const ParametrizedModel pm = parse_model(kSweepCoin);
        EstimationTask task{0.1, 0.05};
        SweepConfig cfg{2, 3, 32, kDefaultStepLimit};
        const SweepResult r = sweep(pm, "Pr[time<=1](<> Coin().Start)", task, cfg);
        for (const auto& row : r.rows) CHECK(row.p_hat == 1.0);
    }

    TEST_CASE("per-assignment failures are recorded and the sweep continues") {
        // P=1 folds the second weight to 0, which instantiation rejects.
        const char* doc = R"json({
          "constants": {"P": "#range(1,2)"},
          "templates": [{
            "name": "C", "clocks": ["u"],
            "locations": [{"name": "S", "invariant": [{"clock": "u", "op": "<=", "bound": 0}]},
                          {"name": "T"}],
            "initial": "S",
            "edges": [{"from": "S", "to": "T", "weight": "P - 1"}]
          }],
          "instances": [{"template": "C", "args": []}]
        })json";
        const ParametrizedModel pm = parse_model(doc);
        EstimationTask task{0.1, 0.05};
        SweepConfig cfg{1, 5, 32, kDefaultStepLimit};
        const SweepResult r = sweep(pm, "Pr[time<=1](<> C().T)", task, cfg);
        REQUIRE(r.rows.size() == 2);
        CHECK(r.rows[0].status.find("error") == 0);
        CHECK(r.rows[1].status == "ok");
        CHECK(r.rows[1].p_hat == 1.0);
    }

    TEST_CASE("csv output shape and ranked ordering") {
        const ParametrizedModel pm = parse_model(kSweepCoin);
        EstimationTask task{0.1, 0.05};
        SweepConfig cfg{2, 9, 32, kDefaultStepLimit};
        const SweepResult r = sweep(pm, "Pr[time<=1](<> Coin().Good)", task, cfg);

        std::ostringstream plain;
        write_sweep_csv(plain, r);
        std::istringstream in(plain.str());
        std::string header;
        std::getline(in, header);
        CHECK(header == "P,p_hat,eps,alpha,runs,wall_ms,status");
        int lines = 0;
        for (std::string line; std::getline(in, line);) ++lines;
        CHECK(lines == 4);

        std::ostringstream ranked;
        write_sweep_csv(ranked, r, true);
        std::istringstream rin(ranked.str());
        std::getline(rin, header);
        CHECK(header == "order,P,p_hat,eps,alpha,runs,wall_ms,status");
        double prev = 2.0;
        for (std::string line; std::getline(rin, line);) {
            const auto c1 = line.find(',');
            const auto c2 = line.find(',', c1 + 1);
            const auto c3 = line.find(',', c2 + 1);
            const double p = std::stod(line.substr(c2 + 1, c3 - c2 - 1));
            CHECK(p <= prev);
            prev = p;
        }
    }

    TEST_CASE("utility matrix matches the closed form on a coarse grid") {
        SymmetricGame game;
        game.pm = parse_model(fixtures::kSlotGame);
        game.deviant_param = "W0";
        game.common_param = "W";
        game.grid = {3, 7};
        game.query = fixtures::kSlotGameQuery;
        game.task = EstimationTask{0.05, 0.05};
        SweepConfig cfg{2, 12, 32, kDefaultStepLimit};
        const UtilityMatrix um = utility_matrix(game, 12, cfg);
        REQUIRE(um.u.size() == 2);
        auto closed = [](long long dev, long long common) {
            const double pp = static_cast<double>(dev) / 10.0;
            const double p = static_cast<double>(common) / 10.0;
            return 1.0 - std::pow(1.0 - pp * (1.0 - p), 3.0);
        };
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) {
                CHECK(um.u[i][j] >= 0.0);
                CHECK(um.u[i][j] <= 1.0);
                CHECK(std::abs(um.u[i][j] - closed(um.grid[i], um.grid[j])) < 0.08);
            }

        // Determinism: the same seed reproduces every cell.
        const UtilityMatrix again = utility_matrix(game, 12, cfg);
        CHECK(again.u == um.u);

        // The diagonal slice is exactly the diagonal.
        const auto diag = um.diagonal();
        CHECK(diag[0] == um.u[0][0]);
        CHECK(diag[1] == um.u[1][1]);
    }

    TEST_CASE("find_nash on hand matrices") {
        UtilityMatrix um;
        um.grid = {1, 2, 3};
        um.u = {{0.9, 0.1, 0.1}, {0.1, 0.9, 0.1}, {0.1, 0.1, 0.9}};
        const NashResult all = find_nash(um, 0.0);
        CHECK(all.equilibria == std::vector<long long>{1, 2, 3});

        um.u = {{0.5, 0.8, 0.1}, {0.6, 0.4, 0.1}, {0.1, 0.1, 0.2}};
        const NashResult some = find_nash(um, 0.0);
        CHECK(some.equilibria == std::vector<long long>{3});
        CHECK(some.optimum == 1);  // diagonal 0.5, 0.4, 0.2

        const NashResult lax = find_nash(um, 1.0);
        CHECK(lax.equilibria == std::vector<long long>{1, 2, 3});
    }

    TEST_CASE("find_nash is invariant under constant shifts and relabelings") {
        UtilityMatrix um;
        um.grid = {2, 4, 6, 8};
        um.u = {{0.2, 0.3, 0.1, 0.4},
                {0.6, 0.5, 0.2, 0.1},
                {0.1, 0.2, 0.7, 0.2},
                {0.3, 0.1, 0.2, 0.3}};
        const NashResult base = find_nash(um, 0.05);

        UtilityMatrix shifted = um;
        for (auto& row : shifted.u)
            for (auto& v : row) v += 0.17;
        CHECK(find_nash(shifted, 0.05).equilibria == base.equilibria);
        CHECK(find_nash(shifted, 0.05).optimum == base.optimum);

        // Reverse the grid consistently in rows, columns and labels.
        UtilityMatrix rev;
        rev.grid = {8, 6, 4, 2};
        rev.u.assign(4, std::vector<double>(4));
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) rev.u[3 - i][3 - j] = um.u[i][j];
        NashResult rbase = find_nash(rev, 0.05);
        std::sort(rbase.equilibria.begin(), rbase.equilibria.end());
        CHECK(rbase.equilibria == base.equilibria);
        CHECK(rbase.optimum == base.optimum);
    }

    TEST_CASE("nash summary formatting") {
        NashResult r;
        r.equilibria = {3, 5};
        r.optimum = 4;
        CHECK(nash_summary(r) == "nash=3,5 opt=4");
        r.equilibria.clear();
        CHECK(nash_summary(r) == "nash=none opt=4");
    }
}
