#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "psmc/model.hpp"

using namespace psmc;

TEST_SUITE("model") {
    TEST_CASE("minimal model parses to one instance and an empty space") {
        const ParametrizedModel pm = parse_model(fixtures::kMinimal);
        CHECK(pm.templates.size() == 1);
        CHECK(pm.instances.size() == 1);
        const ParameterSpace space = parameter_space(pm);
        CHECK(space.empty());
        CHECK(space.cardinality() == 1);
        const Network net = instantiate(pm, {});
        CHECK(net.instances.size() == 1);
        CHECK(net.instances[0].locations[0].rates[0] == 1);
    }

    TEST_CASE("exp-rate placeholder produces an integer range domain") {
        const ParametrizedModel pm = parse_model(fixtures::kTrainRate);
        const ParameterSpace space = parameter_space(pm);
        REQUIRE(space.entries.size() == 1);
        CHECK(space.entries[0].first == "RATE");
        const auto& dom = std::get<IntRangeDomain>(space.entries[0].second);
        CHECK(dom.lo == 1);
        CHECK(dom.hi == 20);
        CHECK(space.cardinality() == 20);
    }

    TEST_CASE("clock constraints cannot be disjunctive: clocks in data guards are rejected") {
        std::string doc = R"json({
          "templates": [{
            "name": "T", "clocks": ["x"],
            "locations": [{"name": "A", "invariant": [{"clock":"x","op":"<=","bound":5}]},
                          {"name": "B"}],
            "initial": "A",
            "edges": [{"from": "A", "to": "B", "guard_data": "x >= 3 || x <= 1"}]
          }],
          "instances": [{"template": "T", "args": []}]
        })json";
        CHECK_THROWS_WITH_AS(parse_model(doc) /* disjunction of clock bounds */,
                             doctest::Contains("conjunctions of bounds"), ModelError);
    }

    TEST_CASE("semantic errors carry the element path") {
        std::string unknown_clock = R"json({
          "templates": [{
            "name": "T", "clocks": ["x"],
            "locations": [{"name": "A", "invariant": [{"clock":"y","op":"<=","bound":5}]}],
            "initial": "A"
          }],
          "instances": [{"template": "T", "args": []}]
        })json";
        try {
            parse_model(unknown_clock);
            FAIL("expected a semantic error");
        } catch (const ModelError& e) {
            CHECK(e.element_path == "templates.T.locations.A.invariant");
        }
    }

    TEST_CASE("syntax errors carry line and column") {
        try {
            parse_model("{\n  \"constants\": {\n  }");
            FAIL("expected a syntax error");
        } catch (const ModelError& e) {
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }
    }

    TEST_CASE("arity mismatches and bad placeholders are rejected") {
        std::string arity = R"json({
          "templates": [{"name": "T", "params": ["a", "b"],
                         "locations": [{"name": "A"}], "initial": "A"}],
          "instances": [{"template": "T", "args": [1]}]
        })json";
        CHECK_THROWS_AS(parse_model(arity), ModelError);

        std::string bad_range = R"json({
          "constants": {"R": "#range(5,2)"},
          "templates": [{"name": "T", "locations": [{"name": "A"}], "initial": "A"}],
          "instances": [{"template": "T", "args": []}]
        })json";
        CHECK_THROWS_AS(parse_model(bad_range), ModelError);

        std::string dup_clock = R"json({
          "templates": [{"name": "T", "clocks": ["x", "x"],
                         "locations": [{"name": "A"}], "initial": "A"}],
          "instances": [{"template": "T", "args": []}]
        })json";
        CHECK_THROWS_AS(parse_model(dup_clock), ModelError);
    }

    TEST_CASE("matrix domains: cardinalities") {
        ParameterSpace space;
        space.entries.emplace_back("m", MatrixDomain{2, false, false});
        CHECK(space.cardinality() == 16);  // 2^(2*2)

        ParameterSpace ranges;
        ranges.entries.emplace_back("a", IntRangeDomain{1, 20});
        ranges.entries.emplace_back("b", IntRangeDomain{2, 10});
        CHECK(ranges.cardinality() == 180);

        ParameterSpace sym;
        sym.entries.emplace_back("m", MatrixDomain{3, true, true});
        CHECK(sym.cardinality() == 8);  // three free upper-triangle entries
    }

    TEST_CASE("enumeration order and coverage") {
        ParameterSpace space;
        space.entries.emplace_back("r", IntRangeDomain{1, 3});
        auto as = enumerate_assignments(space);
        REQUIRE(as.size() == 3);
        CHECK(std::get<long long>(as[0].at("r")) == 1);
        CHECK(std::get<long long>(as[2].at("r")) == 3);

        ParameterSpace mat;
        mat.entries.emplace_back("m", MatrixDomain{1, false, false});
        auto ms = enumerate_assignments(mat);
        REQUIRE(ms.size() == 2);
        CHECK(std::get<BoolMatrix>(ms[0].at("m")).at(0, 0) == false);
        CHECK(std::get<BoolMatrix>(ms[1].at("m")).at(0, 0) == true);

        // First declared parameter varies slowest.
        ParameterSpace both;
        both.entries.emplace_back("r", IntRangeDomain{1, 2});
        both.entries.emplace_back("b", MatrixDomain{1, false, false});
        auto bs = enumerate_assignments(both);
        REQUIRE(bs.size() == 4);
        CHECK(std::get<long long>(bs[0].at("r")) == 1);
        CHECK(std::get<BoolMatrix>(bs[0].at("b")).at(0, 0) == false);
        CHECK(std::get<long long>(bs[1].at("r")) == 1);
        CHECK(std::get<BoolMatrix>(bs[1].at("b")).at(0, 0) == true);
        CHECK(std::get<long long>(bs[2].at("r")) == 2);
    }

    TEST_CASE("enumeration is guarded against explosion") {
        ParameterSpace space;
        space.entries.emplace_back("m", MatrixDomain{6, false, false});  // 2^36
        CHECK_THROWS_AS(enumerate_assignments(space), ModelError);
    }

    TEST_CASE("all enumerated assignments are distinct and instantiable") {
        const ParametrizedModel pm = parse_model(fixtures::kTrainRate);
        auto as = enumerate_assignments(parameter_space(pm));
        REQUIRE(as.size() == 20);
        std::set<long long> distinct;
        for (const auto& a : as) {
            distinct.insert(std::get<long long>(a.at("RATE")));
            const Network net = instantiate(pm, a);
            CHECK(net.instances.size() == 1);
        }
        CHECK(distinct.size() == 20);
    }

    TEST_CASE("instantiate substitutes exponential rates") {
        const ParametrizedModel pm = parse_model(fixtures::kTrainRate);
        Assignment a;
        a.emplace("RATE", ConstValue{5LL});
        const Network net = instantiate(pm, a);
        const auto& safe = net.instances[0].locations[0];
        CHECK(safe.has_exp);
        CHECK(safe.exp_rate == doctest::Approx(0.2));
    }

    TEST_CASE("instantiate folds matrix guards to literals") {
        std::string doc = R"json({
          "constants": {"can_hear": "#booleanmatrix(3)"},
          "variables": [{"name": "ok", "init": 0, "min": 0, "max": 1}],
          "templates": [{
            "name": "Node", "params": ["x", "y"],
            "locations": [{"name": "L", "exp_rate": [1, 1]}, {"name": "M"}],
            "initial": "L",
            "edges": [{"from": "L", "to": "M", "guard_data": "can_hear[x][y]",
                       "updates": ["ok = 1"]}]
          }],
          "instances": [{"template": "Node", "args": [0, 2]}]
        })json";
        const ParametrizedModel pm = parse_model(doc);
        BoolMatrix m(3);
        m.set(0, 2, true);
        Assignment a;
        a.emplace("can_hear", ConstValue{m});
        const Network net = instantiate(pm, a);
        const auto& edge = net.instances[0].edges[0];
        REQUIRE(edge.guard_data != nullptr);
        CHECK(edge.guard_data->kind == Expr::Kind::Int);
        CHECK(edge.guard_data->value == 1);
    }

    TEST_CASE("identity: empty assignment on a placeholder-free model") {
        const ParametrizedModel pm = parse_model(fixtures::kMinimal);
        CHECK(serialize_model(apply_assignment(pm, {})) == serialize_model(pm));
    }

    TEST_CASE("serialization round-trips") {
        for (const std::string text :
             {std::string(fixtures::kMinimal), std::string(fixtures::kTrainRate),
              std::string(fixtures::kBroadcast), std::string(fixtures::kSlotGame),
              fixtures::bernoulli(9, 1)}) {
            const ParametrizedModel pm = parse_model(text);
            const std::string once = serialize_model(pm);
            const ParametrizedModel back = parse_model(once);
            CHECK(serialize_model(back) == once);
        }
    }

    TEST_CASE("instantiate is pure") {
        const ParametrizedModel pm = parse_model(fixtures::kTrainRate);
        Assignment a;
        a.emplace("RATE", ConstValue{7LL});
        const Network n1 = instantiate(pm, a);
        const Network n2 = instantiate(pm, a);
        CHECK(n1.instances.size() == n2.instances.size());
        CHECK(n1.nclocks == n2.nclocks);
        CHECK(n1.instances[0].locations[0].exp_rate == n2.instances[0].locations[0].exp_rate);
        CHECK(n1.instances[0].edges.size() == n2.instances[0].edges.size());
    }

    TEST_CASE("network invariants: weights >= 1, rates >= 0") {
        std::string zero_weight = R"json({
          "templates": [{
            "name": "T", "clocks": ["u"],
            "locations": [{"name": "A", "invariant": [{"clock":"u","op":"<=","bound":0}]},
                          {"name": "B"}],
            "initial": "A",
            "edges": [{"from": "A", "to": "B", "weight": 0}]
          }],
          "instances": [{"template": "T", "args": []}]
        })json";
        CHECK_THROWS_AS(instantiate(parse_model(zero_weight), {}), ModelError);

        // Weights and rates of every bundled fixture must satisfy the bounds.
        Assignment strategies;
        strategies.emplace("W0", ConstValue{3LL});
        strategies.emplace("W", ConstValue{7LL});
        for (const auto& [text, a] :
             {std::pair<std::string, Assignment>{fixtures::kBroadcast, {}},
              std::pair<std::string, Assignment>{fixtures::kSlotGame, strategies},
              std::pair<std::string, Assignment>{fixtures::bernoulli(3, 2), {}}}) {
            const Network net = instantiate(parse_model(text), a);
            for (const auto& inst : net.instances) {
                for (const auto& e : inst.edges) CHECK(e.weight >= 1);
                for (const auto& l : inst.locations)
                    for (long long r : l.rates) CHECK(r >= 0);
            }
        }
    }

    TEST_CASE("replicated instances expand with index arguments") {
        const ParametrizedModel pm = parse_model(fixtures::kBroadcast);
        const Network net = instantiate(pm, {});
        REQUIRE(net.instances.size() == 3);
        CHECK(net.instances[1].display == "Recv(0)");
        CHECK(net.instances[2].display == "Recv(1)");
        CHECK(net.find_instance("Recv", {1}) == 2);
    }

    TEST_CASE("unbounded locations with initiable edges need exp_rate") {
        std::string doc = R"json({
          "templates": [{
            "name": "T",
            "locations": [{"name": "A"}, {"name": "B"}],
            "initial": "A",
            "edges": [{"from": "A", "to": "B"}]
          }],
          "instances": [{"template": "T", "args": []}]
        })json";
        CHECK_THROWS_AS(instantiate(parse_model(doc), {}), ModelError);
    }

    TEST_CASE("derived constants fold in document order") {
        std::string doc = R"json({
          "constants": {"N": 4, "S": "N * 2 + 1"},
          "templates": [{
            "name": "T", "clocks": ["u"],
            "locations": [{"name": "A", "invariant": [{"clock":"u","op":"<=","bound":"S"}]}],
            "initial": "A"
          }],
          "instances": [{"template": "T", "args": []}]
        })json";
        const Network net = instantiate(parse_model(doc), {});
        CHECK(net.instances[0].locations[0].invariant[0].bound == 9);
    }
}
