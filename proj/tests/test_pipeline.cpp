#include <doctest.h>

#include "morseflow/errors.hpp"
#include "morseflow/pipeline.hpp"

using namespace morseflow;
using nlohmann::json;

namespace {

json base()
{
    return {{"morseflow_schema", 1}};
}

bool check_passed(const json& report, const std::string& name)
{
    for (const auto& c : report["checks"])
        if (c["name"] == name) return c["passed"].get<bool>();
    FAIL("check " << name << " missing from the report");
    return false;
}

}  // namespace

TEST_CASE("config parsing is strict")
{
    CHECK_THROWS_AS(parse_config(json::object()), ConfigError);
    CHECK_THROWS_AS(parse_config({{"morseflow_schema", 2}}), ConfigError);

    auto j = base();
    j["bogus"] = 1;
    CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("bogus"), ConfigError);

    j = base();
    j["manifold"] = {{"catalog", "torus(2,1)"}};
    CHECK_THROWS_AS(parse_config(j), ConfigError);  // function missing
    j["function"] = "x3";
    j["flow"] = {{"r_shot", 1e-3}};
    CHECK_THROWS_WITH_AS(parse_config(j), doctest::Contains("r_shot"), ConfigError);
    j.erase("flow");
    j["solver"] = {{"budget", 50}};
    CHECK_THROWS_AS(parse_config(j), ConfigError);
    j.erase("solver");
    j["manifold"] = {{"catalog", "klein(2)"}};
    CHECK_THROWS_AS(parse_config(j), ConfigError);

    j = base();
    j["manifold"] = {{"ambient_dim", 2}, {"constraints", {"x1^2 + x2^2 - 1"}}};
    j["function"] = "x2";
    j["checks"] = {{"extended_complex", true}};
    CHECK_THROWS_AS(parse_config(j), ConfigError);  // no ring and no classes

    j = base();
    j["obstruction"] = {{{"k", 3}, {"delta", json::array({2})}, {"delta_prime", 5}}};
    const auto c = parse_config(j);
    REQUIRE(c.obstruction.size() == 1);
    CHECK(c.obstruction[0].delta == std::vector<std::int64_t>{2});
    CHECK(c.obstruction[0].delta_prime == std::vector<std::int64_t>{5});
    CHECK(c.resolution == 4096);
    CHECK(c.seed == 1);
}

TEST_CASE("tilted torus end to end")
{
    auto j = base();
    j["manifold"] = {{"catalog", "torus(2,1)"}};
    j["function"] = "x3 + 0.05*x1";
    j["checks"] = {{"duality", true}, {"extended_complex", true}};
    const auto r = run_pipeline(parse_config(j));
    CHECK(r.passed);
    CHECK(r.report["critical_points"].size() == 4);
    CHECK(r.report["index_counts"] == json::array({1, 2, 1}));
    const auto& h = r.report["complex"]["Z/2"]["homology"];
    for (int k = 0; k < 3; ++k) CHECK(h[k]["free_rank"] == (k == 1 ? 2 : 1));
    for (const auto& o : r.report["orbits"]) {
        CHECK(o["count"] == 2);
        CHECK(o["signed_count"] == 0);
    }
    CHECK(r.orbits.size() == 8);
    CHECK(check_passed(r.report, "duality_transpose"));
    CHECK(r.report["tolerances"]["arrival_radius"] == 1e-3);
}

TEST_CASE("custom manifold with a wrong reference fails its checks without erroring")
{
    auto j = base();
    j["manifold"] = {{"ambient_dim", 2}, {"constraints", {"x1^2 + x2^2 - 1"}}, {"reference_betti", {1, 0}}};
    j["function"] = "x2";
    const auto r = run_pipeline(parse_config(j));
    CHECK_FALSE(r.passed);
    CHECK_FALSE(check_passed(r.report, "homology_matches_reference_betti"));
    CHECK(check_passed(r.report, "d_squared_zero"));
}

TEST_CASE("degenerate function surfaces a staged error")
{
    auto j = base();
    j["manifold"] = {{"catalog", "sphere(2)"}};
    j["function"] = "x3^2";
    try {
        run_pipeline(parse_config(j));
        FAIL("expected an error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "critical-points");
        CHECK(e.kind() == "degenerate-critical-point");
    }
}

TEST_CASE("obstruction-only config delivers a verdict")
{
    auto j = base();
    j["obstruction"] = {{{"k", 2}, {"delta", 0}, {"delta_prime", 1}}};
    const auto r = run_pipeline(parse_config(j));
    CHECK(r.passed);
    CHECK(r.report["obstruction"][0]["verdict"] == "OBSTRUCTED");
    CHECK(r.report["obstruction"][0]["note"] == "conservative necessary condition via Im(J^0)");

    j["obstruction"] = {{{"k", 9}, {"delta", 0}, {"delta_prime", 1}}};
    CHECK_THROWS_AS(run_pipeline(parse_config(j)), StageError);
}

TEST_CASE("synthetic complexes")
{
    auto j = base();
    j["synthetic_complex"] = {{"ring", "cpn(2)"},
                              {"points",
                               {{{"id", 0}, {"value", 2.0}, {"index", 4}},
                                {{"id", 1}, {"value", 1.0}, {"index", 2}},
                                {{"id", 2}, {"value", 0.0}, {"index", 0}}}},
                              {"classes", {{{"upper", 0}, {"lower", 1}, {"class", "u"}}, {{"upper", 1}, {"lower", 2}, {"class", "u"}}}}};
    auto r = run_pipeline(parse_config(j));
    CHECK(r.passed);
    CHECK(r.report["synthetic_extended_complex"]["complex"]["composites"][0]["value"] == json::array());

    // x1 * x1 != 0 in the sphere(2) ring
    j["synthetic_complex"]["ring"] = "sphere(2)";
    j["synthetic_complex"]["classes"] = {{{"upper", 0}, {"lower", 1}, {"class", "x1"}},
                                         {{"upper", 1}, {"lower", 2}, {"class", "x1"}}};
    r = run_pipeline(parse_config(j));
    CHECK_FALSE(r.passed);
    CHECK_FALSE(check_passed(r.report, "synthetic_extended_d_squared_zero"));
}

TEST_CASE("reports are deterministic")
{
    auto j = base();
    j["manifold"] = {{"catalog", "sphere(2)"}};
    j["function"] = "x3";
    j["checks"] = {{"duality", true}, {"extended_complex", true}};
    const auto c = parse_config(j);
    CHECK(run_pipeline(c).report.dump() == run_pipeline(c).report.dump());
}
