#include <cmath>
#include <string>

#include <doctest.h>

#include "quapi/config.hpp"
#include "quapi/errors.hpp"

using namespace quapi;
using nlohmann::json;

namespace {

json fig2() {
    return json::parse(R"({
      "system":   { "delta": 1, "sigma1": "sx", "sigma2": "sz", "rho0": "up" },
      "baths":    { "bath1": { "gamma": 0.0625, "omega_c": 10, "temperature": 0.2 },
                    "bath2": { "gamma": 0.0625, "omega_c": 10, "temperature": 0.2 } },
      "numerics": { "dt": 0.6, "memory": 6, "t_max": 30 },
      "engine":   "two-bath",
      "output":   { "directory": "out", "stem": "fig2" }
    })");
}

std::string error_of(const json& j) {
    try {
        parse_config(j);
    } catch (const ValidationError& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_SUITE("config") {

TEST_CASE("parses the two-bath example") {
    const SimulationRun run = parse_config(fig2());
    CHECK(run.engine == EngineChoice::TwoBath);
    CHECK(run.numerics.dt == 0.6);
    CHECK(run.numerics.memory == 6);
    CHECK(run.numerics.total_steps() == 50);
    CHECK(run.system.hamiltonian.isApprox(0.5 * pauli::sigma_x()));
    CHECK(run.system.sigma1.isApprox(pauli::sigma_x()));
    CHECK(run.system.rho0(0, 0) == Complex(1.0));
    CHECK(run.bath1.temperature == 0.2);
    CHECK(run.output.stem == "fig2");
    CHECK(run.deterministic);
}

TEST_CASE("round trip through JSON is exact") {
    json j = fig2();
    j["numerics"]["quadrature"] = {{"relative_tolerance", 1e-9}};
    j["baths"]["bath2"] = {{"tabulated", {{"omega", {0.5, 1.0, 2.0}}, {"value", {0.01, 0.02, 0.0}}}}, {"temperature", 2.0}};
    const SimulationRun a = parse_config(j);
    const json echoed = to_json(a);
    const SimulationRun b = parse_config(echoed);
    CHECK(to_json(b) == echoed);
    CHECK(b.numerics.quadrature.relative_tolerance == 1e-9);
    // metadata blocks are ignored on input
    json with_meta = echoed;
    with_meta["metadata"] = {{"wall_time_s", 1.0}};
    CHECK(to_json(parse_config(with_meta)) == echoed);
}

TEST_CASE("invalid values name their field") {
    json j = fig2();
    j["numerics"]["dt"] = 0.0;
    CHECK(error_of(j).find("dt") != std::string::npos);

    j = fig2();
    j["numerics"]["memory"] = 0;
    CHECK(error_of(j).find("memory") != std::string::npos);

    j = fig2();
    j["baths"]["bath1"]["temperature"] = -1.0;
    CHECK(error_of(j).find("temperature") != std::string::npos);

    j = fig2();
    j["engine"] = "fast";
    CHECK(error_of(j).find("engine") != std::string::npos);
}

TEST_CASE("unknown keys are errors") {
    json j = fig2();
    j["numerics"]["dT"] = 0.3;
    CHECK(error_of(j).find("dT") != std::string::npos);
    j = fig2();
    j["extra"] = 1;
    CHECK(error_of(j).find("extra") != std::string::npos);
}

TEST_CASE("two-bath configs must satisfy the dephasing condition") {
    json j = fig2();
    j["system"]["sigma1"] = "sz";
    CHECK_THROWS_AS(parse_config(j), DephasingConditionError);
}

TEST_CASE("single-bath configs take a coupling operator") {
    json j = fig2();
    j["engine"] = "single-bath";
    j["baths"] = {{"single", {{"gamma", 0.125}, {"omega_c", 10}, {"temperature", 0.2}}}};
    j["system"] = {{"delta", 1}, {"coupling", {{"sz", std::sqrt(0.5)}, {"sx", std::sqrt(0.5)}}}, {"rho0", "up"}};
    const SimulationRun run = parse_config(j);
    CHECK(run.engine == EngineChoice::SingleBath);
    CHECK(run.coupling.isApprox(std::sqrt(0.5) * (pauli::sigma_z() + pauli::sigma_x())));

    j["system"].erase("coupling");
    CHECK_THROWS_AS(parse_config(j), ValidationError);
}

TEST_CASE("operator notation") {
    CHECK(parse_operator("sy", "op").isApprox(pauli::sigma_y()));
    CHECK(parse_operator(json{{"sz", 2.0}, {"id", 1.0}}, "op").isApprox(2.0 * pauli::sigma_z() + pauli::identity()));
    const json rows = json::parse("[[[1,0],[0,-1]],[[0,1],0]]");
    const Matrix m = parse_operator(rows, "op");
    CHECK(m(0, 1) == Complex(0.0, -1.0));
    CHECK(m(1, 0) == Complex(0.0, 1.0));
    CHECK(parse_operator(matrix_to_json(m), "op") == m);
    CHECK_THROWS_AS(parse_operator("sw", "op"), ValidationError);
    CHECK_THROWS_AS(parse_operator(json::parse("[[1,2]]"), "op"), ValidationError);
}

TEST_CASE("grid block") {
    json j = fig2();
    j["grid"] = {{"tau_mem", {0.6, 1.2}}, {"memory", {3, 6}}, {"window", {11, 15}}};
    const SimulationRun run = parse_config(j);
    REQUIRE(run.grid);
    CHECK(run.grid->tau_mem.size() == 2);
    CHECK(run.grid->memory == std::vector<int>{3, 6});
    CHECK((*run.grid->window)[0] == 11.0);

    j["grid"]["dt"] = {0.3};
    CHECK_THROWS_AS(parse_config(j), ValidationError);
}

}
