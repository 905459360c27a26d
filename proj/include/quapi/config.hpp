// config.hpp: JSON run configuration
//
//   {
//     "system":   { "delta": 1, "sigma1": "sx", "sigma2": "sz", "rho0": "up" },
//     "baths":    { "bath1": { "gamma": 0.0625, "omega_c": 10, "temperature": 0.2 },
//                   "bath2": { ... } },
//     "numerics": { "dt": 0.3, "memory": 4, "t_max": 15 },
//     "engine":   "two-bath",
//     "output":   { "directory": "out", "stem": "run" }
//   }
//
// Optional blocks: "grid" (sweeps), "oracle" (engine comparison policy) and
// "metadata" (ignored on input, so a run's metadata file is itself a config).
// Unknown keys anywhere are errors.

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "quapi/kernels.hpp"
#include "quapi/model.hpp"
#include "quapi/propagator.hpp"

namespace quapi {

enum class EngineChoice { TwoBath, SingleBath, BruteForce };

const char* to_string(EngineChoice e);

struct OutputConfig {
    std::string directory{"."};
    std::string stem{"run"};
};

// Sweep grid: either explicit dt values or tau_mem values (dt = tau_mem / memory),
// crossed with the memory values.
struct GridConfig {
    std::vector<double> dt;
    std::vector<double> tau_mem;
    std::vector<int> memory;
    double threshold{0.01};                   // convergence threshold on max |dP_z|
    std::optional<std::array<double, 2>> window; // time window for the comparison
};

struct OracleConfig {
    double threshold{1e-10};
    bool enforce{true}; // exit status reflects the threshold
};

struct SimulationRun {
    SystemSpec system;
    std::optional<double> delta; // set when the Hamiltonian came from the "delta" shorthand
    ThermalBath bath1;
    ThermalBath bath2;
    Matrix coupling;    // single-bath engine only
    ThermalBath single; // single-bath engine only
    EngineChoice engine{EngineChoice::TwoBath};
    RunParameters numerics;
    bool deterministic{true};
    OutputConfig output;
    std::optional<GridConfig> grid;
    OracleConfig oracle;
};

// Throws ValidationError naming the offending field.
SimulationRun parse_config(const nlohmann::json& j);
SimulationRun load_config(const std::string& path);

// Fully resolved configuration; parse_config(to_json(run)) reproduces `run` exactly.
nlohmann::json to_json(const SimulationRun& run);

// Operator and matrix notation shared with the config: "sx"/"sy"/"sz"/"id", a
// {"sx": c, ...} combination, or rows of [re, im] pairs (plain numbers allowed).
Matrix parse_operator(const nlohmann::json& j, const std::string& field, Index n = 2);
nlohmann::json matrix_to_json(const Matrix& m);

} // namespace quapi
