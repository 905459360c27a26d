// commands.hpp: Subcommands behind the quapi executable
//
// Exit codes: 0 success, 2 invalid configuration or input, 3 numerical failure
// (quadrature, fit, or an oracle comparison above its enforced threshold),
// 4 resource cap exceeded, 1 anything else.

#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "quapi/analysis.hpp"
#include "quapi/config.hpp"

namespace quapi {

enum ExitCode : int {
    kExitOk = 0,
    kExitOther = 1,
    kExitConfig = 2,
    kExitNumerical = 3,
    kExitResource = 4,
};

// `run` writes its outputs and then exits 3 when |Tr rho - 1| exceeds this anywhere.
inline constexpr double kTraceFailureThreshold = 1e-2;

struct CommandOptions {
    std::string config;                  // run, sweep, oracle
    std::vector<std::string> inputs;     // fit, report: trajectory CSV files
    std::optional<std::string> out;      // overrides output.directory
    bool deterministic{false};           // force deterministic mode
    std::optional<int> workers;          // overrides numerics.workers
    std::optional<std::string> window;   // fit: "tmin:tmax", either side may be empty
    std::string channel{"pz"};           // fit: px, py or pz
};

int cmd_run(const CommandOptions& opt, std::ostream& log);
int cmd_sweep(const CommandOptions& opt, std::ostream& log);
int cmd_oracle(const CommandOptions& opt, std::ostream& log);
int cmd_fit(const CommandOptions& opt, std::ostream& log);
int cmd_report(const CommandOptions& opt, std::ostream& log);

// Runs `body`, mapping library exceptions to exit codes and printing them to `log`.
int guarded(const std::function<int()>& body, std::ostream& log);

// Runs the configured engine; throws ResourceLimitError before any work if a cap
// would be exceeded.
Trajectory execute(const SimulationRun& run);
void check_resources(const SimulationRun& run);

nlohmann::json to_json(const FitResult& fit);
nlohmann::json to_json(const ConvergenceReport& report);

// Writes through a temporary file in the same directory and renames it into place.
void write_file_atomic(const std::string& path, const std::function<void(std::ostream&)>& writer);

} // namespace quapi
