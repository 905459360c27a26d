// commands.cpp: run, sweep, oracle, fit and report

#include "quapi/commands.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <unistd.h>

#include "quapi/errors.hpp"
#include "quapi/tensor_buffer.hpp"

namespace quapi {

namespace fs = std::filesystem;
using nlohmann::json;

int guarded(const std::function<int()>& body, std::ostream& log) {
    try {
        return body();
    } catch (const ValidationError& e) {
        log << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const json::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const NumericalError& e) {
        log << "error: " << e.what() << " (achieved error " << e.achieved_error() << ")\n";
        return kExitNumerical;
    } catch (const ResourceLimitError& e) {
        log << "error: " << e.what() << '\n';
        return kExitResource;
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kExitOther;
    }
}

void write_file_atomic(const std::string& path, const std::function<void(std::ostream&)>& writer) {
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        writer(os);
        os.flush();
        if (!os) {
            os.close();
            fs::remove(tmp);
            throw std::runtime_error("write to '" + tmp.string() + "' failed");
        }
    }
    fs::rename(tmp, target);
}

// ------------------------------ engines ---------------------------------------

void check_resources(const SimulationRun& run) {
    const auto& p = run.numerics;
    const int n = static_cast<int>(run.system.dimension());
    switch (run.engine) {
    case EngineChoice::TwoBath: {
        const std::size_t bytes = two_bath_tensor_bytes(n, p.memory);
        if (bytes > p.memory_limit_bytes) {
            std::ostringstream os;
            os << "two-bath run with memory " << p.memory << " needs " << bytes << " bytes of tensor storage, limit "
               << p.memory_limit_bytes;
            throw ResourceLimitError(os.str());
        }
        break;
    }
    case EngineChoice::SingleBath: {
        const double bytes = std::pow(static_cast<double>(n * n), p.memory + 1) * sizeof(Complex);
        if (bytes > static_cast<double>(p.memory_limit_bytes)) {
            std::ostringstream os;
            os << "single-bath run with memory " << p.memory << " needs " << bytes << " bytes, limit "
               << p.memory_limit_bytes;
            throw ResourceLimitError(os.str());
        }
        break;
    }
    case EngineChoice::BruteForce: {
        const double paths = std::pow(static_cast<double>(n), 4.0 * p.total_steps());
        if (paths > kBruteForcePathCap) {
            std::ostringstream os;
            os << "brute force over " << p.total_steps() << " steps needs " << paths << " paths, cap "
               << kBruteForcePathCap;
            throw ResourceLimitError(os.str());
        }
        break;
    }
    }
}

Trajectory execute(const SimulationRun& run) {
    check_resources(run);
    RunParameters p = run.numerics;
    if (run.deterministic) p.exec.workers = 1;
    Trajectory traj;
    switch (run.engine) {
    case EngineChoice::TwoBath: traj = evolve_two_bath(run.system, run.bath1, run.bath2, p); break;
    case EngineChoice::SingleBath:
        traj = evolve_single_bath(run.system.hamiltonian, run.coupling, run.system.rho0, run.single, p);
        break;
    case EngineChoice::BruteForce: {
        const Trajectory full = brute_force(run.system, run.bath1, run.bath2, p.dt, p.total_steps(), p.quadrature);
        traj.meta = full.meta;
        for (std::size_t k = 0; k < full.size(); ++k) {
            if (k % static_cast<std::size_t>(p.stride) == 0) traj.push(full.times[k], full.rho[k]);
        }
        break;
    }
    }
    traj.meta.memory = run.engine == EngineChoice::BruteForce ? 0 : p.memory;
    return traj;
}

// ------------------------------ JSON ------------------------------------------

json to_json(const FitResult& fit) {
    return {
        {"amplitude", fit.amplitude}, {"rate", fit.rate},
        {"frequency", fit.frequency}, {"phase", fit.phase},
        {"offset", fit.offset},       {"residual_rms", fit.residual_rms},
        {"window", {fit.t_min, fit.t_max}}, {"iterations", fit.iterations},
    };
}

json to_json(const ConvergenceReport& report) {
    json groups = json::array();
    for (const auto& g : report.groups) {
        groups.push_back({{"tau_mem", g.tau_mem}, {"runs", g.runs}, {"max_deviation", g.max_deviation}});
    }
    return {
        {"groups", groups},
        {"inter_group_deviation", report.inter_group_deviation},
        {"threshold", report.threshold},
        {"converged", report.converged},
        {"window", {report.t_min, report.t_max}},
        {"grid_points", report.grid_points},
    };
}

namespace {

SimulationRun load_with_overrides(const CommandOptions& opt) {
    if (opt.config.empty()) throw ValidationError("--config is required");
    SimulationRun run = load_config(opt.config);
    if (opt.out) run.output.directory = *opt.out;
    if (opt.deterministic) run.deterministic = true;
    if (opt.workers) {
        if (*opt.workers < 1) throw ValidationError("--workers must be >= 1");
        run.numerics.exec.workers = *opt.workers;
    }
    return run;
}

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

struct RunOutcome {
    Trajectory traj;
    double wall_seconds{0.0};
    std::size_t peak_bytes{0};
};

RunOutcome timed_execute(const SimulationRun& run) {
    reset_tensor_memory_peak();
    const auto start = std::chrono::steady_clock::now();
    RunOutcome out;
    out.traj = execute(run);
    out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.peak_bytes = tensor_memory_stats().peak_bytes;
    return out;
}

std::size_t estimated_bytes(const SimulationRun& run) {
    const int n = static_cast<int>(run.system.dimension());
    switch (run.engine) {
    case EngineChoice::TwoBath: return two_bath_tensor_bytes(n, run.numerics.memory);
    case EngineChoice::SingleBath:
        return static_cast<std::size_t>(std::pow(static_cast<double>(n * n), run.numerics.memory + 1)) * sizeof(Complex);
    case EngineChoice::BruteForce: return 0;
    }
    return 0;
}

// Config echo plus run statistics; valid as a config itself.
json metadata(const SimulationRun& run, const RunOutcome& r, const std::string& csv_name) {
    json j = to_json(run);
    j["metadata"] = {
        {"engine", to_string(run.engine)},
        {"tau_mem", run.engine == EngineChoice::BruteForce ? 0.0 : run.numerics.dt * run.numerics.memory},
        {"steps", run.numerics.total_steps()},
        {"points", r.traj.size()},
        {"wall_time_s", r.wall_seconds},
        {"peak_tensor_bytes", r.peak_bytes},
        {"estimated_tensor_bytes", estimated_bytes(run)},
        {"max_trace_deviation", r.traj.max_trace_deviation()},
        {"max_hermiticity_defect", r.traj.max_hermiticity_defect()},
        {"trajectory", csv_name},
    };
    return j;
}

void write_json(const std::string& path, const json& j) {
    write_file_atomic(path, [&](std::ostream& os) { os << std::setw(2) << j << '\n'; });
}

void write_run(const SimulationRun& run, const RunOutcome& r, const std::string& stem) {
    const std::string csv = stem + ".csv";
    write_file_atomic(join(run.output.directory, csv), [&](std::ostream& os) { write_trajectory_csv(os, r.traj); });
    write_json(join(run.output.directory, stem + ".meta.json"), metadata(run, r, csv));
}

std::string number_tag(double v) {
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

Trajectory read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return read_trajectory_csv(in);
}

// Picks dt/memory up from a sibling metadata file when one exists.
bool attach_metadata(const std::string& csv_path, Trajectory& traj) {
    fs::path meta = csv_path;
    meta.replace_extension(".meta.json");
    if (!fs::exists(meta)) return false;
    std::ifstream in(meta);
    json j;
    in >> j;
    const SimulationRun run = parse_config(j);
    traj.meta.dt = run.numerics.dt;
    traj.meta.memory = run.engine == EngineChoice::BruteForce ? 0 : run.numerics.memory;
    if (run.engine == EngineChoice::SingleBath) traj.meta.engine = EngineKind::SingleBath;
    if (run.engine == EngineChoice::BruteForce) traj.meta.engine = EngineKind::BruteForce;
    return true;
}

FitOptions fit_options(const CommandOptions& opt) {
    FitOptions f;
    if (opt.channel == "px") {
        f.channel = Channel::Px;
    } else if (opt.channel == "py") {
        f.channel = Channel::Py;
    } else if (opt.channel != "pz") {
        throw ValidationError("--channel must be px, py or pz");
    }
    if (opt.window) {
        const auto& w = *opt.window;
        const auto colon = w.find(':');
        if (colon == std::string::npos) throw ValidationError("--window expects tmin:tmax");
        auto parse = [&](const std::string& s) -> std::optional<double> {
            if (s.empty()) return std::nullopt;
            try {
                std::size_t used = 0;
                const double v = std::stod(s, &used);
                if (used == s.size()) return v;
            } catch (const std::exception&) {
            }
            throw ValidationError("--window: cannot parse '" + s + "'");
        };
        f.t_min = parse(w.substr(0, colon));
        f.t_max = parse(w.substr(colon + 1));
        if (f.t_min && f.t_max && !(*f.t_min < *f.t_max)) throw ValidationError("--window: need tmin < tmax");
    }
    return f;
}

} // namespace

// ------------------------------ commands --------------------------------------

int cmd_run(const CommandOptions& opt, std::ostream& log) {
    const SimulationRun run = load_with_overrides(opt);
    const RunOutcome r = timed_execute(run);
    write_run(run, r, run.output.stem);
    log << "run: " << to_string(run.engine) << ", " << r.traj.size() << " points, "
        << std::setprecision(3) << r.wall_seconds << " s, max trace deviation " << r.traj.max_trace_deviation()
        << " -> " << join(run.output.directory, run.output.stem + ".csv") << '\n';
    if (r.traj.max_trace_deviation() > kTraceFailureThreshold) {
        log << "error: trace deviation " << r.traj.max_trace_deviation() << " exceeds " << kTraceFailureThreshold
            << "; the run is not converged\n";
        return kExitNumerical;
    }
    return kExitOk;
}

int cmd_sweep(const CommandOptions& opt, std::ostream& log) {
    const SimulationRun base = load_with_overrides(opt);
    if (!base.grid) throw ValidationError("config: grid: missing (required by sweep)");
    const auto& g = *base.grid;

    std::vector<SimulationRun> points;
    std::vector<std::string> stems;
    const auto& firsts = g.dt.empty() ? g.tau_mem : g.dt;
    for (double v : firsts) {
        for (int m : g.memory) {
            SimulationRun p = base;
            p.grid.reset();
            p.numerics.memory = m;
            p.numerics.dt = g.dt.empty() ? v / m : v;
            if (!(p.numerics.t_max >= p.numerics.dt)) throw ValidationError("config: grid: dt exceeds numerics.t_max");
            p.output.stem = base.output.stem + "_dt" + number_tag(p.numerics.dt) + "_m" + std::to_string(m);
            points.push_back(p);
            stems.push_back(p.output.stem);
        }
    }
    // Every point is checked before any work so a capped grid fails cleanly.
    for (const auto& p : points) check_resources(p);

    std::vector<Trajectory> trajs;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const RunOutcome r = timed_execute(points[i]);
        log << "sweep: point " << i + 1 << "/" << points.size() << " dt=" << points[i].numerics.dt
            << " memory=" << points[i].numerics.memory << " (" << std::setprecision(3) << r.wall_seconds << " s)\n";
        trajs.push_back(r.traj);
        write_run(points[i], r, stems[i]);
    }

    std::optional<double> t_min, t_max;
    if (g.window) {
        t_min = (*g.window)[0];
        t_max = (*g.window)[1];
    }
    const ConvergenceReport rep = convergence_scan(trajs, g.threshold, t_min, t_max);
    json j = to_json(rep);
    json files = json::array();
    for (std::size_t i = 0; i < points.size(); ++i) {
        files.push_back({{"trajectory", stems[i] + ".csv"},
                         {"dt", points[i].numerics.dt},
                         {"memory", points[i].numerics.memory},
                         {"tau_mem", points[i].numerics.dt * points[i].numerics.memory}});
    }
    j["runs"] = files;
    write_json(join(base.output.directory, base.output.stem + "_convergence.json"), j);
    log << "sweep: " << (rep.converged ? "converged" : "not converged") << " (threshold " << rep.threshold << ")\n";
    return kExitOk;
}

int cmd_oracle(const CommandOptions& opt, std::ostream& log) {
    SimulationRun run = load_with_overrides(opt);
    if (run.engine == EngineChoice::SingleBath) throw ValidationError("config: engine: oracle compares two-bath runs");
    SimulationRun bf = run;
    bf.engine = EngineChoice::BruteForce;
    bf.numerics.stride = 1;
    run.engine = EngineChoice::TwoBath;
    run.numerics.stride = 1;
    check_resources(bf);
    check_resources(run);

    const Trajectory exact = execute(bf);
    const Trajectory engine = execute(run);
    json points = json::array();
    double worst = 0.0;
    for (std::size_t k = 0; k < exact.size() && k < engine.size(); ++k) {
        const double d = (exact.rho[k] - engine.rho[k]).cwiseAbs().maxCoeff();
        worst = std::max(worst, d);
        points.push_back({{"t", exact.times[k]}, {"max_deviation", d}});
    }
    const bool pass = worst <= run.oracle.threshold;
    const json j = {
        {"steps", run.numerics.total_steps()},
        {"memory", run.numerics.memory},
        {"threshold", run.oracle.threshold},
        {"enforce", run.oracle.enforce},
        {"max_deviation", worst},
        {"pass", pass},
        {"points", points},
    };
    write_json(join(run.output.directory, run.output.stem + "_oracle.json"), j);
    log << "oracle: max deviation " << worst << (pass ? " <= " : " > ") << run.oracle.threshold << '\n';
    return pass || !run.oracle.enforce ? kExitOk : kExitNumerical;
}

int cmd_fit(const CommandOptions& opt, std::ostream& log) {
    if (opt.inputs.empty()) throw ValidationError("fit: no trajectory CSV given");
    const FitOptions f = fit_options(opt);
    for (const auto& path : opt.inputs) {
        const Trajectory traj = read_csv_file(path);
        if (traj.dimension() != 2) throw ValidationError("fit: '" + path + "' is not a two-level trajectory");
        const FitResult fit = fit_damped_cosine(traj, f);
        const json j = to_json(fit);
        const fs::path p(path);
        const std::string dir = opt.out ? *opt.out : p.parent_path().string();
        write_json(join(dir.empty() ? "." : dir, p.stem().string() + ".fit.json"), j);
        log << "fit: " << path << ": rate " << fit.rate << ", frequency " << fit.frequency << ", residual rms "
            << fit.residual_rms << '\n';
    }
    return kExitOk;
}

int cmd_report(const CommandOptions& opt, std::ostream& log) {
    if (opt.inputs.empty()) throw ValidationError("report: no trajectory CSV given");
    std::ostringstream text;
    text << std::left << std::setw(40) << "trajectory" << std::setw(13) << "engine" << std::setw(9) << "dt"
         << std::setw(8) << "memory" << std::setw(9) << "points" << std::setw(13) << "trace_dev" << std::setw(11)
         << "rate" << "frequency\n";
    std::vector<Trajectory> scanned;
    for (const auto& path : opt.inputs) {
        Trajectory traj = read_csv_file(path);
        const bool has_meta = attach_metadata(path, traj);
        text << std::setw(40) << fs::path(path).filename().string() << std::setw(13)
             << (has_meta ? to_string(traj.meta.engine) : "?") << std::setw(9)
             << (has_meta ? number_tag(traj.meta.dt) : "?") << std::setw(8)
             << (has_meta ? std::to_string(traj.meta.memory) : "?") << std::setw(9) << traj.size() << std::setw(13)
             << number_tag(traj.max_trace_deviation());
        std::string rate = "-", freq = "-";
        if (traj.dimension() == 2) {
            try {
                const FitResult fit = fit_damped_cosine(traj);
                rate = number_tag(fit.rate);
                freq = number_tag(fit.frequency);
            } catch (const std::exception&) {
            }
        }
        text << std::setw(11) << rate << freq << '\n';
        if (has_meta && traj.meta.memory > 0) scanned.push_back(traj);
    }
    if (scanned.size() >= 2) {
        const ConvergenceReport rep = convergence_scan(scanned);
        text << "\nconvergence over t in [" << rep.t_min << ", " << rep.t_max << "]\n";
        for (const auto& g : rep.groups) {
            text << "  tau_mem " << std::setw(8) << number_tag(g.tau_mem) << " runs " << g.runs.size()
                 << "  max |dPz| " << g.max_deviation << '\n';
        }
        for (std::size_t k = 0; k < rep.inter_group_deviation.size(); ++k) {
            text << "  tau_mem " << number_tag(rep.groups[k].tau_mem) << " -> " << number_tag(rep.groups[k + 1].tau_mem)
                 << "  max |dPz| " << rep.inter_group_deviation[k] << '\n';
        }
        text << "  " << (rep.converged ? "converged" : "not converged") << " (threshold " << rep.threshold << ")\n";
    }
    log << text.str();
    if (opt.out) {
        const std::string body = text.str();
        write_file_atomic(join(*opt.out, "report.txt"), [&](std::ostream& os) { os << body; });
    }
    return kExitOk;
}

} // namespace quapi
