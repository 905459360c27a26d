// config.cpp: Parsing and serialization of run configurations

#include "quapi/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "quapi/errors.hpp"

namespace quapi {

using nlohmann::json;

const char* to_string(EngineChoice e) {
    switch (e) {
    case EngineChoice::TwoBath: return "two-bath";
    case EngineChoice::SingleBath: return "single-bath";
    case EngineChoice::BruteForce: return "brute-force";
    }
    return "unknown";
}

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw ValidationError("config: " + field + ": " + what);
}

// Object view that rejects keys it was not asked about.
class Block {
public:
    Block(const json& j, std::string path, std::set<std::string> allowed) : j_(j), path_(std::move(path)) {
        if (!j.is_object()) fail(path_, "expected an object");
        for (const auto& [key, value] : j.items()) {
            (void)value;
            if (!allowed.count(key)) fail(field(key), "unknown key");
        }
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return j_.contains(key); }
    const json& at(const std::string& key) const {
        if (!has(key)) fail(field(key), "missing");
        return j_.at(key);
    }

    double number(const std::string& key) const {
        const auto& v = at(key);
        if (!v.is_number()) fail(field(key), "expected a number");
        return v.get<double>();
    }
    double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    int integer(const std::string& key) const {
        const auto& v = at(key);
        if (!v.is_number_integer()) fail(field(key), "expected an integer");
        return v.get<int>();
    }
    int integer(const std::string& key, int fallback) const { return has(key) ? integer(key) : fallback; }

    bool boolean(const std::string& key, bool fallback) const {
        if (!has(key)) return fallback;
        const auto& v = at(key);
        if (!v.is_boolean()) fail(field(key), "expected true or false");
        return v.get<bool>();
    }

    std::string string(const std::string& key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        const auto& v = at(key);
        if (!v.is_string()) fail(field(key), "expected a string");
        return v.get<std::string>();
    }

private:
    const json& j_;
    std::string path_;
};

Complex parse_entry(const json& e, const std::string& field) {
    if (e.is_number()) return {e.get<double>(), 0.0};
    if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number()) {
        return {e[0].get<double>(), e[1].get<double>()};
    }
    fail(field, "matrix entries must be numbers or [re, im] pairs");
}

Matrix named_operator(const std::string& name, const std::string& field, Index n) {
    if (name == "id") return Matrix::Identity(n, n);
    if (n != 2) fail(field, "named operators other than 'id' need dimension 2");
    if (name == "sx") return pauli::sigma_x();
    if (name == "sy") return pauli::sigma_y();
    if (name == "sz") return pauli::sigma_z();
    fail(field, "unknown operator '" + name + "' (expected sx, sy, sz or id)");
}

std::vector<double> number_list(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) fail(field, "expected a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) fail(field, "expected a non-empty array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

ThermalBath parse_bath(const json& j, const std::string& path) {
    const Block b(j, path, {"gamma", "omega_c", "temperature", "tabulated"});
    ThermalBath bath;
    bath.temperature = b.number("temperature");
    if (!(bath.temperature > 0.0)) fail(b.field("temperature"), "must be > 0");
    if (b.has("tabulated")) {
        if (b.has("gamma") || b.has("omega_c")) fail(path, "give either gamma/omega_c or tabulated, not both");
        const Block t(b.at("tabulated"), b.field("tabulated"), {"omega", "value"});
        Tabulated tab{number_list(t.at("omega"), t.field("omega")), number_list(t.at("value"), t.field("value"))};
        if (tab.omega.size() != tab.value.size()) fail(t.field("value"), "must match omega in length");
        bath.spectral = SpectralDensity(std::move(tab));
    } else {
        const double gamma = b.number("gamma");
        const double wc = b.number("omega_c");
        if (gamma < 0.0) fail(b.field("gamma"), "must be >= 0");
        if (!(wc > 0.0)) fail(b.field("omega_c"), "must be > 0");
        bath.spectral = SpectralDensity(Ohmic{gamma, wc});
    }
    try {
        bath.validate();
    } catch (const ValidationError& e) {
        fail(path, e.what());
    }
    return bath;
}

json bath_to_json(const ThermalBath& bath) {
    json j;
    if (const auto* o = std::get_if<Ohmic>(&bath.spectral.kind())) {
        j["gamma"] = o->gamma;
        j["omega_c"] = o->omega_c;
    } else {
        const auto& t = std::get<Tabulated>(bath.spectral.kind());
        j["tabulated"] = {{"omega", t.omega}, {"value", t.value}};
    }
    j["temperature"] = bath.temperature;
    return j;
}

Matrix parse_state(const json& j, const std::string& field, Index n) {
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        Matrix rho = Matrix::Zero(n, n);
        if (name == "mixed") return Matrix::Identity(n, n) / static_cast<double>(n);
        if (n != 2) fail(field, "'" + name + "' needs dimension 2; give a matrix");
        if (name == "up") {
            rho(0, 0) = 1.0;
            return rho;
        }
        if (name == "down") {
            rho(1, 1) = 1.0;
            return rho;
        }
        fail(field, "unknown state '" + name + "' (expected up, down, mixed)");
    }
    return parse_operator(j, field, n);
}

} // namespace

Matrix parse_operator(const json& j, const std::string& field, Index n) {
    if (j.is_string()) return named_operator(j.get<std::string>(), field, n);
    if (j.is_object()) {
        Matrix m = Matrix::Zero(n, n);
        for (const auto& [key, value] : j.items()) {
            if (!value.is_number()) fail(field + "." + key, "expected a number");
            m += value.get<double>() * named_operator(key, field + "." + key, n);
        }
        return m;
    }
    if (!j.is_array() || j.empty()) fail(field, "expected an operator name, a combination or a matrix");
    const auto rows = static_cast<Index>(j.size());
    Matrix m(rows, rows);
    for (Index r = 0; r < rows; ++r) {
        const auto& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Index>(row.size()) != rows) fail(field, "matrix must be square");
        for (Index c = 0; c < rows; ++c) m(r, c) = parse_entry(row[static_cast<std::size_t>(c)], field);
    }
    return m;
}

json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Index c = 0; c < m.cols(); ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
        rows.push_back(row);
    }
    return rows;
}

SimulationRun parse_config(const json& j) {
    const Block top(j, "", {"system", "baths", "numerics", "engine", "output", "grid", "oracle", "metadata"});
    SimulationRun run;

    const std::string engine = top.string("engine", "two-bath");
    if (engine == "two-bath") {
        run.engine = EngineChoice::TwoBath;
    } else if (engine == "single-bath") {
        run.engine = EngineChoice::SingleBath;
    } else if (engine == "brute-force") {
        run.engine = EngineChoice::BruteForce;
    } else {
        fail("engine", "expected two-bath, single-bath or brute-force");
    }
    const bool single = run.engine == EngineChoice::SingleBath;

    // system
    const json empty = json::object();
    const Block sys(top.has("system") ? top.at("system") : empty, "system",
                    {"delta", "hamiltonian", "sigma1", "sigma2", "rho0", "coupling"});
    if (sys.has("delta") && sys.has("hamiltonian")) fail("system", "give either delta or hamiltonian, not both");
    if (sys.has("hamiltonian")) {
        run.system.hamiltonian = parse_operator(sys.at("hamiltonian"), "system.hamiltonian");
    } else {
        const double delta = sys.number("delta", 1.0);
        if (!(delta > 0.0)) fail("system.delta", "must be > 0");
        run.delta = delta;
        run.system.hamiltonian = 0.5 * delta * pauli::sigma_x();
    }
    const Index n = run.system.hamiltonian.rows();
    run.system.sigma1 = sys.has("sigma1") ? parse_operator(sys.at("sigma1"), "system.sigma1", n)
                                          : named_operator("sx", "system.sigma1", n);
    run.system.sigma2 = sys.has("sigma2") ? parse_operator(sys.at("sigma2"), "system.sigma2", n)
                                          : named_operator("sz", "system.sigma2", n);
    run.system.rho0 = sys.has("rho0") ? parse_state(sys.at("rho0"), "system.rho0", n)
                                      : parse_state("up", "system.rho0", n);
    if (sys.has("coupling")) {
        if (!single) fail("system.coupling", "only used by the single-bath engine");
        run.coupling = parse_operator(sys.at("coupling"), "system.coupling", n);
    } else if (single) {
        fail("system.coupling", "missing (required by the single-bath engine)");
    }
    try {
        run.system.validate();
        if (!single) require_dephasing_condition(run.system);
        if (single) {
            if (run.coupling.rows() != n) throw ValidationError("coupling dimension differs from the Hamiltonian");
            if (hermiticity_defect(run.coupling) > kHermitianTolerance) throw ValidationError("coupling not Hermitian");
        }
    } catch (const DephasingConditionError&) {
        throw;
    } catch (const ValidationError& e) {
        fail("system", e.what());
    }

    // baths
    const Block baths(top.at("baths"), "baths", {"bath1", "bath2", "single"});
    if (single) {
        if (baths.has("bath1") || baths.has("bath2")) fail("baths", "the single-bath engine takes only baths.single");
        run.single = parse_bath(baths.at("single"), "baths.single");
    } else {
        if (baths.has("single")) fail("baths.single", "only used by the single-bath engine");
        run.bath1 = parse_bath(baths.at("bath1"), "baths.bath1");
        run.bath2 = parse_bath(baths.at("bath2"), "baths.bath2");
    }

    // numerics
    const Block num(top.at("numerics"), "numerics",
                    {"dt", "memory", "t_max", "stride", "workers", "deterministic", "memory_limit_mb", "quadrature"});
    auto& p = run.numerics;
    p.dt = num.number("dt");
    p.memory = num.integer("memory");
    p.t_max = num.number("t_max");
    p.stride = num.integer("stride", 1);
    p.exec.workers = num.integer("workers", 1);
    run.deterministic = num.boolean("deterministic", true);
    const double limit_mb = num.number("memory_limit_mb", static_cast<double>(p.memory_limit_bytes) / 1048576.0);
    if (!(limit_mb > 0.0)) fail("numerics.memory_limit_mb", "must be > 0");
    p.memory_limit_bytes = static_cast<std::size_t>(std::llround(limit_mb * 1048576.0));
    if (num.has("quadrature")) {
        const Block q(num.at("quadrature"), "numerics.quadrature",
                      {"relative_tolerance", "absolute_tolerance", "omega_max_multiple"});
        p.quadrature.relative_tolerance = q.number("relative_tolerance", p.quadrature.relative_tolerance);
        p.quadrature.absolute_tolerance = q.number("absolute_tolerance", p.quadrature.absolute_tolerance);
        p.quadrature.omega_max_multiple = q.number("omega_max_multiple", p.quadrature.omega_max_multiple);
    }
    if (!(p.dt > 0.0)) fail("numerics.dt", "must be > 0");
    if (p.memory < 1) fail("numerics.memory", "must be >= 1");
    if (!(p.t_max >= p.dt)) fail("numerics.t_max", "must be >= dt");
    if (p.stride < 1) fail("numerics.stride", "must be >= 1");
    if (p.exec.workers < 1) fail("numerics.workers", "must be >= 1");
    try {
        p.quadrature.validate();
    } catch (const ValidationError& e) {
        fail("numerics.quadrature", e.what());
    }

    // output
    if (top.has("output")) {
        const Block out(top.at("output"), "output", {"directory", "stem"});
        run.output.directory = out.string("directory", run.output.directory);
        run.output.stem = out.string("stem", run.output.stem);
        if (run.output.stem.empty() || run.output.stem.find('/') != std::string::npos) {
            fail("output.stem", "must be a plain file name");
        }
    }

    if (top.has("grid")) {
        const Block g(top.at("grid"), "grid", {"dt", "tau_mem", "memory", "threshold", "window"});
        GridConfig grid;
        grid.threshold = g.number("threshold", grid.threshold);
        if (!(grid.threshold > 0.0)) fail("grid.threshold", "must be > 0");
        if (g.has("window")) {
            const auto w = number_list(g.at("window"), "grid.window");
            if (w.size() != 2 || !(w[0] < w[1])) fail("grid.window", "expected [t_min, t_max] with t_min < t_max");
            grid.window = std::array<double, 2>{w[0], w[1]};
        }
        if (g.has("dt") == g.has("tau_mem")) fail("grid", "give exactly one of dt or tau_mem");
        if (g.has("dt")) grid.dt = number_list(g.at("dt"), "grid.dt");
        if (g.has("tau_mem")) grid.tau_mem = number_list(g.at("tau_mem"), "grid.tau_mem");
        for (double v : grid.dt) {
            if (!(v > 0.0)) fail("grid.dt", "values must be > 0");
        }
        for (double v : grid.tau_mem) {
            if (!(v > 0.0)) fail("grid.tau_mem", "values must be > 0");
        }
        const auto& mem = g.at("memory");
        if (!mem.is_array() || mem.empty()) fail("grid.memory", "expected a non-empty array of integers");
        for (const auto& v : mem) {
            if (!v.is_number_integer() || v.get<int>() < 1) fail("grid.memory", "values must be integers >= 1");
            grid.memory.push_back(v.get<int>());
        }
        run.grid = grid;
    }

    if (top.has("oracle")) {
        const Block o(top.at("oracle"), "oracle", {"threshold", "enforce"});
        run.oracle.threshold = o.number("threshold", run.oracle.threshold);
        run.oracle.enforce = o.boolean("enforce", run.oracle.enforce);
        if (!(run.oracle.threshold > 0.0)) fail("oracle.threshold", "must be > 0");
    }
    return run;
}

SimulationRun load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("config: cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ValidationError("config: '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_config(j);
}

json to_json(const SimulationRun& run) {
    json j;
    json sys;
    if (run.delta) {
        sys["delta"] = *run.delta;
    } else {
        sys["hamiltonian"] = matrix_to_json(run.system.hamiltonian);
    }
    sys["sigma1"] = matrix_to_json(run.system.sigma1);
    sys["sigma2"] = matrix_to_json(run.system.sigma2);
    sys["rho0"] = matrix_to_json(run.system.rho0);
    if (run.engine == EngineChoice::SingleBath) {
        sys["coupling"] = matrix_to_json(run.coupling);
        j["baths"] = {{"single", bath_to_json(run.single)}};
    } else {
        j["baths"] = {{"bath1", bath_to_json(run.bath1)}, {"bath2", bath_to_json(run.bath2)}};
    }
    j["system"] = sys;

    const auto& p = run.numerics;
    j["numerics"] = {
        {"dt", p.dt},
        {"memory", p.memory},
        {"t_max", p.t_max},
        {"stride", p.stride},
        {"workers", p.exec.workers},
        {"deterministic", run.deterministic},
        {"memory_limit_mb", static_cast<double>(p.memory_limit_bytes) / 1048576.0},
        {"quadrature",
         {{"relative_tolerance", p.quadrature.relative_tolerance},
          {"absolute_tolerance", p.quadrature.absolute_tolerance},
          {"omega_max_multiple", p.quadrature.omega_max_multiple}}},
    };
    j["engine"] = to_string(run.engine);
    j["output"] = {{"directory", run.output.directory}, {"stem", run.output.stem}};
    if (run.grid) {
        json g;
        if (!run.grid->dt.empty()) g["dt"] = run.grid->dt;
        if (!run.grid->tau_mem.empty()) g["tau_mem"] = run.grid->tau_mem;
        g["memory"] = run.grid->memory;
        g["threshold"] = run.grid->threshold;
        if (run.grid->window) g["window"] = *run.grid->window;
        j["grid"] = g;
    }
    j["oracle"] = {{"threshold", run.oracle.threshold}, {"enforce", run.oracle.enforce}};
    return j;
}

} // namespace quapi
