#include "sgcat/config.hpp"

#include "sgcat/errors.hpp"

#include "json.hpp"

#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>
#include <string>

namespace sgcat {

namespace {

using nlohmann::json;

/// A JSON object plus its path for error reporting. Every object must declare
/// its allowed keys up front, so typos and unknown keys fail with a location.
class Node {
  public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    const std::string& path() const { return path_; }
    const json& raw() const { return j_; }

    void allow(std::initializer_list<const char*> keys) const {
        std::set<std::string> ok(keys.begin(), keys.end());
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (ok.find(it.key()) == ok.end())
                throw ConfigError(path_ + ": unknown key \"" + it.key() + "\"");
        }
    }

    bool has(const char* key) const { return j_.contains(key); }

    double number(const char* key, double fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number()) throw ConfigError(path_ + "." + key + ": expected a number");
        return v.get<double>();
    }

    long long integer(const char* key, long long fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_number_integer() && !v.is_number_unsigned())
            throw ConfigError(path_ + "." + key + ": expected an integer");
        return v.get<long long>();
    }

    bool boolean(const char* key, bool fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_boolean()) throw ConfigError(path_ + "." + key + ": expected a boolean");
        return v.get<bool>();
    }

    std::string text(const char* key, const std::string& fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_string()) throw ConfigError(path_ + "." + key + ": expected a string");
        return v.get<std::string>();
    }

    std::vector<double> numbers(const char* key, std::vector<double> fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_array()) throw ConfigError(path_ + "." + key + ": expected an array");
        std::vector<double> out;
        out.reserve(v.size());
        for (const json& e : v) {
            if (!e.is_number())
                throw ConfigError(path_ + "." + key + ": expected an array of numbers");
            out.push_back(e.get<double>());
        }
        return out;
    }

    std::vector<std::string> texts(const char* key, std::vector<std::string> fallback) const {
        if (!has(key)) return fallback;
        const json& v = j_.at(key);
        if (!v.is_array()) throw ConfigError(path_ + "." + key + ": expected an array");
        std::vector<std::string> out;
        out.reserve(v.size());
        for (const json& e : v) {
            if (!e.is_string())
                throw ConfigError(path_ + "." + key + ": expected an array of strings");
            out.push_back(e.get<std::string>());
        }
        return out;
    }

    Node child(const char* key) const { return Node(j_.at(key), path_ + "." + key); }

  private:
    const json& j_;
    std::string path_;
};

Constants parse_constants(const Node& n, Constants base) {
    n.allow({"hbar", "electron_charge", "electron_mass", "bohr_magneton",
             "vacuum_permeability", "lande_g"});
    base.hbar = n.number("hbar", base.hbar);
    base.electron_charge = n.number("electron_charge", base.electron_charge);
    base.electron_mass = n.number("electron_mass", base.electron_mass);
    base.bohr_magneton = n.number("bohr_magneton", base.bohr_magneton);
    base.vacuum_permeability = n.number("vacuum_permeability", base.vacuum_permeability);
    base.lande_g = n.number("lande_g", base.lande_g);
    return base;
}

ParticleParams parse_particle(const Node& n, ParticleParams base) {
    n.allow({"mass_kg", "chi_m_m3_per_kg", "zero_field_splitting_rad_per_s"});
    if (n.has("mass_kg")) {
        const double mass = n.number("mass_kg", 0.0);
        if (!(mass > 0.0)) throw ConfigError(n.path() + ".mass_kg: must be positive");
        base = diamond_preset(mass).with_spin(base.spin_z);
    }
    base.chi_m = n.number("chi_m_m3_per_kg", base.chi_m);
    base.zero_field_splitting =
        n.number("zero_field_splitting_rad_per_s", base.zero_field_splitting);
    if (base.chi_m >= 0.0)
        throw ConfigError(n.path() + ".chi_m_m3_per_kg: must be negative (diamagnetic)");
    return base;
}

EndCondition parse_end(const Node& n) {
    n.allow({"kind", "window_s", "accuracy_dz_m", "accuracy_dv_m_per_s", "select", "after_s"});
    EndCondition end;
    const std::string kind = n.text("kind", "fixed-duration");
    if (kind == "fixed-duration") {
        end.kind = EndCondition::Kind::FixedDuration;
    } else if (kind == "superposition-zero-crossing") {
        end.kind = EndCondition::Kind::SuperpositionZeroCrossing;
    } else if (kind == "simultaneous-zero") {
        end.kind = EndCondition::Kind::SimultaneousZero;
    } else {
        throw ConfigError(n.path() + ".kind: unknown end condition \"" + kind + "\"");
    }
    end.window = n.number("window_s", end.window);
    if (!(end.window > 0.0)) throw ConfigError(n.path() + ".window_s: must be positive");
    end.accuracy_dz = n.number("accuracy_dz_m", end.accuracy_dz);
    end.accuracy_dv = n.number("accuracy_dv_m_per_s", end.accuracy_dv);
    const std::string select = n.text("select", "first-after");
    if (select == "first-after") {
        end.select = EndCondition::Select::FirstAfter;
    } else if (select == "max-companion") {
        end.select = EndCondition::Select::MaxCompanion;
    } else {
        throw ConfigError(n.path() + ".select: unknown crossing selector \"" + select + "\"");
    }
    end.after = n.number("after_s", end.after);
    return end;
}

StageConfig parse_stage(const Node& n) {
    n.allow({"eta_tesla_per_m2", "initial_magnetic_z_m", "end"});
    StageConfig stage;
    if (!n.has("eta_tesla_per_m2"))
        throw ConfigError(n.path() + ": missing \"eta_tesla_per_m2\"");
    stage.eta = n.number("eta_tesla_per_m2", 0.0);
    if (!(stage.eta > 0.0)) throw ConfigError(n.path() + ".eta_tesla_per_m2: must be positive");
    stage.initial_magnetic_z = n.number("initial_magnetic_z_m", 0.0);
    if (!n.has("end")) throw ConfigError(n.path() + ": missing \"end\"");
    stage.end = parse_end(n.child("end"));
    return stage;
}

StepControl parse_solver(const Node& n, StepControl base) {
    n.allow({"mode", "abs_tol_m", "rel_tol", "fixed_dt_s", "sample_dt_s"});
    const std::string mode = n.text("mode", "");
    if (mode == "adaptive") {
        base.mode = StepControl::Mode::adaptive;
    } else if (mode == "fixed") {
        base.mode = StepControl::Mode::fixed;
    } else if (!mode.empty()) {
        throw ConfigError(n.path() + ".mode: expected \"adaptive\" or \"fixed\"");
    }
    base.abs_tol = n.number("abs_tol_m", base.abs_tol);
    base.rel_tol = n.number("rel_tol", base.rel_tol);
    base.fixed_dt = n.number("fixed_dt_s", base.fixed_dt);
    base.sample_dt = n.number("sample_dt_s", base.sample_dt);
    if (!(base.abs_tol > 0.0 && base.rel_tol > 0.0 && base.fixed_dt > 0.0))
        throw ConfigError(n.path() + ": tolerances and fixed_dt_s must be positive");
    return base;
}

ClosureSearchBox parse_box(const Node& n, ClosureSearchBox base) {
    n.allow({"eta_lo", "eta_hi", "z_lo_m", "z_hi_m", "lambda_z_m", "lambda_v_m_per_s"});
    base.eta_lo = n.number("eta_lo", base.eta_lo);
    base.eta_hi = n.number("eta_hi", base.eta_hi);
    base.z_lo = n.number("z_lo_m", base.z_lo);
    base.z_hi = n.number("z_hi_m", base.z_hi);
    base.lambda_z = n.number("lambda_z_m", base.lambda_z);
    base.lambda_v = n.number("lambda_v_m_per_s", base.lambda_v);
    return base;
}

BudgetStagePreset parse_budget_preset(const Node& n, const std::string& stage) {
    BudgetStagePreset base = budget_stage_preset(stage);
    n.allow({"eta_tesla_per_m2", "c_correction", "z0_m", "half_periods", "b0_tesla"});
    base.eta = n.number("eta_tesla_per_m2", base.eta);
    base.c_correction = n.number("c_correction", base.c_correction);
    base.z0 = n.number("z0_m", base.z0);
    base.half_periods = n.number("half_periods", base.half_periods);
    base.b0 = n.number("b0_tesla", base.b0);
    if (!(base.eta > 0.0 && base.z0 > 0.0 && base.half_periods > 0.0))
        throw ConfigError(n.path() + ": eta, z0_m, half_periods must be positive");
    return base;
}

CoherenceConfig parse_coherence(const Node& n, CoherenceConfig base) {
    n.allow({"epsilon", "stages", "masses", "presets"});
    base.epsilon = n.number("epsilon", base.epsilon);
    if (!(base.epsilon > 0.0 && base.epsilon < 1.0))
        throw ConfigError(n.path() + ".epsilon: must lie in (0, 1)");
    base.stages = n.texts("stages", base.stages);
    for (const std::string& s : base.stages) {
        if (s != "I" && s != "II")
            throw ConfigError(n.path() + ".stages: unknown stage \"" + s + "\"");
    }
    base.masses = n.numbers("masses", base.masses);
    for (double m : base.masses) {
        if (!(m > 0.0)) throw ConfigError(n.path() + ".masses: must be positive");
    }
    if (n.has("presets")) {
        const Node presets = n.child("presets");
        presets.allow({"I", "II"});
        for (const char* stage : {"I", "II"}) {
            if (presets.has(stage))
                base.presets[stage] = parse_budget_preset(presets.child(stage), stage);
        }
    }
    return base;
}

QuantumConfig parse_quantum(const Node& n, QuantumConfig base) {
    n.allow({"spin", "eta_tesla_per_m2", "center_m", "width_m", "duration_s", "dt_s",
             "n_points", "z_min_m", "z_max_m", "record_every", "density_snapshots"});
    base.spin = static_cast<int>(n.integer("spin", base.spin));
    if (base.spin != 1 && base.spin != -1)
        throw ConfigError(n.path() + ".spin: expected +1 or -1");
    base.eta = n.number("eta_tesla_per_m2", base.eta);
    base.center = n.number("center_m", base.center);
    base.width = n.number("width_m", base.width);
    base.duration = n.number("duration_s", base.duration);
    base.dt = n.number("dt_s", base.dt);
    base.n_points = static_cast<std::size_t>(n.integer("n_points", 0));
    base.z_min = n.number("z_min_m", base.z_min);
    base.z_max = n.number("z_max_m", base.z_max);
    base.record_every = static_cast<std::size_t>(n.integer("record_every", 200));
    base.density_snapshots = static_cast<std::size_t>(n.integer("density_snapshots", 0));
    if (!(base.width > 0.0 && base.duration > 0.0))
        throw ConfigError(n.path() + ": width_m and duration_s must be positive");
    if (base.record_every == 0)
        throw ConfigError(n.path() + ".record_every: must be >= 1");
    return base;
}

ScalingConfig parse_scaling(const Node& n, ScalingConfig base) {
    n.allow({"masses", "stage1"});
    base.masses = n.numbers("masses", base.masses);
    if (base.masses.empty()) throw ConfigError(n.path() + ".masses: must be non-empty");
    for (double m : base.masses) {
        if (!(m > 0.0)) throw ConfigError(n.path() + ".masses: must be positive");
    }
    if (n.has("stage1")) {
        const Node s1 = n.child("stage1");
        s1.allow({"eta_tesla_per_m2", "z0_m", "b0_tesla", "t_max_s", "n_times",
                  "sample_dt_s"});
        base.stage1.eta = s1.number("eta_tesla_per_m2", base.stage1.eta);
        base.stage1.z0 = s1.number("z0_m", base.stage1.z0);
        base.stage1.b0 = s1.number("b0_tesla", base.stage1.b0);
        base.stage1.t_max = s1.number("t_max_s", base.stage1.t_max);
        base.stage1.n_times = static_cast<std::size_t>(
            s1.integer("n_times", static_cast<long long>(base.stage1.n_times)));
        base.stage1.sample_dt = s1.number("sample_dt_s", base.stage1.sample_dt);
        if (!(base.stage1.t_max > 0.0 && base.stage1.sample_dt > 0.0) ||
            base.stage1.n_times < 2)
            throw ConfigError(s1.path() + ": invalid end-time grid");
    }
    return base;
}

SweepConfig parse_sweep(const Node& n, SweepConfig base) {
    n.allow({"grid"});
    if (!n.has("grid")) return base;
    const Node grid = n.child("grid");
    grid.allow({"eta_tesla_per_m2", "mass_kg", "z0_um", "duration_s"});
    base.grid.clear();
    double total = 1.0;
    for (const char* key : {"duration_s", "eta_tesla_per_m2", "mass_kg", "z0_um"}) {
        if (!grid.has(key)) continue;
        std::vector<double> values = grid.numbers(key, {});
        if (values.empty())
            throw ConfigError(grid.path() + "." + key + ": must list at least one value");
        total *= static_cast<double>(values.size());
        base.grid[key] = std::move(values);
    }
    if (total > 1e6) throw ConfigError(grid.path() + ": grid exceeds 1e6 points");
    return base;
}

void apply_protocol_preset(RunConfig& cfg, const std::string& name) {
    const ProtocolPreset preset = [&] {
        try {
            return builtin_protocol_preset(name);
        } catch (const NotFound& e) {
            throw ConfigError(std::string("$.preset: ") + e.what());
        }
    }();
    cfg.particle = diamond_preset(preset.mass);
    cfg.stages = preset.stages;
    cfg.solver = preset.options.solver;
    cfg.sample_dt = preset.options.sample_dt;
    cfg.time_cap = preset.options.time_cap;
    cfg.b0 = preset.options.b0;
    cfg.closure_search = preset.options.closure_search;
    cfg.box = preset.options.box;
}

}  // namespace

std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::Simulate: return "simulate";
        case RunMode::Protocol: return "protocol";
        case RunMode::CoherenceBudget: return "coherence-budget";
        case RunMode::Quantum: return "quantum";
        case RunMode::ScalingFit: return "scaling-fit";
        case RunMode::Sweep: return "sweep";
    }
    throw InvalidParameter("unreachable run mode");
}

RunMode run_mode_from_string(const std::string& s) {
    if (s == "simulate") return RunMode::Simulate;
    if (s == "protocol") return RunMode::Protocol;
    if (s == "coherence-budget") return RunMode::CoherenceBudget;
    if (s == "quantum") return RunMode::Quantum;
    if (s == "scaling-fit") return RunMode::ScalingFit;
    if (s == "sweep") return RunMode::Sweep;
    throw ConfigError("unknown mode \"" + s + "\"");
}

RunConfig parse_config(const std::string& json_text, const std::string& mode_override) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    const Node root(doc, "$");
    root.allow({"mode", "preset", "constants", "particle", "b0_tesla", "b_min_tesla",
                "stages", "solver", "sample_dt_s", "time_cap_s", "closure_search", "box",
                "duration_s", "simulate", "coherence", "quantum", "scaling", "sweep",
                "out_dir", "format", "workers"});

    RunConfig cfg;
    if (!mode_override.empty()) cfg.mode = run_mode_from_string(mode_override);
    if (root.has("mode")) {
        const RunMode file_mode = run_mode_from_string(root.text("mode", ""));
        if (!mode_override.empty() && file_mode != cfg.mode)
            throw ConfigError("$.mode: \"" + root.text("mode", "") +
                              "\" conflicts with the requested subcommand");
        cfg.mode = file_mode;
    }

    if (root.has("preset")) apply_protocol_preset(cfg, root.text("preset", ""));

    if (root.has("constants")) cfg.constants = parse_constants(root.child("constants"), cfg.constants);
    if (root.has("particle")) cfg.particle = parse_particle(root.child("particle"), cfg.particle);
    cfg.b0 = root.number("b0_tesla", cfg.b0);
    cfg.b_min = root.number("b_min_tesla", cfg.b_min);
    if (!(cfg.b0 > 0.0)) throw ConfigError("$.b0_tesla: must be positive");
    if (cfg.b0 < cfg.b_min)
        throw ConfigError("$.b0_tesla: below the adiabaticity floor b_min_tesla");

    if (root.has("stages")) {
        const json& arr = root.raw().at("stages");
        if (!arr.is_array()) throw ConfigError("$.stages: expected an array");
        cfg.stages.clear();
        for (std::size_t i = 0; i < arr.size(); ++i) {
            cfg.stages.push_back(
                parse_stage(Node(arr[i], "$.stages[" + std::to_string(i) + "]")));
        }
    }

    if (root.has("solver")) cfg.solver = parse_solver(root.child("solver"), cfg.solver);
    cfg.sample_dt = root.number("sample_dt_s", cfg.sample_dt);
    if (!(cfg.sample_dt > 0.0)) throw ConfigError("$.sample_dt_s: must be positive");
    cfg.time_cap = root.number("time_cap_s", cfg.time_cap);
    if (!(cfg.time_cap > 0.0)) throw ConfigError("$.time_cap_s: must be positive");
    cfg.closure_search = root.boolean("closure_search", cfg.closure_search);
    if (root.has("box")) cfg.box = parse_box(root.child("box"), cfg.box);
    cfg.duration = root.number("duration_s", cfg.duration);

    if (root.has("simulate")) {
        const Node sim = root.child("simulate");
        sim.allow({"spin"});
        cfg.simulate.spin = static_cast<int>(sim.integer("spin", cfg.simulate.spin));
        if (cfg.simulate.spin < -1 || cfg.simulate.spin > 1)
            throw ConfigError("$.simulate.spin: expected -1, 0 (both arms) or +1");
    }
    if (root.has("coherence")) cfg.coherence = parse_coherence(root.child("coherence"), cfg.coherence);
    if (root.has("quantum")) cfg.quantum = parse_quantum(root.child("quantum"), cfg.quantum);
    if (root.has("scaling")) cfg.scaling = parse_scaling(root.child("scaling"), cfg.scaling);
    if (root.has("sweep")) cfg.sweep = parse_sweep(root.child("sweep"), cfg.sweep);

    if (root.has("out_dir")) cfg.out_dir = root.text("out_dir", "");
    const std::string format = root.text("format", "");
    if (format == "csv") {
        cfg.format = OutputFormat::Csv;
    } else if (format == "svg") {
        cfg.format = OutputFormat::Svg;
    } else if (format == "both") {
        cfg.format = OutputFormat::Both;
    } else if (!format.empty()) {
        throw ConfigError("$.format: expected \"csv\", \"svg\" or \"both\"");
    }
    cfg.workers = static_cast<int>(root.integer("workers", cfg.workers));
    if (cfg.workers < 1) throw ConfigError("$.workers: must be >= 1");

    // Mode-specific shape requirements.
    if (cfg.mode == RunMode::Protocol && cfg.stages.empty())
        throw ConfigError("protocol mode needs a non-empty \"stages\" list (or a preset)");
    if (cfg.mode == RunMode::Simulate) {
        if (cfg.stages.empty())
            throw ConfigError("simulate mode needs one stage in \"stages\"");
        if (cfg.duration <= 0.0) cfg.duration = cfg.stages.front().end.window;
        if (cfg.duration <= 0.0)
            throw ConfigError("simulate mode needs \"duration_s\" (or a stage window)");
        if (!(cfg.particle.mass > 0.0))
            throw ConfigError("simulate mode needs \"particle.mass_kg\"");
    }
    if (cfg.mode == RunMode::Protocol && !(cfg.particle.mass > 0.0))
        throw ConfigError("protocol mode needs \"particle.mass_kg\" (or a preset)");
    if (cfg.mode == RunMode::Sweep && cfg.sweep.grid.empty())
        throw ConfigError("sweep mode needs a non-empty \"sweep.grid\"");
    return cfg;
}

RunConfig load_config(const std::filesystem::path& file, const std::string& mode_override) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config file: " + file.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), mode_override);
}

std::filesystem::path default_out_dir() {
    if (const char* env = std::getenv("SGCAT_OUT_DIR"); env != nullptr && *env != '\0')
        return std::filesystem::path(env);
    return std::filesystem::current_path();
}

}  // namespace sgcat
