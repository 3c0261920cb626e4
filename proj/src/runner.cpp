#include "sgcat/runner.hpp"

#include "sgcat/analysis.hpp"
#include "sgcat/coherence.hpp"
#include "sgcat/errors.hpp"
#include "sgcat/output.hpp"
#include "sgcat/protocol.hpp"
#include "sgcat/quantum.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <thread>
#include <vector>

namespace sgcat {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path prepare_out_dir(const RunConfig& cfg) {
    fs::path dir = cfg.out_dir.empty() ? default_out_dir() : cfg.out_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory " + dir.string());
    return dir;
}

void write_json(const fs::path& path, const json& doc) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << doc.dump(2) << '\n';
    if (!out.flush()) throw Error("write failed: " + path.string());
}

Series to_um(const Series& s) {
    Series out;
    out.reserve(s.size());
    for (const SeriesPoint& p : s) out.push_back({p.t, m_to_um(p.value)});
    return out;
}

Series z_series_um(const Trajectory& traj) {
    Series out;
    out.reserve(traj.samples.size());
    for (const TrajectorySample& s : traj.samples) out.push_back({s.t, m_to_um(s.z)});
    return out;
}

double max_abs(const Series& s) {
    double m = 0.0;
    for (const SeriesPoint& p : s) m = std::max(m, std::abs(p.value));
    return m;
}

StepControl series_control(const RunConfig& cfg) {
    StepControl ctrl = cfg.solver;
    ctrl.sample_dt = cfg.sample_dt;
    return ctrl;
}

void run_simulate(const RunConfig& cfg, const fs::path& dir) {
    const StageConfig& stage = cfg.stages.front();
    const FieldParams field{cfg.b0, stage.eta, 0.0};
    const StepControl ctrl = series_control(cfg);

    std::vector<int> spins;
    if (cfg.simulate.spin == 0) {
        spins = {+1, -1};
    } else {
        spins = {cfg.simulate.spin};
    }
    std::vector<Trajectory> arms;
    for (int s : spins) {
        arms.push_back(propagate(stage.initial_magnetic_z, 0.0, cfg.particle.with_spin(s),
                                 field, cfg.duration, ctrl, 0.0, 1, cfg.constants));
        const char* name = (s > 0) ? "trajectory_up.csv" : "trajectory_down.csv";
        write_trajectory_csv(dir / name, arms.back());
    }

    json summary{{"mode", "simulate"},
                 {"mass_kg", cfg.particle.mass},
                 {"eta_tesla_per_m2", stage.eta},
                 {"duration_s", cfg.duration}};
    if (arms.size() == 2) {
        const PairedSeries diff = superposition_series(arms[0], arms[1]);
        write_paired_series_csv(dir / "superposition.csv", diff.dz, diff.dv);
        summary["max_abs_dz_um"] = m_to_um(max_abs(diff.dz));
        summary["max_abs_dv_um_per_s"] = m_to_um(max_abs(diff.dv));
        if (cfg.format != OutputFormat::Csv) {
            const Series dz_um = to_um(diff.dz);
            const Series dv_um = to_um(diff.dv);
            write_svg_plot(dir / "superposition_dz.svg", "Arm separation", "t / s",
                           "dz / um", {{"dz", "#c0392b", &dz_um}});
            write_svg_plot(dir / "superposition_dv.svg", "Arm velocity difference", "t / s",
                           "dv / (um/s)", {{"dv", "#2980b9", &dv_um}});
        }
    }
    if (cfg.format != OutputFormat::Csv) {
        std::vector<SvgSeries> zs;
        const Series up_um = z_series_um(arms.front());
        Series down_um;
        zs.push_back({spins.front() > 0 ? "S_z = +1" : "S_z = -1", "#c0392b", &up_um});
        if (arms.size() == 2) {
            down_um = z_series_um(arms.back());
            zs.push_back({"S_z = -1", "#2980b9", &down_um});
        }
        write_svg_plot(dir / "trajectory_z.svg", "Trap trajectory", "t / s", "z / um", zs);
    }
    write_json(dir / "summary.json", summary);
    std::printf("simulate: %.6g s, %zu arm(s), artifacts in %s\n", cfg.duration, arms.size(),
                dir.string().c_str());
}

void run_protocol_mode(const RunConfig& cfg, const fs::path& dir) {
    ProtocolOptions opt;
    opt.solver = cfg.solver;
    opt.sample_dt = cfg.sample_dt;
    opt.time_cap = cfg.time_cap;
    opt.b0 = cfg.b0;
    opt.closure_search = cfg.closure_search;
    opt.box = cfg.box;

    const ProtocolResult result = run_protocol(cfg.stages, cfg.particle, opt, cfg.constants);

    write_paired_series_csv(dir / "superposition.csv", result.dz_series, result.dv_series);
    for (std::size_t i = 0; i < result.arm_up.size(); ++i) {
        const std::string tag = "trajectory_stage" + std::to_string(i + 1);
        write_trajectory_csv(dir / (tag + "_up.csv"), result.arm_up[i]);
        write_trajectory_csv(dir / (tag + "_down.csv"), result.arm_down[i]);
    }

    json summary{{"mode", "protocol"},
                 {"mass_kg", cfg.particle.mass},
                 {"stage_start_s", result.stage_start},
                 {"T1_s", result.T1},
                 {"T2_s", result.T2},
                 {"T3_s", result.T3},
                 {"max_superposition_um", m_to_um(result.max_superposition)},
                 {"closure_eta_tesla_per_m2", result.closure_eta},
                 {"closure_initial_z_m", result.closure_z},
                 {"closure_dz_m", result.closure_dz},
                 {"closure_dv_m_per_s", result.closure_dv}};
    write_json(dir / "summary.json", summary);

    if (cfg.format != OutputFormat::Csv) {
        const Series dz_um = to_um(result.dz_series);
        const Series dv_um = to_um(result.dv_series);
        write_svg_plot(dir / "superposition_dz.svg", "Superposition size", "t / s", "dz / um",
                       {{"dz", "#c0392b", &dz_um}});
        write_svg_plot(dir / "superposition_dv.svg", "Velocity difference", "t / s",
                       "dv / (um/s)", {{"dv", "#2980b9", &dv_um}});
    }
    std::printf("protocol: T1 = %.6g s, T2 = %.6g s, T3 = %.6g s\n", result.T1, result.T2,
                result.T3);
    std::printf("protocol: max superposition %.6g um, closure |dz| = %.3g m, |dv| = %.3g m/s\n",
                m_to_um(result.max_superposition), result.closure_dz, result.closure_dv);
}

void run_budget(const RunConfig& cfg, const fs::path& dir) {
    std::vector<CoherenceBudget> rows;
    for (const std::string& stage : cfg.coherence.stages) {
        const auto it = cfg.coherence.presets.find(stage);
        const BudgetStagePreset preset =
            (it != cfg.coherence.presets.end()) ? it->second : budget_stage_preset(stage);
        std::vector<CoherenceBudget> part =
            budget_table(cfg.coherence.masses, preset, cfg.coherence.epsilon, cfg.constants);
        rows.insert(rows.end(), part.begin(), part.end());
    }
    write_budget_csv(dir / "budget.csv", rows);
    write_budget_text(dir / "budget.txt", rows);
    write_json(dir / "summary.json", json{{"mode", "coherence-budget"},
                                          {"epsilon", cfg.coherence.epsilon},
                                          {"rows", rows.size()}});
    for (const CoherenceBudget& r : rows) {
        std::printf("stage %-3s m = %.0e kg  S_z = %+d  (dEta/eta)_z = %.2g  (dEta/eta)_p = %.2g\n",
                    r.stage.c_str(), r.mass, r.spin_z, r.tol_z, r.tol_p);
    }
}

void write_density_csv(const fs::path& path, const WavePacketState& state) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << "z_um,prob_per_um\n";
    for (std::size_t j = 0; j < state.grid.n_points; ++j) {
        const double prob = std::norm(state.amplitudes[j]);  // per meter
        out << format_double(m_to_um(state.grid.z(j))) << ','
            << format_double(prob * 1e-6) << '\n';
    }
    if (!out.flush()) throw Error("write failed: " + path.string());
}

void run_quantum(const RunConfig& cfg, const fs::path& dir) {
    const QuantumConfig& q = cfg.quantum;
    const ParticleParams particle = cfg.particle.mass > 0.0
                                        ? cfg.particle.with_spin(q.spin)
                                        : diamond_preset(1e-17).with_spin(q.spin);
    const FieldParams field{cfg.b0, q.eta, 0.0};

    const std::size_t n_points = q.n_points > 0 ? q.n_points : (1u << 14);
    SpatialGrid grid = (q.z_min == 0.0 && q.z_max == 0.0)
                           ? default_grid(std::max(std::abs(q.center), 10.0 * q.width), n_points)
                           : SpatialGrid::make(q.z_min, q.z_max, n_points);

    WavePacketState state = init_gaussian(grid, q.center, q.width, q.spin);
    const double dt = q.dt > 0.0 ? q.dt : suggested_dt(grid, particle, field, cfg.constants);
    const std::size_t n_steps =
        static_cast<std::size_t>(std::ceil(q.duration / dt - 1e-12));

    EvolveOptions opt;
    opt.record_every = q.record_every;

    std::vector<Observables> record;
    const std::size_t n_chunks = std::max<std::size_t>(1, q.density_snapshots);
    if (q.density_snapshots > 0) write_density_csv(dir / "density_0000.csv", state);
    std::size_t done = 0;
    for (std::size_t c = 1; c <= n_chunks; ++c) {
        const std::size_t target = n_steps * c / n_chunks;
        EvolveResult r = evolve(state, particle, field, dt, target - done, opt, cfg.constants);
        state = std::move(r.state);
        const std::size_t skip = record.empty() ? 0 : 1;  // chunk start repeats last record
        record.insert(record.end(), r.record.begin() + static_cast<std::ptrdiff_t>(skip),
                      r.record.end());
        done = target;
        if (q.density_snapshots > 0) {
            char name[32];
            std::snprintf(name, sizeof(name), "density_%04zu.csv", c);
            write_density_csv(dir / name, state);
        }
    }

    std::ofstream obs(dir / "observables.csv");
    if (!obs) throw Error("cannot open for writing: " + (dir / "observables.csv").string());
    obs << "t_s,mean_z_um,mean_p_kg_m_per_s,width_z_um,width_p_kg_m_per_s,product_over_hbar\n";
    double prod_min = std::numeric_limits<double>::infinity(), prod_max = 0.0;
    for (const Observables& o : record) {
        prod_min = std::min(prod_min, o.product);
        prod_max = std::max(prod_max, o.product);
        obs << format_double(o.t) << ',' << format_double(m_to_um(o.mean_z)) << ','
            << format_double(o.mean_p) << ',' << format_double(m_to_um(o.width_z)) << ','
            << format_double(o.width_p) << ','
            << format_double(o.product / cfg.constants.hbar) << '\n';
    }
    if (!obs.flush()) throw Error("write failed: observables.csv");

    write_json(dir / "summary.json",
               json{{"mode", "quantum"},
                    {"n_points", grid.n_points},
                    {"dt_s", dt},
                    {"n_steps", n_steps},
                    {"final_norm", state.norm()},
                    {"min_product_over_hbar", prod_min / cfg.constants.hbar},
                    {"max_product_over_hbar", prod_max / cfg.constants.hbar}});

    if (cfg.format != OutputFormat::Csv) {
        Series mean_series, prod_series;
        for (const Observables& o : record) {
            mean_series.push_back({o.t, m_to_um(o.mean_z)});
            prod_series.push_back({o.t, o.product / cfg.constants.hbar});
        }
        write_svg_plot(dir / "mean_z.svg", "Wavepacket mean position", "t / s", "<z> / um",
                       {{"<z>", "#c0392b", &mean_series}});
        write_svg_plot(dir / "uncertainty_product.svg", "Uncertainty product", "t / s",
                       "dz dp / hbar", {{"dz dp", "#2980b9", &prod_series}});
    }
    std::printf("quantum: %zu steps of %.3g s, product in [%.3g, %.3g] hbar\n", n_steps, dt,
                prod_min / cfg.constants.hbar, prod_max / cfg.constants.hbar);
}

void run_scaling(const RunConfig& cfg, const fs::path& dir) {
    const ScalingFit fit =
        fit_velocity_slope(cfg.scaling.masses, cfg.scaling.stage1, cfg.constants);

    std::ofstream env(dir / "scaling_envelope.csv");
    if (!env) throw Error("cannot open for writing: scaling_envelope.csv");
    env << "mass_kg,t1_s,max_dv_um_per_s\n";
    for (std::size_t i = 0; i < fit.envelopes.size(); ++i) {
        for (const auto& [t1, dv] : fit.envelopes[i]) {
            env << format_double(cfg.scaling.masses[i]) << ',' << format_double(t1) << ','
                << format_double(m_to_um(dv)) << '\n';
        }
    }
    if (!env.flush()) throw Error("write failed: scaling_envelope.csv");

    std::ofstream report(dir / "scaling_fit.txt");
    if (!report) throw Error("cannot open for writing: scaling_fit.txt");
    report << "Stage-I velocity-difference scaling fit\n"
           << "  universal coefficient (mass * slope): " << format_double(fit.coefficient)
           << " kg m/s per s\n"
           << "  min r^2 over masses: " << format_double(fit.r_squared) << "\n";
    for (const auto& [mass, slope] : fit.per_mass_slopes) {
        report << "  mass " << format_double(mass) << " kg: slope " << format_double(slope)
               << " m/s^2, T1 bound " << format_double(t1_upper_bound(mass)) << " s\n";
    }
    if (!report.flush()) throw Error("write failed: scaling_fit.txt");

    json slopes = json::array();
    for (const auto& [mass, slope] : fit.per_mass_slopes)
        slopes.push_back(json{{"mass_kg", mass}, {"slope_m_per_s2", slope}});
    write_json(dir / "summary.json", json{{"mode", "scaling-fit"},
                                          {"coefficient_kg_m_per_s_per_s", fit.coefficient},
                                          {"r_squared", fit.r_squared},
                                          {"per_mass", slopes}});

    if (cfg.format != OutputFormat::Csv) {
        std::vector<Series> env_um(fit.envelopes.size());
        std::vector<SvgSeries> plot;
        const char* colors[] = {"#c0392b", "#2980b9", "#27ae60", "#8e44ad"};
        for (std::size_t i = 0; i < fit.envelopes.size(); ++i) {
            for (const auto& [t1, dv] : fit.envelopes[i]) env_um[i].push_back({t1, m_to_um(dv)});
            char label[48];
            std::snprintf(label, sizeof(label), "m = %.0e kg", cfg.scaling.masses[i]);
            plot.push_back({label, colors[i % 4], &env_um[i]});
        }
        write_svg_plot(dir / "scaling_envelope.svg", "Max velocity difference vs T1", "T1 / s",
                       "max |dv| / (um/s)", plot);
    }
    std::printf("scaling-fit: coefficient %.4g kg m/s per s, min r^2 %.6f\n", fit.coefficient,
                fit.r_squared);
}

// ---- sweep ----

struct SweepAxes {
    std::vector<std::string> names;
    std::vector<std::vector<double>> values;
    std::size_t total = 1;
};

SweepAxes sweep_axes(const SweepConfig& sweep) {
    SweepAxes axes;
    for (const auto& [name, values] : sweep.grid) {  // std::map: sorted key order
        axes.names.push_back(name);
        axes.values.push_back(values);
        axes.total *= values.size();
    }
    return axes;
}

struct SweepRow {
    std::vector<double> params;
    double max_dz = 0.0, max_dv = 0.0, final_dz = 0.0, final_dv = 0.0;
    std::string status = "ok";
};

std::string sanitize_cell(std::string s) {
    for (char& c : s) {
        if (c == ',' ) c = ';';
        if (c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

}  // namespace

void run_sweep(const RunConfig& cfg) {
    const fs::path dir = prepare_out_dir(cfg);
    const SweepAxes axes = sweep_axes(cfg.sweep);
    if (axes.total == 0) throw ConfigError("sweep grid has an empty axis");

    // Per-point fallbacks for parameters the grid does not vary.
    const bool has_stage = !cfg.stages.empty();
    const double base_eta = has_stage ? cfg.stages.front().eta : 0.0;
    const double base_z0 = has_stage ? cfg.stages.front().initial_magnetic_z : 1e-4;
    const double base_duration = cfg.duration;
    auto swept = [&](const char* name) {
        return std::find(axes.names.begin(), axes.names.end(), name) != axes.names.end();
    };
    if (!swept("eta_tesla_per_m2") && base_eta <= 0.0)
        throw ConfigError("sweep needs eta_tesla_per_m2 in the grid or a base stage");
    if (!swept("duration_s") && base_duration <= 0.0)
        throw ConfigError("sweep needs duration_s in the grid or a base duration_s");
    if (!swept("mass_kg") && cfg.particle.mass <= 0.0)
        throw ConfigError("sweep needs mass_kg in the grid or a base particle");

    std::vector<SweepRow> rows(axes.total);
    auto run_point = [&](std::size_t index) {
        SweepRow& row = rows[index];
        // Row-major decode: the last axis varies fastest.
        std::size_t rem = index;
        row.params.resize(axes.names.size());
        for (std::size_t a = axes.names.size(); a-- > 0;) {
            const std::size_t n = axes.values[a].size();
            row.params[a] = axes.values[a][rem % n];
            rem /= n;
        }
        double mass = cfg.particle.mass, eta = base_eta, z0 = base_z0,
               duration = base_duration;
        for (std::size_t a = 0; a < axes.names.size(); ++a) {
            const std::string& name = axes.names[a];
            if (name == "mass_kg") mass = row.params[a];
            if (name == "eta_tesla_per_m2") eta = row.params[a];
            if (name == "z0_um") z0 = um_to_m(row.params[a]);
            if (name == "duration_s") duration = row.params[a];
        }
        try {
            const ParticleParams particle =
                swept("mass_kg") ? diamond_preset(mass) : cfg.particle;
            const FieldParams field{cfg.b0, eta, 0.0};
            const StepControl ctrl = series_control(cfg);
            const Trajectory up = propagate(z0, 0.0, particle.with_spin(+1), field, duration,
                                            ctrl, 0.0, 1, cfg.constants);
            const Trajectory down = propagate(z0, 0.0, particle.with_spin(-1), field, duration,
                                              ctrl, 0.0, 1, cfg.constants);
            const PairedSeries diff = superposition_series(up, down);
            row.max_dz = max_abs(diff.dz);
            row.max_dv = max_abs(diff.dv);
            row.final_dz = diff.dz.empty() ? 0.0 : diff.dz.back().value;
            row.final_dv = diff.dv.empty() ? 0.0 : diff.dv.back().value;
        } catch (const std::exception& e) {
            row.status = std::string("error: ") + e.what();
        }
    };

    const std::size_t n_workers =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.workers), axes.total);
    if (n_workers <= 1) {
        for (std::size_t i = 0; i < axes.total; ++i) run_point(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(n_workers);
        for (std::size_t w = 0; w < n_workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next.fetch_add(1); i < axes.total;
                     i = next.fetch_add(1)) {
                    run_point(i);
                }
            });
        }
        for (std::thread& t : pool) t.join();
    }

    std::ofstream out(dir / "sweep.csv");
    if (!out) throw Error("cannot open for writing: sweep.csv");
    out << "index";
    for (const std::string& name : axes.names) out << ',' << name;
    out << ",max_dz_um,max_dv_um_per_s,final_dz_um,final_dv_um_per_s,status\n";
    std::size_t failures = 0;
    for (std::size_t i = 0; i < axes.total; ++i) {
        const SweepRow& row = rows[i];
        out << i;
        for (double p : row.params) out << ',' << format_double(p);
        if (row.status == "ok") {
            out << ',' << format_double(m_to_um(row.max_dz)) << ','
                << format_double(m_to_um(row.max_dv)) << ','
                << format_double(m_to_um(row.final_dz)) << ','
                << format_double(m_to_um(row.final_dv)) << ",ok\n";
        } else {
            ++failures;
            out << ",,,,," << sanitize_cell(row.status) << '\n';
        }
    }
    if (!out.flush()) throw Error("write failed: sweep.csv");
    write_json(dir / "summary.json",
               json{{"mode", "sweep"}, {"points", axes.total}, {"failures", failures}});
    std::printf("sweep: %zu point(s), %zu failure(s), artifacts in %s\n", axes.total, failures,
                dir.string().c_str());
}

void run(const RunConfig& config) {
    if (config.mode == RunMode::Sweep) {
        run_sweep(config);
        return;
    }
    const fs::path dir = prepare_out_dir(config);
    switch (config.mode) {
        case RunMode::Simulate: run_simulate(config, dir); break;
        case RunMode::Protocol: run_protocol_mode(config, dir); break;
        case RunMode::CoherenceBudget: run_budget(config, dir); break;
        case RunMode::Quantum: run_quantum(config, dir); break;
        case RunMode::ScalingFit: run_scaling(config, dir); break;
        case RunMode::Sweep: break;  // handled above
    }
}

}  // namespace sgcat
