// Python bindings for the core operations: trap propagation, staged
// protocols, coherence budgets, wavepacket evolution and the scaling fit.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "sgcat/analysis.hpp"
#include "sgcat/coherence.hpp"
#include "sgcat/dynamics.hpp"
#include "sgcat/physconst.hpp"
#include "sgcat/protocol.hpp"
#include "sgcat/quantum.hpp"

#include <cmath>
#include <vector>

namespace py = pybind11;
using namespace sgcat;

namespace {

StepControl make_control(double sample_dt, double fixed_dt) {
    StepControl ctrl;
    ctrl.sample_dt = sample_dt;
    if (fixed_dt > 0.0) {
        ctrl.mode = StepControl::Mode::fixed;
        ctrl.fixed_dt = fixed_dt;
    }
    return ctrl;
}

py::dict trajectory_dict(const Trajectory& traj) {
    std::vector<double> t, z, v, a;
    t.reserve(traj.samples.size());
    for (const TrajectorySample& s : traj.samples) {
        t.push_back(s.t);
        z.push_back(s.z);
        v.push_back(s.v);
        a.push_back(s.a);
    }
    py::dict d;
    d["t"] = t;
    d["z"] = z;
    d["v"] = v;
    d["a"] = a;
    d["spin"] = traj.spin_z;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Spin-dependent magnetic trap dynamics and protocol analysis";

    m.def(
        "propagate",
        [](double z0, double v0, double mass, int spin, double eta, double duration,
           double b0, double sample_dt, double fixed_dt) {
            const Trajectory traj =
                propagate(z0, v0, diamond_preset(mass).with_spin(spin),
                          FieldParams{b0, eta, 0.0}, duration,
                          make_control(sample_dt, fixed_dt));
            return trajectory_dict(traj);
        },
        py::arg("z0"), py::arg("v0"), py::arg("mass"), py::arg("spin"), py::arg("eta"),
        py::arg("duration"), py::arg("b0") = 5.7e-4, py::arg("sample_dt") = 1e-4,
        py::arg("fixed_dt") = 0.0,
        "Integrate one arm in the trap; returns dict of t, z, v, a arrays");

    m.def(
        "superposition",
        [](double z0, double mass, double eta, double duration, double b0,
           double sample_dt) {
            const FieldParams field{b0, eta, 0.0};
            const StepControl ctrl = make_control(sample_dt, 0.0);
            const Trajectory up =
                propagate(z0, 0.0, diamond_preset(mass).with_spin(+1), field, duration, ctrl);
            const Trajectory down =
                propagate(z0, 0.0, diamond_preset(mass).with_spin(-1), field, duration, ctrl);
            const PairedSeries diff = superposition_series(up, down);
            std::vector<double> t, dz, dv;
            for (const SeriesPoint& p : diff.dz) {
                t.push_back(p.t);
                dz.push_back(p.value);
            }
            for (const SeriesPoint& p : diff.dv) dv.push_back(p.value);
            py::dict d;
            d["t"] = t;
            d["dz"] = dz;
            d["dv"] = dv;
            return d;
        },
        py::arg("z0"), py::arg("mass"), py::arg("eta"), py::arg("duration"),
        py::arg("b0") = 5.7e-4, py::arg("sample_dt") = 1e-4,
        "Two-arm separation series for a rest start at z0");

    m.def(
        "run_protocol",
        [](const std::string& preset_name) {
            const ProtocolPreset preset = builtin_protocol_preset(preset_name);
            const ProtocolResult r =
                run_protocol(preset.stages, diamond_preset(preset.mass), preset.options);
            py::dict d;
            d["T1"] = r.T1;
            d["T2"] = r.T2;
            d["T3"] = r.T3;
            d["max_superposition"] = r.max_superposition;
            d["closure_eta"] = r.closure_eta;
            d["closure_dz"] = r.closure_dz;
            d["closure_dv"] = r.closure_dv;
            return d;
        },
        py::arg("preset"), "Run a built-in staged protocol (m17, m16 or m15)");

    m.def(
        "budget_table",
        [](const std::vector<double>& masses, const std::string& stage, double epsilon) {
            py::list out;
            for (const CoherenceBudget& r :
                 budget_table(masses, budget_stage_preset(stage), epsilon)) {
                py::dict d;
                d["mass"] = r.mass;
                d["spin"] = r.spin_z;
                d["stage"] = r.stage;
                d["tol_z"] = r.tol_z;
                d["tol_p"] = r.tol_p;
                d["A"] = r.A;
                d["t"] = r.t;
                out.append(d);
            }
            return out;
        },
        py::arg("masses"), py::arg("stage"), py::arg("epsilon") = 0.1,
        "Relative field-gradient accuracy table for stage 'I' or 'II'");

    m.def(
        "harmonic_A",
        [](double mass, int spin, double eta, double correction, double b0) {
            return harmonic_A(diamond_preset(mass).with_spin(spin), eta, correction, b0);
        },
        py::arg("mass"), py::arg("spin"), py::arg("eta"), py::arg("correction") = 1.0,
        py::arg("b0") = 5.7e-4, "Corrected harmonic stiffness A in s^-2");

    m.def(
        "fit_velocity_slope",
        [](const std::vector<double>& masses) {
            const ScalingFit fit = fit_velocity_slope(masses);
            py::dict d;
            d["coefficient"] = fit.coefficient;
            d["r_squared"] = fit.r_squared;
            py::dict slopes;
            for (const auto& [mass, slope] : fit.per_mass_slopes)
                slopes[py::float_(mass)] = slope;
            d["slopes"] = slopes;
            return d;
        },
        py::arg("masses"), "Stage-I max |dv| vs T1 linear fit across masses");

    m.def("predict_amplitude", &predict_amplitude, py::arg("mass"), py::arg("sqrt_A"),
          py::arg("t1"), py::arg("v_max") = 0.14,
          "Stage-II amplitude predicted from the stage-I scaling law");
    m.def("t1_upper_bound", &t1_upper_bound, py::arg("mass"), py::arg("v_max") = 0.14,
          "Release-time bound implied by the scaling law");

    m.def(
        "minimum_uncertainty_widths",
        [](double mass, double t) {
            const UncertaintyWidths w = minimum_uncertainty_widths(mass, t);
            return py::make_tuple(w.width_z, w.width_p);
        },
        py::arg("mass"), py::arg("t"),
        "Packet widths (dz, dp) that minimise closure decoherence after time t");

    m.def("spin_coherence",
          [](double phi, double dz, double dp, double wz, double wp) {
              return spin_coherence(CoherenceInputs{phi, dz, dp, wz, wp});
          },
          py::arg("phi"), py::arg("delta_z"), py::arg("delta_p"), py::arg("width_z"),
          py::arg("width_p"), "Interferometric <sigma_x> for the given closure errors");

    m.def(
        "evolve_gaussian",
        [](double mass, int spin, double eta, double center, double width, double duration,
           std::size_t n_points, double b0) {
            const ParticleParams particle = diamond_preset(mass).with_spin(spin);
            const FieldParams field{b0, eta, 0.0};
            SpatialGrid grid = default_grid(std::max(std::abs(center), 10.0 * width),
                                            n_points);
            WavePacketState psi = init_gaussian(grid, center, width, spin);
            const double dt = suggested_dt(grid, particle, field);
            const auto n = static_cast<std::size_t>(std::ceil(duration / dt));
            const EvolveResult r = evolve(psi, particle, field, dt, n);
            std::vector<double> t, mean_z, width_z, product;
            for (const Observables& o : r.record) {
                t.push_back(o.t);
                mean_z.push_back(o.mean_z);
                width_z.push_back(o.width_z);
                product.push_back(o.product);
            }
            py::dict d;
            d["t"] = t;
            d["mean_z"] = mean_z;
            d["width_z"] = width_z;
            d["product"] = product;
            d["norm"] = r.state.norm();
            return d;
        },
        py::arg("mass"), py::arg("spin"), py::arg("eta"), py::arg("center") = 5e-8,
        py::arg("width") = 5e-9, py::arg("duration") = 1.0, py::arg("n_points") = 4096,
        py::arg("b0") = 5.7e-4,
        "Split-step wavepacket run; returns observable series and final norm");

    m.attr("hbar") = Constants{}.hbar;
    m.attr("default_b0") = 5.7e-4;
}
