#pragma once

#include "sgcat/dynamics.hpp"

#include <limits>
#include <string>
#include <vector>

namespace sgcat {

struct EndCondition {
    enum class Kind { FixedDuration, SuperpositionZeroCrossing, SimultaneousZero };
    enum class Select { FirstAfter, MaxCompanion };

    Kind kind = Kind::FixedDuration;
    double window = 0.0;        ///< s; stage length (fixed) or event-search cap
    double accuracy_dz = 1e-12; ///< m, crossing refinement accuracy
    double accuracy_dv = 1e-12; ///< m/s, SimultaneousZero only
    Select select = Select::FirstAfter;
    double after = 0.0;         ///< s into the stage; FirstAfter ignores earlier crossings

    static EndCondition fixed(double duration) {
        return EndCondition{Kind::FixedDuration, duration};
    }
};

struct StageConfig {
    double eta = 0.0;                 ///< T/m^2
    double initial_magnetic_z = 0.0;  ///< m, where the arms sit at stage start
    EndCondition end;
};

struct SeriesPoint {
    double t;
    double value;
};
using Series = std::vector<SeriesPoint>;

struct PairedSeries {
    Series dz;  ///< m
    Series dv;  ///< m/s
};

/// Lab-frame differences up - down on the overlap of the two time domains.
/// Throws DomainMismatch when the domains do not overlap.
PairedSeries superposition_series(const Trajectory& up, const Trajectory& down);

struct ZeroCrossing {
    enum class Mode { FirstAfter, MaxCompanion };
    Mode mode = Mode::FirstAfter;
    double t0 = -std::numeric_limits<double>::infinity();  ///< FirstAfter: crossings must be > t0
    const Series* companion = nullptr;  ///< MaxCompanion: pick crossing maximizing |companion|
};

/// Event time where the interpolated series reaches zero, refined by
/// bisection/secant until |value(t)| <= accuracy. Throws NotFound when the
/// series never brackets (or touches) zero under the given mode.
double detect_zero(const Series& series, double accuracy, const ZeroCrossing& mode);

struct ClosureSearchBox {
    double eta_lo = 0.0, eta_hi = 0.0;  ///< T/m^2
    double z_lo = 0.0, z_hi = 0.0;      ///< m, initial magnetic coordinate
    double lambda_z = 1e-12;            ///< m, residual normalizer
    double lambda_v = 1e-12;            ///< m/s, residual normalizer
};

struct ProtocolOptions {
    StepControl solver;
    double sample_dt = 1e-4;   ///< s, series cadence
    double time_cap = 5.0;     ///< s, protocol-timeout guard
    double b0 = 5.7e-4;        ///< T
    bool closure_search = false;  ///< refine the last stage's (eta, z) for closure
    ClosureSearchBox box;         ///< used when closure_search is set
};

struct ProtocolResult {
    std::vector<Trajectory> arm_up;    ///< one per stage, magnetic coordinates
    std::vector<Trajectory> arm_down;
    std::vector<double> stage_start;   ///< absolute stage start times
    double T1 = std::numeric_limits<double>::quiet_NaN();
    double T2 = std::numeric_limits<double>::quiet_NaN();
    double T3 = std::numeric_limits<double>::quiet_NaN();
    Series dz_series;  ///< lab frame, m
    Series dv_series;  ///< m/s
    double max_superposition = 0.0;  ///< m
    double closure_eta = 0.0;        ///< last-stage eta actually used
    double closure_z = 0.0;          ///< last-stage initial magnetic z actually used
    double closure_dz = 0.0;         ///< |dz| at T3, m
    double closure_dv = 0.0;         ///< |dv| at T3, m/s
};

/// Runs the staged catapult protocol for both spin arms. The arms start at
/// rest at stage 1's initial_magnetic_z; at each transition the magnetic
/// coordinate is re-based to the next stage's initial_magnetic_z while the
/// lab-frame kinematic state carries over unchanged. Event times are recorded
/// per stage end condition. Throws ProtocolTimeout when an event is not found
/// within the stage window / time cap.
ProtocolResult run_protocol(const std::vector<StageConfig>& stages,
                            const ParticleParams& particle,
                            const ProtocolOptions& opt = ProtocolOptions{},
                            const Constants& k = Constants{});

/// Paired kinematic state of the two arms at a stage boundary (lab frame).
struct PairState {
    double t = 0.0;
    double z_up = 0.0, v_up = 0.0;      ///< m, m/s
    double z_down = 0.0, v_down = 0.0;
};

struct ClosureResult {
    double eta;       ///< T/m^2
    double z;         ///< m, initial magnetic coordinate
    double T3;        ///< s, absolute
    double residual;  ///< (dz/lambda_z)^2 + (dv/lambda_v)^2 at T3
    double dz;        ///< m at T3
    double dv;        ///< m/s at T3
};

/// Derivative-free search over (eta, initial_magnetic_z) for the re-trap stage
/// that closes both superposition size and velocity difference. Seeded at the
/// box center; returns the first candidate whose residual meets accuracies
/// (accuracy_dz, accuracy_dv), else throws SearchFailure with the best
/// residual found.
ClosureResult search_closure(const PairState& at_t2, const ParticleParams& particle,
                             double time_budget, const ClosureSearchBox& box,
                             double accuracy_dz, double accuracy_dv,
                             const StepControl& solver = StepControl{},
                             double b0 = 5.7e-4, const Constants& k = Constants{});

struct ProtocolPreset {
    std::string name;
    double mass;  ///< kg
    std::vector<StageConfig> stages;
    ProtocolOptions options;
};

/// Shipped presets: "m17", "m16", "m15" (masses 1e-17, 1e-16, 1e-15 kg).
ProtocolPreset builtin_protocol_preset(const std::string& name);

}  // namespace sgcat
