#pragma once

#include "sgcat/analysis.hpp"
#include "sgcat/coherence.hpp"
#include "sgcat/protocol.hpp"
#include "sgcat/quantum.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace sgcat {

enum class RunMode { Simulate, Protocol, CoherenceBudget, Quantum, ScalingFit, Sweep };

enum class OutputFormat { Csv, Svg, Both };

std::string to_string(RunMode m);
RunMode run_mode_from_string(const std::string& s);

struct SimulateConfig {
    int spin = 0;  ///< 0 runs both arms; +1/-1 a single arm
};

struct CoherenceConfig {
    double epsilon = 0.1;
    std::vector<std::string> stages{"I", "II"};
    std::vector<double> masses{1e-17, 1e-16, 1e-15};
    std::map<std::string, BudgetStagePreset> presets;  ///< per-stage overrides
};

struct QuantumConfig {
    int spin = 1;
    double eta = 1e6;        ///< T/m^2
    double center = 5e-8;    ///< m
    double width = 5e-9;     ///< m
    double duration = 2.0;   ///< s
    double dt = 0.0;         ///< s; 0 = suggested_dt
    std::size_t n_points = 0;  ///< 0 = default grid
    double z_min = 0.0, z_max = 0.0;  ///< m; both 0 = default span
    std::size_t record_every = 200;
    std::size_t density_snapshots = 0;  ///< |psi|^2 CSV snapshots to write
};

struct ScalingConfig {
    std::vector<double> masses{1e-17, 1e-16, 1e-15};
    StageOneConfig stage1;
};

struct SweepConfig {
    /// Parameter name -> grid values; cartesian product in sorted-key,
    /// row-major order. Supported: eta_tesla_per_m2, mass_kg, z0_um,
    /// duration_s.
    std::map<std::string, std::vector<double>> grid;
};

struct RunConfig {
    RunMode mode = RunMode::Simulate;
    Constants constants;
    ParticleParams particle;  ///< spin unset; arms assigned per run
    double b0 = 5.7e-4;       ///< T
    double b_min = 0.0;       ///< T, adiabaticity floor enforced at load
    std::vector<StageConfig> stages;
    StepControl solver;
    double sample_dt = 1e-4;  ///< s
    double time_cap = 5.0;    ///< s
    bool closure_search = false;
    ClosureSearchBox box;
    double duration = 0.0;    ///< s, simulate-mode run length (stages[0].end.window)
    SimulateConfig simulate;
    CoherenceConfig coherence;
    QuantumConfig quantum;
    ScalingConfig scaling;
    SweepConfig sweep;
    std::filesystem::path out_dir;
    OutputFormat format = OutputFormat::Csv;
    int workers = 1;
};

/// Parses and validates a JSON config document. Unknown keys anywhere are
/// rejected with their path; type and invariant violations throw ConfigError.
/// `mode_override` comes from the CLI subcommand; a "mode" key in the file
/// must agree with it when both are present.
RunConfig parse_config(const std::string& json_text,
                       const std::string& mode_override = "");

RunConfig load_config(const std::filesystem::path& file,
                      const std::string& mode_override = "");

/// Default output directory: $SGCAT_OUT_DIR if set, else current directory.
std::filesystem::path default_out_dir();

}  // namespace sgcat
