#pragma once

#include "sgcat/coherence.hpp"
#include "sgcat/dynamics.hpp"
#include "sgcat/protocol.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace sgcat {

/// Round-trip double formatting (%.17g) used for all CSV data so outputs are
/// byte-stable across runs and worker counts.
std::string format_double(double v);

/// Header: t_s,z_um,v_um_per_s,a_um_per_s2,spin,stage
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

/// Header: t_s,dz_um,dv_um_per_s
void write_paired_series_csv(const std::filesystem::path& path, const Series& dz,
                             const Series& dv);

/// Header: mass_kg,spin,stage,tol_z,tol_p,A_s2,t_s,eta
void write_budget_csv(const std::filesystem::path& path,
                      const std::vector<CoherenceBudget>& rows);

/// Formatted text table mirroring the budget CSV for human reading.
void write_budget_text(const std::filesystem::path& path,
                       const std::vector<CoherenceBudget>& rows);

struct SvgSeries {
    std::string label;
    std::string color;  ///< CSS color
    const Series* data;
};

/// Minimal standalone SVG line plot (axes, ticks, labels, legend).
void write_svg_plot(const std::filesystem::path& path, const std::string& title,
                    const std::string& x_label, const std::string& y_label,
                    const std::vector<SvgSeries>& series);

}  // namespace sgcat
