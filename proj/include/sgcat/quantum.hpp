#pragma once

#include "sgcat/dynamics.hpp"

#include <complex>
#include <vector>

namespace sgcat {

/// Uniform spatial grid with a power-of-two point count (spectral transforms).
struct SpatialGrid {
    double z_min = 0.0;  ///< m
    double z_max = 0.0;  ///< m
    std::size_t n_points = 0;

    double dz() const { return (z_max - z_min) / static_cast<double>(n_points); }
    double z(std::size_t i) const { return z_min + dz() * static_cast<double>(i); }

    /// Validates bounds and the power-of-two requirement (n >= 256).
    static SpatialGrid make(double z_min, double z_max, std::size_t n_points);
};

struct WavePacketState {
    SpatialGrid grid;
    std::vector<std::complex<double>> amplitudes;
    double t = 0.0;
    int spin_z = 0;

    double norm() const;  ///< sum |psi|^2 dz
};

/// psi(z, 0) = (2 pi w^2)^(-1/4) exp(-(z - center)^2 / (4 w^2)), zero mean
/// momentum. Throws ResolutionError when width < 4 dz and InvalidParameter
/// when the center is outside the grid interior.
WavePacketState init_gaussian(const SpatialGrid& grid, double center, double width,
                              int spin_z = 0);

struct EvolveOptions {
    std::size_t record_every = 200;  ///< observable recording cadence in steps
    double norm_tolerance = 1e-8;
    double boundary_tolerance = 1e-8;  ///< max probability within 3 points of an edge
};

struct Observables {
    double t;
    double mean_z;   ///< m
    double mean_p;   ///< kg m/s
    double width_z;  ///< m
    double width_p;  ///< kg m/s
    double product;  ///< J s
};

struct EvolveResult {
    WavePacketState state;
    std::vector<Observables> record;  ///< every record_every steps plus the final step
};

/// Symmetric split-step (half potential, spectral kinetic, half potential)
/// under H = p^2/2m + U(z) - U(0), with U from potential_energy. Preconditions
/// (checked): per-step kinetic phase at the Nyquist momentum and maximum
/// potential phase over the grid both < pi/4. Throws BoundaryEscape when
/// probability piles up at the grid edges.
EvolveResult evolve(const WavePacketState& state, const ParticleParams& particle,
                    const FieldParams& p, double dt, std::size_t n_steps,
                    const EvolveOptions& opt = EvolveOptions{},
                    const Constants& k = Constants{});

/// Position moments by quadrature, momentum moments via the spectral
/// representation.
Observables observables(const WavePacketState& state, const ParticleParams& particle,
                        const Constants& k = Constants{});

/// Largest dt satisfying both pi/4 phase preconditions with a safety factor
/// of 2 (max single-step phase < pi/8).
double suggested_dt(const SpatialGrid& grid, const ParticleParams& particle,
                    const FieldParams& p, const Constants& k = Constants{});

/// Default grid for a classical turning point z_turn: 2^14 points spanning
/// [-4 z_turn, 4 z_turn].
SpatialGrid default_grid(double z_turn, std::size_t n_points = 1u << 14);

}  // namespace sgcat
