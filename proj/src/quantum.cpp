#include "sgcat/quantum.hpp"

#include "sgcat/errors.hpp"

#include "detail.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <mutex>
#include <vector>

namespace sgcat {

namespace {

constexpr double kPi = 3.14159265358979323846;

// FFTW plan creation/destruction is not thread-safe; execution on distinct
// plans is. Independent evolutions may run on separate threads.
std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

struct FftPair {
    fftw_plan fwd = nullptr;
    fftw_plan bwd = nullptr;

    FftPair(std::complex<double>* buf, std::size_t n) {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        auto* c = reinterpret_cast<fftw_complex*>(buf);
        const int ni = static_cast<int>(n);
        fwd = fftw_plan_dft_1d(ni, c, c, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd = fftw_plan_dft_1d(ni, c, c, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~FftPair() {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }
    FftPair(const FftPair&) = delete;
    FftPair& operator=(const FftPair&) = delete;
};

// Angular wavenumber of FFT bin j with the usual wraparound ordering.
double bin_k(std::size_t j, std::size_t n, double dz) {
    const double jj = (j < n / 2) ? static_cast<double>(j)
                                  : static_cast<double>(j) - static_cast<double>(n);
    return 2.0 * kPi * jj / (static_cast<double>(n) * dz);
}

void check_state(const WavePacketState& state) {
    if (state.grid.n_points == 0 || state.amplitudes.size() != state.grid.n_points)
        throw InvalidParameter("wavepacket amplitudes do not match the grid");
}

double edge_probability(const WavePacketState& state) {
    const std::size_t n = state.grid.n_points;
    const double dz = state.grid.dz();
    double p = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
        p += std::norm(state.amplitudes[j]) * dz;
        p += std::norm(state.amplitudes[n - 1 - j]) * dz;
    }
    return p;
}

}  // namespace

SpatialGrid SpatialGrid::make(double z_min, double z_max, std::size_t n_points) {
    if (!(z_max > z_min)) throw InvalidParameter("grid needs z_max > z_min");
    if (n_points < 256 || (n_points & (n_points - 1)) != 0)
        throw InvalidParameter("grid point count must be a power of two >= 256");
    return SpatialGrid{z_min, z_max, n_points};
}

double WavePacketState::norm() const {
    detail::KahanSum s;
    for (const std::complex<double>& amp : amplitudes) s.add(std::norm(amp));
    return s.sum * grid.dz();
}

WavePacketState init_gaussian(const SpatialGrid& grid, double center, double width,
                              int spin_z) {
    const double dz = grid.dz();
    if (width < 4.0 * dz)
        throw ResolutionError("gaussian width under-resolved: need width >= 4 dz");
    if (!(center > grid.z_min + dz && center < grid.z_max - dz))
        throw InvalidParameter("gaussian center outside the grid interior");

    WavePacketState state;
    state.grid = grid;
    state.spin_z = spin_z;
    state.amplitudes.resize(grid.n_points);
    const double amp0 = std::pow(2.0 * kPi * width * width, -0.25);
    for (std::size_t j = 0; j < grid.n_points; ++j) {
        const double d = grid.z(j) - center;
        state.amplitudes[j] = amp0 * std::exp(-d * d / (4.0 * width * width));
    }
    // Exact discrete normalization (the analytic constant is off by the
    // truncated tails).
    const double scale = 1.0 / std::sqrt(state.norm());
    for (std::complex<double>& amp : state.amplitudes) amp *= scale;
    return state;
}

EvolveResult evolve(const WavePacketState& state, const ParticleParams& particle,
                    const FieldParams& p, double dt, std::size_t n_steps,
                    const EvolveOptions& opt, const Constants& k) {
    check_state(state);
    if (!(dt > 0.0)) throw InvalidParameter("evolve: dt must be positive");
    if (opt.record_every == 0) throw InvalidParameter("evolve: record_every must be >= 1");

    const std::size_t n = state.grid.n_points;
    const double dz = state.grid.dz();

    // Potential on the grid, gauged to U(0) so the phase advance stays small.
    const double u0 = potential_energy(0.0, particle, p, k);
    std::vector<double> u(n);
    double u_max = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        u[j] = potential_energy(state.grid.z(j), particle, p, k) - u0;
        u_max = std::max(u_max, std::abs(u[j]));
    }

    const double k_nyquist = kPi / dz;
    const double kinetic_phase = k.hbar * k_nyquist * k_nyquist * dt / (2.0 * particle.mass);
    const double potential_phase = u_max * dt / k.hbar;
    if (kinetic_phase >= kPi / 4.0)
        throw InvalidParameter("evolve: dt too large for the grid (kinetic phase >= pi/4)");
    if (potential_phase >= kPi / 4.0)
        throw InvalidParameter("evolve: dt too large for the potential (phase >= pi/4)");

    std::vector<std::complex<double>> half_v(n), kinetic(n);
    for (std::size_t j = 0; j < n; ++j) {
        half_v[j] = std::polar(1.0, -u[j] * dt / (2.0 * k.hbar));
        const double kj = bin_k(j, n, dz);
        kinetic[j] = std::polar(1.0, -k.hbar * kj * kj * dt / (2.0 * particle.mass));
    }

    EvolveResult out;
    out.state = state;
    std::vector<std::complex<double>>& psi = out.state.amplitudes;
    FftPair plans(psi.data(), n);
    const double inv_n = 1.0 / static_cast<double>(n);
    const double t0 = state.t;

    auto checkpoint = [&](std::size_t step) {
        out.state.t = t0 + static_cast<double>(step) * dt;
        const double norm = out.state.norm();
        if (std::abs(norm - 1.0) > opt.norm_tolerance)
            throw Error("evolve: norm drifted beyond tolerance");
        if (edge_probability(out.state) > opt.boundary_tolerance)
            throw BoundaryEscape("evolve: probability reached the grid boundary");
        out.record.push_back(observables(out.state, particle, k));
    };

    checkpoint(0);
    for (std::size_t step = 0; step < n_steps; ++step) {
        for (std::size_t j = 0; j < n; ++j) psi[j] *= half_v[j];
        fftw_execute(plans.fwd);
        for (std::size_t j = 0; j < n; ++j) psi[j] *= kinetic[j];
        fftw_execute(plans.bwd);
        for (std::size_t j = 0; j < n; ++j) psi[j] *= half_v[j] * inv_n;
        if ((step + 1) % opt.record_every == 0 || step + 1 == n_steps) checkpoint(step + 1);
    }
    return out;
}

Observables observables(const WavePacketState& state, const ParticleParams& particle,
                        const Constants& k) {
    (void)particle;
    check_state(state);
    const std::size_t n = state.grid.n_points;
    const double dz = state.grid.dz();

    detail::KahanSum w_sum, z_sum, z2_sum;
    for (std::size_t j = 0; j < n; ++j) {
        const double w = std::norm(state.amplitudes[j]) * dz;
        const double z = state.grid.z(j);
        w_sum.add(w);
        z_sum.add(w * z);
        z2_sum.add(w * z * z);
    }
    const double total = w_sum.sum;
    if (!(total > 0.0)) throw InvalidParameter("observables: empty wavepacket");
    const double mean_z = z_sum.sum / total;
    const double var_z = std::max(0.0, z2_sum.sum / total - mean_z * mean_z);

    std::vector<std::complex<double>> spec = state.amplitudes;
    {
        FftPair plans(spec.data(), n);
        fftw_execute(plans.fwd);
    }
    detail::KahanSum pw_sum, p_sum, p2_sum;
    const double bin_weight = dz / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) {
        const double w = std::norm(spec[j]) * bin_weight;
        const double p = k.hbar * bin_k(j, n, dz);
        pw_sum.add(w);
        p_sum.add(w * p);
        p2_sum.add(w * p * p);
    }
    const double mean_p = p_sum.sum / pw_sum.sum;
    const double var_p = std::max(0.0, p2_sum.sum / pw_sum.sum - mean_p * mean_p);

    Observables obs;
    obs.t = state.t;
    obs.mean_z = mean_z;
    obs.mean_p = mean_p;
    obs.width_z = std::sqrt(var_z);
    obs.width_p = std::sqrt(var_p);
    obs.product = obs.width_z * obs.width_p;
    return obs;
}

double suggested_dt(const SpatialGrid& grid, const ParticleParams& particle,
                    const FieldParams& p, const Constants& k) {
    if (particle.mass <= 0.0) throw InvalidParameter("suggested_dt: mass must be positive");
    const double dz = grid.dz();
    const double k_nyquist = kPi / dz;
    const double dt_kinetic =
        (kPi / 8.0) * 2.0 * particle.mass / (k.hbar * k_nyquist * k_nyquist);

    const double u0 = potential_energy(0.0, particle, p, k);
    double u_max = 0.0;
    for (std::size_t j = 0; j < grid.n_points; ++j)
        u_max = std::max(u_max, std::abs(potential_energy(grid.z(j), particle, p, k) - u0));
    if (u_max <= 0.0) return dt_kinetic;
    return std::min(dt_kinetic, (kPi / 8.0) * k.hbar / u_max);
}

SpatialGrid default_grid(double z_turn, std::size_t n_points) {
    if (!(z_turn > 0.0)) throw InvalidParameter("default_grid: z_turn must be positive");
    return SpatialGrid::make(-4.0 * z_turn, 4.0 * z_turn, n_points);
}

}  // namespace sgcat
