#pragma once

#include <stdexcept>
#include <string>

namespace sgcat {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidParameter : Error {
    using Error::Error;
};

struct InsufficientData : Error {
    using Error::Error;
};

/// Step-size underflow during ODE integration; carries the last good state.
struct IntegrationFailure : Error {
    double t, z, v;
    IntegrationFailure(const std::string& msg, double t_, double z_, double v_)
        : Error(msg), t(t_), z(z_), v(v_) {}
};

/// Two series/trajectories do not share a usable time domain.
struct DomainMismatch : Error {
    using Error::Error;
};

/// No zero crossing (or other sought feature) in the searched window.
struct NotFound : Error {
    using Error::Error;
};

struct FitFailure : Error {
    using Error::Error;
};

struct ModelInapplicable : Error {
    using Error::Error;
};

/// eta_tolerance_* called with sqrt(A)*t not a multiple of 2*pi.
struct ClosurePhase : Error {
    using Error::Error;
};

struct ResolutionError : Error {
    using Error::Error;
};

struct BoundaryEscape : Error {
    using Error::Error;
};

struct ProtocolTimeout : Error {
    using Error::Error;
};

/// Closure search exhausted its box; carries the best residual seen.
struct SearchFailure : Error {
    double best_residual;
    SearchFailure(const std::string& msg, double r) : Error(msg), best_residual(r) {}
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace sgcat
