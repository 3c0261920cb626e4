#include "sgcat/field.hpp"

#include "sgcat/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sgcat {

BField field_vector(double z, double x, const FieldParams& p) {
    return BField{p.b0 + p.eta * z * z - p.eta * x * x, -2.0 * p.eta * z * x};
}

double grad_b_squared_z(double z, const FieldParams& p) {
    return 4.0 * p.eta * z * (p.b0 + p.eta * z * z);
}

double larmor_frequency(double z, double x, const FieldParams& p, const Constants& k) {
    const BField b = field_vector(z, x, p);
    return k.gyromagnetic_ratio() * std::hypot(b.bz, b.bx);
}

double adiabaticity_margin(const Trajectory& traj, const FieldParams& p,
                           const Constants& k) {
    const auto& s = traj.samples;
    if (s.size() < 2) {
        throw InsufficientData("adiabaticity_margin: need at least 2 samples");
    }
    std::vector<double> wl(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        wl[i] = larmor_frequency(s[i].z, 0.0, p, k);
    }
    double margin = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double dwdt;
        if (i == 0) {
            dwdt = (wl[1] - wl[0]) / (s[1].t - s[0].t);
        } else if (i + 1 == s.size()) {
            dwdt = (wl[i] - wl[i - 1]) / (s[i].t - s[i - 1].t);
        } else {
            dwdt = (wl[i + 1] - wl[i - 1]) / (s[i + 1].t - s[i - 1].t);
        }
        const double w2 = wl[i] * wl[i];
        const double ratio = w2 > 0.0 ? std::fabs(dwdt) / w2
                                      : std::numeric_limits<double>::infinity();
        margin = std::max(margin, ratio);
    }
    return margin;
}

}  // namespace sgcat
