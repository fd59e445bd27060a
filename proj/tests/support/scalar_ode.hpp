// Independent time-domain oracle: classical Langevin equation of the empty
// cavity, d<a>/dt = -(kappa/2)<a> - sqrt(kappa) alpha f(t), integrated with
// RK4 at a quarter of the grid spacing.
#pragma once

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "cavcat/pulse.hpp"

namespace oracle {

inline std::vector<std::complex<double>> empty_cavity_field(const cavcat::TimeGrid& grid,
                                                            const std::function<std::complex<double>(double)>& drive,
                                                            double kappa, int substeps = 4) {
    using C = std::complex<double>;
    const double sk = std::sqrt(kappa);
    auto rhs = [&](double t, C a) { return -0.5 * kappa * a - sk * drive(t); };
    std::vector<C> out(grid.size());
    C a{};
    out[0] = a;
    const double h = grid.spacing() / substeps;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        double t = grid.at(i);
        for (int s = 0; s < substeps; ++s) {
            const C k1 = rhs(t, a);
            const C k2 = rhs(t + 0.5 * h, a + 0.5 * h * k1);
            const C k3 = rhs(t + 0.5 * h, a + 0.5 * h * k2);
            const C k4 = rhs(t + h, a + h * k3);
            a += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += h;
        }
        out[i + 1] = a;
    }
    return out;
}

/// Output field a_out = f + sqrt(kappa) <a> for a unit-amplitude drive f.
inline cavcat::ComplexEnvelope empty_cavity_output(const cavcat::GaussianPulse& pulse, const cavcat::TimeGrid& grid,
                                                   double kappa) {
    const auto a = empty_cavity_field(grid, pulse, kappa);
    std::vector<std::complex<double>> out(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) out[i] = pulse(grid.at(i)) + std::sqrt(kappa) * a[i];
    return cavcat::ComplexEnvelope(grid, std::move(out));
}

} // namespace oracle
