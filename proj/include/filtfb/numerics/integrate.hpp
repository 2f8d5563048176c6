#pragma once

#include <stdexcept>
#include <vector>

#include "filtfb/errors.hpp"
#include "filtfb/numerics/matrix.hpp"

namespace filtfb {

/// Classical fourth-order Runge–Kutta for dx/dt = A x + c.
///
/// Returns n + 1 states, the first being x0. Throws NumericalError carrying the
/// step index if the state stops being finite.
inline std::vector<RealVector> integrate_affine(const RealMatrix& a, std::span<const double> c,
                                                std::span<const double> x0, double dt, std::size_t n) {
    if (!a.is_square() || a.rows() != c.size() || a.rows() != x0.size()) {
        throw std::invalid_argument("integrate_affine: dimension mismatch");
    }
    if (!(dt > 0.0)) throw std::invalid_argument("integrate_affine: dt must be positive");

    const std::size_t m = x0.size();
    auto rhs = [&](const RealVector& x) {
        RealVector d = a * x;
        for (std::size_t i = 0; i < m; ++i) d[i] += c[i];
        return d;
    };

    std::vector<RealVector> path;
    path.reserve(n + 1);
    path.emplace_back(x0.begin(), x0.end());
    RealVector tmp(m);
    for (std::size_t step = 1; step <= n; ++step) {
        const RealVector& x = path.back();
        const RealVector k1 = rhs(x);
        for (std::size_t i = 0; i < m; ++i) tmp[i] = x[i] + 0.5 * dt * k1[i];
        const RealVector k2 = rhs(tmp);
        for (std::size_t i = 0; i < m; ++i) tmp[i] = x[i] + 0.5 * dt * k2[i];
        const RealVector k3 = rhs(tmp);
        for (std::size_t i = 0; i < m; ++i) tmp[i] = x[i] + dt * k3[i];
        const RealVector k4 = rhs(tmp);
        RealVector next(m);
        for (std::size_t i = 0; i < m; ++i) {
            next[i] = x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            if (!std::isfinite(next[i])) throw NumericalError("integration overflow", step);
        }
        path.push_back(std::move(next));
    }
    return path;
}

inline std::vector<RealVector> integrate_affine(const RealMatrix& a, const RealVector& c,
                                                const RealVector& x0, double dt, std::size_t n) {
    return integrate_affine(a, std::span<const double>(c), std::span<const double>(x0), dt, n);
}

}  // namespace filtfb
