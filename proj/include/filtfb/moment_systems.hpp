#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "filtfb/analytics.hpp"
#include "filtfb/errors.hpp"
#include "filtfb/numerics/integrate.hpp"
#include "filtfb/numerics/linalg.hpp"
#include "filtfb/protocol.hpp"

namespace filtfb {

/// Closed affine ODE dx/dt = A x + c for the second moments of a feedback protocol.
/// Component `energy_index` is the ensemble energy of the feedback Hamiltonian in ħω.
struct MomentSystem {
    RealMatrix A;
    RealVector c;
    std::vector<std::string> labels;
    std::size_t energy_index = 0;
    ProtocolKind kind = ProtocolKind::LowPass1;

    [[nodiscard]] std::size_t dim() const noexcept { return c.size(); }
};

struct SteadyState {
    RealVector values;
    double energy_over_hw = 0.0;
    ComplexVector eigenvalues;
    bool stable = false;
    bool physical = false;
    /// ‖A x + c‖∞ / ‖c‖∞
    double residual = 0.0;
};

namespace detail {
inline void require_kind(const ProtocolParams& p, ProtocolKind expected) {
    if (p.kind != expected) {
        throw std::invalid_argument("moment system for " + std::string(to_string(expected)) +
                                    " requested with protocol " + std::string(to_string(p.kind)));
    }
    p.validate();
}
}  // namespace detail

/// Energy of a single low-pass stage relaxes at 2γ toward ½(λ/γ + γ/4λ).
inline MomentSystem build_single_layer(const ProtocolParams& p) {
    detail::require_kind(p, ProtocolKind::LowPass1);
    const double g = p.gamma, l = p.lambda;
    return {RealMatrix{{-2.0 * g}}, RealVector{l + g * g / (4.0 * l)}, {"<H1>/hw"}, 0, p.kind};
}

/// Two-stage cascade (γ, Ω) with feedback on D2. Components:
///   R1 = <H2>/ħω
///   R2 = <(x-Dx2)(Dx1-Dx2)> + <(p-Dp2)(Dp1-Dp2)>
///   R3 = <(Dx1-Dx2)^2> + <(Dp1-Dp2)^2>
///   R4 = <(x-Dx2)(Dp1-Dp2)> - <(p-Dp2)(Dx1-Dx2)>
inline MomentSystem build_two_layer(const ProtocolParams& p) {
    detail::require_kind(p, ProtocolKind::LowPass2);
    const double l = p.lambda, g = p.gamma, O = p.Omega, w = p.omega;
    RealMatrix a{{0.0, -O, 0.0, 0.0},
                 {2.0 * g, -(O + g), -O, -w},
                 {0.0, 2.0 * g, -2.0 * (O + g), 0.0},
                 {0.0, w, 0.0, -(O + g)}};
    return {std::move(a),
            RealVector{l, 0.0, g * g / (2.0 * l), 0.0},
            {"<H2>/hw", "<(x-Dx2)(Dx1-Dx2)>+<(p-Dp2)(Dp1-Dp2)>", "<(Dx1-Dx2)^2>+<(Dp1-Dp2)^2>",
             "<(x-Dx2)(Dp1-Dp2)>-<(p-Dp2)(Dx1-Dx2)>"},
            0,
            p.kind};
}

/// Three-stage cascade (γ, Ω, Ω) with feedback on D3; nine second moments S1..S9.
inline MomentSystem build_three_layer(const ProtocolParams& p) {
    detail::require_kind(p, ProtocolKind::LowPass3);
    const double l = p.lambda, g = p.gamma, O = p.Omega, w = p.omega;
    RealMatrix a{
        {0, -O, 0, 0, 0, 0, 0, 0, 0},
        {0, -O, w, -O, O, 0, 0, 0, 0},
        {0, -w, -O, 0, 0, O, 0, 0, 0},
        {0, 0, 0, -2 * O, 0, 0, 2 * O, 0, 0},
        {2 * g, -g, 0, 0, -(g + O), w, -O, 0, 0},
        {0, 0, -g, 0, -w, -(g + O), 0, -O, 0},
        {0, g, 0, -g, 0, 0, -(2 * O + g), 0, O},
        {0, 0, -g, 0, 0, 0, 0, -(2 * O + g), 0},
        {0, 0, 0, 0, 2 * g, 0, -2 * g, 0, -2 * (O + g)},
    };
    RealVector c(9, 0.0);
    c[0] = l;
    c[8] = g * g / (2.0 * l);
    return {std::move(a),
            std::move(c),
            {"<H3>/hw", "<(x-Dx3)(Dx2-Dx3)>+<(p-Dp3)(Dp2-Dp3)>", "<(p-Dp3)(Dx2-Dx3)>-<(x-Dx3)(Dp2-Dp3)>",
             "<(Dx2-Dx3)^2>+<(Dp2-Dp3)^2>", "<(x-Dx3)(Dx1-Dx2)>+<(p-Dp3)(Dp1-Dp2)>",
             "<(p-Dp3)(Dx1-Dx2)>-<(x-Dx3)(Dp1-Dp2)>", "<(Dx1-Dx2)(Dx2-Dx3)>+<(Dp1-Dp2)(Dp2-Dp3)>",
             "<(Dp2-Dp3)(Dx1-Dx2)>-<(Dx2-Dx3)(Dp1-Dp2)>", "<(Dx1-Dx2)^2>+<(Dp1-Dp2)^2>"},
            0,
            p.kind};
}

/// Band-pass filter (γ, Ω) with feedback on the cosine quadrature E1; nine moments T1..T9.
///
/// The constant drive of T1 is λ + γ²/(4λ): the measurement backaction on both
/// quadratures (λ) plus the white-noise heating of E1 (γ²/4λ).
inline MomentSystem build_bandpass_moments(const ProtocolParams& p) {
    detail::require_kind(p, ProtocolKind::BandPass);
    const double l = p.lambda, g = p.gamma, O = p.Omega, w = p.omega;
    RealMatrix a{
        {-2 * g, O, 0, 0, 0, 0, 0, 0, 0},
        {0, -2 * g, -w, O, O, 0, 0, 0, 0},
        {0, w, -2 * g, 0, 0, O, 0, 0, 0},
        {0, 0, 0, -2 * g, 0, 0, 2 * O, 0, 0},
        {2 * g, -O, 0, 0, -g, -w, O, 0, 0},
        {0, 0, -O, 0, w, -g, 0, O, 0},
        {0, g, 0, -O, 0, 0, -g, 0, O},
        {0, 0, -g, 0, 0, 0, 0, -g, 0},
        {0, 0, 0, 0, 2 * g, 0, -2 * O, 0, 0},
    };
    RealVector c(9, 0.0);
    c[0] = l + g * g / (4.0 * l);
    c[4] = -g * g / (2.0 * l);
    c[8] = g * g / (2.0 * l);
    return {std::move(a),
            std::move(c),
            {"<H_BP>/hw", "<(x-Ex1)Ex2>+<(p-Ep1)Ep2>", "<(x-Ex1)Ep2>-<(p-Ep1)Ex2>", "<Ex2^2+Ep2^2>",
             "<(x-Ex1)Ex1>+<(p-Ep1)Ep1>", "<(x-Ex1)Ep1>-<(p-Ep1)Ex1>", "<Ex1Ex2+Ep1Ep2>", "<Ex2Ep1-Ep2Ex1>",
             "<Ex1^2+Ep1^2>"},
            0,
            p.kind};
}

inline MomentSystem build_moment_system(const ProtocolParams& p) {
    switch (p.kind) {
        case ProtocolKind::LowPass1: return build_single_layer(p);
        case ProtocolKind::LowPass2: return build_two_layer(p);
        case ProtocolKind::LowPass3: return build_three_layer(p);
        case ProtocolKind::BandPass: return build_bandpass_moments(p);
    }
    throw std::invalid_argument("unknown protocol");
}

/// Relative margin for stability: max Re(eig) must be below −kStabilityTolerance·‖A‖∞.
inline constexpr double kStabilityTolerance = 1e-9;

inline bool is_stable(const RealMatrix& a, std::span<const Complex> ev) {
    return max_real_part(ev) < -kStabilityTolerance * a.norm_inf();
}

/// Fixed point of the moment system plus its stability classification.
///
/// An unstable system still gets its formal fixed point (stable == false); callers
/// must not read it as a reachable energy. Throws NumericalError("no unique
/// steady state") when A is singular.
inline SteadyState steady_state(const MomentSystem& sys) {
    SteadyState out;
    out.eigenvalues = eigenvalues(sys.A);
    out.stable = is_stable(sys.A, out.eigenvalues);

    RealVector rhs(sys.c.size());
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = -sys.c[i];
    try {
        out.values = solve_linear(sys.A, rhs);
    } catch (const NumericalError& e) {
        throw NumericalError(std::string("no unique steady state: ") + e.what());
    }
    RealVector r = sys.A * out.values;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += sys.c[i];
    const double cn = norm_inf(std::span<const double>(sys.c));
    out.residual = norm_inf(std::span<const double>(r)) / (cn > 0.0 ? cn : 1.0);
    out.energy_over_hw = out.values[sys.energy_index];
    out.physical = out.energy_over_hw >= 0.5 - kPhysicalSlack;
    return out;
}

/// RK4 transient of the moment system from x0.
inline std::vector<RealVector> evolve(const MomentSystem& sys, const RealVector& x0, double dt, std::size_t n) {
    return integrate_affine(sys.A, sys.c, x0, dt, n);
}

/// Default transient start: energy E0, all correlators zero.
inline RealVector default_initial_moments(const MomentSystem& sys, double energy0 = 0.5) {
    RealVector x0(sys.dim(), 0.0);
    x0[sys.energy_index] = energy0;
    return x0;
}

/// Monic coefficients of det(sI − A), highest power first (Faddeev–LeVerrier).
inline RealVector characteristic_polynomial(const RealMatrix& a) {
    if (!a.is_square()) throw std::invalid_argument("characteristic_polynomial: matrix is not square");
    const std::size_t n = a.rows();
    RealVector coeffs(n + 1, 0.0);
    coeffs[0] = 1.0;
    RealMatrix m(n, n);  // M_0 = 0
    const RealMatrix id = RealMatrix::identity(n);
    for (std::size_t k = 1; k <= n; ++k) {
        m = a * m + coeffs[k - 1] * id;
        coeffs[k] = -(a * m).trace() / static_cast<double>(k);
    }
    return coeffs;
}

}  // namespace filtfb
