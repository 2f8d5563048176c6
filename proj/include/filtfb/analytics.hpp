#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "filtfb/protocol.hpp"

namespace filtfb {

/// Energies at or below ħω/2 minus this slack are flagged unphysical.
inline constexpr double kPhysicalSlack = 1e-9;

enum class EnergyNote { Physical, Unphysical, NotApplicable };

inline const char* to_string(EnergyNote n) {
    switch (n) {
        case EnergyNote::Physical: return "physical";
        case EnergyNote::Unphysical: return "unphysical";
        case EnergyNote::NotApplicable: return "na";
    }
    return "?";
}

/// Asymptotic ensemble energy in units of ħω.
struct EnergyResult {
    double energy_over_hw = std::numeric_limits<double>::quiet_NaN();
    bool physical = false;
    EnergyNote note = EnergyNote::NotApplicable;

    static EnergyResult from_value(double e) {
        if (!std::isfinite(e)) return not_applicable();
        const bool phys = e >= 0.5 - kPhysicalSlack;
        return {e, phys, phys ? EnergyNote::Physical : EnergyNote::Unphysical};
    }
    static EnergyResult not_applicable() { return {}; }

    [[nodiscard]] bool applicable() const noexcept { return note != EnergyNote::NotApplicable; }
};

namespace detail {
inline void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument(std::string(name) + " must be positive");
}
}  // namespace detail

/// Effective bandwidth of two cascaded low-pass stages: 1/γ̃ = 1/γ + 1/Ω.
inline double effective_frequency(double gamma, double Omega) {
    return gamma * Omega / (gamma + Omega);
}

/// Single low-pass stage: ½(λ/γ + γ/4λ). Minimal (ground state) at γ = 2λ.
inline EnergyResult energy_1layer(double lambda, double gamma) {
    detail::require_positive(lambda, "lambda");
    detail::require_positive(gamma, "gamma");
    return EnergyResult::from_value(0.5 * (lambda / gamma + gamma / (4.0 * lambda)));
}

/// Feedback on the second of two cascaded low-pass stages (rates γ, Ω).
inline EnergyResult energy_2layer(double lambda, double gamma, double Omega, double omega) {
    detail::require_positive(lambda, "lambda");
    detail::require_positive(gamma, "gamma");
    detail::require_positive(Omega, "Omega");
    detail::require_positive(omega, "omega");
    const double gt = effective_frequency(gamma, Omega);
    const double s = Omega + gamma;
    return EnergyResult::from_value(
        0.5 * (lambda / gt + gt / (4.0 * lambda) + lambda / s + lambda * omega * omega / (gt * s * s)));
}

/// Feedback on the third of three cascaded stages (rates γ, Ω, Ω). Returns
/// NotApplicable where the rational expression's denominator vanishes.
inline EnergyResult energy_3layer(double lambda, double gamma, double Omega, double omega) {
    detail::require_positive(lambda, "lambda");
    detail::require_positive(gamma, "gamma");
    detail::require_positive(Omega, "Omega");
    detail::require_positive(omega, "omega");
    const double l = lambda, g = gamma, O = Omega, w = omega;
    const double l2 = l * l, w2 = w * w, w4 = w2 * w2;
    const double O2 = O * O, O3 = O2 * O, O4 = O2 * O2, O5 = O4 * O, O6 = O3 * O3, O7 = O6 * O;
    const double g2 = g * g, g3 = g2 * g, g4 = g2 * g2, g5 = g4 * g;

    const double num = 8.0 * l2 * O3 * (w2 + O2) * (w2 + O2) +
                       8.0 * g * l2 * O2 * (3.0 * w4 + 7.0 * w2 * O2 + 8.0 * O4) +
                       g5 * (O4 + 4.0 * l2 * (w2 + 5.0 * O2)) +
                       2.0 * g4 * (2.0 * O5 + l2 * (9.0 * w2 * O + 48.0 * O3)) +
                       g3 * (5.0 * O6 + 4.0 * l2 * (w4 + 10.0 * w2 * O2 + 45.0 * O4)) +
                       2.0 * g2 * (O7 + l2 * (9.0 * w4 * O + 31.0 * w2 * O3 + 80.0 * O5));

    const double terms[] = {4.0 * g4 * O,         -4.0 * w2 * O3,     4.0 * O5,
                            -2.0 * g3 * w2,       16.0 * g3 * O2,     -9.0 * g2 * w2 * O,
                            24.0 * g2 * O3,       -12.0 * g * w2 * O2, 16.0 * g * O4};
    double poly = 0.0, scale = 0.0;
    for (double t : terms) {
        poly += t;
        scale += std::abs(t);
    }
    if (std::abs(poly) <= 1e-13 * scale) return EnergyResult::not_applicable();
    const double den = 2.0 * g * l * O2 * poly;
    return EnergyResult::from_value(0.5 * num / den);
}

/// Feedback on the cosine quadrature of a band-pass filter centred at Ω.
/// Returns NotApplicable on the resonance 4γ² + ω² = 4Ω².
inline EnergyResult energy_bandpass(double lambda, double gamma, double Omega, double omega) {
    detail::require_positive(lambda, "lambda");
    detail::require_positive(gamma, "gamma");
    detail::require_positive(omega, "omega");
    if (!(Omega >= 0.0) || !std::isfinite(Omega)) throw std::invalid_argument("Omega must be nonnegative");
    const double g2 = gamma * gamma, w2 = omega * omega, O2 = Omega * Omega;
    const double d = 4.0 * g2 + w2 - 4.0 * O2;
    if (std::abs(d) <= 1e-13 * (4.0 * g2 + w2 + 4.0 * O2)) return EnergyResult::not_applicable();
    const double base = 0.5 * (lambda / gamma + gamma / (4.0 * lambda));
    const double first = base * (1.0 + O2 / w2 * (4.0 * g2 - w2 + 4.0 * O2) / d);
    const double second = 0.5 * gamma * O2 * (3.0 * w2 - 4.0 * g2 - 4.0 * O2) / (4.0 * lambda * w2 * d);
    return EnergyResult::from_value(first + second);
}

/// Closed-form energy for any protocol.
inline EnergyResult protocol_energy(const ProtocolParams& p) {
    switch (p.kind) {
        case ProtocolKind::LowPass1: return energy_1layer(p.lambda, p.gamma);
        case ProtocolKind::LowPass2: return energy_2layer(p.lambda, p.gamma, p.Omega, p.omega);
        case ProtocolKind::LowPass3: return energy_3layer(p.lambda, p.gamma, p.Omega, p.omega);
        case ProtocolKind::BandPass: return energy_bandpass(p.lambda, p.gamma, p.Omega, p.omega);
    }
    return EnergyResult::not_applicable();
}

/// First-order large-Ω energy of the two-stage cascade.
inline double energy_2layer_largeOmega(double lambda, double gamma, double Omega) {
    return 0.5 * (lambda / gamma + gamma / (4.0 * lambda)) + (lambda - gamma * gamma / (8.0 * lambda)) / Omega;
}

/// First-order large-Ω energy of the three-stage cascade.
inline double energy_3layer_largeOmega(double lambda, double gamma, double Omega) {
    return 0.5 * (lambda / gamma + gamma / (4.0 * lambda)) +
           (2.0 * lambda - 3.0 * gamma * gamma / (16.0 * lambda)) / Omega;
}

/// γ/λ above which the 1/Ω correction of the two-stage cascade is negative.
inline const double kTwoLayerImprovementRatio = 2.0 * std::numbers::sqrt2;
/// γ/λ above which the three-stage cascade beats a single stage at large Ω.
inline const double kThreeLayerImprovementRatio = 2.0 * std::sqrt(8.0 / 3.0);
/// γ/λ above which the three-stage cascade beats the two-stage one at large Ω.
inline constexpr double kThreeOverTwoRatio = 4.0;

/// Best low-pass protocol for Ω → ∞ as a function of γ/λ.
inline ProtocolKind best_protocol_largeOmega(double gamma_over_lambda) {
    detail::require_positive(gamma_over_lambda, "gamma/lambda");
    if (gamma_over_lambda <= kTwoLayerImprovementRatio) return ProtocolKind::LowPass1;
    if (gamma_over_lambda <= kThreeOverTwoRatio) return ProtocolKind::LowPass2;
    return ProtocolKind::LowPass3;
}

}  // namespace filtfb
