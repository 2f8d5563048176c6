#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace filtfb {

/// Feedback cooling protocols of the harmonic oscillator, one per filter chain.
enum class ProtocolKind { LowPass1, LowPass2, LowPass3, BandPass };

inline constexpr std::array<ProtocolKind, 4> kAllProtocols = {ProtocolKind::LowPass1, ProtocolKind::LowPass2,
                                                              ProtocolKind::LowPass3, ProtocolKind::BandPass};

inline std::string_view to_string(ProtocolKind k) {
    switch (k) {
        case ProtocolKind::LowPass1: return "lowpass1";
        case ProtocolKind::LowPass2: return "lowpass2";
        case ProtocolKind::LowPass3: return "lowpass3";
        case ProtocolKind::BandPass: return "bandpass";
    }
    return "?";
}

inline std::optional<ProtocolKind> parse_protocol(std::string_view s) {
    for (auto k : kAllProtocols)
        if (to_string(k) == s) return k;
    return std::nullopt;
}

/// Number of filter components the protocol's feedback signal passes through.
inline int filter_dimension(ProtocolKind k) {
    switch (k) {
        case ProtocolKind::LowPass1: return 1;
        case ProtocolKind::LowPass2: return 2;
        case ProtocolKind::BandPass: return 2;
        case ProtocolKind::LowPass3: return 3;
    }
    return 0;
}

/// Oscillator and filter rates, all in 1/time. Omega is the second/third
/// bandwidth for the cascades and the centre frequency for the band-pass.
struct ProtocolParams {
    double lambda = 1.0;
    double omega = 1.0;
    double gamma = 1.0;
    double Omega = 0.0;
    ProtocolKind kind = ProtocolKind::LowPass1;

    void validate() const {
        auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
        if (!positive(lambda)) throw std::invalid_argument("lambda must be positive");
        if (!positive(omega)) throw std::invalid_argument("omega must be positive");
        if (!positive(gamma)) throw std::invalid_argument("gamma must be positive");
        switch (kind) {
            case ProtocolKind::LowPass1: break;
            case ProtocolKind::LowPass2:
            case ProtocolKind::LowPass3:
                if (!positive(Omega)) throw std::invalid_argument("Omega must be positive for cascaded filters");
                break;
            case ProtocolKind::BandPass:
                if (!(Omega >= 0.0) || !std::isfinite(Omega)) {
                    throw std::invalid_argument("Omega must be nonnegative for the band-pass filter");
                }
                break;
        }
    }

    /// Same parameters with every rate multiplied by `factor`.
    [[nodiscard]] ProtocolParams rescaled(double factor) const {
        ProtocolParams p = *this;
        p.lambda *= factor;
        p.omega *= factor;
        p.gamma *= factor;
        p.Omega *= factor;
        return p;
    }
};

}  // namespace filtfb
