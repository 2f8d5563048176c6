#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace filtfb {

/// Deterministic Gaussian source for one trajectory.
///
/// The engine is seeded from (base_seed, substream_index) through seed_seq, so
/// each trajectory owns its stream no matter which worker runs it. Normals come
/// from Box–Muller rather than std::normal_distribution, whose algorithm is
/// implementation-defined.
class NoiseStream {
public:
    NoiseStream(std::uint64_t base_seed, std::uint64_t substream_index)
        : base_seed_(base_seed), substream_(substream_index) {
        std::seed_seq seq{static_cast<std::uint32_t>(base_seed), static_cast<std::uint32_t>(base_seed >> 32),
                          static_cast<std::uint32_t>(substream_index),
                          static_cast<std::uint32_t>(substream_index >> 32), 0x9e3779b9u};
        engine_.seed(seq);
    }

    [[nodiscard]] std::uint64_t base_seed() const noexcept { return base_seed_; }
    [[nodiscard]] std::uint64_t substream_index() const noexcept { return substream_; }

    /// Standard normal draw.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform_open();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

    /// Uniform on the open interval (0, 1).
    double uniform_open() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

private:
    std::uint64_t base_seed_;
    std::uint64_t substream_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace filtfb
