#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace filtfb {

/// Raised when a computation cannot produce a trustworthy result: singular or
/// ill-conditioned systems, unstable dynamics, non-finite states.
///
/// Precondition violations (bad shapes, nonpositive rates) use
/// std::invalid_argument instead; the CLI maps the two to different exit codes.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what,
                            std::optional<std::size_t> step = std::nullopt,
                            std::optional<std::size_t> trajectory = std::nullopt)
        : std::runtime_error(decorate(what, step, trajectory)),
          step_(step),
          trajectory_(trajectory) {}

    [[nodiscard]] std::optional<std::size_t> step() const noexcept { return step_; }
    [[nodiscard]] std::optional<std::size_t> trajectory() const noexcept { return trajectory_; }

private:
    static std::string decorate(const std::string& what, std::optional<std::size_t> step,
                                std::optional<std::size_t> trajectory) {
        std::string msg = what;
        if (trajectory) msg += " (trajectory " + std::to_string(*trajectory) + ")";
        if (step) msg += " (step " + std::to_string(*step) + ")";
        return msg;
    }

    std::optional<std::size_t> step_;
    std::optional<std::size_t> trajectory_;
};

}  // namespace filtfb
