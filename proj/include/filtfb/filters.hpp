#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "filtfb/errors.hpp"
#include "filtfb/numerics/linalg.hpp"
#include "filtfb/numerics/matrix.hpp"

namespace filtfb {

enum class FilterKind { LowPassCascade, BandPass, Kernel, Custom };

inline const char* to_string(FilterKind k) {
    switch (k) {
        case FilterKind::LowPassCascade: return "lowpass";
        case FilterKind::BandPass: return "bandpass";
        case FilterKind::Kernel: return "kernel";
        case FilterKind::Custom: return "custom";
    }
    return "?";
}

/// Linear filter realization dG = M G dt + b z dt driven by the raw record z.
struct FilterModel {
    RealMatrix M;
    RealVector b;
    FilterKind kind = FilterKind::Custom;
    std::vector<std::string> component_names;

    FilterModel() = default;
    FilterModel(RealMatrix m, RealVector b_vec, FilterKind k, std::vector<std::string> names)
        : M(std::move(m)), b(std::move(b_vec)), kind(k), component_names(std::move(names)) {
        if (!M.is_square() || M.rows() != b.size() || component_names.size() != b.size()) {
            throw std::invalid_argument("FilterModel: inconsistent dimensions");
        }
        M.require_finite();
        for (double v : b)
            if (!std::isfinite(v)) throw std::invalid_argument("FilterModel: non-finite input vector");
    }

    [[nodiscard]] std::size_t dim() const noexcept { return b.size(); }
};

/// A convolution kernel f obeying f^(n) + a_{n-1} f^(n-1) + ... + a_0 f = 0.
struct KernelSpec {
    RealVector coefficients;         ///< a_0 ... a_{n-1}
    RealVector initial_derivatives;  ///< f(0) ... f^(n-1)(0)

    [[nodiscard]] std::size_t order() const noexcept { return coefficients.size(); }
};

namespace detail {
inline std::vector<std::string> numbered(const std::string& prefix, std::size_t n) {
    std::vector<std::string> out;
    out.reserve(n);
    for (std::size_t k = 1; k <= n; ++k) out.push_back(prefix + std::to_string(k));
    return out;
}
}  // namespace detail

/// Chain of exponential low-pass stages; stage k smooths stage k-1 at rate gammas[k].
inline FilterModel lowpass_cascade(std::span<const double> gammas) {
    if (gammas.empty()) throw std::invalid_argument("lowpass_cascade: at least one rate required");
    for (double g : gammas) {
        if (!(g > 0.0) || !std::isfinite(g)) throw std::invalid_argument("lowpass_cascade: rates must be positive");
    }
    const std::size_t n = gammas.size();
    RealMatrix m(n, n);
    RealVector b(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        m(k, k) = -gammas[k];
        if (k > 0) m(k, k - 1) = gammas[k];
    }
    b[0] = gammas[0];
    return {std::move(m), std::move(b), FilterKind::LowPassCascade, detail::numbered("D", n)};
}

inline FilterModel lowpass_cascade(std::initializer_list<double> gammas) {
    return lowpass_cascade(std::span<const double>(gammas.begin(), gammas.size()));
}

/// Lorentzian band-pass centred at Omega, realized by its cosine/sine quadratures (E1, E2).
inline FilterModel bandpass(double gamma, double Omega) {
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw std::invalid_argument("bandpass: gamma must be positive");
    if (!(Omega >= 0.0) || !std::isfinite(Omega)) throw std::invalid_argument("bandpass: Omega must be nonnegative");
    RealMatrix m{{-gamma, -Omega}, {Omega, -gamma}};
    return {std::move(m), RealVector{gamma, 0.0}, FilterKind::BandPass, {"E1", "E2"}};
}

/// Companion-form realization of a kernel filter.
inline FilterModel kernel_filter(const KernelSpec& spec) {
    const std::size_t n = spec.order();
    if (n == 0) throw std::invalid_argument("kernel_filter: order must be at least 1");
    if (spec.initial_derivatives.size() != n) {
        throw std::invalid_argument("kernel_filter: need one initial derivative per order");
    }
    RealMatrix m(n, n);
    for (std::size_t k = 0; k + 1 < n; ++k) m(k, k + 1) = 1.0;
    for (std::size_t j = 0; j < n; ++j) m(n - 1, j) = -spec.coefficients[j];
    return {std::move(m), spec.initial_derivatives, FilterKind::Kernel, detail::numbered("F", n)};
}

/// Response of every component to z = δ(t): e^{M t} b.
inline RealVector impulse_response(const FilterModel& model, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("impulse_response: t must be nonnegative");
    return mat_exp(model.M, t) * model.b;
}

/// Frequency response (iνI − M)^{-1} b of each component to unit-amplitude drive e^{iνt}.
inline ComplexVector transfer_function(const FilterModel& model, double nu) {
    const std::size_t n = model.dim();
    ComplexMatrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) a(i, j) = -model.M(i, j);
    for (std::size_t i = 0; i < n; ++i) a(i, i) += Complex(0.0, nu);
    ComplexVector rhs(model.b.begin(), model.b.end());
    try {
        return solve_linear(a, rhs);
    } catch (const NumericalError&) {
        throw NumericalError("transfer_function: drive frequency " + std::to_string(nu) +
                             " is resonant with the filter");
    }
}

struct StationaryStatistics {
    RealVector mean;
    RealMatrix covariance;
};

/// Stationary mean and covariance of G when the record is z = mean_A + white noise of
/// intensity 1/(4λ): M Σ + Σ Mᵀ + b bᵀ/(4λ) = 0.
inline StationaryStatistics stationary_statistics(const FilterModel& model, double lambda, double mean_A) {
    if (!(lambda > 0.0)) throw std::invalid_argument("stationary_statistics: lambda must be positive");
    const auto ev = eigenvalues(model.M);
    if (max_real_part(ev) >= 0.0) throw NumericalError("no stationary state: filter is not asymptotically stable");

    const std::size_t n = model.dim();
    StationaryStatistics out;
    const RealVector minv_b = solve_linear(model.M, model.b);
    out.mean.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.mean[i] = -minv_b[i] * mean_A;

    // vec(MΣ + ΣMᵀ) = (I⊗M + M⊗I) vec(Σ), row-major vec
    const RealMatrix id = RealMatrix::identity(n);
    const RealMatrix op = kron(model.M, id) + kron(id, model.M);
    RealVector rhs(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) rhs[i * n + j] = -model.b[i] * model.b[j] / (4.0 * lambda);
    const RealVector sigma = solve_linear(op, rhs);
    out.covariance = RealMatrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out.covariance(i, j) = 0.5 * (sigma[i * n + j] + sigma[j * n + i]);
    return out;
}

}  // namespace filtfb
