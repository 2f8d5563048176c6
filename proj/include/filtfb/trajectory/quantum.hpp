#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "filtfb/numerics/matrix.hpp"

namespace filtfb {

/// Dense operator that remembers how many diagonals it occupies, so products with
/// a density matrix cost O(N²·bandwidth). Ladder-built oscillator operators are
/// tri- or pentadiagonal in the Fock basis.
class BandedOperator {
public:
    BandedOperator() = default;
    explicit BandedOperator(ComplexMatrix m) : m_(std::move(m)) {
        if (!m_.is_square()) throw std::invalid_argument("BandedOperator: matrix is not square");
        const std::size_t n = m_.rows();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (m_(i, j) == Complex{}) continue;
                if (i > j) lower_ = std::max(lower_, i - j);
                if (j > i) upper_ = std::max(upper_, j - i);
            }
        }
    }

    [[nodiscard]] const ComplexMatrix& matrix() const noexcept { return m_; }
    [[nodiscard]] std::size_t dim() const noexcept { return m_.rows(); }
    [[nodiscard]] std::size_t lower_bandwidth() const noexcept { return lower_; }
    [[nodiscard]] std::size_t upper_bandwidth() const noexcept { return upper_; }

    /// out = op · rho
    void left_multiply(const ComplexMatrix& rho, ComplexMatrix& out) const {
        const std::size_t n = dim();
        std::fill(out.data().begin(), out.data().end(), Complex{});
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k0 = i >= lower_ ? i - lower_ : 0;
            const std::size_t k1 = std::min(n - 1, i + upper_);
            Complex* orow = &out(i, 0);
            for (std::size_t k = k0; k <= k1; ++k) {
                const Complex a = m_(i, k);
                if (a == Complex{}) continue;
                const Complex* rrow = &rho(k, 0);
                for (std::size_t j = 0; j < n; ++j) orow[j] += a * rrow[j];
            }
        }
    }

    /// out = rho · op
    void right_multiply(const ComplexMatrix& rho, ComplexMatrix& out) const {
        const std::size_t n = dim();
        std::fill(out.data().begin(), out.data().end(), Complex{});
        for (std::size_t i = 0; i < n; ++i) {
            Complex* orow = &out(i, 0);
            const Complex* rrow = &rho(i, 0);
            for (std::size_t k = 0; k < n; ++k) {
                const Complex r = rrow[k];
                if (r == Complex{}) continue;
                const std::size_t j0 = k >= upper_ ? k - upper_ : 0;
                const std::size_t j1 = std::min(n - 1, k + lower_);
                for (std::size_t j = j0; j <= j1; ++j) orow[j] += r * m_(k, j);
            }
        }
    }

    /// Re Tr(op · rho) for Hermitian op and rho.
    [[nodiscard]] double expectation(const ComplexMatrix& rho) const {
        const std::size_t n = dim();
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k0 = i >= lower_ ? i - lower_ : 0;
            const std::size_t k1 = std::min(n - 1, i + upper_);
            for (std::size_t k = k0; k <= k1; ++k) acc += (m_(i, k) * rho(k, i)).real();
        }
        return acc;
    }

private:
    ComplexMatrix m_;
    std::size_t lower_ = 0;
    std::size_t upper_ = 0;
};

inline double hermiticity_defect(const ComplexMatrix& m) {
    double worst = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) worst = std::max(worst, std::abs(m(i, j) - std::conj(m(j, i))));
    return worst;
}

inline bool is_hermitian(const ComplexMatrix& m, double tol = 1e-12) {
    return m.is_square() && hermiticity_defect(m) <= tol * std::max(1.0, m.max_abs());
}

/// Sorted eigenvalues of a Hermitian matrix.
inline RealVector hermitian_eigenvalues(const ComplexMatrix& m) {
    const auto n = static_cast<Eigen::Index>(m.rows());
    Eigen::MatrixXcd e(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) e(i, j) = m(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(e, Eigen::EigenvaluesOnly);
    RealVector out(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = solver.eigenvalues()[i];
    return out;
}

/// Conditioned density matrix.
struct QuantumState {
    ComplexMatrix rho;

    [[nodiscard]] std::size_t dim() const noexcept { return rho.rows(); }

    static QuantumState pure(const ComplexVector& psi) {
        const std::size_t n = psi.size();
        double norm = 0.0;
        for (const auto& a : psi) norm += std::norm(a);
        if (!(norm > 0.0)) throw std::invalid_argument("QuantumState::pure: zero vector");
        QuantumState s{ComplexMatrix(n, n)};
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) s.rho(i, j) = psi[i] * std::conj(psi[j]) / norm;
        return s;
    }

    static QuantumState fock(std::size_t dim, std::size_t level) {
        if (level >= dim) throw std::invalid_argument("QuantumState::fock: level out of range");
        QuantumState s{ComplexMatrix(dim, dim)};
        s.rho(level, level) = 1.0;
        return s;
    }

    [[nodiscard]] double trace() const { return rho.trace().real(); }

    [[nodiscard]] double purity() const {
        double p = 0.0;
        for (std::size_t i = 0; i < dim(); ++i)
            for (std::size_t j = 0; j < dim(); ++j) p += std::norm(rho(i, j));
        return p;
    }

    [[nodiscard]] double min_eigenvalue() const { return hermitian_eigenvalues(rho).front(); }

    /// rho ← (rho + rho†)/2, then rescale to unit trace.
    void hermitize_and_normalize() {
        const std::size_t n = dim();
        for (std::size_t i = 0; i < n; ++i) {
            rho(i, i) = Complex(rho(i, i).real(), 0.0);
            for (std::size_t j = i + 1; j < n; ++j) {
                const Complex avg = 0.5 * (rho(i, j) + std::conj(rho(j, i)));
                rho(i, j) = avg;
                rho(j, i) = std::conj(avg);
            }
        }
        const double tr = trace();
        if (!(tr > 0.0) || !std::isfinite(tr)) throw std::runtime_error("density matrix lost its trace");
        rho *= Complex(1.0 / tr, 0.0);
    }
};

/// Dimensionless quadratures and bare Hamiltonian of a Fock-truncated oscillator.
struct OscillatorOperators {
    std::size_t cutoff = 0;
    double omega = 1.0;
    ComplexMatrix x;   ///< (a + a†)/√2
    ComplexMatrix p;   ///< i(a† − a)/√2
    ComplexMatrix H0;  ///< (ω/2)(p² + x²)
};

inline OscillatorOperators build_truncated_oscillator(std::size_t cutoff, double omega) {
    if (cutoff < 3) throw std::invalid_argument("Fock cutoff must be at least 3");
    if (!(omega > 0.0)) throw std::invalid_argument("omega must be positive");
    OscillatorOperators o;
    o.cutoff = cutoff;
    o.omega = omega;
    o.x = ComplexMatrix(cutoff, cutoff);
    o.p = ComplexMatrix(cutoff, cutoff);
    for (std::size_t n = 0; n + 1 < cutoff; ++n) {
        const double amp = std::sqrt(static_cast<double>(n + 1)) / std::sqrt(2.0);  // <n|a|n+1>/√2
        o.x(n, n + 1) = amp;
        o.x(n + 1, n) = amp;
        o.p(n, n + 1) = Complex(0.0, -amp);
        o.p(n + 1, n) = Complex(0.0, amp);
    }
    o.H0 = Complex(0.5 * omega, 0.0) * (o.p * o.p + o.x * o.x);
    return o;
}

}  // namespace filtfb
