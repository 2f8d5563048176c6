#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "filtfb/errors.hpp"
#include "filtfb/numerics/matrix.hpp"

namespace filtfb {

/// Largest pivot ratio accepted by lu_factor before the system is treated as singular.
inline constexpr double kMaxConditionEstimate = 1e12;

/// LU factorization with partial pivoting, P·A = L·U packed into one matrix.
template <typename T>
struct LuFactor {
    Matrix<T> lu;
    std::vector<std::size_t> perm;
    /// max|u_ii| / min|u_ii|, a cheap condition estimate.
    double pivot_ratio = 1.0;

    [[nodiscard]] std::vector<T> solve(std::span<const T> y) const {
        const std::size_t n = lu.rows();
        if (y.size() != n) throw std::invalid_argument("right-hand side length mismatch");
        std::vector<T> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = y[perm[i]];
        for (std::size_t i = 0; i < n; ++i) {
            T acc = x[i];
            for (std::size_t j = 0; j < i; ++j) acc -= lu(i, j) * x[j];
            x[i] = acc;
        }
        for (std::size_t ii = n; ii-- > 0;) {
            T acc = x[ii];
            for (std::size_t j = ii + 1; j < n; ++j) acc -= lu(ii, j) * x[j];
            x[ii] = acc / lu(ii, ii);
        }
        return x;
    }

    [[nodiscard]] Matrix<T> solve(const Matrix<T>& rhs) const {
        const std::size_t n = lu.rows();
        if (rhs.rows() != n) throw std::invalid_argument("right-hand side row count mismatch");
        Matrix<T> out(n, rhs.cols());
        std::vector<T> col(n);
        for (std::size_t c = 0; c < rhs.cols(); ++c) {
            for (std::size_t r = 0; r < n; ++r) col[r] = rhs(r, c);
            const auto x = solve(std::span<const T>(col));
            for (std::size_t r = 0; r < n; ++r) out(r, c) = x[r];
        }
        return out;
    }
};

/// Throws NumericalError when a pivot vanishes or the pivot ratio exceeds
/// kMaxConditionEstimate.
template <typename T>
LuFactor<T> lu_factor(Matrix<T> a) {
    if (!a.is_square()) throw std::invalid_argument("lu_factor: matrix is not square");
    const std::size_t n = a.rows();
    LuFactor<T> f;
    f.perm.resize(n);
    for (std::size_t i = 0; i < n; ++i) f.perm[i] = i;

    double max_pivot = 0.0;
    double min_pivot = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t p = k;
        double best = magnitude(a(k, k));
        for (std::size_t i = k + 1; i < n; ++i) {
            const double v = magnitude(a(i, k));
            if (v > best) {
                best = v;
                p = i;
            }
        }
        if (best == 0.0 || !std::isfinite(best)) {
            throw NumericalError("singular matrix: zero pivot in column " + std::to_string(k));
        }
        if (p != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
            std::swap(f.perm[k], f.perm[p]);
        }
        max_pivot = std::max(max_pivot, best);
        min_pivot = std::min(min_pivot, best);
        for (std::size_t i = k + 1; i < n; ++i) {
            const T m = a(i, k) / a(k, k);
            a(i, k) = m;
            if (m == T{}) continue;
            for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= m * a(k, j);
        }
    }
    f.pivot_ratio = n == 0 ? 1.0 : max_pivot / min_pivot;
    if (f.pivot_ratio > kMaxConditionEstimate) {
        throw NumericalError("ill-conditioned matrix: pivot ratio " + std::to_string(f.pivot_ratio));
    }
    f.lu = std::move(a);
    return f;
}

/// Solves A x = y by partial-pivot elimination.
template <typename T>
std::vector<T> solve_linear(const Matrix<T>& a, std::span<const T> y) {
    if (!a.is_square()) throw std::invalid_argument("solve_linear: matrix is not square");
    return lu_factor(a).solve(y);
}

template <typename T>
std::vector<T> solve_linear(const Matrix<T>& a, const std::vector<T>& y) {
    return solve_linear(a, std::span<const T>(y));
}

/// e^{A t} by scaling and squaring around a degree-13 Padé approximant.
inline RealMatrix mat_exp(const RealMatrix& a, double t = 1.0) {
    if (!a.is_square()) throw std::invalid_argument("mat_exp: matrix is not square");
    if (!std::isfinite(t)) throw std::invalid_argument("mat_exp: time is not finite");
    const std::size_t n = a.rows();
    static constexpr std::array<double, 14> b = {
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
        129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
        1323241920.0,        40840800.0,          960960.0,           16380.0,
        182.0,               1.0};
    constexpr double theta13 = 5.371920351148152;

    RealMatrix x = a * t;
    const double norm = x.norm_1();
    int squarings = 0;
    if (norm > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
        x *= std::ldexp(1.0, -squarings);
    }

    const RealMatrix id = RealMatrix::identity(n);
    const RealMatrix x2 = x * x;
    const RealMatrix x4 = x2 * x2;
    const RealMatrix x6 = x4 * x2;

    const RealMatrix u_inner = x6 * (b[13] * x6 + b[11] * x4 + b[9] * x2) + b[7] * x6 + b[5] * x4 +
                               b[3] * x2 + b[1] * id;
    const RealMatrix u = x * u_inner;
    const RealMatrix v = x6 * (b[12] * x6 + b[10] * x4 + b[8] * x2) + b[6] * x6 + b[4] * x4 +
                         b[2] * x2 + b[0] * id;

    RealMatrix r = lu_factor(v - u).solve(v + u);
    for (int i = 0; i < squarings; ++i) r = r * r;
    return r;
}

/// Eigenvalues of a real square matrix, sorted by (real, imag) ascending.
inline ComplexVector eigenvalues(const RealMatrix& a) {
    if (!a.is_square()) throw std::invalid_argument("eigenvalues: matrix is not square");
    const auto n = static_cast<Eigen::Index>(a.rows());
    if (n == 0) return {};
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = a(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    Eigen::EigenSolver<Eigen::MatrixXd> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) throw NumericalError("eigenvalue iteration did not converge");
    ComplexVector out(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = solver.eigenvalues()[i];
    std::sort(out.begin(), out.end(), [](const Complex& l, const Complex& r) {
        return l.real() != r.real() ? l.real() < r.real() : l.imag() < r.imag();
    });
    return out;
}

inline double max_real_part(std::span<const Complex> ev) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& z : ev) best = std::max(best, z.real());
    return best;
}

/// Kronecker product a ⊗ b.
template <typename T>
Matrix<T> kron(const Matrix<T>& a, const Matrix<T>& b) {
    Matrix<T> out(a.rows() * b.rows(), a.cols() * b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j)
            for (std::size_t k = 0; k < b.rows(); ++k)
                for (std::size_t l = 0; l < b.cols(); ++l)
                    out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
    return out;
}

}  // namespace filtfb
