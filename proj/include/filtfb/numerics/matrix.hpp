#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace filtfb {

using Complex = std::complex<double>;

template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};

template <typename T>
inline bool is_finite(const T& v) {
    if constexpr (is_complex<T>::value) {
        return std::isfinite(v.real()) && std::isfinite(v.imag());
    } else {
        return std::isfinite(v);
    }
}

template <typename T>
inline double magnitude(const T& v) {
    return std::abs(v);
}

/// Dense row-major matrix. Entries are checked finite when built from data;
/// arithmetic results are not rechecked.
template <typename T>
class Matrix {
public:
    using value_type = T;

    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, T{}) {}

    Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) {
            throw std::invalid_argument("matrix entry count " + std::to_string(data_.size()) +
                                        " does not match shape " + std::to_string(rows_) + "x" +
                                        std::to_string(cols_));
        }
        require_finite();
    }

    Matrix(std::initializer_list<std::initializer_list<T>> rows) {
        rows_ = rows.size();
        cols_ = rows_ == 0 ? 0 : rows.begin()->size();
        data_.reserve(rows_ * cols_);
        for (const auto& r : rows) {
            if (r.size() != cols_) throw std::invalid_argument("ragged matrix initializer");
            data_.insert(data_.end(), r.begin(), r.end());
        }
        require_finite();
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = T{1};
        return m;
    }

    static Matrix diagonal(std::span<const T> d) {
        Matrix m(d.size(), d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
        return m;
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool is_square() const noexcept { return rows_ == cols_; }
    [[nodiscard]] bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    [[nodiscard]] std::span<T> data() noexcept { return data_; }
    [[nodiscard]] std::span<const T> data() const noexcept { return data_; }
    [[nodiscard]] std::span<const T> row(std::size_t r) const noexcept {
        return std::span<const T>(data_).subspan(r * cols_, cols_);
    }

    [[nodiscard]] bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](const T& v) { return is_finite(v); });
    }

    void require_finite() const {
        if (!all_finite()) throw std::invalid_argument("matrix contains non-finite entries");
    }

    Matrix& operator+=(const Matrix& o) {
        check_same_shape(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        check_same_shape(o);
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
        return *this;
    }
    Matrix& operator*=(const T& s) {
        for (auto& v : data_) v *= s;
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
    friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
    friend Matrix operator*(Matrix a, const T& s) { return a *= s; }
    friend Matrix operator*(const T& s, Matrix a) { return a *= s; }
    friend Matrix operator-(Matrix a) { return a *= T{-1}; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.cols_ != b.rows_) throw std::invalid_argument("matrix product shape mismatch");
        Matrix out(a.rows_, b.cols_);
        for (std::size_t i = 0; i < a.rows_; ++i) {
            for (std::size_t k = 0; k < a.cols_; ++k) {
                const T aik = a(i, k);
                if (aik == T{}) continue;
                for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
            }
        }
        return out;
    }

    friend std::vector<T> operator*(const Matrix& a, std::span<const T> x) {
        if (a.cols_ != x.size()) throw std::invalid_argument("matrix-vector shape mismatch");
        std::vector<T> y(a.rows_, T{});
        for (std::size_t i = 0; i < a.rows_; ++i) {
            T acc{};
            for (std::size_t j = 0; j < a.cols_; ++j) acc += a(i, j) * x[j];
            y[i] = acc;
        }
        return y;
    }
    friend std::vector<T> operator*(const Matrix& a, const std::vector<T>& x) {
        return a * std::span<const T>(x);
    }

    friend bool operator==(const Matrix& a, const Matrix& b) = default;

    [[nodiscard]] Matrix transpose() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    [[nodiscard]] Matrix adjoint() const {
        Matrix t = transpose();
        if constexpr (is_complex<T>::value) {
            for (auto& v : t.data_) v = std::conj(v);
        }
        return t;
    }

    [[nodiscard]] T trace() const {
        T s{};
        for (std::size_t i = 0; i < std::min(rows_, cols_); ++i) s += (*this)(i, i);
        return s;
    }

    /// Maximum absolute row sum.
    [[nodiscard]] double norm_inf() const {
        double best = 0.0;
        for (std::size_t i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < cols_; ++j) s += magnitude((*this)(i, j));
            best = std::max(best, s);
        }
        return best;
    }

    /// Maximum absolute column sum.
    [[nodiscard]] double norm_1() const {
        double best = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < rows_; ++i) s += magnitude((*this)(i, j));
            best = std::max(best, s);
        }
        return best;
    }

    [[nodiscard]] double max_abs() const {
        double best = 0.0;
        for (const auto& v : data_) best = std::max(best, magnitude(v));
        return best;
    }

private:
    void check_same_shape(const Matrix& o) const {
        if (rows_ != o.rows_ || cols_ != o.cols_) throw std::invalid_argument("matrix shape mismatch");
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<T> data_;
};

using RealMatrix = Matrix<double>;
using ComplexMatrix = Matrix<Complex>;
using RealVector = std::vector<double>;
using ComplexVector = std::vector<Complex>;

inline ComplexMatrix to_complex(const RealMatrix& m) {
    ComplexMatrix out(m.rows(), m.cols());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j) out(i, j) = m(i, j);
    return out;
}

template <typename T>
inline double norm_inf(std::span<const T> v) {
    double best = 0.0;
    for (const auto& x : v) best = std::max(best, magnitude(x));
    return best;
}

template <typename T>
inline double norm_2(std::span<const T> v) {
    double s = 0.0;
    for (const auto& x : v) s += std::norm(x);
    return std::sqrt(s);
}

inline RealVector axpy(double a, std::span<const double> x, std::span<const double> y) {
    RealVector out(y.begin(), y.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += a * x[i];
    return out;
}

}  // namespace filtfb
