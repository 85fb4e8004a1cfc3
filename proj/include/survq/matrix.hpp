#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "survq/error.hpp"

namespace survq {

/// Dense row-major square matrix, sized for the J x J covariances used here.
class Matrix {
public:
    Matrix() = default;
    explicit Matrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t size() const noexcept { return n_; }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * n_ + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * n_ + c]; }

    Matrix& operator+=(const Matrix& other) {
        if (other.n_ != n_) throw InvalidInput("Matrix: size mismatch in +=");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
        return *this;
    }

    friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        if (a.n_ != b.n_) throw InvalidInput("Matrix: size mismatch in *");
        Matrix out(a.n_);
        for (std::size_t i = 0; i < a.n_; ++i)
            for (std::size_t k = 0; k < a.n_; ++k)
                for (std::size_t j = 0; j < a.n_; ++j) out(i, j) += a(i, k) * b(k, j);
        return out;
    }

    Matrix transpose() const {
        Matrix t(n_);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    std::vector<double> apply(std::span<const double> v) const {
        if (v.size() != n_) throw InvalidInput("Matrix: vector size mismatch");
        std::vector<double> out(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = 0; j < n_; ++j) out[i] += (*this)(i, j) * v[j];
        return out;
    }

    double max_asymmetry() const noexcept {
        double worst = 0.0;
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j = i + 1; j < n_; ++j) worst = std::max(worst, std::fabs((*this)(i, j) - (*this)(j, i)));
        return worst;
    }

private:
    std::size_t n_ = 0;
    std::vector<double> data_;
};

/// Lower Cholesky factor of a symmetric positive-definite matrix.
///
/// A pivot is rejected when it falls below `rel_tol` times the original
/// diagonal entry. The error names the rejected index and the earlier index
/// it is most correlated with.
class Cholesky {
public:
    explicit Cholesky(const Matrix& a, double rel_tol = 1e-10) : l_(a.size()) {
        const std::size_t n = a.size();
        for (std::size_t j = 0; j < n; ++j) {
            double pivot = a(j, j);
            for (std::size_t k = 0; k < j; ++k) pivot -= l_(j, k) * l_(j, k);
            if (!(a(j, j) > 0.0) || !(pivot > rel_tol * a(j, j))) {
                std::size_t partner = j;
                double best = -1.0;
                for (std::size_t k = 0; k < j; ++k) {
                    const double denom = std::sqrt(a(k, k) * a(j, j));
                    const double corr = denom > 0.0 ? std::fabs(a(k, j)) / denom : 0.0;
                    if (corr > best) {
                        best = corr;
                        partner = k;
                    }
                }
                throw SingularCovariance("covariance matrix is not positive definite at index pair (" +
                                             std::to_string(partner) + ", " + std::to_string(j) + ")",
                                         partner, j);
            }
            l_(j, j) = std::sqrt(pivot);
            for (std::size_t i = j + 1; i < n; ++i) {
                double s = a(i, j);
                for (std::size_t k = 0; k < j; ++k) s -= l_(i, k) * l_(j, k);
                l_(i, j) = s / l_(j, j);
            }
        }
    }

    const Matrix& lower() const noexcept { return l_; }

    /// Solves A x = b.
    std::vector<double> solve(std::span<const double> b) const {
        const std::size_t n = l_.size();
        if (b.size() != n) throw InvalidInput("Cholesky::solve: size mismatch");
        std::vector<double> y(b.begin(), b.end());
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < i; ++k) y[i] -= l_(i, k) * y[k];
            y[i] /= l_(i, i);
        }
        for (std::size_t ii = n; ii-- > 0;) {
            for (std::size_t k = ii + 1; k < n; ++k) y[ii] -= l_(k, ii) * y[k];
            y[ii] /= l_(ii, ii);
        }
        return y;
    }

    /// b' A^{-1} b, computed as |L^{-1} b|^2.
    double quadratic_form(std::span<const double> b) const {
        const std::size_t n = l_.size();
        if (b.size() != n) throw InvalidInput("Cholesky::quadratic_form: size mismatch");
        std::vector<double> y(b.begin(), b.end());
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < i; ++k) y[i] -= l_(i, k) * y[k];
            y[i] /= l_(i, i);
            acc += y[i] * y[i];
        }
        return acc;
    }

private:
    Matrix l_;
};

}  // namespace survq
