#pragma once

#include "entroflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace entroflow {

/// Square band matrix with kl sub- and ku super-diagonals, factorized in place by
/// Gaussian elimination with partial pivoting (row interchanges widen the upper band by kl).
class BandMatrix {
public:
    BandMatrix(std::size_t n, std::size_t kl, std::size_t ku)
        : n_(n), kl_(kl), ku_(ku), width_(2 * kl + ku + 1), data_(n * width_, 0.0), pivots_(n, 0) {}

    std::size_t size() const noexcept { return n_; }

    void clear() {
        std::fill(data_.begin(), data_.end(), 0.0);
        factored_ = false;
    }

    bool in_band(std::size_t i, std::size_t j) const noexcept {
        return j + kl_ >= i && j <= i + ku_;
    }

    double& at(std::size_t i, std::size_t j) { return data_[i * width_ + (j + kl_ - i)]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * width_ + (j + kl_ - i)]; }

    /// Adds to entry (i, j); the caller keeps (i, j) inside the declared band.
    void add(std::size_t i, std::size_t j, double v) { at(i, j) += v; }

    /// y = A x for the unfactored matrix.
    std::vector<double> multiply(std::span<const double> x) const {
        std::vector<double> y(n_, 0.0);
        for (std::size_t i = 0; i < n_; ++i) {
            const std::size_t j0 = i >= kl_ ? i - kl_ : 0;
            const std::size_t j1 = std::min(n_ - 1, i + ku_);
            for (std::size_t j = j0; j <= j1; ++j) y[i] += at(i, j) * x[j];
        }
        return y;
    }

    void factorize() {
        const std::size_t upper = ku_ + kl_;
        for (std::size_t k = 0; k < n_; ++k) {
            const std::size_t last_row = std::min(n_ - 1, k + kl_);
            std::size_t piv = k;
            double best = std::abs(at(k, k));
            for (std::size_t i = k + 1; i <= last_row; ++i) {
                if (std::abs(at(i, k)) > best) {
                    best = std::abs(at(i, k));
                    piv = i;
                }
            }
            if (!(best > 0.0) || !std::isfinite(best))
                throw Error(ErrorKind::numerical_blowup, "singular band matrix at column " + std::to_string(k));
            pivots_[k] = piv;
            const std::size_t last_col = std::min(n_ - 1, k + upper);
            if (piv != k) {
                for (std::size_t j = k; j <= last_col; ++j) std::swap(at(k, j), at(piv, j));
            }
            const double d = at(k, k);
            for (std::size_t i = k + 1; i <= last_row; ++i) {
                const double l = at(i, k) / d;
                at(i, k) = l;
                if (l == 0.0) continue;
                for (std::size_t j = k + 1; j <= last_col; ++j) at(i, j) -= l * at(k, j);
            }
        }
        factored_ = true;
    }

    /// Solves A x = b in place using the stored factorization.
    void solve(std::span<double> b) const {
        if (!factored_) throw Error(ErrorKind::contract, "band matrix must be factorized before solve");
        const std::size_t upper = ku_ + kl_;
        for (std::size_t k = 0; k < n_; ++k) {
            if (pivots_[k] != k) std::swap(b[k], b[pivots_[k]]);
            const std::size_t last_row = std::min(n_ - 1, k + kl_);
            for (std::size_t i = k + 1; i <= last_row; ++i) b[i] -= at(i, k) * b[k];
        }
        for (std::size_t k = n_; k-- > 0;) {
            const std::size_t last_col = std::min(n_ - 1, k + upper);
            double s = b[k];
            for (std::size_t j = k + 1; j <= last_col; ++j) s -= at(k, j) * b[j];
            b[k] = s / at(k, k);
        }
    }

private:
    std::size_t n_, kl_, ku_, width_;
    std::vector<double> data_;
    std::vector<std::size_t> pivots_;
    bool factored_ = false;
};

} // namespace entroflow
