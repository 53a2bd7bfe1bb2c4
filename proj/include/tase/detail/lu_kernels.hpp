#pragma once

// Partial-pivoting LU kernels shared by the real and complex solve paths.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "tase/errors.hpp"

namespace tase::detail {

/// Relative pivot threshold: |pivot| <= kPivotTolerance * max row norm is singular.
inline constexpr double kPivotTolerance = 1e-14;

/// Dense row-major LU with full row interchanges.
template <class Scalar>
class DenseLu {
public:
    DenseLu() = default;

    DenseLu(std::size_t n, std::vector<Scalar> entries)
        : n_(n), a_(std::move(entries)), perm_(n) {
        if (a_.size() != n_ * n_) {
            throw DimensionError("dense LU: entry count does not match order");
        }
        double max_row_norm = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            double row = 0.0;
            for (std::size_t j = 0; j < n_; ++j) row += std::abs(at(i, j));
            max_row_norm = std::max(max_row_norm, row);
        }
        const double threshold = kPivotTolerance * max_row_norm;
        for (std::size_t i = 0; i < n_; ++i) perm_[i] = i;

        for (std::size_t k = 0; k < n_; ++k) {
            std::size_t p = k;
            double best = std::abs(at(k, k));
            for (std::size_t i = k + 1; i < n_; ++i) {
                const double v = std::abs(at(i, k));
                if (v > best) {
                    best = v;
                    p = i;
                }
            }
            if (!(best > threshold)) throw SingularMatrixError(k, best);
            if (p != k) {
                std::swap_ranges(a_.begin() + static_cast<std::ptrdiff_t>(k * n_),
                                 a_.begin() + static_cast<std::ptrdiff_t>((k + 1) * n_),
                                 a_.begin() + static_cast<std::ptrdiff_t>(p * n_));
                std::swap(perm_[k], perm_[p]);
            }
            const Scalar pivot = at(k, k);
            for (std::size_t i = k + 1; i < n_; ++i) {
                Scalar& lik = at(i, k);
                if (lik == Scalar{}) continue;
                lik /= pivot;
                const Scalar l = lik;
                Scalar* row_i = &a_[i * n_];
                const Scalar* row_k = &a_[k * n_];
                for (std::size_t j = k + 1; j < n_; ++j) row_i[j] -= l * row_k[j];
            }
        }
    }

    std::size_t order() const noexcept { return n_; }

    void solve_in_place(std::span<Scalar> b, std::vector<Scalar>& scratch) const {
        if (b.size() != n_) throw DimensionError("dense LU solve: rhs length mismatch");
        scratch.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) scratch[i] = b[perm_[i]];
        for (std::size_t i = 0; i < n_; ++i) {
            const Scalar* row = &a_[i * n_];
            Scalar s = scratch[i];
            for (std::size_t j = 0; j < i; ++j) s -= row[j] * scratch[j];
            scratch[i] = s;
        }
        for (std::size_t ii = n_; ii-- > 0;) {
            const Scalar* row = &a_[ii * n_];
            Scalar s = scratch[ii];
            for (std::size_t j = ii + 1; j < n_; ++j) s -= row[j] * scratch[j];
            scratch[ii] = s / row[ii];
        }
        std::copy(scratch.begin(), scratch.end(), b.begin());
    }

private:
    Scalar& at(std::size_t i, std::size_t j) { return a_[i * n_ + j]; }
    const Scalar& at(std::size_t i, std::size_t j) const { return a_[i * n_ + j]; }

    std::size_t n_ = 0;
    std::vector<Scalar> a_;
    std::vector<std::size_t> perm_;
};

/// Banded LU in the LAPACK gbtrf layout: row interchanges are applied to the
/// trailing columns only, so the solve replays them one elimination step at a time.
/// Each row keeps `lower` extra superdiagonals for pivoting fill.
template <class Scalar>
class BandedLu {
public:
    BandedLu() = default;

    /// `get(i, j)` returns the source entry for |j - i| inside the band.
    template <class Getter>
    BandedLu(std::size_t n, std::size_t lower, std::size_t upper, Getter&& get)
        : n_(n), kl_(lower), ku_(upper), ld_(2 * lower + upper + 1),
          w_(n * (2 * lower + upper + 1), Scalar{}), piv_(n) {
        double max_row_norm = 0.0;
        for (std::size_t i = 0; i < n_; ++i) {
            double row = 0.0;
            const std::size_t j0 = i > kl_ ? i - kl_ : 0;
            const std::size_t j1 = std::min(n_ - 1, i + ku_);
            for (std::size_t j = j0; j <= j1; ++j) {
                const Scalar v = get(i, j);
                at(i, j) = v;
                row += std::abs(v);
            }
            max_row_norm = std::max(max_row_norm, row);
        }
        const double threshold = kPivotTolerance * max_row_norm;

        for (std::size_t k = 0; k < n_; ++k) {
            const std::size_t last_row = std::min(n_ - 1, k + kl_);
            const std::size_t last_col = std::min(n_ - 1, k + kl_ + ku_);
            std::size_t p = k;
            double best = std::abs(at(k, k));
            for (std::size_t i = k + 1; i <= last_row; ++i) {
                const double v = std::abs(at(i, k));
                if (v > best) {
                    best = v;
                    p = i;
                }
            }
            if (!(best > threshold)) throw SingularMatrixError(k, best);
            piv_[k] = p;
            if (p != k) {
                for (std::size_t j = k; j <= last_col; ++j) std::swap(at(k, j), at(p, j));
            }
            const Scalar pivot = at(k, k);
            for (std::size_t i = k + 1; i <= last_row; ++i) {
                Scalar& lik = at(i, k);
                if (lik == Scalar{}) continue;
                lik /= pivot;
                const Scalar l = lik;
                for (std::size_t j = k + 1; j <= last_col; ++j) at(i, j) -= l * at(k, j);
            }
        }
    }

    std::size_t order() const noexcept { return n_; }
    std::size_t lower() const noexcept { return kl_; }
    std::size_t upper() const noexcept { return ku_; }

    void solve_in_place(std::span<Scalar> b) const {
        if (b.size() != n_) throw DimensionError("banded LU solve: rhs length mismatch");
        for (std::size_t k = 0; k < n_; ++k) {
            const std::size_t p = piv_[k];
            if (p != k) std::swap(b[k], b[p]);
            const Scalar bk = b[k];
            if (bk == Scalar{}) continue;
            const std::size_t last_row = std::min(n_ - 1, k + kl_);
            for (std::size_t i = k + 1; i <= last_row; ++i) b[i] -= at(i, k) * bk;
        }
        for (std::size_t ii = n_; ii-- > 0;) {
            const std::size_t last_col = std::min(n_ - 1, ii + kl_ + ku_);
            Scalar s = b[ii];
            for (std::size_t j = ii + 1; j <= last_col; ++j) s -= at(ii, j) * b[j];
            b[ii] = s / at(ii, ii);
        }
    }

private:
    Scalar& at(std::size_t i, std::size_t j) { return w_[i * ld_ + (j + kl_ - i)]; }
    const Scalar& at(std::size_t i, std::size_t j) const { return w_[i * ld_ + (j + kl_ - i)]; }

    std::size_t n_ = 0;
    std::size_t kl_ = 0;
    std::size_t ku_ = 0;
    std::size_t ld_ = 1;
    std::vector<Scalar> w_;
    std::vector<std::size_t> piv_;
};

}  // namespace tase::detail
