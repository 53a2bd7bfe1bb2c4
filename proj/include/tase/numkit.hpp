#pragma once

// Small dense/banded linear algebra used for shifted-system solves.

#include <complex>
#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "tase/detail/lu_kernels.hpp"
#include "tase/errors.hpp"

namespace tase {

using Vector = std::vector<double>;
using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

/// Row-major dense matrix of finite reals.
class DenseMatrix {
public:
    DenseMatrix() = default;
    /// Zero-filled rows x cols matrix.
    DenseMatrix(std::size_t rows, std::size_t cols);
    DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

    static DenseMatrix identity(std::size_t n);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::span<const double> entries() const noexcept { return data_; }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

    /// y = A x
    void multiply(std::span<const double> x, std::span<double> y) const;
    Vector operator*(std::span<const double> x) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Square banded matrix stored by diagonals.
///
/// Diagonal `d` (column minus row, in [-lower, upper]) is a contiguous run of
/// `order` values indexed by row; entries whose column falls outside the matrix
/// are kept at zero. Diagonals that were never written are skipped by `multiply`.
class BandedMatrix {
public:
    BandedMatrix() = default;
    BandedMatrix(std::size_t order, std::size_t lower, std::size_t upper);

    std::size_t order() const noexcept { return n_; }
    std::size_t lower_bandwidth() const noexcept { return kl_; }
    std::size_t upper_bandwidth() const noexcept { return ku_; }
    std::span<const double> storage() const noexcept { return bands_; }

    bool in_band(std::size_t i, std::size_t j) const noexcept {
        return j + kl_ >= i && j <= i + ku_;
    }

    /// Entry (i, j); zero outside the band.
    double operator()(std::size_t i, std::size_t j) const;
    void set(std::size_t i, std::size_t j, double value);
    void add(std::size_t i, std::size_t j, double value);

    void multiply(std::span<const double> x, std::span<double> y) const;
    Vector operator*(std::span<const double> x) const;

    DenseMatrix to_dense() const;

private:
    std::size_t slot(std::size_t i, std::size_t j) const;

    std::size_t n_ = 0;
    std::size_t kl_ = 0;
    std::size_t ku_ = 0;
    std::vector<double> bands_;
    std::vector<char> active_;
};

/// Square linear operator held either densely or by bands.
class Matrix {
public:
    Matrix() = default;
    Matrix(DenseMatrix m);
    Matrix(BandedMatrix m);

    std::size_t size() const noexcept;
    bool is_banded() const noexcept { return std::holds_alternative<BandedMatrix>(rep_); }
    const DenseMatrix* dense() const noexcept { return std::get_if<DenseMatrix>(&rep_); }
    const BandedMatrix* banded() const noexcept { return std::get_if<BandedMatrix>(&rep_); }

    double operator()(std::size_t i, std::size_t j) const;

    void multiply(std::span<const double> x, std::span<double> y) const;
    Vector operator*(std::span<const double> x) const;

    DenseMatrix to_dense() const;

    /// shift * I - scale * A, keeping the storage kind.
    Matrix shifted(double shift, double scale) const;
    Matrix scaled(double factor) const;

    /// Banded + banded stays banded (widest bands); any dense operand gives dense.
    friend Matrix operator+(const Matrix& a, const Matrix& b);

private:
    std::variant<DenseMatrix, BandedMatrix> rep_;
};

/// Pivoted LU factors of a square matrix. Immutable; concurrent solves are safe.
class Factorization {
public:
    Factorization() = default;
    explicit Factorization(detail::DenseLu<double> lu);
    explicit Factorization(detail::BandedLu<double> lu);

    std::size_t order() const noexcept;
    bool is_banded() const noexcept {
        return std::holds_alternative<detail::BandedLu<double>>(lu_);
    }

    /// Overwrites `x` (holding the rhs) with the solution.
    void solve_in_place(std::span<double> x) const;

private:
    std::variant<detail::DenseLu<double>, detail::BandedLu<double>> lu_;
};

Factorization lu_factor(const DenseMatrix& m);
Factorization lu_factor(const BandedMatrix& m);
Factorization lu_factor(const Matrix& m);

Vector solve(const Factorization& f, std::span<const double> rhs);

/// Solves (shift * I - scale * m) x = rhs over the complex numbers.
ComplexVector complex_solve(Complex shift, Complex scale, const Matrix& m,
                            std::span<const Complex> rhs);

double max_norm(std::span<const double> v);
bool all_finite(std::span<const double> v);

}  // namespace tase
