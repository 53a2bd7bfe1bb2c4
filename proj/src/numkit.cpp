#include "tase/numkit.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace tase {

namespace {

void require_finite(std::span<const double> values, const char* what) {
    if (!all_finite(values)) throw DomainError(std::string(what) + ": non-finite entry");
}

}  // namespace

// ---------------------------------------------------------------- DenseMatrix

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows_ * cols_) {
        throw DimensionError("DenseMatrix: " + std::to_string(data_.size()) +
                             " entries for a " + std::to_string(rows_) + "x" +
                             std::to_string(cols_) + " matrix");
    }
    require_finite(data_, "DenseMatrix");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

void DenseMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    if (x.size() != cols_ || y.size() != rows_) {
        throw DimensionError("DenseMatrix::multiply: operand size mismatch");
    }
    for (std::size_t i = 0; i < rows_; ++i) {
        const double* row = &data_[i * cols_];
        double s = 0.0;
        for (std::size_t j = 0; j < cols_; ++j) s += row[j] * x[j];
        y[i] = s;
    }
}

Vector DenseMatrix::operator*(std::span<const double> x) const {
    Vector y(rows_);
    multiply(x, y);
    return y;
}

// --------------------------------------------------------------- BandedMatrix

BandedMatrix::BandedMatrix(std::size_t order, std::size_t lower, std::size_t upper)
    : n_(order), kl_(lower), ku_(upper),
      bands_(order * (lower + upper + 1), 0.0), active_(lower + upper + 1, 0) {
    if (order == 0) throw DomainError("BandedMatrix: order must be positive");
    if (lower >= order || upper >= order) {
        throw DomainError("BandedMatrix: bandwidths must be smaller than the order");
    }
}

std::size_t BandedMatrix::slot(std::size_t i, std::size_t j) const {
    if (i >= n_ || j >= n_ || !in_band(i, j)) {
        throw DimensionError("BandedMatrix: (" + std::to_string(i) + ", " + std::to_string(j) +
                             ") is outside the band");
    }
    return (j + kl_ - i) * n_ + i;
}

double BandedMatrix::operator()(std::size_t i, std::size_t j) const {
    if (i >= n_ || j >= n_) throw DimensionError("BandedMatrix: index out of range");
    if (!in_band(i, j)) return 0.0;
    return bands_[(j + kl_ - i) * n_ + i];
}

void BandedMatrix::set(std::size_t i, std::size_t j, double value) {
    if (!std::isfinite(value)) throw DomainError("BandedMatrix: non-finite entry");
    bands_[slot(i, j)] = value;
    if (value != 0.0) active_[j + kl_ - i] = 1;
}

void BandedMatrix::add(std::size_t i, std::size_t j, double value) {
    set(i, j, (*this)(i, j) + value);
}

void BandedMatrix::multiply(std::span<const double> x, std::span<double> y) const {
    if (x.size() != n_ || y.size() != n_) {
        throw DimensionError("BandedMatrix::multiply: operand size mismatch");
    }
    std::fill(y.begin(), y.end(), 0.0);
    for (std::size_t d = 0; d < kl_ + ku_ + 1; ++d) {
        if (!active_[d]) continue;
        const double* band = &bands_[d * n_];
        // column = row + d - kl
        const std::size_t i0 = d < kl_ ? kl_ - d : 0;
        const std::size_t i1 = d > kl_ ? n_ - (d - kl_) : n_;
        const std::size_t shift_left = kl_ > d ? kl_ - d : 0;
        const std::size_t shift_right = d > kl_ ? d - kl_ : 0;
        for (std::size_t i = i0; i < i1; ++i) {
            y[i] += band[i] * x[i + shift_right - shift_left];
        }
    }
}

Vector BandedMatrix::operator*(std::span<const double> x) const {
    Vector y(n_);
    multiply(x, y);
    return y;
}

DenseMatrix BandedMatrix::to_dense() const {
    DenseMatrix m(n_, n_);
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t j0 = i > kl_ ? i - kl_ : 0;
        const std::size_t j1 = std::min(n_ - 1, i + ku_);
        for (std::size_t j = j0; j <= j1; ++j) m(i, j) = (*this)(i, j);
    }
    return m;
}

// --------------------------------------------------------------------- Matrix

Matrix::Matrix(DenseMatrix m) : rep_(std::move(m)) {
    const auto& d = std::get<DenseMatrix>(rep_);
    if (d.rows() != d.cols()) throw DimensionError("Matrix: operator must be square");
}

Matrix::Matrix(BandedMatrix m) : rep_(std::move(m)) {}

std::size_t Matrix::size() const noexcept {
    return std::visit(
        [](const auto& m) -> std::size_t {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, DenseMatrix>) {
                return m.rows();
            } else {
                return m.order();
            }
        },
        rep_);
}

double Matrix::operator()(std::size_t i, std::size_t j) const {
    return std::visit([&](const auto& m) { return m(i, j); }, rep_);
}

void Matrix::multiply(std::span<const double> x, std::span<double> y) const {
    std::visit([&](const auto& m) { m.multiply(x, y); }, rep_);
}

Vector Matrix::operator*(std::span<const double> x) const {
    Vector y(size());
    multiply(x, y);
    return y;
}

DenseMatrix Matrix::to_dense() const {
    if (const auto* d = dense()) return *d;
    return banded()->to_dense();
}

Matrix Matrix::shifted(double shift, double scale) const {
    if (const auto* b = banded()) {
        BandedMatrix out(b->order(), b->lower_bandwidth(), b->upper_bandwidth());
        const std::size_t n = b->order();
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j0 = i > b->lower_bandwidth() ? i - b->lower_bandwidth() : 0;
            const std::size_t j1 = std::min(n - 1, i + b->upper_bandwidth());
            for (std::size_t j = j0; j <= j1; ++j) {
                const double v = -scale * (*b)(i, j) + (i == j ? shift : 0.0);
                if (v != 0.0) out.set(i, j, v);
            }
        }
        return Matrix(std::move(out));
    }
    const auto& d = *dense();
    const std::size_t n = d.rows();
    DenseMatrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) out(i, j) = -scale * d(i, j);
        out(i, i) += shift;
    }
    return Matrix(std::move(out));
}

Matrix Matrix::scaled(double factor) const { return shifted(0.0, -factor); }

Matrix operator+(const Matrix& a, const Matrix& b) {
    if (a.size() != b.size()) throw DimensionError("Matrix sum: size mismatch");
    const std::size_t n = a.size();
    if (a.is_banded() && b.is_banded()) {
        const auto& x = *a.banded();
        const auto& y = *b.banded();
        const std::size_t kl = std::max(x.lower_bandwidth(), y.lower_bandwidth());
        const std::size_t ku = std::max(x.upper_bandwidth(), y.upper_bandwidth());
        BandedMatrix out(n, kl, ku);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t j0 = i > kl ? i - kl : 0;
            const std::size_t j1 = std::min(n - 1, i + ku);
            for (std::size_t j = j0; j <= j1; ++j) {
                const double v = x(i, j) + y(i, j);
                if (v != 0.0) out.set(i, j, v);
            }
        }
        return Matrix(std::move(out));
    }
    DenseMatrix out = a.to_dense();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) out(i, j) += b(i, j);
    }
    return Matrix(std::move(out));
}

// -------------------------------------------------------------- Factorization

Factorization::Factorization(detail::DenseLu<double> lu) : lu_(std::move(lu)) {}
Factorization::Factorization(detail::BandedLu<double> lu) : lu_(std::move(lu)) {}

std::size_t Factorization::order() const noexcept {
    return std::visit([](const auto& lu) { return lu.order(); }, lu_);
}

void Factorization::solve_in_place(std::span<double> x) const {
    if (const auto* d = std::get_if<detail::DenseLu<double>>(&lu_)) {
        thread_local std::vector<double> scratch;
        d->solve_in_place(x, scratch);
    } else {
        std::get<detail::BandedLu<double>>(lu_).solve_in_place(x);
    }
}

Factorization lu_factor(const DenseMatrix& m) {
    if (m.rows() != m.cols()) throw DimensionError("lu_factor: matrix must be square");
    return Factorization(detail::DenseLu<double>(
        m.rows(), std::vector<double>(m.entries().begin(), m.entries().end())));
}

Factorization lu_factor(const BandedMatrix& m) {
    return Factorization(detail::BandedLu<double>(
        m.order(), m.lower_bandwidth(), m.upper_bandwidth(),
        [&](std::size_t i, std::size_t j) { return m(i, j); }));
}

Factorization lu_factor(const Matrix& m) {
    if (const auto* b = m.banded()) return lu_factor(*b);
    return lu_factor(*m.dense());
}

Vector solve(const Factorization& f, std::span<const double> rhs) {
    if (rhs.size() != f.order()) {
        throw DimensionError("solve: rhs has length " + std::to_string(rhs.size()) +
                             ", factorization has order " + std::to_string(f.order()));
    }
    Vector x(rhs.begin(), rhs.end());
    f.solve_in_place(x);
    return x;
}

ComplexVector complex_solve(Complex shift, Complex scale, const Matrix& m,
                            std::span<const Complex> rhs) {
    const std::size_t n = m.size();
    if (rhs.size() != n) throw DimensionError("complex_solve: rhs length mismatch");
    ComplexVector x(rhs.begin(), rhs.end());
    if (const auto* b = m.banded()) {
        detail::BandedLu<Complex> lu(n, b->lower_bandwidth(), b->upper_bandwidth(),
                                     [&](std::size_t i, std::size_t j) {
                                         Complex v = -scale * (*b)(i, j);
                                         if (i == j) v += shift;
                                         return v;
                                     });
        lu.solve_in_place(x);
        return x;
    }
    const auto& d = *m.dense();
    std::vector<Complex> entries(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) entries[i * n + j] = -scale * d(i, j);
        entries[i * n + i] += shift;
    }
    detail::DenseLu<Complex> lu(n, std::move(entries));
    std::vector<Complex> scratch;
    lu.solve_in_place(x, scratch);
    return x;
}

double max_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) {
        const double a = std::abs(x);
        if (std::isnan(a)) return a;
        m = std::max(m, a);
    }
    return m;
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace tase
