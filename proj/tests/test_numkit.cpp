#include <cmath>
#include <random>

#include "doctest.h"
#include "tase/numkit.hpp"

using namespace tase;

namespace {

DenseMatrix random_dominant(std::size_t n, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) m(i, j) = u(rng);
        m(i, i) += static_cast<double>(n);
    }
    return m;
}

BandedMatrix second_difference(std::size_t n) {
    BandedMatrix m(n, 1, 1);
    for (std::size_t i = 0; i < n; ++i) {
        m.set(i, i, 2.0);
        if (i > 0) m.set(i, i - 1, -1.0);
        if (i + 1 < n) m.set(i, i + 1, -1.0);
    }
    return m;
}

}  // namespace

TEST_CASE("identity factorization solves to the rhs") {
    auto f = lu_factor(DenseMatrix::identity(3));
    Vector rhs{5.0, 6.0, 7.0};
    auto x = solve(f, rhs);
    CHECK(x == rhs);
}

TEST_CASE("diagonal factorization divides componentwise") {
    DenseMatrix m(2, 2, {2.0, 0.0, 0.0, 4.0});
    auto x = solve(lu_factor(m), Vector{2.0, 4.0});
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[1] == doctest::Approx(1.0));
}

TEST_CASE("scalar shifted system halves the rhs") {
    double dt_lambda = -1.0;
    DenseMatrix m(1, 1, {1.0 - dt_lambda});
    auto x = solve(lu_factor(m), Vector{3.0});
    CHECK(x[0] == doctest::Approx(1.5));
}

TEST_CASE("random dense round trip") {
    auto a = random_dominant(50, 7);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector b(50);
    for (auto& v : b) v = u(rng);
    auto x = solve(lu_factor(a), b);
    auto ax = a * x;
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        num += (ax[i] - b[i]) * (ax[i] - b[i]);
        den += b[i] * b[i];
    }
    CHECK(std::sqrt(num / den) < 1e-12);
}

TEST_CASE("tridiagonal solve recovers ones") {
    auto m = second_difference(10);
    Vector ones(10, 1.0);
    auto x = solve(lu_factor(m), m * ones);
    for (double v : x) CHECK(std::abs(v - 1.0) < 1e-12);
}

TEST_CASE("banded and dense paths agree") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    const std::size_t n = 40;
    BandedMatrix b(n, 3, 2);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (b.in_band(i, j)) b.set(i, j, u(rng) + (i == j ? 0.5 : 0.0));
    Vector rhs(n);
    for (auto& v : rhs) v = u(rng);
    auto xb = solve(lu_factor(b), rhs);
    auto xd = solve(lu_factor(b.to_dense()), rhs);
    double scale = max_norm(xd);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(xb[i] - xd[i]) <= 1e-12 * scale);

    auto yb = b * rhs;
    auto yd = b.to_dense() * rhs;
    for (std::size_t i = 0; i < n; ++i) CHECK(yb[i] == doctest::Approx(yd[i]).epsilon(1e-14));
}

TEST_CASE("round trip holds for many random systems") {
    for (unsigned seed = 0; seed < 20; ++seed) {
        auto a = random_dominant(12, seed);
        std::mt19937 rng(seed + 100);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        Vector b(12);
        for (auto& v : b) v = u(rng);
        auto x = solve(lu_factor(a), b);
        auto ax = a * x;
        double err = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) err = std::max(err, std::abs(ax[i] - b[i]));
        CHECK(err / max_norm(b) < 1e-10);
    }
}

TEST_CASE("pivoting handles a zero leading entry") {
    DenseMatrix m(2, 2, {0.0, 1.0, 1.0, 0.0});
    auto x = solve(lu_factor(m), Vector{3.0, 4.0});
    CHECK(x[0] == doctest::Approx(4.0));
    CHECK(x[1] == doctest::Approx(3.0));
}

TEST_CASE("singular matrices are reported") {
    DenseMatrix m(2, 2, {1.0, 2.0, 2.0, 4.0});
    CHECK_THROWS_AS(lu_factor(m), SingularMatrixError);
    BandedMatrix b(3, 1, 1);
    CHECK_THROWS_AS(lu_factor(b), SingularMatrixError);
}

TEST_CASE("dimension mismatch is reported") {
    auto f = lu_factor(DenseMatrix::identity(3));
    CHECK_THROWS_AS(solve(f, Vector{1.0, 2.0}), DimensionError);
    CHECK_THROWS_AS(lu_factor(DenseMatrix(2, 3)), DimensionError);
}

TEST_CASE("complex solve") {
    Matrix m(DenseMatrix(1, 1, {-1.0}));
    ComplexVector rhs{Complex(2.0, 1.0)};

    SUBCASE("zero scale returns the rhs") {
        auto x = complex_solve(1.0, 0.0, m, rhs);
        CHECK(std::abs(x[0] - rhs[0]) < 1e-15);
    }
    SUBCASE("scalar divides by the shifted value") {
        auto x = complex_solve(1.0, Complex(0.0, 0.5), m, rhs);
        CHECK(std::abs(x[0] - rhs[0] / Complex(1.0, 0.5)) < 1e-15);
    }
    SUBCASE("diagonal decouples") {
        Matrix d(DenseMatrix(2, 2, {-1.0, 0.0, 0.0, -3.0}));
        ComplexVector v{Complex(1.0, 0.0), Complex(0.0, 1.0)};
        auto x = complex_solve(2.0, 1.0, d, v);
        CHECK(std::abs(x[0] - v[0] / 3.0) < 1e-15);
        CHECK(std::abs(x[1] - v[1] / 5.0) < 1e-15);
    }
}

TEST_CASE("matrix wrapper keeps banded storage under shifts") {
    Matrix m(second_difference(6));
    auto s = m.shifted(2.0, 0.5);
    CHECK(s.is_banded());
    CHECK(s(0, 0) == doctest::Approx(1.0));
    CHECK(s(0, 1) == doctest::Approx(0.5));
    auto sum = m + Matrix(DenseMatrix::identity(6));
    CHECK_FALSE(sum.is_banded());
    CHECK(sum(2, 2) == doctest::Approx(3.0));
}

TEST_CASE("norms and finiteness") {
    Vector v{1.0, -3.0, 2.0};
    CHECK(max_norm(v) == 3.0);
    CHECK(all_finite(v));
    v[1] = std::nan("");
    CHECK_FALSE(all_finite(v));
}
