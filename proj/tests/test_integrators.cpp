#include <cmath>
#include <random>

#include "doctest.h"
#include "tase/integrators.hpp"
#include "tase/problems.hpp"

using namespace tase;

namespace {

SemiDiscreteSystem scalar_linear(double lambda) {
    SemiDiscreteSystem sys;
    sys.dimension = 1;
    sys.linear = Matrix(DenseMatrix(1, 1, {lambda}));
    return sys;
}

SemiDiscreteSystem power_ode(double beta) {
    SemiDiscreteSystem sys;
    sys.dimension = 1;
    sys.nonlinear = [beta](double, std::span<const double> y, std::span<double> out) {
        out[0] = -std::pow(y[0], beta);
    };
    sys.linearization = [beta](double, std::span<const double> y) {
        return Matrix(DenseMatrix(1, 1, {-beta * std::pow(y[0], beta - 1.0)}));
    };
    return sys;
}

double final_error(const StepPlan& base, const SemiDiscreteSystem& sys, double exact, std::size_t steps) {
    auto traj = integrate(base, sys, 0.0, Vector{1.0}, 1.0, steps);
    return std::abs(traj.final_state()[0] - exact);
}

}  // namespace

TEST_CASE("zero dynamics leave the state unchanged") {
    SemiDiscreteSystem sys;
    sys.dimension = 2;
    sys.linear = Matrix(DenseMatrix(2, 2));
    Vector y{1.0, -2.0};
    CHECK(erk_step(get_tableau("ERK4"), sys, 0.0, y, 0.3) == y);
    auto plan = make_plan("ERK3", 3, 0.3);
    CHECK(erk_tase_step_linear(plan, sys, 0.0, y, 0.3) == y);
    auto traj = integrate(plan, sys, 0.0, y, 3.0, 10);
    CHECK(traj.times.size() == 11);
    for (const auto& s : traj.states) CHECK(s == y);
}

TEST_CASE("explicit steps follow the stability polynomial") {
    auto sys = scalar_linear(-1.0);
    double expect = 1.0 - 0.1 + 0.005 - 0.1 * 0.1 * 0.1 / 6.0 + 1e-4 / 24.0;
    CHECK(erk_step(get_tableau("ERK4"), sys, 0.0, Vector{1.0}, 0.1)[0] == doctest::Approx(expect).epsilon(1e-15));
    CHECK(std::abs(erk_step(get_tableau("ERK2"), sys, 0.0, Vector{1.0}, 2.0)[0]) == doctest::Approx(1.0));
}

TEST_CASE("first order TASE with alpha one is implicit Euler") {
    auto sys = scalar_linear(-1.0);
    for (double dt : {0.1, 1.0, 100.0}) {
        auto plan = make_plan("ERK1", 1, dt, 1.0);
        CHECK(erk_tase_step_linear(plan, sys, 0.0, Vector{2.0}, dt)[0] == doctest::Approx(2.0 / (1.0 + dt)));
    }
}

TEST_CASE("TASE keeps the steady root") {
    SemiDiscreteSystem sys = scalar_linear(-4.0);
    sys.source = [](double, std::span<double> out) { out[0] = 8.0; };
    auto plan = make_plan("ERK4", 4, 50.0);
    auto y = erk_tase_step_linear(plan, sys, 0.0, Vector{2.0}, 50.0);
    CHECK(y[0] == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("non-finite stages raise a divergence error with the stage index") {
    SemiDiscreteSystem sys;
    sys.dimension = 1;
    sys.nonlinear = [](double, std::span<const double> y, std::span<double> out) {
        out[0] = y[0] > 1.0 ? std::numeric_limits<double>::infinity() : 1.0;
    };
    try {
        erk_step(get_tableau("ERK2"), sys, 0.0, Vector{1.0}, 1.0);
        FAIL("expected divergence");
    } catch (const DivergenceError& e) {
        CHECK(e.stage() == 1);
    }
}

TEST_CASE("single split group matches the combined step") {
    SemiDiscreteSystem sys;
    sys.dimension = 2;
    sys.linear = Matrix(DenseMatrix(2, 2, {-3.0, 1.0, 2.0, -5.0}));
    sys.splits.push_back(SplitGroup{"all", sys.linear, {}, true, std::nullopt});
    auto combined = make_plan("ERK3", 3, 0.4, 2.8, StepMode::tase_combined);
    auto split = make_plan("ERK3", 3, 0.4, 2.8, StepMode::tase_split);
    Vector y{1.0, 0.5};
    auto a = erk_tase_step_linear(combined, sys, 0.0, y, 0.4);
    auto b = erk_tase_step_split(split, sys, 0.0, y, 0.4);
    CHECK(a == b);
}

TEST_CASE("commuting split groups agree with the combined step to high order") {
    auto make = [](double l1, double l2) {
        SemiDiscreteSystem sys;
        sys.dimension = 2;
        DenseMatrix a(2, 2, {l1, 0.0, 0.0, l2});
        sys.linear = Matrix(a);
        sys.splits.push_back(SplitGroup{"g1", Matrix(DenseMatrix(2, 2, {l1, 0.0, 0.0, 0.0})), {}, true, std::nullopt});
        sys.splits.push_back(SplitGroup{"g2", Matrix(DenseMatrix(2, 2, {0.0, 0.0, 0.0, l2})), {}, true, std::nullopt});
        return sys;
    };
    auto sys = make(-1.0, -2.0);
    Vector y{1.0, 1.0};
    std::vector<double> diffs;
    for (double dt : {0.1, 0.05}) {
        auto a = erk_tase_step_linear(make_plan("ERK2", 2, dt, 1.5, StepMode::tase_combined), sys, 0.0, y, dt);
        auto b = erk_tase_step_split(make_plan("ERK2", 2, dt, 1.5, StepMode::tase_split), sys, 0.0, y, dt);
        diffs.push_back(std::max(std::abs(a[0] - b[0]), std::abs(a[1] - b[1])));
    }
    CHECK(diffs[0] < 1e-12);
    CHECK(diffs[1] < 1e-12);
}

TEST_CASE("nonlinear mode reduces to the linear step for linear right-hand sides") {
    SemiDiscreteSystem lin;
    lin.dimension = 2;
    DenseMatrix a(2, 2, {-3.0, 1.0, 2.0, -5.0});
    lin.linear = Matrix(a);
    SemiDiscreteSystem non;
    non.dimension = 2;
    non.nonlinear = [a](double, std::span<const double> y, std::span<double> out) { a.multiply(y, out); };
    non.linearization = [a](double, std::span<const double>) { return Matrix(a); };
    Vector y{1.0, 0.5};
    auto x1 = erk_tase_step_linear(make_plan("ERK4", 4, 0.7), lin, 0.0, y, 0.7);
    auto x2 = erk_tase_step_nonlinear(make_plan("ERK4", 4, 0.7, std::nullopt, StepMode::tase_nonlinear), non, 0.0, y, 0.7);
    CHECK(x1[0] == doctest::Approx(x2[0]).epsilon(1e-13));
    CHECK(x1[1] == doctest::Approx(x2[1]).epsilon(1e-13));
}

TEST_CASE("linearization of the stiff power ODE") {
    auto sys = power_ode(10.0);
    CHECK(sys.jacobian(0.0, Vector{1.0})(0, 0) == doctest::Approx(-10.0));
    auto fd = jacobian_fd(sys.nonlinear, Vector{1.0}, 0.0);
    CHECK(fd(0, 0) == doctest::Approx(-10.0).epsilon(1e-5));
    CHECK(jacobian_fd(sys.nonlinear, Vector{0.0}, 0.0)(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("finite-difference Jacobian of a linear map") {
    DenseMatrix a(3, 3, {1.0, 2.0, 0.0, -1.0, 4.0, 3.0, 0.5, 0.0, -2.0});
    RhsFn f = [a](double, std::span<const double> y, std::span<double> out) { a.multiply(y, out); };
    auto j = jacobian_fd(f, Vector{0.1, -0.2, 0.3}, 0.0);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t c = 0; c < 3; ++c) CHECK(std::abs(j(r, c) - a(r, c)) <= 1e-6 * (1.0 + std::abs(a(r, c))));
}

TEST_CASE("implicit baselines") {
    auto sys = scalar_linear(-1.0);
    CHECK(sdirk_step(get_tableau("CN"), sys, 0.0, Vector{1.0}, 1.0)[0] == doctest::Approx(1.0 / 3.0));
    CHECK(sdirk_step(get_tableau("SDIRK1"), sys, 0.0, Vector{1.0}, 1.0)[0] == doctest::Approx(0.5));
    auto stiff = scalar_linear(-1e6);
    CHECK(std::abs(sdirk_step(get_tableau("SDIRK2"), stiff, 0.0, Vector{1.0}, 1.0)[0]) < 1e-5);
}

TEST_CASE("SDIRK Newton on a nonlinear problem") {
    auto sys = power_ode(10.0);
    auto y = sdirk_step(get_tableau("SDIRK2"), sys, 0.0, Vector{1.0}, 0.01);
    double h = 1e-4;
    Vector ref{1.0};
    for (int i = 0; i < 100; ++i) ref = erk_step(get_tableau("ERK4"), sys, 0.0, ref, h);
    CHECK(y[0] == doctest::Approx(ref[0]).epsilon(1e-3));
}

TEST_CASE("order is preserved in the asymptotic window") {
    auto sys = scalar_linear(-1.0);
    double exact = std::exp(-1.0);
    for (int s = 1; s <= 4; ++s)
        for (int p = 1; p <= 4; ++p) {
            auto plan = make_plan("ERK" + std::to_string(s), p, 1.0 / 160.0);
            std::vector<double> errs, dts;
            for (std::size_t n : {160u, 320u}) {
                errs.push_back(final_error(plan, sys, exact, n));
                dts.push_back(1.0 / static_cast<double>(n));
            }
            double order = observed_order(errs, dts).order;
            CAPTURE(s);
            CAPTURE(p);
            CHECK(order >= std::min(s, p) - 0.15);
        }
}

TEST_CASE("orders one and two are stable for any stiffness") {
    for (int s = 1; s <= 4; ++s)
        for (int p = 1; p <= 2; ++p)
            for (int j = 0; j <= 8; ++j) {
                auto sys = scalar_linear(-std::pow(10.0, j));
                auto plan = make_plan("ERK" + std::to_string(s), p, 1.0);
                CHECK(std::abs(erk_tase_step_linear(plan, sys, 0.0, Vector{1.0}, 1.0)[0]) <= 1.0 + 1e-12);
            }
}

TEST_CASE("stiff power ODE stays bounded at huge steps") {
    auto pc = stiff_scalar_ode(10.0);
    auto plan = make_plan("ERK2", 2, pc.t_final / 10.0, std::nullopt, StepMode::tase_nonlinear);
    auto traj = integrate(plan, pc.system, 0.0, pc.initial, pc.t_final, 10);
    CHECK_FALSE(traj.diverged);
    for (const auto& s : traj.states) {
        CHECK(s[0] > 0.0);
        CHECK(s[0] <= 1.0);
    }
}

TEST_CASE("plain explicit polar run blows up") {
    auto pc = polar_diffusion();
    auto plan = make_plan("ERK2", 0, 2e-3, std::nullopt, StepMode::plain);
    auto traj = integrate(plan, pc.system, 0.0, pc.initial, pc.t_final, 50);
    CHECK(traj.diverged);
    CHECK(traj.diverged_at_step.has_value());
}

TEST_CASE("plan validation") {
    auto sys = scalar_linear(-1.0);
    CHECK_THROWS_AS(make_plan("ERK2", 2, 0.1, std::nullopt, StepMode::tase_split).validate(sys), ConfigError);
    CHECK_THROWS_AS(make_plan("ERK2", 2, -0.1), DomainError);
    CHECK_THROWS_AS(make_plan("SDIRK2", 2, 0.1), ConfigError);
    CHECK_FALSE(make_plan("ERK2", 2, 0.1, 0.5).warnings.empty());
    CHECK(parse_step_mode(to_string(StepMode::tase_nonlinear)) == StepMode::tase_nonlinear);
}

TEST_CASE("split groups reproduce the full right-hand side") {
    for (auto bc : {AdrBoundary::equal, AdrBoundary::incompatible}) {
        AdrOptions o;
        o.right = bc;
        auto pc = two_species_adr(o);
        std::mt19937 rng(1);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        Vector y(pc.system.dimension);
        for (auto& v : y) v = u(rng);
        auto full = pc.system.rhs(0.001, y);
        Vector split(y.size());
        pc.system.split_rhs(0.001, y, split);
        double scale = max_norm(full);
        for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(full[i] - split[i]) <= 1e-12 * scale);
    }
}
