#include <cmath>

#include "doctest.h"
#include "tase/problems.hpp"

using namespace tase;

namespace {

double linf(std::span<const double> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

Vector run_final(const ProblemCase& pc, const StepPlan& plan, std::size_t steps) {
    IntegrateOptions opts;
    opts.keep_states = false;
    auto traj = integrate(plan, pc.system, pc.t0, pc.initial, pc.t_final, steps, opts);
    REQUIRE_FALSE(traj.diverged);
    return traj.final_state();
}

}  // namespace

TEST_CASE("periodic diffusion exact solution") {
    DiffusionOptions o;
    o.n = 32;
    auto pc = diffusion_periodic(o);
    CHECK(linf(pc.exact(0.0), pc.initial) < 1e-15);
    for (double v : pc.exact(60.0)) CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("differencing constants and stability step") {
    CHECK(differencing_constant(Differencing::fd2) == 4.0);
    CHECK(differencing_constant(Differencing::fd4) == doctest::Approx(16.0 / 3.0));
    CHECK(differencing_constant(Differencing::fourier) == doctest::Approx(M_PI * M_PI));
    DiffusionOptions o;
    o.n = 600;
    auto pc = diffusion_periodic(o);
    double dx = 2.0 * M_PI / 600.0;
    CHECK(pc.stability_dt(2.0) == doctest::Approx(2.0 * dx * dx / (16.0 / 3.0)));
}

TEST_CASE("Fourier operator is exact on resolved modes") {
    auto d2 = fourier_second_derivative(16, 2.0 * M_PI);
    auto mesh = uniform_periodic_mesh(16, 0.0, 2.0 * M_PI);
    for (int k = 0; k <= 7; ++k) {
        Vector v(16), expect(16);
        for (std::size_t i = 0; i < 16; ++i) {
            v[i] = std::cos(k * mesh.points[i]);
            expect[i] = -k * k * v[i];
        }
        CHECK(linf(d2 * v, expect) < 1e-11);
    }
    CHECK_THROWS_AS(diffusion_periodic(DiffusionOptions{7, Differencing::fourier}), DomainError);
    CHECK_THROWS_AS(diffusion_periodic(DiffusionOptions{3}), DomainError);
}

TEST_CASE("periodic operators annihilate constants") {
    for (auto d : {Differencing::fd2, Differencing::fd4, Differencing::fourier}) {
        auto m = periodic_second_derivative(20, 2.0 * M_PI, d);
        for (double v : m * Vector(20, 1.0)) CHECK(std::abs(v) < 1e-13);
    }
}

TEST_CASE("exact solution satisfies the semi-discrete equation up to the spatial error") {
    DiffusionOptions o;
    o.n = 64;
    o.amplitude = 0.01;
    for (auto d : {Differencing::fd2, Differencing::fd4}) {
        o.differencing = d;
        auto pc = diffusion_periodic(o);
        double t = 0.7, h = 1e-5;
        auto ep = pc.exact(t + h), em = pc.exact(t - h);
        auto rhs = pc.system.rhs(t, pc.exact(t));
        double err = 0.0;
        for (std::size_t i = 0; i < rhs.size(); ++i) err = std::max(err, std::abs((ep[i] - em[i]) / (2 * h) - rhs[i]));
        double dx = 2.0 * M_PI / 64.0;
        CHECK(err < (d == Differencing::fd2 ? dx * dx : dx * dx * dx * dx));
    }
}

TEST_CASE("Fourier fourth-order TASE convergence") {
    DiffusionOptions o;
    o.n = 6;
    o.differencing = Differencing::fourier;
    o.t_final = 2.0;
    auto pc = diffusion_periodic(o);
    auto exact = pc.exact(pc.t_final);
    std::vector<double> errs, dts;
    for (std::size_t n : {80u, 160u, 320u}) {
        double dt = pc.t_final / n;
        auto y = run_final(pc, make_plan("ERK4", 4, dt), n);
        errs.push_back(error_report(y, exact).linf_rel);
        dts.push_back(dt);
    }
    CHECK(observed_order(errs, dts).order == doctest::Approx(4.0).epsilon(0.25 / 4.0));
}

TEST_CASE("larger alpha keeps the order but raises the error") {
    DiffusionOptions o;
    o.n = 6;
    o.differencing = Differencing::fourier;
    o.t_final = 2.0;
    auto pc = diffusion_periodic(o);
    auto exact = pc.exact(pc.t_final);
    std::vector<double> e1, e2, dts;
    for (std::size_t n : {100u, 200u, 400u}) {
        double dt = pc.t_final / n;
        e1.push_back(error_report(run_final(pc, make_plan("ERK2", 2, dt, 1.5), n), exact).linf_rel);
        e2.push_back(error_report(run_final(pc, make_plan("ERK2", 2, dt, 3.0), n), exact).linf_rel);
        dts.push_back(dt);
    }
    CHECK(observed_order(e2, dts).order == doctest::Approx(2.0).epsilon(0.1));
    for (std::size_t i = 0; i < e1.size(); ++i) CHECK(e2[i] > e1[i]);
}

TEST_CASE("Dirichlet case") {
    auto pc = diffusion_dirichlet(30);
    auto ones = Vector(pc.system.dimension, 1.0);
    for (double v : pc.system.rhs(0.0, ones)) CHECK(std::abs(v) < 1e-10);
    double dt = 0.25;
    CHECK(dt / pc.stability_dt(2.0) == doctest::Approx(60.8).epsilon(0.01));
    CHECK_THROWS_AS(diffusion_dirichlet(5), DomainError);

    std::size_t steps = 20;
    dt = pc.t_final / steps;
    auto ref = *pc.reference_final();
    auto good = run_final(pc, make_plan("ERK2", 2, dt), steps);
    auto bad = run_final(pc, make_plan("ERK2", 2, dt, std::nullopt, StepMode::tase_split), steps);
    CHECK(error_report(bad, ref).linf_rel >= 10.0 * error_report(good, ref).linf_rel);
}

TEST_CASE("reaction operator vanishes on equal concentrations") {
    auto pc = two_species_adr(AdrOptions{});
    const auto& reaction = pc.operators.at("L_r");
    Vector c(pc.system.dimension, 0.37);
    for (double v : reaction * c) CHECK(std::abs(v) < 1e-9);
    CHECK_THROWS_AS(two_species_adr(AdrOptions{5}), DomainError);
}

TEST_CASE("stretched mesh is positive and sums to the domain") {
    auto m = stretched_cell_mesh(40, 0.0, 1.0, 1.36);
    double sum = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        CHECK(m.widths[i] > 0.0);
        sum += m.widths[i];
        if (i > 0) CHECK(m.points[i] > m.points[i - 1]);
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.widths.back() < m.widths.front());
}

TEST_CASE("two-species split and combined runs") {
    AdrOptions o;
    auto eq = two_species_adr(o);
    std::size_t steps = eq.default_steps;
    double dt = eq.t_final / steps;
    auto ref = *eq.reference_final();
    auto combined = run_final(eq, make_plan("ERK2", 2, dt), steps);
    auto split = run_final(eq, make_plan("ERK2", 2, dt, std::nullopt, StepMode::tase_split), steps);
    CHECK(error_report(split, combined).linf_rel < 1e-3 * 10.0);
    CHECK(error_report(combined, ref).linf_rel < 5e-2);

    o.right = AdrBoundary::incompatible;
    auto inc = two_species_adr(o);
    auto inc_ref = *inc.reference_final();
    auto inc_split = run_final(inc, make_plan("ERK2", 2, dt, std::nullopt, StepMode::tase_split), steps);
    std::size_t n = o.n, worst = 0;
    double worst_err = -1.0;
    for (std::size_t i = 0; i < 2 * n; ++i) {
        double e = std::abs(inc_split[i] - inc_ref[i]);
        if (e > worst_err) {
            worst_err = e;
            worst = i % n;
        }
    }
    CHECK(inc.mesh.points[worst] > 0.8);
}

TEST_CASE("power-law diffusion linearization") {
    PowerLawOptions o;
    o.n = 40;
    auto pc = power_law_diffusion(o);
    auto analytic = pc.system.linearization(0.0, pc.initial).to_dense();
    auto fd = jacobian_fd(pc.system.nonlinear, pc.initial, 0.0);
    double scale = 0.0, err = 0.0;
    for (std::size_t i = 0; i < fd.rows(); ++i)
        for (std::size_t j = 0; j < fd.cols(); ++j) {
            scale = std::max(scale, std::abs(analytic(i, j)));
            err = std::max(err, std::abs(analytic(i, j) - fd(i, j)));
        }
    CHECK(err / scale < 1e-5);

    o.beta = 0.0;
    auto flat = power_law_diffusion(o);
    auto lin = flat.system.linearization(0.0, flat.initial).to_dense();
    Vector other(flat.initial.size(), 3.0);
    auto lin2 = flat.system.linearization(0.0, other).to_dense();
    for (std::size_t i = 0; i < lin.rows(); ++i)
        for (std::size_t j = 0; j < lin.cols(); ++j) CHECK(lin(i, j) == doctest::Approx(lin2(i, j)));
}

TEST_CASE("power-law conserves mass with plain steps") {
    PowerLawOptions o;
    o.n = 40;
    auto pc = power_law_diffusion(o);
    double dt = 0.1 * pc.stability_dt(2.0);
    auto y = erk_step(get_tableau("ERK2"), pc.system, 0.0, pc.initial, dt);
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        m0 += pc.mesh.widths[i] * pc.initial[i];
        m1 += pc.mesh.widths[i] * y[i];
    }
    CHECK(m1 == doctest::Approx(m0).epsilon(1e-13));
}

TEST_CASE("power-law fourth order TASE run is stable at a large ratio") {
    auto pc = power_law_diffusion(PowerLawOptions{});
    double ratio = 9.56;
    std::size_t steps = steps_for_ratio(pc.t_final, pc.stability_dt(2.79), ratio);
    auto plan = make_plan("ERK4", 4, pc.t_final / steps, std::nullopt, StepMode::tase_nonlinear);
    auto traj = integrate(plan, pc.system, 0.0, pc.initial, pc.t_final, steps, IntegrateOptions{false});
    CHECK_FALSE(traj.diverged);
}

TEST_CASE("stiff scalar ODE") {
    auto pc = stiff_scalar_ode(10.0);
    CHECK(pc.exact(0.0)[0] == 1.0);
    CHECK(pc.exact(2e4)[0] == doctest::Approx(std::pow(180001.0, -1.0 / 9.0)));
    CHECK(pc.stability_dt(2.0) == doctest::Approx(0.2));
    CHECK(pc.system.linearization(0.0, Vector{0.5})(0, 0) == doctest::Approx(-10.0 * std::pow(0.5, 9)));
}

TEST_CASE("polar diffusion") {
    auto pc = polar_diffusion();
    CHECK(pc.stability_dt(2.0, "radial") == doctest::Approx(6.2e-3).epsilon(0.1));
    CHECK(pc.stability_dt(2.0, "azimuthal") == doctest::Approx(4.0e-5).epsilon(0.1));
    CHECK_THROWS_AS(polar_diffusion(3, 40), DomainError);
    CHECK_THROWS_AS(polar_diffusion(10, 9), DomainError);

    const auto& ltheta = pc.operators.at("L_theta");
    Vector radial(pc.system.dimension);
    std::size_t nth = 40;
    for (std::size_t i = 0; i < radial.size(); ++i) radial[i] = 1.0 + static_cast<double>(i / nth);
    for (double v : ltheta * radial) CHECK(std::abs(v) < 1e-9);

    double lam = bessel_j2_first_root();
    auto e0 = pc.exact(0.0), e1 = pc.exact(0.05);
    CHECK(max_norm(e1) == doctest::Approx(std::exp(-lam * lam * 0.05) * max_norm(e0)).epsilon(1e-12));
}

TEST_CASE("Bessel function") {
    CHECK(bessel_j2(0.0) == 0.0);
    double root = bessel_j2_first_root();
    CHECK(root == doctest::Approx(5.1356223).epsilon(1e-8));
    CHECK(std::abs(bessel_j2(root)) < 1e-10);
    CHECK(bessel_j2(1.0) == doctest::Approx(0.1149034849).epsilon(1e-10));
    CHECK_THROWS_AS(bessel_j2(25.0), DomainError);
}

TEST_CASE("error report") {
    Vector e{1.0, -2.0, 3.0};
    auto same = error_report(e, e);
    CHECK(same.l2_rel == 0.0);
    CHECK(same.linf_rel == 0.0);
    Vector scaled{1.01, -2.02, 3.03};
    auto r = error_report(scaled, e);
    CHECK(r.l2_rel == doctest::Approx(0.01));
    CHECK(r.linf_rel == doctest::Approx(0.01));
    auto d = diverged_report();
    CHECK(d.diverged);
    CHECK(std::isinf(d.linf_rel));
    CHECK_THROWS_AS(error_report(e, Vector(3, 0.0)), DomainError);
    CHECK_THROWS_AS(error_report(e, Vector(2, 1.0)), DimensionError);
}

TEST_CASE("observed order") {
    std::vector<double> dts{0.1, 0.05, 0.025, 0.0125}, errs;
    for (double h : dts) errs.push_back(3.0 * h * h);
    CHECK(observed_order(errs, dts).order == doctest::Approx(2.0).epsilon(1e-12));
    errs[1] = 0.0;
    auto fit = observed_order(errs, dts);
    CHECK(fit.used == 3);
    CHECK(fit.excluded == std::vector<std::size_t>{1});
}

TEST_CASE("case catalog") {
    for (const auto& name : case_names()) {
        CAPTURE(name);
        auto pc = make_case(name);
        CHECK(pc.initial.size() == pc.system.dimension);
        CHECK_NOTHROW(pc.system.validate());
    }
    CHECK_THROWS_AS(make_case("nope"), UnknownNameError);
}
