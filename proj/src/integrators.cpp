#include "tase/integrators.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace tase {

namespace {

void add_into(std::span<double> out, std::span<const double> v) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += v[i];
}

Matrix sum_or_first(const std::optional<Matrix>& a, const std::optional<Matrix>& b) {
    if (a && b) return *a + *b;
    return a ? *a : *b;
}

}  // namespace

// --------------------------------------------------------- SemiDiscreteSystem

void SemiDiscreteSystem::validate() const {
    if (dimension == 0) throw ConfigError("system dimension must be positive");
    if (!linear && !nonlinear) {
        throw ConfigError("system needs a linear part or a nonlinear right-hand side");
    }
    if (linear && linear->size() != dimension) {
        throw ConfigError("linear part does not match the system dimension");
    }
    for (const auto& g : splits) {
        if (g.op && g.op->size() != dimension) {
            throw ConfigError("split group '" + g.name + "' does not match the system dimension");
        }
        if (g.precondition && !g.op) {
            throw ConfigError("split group '" + g.name + "' is preconditioned but has no operator");
        }
    }
}

void SemiDiscreteSystem::rhs(double t, std::span<const double> y, std::span<double> out) const {
    if (y.size() != dimension || out.size() != dimension) {
        throw DimensionError("rhs: state length does not match the system");
    }
    thread_local Vector tmp;
    if (linear) {
        linear->multiply(y, out);
    } else {
        std::fill(out.begin(), out.end(), 0.0);
    }
    if (source || nonlinear) tmp.resize(dimension);
    if (source) {
        source(t, tmp);
        add_into(out, tmp);
    }
    if (nonlinear) {
        nonlinear(t, y, tmp);
        add_into(out, tmp);
    }
}

Vector SemiDiscreteSystem::rhs(double t, std::span<const double> y) const {
    Vector out(dimension);
    rhs(t, y, out);
    return out;
}

void SemiDiscreteSystem::split_rhs(double t, std::span<const double> y,
                                   std::span<double> out) const {
    if (splits.empty()) throw ConfigError("system has no split groups");
    Vector tmp(dimension);
    std::fill(out.begin(), out.end(), 0.0);
    for (const auto& g : splits) {
        if (g.op) {
            g.op->multiply(y, tmp);
            add_into(out, tmp);
        }
        if (g.source) {
            g.source(t, tmp);
            add_into(out, tmp);
        }
    }
}

Matrix SemiDiscreteSystem::jacobian(double t, std::span<const double> y, bool allow_fd) const {
    if (!nonlinear) return *linear;
    if (linearization) {
        std::optional<Matrix> jn = linearization(t, y);
        return sum_or_first(linear, jn);
    }
    if (!allow_fd) throw ConfigError("system has no analytic linearization");
    return Matrix(jacobian_fd([this](double tt, std::span<const double> yy,
                                     std::span<double> out) { rhs(tt, yy, out); },
                              y, t));
}

DenseMatrix jacobian_fd(const RhsFn& f, std::span<const double> y, double t) {
    const std::size_t n = y.size();
    Vector base(n);
    Vector probe(y.begin(), y.end());
    Vector shifted(n);
    f(t, y, base);
    if (!all_finite(base)) throw DomainError("jacobian_fd: non-finite right-hand side");
    const double root_eps = std::sqrt(std::numeric_limits<double>::epsilon());
    DenseMatrix jac(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        const double h = root_eps * (1.0 + std::abs(y[j]));
        probe[j] = y[j] + h;
        const double step = probe[j] - y[j];
        f(t, probe, shifted);
        probe[j] = y[j];
        if (!all_finite(shifted)) throw DomainError("jacobian_fd: non-finite right-hand side");
        for (std::size_t i = 0; i < n; ++i) jac(i, j) = (shifted[i] - base[i]) / step;
    }
    return jac;
}

// ------------------------------------------------------------------- StepPlan

StepMode parse_step_mode(std::string_view name) {
    if (name == "plain") return StepMode::plain;
    if (name == "combined" || name == "tase-combined") return StepMode::tase_combined;
    if (name == "split" || name == "tase-split") return StepMode::tase_split;
    if (name == "nonlinear" || name == "tase-nonlinear") return StepMode::tase_nonlinear;
    throw ConfigError("unknown step mode '" + std::string(name) + "'");
}

std::string to_string(StepMode mode) {
    switch (mode) {
        case StepMode::plain: return "plain";
        case StepMode::tase_combined: return "tase-combined";
        case StepMode::tase_split: return "tase-split";
        case StepMode::tase_nonlinear: return "tase-nonlinear";
    }
    return "?";
}

void StepPlan::validate(const SemiDiscreteSystem& system) const {
    system.validate();
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step must be positive");
    if ((mode == StepMode::plain) != !tase.has_value()) {
        throw ConfigError("a TASE configuration is required exactly when the mode is not plain");
    }
    if (tase) tase::validate(*tase);
    if (mode != StepMode::plain && !tableau.is_explicit()) {
        throw ConfigError("TASE preconditioning needs an explicit scheme, got " + tableau.name);
    }
    if (mode == StepMode::tase_combined && !system.linear) {
        throw ConfigError("combined TASE needs a linear operator");
    }
    if (mode == StepMode::tase_split && system.splits.empty()) {
        throw ConfigError("split TASE needs split operator groups");
    }
}

StepPlan make_plan(std::string_view scheme, int tase_order, double dt, std::optional<double> alpha,
                   StepMode mode, TaseForm form) {
    StepPlan plan;
    plan.tableau = get_tableau(scheme);
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw DomainError("time step must be positive and finite, got " + std::to_string(dt));
    }
    plan.dt = dt;
    if (tase_order == 0) {
        plan.mode = StepMode::plain;
        if (alpha) plan.warnings.emplace_back("alpha ignored without TASE");
        return plan;
    }
    if (mode == StepMode::plain) throw ConfigError("plain mode cannot carry a TASE order");
    if (!plan.tableau.is_explicit()) {
        throw ConfigError("TASE preconditioning needs an explicit scheme, got " + plan.tableau.name);
    }
    const SchemeInfo info = scheme_info(plan.tableau.name);
    TaseConfig config{tase_order, 0.0, form};
    if (tase_order < 1 || tase_order > kMaxTaseOrder) {
        throw ConfigError("TASE order must be in 0..4, got " + std::to_string(tase_order));
    }
    config.alpha = alpha ? *alpha : default_alpha(tase_order, info);
    plan.alpha_from_scheme = !alpha.has_value();
    tase::validate(config);
    plan.tase = config;
    plan.mode = mode;
    plan.warnings = alpha_warnings(config, info);
    return plan;
}

// -------------------------------------------------------------------- Stepper

struct Stepper::Impl {
    const SemiDiscreteSystem* sys;
    StepPlan plan;
    std::size_t n;
    std::size_t s;
    std::vector<Vector> k;
    Vector stage_y;
    Vector tmp;
    Vector tmp2;
    Vector src;
    StepStats stats;

    std::optional<ShiftSet> combined;
    std::vector<std::optional<ShiftSet>> group_shifts;
    std::optional<ShiftSet> frozen;
    std::map<double, Factorization> sdirk_factors;
    std::optional<Matrix> sdirk_jacobian;

    Impl(const SemiDiscreteSystem& system, StepPlan p)
        : sys(&system), plan(std::move(p)), n(system.dimension), s(plan.tableau.stages),
          k(s, Vector(system.dimension)), stage_y(n), tmp(n), tmp2(n), src(n) {
        plan.validate(system);
        switch (plan.mode) {
            case StepMode::tase_combined:
                combined.emplace(*sys->linear, *plan.tase, plan.dt);
                break;
            case StepMode::tase_split: {
                // Preconditioned groups sharing a stiff mode add their asymptotic limits, so the
                // scheme-derived alpha is scaled by the number of groups that use it.
                TaseConfig shared = *plan.tase;
                if (plan.alpha_from_scheme) {
                    const auto sharing = std::count_if(
                        sys->splits.begin(), sys->splits.end(),
                        [](const SplitGroup& g) { return g.precondition && !g.tase; });
                    shared.alpha *= static_cast<double>(std::max<std::ptrdiff_t>(sharing, 1));
                }
                for (const auto& g : sys->splits) {
                    if (g.precondition) {
                        group_shifts.emplace_back(std::in_place, *g.op, g.tase.value_or(shared),
                                                  plan.dt);
                    } else {
                        group_shifts.emplace_back();
                    }
                }
                break;
            }
            default: break;
        }
    }

    void apply_tase(const ShiftSet& shifts, const Matrix* op, std::span<const double> y,
                    const SourceFn& source, double t, std::span<double> out) {
        if (shifts.config().form == TaseForm::operator_form && op) {
            std::span<const double> s_view;
            if (source) {
                source(t, src);
                s_view = src;
            }
            shifts.apply_operator_with_source(y, s_view, out);
            stats.solver_iterations += shifts.config().order;
            return;
        }
        if (op) {
            op->multiply(y, tmp);
        } else {
            std::fill(tmp.begin(), tmp.end(), 0.0);
        }
        if (source) {
            source(t, src);
            add_into(tmp, src);
        }
        shifts.apply_preconditioner(tmp, out);
        stats.solver_iterations += shifts.config().order;
    }

    void stage_rhs(double t, std::span<const double> y, std::span<double> out) {
        switch (plan.mode) {
            case StepMode::plain: sys->rhs(t, y, out); return;
            case StepMode::tase_combined:
                apply_tase(*combined, &*sys->linear, y, sys->source, t, out);
                if (sys->nonlinear) {
                    sys->nonlinear(t, y, tmp2);
                    add_into(out, tmp2);
                }
                return;
            case StepMode::tase_split: {
                std::fill(out.begin(), out.end(), 0.0);
                for (std::size_t g = 0; g < sys->splits.size(); ++g) {
                    const SplitGroup& group = sys->splits[g];
                    if (group_shifts[g]) {
                        apply_tase(*group_shifts[g], &*group.op, y, group.source, t, tmp2);
                    } else {
                        if (group.op) {
                            group.op->multiply(y, tmp2);
                        } else {
                            std::fill(tmp2.begin(), tmp2.end(), 0.0);
                        }
                        if (group.source) {
                            group.source(t, src);
                            add_into(tmp2, src);
                        }
                    }
                    add_into(out, tmp2);
                }
                if (sys->nonlinear) {
                    sys->nonlinear(t, y, tmp2);
                    add_into(out, tmp2);
                }
                return;
            }
            case StepMode::tase_nonlinear:
                sys->rhs(t, y, tmp);
                frozen->apply_preconditioner(tmp, out);
                stats.solver_iterations += frozen->config().order;
                return;
        }
    }

    void explicit_step(double t, std::span<double> y) {
        const auto& tab = plan.tableau;
        const double dt = plan.dt;
        if (plan.mode == StepMode::tase_nonlinear) {
            const bool fd = plan.linearization == JacobianSource::finite_difference;
            Matrix jac = fd ? Matrix(jacobian_fd(
                                  [this](double tt, std::span<const double> yy, std::span<double> o) {
                                      sys->rhs(tt, yy, o);
                                  },
                                  y, t))
                            : sys->jacobian(t, y, true);
            frozen.emplace(jac, *plan.tase, dt);
            stats.factorizations += plan.tase->order;
        }
        for (std::size_t i = 0; i < s; ++i) {
            std::copy(y.begin(), y.end(), stage_y.begin());
            for (std::size_t j = 0; j < i; ++j) {
                const double a = tab.a_at(i, j);
                if (a == 0.0) continue;
                for (std::size_t q = 0; q < n; ++q) stage_y[q] += dt * a * k[j][q];
            }
            stage_rhs(t + tab.c[i] * dt, stage_y, k[i]);
            if (!all_finite(k[i])) {
                throw DivergenceError(i);
            }
        }
        for (std::size_t i = 0; i < s; ++i) {
            const double b = tab.b[i];
            if (b == 0.0) continue;
            for (std::size_t q = 0; q < n; ++q) y[q] += dt * b * k[i][q];
        }
    }

    const Factorization& linear_stage_factor(double diag) {
        auto it = sdirk_factors.find(diag);
        if (it == sdirk_factors.end()) {
            it = sdirk_factors.emplace(diag, lu_factor(sys->linear->shifted(1.0, plan.dt * diag)))
                     .first;
            ++stats.factorizations;
        }
        return it->second;
    }

    void newton_stage(double t, double diag, std::span<const double> base, std::span<double> z) {
        const double h = plan.dt * diag;
        std::vector<double> history;
        const auto residual = [&](std::span<const double> zz, std::span<double> g) {
            sys->rhs(t, zz, g);
            for (std::size_t q = 0; q < n; ++q) g[q] = zz[q] - base[q] - h * g[q];
        };
        for (int it = 0;; ++it) {
            residual(z, tmp);
            const double r = max_norm(tmp);
            history.push_back(r);
            if (std::isnan(r)) {
                throw NewtonError(0, std::move(history));
            }
            if (r < plan.newton.tolerance) return;
            if (it >= plan.newton.max_iterations) {
                throw NewtonError(0, std::move(history));
            }
            const bool fd = plan.newton.jacobian == JacobianSource::finite_difference ||
                            !sys->linearization;
            Matrix jf = fd ? Matrix(jacobian_fd(
                                 [this](double tt, std::span<const double> yy, std::span<double> o) {
                                     sys->rhs(tt, yy, o);
                                 },
                                 z, t))
                           : sys->jacobian(t, z, false);
            const Factorization f = lu_factor(jf.shifted(1.0, h));
            ++stats.factorizations;
            ++stats.solver_iterations;
            f.solve_in_place(tmp);
            for (std::size_t q = 0; q < n; ++q) z[q] -= tmp[q];
        }
    }

    void implicit_step(double t, std::span<double> y) {
        const auto& tab = plan.tableau;
        const double dt = plan.dt;
        const bool linear_only = !sys->nonlinear;
        Vector z(y.begin(), y.end());
        for (std::size_t i = 0; i < s; ++i) {
            std::copy(y.begin(), y.end(), stage_y.begin());
            for (std::size_t j = 0; j < i; ++j) {
                const double a = tab.a_at(i, j);
                if (a == 0.0) continue;
                for (std::size_t q = 0; q < n; ++q) stage_y[q] += dt * a * k[j][q];
            }
            const double diag = tab.a_at(i, i);
            const double ti = t + tab.c[i] * dt;
            if (diag == 0.0) {
                sys->rhs(ti, stage_y, k[i]);
            } else if (linear_only) {
                // (I - dt a_ii L) K = L base + S
                sys->rhs(ti, stage_y, k[i]);
                linear_stage_factor(diag).solve_in_place(k[i]);
                ++stats.solver_iterations;
            } else {
                try {
                    newton_stage(ti, diag, stage_y, z);
                } catch (const NewtonError& e) {
                    throw NewtonError(i, e.residual_history());
                }
                const double inv = 1.0 / (dt * diag);
                for (std::size_t q = 0; q < n; ++q) k[i][q] = (z[q] - stage_y[q]) * inv;
            }
            if (!all_finite(k[i])) {
                throw DivergenceError(i);
            }
        }
        for (std::size_t i = 0; i < s; ++i) {
            const double b = tab.b[i];
            if (b == 0.0) continue;
            for (std::size_t q = 0; q < n; ++q) y[q] += dt * b * k[i][q];
        }
    }
};

Stepper::Stepper(const SemiDiscreteSystem& system, StepPlan plan)
    : impl_(std::make_unique<Impl>(system, std::move(plan))) {}
Stepper::~Stepper() = default;
Stepper::Stepper(Stepper&&) noexcept = default;
Stepper& Stepper::operator=(Stepper&&) noexcept = default;

const StepPlan& Stepper::plan() const noexcept { return impl_->plan; }
const StepStats& Stepper::last_stats() const noexcept { return impl_->stats; }

void Stepper::step(double t, std::span<double> y) {
    if (y.size() != impl_->n) throw DimensionError("step: state length does not match the system");
    impl_->stats = {};
    if (impl_->plan.tableau.is_explicit()) {
        impl_->explicit_step(t, y);
    } else {
        impl_->implicit_step(t, y);
    }
}

// ------------------------------------------------------------ one-step helpers

namespace {

Vector one_step(StepPlan plan, const SemiDiscreteSystem& system, double t,
                std::span<const double> y, double dt) {
    plan.dt = dt;
    Stepper stepper(system, std::move(plan));
    Vector out(y.begin(), y.end());
    stepper.step(t, out);
    return out;
}

StepPlan with_mode(const StepPlan& plan, StepMode mode) {
    StepPlan p = plan;
    p.mode = mode;
    if (!p.tase) throw ConfigError("TASE step requested without a TASE configuration");
    return p;
}

}  // namespace

Vector erk_step(const ButcherTableau& tableau, const SemiDiscreteSystem& system, double t,
                std::span<const double> y, double dt) {
    if (!tableau.is_explicit()) throw ConfigError("erk_step needs an explicit tableau");
    StepPlan plan;
    plan.tableau = tableau;
    return one_step(std::move(plan), system, t, y, dt);
}

Vector erk_tase_step_linear(const StepPlan& plan, const SemiDiscreteSystem& system, double t,
                            std::span<const double> y, double dt) {
    return one_step(with_mode(plan, StepMode::tase_combined), system, t, y, dt);
}

Vector erk_tase_step_split(const StepPlan& plan, const SemiDiscreteSystem& system, double t,
                           std::span<const double> y, double dt) {
    return one_step(with_mode(plan, StepMode::tase_split), system, t, y, dt);
}

Vector erk_tase_step_nonlinear(const StepPlan& plan, const SemiDiscreteSystem& system, double t,
                               std::span<const double> y, double dt) {
    return one_step(with_mode(plan, StepMode::tase_nonlinear), system, t, y, dt);
}

Vector sdirk_step(const ButcherTableau& tableau, const SemiDiscreteSystem& system, double t,
                  std::span<const double> y, double dt, const NewtonOptions& newton) {
    if (tableau.is_explicit()) throw ConfigError("sdirk_step needs a diagonally implicit tableau");
    StepPlan plan;
    plan.tableau = tableau;
    plan.newton = newton;
    return one_step(std::move(plan), system, t, y, dt);
}

// ------------------------------------------------------------------ integrate

double Trajectory::mean_step_seconds() const {
    if (diagnostics.empty()) return 0.0;
    double total = 0.0;
    for (const auto& d : diagnostics) total += d.wall_seconds;
    return total / static_cast<double>(diagnostics.size());
}

Trajectory integrate(StepPlan plan, const SemiDiscreteSystem& system, double t0,
                     std::span<const double> y0, double t_final, std::size_t n_steps,
                     const IntegrateOptions& options) {
    using clock = std::chrono::steady_clock;
    if (n_steps == 0) throw ConfigError("integrate: n_steps must be at least 1");
    if (!(t_final > t0)) throw ConfigError("integrate: t_final must exceed t0");
    if (y0.size() != system.dimension) throw DimensionError("integrate: initial state length");
    plan.dt = (t_final - t0) / static_cast<double>(n_steps);

    Trajectory traj;
    const auto setup_start = clock::now();
    Stepper stepper(system, std::move(plan));
    traj.setup_seconds = std::chrono::duration<double>(clock::now() - setup_start).count();
    const double dt = stepper.plan().dt;

    Vector y(y0.begin(), y0.end());
    traj.times.push_back(t0);
    traj.states.push_back(y);
    for (std::size_t step = 0; step < n_steps; ++step) {
        const double t = t0 + static_cast<double>(step) * dt;
        const auto start = clock::now();
        StepDiagnostics diag;
        try {
            stepper.step(t, y);
        } catch (const DivergenceError& e) {
            traj.diverged = true;
            traj.diverged_at_step = step;
            traj.divergence_reason = e.what();
            break;
        }
        diag.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
        diag.max_norm = max_norm(y);
        diag.solver_iterations = stepper.last_stats().solver_iterations;
        traj.diagnostics.push_back(diag);
        const double t_next = step + 1 == n_steps ? t_final : t0 + static_cast<double>(step + 1) * dt;
        if (options.keep_states || traj.states.size() < 2) {
            traj.times.push_back(t_next);
            traj.states.push_back(y);
        } else {
            traj.times.back() = t_next;
            traj.states.back() = y;
        }
        if (!(diag.max_norm <= kDivergenceThreshold)) {
            traj.diverged = true;
            traj.diverged_at_step = step;
            traj.divergence_reason = std::isfinite(diag.max_norm)
                                         ? "max norm exceeded the divergence threshold"
                                         : "state became non-finite";
            break;
        }
    }
    return traj;
}

}  // namespace tase
