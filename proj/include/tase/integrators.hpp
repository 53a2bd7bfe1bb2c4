#pragma once

// Time steppers: explicit RK with or without TASE preconditioning (combined,
// split and linearized-nonlinear variants) and SDIRK baselines.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tase/numkit.hpp"
#include "tase/schemes.hpp"
#include "tase/tase.hpp"

namespace tase {

/// Writes S(t) into `out` (length = system dimension).
using SourceFn = std::function<void(double t, std::span<double> out)>;
/// Writes N(y, t) into `out`.
using RhsFn = std::function<void(double t, std::span<const double> y, std::span<double> out)>;
/// Returns dN/dy at (y, t).
using JacobianFn = std::function<Matrix(double t, std::span<const double> y)>;

/// One operator group of a split right-hand side: op * y + source.
struct SplitGroup {
    std::string name;
    std::optional<Matrix> op;
    SourceFn source;
    /// Apply the group's own TASE preconditioner to (op * y + source).
    bool precondition = true;
    /// Per-group override of the plan's TASE configuration.
    std::optional<TaseConfig> tase;
};

/// dy/dt = L y + S(t) + N(y, t), optionally described as a sum of split groups.
struct SemiDiscreteSystem {
    std::size_t dimension = 0;
    std::optional<Matrix> linear;
    SourceFn source;
    RhsFn nonlinear;
    JacobianFn linearization;
    std::vector<SplitGroup> splits;

    /// Throws ConfigError when the description is inconsistent.
    void validate() const;

    /// Full right-hand side L y + S + N.
    void rhs(double t, std::span<const double> y, std::span<double> out) const;
    Vector rhs(double t, std::span<const double> y) const;

    /// Sum over split groups of (op * y + source).
    void split_rhs(double t, std::span<const double> y, std::span<double> out) const;

    /// Jacobian of the full right-hand side: L + dN/dy (analytic when available).
    Matrix jacobian(double t, std::span<const double> y, bool allow_fd = true) const;
};

enum class StepMode { plain, tase_combined, tase_split, tase_nonlinear };

enum class JacobianSource { analytic, finite_difference };

struct NewtonOptions {
    double tolerance = 1e-12;
    int max_iterations = 50;
    /// SDIRK Newton Jacobian: finite differences mirror a black-box nonlinear solver.
    JacobianSource jacobian = JacobianSource::finite_difference;
};

struct StepPlan {
    ButcherTableau tableau;
    StepMode mode = StepMode::plain;
    std::optional<TaseConfig> tase;
    double dt = 0.0;
    NewtonOptions newton;
    /// Linearization used by tase_nonlinear.
    JacobianSource linearization = JacobianSource::analytic;
    /// alpha came from the scheme default; split mode then scales it by the number of
    /// preconditioned groups without their own configuration.
    bool alpha_from_scheme = false;
    std::vector<std::string> warnings;

    /// Throws ConfigError for inconsistent combinations.
    void validate(const SemiDiscreteSystem& system) const;
};

/// Plan for `scheme` (ERKs, SDIRKs, CN or aliases) with TASE order `tase_order` (0 = off).
/// alpha defaults to alpha_min against the scheme's safe intercept.
StepPlan make_plan(std::string_view scheme, int tase_order, double dt,
                   std::optional<double> alpha = std::nullopt,
                   StepMode mode = StepMode::tase_combined,
                   TaseForm form = TaseForm::preconditioner);

StepMode parse_step_mode(std::string_view name);
std::string to_string(StepMode mode);

struct StepStats {
    int solver_iterations = 0;
    int factorizations = 0;
};

/// Advances a system by one step of a plan. Holds the cached shift sets and
/// SDIRK factors for the plan's dt; not thread-safe, one per integration.
class Stepper {
public:
    Stepper(const SemiDiscreteSystem& system, StepPlan plan);
    ~Stepper();
    Stepper(Stepper&&) noexcept;
    Stepper& operator=(Stepper&&) noexcept;

    const StepPlan& plan() const noexcept;

    /// y <- y(t + dt). Throws DivergenceError when a stage turns non-finite.
    void step(double t, std::span<double> y);
    const StepStats& last_stats() const noexcept;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

Vector erk_step(const ButcherTableau& tableau, const SemiDiscreteSystem& system, double t,
                std::span<const double> y, double dt);
Vector erk_tase_step_linear(const StepPlan& plan, const SemiDiscreteSystem& system, double t,
                            std::span<const double> y, double dt);
Vector erk_tase_step_split(const StepPlan& plan, const SemiDiscreteSystem& system, double t,
                           std::span<const double> y, double dt);
Vector erk_tase_step_nonlinear(const StepPlan& plan, const SemiDiscreteSystem& system, double t,
                               std::span<const double> y, double dt);
Vector sdirk_step(const ButcherTableau& tableau, const SemiDiscreteSystem& system, double t,
                  std::span<const double> y, double dt, const NewtonOptions& newton = {});

/// Forward-difference Jacobian with h_j = sqrt(eps) (1 + |y_j|).
DenseMatrix jacobian_fd(const RhsFn& f, std::span<const double> y, double t);

struct StepDiagnostics {
    double max_norm = 0.0;
    int solver_iterations = 0;
    double wall_seconds = 0.0;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Vector> states;
    std::vector<StepDiagnostics> diagnostics;
    bool diverged = false;
    std::optional<std::size_t> diverged_at_step;
    std::string divergence_reason;
    double setup_seconds = 0.0;

    const Vector& final_state() const { return states.back(); }
    double final_time() const { return times.back(); }
    std::size_t steps_taken() const noexcept { return diagnostics.size(); }
    double mean_step_seconds() const;
};

inline constexpr double kDivergenceThreshold = 1e10;

struct IntegrateOptions {
    /// Keep every state; otherwise only the initial and latest ones.
    bool keep_states = true;
};

/// n_steps equal steps from t0 to t_final; divergence is recorded, not raised.
Trajectory integrate(StepPlan plan, const SemiDiscreteSystem& system, double t0,
                     std::span<const double> y0, double t_final, std::size_t n_steps,
                     const IntegrateOptions& options = {});

}  // namespace tase
