#pragma once

// Benchmark problems: semi-discrete operators, meshes, exact or reference
// solutions and error norms.

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tase/integrators.hpp"
#include "tase/numkit.hpp"

namespace tase {

enum class MeshKind { periodic_nodes, interior_nodes, bounded_cells, stretched_cells };

struct Mesh1D {
    MeshKind kind = MeshKind::periodic_nodes;
    double x_min = 0.0;
    double x_max = 0.0;
    /// Node positions or cell centers.
    std::vector<double> points;
    /// Per-point spacing (uniform meshes repeat one value).
    std::vector<double> widths;
    /// Cell edges for finite-volume meshes.
    std::vector<double> edges;

    std::size_t size() const noexcept { return points.size(); }
    double min_width() const;
};

Mesh1D uniform_periodic_mesh(std::size_t n, double x_min, double x_max);
Mesh1D uniform_cell_mesh(std::size_t n, double x_min, double x_max);
/// Edges x_j = 1 - (1 - j/N)^g mapped onto [x_min, x_max]; clusters near x_max for g > 1.
Mesh1D stretched_cell_mesh(std::size_t n, double x_min, double x_max, double exponent);

enum class Differencing { fd2, fd4, fourier };

Differencing parse_differencing(std::string_view name);
std::string to_string(Differencing d);

/// Largest |eigenvalue| of the second-derivative stencil times dx^2: 4, 16/3, pi^2.
double differencing_constant(Differencing d);

/// Periodic second-derivative matrix on n uniform nodes over a period `length`.
Matrix periodic_second_derivative(std::size_t n, double length, Differencing d);

/// Trefethen's spectral second-derivative matrix on [0, 2pi) scaled to `length`.
DenseMatrix fourier_second_derivative(std::size_t n, double length);

/// A benchmark case. Cases are immutable once built and may be shared.
struct ProblemCase {
    std::string name;
    SemiDiscreteSystem system;
    Mesh1D mesh;
    Vector initial;
    double t0 = 0.0;
    double t_final = 1.0;
    /// Exact solution of the PDE/ODE sampled on the mesh, when known.
    std::function<Vector(double)> exact;
    /// Per-operator stability factor F: Delta t_stability = C * F (dx^2/D or dx/U).
    std::map<std::string, double> stability_factors;
    /// Cell widths for weighted l2 norms (empty: unweighted).
    std::vector<double> norm_weights;
    /// Named operators for export.
    std::map<std::string, Matrix> operators;
    /// Extra mesh or parameter notes carried into CSV metadata.
    std::map<std::string, std::string> metadata;

    std::string default_scheme = "ERK2";
    int default_tase = 2;
    StepMode default_mode = StepMode::tase_combined;
    TaseForm default_form = TaseForm::preconditioner;
    std::size_t default_steps = 10;
    /// Split groups are present and meaningful for TASE.
    bool split_capable = false;

    /// min over operators of C * factor.
    double stability_dt(double intercept) const;
    double stability_dt(double intercept, const std::string& op) const;

    /// Exact solution when available, otherwise a cached reference run; nullopt if neither.
    std::optional<Vector> reference_final() const;
    /// Plan and step count for the reference run used when no exact solution exists.
    std::function<Vector()> reference;
};

/// Steps needed to reach t_final with dt close to ratio * dt_stability (rounded up).
std::size_t steps_for_ratio(double t_span, double dt_stability, double ratio);

struct DiffusionOptions {
    std::size_t n = 600;
    Differencing differencing = Differencing::fd4;
    double amplitude = 0.0;
    double tau_s = 50.0;
    double t_final = 5.0;
};

ProblemCase diffusion_periodic(const DiffusionOptions& options);
/// Same equation with the reference settings of the steady-state scenario: N=6 Fourier, t=15.
ProblemCase steady_state_case();
/// Quasi-steady scenario: N=6 Fourier, A=0.01, tau_s=50, t_final=100.
ProblemCase quasi_steady_case();

/// Dirichlet problem on [pi/2, 3pi/2] with `n` intervals. The system's split groups
/// hold the wrong variant (TASE on L only, boundary source added unmodified).
ProblemCase diffusion_dirichlet(std::size_t n = 30, double t_final = 5.0);

enum class AdrBoundary { equal, incompatible };

struct AdrOptions {
    std::size_t n = 50;
    double velocity = 1e2;
    double diffusivity = 1e2;
    double rate = 1e4;
    AdrBoundary right = AdrBoundary::equal;
    double stretching = 1.36;
    double t_final = 1e-2;
};

/// Splits: {convection + diffusion + boundary sources} and {reaction}.
ProblemCase two_species_adr(const AdrOptions& options);

struct PowerLawOptions {
    std::size_t n = 200;
    double beta = 4.0;
    double t_final = 1.0;
};

ProblemCase power_law_diffusion(const PowerLawOptions& options);

/// dy/dt = -y^beta, y(0) = 1, t_final = 2e4.
ProblemCase stiff_scalar_ode(double beta = 10.0, double t_final = 2e4);

/// dy/dt = lambda y, y(0) = 1.
ProblemCase linear_scalar_ode(double lambda = -1.0, double t_final = 1.0);

/// Polar diffusion on the unit disc; Nr radial nodes span [0, 1] (Nr - 1 cells).
ProblemCase polar_diffusion(std::size_t nr = 10, std::size_t ntheta = 40);

/// J2 by its ascending series, 0 <= x <= 20.
double bessel_j2(double x);
/// First positive root of J2 (5.1356223...).
double bessel_j2_first_root();

struct ErrorReport {
    double l2_rel = 0.0;
    double linf_rel = 0.0;
    bool diverged = false;
};

ErrorReport error_report(std::span<const double> y, std::span<const double> exact,
                         std::span<const double> weights = {});
ErrorReport diverged_report();

struct OrderFit {
    double order = 0.0;
    std::size_t used = 0;
    std::vector<std::size_t> excluded;
};

/// Least-squares slope of log(error) against log(dt); nonpositive errors are excluded.
OrderFit observed_order(std::span<const double> errors, std::span<const double> dts);

struct CaseParameters {
    std::optional<std::size_t> n;
    std::optional<std::string> differencing;
    std::optional<double> beta;
    std::optional<double> t_final;
    std::optional<std::string> bc_right;
};

/// CLI catalog: diffusion-periodic, steady-state, quasi-steady, diffusion-dirichlet,
/// adr-equal, adr-incompatible, power-law, ode-stiff, ode-linear, polar.
ProblemCase make_case(std::string_view name, const CaseParameters& params = {});
std::vector<std::string> case_names();

}  // namespace tase
