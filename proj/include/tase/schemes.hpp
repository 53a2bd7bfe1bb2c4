#pragma once

// Registry of Runge-Kutta schemes: Butcher tableaux, Shu-Osher forms and
// negative-real-axis stability intercepts.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tase/numkit.hpp"

namespace tase {

enum class TableauKind { explicit_rk, diagonally_implicit };

/// Coefficients (A, b, c) of an s-stage Runge-Kutta scheme; A is row-major s x s.
struct ButcherTableau {
    std::string name;
    int order = 0;
    std::size_t stages = 0;
    std::vector<double> a;
    std::vector<double> b;
    std::vector<double> c;
    TableauKind kind = TableauKind::explicit_rk;

    double a_at(std::size_t i, std::size_t j) const { return a[i * stages + j]; }
    bool is_explicit() const noexcept { return kind == TableauKind::explicit_rk; }
};

/// Shu-Osher form: y(i) = sum_k a[i][k] y(k) + dt b[i][k] f(y(k)), i = 1..s.
/// Row i-1 of `alpha`/`beta` holds the i coefficients k = 0..i-1.
struct ShuOsherScheme {
    std::string name;
    std::size_t stages = 0;
    std::vector<std::vector<double>> alpha;
    std::vector<std::vector<double>> beta;
};

struct SchemeInfo {
    std::string name;
    int order = 0;
    std::size_t stages = 0;
    /// Published intercept used for the alpha_min table (2.00, 2.00, 2.50, 2.79).
    double C = 0.0;
    /// Intercept of the stability polynomial found by bisection.
    double exact_intercept = 0.0;
    /// max b/a of the registered Shu-Osher form, when there is one.
    std::optional<double> max_ratio;

    /// Largest intercept that is still inside the true stability interval. The published value
    /// wins unless the bisected one is smaller beyond bisection round-off.
    double safe_intercept() const noexcept {
        return exact_intercept < C * (1.0 - 1e-9) ? exact_intercept : C;
    }
};

/// Canonical uppercase name; resolves aliases such as RK2, MIDPOINT, CRANK-NICOLSON.
std::string canonical_scheme_name(std::string_view name);

/// ERK1..ERK4, SDIRK1, CN, SDIRK2, SDIRK3, SDIRK4 (and their aliases).
ButcherTableau get_tableau(std::string_view name);
std::vector<std::string> tableau_names();

/// SSP-RK1..SSP-RK4 linear strong-stability-preserving forms.
ShuOsherScheme get_shu_osher(std::string_view name);
std::vector<std::string> shu_osher_names();

/// Published intercept for registered explicit schemes; other explicit
/// tableaux fall back to `compute_intercept`.
double stability_intercept(std::string_view name);

/// Bisection on |R(-x)| = 1 for the explicit stability polynomial R.
double compute_intercept(const ButcherTableau& tableau);

/// Explicit schemes only (ERK* and SSP-RK*).
SchemeInfo scheme_info(std::string_view name);

/// One-step amplification on dy/dt = lambda y with w = lambda dt, by stage recursion.
Complex amplification(const ButcherTableau& tableau, Complex w);
Complex amplification(const ShuOsherScheme& scheme, Complex w);

/// max over (i, k) of b/a; raises if some b > 0 sits on a zero a.
double max_coefficient_ratio(const ShuOsherScheme& scheme);

/// Explicit tableau of the classical s-stage order-s family (ERK1..ERK4).
ButcherTableau explicit_tableau_of_order(int order);

}  // namespace tase
