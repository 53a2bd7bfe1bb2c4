#pragma once

// TASE preconditioners T = sum_k beta_k (2^k - alpha dt L)^-1 and the fused
// operators T L, for orders p = 1..4.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tase/numkit.hpp"
#include "tase/schemes.hpp"

namespace tase {

inline constexpr int kMaxTaseOrder = 4;

enum class TaseForm { preconditioner, operator_form };

struct TaseConfig {
    int order = 1;
    double alpha = 1.0;
    TaseForm form = TaseForm::preconditioner;
};

/// Throws ConfigError unless 1 <= order <= 4 and alpha > 0.
void validate(const TaseConfig& config);

/// Warnings for alpha below alpha_min of the paired scheme (empty when fine).
std::vector<std::string> alpha_warnings(const TaseConfig& config, const SchemeInfo& scheme);

struct Rational {
    std::int64_t num = 0;
    std::int64_t den = 1;
    double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
    friend bool operator==(const Rational&, const Rational&) = default;
};

struct CoefficientRow {
    int order = 0;
    std::vector<Rational> values;
    std::vector<double> as_doubles() const;
};

CoefficientRow beta_coefficients(int order);
CoefficientRow gamma_coefficients(int order);

/// (2^p - 1) / C
double alpha_min(int order, double intercept);

/// alpha_min against the scheme's safe intercept; the default alpha of a run.
double default_alpha(int order, const SchemeInfo& scheme);

/// The p factorized shifted systems (2^k I - alpha dt L), k = 0..p-1.
/// Immutable once built; solves may run concurrently.
class ShiftSet {
public:
    ShiftSet(const Matrix& op, TaseConfig config, double dt);

    const TaseConfig& config() const noexcept { return config_; }
    double dt() const noexcept { return dt_; }
    std::size_t size() const noexcept { return n_; }
    const std::vector<Factorization>& factorizations() const noexcept { return factors_; }

    /// out = T v
    void apply_preconditioner(std::span<const double> v, std::span<double> out) const;
    Vector apply_preconditioner(std::span<const double> v) const;

    /// out = T L v, by the gamma form (no product with L).
    void apply_operator(std::span<const double> v, std::span<double> out) const;
    Vector apply_operator(std::span<const double> v) const;

    /// out = T (L v + s) with p solves.
    void apply_operator_with_source(std::span<const double> v, std::span<const double> s,
                                    std::span<double> out) const;

private:
    TaseConfig config_;
    double dt_;
    std::size_t n_;
    std::vector<double> beta_;
    std::vector<double> gamma_;
    std::vector<Factorization> factors_;
};

ShiftSet build_shift_set(const Matrix& op, const TaseConfig& config, double dt);

/// Scalar preconditioner T(z) = sum_k beta_k / (2^k - alpha z), z = lambda dt.
Complex scalar_preconditioner(Complex z, int order, double alpha);

/// z T(z) with z = lambda dt.
Complex scalar_tase(Complex lambda, const TaseConfig& config, double dt);
Complex scalar_tase_z(Complex z, int order, double alpha);

/// T(z) by the Richardson recursion T_p(a) = (2^{p-1} T_{p-1}(a/2) - T_{p-1}(a)) / (2^{p-1} - 1).
Complex scalar_preconditioner_recursive(Complex z, int order, double alpha);

}  // namespace tase
