#include "tase/tase.hpp"

#include <cmath>
#include <cstdio>

namespace tase {

namespace {

void require_order(int order) {
    if (order < 1 || order > kMaxTaseOrder) {
        throw DomainError("TASE order must be in 1.." + std::to_string(kMaxTaseOrder) + ", got " +
                          std::to_string(order));
    }
}

double pow2(int k) { return std::ldexp(1.0, k); }

}  // namespace

void validate(const TaseConfig& config) {
    if (config.order < 1 || config.order > kMaxTaseOrder) {
        throw ConfigError("TASE order must be in 1..4, got " + std::to_string(config.order));
    }
    if (!(config.alpha > 0.0) || !std::isfinite(config.alpha)) {
        throw ConfigError("TASE alpha must be positive and finite");
    }
}

std::vector<std::string> alpha_warnings(const TaseConfig& config, const SchemeInfo& scheme) {
    std::vector<std::string> out;
    const double needed = alpha_min(config.order, scheme.C);
    if (config.alpha < needed) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "alpha %.6g is below alpha_min %.6g for %s with TASE%d",
                      config.alpha, needed, scheme.name.c_str(), config.order);
        out.emplace_back(buf);
    }
    return out;
}

std::vector<double> CoefficientRow::as_doubles() const {
    std::vector<double> out;
    out.reserve(values.size());
    for (const auto& r : values) out.push_back(r.value());
    return out;
}

CoefficientRow beta_coefficients(int order) {
    require_order(order);
    switch (order) {
        case 1: return {1, {{1, 1}}};
        case 2: return {2, {{-1, 1}, {4, 1}}};
        case 3: return {3, {{1, 3}, {-4, 1}, {32, 3}}};
        default: return {4, {{-1, 21}, {4, 3}, {-32, 3}, {512, 21}}};
    }
}

CoefficientRow gamma_coefficients(int order) {
    CoefficientRow row = beta_coefficients(order);
    for (std::size_t k = 0; k < row.values.size(); ++k) row.values[k].num <<= k;
    return row;
}

double alpha_min(int order, double intercept) {
    if (order < 1) throw DomainError("alpha_min: order must be positive");
    if (!(intercept > 0.0)) throw DomainError("alpha_min: intercept must be positive");
    return (pow2(order) - 1.0) / intercept;
}

double default_alpha(int order, const SchemeInfo& scheme) {
    return alpha_min(order, scheme.safe_intercept());
}

// ------------------------------------------------------------------ ShiftSet

ShiftSet::ShiftSet(const Matrix& op, TaseConfig config, double dt)
    : config_(config), dt_(dt), n_(op.size()) {
    validate(config_);
    if (!(dt > 0.0) || !std::isfinite(dt)) throw DomainError("ShiftSet: dt must be positive");
    beta_ = beta_coefficients(config_.order).as_doubles();
    gamma_ = gamma_coefficients(config_.order).as_doubles();
    const double scale = config_.alpha * dt_;
    factors_.reserve(static_cast<std::size_t>(config_.order));
    for (int k = 0; k < config_.order; ++k) {
        factors_.push_back(lu_factor(op.shifted(pow2(k), scale)));
    }
}

void ShiftSet::apply_preconditioner(std::span<const double> v, std::span<double> out) const {
    if (v.size() != n_ || out.size() != n_) {
        throw DimensionError("apply_preconditioner: vector length does not match the operator");
    }
    thread_local Vector work;
    work.resize(n_);
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t k = 0; k < factors_.size(); ++k) {
        std::copy(v.begin(), v.end(), work.begin());
        factors_[k].solve_in_place(work);
        for (std::size_t i = 0; i < n_; ++i) out[i] += beta_[k] * work[i];
    }
}

Vector ShiftSet::apply_preconditioner(std::span<const double> v) const {
    Vector out(v.size());
    apply_preconditioner(v, out);
    return out;
}

void ShiftSet::apply_operator(std::span<const double> v, std::span<double> out) const {
    apply_operator_with_source(v, {}, out);
}

Vector ShiftSet::apply_operator(std::span<const double> v) const {
    Vector out(v.size());
    apply_operator(v, out);
    return out;
}

void ShiftSet::apply_operator_with_source(std::span<const double> v, std::span<const double> s,
                                          std::span<double> out) const {
    if (v.size() != n_ || out.size() != n_ || (!s.empty() && s.size() != n_)) {
        throw DimensionError("apply_operator: vector length does not match the operator");
    }
    const double inv = 1.0 / (config_.alpha * dt_);
    const double leading = -(pow2(config_.order) - 1.0) * inv;
    thread_local Vector work;
    work.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = leading * v[i];
    for (std::size_t k = 0; k < factors_.size(); ++k) {
        const double g = gamma_[k] * inv;
        if (s.empty()) {
            for (std::size_t i = 0; i < n_; ++i) work[i] = g * v[i];
        } else {
            for (std::size_t i = 0; i < n_; ++i) work[i] = g * v[i] + beta_[k] * s[i];
        }
        factors_[k].solve_in_place(work);
        for (std::size_t i = 0; i < n_; ++i) out[i] += work[i];
    }
}

ShiftSet build_shift_set(const Matrix& op, const TaseConfig& config, double dt) {
    return ShiftSet(op, config, dt);
}

// -------------------------------------------------------------------- scalar

Complex scalar_preconditioner(Complex z, int order, double alpha) {
    require_order(order);
    const auto beta = beta_coefficients(order).as_doubles();
    Complex t = 0.0;
    for (int k = 0; k < order; ++k) {
        const Complex denom = pow2(k) - alpha * z;
        if (std::abs(denom) < 1e-300) throw PoleError("scalar TASE: z sits on the pole 2^k/alpha");
        t += beta[static_cast<std::size_t>(k)] / denom;
    }
    return t;
}

Complex scalar_tase_z(Complex z, int order, double alpha) {
    require_order(order);
    const auto beta = beta_coefficients(order).as_doubles();
    Complex w = 0.0;
    for (int k = 0; k < order; ++k) {
        const double two_k = pow2(k);
        const Complex denom = two_k - alpha * z;
        if (std::abs(denom) < 1e-300) throw PoleError("scalar TASE: z sits on the pole 2^k/alpha");
        w += beta[static_cast<std::size_t>(k)] * (z / denom);
    }
    return w;
}

Complex scalar_tase(Complex lambda, const TaseConfig& config, double dt) {
    validate(config);
    return scalar_tase_z(lambda * dt, config.order, config.alpha);
}

Complex scalar_preconditioner_recursive(Complex z, int order, double alpha) {
    if (order < 1) throw DomainError("recursive TASE: order must be positive");
    if (order == 1) {
        const Complex denom = 1.0 - alpha * z;
        if (std::abs(denom) < 1e-300) throw PoleError("scalar TASE: z sits on the pole 1/alpha");
        return 1.0 / denom;
    }
    const double f = pow2(order - 1);
    return (f * scalar_preconditioner_recursive(z, order - 1, alpha / 2.0) -
            scalar_preconditioner_recursive(z, order - 1, alpha)) /
           (f - 1.0);
}

}  // namespace tase
