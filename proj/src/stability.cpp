#include "tase/stability.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <thread>

#include "tase/tase.hpp"

namespace tase {

namespace {

/// Runs body(begin, end) over [0, count) split into contiguous chunks.
template <class Body>
void parallel_chunks(std::size_t count, Body&& body) {
    const std::size_t workers = std::min(worker_count(), std::max<std::size_t>(count, 1));
    if (workers <= 1) {
        body(std::size_t{0}, count);
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(workers);
    const std::size_t chunk = (count + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        threads.emplace_back([&body, begin, end] { body(begin, end); });
    }
    for (auto& t : threads) t.join();
}

double geometric(double lo, double hi, std::size_t i, std::size_t n) {
    if (n <= 1) return lo;
    const double f = static_cast<double>(i) / static_cast<double>(n - 1);
    return lo * std::pow(hi / lo, f);
}

}  // namespace

std::size_t worker_count() {
    if (const char* env = std::getenv("TASE_KIT_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && v >= 1) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

// ------------------------------------------------------- AmplificationModel

AmplificationModel::AmplificationModel(std::string_view scheme, int tase_order, double alpha)
    : scheme_(canonical_scheme_name(scheme)), p_(tase_order), alpha_(alpha) {
    if (scheme_.rfind("SSP-", 0) == 0) {
        shu_osher_ = get_shu_osher(scheme_);
    } else {
        tableau_ = get_tableau(scheme_);
    }
    if (p_ < 0 || p_ > kMaxTaseOrder) throw DomainError("TASE order must be in 0..4");
    if (p_ > 0) {
        if (!(alpha_ > 0.0)) throw DomainError("alpha must be positive");
        if (tableau_ && !tableau_->is_explicit()) {
            throw DomainError("TASE needs an explicit scheme, got " + scheme_);
        }
        beta_ = beta_coefficients(p_).as_doubles();
    }
}

Complex AmplificationModel::sigma(Complex z) const {
    const Complex w = p_ == 0 ? z : scalar_tase_z(z, p_, alpha_);
    return tableau_ ? amplification(*tableau_, w) : amplification(*shu_osher_, w);
}

bool AmplificationModel::near_pole(Complex z, double tolerance) const {
    if (p_ == 0) return false;
    for (int k = 0; k < p_; ++k) {
        if (std::abs(z - std::ldexp(1.0, k) / alpha_) < tolerance) return true;
    }
    return false;
}

Complex sigma(const StabilityQuery& query) {
    return AmplificationModel(query.scheme, query.tase_order, query.alpha).sigma(query.z);
}

// --------------------------------------------------------------- scan_region

double StabilityScan::re_at(std::size_t i) const {
    if (n_re <= 1) return window.re_min;
    return window.re_min + (window.re_max - window.re_min) * static_cast<double>(i) /
                               static_cast<double>(n_re - 1);
}

double StabilityScan::im_at(std::size_t j) const {
    if (n_im <= 1) return window.im_min;
    return window.im_min + (window.im_max - window.im_min) * static_cast<double>(j) /
                               static_cast<double>(n_im - 1);
}

StabilityScan scan_region(const AmplificationModel& model, const ScanWindow& window,
                          std::size_t n_re, std::size_t n_im) {
    if (n_re == 0 || n_im == 0) throw DomainError("scan_region: resolution must be positive");
    if (!(window.re_max >= window.re_min) || !(window.im_max >= window.im_min)) {
        throw DomainError("scan_region: empty window");
    }
    StabilityScan scan;
    scan.scheme = model.scheme();
    scan.tase_order = model.tase_order();
    scan.alpha = model.alpha();
    scan.window = window;
    scan.n_re = n_re;
    scan.n_im = n_im;
    scan.values.assign(n_re * n_im, 0.0);
    scan.pole_mask.assign(n_re * n_im, 0);
    parallel_chunks(n_im, [&](std::size_t j0, std::size_t j1) {
        for (std::size_t j = j0; j < j1; ++j) {
            const double im = scan.im_at(j);
            for (std::size_t i = 0; i < n_re; ++i) {
                const Complex z(scan.re_at(i), im);
                const std::size_t idx = j * n_re + i;
                if (model.near_pole(z)) {
                    scan.pole_mask[idx] = 1;
                    continue;
                }
                const double v = model.abs_sigma(z);
                if (std::isfinite(v)) {
                    scan.values[idx] = v;
                } else {
                    scan.pole_mask[idx] = 1;
                }
            }
        }
    });
    return scan;
}

// ----------------------------------------------------- left-half-plane sweep

HalfPlaneCertificate certify_left_half_plane(const AmplificationModel& model,
                                             const LogRadialGrid& grid) {
    if (grid.n_radii == 0 || grid.n_angles == 0) {
        throw DomainError("certify_left_half_plane: resolution must be positive");
    }
    if (!(grid.r_min > 0.0) || !(grid.r_max > grid.r_min)) {
        throw DomainError("certify_left_half_plane: need 0 < r_min < r_max");
    }
    struct Partial {
        double max_abs = 0.0;
        Complex argmax;
        std::size_t unstable = 0;
    };
    const std::size_t workers = std::max<std::size_t>(1, worker_count());
    std::vector<Partial> partials(std::min(workers, grid.n_angles));
    const std::size_t chunk = (grid.n_angles + partials.size() - 1) / partials.size();
    const double limit = 1.0 + grid.tolerance;

    const auto sweep = [&](std::size_t w) {
        Partial& part = partials[w];
        const std::size_t a0 = w * chunk;
        const std::size_t a1 = std::min(grid.n_angles, a0 + chunk);
        for (std::size_t a = a0; a < a1; ++a) {
            // theta runs over [pi/2, 3pi/2]; the endpoints are the imaginary axis.
            const double theta =
                grid.n_angles == 1
                    ? std::numbers::pi
                    : std::numbers::pi / 2.0 +
                          std::numbers::pi * static_cast<double>(a) /
                              static_cast<double>(grid.n_angles - 1);
            const double c = std::min(0.0, std::cos(theta));
            const double s = std::sin(theta);
            for (std::size_t r = 0; r < grid.n_radii; ++r) {
                const double radius = geometric(grid.r_min, grid.r_max, r, grid.n_radii);
                const Complex z(radius * c, radius * s);
                const double v = model.abs_sigma(z);
                if (!(v <= part.max_abs)) {
                    part.max_abs = v;
                    part.argmax = z;
                }
                if (!(v <= limit)) ++part.unstable;
            }
        }
    };
    if (partials.size() == 1) {
        sweep(0);
    } else {
        std::vector<std::thread> threads;
        for (std::size_t w = 0; w < partials.size(); ++w) threads.emplace_back(sweep, w);
        for (auto& t : threads) t.join();
    }

    HalfPlaneCertificate cert;
    cert.cells = grid.n_radii * grid.n_angles + 1;
    cert.max_abs_sigma = model.abs_sigma(Complex(0.0, 0.0));
    for (const auto& part : partials) {
        if (!(part.max_abs <= cert.max_abs_sigma)) {
            cert.max_abs_sigma = part.max_abs;
            cert.argmax = part.argmax;
        }
        cert.unstable_cells += part.unstable;
    }
    return cert;
}

// --------------------------------------------------------- imaginary axis

ImagAxisScan imag_axis_scan(const AmplificationModel& model, double y_max, std::size_t samples,
                            bool keep_samples) {
    if (samples < 2) throw DomainError("imag_axis_scan: need at least 2 samples");
    constexpr double y_min = 1e-6;
    if (!(y_max > y_min)) throw DomainError("imag_axis_scan: y_max must exceed 1e-6");
    ImagAxisScan scan;
    std::vector<double> values(samples + 1);
    values[0] = model.abs_sigma(Complex(0.0, 0.0));
    parallel_chunks(samples, [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) {
            const double y = geometric(y_min, y_max, i, samples);
            values[i + 1] = model.abs_sigma(Complex(0.0, y));
        }
    });
    scan.max_abs_sigma = values[0];
    scan.argmax_y = 0.0;
    for (std::size_t i = 1; i <= samples; ++i) {
        if (!(values[i] <= scan.max_abs_sigma)) {
            scan.max_abs_sigma = values[i];
            scan.argmax_y = geometric(y_min, y_max, i - 1, samples);
        }
    }
    if (keep_samples) {
        scan.y.resize(samples + 1);
        scan.y[0] = 0.0;
        for (std::size_t i = 0; i < samples; ++i) scan.y[i + 1] = geometric(y_min, y_max, i, samples);
        scan.abs_sigma = std::move(values);
    }
    return scan;
}

double imag_axis_max(const AmplificationModel& model, double y_max, std::size_t samples) {
    return imag_axis_scan(model, y_max, samples, false).max_abs_sigma;
}

double asymptotic_limit(int tase_order, double alpha) {
    if (tase_order < 1) throw DomainError("asymptotic_limit: TASE order must be positive");
    if (!(alpha > 0.0)) throw DomainError("asymptotic_limit: alpha must be positive");
    return -(std::ldexp(1.0, tase_order) - 1.0) / alpha;
}

double sufficient_alpha(const ShuOsherScheme& scheme) {
    return 0.5 * max_coefficient_ratio(scheme);
}

}  // namespace tase
