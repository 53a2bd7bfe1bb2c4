#pragma once

// Linear stability analysis of RK schemes paired with TASE preconditioners.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "tase/numkit.hpp"
#include "tase/schemes.hpp"

namespace tase {

/// sigma(z) for one scheme, TASE order p (0 = none) and alpha.
/// Butcher names (ERK*, SDIRK*, CN) and Shu-Osher names (SSP-RK*) are accepted;
/// TASE needs an explicit scheme.
class AmplificationModel {
public:
    AmplificationModel(std::string_view scheme, int tase_order, double alpha);

    const std::string& scheme() const noexcept { return scheme_; }
    int tase_order() const noexcept { return p_; }
    double alpha() const noexcept { return alpha_; }

    /// Throws PoleError when |2^k - alpha z| < 1e-300.
    Complex sigma(Complex z) const;
    double abs_sigma(Complex z) const { return std::abs(sigma(z)); }

    /// True within `tolerance` of some pole 2^k / alpha.
    bool near_pole(Complex z, double tolerance = 1e-8) const;

private:
    std::string scheme_;
    int p_;
    double alpha_;
    std::optional<ButcherTableau> tableau_;
    std::optional<ShuOsherScheme> shu_osher_;
    std::vector<double> beta_;
};

struct StabilityQuery {
    std::string scheme;
    int tase_order = 0;
    double alpha = 1.0;
    Complex z;
};

Complex sigma(const StabilityQuery& query);

struct ScanWindow {
    double re_min = -4.0;
    double re_max = 1.0;
    double im_min = -4.0;
    double im_max = 4.0;
};

/// |sigma| on a uniform grid; row-major with `im` as the slow index.
struct StabilityScan {
    std::string scheme;
    int tase_order = 0;
    double alpha = 0.0;
    ScanWindow window;
    std::size_t n_re = 0;
    std::size_t n_im = 0;
    std::vector<double> values;
    /// 1 where the cell sits on a pole and was not evaluated (value 0).
    std::vector<char> pole_mask;

    double re_at(std::size_t i) const;
    double im_at(std::size_t j) const;
    double at(std::size_t i, std::size_t j) const { return values[j * n_re + i]; }
    bool is_pole(std::size_t i, std::size_t j) const { return pole_mask[j * n_re + i] != 0; }
};

StabilityScan scan_region(const AmplificationModel& model, const ScanWindow& window,
                          std::size_t n_re, std::size_t n_im);

/// Log-radial sweep of the closed left half plane, keeping only summaries.
struct HalfPlaneCertificate {
    double max_abs_sigma = 0.0;
    Complex argmax;
    std::size_t cells = 0;
    /// Cells with |sigma| > 1 + tolerance.
    std::size_t unstable_cells = 0;
};

struct LogRadialGrid {
    double r_min = 1e-6;
    double r_max = 1e8;
    std::size_t n_radii = 2001;
    std::size_t n_angles = 2001;
    double tolerance = 1e-10;
};

HalfPlaneCertificate certify_left_half_plane(const AmplificationModel& model,
                                             const LogRadialGrid& grid = {});

struct ImagAxisScan {
    std::vector<double> y;
    std::vector<double> abs_sigma;
    double max_abs_sigma = 0.0;
    double argmax_y = 0.0;
};

/// y = 0 plus `samples` log-spaced points in [1e-6, y_max].
ImagAxisScan imag_axis_scan(const AmplificationModel& model, double y_max, std::size_t samples,
                            bool keep_samples = true);
double imag_axis_max(const AmplificationModel& model, double y_max, std::size_t samples);

/// -(2^p - 1) / alpha
double asymptotic_limit(int tase_order, double alpha);

/// 0.5 max(b/a) of a Shu-Osher form: the sufficient alpha for TASE1.
double sufficient_alpha(const ShuOsherScheme& scheme);

/// Worker count for data-parallel scans: TASE_KIT_THREADS or the hardware count.
std::size_t worker_count();

}  // namespace tase
