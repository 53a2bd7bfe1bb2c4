#include "tase/schemes.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>

namespace tase {

namespace {

constexpr double kSdirk3Gamma = 0.43586652150845899941601945;
constexpr double kSdirk4Gamma = 1.06858;

ButcherTableau make(std::string name, int order, TableauKind kind,
                    std::vector<std::vector<double>> a, std::vector<double> b) {
    ButcherTableau t;
    t.name = std::move(name);
    t.order = order;
    t.kind = kind;
    t.stages = b.size();
    t.b = std::move(b);
    t.a.assign(t.stages * t.stages, 0.0);
    t.c.assign(t.stages, 0.0);
    for (std::size_t i = 0; i < t.stages; ++i) {
        for (std::size_t j = 0; j < a[i].size(); ++j) t.a[i * t.stages + j] = a[i][j];
    }
    // Row sums, accumulated left to right.
    for (std::size_t i = 0; i < t.stages; ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < t.stages; ++j) s += t.a_at(i, j);
        t.c[i] = s;
    }
    return t;
}

ButcherTableau build_tableau(const std::string& name) {
    using K = TableauKind;
    if (name == "ERK1") return make(name, 1, K::explicit_rk, {{0.0}}, {1.0});
    if (name == "ERK2") {
        return make(name, 2, K::explicit_rk, {{0.0, 0.0}, {0.5, 0.0}}, {0.0, 1.0});
    }
    if (name == "ERK3") {
        // Ralston's third-order method.
        return make(name, 3, K::explicit_rk, {{0, 0, 0}, {0.5, 0, 0}, {0, 0.75, 0}},
                    {2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0});
    }
    if (name == "ERK4") {
        return make(name, 4, K::explicit_rk,
                    {{0, 0, 0, 0}, {0.5, 0, 0, 0}, {0, 0.5, 0, 0}, {0, 0, 1.0, 0}},
                    {1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0});
    }
    if (name == "SDIRK1") return make(name, 1, K::diagonally_implicit, {{1.0}}, {1.0});
    if (name == "CN") {
        return make(name, 2, K::diagonally_implicit, {{0.0, 0.0}, {0.5, 0.5}}, {0.5, 0.5});
    }
    if (name == "SDIRK2") {
        const double g = 1.0 - 1.0 / std::sqrt(2.0);
        return make(name, 2, K::diagonally_implicit, {{g, 0.0}, {1.0 - 2.0 * g, g}},
                    {0.5, 0.5});
    }
    if (name == "SDIRK3") {
        const double g = kSdirk3Gamma;
        const double b1 = -1.5 * g * g + 4.0 * g - 0.25;
        const double b2 = 1.5 * g * g - 5.0 * g + 1.25;
        return make(name, 3, K::diagonally_implicit,
                    {{g, 0, 0}, {(1.0 - g) / 2.0, g, 0}, {b1, b2, g}}, {b1, b2, g});
    }
    if (name == "SDIRK4") {
        // Norsett's three-stage, fourth-order SDIRK.
        const double g = kSdirk4Gamma;
        const double q = (1.0 - 2.0 * g) * (1.0 - 2.0 * g);
        const double outer = 1.0 / (6.0 * q);
        const double middle = (3.0 * q - 1.0) / (3.0 * q);
        return make(name, 4, K::diagonally_implicit,
                    {{g, 0, 0}, {0.5 - g, g, 0}, {2.0 * g, 1.0 - 4.0 * g, g}},
                    {outer, middle, outer});
    }
    throw UnknownNameError("unknown Butcher tableau '" + name + "'");
}

ShuOsherScheme build_shu_osher(const std::string& name) {
    // Linear SSP schemes: s - 1 forward-Euler substeps, then a convex
    // combination of all previous stages with one more Euler substep.
    static const std::map<std::string, std::vector<double>> final_rows = {
        {"SSP-RK1", {1.0}},
        {"SSP-RK2", {0.5, 0.5}},
        {"SSP-RK3", {1.0 / 3.0, 0.5, 1.0 / 6.0}},
        {"SSP-RK4", {3.0 / 8.0, 1.0 / 3.0, 1.0 / 4.0, 1.0 / 24.0}},
    };
    const auto it = final_rows.find(name);
    if (it == final_rows.end()) throw UnknownNameError("unknown Shu-Osher scheme '" + name + "'");
    const auto& last = it->second;
    ShuOsherScheme s;
    s.name = name;
    s.stages = last.size();
    for (std::size_t i = 1; i < s.stages; ++i) {
        std::vector<double> a(i, 0.0);
        std::vector<double> b(i, 0.0);
        a[i - 1] = 1.0;
        b[i - 1] = 1.0;
        s.alpha.push_back(std::move(a));
        s.beta.push_back(std::move(b));
    }
    std::vector<double> b(s.stages, 0.0);
    b.back() = last.back();
    // 1/3 and 1/24 are not representable; nudge the leading weight by ulps so
    // the stored row sums to one exactly when accumulated left to right.
    std::vector<double> row = last;
    const auto row_sum = [&] {
        double sum = 0.0;
        for (double v : row) sum += v;
        return sum;
    };
    for (int tries = 0; tries < 8 && row_sum() != 1.0; ++tries) {
        row.front() = std::nextafter(row.front(), row_sum() < 1.0 ? 2.0 : 0.0);
    }
    s.alpha.push_back(std::move(row));
    s.beta.push_back(std::move(b));
    return s;
}

struct PublishedIntercept {
    int order;
    double C;
};

const std::map<std::string, PublishedIntercept>& published_intercepts() {
    static const std::map<std::string, PublishedIntercept> table = {
        {"ERK1", {1, 2.00}},    {"ERK2", {2, 2.00}},    {"ERK3", {3, 2.50}},
        {"ERK4", {4, 2.79}},    {"SSP-RK1", {1, 2.00}}, {"SSP-RK2", {2, 2.00}},
        {"SSP-RK3", {3, 2.50}}, {"SSP-RK4", {4, 2.79}},
    };
    return table;
}

}  // namespace

std::string canonical_scheme_name(std::string_view name) {
    std::string key;
    key.reserve(name.size());
    for (char ch : name) {
        if (ch == '_' || ch == ' ') {
            key.push_back('-');
        } else {
            key.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(ch))));
        }
    }
    static const std::map<std::string, std::string> aliases = {
        {"RK1", "ERK1"},
        {"EULER", "ERK1"},
        {"FORWARD-EULER", "ERK1"},
        {"EXPLICIT-EULER", "ERK1"},
        {"RK2", "ERK2"},
        {"MIDPOINT", "ERK2"},
        {"RK3", "ERK3"},
        {"RALSTON3", "ERK3"},
        {"RK4", "ERK4"},
        {"IMPLICIT-EULER", "SDIRK1"},
        {"BACKWARD-EULER", "SDIRK1"},
        {"CRANK-NICOLSON", "CN"},
        {"TRAPEZOIDAL", "CN"},
        {"SSPRK1", "SSP-RK1"},
        {"SSPRK2", "SSP-RK2"},
        {"SSPRK3", "SSP-RK3"},
        {"SSPRK4", "SSP-RK4"},
    };
    if (const auto it = aliases.find(key); it != aliases.end()) return it->second;
    return key;
}

ButcherTableau get_tableau(std::string_view name) {
    return build_tableau(canonical_scheme_name(name));
}

std::vector<std::string> tableau_names() {
    return {"ERK1", "ERK2", "ERK3", "ERK4", "SDIRK1", "CN", "SDIRK2", "SDIRK3", "SDIRK4"};
}

ShuOsherScheme get_shu_osher(std::string_view name) {
    return build_shu_osher(canonical_scheme_name(name));
}

std::vector<std::string> shu_osher_names() {
    return {"SSP-RK1", "SSP-RK2", "SSP-RK3", "SSP-RK4"};
}

ButcherTableau explicit_tableau_of_order(int order) {
    if (order < 1 || order > 4) throw DomainError("explicit tableau order must be 1..4");
    return get_tableau("ERK" + std::to_string(order));
}

Complex amplification(const ButcherTableau& tableau, Complex w) {
    const std::size_t s = tableau.stages;
    std::array<Complex, 8> small{};
    std::vector<Complex> large;
    Complex* k = small.data();
    if (s > small.size()) {
        large.resize(s);
        k = large.data();
    }
    Complex sigma = 1.0;
    for (std::size_t i = 0; i < s; ++i) {
        Complex stage = 1.0;
        for (std::size_t j = 0; j < i; ++j) stage += tableau.a_at(i, j) * k[j];
        const Complex denom = 1.0 - tableau.a_at(i, i) * w;
        if (denom == Complex{}) throw PoleError("amplification: implicit stage pole");
        k[i] = w * stage / denom;
        sigma += tableau.b[i] * k[i];
    }
    return sigma;
}

Complex amplification(const ShuOsherScheme& scheme, Complex w) {
    std::vector<Complex> y(scheme.stages + 1);
    y[0] = 1.0;
    for (std::size_t i = 1; i <= scheme.stages; ++i) {
        Complex acc = 0.0;
        for (std::size_t k = 0; k < i; ++k) {
            acc += (scheme.alpha[i - 1][k] + scheme.beta[i - 1][k] * w) * y[k];
        }
        y[i] = acc;
    }
    return y[scheme.stages];
}

double max_coefficient_ratio(const ShuOsherScheme& scheme) {
    double ratio = 0.0;
    for (std::size_t i = 0; i < scheme.alpha.size(); ++i) {
        for (std::size_t k = 0; k < scheme.alpha[i].size(); ++k) {
            const double a = scheme.alpha[i][k];
            const double b = scheme.beta[i][k];
            if (b == 0.0) continue;
            if (a == 0.0) {
                throw DomainError("Shu-Osher form '" + scheme.name + "' has b > 0 on a zero a at (" +
                                  std::to_string(i + 1) + ", " + std::to_string(k) + ")");
            }
            ratio = std::max(ratio, b / a);
        }
    }
    return ratio;
}

double compute_intercept(const ButcherTableau& tableau) {
    if (!tableau.is_explicit()) {
        throw DomainError("compute_intercept: '" + tableau.name + "' is not explicit");
    }
    const auto modulus = [&](double x) { return std::abs(amplification(tableau, Complex(-x, 0.0))); };
    constexpr double kProbe = 1e-6;
    if (modulus(kProbe) > 1.0) {
        throw DomainError("compute_intercept: '" + tableau.name +
                          "' has an empty stability interval on the negative real axis");
    }
    double lo = kProbe;
    double hi = lo;
    constexpr double kStep = 1e-2;
    constexpr double kLimit = 1e4;
    while (true) {
        hi = lo + (lo < 100.0 ? kStep : lo);
        if (hi > kLimit) {
            throw DomainError("compute_intercept: no crossing below " + std::to_string(kLimit));
        }
        if (modulus(hi) > 1.0) break;
        lo = hi;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (modulus(mid) > 1.0 ? hi : lo) = mid;
    }
    return lo;
}

double stability_intercept(std::string_view name) {
    const std::string key = canonical_scheme_name(name);
    const auto& table = published_intercepts();
    if (const auto it = table.find(key); it != table.end()) return it->second.C;
    const ButcherTableau t = get_tableau(key);
    if (!t.is_explicit()) {
        throw DomainError("stability_intercept: '" + key + "' is not an explicit scheme");
    }
    return compute_intercept(t);
}

SchemeInfo scheme_info(std::string_view name) {
    const std::string key = canonical_scheme_name(name);
    const auto& table = published_intercepts();
    const auto it = table.find(key);
    if (it == table.end()) {
        // Validate the name first so unknown schemes report as such.
        const ButcherTableau t = get_tableau(key);
        if (!t.is_explicit()) {
            throw DomainError("scheme_info: '" + key + "' is not an explicit scheme");
        }
        const double c = compute_intercept(t);
        return SchemeInfo{key, t.order, t.stages, c, c, std::nullopt};
    }
    SchemeInfo info;
    info.name = key;
    info.order = it->second.order;
    info.stages = static_cast<std::size_t>(it->second.order);
    info.C = it->second.C;
    if (key.rfind("SSP-", 0) == 0) {
        const ShuOsherScheme so = get_shu_osher(key);
        info.max_ratio = max_coefficient_ratio(so);
    }
    // Every registered s-stage order-s explicit scheme shares ERKs's polynomial.
    info.exact_intercept = compute_intercept(explicit_tableau_of_order(info.order));
    return info;
}

}  // namespace tase
