#include "tase/problems.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>

namespace tase {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFloor = 1e-12;

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Lazily computed, thread-safe cached vector.
std::function<Vector()> cached(std::function<Vector()> compute) {
    struct State {
        std::once_flag once;
        Vector value;
        std::function<Vector()> compute;
    };
    auto state = std::make_shared<State>();
    state->compute = std::move(compute);
    return [state] {
        std::call_once(state->once, [&] { state->value = state->compute(); });
        return state->value;
    };
}

/// Final state of a plain explicit run with dt = ratio * dt_stability.
std::function<Vector()> explicit_reference(const ProblemCase& pc, const std::string& scheme,
                                           double ratio) {
    const double dt_stab = pc.stability_dt(stability_intercept(scheme));
    const std::size_t steps = steps_for_ratio(pc.t_final - pc.t0, dt_stab, ratio);
    auto system = std::make_shared<SemiDiscreteSystem>(pc.system);
    return cached([system, scheme, steps, t0 = pc.t0, t1 = pc.t_final, y0 = pc.initial] {
        StepPlan plan = make_plan(scheme, 0, (t1 - t0) / static_cast<double>(steps));
        IntegrateOptions opts;
        opts.keep_states = false;
        Trajectory traj = integrate(plan, *system, t0, y0, t1, steps, opts);
        if (traj.diverged) throw DivergenceError(0);
        return traj.final_state();
    });
}

SourceFn constant_source(Vector s) {
    return [s = std::move(s)](double, std::span<double> out) {
        std::copy(s.begin(), s.end(), out.begin());
    };
}

}  // namespace

// ---------------------------------------------------------------------- mesh

double Mesh1D::min_width() const {
    if (widths.empty()) throw DomainError("mesh has no widths");
    return *std::min_element(widths.begin(), widths.end());
}

Mesh1D uniform_periodic_mesh(std::size_t n, double x_min, double x_max) {
    Mesh1D m;
    m.kind = MeshKind::periodic_nodes;
    m.x_min = x_min;
    m.x_max = x_max;
    const double dx = (x_max - x_min) / static_cast<double>(n);
    for (std::size_t j = 0; j < n; ++j) m.points.push_back(x_min + dx * static_cast<double>(j));
    m.widths.assign(n, dx);
    return m;
}

Mesh1D uniform_cell_mesh(std::size_t n, double x_min, double x_max) {
    return stretched_cell_mesh(n, x_min, x_max, 1.0);
}

Mesh1D stretched_cell_mesh(std::size_t n, double x_min, double x_max, double exponent) {
    if (n == 0) throw DomainError("mesh needs at least one cell");
    if (!(exponent > 0.0)) throw DomainError("stretching exponent must be positive");
    Mesh1D m;
    m.kind = exponent == 1.0 ? MeshKind::bounded_cells : MeshKind::stretched_cells;
    m.x_min = x_min;
    m.x_max = x_max;
    const double len = x_max - x_min;
    m.edges.resize(n + 1);
    for (std::size_t j = 0; j <= n; ++j) {
        const double f = static_cast<double>(j) / static_cast<double>(n);
        const double u = exponent == 1.0 ? f : 1.0 - std::pow(1.0 - f, exponent);
        m.edges[j] = x_min + len * u;
    }
    m.edges.front() = x_min;
    m.edges.back() = x_max;
    for (std::size_t j = 0; j < n; ++j) {
        m.points.push_back(0.5 * (m.edges[j] + m.edges[j + 1]));
        m.widths.push_back(m.edges[j + 1] - m.edges[j]);
    }
    return m;
}

// ------------------------------------------------------------ differencing

Differencing parse_differencing(std::string_view name) {
    if (name == "fd2") return Differencing::fd2;
    if (name == "fd4") return Differencing::fd4;
    if (name == "fourier") return Differencing::fourier;
    throw ConfigError("unknown differencing '" + std::string(name) + "'");
}

std::string to_string(Differencing d) {
    switch (d) {
        case Differencing::fd2: return "fd2";
        case Differencing::fd4: return "fd4";
        case Differencing::fourier: return "fourier";
    }
    return "?";
}

double differencing_constant(Differencing d) {
    switch (d) {
        case Differencing::fd2: return 4.0;
        case Differencing::fd4: return 16.0 / 3.0;
        case Differencing::fourier: return kPi * kPi;
    }
    return 0.0;
}

DenseMatrix fourier_second_derivative(std::size_t n, double length) {
    if (n < 2 || n % 2 != 0) throw DomainError("Fourier differentiation needs an even N");
    const double h = 2.0 * kPi / static_cast<double>(n);
    const double scale = std::pow(2.0 * kPi / length, 2);
    const double nn = static_cast<double>(n);
    DenseMatrix d(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
            double v;
            if (j == k) {
                v = -nn * nn / 12.0 - 1.0 / 6.0;
            } else {
                const long diff = static_cast<long>(j) - static_cast<long>(k);
                const double sign = (diff % 2 == 0) ? 1.0 : -1.0;
                const double s = std::sin(static_cast<double>(diff) * h / 2.0);
                v = -sign / (2.0 * s * s);
            }
            d(j, k) = scale * v;
        }
    }
    return d;
}

Matrix periodic_second_derivative(std::size_t n, double length, Differencing d) {
    if (d == Differencing::fourier) return Matrix(fourier_second_derivative(n, length));
    if (n < 5) throw DomainError("periodic finite differences need N >= 5");
    const double dx = length / static_cast<double>(n);
    DenseMatrix m(n, n);
    const auto wrap = [n](long j) {
        const long nn = static_cast<long>(n);
        return static_cast<std::size_t>(((j % nn) + nn) % nn);
    };
    for (std::size_t j = 0; j < n; ++j) {
        const long jl = static_cast<long>(j);
        if (d == Differencing::fd2) {
            const double c = 1.0 / (dx * dx);
            m(j, wrap(jl - 1)) += c;
            m(j, j) += -2.0 * c;
            m(j, wrap(jl + 1)) += c;
        } else {
            const double c = 1.0 / (12.0 * dx * dx);
            m(j, wrap(jl - 2)) += -c;
            m(j, wrap(jl - 1)) += 16.0 * c;
            m(j, j) += -30.0 * c;
            m(j, wrap(jl + 1)) += 16.0 * c;
            m(j, wrap(jl + 2)) += -c;
        }
    }
    return Matrix(std::move(m));
}

// --------------------------------------------------------------- ProblemCase

double ProblemCase::stability_dt(double intercept) const {
    if (stability_factors.empty()) throw ConfigError("case '" + name + "' has no stability data");
    double f = std::numeric_limits<double>::infinity();
    for (const auto& [key, value] : stability_factors) f = std::min(f, value);
    return intercept * f;
}

double ProblemCase::stability_dt(double intercept, const std::string& op) const {
    const auto it = stability_factors.find(op);
    if (it == stability_factors.end()) {
        throw ConfigError("case '" + name + "' has no operator '" + op + "'");
    }
    return intercept * it->second;
}

std::optional<Vector> ProblemCase::reference_final() const {
    if (exact) return exact(t_final);
    if (reference) return reference();
    return std::nullopt;
}

std::size_t steps_for_ratio(double t_span, double dt_stability, double ratio) {
    if (!(ratio > 0.0) || !(dt_stability > 0.0) || !(t_span > 0.0)) {
        throw ConfigError("step ratio, stability step and time span must be positive");
    }
    const double steps = std::ceil(t_span / (ratio * dt_stability) - 1e-9);
    return static_cast<std::size_t>(std::max(1.0, steps));
}

// ------------------------------------------------------- periodic diffusion

ProblemCase diffusion_periodic(const DiffusionOptions& o) {
    if (o.n < 4) throw DomainError("diffusion_periodic needs N >= 4");
    if (o.differencing == Differencing::fourier && o.n % 2 != 0) {
        throw DomainError("Fourier differencing needs an even N");
    }
    if (o.differencing != Differencing::fourier && o.n < 5) {
        throw DomainError("finite differences need N >= 5");
    }
    ProblemCase pc;
    pc.name = "diffusion-periodic";
    pc.mesh = uniform_periodic_mesh(o.n, 0.0, 2.0 * kPi);
    const Matrix lap = periodic_second_derivative(o.n, 2.0 * kPi, o.differencing);
    pc.system.dimension = o.n;
    pc.system.linear = lap;
    if (o.amplitude != 0.0) {
        pc.system.source = [a = o.amplitude, tau = o.tau_s](double t, std::span<double> out) {
            std::fill(out.begin(), out.end(), a * std::sin(t / tau));
        };
    }
    pc.operators.emplace("L", lap);
    pc.initial.resize(o.n);
    for (std::size_t j = 0; j < o.n; ++j) pc.initial[j] = 1.0 - std::cos(pc.mesh.points[j]);
    pc.t_final = o.t_final;
    pc.exact = [x = pc.mesh.points, a = o.amplitude, tau = o.tau_s](double t) {
        Vector y(x.size());
        const double shift = a * tau * (std::cos(t / tau) - 1.0);
        for (std::size_t j = 0; j < x.size(); ++j) y[j] = 1.0 - std::cos(x[j]) * std::exp(-t) - shift;
        return y;
    };
    const double dx = pc.mesh.widths.front();
    pc.stability_factors["diffusion"] = dx * dx / differencing_constant(o.differencing);
    pc.metadata["n"] = std::to_string(o.n);
    pc.metadata["differencing"] = to_string(o.differencing);
    pc.metadata["amplitude"] = fmt_double(o.amplitude);
    pc.metadata["tau_s"] = fmt_double(o.tau_s);
    pc.default_scheme = "ERK2";
    pc.default_tase = 2;
    pc.default_form = TaseForm::operator_form;
    pc.default_steps = steps_for_ratio(o.t_final, 1.0, 0.25);
    return pc;
}

ProblemCase steady_state_case() {
    DiffusionOptions o;
    o.n = 6;
    o.differencing = Differencing::fourier;
    o.t_final = 15.0;
    ProblemCase pc = diffusion_periodic(o);
    pc.name = "steady-state";
    pc.default_scheme = "ERK4";
    pc.default_tase = 4;
    pc.default_steps = 60;
    return pc;
}

ProblemCase quasi_steady_case() {
    DiffusionOptions o;
    o.n = 6;
    o.differencing = Differencing::fourier;
    o.amplitude = 0.01;
    o.tau_s = 50.0;
    o.t_final = 100.0;
    ProblemCase pc = diffusion_periodic(o);
    pc.name = "quasi-steady";
    pc.default_scheme = "ERK2";
    pc.default_tase = 2;
    pc.default_steps = steps_for_ratio(o.t_final, pc.stability_dt(2.0), 7.5);
    return pc;
}

// ------------------------------------------------------ Dirichlet diffusion

ProblemCase diffusion_dirichlet(std::size_t n, double t_final) {
    if (n < 6) throw DomainError("diffusion_dirichlet needs N >= 6 intervals");
    const double a = kPi / 2.0;
    const double b = 3.0 * kPi / 2.0;
    const double dx = (b - a) / static_cast<double>(n);
    const double boundary = 1.0;
    const std::size_t m = n - 1;

    ProblemCase pc;
    pc.name = "diffusion-dirichlet";
    pc.mesh.kind = MeshKind::interior_nodes;
    pc.mesh.x_min = a;
    pc.mesh.x_max = b;
    for (std::size_t j = 1; j < n; ++j) pc.mesh.points.push_back(a + dx * static_cast<double>(j));
    pc.mesh.widths.assign(m, dx);

    BandedMatrix lap(m, 2, 2);
    Vector s(m, 0.0);
    // Node j (1-based) maps to row j - 1; nodes 0 and n carry boundary data.
    const auto put = [&](std::size_t row, long node, double coeff) {
        if (node <= 0 || node >= static_cast<long>(n)) {
            s[row] += coeff * boundary;
        } else {
            lap.add(row, static_cast<std::size_t>(node - 1), coeff);
        }
    };
    for (std::size_t j = 1; j < n; ++j) {
        const std::size_t row = j - 1;
        const long jl = static_cast<long>(j);
        if (j == 1 || j == n - 1) {
            const double c = 1.0 / (dx * dx);
            put(row, jl - 1, c);
            put(row, jl, -2.0 * c);
            put(row, jl + 1, c);
        } else {
            const double c = 1.0 / (12.0 * dx * dx);
            put(row, jl - 2, -c);
            put(row, jl - 1, 16.0 * c);
            put(row, jl, -30.0 * c);
            put(row, jl + 1, 16.0 * c);
            put(row, jl + 2, -c);
        }
    }
    const Matrix op(lap);
    pc.system.dimension = m;
    pc.system.linear = op;
    pc.system.source = constant_source(s);
    pc.system.splits.push_back(SplitGroup{"diffusion", op, {}, true, std::nullopt});
    pc.system.splits.push_back(
        SplitGroup{"boundary-source", std::nullopt, constant_source(s), false, std::nullopt});
    pc.operators.emplace("L", op);

    pc.initial.resize(m);
    for (std::size_t j = 0; j < m; ++j) pc.initial[j] = 1.0 - std::cos(pc.mesh.points[j]);
    pc.t_final = t_final;
    pc.exact = [x = pc.mesh.points](double t) {
        Vector y(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) y[j] = 1.0 - std::cos(x[j]) * std::exp(-t);
        return y;
    };
    pc.stability_factors["diffusion"] = dx * dx / differencing_constant(Differencing::fd4);
    pc.metadata["n"] = std::to_string(n);
    pc.metadata["boundary_closure"] = "centered 3-point next to each boundary";
    pc.default_scheme = "ERK2";
    pc.default_tase = 2;
    pc.default_steps = steps_for_ratio(t_final, 1.0, 0.25);
    pc.split_capable = true;
    return pc;
}

// ----------------------------------------------------------- two-species ADR

ProblemCase two_species_adr(const AdrOptions& o) {
    if (o.n < 10) throw DomainError("two_species_adr needs N >= 10");
    if (!(o.velocity >= 0.0) || !(o.diffusivity > 0.0) || !(o.rate >= 0.0)) {
        throw DomainError("two_species_adr: U, K must be nonnegative and D positive");
    }
    const std::size_t n = o.n;
    const Mesh1D mesh = stretched_cell_mesh(n, 0.0, 1.0, o.stretching);
    const double left[2] = {0.0, 0.0};
    const double right[2] = {1.0, o.right == AdrBoundary::equal ? 1.0 : 0.1};
    const auto& c = mesh.points;
    const auto& w = mesh.widths;
    const auto& e = mesh.edges;

    BandedMatrix transport(2 * n, n, n);
    BandedMatrix reaction(2 * n, n, n);
    Vector s(2 * n, 0.0);
    for (std::size_t sp = 0; sp < 2; ++sp) {
        const std::size_t off = sp * n;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            // Face between cells i and i + 1.
            const double g = o.diffusivity / (c[i + 1] - c[i]);
            const double theta = (e[i + 1] - c[i]) / (c[i + 1] - c[i]);
            const double wl = o.velocity * (1.0 - theta);
            const double wr = o.velocity * theta;
            transport.add(off + i, off + i, (-g - wl) / w[i]);
            transport.add(off + i, off + i + 1, (g - wr) / w[i]);
            transport.add(off + i + 1, off + i, (g + wl) / w[i + 1]);
            transport.add(off + i + 1, off + i + 1, (-g + wr) / w[i + 1]);
        }
        const double gl = o.diffusivity / (c[0] - e[0]);
        transport.add(off, off, -gl / w[0]);
        s[off] += (gl + o.velocity) * left[sp] / w[0];
        const std::size_t last = n - 1;
        const double gr = o.diffusivity / (e[n] - c[last]);
        transport.add(off + last, off + last, -gr / w[last]);
        s[off + last] += (gr - o.velocity) * right[sp] / w[last];
    }
    for (std::size_t i = 0; i < n; ++i) {
        reaction.set(i, i, -o.rate);
        reaction.set(i, n + i, o.rate);
        reaction.set(n + i, i, o.rate);
        reaction.set(n + i, n + i, -o.rate);
    }
    const Matrix lt(transport);
    const Matrix lr(reaction);
    const Matrix total = lt + lr;

    ProblemCase pc;
    pc.name = o.right == AdrBoundary::equal ? "adr-equal" : "adr-incompatible";
    pc.mesh = mesh;
    pc.system.dimension = 2 * n;
    pc.system.linear = total;
    pc.system.source = constant_source(s);
    pc.system.splits.push_back(
        SplitGroup{"convection-diffusion", lt, constant_source(s), true, std::nullopt});
    pc.system.splits.push_back(SplitGroup{"reaction", lr, {}, true, std::nullopt});
    pc.operators.emplace("L_cd", lt);
    pc.operators.emplace("L_r", lr);
    pc.operators.emplace("L", total);
    pc.initial.resize(2 * n);
    const double scale2 = o.right == AdrBoundary::equal ? 1.0 : 0.1;
    for (std::size_t i = 0; i < n; ++i) {
        pc.initial[i] = c[i];
        pc.initial[n + i] = scale2 * c[i] * c[i];
    }
    pc.t_final = o.t_final;
    pc.norm_weights.resize(2 * n);
    for (std::size_t i = 0; i < n; ++i) pc.norm_weights[i] = pc.norm_weights[n + i] = w[i];
    const double wmin = mesh.min_width();
    pc.stability_factors["diffusion"] = wmin * wmin / (4.0 * o.diffusivity);
    if (o.velocity > 0.0) pc.stability_factors["convection"] = wmin / o.velocity;
    if (o.rate > 0.0) pc.stability_factors["reaction"] = 1.0 / (2.0 * o.rate);
    pc.metadata["n"] = std::to_string(n);
    pc.metadata["stretching"] = "x_j = 1 - (1 - j/N)^" + fmt_double(o.stretching);
    pc.metadata["U"] = fmt_double(o.velocity);
    pc.metadata["D"] = fmt_double(o.diffusivity);
    pc.metadata["K"] = fmt_double(o.rate);
    pc.metadata["reference"] = "ERK3 at dt/dt_stability = 0.1";
    pc.default_scheme = "ERK3";
    pc.default_tase = 3;
    pc.default_steps = 30;
    pc.default_form = TaseForm::operator_form;
    pc.split_capable = true;
    pc.reference = explicit_reference(pc, "ERK3", 0.1);
    return pc;
}

// --------------------------------------------------------- power-law diffusion

ProblemCase power_law_diffusion(const PowerLawOptions& o) {
    if (o.n < 10) throw DomainError("power_law_diffusion needs N >= 10");
    if (!(o.beta >= 0.0)) throw DomainError("power_law_diffusion needs beta >= 0");
    const std::size_t n = o.n;
    const double beta = o.beta;
    const Mesh1D mesh = uniform_cell_mesh(n, -5.0, 5.0);
    const double dx = mesh.widths.front();

    const auto k = [beta](double y) { return std::pow(std::max(y, kFloor) / 2.0, beta); };
    const auto dk = [beta](double y) {
        if (beta == 0.0) return 0.0;
        return 0.5 * beta * std::pow(std::max(y, kFloor) / 2.0, beta - 1.0);
    };

    ProblemCase pc;
    pc.name = "power-law";
    pc.mesh = mesh;
    pc.initial.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        pc.initial[i] = 1.0 + std::exp(-0.25 * mesh.points[i] * mesh.points[i]);
    }
    if (beta != std::floor(beta)) {
        for (double v : pc.initial) {
            if (!(v > 0.0)) throw DomainError("fractional beta needs a positive initial state");
        }
    }
    pc.system.dimension = n;
    pc.system.nonlinear = [n, dx, k](double, std::span<const double> y, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
        const double inv = 1.0 / (dx * dx);
        double k_prev = k(y[0]);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double k_next = k(y[i + 1]);
            const double flux = 0.5 * (k_prev + k_next) * (y[i + 1] - y[i]) * inv;
            out[i] += flux;
            out[i + 1] -= flux;
            k_prev = k_next;
        }
    };
    pc.system.linearization = [n, dx, k, dk](double, std::span<const double> y) {
        BandedMatrix jac(n, 1, 1);
        const double inv = 1.0 / (dx * dx);
        for (std::size_t i = 0; i + 1 < n; ++i) {
            const double ki = k(y[i]);
            const double kj = k(y[i + 1]);
            const double grad = (y[i + 1] - y[i]) * inv;
            // Face flux F = (k_i + k_j)/2 * grad: product rule in y_i and y_j.
            const double d_i = 0.5 * dk(y[i]) * grad - 0.5 * (ki + kj) * inv;
            const double d_j = 0.5 * dk(y[i + 1]) * grad + 0.5 * (ki + kj) * inv;
            jac.add(i, i, d_i);
            jac.add(i, i + 1, d_j);
            jac.add(i + 1, i, -d_i);
            jac.add(i + 1, i + 1, -d_j);
        }
        return Matrix(std::move(jac));
    };
    pc.t_final = o.t_final;
    pc.norm_weights = mesh.widths;
    double k_max = 0.0;
    for (double v : pc.initial) k_max = std::max(k_max, k(v));
    pc.stability_factors["diffusion"] = dx * dx / (differencing_constant(Differencing::fd2) * k_max);
    pc.metadata["n"] = std::to_string(n);
    pc.metadata["beta"] = fmt_double(beta);
    pc.metadata["reference"] = "ERK4 at dt/dt_stability = 0.25";
    pc.default_scheme = "ERK4";
    pc.default_tase = 4;
    pc.default_mode = StepMode::tase_nonlinear;
    pc.default_steps = 60;
    pc.reference = explicit_reference(pc, "ERK4", 0.25);
    return pc;
}

// ---------------------------------------------------------------- scalar ODEs

ProblemCase stiff_scalar_ode(double beta, double t_final) {
    if (!(beta > 1.0)) throw DomainError("stiff_scalar_ode needs beta > 1");
    ProblemCase pc;
    pc.name = "ode-stiff";
    pc.mesh.kind = MeshKind::interior_nodes;
    pc.mesh.points = {0.0};
    pc.mesh.widths = {1.0};
    pc.system.dimension = 1;
    pc.system.nonlinear = [beta](double, std::span<const double> y, std::span<double> out) {
        out[0] = -std::pow(y[0], beta);
    };
    pc.system.linearization = [beta](double, std::span<const double> y) {
        return Matrix(DenseMatrix(1, 1, {-beta * std::pow(y[0], beta - 1.0)}));
    };
    pc.initial = {1.0};
    pc.t_final = t_final;
    pc.exact = [beta](double t) {
        return Vector{std::pow(1.0 + (beta - 1.0) * t, 1.0 / (1.0 - beta))};
    };
    pc.stability_factors["reaction"] = 1.0 / beta;
    pc.metadata["beta"] = fmt_double(beta);
    pc.default_scheme = "ERK2";
    pc.default_tase = 2;
    pc.default_mode = StepMode::tase_nonlinear;
    pc.default_steps = 10;
    return pc;
}

ProblemCase linear_scalar_ode(double lambda, double t_final) {
    if (!(lambda < 0.0)) throw DomainError("linear_scalar_ode needs lambda < 0");
    ProblemCase pc;
    pc.name = "ode-linear";
    pc.mesh.kind = MeshKind::interior_nodes;
    pc.mesh.points = {0.0};
    pc.mesh.widths = {1.0};
    pc.system.dimension = 1;
    pc.system.linear = Matrix(DenseMatrix(1, 1, {lambda}));
    pc.initial = {1.0};
    pc.t_final = t_final;
    pc.exact = [lambda](double t) { return Vector{std::exp(lambda * t)}; };
    pc.stability_factors["linear"] = 1.0 / -lambda;
    pc.metadata["lambda"] = fmt_double(lambda);
    pc.default_scheme = "ERK1";
    pc.default_tase = 0;
    pc.default_mode = StepMode::plain;
    pc.default_steps = 10;
    return pc;
}

// -------------------------------------------------------------------- Bessel

double bessel_j2(double x) {
    if (!(x >= 0.0 && x <= 20.0)) throw DomainError("bessel_j2: x must lie in [0, 20]");
    const double h = x / 2.0;
    double term = h * h / 2.0;  // m = 0: (x/2)^2 / (0! 2!)
    double sum = term;
    for (int m = 1; m < 200; ++m) {
        term *= -h * h / (static_cast<double>(m) * static_cast<double>(m + 2));
        sum += term;
        if (std::abs(term) < 1e-16) break;
    }
    return sum;
}

double bessel_j2_first_root() {
    static const double root = [] {
        double lo = 5.0;
        double hi = 5.3;
        double flo = bessel_j2(lo);
        for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
            const double mid = 0.5 * (lo + hi);
            const double fm = bessel_j2(mid);
            if ((fm > 0.0) == (flo > 0.0)) {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    }();
    return root;
}

// -------------------------------------------------------------------- polar

ProblemCase polar_diffusion(std::size_t nr, std::size_t ntheta) {
    if (nr < 4) throw DomainError("polar_diffusion needs Nr >= 4");
    if (ntheta < 8 || ntheta % 2 != 0) throw DomainError("polar_diffusion needs an even Ntheta >= 8");
    const std::size_t nc = nr - 1;
    const double dr = 1.0 / static_cast<double>(nc);
    const double dth = 2.0 * kPi / static_cast<double>(ntheta);
    const std::size_t dim = nc * ntheta;
    const auto idx = [ntheta](std::size_t i, std::size_t j) { return i * ntheta + j; };

    BandedMatrix ltheta(dim, ntheta - 1, ntheta - 1);
    BandedMatrix lr(dim, ntheta, ntheta);
    std::vector<double> rc(nc);
    for (std::size_t i = 0; i < nc; ++i) rc[i] = (static_cast<double>(i) + 0.5) * dr;
    for (std::size_t i = 0; i < nc; ++i) {
        const double r = rc[i];
        const double ct = 1.0 / (r * r * dth * dth);
        const double r_in = static_cast<double>(i) * dr;
        const double r_out = static_cast<double>(i + 1) * dr;
        for (std::size_t j = 0; j < ntheta; ++j) {
            const std::size_t row = idx(i, j);
            ltheta.add(row, idx(i, (j + ntheta - 1) % ntheta), ct);
            ltheta.add(row, row, -2.0 * ct);
            ltheta.add(row, idx(i, (j + 1) % ntheta), ct);
            const double area = r * dr;
            if (i > 0) {
                const double g = r_in / dr / area;
                lr.add(row, idx(i - 1, j), g);
                lr.add(row, row, -g);
            }
            if (i + 1 < nc) {
                const double g = r_out / dr / area;
                lr.add(row, idx(i + 1, j), g);
                lr.add(row, row, -g);
            } else {
                // Dirichlet y = 0 at r = 1, half-cell distance.
                lr.add(row, row, -r_out / (0.5 * dr) / area);
            }
        }
    }
    const Matrix opt(ltheta);
    const Matrix opr(lr);

    ProblemCase pc;
    pc.name = "polar";
    pc.mesh = uniform_cell_mesh(nc, 0.0, 1.0);
    pc.system.dimension = dim;
    pc.system.linear = opt + opr;
    pc.system.splits.push_back(SplitGroup{"azimuthal", opt, {}, true, std::nullopt});
    pc.system.splits.push_back(SplitGroup{"radial", opr, {}, false, std::nullopt});
    pc.operators.emplace("L_theta", opt);
    pc.operators.emplace("L_r", opr);
    const double lambda1 = bessel_j2_first_root();
    pc.exact = [rc, ntheta, dth, lambda1, nc](double t) {
        Vector y(nc * ntheta);
        const double decay = std::exp(-lambda1 * lambda1 * t);
        for (std::size_t i = 0; i < nc; ++i) {
            const double radial = bessel_j2(lambda1 * rc[i]);
            for (std::size_t j = 0; j < ntheta; ++j) {
                const double th = (static_cast<double>(j) + 0.5) * dth;
                y[i * ntheta + j] = std::cos(2.0 * th) * radial * decay;
            }
        }
        return y;
    };
    pc.initial = pc.exact(0.0);
    pc.t_final = 0.1;
    pc.norm_weights.resize(dim);
    for (std::size_t i = 0; i < nc; ++i) {
        for (std::size_t j = 0; j < ntheta; ++j) pc.norm_weights[idx(i, j)] = rc[i] * dr * dth;
    }
    const double arc = rc[0] * dth;
    pc.stability_factors["radial"] = dr * dr / 4.0;
    pc.stability_factors["azimuthal"] = arc * arc / 4.0;
    pc.metadata["nr"] = std::to_string(nr);
    pc.metadata["ntheta"] = std::to_string(ntheta);
    pc.metadata["layout"] = "index = i_r * ntheta + j_theta, cell centers";
    pc.default_scheme = "ERK2";
    pc.default_tase = 2;
    pc.default_mode = StepMode::tase_split;
    pc.default_steps = 50;
    pc.split_capable = true;
    return pc;
}

// -------------------------------------------------------------------- errors

ErrorReport error_report(std::span<const double> y, std::span<const double> exact,
                         std::span<const double> weights) {
    if (y.size() != exact.size()) throw DimensionError("error_report: length mismatch");
    if (!weights.empty() && weights.size() != y.size()) {
        throw DimensionError("error_report: weight length mismatch");
    }
    double num2 = 0.0;
    double den2 = 0.0;
    double num_inf = 0.0;
    double den_inf = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        const double d = y[i] - exact[i];
        num2 += w * d * d;
        den2 += w * exact[i] * exact[i];
        num_inf = std::max(num_inf, std::abs(d));
        den_inf = std::max(den_inf, std::abs(exact[i]));
    }
    if (!(den2 > 0.0) || !(den_inf > 0.0)) throw DomainError("error_report: exact solution is zero");
    ErrorReport r;
    if (!all_finite(y)) return diverged_report();
    r.l2_rel = std::sqrt(num2 / den2);
    r.linf_rel = num_inf / den_inf;
    return r;
}

ErrorReport diverged_report() {
    ErrorReport r;
    r.l2_rel = std::numeric_limits<double>::infinity();
    r.linf_rel = std::numeric_limits<double>::infinity();
    r.diverged = true;
    return r;
}

OrderFit observed_order(std::span<const double> errors, std::span<const double> dts) {
    if (errors.size() != dts.size()) throw DimensionError("observed_order: length mismatch");
    OrderFit fit;
    std::vector<double> lx;
    std::vector<double> ly;
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (errors[i] > 0.0 && std::isfinite(errors[i]) && dts[i] > 0.0) {
            lx.push_back(std::log(dts[i]));
            ly.push_back(std::log(errors[i]));
        } else {
            fit.excluded.push_back(i);
        }
    }
    fit.used = lx.size();
    if (fit.used < 2) throw DomainError("observed_order: fewer than two usable points");
    const double n = static_cast<double>(fit.used);
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    if (!(sxx > 0.0)) throw DomainError("observed_order: time steps must differ");
    fit.order = sxy / sxx;
    return fit;
}

// ------------------------------------------------------------------- catalog

std::vector<std::string> case_names() {
    return {"diffusion-periodic", "steady-state", "quasi-steady", "diffusion-dirichlet",
            "adr-equal",          "adr-incompatible", "power-law", "ode-stiff",
            "ode-linear",         "polar"};
}

ProblemCase make_case(std::string_view name, const CaseParameters& p) {
    if (name == "diffusion-periodic") {
        DiffusionOptions o;
        if (p.n) o.n = *p.n;
        if (p.differencing) o.differencing = parse_differencing(*p.differencing);
        if (p.t_final) o.t_final = *p.t_final;
        return diffusion_periodic(o);
    }
    if (name == "steady-state" || name == "quasi-steady") {
        if (p.n || p.differencing || p.t_final) {
            DiffusionOptions o;
            o.n = p.n.value_or(6);
            o.differencing = p.differencing ? parse_differencing(*p.differencing)
                                            : Differencing::fourier;
            const bool quasi = name == "quasi-steady";
            o.amplitude = quasi ? 0.01 : 0.0;
            o.t_final = p.t_final.value_or(quasi ? 100.0 : 15.0);
            ProblemCase pc = diffusion_periodic(o);
            const ProblemCase base = quasi ? quasi_steady_case() : steady_state_case();
            pc.name = base.name;
            pc.default_scheme = base.default_scheme;
            pc.default_tase = base.default_tase;
            pc.default_steps = base.default_steps;
            return pc;
        }
        return name == "steady-state" ? steady_state_case() : quasi_steady_case();
    }
    if (name == "diffusion-dirichlet") {
        return diffusion_dirichlet(p.n.value_or(30), p.t_final.value_or(5.0));
    }
    if (name == "adr-equal" || name == "adr-incompatible") {
        AdrOptions o;
        o.right = name == "adr-equal" ? AdrBoundary::equal : AdrBoundary::incompatible;
        if (p.n) o.n = *p.n;
        if (p.t_final) o.t_final = *p.t_final;
        return two_species_adr(o);
    }
    if (name == "power-law") {
        PowerLawOptions o;
        if (p.n) o.n = *p.n;
        if (p.beta) o.beta = *p.beta;
        if (p.t_final) o.t_final = *p.t_final;
        return power_law_diffusion(o);
    }
    if (name == "ode-stiff") return stiff_scalar_ode(p.beta.value_or(10.0), p.t_final.value_or(2e4));
    if (name == "ode-linear") return linear_scalar_ode(-1.0, p.t_final.value_or(1.0));
    if (name == "polar") return polar_diffusion(p.n.value_or(10), 40);
    throw UnknownNameError("unknown case '" + std::string(name) + "'");
}

}  // namespace tase
