#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tase/errors.hpp"
#include "tase/integrators.hpp"
#include "tase/problems.hpp"
#include "tase/schemes.hpp"
#include "tase/stability.hpp"
#include "tase/tase.hpp"

using namespace tase;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

struct Options {
    std::string case_name;
    std::optional<std::string> scheme;
    std::optional<int> tase;
    std::optional<double> alpha;
    std::optional<double> dt;
    std::optional<double> dt_ratio;
    std::optional<std::size_t> steps;
    std::string out = "-";
    std::size_t grid = 201;
    std::vector<double> window = {-4.0, 1.0, -4.0, 4.0};
    double ymax = 1e10;
    std::size_t samples = 100000;
    std::uint64_t seed = 0;
    std::optional<std::string> split_mode;
    std::optional<std::string> bc_mode;
    std::optional<std::string> form;
    std::optional<std::size_t> n;
    std::optional<std::string> differencing;
    std::optional<double> beta;
    std::optional<double> t_final;
    std::size_t points = 4;
    std::optional<std::string> dump;
    std::optional<std::string> profile;
    std::optional<std::string> diagnostics;
    bool timing = false;
};

/// Output sink: stdout for "-", otherwise a file.
class Sink {
public:
    explicit Sink(const std::string& path) {
        if (path != "-") {
            file_ = std::make_unique<std::ofstream>(path);
            if (!*file_) throw ConfigError("cannot open output file '" + path + "'");
        }
    }
    std::ostream& os() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

using Metadata = std::vector<std::pair<std::string, std::string>>;

void write_metadata(std::ostream& os, const Metadata& meta) {
    for (const auto& [k, v] : meta) os << "# " << k << '=' << v << '\n';
}

// ---------------------------------------------------------- run configuration

struct Resolved {
    ProblemCase pc;
    StepPlan plan;
    std::string scheme;
    int tase_order = 0;
    std::size_t steps = 0;
    double dt_stability = 0.0;
    Metadata meta;
};

ProblemCase build_case(const Options& o) {
    if (o.case_name.empty()) throw ConfigError("--case is required");
    CaseParameters params;
    params.n = o.n;
    params.differencing = o.differencing;
    params.beta = o.beta;
    params.t_final = o.t_final;
    return make_case(o.case_name, params);
}

std::size_t resolve_steps(const Options& o, const ProblemCase& pc, double dt_stability) {
    const int given = (o.steps ? 1 : 0) + (o.dt ? 1 : 0) + (o.dt_ratio ? 1 : 0);
    if (given > 1) throw ConfigError("give at most one of --steps, --dt, --dt-ratio");
    const double span = pc.t_final - pc.t0;
    if (o.steps) {
        if (*o.steps == 0) throw ConfigError("--steps must be positive");
        return *o.steps;
    }
    if (o.dt) return steps_for_ratio(span, *o.dt, 1.0);
    if (o.dt_ratio) return steps_for_ratio(span, dt_stability, *o.dt_ratio);
    return pc.default_steps;
}

StepMode resolve_mode(const Options& o, const ProblemCase& pc, int tase_order) {
    if (tase_order == 0) {
        if (o.split_mode || o.bc_mode) throw ConfigError("--split-mode/--bc-mode need TASE (--tase > 0)");
        return StepMode::plain;
    }
    if (o.split_mode && o.bc_mode) throw ConfigError("give at most one of --split-mode and --bc-mode");
    if (o.bc_mode) {
        if (pc.name != "diffusion-dirichlet") {
            throw ConfigError("--bc-mode applies to the diffusion-dirichlet case only");
        }
        if (*o.bc_mode == "correct") return StepMode::tase_combined;
        if (*o.bc_mode == "wrong") return StepMode::tase_split;
        throw ConfigError("--bc-mode must be correct or wrong");
    }
    if (!pc.system.linear) {
        if (o.split_mode) throw ConfigError("case '" + pc.name + "' is nonlinear; --split-mode does not apply");
        return StepMode::tase_nonlinear;
    }
    if (o.split_mode) {
        if (*o.split_mode == "combined") return StepMode::tase_combined;
        if (*o.split_mode == "split") {
            if (!pc.split_capable) throw ConfigError("case '" + pc.name + "' has no split operator groups");
            return StepMode::tase_split;
        }
        throw ConfigError("--split-mode must be combined or split");
    }
    if (pc.default_mode == StepMode::tase_split || pc.default_mode == StepMode::tase_nonlinear) {
        return pc.default_mode;
    }
    return StepMode::tase_combined;
}

TaseForm resolve_form(const Options& o, const ProblemCase& pc) {
    if (!o.form) return pc.default_form;
    if (*o.form == "preconditioner") return TaseForm::preconditioner;
    if (*o.form == "operator") return TaseForm::operator_form;
    throw ConfigError("--form must be preconditioner or operator");
}

Resolved resolve(const Options& o) {
    Resolved r{build_case(o), {}, {}, 0, 0, 0.0, {}};
    r.scheme = canonical_scheme_name(o.scheme.value_or(r.pc.default_scheme));
    r.tase_order = o.tase.value_or(r.pc.default_tase);
    if (r.tase_order < 0 || r.tase_order > kMaxTaseOrder) throw ConfigError("--tase must be in 0..4");
    const ButcherTableau tableau = get_tableau(r.scheme);
    // Implicit schemes have no intercept; their runs are measured against the RK of equal order.
    const std::string reference_scheme =
        tableau.is_explicit() ? r.scheme : explicit_tableau_of_order(tableau.order).name;
    r.dt_stability = r.pc.stability_dt(stability_intercept(reference_scheme));
    r.steps = resolve_steps(o, r.pc, r.dt_stability);
    const double dt = (r.pc.t_final - r.pc.t0) / static_cast<double>(r.steps);
    const StepMode mode = resolve_mode(o, r.pc, r.tase_order);
    r.plan = make_plan(r.scheme, r.tase_order, dt, o.alpha, mode, resolve_form(o, r.pc));

    r.meta.emplace_back("case", r.pc.name);
    r.meta.emplace_back("scheme", r.scheme);
    r.meta.emplace_back("tase", std::to_string(r.tase_order));
    if (r.plan.tase) {
        r.meta.emplace_back("alpha", num(r.plan.tase->alpha));
        r.meta.emplace_back("alpha_source", r.plan.alpha_from_scheme ? "scheme default" : "user");
        r.meta.emplace_back("form", r.plan.tase->form == TaseForm::operator_form ? "operator" : "preconditioner");
    }
    r.meta.emplace_back("mode", to_string(mode));
    r.meta.emplace_back("t0", num(r.pc.t0));
    r.meta.emplace_back("t_final", num(r.pc.t_final));
    r.meta.emplace_back("dt_stability", num(r.dt_stability));
    r.meta.emplace_back("seed", std::to_string(o.seed));
    for (const auto& [k, v] : r.pc.metadata) r.meta.emplace_back("case." + k, v);
    for (const auto& w : r.plan.warnings) r.meta.emplace_back("warning", w);
    return r;
}

// ------------------------------------------------------------------ exports

void dump_case(const ProblemCase& pc, const std::string& path) {
    Sink sink(path);
    std::ostream& os = sink.os();
    os << "# case=" << pc.name << '\n';
    os << "kind,name,i,j,value\n";
    for (std::size_t i = 0; i < pc.mesh.points.size(); ++i) {
        os << "mesh,point," << i << ",," << num(pc.mesh.points[i]) << '\n';
        os << "mesh,width," << i << ",," << num(pc.mesh.widths[i]) << '\n';
    }
    for (std::size_t i = 0; i < pc.mesh.edges.size(); ++i) {
        os << "mesh,edge," << i << ",," << num(pc.mesh.edges[i]) << '\n';
    }
    for (const auto& [name, op] : pc.operators) {
        const DenseMatrix d = op.to_dense();
        for (std::size_t i = 0; i < d.rows(); ++i) {
            for (std::size_t j = 0; j < d.cols(); ++j) {
                if (d(i, j) != 0.0) os << "operator," << name << ',' << i << ',' << j << ',' << num(d(i, j)) << '\n';
            }
        }
    }
    if (pc.system.source) {
        Vector s(pc.system.dimension);
        pc.system.source(pc.t0, s);
        for (std::size_t i = 0; i < s.size(); ++i) os << "source,S," << i << ",," << num(s[i]) << '\n';
    }
}

// ----------------------------------------------------------------- commands

int cmd_run_case(const Options& o) {
    Resolved r = resolve(o);
    if (o.dump) dump_case(r.pc, *o.dump);
    const Trajectory traj = integrate(r.plan, r.pc.system, r.pc.t0, r.pc.initial, r.pc.t_final, r.steps);
    const std::optional<Vector> ref = r.pc.reference_final();
    const Vector& last = traj.final_state();
    ErrorReport err;
    bool have_error = false;
    if (traj.diverged) {
        err = diverged_report();
        have_error = true;
    } else if (ref) {
        err = error_report(last, *ref, r.pc.norm_weights);
        have_error = true;
    }
    double peak = 0.0;
    for (const auto& d : traj.diagnostics) peak = std::max(peak, d.max_norm);

    Sink sink(o.out);
    std::ostream& os = sink.os();
    write_metadata(os, r.meta);
    os << "steps,dt,dt_ratio,final_time,diverged,diverged_at_step,max_norm,final_max_norm,l2_rel,linf_rel";
    if (o.timing) os << ",setup_seconds,mean_step_seconds";
    os << '\n';
    os << r.steps << ',' << num(r.plan.dt) << ',' << num(r.plan.dt / r.dt_stability) << ','
       << num(traj.final_time()) << ',' << (traj.diverged ? "true" : "false") << ','
       << (traj.diverged_at_step ? std::to_string(*traj.diverged_at_step) : "") << ',' << num(peak) << ','
       << num(max_norm(last)) << ',' << (have_error ? num(err.l2_rel) : "") << ','
       << (have_error ? num(err.linf_rel) : "");
    if (o.timing) os << ',' << num(traj.setup_seconds) << ',' << num(traj.mean_step_seconds());
    os << '\n';

    if (o.profile) {
        Sink ps(*o.profile);
        write_metadata(ps.os(), r.meta);
        ps.os() << "index,point,initial,final,reference\n";
        const std::size_t points = r.pc.mesh.points.size();
        for (std::size_t i = 0; i < last.size(); ++i) {
            ps.os() << i << ',' << (points ? num(r.pc.mesh.points[i % points]) : "") << ','
                    << num(r.pc.initial[i]) << ',' << num(last[i]) << ',' << (ref ? num((*ref)[i]) : "")
                    << '\n';
        }
    }
    if (o.diagnostics) {
        Sink ds(*o.diagnostics);
        write_metadata(ds.os(), r.meta);
        ds.os() << "step,t,max_norm,solver_iterations" << (o.timing ? ",wall_seconds" : "") << '\n';
        for (std::size_t i = 0; i < traj.diagnostics.size(); ++i) {
            const auto& d = traj.diagnostics[i];
            ds.os() << i + 1 << ',' << num(r.pc.t0 + static_cast<double>(i + 1) * r.plan.dt) << ','
                    << num(d.max_norm) << ',' << d.solver_iterations;
            if (o.timing) ds.os() << ',' << num(d.wall_seconds);
            ds.os() << '\n';
        }
    }
    std::fprintf(stderr, "%s %s+TASE%d: %zu steps, dt/dt_stab=%.3g, %s", r.pc.name.c_str(), r.scheme.c_str(),
                 r.tase_order, r.steps, r.plan.dt / r.dt_stability, traj.diverged ? "diverged" : "completed");
    if (have_error && !traj.diverged) std::fprintf(stderr, ", linf_rel=%.3e", err.linf_rel);
    std::fprintf(stderr, "\n");
    return 0;
}

int cmd_converge(const Options& o) {
    Resolved base = resolve(o);
    const std::optional<Vector> ref = base.pc.reference_final();
    if (!ref) throw ConfigError("case '" + base.pc.name + "' has no exact or reference solution");
    if (o.points < 2) throw ConfigError("--points must be at least 2");
    const double span = base.pc.t_final - base.pc.t0;

    std::vector<double> dts;
    std::vector<double> l2;
    std::vector<double> linf;
    Sink sink(o.out);
    std::ostream& os = sink.os();
    write_metadata(os, base.meta);
    os << "steps,dt,dt_ratio,diverged,l2_rel,linf_rel\n";
    std::size_t steps = base.steps;
    for (std::size_t k = 0; k < o.points; ++k, steps *= 2) {
        StepPlan plan = base.plan;
        plan.dt = span / static_cast<double>(steps);
        IntegrateOptions io;
        io.keep_states = false;
        const Trajectory traj = integrate(plan, base.pc.system, base.pc.t0, base.pc.initial, base.pc.t_final,
                                          steps, io);
        const ErrorReport err =
            traj.diverged ? diverged_report() : error_report(traj.final_state(), *ref, base.pc.norm_weights);
        dts.push_back(plan.dt);
        l2.push_back(err.l2_rel);
        linf.push_back(err.linf_rel);
        os << steps << ',' << num(plan.dt) << ',' << num(plan.dt / base.dt_stability) << ','
           << (err.diverged ? "true" : "false") << ',' << num(err.l2_rel) << ',' << num(err.linf_rel) << '\n';
    }
    const auto report = [&](const char* label, const std::vector<double>& errors) {
        try {
            const OrderFit fit = observed_order(errors, dts);
            os << "# observed_order_" << label << '=' << num(fit.order) << '\n';
            os << "# points_used_" << label << '=' << fit.used << '\n';
            std::fprintf(stderr, "observed order (%s): %.4f from %zu points\n", label, fit.order, fit.used);
        } catch (const DomainError& e) {
            os << "# observed_order_" << label << "=\n";
            std::fprintf(stderr, "observed order (%s): unavailable (%s)\n", label, e.what());
        }
    };
    report("l2", l2);
    report("linf", linf);
    return 0;
}

AmplificationModel make_model(const Options& o, Metadata& meta) {
    const std::string scheme = canonical_scheme_name(o.scheme.value_or("ERK2"));
    const int p = o.tase.value_or(0);
    double alpha = 1.0;
    if (p > 0) alpha = o.alpha ? *o.alpha : default_alpha(p, scheme_info(scheme));
    AmplificationModel model(scheme, p, alpha);
    meta.emplace_back("scheme", model.scheme());
    meta.emplace_back("tase", std::to_string(p));
    meta.emplace_back("alpha", p > 0 ? num(alpha) : "");
    meta.emplace_back("seed", std::to_string(o.seed));
    return model;
}

int cmd_stability_map(const Options& o) {
    if (o.window.size() != 4) throw ConfigError("--window needs re_min,re_max,im_min,im_max");
    if (o.grid < 2) throw ConfigError("--grid must be at least 2");
    Metadata meta;
    const AmplificationModel model = make_model(o, meta);
    const ScanWindow window{o.window[0], o.window[1], o.window[2], o.window[3]};
    const StabilityScan scan = scan_region(model, window, o.grid, o.grid);
    std::size_t unstable = 0;
    std::size_t poles = 0;
    double left_max = 0.0;
    for (std::size_t j = 0; j < scan.n_im; ++j) {
        for (std::size_t i = 0; i < scan.n_re; ++i) {
            if (scan.is_pole(i, j)) {
                ++poles;
                continue;
            }
            if (scan.re_at(i) <= 0.0) {
                left_max = std::max(left_max, scan.at(i, j));
                if (scan.at(i, j) > 1.0 + 1e-10) ++unstable;
            }
        }
    }
    meta.emplace_back("resolution", std::to_string(o.grid) + "x" + std::to_string(o.grid));
    meta.emplace_back("window", num(window.re_min) + "," + num(window.re_max) + "," + num(window.im_min) + "," +
                                    num(window.im_max));
    meta.emplace_back("pole_cells", std::to_string(poles) + " (abs_sigma=nan)");
    meta.emplace_back("left_half_plane_max", num(left_max));
    meta.emplace_back("left_half_plane_unstable_cells", std::to_string(unstable));
    Sink sink(o.out);
    std::ostream& os = sink.os();
    write_metadata(os, meta);
    os << "re,im,abs_sigma\n";
    for (std::size_t j = 0; j < scan.n_im; ++j) {
        for (std::size_t i = 0; i < scan.n_re; ++i) {
            os << num(scan.re_at(i)) << ',' << num(scan.im_at(j)) << ','
               << (scan.is_pole(i, j) ? std::string("nan") : num(scan.at(i, j))) << '\n';
        }
    }
    std::fprintf(stderr, "left half plane: max |sigma| = %.12g, %zu unstable cells\n", left_max, unstable);
    return 0;
}

int cmd_imag_scan(const Options& o) {
    Metadata meta;
    const AmplificationModel model = make_model(o, meta);
    const ImagAxisScan scan = imag_axis_scan(model, o.ymax, o.samples);
    meta.emplace_back("samples", std::to_string(o.samples) + " log-spaced in [1e-6, y_max] plus y=0");
    meta.emplace_back("y_max", num(o.ymax));
    meta.emplace_back("max_abs_sigma", num(scan.max_abs_sigma));
    meta.emplace_back("argmax_y", num(scan.argmax_y));
    Sink sink(o.out);
    std::ostream& os = sink.os();
    write_metadata(os, meta);
    os << "y,abs_sigma\n";
    for (std::size_t i = 0; i < scan.y.size(); ++i) os << num(scan.y[i]) << ',' << num(scan.abs_sigma[i]) << '\n';
    std::fprintf(stderr, "max |sigma(iy)| = %.6f at y = %.6g\n", scan.max_abs_sigma, scan.argmax_y);
    return 0;
}

int cmd_alpha_table(const Options& o) {
    std::ostringstream table;
    table << "scheme      C      p=1    p=2    p=3    p=4\n";
    std::ostringstream csv;
    csv << "scheme,C,p,alpha_min\n";
    for (int s = 1; s <= 4; ++s) {
        const SchemeInfo info = scheme_info("ERK" + std::to_string(s));
        char row[128];
        std::snprintf(row, sizeof row, "RK%d      %5.2f", s, info.C);
        table << row;
        for (int p = 1; p <= s; ++p) {
            const double a = alpha_min(p, info.C);
            std::snprintf(row, sizeof row, "  %5.2f", a);
            table << row;
            csv << "RK" << s << ',' << num(info.C) << ',' << p << ',' << num(a) << '\n';
        }
        table << '\n';
    }
    if (o.out == "-") {
        std::cout << table.str();
    } else {
        Sink sink(o.out);
        sink.os() << csv.str();
        std::cerr << table.str();
    }
    return 0;
}

void add_run_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--case", o.case_name, "Benchmark case")->required();
    cmd->add_option("--scheme", o.scheme, "Time scheme (ERK1-4, SDIRK1-4, CN or aliases)");
    cmd->add_option("--tase", o.tase, "TASE order, 0 disables");
    cmd->add_option("--alpha", o.alpha, "TASE alpha (default: alpha_min of the scheme)");
    cmd->add_option("--dt", o.dt, "Time step, rounded to a whole number of steps");
    cmd->add_option("--dt-ratio", o.dt_ratio, "Time step as a multiple of the stability limit");
    cmd->add_option("--steps", o.steps, "Number of steps");
    cmd->add_option("--split-mode", o.split_mode, "combined or split");
    cmd->add_option("--bc-mode", o.bc_mode, "correct or wrong boundary-source treatment");
    cmd->add_option("--form", o.form, "preconditioner or operator");
    cmd->add_option("--n", o.n, "Grid size");
    cmd->add_option("--differencing", o.differencing, "fd2, fd4 or fourier");
    cmd->add_option("--beta", o.beta, "Nonlinearity exponent");
    cmd->add_option("--t-final", o.t_final, "Final time");
    cmd->add_option("--seed", o.seed, "Seed recorded in the metadata");
    cmd->add_flag("--timing", o.timing, "Include wall-clock columns (output is then not reproducible)");
}

void add_model_flags(CLI::App* cmd, Options& o) {
    cmd->add_option("--scheme", o.scheme, "Scheme name (ERK*, SDIRK*, CN, SSP-RK*)");
    cmd->add_option("--tase", o.tase, "TASE order, 0 disables");
    cmd->add_option("--alpha", o.alpha, "TASE alpha (default: alpha_min of the scheme)");
    cmd->add_option("--seed", o.seed, "Seed recorded in the metadata");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Explicit time integration with TASE preconditioning for stiff problems"};
    app.require_subcommand(1);
    Options o;

    auto* run = app.add_subcommand("run-case", "Integrate one benchmark case");
    add_run_flags(run, o);
    run->add_option("--out", o.out, "Summary CSV path ('-' for stdout)");
    run->add_option("--profile", o.profile, "Write initial/final/reference profiles to CSV");
    run->add_option("--diagnostics", o.diagnostics, "Write per-step diagnostics to CSV");
    run->add_option("--dump", o.dump, "Write mesh, operators and sources to CSV");

    auto* conv = app.add_subcommand("converge", "Convergence study halving dt");
    add_run_flags(conv, o);
    conv->add_option("--out", o.out, "CSV path ('-' for stdout)");
    conv->add_option("--points", o.points, "Number of step sizes (default 4)");

    auto* map = app.add_subcommand("stability-map", "|sigma| on a grid of the complex plane");
    add_model_flags(map, o);
    map->add_option("--grid", o.grid, "Points per axis");
    map->add_option("--window", o.window, "re_min re_max im_min im_max")->expected(4)->delimiter(',');
    map->add_option("--out", o.out, "CSV path ('-' for stdout)");

    auto* imag = app.add_subcommand("imag-scan", "|sigma| along the imaginary axis");
    add_model_flags(imag, o);
    imag->add_option("--ymax", o.ymax, "Largest sampled y");
    imag->add_option("--samples", o.samples, "Log-spaced samples");
    imag->add_option("--out", o.out, "CSV path ('-' for stdout)");

    auto* table = app.add_subcommand("alpha-table", "alpha_min for RK1-RK4 and TASE orders p <= s");
    table->add_option("--out", o.out, "CSV path ('-' prints the table)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) return cmd_run_case(o);
        if (*conv) return cmd_converge(o);
        if (*map) return cmd_stability_map(o);
        if (*imag) return cmd_imag_scan(o);
        if (*table) return cmd_alpha_table(o);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const UnknownNameError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const DomainError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const DimensionError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return kExitNumerical;
    }
    return 0;
}
