#include "gsde/cli.hpp"

#include "gsde/config.hpp"
#include "gsde/fpgrid.hpp"
#include "gsde/frames.hpp"
#include "gsde/generator.hpp"
#include "gsde/integrate.hpp"
#include "gsde/output.hpp"
#include "gsde/transform.hpp"
#include "gsde/verifier.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>

namespace gsde {

namespace {

namespace fs = std::filesystem;

struct Outcome {
    std::map<std::string, std::string> files;   // written in name order
    bool passed = true;
};

struct Context {
    Config cfg;
    int workers = 0;
    std::ostream& out;
};

using Meta = std::vector<std::pair<std::string, std::string>>;

std::string box_text(const std::vector<Interval>& box) {
    std::string s;
    for (std::size_t i = 0; i < box.size(); ++i)
        s += (i ? "; " : "") + format_double(box[i].lo) + " " + format_double(box[i].hi);
    return s;
}

Vec read_point(ConfigSection& sec, const std::string& key, int dim) {
    const auto v = sec.get_list(key);
    if (static_cast<int>(v.size()) != dim)
        throw ConfigError("[" + sec.name() + "] " + key + ": expected " + std::to_string(dim) + " values, got " +
                          std::to_string(v.size()));
    return Eigen::Map<const Vec>(v.data(), dim);
}

int read_positive(ConfigSection& sec, const std::string& key, long long fallback) {
    const long long v = sec.get_int(key, fallback);
    if (v < 1 || v > 1'000'000'000) throw ConfigError("[" + sec.name() + "] " + key + " must be a positive integer");
    return static_cast<int>(v);
}

std::vector<int> read_nodes(ConfigSection& sec, int dim, int fallback) {
    std::vector<double> raw = sec.get_list("nodes", {static_cast<double>(fallback)});
    if (raw.size() == 1) raw.assign(dim, raw[0]);
    if (static_cast<int>(raw.size()) != dim)
        throw ConfigError("[" + sec.name() + "] nodes: give one count or one per axis");
    std::vector<int> n;
    for (double v : raw) {
        if (v != std::floor(v) || v < 1) throw ConfigError("[" + sec.name() + "] nodes must be positive integers");
        n.push_back(static_cast<int>(v));
    }
    return n;
}

std::vector<Interval> read_box(ConfigSection& sec, const GenericSystem& sys) {
    if (auto b = sec.get_box("box", sys.dim())) return *b;
    if (sys.patch.bounds) return *sys.patch.bounds;
    throw ConfigError("[" + sec.name() + "] box is required for an unbounded system");
}

CheckResult info_row(const std::string& name, double value) {
    CheckResult c;
    c.name = name;
    c.residual = value;
    c.tolerance = INFINITY;
    c.pass = !std::isnan(value);
    return c;
}

CheckResult check_row(const std::string& name, double value, double tol) {
    CheckResult c;
    c.name = name;
    c.residual = value;
    c.tolerance = tol;
    c.pass = value <= tol;
    return c;
}

bool all_pass(const std::vector<CheckResult>& checks) {
    return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.pass; });
}

void print_failures(std::ostream& out, const std::vector<CheckResult>& checks) {
    for (const auto& c : checks)
        if (!c.pass)
            out << "FAILED " << c.name << ": residual " << format_double(c.residual) << " > tolerance "
                << format_double(c.tolerance) << '\n';
}

// ---------------------------------------------------------------------------

Outcome cmd_verify(Context& ctx) {
    GenericSystem sys = load_system(ctx.cfg.section("system"), false);
    auto& sec = ctx.cfg.section("verify");
    const int n = read_positive(sec, "n_points", 1000);
    const std::uint64_t seed = sec.get_u64("seed", 1);
    std::optional<double> tol;
    if (sec.has("tol")) tol = sec.get_double("tol");
    std::optional<VolumeDensity> m2;
    if (sec.has("m2")) m2 = VolumeDensity(ScalarField::parse(sec.get_string("m2"), sys.dim()));
    ctx.cfg.reject_unread();

    VerificationReport rep = verify_system(sys, n, seed, tol);
    if (m2) {
        const double t = rep.checks.front().tolerance;
        rep.checks.insert(rep.checks.end() - 1,
                          check_row("casimir_multiple",
                                    casimir_multiple_check(sys, *m2, halton_points(rep.box, n, seed)), t));
    }
    Meta meta = {{"system", rep.system},
                 {"n_points", std::to_string(rep.n_points)},
                 {"seed", std::to_string(rep.seed)},
                 {"box", box_text(rep.box)},
                 {"analytic", rep.analytic ? "true" : "false"}};
    if (!rep.first_error.empty()) meta.emplace_back("first_error", rep.first_error);
    Outcome o;
    o.files["report.csv"] = format_report("gsde verify", meta, rep.checks);
    o.passed = all_pass(rep.checks);
    print_failures(ctx.out, rep.checks);
    return o;
}

Outcome cmd_simulate(Context& ctx) {
    const GenericSystem sys = load_system(ctx.cfg.section("system"));
    auto& sec = ctx.cfg.section("simulate");
    SimConfig sc;
    sc.dt = sec.get_double("dt", 1e-3);
    if (sec.has("steps") && sec.has("horizon")) throw ConfigError("[simulate] give either steps or horizon, not both");
    if (sec.has("horizon")) {
        const double horizon = sec.get_double("horizon");
        if (!(horizon >= 0) || !(sc.dt > 0)) throw ConfigError("[simulate] horizon and dt must be positive");
        sc.steps = std::llround(horizon / sc.dt);
    } else {
        sc.steps = sec.get_int("steps", 1000);
    }
    sc.n_traj = read_positive(sec, "n_traj", 1);
    sc.seed = sec.get_u64("seed", 1);
    const std::string scheme = sec.get_string("scheme", "strat_heun");
    const auto s = scheme_from_string(scheme);
    if (!s) throw ConfigError("[simulate] scheme must be det_rk4, ito_em or strat_heun, got '" + scheme + "'");
    sc.scheme = *s;
    sc.project_energy = sec.get_bool("project_energy", false);
    sc.record_every = read_positive(sec, "record_every", 1);
    if (sec.has("temperature")) sc.temperature = sec.get_double("temperature");
    const Vec x0 = read_point(sec, "x0", sys.dim());
    auto& out = ctx.cfg.section("output");
    const bool plots = out.get_bool("plots", false);
    const bool trajectories = out.get_bool("trajectories", true);
    ctx.cfg.reject_unread();
    sc.workers = ctx.workers;
    sc.validate();

    const EnsembleResult res = run_ensemble(sys, sc, x0);
    std::vector<CheckResult> checks = {info_row("max_energy_drift", res.max_energy_drift),
                                       info_row("left_bounds", res.exited),
                                       check_row("step_errors", res.failed, 0.0)};
    std::string first_error;
    for (const auto& t : res.trajectories)
        if (!t.error.empty()) {
            first_error = t.error;
            break;
        }
    Meta meta = {{"system", sys.name},
                 {"scheme", to_string(sc.scheme)},
                 {"steps", std::to_string(sc.steps)},
                 {"n_traj", std::to_string(sc.n_traj)}};
    if (!first_error.empty()) meta.emplace_back("first_error", first_error);
    Outcome o;
    o.files["report.csv"] = format_report("gsde simulate", meta, checks);
    o.files["summary.csv"] = format_summary(res.summary);
    if (trajectories) o.files["trajectories.csv"] = format_trajectories(res, sys.dim());
    if (plots) {
        o.files["energy_entropy.svg"] = svg_line_chart(
            "ensemble mean of E and S", "time",
            {{"mean E", res.summary.times, res.summary.mean_E}, {"mean S", res.summary.times, res.summary.mean_S}});
        std::vector<double> end;
        for (const auto& t : res.trajectories)
            if (!t.states.empty()) end.push_back(t.states.back()[0]);
        o.files["endpoints_x1.svg"] = svg_histogram("endpoint x1", end, 30);
    }
    o.passed = all_pass(checks);
    print_failures(ctx.out, checks);
    return o;
}

Outcome cmd_stationarity(Context& ctx) {
    const GenericSystem sys = load_system(ctx.cfg.section("system"));
    auto& sec = ctx.cfg.section("stationarity");
    const int n_bumps = read_positive(sec, "n_bumps", 20);
    const std::uint64_t seed = sec.get_u64("seed", 1);
    const int power = read_positive(sec, "bump_power", 8);
    QuadratureSpec quad;
    quad.box = read_box(sec, sys);
    quad.nodes = read_nodes(sec, sys.dim(), 64);
    const std::string rule = sec.get_string("rule", "gauss_legendre");
    if (rule == "gauss_legendre") quad.rule = QuadratureSpec::Rule::GaussLegendre;
    else if (rule == "midpoint") quad.rule = QuadratureSpec::Rule::Midpoint;
    else throw ConfigError("[stationarity] rule must be gauss_legendre or midpoint, got '" + rule + "'");
    const expr::Expression h = expr::Expression::parse(sec.get_string("h", "1"), 1);
    const double tol = sec.get_double("tol", 1e-5);
    StationarityOptions opts;
    opts.omit_divergence = sec.get_bool("control", false);
    ctx.cfg.reject_unread();

    const auto battery = make_battery(quad.box, n_bumps, seed, power);
    const auto res = stationarity_residual(sys, battery, h, quad, opts);
    std::vector<CheckResult> checks = {
        check_row(opts.omit_divergence ? "stationarity_without_divergence" : "stationarity", res.residual, tol)};
    std::ostringstream per;
    per << "bump,residual\n";
    for (std::size_t i = 0; i < res.per_bump.size(); ++i) per << i << ',' << format_double(res.per_bump[i]) << '\n';
    Outcome o;
    o.files["report.csv"] = format_report("gsde stationarity",
                                          {{"system", sys.name},
                                           {"box", box_text(quad.box)},
                                           {"h", h.str()},
                                           {"worst_bump", std::to_string(res.worst_bump)}},
                                          checks);
    o.files["bumps.csv"] = per.str();
    o.passed = all_pass(checks);
    print_failures(ctx.out, checks);
    return o;
}

Outcome cmd_fokker_planck(Context& ctx) {
    const GenericSystem sys = load_system(ctx.cfg.section("system"));
    auto& sec = ctx.cfg.section("fokker_planck");
    GridSpec spec;
    spec.nodes = read_nodes(sec, sys.dim(), 64);
    spec.box = read_box(sec, sys);
    const expr::Expression h = expr::Expression::parse(sec.get_string("h", "1"), 1);
    spec.margin = static_cast<int>(sec.get_int("margin", 3));
    const long long evolve = sec.get_int("evolve_steps", 0);
    if (evolve < 0 || evolve > 100'000'000) throw ConfigError("[fokker_planck] evolve_steps out of range");
    const bool export_csv = sec.get_bool("export_csv", false);
    spec.max_memory_mb = sec.get_double("max_memory_mb", 2048);
    const bool plots = ctx.cfg.section("output").get_bool("plots", false);
    ctx.cfg.reject_unread();
    spec.workers = ctx.workers;

    const GridOperator op = build_grid_generator(sys, spec);
    const SplitOperators split = build_split_operators(sys, spec);
    const double stat = stationary_residual_grid(sys, spec, h);
    const SplitDefects defects = symmetry_split_check(split);
    const double duality = duality_defect(op);
    std::vector<CheckResult> checks = {info_row("stationary_residual", stat),
                                       check_row("duality", duality, 1e-12),
                                       check_row("sym_defect", defects.sym, 1e-12),
                                       info_row("antisym_defect", defects.antisym)};
    Outcome o;
    GridDensity rho_end;
    if (evolve > 0) {
        GridDensity rho0{Vec::Ones(op.grid.size())};
        const Evolution ev = evolve_density(split, rho0, static_cast<int>(evolve));
        double drop = 0.0, scale = 1.0;
        for (std::size_t i = 1; i < ev.entropy.size(); ++i) {
            drop = std::max(drop, ev.entropy[i - 1] - ev.entropy[i]);
            scale = std::max(scale, std::abs(ev.entropy[i]));
        }
        checks.push_back(check_row("entropy_monotone", drop, 1e-12 * scale));
        std::ostringstream es;
        es << "step,time,entropy,mass\n";
        for (std::size_t i = 0; i < ev.times.size(); ++i)
            es << i << ',' << format_double(ev.times[i]) << ',' << format_double(ev.entropy[i]) << ','
               << format_double(ev.mass[i]) << '\n';
        o.files["entropy.csv"] = es.str();
        if (plots) o.files["entropy.svg"] = svg_line_chart("relative entropy", "time", {{"S(rho)", ev.times, ev.entropy}});
        rho_end = ev.final_density;
    }
    if (export_csv) {
        Vec g(op.grid.size()), e(1);
        for (long i = 0; i < op.grid.size(); ++i) {
            const Vec x = op.grid.point(i);
            e[0] = sys.E.value(x);
            g[i] = h.value(e) * std::exp(sys.S.value(x));
        }
        const Vec r = apply_fokker_planck(op, g);
        std::vector<std::string> names = {"g", "Lstar_g"};
        std::vector<const Vec*> cols = {&g, &r};
        if (evolve > 0) {
            names.push_back("rho_final");
            cols.push_back(&rho_end.values);
        }
        std::ostringstream gs;
        write_grid_csv(gs, op.grid, names, cols);
        o.files["grid.csv"] = gs.str();
    }
    std::string nodes;
    for (std::size_t i = 0; i < spec.nodes.size(); ++i) nodes += (i ? "," : "") + std::to_string(spec.nodes[i]);
    o.files["report.csv"] = format_report(
        "gsde fokker-planck",
        {{"system", sys.name}, {"box", box_text(spec.box)}, {"nodes", nodes}, {"margin", std::to_string(spec.margin)}},
        checks);
    o.passed = all_pass(checks);
    print_failures(ctx.out, checks);
    return o;
}

Outcome cmd_transform(Context& ctx) {
    const GenericSystem sys = load_system(ctx.cfg.section("system"));
    auto& sec = ctx.cfg.section("transform");
    const auto fwd = sec.get_strings("forward");
    const auto inv = sec.get_strings("inverse");
    std::vector<std::string> jac;
    if (sec.has("jacobian")) jac = sec.get_strings("jacobian");
    const int n = read_positive(sec, "n_points", 100);
    const std::uint64_t seed = sec.get_u64("seed", 1);
    std::optional<double> tol;
    if (sec.has("tol")) tol = sec.get_double("tol");
    ctx.cfg.reject_unread();

    const Diffeo phi = Diffeo::from_expressions(sys.dim(), fwd, inv, jac, "config");
    const VerificationReport rep = transform_check(sys, phi, n, seed, tol);
    Meta meta = {{"system", sys.name},
                 {"n_points", std::to_string(n)},
                 {"seed", std::to_string(seed)},
                 {"analytic", rep.analytic ? "true" : "false"}};
    if (!rep.first_error.empty()) meta.emplace_back("first_error", rep.first_error);
    Outcome o;
    o.files["report.csv"] = format_report("gsde transform-check", meta, rep.checks);
    o.passed = all_pass(rep.checks);
    print_failures(ctx.out, rep.checks);
    return o;
}

Outcome cmd_sweep(Context& ctx) {
    const GenericSystem sys = load_system(ctx.cfg.section("system"));
    auto& sec = ctx.cfg.section("sweep");
    std::vector<double> Ts = sec.get_list("T_list");
    SimConfig sc;
    sc.scheme = Scheme::StratHeun;
    sc.dt = sec.get_double("dt", 1e-3);
    const double horizon = sec.get_double("horizon", 1.0);
    if (!(sc.dt > 0) || !(horizon >= 0)) throw ConfigError("[sweep] dt and horizon must be positive");
    sc.steps = std::llround(horizon / sc.dt);
    sc.n_traj = read_positive(sec, "n_traj", 1000);
    sc.seed = sec.get_u64("seed", 1);
    const Vec x0 = read_point(sec, "x0", sys.dim());
    sc.record_every = read_positive(sec, "record_every", 10);
    const bool plots = ctx.cfg.section("output").get_bool("plots", false);
    ctx.cfg.reject_unread();
    sc.workers = ctx.workers;
    std::sort(Ts.begin(), Ts.end(), std::greater<>());

    const auto rows = zero_noise_sweep(sys, Ts, sc, x0);
    std::vector<CheckResult> checks;
    double lo = INFINITY, hi = 0.0;
    int positive = 0;
    for (const auto& r : rows)
        if (r.T > 0) {
            lo = std::min(lo, r.deviation_over_sqrtT);
            hi = std::max(hi, r.deviation_over_sqrtT);
            ++positive;
        }
    if (positive >= 2) checks.push_back(check_row("sqrtT_scaling", hi / lo, 3.0));
    for (const auto& r : rows)
        if (r.T == 0) checks.push_back(check_row("zero_noise_limit", r.deviation, 10.0 * sc.dt * sc.dt));
    Outcome o;
    o.files["sweep.csv"] = format_sweep(rows);
    o.files["report.csv"] = format_report("gsde sweep-temperature",
                                          {{"system", sys.name}, {"n_traj", std::to_string(sc.n_traj)}}, checks);
    if (plots) {
        Series s{"deviation / sqrt(T)", {}, {}};
        for (const auto& r : rows)
            if (r.T > 0) {
                s.x.push_back(std::log10(r.T));
                s.y.push_back(r.deviation_over_sqrtT);
            }
        o.files["sweep.svg"] = svg_line_chart("zero-noise sweep", "log10 T", {s});
    }
    o.passed = all_pass(checks);
    print_failures(ctx.out, checks);
    return o;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Geometric GENERIC systems: verification, simulation and certificates", "gsde"};
    app.require_subcommand(1);
    std::string config_path, out_dir;
    int workers = 0;
    using Handler = Outcome (*)(Context&);
    const std::vector<std::tuple<const char*, const char*, Handler>> commands = {
        {"verify", "check the structural axioms at sample points", cmd_verify},
        {"simulate", "integrate an ensemble and write trajectories", cmd_simulate},
        {"stationarity", "quadrature test of stationarity of h(E) e^S nu", cmd_stationarity},
        {"fokker-planck", "grid generator certificates and density evolution", cmd_fokker_planck},
        {"transform-check", "coordinate-invariance checks under a diffeomorphism", cmd_transform},
        {"sweep-temperature", "zero-noise limit sweep over temperatures", cmd_sweep},
    };
    std::map<CLI::App*, Handler> handlers;
    for (const auto& [name, help, fn] : commands) {
        CLI::App* sub = app.add_subcommand(name, help);
        sub->add_option("--config", config_path, "configuration file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides [output] directory)");
        sub->add_option("--workers", workers, "worker threads (0 = hardware concurrency)")
            ->check(CLI::NonNegativeNumber);
        handlers[sub] = fn;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, er;
        const int code = app.exit(e, o, er);
        out << o.str();
        err << er.str();
        return code == 0 ? 0 : 2;
    }
    try {
        Context ctx{Config::parse_file(config_path), workers, out};
        auto& output = ctx.cfg.section("output");
        const auto configured_dir = output.get_untracked("directory");
        const fs::path dir = !out_dir.empty() ? fs::path(out_dir) : fs::path(configured_dir.value_or("gsde_out"));
        Outcome result;
        for (const auto& [sub, fn] : handlers)
            if (sub->parsed()) result = fn(ctx);
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
        result.files["config.resolved.ini"] = ctx.cfg.resolved_text();
        for (const auto& [name, text] : result.files) write_file(dir / name, text);
        out << (result.passed ? "ok" : "checks failed") << ": outputs in " << dir.string() << '\n';
        return result.passed ? 0 : 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
}

} // namespace gsde
