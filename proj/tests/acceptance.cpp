// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "gsde/cli.hpp"
#include "gsde/config.hpp"
#include "gsde/fpgrid.hpp"
#include "gsde/frames.hpp"
#include "gsde/generator.hpp"
#include "gsde/integrate.hpp"
#include "gsde/rng.hpp"
#include "gsde/transform.hpp"
#include "gsde/verifier.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

using namespace gsde;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << "[FAILED: " << what << "] ";
        }
    }
};

GenericSystem from_ini(const std::string& text) {
    Config cfg = Config::parse_string(text);
    return load_system(cfg.section("system"), false);
}

std::string num(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

std::set<std::string> failing(const VerificationReport& rep) {
    std::set<std::string> out;
    for (const auto& c : rep.checks)
        if (!c.pass) out.insert(c.name);
    return out;
}

// ---------------------------------------------------------------------------

void axiom_suite(Outcome& o) {
    const std::vector<GenericSystem> catalog = {make_damped_oscillator(), make_rigid_body({1.0, "-x1", {1, 2, 3}}),
                                                make_ou_gradient(2), make_circle_diffusion(),
                                                make_canonical_hamiltonian(2)};
    for (const auto& sys : catalog) {
        const auto rep = verify_system(sys, 1000, 1);
        double worst = 0.0;
        for (const auto& c : rep.checks) worst = std::max(worst, c.residual);
        o.require(rep.analytic && rep.passed() && rep.checks.front().tolerance == 1e-8, sys.name + " passes at 1e-8");
        o.detail << sys.name << " max " << num(worst) << "; ";
    }

    const GenericSystem non_jacobi =
        from_ini("[system]\nkind=custom\ndim=4\nJ12=1\nJ13=x4\nJ24=1\nE=x1\nS=0\n");
    const GenericSystem non_unimodular = from_ini("[system]\nkind=custom\ndim=2\nJ12=x1\nE=x2\nS=0\n");
    const GenericSystem non_psd = from_ini("[system]\nkind=custom\ndim=2\nK11=1\nK22=-0.1\nE=0\nS=0\n");

    ScalarField x1 = ScalarField::parse("x1", 4), x2 = ScalarField::parse("x2", 4), x3 = ScalarField::parse("x3", 4);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-2, 2);
    double worst_const = 0.0;
    for (int i = 0; i < 20; ++i) {
        Vec x(4);
        for (auto& v : x) v = u(rng);
        worst_const = std::max(worst_const, std::abs(jacobi_defect(non_jacobi.J, x, x1, x2, x3) + 1.0));
    }
    o.require(worst_const < 1e-12, "non-Jacobi defect is the constant -1");

    const std::vector<std::pair<const GenericSystem*, std::string>> counter = {
        {&non_jacobi, "jacobi"}, {&non_unimodular, "unimodularity"}, {&non_psd, "K_psd"}};
    for (const auto& [sys, target] : counter) {
        const auto f = failing(verify_system(*sys, 1000, 1));
        o.require(f == std::set<std::string>{target}, "counterexample fails exactly " + target);
        o.detail << target << " counterexample fails {";
        for (const auto& n : f) o.detail << n << ' ';
        o.detail << "}; ";
    }
}

// Max energy drift over 100 trajectories to time 1 with strat_heun. All step sizes
// integrate the same Brownian paths: an increment at dt = k * fine_dt is the
// normalized sum of k consecutive fine increments, so the ratios between step
// sizes measure the scheme rather than differences between sampled paths.
double coupled_energy_drift(const GenericSystem& sys, const Vec& x0, std::uint64_t seed, int k) {
    constexpr double fine_dt = 2.5e-3;
    constexpr int fine_steps = 400;
    Stepper stepper(SdeModel::standard(sys), Scheme::StratHeun);
    const int r = stepper.channels();
    std::vector<double> xi(r), fine(r);
    double worst = 0.0;
    for (std::uint32_t t = 0; t < 100; ++t) {
        const NormalStream stream(seed, t);
        Vec x = x0;
        const double E0 = sys.E.value(x0);
        for (int n = 0; n < fine_steps / k; ++n) {
            std::fill(xi.begin(), xi.end(), 0.0);
            for (int j = 0; j < k; ++j) {
                stream.normals(static_cast<std::uint64_t>(n) * k + j, r, fine.data());
                for (int c = 0; c < r; ++c) xi[c] += fine[c] / std::sqrt(static_cast<double>(k));
            }
            try {
                stepper.step(x, fine_dt * k, xi.data());
            } catch (const std::exception&) {
                break;
            }
            if (!sys.patch.contains(x)) break;
            worst = std::max(worst, std::abs(sys.E.value(x) - E0));
        }
    }
    return worst;
}

void energy_conservation(Outcome& o) {
    struct Case {
        GenericSystem sys;
        Vec x0;
    };
    std::vector<Case> cases = {{make_circle_diffusion(), Vec::Zero(2)}, {make_damped_oscillator(), Vec::Zero(3)}};
    cases[0].x0 << 1, 0;
    cases[1].x0 << 1, 0.5, 1;
    for (const auto& c : cases) {
        std::vector<double> drift;
        for (int k : {4, 2, 1}) drift.push_back(coupled_energy_drift(c.sys, c.x0, 2024, k));
        const double r1 = drift[0] / drift[1], r2 = drift[1] / drift[2];
        o.require(r1 >= 1.8 && r2 >= 1.8, c.sys.name + " drift ratios >= 1.8");
        SimConfig sc;
        sc.dt = 1e-2;
        sc.steps = 100;
        sc.n_traj = 100;
        sc.seed = 2024;
        sc.project_energy = true;
        sc.record_every = 100;
        const auto proj = run_ensemble(c.sys, sc, c.x0);
        o.require(proj.max_energy_drift <= 1e-10, c.sys.name + " projected drift <= 1e-10");
        o.detail << c.sys.name << " drift " << num(drift[0]) << "/" << num(drift[1]) << "/" << num(drift[2])
                 << " ratios " << num(r1) << "," << num(r2) << " projected " << num(proj.max_energy_drift) << "; ";
    }
}

void stationarity(Outcome& o) {
    {
        const GenericSystem sys = make_ou_gradient(2);
        QuadratureSpec q{{{-5, 5}, {-5, 5}}, {48, 48}, QuadratureSpec::Rule::GaussLegendre};
        const auto res = stationarity_residual(sys, make_battery(q.box, 20, 1), expr::Expression::parse("1", 1), q);
        o.require(res.residual <= 1e-5, "ou_gradient residual <= 1e-5");
        o.detail << "ou_gradient " << num(res.residual) << "; ";
    }
    const GenericSystem osc = make_damped_oscillator();
    QuadratureSpec q{{{-2.5, 2.5}, {-2.5, 2.5}, {0.2, 4}}, {48, 48, 48}, QuadratureSpec::Rule::GaussLegendre};
    const auto battery = make_battery(q.box, 20, 3);
    // A compactly supported bump in E on (0, 6).
    const auto h = expr::Expression::parse("((1 - ((x1 - 3) / 3)^2 + abs(1 - ((x1 - 3) / 3)^2)) / 2)^4", 1);
    const auto res = stationarity_residual(osc, battery, h, q);
    o.require(res.residual <= 1e-5, "damped_oscillator residual <= 1e-5");
    StationarityOptions broken;
    broken.omit_divergence = true;
    const auto ctl = stationarity_residual(osc, battery, h, q, broken);
    o.require(ctl.residual >= 1e-2, "control residual >= 1e-2");
    o.detail << "damped_oscillator " << num(res.residual) << "; control " << num(ctl.residual) << "; ";
}

struct Moments {
    Vec mean;
    Mat cov;
    Vec se_mean;
    Mat se_cov;
};

Moments endpoint_moments(const EnsembleResult& res) {
    std::vector<Vec> pts;
    for (const auto& t : res.trajectories) pts.push_back(t.states.back());
    const int d = static_cast<int>(pts[0].size());
    const double n = static_cast<double>(pts.size());
    Moments m;
    m.mean = Vec::Zero(d);
    for (const auto& p : pts) m.mean += p / n;
    m.cov = Mat::Zero(d, d);
    for (const auto& p : pts) m.cov += (p - m.mean) * (p - m.mean).transpose() / (n - 1);
    m.se_mean = (m.cov.diagonal() / n).cwiseSqrt();
    m.se_cov = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double s2 = 0.0;
            for (const auto& p : pts) {
                const double z = (p[i] - m.mean[i]) * (p[j] - m.mean[j]) - m.cov(i, j);
                s2 += z * z / (n - 1);
            }
            m.se_cov(i, j) = std::sqrt(s2 / n);
        }
    return m;
}

void ito_stratonovich(Outcome& o) {
    const std::vector<GenericSystem> systems = {make_damped_oscillator(), make_rigid_body({1.0, "-x1", {1, 2, 3}}),
                                                make_ou_gradient(3), make_circle_diffusion(),
                                                make_canonical_hamiltonian(1)};
    for (const auto& sys : systems) {
        const Frame frame = sys.noise_frame();
        const auto pts = uniform_points(sampling_box(sys.patch), 100, 17);
        double worst = 0.0;
        for (const auto& x : pts) worst = std::max(worst, ito_identity_residual(sys, frame, x));
        o.require(worst <= 1e-8, sys.name + " drift assemblies agree");
        o.detail << sys.name << " " << num(worst) << "; ";
    }
    const GenericSystem circle = make_circle_diffusion();
    Vec x0(2);
    x0 << 1, 0;
    SimConfig sc;
    sc.dt = 2.5e-3;
    sc.steps = 800;
    sc.n_traj = 10000;
    sc.seed = 99;
    sc.record_every = 800;
    sc.scheme = Scheme::ItoEm;
    const auto ito = endpoint_moments(run_ensemble(circle, sc, x0));
    sc.scheme = Scheme::StratHeun;
    const auto str = endpoint_moments(run_ensemble(circle, sc, x0));
    double worst_z = 0.0;
    for (int i = 0; i < 2; ++i) {
        worst_z = std::max(worst_z, std::abs(ito.mean[i] - str.mean[i]) /
                                        std::hypot(ito.se_mean[i], str.se_mean[i]));
        for (int j = 0; j < 2; ++j)
            worst_z = std::max(worst_z, std::abs(ito.cov(i, j) - str.cov(i, j)) /
                                            std::hypot(ito.se_cov(i, j), str.se_cov(i, j)));
    }
    o.require(worst_z <= 3.0, "endpoint moments within 3 standard errors");
    o.detail << "circle moments max z " << num(worst_z) << "; ";
}

void stationary_law(Outcome& o) {
    {
        const GenericSystem ou = make_ou_gradient(2);
        SimConfig sc;
        sc.dt = 1e-2;
        sc.steps = 1000;
        sc.n_traj = 10000;
        sc.seed = 7;
        sc.record_every = 1000;
        sc.scheme = Scheme::ItoEm;
        const auto m = endpoint_moments(run_ensemble(ou, sc, Vec(Vec::Zero(2))));
        const double dev = (m.cov - Mat::Identity(2, 2)).cwiseAbs().maxCoeff();
        o.require(dev <= 0.05, "ou covariance within 0.05 of identity");
        o.detail << "ou cov dev " << num(dev) << "; ";
    }
    const GenericSystem circle = make_circle_diffusion();
    Vec x0(2);
    x0 << 1, 0;
    SimConfig sc;
    sc.dt = 1e-2;
    sc.steps = 1000;
    sc.n_traj = 10000;
    sc.seed = 8;
    sc.record_every = 1000;
    sc.scheme = Scheme::StratHeun;
    const auto res = run_ensemble(circle, sc, x0);
    constexpr int kBins = 36;
    std::vector<double> counts(kBins, 0.0);
    for (const auto& t : res.trajectories) {
        const Vec& x = t.states.back();
        const double a = std::atan2(x[1], x[0]) + std::numbers::pi;
        counts[std::min(kBins - 1, static_cast<int>(a / (2 * std::numbers::pi) * kBins))] += 1;
    }
    const double expected = static_cast<double>(sc.n_traj) / kBins;
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    const double critical = boost::math::quantile(boost::math::chi_squared(kBins - 1), 0.99);
    o.require(chi2 <= critical, "circle angles pass chi-square at 0.01");
    o.detail << "circle chi2 " << num(chi2) << " (critical " << num(critical) << "); ";
}

void coordinate_invariance(Outcome& o) {
    Mat A = Mat::Identity(2, 2);
    A(0, 0) = 2;
    const std::vector<std::pair<GenericSystem, Diffeo>> cases = {
        {make_damped_oscillator(), Diffeo::identity(3)},
        {make_rigid_body({1.0, "-x1", {1, 2, 3}}), Diffeo::identity(3)},
        {make_canonical_hamiltonian(1), Diffeo::linear(A)},
        {make_ou_gradient(2), Diffeo::linear(A)},
        {make_damped_oscillator(), Diffeo::shear()},
    };
    for (const auto& [sys, phi] : cases) {
        const auto rep = transform_check(sys, phi, 100, 5, 1e-6);
        const auto* gen = rep.find("generator_equivalence");
        o.require(rep.passed(), sys.name + " under " + phi.name());
        o.detail << sys.name << "@" << phi.name() << " " << num(gen->residual) << "; ";
    }
    // The canonical structure under diag(2, 1): J_hat = [[0, 2], [-2, 0]] and m_hat = 1/2.
    const GenericSystem hat = pushforward_system(make_canonical_hamiltonian(1), Diffeo::linear(A));
    Vec y(2);
    y << 0.3, -0.7;
    const Mat J = hat.J.value(y);
    o.require(std::abs(J(0, 1) - 2) < 1e-14 && std::abs(J(1, 0) + 2) < 1e-14 && std::abs(hat.nu.value(y) - 0.5) < 1e-14,
              "linear pushforward of the canonical structure");
}

void zero_noise(Outcome& o) {
    const GenericSystem osc = make_damped_oscillator();
    Vec x0(3);
    x0 << 1, 0.5, 1;
    SimConfig sc;
    sc.dt = 1e-3;
    sc.steps = 1000;
    sc.n_traj = 1000;
    sc.seed = 5;
    sc.record_every = 10;
    const auto rows = zero_noise_sweep(osc, {1e-1, 1e-2, 1e-3, 0.0}, sc, x0);
    double lo = INFINITY, hi = 0.0;
    for (const auto& r : rows)
        if (r.T > 0) {
            lo = std::min(lo, r.deviation_over_sqrtT);
            hi = std::max(hi, r.deviation_over_sqrtT);
            o.detail << "T=" << num(r.T) << " dev/sqrtT " << num(r.deviation_over_sqrtT) << "; ";
        }
    o.require(hi / lo <= 3.0, "deviation/sqrt(T) constant within a factor 3");
    const double dev0 = rows.back().deviation;
    o.require(dev0 <= 10 * sc.dt * sc.dt, "deviation(0) within the Heun-vs-RK4 scheme tolerance 10 dt^2");
    o.detail << "deviation(0) " << num(dev0) << "; ";
}

void fokker_planck(Outcome& o) {
    const GenericSystem ou = make_ou_gradient(2);
    const auto h = expr::Expression::parse("1", 1);
    GridSpec coarse{{{-4, 4}, {-4, 4}}, {64, 64}};
    GridSpec fine{{{-4, 4}, {-4, 4}}, {128, 128}};
    const double r64 = stationary_residual_grid(ou, coarse, h);
    const double r128 = stationary_residual_grid(ou, fine, h);
    const double ratio = r64 / r128;
    o.require(ratio >= 3.0 && ratio <= 5.0, "refinement ratio 4 +- 25%");
    o.detail << "ou residual " << num(r64) << " -> " << num(r128) << " ratio " << num(ratio) << "; ";

    const GenericSystem rb = make_rigid_body({1.0, "-x1", {1, 2, 3}});
    GridSpec rb24{{{-2, 2}, {-2, 2}, {-2, 2}}, {24, 24, 24}};
    GridSpec rb48{{{-2, 2}, {-2, 2}, {-2, 2}}, {48, 48, 48}};
    const double dual = std::max(duality_defect(build_grid_generator(ou, fine)), duality_defect(build_grid_generator(rb, rb24)));
    o.require(dual <= 1e-12, "duality defect <= 1e-12");
    const auto s24 = symmetry_split_check(rb, rb24);
    const auto s48 = symmetry_split_check(rb, rb48);
    const auto sou = symmetry_split_check(ou, coarse);
    const double sym = std::max({s24.sym, s48.sym, sou.sym});
    o.require(sym <= 1e-12, "sym_defect <= 1e-12");
    o.require(sou.antisym <= 1e-12, "ou antisym_defect vanishes");
    const double order = std::log(s24.antisym / s48.antisym) / std::log(47.0 / 23.0);
    o.require(s48.antisym < s24.antisym && order >= 1.5, "rigid_body antisym_defect O(h^2)");
    o.detail << "duality " << num(dual) << "; sym " << num(sym) << "; rigid_body antisym " << num(s24.antisym)
             << " -> " << num(s48.antisym) << " order " << num(order) << "; ";
}

// Random expressions over x1..x3 whose subterms stay inside every function's domain
// on [0.5, 1.5]^3.
std::string random_expression(std::mt19937_64& rng, int depth) {
    std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 9);
    std::uniform_int_distribution<int> var(1, 3);
    std::uniform_real_distribution<double> c(0.25, 2.0);
    auto sub = [&] { return random_expression(rng, depth - 1); };
    switch (pick(rng)) {
    case 0: return "x" + std::to_string(var(rng));
    case 1: return format_double(std::round(c(rng) * 100) / 100);
    case 2: return "(" + sub() + " + " + sub() + ")";
    case 3: return "(" + sub() + " - " + sub() + ")";
    case 4: return sub() + " * " + sub();
    case 5: return "(" + sub() + ") / (1.5 + x" + std::to_string(var(rng)) + "^2)";
    case 6: return "sin(" + sub() + ")";
    case 7: return "exp(0.3 * " + sub() + ")";
    case 8: return "log(1 + (" + sub() + ")^2)";
    default: return "sqrt(x" + std::to_string(var(rng)) + " + " + sub() + "^2)";
    }
}

void parser(Outcome& o) {
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u(0.5, 1.5);
    int round_trips = 0;
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const std::string text = random_expression(rng, 4);
        const auto e = expr::Expression::parse(text, 3);
        const auto back = expr::Expression::parse(e.str(), 3);
        Vec x(3);
        for (auto& v : x) v = u(rng);
        if (expr::equal(e.tree(), back.tree()) && e.value(x) == back.value(x)) ++round_trips;
        const auto dual = e.eval_dual(x, 1);
        for (int k = 0; k < 3; ++k) {
            const double h = 1e-5;
            Vec xp = x, xm = x;
            xp[k] += h;
            xm[k] -= h;
            const double fd = (e.value(xp) - e.value(xm)) / (2 * h);
            const double sym = e.derivative(k + 1).value(x);
            worst = std::max(worst, std::abs(dual.first[k] - fd) / (1 + std::abs(fd)));
            worst = std::max(worst, std::abs(sym - fd) / (1 + std::abs(fd)));
        }
    }
    o.require(round_trips == 50, "all 50 expressions round-trip");
    o.require(worst <= 1e-6, "derivatives match finite differences");
    o.detail << "round trips " << round_trips << "/50, worst derivative mismatch " << num(worst) << "; ";

    const std::vector<std::pair<std::string, std::size_t>> malformed = {
        {"", 0},        {"x1 +", 4},       {"x1 + (x2", 8}, {"2 * * x1", 4}, {"x4", 0},
        {"x0", 0},      {"foo(x1)", 0},    {"sin x1", 4},   {"x1 )", 3},     {"1.2.3", 0},
        {"pow(x1)", 0}, {"x1 $ x2", 3},    {"(", 1},
    };
    int positioned = 0;
    for (const auto& [text, offset] : malformed) {
        try {
            (void)expr::Expression::parse(text, 3);
            o.detail << "'" << text << "' parsed; ";
        } catch (const expr::ParseError& e) {
            if (e.offset() == offset) ++positioned;
            else o.detail << "'" << text << "' at " << e.offset() << " expected " << offset << "; ";
        }
    }
    o.require(positioned == static_cast<int>(malformed.size()), "malformed inputs give positioned errors");
    o.detail << "positioned errors " << positioned << "/" << malformed.size() << "; ";
}

std::map<std::string, std::string> read_dir(const fs::path& dir) {
    std::map<std::string, std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::ifstream in(entry.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        files[entry.path().filename().string()] = ss.str();
    }
    return files;
}

int cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv = {"gsde"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

void reproducibility(Outcome& o) {
    const fs::path root = fs::temp_directory_path() / "gsde_acceptance_repro";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::vector<std::pair<std::string, std::string>> runs = {
        {"verify", "[system]\nkind = rigid_body\ninertia = 1, 2, 3\n[verify]\nn_points = 200\n"},
        {"simulate", "[system]\nkind = circle_diffusion\n[simulate]\ndt = 1e-2\nhorizon = 1\nn_traj = 64\n"
                     "seed = 3\nrecord_every = 10\nx0 = 1, 0\n[output]\nplots = true\n"},
        {"stationarity", "[system]\nkind = ou_gradient\ndim = 2\n[stationarity]\nn_bumps = 4\nnodes = 24\n"},
        {"fokker-planck", "[system]\nkind = ou_gradient\ndim = 2\n[fokker_planck]\nnodes = 32\nbox = -4 4; -4 4\n"
                          "evolve_steps = 20\nexport_csv = true\n[output]\nplots = true\n"},
        {"transform-check", "[system]\nkind = damped_oscillator\n[transform]\nforward = x1; x2; x3 + x1^2\n"
                            "inverse = x1; x2; x3 - x1^2\nn_points = 20\n"},
        {"sweep-temperature", "[system]\nkind = damped_oscillator\n[sweep]\nT_list = 0.1, 0.01, 0\ndt = 1e-2\n"
                              "horizon = 0.5\nn_traj = 64\nx0 = 1, 0.5, 1\n[output]\nplots = true\n"},
    };
    for (const auto& [cmd, text] : runs) {
        const fs::path dir = root / cmd;
        fs::create_directories(dir);
        const fs::path cfg = dir / "input.ini";
        std::ofstream(cfg) << text;
        const int c1 = cli({cmd, "--config", cfg.string(), "--out", (dir / "a").string(), "--workers", "1"});
        const fs::path echo = dir / "a" / "config.resolved.ini";
        const int c2 = cli({cmd, "--config", echo.string(), "--out", (dir / "b").string(), "--workers", "4"});
        const bool same = c1 == c2 && c1 != 2 && read_dir(dir / "a") == read_dir(dir / "b");
        o.require(same, cmd + " rerun from echo is byte-identical");
        o.detail << cmd << (same ? " identical" : " DIFFERENT") << " (" << read_dir(dir / "a").size() << " files); ";
    }
    fs::remove_all(root);
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* title;
        double budget_s;
        std::function<void(Outcome&)> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "axiom suite", 10, axiom_suite},
        {2, "energy conservation", 60, energy_conservation},
        {3, "stationarity", 60, stationarity},
        {4, "Ito/Stratonovich consistency", 120, ito_stratonovich},
        {5, "stationary law", 120, stationary_law},
        {6, "coordinate invariance", 30, coordinate_invariance},
        {7, "zero-noise limit", 120, zero_noise},
        {8, "Fokker-Planck grid", 120, fokker_planck},
        {9, "parser", 5, parser},
        {10, "reproducibility", 120, reproducibility},
    };
    set_warning_handler([](const std::string&) {});
    int failed = 0;
    for (const auto& c : criteria) {
        Outcome o;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.run(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail << "exception: " << e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        o.require(secs <= c.budget_s, "runtime within " + num(c.budget_s) + " s");
        if (!o.pass) ++failed;
        std::cout << "CRITERION " << c.id << " " << (o.pass ? "PASS" : "FAIL") << " [" << c.title << ", "
                  << num(secs) << " s] " << o.detail.str() << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
