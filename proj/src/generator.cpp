#include "gsde/generator.hpp"

#include "gsde/frames.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace gsde {

namespace {

/// Neumaier-compensated running sum.
struct Accumulator {
    double sum = 0.0;
    double comp = 0.0;
    void add(double v) {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v))
            comp += (sum - t) + v;
        else
            comp += (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

double apply(const GeneratorCoefficients& c, const Vec& grad, const Mat& hess) {
    return c.drift.dot(grad) + (c.K.cwiseProduct(hess)).sum();
}

/// Tensor-product iteration over quadrature nodes.
template <class F>
void for_each_node(const QuadratureSpec& quad, F&& body) {
    const int d = static_cast<int>(quad.box.size());
    if (static_cast<int>(quad.nodes.size()) != d) throw ConfigError("quadrature nodes do not match the box dimension");
    std::vector<std::vector<double>> xs(d), ws(d);
    for (int a = 0; a < d; ++a) {
        if (quad.nodes[a] < 1) throw ConfigError("quadrature needs at least one node per axis");
        quadrature_rule(quad.rule, quad.box[a], quad.nodes[a], xs[a], ws[a]);
    }
    std::vector<int> idx(d, 0);
    Vec x(d);
    for (;;) {
        double w = 1.0;
        for (int a = 0; a < d; ++a) {
            x[a] = xs[a][idx[a]];
            w *= ws[a][idx[a]];
        }
        body(x, w);
        int a = 0;
        while (a < d && ++idx[a] == quad.nodes[a]) idx[a++] = 0;
        if (a == d) break;
    }
}

void require_inside(const Bump& b, const std::vector<Interval>& box, const char* what) {
    for (std::size_t a = 0; a < box.size(); ++a)
        if (b.center[a] - b.radius < box[a].lo || b.center[a] + b.radius > box[a].hi)
            throw ConfigError(std::string(what) + ": a test-function support extends outside the box");
}

} // namespace

void generator_coefficients(const GenericSystem& sys, const Vec& x, GeneratorCoefficients& out,
                            bool omit_divergence) {
    const int d = sys.dim();
    Vec gE, gS, lg;
    Mat J;
    std::vector<Mat> dK;
    out.E = sys.E.value_gradient(x, gE);
    out.S = sys.S.value_gradient(x, gS);
    out.m = sys.nu.value_log_gradient(x, lg);
    sys.J.evaluate(x, J, nullptr);
    sys.K.evaluate(x, out.K, omit_divergence ? nullptr : &dK);
    out.hamiltonian = J * gE;
    out.drift = out.hamiltonian + out.K * gS;
    if (!omit_divergence) {
        for (int k = 0; k < d; ++k) out.drift += dK[k].col(k);
        out.drift += out.K * lg;
    }
}

double sub_laplacian(const GenericSystem& sys, const ScalarField& f, const Vec& x) {
    Mat K;
    std::vector<Mat> dK;
    sys.K.evaluate(x, K, &dK);
    Vec div = K * sys.nu.log_gradient(x);
    for (int k = 0; k < sys.dim(); ++k) div += dK[k].col(k);
    const double r = div.dot(f.gradient(x)) + K.cwiseProduct(f.hessian(x)).sum();
    if (!std::isfinite(r)) throw EvaluationError("non-finite sub-Laplacian", x);
    return r;
}

double sub_laplacian_frame(const GenericSystem& sys, const Frame& frame, const ScalarField& f, const Vec& x) {
    Mat A;
    std::vector<Mat> jac;
    frame.evaluate(x, A, &jac);
    const Vec g = f.gradient(x);
    const Mat H = f.hessian(x);
    const Vec lg = sys.nu.log_gradient(x);
    double r = 0.0;
    for (int i = 0; i < frame.rank(); ++i) {
        const Vec a = A.col(i);
        // A_i(A_i f) = a^T H a + (Da a) . df; A_0 f adds div_nu(A_i) a . df.
        r += a.dot(H * a) + (jac[i] * a).dot(g) + (jac[i].trace() + lg.dot(a)) * a.dot(g);
    }
    return r;
}

GeneratorParts generator_parts(const GenericSystem& sys, const ScalarField& f, const Vec& x) {
    GeneratorParts p;
    const Vec g = f.gradient(x);
    p.antisymmetric = (sys.J.value(x) * sys.E.gradient(x)).dot(g);
    p.symmetric = sub_laplacian(sys, f, x) + (sys.K.value(x) * sys.S.gradient(x)).dot(g);
    p.total = p.antisymmetric + p.symmetric;
    return p;
}

double generator_L(const GenericSystem& sys, const ScalarField& f, const Vec& x) {
    return generator_parts(sys, f, x).total;
}

double adjoint_Lstar(const GenericSystem& sys, const ScalarField& f, const Vec& x) {
    auto p = generator_parts(sys, f, x);
    return -p.antisymmetric + p.symmetric;
}

// ---------------------------------------------------------------------------

bool Bump::supports(const Vec& x) const { return ((x - center) / radius).squaredNorm() < 1.0; }

double Bump::value(const Vec& x) const {
    const Vec u = (x - center) / radius;
    const double s = 1.0 - u.squaredNorm();
    if (s <= 0.0) return 0.0;
    return amplitude * (alpha + beta.dot(u)) * std::pow(s, power);
}

bool Bump::jet(const Vec& x, double& v, Vec& grad, Mat& hess) const {
    const int d = static_cast<int>(center.size());
    const Vec u = (x - center) / radius;
    const double s = 1.0 - u.squaredNorm();
    grad.setZero(d);
    hess.setZero(d, d);
    if (s <= 0.0) {
        v = 0.0;
        return false;
    }
    const double p = power;
    const double sp = std::pow(s, power);
    const double sp1 = power >= 1 ? std::pow(s, power - 1) : 0.0;
    const double sp2 = power >= 2 ? std::pow(s, power - 2) : 0.0;
    const double poly = alpha + beta.dot(u);
    v = amplitude * poly * sp;
    // derivatives in u
    const Vec ds = -2.0 * p * sp1 * u;   // d(s^p)/du
    grad = amplitude * (beta * sp + poly * ds);
    hess = amplitude * (beta * ds.transpose() + ds * beta.transpose() +
                        poly * (4.0 * p * (p - 1) * sp2 * (u * u.transpose()) - 2.0 * p * sp1 * Mat::Identity(d, d)));
    grad /= radius;
    hess /= radius * radius;
    return true;
}

ScalarField Bump::field() const {
    const Bump b = *this;
    const int d = static_cast<int>(center.size());
    return ScalarField::from_functions(
        d, [b](const Vec& x) { return b.value(x); },
        [b](const Vec& x) -> Vec {
            double v;
            Vec g;
            Mat h;
            b.jet(x, v, g, h);
            return g;
        },
        [b](const Vec& x) -> Mat {
            double v;
            Vec g;
            Mat h;
            b.jet(x, v, g, h);
            return h;
        });
}

TestFunctionBattery make_battery(const std::vector<Interval>& region, int count, std::uint64_t seed, int power) {
    if (count < 1) throw ConfigError("battery needs at least one bump");
    if (power < 2) throw ConfigError("bump power must be >= 2 so that the bumps are twice differentiable");
    const int d = static_cast<int>(region.size());
    double narrow = region[0].width();
    for (const auto& iv : region) narrow = std::min(narrow, iv.width());
    std::mt19937_64 rng(seed);
    auto u01 = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
    TestFunctionBattery bat;
    for (int n = 0; n < count; ++n) {
        Bump b;
        b.power = power;
        b.radius = narrow * (0.1 + 0.15 * u01());
        b.center.resize(d);
        b.beta.resize(d);
        for (int a = 0; a < d; ++a) {
            const double lo = region[a].lo + b.radius, hi = region[a].hi - b.radius;
            b.center[a] = lo + (hi - lo) * u01();
            b.beta[a] = 2.0 * u01() - 1.0;
        }
        b.alpha = 1.0 + u01();
        b.amplitude = 1.0;
        bat.bumps.push_back(std::move(b));
    }
    return bat;
}

void quadrature_rule(QuadratureSpec::Rule rule, const Interval& iv, int n, std::vector<double>& nodes,
                     std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    const double h = iv.width() / n;
    if (rule == QuadratureSpec::Rule::Midpoint) {
        for (int i = 0; i < n; ++i) {
            nodes[i] = iv.lo + (i + 0.5) * h;
            weights[i] = h;
        }
        return;
    }
    // Gauss-Legendre by Newton iteration on P_n.
    for (int i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 1.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = z;
            for (int k = 2; k <= n; ++k) {
                const double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            if (n == 1) p0 = 1.0;
            dp = n * (z * p1 - p0) / (z * z - 1.0);
            const double dz = p1 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16) break;
        }
        nodes[n - 1 - i] = 0.5 * (iv.lo + iv.hi) + 0.5 * iv.width() * z;
        weights[n - 1 - i] = iv.width() / ((1.0 - z * z) * dp * dp);
    }
}

StationarityResult stationarity_residual(const GenericSystem& sys, const TestFunctionBattery& battery,
                                         const expr::Expression& h, const QuadratureSpec& quad,
                                         const StationarityOptions& options) {
    if (h.dim() != 1) throw ConfigError("h must be an expression in one variable (x1 stands for E)");
    if (static_cast<int>(quad.box.size()) != sys.dim()) throw ConfigError("quadrature box dimension mismatch");
    for (const auto& b : battery.bumps) {
        require_inside(b, quad.box, "stationarity");
        if (sys.patch.bounds) require_inside(b, *sys.patch.bounds, "stationarity (patch bounds)");
    }
    const std::size_t nb = battery.bumps.size();
    std::vector<Accumulator> signed_sum(nb), abs_sum(nb);
    GeneratorCoefficients coef;
    Vec grad, hv(1);
    Mat hess;
    double v = 0.0;
    for (std::size_t i = 0; i < nb; ++i) {
        const Bump& b = battery.bumps[i];
        // Lf vanishes off the support, so the nodes are laid over the support box only.
        QuadratureSpec local = quad;
        for (int k = 0; k < sys.dim(); ++k)
            local.box[k] = {std::max(quad.box[k].lo, b.center[k] - b.radius),
                            std::min(quad.box[k].hi, b.center[k] + b.radius)};
        for_each_node(local, [&](const Vec& x, double w) {
            if (!b.jet(x, v, grad, hess)) return;
            generator_coefficients(sys, x, coef, options.omit_divergence);
            hv[0] = coef.E;
            const double weight = w * h.value(hv) * std::exp(coef.S) * coef.m;
            const double lf = apply(coef, grad, hess);
            signed_sum[i].add(lf * weight);
            abs_sum[i].add(std::abs(lf) * weight);
        });
    }
    StationarityResult res;
    res.per_bump.resize(nb);
    for (std::size_t i = 0; i < nb; ++i) {
        const double den = abs_sum[i].value();
        const double r = den == 0.0 ? 0.0 : std::abs(signed_sum[i].value()) / den;
        res.per_bump[i] = r;
        if (res.worst_bump < 0 || r > res.residual) {
            res.residual = r;
            res.worst_bump = static_cast<int>(i);
        }
    }
    return res;
}

std::pair<double, double> split_defects_quadrature(const GenericSystem& sys, const Bump& f, const Bump& g,
                                                   const QuadratureSpec& quad) {
    Accumulator s1, s2, a1, a2, ms, ma;
    GeneratorCoefficients coef;
    Vec gf, gg;
    Mat hf, hg;
    double vf = 0.0, vg = 0.0;
    for_each_node(quad, [&](const Vec& x, double w) {
        if (!f.supports(x) && !g.supports(x)) return;
        generator_coefficients(sys, x, coef);
        const double weight = w * std::exp(coef.S) * coef.m;
        f.jet(x, vf, gf, hf);
        g.jet(x, vg, gg, hg);
        const double laf = coef.hamiltonian.dot(gf), lag = coef.hamiltonian.dot(gg);
        const double lsf = apply(coef, gf, hf) - laf, lsg = apply(coef, gg, hg) - lag;
        s1.add(vf * lsg * weight);
        s2.add(vg * lsf * weight);
        a1.add(vf * lag * weight);
        a2.add(vg * laf * weight);
        ms.add((std::abs(vf * lsg) + std::abs(vg * lsf)) * weight);
        ma.add((std::abs(vf * lag) + std::abs(vg * laf)) * weight);
    });
    const double sym = ms.value() == 0.0 ? 0.0 : std::abs(s1.value() - s2.value()) / ms.value();
    const double anti = ma.value() == 0.0 ? 0.0 : std::abs(a1.value() + a2.value()) / ma.value();
    return {sym, anti};
}

} // namespace gsde
