#include "gsde/verifier.hpp"

#include "gsde/frames.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

namespace gsde {

bool VerificationReport::passed() const {
    for (const auto& c : checks)
        if (!c.pass) return false;
    return true;
}

const CheckResult* VerificationReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

namespace {

/// {G,H} gradient: Hess G J dH + dG^T (d_k J) dH + Hess H J^T dG.
Vec bracket_gradient(const Mat& J, const std::vector<Mat>& dJ, const Vec& gG, const Mat& hG, const Vec& gH,
                     const Mat& hH) {
    Vec out = hG * (J * gH) + hH * (J.transpose() * gG);
    for (std::size_t k = 0; k < dJ.size(); ++k) out[static_cast<Eigen::Index>(k)] += gG.dot(dJ[k] * gH);
    return out;
}

struct Quadratic {
    double c = 0.0;
    Vec b;
    Mat A;   // symmetric

    ScalarField field() const {
        Quadratic q = *this;
        const int d = static_cast<int>(b.size());
        return ScalarField::from_functions(
            d, [q](const Vec& x) { return q.c + q.b.dot(x) + 0.5 * x.dot(q.A * x); },
            [q](const Vec& x) -> Vec { return q.b + q.A * x; }, [q](const Vec&) -> Mat { return q.A; });
    }
};

Quadratic random_quadratic(int d, std::mt19937_64& rng) {
    auto u = [&] { return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0; };
    Quadratic q;
    q.c = u();
    q.b.resize(d);
    for (int i = 0; i < d; ++i) q.b[i] = u();
    q.A.resize(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) q.A(i, j) = q.A(j, i) = u();
    return q;
}

ScalarField coordinate(int d, int i) {
    return ScalarField::from_expression(expr::Expression(expr::variable(i + 1), d));
}

class Tracker {
public:
    Tracker(std::string name, double tol) {
        r_.name = std::move(name);
        r_.tolerance = tol;
    }
    void update(double v, const Vec& x) {
        if (std::isnan(v)) v = INFINITY;
        if (r_.argmax.size() == 0 || v > r_.residual) {
            r_.residual = v;
            r_.argmax = x;
        }
    }
    CheckResult finish() {
        r_.pass = r_.residual <= r_.tolerance;
        return r_;
    }

private:
    CheckResult r_;
};

} // namespace

double jacobi_defect(const MatrixField& J, const Vec& x, const ScalarField& F, const ScalarField& G,
                     const ScalarField& H) {
    Mat j;
    std::vector<Mat> dJ;
    J.evaluate(x, j, &dJ);
    const Vec gF = F.gradient(x), gG = G.gradient(x), gH = H.gradient(x);
    const Mat hF = F.hessian(x), hG = G.hessian(x), hH = H.hessian(x);
    const double a = gF.dot(j * bracket_gradient(j, dJ, gG, hG, gH, hH));
    const double b = gG.dot(j * bracket_gradient(j, dJ, gH, hH, gF, hF));
    const double c = gH.dot(j * bracket_gradient(j, dJ, gF, hF, gG, hG));
    const double r = a + b + c;
    if (!std::isfinite(r)) throw EvaluationError("non-finite Jacobi defect", x);
    return r;
}

std::pair<double, double> non_interaction_residual(const GenericSystem& sys, const Vec& x) {
    const double js = (sys.J.value(x) * sys.S.gradient(x)).norm();
    const double ke = (sys.K.value(x) * sys.E.gradient(x)).norm();
    return {js, ke};
}

Vec unimodularity_residual(const GenericSystem& sys, const Vec& x) {
    const int d = sys.dim();
    Mat J;
    std::vector<Mat> dJ;
    sys.J.evaluate(x, J, &dJ);
    Vec out = J.transpose() * sys.nu.log_gradient(x);
    for (int j = 0; j < d; ++j) out += dJ[j].row(j).transpose();
    if (!out.allFinite()) throw EvaluationError("non-finite unimodularity residual", x);
    return out;
}

double casimir_multiple_check(const GenericSystem& sys, const VolumeDensity& m2, const std::vector<Vec>& samples) {
    double worst = 0.0;
    for (const auto& x : samples) {
        Vec l1, l2;
        const double v1 = sys.nu.value_log_gradient(x, l1);
        const double v2 = m2.value_log_gradient(x, l2);
        const double ratio = v2 / v1;
        if (!std::isfinite(ratio)) throw EvaluationError("density ratio is not finite", x);
        const Vec grad = ratio * (l2 - l1);
        worst = std::max(worst, (sys.J.value(x) * grad).norm());
    }
    return worst;
}

std::vector<Vec> halton_points(const std::vector<Interval>& box, int count, std::uint64_t seed) {
    static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71};
    const int d = static_cast<int>(box.size());
    if (d > 20) throw ConfigError("halton sampling supports at most 20 dimensions");
    std::mt19937_64 rng(seed);
    std::vector<double> shift(d);
    for (auto& s : shift) s = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    std::vector<Vec> pts;
    pts.reserve(count);
    for (int n = 1; n <= count; ++n) {
        Vec x(d);
        for (int a = 0; a < d; ++a) {
            double f = 1.0, r = 0.0;
            for (int i = n; i > 0; i /= primes[a]) {
                f /= primes[a];
                r += f * (i % primes[a]);
            }
            double u = r + shift[a];
            u -= std::floor(u);
            x[a] = box[a].lo + u * box[a].width();
        }
        pts.push_back(std::move(x));
    }
    return pts;
}

VerificationReport verify_system(const GenericSystem& sys, int n_points, std::uint64_t seed,
                                 std::optional<double> tol_opt) {
    if (n_points < 1) throw ConfigError("verify: n_points must be >= 1");
    const int d = sys.dim();
    VerificationReport rep;
    rep.system = sys.name;
    rep.n_points = n_points;
    rep.seed = seed;
    rep.box = sampling_box(sys.patch);
    rep.analytic = sys.analytic();
    const double tol = tol_opt.value_or(rep.analytic ? 1e-8 : 1e-4);

    Tracker t_anti("J_antisymmetry", tol), t_sym("K_symmetry", tol), t_psd("K_psd", tol), t_jac("jacobi", tol),
        t_js("non_interaction_JdS", tol), t_ke("non_interaction_KdE", tol), t_uni("unimodularity", tol);
    std::optional<Tracker> t_frame, t_horiz, t_scale;
    const bool user_frame = sys.frame && sys.frame->source() == Frame::Source::UserSupplied;
    if (user_frame) {
        t_frame.emplace("frame_reconstruction", tol);
        t_horiz.emplace("frame_horizontality", tol);
    }
    if (sys.scaling) t_scale.emplace("scaling_consistency", tol);

    std::vector<ScalarField> coords;
    for (int i = 0; i < d; ++i) coords.push_back(coordinate(d, i));
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);

    const auto points = halton_points(rep.box, n_points, seed);
    for (const auto& x : points) {
        try {
            const Mat J = sys.J.value(x);
            const Mat K = sys.K.value(x);
            t_anti.update((J + J.transpose()).norm(), x);
            t_sym.update((K - K.transpose()).norm(), x);
            Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (K + K.transpose()), Eigen::EigenvaluesOnly);
            t_psd.update(std::max(0.0, -es.eigenvalues().minCoeff()), x);

            double jac = 0.0;
            for (int a = 0; a < d; ++a)
                for (int b = a + 1; b < d; ++b)
                    for (int c = b + 1; c < d; ++c)
                        jac = std::max(jac, std::abs(jacobi_defect(sys.J, x, coords[a], coords[b], coords[c])));
            for (int t = 0; t < 5; ++t) {
                auto F = random_quadratic(d, rng).field();
                auto G = random_quadratic(d, rng).field();
                auto H = random_quadratic(d, rng).field();
                jac = std::max(jac, std::abs(jacobi_defect(sys.J, x, F, G, H)));
            }
            t_jac.update(jac, x);

            auto [js, ke] = non_interaction_residual(sys, x);
            t_js.update(js, x);
            t_ke.update(ke, x);
            t_uni.update(unimodularity_residual(sys, x).cwiseAbs().maxCoeff(), x);
            if (user_frame) {
                t_frame->update(frame_reconstruction_error(*sys.frame, sys.K, x), x);
                t_horiz->update(horizontality_residual(sys, *sys.frame, x), x);
            }
            if (t_scale) t_scale->update(scaling_residual(sys, {x}), x);
        } catch (const Error& e) {
            if (rep.evaluation_errors++ == 0) rep.first_error = e.what();
        }
    }
    for (Tracker* t : {&t_anti, &t_sym, &t_psd, &t_jac, &t_js, &t_ke, &t_uni}) rep.checks.push_back(t->finish());
    if (t_frame) rep.checks.push_back(t_frame->finish());
    if (t_horiz) rep.checks.push_back(t_horiz->finish());
    if (t_scale) rep.checks.push_back(t_scale->finish());
    CheckResult ev;
    ev.name = "evaluation_errors";
    ev.residual = rep.evaluation_errors;
    ev.tolerance = 0.0;
    ev.pass = rep.evaluation_errors == 0;
    rep.checks.push_back(ev);
    return rep;
}

} // namespace gsde
