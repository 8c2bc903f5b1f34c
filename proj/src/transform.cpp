#include "gsde/transform.hpp"

#include "gsde/generator.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <random>

namespace gsde {

using expr::NodePtr;

namespace {

constexpr double kRoundTripTol = 1e-10;

Vec eval_all(const std::vector<expr::Expression>& es, const Vec& x) {
    Vec out(static_cast<Eigen::Index>(es.size()));
    for (std::size_t i = 0; i < es.size(); ++i) out[static_cast<Eigen::Index>(i)] = es[i].value(x);
    return out;
}

Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x) {
    const int d = static_cast<int>(x.size());
    Mat D(d, d);
    Vec xp = x, xm = x;
    for (int k = 0; k < d; ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(x[k]));
        xp[k] = x[k] + h;
        xm[k] = x[k] - h;
        D.col(k) = (f(xp) - f(xm)) / (2.0 * h);
        xp[k] = xm[k] = x[k];
    }
    return D;
}

double double_uniform(std::mt19937_64& rng, double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
}

} // namespace

// ---------------------------------------------------------------------------
// Diffeo

Diffeo Diffeo::identity(int dim) {
    std::vector<std::string> id;
    for (int i = 1; i <= dim; ++i) id.push_back("x" + std::to_string(i));
    return from_expressions(dim, id, id, {}, "identity");
}

Diffeo Diffeo::linear(const Mat& A, const Vec& b) {
    const int d = static_cast<int>(A.rows());
    if (A.cols() != d) throw ConfigError("linear map needs a square matrix");
    const Vec shift = b.size() == 0 ? Vec::Zero(d) : b;
    if (shift.size() != d) throw ConfigError("linear map offset has the wrong dimension");
    Eigen::FullPivLU<Mat> lu(A);
    if (!lu.isInvertible()) throw StructureError("linear map is singular", Vec::Zero(d), A);
    const Mat Ai = lu.inverse();
    const Vec bi = -Ai * shift;
    auto build = [d](const Mat& M, const Vec& c) {
        std::vector<expr::Expression> out;
        for (int i = 0; i < d; ++i) {
            NodePtr t = expr::constant(c[i]);
            for (int j = 0; j < d; ++j)
                if (M(i, j) != 0.0) t = expr::add(t, expr::mul(expr::constant(M(i, j)), expr::variable(j + 1)));
            out.emplace_back(t, d);
        }
        return out;
    };
    Diffeo phi;
    phi.name_ = "linear";
    phi.dim_ = d;
    phi.analytic_ = true;
    phi.fwd_ = build(A, shift);
    phi.inv_ = build(Ai, bi);
    for (const auto& f : phi.fwd_)
        for (int k = 1; k <= d; ++k) phi.jac_.push_back(f.derivative(k));
    return phi;
}

Diffeo Diffeo::shear() {
    return from_expressions(3, {"x1", "x2", "x3 + x1^2"}, {"x1", "x2", "x3 - x1^2"}, {}, "shear");
}

Diffeo Diffeo::from_expressions(int dim, const std::vector<std::string>& forward,
                                const std::vector<std::string>& inverse, const std::vector<std::string>& jacobian,
                                std::string name) {
    if (dim < 1) throw ConfigError("diffeomorphism dimension must be positive");
    if (static_cast<int>(forward.size()) != dim)
        throw ConfigError("forward map needs " + std::to_string(dim) + " components, got " +
                          std::to_string(forward.size()));
    if (static_cast<int>(inverse.size()) != dim)
        throw ConfigError("inverse map needs " + std::to_string(dim) + " components, got " +
                          std::to_string(inverse.size()));
    if (!jacobian.empty() && static_cast<int>(jacobian.size()) != dim * dim)
        throw ConfigError("jacobian needs " + std::to_string(dim * dim) + " row-major entries, got " +
                          std::to_string(jacobian.size()));
    Diffeo phi;
    phi.name_ = std::move(name);
    phi.dim_ = dim;
    phi.analytic_ = true;
    for (const auto& s : forward) phi.fwd_.push_back(expr::Expression::parse(s, dim));
    for (const auto& s : inverse) phi.inv_.push_back(expr::Expression::parse(s, dim));
    if (jacobian.empty()) {
        for (const auto& f : phi.fwd_)
            for (int k = 1; k <= dim; ++k) phi.jac_.push_back(f.derivative(k));
    } else {
        for (const auto& s : jacobian) phi.jac_.push_back(expr::Expression::parse(s, dim));
    }
    return phi;
}

Diffeo Diffeo::from_functions(int dim, MapFn forward, MapFn inverse, JacobianFn jacobian, std::string name) {
    if (!forward || !inverse) throw ConfigError("diffeomorphism needs forward and inverse maps");
    Diffeo phi;
    phi.name_ = std::move(name);
    phi.dim_ = dim;
    phi.analytic_ = static_cast<bool>(jacobian);
    phi.fwd_fn_ = std::move(forward);
    phi.inv_fn_ = std::move(inverse);
    phi.jac_fn_ = std::move(jacobian);
    return phi;
}

Vec Diffeo::forward(const Vec& x) const {
    if (x.size() != dim_) throw ConfigError("point dimension does not match the diffeomorphism");
    try {
        return fwd_.empty() ? fwd_fn_(x) : eval_all(fwd_, x);
    } catch (const expr::DomainError& e) {
        throw EvaluationError(std::string("forward map: ") + e.what(), x);
    }
}

Vec Diffeo::inverse(const Vec& y) const {
    if (y.size() != dim_) throw ConfigError("point dimension does not match the diffeomorphism");
    try {
        return inv_.empty() ? inv_fn_(y) : eval_all(inv_, y);
    } catch (const expr::DomainError& e) {
        throw EvaluationError(std::string("inverse map: ") + e.what(), y);
    }
}

Mat Diffeo::jacobian(const Vec& x) const {
    if (!jac_.empty()) {
        Mat D(dim_, dim_);
        try {
            for (int a = 0; a < dim_; ++a)
                for (int k = 0; k < dim_; ++k) D(a, k) = jac_[static_cast<std::size_t>(a * dim_ + k)].value(x);
        } catch (const expr::DomainError& e) {
            throw EvaluationError(std::string("jacobian: ") + e.what(), x);
        }
        return D;
    }
    if (jac_fn_) return jac_fn_(x);
    return fd_jacobian([this](const Vec& z) { return forward(z); }, x);
}

std::vector<Mat> Diffeo::second_derivatives(const Vec& x) const {
    std::vector<Mat> H(dim_);
    if (!fwd_.empty()) {
        for (int a = 0; a < dim_; ++a) H[a] = fwd_[a].eval_dual(x, 2).second;
        return H;
    }
    for (auto& h : H) h.resize(dim_, dim_);
    Vec xp = x, xm = x;
    for (int j = 0; j < dim_; ++j) {
        const double h = 1e-5 * std::max(1.0, std::abs(x[j]));
        xp[j] = x[j] + h;
        xm[j] = x[j] - h;
        const Mat dD = (jacobian(xp) - jacobian(xm)) / (2.0 * h);
        for (int a = 0; a < dim_; ++a) H[a].col(j) = dD.row(a).transpose();
        xp[j] = xm[j] = x[j];
    }
    for (auto& h : H) h = 0.5 * (h + h.transpose()).eval();
    return H;
}

double Diffeo::validate(const std::vector<Vec>& points) const {
    double worst = 0.0;
    int sign = 0;
    for (const auto& x : points) {
        const Vec back = inverse(forward(x));
        const double err = (back - x).lpNorm<Eigen::Infinity>();
        worst = std::max(worst, err);
        if (!(err <= kRoundTripTol))
            throw StructureError("inverse(forward(x)) differs from x by " + std::to_string(err), x, Mat());
        const Mat D = jacobian(x);
        const double det = D.determinant();
        if (!(std::abs(det) > 1e-12)) throw StructureError("Jacobian determinant vanishes", x, D);
        const int s = det > 0 ? 1 : -1;
        if (sign != 0 && s != sign) throw StructureError("Jacobian determinant changes sign", x, D);
        sign = s;
        if (!jac_.empty() && !fwd_.empty()) {
            const Mat Dfd = fd_jacobian([this](const Vec& z) { return forward(z); }, x);
            if ((Dfd - D).norm() > 1e-5 * (1.0 + D.norm()))
                throw StructureError("declared Jacobian does not match the forward map", x, D);
        }
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Pushforward

namespace {

/// Everything needed to push components forward through one map.
class Pusher {
public:
    Pusher(const Diffeo& phi, const Vec& reference) : phi_(phi), d_(phi.dim()) {
        sign_ = phi.jacobian(reference).determinant() >= 0 ? 1.0 : -1.0;
        symbolic_ = phi.symbolic() && d_ <= 6;
        if (symbolic_) {
            for (const auto& e : phi.inverse_expressions()) psi_.push_back(e.tree());
            D_.resize(static_cast<std::size_t>(d_ * d_));
            for (int i = 0; i < d_ * d_; ++i)
                D_[i] = expr::substitute(phi.jacobian_expressions()[i].tree(), psi_);
            det_ = expr::mul(expr::constant(sign_), determinant(D_, d_));
        }
    }

    ScalarField scalar(const ScalarField& f) const {
        if (symbolic_ && f.expression())
            return ScalarField::from_expression(expr::Expression(expr::substitute(f.expression()->tree(), psi_), d_));
        const Diffeo phi = phi_;
        return ScalarField::from_functions(
            d_, [phi, f](const Vec& y) { return f.value(phi.inverse(y)); },
            [phi, f](const Vec& y) -> Vec {
                const Vec x = phi.inverse(y);
                return phi.jacobian(x).transpose().lu().solve(f.gradient(x));
            });
    }

    MatrixField matrix(const MatrixField& M) const {
        if (M.is_zero()) return MatrixField::zero(d_, M.tag());
        if (symbolic_ && !M.expressions().empty()) {
            std::vector<NodePtr> m;
            for (const auto& e : M.expressions()) m.push_back(expr::substitute(e.tree(), psi_));
            std::vector<expr::Expression> out;
            for (int a = 0; a < d_; ++a)
                for (int b = 0; b < d_; ++b) {
                    NodePtr t = expr::constant(0.0);
                    for (int i = 0; i < d_; ++i) {
                        if (zero(D(a, i))) continue;
                        for (int j = 0; j < d_; ++j) {
                            const NodePtr& mij = m[static_cast<std::size_t>(i * d_ + j)];
                            if (zero(mij) || zero(D(b, j))) continue;
                            t = expr::add(t, expr::mul(expr::mul(D(a, i), mij), D(b, j)));
                        }
                    }
                    out.emplace_back(t, d_);
                }
            return MatrixField::from_expressions(std::move(out), d_, M.tag());
        }
        const Diffeo phi = phi_;
        return MatrixField::from_functions(
            d_,
            [phi, M](const Vec& y) -> Mat {
                const Vec x = phi.inverse(y);
                const Mat Dp = phi.jacobian(x);
                return Dp * M.value(x) * Dp.transpose();
            },
            {}, M.tag());
    }

    VectorField vector(const VectorField& v) const {
        if (symbolic_ && !v.expressions().empty()) {
            std::vector<NodePtr> c;
            for (const auto& e : v.expressions()) c.push_back(expr::substitute(e.tree(), psi_));
            std::vector<expr::Expression> out;
            for (int a = 0; a < d_; ++a) {
                NodePtr t = expr::constant(0.0);
                for (int i = 0; i < d_; ++i)
                    if (!zero(D(a, i)) && !zero(c[i])) t = expr::add(t, expr::mul(D(a, i), c[i]));
                out.emplace_back(t, d_);
            }
            return VectorField::from_expressions(std::move(out));
        }
        const Diffeo phi = phi_;
        return VectorField::from_functions(d_, [phi, v](const Vec& y) -> Vec {
            const Vec x = phi.inverse(y);
            return phi.jacobian(x) * v.value(x);
        });
    }

    VolumeDensity density(const VolumeDensity& nu) const {
        const ScalarField& m = nu.density();
        if (symbolic_ && m.expression()) {
            const NodePtr t = expr::div(expr::substitute(m.expression()->tree(), psi_), det_);
            return VolumeDensity(ScalarField::from_expression(expr::Expression(t, d_)));
        }
        const Diffeo phi = phi_;
        return VolumeDensity(ScalarField::from_functions(d_, [phi, m](const Vec& y) {
            const Vec x = phi.inverse(y);
            return m.value(x) / std::abs(phi.jacobian(x).determinant());
        }));
    }

    std::optional<Frame> frame(const std::optional<Frame>& f) const {
        if (!f || f->source() != Frame::Source::UserSupplied) return std::nullopt;
        std::vector<VectorField> out;
        for (const auto& v : f->fields()) out.push_back(vector(v));
        return Frame::user_supplied(d_, std::move(out));
    }

private:
    static bool zero(const NodePtr& n) {
        double c = 1.0;
        return expr::is_constant(n, &c) && c == 0.0;
    }

    const NodePtr& D(int a, int i) const { return D_[static_cast<std::size_t>(a * d_ + i)]; }

    static NodePtr determinant(const std::vector<NodePtr>& M, int n) {
        if (n == 1) return M[0];
        NodePtr t = expr::constant(0.0);
        for (int c = 0; c < n; ++c) {
            if (zero(M[c])) continue;
            std::vector<NodePtr> minor;
            for (int r = 1; r < n; ++r)
                for (int k = 0; k < n; ++k)
                    if (k != c) minor.push_back(M[static_cast<std::size_t>(r * n + k)]);
            const NodePtr term = expr::mul(M[c], determinant(minor, n - 1));
            t = c % 2 == 0 ? expr::add(t, term) : expr::sub(t, term);
        }
        return t;
    }

    const Diffeo& phi_;
    int d_;
    double sign_ = 1.0;
    bool symbolic_ = false;
    std::vector<NodePtr> psi_;
    std::vector<NodePtr> D_;
    NodePtr det_;
};

Vec box_center(const std::vector<Interval>& box) {
    Vec c(static_cast<Eigen::Index>(box.size()));
    for (std::size_t i = 0; i < box.size(); ++i) c[static_cast<Eigen::Index>(i)] = 0.5 * (box[i].lo + box[i].hi);
    return c;
}

std::vector<Interval> image_bounds(const Diffeo& phi, const std::vector<Interval>& box) {
    const int d = static_cast<int>(box.size());
    const int per_axis = std::max(3, static_cast<int>(std::floor(std::pow(4096.0, 1.0 / d))));
    std::vector<Interval> out(d, Interval{INFINITY, -INFINITY});
    std::vector<int> idx(d, 0);
    Vec x(d);
    for (;;) {
        for (int i = 0; i < d; ++i)
            x[i] = box[i].lo + box[i].width() * static_cast<double>(idx[i]) / (per_axis - 1);
        const Vec y = phi.forward(x);
        for (int i = 0; i < d; ++i) {
            out[i].lo = std::min(out[i].lo, y[i]);
            out[i].hi = std::max(out[i].hi, y[i]);
        }
        int k = 0;
        while (k < d && ++idx[k] == per_axis) idx[k++] = 0;
        if (k == d) break;
    }
    return out;
}

} // namespace

GenericSystem pushforward_system(const GenericSystem& sys, const Diffeo& phi) {
    const int d = sys.dim();
    if (phi.dim() != d) throw ConfigError("diffeomorphism dimension " + std::to_string(phi.dim()) +
                                          " does not match system dimension " + std::to_string(d));
    const auto box = sampling_box(sys.patch);
    const Pusher push(phi, box_center(box));

    GenericSystem out;
    out.name = sys.name + "@" + phi.name();
    out.patch = CoordinatePatch(d, sys.patch.bounds ? std::optional(image_bounds(phi, *sys.patch.bounds))
                                                    : std::nullopt,
                                sys.patch.label.empty() ? phi.name() : sys.patch.label + "@" + phi.name());
    out.J = push.matrix(sys.J);
    out.K = push.matrix(sys.K);
    out.nu = push.density(sys.nu);
    out.E = push.scalar(sys.E);
    out.S = push.scalar(sys.S);
    out.frame = push.frame(sys.frame);
    if (sys.scaling) {
        Scaling sc;
        sc.S_tilde = push.scalar(sys.scaling->S_tilde);
        sc.K_tilde = push.matrix(sys.scaling->K_tilde);
        sc.frame_tilde = push.frame(sys.scaling->frame_tilde);
        sc.active_T = sys.scaling->active_T;
        out.scaling = std::move(sc);
    }
    return out;
}

ScalarField compose(const ScalarField& f_hat, const Diffeo& phi) {
    if (f_hat.expression() && phi.symbolic())
        return ScalarField::from_expression(f_hat.expression()->compose(phi.forward_expressions()));
    return ScalarField::from_functions(
        phi.dim(), [f_hat, phi](const Vec& x) { return f_hat.value(phi.forward(x)); },
        [f_hat, phi](const Vec& x) -> Vec { return phi.jacobian(x).transpose() * f_hat.gradient(phi.forward(x)); },
        [f_hat, phi](const Vec& x) -> Mat {
            const Vec y = phi.forward(x);
            const Mat D = phi.jacobian(x);
            const Vec g = f_hat.gradient(y);
            Mat H = D.transpose() * f_hat.hessian(y) * D;
            const auto H2 = phi.second_derivatives(x);
            for (int a = 0; a < phi.dim(); ++a) H += g[a] * H2[a];
            return H;
        });
}

double generator_equivalence_residual(const GenericSystem& sys, const GenericSystem& sys_hat, const Diffeo& phi,
                                      const ScalarField& f_hat, const Vec& x) {
    const double lhs = generator_L(sys_hat, f_hat, phi.forward(x));
    const double rhs = generator_L(sys, compose(f_hat, phi), x);
    return std::abs(lhs - rhs);
}

double measure_pushforward_residual(const GenericSystem& sys, const GenericSystem& sys_hat, const Diffeo& phi,
                                    const std::vector<Interval>& box, int nodes) {
    const int d = static_cast<int>(box.size());
    if (d != sys.dim()) throw ConfigError("quadrature box has the wrong dimension");
    std::vector<std::vector<double>> xs(d), ws(d);
    for (int i = 0; i < d; ++i) quadrature_rule(QuadratureSpec::Rule::GaussLegendre, box[i], nodes, xs[i], ws[i]);
    std::vector<int> idx(d, 0);
    Vec x(d);
    double lhs = 0.0, rhs = 0.0;
    for (;;) {
        double w = 1.0;
        for (int i = 0; i < d; ++i) {
            x[i] = xs[i][idx[i]];
            w *= ws[i][idx[i]];
        }
        const Vec y = phi.forward(x);
        lhs += w * sys_hat.nu.value(y) * std::exp(sys_hat.S.value(y)) * std::abs(phi.jacobian(x).determinant());
        rhs += w * sys.nu.value(x) * std::exp(sys.S.value(x));
        int k = 0;
        while (k < d && ++idx[k] == nodes) idx[k++] = 0;
        if (k == d) break;
    }
    return std::abs(lhs - rhs) / std::abs(rhs);
}

namespace {

class Worst {
public:
    Worst(std::string name, double tol) {
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

/// c . y + (y - y0)^T Q (y - y0) / 2 + sin(w . y), as an expression.
ScalarField trig_quadratic(const Vec& y0, std::mt19937_64& rng) {
    const int d = static_cast<int>(y0.size());
    NodePtr lin = expr::constant(0.0), quad = expr::constant(0.0), phase = expr::constant(0.0);
    std::vector<NodePtr> shifted;
    for (int i = 0; i < d; ++i) shifted.push_back(expr::sub(expr::variable(i + 1), expr::constant(y0[i])));
    for (int i = 0; i < d; ++i) {
        lin = expr::add(lin, expr::mul(expr::constant(double_uniform(rng, -1, 1)), expr::variable(i + 1)));
        phase = expr::add(phase, expr::mul(expr::constant(double_uniform(rng, -1, 1)), expr::variable(i + 1)));
        for (int j = i; j < d; ++j) {
            const double q = double_uniform(rng, -1, 1) * (i == j ? 0.5 : 1.0);
            quad = expr::add(quad, expr::mul(expr::constant(q), expr::mul(shifted[i], shifted[j])));
        }
    }
    const NodePtr t = expr::add(expr::add(lin, quad), expr::call(expr::Func::Sin, phase));
    return ScalarField::from_expression(expr::Expression(t, d));
}

} // namespace

VerificationReport transform_check(const GenericSystem& sys, const Diffeo& phi, int n_points, std::uint64_t seed,
                                   std::optional<double> tol_opt) {
    if (n_points < 1) throw ConfigError("n_points must be >= 1");
    VerificationReport rep;
    rep.system = sys.name + "@" + phi.name();
    rep.n_points = n_points;
    rep.seed = seed;
    rep.box = sampling_box(sys.patch);
    rep.analytic = sys.analytic() && phi.analytic();
    const double tol = tol_opt ? *tol_opt : (rep.analytic ? 1e-6 : 1e-4);
    const int d = sys.dim();

    const auto points = halton_points(rep.box, n_points, seed);
    Worst t_trip("round_trip", kRoundTripTol);
    for (const auto& x : points) {
        try {
            t_trip.update((phi.inverse(phi.forward(x)) - x).lpNorm<Eigen::Infinity>(), x);
        } catch (const Error& e) {
            if (rep.evaluation_errors++ == 0) rep.first_error = e.what();
        }
    }
    phi.validate({box_center(rep.box)});
    const GenericSystem hat = pushforward_system(sys, phi);

    Worst t_gen("generator_equivalence", tol), t_uni("unimodularity_hat", tol), t_js("non_interaction_JdS_hat", tol),
        t_ke("non_interaction_KdE_hat", tol);
    double narrow = INFINITY;
    for (const auto& iv : sampling_box(hat.patch)) narrow = std::min(narrow, iv.width());
    std::mt19937_64 rng(seed ^ 0x51ed27a3c0ffee11ULL);
    for (const auto& x : points) {
        try {
            const Vec y = phi.forward(x);
            double worst = 0.0;
            worst = std::max(worst, generator_equivalence_residual(sys, hat, phi, trig_quadratic(y, rng), x));
            Bump b;
            b.center = y + Vec::NullaryExpr(d, [&](Eigen::Index) { return double_uniform(rng, -0.05, 0.05); }) *
                               narrow;
            b.radius = 0.25 * narrow;
            b.alpha = double_uniform(rng, 1, 2);
            b.beta = Vec::NullaryExpr(d, [&](Eigen::Index) { return double_uniform(rng, -1, 1); });
            worst = std::max(worst, generator_equivalence_residual(sys, hat, phi, b.field(), x));
            t_gen.update(worst, x);

            if (unimodularity_residual(sys, x).lpNorm<Eigen::Infinity>() <= tol)
                t_uni.update(unimodularity_residual(hat, y).lpNorm<Eigen::Infinity>(), y);
            const auto [js, ke] = non_interaction_residual(hat, y);
            t_js.update(js, y);
            t_ke.update(ke, y);
        } catch (const Error& e) {
            if (rep.evaluation_errors++ == 0) rep.first_error = e.what();
        }
    }
    for (Worst* t : {&t_trip, &t_gen, &t_uni, &t_js, &t_ke}) rep.checks.push_back(t->finish());
    if (sys.patch.bounds) {
        Worst t_mass("measure_pushforward", tol);
        try {
            t_mass.update(measure_pushforward_residual(sys, hat, phi, *sys.patch.bounds), box_center(rep.box));
        } catch (const Error& e) {
            if (rep.evaluation_errors++ == 0) rep.first_error = e.what();
        }
        rep.checks.push_back(t_mass.finish());
    }
    CheckResult ev;
    ev.name = "evaluation_errors";
    ev.residual = rep.evaluation_errors;
    ev.tolerance = 0.0;
    ev.pass = rep.evaluation_errors == 0;
    rep.checks.push_back(ev);
    return rep;
}

} // namespace gsde
