#include "gsde/fields.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace gsde {

std::string EvaluationError::format_point(const Vec& x) {
    std::ostringstream os;
    os.precision(17);
    os << '(';
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ')';
    return os.str();
}

namespace {

void require_dim(const Vec& x, int dim) {
    if (x.size() != dim)
        throw ConfigError("point of dimension " + std::to_string(x.size()) + " passed to a field on dimension " +
                          std::to_string(dim));
}

void require_finite(double v, const Vec& x, const char* what) {
    if (!std::isfinite(v)) throw EvaluationError(std::string("non-finite ") + what, x);
}

void require_finite(const Eigen::Ref<const Mat>& v, const Vec& x, const char* what) {
    if (!v.allFinite()) throw EvaluationError(std::string("non-finite ") + what, x);
}

// Runs an expression evaluation and turns domain errors into evaluation errors carrying x.
template <class F>
auto guarded(const Vec& x, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const expr::DomainError& e) {
        throw EvaluationError(e.what(), x);
    }
}

} // namespace

// ---------------------------------------------------------------------------

CoordinatePatch::CoordinatePatch(int d, std::optional<std::vector<Interval>> b, std::string l)
    : dim(d), bounds(std::move(b)), label(std::move(l)) {
    if (dim < 1) throw ConfigError("patch dimension must be >= 1");
    if (bounds) {
        if (static_cast<int>(bounds->size()) != dim) throw ConfigError("patch bounds do not match dimension");
        for (const auto& iv : *bounds)
            if (!(iv.lo < iv.hi)) throw ConfigError("patch bounds need lower < upper on every axis");
    }
}

bool CoordinatePatch::contains(const Vec& x) const {
    if (!bounds) return true;
    for (int i = 0; i < dim; ++i)
        if (!(x[i] >= (*bounds)[i].lo && x[i] <= (*bounds)[i].hi)) return false;
    return true;
}

// ---------------------------------------------------------------------------

ScalarField ScalarField::from_expression(expr::Expression e) {
    ScalarField f;
    f.dim_ = e.dim();
    f.expr_ = std::move(e);
    return f;
}

ScalarField ScalarField::parse(std::string_view text, int dim) {
    return from_expression(expr::Expression::parse(text, dim));
}

ScalarField ScalarField::from_functions(int dim, ValueFn value, GradientFn gradient, HessianFn hessian,
                                        double fd_step) {
    if (!value) throw ConfigError("scalar field needs a value evaluator");
    if (!(fd_step > 0)) throw ConfigError("fd_step must be positive");
    ScalarField f;
    f.dim_ = dim;
    f.value_ = std::move(value);
    f.gradient_ = std::move(gradient);
    f.hessian_ = std::move(hessian);
    f.fd_step_ = fd_step;
    return f;
}

ScalarField ScalarField::constant(int dim, double c) { return from_expression(expr::Expression::constant(c, dim)); }

ScalarField ScalarField::with_fd_step(double step) const {
    if (!(step > 0)) throw ConfigError("fd_step must be positive");
    ScalarField f = *this;
    f.fd_step_ = step;
    return f;
}

bool ScalarField::is_constant(double* c) const { return expr_ && expr_->is_constant(c); }

double ScalarField::value(const Vec& x) const {
    require_dim(x, dim_);
    double v = expr_ ? guarded(x, [&] { return expr_->value(x.data()); }) : value_(x);
    require_finite(v, x, "scalar field value");
    return v;
}

double ScalarField::value_gradient(const Vec& x, Vec& grad) const {
    require_dim(x, dim_);
    if (expr_) {
        double buf[1 + 16];
        std::vector<double> heap;
        double* out = buf;
        if (dim_ > 16) {
            heap.resize(1 + dim_);
            out = heap.data();
        }
        guarded(x, [&] { expr_->jet(x.data(), 1, out); });
        grad = Eigen::Map<const Vec>(out + 1, dim_);
        require_finite(out[0], x, "scalar field value");
        require_finite(grad, x, "scalar field gradient");
        return out[0];
    }
    double v = value(x);
    grad = gradient(x);
    return v;
}

Vec ScalarField::gradient(const Vec& x) const {
    require_dim(x, dim_);
    if (expr_) {
        Vec g;
        value_gradient(x, g);
        return g;
    }
    Vec g(dim_);
    if (gradient_) {
        g = gradient_(x);
    } else {
        Vec xp = x;
        for (int k = 0; k < dim_; ++k) {
            const double h = fd_step_;
            xp[k] = x[k] + h;
            const double fp = value_(xp);
            xp[k] = x[k] - h;
            const double fm = value_(xp);
            xp[k] = x[k];
            g[k] = (fp - fm) / (2 * h);
        }
    }
    require_finite(g, x, "scalar field gradient");
    return g;
}

Mat ScalarField::hessian(const Vec& x) const {
    require_dim(x, dim_);
    const int d = dim_;
    Mat H(d, d);
    if (expr_) {
        std::vector<double> buf(1 + d + d * d);
        guarded(x, [&] { expr_->jet(x.data(), 2, buf.data()); });
        H = Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>>(buf.data() + 1 + d, d, d);
    } else if (hessian_) {
        H = hessian_(x);
    } else if (gradient_) {
        const double h = kDefaultFdHessianStep;
        Vec xp = x;
        for (int k = 0; k < d; ++k) {
            xp[k] = x[k] + h;
            Vec gp = gradient_(xp);
            xp[k] = x[k] - h;
            Vec gm = gradient_(xp);
            xp[k] = x[k];
            H.col(k) = (gp - gm) / (2 * h);
        }
        H = 0.5 * (H + H.transpose()).eval();
    } else {
        const double h = kDefaultFdHessianStep;
        Vec xp = x;
        for (int i = 0; i < d; ++i) {
            for (int j = i; j < d; ++j) {
                auto f = [&](double si, double sj) {
                    xp = x;
                    xp[i] += si * h;
                    xp[j] += sj * h;
                    return value_(xp);
                };
                const double v = (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4 * h * h);
                H(i, j) = v;
                H(j, i) = v;
            }
        }
    }
    require_finite(H, x, "scalar field hessian");
    return H;
}

ScalarJet jet_scalar(const ScalarField& field, const Vec& x) {
    ScalarJet j;
    j.value = field.value_gradient(x, j.gradient);
    return j;
}

// ---------------------------------------------------------------------------

VectorField VectorField::from_expressions(std::vector<expr::Expression> components) {
    if (components.empty()) throw ConfigError("vector field needs at least one component");
    const int d = components.front().dim();
    if (static_cast<int>(components.size()) != d)
        throw ConfigError("vector field needs one component per coordinate");
    for (const auto& c : components)
        if (c.dim() != d) throw ConfigError("vector field components disagree on dimension");
    VectorField v;
    v.dim_ = d;
    v.components_ = std::move(components);
    return v;
}

VectorField VectorField::from_functions(int dim, ValueFn value, JacobianFn jacobian, double fd_step) {
    if (!value) throw ConfigError("vector field needs a value evaluator");
    VectorField v;
    v.dim_ = dim;
    v.value_ = std::move(value);
    v.jacobian_ = std::move(jacobian);
    v.fd_step_ = fd_step;
    return v;
}

Vec VectorField::value(const Vec& x) const {
    require_dim(x, dim_);
    Vec v(dim_);
    if (!components_.empty()) {
        guarded(x, [&] {
            for (int i = 0; i < dim_; ++i) v[i] = components_[i].value(x.data());
        });
    } else {
        v = value_(x);
    }
    require_finite(v, x, "vector field value");
    return v;
}

void VectorField::value_jacobian(const Vec& x, Vec& value, Mat& jac) const {
    require_dim(x, dim_);
    const int d = dim_;
    value.resize(d);
    jac.resize(d, d);
    if (!components_.empty()) {
        double buf[1 + 16];
        std::vector<double> heap;
        double* out = buf;
        if (d > 16) {
            heap.resize(1 + d);
            out = heap.data();
        }
        guarded(x, [&] {
            for (int i = 0; i < d; ++i) {
                components_[i].jet(x.data(), 1, out);
                value[i] = out[0];
                for (int k = 0; k < d; ++k) jac(i, k) = out[1 + k];
            }
        });
    } else {
        value = value_(x);
        if (jacobian_) {
            jac = jacobian_(x);
        } else {
            Vec xp = x;
            for (int k = 0; k < d; ++k) {
                xp[k] = x[k] + fd_step_;
                Vec vp = value_(xp);
                xp[k] = x[k] - fd_step_;
                Vec vm = value_(xp);
                xp[k] = x[k];
                jac.col(k) = (vp - vm) / (2 * fd_step_);
            }
        }
    }
    require_finite(value, x, "vector field value");
    require_finite(jac, x, "vector field jacobian");
}

Mat VectorField::jacobian(const Vec& x) const {
    Vec v;
    Mat j;
    value_jacobian(x, v, j);
    return j;
}

// ---------------------------------------------------------------------------

const char* to_string(SymmetryTag tag) {
    switch (tag) {
    case SymmetryTag::Antisymmetric: return "antisymmetric";
    case SymmetryTag::SymmetricPsd: return "symmetric_psd";
    case SymmetryTag::None: return "none";
    }
    return "?";
}

MatrixField MatrixField::from_expressions(std::vector<expr::Expression> entries, int dim, SymmetryTag tag) {
    if (static_cast<int>(entries.size()) != dim * dim) throw ConfigError("matrix field needs d*d entries");
    MatrixField m;
    m.dim_ = dim;
    m.tag_ = tag;
    m.zero_ = true;
    for (const auto& e : entries) {
        if (e.dim() != dim) throw ConfigError("matrix entry dimension mismatch");
        double c = 0.0;
        bool k = e.is_constant(&c);
        m.entry_constant_.push_back(k ? 1 : 0);
        if (!k || c != 0.0) m.zero_ = false;
    }
    m.entries_ = std::move(entries);
    return m;
}

MatrixField MatrixField::from_functions(int dim, ValueFn value, PartialsFn partials, SymmetryTag tag,
                                        double fd_step) {
    if (!value) throw ConfigError("matrix field needs a value evaluator");
    MatrixField m;
    m.dim_ = dim;
    m.tag_ = tag;
    m.value_ = std::move(value);
    m.partials_ = std::move(partials);
    m.fd_step_ = fd_step;
    return m;
}

MatrixField MatrixField::zero(int dim, SymmetryTag tag) {
    std::vector<expr::Expression> e(static_cast<std::size_t>(dim) * dim, expr::Expression::constant(0.0, dim));
    return from_expressions(std::move(e), dim, tag);
}

void MatrixField::evaluate(const Vec& x, Mat& value, std::vector<Mat>* partials) const {
    require_dim(x, dim_);
    const int d = dim_;
    value.setZero(d, d);
    if (partials) {
        partials->resize(d);
        for (auto& p : *partials) p.setZero(d, d);
    }
    if (!entries_.empty()) {
        if (zero_) return;
        double buf[1 + 16];
        std::vector<double> heap;
        double* out = buf;
        if (d > 16) {
            heap.resize(1 + d);
            out = heap.data();
        }
        guarded(x, [&] {
            for (int i = 0; i < d; ++i) {
                for (int j = 0; j < d; ++j) {
                    const auto idx = static_cast<std::size_t>(i) * d + j;
                    const auto& e = entries_[idx];
                    if (entry_constant_[idx] || !partials) {
                        value(i, j) = e.value(x.data());
                        continue;
                    }
                    e.jet(x.data(), 1, out);
                    value(i, j) = out[0];
                    for (int k = 0; k < d; ++k) (*partials)[k](i, j) = out[1 + k];
                }
            }
        });
    } else {
        value = value_(x);
        if (partials) {
            if (partials_) {
                *partials = partials_(x);
            } else {
                Vec xp = x;
                for (int k = 0; k < d; ++k) {
                    xp[k] = x[k] + fd_step_;
                    Mat vp = value_(xp);
                    xp[k] = x[k] - fd_step_;
                    Mat vm = value_(xp);
                    xp[k] = x[k];
                    (*partials)[k] = (vp - vm) / (2 * fd_step_);
                }
            }
        }
    }
    require_finite(value, x, "matrix field value");
    if (partials)
        for (const auto& p : *partials) require_finite(p, x, "matrix field partial");
}

Mat MatrixField::value(const Vec& x) const {
    Mat v;
    evaluate(x, v, nullptr);
    return v;
}

std::vector<Mat> MatrixField::partials(const Vec& x) const {
    Mat v;
    std::vector<Mat> p;
    evaluate(x, v, &p);
    return p;
}

void MatrixField::check_tag(const Vec& x, double tol) const {
    if (tag_ == SymmetryTag::None) return;
    Mat a = value(x);
    if (tag_ == SymmetryTag::Antisymmetric) {
        const double r = (a + a.transpose()).norm();
        if (r > tol)
            throw StructureError("antisymmetry violated (|A + A^T| = " + std::to_string(r) + ") at " +
                                     EvaluationError::format_point(x),
                                 x, a);
        return;
    }
    const double r = (a - a.transpose()).norm();
    if (r > tol)
        throw StructureError("symmetry violated (|A - A^T| = " + std::to_string(r) + ") at " +
                                 EvaluationError::format_point(x),
                             x, a);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.transpose()), Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    if (lmin < -tol)
        throw StructureError("positive semidefiniteness violated (min eigenvalue " + std::to_string(lmin) + ") at " +
                                 EvaluationError::format_point(x),
                             x, a);
}

MatrixJet jet_matrix(const MatrixField& field, const Vec& x) {
    MatrixJet j;
    field.evaluate(x, j.value, &j.partials);
    return j;
}

// ---------------------------------------------------------------------------

VolumeDensity::VolumeDensity(ScalarField m) : m_(std::move(m)) {
    double c = 0.0;
    if (m_.is_constant(&c)) {
        if (!(c > 0)) throw ConfigError("volume density must be positive");
        unit_ = c == 1.0;
    }
}

VolumeDensity VolumeDensity::lebesgue(int dim) { return VolumeDensity(ScalarField::constant(dim, 1.0)); }

double VolumeDensity::value(const Vec& x) const {
    const double v = m_.value(x);
    if (!(v > 0)) throw EvaluationError("volume density is not positive", x);
    return v;
}

double VolumeDensity::value_log_gradient(const Vec& x, Vec& log_grad) const {
    if (m_.is_constant()) {
        log_grad.setZero(m_.dim());
        return value(x);
    }
    const double v = m_.value_gradient(x, log_grad);
    if (!(v > 0)) throw EvaluationError("volume density is not positive", x);
    log_grad /= v;
    return v;
}

Vec VolumeDensity::log_gradient(const Vec& x) const {
    Vec g;
    value_log_gradient(x, g);
    return g;
}

double divergence_nu(const VectorField& X, const VolumeDensity& nu, const Vec& x) {
    Vec v, lg;
    Mat jac;
    X.value_jacobian(x, v, jac);
    nu.value_log_gradient(x, lg);
    const double r = jac.trace() + lg.dot(v);
    require_finite(r, x, "divergence");
    return r;
}

std::vector<Vec> uniform_points(const std::vector<Interval>& box, int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::vector<Vec> pts;
    pts.reserve(count);
    for (int n = 0; n < count; ++n) {
        Vec x(box.size());
        for (std::size_t i = 0; i < box.size(); ++i) {
            const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
            x[i] = box[i].lo + u * box[i].width();
        }
        pts.push_back(std::move(x));
    }
    return pts;
}

} // namespace gsde

namespace gsde {

ScalarField scaled(const ScalarField& f, double c) {
    if (const auto* e = f.expression())
        return ScalarField::from_expression(expr::Expression(expr::mul(expr::constant(c), e->tree()), f.dim()));
    ScalarField::GradientFn g;
    ScalarField::HessianFn h;
    if (f.analytic_gradient()) g = [f, c](const Vec& x) -> Vec { return c * f.gradient(x); };
    if (f.analytic_hessian()) h = [f, c](const Vec& x) -> Mat { return c * f.hessian(x); };
    return ScalarField::from_functions(
        f.dim(), [f, c](const Vec& x) { return c * f.value(x); }, g, h, f.fd_step());
}

MatrixField scaled(const MatrixField& M, double c) {
    if (!M.expressions().empty()) {
        std::vector<expr::Expression> e;
        e.reserve(M.expressions().size());
        for (const auto& entry : M.expressions())
            e.emplace_back(expr::mul(expr::constant(c), entry.tree()), M.dim());
        return MatrixField::from_expressions(std::move(e), M.dim(), M.tag());
    }
    MatrixField::PartialsFn p;
    if (M.analytic())
        p = [M, c](const Vec& x) {
            auto d = M.partials(x);
            for (auto& m : d) m *= c;
            return d;
        };
    return MatrixField::from_functions(
        M.dim(), [M, c](const Vec& x) -> Mat { return c * M.value(x); }, p, M.tag());
}

VectorField scaled(const VectorField& X, double c) {
    if (!X.expressions().empty()) {
        std::vector<expr::Expression> e;
        for (const auto& comp : X.expressions()) e.emplace_back(expr::mul(expr::constant(c), comp.tree()), X.dim());
        return VectorField::from_expressions(std::move(e));
    }
    VectorField::JacobianFn j;
    if (X.analytic()) j = [X, c](const Vec& x) -> Mat { return c * X.jacobian(x); };
    return VectorField::from_functions(
        X.dim(), [X, c](const Vec& x) -> Vec { return c * X.value(x); }, j);
}

} // namespace gsde
