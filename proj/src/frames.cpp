#include "gsde/frames.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <iostream>
#include <mutex>
#include <set>

namespace gsde {

namespace {

std::mutex g_warn_mutex;
std::function<void(const std::string&)> g_warn_handler;
std::set<std::string> g_warned;

constexpr double kSpectralFdStep = 1e-5;

void spectral_columns(const Mat& K, double rank_tol, Mat& A) {
    const int d = static_cast<int>(K.rows());
    A.setZero(d, d);
    auto cols = factorize_cometric(K, rank_tol);
    for (std::size_t i = 0; i < cols.size(); ++i) A.col(static_cast<Eigen::Index>(i)) = cols[i];
}

} // namespace

void set_warning_handler(std::function<void(const std::string&)> handler) {
    std::lock_guard lock(g_warn_mutex);
    g_warn_handler = std::move(handler);
}

void warn_once(const std::string& key, const std::string& message) {
    std::lock_guard lock(g_warn_mutex);
    if (!g_warned.insert(key).second) return;
    if (g_warn_handler)
        g_warn_handler(message);
    else
        std::cerr << "warning: " << message << '\n';
}

std::vector<Vec> factorize_cometric(const Mat& K, double rank_tol) {
    const Mat sym = 0.5 * (K + K.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(sym);
    if (es.info() != Eigen::Success) throw Error("eigendecomposition of the co-metric failed");
    const Vec& lam = es.eigenvalues();
    const double lmax = std::max(0.0, lam.maxCoeff());
    if (lam.minCoeff() < -rank_tol * lmax)
        throw StructureError("co-metric has negative eigenvalue " + std::to_string(lam.minCoeff()), Vec(), K);
    std::vector<Vec> out;
    if (lmax == 0.0) return out;
    for (Eigen::Index i = lam.size() - 1; i >= 0; --i) {
        if (!(lam[i] > rank_tol * lmax)) break;
        Vec v = es.eigenvectors().col(i);
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < v.size(); ++k)
            if (std::abs(v[k]) > std::abs(v[best])) best = k;
        if (v[best] < 0) v = -v;
        out.push_back(std::sqrt(lam[i]) * v);
    }
    return out;
}

std::vector<Vec> factorize_cometric(const MatrixField& K, const Vec& x, double rank_tol) {
    try {
        return factorize_cometric(K.value(x), rank_tol);
    } catch (const StructureError& e) {
        throw StructureError(std::string(e.what()) + " at " + EvaluationError::format_point(x), x, e.matrix());
    }
}

// ---------------------------------------------------------------------------

Frame Frame::user_supplied(int dim, std::vector<VectorField> fields) {
    for (const auto& f : fields)
        if (f.dim() != dim) throw ConfigError("frame field dimension does not match the system");
    Frame fr;
    fr.source_ = Source::UserSupplied;
    fr.dim_ = dim;
    fr.rank_ = static_cast<int>(fields.size());
    fr.fields_ = std::move(fields);
    return fr;
}

Frame Frame::spectral(MatrixField K, double rank_tol) {
    if (!(rank_tol > 0)) throw ConfigError("rank_tol must be positive");
    Frame fr;
    fr.source_ = Source::Spectral;
    fr.dim_ = K.dim();
    fr.rank_ = K.dim();
    fr.rank_tol_ = rank_tol;
    fr.K_ = std::move(K);
    return fr;
}

Frame Frame::scaled(double c) const {
    Frame fr = *this;
    if (source_ == Source::UserSupplied) {
        for (auto& f : fr.fields_) f = gsde::scaled(f, c);
    } else {
        fr.scale_ *= c;
    }
    return fr;
}

void Frame::evaluate(const Vec& x, Mat& A, std::vector<Mat>* jac) const {
    const int d = dim_;
    if (source_ == Source::UserSupplied) {
        A.resize(d, rank_);
        if (jac) jac->resize(rank_);
        Vec v;
        for (int i = 0; i < rank_; ++i) {
            if (jac) {
                fields_[i].value_jacobian(x, v, (*jac)[i]);
                A.col(i) = v;
            } else {
                A.col(i) = fields_[i].value(x);
            }
        }
        return;
    }
    spectral_columns(K_.value(x), rank_tol_, A);
    A *= scale_;
    if (!jac) return;
    warn_once("spectral-frame-divergence",
              "frame divergences are computed by differencing a spectral factorization of K; "
              "this assumes the eigenvectors vary smoothly near the evaluation points");
    jac->assign(d, Mat::Zero(d, d));
    Vec xp = x;
    Mat Ap, Am;
    for (int k = 0; k < d; ++k) {
        xp[k] = x[k] + kSpectralFdStep;
        spectral_columns(K_.value(xp), rank_tol_, Ap);
        xp[k] = x[k] - kSpectralFdStep;
        spectral_columns(K_.value(xp), rank_tol_, Am);
        xp[k] = x[k];
        for (int i = 0; i < d; ++i) (*jac)[i].col(k) = scale_ * (Ap.col(i) - Am.col(i)) / (2 * kSpectralFdStep);
    }
}

// ---------------------------------------------------------------------------

SdeModel SdeModel::standard(const GenericSystem& sys) {
    SdeModel m;
    m.sys = &sys;
    m.S = sys.S;
    m.K = sys.K;
    m.frame = sys.noise_frame();
    m.T = 1.0;
    return m;
}

SdeModel SdeModel::at_temperature(const GenericSystem& sys, double T) {
    if (!sys.scaling) throw ConfigError("system '" + sys.name + "' has no temperature scaling");
    if (!(T >= 0)) throw ConfigError("temperature must be non-negative");
    SdeModel m;
    m.sys = &sys;
    m.S = sys.scaling->S_tilde;
    m.K = sys.scaling->K_tilde;
    m.frame = sys.scaling->frame_tilde ? *sys.scaling->frame_tilde : Frame::spectral(sys.scaling->K_tilde);
    m.T = T;
    return m;
}

void deterministic_drift(const SdeModel& model, const Vec& x, DriftWorkspace& ws, Vec& out) {
    const GenericSystem& sys = *model.sys;
    out.setZero(sys.dim());
    if (!sys.J.is_zero()) {
        sys.E.value_gradient(x, ws.gradE);
        sys.J.evaluate(x, ws.J, nullptr);
        out.noalias() += ws.J * ws.gradE;
    }
    if (!model.K.is_zero() && !model.S.is_constant()) {
        model.S.value_gradient(x, ws.gradS);
        model.K.evaluate(x, ws.K, nullptr);
        out.noalias() += ws.K * ws.gradS;
    }
}

void ito_drift(const SdeModel& model, const Vec& x, DriftWorkspace& ws, Vec& out) {
    deterministic_drift(model, x, ws, out);
    if (model.T == 0.0 || model.K.is_zero()) return;
    const GenericSystem& sys = *model.sys;
    const int d = sys.dim();
    model.K.evaluate(x, ws.K, &ws.dK);
    ws.tmp.setZero(d);
    for (int k = 0; k < d; ++k) ws.tmp += ws.dK[k].col(k);
    if (!sys.nu.is_lebesgue()) {
        sys.nu.value_log_gradient(x, ws.logm);
        ws.tmp.noalias() += ws.K * ws.logm;
    }
    out += model.T * ws.tmp;
}

void frame_at(const SdeModel& model, const Vec& x, DriftWorkspace& ws, bool with_divergence) {
    const Frame& fr = model.frame;
    if (!with_divergence) {
        fr.evaluate(x, ws.A, nullptr);
        return;
    }
    fr.evaluate(x, ws.A, &ws.dA);
    const int r = fr.rank();
    ws.divA.resize(r);
    const bool flat = model.sys->nu.is_lebesgue();
    if (!flat) model.sys->nu.value_log_gradient(x, ws.logm);
    for (int i = 0; i < r; ++i) {
        double div = ws.dA[i].trace();
        if (!flat) div += ws.logm.dot(ws.A.col(i));
        ws.divA[i] = div;
    }
}

void stratonovich_drift(const SdeModel& model, const Vec& x, DriftWorkspace& ws, Vec& out) {
    deterministic_drift(model, x, ws, out);
    const bool need_div = model.T != 0.0;
    frame_at(model, x, ws, need_div);
    if (need_div) out.noalias() += model.T * (ws.A * ws.divA);
}

// ---------------------------------------------------------------------------

Vec divergence_nu_K(const MatrixField& K, const VolumeDensity& nu, const Vec& x) {
    const int d = K.dim();
    Mat v;
    std::vector<Mat> dK;
    K.evaluate(x, v, &dK);
    Vec out = Vec::Zero(d);
    for (int k = 0; k < d; ++k) out += dK[k].col(k);
    out += v * nu.log_gradient(x);
    if (!out.allFinite()) throw EvaluationError("non-finite divergence of K", x);
    return out;
}

Vec frame_divergences(const Frame& frame, const VolumeDensity& nu, const Vec& x) {
    Mat A;
    std::vector<Mat> jac;
    frame.evaluate(x, A, &jac);
    const Vec lg = nu.log_gradient(x);
    Vec div(frame.rank());
    for (int i = 0; i < frame.rank(); ++i) div[i] = jac[i].trace() + lg.dot(A.col(i));
    return div;
}

double frame_reconstruction_error(const Frame& frame, const MatrixField& K, const Vec& x) {
    Mat A;
    frame.evaluate(x, A, nullptr);
    const Mat k = K.value(x);
    return (A * A.transpose() - k).norm() / (1.0 + k.norm());
}

Vec drift_B0(const GenericSystem& sys, const Frame& frame, const Vec& x) {
    const double err = frame_reconstruction_error(frame, sys.K, x);
    if (err > 1e-8) throw EvaluationError("frame does not reconstruct K (relative error " + std::to_string(err) + ")", x);
    SdeModel model = SdeModel::standard(sys);
    model.frame = frame;
    DriftWorkspace ws;
    Vec out;
    stratonovich_drift(model, x, ws, out);
    return out;
}

Vec ito_drift(const GenericSystem& sys, const Vec& x) {
    SdeModel model = SdeModel::standard(sys);
    DriftWorkspace ws;
    Vec out;
    ito_drift(model, x, ws, out);
    return out;
}

Vec strat_to_ito_correction(const Frame& frame, const Vec& x) {
    Mat A;
    std::vector<Mat> jac;
    frame.evaluate(x, A, &jac);
    Vec c = Vec::Zero(frame.dim());
    for (int i = 0; i < frame.rank(); ++i) c.noalias() += jac[i] * A.col(i);
    return c;
}

double ito_identity_residual(const GenericSystem& sys, const Frame& frame, const Vec& x) {
    const Vec ito = ito_drift(sys, x);
    SdeModel model = SdeModel::standard(sys);
    DriftWorkspace ws;
    Vec det;
    deterministic_drift(model, x, ws, det);
    Mat A;
    frame.evaluate(x, A, nullptr);
    const Vec rhs = det + strat_to_ito_correction(frame, x) + A * frame_divergences(frame, sys.nu, x);
    return (ito - rhs).norm();
}

double horizontality_residual(const GenericSystem& sys, const Frame& frame, const Vec& x) {
    Mat A;
    frame.evaluate(x, A, nullptr);
    if (A.cols() == 0) return 0.0;
    return (A.transpose() * sys.E.gradient(x)).cwiseAbs().maxCoeff();
}

} // namespace gsde
