#pragma once

// Scalar, vector and matrix fields on a single coordinate patch.
//
// A field is either expression-backed (exact derivatives through dual numbers)
// or built from opaque evaluators, in which case missing derivatives fall back
// to central differences. Fields are immutable and safe to share across threads.

#include "gsde/common.hpp"
#include "gsde/expr.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gsde {

inline constexpr double kDefaultFdStep = 1e-5;
inline constexpr double kDefaultFdHessianStep = 1e-4;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
};

struct CoordinatePatch {
    int dim = 1;
    std::optional<std::vector<Interval>> bounds;
    std::string label;

    CoordinatePatch() = default;
    CoordinatePatch(int dim, std::optional<std::vector<Interval>> bounds = std::nullopt, std::string label = {});

    /// True when no bounds are declared or x lies in the closed box.
    bool contains(const Vec& x) const;
};

class ScalarField {
public:
    using ValueFn = std::function<double(const Vec&)>;
    using GradientFn = std::function<Vec(const Vec&)>;
    using HessianFn = std::function<Mat(const Vec&)>;

    ScalarField() = default;

    static ScalarField from_expression(expr::Expression e);
    static ScalarField parse(std::string_view text, int dim);
    static ScalarField from_functions(int dim, ValueFn value, GradientFn gradient = {}, HessianFn hessian = {},
                                      double fd_step = kDefaultFdStep);
    static ScalarField constant(int dim, double c);

    int dim() const noexcept { return dim_; }
    double value(const Vec& x) const;
    Vec gradient(const Vec& x) const;
    Mat hessian(const Vec& x) const;

    /// Value and gradient in one pass.
    double value_gradient(const Vec& x, Vec& grad) const;

    bool analytic_gradient() const noexcept { return expr_.has_value() || static_cast<bool>(gradient_); }
    bool analytic_hessian() const noexcept { return expr_.has_value() || static_cast<bool>(hessian_); }
    bool is_constant(double* c = nullptr) const;

    const expr::Expression* expression() const noexcept { return expr_ ? &*expr_ : nullptr; }
    double fd_step() const noexcept { return fd_step_; }
    ScalarField with_fd_step(double step) const;

private:
    int dim_ = 0;
    std::optional<expr::Expression> expr_;
    ValueFn value_;
    GradientFn gradient_;
    HessianFn hessian_;
    double fd_step_ = kDefaultFdStep;
};

struct ScalarJet {
    double value = 0.0;
    Vec gradient;
};

ScalarJet jet_scalar(const ScalarField& field, const Vec& x);

/// x -> R^d with Jacobian jac(i, k) = d_k X_i.
class VectorField {
public:
    using ValueFn = std::function<Vec(const Vec&)>;
    using JacobianFn = std::function<Mat(const Vec&)>;

    VectorField() = default;

    static VectorField from_expressions(std::vector<expr::Expression> components);
    static VectorField from_functions(int dim, ValueFn value, JacobianFn jacobian = {},
                                      double fd_step = kDefaultFdStep);

    int dim() const noexcept { return dim_; }
    Vec value(const Vec& x) const;
    Mat jacobian(const Vec& x) const;
    void value_jacobian(const Vec& x, Vec& value, Mat& jac) const;
    bool analytic() const noexcept { return !components_.empty() || static_cast<bool>(jacobian_); }
    const std::vector<expr::Expression>& expressions() const noexcept { return components_; }

private:
    int dim_ = 0;
    std::vector<expr::Expression> components_;
    ValueFn value_;
    JacobianFn jacobian_;
    double fd_step_ = kDefaultFdStep;
};

enum class SymmetryTag { Antisymmetric, SymmetricPsd, None };

const char* to_string(SymmetryTag tag);

class MatrixField {
public:
    using ValueFn = std::function<Mat(const Vec&)>;
    /// partials[k](i, j) = d_k M_ij
    using PartialsFn = std::function<std::vector<Mat>(const Vec&)>;

    MatrixField() = default;

    /// Row-major d*d entries.
    static MatrixField from_expressions(std::vector<expr::Expression> entries, int dim, SymmetryTag tag);
    static MatrixField from_functions(int dim, ValueFn value, PartialsFn partials = {},
                                      SymmetryTag tag = SymmetryTag::None, double fd_step = kDefaultFdStep);
    static MatrixField zero(int dim, SymmetryTag tag);

    int dim() const noexcept { return dim_; }
    SymmetryTag tag() const noexcept { return tag_; }
    bool analytic() const noexcept { return !entries_.empty() || static_cast<bool>(partials_); }
    bool is_zero() const noexcept { return zero_; }
    const std::vector<expr::Expression>& expressions() const noexcept { return entries_; }

    Mat value(const Vec& x) const;
    std::vector<Mat> partials(const Vec& x) const;
    void evaluate(const Vec& x, Mat& value, std::vector<Mat>* partials) const;

    /// Checks the symmetry tag at x; throws StructureError when violated.
    void check_tag(const Vec& x, double tol) const;

private:
    int dim_ = 0;
    SymmetryTag tag_ = SymmetryTag::None;
    std::vector<expr::Expression> entries_;
    std::vector<char> entry_constant_;
    bool zero_ = false;
    ValueFn value_;
    PartialsFn partials_;
    double fd_step_ = kDefaultFdStep;
};

struct MatrixJet {
    Mat value;
    std::vector<Mat> partials;
};

MatrixJet jet_matrix(const MatrixField& field, const Vec& x);

/// nu = m dx with m > 0.
class VolumeDensity {
public:
    VolumeDensity() = default;
    explicit VolumeDensity(ScalarField m);
    static VolumeDensity lebesgue(int dim);

    const ScalarField& density() const noexcept { return m_; }
    int dim() const noexcept { return m_.dim(); }
    bool is_lebesgue() const noexcept { return unit_; }

    double value(const Vec& x) const;
    /// grad(log m)
    Vec log_gradient(const Vec& x) const;
    double value_log_gradient(const Vec& x, Vec& log_grad) const;

private:
    ScalarField m_;
    bool unit_ = false;
};

/// c * f, kept expression-backed when f is.
ScalarField scaled(const ScalarField& f, double c);
/// c * M, kept expression-backed when M is.
MatrixField scaled(const MatrixField& M, double c);
/// c * X, kept expression-backed when X is.
VectorField scaled(const VectorField& X, double c);

/// div_nu X = div X + grad(log m) . X
double divergence_nu(const VectorField& X, const VolumeDensity& nu, const Vec& x);

/// Uniform points in a box from a seeded generator (for tests and sampling).
std::vector<Vec> uniform_points(const std::vector<Interval>& box, int count, std::uint64_t seed);

} // namespace gsde
