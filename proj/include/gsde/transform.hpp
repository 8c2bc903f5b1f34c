#pragma once

// Coordinate changes y = phi(x) applied to every component of a system, and
// generator-level checks of coordinate invariance.

#include "gsde/system.hpp"
#include "gsde/verifier.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gsde {

class Diffeo {
public:
    using MapFn = std::function<Vec(const Vec&)>;
    using JacobianFn = std::function<Mat(const Vec&)>;

    Diffeo() = default;

    static Diffeo identity(int dim);
    /// y = A x (+ b).
    static Diffeo linear(const Mat& A, const Vec& b = Vec());
    /// (q, p, e) -> (q, p, e + q^2)
    static Diffeo shear();
    /// One expression per output coordinate. An empty jacobian means it is
    /// differentiated symbolically from forward; a given one is row-major.
    static Diffeo from_expressions(int dim, const std::vector<std::string>& forward,
                                   const std::vector<std::string>& inverse,
                                   const std::vector<std::string>& jacobian = {}, std::string name = "custom");
    /// Without a jacobian function the Jacobian is taken by central differences.
    static Diffeo from_functions(int dim, MapFn forward, MapFn inverse, JacobianFn jacobian = {},
                                 std::string name = "custom");

    const std::string& name() const noexcept { return name_; }
    int dim() const noexcept { return dim_; }
    /// Analytic Jacobian (expressions or a user function).
    bool analytic() const noexcept { return analytic_; }
    /// Forward, inverse and Jacobian are all expressions.
    bool symbolic() const noexcept { return !fwd_.empty() && !inv_.empty(); }

    Vec forward(const Vec& x) const;
    Vec inverse(const Vec& y) const;
    Mat jacobian(const Vec& x) const;
    /// H[a](i, j) = d_i d_j phi_a
    std::vector<Mat> second_derivatives(const Vec& x) const;

    const std::vector<expr::Expression>& forward_expressions() const noexcept { return fwd_; }
    const std::vector<expr::Expression>& inverse_expressions() const noexcept { return inv_; }
    const std::vector<expr::Expression>& jacobian_expressions() const noexcept { return jac_; }

    /// Max of |inverse(forward(x)) - x| over the points. Throws StructureError
    /// if it exceeds 1e-10 or det D phi vanishes or changes sign.
    double validate(const std::vector<Vec>& points) const;

private:
    std::string name_;
    int dim_ = 0;
    bool analytic_ = false;
    std::vector<expr::Expression> fwd_, inv_, jac_;
    MapFn fwd_fn_, inv_fn_;
    JacobianFn jac_fn_;
};

/// E_hat(phi(x)) = E(x), S_hat likewise, J_hat = D phi J D phi^T, K_hat = D phi K D phi^T,
/// m_hat(phi(x)) = m(x) / |det D phi(x)|. Frames push forward as D phi A_i.
/// Bounds become the bounding box of the sampled image of the original box.
GenericSystem pushforward_system(const GenericSystem& sys, const Diffeo& phi);

/// f_hat o phi, with derivatives by the chain rule (symbolic when possible).
ScalarField compose(const ScalarField& f_hat, const Diffeo& phi);

/// |(L_hat f_hat)(phi(x)) - L(f_hat o phi)(x)|
double generator_equivalence_residual(const GenericSystem& sys, const GenericSystem& sys_hat, const Diffeo& phi,
                                      const ScalarField& f_hat, const Vec& x);

/// |int_{phi(B)} m_hat e^S_hat dy - int_B m e^S dx| / int_B m e^S dx, with the
/// left side pulled back to B by the change of variables and both sides on a
/// Gauss-Legendre grid with the given nodes per axis.
double measure_pushforward_residual(const GenericSystem& sys, const GenericSystem& sys_hat, const Diffeo& phi,
                                    const std::vector<Interval>& box, int nodes = 12);

/// Round trip, generator equivalence (random quadratic-trigonometric test
/// functions and bumps centred at each image point), unimodularity and
/// non-interaction of the hatted system at phi(x), and the measure pushforward.
/// Default tolerance: 1e-6, or 1e-4 when a Jacobian is not analytic.
VerificationReport transform_check(const GenericSystem& sys, const Diffeo& phi, int n_points, std::uint64_t seed,
                                   std::optional<double> tol = std::nullopt);

} // namespace gsde
