#pragma once

// The GENERIC bundle (patch, J, K, nu, E, S) with optional frames and a
// temperature-scaled form, plus the built-in catalog of example systems.

#include "gsde/fields.hpp"

#include <optional>
#include <string>
#include <vector>

namespace gsde {

class ConfigSection;

/// Horizontal frame A_1..A_r with K = sum_i A_i A_i^T.
///
/// A user-supplied frame carries analytic vector fields. A spectral frame
/// factorizes K pointwise and differentiates the factor by central differences;
/// it is padded to d columns (zero columns below the rank threshold) so that the
/// column count does not change between neighbouring points.
class Frame {
public:
    enum class Source { UserSupplied, Spectral };

    Frame() = default;
    static Frame user_supplied(int dim, std::vector<VectorField> fields);
    static Frame spectral(MatrixField K, double rank_tol = 1e-10);

    Source source() const noexcept { return source_; }
    int dim() const noexcept { return dim_; }
    /// Number of noise channels (columns of the frame matrix).
    int rank() const noexcept { return rank_; }
    double rank_tol() const noexcept { return rank_tol_; }
    const std::vector<VectorField>& fields() const noexcept { return fields_; }
    const MatrixField& cometric() const noexcept { return K_; }

    /// A has one column per frame field. With jac, (*jac)[i](j, k) = d_k a_ij.
    void evaluate(const Vec& x, Mat& A, std::vector<Mat>* jac) const;

    /// Same frame scaled by a positive constant (expression-backed when possible).
    Frame scaled(double c) const;

private:
    Source source_ = Source::UserSupplied;
    int dim_ = 0;
    int rank_ = 0;
    double rank_tol_ = 1e-10;
    std::vector<VectorField> fields_;
    MatrixField K_;
    double scale_ = 1.0;
};

/// S = S_tilde / T and K = T * K_tilde, with the system's own S, K taken at active_T.
struct Scaling {
    ScalarField S_tilde;
    MatrixField K_tilde;
    std::optional<Frame> frame_tilde;
    double active_T = 1.0;
};

struct GenericSystem {
    std::string name;
    CoordinatePatch patch;
    MatrixField J;
    MatrixField K;
    VolumeDensity nu;
    ScalarField E;
    ScalarField S;
    std::optional<Frame> frame;
    std::optional<Scaling> scaling;

    int dim() const noexcept { return patch.dim; }

    /// True when every component has analytic derivatives.
    bool analytic() const;

    /// Throws ConfigError if components disagree on dimension.
    void check_dimensions() const;

    /// The frame to use for noise: the user frame if present, else a spectral one.
    Frame noise_frame() const;
};

/// Checks the symmetry tags of J and K at the given points. Throws StructureError.
void check_structure(const GenericSystem& sys, const std::vector<Vec>& points, double tol = 1e-10);

/// Checks S = S_tilde / T and K = T K_tilde at the points; returns the max residual.
double scaling_residual(const GenericSystem& sys, const std::vector<Vec>& points);

/// The system with S = S_tilde / T and K = T K_tilde. Requires scaling and T > 0.
GenericSystem at_temperature(const GenericSystem& sys, double T);

/// Sample points for structural checks: the patch box, or [-1, 1]^d when unbounded.
std::vector<Interval> sampling_box(const CoordinatePatch& patch);

// ---------------------------------------------------------------------------
// Catalog

enum class CatalogId { DampedOscillator, RigidBody, OuGradient, CircleDiffusion, CanonicalHamiltonian };

const char* to_string(CatalogId id);
std::optional<CatalogId> catalog_id_from_string(std::string_view name);

struct DampedOscillatorParams {
    double mass = 1.0;
    double gamma = 0.5;
    std::string potential = "x1^2/2";   // in q = x1
    std::string entropy = "log(x1)";    // in e = x1
};

struct RigidBodyParams {
    double lambda = 1.0;
    std::string casimir_entropy = "-x1";   // phi(c) with c = |x|^2/2
    double inertia[3] = {1.0, 1.0, 1.0};
};

GenericSystem make_damped_oscillator(const DampedOscillatorParams& p = {});
GenericSystem make_rigid_body(const RigidBodyParams& p = {});
GenericSystem make_ou_gradient(int dim = 2);
GenericSystem make_circle_diffusion();
GenericSystem make_canonical_hamiltonian(int dof = 1);

/// Builds a system from the [system] section: either a catalog kind with its
/// parameters or a custom definition from expressions. When validate is set,
/// symmetry tags are checked at 10 sample points before returning.
GenericSystem load_system(ConfigSection& section, bool validate = true);

} // namespace gsde
