#pragma once

// Sampled checks of the GENERIC axioms: tags of J and K, the Jacobi identity,
// non-interaction, unimodularity, and frame consistency.

#include "gsde/system.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gsde {

struct CheckResult {
    std::string name;
    double residual = 0.0;
    double tolerance = 0.0;
    Vec argmax;   // point where the residual was largest (empty if never evaluated)
    bool pass = true;
};

struct VerificationReport {
    std::string system;
    std::vector<CheckResult> checks;
    int n_points = 0;
    std::uint64_t seed = 0;
    std::vector<Interval> box;
    bool analytic = true;
    int evaluation_errors = 0;
    std::string first_error;

    bool passed() const;
    const CheckResult* find(const std::string& name) const;
};

/// {F,{G,H}} + {G,{H,F}} + {H,{F,G}} with {F,G} = dF^T J dG.
double jacobi_defect(const MatrixField& J, const Vec& x, const ScalarField& F, const ScalarField& G,
                     const ScalarField& H);

/// (|J dS|, |K dE|)
std::pair<double, double> non_interaction_residual(const GenericSystem& sys, const Vec& x);

/// Component k: sum_j d_j(m J_jk) (divided by m).
Vec unimodularity_residual(const GenericSystem& sys, const Vec& x);

/// max over samples of |J grad(m2/m)|.
double casimir_multiple_check(const GenericSystem& sys, const VolumeDensity& m2, const std::vector<Vec>& samples);

/// Halton points in the box with a Cranley-Patterson shift drawn from seed.
std::vector<Vec> halton_points(const std::vector<Interval>& box, int count, std::uint64_t seed);

/// Default tolerance: 1e-8 with analytic derivatives, 1e-4 otherwise.
VerificationReport verify_system(const GenericSystem& sys, int n_points, std::uint64_t seed,
                                 std::optional<double> tol = std::nullopt);

} // namespace gsde
