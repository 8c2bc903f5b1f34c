#pragma once

// Frame factorization of K, frame divergences, and drift assembly in the
// Stratonovich (B0) and Ito forms.

#include "gsde/system.hpp"

#include <functional>
#include <string>
#include <vector>

namespace gsde {

/// Receives library warnings (default: standard error). Each key is reported once per process.
void set_warning_handler(std::function<void(const std::string&)> handler);
void warn_once(const std::string& key, const std::string& message);

/// K = sum_i A_i A_i^T from the spectral decomposition, keeping eigenvalues above
/// rank_tol * lambda_max. Eigenvector signs make the largest-magnitude component
/// positive (ties go to the lowest index). Throws StructureError on a negative
/// eigenvalue below -rank_tol * lambda_max.
std::vector<Vec> factorize_cometric(const Mat& K, double rank_tol = 1e-10);
std::vector<Vec> factorize_cometric(const MatrixField& K, const Vec& x, double rank_tol = 1e-10);

/// The ingredients of an SDE run: the entropy, co-metric and frame actually used,
/// and the temperature multiplying the noise-induced terms.
///
/// The standard model uses (S, K, frame) at T = 1. The scaled model uses
/// (S_tilde, K_tilde, frame_tilde) with drift J dE + K_tilde dS_tilde + T * (...)
/// and noise amplitude sqrt(2 T).
struct SdeModel {
    const GenericSystem* sys = nullptr;
    ScalarField S;
    MatrixField K;
    Frame frame;
    double T = 1.0;

    static SdeModel standard(const GenericSystem& sys);
    static SdeModel at_temperature(const GenericSystem& sys, double T);
};

/// Scratch space for the drift assembly; reuse one per thread to avoid allocation.
struct DriftWorkspace {
    Vec gradE, gradS, logm, tmp;
    Mat J, K, A;
    std::vector<Mat> dK, dA;
    Vec divA;
};

/// J dE + K dS (the deterministic vector field).
void deterministic_drift(const SdeModel& model, const Vec& x, DriftWorkspace& ws, Vec& out);
/// Deterministic drift + T div_nu K.
void ito_drift(const SdeModel& model, const Vec& x, DriftWorkspace& ws, Vec& out);
/// Fills ws.A and, when requested, ws.dA and ws.divA (nu-divergence of each column).
void frame_at(const SdeModel& model, const Vec& x, DriftWorkspace& ws, bool with_divergence);
/// Deterministic drift + T sum_i div_nu(A_i) A_i; leaves the frame in ws.A.
void stratonovich_drift(const SdeModel& model, const Vec& x, DriftWorkspace& ws, Vec& out);

/// (div_nu K)_j = sum_k d_k K_jk + (grad log m . K)_j
Vec divergence_nu_K(const MatrixField& K, const VolumeDensity& nu, const Vec& x);
/// div_nu of each frame column.
Vec frame_divergences(const Frame& frame, const VolumeDensity& nu, const Vec& x);

/// B0 = J dE + K dS + sum_i div_nu(A_i) A_i. Throws EvaluationError if the frame
/// does not reconstruct K at x.
Vec drift_B0(const GenericSystem& sys, const Frame& frame, const Vec& x);
/// J dE + K dS + div_nu K, from the partials of K.
Vec ito_drift(const GenericSystem& sys, const Vec& x);
/// c_j = sum_i sum_k (d_k a_ij) a_ik
Vec strat_to_ito_correction(const Frame& frame, const Vec& x);

/// |sum A_i A_i^T - K|_F / (1 + |K|_F)
double frame_reconstruction_error(const Frame& frame, const MatrixField& K, const Vec& x);
/// |ito_drift - (J dE + K dS + c + sum_i a_i div_nu A_i)|
double ito_identity_residual(const GenericSystem& sys, const Frame& frame, const Vec& x);
/// max_i |A_i . dE|
double horizontality_residual(const GenericSystem& sys, const Frame& frame, const Vec& x);

} // namespace gsde
