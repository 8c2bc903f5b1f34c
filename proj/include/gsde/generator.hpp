#pragma once

// The generator L = L_a + L_s, the sub-Laplacians, the weighted adjoint, and
// quadrature tests of stationarity of h(E) e^S nu.

#include "gsde/system.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace gsde {

struct GeneratorParts {
    double antisymmetric = 0.0;   // L_a f = J dE . df
    double symmetric = 0.0;       // L_s f = Delta_{H,S} f
    double total = 0.0;
};

/// Delta_H f = div_nu(K df), from the partials of K.
double sub_laplacian(const GenericSystem& sys, const ScalarField& f, const Vec& x);
/// sum_i A_i(A_i f) + A_0 f with A_0 = sum_i div_nu(A_i) A_i.
double sub_laplacian_frame(const GenericSystem& sys, const Frame& frame, const ScalarField& f, const Vec& x);

GeneratorParts generator_parts(const GenericSystem& sys, const ScalarField& f, const Vec& x);
/// Lf = J dE . df + K dS . df + Delta_H f
double generator_L(const GenericSystem& sys, const ScalarField& f, const Vec& x);
/// L* f = -L_a f + L_s f, the adjoint in L^2(e^S nu).
double adjoint_Lstar(const GenericSystem& sys, const ScalarField& f, const Vec& x);

/// Pointwise coefficients of L: Lf = drift . df + tr(K Hess f).
struct GeneratorCoefficients {
    Vec drift;         // J dE + K dS + div_nu K
    Vec hamiltonian;   // J dE
    Mat K;
    double E = 0.0;
    double S = 0.0;
    double m = 1.0;
};

/// With omit_divergence the div_nu K term is left out of the drift.
void generator_coefficients(const GenericSystem& sys, const Vec& x, GeneratorCoefficients& out,
                            bool omit_divergence = false);

// ---------------------------------------------------------------------------
// Test functions and quadrature

/// f(x) = amplitude * (alpha + beta . u) * (1 - |u|^2)^power on |u| < 1, u = (x - center) / radius.
struct Bump {
    Vec center;
    double radius = 1.0;
    double amplitude = 1.0;
    double alpha = 1.0;
    Vec beta;
    int power = 8;

    bool supports(const Vec& x) const;
    double value(const Vec& x) const;
    /// Value, gradient and Hessian; returns false (and zeros) outside the support.
    bool jet(const Vec& x, double& v, Vec& grad, Mat& hess) const;
    ScalarField field() const;
};

struct TestFunctionBattery {
    std::vector<Bump> bumps;
};

/// count bumps whose supports lie inside region. Radii are drawn in
/// [0.1, 0.25] times the narrowest side; centers, alpha and beta uniformly.
TestFunctionBattery make_battery(const std::vector<Interval>& region, int count, std::uint64_t seed, int power = 8);

struct QuadratureSpec {
    enum class Rule { Midpoint, GaussLegendre };
    std::vector<Interval> box;
    std::vector<int> nodes;
    Rule rule = Rule::Midpoint;
};

/// Nodes and weights on [lo, hi].
void quadrature_rule(QuadratureSpec::Rule rule, const Interval& iv, int n, std::vector<double>& nodes,
                     std::vector<double>& weights);

struct StationarityOptions {
    bool omit_divergence = false;   // broken-operator control
};

struct StationarityResult {
    double residual = 0.0;          // max over bumps
    int worst_bump = -1;
    std::vector<double> per_bump;
};

/// max over bumps of |int Lf h(E) e^S m| / int |Lf| h(E) e^S m (0/0 reads as 0).
/// h is an expression in one variable (x1 stands for E).
/// The quadrature nodes per axis are laid over each bump's support box, clipped to quad.box.
StationarityResult stationarity_residual(const GenericSystem& sys, const TestFunctionBattery& battery,
                                         const expr::Expression& h, const QuadratureSpec& quad,
                                         const StationarityOptions& options = {});

/// (|<f, L_s g> - <g, L_s f>|, |<f, L_a g> + <g, L_a f>|) in L^2(e^S nu) by quadrature,
/// each divided by the sum of the magnitudes of its two terms.
std::pair<double, double> split_defects_quadrature(const GenericSystem& sys, const Bump& f, const Bump& g,
                                                   const QuadratureSpec& quad);

} // namespace gsde
