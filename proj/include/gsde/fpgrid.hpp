#pragma once

// Finite-difference generators on box grids (d <= 3): L, its adjoints, the
// symmetric/antisymmetric split, stationarity of h(E) e^S nu on the grid, and
// the relative-entropy diagnostic for density evolution.
//
// Nodes sit at lo + i h on each axis, axis 0 varying fastest. Node volumes are
// trapezoidal (halved on each face the node lies on). The diffusion part is
// assembled from the quadratic form  int c grad f . K grad f  as a weighted graph
// Laplacian A (axis edges plus the two diagonals of every mixed-axis cell), so
// that diag(c vol) L = -A is symmetric to rounding. First-order terms use
// central differences, one-sided on faces.

#include "gsde/expr.hpp"
#include "gsde/system.hpp"

#include <Eigen/SparseCore>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gsde {

using SparseMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct GridSpec {
    std::vector<Interval> box;
    std::vector<int> nodes;        // per axis, each >= 16
    int margin = 3;                // interior certificate excludes this many cells at each face
    double max_memory_mb = 2048;
    int workers = 0;               // node sampling threads; 0 = hardware concurrency
};

class Grid {
public:
    Grid() = default;
    explicit Grid(const GridSpec& spec);

    int dim() const noexcept { return static_cast<int>(n_.size()); }
    long size() const noexcept { return size_; }
    int nodes(int axis) const { return n_[axis]; }
    double spacing(int axis) const { return h_[axis]; }
    long stride(int axis) const { return stride_[axis]; }
    const std::vector<Interval>& box() const noexcept { return box_; }

    int index(long node, int axis) const { return static_cast<int>((node / stride_[axis]) % n_[axis]); }
    Vec point(long node) const;
    /// Trapezoidal node volume.
    double volume(long node) const;
    /// At least margin cells from every face.
    bool interior(long node, int margin) const;

private:
    std::vector<Interval> box_;
    std::vector<int> n_;
    std::vector<double> h_;
    std::vector<long> stride_;
    long size_ = 0;
};

/// Rough peak memory of building operators on the grid, in MB.
double grid_memory_estimate_mb(const GridSpec& spec);

/// Samples of the system at the nodes.
struct GridSamples {
    Vec E, S, m, vol;
    std::vector<Vec> gradE, gradS;
    std::vector<Mat> J, K;
};

GridSamples sample_grid(const GenericSystem& sys, const Grid& grid, int workers = 0);

struct GridOperator {
    Grid grid;
    SparseMat matrix;   // L acting on grid functions
    Vec weight;         // e^S m at the nodes
    Vec m;
    Vec vol;
    int margin = 3;

    /// diag(weight * vol)
    Vec W() const { return weight.cwiseProduct(vol); }
};

/// Full L: (J dE + K dS) . D f by central differences plus (1/m) div(m K grad f)
/// in divergence form.
GridOperator build_grid_generator(const GenericSystem& sys, const GridSpec& spec);

struct SplitOperators {
    Grid grid;
    SparseMat La;   // J dE . D f, central differences
    SparseMat Ls;   // (1/(e^S m)) div(e^S m K grad f), divergence form
    Vec weight;     // e^S m
    Vec m;
    Vec vol;
    Vec S;
    int margin = 3;

    Vec W() const { return weight.cwiseProduct(vol); }
};

SplitOperators build_split_operators(const GenericSystem& sys, const GridSpec& spec);

/// Adjoint in L^2(e^S nu): W^-1 L^T W f.
Vec apply_adjoint(const GridOperator& op, const Vec& f);
/// Adjoint in L^2(nu) (the Fokker-Planck operator on densities w.r.t. nu): M^-1 L^T M rho, M = diag(m vol).
Vec apply_fokker_planck(const GridOperator& op, const Vec& rho);

/// |L^* g| / |g| over interior nodes (volume-weighted 2-norms), g = h(E) e^S.
/// h is an expression in one variable, x1 standing for E.
double stationary_residual_grid(const GenericSystem& sys, const GridSpec& spec, const expr::Expression& h);

struct SplitDefects {
    double sym = 0.0;
    double antisym = 0.0;
};

/// sym: |W Ls - Ls^T W|_F / |W Ls|_F over the whole matrix.
/// antisym: max over smooth probe bumps f supported in the interior of
/// |(W La + La^T W) f| / |W La f| (0 when La f vanishes).
SplitDefects symmetry_split_check(const SplitOperators& ops, int probes = 4, std::uint64_t seed = 7);
SplitDefects symmetry_split_check(const GenericSystem& sys, const GridSpec& spec);

/// max over random pairs of |<f, L g>_W - <L^* f, g>_W| / (|f| |g|).
double duality_defect(const GridOperator& op, int pairs = 4, std::uint64_t seed = 11);

/// A non-negative density with respect to nu, sampled at the nodes.
struct GridDensity {
    Vec values;

    /// Quadrature of rho m.
    double mass(const Vec& m, const Vec& vol) const;
};

/// Quadrature of (S - log rho) rho m; nodes with rho = 0 contribute 0.
double relative_entropy(const GridDensity& rho, const Vec& S, const Vec& m, const Vec& vol);
double relative_entropy(const GridDensity& rho, const SplitOperators& ops);

struct Evolution {
    GridDensity final_density;
    std::vector<double> times;
    std::vector<double> entropy;
    std::vector<double> mass;
    double dt = 0.0;
};

/// Explicit Euler for d rho/dt = L^* rho using La + Ls, with dt = cfl / max |L_nn|.
Evolution evolve_density(const SplitOperators& ops, const GridDensity& rho0, int steps, double cfl = 0.5,
                         int record_every = 1);

/// Header x1..xd followed by the named columns; one row per node.
void write_grid_csv(std::ostream& out, const Grid& grid, const std::vector<std::string>& names,
                    const std::vector<const Vec*>& columns);

} // namespace gsde
