#pragma once

// Time stepping for the deterministic flow (RK4), the Ito SDE (Euler-Maruyama)
// and the Stratonovich SDE (Heun), ensembles with a counter-based noise
// contract, energy projection, and the zero-noise temperature sweep.

#include "gsde/frames.hpp"
#include "gsde/rng.hpp"
#include "gsde/system.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace gsde {

enum class Scheme { DetRk4, ItoEm, StratHeun };

const char* to_string(Scheme s);
std::optional<Scheme> scheme_from_string(std::string_view name);

struct SimConfig {
    double dt = 1e-3;
    long steps = 1000;
    int n_traj = 1;
    std::uint64_t seed = 1;
    Scheme scheme = Scheme::StratHeun;
    bool project_energy = false;
    int record_every = 1;
    std::optional<double> temperature;
    /// Worker threads; 0 picks the hardware concurrency. Never affects results.
    int workers = 0;

    void validate() const;
};

enum class ExitFlag { Completed, LeftBounds, StepError };

const char* to_string(ExitFlag f);

struct Trajectory {
    std::vector<long> steps;
    std::vector<double> times;
    std::vector<Vec> states;
    std::vector<double> E;
    std::vector<double> S;
    ExitFlag exit = ExitFlag::Completed;
    long exit_step = -1;   // step at which the trajectory stopped, if it did
    std::string error;
    double max_energy_drift = 0.0;
};

struct EnsembleSummary {
    std::vector<long> steps;
    std::vector<double> times;
    std::vector<int> count;
    std::vector<double> mean_E, var_E, mean_S, var_S;
};

struct EnsembleResult {
    std::vector<Trajectory> trajectories;
    EnsembleSummary summary;
    double max_energy_drift = 0.0;
    int exited = 0;
    int failed = 0;
};

/// Classical RK4 on J dE + K dS.
Vec step_deterministic(const GenericSystem& sys, const Vec& x, double dt);
/// Euler-Maruyama: x + ito_drift dt + sqrt(2 dt) sum_i A_i xi_i with the system's noise frame.
Vec step_ito(const GenericSystem& sys, const Vec& x, double dt, const Vec& xi);
/// Heun predictor-corrector for the Stratonovich SDE driven by B0 and the frame.
Vec step_stratonovich(const GenericSystem& sys, const Frame& frame, const Vec& x, double dt, const Vec& xi);
/// Newton steps along dE until |E - E0| <= 1e-12 (at most 10).
Vec project_energy(const GenericSystem& sys, const Vec& x, double E0);

/// Single-trajectory stepper with preallocated scratch space.
class Stepper {
public:
    Stepper(SdeModel model, Scheme scheme);

    const SdeModel& model() const noexcept { return model_; }
    int channels() const noexcept { return model_.frame.rank(); }

    /// Advances x in place; xi holds channels() standard normals (ignored for RK4).
    void step(Vec& x, double dt, const double* xi);

private:
    void rk4(Vec& x, double dt);
    void euler_maruyama(Vec& x, double dt, const double* xi);
    void heun(Vec& x, double dt, const double* xi);

    SdeModel model_;
    Scheme scheme_;
    DriftWorkspace ws_;
    Vec k1_, k2_, k3_, k4_, y_, noise_, xt_;
    Mat A0_;
};

using InitialSampler = std::function<Vec(std::uint32_t trajectory, const NormalStream& stream)>;

EnsembleResult run_ensemble(const GenericSystem& sys, const SimConfig& cfg, const Vec& x0);
EnsembleResult run_ensemble(const GenericSystem& sys, const SimConfig& cfg, const InitialSampler& sampler);

struct SweepRow {
    double T = 0.0;
    double deviation = 0.0;
    double deviation_over_sqrtT = 0.0;   // NaN at T = 0
};

/// For each T (sorted descending): max over recorded times of the RMS over
/// trajectories of |X_i(t) - x_det(t)|, with x_det from RK4 at the same dt.
std::vector<SweepRow> zero_noise_sweep(const GenericSystem& sys, const std::vector<double>& T_list,
                                       const SimConfig& cfg, const Vec& x0);

} // namespace gsde
