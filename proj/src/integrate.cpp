#include "gsde/integrate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <array>
#include <thread>

namespace gsde {

const char* to_string(Scheme s) {
    switch (s) {
    case Scheme::DetRk4: return "det_rk4";
    case Scheme::ItoEm: return "ito_em";
    case Scheme::StratHeun: return "strat_heun";
    }
    return "?";
}

std::optional<Scheme> scheme_from_string(std::string_view name) {
    for (auto s : {Scheme::DetRk4, Scheme::ItoEm, Scheme::StratHeun})
        if (name == to_string(s)) return s;
    return std::nullopt;
}

const char* to_string(ExitFlag f) {
    switch (f) {
    case ExitFlag::Completed: return "completed";
    case ExitFlag::LeftBounds: return "left_bounds";
    case ExitFlag::StepError: return "step_error";
    }
    return "?";
}

void SimConfig::validate() const {
    if (!(dt > 0) || !std::isfinite(dt)) throw ConfigError("dt must be positive and finite");
    if (steps < 0) throw ConfigError("steps must be non-negative");
    if (!std::isfinite(dt * static_cast<double>(steps))) throw ConfigError("steps * dt must be finite");
    if (n_traj < 1) throw ConfigError("n_traj must be >= 1");
    if (record_every < 1) throw ConfigError("record_every must be >= 1");
    if (temperature && !(*temperature >= 0)) throw ConfigError("temperature must be non-negative");
    if (workers < 0) throw ConfigError("workers must be non-negative");
}

// ---------------------------------------------------------------------------

Stepper::Stepper(SdeModel model, Scheme scheme) : model_(std::move(model)), scheme_(scheme) {
    const int d = model_.sys->dim();
    for (Vec* v : {&k1_, &k2_, &k3_, &k4_, &y_, &noise_, &xt_}) v->resize(d);
}

void Stepper::step(Vec& x, double dt, const double* xi) {
    switch (scheme_) {
    case Scheme::DetRk4: rk4(x, dt); break;
    case Scheme::ItoEm: euler_maruyama(x, dt, xi); break;
    case Scheme::StratHeun: heun(x, dt, xi); break;
    }
    if (!x.allFinite()) throw EvaluationError("non-finite state after step", x);
}

void Stepper::rk4(Vec& x, double dt) {
    auto stage = [&](const Vec& at, Vec& k, int index) {
        try {
            deterministic_drift(model_, at, ws_, k);
        } catch (const EvaluationError& e) {
            throw EvaluationError("RK4 stage " + std::to_string(index) + ": " + e.what(), at);
        }
        if (!k.allFinite()) throw EvaluationError("RK4 stage " + std::to_string(index) + " is not finite", at);
    };
    stage(x, k1_, 1);
    y_ = x + 0.5 * dt * k1_;
    stage(y_, k2_, 2);
    y_ = x + 0.5 * dt * k2_;
    stage(y_, k3_, 3);
    y_ = x + dt * k3_;
    stage(y_, k4_, 4);
    x += (dt / 6.0) * (k1_ + 2.0 * k2_ + 2.0 * k3_ + k4_);
}

void Stepper::euler_maruyama(Vec& x, double dt, const double* xi) {
    ito_drift(model_, x, ws_, k1_);
    const int r = channels();
    noise_.setZero();
    if (model_.T > 0.0 && r > 0) {
        frame_at(model_, x, ws_, false);
        noise_.noalias() = ws_.A * Eigen::Map<const Vec>(xi, r);
    }
    x += dt * k1_ + std::sqrt(2.0 * model_.T * dt) * noise_;
}

void Stepper::heun(Vec& x, double dt, const double* xi) {
    const int r = channels();
    const double amp = std::sqrt(2.0 * model_.T * dt);
    const bool noisy = model_.T > 0.0 && r > 0;
    stratonovich_drift(model_, x, ws_, k1_);
    noise_.setZero();
    if (noisy) {
        A0_ = ws_.A;
        noise_.noalias() = A0_ * Eigen::Map<const Vec>(xi, r);
    }
    xt_ = x + dt * k1_ + amp * noise_;
    stratonovich_drift(model_, xt_, ws_, k2_);
    if (noisy) noise_.noalias() += ws_.A * Eigen::Map<const Vec>(xi, r);
    x += (0.5 * dt) * (k1_ + k2_) + (0.5 * amp) * noise_;
}

// ---------------------------------------------------------------------------

Vec step_deterministic(const GenericSystem& sys, const Vec& x, double dt) {
    if (!(dt > 0)) throw ConfigError("dt must be positive");
    Stepper s(SdeModel::standard(sys), Scheme::DetRk4);
    Vec y = x;
    s.step(y, dt, nullptr);
    return y;
}

Vec step_ito(const GenericSystem& sys, const Vec& x, double dt, const Vec& xi) {
    Stepper s(SdeModel::standard(sys), Scheme::ItoEm);
    if (xi.size() != s.channels())
        throw ConfigError("step_ito needs " + std::to_string(s.channels()) + " normals, got " +
                          std::to_string(xi.size()));
    Vec y = x;
    s.step(y, dt, xi.data());
    return y;
}

Vec step_stratonovich(const GenericSystem& sys, const Frame& frame, const Vec& x, double dt, const Vec& xi) {
    SdeModel m = SdeModel::standard(sys);
    m.frame = frame;
    Stepper s(std::move(m), Scheme::StratHeun);
    if (xi.size() != s.channels())
        throw ConfigError("step_stratonovich needs " + std::to_string(s.channels()) + " normals, got " +
                          std::to_string(xi.size()));
    Vec y = x;
    s.step(y, dt, xi.data());
    return y;
}

Vec project_energy(const GenericSystem& sys, const Vec& x, double E0) {
    Vec y = x;
    Vec g;
    for (int it = 0; it < 10; ++it) {
        const double E = sys.E.value_gradient(y, g);
        if (std::abs(E - E0) <= 1e-12) return y;
        const double g2 = g.squaredNorm();
        if (std::sqrt(g2) < 1e-12) throw EvaluationError("energy projection failed: gradient of E vanishes", y);
        y -= ((E - E0) / g2) * g;
    }
    return y;
}

// ---------------------------------------------------------------------------

namespace {

void run_one(Stepper& stepper, const GenericSystem& sys, const SimConfig& cfg, const NormalStream& stream, Vec x,
             const ScalarField& S, Trajectory& tr) {
    const int r = stepper.channels();
    std::vector<double> xi(std::max(r, 1));
    auto record = [&](long n) {
        tr.steps.push_back(n);
        tr.times.push_back(static_cast<double>(n) * cfg.dt);
        tr.states.push_back(x);
        tr.E.push_back(sys.E.value(x));
        tr.S.push_back(S.value(x));
    };
    double E0 = 0.0;
    try {
        E0 = sys.E.value(x);
        record(0);
    } catch (const Error& e) {
        tr.exit = ExitFlag::StepError;
        tr.exit_step = 0;
        tr.error = e.what();
        return;
    }
    const bool bounded = sys.patch.bounds.has_value();
    for (long n = 0; n < cfg.steps; ++n) {
        try {
            if (r > 0 && cfg.scheme != Scheme::DetRk4) stream.normals(static_cast<std::uint64_t>(n), r, xi.data());
            stepper.step(x, cfg.dt, xi.data());
            if (cfg.project_energy) x = project_energy(sys, x, E0);
            tr.max_energy_drift = std::max(tr.max_energy_drift, std::abs(sys.E.value(x) - E0));
        } catch (const Error& e) {
            tr.exit = ExitFlag::StepError;
            tr.exit_step = n + 1;
            tr.error = e.what();
            return;
        }
        const long k = n + 1;
        if (bounded && !sys.patch.contains(x)) {
            tr.exit = ExitFlag::LeftBounds;
            tr.exit_step = k;
            record(k);
            return;
        }
        if (k % cfg.record_every == 0 || k == cfg.steps) record(k);
    }
}

EnsembleSummary summarize(const std::vector<Trajectory>& trs, double dt) {
    std::map<long, std::array<double, 5>> acc;   // count, sumE, sumE2, sumS, sumS2
    for (const auto& t : trs) {
        for (std::size_t i = 0; i < t.steps.size(); ++i) {
            auto& a = acc[t.steps[i]];
            a[0] += 1;
            a[1] += t.E[i];
            a[2] += t.E[i] * t.E[i];
            a[3] += t.S[i];
            a[4] += t.S[i] * t.S[i];
        }
    }
    EnsembleSummary s;
    for (const auto& [step, a] : acc) {
        s.steps.push_back(step);
        s.times.push_back(static_cast<double>(step) * dt);
        s.count.push_back(static_cast<int>(a[0]));
        const double mE = a[1] / a[0], mS = a[3] / a[0];
        s.mean_E.push_back(mE);
        s.mean_S.push_back(mS);
        s.var_E.push_back(std::max(0.0, a[2] / a[0] - mE * mE));
        s.var_S.push_back(std::max(0.0, a[4] / a[0] - mS * mS));
    }
    return s;
}

} // namespace

EnsembleResult run_ensemble(const GenericSystem& sys, const SimConfig& cfg, const InitialSampler& sampler) {
    cfg.validate();
    const SdeModel model = cfg.temperature ? SdeModel::at_temperature(sys, *cfg.temperature) : SdeModel::standard(sys);
    EnsembleResult res;
    res.trajectories.resize(cfg.n_traj);
    std::atomic<int> next{0};
    auto worker = [&] {
        Stepper stepper(model, cfg.scheme);
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= cfg.n_traj) return;
            const NormalStream stream(cfg.seed, static_cast<std::uint32_t>(i));
            Trajectory& tr = res.trajectories[i];
            Vec x0;
            try {
                x0 = sampler(static_cast<std::uint32_t>(i), stream);
            } catch (const Error& e) {
                tr.exit = ExitFlag::StepError;
                tr.exit_step = 0;
                tr.error = e.what();
                continue;
            }
            if (x0.size() != sys.dim()) throw ConfigError("initial state has the wrong dimension");
            run_one(stepper, sys, cfg, stream, std::move(x0), model.S, tr);
        }
    };
    int nw = cfg.workers > 0 ? cfg.workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    nw = std::min(nw, cfg.n_traj);
    if (nw <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr err;
        std::mutex m;
        for (int w = 0; w < nw; ++w)
            pool.emplace_back([&] {
                try {
                    worker();
                } catch (...) {
                    std::lock_guard lock(m);
                    if (!err) err = std::current_exception();
                }
            });
        for (auto& t : pool) t.join();
        if (err) std::rethrow_exception(err);
    }
    for (const auto& t : res.trajectories) {
        res.max_energy_drift = std::max(res.max_energy_drift, t.max_energy_drift);
        if (t.exit == ExitFlag::LeftBounds) ++res.exited;
        if (t.exit == ExitFlag::StepError) ++res.failed;
    }
    res.summary = summarize(res.trajectories, cfg.dt);
    return res;
}

EnsembleResult run_ensemble(const GenericSystem& sys, const SimConfig& cfg, const Vec& x0) {
    if (x0.size() != sys.dim()) throw ConfigError("x0 has dimension " + std::to_string(x0.size()) + ", system has " +
                                                  std::to_string(sys.dim()));
    return run_ensemble(sys, cfg, [x0](std::uint32_t, const NormalStream&) { return x0; });
}

std::vector<SweepRow> zero_noise_sweep(const GenericSystem& sys, const std::vector<double>& T_list,
                                       const SimConfig& cfg, const Vec& x0) {
    if (!sys.scaling) throw ConfigError("zero_noise_sweep needs a system with temperature scaling");
    if (T_list.empty()) throw ConfigError("T_list is empty");
    for (std::size_t i = 0; i < T_list.size(); ++i) {
        if (!(T_list[i] >= 0)) throw ConfigError("temperatures must be non-negative");
        if (i > 0 && !(T_list[i] < T_list[i - 1])) throw ConfigError("T_list must be sorted in descending order");
    }
    SimConfig det = cfg;
    det.scheme = Scheme::DetRk4;
    det.n_traj = 1;
    det.temperature = 0.0;
    const auto ref = run_ensemble(sys, det, x0);
    const Trajectory& path = ref.trajectories[0];
    if (path.exit != ExitFlag::Completed)
        throw EvaluationError("deterministic reference path did not complete: " + std::string(to_string(path.exit)),
                              x0);
    std::map<long, std::size_t> at;
    for (std::size_t i = 0; i < path.steps.size(); ++i) at[path.steps[i]] = i;

    std::vector<SweepRow> rows;
    for (double T : T_list) {
        SimConfig run = cfg;
        run.temperature = T;
        const auto ens = run_ensemble(sys, run, x0);
        std::map<long, std::pair<double, int>> acc;
        for (const auto& t : ens.trajectories) {
            for (std::size_t i = 0; i < t.steps.size(); ++i) {
                if (t.exit == ExitFlag::LeftBounds && t.steps[i] == t.exit_step) continue;
                auto it = at.find(t.steps[i]);
                if (it == at.end()) continue;
                auto& a = acc[t.steps[i]];
                a.first += (t.states[i] - path.states[it->second]).squaredNorm();
                a.second += 1;
            }
        }
        SweepRow row;
        row.T = T;
        for (const auto& [step, a] : acc) row.deviation = std::max(row.deviation, std::sqrt(a.first / a.second));
        row.deviation_over_sqrtT = T > 0 ? row.deviation / std::sqrt(T) : std::nan("");
        rows.push_back(row);
    }
    return rows;
}

} // namespace gsde
