#include "doctest.h"

#include "gsde/integrate.hpp"
#include "gsde/rng.hpp"

using namespace gsde;

TEST_CASE("Philox4x32-10 known answers") {
    CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) == Philox4x32{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
    CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
          Philox4x32{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
    CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
          Philox4x32{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("normal streams are addressable and well distributed") {
    const NormalStream a(42, 7), b(42, 7), c(42, 8);
    double x[5], y[5], z[5];
    a.normals(123, 5, x);
    b.normals(123, 5, y);
    c.normals(123, 5, z);
    for (int i = 0; i < 5; ++i) {
        CHECK(x[i] == y[i]);
        CHECK(x[i] != z[i]);
    }
    // The first three channels do not depend on how many are requested.
    double w[3];
    a.normals(123, 3, w);
    for (int i = 0; i < 3; ++i) CHECK(w[i] == x[i]);

    double sum = 0, sq = 0;
    const int n = 20000;
    for (int s = 0; s < n; ++s) {
        double v[2];
        a.normals(s, 2, v);
        sum += v[0] + v[1];
        sq += v[0] * v[0] + v[1] * v[1];
    }
    CHECK(std::abs(sum / (2 * n)) < 0.03);
    CHECK(sq / (2 * n) == doctest::Approx(1.0).epsilon(0.03));
    const double u = a.uniform(5, 1);
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
}

TEST_CASE("RK4 is fourth order on the rigid body") {
    const auto rb = make_rigid_body({1.0, "-x1", {1, 2, 3}});
    Vec x0(3);
    x0 << 1.0, 0.5, -0.3;
    auto run = [&](double dt, int n) {
        Vec x = x0;
        for (int i = 0; i < n; ++i) x = step_deterministic(rb, x, dt);
        return x;
    };
    const Vec ref = run(1e-3, 1000);
    const double e1 = (run(0.1, 10) - ref).norm(), e2 = (run(0.05, 20) - ref).norm();
    CHECK(e1 / e2 > 12.0);
}

TEST_CASE("stepping primitives conserve energy to scheme order") {
    const auto circle = make_circle_diffusion();
    Vec x(2), xi(circle.noise_frame().rank());
    x << 1, 0;
    xi.setConstant(0.3);
    const Vec y = step_stratonovich(circle, circle.noise_frame(), x, 1e-4, xi);
    CHECK(std::abs(circle.E.value(y) - circle.E.value(x)) < 1e-6);
    const Vec z = step_ito(circle, x, 1e-4, xi);
    CHECK(z.allFinite());
    const Vec p = project_energy(circle, 1.1 * x, circle.E.value(x));
    CHECK(std::abs(circle.E.value(p) - circle.E.value(x)) < 1e-12);
}

TEST_CASE("sim config validation") {
    SimConfig sc;
    CHECK_NOTHROW(sc.validate());
    sc.dt = -1;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    sc.dt = 1e-3;
    sc.n_traj = 0;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    CHECK(scheme_from_string("ito_em") == Scheme::ItoEm);
    CHECK_FALSE(scheme_from_string("milstein").has_value());
    CHECK(std::string(to_string(Scheme::StratHeun)) == "strat_heun");
}

TEST_CASE("ensembles are independent of the worker count") {
    const auto osc = make_damped_oscillator();
    Vec x0(3);
    x0 << 1, 0.5, 1;
    SimConfig sc;
    sc.dt = 1e-2;
    sc.steps = 50;
    sc.n_traj = 16;
    sc.seed = 9;
    sc.record_every = 10;
    sc.workers = 1;
    const auto a = run_ensemble(osc, sc, x0);
    sc.workers = 3;
    const auto b = run_ensemble(osc, sc, x0);
    REQUIRE(a.trajectories.size() == 16);
    for (std::size_t t = 0; t < 16; ++t) {
        REQUIRE(a.trajectories[t].states.size() == b.trajectories[t].states.size());
        CHECK(a.trajectories[t].steps == std::vector<long>{0, 10, 20, 30, 40, 50});
        for (std::size_t r = 0; r < a.trajectories[t].states.size(); ++r)
            CHECK((a.trajectories[t].states[r] - b.trajectories[t].states[r]).norm() == 0.0);
    }
    CHECK(a.summary.steps.size() == 6);
    CHECK(a.summary.count[0] == 16);
}

TEST_CASE("trajectories that leave the patch stop with a flag") {
    const auto ou = make_ou_gradient(1);
    GenericSystem boxed = ou;
    boxed.patch = CoordinatePatch(1, std::vector<Interval>{{-0.05, 0.05}});
    SimConfig sc;
    sc.dt = 1e-2;
    sc.steps = 200;
    sc.n_traj = 4;
    sc.scheme = Scheme::ItoEm;
    const auto res = run_ensemble(boxed, sc, Vec(Vec::Zero(1)));
    CHECK(res.exited == 4);
    for (const auto& t : res.trajectories) {
        CHECK(t.exit == ExitFlag::LeftBounds);
        CHECK(t.exit_step == t.steps.back());
        CHECK_FALSE(boxed.patch.contains(t.states.back()));
    }
}

TEST_CASE("deterministic scheme decreases free energy on the oscillator") {
    const auto osc = make_damped_oscillator();
    Vec x0(3);
    x0 << 1, 0.5, 1;
    SimConfig sc;
    sc.dt = 1e-2;
    sc.steps = 300;
    sc.scheme = Scheme::DetRk4;
    sc.record_every = 1;
    const auto res = run_ensemble(osc, sc, x0);
    const auto& S = res.trajectories[0].S;
    for (std::size_t i = 1; i < S.size(); ++i) CHECK(S[i] >= S[i - 1] - 1e-12);
    CHECK(res.max_energy_drift < 1e-8);
}

TEST_CASE("zero-noise sweep requires descending temperatures") {
    const auto osc = make_damped_oscillator();
    Vec x0(3);
    x0 << 1, 0.5, 1;
    SimConfig sc;
    sc.dt = 1e-2;
    sc.steps = 20;
    sc.n_traj = 8;
    CHECK_THROWS_AS(zero_noise_sweep(osc, {0.01, 0.1}, sc, x0), ConfigError);
    const auto rows = zero_noise_sweep(osc, {0.1, 0.0}, sc, x0);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].deviation > 0);
    CHECK(std::isnan(rows[1].deviation_over_sqrtT));
}
