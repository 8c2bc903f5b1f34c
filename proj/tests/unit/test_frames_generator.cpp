#include "doctest.h"

#include "gsde/frames.hpp"
#include "gsde/generator.hpp"

using namespace gsde;

TEST_CASE("cometric factorization reproduces K") {
    Mat K(3, 3);
    K << 2, 1, 0, 1, 2, 0, 0, 0, 0;
    const auto cols = factorize_cometric(K);
    Mat R = Mat::Zero(3, 3);
    for (const auto& a : cols) R += a * a.transpose();
    CHECK((R - K).norm() < 1e-12);
    int nonzero = 0;
    for (const auto& a : cols) nonzero += a.norm() > 1e-12;
    CHECK(nonzero == 2);
}

TEST_CASE("user and spectral frames reconstruct K") {
    const auto osc = make_damped_oscillator();
    Vec x(3);
    x << 0.3, -0.6, 1.4;
    CHECK(frame_reconstruction_error(*osc.frame, osc.K, x) < 1e-13);
    const Frame spectral = Frame::spectral(osc.K);
    CHECK(frame_reconstruction_error(spectral, osc.K, x) < 1e-10);
    CHECK(horizontality_residual(osc, *osc.frame, x) < 1e-13);
}

TEST_CASE("Ito drift from div K matches B0 plus the frame correction") {
    for (const auto& sys : {make_damped_oscillator(), make_rigid_body(), make_circle_diffusion()}) {
        CAPTURE(sys.name);
        const Frame frame = sys.noise_frame();
        for (const auto& x : uniform_points(sampling_box(sys.patch), 10, 4)) {
            CHECK(ito_identity_residual(sys, frame, x) < 1e-10);
            const Vec lhs = ito_drift(sys, x);
            const Vec rhs = drift_B0(sys, frame, x) + strat_to_ito_correction(frame, x);
            CHECK((lhs - rhs).norm() < 1e-10);
        }
    }
}

TEST_CASE("div_nu K matches finite differences") {
    const auto rb = make_rigid_body({1.0, "-x1^2", {1, 2, 3}});
    Vec x(3);
    x << 0.6, -0.8, 0.3;
    const Vec div = divergence_nu_K(rb.K, rb.nu, x);
    const double h = 1e-5;
    for (int j = 0; j < 3; ++j) {
        double fd = 0.0;
        for (int i = 0; i < 3; ++i) {
            Vec xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            fd += (rb.K.value(xp)(i, j) - rb.K.value(xm)(i, j)) / (2 * h);
        }
        CHECK(div[j] == doctest::Approx(fd).epsilon(1e-7));
    }
}

TEST_CASE("sub-Laplacian agrees between K and frame forms") {
    const auto osc = make_damped_oscillator();
    const auto f = ScalarField::parse("sin(x1) * x2^2 + x3^3", 3);
    for (const auto& x : uniform_points(sampling_box(osc.patch), 10, 8)) {
        CHECK(sub_laplacian(osc, f, x) == doctest::Approx(sub_laplacian_frame(osc, *osc.frame, f, x)).epsilon(1e-10));
        const auto parts = generator_parts(osc, f, x);
        CHECK(parts.total == doctest::Approx(parts.antisymmetric + parts.symmetric));
        CHECK(generator_L(osc, f, x) == doctest::Approx(parts.total));
        CHECK(adjoint_Lstar(osc, f, x) == doctest::Approx(parts.symmetric - parts.antisymmetric));
    }
}

TEST_CASE("generator annihilates functions of E") {
    const auto osc = make_damped_oscillator();
    const auto hE = ScalarField::parse("sin(x2^2 / 2 + x1^2 / 2 + x3)", 3);
    for (const auto& x : uniform_points(sampling_box(osc.patch), 10, 2)) CHECK(std::abs(generator_L(osc, hE, x)) < 1e-12);
}

TEST_CASE("bumps are smooth and compactly supported") {
    Bump b;
    b.center = Vec::Zero(2);
    b.radius = 0.5;
    b.beta = Vec::Zero(2);
    b.beta[0] = 0.3;
    Vec inside(2), outside(2);
    inside << 0.1, 0.2;
    outside << 0.4, 0.4;
    CHECK(b.supports(inside));
    CHECK_FALSE(b.supports(outside));
    CHECK(b.value(outside) == 0.0);
    double v;
    Vec g;
    Mat H;
    REQUIRE(b.jet(inside, v, g, H));
    const auto f = b.field();
    CHECK(f.value(inside) == doctest::Approx(v));
    const double h = 1e-6;
    Vec xp = inside, xm = inside;
    xp[1] += h;
    xm[1] -= h;
    CHECK(g[1] == doctest::Approx((b.value(xp) - b.value(xm)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("battery stays inside its region") {
    const std::vector<Interval> region = {{-1, 1}, {0, 4}};
    const auto bat = make_battery(region, 20, 3);
    REQUIRE(bat.bumps.size() == 20);
    for (const auto& b : bat.bumps) {
        CHECK(b.center[0] - b.radius >= -1);
        CHECK(b.center[0] + b.radius <= 1);
        CHECK(b.center[1] - b.radius >= 0);
        CHECK(b.center[1] + b.radius <= 4);
    }
}

TEST_CASE("Gauss-Legendre rule integrates polynomials exactly") {
    std::vector<double> nodes, weights;
    quadrature_rule(QuadratureSpec::Rule::GaussLegendre, {0, 2}, 5, nodes, weights);
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * std::pow(nodes[i], 9);
    CHECK(s == doctest::Approx(std::pow(2.0, 10) / 10).epsilon(1e-13));
    quadrature_rule(QuadratureSpec::Rule::Midpoint, {0, 1}, 4, nodes, weights);
    CHECK(nodes.front() == doctest::Approx(0.125));
}

TEST_CASE("stationarity residual on the OU gradient system") {
    const auto ou = make_ou_gradient(2);
    QuadratureSpec q{{{-4, 4}, {-4, 4}}, {32, 32}, QuadratureSpec::Rule::GaussLegendre};
    const auto bat = make_battery(q.box, 5, 1);
    const auto one = expr::Expression::parse("1", 1);
    CHECK(stationarity_residual(ou, bat, one, q).residual < 1e-6);
    const auto [sym, antisym] = split_defects_quadrature(ou, bat.bumps[0], bat.bumps[1], q);
    CHECK(sym < 1e-8);
    CHECK(antisym < 1e-8);
}
