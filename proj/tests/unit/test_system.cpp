#include "doctest.h"

#include "gsde/config.hpp"
#include "gsde/verifier.hpp"

using namespace gsde;

namespace {

GenericSystem custom(const std::string& body) {
    Config cfg = Config::parse_string("[system]\nkind = custom\n" + body);
    return load_system(cfg.section("system"), false);
}

} // namespace

TEST_CASE("every catalog system satisfies the axioms") {
    for (const auto& sys : {make_damped_oscillator(), make_rigid_body(), make_ou_gradient(3), make_circle_diffusion(),
                            make_canonical_hamiltonian(2)}) {
        CAPTURE(sys.name);
        const auto rep = verify_system(sys, 200, 3);
        CHECK(rep.analytic);
        CHECK(rep.passed());
        CHECK(rep.evaluation_errors == 0);
    }
}

TEST_CASE("jacobi defect of a 3D bracket with a position-dependent entry") {
    // J12 = 1, J13 = -x1: {x1, {x2, x3}} + cyclic = -1 is not zero.
    const auto sys = custom("dim = 3\nJ12 = 1\nJ13 = -x1\nE = 0\nS = 0\n");
    const auto x1 = ScalarField::parse("x1", 3), x2 = ScalarField::parse("x2", 3), x3 = ScalarField::parse("x3", 3);
    Vec x(3);
    x << 0.4, -0.2, 0.9;
    CHECK(std::abs(jacobi_defect(sys.J, x, x1, x2, x3)) == doctest::Approx(1.0));
    CHECK_FALSE(verify_system(sys, 50, 1).find("jacobi")->pass);
}

TEST_CASE("canonical structure has zero Jacobi defect") {
    const auto sys = make_canonical_hamiltonian(2);
    const auto f = ScalarField::parse("x1 * x3 + x2^2", 4);
    const auto g = ScalarField::parse("sin(x4) + x1", 4);
    const auto h = ScalarField::parse("x3 * x2", 4);
    Vec x(4);
    x << 0.1, 0.2, 0.3, 0.4;
    CHECK(std::abs(jacobi_defect(sys.J, x, f, g, h)) < 1e-12);
}

TEST_CASE("non-interaction and unimodularity residuals") {
    const auto osc = make_damped_oscillator();
    Vec x(3);
    x << 0.5, -0.7, 1.3;
    const auto [jds, kde] = non_interaction_residual(osc, x);
    CHECK(jds < 1e-14);
    CHECK(kde < 1e-14);
    CHECK(unimodularity_residual(osc, x).norm() < 1e-14);

    const auto bad = custom("dim = 2\nJ12 = x1\nE = x2\nS = 0\n");
    Vec y(2);
    y << 0.3, 0.1;
    CHECK(unimodularity_residual(bad, y).norm() == doctest::Approx(1.0));
}

TEST_CASE("casimir multiple check distinguishes densities") {
    const auto rb = make_rigid_body();
    const auto pts = halton_points(sampling_box(rb.patch), 50, 2);
    // |x|^2 is a Casimir of the rigid-body bracket, x1 is not.
    CHECK(casimir_multiple_check(rb, VolumeDensity(ScalarField::parse("exp(x1^2 + x2^2 + x3^2)", 3)), pts) < 1e-10);
    CHECK(casimir_multiple_check(rb, VolumeDensity(ScalarField::parse("exp(x1)", 3)), pts) > 1e-3);
}

TEST_CASE("temperature scaling") {
    const auto osc = make_damped_oscillator();
    REQUIRE(osc.scaling.has_value());
    const auto pts = uniform_points(sampling_box(osc.patch), 10, 1);
    CHECK(scaling_residual(osc, pts) < 1e-12);
    const auto cold = at_temperature(osc, 0.25);
    Vec x(3);
    x << 0.1, 0.2, 1.5;
    CHECK(cold.S.value(x) == doctest::Approx(4 * osc.S.value(x)));
    CHECK((cold.K.value(x) - 0.25 * osc.K.value(x)).norm() < 1e-14);
}

TEST_CASE("loader rejects bad systems") {
    Config c1 = Config::parse_string("[system]\nkind = nonsense\n");
    CHECK_THROWS_AS(load_system(c1.section("system")), ConfigError);
    Config c2 = Config::parse_string("[system]\nkind = custom\ndim = 2\nJ12 = 1\nJ21 = 1\nE = x1\nS = 0\n");
    CHECK_THROWS(load_system(c2.section("system")));
    Config c3 = Config::parse_string("[system]\nkind = custom\ndim = 2\nE = x3\nS = 0\n");
    CHECK_THROWS(load_system(c3.section("system")));
}

TEST_CASE("halton points stay in the box") {
    const std::vector<Interval> box = {{-1, 1}, {2, 3}};
    const auto pts = halton_points(box, 100, 9);
    REQUIRE(pts.size() == 100);
    for (const auto& p : pts) {
        CHECK(p[0] >= -1);
        CHECK(p[0] <= 1);
        CHECK(p[1] >= 2);
        CHECK(p[1] <= 3);
    }
}
