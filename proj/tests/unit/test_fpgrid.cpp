#include "doctest.h"

#include "gsde/fpgrid.hpp"

#include <sstream>

using namespace gsde;

TEST_CASE("grid geometry") {
    const Grid g(GridSpec{{{0, 1}, {-1, 1}}, {16, 21}});
    CHECK(g.size() == 16 * 21);
    CHECK(g.spacing(0) == doctest::Approx(1.0 / 15));
    CHECK(g.index(17, 0) == 1);
    CHECK(g.index(17, 1) == 1);
    double vol = 0.0;
    for (long n = 0; n < g.size(); ++n) vol += g.volume(n);
    CHECK(vol == doctest::Approx(2.0));
    CHECK_FALSE(g.interior(0, 3));
    CHECK(g.interior(g.stride(1) * 10 + 8, 3));
    CHECK_THROWS_AS(build_grid_generator(make_ou_gradient(1), GridSpec{{{0, 1}}, {8}}), ConfigError);
}

TEST_CASE("OU grid operator reduces to the 5-point Laplacian plus drift") {
    // E = 0, J = 0, K = I, S = -|x|^2/2: L f = -x . grad f + Laplacian f.
    const auto ou = make_ou_gradient(2);
    const GridSpec spec{{{-2, 2}, {-2, 2}}, {17, 17}};
    const auto op = build_grid_generator(ou, spec);
    const Grid& g = op.grid;
    const long c = 8 * g.stride(1) + 8;   // the origin
    const double h = g.spacing(0);
    CHECK(op.matrix.coeff(c, c) == doctest::Approx(-4 / (h * h)));
    CHECK(op.matrix.coeff(c, c + 1) == doctest::Approx(1 / (h * h)));
    CHECK(op.matrix.coeff(c, c + g.stride(1)) == doctest::Approx(1 / (h * h)));
    CHECK(op.matrix.row(c).nonZeros() == 5);
}

TEST_CASE("3D stencils have at most 19 entries per row") {
    const auto rb = make_rigid_body({1.0, "-x1", {1, 2, 3}});
    const auto op = build_grid_generator(rb, GridSpec{{{-1, 1}, {-1, 1}, {-1, 1}}, {16, 16, 16}});
    long widest = 0;
    for (long r = 0; r < op.matrix.rows(); ++r) widest = std::max<long>(widest, op.matrix.row(r).nonZeros());
    CHECK(widest <= 19);
    CHECK(duality_defect(op) < 1e-12);
}

TEST_CASE("split operators have the right symmetry") {
    const auto osc = make_damped_oscillator();
    const auto ops = build_split_operators(osc, GridSpec{{{-2, 2}, {-2, 2}, {0.5, 3}}, {16, 16, 16}});
    const auto d = symmetry_split_check(ops);
    CHECK(d.sym < 1e-12);
    CHECK(d.antisym < 0.5);
}

TEST_CASE("memory guard refuses huge grids") {
    GridSpec spec{{{-1, 1}, {-1, 1}, {-1, 1}}, {1000, 1000, 1000}};
    CHECK(grid_memory_estimate_mb(spec) > 2048);
    CHECK_THROWS_AS(build_grid_generator(make_ou_gradient(3), spec), ConfigError);
}

TEST_CASE("relative entropy vanishes at the Gibbs density") {
    const auto ou = make_ou_gradient(2);
    const auto ops = build_split_operators(ou, GridSpec{{{-5, 5}, {-5, 5}}, {41, 41}});
    GridDensity gibbs{ops.S.array().exp().matrix()};
    const double Z = gibbs.mass(ops.m, ops.vol);
    gibbs.values /= Z;
    CHECK(gibbs.mass(ops.m, ops.vol) == doctest::Approx(1.0));
    // With rho = e^S / Z the integrand is (S - S + log Z) rho, so the value is log Z.
    CHECK(relative_entropy(gibbs, ops) == doctest::Approx(std::log(Z)).epsilon(1e-10));
    GridDensity flat{Vec::Constant(ops.S.size(), 1.0 / 100.0)};
    CHECK(relative_entropy(flat, ops) < std::log(Z));
}

TEST_CASE("density evolution keeps mass and raises entropy") {
    const auto ou = make_ou_gradient(2);
    const auto ops = build_split_operators(ou, GridSpec{{{-4, 4}, {-4, 4}}, {24, 24}});
    Vec rho(ops.S.size());
    for (long n = 0; n < rho.size(); ++n) {
        const Vec x = ops.grid.point(n);
        rho[n] = std::exp(-2 * (x - Vec::Constant(2, 1.0)).squaredNorm());
    }
    const auto ev = evolve_density(ops, GridDensity{rho}, 50);
    REQUIRE(ev.entropy.size() == 51);
    for (std::size_t i = 1; i < ev.entropy.size(); ++i) CHECK(ev.entropy[i] >= ev.entropy[i - 1] - 1e-12);
    CHECK(ev.mass.back() == doctest::Approx(ev.mass.front()).epsilon(1e-10));
}

TEST_CASE("grid CSV layout") {
    const Grid g(GridSpec{{{0, 1}, {0, 1}}, {16, 16}});
    Vec a = Vec::Zero(g.size());
    std::ostringstream os;
    write_grid_csv(os, g, {"a"}, {&a});
    const std::string text = os.str();
    CHECK(text.rfind("x1,x2,a\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 256);
}
