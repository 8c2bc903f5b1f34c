#include "gsde/system.hpp"

#include <array>
#include <cmath>

namespace gsde {

namespace {

using expr::NodePtr;

NodePtr X(int i) { return expr::variable(i); }
NodePtr C(double v) { return expr::constant(v); }

NodePtr parse_unary(const std::string& text, const char* what) {
    try {
        return expr::parse_tree(text, 1);
    } catch (const expr::ParseError& e) {
        throw ConfigError(std::string(what) + ": " + e.what());
    }
}

/// Replaces x1 in a one-variable tree by `arg`.
NodePtr apply_unary(const NodePtr& f, const NodePtr& arg) {
    const NodePtr r[] = {arg};
    return expr::substitute(f, r);
}

std::vector<expr::Expression> wrap(const std::vector<NodePtr>& nodes, int d) {
    std::vector<expr::Expression> out;
    out.reserve(nodes.size());
    for (const auto& n : nodes) out.emplace_back(n, d);
    return out;
}

MatrixField matrix(const std::vector<NodePtr>& entries, int d, SymmetryTag tag) {
    return MatrixField::from_expressions(wrap(entries, d), d, tag);
}

VectorField vector_field(const std::vector<NodePtr>& comps, int d) { return VectorField::from_expressions(wrap(comps, d)); }

std::vector<NodePtr> zeros(int d) { return std::vector<NodePtr>(static_cast<std::size_t>(d) * d, C(0.0)); }

void attach_identity_scaling(GenericSystem& sys) {
    Scaling sc;
    sc.S_tilde = sys.S;
    sc.K_tilde = sys.K;
    sc.frame_tilde = sys.frame;
    sc.active_T = 1.0;
    sys.scaling = std::move(sc);
}

std::vector<Interval> cube(int d, double lo, double hi) { return std::vector<Interval>(d, Interval{lo, hi}); }

} // namespace

const char* to_string(CatalogId id) {
    switch (id) {
    case CatalogId::DampedOscillator: return "damped_oscillator";
    case CatalogId::RigidBody: return "rigid_body";
    case CatalogId::OuGradient: return "ou_gradient";
    case CatalogId::CircleDiffusion: return "circle_diffusion";
    case CatalogId::CanonicalHamiltonian: return "canonical_hamiltonian";
    }
    return "?";
}

std::optional<CatalogId> catalog_id_from_string(std::string_view name) {
    for (auto id : {CatalogId::DampedOscillator, CatalogId::RigidBody, CatalogId::OuGradient,
                    CatalogId::CircleDiffusion, CatalogId::CanonicalHamiltonian})
        if (name == to_string(id)) return id;
    return std::nullopt;
}

GenericSystem make_damped_oscillator(const DampedOscillatorParams& p) {
    if (!(p.mass > 0)) throw ConfigError("damped_oscillator: mass must be positive");
    if (!(p.gamma >= 0)) throw ConfigError("damped_oscillator: gamma must be non-negative");
    const int d = 3;
    const NodePtr V = parse_unary(p.potential, "damped_oscillator potential");
    const NodePtr s = parse_unary(p.entropy, "damped_oscillator entropy");
    const NodePtr ds = expr::derivative(s, 1);

    GenericSystem sys;
    sys.name = "damped_oscillator";
    sys.patch = CoordinatePatch(d, std::vector<Interval>{{-3, 3}, {-3, 3}, {0.1, 10}}, sys.name);

    const NodePtr kinetic = expr::div(expr::pow(X(2), C(2)), C(2 * p.mass));
    sys.E = ScalarField::from_expression(expr::Expression(expr::add(expr::add(kinetic, apply_unary(V, X(1))), X(3)), d));
    sys.S = ScalarField::from_expression(expr::Expression(apply_unary(s, X(3)), d));
    sys.nu = VolumeDensity::lebesgue(d);

    auto J = zeros(d);
    J[0 * d + 1] = C(1);
    J[1 * d + 0] = C(-1);
    sys.J = matrix(J, d, SymmetryTag::Antisymmetric);

    const NodePtr sprime = apply_unary(ds, X(3));
    const NodePtr coef = expr::div(C(p.gamma), sprime);
    const std::array<NodePtr, 3> u = {C(0), C(1), expr::neg(expr::div(X(2), C(p.mass)))};
    std::vector<NodePtr> K(d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) K[i * d + j] = expr::mul(coef, expr::mul(u[i], u[j]));
    sys.K = matrix(K, d, SymmetryTag::SymmetricPsd);

    const NodePtr amp = expr::call(expr::Func::Sqrt, coef);
    sys.frame = Frame::user_supplied(d, {vector_field({expr::mul(amp, u[0]), expr::mul(amp, u[1]), expr::mul(amp, u[2])}, d)});

    const expr::Expression sp(apply_unary(ds, X(1)), 1);
    const auto& eb = (*sys.patch.bounds)[2];
    for (int k = 0; k <= 32; ++k) {
        Vec e(1);
        e[0] = eb.lo + eb.width() * k / 32.0;
        double v = 0.0;
        try {
            v = sp.value(e);
        } catch (const expr::DomainError&) {
            v = std::nan("");
        }
        if (!(v > 0))
            throw ConfigError("damped_oscillator: entropy derivative is not positive at e = " + std::to_string(e[0]));
    }
    attach_identity_scaling(sys);
    return sys;
}

GenericSystem make_rigid_body(const RigidBodyParams& p) {
    if (!(p.lambda >= 0)) throw ConfigError("rigid_body: lambda must be non-negative");
    for (double I : p.inertia)
        if (!(I > 0)) throw ConfigError("rigid_body: inertia must be positive");
    const int d = 3;
    GenericSystem sys;
    sys.name = "rigid_body";
    sys.patch = CoordinatePatch(d, cube(d, -2, 2), sys.name);

    std::array<NodePtr, 3> g;
    NodePtr E = C(0);
    NodePtr c = C(0);
    for (int i = 0; i < 3; ++i) {
        g[i] = expr::div(X(i + 1), C(p.inertia[i]));
        E = expr::add(E, expr::div(expr::pow(X(i + 1), C(2)), C(2 * p.inertia[i])));
        c = expr::add(c, expr::pow(X(i + 1), C(2)));
    }
    c = expr::div(c, C(2));
    sys.E = ScalarField::from_expression(expr::Expression(E, d));
    sys.S = ScalarField::from_expression(expr::Expression(apply_unary(parse_unary(p.casimir_entropy, "rigid_body casimir_entropy"), c), d));
    sys.nu = VolumeDensity::lebesgue(d);

    auto J = zeros(d);
    J[0 * d + 1] = expr::neg(X(3));
    J[1 * d + 0] = X(3);
    J[0 * d + 2] = X(2);
    J[2 * d + 0] = expr::neg(X(2));
    J[1 * d + 2] = expr::neg(X(1));
    J[2 * d + 1] = X(1);
    sys.J = matrix(J, d, SymmetryTag::Antisymmetric);

    NodePtr g2 = C(0);
    for (int i = 0; i < 3; ++i) g2 = expr::add(g2, expr::mul(g[i], g[i]));
    std::vector<NodePtr> K(d * d);
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            NodePtr e = expr::neg(expr::mul(g[i], g[j]));
            if (i == j) e = expr::add(g2, e);
            K[i * d + j] = expr::mul(C(p.lambda), e);
        }
    }
    sys.K = matrix(K, d, SymmetryTag::SymmetricPsd);

    const NodePtr s = C(std::sqrt(p.lambda));
    auto scale = [&](NodePtr n) { return expr::mul(s, std::move(n)); };
    std::vector<VectorField> frame;
    frame.push_back(vector_field({C(0), scale(expr::neg(g[2])), scale(g[1])}, d));
    frame.push_back(vector_field({scale(g[2]), C(0), scale(expr::neg(g[0]))}, d));
    frame.push_back(vector_field({scale(expr::neg(g[1])), scale(g[0]), C(0)}, d));
    sys.frame = Frame::user_supplied(d, std::move(frame));
    attach_identity_scaling(sys);
    return sys;
}

GenericSystem make_ou_gradient(int d) {
    if (d < 1) throw ConfigError("ou_gradient: dim must be >= 1");
    GenericSystem sys;
    sys.name = "ou_gradient";
    sys.patch = CoordinatePatch(d, cube(d, -5, 5), sys.name);
    NodePtr S = C(0);
    for (int i = 1; i <= d; ++i) S = expr::sub(S, expr::div(expr::pow(X(i), C(2)), C(2)));
    sys.E = ScalarField::constant(d, 0.0);
    sys.S = ScalarField::from_expression(expr::Expression(S, d));
    sys.nu = VolumeDensity::lebesgue(d);
    sys.J = MatrixField::zero(d, SymmetryTag::Antisymmetric);
    auto K = zeros(d);
    for (int i = 0; i < d; ++i) K[i * d + i] = C(1);
    sys.K = matrix(K, d, SymmetryTag::SymmetricPsd);
    std::vector<VectorField> frame;
    for (int i = 0; i < d; ++i) {
        std::vector<NodePtr> e(d, C(0));
        e[i] = C(1);
        frame.push_back(vector_field(e, d));
    }
    sys.frame = Frame::user_supplied(d, std::move(frame));
    attach_identity_scaling(sys);
    return sys;
}

GenericSystem make_circle_diffusion() {
    const int d = 2;
    GenericSystem sys;
    sys.name = "circle_diffusion";
    sys.patch = CoordinatePatch(d, cube(d, -2, 2), sys.name);
    sys.E = ScalarField::from_expression(
        expr::Expression(expr::div(expr::add(expr::pow(X(1), C(2)), expr::pow(X(2), C(2))), C(2)), d));
    sys.S = ScalarField::constant(d, 0.0);
    sys.nu = VolumeDensity::lebesgue(d);
    sys.J = MatrixField::zero(d, SymmetryTag::Antisymmetric);
    const std::array<NodePtr, 2> a = {X(2), expr::neg(X(1))};
    std::vector<NodePtr> K(d * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) K[i * d + j] = expr::mul(a[i], a[j]);
    sys.K = matrix(K, d, SymmetryTag::SymmetricPsd);
    sys.frame = Frame::user_supplied(d, {vector_field({a[0], a[1]}, d)});
    attach_identity_scaling(sys);
    return sys;
}

GenericSystem make_canonical_hamiltonian(int dof) {
    if (dof < 1) throw ConfigError("canonical_hamiltonian: dof must be >= 1");
    const int d = 2 * dof;
    GenericSystem sys;
    sys.name = "canonical_hamiltonian";
    sys.patch = CoordinatePatch(d, cube(d, -5, 5), sys.name);
    NodePtr E = C(0);
    for (int i = 1; i <= d; ++i) E = expr::add(E, expr::div(expr::pow(X(i), C(2)), C(2)));
    sys.E = ScalarField::from_expression(expr::Expression(E, d));
    sys.S = ScalarField::constant(d, 0.0);
    sys.nu = VolumeDensity::lebesgue(d);
    auto J = zeros(d);
    for (int i = 0; i < dof; ++i) {
        J[i * d + (dof + i)] = C(1);
        J[(dof + i) * d + i] = C(-1);
    }
    sys.J = matrix(J, d, SymmetryTag::Antisymmetric);
    sys.K = MatrixField::zero(d, SymmetryTag::SymmetricPsd);
    sys.frame = Frame::user_supplied(d, {});
    attach_identity_scaling(sys);
    return sys;
}

} // namespace gsde
