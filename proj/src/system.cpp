#include "gsde/system.hpp"

#include "gsde/config.hpp"
#include "gsde/frames.hpp"

#include <sstream>

namespace gsde {

bool GenericSystem::analytic() const {
    bool ok = J.analytic() && K.analytic() && E.analytic_hessian() && S.analytic_hessian() &&
              nu.density().analytic_gradient();
    if (frame && frame->source() == Frame::Source::UserSupplied)
        for (const auto& f : frame->fields()) ok = ok && f.analytic();
    return ok;
}

void GenericSystem::check_dimensions() const {
    const int d = patch.dim;
    auto bad = [&](int got, const char* what) {
        if (got != d)
            throw ConfigError(std::string(what) + " has dimension " + std::to_string(got) + ", system has " +
                              std::to_string(d));
    };
    bad(J.dim(), "J");
    bad(K.dim(), "K");
    bad(nu.dim(), "m");
    bad(E.dim(), "E");
    bad(S.dim(), "S");
    if (frame) bad(frame->dim(), "frame");
    if (scaling) {
        bad(scaling->S_tilde.dim(), "S_tilde");
        bad(scaling->K_tilde.dim(), "K_tilde");
        if (!(scaling->active_T > 0)) throw ConfigError("active_T must be positive");
    }
    if (J.tag() != SymmetryTag::Antisymmetric) throw ConfigError("J must be tagged antisymmetric");
    if (K.tag() != SymmetryTag::SymmetricPsd) throw ConfigError("K must be tagged symmetric_psd");
}

Frame GenericSystem::noise_frame() const {
    if (frame) return *frame;
    return Frame::spectral(K);
}

std::vector<Interval> sampling_box(const CoordinatePatch& patch) {
    if (patch.bounds) return *patch.bounds;
    return std::vector<Interval>(patch.dim, Interval{-1.0, 1.0});
}

void check_structure(const GenericSystem& sys, const std::vector<Vec>& points, double tol) {
    for (const auto& x : points) {
        sys.J.check_tag(x, tol);
        sys.K.check_tag(x, tol);
    }
}

double scaling_residual(const GenericSystem& sys, const std::vector<Vec>& points) {
    if (!sys.scaling) return 0.0;
    const double T = sys.scaling->active_T;
    double worst = 0.0;
    for (const auto& x : points) {
        worst = std::max(worst, std::abs(sys.S.value(x) - sys.scaling->S_tilde.value(x) / T));
        worst = std::max(worst, (sys.K.value(x) - T * sys.scaling->K_tilde.value(x)).norm());
    }
    return worst;
}

GenericSystem at_temperature(const GenericSystem& sys, double T) {
    if (!sys.scaling) throw ConfigError("system '" + sys.name + "' has no temperature scaling");
    if (!(T > 0)) throw ConfigError("temperature must be positive");
    GenericSystem out = sys;
    out.S = scaled(sys.scaling->S_tilde, 1.0 / T);
    out.K = scaled(sys.scaling->K_tilde, T);
    if (sys.scaling->frame_tilde)
        out.frame = sys.scaling->frame_tilde->scaled(std::sqrt(T));
    else
        out.frame.reset();
    out.scaling->active_T = T;
    return out;
}

// ---------------------------------------------------------------------------

namespace {

expr::Expression parse_in(ConfigSection& sec, const std::string& key, const std::string& fallback, int dim) {
    const std::string text = fallback.empty() ? sec.get_string(key) : sec.get_string(key, fallback);
    try {
        return expr::Expression::parse(text, dim);
    } catch (const expr::ParseError& e) {
        throw ConfigError("[system] " + key + ": " + e.what());
    }
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    return out;
}

MatrixField matrix_from_keys(ConfigSection& sec, const std::string& prefix, int d, SymmetryTag tag) {
    std::vector<expr::Expression> e(static_cast<std::size_t>(d) * d, expr::Expression::constant(0.0, d));
    std::vector<bool> given(e.size(), false);
    for (int i = 1; i <= d; ++i) {
        for (int j = 1; j <= d; ++j) {
            const std::string key = prefix + std::to_string(i) + std::to_string(j);
            if (!sec.has(key)) continue;
            e[(i - 1) * d + (j - 1)] = parse_in(sec, key, "", d);
            given[(i - 1) * d + (j - 1)] = true;
        }
    }
    for (int i = 0; i < d; ++i) {
        for (int j = 0; j < d; ++j) {
            if (given[i * d + j] || !given[j * d + i]) continue;
            const auto& t = e[j * d + i];
            e[i * d + j] = tag == SymmetryTag::Antisymmetric ? expr::Expression(expr::neg(t.tree()), d) : t;
        }
    }
    return MatrixField::from_expressions(std::move(e), d, tag);
}

GenericSystem load_custom(ConfigSection& sec) {
    const long long dl = sec.get_int("dim");
    if (dl < 1 || dl > 9) throw ConfigError("[system] dim must be between 1 and 9 for custom systems");
    const int d = static_cast<int>(dl);
    GenericSystem sys;
    sys.name = "custom";
    sys.E = ScalarField::from_expression(parse_in(sec, "E", "0", d));
    sys.S = ScalarField::from_expression(parse_in(sec, "S", "0", d));
    sys.nu = VolumeDensity(ScalarField::from_expression(parse_in(sec, "m", "1", d)));
    sys.J = matrix_from_keys(sec, "J", d, SymmetryTag::Antisymmetric);
    sys.K = matrix_from_keys(sec, "K", d, SymmetryTag::SymmetricPsd);
    sys.patch = CoordinatePatch(d, sec.get_box("bounds", d), "custom");

    std::vector<VectorField> frame;
    for (int i = 1; i <= 9; ++i) {
        const std::string key = "frame" + std::to_string(i);
        if (!sec.has(key)) continue;
        auto parts = split(sec.get_string(key), ';');
        if (static_cast<int>(parts.size()) != d)
            throw ConfigError("[system] " + key + ": expected " + std::to_string(d) + " components separated by ';'");
        std::vector<expr::Expression> comps;
        for (const auto& p : parts) {
            try {
                comps.push_back(expr::Expression::parse(p, d));
            } catch (const expr::ParseError& e) {
                throw ConfigError("[system] " + key + ": " + e.what());
            }
        }
        frame.push_back(VectorField::from_expressions(std::move(comps)));
    }
    if (!frame.empty()) sys.frame = Frame::user_supplied(d, std::move(frame));

    bool has_kt = false;
    for (const auto& k : sec.keys()) has_kt = has_kt || k.rfind("K_tilde", 0) == 0;
    if (sec.has("S_tilde") || has_kt) {
        Scaling sc;
        sc.active_T = sec.get_double("active_T", 1.0);
        if (!(sc.active_T > 0)) throw ConfigError("[system] active_T must be positive");
        sc.S_tilde = ScalarField::from_expression(parse_in(sec, "S_tilde", "", d));
        sc.K_tilde = matrix_from_keys(sec, "K_tilde", d, SymmetryTag::SymmetricPsd);
        if (sys.frame) sc.frame_tilde = sys.frame->scaled(1.0 / std::sqrt(sc.active_T));
        sys.scaling = std::move(sc);
    }
    return sys;
}

} // namespace

GenericSystem load_system(ConfigSection& sec, bool validate) {
    const std::string kind = sec.get_string("kind");
    GenericSystem sys;
    if (kind == "custom") {
        sys = load_custom(sec);
    } else {
        auto id = catalog_id_from_string(kind);
        if (!id) throw ConfigError("[system] unknown kind '" + kind + "'");
        switch (*id) {
        case CatalogId::DampedOscillator: {
            DampedOscillatorParams p;
            p.mass = sec.get_double("mass", p.mass);
            p.gamma = sec.get_double("gamma", p.gamma);
            p.potential = sec.get_string("potential", p.potential);
            p.entropy = sec.get_string("entropy", p.entropy);
            sys = make_damped_oscillator(p);
            break;
        }
        case CatalogId::RigidBody: {
            RigidBodyParams p;
            p.lambda = sec.get_double("lambda", p.lambda);
            p.casimir_entropy = sec.get_string("casimir_entropy", p.casimir_entropy);
            auto in = sec.get_list("inertia", {p.inertia[0], p.inertia[1], p.inertia[2]});
            if (in.size() != 3) throw ConfigError("[system] inertia needs three values");
            for (int i = 0; i < 3; ++i) p.inertia[i] = in[i];
            sys = make_rigid_body(p);
            break;
        }
        case CatalogId::OuGradient: sys = make_ou_gradient(static_cast<int>(sec.get_int("dim", 2))); break;
        case CatalogId::CircleDiffusion: sys = make_circle_diffusion(); break;
        case CatalogId::CanonicalHamiltonian:
            sys = make_canonical_hamiltonian(static_cast<int>(sec.get_int("dof", 1)));
            break;
        }
        if (auto b = sec.get_box("bounds", sys.dim())) sys.patch.bounds = b;
    }
    sys.check_dimensions();
    if (validate) {
        auto pts = uniform_points(sampling_box(sys.patch), 10, 0x5eed);
        check_structure(sys, pts, 1e-10);
    }
    return sys;
}

} // namespace gsde
