#include "gsde/fpgrid.hpp"

#include "gsde/config.hpp"
#include "gsde/generator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

namespace gsde {

namespace {

using Triplet = Eigen::Triplet<double>;

int stencil_size(int d) { return 1 + 2 * d + 2 * d * (d - 1); }

void check_spec(const GridSpec& spec) {
    const int d = static_cast<int>(spec.box.size());
    if (d < 1 || d > 3) throw ConfigError("grid dimension must be 1, 2 or 3, got " + std::to_string(d));
    if (static_cast<int>(spec.nodes.size()) != d)
        throw ConfigError("grid needs a node count for each of the " + std::to_string(d) + " axes");
    for (int i = 0; i < d; ++i) {
        if (spec.nodes[i] < 16)
            throw ConfigError("grid needs at least 16 nodes per axis, axis " + std::to_string(i + 1) + " has " +
                              std::to_string(spec.nodes[i]));
        if (!(spec.box[i].hi > spec.box[i].lo)) throw ConfigError("grid box must have positive width on every axis");
    }
    if (spec.margin < 0) throw ConfigError("grid margin must be non-negative");
    const double need = grid_memory_estimate_mb(spec);
    if (need > spec.max_memory_mb)
        throw ConfigError("grid needs about " + format_double(std::ceil(need)) + " MB, above the limit of " +
                          format_double(spec.max_memory_mb) + " MB");
}

void check_system(const GenericSystem& sys, const Grid& grid) {
    if (sys.dim() != grid.dim())
        throw ConfigError("grid dimension " + std::to_string(grid.dim()) + " does not match system dimension " +
                          std::to_string(sys.dim()));
}

/// Weighted graph Laplacian of  int c grad f . K grad f  with coef(node) = c K.
SparseMat divergence_form(const Grid& grid, const std::vector<Mat>& coef) {
    const int d = grid.dim();
    const long N = grid.size();
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(N) * stencil_size(d));
    auto edge = [&](long a, long b, double kappa) {
        if (kappa == 0.0) return;
        trips.emplace_back(a, a, kappa);
        trips.emplace_back(b, b, kappa);
        trips.emplace_back(a, b, -kappa);
        trips.emplace_back(b, a, -kappa);
    };
    // Volume of the dual region attached to a node along the axes not in `skip`.
    auto thickness = [&](long node, int skip1, int skip2) {
        double v = 1.0;
        for (int l = 0; l < d; ++l) {
            if (l == skip1 || l == skip2) continue;
            const int i = grid.index(node, l);
            v *= grid.spacing(l) * ((i == 0 || i == grid.nodes(l) - 1) ? 0.5 : 1.0);
        }
        return v;
    };
    for (long node = 0; node < N; ++node) {
        for (int j = 0; j < d; ++j) {
            if (grid.index(node, j) == grid.nodes(j) - 1) continue;
            const long nb = node + grid.stride(j);
            const double c = 0.5 * (coef[node](j, j) + coef[nb](j, j));
            edge(node, nb, thickness(node, j, -1) * c / grid.spacing(j));
            for (int k = j + 1; k < d; ++k) {
                if (grid.index(node, k) == grid.nodes(k) - 1) continue;
                const long c01 = node + grid.stride(k), c11 = nb + grid.stride(k);
                const double a = 0.25 * (coef[node](j, k) + coef[nb](j, k) + coef[c01](j, k) + coef[c11](j, k));
                if (a == 0.0) continue;
                const double kappa = thickness(node, j, k) * a / 2.0;   // vol (h_j h_k) * a / (2 h_j h_k)
                edge(node, c11, kappa);
                edge(nb, c01, -kappa);
            }
        }
    }
    SparseMat A(N, N);
    A.setFromTriplets(trips.begin(), trips.end());
    return A;
}

/// sum_j b_j(node) D_j by central differences (one-sided on faces).
SparseMat first_order(const Grid& grid, const std::vector<Vec>& b) {
    const int d = grid.dim();
    const long N = grid.size();
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(N) * (2 * d + 1));
    for (long node = 0; node < N; ++node) {
        for (int j = 0; j < d; ++j) {
            const double bj = b[node][j];
            if (bj == 0.0) continue;
            const int i = grid.index(node, j);
            const double h = grid.spacing(j);
            const long s = grid.stride(j);
            if (i == 0) {
                trips.emplace_back(node, node + s, bj / h);
                trips.emplace_back(node, node, -bj / h);
            } else if (i == grid.nodes(j) - 1) {
                trips.emplace_back(node, node, bj / h);
                trips.emplace_back(node, node - s, -bj / h);
            } else {
                trips.emplace_back(node, node + s, bj / (2 * h));
                trips.emplace_back(node, node - s, -bj / (2 * h));
            }
        }
    }
    SparseMat D(N, N);
    D.setFromTriplets(trips.begin(), trips.end());
    return D;
}

double weighted_norm(const Vec& v, const Vec& vol, const Grid& grid, int margin) {
    double s = 0.0;
    for (long i = 0; i < grid.size(); ++i)
        if (grid.interior(i, margin)) s += vol[i] * v[i] * v[i];
    return std::sqrt(s);
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

} // namespace

// ---------------------------------------------------------------------------

Grid::Grid(const GridSpec& spec) : box_(spec.box), n_(spec.nodes) {
    const int d = static_cast<int>(box_.size());
    h_.resize(d);
    stride_.resize(d);
    size_ = 1;
    for (int i = 0; i < d; ++i) {
        h_[i] = box_[i].width() / (n_[i] - 1);
        stride_[i] = size_;
        size_ *= n_[i];
    }
}

Vec Grid::point(long node) const {
    Vec x(dim());
    for (int i = 0; i < dim(); ++i) x[i] = box_[i].lo + h_[i] * index(node, i);
    return x;
}

double Grid::volume(long node) const {
    double v = 1.0;
    for (int i = 0; i < dim(); ++i) {
        const int k = index(node, i);
        v *= h_[i] * ((k == 0 || k == n_[i] - 1) ? 0.5 : 1.0);
    }
    return v;
}

bool Grid::interior(long node, int margin) const {
    for (int i = 0; i < dim(); ++i) {
        const int k = index(node, i);
        if (k < margin || k > n_[i] - 1 - margin) return false;
    }
    return true;
}

double grid_memory_estimate_mb(const GridSpec& spec) {
    const int d = static_cast<int>(spec.nodes.size());
    double N = 1.0;
    for (int n : spec.nodes) N *= n;
    // Triplets (16 B) and two compressed copies (12 B per entry) per stencil entry,
    // plus the per-node samples of J, K and the gradients.
    const double per_node = stencil_size(d) * (16.0 * 4 + 12.0 * 3) + 8.0 * (2 * d * d + 2 * d + 12);
    return N * per_node / (1024.0 * 1024.0);
}

GridSamples sample_grid(const GenericSystem& sys, const Grid& grid, int workers) {
    check_system(sys, grid);
    const long N = grid.size();
    const int d = grid.dim();
    GridSamples s;
    s.E.resize(N);
    s.S.resize(N);
    s.m.resize(N);
    s.vol.resize(N);
    s.gradE.assign(N, Vec::Zero(d));
    s.gradS.assign(N, Vec::Zero(d));
    s.J.assign(N, Mat::Zero(d, d));
    s.K.assign(N, Mat::Zero(d, d));
    std::atomic<long> next{0};
    std::mutex mu;
    std::exception_ptr err;
    constexpr long kChunk = 256;
    auto work = [&] {
        try {
            for (;;) {
                const long begin = next.fetch_add(kChunk);
                if (begin >= N) return;
                const long end = std::min(N, begin + kChunk);
                for (long i = begin; i < end; ++i) {
                    const Vec x = grid.point(i);
                    s.E[i] = sys.E.value_gradient(x, s.gradE[i]);
                    s.S[i] = sys.S.value_gradient(x, s.gradS[i]);
                    s.m[i] = sys.nu.value(x);
                    s.vol[i] = grid.volume(i);
                    s.J[i] = sys.J.value(x);
                    s.K[i] = sys.K.value(x);
                }
            }
        } catch (...) {
            std::lock_guard lock(mu);
            if (!err) err = std::current_exception();
            next = N;
        }
    };
    int nw = workers > 0 ? workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    nw = static_cast<int>(std::min<long>(nw, (N + kChunk - 1) / kChunk));
    if (nw <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < nw; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    if (err) std::rethrow_exception(err);
    return s;
}

GridOperator build_grid_generator(const GenericSystem& sys, const GridSpec& spec) {
    check_spec(spec);
    GridOperator op;
    op.grid = Grid(spec);
    op.margin = spec.margin;
    const auto s = sample_grid(sys, op.grid, spec.workers);
    const long N = op.grid.size();
    std::vector<Vec> b(N);
    std::vector<Mat> coef(N);
    Vec scale(N);
    for (long i = 0; i < N; ++i) {
        b[i] = s.J[i] * s.gradE[i] + s.K[i] * s.gradS[i];
        coef[i] = s.m[i] * s.K[i];
        scale[i] = -1.0 / (s.m[i] * s.vol[i]);
    }
    const SparseMat A = divergence_form(op.grid, coef);
    op.matrix = first_order(op.grid, b);
    op.matrix += scale.asDiagonal() * A;
    op.matrix.makeCompressed();
    op.weight = s.S.array().exp() * s.m.array();
    op.m = s.m;
    op.vol = s.vol;
    return op;
}

SplitOperators build_split_operators(const GenericSystem& sys, const GridSpec& spec) {
    check_spec(spec);
    SplitOperators ops;
    ops.grid = Grid(spec);
    ops.margin = spec.margin;
    const auto s = sample_grid(sys, ops.grid, spec.workers);
    const long N = ops.grid.size();
    ops.weight = s.S.array().exp() * s.m.array();
    std::vector<Vec> b(N);
    std::vector<Mat> coef(N);
    Vec scale(N);
    for (long i = 0; i < N; ++i) {
        b[i] = s.J[i] * s.gradE[i];
        coef[i] = ops.weight[i] * s.K[i];
        scale[i] = -1.0 / (ops.weight[i] * s.vol[i]);
    }
    ops.La = first_order(ops.grid, b);
    ops.Ls = scale.asDiagonal() * divergence_form(ops.grid, coef);
    ops.Ls.makeCompressed();
    ops.m = s.m;
    ops.vol = s.vol;
    ops.S = s.S;
    return ops;
}

Vec apply_adjoint(const GridOperator& op, const Vec& f) {
    const Vec W = op.W();
    const Vec t = op.matrix.transpose() * W.cwiseProduct(f);
    return t.cwiseQuotient(W);
}

Vec apply_fokker_planck(const GridOperator& op, const Vec& rho) {
    const Vec M = op.m.cwiseProduct(op.vol);
    const Vec t = op.matrix.transpose() * M.cwiseProduct(rho);
    return t.cwiseQuotient(M);
}

double stationary_residual_grid(const GenericSystem& sys, const GridSpec& spec, const expr::Expression& h) {
    if (h.dim() != 1) throw ConfigError("h must be an expression in one variable (x1 stands for E)");
    const GridOperator op = build_grid_generator(sys, spec);
    const long N = op.grid.size();
    Vec g(N);
    Vec e(1);
    for (long i = 0; i < N; ++i) {
        const Vec x = op.grid.point(i);
        e[0] = sys.E.value(x);
        double hv;
        try {
            hv = h.value(e);
        } catch (const expr::DomainError& err) {
            throw EvaluationError(std::string("h(E): ") + err.what(), x);
        }
        g[i] = hv * std::exp(sys.S.value(x));
    }
    const Vec r = apply_fokker_planck(op, g);
    const double gn = weighted_norm(g, op.vol, op.grid, op.margin);
    if (gn == 0.0) throw EvaluationError("h(E) e^S vanishes on the interior of the grid", op.grid.point(0));
    return weighted_norm(r, op.vol, op.grid, op.margin) / gn;
}

SplitDefects symmetry_split_check(const SplitOperators& ops, int probes, std::uint64_t seed) {
    SplitDefects out;
    const Vec W = ops.W();
    {
        const SparseMat WL = W.asDiagonal() * ops.Ls;
        const SparseMat WLt = SparseMat(WL.transpose());
        const double denom = WL.norm();
        out.sym = denom == 0.0 ? 0.0 : SparseMat(WL - WLt).norm() / denom;
    }
    const Grid& g = ops.grid;
    const int d = g.dim();
    std::vector<Interval> inner(d);
    for (int i = 0; i < d; ++i) {
        const double pad = (ops.margin + 1) * g.spacing(i);
        inner[i] = {g.box()[i].lo + pad, g.box()[i].hi - pad};
        if (!(inner[i].hi > inner[i].lo)) throw ConfigError("grid too coarse for its margin");
    }
    const auto battery = make_battery(inner, probes, seed);
    for (const auto& bump : battery.bumps) {
        Vec f(g.size());
        for (long n = 0; n < g.size(); ++n) f[n] = bump.value(g.point(n));
        const Vec WLf = W.cwiseProduct(ops.La * f);
        const double denom = WLf.norm();
        if (denom == 0.0) continue;
        const Vec sum = WLf + ops.La.transpose() * W.cwiseProduct(f);
        out.antisym = std::max(out.antisym, sum.norm() / denom);
    }
    return out;
}

SplitDefects symmetry_split_check(const GenericSystem& sys, const GridSpec& spec) {
    return symmetry_split_check(build_split_operators(sys, spec));
}

double duality_defect(const GridOperator& op, int pairs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Vec W = op.W();
    const long N = op.grid.size();
    double worst = 0.0;
    for (int p = 0; p < pairs; ++p) {
        Vec f(N), g(N);
        for (long i = 0; i < N; ++i) f[i] = 2 * unit(rng) - 1;
        for (long i = 0; i < N; ++i) g[i] = 2 * unit(rng) - 1;
        const double lhs = f.dot(W.cwiseProduct(op.matrix * g));
        const double rhs = apply_adjoint(op, f).dot(W.cwiseProduct(g));
        worst = std::max(worst, std::abs(lhs - rhs) / (f.norm() * g.norm()));
    }
    return worst;
}

double GridDensity::mass(const Vec& m, const Vec& vol) const {
    return (values.array() * m.array() * vol.array()).sum();
}

double relative_entropy(const GridDensity& rho, const Vec& S, const Vec& m, const Vec& vol) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < rho.values.size(); ++i) {
        const double r = rho.values[i];
        if (r < 0.0) throw ConfigError("density must be non-negative");
        if (r == 0.0) continue;
        s += vol[i] * m[i] * r * (S[i] - std::log(r));
    }
    return s;
}

double relative_entropy(const GridDensity& rho, const SplitOperators& ops) {
    return relative_entropy(rho, ops.S, ops.m, ops.vol);
}

Evolution evolve_density(const SplitOperators& ops, const GridDensity& rho0, int steps, double cfl,
                         int record_every) {
    if (steps < 0) throw ConfigError("evolve_steps must be non-negative");
    if (!(cfl > 0 && cfl <= 1)) throw ConfigError("CFL number must lie in (0, 1]");
    if (record_every < 1) throw ConfigError("record_every must be >= 1");
    if (rho0.values.size() != ops.grid.size()) throw ConfigError("density has the wrong number of nodes");
    if ((rho0.values.array() < 0).any()) throw ConfigError("initial density must be non-negative");
    const Vec W = ops.W();
    const SparseMat L = ops.La + ops.Ls;
    double diag = 0.0;
    for (long i = 0; i < L.rows(); ++i) diag = std::max(diag, std::abs(L.coeff(i, i)));
    Evolution ev;
    ev.dt = diag > 0 ? cfl / diag : 0.0;
    // u = rho e^-S is the density with respect to e^S nu; it evolves by the W-adjoint.
    const Vec eS = ops.S.array().exp();
    Vec u = rho0.values.cwiseQuotient(eS);
    auto record = [&](int k) {
        GridDensity r{u.cwiseProduct(eS)};
        ev.times.push_back(k * ev.dt);
        ev.entropy.push_back(relative_entropy(r, ops));
        ev.mass.push_back(r.mass(ops.m, ops.vol));
    };
    record(0);
    for (int k = 1; k <= steps; ++k) {
        const Vec t = L.transpose() * W.cwiseProduct(u);
        u += ev.dt * t.cwiseQuotient(W);
        u = u.cwiseMax(0.0);
        if (k % record_every == 0 || k == steps) record(k);
    }
    ev.final_density.values = u.cwiseProduct(eS);
    return ev;
}

void write_grid_csv(std::ostream& out, const Grid& grid, const std::vector<std::string>& names,
                    const std::vector<const Vec*>& columns) {
    if (names.size() != columns.size()) throw ConfigError("grid CSV needs one name per column");
    for (int i = 0; i < grid.dim(); ++i) out << (i ? "," : "") << 'x' << (i + 1);
    for (const auto& n : names) out << ',' << n;
    out << '\n';
    for (long node = 0; node < grid.size(); ++node) {
        const Vec x = grid.point(node);
        for (int i = 0; i < grid.dim(); ++i) out << (i ? "," : "") << format_double(x[i]);
        for (const Vec* c : columns) out << ',' << format_double((*c)[node]);
        out << '\n';
    }
}

} // namespace gsde
