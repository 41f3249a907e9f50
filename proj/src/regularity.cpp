#include "sparsedom/regularity.hpp"

#include <algorithm>
#include <cmath>

#include "sparsedom/data.hpp"
#include "sparsedom/error.hpp"
#include "sparsedom/maximal.hpp"
#include "sparsedom/rng.hpp"

namespace sparsedom {

namespace {

Cube random_cube(const Grid& g, Rng& rng, int max_depth_q) {
    const Cube q0 = root_q0(g);
    const int depth = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(std::max(1, max_depth_q))));
    Cube c = q0;
    for (int k = 0; k < depth && c.side > 1; ++k) {
        auto ch = dyadic_children(c, g.n);
        c = ch[rng.index(ch.size())];
    }
    return c;
}

bool box_inside(const Box& b, const CellSet& s, const Grid& g) {
    for (int d = 0; d < g.n; ++d)
        if (b.lo[d] < 0 || b.hi[d] > g.side()) return false;
    return CellSet::from_box(g, b).count() == b.cell_count(g.n) && CellSet::from_box(g, b).subset_of(s);
}

}  // namespace

ReverseHolderResult reverse_holder_sup(const EllipticCoefficient& a, const Domain* omega, double q, RHMode mode,
                                       const ReverseHolderOptions& opt) {
    if (!(q > 2.0)) throw Error(ErrorCode::InvalidArgument, "reverse Hoelder exponent must exceed 2");
    if (opt.trials < 1) throw Error(ErrorCode::InvalidArgument, "at least one trial is needed");
    const Grid& g = a.grid();
    const int n = g.n;
    const CellSet dom = omega ? omega->mask : CellSet(g, true);
    const Box grid_box = box_of(root_3q0(g), n);
    Rng rng(opt.seed);
    ReverseHolderResult res;
    GridField u_cache;
    std::uint64_t u_seed = 0;
    for (int t = 0; t < opt.trials; ++t) {
        const Cube Q = random_cube(g, rng, std::min(opt.max_depth, max_depth(root_q0(g)) - 1));
        const std::uint64_t seed = opt.seed * 1000003ULL + static_cast<std::uint64_t>(t % 5);
        if (!u_cache.valid() || seed != u_seed) {
            const GridField F = fourier_field(g, n, opt.modes, opt.amplitude, seed);
            u_cache = solve_dirichlet(a, dom, F, GridField(), opt.solver).u;
            u_seed = seed;
        }
        const CellSet OQ = solve_region(g, Q, omega);
        GridField F = fourier_field(g, n, opt.modes, opt.amplitude, seed);
        if (t % 2 == 1) {
            // same equation in O_Q ∩ Ω, different data elsewhere, solved on all of Ω
            const GridField G = fourier_field(g, n, opt.modes, 2.0 * opt.amplitude, seed + 77);
            for (std::size_t i = 0; i < g.cells(); ++i)
                if (!OQ.contains(i))
                    for (int d = 0; d < n; ++d) F.at(i, d) += G.at(i, d);
        }
        const Solution v = solve_dirichlet(a, t % 2 == 1 ? dom : OQ, F, GridField(), opt.solver);
        GridField w = u_cache;
        for (std::size_t i = 0; i < g.cells(); ++i) w.at(i) -= v.u.at(i);
        const GridField grad = gradient(w, dom);

        std::vector<double> hq(g.cells(), 0.0), hh(g.cells(), 0.0);
        for (std::size_t i : dom.indices()) {
            const double m = grad.norm_at(i);
            hq[i] = std::pow(m, q);
            hh[i] = std::sqrt(m);
        }
        const BoxSums sq(g, hq), sh(g, hh);
        const Box twoQ = dilate(Q, 2, n);
        ++res.pairs;
        for (int s = 2; s <= 2 * Q.side; s *= 2) {
            const int step = s / 2;
            CellCoord c = twoQ.lo;
            while (true) {
                Cube P;
                P.corner = c;
                P.side = s;
                const Box pb = box_of(P, n);
                bool fits = true;
                for (int d = 0; d < n; ++d)
                    if (pb.hi[d] > twoQ.hi[d]) fits = false;
                if (fits) {
                    const Box p2 = dilate(P, 2, n);
                    const bool admissible = mode == RHMode::Local
                                                ? box_inside(p2, dom, g)
                                                : !(CellSet::from_box(g, pb) & dom).empty();
                    if (admissible) {
                        const double volP = static_cast<double>(pb.cell_count(n));
                        const double vol2P = volP * std::pow(2.0, n);
                        const double num = std::pow(sq.sum(intersect(pb, grid_box, n)) / volP, 1.0 / q);
                        const double den = std::pow(sh.sum(intersect(p2, grid_box, n)) / vol2P, 2.0);
                        if (den > 0.0) {
                            res.constant = std::max(res.constant, num / den);
                            ++res.cubes;
                        } else {
                            ++res.skipped;
                        }
                    }
                }
                int d = 0;
                for (; d < n; ++d) {
                    c[d] += step;
                    if (c[d] + s <= twoQ.hi[d]) break;
                    c[d] = twoQ.lo[d];
                }
                if (d == n) break;
            }
        }
    }
    return res;
}

ReverseHolderResult estimate_reverse_holder(const CoefficientSpec& coef, const std::string& domain, int n, int level,
                                            double q, RHMode mode, const ReverseHolderOptions& opt) {
    ReverseHolderResult out;
    for (int k = 0; k < 2; ++k) {
        const Grid g(n, level + k);
        const EllipticCoefficient a = make_coefficient(g, coef);
        const Domain dom = make_domain(g, domain);
        const bool whole = mode == RHMode::Local && dom.kind == DomainKind::FullCube;
        const ReverseHolderResult r = reverse_holder_sup(a, whole ? nullptr : &dom, q, mode, opt);
        if (k == 0) {
            out = r;
        } else {
            out.constant_fine = r.constant;
        }
    }
    const double base = std::max(out.constant, 1e-300);
    out.stable = std::abs(out.constant_fine - out.constant) < 0.1 * base;
    return out;
}

UpperExponentScan select_upper_exponent(const EllipticCoefficient& a, const Domain* omega, RHMode mode, double budget,
                                        const std::vector<double>& scan, const ReverseHolderOptions& opt) {
    const Grid& g = a.grid();
    CoefficientSpec id{"identity", {}, false, 0.0};
    const EllipticCoefficient eye = make_coefficient(g, id);
    UpperExponentScan out;
    for (double q : scan) {
        const double na = reverse_holder_sup(a, omega, q, mode, opt).constant;
        const double ni = reverse_holder_sup(eye, omega, q, mode, opt).constant;
        out.q.push_back(q);
        out.constant.push_back(na);
        out.identity_constant.push_back(ni);
        if (na <= budget * ni && q > out.q_h) {
            out.q_h = q;
            out.B = na;
        }
    }
    return out;
}

LinearizationReport check_linearization(const EllipticCoefficient& a, const Cube& Q, const Domain* omega,
                                        const GridField& F, double tol, const SolverConfig& cfg) {
    const Grid& g = a.grid();
    const CellSet dom = omega ? omega->mask : CellSet(g, true);
    const Solution u = solve_dirichlet(a, dom, F, GridField(), cfg);
    const Solution v = solve_dirichlet(a, solve_region(g, Q, omega), F, GridField(), cfg);
    const EllipticCoefficient A = linearize_pair(a, u.u, u.region, v.u, v.region);
    GridField w = u.u;
    for (std::size_t i = 0; i < g.cells(); ++i) w.at(i) -= v.u.at(i);
    LinearizationReport rep;
    rep.scale = energy_norm(w, dom);
    rep.residual = weak_residual(A, w, dom, GridField(), GridField(), interior_cells(v.region));
    rep.pass = rep.residual <= tol * rep.scale;
    return rep;
}

}  // namespace sparsedom
