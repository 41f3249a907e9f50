#include "sparsedom/maximal.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "sparsedom/error.hpp"

namespace sparsedom {

namespace {

std::vector<double> magnitudes(const GridField& h) {
    std::vector<double> v(h.grid().cells());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = h.norm_at(i);
    return v;
}

}  // namespace

BoxSums::BoxSums(const GridField& h) : BoxSums(h.grid(), magnitudes(h)) {}

BoxSums::BoxSums(const Grid& g, const std::vector<double>& values) : grid_(g) {
    const int n = g.n;
    const std::size_t p = static_cast<std::size_t>(g.side()) + 1;
    std::size_t total = 1;
    for (int d = 0; d < n; ++d) total *= p;
    prefix_.assign(total, 0.0);
    // shifted copy, then cumulative sums along each axis
    for (std::size_t i = 0; i < g.cells(); ++i) {
        const CellCoord c = g.coord(i);
        std::size_t j = 0, stride = 1;
        for (int d = 0; d < n; ++d) {
            j += static_cast<std::size_t>(c[d] + 1) * stride;
            stride *= p;
        }
        prefix_[j] = values[i];
    }
    std::size_t stride = 1;
    for (int d = 0; d < n; ++d) {
        for (std::size_t j = 0; j < total; ++j)
            if ((j / stride) % p != 0) prefix_[j] += prefix_[j - stride];
        stride *= p;
    }
}

double BoxSums::sum(const Box& b) const {
    const int n = grid_.n;
    if (b.empty(n)) return 0.0;
    const std::size_t p = static_cast<std::size_t>(grid_.side()) + 1;
    double acc = 0.0;
    for (int corner = 0; corner < (1 << n); ++corner) {
        std::size_t j = 0, stride = 1;
        int sign = 1;
        for (int d = 0; d < n; ++d) {
            const bool hi = (corner >> d) & 1;
            j += static_cast<std::size_t>(hi ? b.hi[d] : b.lo[d]) * stride;
            if (!hi) sign = -sign;
            stride *= p;
        }
        acc += sign * prefix_[j];
    }
    return acc;
}

MaximalResult lattice_sup(const Grid& g, const Cube& root, const std::function<double(const Cube&)>& value) {
    MaximalResult res;
    res.field = GridField(g, 1);
    res.argmax.assign(g.cells(), Cube{{0, 0, 0}, 0, 0, {}});
    res.cell_limit.assign(g.cells(), 0);
    std::vector<std::uint8_t> seen(g.cells(), 0);
    const int n = g.n;
    for (const Cube& P : lattice(root, n, root.depth + max_depth(root))) {
        const double v = value(P);
        const Box b = box_of(P, n);
        CellCoord c = b.lo;
        // iterate over the cells of P
        while (true) {
            const std::size_t i = g.index(c);
            if (!seen[i] || v > res.field.at(i)) {
                res.field.at(i) = v;
                res.argmax[i] = P;
                seen[i] = 1;
            }
            int d = 0;
            for (; d < n; ++d) {
                if (++c[d] < b.hi[d]) break;
                c[d] = b.lo[d];
            }
            if (d == n) break;
        }
    }
    return res;
}

MaximalResult dyadic_maximal(const GridField& h, const Cube& root, const MaximalOptions& opt) {
    const Grid& g = h.grid();
    const BoxSums sums(h);
    const Box clip = box_of(root_3q0(g), g.n);
    MaximalResult res = lattice_sup(g, root, [&](const Cube& P) {
        const Box t = triple(P, clip, g.n);
        // out-of-grid part counts as zero; the denominator is |3P|
        return sums.sum(t) / static_cast<double>(P.cell_count(g.n) * static_cast<std::size_t>(std::pow(3, g.n)));
    });
    if (opt.include_cell_limit) {
        const CellSet inside = CellSet::from_cube(g, root);
        for (std::size_t i : inside.indices()) {
            const double v = h.norm_at(i);
            if (v > res.field.at(i)) {
                res.field.at(i) = v;
                res.cell_limit[i] = 1;
            }
        }
    }
    return res;
}

MaximalResult fractional_maximal(const GridField& h, double s, const Cube& root) {
    const Grid& g = h.grid();
    if (!(s >= 0.0) || s >= g.n) throw Error(ErrorCode::InvalidArgument, "fractional exponent must lie in (0, n)");
    const BoxSums sums(h);
    const Box clip = box_of(root_3q0(g), g.n);
    return lattice_sup(g, root, [&](const Cube& P) {
        const double avg = sums.sum(triple(P, clip, g.n)) /
                           static_cast<double>(P.cell_count(g.n) * static_cast<std::size_t>(std::pow(3, g.n)));
        return std::pow(3.0 * P.length(g), s) * avg;
    });
}

MaximalResult weighted_dyadic_maximal(const GridField& h, const GridField& sigma, const Cube& root) {
    const Grid& g = h.grid();
    std::vector<double> hs(g.cells()), s(g.cells());
    for (std::size_t i = 0; i < g.cells(); ++i) {
        s[i] = sigma.at(i);
        hs[i] = h.norm_at(i) * s[i];
    }
    const BoxSums num(g, hs), den(g, s);
    return lattice_sup(g, root, [&](const Cube& P) {
        const Box b = box_of(P, g.n);
        const double mass = den.sum(b);
        if (!(mass > 0.0))
            throw Error(ErrorCode::DegenerateWeight, "weight vanishes on cube " + P.address_string());
        return num.sum(b) / mass;
    });
}

double weak_norm(const GridField& h, const CellSet& region) {
    std::vector<double> v;
    v.reserve(region.count());
    for (std::size_t i : region.indices()) v.push_back(h.norm_at(i));
    std::sort(v.begin(), v.end(), std::greater<>());
    double best = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
        // #{|h| >= v_k}: extend over ties
        std::size_t j = k;
        while (j + 1 < v.size() && v[j + 1] == v[k]) ++j;
        best = std::max(best, v[k] * static_cast<double>(j + 1));
        k = j;
    }
    return best * h.grid().cell_volume();
}

double gradient_oscillation(const GridField& grad, const std::vector<std::size_t>& cells) {
    const int n = grad.components();
    double best = 0.0;
    for (std::size_t a = 0; a < cells.size(); ++a) {
        const double* x = grad.ptr(cells[a]);
        for (std::size_t b = a + 1; b < cells.size(); ++b) {
            const double* y = grad.ptr(cells[b]);
            double d2 = 0.0;
            for (int d = 0; d < n; ++d) d2 += (x[d] - y[d]) * (x[d] - y[d]);
            best = std::max(best, d2);
        }
    }
    return std::sqrt(best);
}

GridField oscillation_function_S(const Cube& Q, const EllipticCoefficient& a, const GridField& F, const Domain* omega,
                                 const OscillationOptions& opt, OscillationStats* stats) {
    if (!a.is_linear()) throw Error(ErrorCode::InvalidArgument, "the oscillation function needs a linear coefficient");
    const Grid& g = a.grid();
    const int n = g.n;
    GridField S(g, 1);
    const CellSet in_domain = omega ? omega->mask : CellSet(g, true);

    const Solution uQ = solve_dirichlet(a, solve_region(g, Q, omega), F, GridField(), opt.solver);

    Cube big = Q;
    for (int d = 0; d < n; ++d) big.corner[d] -= Q.side;
    big.side = 3 * Q.side;
    big.depth = 0;
    big.address.clear();
    Cube small = Q;
    small.depth = 0;
    small.address.clear();

    std::vector<Cube> cubes = lattice(big, n, opt.depth_cap);
    for (Cube& P : lattice(small, n, opt.depth_cap)) cubes.push_back(std::move(P));

    std::map<std::pair<CellCoord, int>, bool> done;
    for (const Cube& P : cubes) {
        if (!done.emplace(std::make_pair(P.corner, P.side), true).second) continue;
        const CellSet cells = CellSet::from_cube(g, P) & in_domain;
        if (cells.empty()) continue;
        Solution uP;
        try {
            uP = solve_dirichlet(a, solve_region(g, P, omega), F, GridField(), opt.solver);
        } catch (const Error& e) {
            throw Error(e.code(), std::string(e.what()) + " (cube " + P.address_string() + ")");
        }
        GridField w = uQ.u;
        for (std::size_t i = 0; i < g.cells(); ++i) w.at(i) -= uP.u.at(i);
        const GridField grad = gradient(w);
        const std::vector<std::size_t> idx = cells.indices();
        const double osc = gradient_oscillation(grad, idx);
        for (std::size_t i : idx) S.at(i) = std::max(S.at(i), osc);
        if (stats) {
            ++stats->cubes;
            // w_P is homogeneous on O_P only when 3P ⊂ 3Q
            const Box p3 = dilate(P, 3, n), q3 = dilate(Q, 3, n);
            bool inside = true;
            for (int d = 0; d < n; ++d)
                if (p3.lo[d] < q3.lo[d] || p3.hi[d] > q3.hi[d]) inside = false;
            if (inside && P.side % 2 == 0) {
                double sup = 0.0;
                for (std::size_t i : idx) sup = std::max(sup, grad.norm_at(i));
                const CellSet twoP = CellSet::from_box(g, dilate(P, 2, n)) & in_domain;
                double acc = 0.0;
                for (std::size_t i : twoP.indices()) acc += std::sqrt(grad.norm_at(i));
                const double den = std::pow(acc / (std::pow(2.0, n) * static_cast<double>(P.cell_count(n))), 2.0);
                if (den > 0.0) stats->c_inf = std::max(stats->c_inf, sup / den);
            }
        }
    }
    return S;
}

}  // namespace sparsedom
