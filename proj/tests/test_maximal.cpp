#include "doctest.h"

#include <cmath>

#include "sparsedom/coefficient.hpp"
#include "sparsedom/data.hpp"
#include "sparsedom/error.hpp"
#include "sparsedom/maximal.hpp"
#include "sparsedom/rng.hpp"

using namespace sparsedom;

namespace {

// Every dyadic cube of Q0 enumerated by side and offset, independent of the library's lattice().
std::vector<Cube> all_cubes(const Grid& g) {
    std::vector<Cube> out;
    const Cube q0 = root_q0(g);
    for (int side = q0.side; side >= 1; side /= 2) {
        const int k = q0.side / side;
        int total = 1;
        for (int d = 0; d < g.n; ++d) total *= k;
        for (int t = 0; t < total; ++t) {
            Cube c;
            c.side = side;
            int r = t;
            for (int d = 0; d < g.n; ++d) {
                c.corner[d] = q0.corner[d] + (r % k) * side;
                r /= k;
            }
            out.push_back(c);
        }
    }
    return out;
}

bool in_cube(const Cube& c, const CellCoord& x, int n) {
    for (int d = 0; d < n; ++d)
        if (x[d] < c.corner[d] || x[d] >= c.corner[d] + c.side) return false;
    return true;
}

// ⟨|h|⟩_{3P} by direct summation, out-of-grid cells counted as zero.
double triple_average(const GridField& h, const Cube& P) {
    const Grid& g = h.grid();
    double sum = 0.0;
    for (std::size_t i = 0; i < g.cells(); ++i) {
        const CellCoord x = g.coord(i);
        bool in = true;
        for (int d = 0; d < g.n; ++d)
            if (x[d] < P.corner[d] - P.side || x[d] >= P.corner[d] + 2 * P.side) in = false;
        if (in) sum += std::abs(h.at(i));
    }
    return sum / (std::pow(3.0, g.n) * std::pow(double(P.side), g.n));
}

double plain_weighted_average(const GridField& h, const GridField& s, const Cube& P) {
    const Grid& g = h.grid();
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < g.cells(); ++i)
        if (in_cube(P, g.coord(i), g.n)) {
            num += std::abs(h.at(i)) * s.at(i);
            den += s.at(i);
        }
    return num / den;
}

template <class Value>
GridField brute_sup(const Grid& g, Value value) {
    GridField out(g, 1);
    const auto cubes = all_cubes(g);
    std::vector<double> vals;
    for (const Cube& c : cubes) vals.push_back(value(c));
    for (std::size_t i = 0; i < g.cells(); ++i) {
        const CellCoord x = g.coord(i);
        double best = 0.0;
        bool any = false;
        for (std::size_t k = 0; k < cubes.size(); ++k)
            if (in_cube(cubes[k], x, g.n) && (!any || vals[k] > best)) {
                best = vals[k];
                any = true;
            }
        out.at(i) = best;
    }
    return out;
}

GridField random_integers(const Grid& g, std::uint64_t seed, int hi, double zero_fraction = 0.5) {
    Rng rng(seed);
    GridField h(g, 1);
    for (std::size_t i = 0; i < g.cells(); ++i)
        h.at(i) = rng.uniform() < zero_fraction ? 0.0 : static_cast<double>(1 + rng.index(hi));
    return h;
}

}  // namespace

TEST_CASE("box sums agree with direct sums") {
    Grid g(2, 2);
    const GridField h = random_integers(g, 4, 9);
    const BoxSums s(h);
    Box b;
    b.lo = {1, 2, 0};
    b.hi = {7, 5, 1};
    double direct = 0.0;
    for (std::size_t i = 0; i < g.cells(); ++i)
        if (b.contains(g.coord(i), 2)) direct += h.at(i);
    CHECK(s.sum(b) == direct);
}

TEST_CASE("dyadic maximal of a constant is that constant") {
    Grid g(2, 3);
    const GridField h(g, 1, 2.5);
    const auto m = dyadic_maximal(h, root_q0(g));
    // an average over a triple that leaves the grid includes zeros, so only cubes whose
    // triple stays inside 3Q0 see the full value: all of them, since 3P ⊂ 3Q0
    for (std::size_t i : CellSet::from_cube(g, root_q0(g)).indices()) CHECK(m.field.at(i) == doctest::Approx(2.5));
}

TEST_CASE("dyadic maximal equals brute force on small grids") {
    for (int n : {1, 2}) {
        for (int L = 0; L <= (n == 1 ? 4 : 4); ++L) {
            Grid g(n, L);
            for (std::uint64_t seed = 1; seed <= 3; ++seed) {
                const GridField h = random_integers(g, seed * 31 + L, 20);
                const auto m = dyadic_maximal(h, root_q0(g));
                const GridField ref = brute_sup(g, [&](const Cube& P) { return triple_average(h, P); });
                const CellSet q0 = CellSet::from_cube(g, root_q0(g));
                for (std::size_t i : q0.indices()) {
                    REQUIRE(m.field.at(i) == ref.at(i));
                    CHECK(in_cube(m.argmax[i], g.coord(i), n));
                    CHECK(triple_average(h, m.argmax[i]) == m.field.at(i));
                }
            }
        }
    }
}

TEST_CASE("indicator of one cell in one dimension") {
    Grid g(1, 3);  // Q0 has 8 cells
    GridField h(g, 1);
    h.at(static_cast<std::size_t>(root_q0(g).corner[0] + 3)) = 1.0;
    const auto m = dyadic_maximal(h, root_q0(g));
    const GridField ref = brute_sup(g, [&](const Cube& P) { return triple_average(h, P); });
    for (std::size_t i : CellSet::from_cube(g, root_q0(g)).indices()) CHECK(m.field.at(i) == ref.at(i));
    // the cell itself: best is its own triple, 1/3
    CHECK(m.field.at(static_cast<std::size_t>(root_q0(g).corner[0] + 3)) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("cell limit dominates |h| and keeps the lattice value elsewhere") {
    Grid g(2, 3);
    const GridField h = random_integers(g, 9, 50, 0.8);
    const auto plain = dyadic_maximal(h, root_q0(g));
    const auto tilde = dyadic_maximal(h, root_q0(g), {true});
    for (std::size_t i : CellSet::from_cube(g, root_q0(g)).indices()) {
        CHECK(tilde.field.at(i) >= std::abs(h.at(i)));
        CHECK(tilde.field.at(i) == std::max(plain.field.at(i), std::abs(h.at(i))));
        CHECK(bool(tilde.cell_limit[i]) == (std::abs(h.at(i)) > plain.field.at(i)));
    }
}

TEST_CASE("fractional maximal equals brute force and reduces to M at s = 0") {
    Grid g(1, 4);
    Rng rng(5);
    GridField h(g, 1);
    for (std::size_t i = 0; i < g.cells(); ++i) h.at(i) = rng.uniform(-1.0, 1.0);
    const double s = 0.4;
    const auto m = fractional_maximal(h, s, root_q0(g));
    const GridField ref = brute_sup(g, [&](const Cube& P) {
        return std::pow(3.0 * P.side * g.h(), s) * triple_average(h, P);
    });
    for (std::size_t i : CellSet::from_cube(g, root_q0(g)).indices())
        CHECK(m.field.at(i) == doctest::Approx(ref.at(i)).epsilon(1e-13));

    const auto m0 = fractional_maximal(h, 0.0, root_q0(g));
    const auto md = dyadic_maximal(h, root_q0(g));
    for (std::size_t i : CellSet::from_cube(g, root_q0(g)).indices()) CHECK(m0.field.at(i) == md.field.at(i));

    CHECK_THROWS_AS(fractional_maximal(h, 1.0, root_q0(g)), Error);
}

TEST_CASE("fractional maximal of the constant one in 1D is 3 l(Q0)") {
    Grid g(1, 4);
    const GridField one(g, 1, 1.0);
    const auto m = fractional_maximal(one, 0.999, root_q0(g));
    for (std::size_t i : CellSet::from_cube(g, root_q0(g)).indices())
        CHECK(m.field.at(i) == doctest::Approx(std::pow(3.0, 0.999)));
}

TEST_CASE("weighted maximal equals brute force") {
    Grid g(2, 3);
    const GridField h = random_integers(g, 17, 9);
    GridField sigma = random_integers(g, 18, 5, 0.0);
    const auto m = weighted_dyadic_maximal(h, sigma, root_q0(g));
    const GridField ref = brute_sup(g, [&](const Cube& P) { return plain_weighted_average(h, sigma, P); });
    for (std::size_t i : CellSet::from_cube(g, root_q0(g)).indices()) CHECK(m.field.at(i) == ref.at(i));

    const GridField c(g, 1, 3.0);
    const auto mc = weighted_dyadic_maximal(c, sigma, root_q0(g));
    for (std::size_t i : CellSet::from_cube(g, root_q0(g)).indices()) CHECK(mc.field.at(i) == doctest::Approx(3.0));

    GridField zero_on_q0 = sigma;
    for (std::size_t i : CellSet::from_cube(g, root_q0(g)).indices()) zero_on_q0.at(i) = 0.0;
    CHECK_THROWS_AS(weighted_dyadic_maximal(h, zero_on_q0, root_q0(g)), Error);
}

TEST_CASE("weak norm examples") {
    Grid g(2, 2);
    const CellSet all(g, true);
    CHECK(weak_norm(GridField(g, 1), all) == 0.0);
    GridField e(g, 1);
    for (std::size_t i = 0; i < 10; ++i) e.at(i) = 1.0;
    CHECK(weak_norm(e, all) == doctest::Approx(10 * g.cell_volume()));
    GridField two(g, 1);
    for (std::size_t i = 0; i < 10; ++i) two.at(i) = 1.0;
    for (std::size_t i = 10; i < 14; ++i) two.at(i) = 3.0;
    CHECK(weak_norm(two, all) == doctest::Approx(std::max(14.0, 12.0) * g.cell_volume()));
    for (std::size_t i = 10; i < 14; ++i) two.at(i) = 5.0;
    CHECK(weak_norm(two, all) == doctest::Approx(20.0 * g.cell_volume()));
}

TEST_CASE("sublinearity and the empirical weak (1,1) bound") {
    Grid g(2, 3);
    const Cube q0 = root_q0(g);
    const CellSet q0_cells = CellSet::from_cube(g, q0);
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        Rng rng(seed);
        GridField h(g, 1);
        // sparse spikes stress the weak bound more than smooth data
        for (int k = 0; k < 1 + static_cast<int>(seed % 7); ++k) h.at(rng.index(g.cells())) = rng.uniform(0.1, 10.0);
        const auto m = dyadic_maximal(h, q0, {true});
        worst = std::max(worst, weak_norm(m.field, q0_cells) / lp_norm(h, 1.0, CellSet(g, true)));
    }
    CHECK(worst <= 81.0);

    const GridField a = random_integers(g, 40, 7), b = random_integers(g, 41, 7);
    GridField ab(g, 1);
    for (std::size_t i = 0; i < g.cells(); ++i) ab.at(i) = a.at(i) + b.at(i);
    const auto ma = dyadic_maximal(a, q0), mb = dyadic_maximal(b, q0), mab = dyadic_maximal(ab, q0);
    for (std::size_t i : q0_cells.indices()) CHECK(mab.field.at(i) <= ma.field.at(i) + mb.field.at(i) + 1e-12);
}

TEST_CASE("fractional bound is stable under refinement") {
    // 1/q = 1/p - s/n with n = 2, s = 1, p = 1.5 gives q = 6
    std::vector<double> ratios;
    for (int L = 3; L <= 5; ++L) {
        Grid g(2, L);
        const GridField F = fourier_field(g, 1, 3, 1.0, 21);
        const auto m = fractional_maximal(F, 1.0, root_q0(g));
        ratios.push_back(lp_norm(m.field, 6.0, CellSet::from_cube(g, root_q0(g))) / lp_norm(F, 1.5, CellSet(g, true)));
    }
    CHECK(ratios[2] <= 1.5 * ratios[1]);
    CHECK(ratios[1] <= 1.5 * ratios[0]);
}

TEST_CASE("oscillation function S") {
    Grid g(2, 3);
    auto a = make_coefficient(g, {"dini", {}, false, 0.0});
    const Cube Q = dyadic_children(root_q0(g), 2)[1];
    OscillationOptions opt;
    opt.depth_cap = 2;
    const GridField zero = oscillation_function_S(Q, a, GridField(g, 2), nullptr, opt);
    for (double v : zero.data()) CHECK(v == 0.0);

    const GridField F = fourier_field(g, 2, 3, 1.0, 8);
    opt.depth_cap = 0;
    const GridField S0 = oscillation_function_S(Q, a, F, nullptr, opt);
    // one cube 3Q (Q itself gives w = 0): S is the oscillation of ∇(u_Q - u_3Q) over 3Q
    const Cube Q3{{Q.corner[0] - Q.side, Q.corner[1] - Q.side, 0}, 3 * Q.side, 0, {}};
    const Solution uQ = solve_dirichlet(a, solve_region(g, Q, nullptr), F, GridField());
    const Solution u3 = solve_dirichlet(a, solve_region(g, Q3, nullptr), F, GridField());
    GridField w = uQ.u;
    for (std::size_t i = 0; i < g.cells(); ++i) w.at(i) -= u3.u.at(i);
    const double osc = gradient_oscillation(gradient(w), CellSet::from_cube(g, Q3).indices());
    CHECK(osc > 0.0);
    for (std::size_t i : CellSet::from_cube(g, Q3).indices()) CHECK(S0.at(i) == doctest::Approx(osc));

    opt.depth_cap = 2;
    const GridField S2 = oscillation_function_S(Q, a, F, nullptr, opt);
    for (std::size_t i = 0; i < g.cells(); ++i) CHECK(S2.at(i) >= S0.at(i));
}
