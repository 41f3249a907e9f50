#include "doctest.h"

#include <cmath>
#include <set>

#include "sparsedom/data.hpp"
#include "sparsedom/error.hpp"
#include "sparsedom/rng.hpp"
#include "sparsedom/sparse.hpp"

using namespace sparsedom;

namespace {

// All cubes of D(Q) by side and offset.
std::vector<Cube> all_cubes(const Cube& Q, int n) {
    std::vector<Cube> out;
    for (int side = Q.side; side >= 1; side /= 2) {
        const int k = Q.side / side;
        int total = 1;
        for (int d = 0; d < n; ++d) total *= k;
        for (int t = 0; t < total; ++t) {
            Cube c;
            c.side = side;
            int r = t;
            for (int d = 0; d < n; ++d) {
                c.corner[d] = Q.corner[d] + (r % k) * side;
                r /= k;
            }
            out.push_back(c);
        }
        if (side % 2) break;
    }
    return out;
}

bool strictly_inside(const Cube& small, const Cube& big, int n) {
    if (small.side >= big.side) return false;
    for (int d = 0; d < n; ++d)
        if (small.corner[d] < big.corner[d] || small.corner[d] + small.side > big.corner[d] + big.side) return false;
    return true;
}

double direct_triple_average(const GridField& h, const Cube& P) {
    const Grid& g = h.grid();
    double sum = 0.0;
    for (std::size_t i = 0; i < g.cells(); ++i) {
        const CellCoord x = g.coord(i);
        bool in = true;
        for (int d = 0; d < g.n; ++d)
            if (x[d] < P.corner[d] - P.side || x[d] >= P.corner[d] + 2 * P.side) in = false;
        if (in) sum += h.at(i);
    }
    return sum / (std::pow(3.0, g.n) * std::pow(double(P.side), g.n));
}

std::set<std::pair<CellCoord, int>> keys(const std::vector<Cube>& cs) {
    std::set<std::pair<CellCoord, int>> s;
    for (const Cube& c : cs) s.insert({c.corner, c.side});
    return s;
}

std::vector<Cube> brute_threshold(const GridField& h, const Cube& Q, double t) {
    const int n = h.grid().n;
    const auto cubes = all_cubes(Q, n);
    std::vector<Cube> hit;
    for (const Cube& c : cubes)
        if (direct_triple_average(h, c) > t) hit.push_back(c);
    std::vector<Cube> out;
    for (const Cube& c : hit) {
        bool maximal = true;
        for (const Cube& o : hit)
            if (strictly_inside(c, o, n)) maximal = false;
        if (maximal) out.push_back(c);
    }
    // cell limit: uncovered cells above the threshold
    const Grid& g = h.grid();
    for (std::size_t i : CellSet::from_cube(g, Q).indices()) {
        if (!(h.at(i) > t)) continue;
        bool covered = false;
        for (const Cube& c : out) covered = covered || c.contains(g.coord(i), n);
        if (!covered) out.push_back(Cube{g.coord(i), 1, 0, {}});
    }
    return out;
}

std::vector<Cube> brute_density(const CellSet& xi, const Cube& Q, double density) {
    const Grid& g = xi.grid();
    const auto cubes = all_cubes(Q, g.n);
    std::vector<Cube> hit;
    for (const Cube& c : cubes) {
        const CellSet cells = CellSet::from_cube(g, c);
        if (static_cast<double>((cells & xi).count()) > density * static_cast<double>(cells.count())) hit.push_back(c);
    }
    std::vector<Cube> out;
    for (const Cube& c : hit) {
        bool maximal = true;
        for (const Cube& o : hit)
            if (strictly_inside(c, o, g.n)) maximal = false;
        if (maximal) out.push_back(c);
    }
    return out;
}

}  // namespace

TEST_CASE("threshold stopping equals the exhaustive oracle") {
    for (int L : {2, 3, 4}) {
        Grid g(2, L);
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            Rng rng(seed);
            GridField h(g, 1);
            for (std::size_t i = 0; i < g.cells(); ++i) h.at(i) = rng.uniform() < 0.9 ? 0.0 : double(1 + rng.index(40));
            for (double t : {0.5, 2.0, 6.0}) {
                for (const Cube& Q : {root_q0(g), dyadic_children(root_q0(g), 2)[seed % 4]}) {
                    CHECK(keys(threshold_stopping(h, Q, t, true)) == keys(brute_threshold(h, Q, t)));
                }
            }
        }
    }
}

TEST_CASE("density stopping equals the exhaustive oracle") {
    for (int L : {2, 3, 4}) {
        Grid g(2, L);
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            Rng rng(seed + 10);
            CellSet xi(g);
            for (std::size_t i : CellSet::from_cube(g, root_q0(g)).indices())
                if (rng.uniform() < 0.08) xi.insert(i);
            const Cube Q = root_q0(g);
            const auto got = density_stopping(xi, Q, 0.125);
            CHECK(keys(got) == keys(brute_density(xi, Q, 0.125)));
            CellSet cover(g);
            for (const Cube& c : got) cover |= CellSet::from_cube(g, c);
            CHECK(xi.subset_of(cover));
        }
    }
}

TEST_CASE("the threshold D matches the formula") {
    Grid g(2, 3);
    auto a = make_coefficient(g, {"identity", {}, false, 0.0});
    // |F| = 1 everywhere gives <|F|>_{3Q,2} = 1
    GridField F(g, 2);
    for (std::size_t i = 0; i < g.cells(); ++i) F.at(i, 0) = 1.0;
    SparseParams p;
    p.A = 1.0;
    p.B = 1.0;
    const auto rep = iteration_step(root_q0(g), a, F, GridField(), GridField(g, 1, 1.0), nullptr, p);
    CHECK(rep.threshold_D == doctest::Approx(std::sqrt(81.0 * 18.0)));
    CHECK(rep.threshold_D == doctest::Approx(38.18).epsilon(1e-3));
    CHECK(rep.children.empty());
    CHECK(rep.audit_ok);
}

TEST_CASE("zero data: no children, zero terms, family {Q0}") {
    Grid g(2, 3);
    auto a = make_coefficient(g, {"checkerboard", {}, false, 0.0});
    SparseParams p;
    p.A = 1.0;
    p.B = 1.0;
    const GridField zero(g, 2), one(g, 1, 1.0);
    const auto rep = iteration_step(root_q0(g), a, zero, GridField(), one, nullptr, p);
    CHECK(rep.children.empty());
    CHECK(rep.term_I == 0.0);
    CHECK(rep.term_II == 0.0);
    CHECK(rep.term_III == 0.0);
    CHECK(rep.threshold_D == 0.0);

    const auto cert = build_sparse_family(a, zero, GridField(), one, nullptr, SparseMode::Local, p);
    CHECK(cert.family.cubes.size() == 1);
    CHECK(cert.lhs == 0.0);
    CHECK(cert.rhs_sum == 0.0);
    CHECK(cert.sparsity.is_sparse);

    p.C_w = 1.0;
    p.C_S = 1.0;
    const Domain full = make_domain(g, "full-cube");
    const auto dini = dini_iteration_step(root_q0(g), a, zero, one, &full, p);
    CHECK(dini.children.empty());
    CHECK(dini.threshold_D == 0.0);
}

TEST_CASE("sparse form examples") {
    Grid g(2, 3);
    const GridField one(g, 1, 1.0);
    SparseFamily fam;
    fam.cubes.push_back(root_q0(g));
    CHECK(sparse_form(fam, one, one, 2.0, 1.5) == doctest::Approx(1.0));
    CHECK(sparse_form(fam, one, one, 1.0, 3.0, true) == doctest::Approx(1.0));

    // two disjoint children with constant data: 2 * (1/4) * 1 * 1
    SparseFamily two;
    const auto ch = dyadic_children(root_q0(g), 2);
    two.cubes = {ch[0], ch[3]};
    CHECK(sparse_form(two, one, one, 2.0, 2.0) == doctest::Approx(0.5));
    CHECK(sparse_form_first_order(two, one, one, 1.0, 1.0) == doctest::Approx(2 * 0.25 * 1.5));

    const GridField F = fourier_field(g, 2, 3, 1.0, 4);
    const GridField w = random_positive_field(g, 0.1, 2.0, 5);
    double prev = 0.0;
    for (double r : {1.0, 1.5, 2.0, 4.0}) {
        const double v = sparse_form(two, F, w, 2.0, r);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("f guard rejects a source term when q_l* <= 1") {
    Grid g(2, 3);
    auto a = make_coefficient(g, {"identity", {}, false, 0.0});
    SparseParams p;
    p.A = 1.0;
    p.B = 1.0;
    const GridField f(g, 1, 1.0);
    CHECK_THROWS_AS(build_sparse_family(a, GridField(g, 2), f, GridField(g, 1, 1.0), nullptr, SparseMode::Local, p),
                    Error);
}

TEST_CASE("nontrivial families are sparse and decay by generation") {
    Grid g(2, 4);
    auto a = make_coefficient(g, {"checkerboard", {{"alpha", 1.0}, {"beta", 4.0}}, false, 0.0});
    const GridField one(g, 1, 1.0);
    SparseParams p;
    sharp_A(p, a);
    p.B = 2.0;
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        // concentrated data: a few narrow bumps
        const GridField F = bump_field(g, 2, 3, 1.0, 0.03, seed);
        const auto cert = build_sparse_family(a, F, GridField(), one, nullptr, SparseMode::Local, p);
        CHECK(cert.sparsity.is_sparse);
        CHECK(cert.sparsity.overlap_violations == 0);
        CHECK(cert.generation_decay_ok);
        CHECK(cert.measure_bounds_ok);
        CHECK(cert.ratio_ok);
        for (const auto& s : cert.steps) CHECK(s.cover_exact);
        MESSAGE("seed " << seed << ": cubes " << cert.family.cubes.size() << " generations "
                        << cert.generations.size() << " ratio " << cert.empirical_ratio << " C "
                        << cert.paper_constant);
    }
}

TEST_CASE("threshold scaling exposes the exceptional-set bound") {
    Grid g(2, 3);
    auto a = make_coefficient(g, {"identity", {}, false, 0.0});
    SparseParams p;
    p.A = 1.0;
    p.B = 1.0;
    p.threshold_scale = 1e-3;
    const GridField F = fourier_field(g, 2, 3, 1.0, 2);
    CHECK_THROWS_AS(iteration_step(root_q0(g), a, F, GridField(), GridField(g, 1, 1.0), nullptr, p), Error);
}

TEST_CASE("data on a proper domain is kept on the domain") {
    Grid g(2, 3);
    auto a = make_coefficient(g, {"identity", {}, false, 0.0});
    const Domain disk = make_domain(g, "disk");
    const GridField F = fourier_field(g, 2, 3, 1.0, 6);
    SparseParams p;
    p.A = 1.0;
    p.B = 1.0;
    const auto cert = build_sparse_family(a, F, GridField(), GridField(g, 1, 1.0), &disk, SparseMode::Global, p);
    CHECK(cert.lhs > 0.0);

    CalibrationOptions co;
    co.trials = 4;
    const auto cal = measure_dini_constants(a, &disk, co);
    CHECK(cal.C_w > 0.0);
}
