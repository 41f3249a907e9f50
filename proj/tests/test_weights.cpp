#include <cmath>

#include "doctest.h"
#include "sparsedom/error.hpp"
#include "sparsedom/sparse.hpp"
#include "sparsedom/weights.hpp"

using namespace sparsedom;

namespace {

// Direct loops over every lattice cube; no box sums.
double brute_ap(const Weight& w, double p, const Grid& g) {
    double best = 0.0;
    const Cube Q0 = root_q0(g);
    for (const Cube& P : lattice(Q0, g.n, max_depth(Q0))) {
        double a = 0.0, b = 0.0;
        const auto cells = CellSet::from_cube(g, P).indices();
        for (std::size_t i : cells) {
            a += w.at(i);
            b += std::pow(w.at(i), -1.0 / (p - 1.0));
        }
        a /= cells.size();
        b /= cells.size();
        best = std::max(best, a * std::pow(b, p - 1.0));
    }
    return best;
}

SparseFamily two_cube_family(const Grid& g) {
    SparseFamily fam;
    const Cube Q0 = root_q0(g);
    fam.cubes = {Q0, dyadic_children(Q0, g.n)[0]};
    fam.theta = 0.75;
    return fam;
}

}  // namespace

TEST_CASE("unit weight has unit constants") {
    const Grid g(2, 3);
    const Weight w(GridField(g, 1, 1.0), "one");
    for (double p : {1.5, 2.0, 3.0}) CHECK(ap_constant(w, p, root_q0(g)) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rh_constant(w, 2.0, root_q0(g)) == doctest::Approx(1.0).epsilon(1e-14));
    const Weight c(GridField(g, 1, 7.0), "seven");
    CHECK(rh_constant(c, 3.0, root_q0(g)) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("two-valued weight closed forms") {
    const Grid g(2, 3);
    const Weight w = two_valued_weight(g, 1.0, 4.0);
    CHECK(ap_constant(w, 2.0, root_q0(g)) == doctest::Approx(1.5625).epsilon(1e-14));
    CHECK(rh_constant(w, 2.0, root_q0(g)) == doctest::Approx(std::sqrt(8.5) / 2.5).epsilon(1e-14));
    // only Q0 straddles the jump; every other lattice cube is constant
    const Cube child = dyadic_children(root_q0(g), 2)[0];
    CHECK(ap_constant(w, 2.0, child) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("A_p matches direct lattice loops") {
    for (int L : {1, 2, 3}) {
        const Grid g(2, L);
        for (double alpha : {-1.2, -0.5, 0.5, 1.5}) {
            const Weight w = power_weight(g, alpha, {0.5, 0.25, 0.0});
            for (double p : {1.5, 2.0, 3.0}) {
                const double a = ap_constant(w, p, root_q0(g));
                CHECK(a == doctest::Approx(brute_ap(w, p, g)).epsilon(1e-12));
                CHECK(a >= 1.0 - 1e-12);
            }
        }
    }
}

TEST_CASE("duality of A_p constants") {
    const Grid g(2, 4);
    const Weight w = power_weight(g, 0.7, {0.5, 0.5, 0.0});
    for (double p : {1.5, 3.0}) {
        const double pp = p / (p - 1.0);
        CHECK(ap_constant(w.dual(p), pp, root_q0(g)) ==
              doctest::Approx(std::pow(ap_constant(w, p, root_q0(g)), pp - 1.0)).epsilon(1e-11));
    }
}

TEST_CASE("reverse Hoelder constant grows with s") {
    const Grid g(2, 4);
    const Weight w = power_weight(g, -1.0, {0.5, 0.5, 0.0});
    double prev = 1.0;
    for (double s : {1.5, 2.0, 3.0, 5.0}) {
        const double r = rh_constant(w, s, root_q0(g));
        CHECK(r >= prev - 1e-14);
        prev = r;
    }
    CHECK(prev > 1.0);
}

TEST_CASE("power weight constants settle under refinement") {
    double prev = 0.0;
    for (int L : {4, 5, 6}) {
        const Grid g(2, L);
        const double a = ap_constant(power_weight(g, 0.5, {0.5, 0.5, 0.0}), 2.0, root_q0(g));
        if (prev > 0.0) CHECK(std::abs(a - prev) / prev < 0.05);
        prev = a;
    }
}

TEST_CASE("non-positive weight is degenerate") {
    const Grid g(1, 2);
    GridField f(g, 1, 1.0);
    f.at(3) = 0.0;
    CHECK_THROWS_AS(Weight(f, "bad"), Error);
}

TEST_CASE("weighted chain: trivial family") {
    const Grid g(2, 3);
    SparseFamily fam;
    fam.cubes = {root_q0(g)};
    fam.theta = 1.0;
    const GridField one(g, 1, 1.0);
    const auto r = sparse_to_weighted_check(fam, one, one, Weight(one, "one"), 2.0);
    CHECK(r.lhs == doctest::Approx(1.0));
    CHECK(r.rhs == doctest::Approx(4.0));
    CHECK(r.pass);
}

TEST_CASE("weighted chain: two nested cubes by hand") {
    const Grid g(2, 3);
    const GridField one(g, 1, 1.0);
    const auto r = sparse_to_weighted_check(two_cube_family(g), one, one, Weight(one, "one"), 2.0);
    REQUIRE(r.chain_terms.size() == 7);
    const double expect[] = {1.25, 4.0 / 3, 4.0 / 3, 4.0 / 3, 4.0 / 3, 16.0 / 3, 16.0 / 3};
    for (int k = 0; k < 7; ++k) CHECK(r.chain_terms[k] == doctest::Approx(expect[k]).epsilon(1e-12));
    CHECK(r.pass);
    CHECK(r.paper_final_holds);  // 1.25 <= 4
}

TEST_CASE("weighted chain: random families and power weights") {
    const Grid g(2, 4);
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        const SparseFamily fam = random_sparse_family(g, 0.5, 4, seed);
        CHECK(verify_sparsity(g, fam).is_sparse);
        const Weight w = power_weight(g, seed % 2 ? -0.8 : 0.8, {0.5, 0.5, 0.0});
        const GridField f = random_positive_field(g, 0.0, 2.0, seed);
        const GridField h = random_positive_field(g, 0.0, 2.0, seed + 100);
        const auto r = sparse_to_weighted_check(fam, f, h, w, 2.0);
        CHECK(r.pass);
        for (bool b : r.chain_holds) CHECK(b);
        CHECK(r.maximal_ratio_sigma <= 2.0);
        CHECK(r.maximal_ratio_w <= 2.0);
        CHECK(r.paper_final_holds);
    }
}

TEST_CASE("weighted chain away from p = 2 is reported, not certified") {
    const Grid g(2, 3);
    const SparseFamily fam = random_sparse_family(g, 0.5, 3, 5);
    const GridField one(g, 1, 1.0);
    const auto r = sparse_to_weighted_check(fam, one, one, power_weight(g, 0.5, {0.5, 0.5, 0}), 3.0);
    CHECK_FALSE(r.certified_chain);
    CHECK(r.pass);
}

TEST_CASE("weighted gradient bound: energy case and zero data") {
    const Grid g(2, 4);
    const EllipticCoefficient a = make_coefficient(g, CoefficientSpec{});
    const Domain dom = make_domain(g, "full-cube");
    const Weight one(GridField(g, 1, 1.0), "one");
    const GridField F = fourier_field(g, 2, 3, 1.0, 4);
    const auto r = weighted_gradient_bound(a, &dom, F, one, 2.0);
    CHECK(r.ratio > 0.0);
    CHECK(r.ratio <= 1.0);
    CHECK(r.Ap == doctest::Approx(1.0));
    const auto z = weighted_gradient_bound(a, &dom, GridField(g, 2), one, 2.0);
    CHECK(z.lhs_norm == 0.0);
    CHECK(z.rhs_norm == 0.0);
}
