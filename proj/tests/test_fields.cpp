#include <cmath>
#include <cstdio>
#include <limits>

#include "doctest.h"
#include "sparsedom/data.hpp"
#include "sparsedom/discretization.hpp"
#include "sparsedom/field.hpp"

using namespace sparsedom;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 1, 2, 3, 4 on the four quarters of Q0
GridField quarters(const Grid& g) {
    GridField h(g, 1);
    const Cube q0 = root_q0(g);
    const auto kids = dyadic_children(q0, g.n);
    for (std::size_t k = 0; k < kids.size(); ++k)
        for (std::size_t i : CellSet::from_cube(g, kids[k]).indices()) h.at(i) = static_cast<double>(k + 1);
    return h;
}

CellSet left_half(const Grid& g) {
    CellSet s(g);
    for (std::size_t i : CellSet::from_cube(g, root_q0(g)).indices())
        if (g.center_of(i)[0] < 0.5) s.insert(i);
    return s;
}

}  // namespace

TEST_CASE("power means") {
    const Grid g(2, 3);
    const CellSet q0 = CellSet::from_cube(g, root_q0(g));
    const GridField c(g, 1, 3.0);
    for (double s : {0.5, 1.0, 2.0, 7.0}) CHECK(power_mean(c, q0, s) == doctest::Approx(3.0));
    const GridField h = quarters(g);
    CHECK(power_mean(h, q0, 1.0) == doctest::Approx(2.5));
    CHECK(power_mean(h, q0, 2.0) == doctest::Approx(std::sqrt(7.5)));
}

TEST_CASE("integrals") {
    const Grid g(2, 3);
    const GridField one(g, 1, 1.0);
    CHECK(integrate(one, CellSet::from_cube(g, root_q0(g))) == doctest::Approx(1.0));
    CHECK(integrate(one, CellSet(g, true)) == doctest::Approx(9.0));
    CHECK(integrate(one, left_half(g)) == doctest::Approx(0.5));
}

TEST_CASE("gradient of a linear function") {
    const Grid g(2, 3);
    GridField u(g, 1);
    for (std::size_t i = 0; i < g.cells(); ++i) u.at(i) = g.center_of(i)[0];
    const GridField du = gradient(u);
    for (std::size_t i : CellSet::from_cube(g, root_q0(g)).indices()) {
        CHECK(du.at(i, 0) == doctest::Approx(1.0));
        CHECK(du.at(i, 1) == doctest::Approx(0.0));
    }
    const GridField z = gradient(GridField(g, 1));
    for (double v : z.data()) CHECK(v == 0.0);
}

TEST_CASE("sample gradients reproduce the assembled stiffness form") {
    const Grid g(2, 3);
    const Domain dom = make_domain(g, "disk");
    const CellSet& r = dom.mask;
    const GridField u = random_positive_field(g, -1.0, 1.0, 3);
    const GridField phi = random_positive_field(g, -1.0, 1.0, 4);
    GridField ur = restrict_to(u, r), pr = restrict_to(phi, r);
    const RegionIndex idx(r);
    const Eigen::SparseMatrix<double> K = identity_stiffness(r, r);
    const double form = from_field(pr, idx).dot(K * from_field(ur, idx));
    const GridField gu = sample_gradients(ur, r), gp = sample_gradients(pr, r);
    double direct = 0.0;
    for (std::size_t i = 0; i < g.cells(); ++i)
        for (int c = 0; c < gu.components(); ++c) direct += gu.at(i, c) * gp.at(i, c);
    direct *= g.cell_volume() / sample_count(2);
    CHECK(direct == doctest::Approx(form).epsilon(1e-12));
}

TEST_CASE("lp norms") {
    const Grid g(2, 3);
    const CellSet q0 = CellSet::from_cube(g, root_q0(g));
    const GridField one(g, 1, 1.0);
    for (double p : {1.0, 1.5, 2.0, 5.0, kInf}) CHECK(lp_norm(one, p, q0, &one) == doctest::Approx(1.0));
    GridField half(g, 1);
    for (std::size_t i : left_half(g).indices()) half.at(i) = 1.0;
    CHECK(lp_norm(half, 2.0, q0) == doctest::Approx(std::sqrt(0.5)));
    const GridField h = quarters(g);
    CHECK(lp_norm(h, kInf, q0) == 4.0);
    GridField w(g, 1, 4.0);
    CHECK(lp_norm(half, 2.0, q0, &w) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("csv round trip") {
    const Grid g(2, 2);
    const GridField f = fourier_field(g, 2, 2, 1.0, 7);
    const std::string path = "fields_roundtrip.csv";
    write_field_csv(f, path);
    const GridField back = read_field_csv(path);
    REQUIRE(back.grid() == g);
    REQUIRE(back.components() == 2);
    for (std::size_t k = 0; k < f.data().size(); ++k) CHECK(back.data()[k] == f.data()[k]);
    std::remove(path.c_str());
}

TEST_CASE("fourier data is resolution independent") {
    const Grid g4(2, 4), g5(2, 5);
    const GridField a = fourier_field(g4, 1, 3, 1.0, 11);
    const GridField b = fourier_field(g5, 1, 3, 1.0, 11);
    // the value at a coarse center equals the continuum function; compare with the fine grid's cell average
    const CellSet q0 = CellSet::from_cube(g4, root_q0(g4));
    CHECK(power_mean(a, q0, 2.0) ==
          doctest::Approx(power_mean(b, CellSet::from_cube(g5, root_q0(g5)), 2.0)).epsilon(0.02));
}
