#include <cmath>

#include "doctest.h"
#include "sparsedom/coefficient.hpp"
#include "sparsedom/error.hpp"
#include "sparsedom/solver.hpp"

using namespace sparsedom;

namespace {

CoefficientSpec spec(const std::string& name, std::map<std::string, double> params = {}) {
    CoefficientSpec s;
    s.name = name;
    s.params = std::move(params);
    return s;
}

}  // namespace

TEST_CASE("declared ellipticity of built-ins") {
    const Grid g(2, 3);
    const auto id = make_coefficient(g, spec("identity"));
    CHECK(id.lambda() == 1.0);
    CHECK(id.Lambda() == 1.0);
    const auto cb = make_coefficient(g, spec("checkerboard", {{"alpha", 1.0}, {"beta", 4.0}}));
    CHECK(cb.lambda() == 1.0);
    CHECK(cb.Lambda() == 4.0);
    for (const auto& name : builtin_coefficients()) {
        const auto a = make_coefficient(g, spec(name));
        CHECK(verify_ellipticity(a, 400).pass);
    }
}

TEST_CASE("sampled ellipticity") {
    const Grid g(2, 3);
    const auto two = EllipticCoefficient::custom(
        g, [](std::size_t, const double* xi, double* out) { out[0] = 2 * xi[0], out[1] = 2 * xi[1]; },
        [](std::size_t, const double*, double* out) { out[0] = 2, out[1] = 0, out[2] = 0, out[3] = 2; }, 2.0, 2.0,
        "twice");
    const auto r = verify_ellipticity(two, 200);
    CHECK(r.lambda_hat == doctest::Approx(2.0));
    CHECK(r.Lambda_hat == doctest::Approx(2.0));
    CHECK(r.pass);

    const auto cb = make_coefficient(g, spec("checkerboard", {{"alpha", 1.0}, {"beta", 4.0}}));
    const auto c = verify_ellipticity(cb, 2000);
    CHECK(c.lambda_hat == doctest::Approx(1.0));
    CHECK(c.Lambda_hat == doctest::Approx(4.0));

    const auto liar = EllipticCoefficient::custom(
        g, [](std::size_t, const double* xi, double* out) { out[0] = xi[0], out[1] = xi[1]; }, {}, 1.5, 1.5, "liar");
    CHECK_FALSE(verify_ellipticity(liar, 200).pass);
}

TEST_CASE("perturbed identity keeps lambda >= 3/4") {
    const Grid g(2, 3);
    CoefficientSpec s = spec("identity");
    s.nonlinear = true;
    s.epsilon = 0.5;
    const auto a = make_coefficient(g, s);
    const auto r = verify_ellipticity(a, 5000, 9);
    CHECK(r.lambda_hat >= 0.75);
    CHECK(r.Lambda_hat <= 1.5);
}

TEST_CASE("non-elliptic parameters are rejected") {
    const Grid g(2, 2);
    CHECK_THROWS_AS(make_coefficient(g, spec("scalar", {{"c", -1.0}})), Error);
    CHECK_THROWS_AS(make_coefficient(g, spec("vmo", {{"alpha", 1.0}, {"beta", 2.0}})), Error);
    CHECK_THROWS_AS(make_coefficient(g, spec("nonsense")), Error);
}

TEST_CASE("oscillation modulus") {
    const Grid g(2, 5);
    const Domain q0 = make_domain(g, "full-cube");
    const auto id = make_coefficient(g, spec("identity"));
    for (double r : {0.05, 0.25, 1.0}) CHECK(oscillation_modulus(id.matrix(), r, q0) == 0.0);
    // period 1/2 pattern with values 1 and 4: mean |a - 2.5| = 1.5 on every full period
    const auto cb = make_coefficient(g, spec("checkerboard", {{"alpha", 1.0}, {"beta", 4.0}}));
    CHECK(oscillation_modulus(cb.matrix(), 0.5, q0) == doctest::Approx(1.5).epsilon(0.05));
}

TEST_CASE("dini built-in obeys its declared log modulus") {
    const Grid g(2, 6);
    const Domain q0 = make_domain(g, "full-cube");
    const CoefficientSpec s = spec("dini");
    const auto a = make_coefficient(g, s);
    const double c = declared_dini_constant(s);
    for (double r = 1.0 / 32; r <= 0.5; r *= 2.0) {
        const double bound = c * std::pow(std::abs(std::log(r)), -2.0);
        CHECK(oscillation_modulus(a.matrix(), r, q0) <= bound);
    }
}

TEST_CASE("linearization of linear and degenerate pairs") {
    const Grid g(2, 3);
    const CellSet all(g, true);
    GridField u(g, 1), v(g, 1);
    for (std::size_t i = 0; i < g.cells(); ++i) {
        const auto x = g.center_of(i);
        u.at(i) = x[0] * x[1];
        v.at(i) = std::sin(x[0]);
    }
    const auto cb = make_coefficient(g, spec("checkerboard"));
    const auto lin = linearize_pair(cb, u, all, v, all);
    const GridField avg = cell_average_matrix(lin);
    for (std::size_t i = 0; i < g.cells(); i += 7)
        for (int k = 0; k < 4; ++k) CHECK(avg.at(i, k) == doctest::Approx(cb.matrix().at(i, k)));

    CoefficientSpec s = spec("identity");
    s.nonlinear = true;
    s.epsilon = 0.5;
    const auto a = make_coefficient(g, s);
    const auto same = linearize_pair(a, u, all, u, all);
    const GridField gs = sample_gradients(u, all);
    for (std::size_t i = 0; i < g.cells(); i += 11)
        for (int k = 0; k < sample_count(2); ++k) {
            double jac[4];
            a.jacobian(i, k, gs.ptr(i, 2 * k), jac);
            const double* m = same.matrix_at(i, k);
            for (int e = 0; e < 4; ++e) CHECK(m[e] == doctest::Approx(jac[e]).epsilon(1e-12));
        }
}

TEST_CASE("gauss-legendre integrates polynomials") {
    const auto q = gauss_legendre(5);
    double s = 0.0, m = 0.0;
    for (std::size_t k = 0; k < q.nodes.size(); ++k) {
        s += q.weights[k];
        m += q.weights[k] * std::pow(q.nodes[k], 9);
    }
    CHECK(s == doctest::Approx(1.0));
    CHECK(m == doctest::Approx(0.1));
}
