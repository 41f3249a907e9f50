#include "doctest.h"

#include <cmath>

#include "sparsedom/data.hpp"
#include "sparsedom/regularity.hpp"

using namespace sparsedom;

TEST_CASE("reverse Hoelder constant for the identity is finite and stable") {
    ReverseHolderOptions opt;
    opt.trials = 50;
    const auto r = estimate_reverse_holder({"identity", {}, false, 0.0}, "full-cube", 2, 3, 4.0, RHMode::Local, opt);
    CHECK(r.pairs == 50);
    CHECK(r.cubes > 0);
    CHECK(r.constant >= 1.0);
    CHECK(std::isfinite(r.constant));
    MESSAGE("N(identity, 4) = " << r.constant << " -> " << r.constant_fine);
}

TEST_CASE("identical pairs contribute nothing") {
    Grid g(2, 3);
    auto a = make_coefficient(g, {"identity", {}, false, 0.0});
    ReverseHolderOptions opt;
    opt.trials = 2;
    opt.amplitude = 0.0;  // F = 0: u = v = 0, every ratio is 0/0
    const auto r = reverse_holder_sup(a, nullptr, 4.0, RHMode::Local, opt);
    CHECK(r.cubes == 0);
    CHECK(r.skipped > 0);
    CHECK(r.constant == 0.0);
}

TEST_CASE("upper exponent is non-increasing in the checkerboard contrast") {
    Grid g(2, 3);
    ReverseHolderOptions opt;
    opt.trials = 12;
    double prev_q = 1e9, prev_c = 0.0;
    for (double K : {2.0, 4.0, 8.0}) {
        auto a = make_coefficient(g, {"checkerboard", {{"alpha", 1.0}, {"beta", K}}, false, 0.0});
        const auto scan = select_upper_exponent(a, nullptr, RHMode::Local, 10.0, {2.5, 3, 4, 5, 6, 8}, opt);
        CHECK(scan.q_h <= prev_q);
        // the constant at the top of the scan grows with the contrast
        CHECK(scan.constant.back() >= prev_c);
        prev_q = scan.q_h;
        prev_c = scan.constant.back();
    }
}

TEST_CASE("linearization of the nonlinear flux") {
    Grid g(2, 4);
    auto a = make_coefficient(g, {"identity", {}, true, 0.5});
    const Cube Q = dyadic_children(root_q0(g), 2)[3];
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const auto rep = check_linearization(a, Q, nullptr, fourier_field(g, 2, 4, 2.0, seed));
        CHECK(rep.scale > 0.0);
        CHECK(rep.pass);
        MESSAGE("residual/scale = " << rep.residual / rep.scale);
    }
}
