#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sparsedom/coefficient.hpp"
#include "sparsedom/geometry.hpp"
#include "sparsedom/solver.hpp"

namespace sparsedom {

enum class RHMode { Local, Boundary };

struct ReverseHolderSample {
    Cube Q;
    double ratio = 0.0;  // best ratio over the cubes P of this pair
    Cube P;
};

struct ReverseHolderResult {
    double constant = 0.0;       // measured sup at the base level
    double constant_fine = 0.0;  // same sampling at level + 1
    bool stable = false;         // relative change < 10%
    std::size_t pairs = 0;
    std::size_t cubes = 0;       // (pair, P) ratios evaluated
    std::size_t skipped = 0;     // zero denominators
};

struct ReverseHolderOptions {
    int trials = 50;
    std::uint64_t seed = 1;
    int max_depth = 3;  // depth of the sampled cubes Q (at least 1)
    int modes = 4;
    double amplitude = 1.0;
    SolverConfig solver;
};

// Pairs (u, v) in U(Q): u solves on Ω, v on O_Q ∩ Ω (or on Ω with data changed outside O_Q);
// the ratio <1_Ω h>_{P,q} / <1_Ω h>_{2P,1/2} with h = |∇u - ∇v| over cubes P ⊂ 2Q.
// omega == nullptr means the whole grid.
ReverseHolderResult reverse_holder_sup(const EllipticCoefficient& a, const Domain* omega, double q, RHMode mode,
                                       const ReverseHolderOptions& opt = {});
// Measures at (n, level) and (n, level + 1) from the specs and flags stability.
ReverseHolderResult estimate_reverse_holder(const CoefficientSpec& coef, const std::string& domain, int n, int level,
                                            double q, RHMode mode, const ReverseHolderOptions& opt = {});

struct UpperExponentScan {
    std::vector<double> q;
    std::vector<double> constant;
    std::vector<double> identity_constant;
    double q_h = 0.0;  // 0 if no scanned q met the budget
    double B = 0.0;    // constant at q_h
};
// Largest q in the scan with N(a, q) <= budget * N(identity, q) at the same resolution and samples.
UpperExponentScan select_upper_exponent(const EllipticCoefficient& a, const Domain* omega, RHMode mode,
                                        double budget = 10.0, const std::vector<double>& scan = {2.5, 3, 4, 5, 6, 8},
                                        const ReverseHolderOptions& opt = {});

struct LinearizationReport {
    double residual = 0.0;  // dual norm of φ ↦ ∫ A∇(u - v)·∇φ over test functions in O_Q ∩ Ω
    double scale = 0.0;     // ||∇(u - v)||_2
    bool pass = false;
};
// u solves on Ω with data F, v on O_Q ∩ Ω with the same data, so (u, v) ∈ U(Q).
LinearizationReport check_linearization(const EllipticCoefficient& a, const Cube& Q, const Domain* omega,
                                        const GridField& F, double tol = 1e-6, const SolverConfig& cfg = {});

}  // namespace sparsedom
