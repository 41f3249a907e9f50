#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sparsedom/coefficient.hpp"
#include "sparsedom/field.hpp"
#include "sparsedom/geometry.hpp"

namespace sparsedom {

enum class LinearMethod { Krylov, Direct };

struct SolverConfig {
    double cg_tol = 1e-10;
    int max_iter = 20000;
    double picard_step = 0.0;  // 0 selects lambda / Lambda^2
    double picard_tol = 1e-9;
    int picard_max_iter = 5000;
    double sobolev_constant = 0.0;     // 0 means "measure on demand"
    double maximal_weak_norm = 0.0;    // 0 selects the certified 9^n
    LinearMethod method = LinearMethod::Krylov;

    double K_M(int n) const;
};

struct SolveStats {
    int iterations = 0;
    double residual = 0.0;
    bool nonlinear = false;
    std::vector<double> contraction;  // successive energy-increment ratios
    double max_contraction = 0.0;
    double contraction_bound = 0.0;
};

struct Solution {
    GridField u;
    CellSet region;
    SolveStats stats;

    GridField gradient() const;
};

// Zero Dirichlet data outside `region`; F and f may be default-constructed (zero).
Solution solve_dirichlet(const EllipticCoefficient& a, const CellSet& region, const GridField& F, const GridField& f,
                         const SolverConfig& cfg = {});
Solution solve_nonlinear(const EllipticCoefficient& a, const CellSet& region, const GridField& F, const GridField& f,
                         const SolverConfig& cfg = {});

// O_Q ∩ Ω at cell resolution (O_Q = 3Q clipped to 3Q0); omega may be null for the whole grid.
CellSet solve_region(const Grid& g, const Cube& Q, const Domain* omega);
// Cells of `region` whose axis neighbours all lie in `region` (supports of admissible test functions).
CellSet interior_cells(const CellSet& region);

struct PoincareEstimate {
    double lambda_min = 0.0;        // lower bound on the smallest eigenvalue of the identity stiffness
    double rayleigh = 0.0;
    double constant = 0.0;          // c with ||u||_2 <= c ||grad u||_2 on the region
    int iterations = 0;
};
PoincareEstimate poincare_constant(const CellSet& region);

// Dual energy norm of φ ↦ B(u,φ) - ∫F·∇φ - ∫fφ over test functions supported on `test`.
double weak_residual(const EllipticCoefficient& a, const GridField& u, const CellSet& u_region, const GridField& F,
                     const GridField& f, const CellSet& test);
// Sample-gradient energy ||g u||_2 (the norm the form controls).
double energy_norm(const GridField& u, const CellSet& region);

struct EnergyReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double ratio = 0.0;   // lhs / (||F||^2 + c^2 ||f||^2)
    double bound = 0.0;   // 2 / lambda^2
    double sobolev_constant = 0.0;
    bool pass = false;
};
EnergyReport check_energy_estimate(const EllipticCoefficient& a, const Cube& Q, const Domain* omega,
                                   const GridField& F, const GridField& f, const SolverConfig& cfg = {});
EnergyReport energy_estimate_for(const EllipticCoefficient& a, const Solution& sol, const GridField& F,
                                 const GridField& f, const SolverConfig& cfg = {});

struct CaccioppoliReport {
    double lhs = 0.0;
    double rhs = 0.0;   // (4 Λ²/λ²) ∫ (u - c)² |∇φ|²
    double residual = 0.0;
    bool mean_subtracted = false;
    bool pass = false;
};
// u solves the homogeneous equation in `homog_region` (typically O_Q ∩ Ω) and is supported in u_region.
CaccioppoliReport check_caccioppoli(const EllipticCoefficient& a, const Cube& Q, const CellSet& homog_region,
                                    const GridField& u, const CellSet& u_region, double residual_tol = 1e-6);

}  // namespace sparsedom
