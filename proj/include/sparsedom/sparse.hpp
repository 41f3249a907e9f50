#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sparsedom/coefficient.hpp"
#include "sparsedom/field.hpp"
#include "sparsedom/geometry.hpp"
#include "sparsedom/maximal.hpp"
#include "sparsedom/solver.hpp"

namespace sparsedom {

enum class SparseMode { Local, Global, Dini };
const char* sparse_mode_name(SparseMode m);

struct SparseParams {
    double theta = 0.5;
    double q_l = 2.0;
    double q_h = 4.0;
    double A = 0.0;   // N_l(a, q_l)
    double B = 0.0;   // N_h(a, q_h), loc or bdr
    double K_M = 0.0; // 0 selects 9^n
    double c_n = 0.0; // Poincare constant behind a certified A
    std::string A_source = "supplied";
    std::string B_source = "supplied";
    // dini mode
    double C_w = 0.0;
    double C_S = 0.0;
    int s_depth_cap = 4;
    // multiplies D; anything but 1 voids the certificate
    double threshold_scale = 1.0;
    SolverConfig solver;

    double km(int n) const;
};

// A = (1 + c_n) sqrt(2) / λ with c_n measured on the largest solve region.
void certify_A(SparseParams& p, const EllipticCoefficient& a, const CellSet& largest_region);
// With f = 0 the energy estimate gives A = 1 / λ directly.
void sharp_A(SparseParams& p, const EllipticCoefficient& a);

// Power mean of |h| over a box with the given denominator (cells outside the grid count as zero).
double box_power_mean(const GridField& h, const Box& b, double s, double denominator_cells);
double triple_mean(const GridField& h, const Cube& P, double s);  // <|h|>_{3P,s}
double cube_mean(const GridField& h, const Cube& P, double s);    // <|h|>_{P,s}

// Maximal P in D(Q) with <h>_{3P} > threshold (h >= 0 scalar); with cell_limit, also single cells
// x not yet covered where h(x) > threshold.
std::vector<Cube> threshold_stopping(const GridField& h, const Cube& Q, double threshold, bool cell_limit);
// Maximal P in D(Q) with |P ∩ xi| / |P| > density.
std::vector<Cube> density_stopping(const CellSet& xi, const Cube& Q, double density);

struct IterationReport {
    Cube cube;
    double threshold_D = 0.0;
    double L_Q = 0.0;
    double term_I = 0.0;
    double term_II = 0.0;
    double term_III = 0.0;
    double local_term = 0.0;  // |Q| (<|F|>_{3Q,q} + 3l <|f|>) <g>_{Q,r}
    double bound_I = 0.0;
    double bound_II = 0.0;
    double stated_constant = 0.0;
    double corrected_constant = 0.0;
    std::vector<Cube> children;
    std::size_t cell_limit_children = 0;
    double exceptional_measure = 0.0;  // |Ξ|
    double children_measure = 0.0;     // |∪P|
    bool cover_exact = false;          // ∪P = Ξ (general) or ∪P ⊇ Ξ (dini)
    bool audit_ok = false;             // I <= bound_I, II <= bound_II, L(Q) <= I + II + III
    // dini mode
    double N = 0.0;
    std::vector<std::size_t> witnesses;
    double max_parent_density = 0.0;
    double max_child_density = 0.0;
    std::size_t children_below_s_cap = 0;

    std::vector<Solution> child_solutions;
};

IterationReport iteration_step(const Cube& Q, const EllipticCoefficient& a, const GridField& F, const GridField& f,
                               const GridField& g, const Domain* omega, const SparseParams& p,
                               const Solution* uQ = nullptr);
IterationReport dini_iteration_step(const Cube& Q, const EllipticCoefficient& a, const GridField& F,
                                    const GridField& g, const Domain* omega, const SparseParams& p,
                                    const Solution* uQ = nullptr);

struct GenerationRecord {
    std::size_t cubes = 0;
    double measure = 0.0;
    double bound = 0.0;  // θ^j |Q0|
    double residual = 0.0;  // Σ_{P in S_j} L(P)
};

struct SparseBoundCertificate {
    SparseMode mode = SparseMode::Local;
    double lhs = 0.0;
    double rhs_sum = 0.0;
    double rhs_first_order = 0.0;
    double paper_constant = 0.0;
    double corrected_constant = 0.0;
    double empirical_ratio = 0.0;
    double final_residual = 0.0;
    SparseFamily family;
    std::vector<IterationReport> steps;
    std::vector<GenerationRecord> generations;
    std::vector<double> residual_decay;
    SparseParams params;
    SparsityReport sparsity;
    bool f_guard_binding = false;
    bool certified = false;

    bool measure_bounds_ok = false;
    bool generation_decay_ok = false;
    bool residual_monotone = false;
    bool audits_ok = false;
    bool ratio_ok = false;
};

// Local: u on 3Q0, O_Q = 3Q. Global: Ω ⊂ Q0, U_Q = Ω ∩ 3Q. Dini: as global with the Dini step.
SparseBoundCertificate build_sparse_family(const EllipticCoefficient& a, const GridField& F, const GridField& f,
                                          const GridField& g, const Domain* omega, SparseMode mode,
                                          const SparseParams& p);

// Random nested family in D(Q0): every cube gets children one or two levels down covering at most
// theta of it, so the family is (1 - theta)-sparse with E_P = P minus the children.
SparseFamily random_sparse_family(const Grid& g, double theta, int generations, std::uint64_t seed);

// Σ |P| <|F|>_{3P,s} <g>_{P,r}, or <g>_{3P,r} when g_on_triple.
double sparse_form(const SparseFamily& fam, const GridField& F, const GridField& g, double s, double r,
                   bool g_on_triple = false);
// Σ |P| 3l(P) <|f|>_{3P,s} <g>_{P,r}
double sparse_form_first_order(const SparseFamily& fam, const GridField& f, const GridField& g, double s, double r);

struct DiniCalibration {
    double C_w = 0.0, C_S = 0.0, C_inf = 0.0;
    double C_w_fine = 0.0, C_S_fine = 0.0, C_inf_fine = 0.0;
    bool C_w_stable = false, C_S_stable = false, C_inf_stable = false;
    int trials = 0;
};

struct CalibrationOptions {
    int trials = 30;
    int s_trials = 4;       // the S function is costly; it is sampled on fewer cubes
    int depth_cap = 4;
    std::uint64_t seed = 1;
    double tolerance = 0.2; // relative change allowed under one refinement
    double bump_radius = 0.15;  // concentrated trial data; must span several cells at the coarse level
    SolverConfig solver;
};

// One level: sup over random cubes and data of the three ratios.
DiniCalibration measure_dini_constants(const EllipticCoefficient& a, const Domain* omega,
                                       const CalibrationOptions& opt);
// Measures at level and level + 1 and flags stability.
DiniCalibration calibrate_dini_constants(const CoefficientSpec& coef, const std::string& domain, int n, int level,
                                         const CalibrationOptions& opt);

}  // namespace sparsedom
