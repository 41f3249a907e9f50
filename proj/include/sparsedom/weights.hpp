#pragma once

#include <map>
#include <string>
#include <vector>

#include "sparsedom/coefficient.hpp"
#include "sparsedom/data.hpp"
#include "sparsedom/field.hpp"
#include "sparsedom/geometry.hpp"
#include "sparsedom/solver.hpp"

namespace sparsedom {

class Weight {
public:
    Weight() = default;
    Weight(GridField field, std::string name);  // degenerate-weight unless every cell is positive

    const GridField& field() const { return field_; }
    const std::string& name() const { return name_; }
    double at(std::size_t i) const { return field_.at(i); }
    // σ = w^{1-p'}
    Weight dual(double p) const;
    // w(E)
    double mass(const CellSet& e) const;

    double ap(double p, const Cube& root) const;
    double rh(double s, const Cube& root) const;

private:
    GridField field_;
    std::string name_;
    mutable std::map<std::pair<double, std::string>, double> ap_cache_, rh_cache_;
};

// |x - c|^α with c at a grid vertex; cell values are 4^n sub-cell midpoint averages.
Weight power_weight(const Grid& g, double alpha, const std::array<double, 3>& center);
// Constant `lo` on the lower half of Q0 along axis 0 (all of 3Q0 below x = 1/2), `hi` above.
Weight two_valued_weight(const Grid& g, double lo, double hi);

struct WeightSpec {
    std::string kind = "one";  // one | power | two-valued
    double alpha = 0.0;
    std::array<double, 3> center{0.5, 0.5, 0.5};
    double lo = 1.0, hi = 4.0;
};
Weight make_weight(const Grid& g, const WeightSpec& spec);

// sup over D(root) of <w>_P <w^{-1/(p-1)}>_P^{p-1}
double ap_constant(const Weight& w, double p, const Cube& root);
// sup over D(root) of <w^s>_P^{1/s} / <w>_P
double rh_constant(const Weight& w, double s, const Cube& root);

struct WeightedChain {
    double eta = 0.0;             // sparseness of the family
    double A2 = 0.0;              // [w]_{A_2} over D(Q0)
    // t0 sparse form, t1 the |E_P| inf form, t2 ∫_{E_P} form, t3 full integral, t4 Cauchy-Schwarz,
    // t5 after the maximal inequality, t6 = 4 [w] ||f||_{L²(w)} ||g||_{L²(σ)} / η
    std::vector<double> chain_terms;
    std::vector<bool> chain_holds;
    double paper_rhs = 0.0;       // 4 [w]_{A_2} ||f|| ||g|| without the 1/η factor
    bool paper_final_holds = false;
    double maximal_ratio_sigma = 0.0;  // ||M^σ h||_{L²(σ)} / ||h||_{L²(σ)}
    double maximal_ratio_w = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool certified_chain = false;  // p == 2
    bool pass = false;
};

// Σ_P |P| <f>_P <g>_P against the weighted bound; p = 2 runs the full chain, other p compare with
// 4 [w]_{A_p}^{max(1, 1/(p-1))} ||f||_{L^p(w)} ||g||_{L^{p'}(σ)} / η.
WeightedChain sparse_to_weighted_check(const SparseFamily& fam, const GridField& f, const GridField& g,
                                       const Weight& w, double p);

enum class WeightedMode { Vmo, Dini };

struct WeightedGradientReport {
    double lhs_norm = 0.0;  // ||∇u||_{L^p(Ω, w)}
    double rhs_norm = 0.0;  // ||F||_{L^p(3Q0, w)}
    double ratio = 0.0;
    double Ap = 0.0;
    double exponent = 0.0;  // max(1/(p-1), 1)
    double normalized = 0.0;  // ratio / [w]^exponent
};

WeightedGradientReport weighted_gradient_bound(const EllipticCoefficient& a, const Domain* omega, const GridField& F,
                                               const Weight& w, double p, const SolverConfig& cfg = {});

struct WeightedRefinement {
    WeightedGradientReport coarse, fine;
    double change = 0.0;  // |fine - coarse| / coarse of the compared quantity
    bool stable = false;
};
// Dini mode compares the normalized ratio (25% band); vmo mode compares the plain ratio and reports only.
WeightedRefinement weighted_gradient_bound_check(const CoefficientSpec& coef, const std::string& domain,
                                                 const DataSpec& data, const WeightSpec& weight, int n, int level,
                                                 double p, WeightedMode mode, double band = 0.25);

}  // namespace sparsedom
