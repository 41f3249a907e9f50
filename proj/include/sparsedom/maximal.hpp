#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "sparsedom/coefficient.hpp"
#include "sparsedom/field.hpp"
#include "sparsedom/geometry.hpp"
#include "sparsedom/solver.hpp"

namespace sparsedom {

struct MaximalResult {
    GridField field;
    // Maximizing cube per cell; side 0 for cells outside the root.
    std::vector<Cube> argmax;
    // Set where the cell limit |h(x)| beat every lattice average (include_cell_limit only).
    std::vector<std::uint8_t> cell_limit;
};

struct MaximalOptions {
    // M~ h = max(|h|, M h) on the root.
    bool include_cell_limit = false;
};

// Sum of a scalar field over boxes in O(2^n) via an integral image.
class BoxSums {
public:
    BoxSums() = default;
    explicit BoxSums(const GridField& h);  // sums of |h| (norm_at for vector fields)
    BoxSums(const Grid& g, const std::vector<double>& values);
    double sum(const Box& b) const;

private:
    Grid grid_;
    std::vector<double> prefix_;  // (side+1)^n entries
};

// Generic downward sweep: value(P) for every P in D(root) (all depths), running sup per cell.
// Ties keep the larger (earlier) cube.
MaximalResult lattice_sup(const Grid& g, const Cube& root, const std::function<double(const Cube&)>& value);

MaximalResult dyadic_maximal(const GridField& h, const Cube& root, const MaximalOptions& opt = {});
MaximalResult fractional_maximal(const GridField& h, double s, const Cube& root);
// sup over P of σ(P)^-1 ∫_P |h| σ (plain P averages, no tripling).
MaximalResult weighted_dyadic_maximal(const GridField& h, const GridField& sigma, const Cube& root);

// sup_μ μ |{|h| > μ} ∩ region|, attained in the limit μ -> v⁻ at one of the values v of |h|.
double weak_norm(const GridField& h, const CellSet& region);

struct OscillationOptions {
    int depth_cap = 4;
    SolverConfig solver;
};

struct OscillationStats {
    std::size_t cubes = 0;
    // sup over the cubes P (even side) of sup_{P∩Ω} |∇w_P| / <1_Ω |∇w_P|>_{2P,1/2}
    double c_inf = 0.0;
};

// S(x) = sup over P in D(3Q) ∪ D(Q) (depth <= depth_cap) of 1_P(x) osc_P ∇(u_Q - u_P).
GridField oscillation_function_S(const Cube& Q, const EllipticCoefficient& a, const GridField& F, const Domain* omega,
                                 const OscillationOptions& opt = {}, OscillationStats* stats = nullptr);
// Diameter of the set {∇w(y) : y in cells} (exact pairwise maximum).
double gradient_oscillation(const GridField& grad, const std::vector<std::size_t>& cells);

}  // namespace sparsedom
