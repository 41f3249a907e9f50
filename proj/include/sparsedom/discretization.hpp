#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Sparse>

#include "sparsedom/coefficient.hpp"
#include "sparsedom/field.hpp"
#include "sparsedom/geometry.hpp"

namespace sparsedom {

// Numbering of the cells of a region as unknowns.
class RegionIndex {
public:
    explicit RegionIndex(const CellSet& region);
    long operator()(std::size_t cell) const { return map_[cell]; }
    std::size_t size() const { return cells_.size(); }
    const std::vector<std::size_t>& cells() const { return cells_; }

private:
    std::vector<long> map_;
    std::vector<std::size_t> cells_;
};

// The form B(u, phi) = h^n 2^-n Σ_{c in form_cells} Σ_k a(c, k, g_k u)·g_k phi with u and phi
// supported on `unknowns`. Linear coefficients only.
Eigen::SparseMatrix<double> assemble_stiffness(const EllipticCoefficient& a, const CellSet& form_cells,
                                               const CellSet& unknowns);
Eigen::SparseMatrix<double> identity_stiffness(const CellSet& form_cells, const CellSet& unknowns);
// Load vector of φ ↦ ∫ F·∇φ + ∫ fφ (F paired through the sample gradients, summed over form_cells).
Eigen::VectorXd assemble_load(const CellSet& form_cells, const CellSet& unknowns, const GridField* F,
                              const GridField* f);
// φ ↦ B(u, φ) for u read on u_region (zero elsewhere), summed over form_cells, tested on `unknowns`.
Eigen::VectorXd apply_form(const EllipticCoefficient& a, const CellSet& form_cells, const GridField& u,
                           const CellSet& u_region, const CellSet& unknowns);

GridField to_field(const Grid& g, const RegionIndex& idx, const Eigen::VectorXd& x);
Eigen::VectorXd from_field(const GridField& u, const RegionIndex& idx);

}  // namespace sparsedom
