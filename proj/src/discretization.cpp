#include "sparsedom/discretization.hpp"

#include <cmath>

#include "sparsedom/error.hpp"

namespace sparsedom {

RegionIndex::RegionIndex(const CellSet& region) : map_(region.grid().cells(), -1) {
    cells_ = region.indices();
    for (std::size_t k = 0; k < cells_.size(); ++k) map_[cells_[k]] = static_cast<long>(k);
}

namespace {

// Sample k of cell c along axis d: (g u)_d = coef[0]*u[cell[0]] + coef[1]*u[cell[1]].
struct AxisTaps {
    std::size_t cell[2];
    double coef[2];
};

void taps(const Grid& g, std::size_t c, int k, int d, AxisTaps& t) {
    const double inv_h = 1.0 / g.h();
    const int sgn = ((k >> d) & 1) ? 1 : -1;
    const std::size_t nb = neighbor(g, c, d, sgn);
    t.cell[0] = c;
    t.cell[1] = nb;
    t.coef[0] = sgn > 0 ? -inv_h : inv_h;
    t.coef[1] = sgn > 0 ? inv_h : -inv_h;
}

double sample_weight(const Grid& g) { return g.cell_volume() / sample_count(g.n); }

}  // namespace

Eigen::SparseMatrix<double> assemble_stiffness(const EllipticCoefficient& a, const CellSet& form_cells,
                                               const CellSet& unknowns) {
    if (!a.is_linear()) throw Error(ErrorCode::InvalidArgument, "stiffness assembly needs a linear coefficient");
    const Grid& g = unknowns.grid();
    const int n = g.n;
    const int m = sample_count(n);
    const double w = sample_weight(g);
    const RegionIndex idx(unknowns);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(form_cells.count() * static_cast<std::size_t>(m * 4 * n * n));
    AxisTaps t[3];
    for (std::size_t c : form_cells.indices()) {
        for (int k = 0; k < m; ++k) {
            for (int d = 0; d < n; ++d) taps(g, c, k, d, t[d]);
            const double* A = a.matrix_at(c, k);
            for (int d = 0; d < n; ++d) {
                for (int e = 0; e < n; ++e) {
                    const double ade = A[d * n + e];
                    if (ade == 0.0) continue;
                    for (int p = 0; p < 2; ++p) {
                        if (t[d].cell[p] == kNoCell) continue;
                        const long row = idx(t[d].cell[p]);
                        if (row < 0) continue;
                        for (int q = 0; q < 2; ++q) {
                            if (t[e].cell[q] == kNoCell) continue;
                            const long col = idx(t[e].cell[q]);
                            if (col < 0) continue;
                            trip.emplace_back(row, col, w * t[d].coef[p] * ade * t[e].coef[q]);
                        }
                    }
                }
            }
        }
    }
    Eigen::SparseMatrix<double> K(static_cast<long>(idx.size()), static_cast<long>(idx.size()));
    K.setFromTriplets(trip.begin(), trip.end());
    K.makeCompressed();
    return K;
}

Eigen::SparseMatrix<double> identity_stiffness(const CellSet& form_cells, const CellSet& unknowns) {
    const Grid& g = unknowns.grid();
    GridField eye(g, g.n * g.n);
    for (std::size_t i = 0; i < g.cells(); ++i)
        for (int d = 0; d < g.n; ++d) eye.at(i, d * g.n + d) = 1.0;
    return assemble_stiffness(EllipticCoefficient::linear(std::move(eye), 1.0, 1.0, "identity"), form_cells, unknowns);
}

Eigen::VectorXd assemble_load(const CellSet& form_cells, const CellSet& unknowns, const GridField* F,
                              const GridField* f) {
    const Grid& g = unknowns.grid();
    const int n = g.n;
    const int m = sample_count(n);
    const double w = sample_weight(g);
    const RegionIndex idx(unknowns);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(static_cast<long>(idx.size()));
    AxisTaps t;
    if (F && F->valid()) {
        for (std::size_t c : form_cells.indices()) {
            for (int k = 0; k < m; ++k) {
                for (int d = 0; d < n; ++d) {
                    const double Fd = F->at(c, d);
                    if (Fd == 0.0) continue;
                    taps(g, c, k, d, t);
                    for (int p = 0; p < 2; ++p) {
                        if (t.cell[p] == kNoCell) continue;
                        const long row = idx(t.cell[p]);
                        if (row >= 0) b[row] += w * Fd * t.coef[p];
                    }
                }
            }
        }
    }
    if (f && f->valid()) {
        const double vol = g.cell_volume();
        for (std::size_t k = 0; k < idx.size(); ++k) b[static_cast<long>(k)] += vol * f->at(idx.cells()[k]);
    }
    return b;
}

Eigen::VectorXd apply_form(const EllipticCoefficient& a, const CellSet& form_cells, const GridField& u,
                           const CellSet& u_region, const CellSet& unknowns) {
    const Grid& g = unknowns.grid();
    const int n = g.n;
    const int m = sample_count(n);
    const double w = sample_weight(g);
    const RegionIndex idx(unknowns);
    Eigen::VectorXd r = Eigen::VectorXd::Zero(static_cast<long>(idx.size()));
    double gu[3], flux[3];
    AxisTaps t;
    for (std::size_t c : form_cells.indices()) {
        for (int k = 0; k < m; ++k) {
            sample_gradient_at(u, u_region, c, k, gu);
            a.flux(c, k, gu, flux);
            for (int d = 0; d < n; ++d) {
                if (flux[d] == 0.0) continue;
                taps(g, c, k, d, t);
                for (int p = 0; p < 2; ++p) {
                    if (t.cell[p] == kNoCell) continue;
                    const long row = idx(t.cell[p]);
                    if (row >= 0) r[row] += w * flux[d] * t.coef[p];
                }
            }
        }
    }
    return r;
}

GridField to_field(const Grid& g, const RegionIndex& idx, const Eigen::VectorXd& x) {
    GridField u(g, 1);
    for (std::size_t k = 0; k < idx.size(); ++k) u.at(idx.cells()[k]) = x[static_cast<long>(k)];
    return u;
}

Eigen::VectorXd from_field(const GridField& u, const RegionIndex& idx) {
    Eigen::VectorXd x(static_cast<long>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) x[static_cast<long>(k)] = u.at(idx.cells()[k]);
    return x;
}

}  // namespace sparsedom
