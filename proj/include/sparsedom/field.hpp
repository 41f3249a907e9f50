#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "sparsedom/geometry.hpp"

namespace sparsedom {

// Piecewise-constant field on the 3Q0 grid, stored cell-major.
class GridField {
public:
    GridField() = default;
    GridField(const Grid& g, int components, double fill = 0.0);

    const Grid& grid() const { return grid_; }
    int components() const { return components_; }
    bool valid() const { return components_ > 0; }

    double& at(std::size_t cell, int comp = 0) { return values_[cell * components_ + comp]; }
    double at(std::size_t cell, int comp = 0) const { return values_[cell * components_ + comp]; }
    const double* ptr(std::size_t cell, int comp = 0) const { return &values_[cell * components_ + comp]; }
    // Euclidean length of the cell's component vector.
    double norm_at(std::size_t cell) const;

    std::vector<double>& data() { return values_; }
    const std::vector<double>& data() const { return values_; }

private:
    Grid grid_;
    int components_ = 0;
    std::vector<double> values_;
};

constexpr std::size_t kNoCell = static_cast<std::size_t>(-1);

std::size_t neighbor(const Grid& g, std::size_t cell, int axis, int sgn);

GridField magnitude(const GridField& v);
GridField restrict_to(const GridField& h, const CellSet& region);

double power_mean(const GridField& h, const CellSet& region, double s);
double integrate(const GridField& h, const CellSet& region);
// p = infinity is accepted; weight (if valid) multiplies the measure.
double lp_norm(const GridField& h, double p, const CellSet& region, const GridField* weight = nullptr);

int sample_count(int n);
// The n*2^n sample gradients per cell used by the bilinear form: sample k takes the
// forward difference along axis d when bit d of k is set, the backward one otherwise.
// u is read as zero outside `region`; cells outside `region` get zero samples.
GridField sample_gradients(const GridField& u, const CellSet& region);
void sample_gradient_at(const GridField& u, const CellSet& region, std::size_t cell, int k, double* out);
// Cell gradient: the average of the sample gradients (central difference on region cells).
GridField gradient(const GridField& u, const CellSet& region);
GridField gradient(const GridField& u);

void write_field_csv(const GridField& f, const std::string& path);
GridField read_field_csv(const std::string& path);

}  // namespace sparsedom
