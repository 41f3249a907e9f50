#pragma once

#include <string>
#include <vector>

#include "sparsedom/field.hpp"
#include "sparsedom/geometry.hpp"

namespace sparsedom {

// Heatmap of the cell magnitudes of a two-dimensional field (other dimensions are not drawn).
void write_heatmap_svg(const GridField& f, const std::string& path, const std::string& title);
// Outlines of the family cubes over 3Q0, shaded by generation.
void write_family_svg(const Grid& g, const SparseFamily& fam, const std::string& path, const std::string& title);

// "x" for a number is formatted with 17 significant digits so reruns compare byte for byte.
std::string num(double x);

}  // namespace sparsedom
