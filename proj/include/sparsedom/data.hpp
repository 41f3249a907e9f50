#pragma once

#include <cstdint>
#include <string>

#include "sparsedom/field.hpp"
#include "sparsedom/geometry.hpp"

namespace sparsedom {

// Seeded source data. Fourier fields use modes with |k|_inf <= modes over the period 3 of 3Q0,
// so the same seed gives the same continuum function at every grid level.
struct DataSpec {
    std::string F = "fourier";  // fourier | bumps | spikes | multiscale | zero
    int modes = 6;
    double amplitude = 1.0;
    int bumps = 3;
    double bump_height = 1.0;
    double bump_radius = 0.05;
    std::string f = "zero";  // zero | fourier
    double f_amplitude = 1.0;
    std::string g = "ones";  // ones | random
    std::uint64_t seed = 1;
};

struct ProblemData {
    GridField F;
    GridField f;
    GridField g;
};

GridField fourier_field(const Grid& grid, int components, int modes, double amplitude, std::uint64_t seed);
GridField bump_field(const Grid& grid, int components, int count, double height, double radius, std::uint64_t seed);
// Uniform values in [lo, hi) per cell.
// `count` single cells of Q0 carrying a random unit direction times height.
GridField spike_field(const Grid& grid, int components, int count, double height, std::uint64_t seed);
// Nested bumps around one random point of Q0: radius r 2^-k, height growth^k for k < levels.
GridField multiscale_field(const Grid& grid, int components, int levels, double radius, double growth,
                           std::uint64_t seed);
GridField random_positive_field(const Grid& grid, double lo, double hi, std::uint64_t seed);
ProblemData make_data(const Grid& grid, const DataSpec& spec);
// Zero the field on the cells of `region`.
GridField mask_out(const GridField& f, const CellSet& region);

}  // namespace sparsedom
