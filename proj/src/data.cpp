#include "sparsedom/data.hpp"

#include <cmath>
#include <numbers>
#include <vector>

#include "sparsedom/error.hpp"
#include "sparsedom/rng.hpp"

namespace sparsedom {

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

struct Mode {
    int k[3];
    double a;
    double b;
};

std::vector<Mode> draw_modes(int n, int modes, Rng& rng) {
    std::vector<Mode> out;
    const int span = 2 * modes + 1;
    int total = 1;
    for (int d = 0; d < n; ++d) total *= span;
    for (int code = 0; code < total; ++code) {
        Mode m{{0, 0, 0}, 0.0, 0.0};
        int c = code;
        for (int d = 0; d < n; ++d) {
            m.k[d] = c % span - modes;
            c /= span;
        }
        // keep one representative of each ±k pair
        int first = 0;
        for (int d = n - 1; d >= 0; --d)
            if (m.k[d] != 0) {
                first = m.k[d];
                break;
            }
        if (first <= 0) continue;
        double k2 = 0.0;
        for (int d = 0; d < n; ++d) k2 += m.k[d] * m.k[d];
        const double decay = 1.0 / std::sqrt(1.0 + k2);
        m.a = rng.normal() * decay;
        m.b = rng.normal() * decay;
        out.push_back(m);
    }
    return out;
}

}  // namespace

GridField fourier_field(const Grid& grid, int components, int modes, double amplitude, std::uint64_t seed) {
    if (modes < 1) throw Error(ErrorCode::InvalidArgument, "fourier data needs at least one mode");
    Rng rng(seed);
    GridField out(grid, components);
    const double w = 2.0 * std::numbers::pi / 3.0;
    for (int c = 0; c < components; ++c) {
        const auto ms = draw_modes(grid.n, modes, rng);
        double energy = 0.0;
        for (const auto& m : ms) energy += 0.5 * (m.a * m.a + m.b * m.b);
        const double scale = amplitude / std::sqrt(energy);
        for (std::size_t i = 0; i < grid.cells(); ++i) {
            const auto x = grid.center_of(i);
            double v = 0.0;
            for (const auto& m : ms) {
                double phase = 0.0;
                for (int d = 0; d < grid.n; ++d) phase += m.k[d] * (x[d] + 1.0);
                phase *= w;
                v += m.a * std::cos(phase) + m.b * std::sin(phase);
            }
            out.at(i, c) = scale * v;
        }
    }
    return out;
}

GridField bump_field(const Grid& grid, int components, int count, double height, double radius, std::uint64_t seed) {
    Rng rng(seed);
    GridField out(grid, components);
    for (int b = 0; b < count; ++b) {
        double ctr[3] = {0, 0, 0};
        for (int d = 0; d < grid.n; ++d) ctr[d] = rng.uniform();
        double dir[3] = {0, 0, 0};
        double len = 0.0;
        for (int c = 0; c < components; ++c) {
            dir[c] = rng.normal();
            len += dir[c] * dir[c];
        }
        len = std::sqrt(len);
        for (int c = 0; c < components; ++c) dir[c] = len > 0.0 ? dir[c] / len : (c == 0 ? 1.0 : 0.0);
        for (std::size_t i = 0; i < grid.cells(); ++i) {
            const auto x = grid.center_of(i);
            double r2 = 0.0;
            for (int d = 0; d < grid.n; ++d) r2 += (x[d] - ctr[d]) * (x[d] - ctr[d]);
            const double t2 = r2 / (radius * radius);
            if (t2 >= 1.0) continue;
            const double psi = (1.0 - t2) * (1.0 - t2);
            for (int c = 0; c < components; ++c) out.at(i, c) += height * psi * dir[c];
        }
    }
    return out;
}

GridField spike_field(const Grid& grid, int components, int count, double height, std::uint64_t seed) {
    Rng rng(seed);
    GridField out(grid, components);
    const Cube q0 = root_q0(grid);
    for (int b = 0; b < count; ++b) {
        CellCoord c = q0.corner;
        for (int d = 0; d < grid.n; ++d) c[d] += static_cast<int>(rng.index(static_cast<std::size_t>(q0.side)));
        double dir[3] = {0, 0, 0};
        double len = 0.0;
        for (int k = 0; k < components; ++k) {
            dir[k] = rng.normal();
            len += dir[k] * dir[k];
        }
        len = std::sqrt(len);
        const std::size_t i = grid.index(c);
        for (int k = 0; k < components; ++k) out.at(i, k) += height * (len > 0.0 ? dir[k] / len : (k == 0 ? 1.0 : 0.0));
    }
    return out;
}

GridField multiscale_field(const Grid& grid, int components, int levels, double radius, double growth,
                           std::uint64_t seed) {
    Rng rng(seed);
    GridField out(grid, components);
    double ctr[3] = {0, 0, 0};
    for (int d = 0; d < grid.n; ++d) ctr[d] = rng.uniform(0.2, 0.8);
    for (int k = 0; k < levels; ++k) {
        double dir[3] = {0, 0, 0};
        double len = 0.0;
        for (int c = 0; c < components; ++c) {
            dir[c] = rng.normal();
            len += dir[c] * dir[c];
        }
        len = std::sqrt(len);
        const double r = radius * std::pow(0.5, k);
        const double height = std::pow(growth, k);
        for (std::size_t i = 0; i < grid.cells(); ++i) {
            const auto x = grid.center_of(i);
            double r2 = 0.0;
            for (int d = 0; d < grid.n; ++d) r2 += (x[d] - ctr[d]) * (x[d] - ctr[d]);
            const double t2 = r2 / (r * r);
            if (t2 >= 1.0) continue;
            const double psi = (1.0 - t2) * (1.0 - t2);
            for (int c = 0; c < components; ++c)
                out.at(i, c) += height * psi * (len > 0.0 ? dir[c] / len : (c == 0 ? 1.0 : 0.0));
        }
    }
    return out;
}

GridField random_positive_field(const Grid& grid, double lo, double hi, std::uint64_t seed) {
    Rng rng(seed);
    GridField out(grid, 1);
    for (std::size_t i = 0; i < grid.cells(); ++i) out.at(i) = rng.uniform(lo, hi);
    return out;
}

ProblemData make_data(const Grid& grid, const DataSpec& spec) {
    ProblemData d;
    if (spec.F == "fourier")
        d.F = fourier_field(grid, grid.n, spec.modes, spec.amplitude, spec.seed);
    else if (spec.F == "bumps")
        d.F = bump_field(grid, grid.n, spec.bumps, spec.bump_height, spec.bump_radius, spec.seed);
    else if (spec.F == "multiscale")
        d.F = multiscale_field(grid, grid.n, spec.bumps, spec.bump_radius, 2.0, spec.seed);
    else if (spec.F == "spikes")
        d.F = spike_field(grid, grid.n, spec.bumps, spec.bump_height, spec.seed);
    else if (spec.F == "zero")
        d.F = GridField(grid, grid.n);
    else
        throw Error(ErrorCode::ConfigError, "unknown F generator '" + spec.F + "'");
    if (spec.f == "zero")
        d.f = GridField(grid, 1);
    else if (spec.f == "fourier")
        d.f = fourier_field(grid, 1, spec.modes, spec.f_amplitude, spec.seed ^ 0x9e3779b97f4a7c15ULL);
    else
        throw Error(ErrorCode::ConfigError, "unknown f generator '" + spec.f + "'");
    if (spec.g == "ones")
        d.g = GridField(grid, 1, 1.0);
    else if (spec.g == "random")
        d.g = random_positive_field(grid, 0.5, 1.5, spec.seed ^ 0xc2b2ae3d27d4eb4fULL);
    else
        throw Error(ErrorCode::ConfigError, "unknown g generator '" + spec.g + "'");
    return d;
}

GridField mask_out(const GridField& f, const CellSet& region) {
    GridField out = f;
    for (std::size_t i : region.indices())
        for (int c = 0; c < f.components(); ++c) out.at(i, c) = 0.0;
    return out;
}

}  // namespace sparsedom
