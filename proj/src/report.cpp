#include "sparsedom/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "sparsedom/error.hpp"

namespace sparsedom {

namespace {

constexpr int kPixels = 480;

std::string color(double t) {
    static const std::array<std::array<double, 3>, 5> stops{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140},
                                                             {94, 201, 98}, {253, 231, 37}}};
    t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * (stops.size() - 1);
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(t), stops.size() - 2);
    const double u = t - k;
    int rgb[3];
    for (int c = 0; c < 3; ++c) rgb[c] = static_cast<int>(std::lround(stops[k][c] * (1 - u) + stops[k + 1][c] * u));
    return fmt::format("#{:02x}{:02x}{:02x}", rgb[0], rgb[1], rgb[2]);
}

std::ofstream open_svg(const std::string& path, const std::string& title) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n",
                       kPixels, kPixels + 24);
    out << fmt::format("<text x=\"4\" y=\"16\" font-family=\"monospace\" font-size=\"12\">{}</text>\n", title);
    return out;
}

}  // namespace

std::string num(double x) { return fmt::format("{:.17g}", x); }

void write_heatmap_svg(const GridField& f, const std::string& path, const std::string& title) {
    const Grid& g = f.grid();
    auto out = open_svg(path, title);
    if (g.n == 2) {
        double hi = 0.0;
        for (std::size_t i = 0; i < g.cells(); ++i) hi = std::max(hi, f.norm_at(i));
        const double px = static_cast<double>(kPixels) / g.side();
        for (std::size_t i = 0; i < g.cells(); ++i) {
            const CellCoord c = g.coord(i);
            // y axis points up
            out << fmt::format("<rect x=\"{:.3f}\" y=\"{:.3f}\" width=\"{:.3f}\" height=\"{:.3f}\" fill=\"{}\"/>\n",
                               c[0] * px, 24 + (g.side() - 1 - c[1]) * px, px + 0.05, px + 0.05,
                               color(hi > 0.0 ? f.norm_at(i) / hi : 0.0));
        }
        out << fmt::format("<text x=\"{}\" y=\"16\" font-family=\"monospace\" font-size=\"12\" "
                           "text-anchor=\"end\">max {:.4g}</text>\n",
                           kPixels - 4, hi);
    }
    out << "</svg>\n";
}

void write_family_svg(const Grid& g, const SparseFamily& fam, const std::string& path, const std::string& title) {
    auto out = open_svg(path, title);
    if (g.n == 2) {
        const double px = static_cast<double>(kPixels) / g.side();
        const Cube q0 = root_q0(g);
        out << fmt::format("<rect x=\"{:.3f}\" y=\"{:.3f}\" width=\"{:.3f}\" height=\"{:.3f}\" fill=\"none\" "
                           "stroke=\"#999\" stroke-dasharray=\"4 2\"/>\n",
                           q0.corner[0] * px, 24 + (g.side() - q0.corner[1] - q0.side) * px, q0.side * px,
                           q0.side * px);
        const std::size_t gens = std::max<std::size_t>(fam.generations.size(), 1);
        auto draw = [&](const Cube& c, std::size_t gen) {
            out << fmt::format("<rect x=\"{:.3f}\" y=\"{:.3f}\" width=\"{:.3f}\" height=\"{:.3f}\" fill=\"{}\" "
                               "fill-opacity=\"0.35\" stroke=\"#000\" stroke-width=\"0.6\"/>\n",
                               c.corner[0] * px, 24 + (g.side() - c.corner[1] - c.side) * px, c.side * px,
                               c.side * px, color(gens > 1 ? static_cast<double>(gen) / (gens - 1) : 0.0));
        };
        if (fam.generations.empty())
            for (const Cube& c : fam.cubes) draw(c, 0);
        for (std::size_t j = 0; j < fam.generations.size(); ++j)
            for (std::size_t k : fam.generations[j]) draw(fam.cubes[k], j);
    }
    out << "</svg>\n";
}

}  // namespace sparsedom
