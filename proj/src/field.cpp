#include "sparsedom/field.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "sparsedom/error.hpp"

namespace sparsedom {

GridField::GridField(const Grid& g, int components, double fill)
    : grid_(g), components_(components), values_(g.cells() * static_cast<std::size_t>(components), fill) {
    if (components < 1) throw Error(ErrorCode::InvalidArgument, "field needs at least one component");
}

double GridField::norm_at(std::size_t cell) const {
    if (components_ == 1) return std::abs(values_[cell]);
    double s = 0.0;
    for (int c = 0; c < components_; ++c) {
        const double v = values_[cell * components_ + c];
        s += v * v;
    }
    return std::sqrt(s);
}

std::size_t neighbor(const Grid& g, std::size_t cell, int axis, int sgn) {
    const CellCoord c = g.coord(cell);
    const int x = c[axis] + sgn;
    if (x < 0 || x >= g.side()) return kNoCell;
    const std::size_t st = g.stride(axis);
    return sgn > 0 ? cell + st : cell - st;
}

GridField magnitude(const GridField& v) {
    GridField out(v.grid(), 1);
    for (std::size_t i = 0; i < v.grid().cells(); ++i) out.at(i) = v.norm_at(i);
    return out;
}

GridField restrict_to(const GridField& h, const CellSet& region) {
    GridField out(h.grid(), h.components());
    for (std::size_t i : region.indices())
        for (int c = 0; c < h.components(); ++c) out.at(i, c) = h.at(i, c);
    return out;
}

double power_mean(const GridField& h, const CellSet& region, double s) {
    if (region.empty()) throw Error(ErrorCode::EmptyRegion, "power mean over an empty region");
    if (!(s > 0.0)) throw Error(ErrorCode::InvalidArgument, "power mean exponent must be positive");
    double acc = 0.0;
    for (std::size_t i : region.indices()) acc += std::pow(h.norm_at(i), s);
    return std::pow(acc / static_cast<double>(region.count()), 1.0 / s);
}

double integrate(const GridField& h, const CellSet& region) {
    double acc = 0.0;
    for (std::size_t i : region.indices()) acc += h.at(i);
    return acc * h.grid().cell_volume();
}

double lp_norm(const GridField& h, double p, const CellSet& region, const GridField* weight) {
    if (p < 1.0) throw Error(ErrorCode::InvalidArgument, "lp_norm needs p >= 1");
    const bool weighted = weight && weight->valid();
    if (std::isinf(p)) {
        double m = 0.0;
        for (std::size_t i : region.indices())
            if (!weighted || weight->at(i) > 0.0) m = std::max(m, h.norm_at(i));
        return m;
    }
    double acc = 0.0;
    for (std::size_t i : region.indices()) {
        const double w = weighted ? weight->at(i) : 1.0;
        if (w < 0.0) throw Error(ErrorCode::InvalidArgument, "negative weight");
        acc += std::pow(h.norm_at(i), p) * w;
    }
    return std::pow(acc * h.grid().cell_volume(), 1.0 / p);
}

int sample_count(int n) { return 1 << n; }

void sample_gradient_at(const GridField& u, const CellSet& region, std::size_t cell, int k, double* out) {
    const Grid& g = u.grid();
    const double inv_h = 1.0 / g.h();
    const double uc = region.contains(cell) ? u.at(cell) : 0.0;
    for (int d = 0; d < g.n; ++d) {
        const int sgn = ((k >> d) & 1) ? 1 : -1;
        const std::size_t nb = neighbor(g, cell, d, sgn);
        const double un = (nb != kNoCell && region.contains(nb)) ? u.at(nb) : 0.0;
        out[d] = sgn > 0 ? (un - uc) * inv_h : (uc - un) * inv_h;
    }
}

GridField sample_gradients(const GridField& u, const CellSet& region) {
    const Grid& g = u.grid();
    const int m = sample_count(g.n);
    GridField out(g, g.n * m);
    for (std::size_t i : region.indices())
        for (int k = 0; k < m; ++k) sample_gradient_at(u, region, i, k, &out.at(i, k * g.n));
    return out;
}

GridField gradient(const GridField& u, const CellSet& region) {
    const Grid& g = u.grid();
    const int m = sample_count(g.n);
    GridField out(g, g.n);
    double buf[3];
    for (std::size_t i : region.indices()) {
        for (int k = 0; k < m; ++k) {
            sample_gradient_at(u, region, i, k, buf);
            for (int d = 0; d < g.n; ++d) out.at(i, d) += buf[d];
        }
        for (int d = 0; d < g.n; ++d) out.at(i, d) /= m;
    }
    return out;
}

GridField gradient(const GridField& u) { return gradient(u, CellSet(u.grid(), true)); }

void write_field_csv(const GridField& f, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    const Grid& g = f.grid();
    const int side = g.side();
    out << "# sparsedom-field v1\n";
    out << "n,level,cells_per_side,components\n";
    out << g.n << ',' << g.level << ',' << side << ',' << f.components() << '\n';
    const std::size_t rows = g.cells() / static_cast<std::size_t>(side);
    for (int c = 0; c < f.components(); ++c) {
        for (std::size_t r = 0; r < rows; ++r) {
            std::string line;
            for (int x = 0; x < side; ++x) {
                if (x) line += ',';
                line += fmt::format("{:.17g}", f.at(r * side + x, c));
            }
            out << line << '\n';
        }
    }
}

GridField read_field_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::string line;
    std::getline(in, line);
    if (line.rfind("# sparsedom-field v1", 0) != 0) throw Error(ErrorCode::IoError, "missing field header in " + path);
    std::getline(in, line);
    std::getline(in, line);
    int n = 0, level = 0, side = 0, comps = 0;
    char sep;
    std::istringstream hdr(line);
    hdr >> n >> sep >> level >> sep >> side >> sep >> comps;
    if (!hdr) throw Error(ErrorCode::IoError, "bad field header in " + path);
    Grid g(n, level);
    if (g.side() != side) throw Error(ErrorCode::IoError, "inconsistent cells_per_side in " + path);
    GridField f(g, comps);
    const std::size_t rows = g.cells() / static_cast<std::size_t>(side);
    for (int c = 0; c < comps; ++c) {
        for (std::size_t r = 0; r < rows; ++r) {
            if (!std::getline(in, line)) throw Error(ErrorCode::IoError, "truncated field file " + path);
            std::istringstream ls(line);
            std::string tok;
            for (int x = 0; x < side; ++x) {
                if (!std::getline(ls, tok, ',')) throw Error(ErrorCode::IoError, "short row in " + path);
                f.at(r * side + x, c) = std::stod(tok);
            }
        }
    }
    return f;
}

}  // namespace sparsedom
