#include "sparsedom/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <sstream>
#include <tuple>

#include "sparsedom/error.hpp"

namespace sparsedom {

Grid::Grid(int dim, int lvl) : n(dim), level(lvl) {
    if (dim < 1 || dim > 3) throw Error(ErrorCode::InvalidArgument, "dimension must be 1, 2 or 3");
    if (lvl < 0 || lvl > 14) throw Error(ErrorCode::InvalidArgument, "grid level out of range");
    cells_ = 1;
    for (int d = 0; d < n; ++d) cells_ *= static_cast<std::size_t>(side());
}

double Grid::h() const { return std::ldexp(1.0, -level); }

double Grid::cell_volume() const { return std::pow(h(), n); }

std::size_t Grid::stride(int d) const {
    std::size_t s = 1;
    for (int k = 0; k < d; ++k) s *= static_cast<std::size_t>(side());
    return s;
}

std::size_t Grid::index(const CellCoord& c) const {
    std::size_t i = 0;
    for (int d = n - 1; d >= 0; --d) i = i * static_cast<std::size_t>(side()) + static_cast<std::size_t>(c[d]);
    return i;
}

CellCoord Grid::coord(std::size_t i) const {
    CellCoord c{0, 0, 0};
    const auto s = static_cast<std::size_t>(side());
    for (int d = 0; d < n; ++d) {
        c[d] = static_cast<int>(i % s);
        i /= s;
    }
    return c;
}

bool Grid::inside(const CellCoord& c) const {
    for (int d = 0; d < n; ++d)
        if (c[d] < 0 || c[d] >= side()) return false;
    return true;
}

double Grid::center(int cell_coord) const { return -1.0 + (cell_coord + 0.5) * h(); }

std::array<double, 3> Grid::center_of(std::size_t i) const {
    const CellCoord c = coord(i);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int d = 0; d < n; ++d) x[d] = center(c[d]);
    return x;
}

bool Cube::contains(const CellCoord& c, int n) const {
    for (int d = 0; d < n; ++d)
        if (c[d] < corner[d] || c[d] >= corner[d] + side) return false;
    return true;
}

bool Cube::contains(const Cube& o, int n) const {
    for (int d = 0; d < n; ++d)
        if (o.corner[d] < corner[d] || o.corner[d] + o.side > corner[d] + side) return false;
    return true;
}

std::size_t Cube::cell_count(int n) const {
    std::size_t k = 1;
    for (int d = 0; d < n; ++d) k *= static_cast<std::size_t>(side);
    return k;
}

double Cube::measure(const Grid& g) const { return std::pow(length(g), g.n); }

std::string Cube::address_string() const {
    std::string s = "R";
    for (int a : address) s += "." + std::to_string(a);
    return s;
}

bool operator<(const Cube& a, const Cube& b) {
    return std::tie(a.side, a.corner) < std::tie(b.side, b.corner);
}

bool Box::empty(int n) const {
    for (int d = 0; d < n; ++d)
        if (hi[d] <= lo[d]) return true;
    return false;
}

std::size_t Box::cell_count(int n) const {
    if (empty(n)) return 0;
    std::size_t k = 1;
    for (int d = 0; d < n; ++d) k *= static_cast<std::size_t>(hi[d] - lo[d]);
    return k;
}

bool Box::contains(const CellCoord& c, int n) const {
    for (int d = 0; d < n; ++d)
        if (c[d] < lo[d] || c[d] >= hi[d]) return false;
    return true;
}

Box box_of(const Cube& c, int n) {
    Box b;
    for (int d = 0; d < n; ++d) {
        b.lo[d] = c.corner[d];
        b.hi[d] = c.corner[d] + c.side;
    }
    return b;
}

Box intersect(const Box& a, const Box& b, int n) {
    Box r;
    for (int d = 0; d < n; ++d) {
        r.lo[d] = std::max(a.lo[d], b.lo[d]);
        r.hi[d] = std::max(r.lo[d], std::min(a.hi[d], b.hi[d]));
    }
    return r;
}

Cube root_q0(const Grid& g) {
    Cube c;
    for (int d = 0; d < g.n; ++d) c.corner[d] = 1 << g.level;
    c.side = 1 << g.level;
    return c;
}

Cube root_3q0(const Grid& g) {
    Cube c;
    c.side = g.side();
    return c;
}

CellSet::CellSet(const Grid& g, bool fill)
    : grid_(g), mask_(g.cells(), fill ? 1 : 0), count_(fill ? g.cells() : 0) {}

CellSet CellSet::from_box(const Grid& g, const Box& b) {
    CellSet s(g);
    const Box clipped = intersect(b, box_of(root_3q0(g), g.n), g.n);
    if (clipped.empty(g.n)) return s;
    CellCoord c = clipped.lo;
    while (true) {
        s.insert(g.index(c));
        int d = 0;
        for (; d < g.n; ++d) {
            if (++c[d] < clipped.hi[d]) break;
            c[d] = clipped.lo[d];
        }
        if (d == g.n) break;
    }
    return s;
}

CellSet CellSet::from_cube(const Grid& g, const Cube& c) { return from_box(g, box_of(c, g.n)); }

void CellSet::insert(std::size_t i) {
    if (!mask_[i]) {
        mask_[i] = 1;
        ++count_;
    }
}

void CellSet::erase(std::size_t i) {
    if (mask_[i]) {
        mask_[i] = 0;
        --count_;
    }
}

std::vector<std::size_t> CellSet::indices() const {
    std::vector<std::size_t> out;
    out.reserve(count_);
    for (std::size_t i = 0; i < mask_.size(); ++i)
        if (mask_[i]) out.push_back(i);
    return out;
}

namespace {
void require_same(const CellSet& a, const CellSet& b) {
    if (!(a.grid() == b.grid()) || a.mask().size() != b.mask().size())
        throw Error(ErrorCode::InvalidArgument, "cell sets live on different grids");
}
}  // namespace

CellSet& CellSet::operator&=(const CellSet& o) {
    require_same(*this, o);
    count_ = 0;
    for (std::size_t i = 0; i < mask_.size(); ++i) {
        mask_[i] = mask_[i] && o.mask_[i];
        count_ += mask_[i];
    }
    return *this;
}

CellSet& CellSet::operator|=(const CellSet& o) {
    require_same(*this, o);
    count_ = 0;
    for (std::size_t i = 0; i < mask_.size(); ++i) {
        mask_[i] = mask_[i] || o.mask_[i];
        count_ += mask_[i];
    }
    return *this;
}

CellSet& CellSet::operator-=(const CellSet& o) {
    require_same(*this, o);
    count_ = 0;
    for (std::size_t i = 0; i < mask_.size(); ++i) {
        mask_[i] = mask_[i] && !o.mask_[i];
        count_ += mask_[i];
    }
    return *this;
}

bool CellSet::subset_of(const CellSet& o) const {
    require_same(*this, o);
    for (std::size_t i = 0; i < mask_.size(); ++i)
        if (mask_[i] && !o.mask_[i]) return false;
    return true;
}

CellSet operator&(CellSet a, const CellSet& b) { return a &= b; }
CellSet operator|(CellSet a, const CellSet& b) { return a |= b; }
CellSet operator-(CellSet a, const CellSet& b) { return a -= b; }

std::vector<Cube> dyadic_children(const Cube& c, int n) {
    if (c.side <= 1 || c.side % 2 != 0)
        throw Error(ErrorCode::DepthExhausted, "cube " + c.address_string() + " cannot be bisected");
    const int half = c.side / 2;
    std::vector<Cube> out;
    out.reserve(std::size_t{1} << n);
    for (int k = 0; k < (1 << n); ++k) {
        Cube ch;
        ch.side = half;
        ch.depth = c.depth + 1;
        ch.address = c.address;
        ch.address.push_back(k);
        for (int d = 0; d < n; ++d) ch.corner[d] = c.corner[d] + (((k >> d) & 1) ? half : 0);
        out.push_back(std::move(ch));
    }
    return out;
}

int max_depth(const Cube& root) {
    int depth = 0;
    int s = root.side;
    while (s > 1 && s % 2 == 0) {
        s /= 2;
        ++depth;
    }
    return depth;
}

std::vector<Cube> lattice(const Cube& root, int n, int depth_cap) {
    const int cap = std::min(depth_cap, root.depth + max_depth(root));
    std::vector<Cube> out{root};
    std::size_t begin = 0;
    for (int depth = root.depth; depth < cap; ++depth) {
        const std::size_t end = out.size();
        for (std::size_t i = begin; i < end; ++i) {
            auto ch = dyadic_children(out[i], n);
            for (auto& c : ch) out.push_back(std::move(c));
        }
        begin = end;
    }
    return out;
}

Box dilate(const Cube& c, int factor, int n) {
    if (((factor - 1) * c.side) % 2 != 0)
        throw Error(ErrorCode::InvalidArgument, "concentric dilate is not cell-aligned");
    const int shift = (factor - 1) * c.side / 2;
    Box b;
    for (int d = 0; d < n; ++d) {
        b.lo[d] = c.corner[d] - shift;
        b.hi[d] = c.corner[d] + c.side + shift;
    }
    return b;
}

Box triple(const Cube& c, const Box& clip, int n) { return intersect(dilate(c, 3, n), clip, n); }

const char* domain_kind_name(DomainKind k) {
    switch (k) {
        case DomainKind::FullCube: return "full-cube";
        case DomainKind::Square: return "square";
        case DomainKind::Disk: return "disk";
        case DomainKind::LShape: return "l-shape";
        case DomainKind::Custom: return "custom";
    }
    return "custom";
}

bool is_connected(const CellSet& s) {
    if (s.empty()) return false;
    const Grid& g = s.grid();
    std::vector<std::uint8_t> seen(g.cells(), 0);
    std::deque<std::size_t> queue;
    const auto idx = s.indices();
    queue.push_back(idx.front());
    seen[idx.front()] = 1;
    std::size_t reached = 0;
    while (!queue.empty()) {
        const std::size_t i = queue.front();
        queue.pop_front();
        ++reached;
        const CellCoord c = g.coord(i);
        for (int d = 0; d < g.n; ++d) {
            for (int sgn : {-1, 1}) {
                CellCoord nb = c;
                nb[d] += sgn;
                if (!g.inside(nb)) continue;
                const std::size_t j = g.index(nb);
                if (s.contains(j) && !seen[j]) {
                    seen[j] = 1;
                    queue.push_back(j);
                }
            }
        }
    }
    return reached == s.count();
}

namespace {
Domain finish_domain(Domain dom) {
    if (dom.mask.empty()) throw Error(ErrorCode::EmptyRegion, "domain mask is empty");
    if (!is_connected(dom.mask)) throw Error(ErrorCode::InvalidArgument, "domain mask is not connected");
    return dom;
}
}  // namespace

Domain make_domain(const Grid& g, const std::string& kind) {
    Domain dom;
    dom.name = kind;
    dom.mask = CellSet(g);
    auto in_q0 = [&](const std::array<double, 3>& x, double lo, double hi) {
        for (int d = 0; d < g.n; ++d)
            if (x[d] < lo || x[d] >= hi) return false;
        return true;
    };
    if (kind == "full-cube") {
        dom.kind = DomainKind::FullCube;
        dom.regularity = Regularity::Lipschitz;
    } else if (kind == "square") {
        dom.kind = DomainKind::Square;
        dom.regularity = Regularity::Lipschitz;
    } else if (kind == "disk") {
        dom.kind = DomainKind::Disk;
        dom.regularity = Regularity::C2;
    } else if (kind == "l-shape") {
        if (g.n < 2) throw Error(ErrorCode::InvalidArgument, "l-shape needs n >= 2");
        dom.kind = DomainKind::LShape;
        dom.regularity = Regularity::Lipschitz;
    } else {
        throw Error(ErrorCode::ConfigError, "unknown domain kind '" + kind + "'");
    }
    for (std::size_t i = 0; i < g.cells(); ++i) {
        const auto x = g.center_of(i);
        bool in = false;
        switch (dom.kind) {
            case DomainKind::FullCube: in = in_q0(x, 0.0, 1.0); break;
            case DomainKind::Square: in = in_q0(x, 0.125, 0.875); break;
            case DomainKind::Disk: {
                double r2 = 0.0;
                for (int d = 0; d < g.n; ++d) r2 += (x[d] - 0.5) * (x[d] - 0.5);
                in = r2 < 0.16;
                break;
            }
            case DomainKind::LShape: in = in_q0(x, 0.0, 1.0) && !(x[0] >= 0.5 && x[1] >= 0.5); break;
            case DomainKind::Custom: break;
        }
        if (in) dom.mask.insert(i);
    }
    return finish_domain(std::move(dom));
}

Domain load_domain_file(const Grid& g, const std::string& path) {
    if (g.n != 2) throw Error(ErrorCode::InvalidArgument, "mask files are two-dimensional");
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open mask file " + path);
    std::vector<std::string> rows;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        rows.push_back(line);
    }
    const int full = g.side();
    const int q0 = 1 << g.level;
    const int rows_n = static_cast<int>(rows.size());
    if (rows_n != full && rows_n != q0)
        throw Error(ErrorCode::ConfigError, "mask file must have " + std::to_string(full) + " or " +
                                                std::to_string(q0) + " rows");
    const int offset = rows_n == full ? 0 : q0;
    Domain dom;
    dom.kind = DomainKind::Custom;
    dom.regularity = Regularity::Lipschitz;
    dom.name = "custom";
    dom.mask = CellSet(g);
    for (int y = 0; y < rows_n; ++y) {
        if (static_cast<int>(rows[y].size()) != rows_n)
            throw Error(ErrorCode::ConfigError, "mask row " + std::to_string(y) + " has wrong length");
        for (int x = 0; x < rows_n; ++x) {
            const char ch = rows[y][x];
            if (ch != '0' && ch != '1') throw Error(ErrorCode::ConfigError, "mask characters must be 0 or 1");
            if (ch == '1') dom.mask.insert(g.index({x + offset, y + offset, 0}));
        }
    }
    return finish_domain(std::move(dom));
}

SparsityReport verify_sparsity(const Grid& g, const SparseFamily& fam) {
    SparsityReport rep;
    if (fam.witnesses.size() < fam.cubes.size())
        throw Error(ErrorCode::MissingWitness, "family has fewer witness sets than cubes");
    std::vector<std::uint32_t> hits(g.cells(), 0);
    rep.min_ratio = fam.cubes.empty() ? 0.0 : 1.0;
    bool ratio_ok = true;
    for (std::size_t k = 0; k < fam.cubes.size(); ++k) {
        const auto& w = fam.witnesses[k];
        if (!w || !w->valid())
            throw Error(ErrorCode::MissingWitness, "cube " + fam.cubes[k].address_string() + " has no witness set");
        const Cube& P = fam.cubes[k];
        std::size_t in_p = 0;
        for (std::size_t i : w->indices()) {
            if (P.contains(g.coord(i), g.n))
                ++in_p;
            else
                ++rep.containment_violations;
            ++hits[i];
        }
        const std::size_t total = P.cell_count(g.n);
        rep.min_ratio = std::min(rep.min_ratio, static_cast<double>(in_p) / static_cast<double>(total));
        if (static_cast<double>(in_p) < fam.theta * static_cast<double>(total)) ratio_ok = false;
    }
    for (auto h : hits)
        if (h > 1) ++rep.overlap_violations;
    rep.is_sparse = ratio_ok && rep.overlap_violations == 0 && rep.containment_violations == 0;
    return rep;
}

}  // namespace sparsedom
