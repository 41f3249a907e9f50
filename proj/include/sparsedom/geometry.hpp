#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sparsedom {

using CellCoord = std::array<int, 3>;

// Uniform grid over 3Q0 = [-1,2)^n with 3*2^L cells per side; Q0 = [0,1)^n.
struct Grid {
    int n = 2;
    int level = 5;

    Grid() = default;
    Grid(int dim, int lvl);

    int side() const { return 3 << level; }
    double h() const;
    double cell_volume() const;
    std::size_t cells() const { return cells_; }

    std::size_t index(const CellCoord& c) const;
    CellCoord coord(std::size_t i) const;
    bool inside(const CellCoord& c) const;
    // physical coordinate of the cell center along axis d
    double center(int cell_coord) const;
    std::array<double, 3> center_of(std::size_t i) const;
    std::size_t stride(int d) const;

    bool operator==(const Grid& o) const { return n == o.n && level == o.level; }

private:
    std::size_t cells_ = 0;
};

// Axis-parallel cube in cell units with its position in a dyadic lattice.
struct Cube {
    CellCoord corner{0, 0, 0};
    int side = 1;
    int depth = 0;
    std::vector<int> address;

    bool contains(const CellCoord& c, int n) const;
    bool contains(const Cube& other, int n) const;
    std::size_t cell_count(int n) const;
    double length(const Grid& g) const { return side * g.h(); }
    double measure(const Grid& g) const;
    std::string address_string() const;
    bool same_cells(const Cube& o) const { return corner == o.corner && side == o.side; }
};

bool operator<(const Cube& a, const Cube& b);

// Half-open box of cells [lo, hi).
struct Box {
    CellCoord lo{0, 0, 0};
    CellCoord hi{1, 1, 1};
    bool empty(int n) const;
    std::size_t cell_count(int n) const;
    bool contains(const CellCoord& c, int n) const;
};

Box box_of(const Cube& c, int n);
Box intersect(const Box& a, const Box& b, int n);

Cube root_q0(const Grid& g);
Cube root_3q0(const Grid& g);

class CellSet {
public:
    CellSet() = default;
    explicit CellSet(const Grid& g, bool fill = false);
    static CellSet from_box(const Grid& g, const Box& b);
    static CellSet from_cube(const Grid& g, const Cube& c);

    const Grid& grid() const { return grid_; }
    bool valid() const { return !mask_.empty(); }
    bool contains(std::size_t i) const { return mask_[i] != 0; }
    void insert(std::size_t i);
    void erase(std::size_t i);
    std::size_t count() const { return count_; }
    bool empty() const { return count_ == 0; }
    double measure() const { return count_ * grid_.cell_volume(); }
    std::vector<std::size_t> indices() const;
    const std::vector<std::uint8_t>& mask() const { return mask_; }

    CellSet& operator&=(const CellSet& o);
    CellSet& operator|=(const CellSet& o);
    CellSet& operator-=(const CellSet& o);
    bool subset_of(const CellSet& o) const;
    bool operator==(const CellSet& o) const { return mask_ == o.mask_; }

private:
    Grid grid_;
    std::vector<std::uint8_t> mask_;
    std::size_t count_ = 0;
};

CellSet operator&(CellSet a, const CellSet& b);
CellSet operator|(CellSet a, const CellSet& b);
CellSet operator-(CellSet a, const CellSet& b);

// Depth-exhausted when the cube is a single cell or its side is odd.
std::vector<Cube> dyadic_children(const Cube& c, int n);
int max_depth(const Cube& root);
// All cubes of D(root) with depth <= max_depth, ordered by depth.
std::vector<Cube> lattice(const Cube& root, int n, int depth_cap);
// Concentric 3x dilate of c intersected with clip.
Box triple(const Cube& c, const Box& clip, int n);
// The concentric k-fold dilate (k odd or even side) without clipping, in cell units.
Box dilate(const Cube& c, int factor, int n);

enum class DomainKind { FullCube, Square, Disk, LShape, Custom };
enum class Regularity { Lipschitz, C2 };

struct Domain {
    CellSet mask;
    DomainKind kind = DomainKind::FullCube;
    Regularity regularity = Regularity::Lipschitz;
    std::string name;
};

const char* domain_kind_name(DomainKind k);
Domain make_domain(const Grid& g, const std::string& kind);
Domain load_domain_file(const Grid& g, const std::string& path);
bool is_connected(const CellSet& s);

struct SparseFamily {
    std::vector<Cube> cubes;
    std::vector<std::optional<CellSet>> witnesses;
    double theta = 0.5;
    std::vector<std::vector<std::size_t>> generations;
    std::vector<double> residuals;
};

struct SparsityReport {
    bool is_sparse = false;
    double min_ratio = 0.0;
    std::size_t overlap_violations = 0;
    std::size_t containment_violations = 0;
};

SparsityReport verify_sparsity(const Grid& g, const SparseFamily& fam);

}  // namespace sparsedom
