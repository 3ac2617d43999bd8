#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "homog/sparse.hpp"

namespace homog {

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

enum class BoundaryTag : std::uint8_t { dirichlet, neumann, robin, partial_robin };

inline std::string_view to_string(BoundaryTag tag) {
    switch (tag) {
        case BoundaryTag::dirichlet: return "dirichlet";
        case BoundaryTag::neumann: return "neumann";
        case BoundaryTag::robin: return "robin";
        case BoundaryTag::partial_robin: return "partial_robin";
    }
    return "unknown";
}

/// Tag per side of the unit square. The bottom side is split at x = 1/2.
struct BoundaryPartition {
    BoundaryTag top = BoundaryTag::dirichlet;
    BoundaryTag left = BoundaryTag::neumann;
    BoundaryTag right = BoundaryTag::neumann;
    BoundaryTag bottom_left = BoundaryTag::robin;
    BoundaryTag bottom_right = BoundaryTag::partial_robin;

    /// Top Dirichlet, left/right Neumann, bottom Robin | partial Robin.
    static constexpr BoundaryPartition contact() { return {}; }

    static constexpr BoundaryPartition all(BoundaryTag tag) { return {tag, tag, tag, tag, tag}; }

    [[nodiscard]] constexpr bool uses(BoundaryTag tag) const {
        return top == tag || left == tag || right == tag || bottom_left == tag || bottom_right == tag;
    }
};

struct BoundaryEdge {
    std::array<index_t, 2> nodes{};
    BoundaryTag tag = BoundaryTag::dirichlet;
};

/// Uniform tensor-product mesh of bilinear quadrilaterals on the unit
/// square. Node (i, j) sits at (i/nx, j/ny) with index j*(nx+1)+i; element
/// (ex, ey) has index ey*nx+ex and counterclockwise nodes starting at its
/// lower-left corner.
class StructuredMesh {
public:
    StructuredMesh() = default;

    StructuredMesh(int nx, int ny) : nx_(nx), ny_(ny) {
        if (nx < 1 || ny < 1) {
            throw std::invalid_argument("StructuredMesh: element counts must be positive");
        }
        nodes_.reserve(num_nodes());
        for (int j = 0; j <= ny; ++j) {
            for (int i = 0; i <= nx; ++i) {
                nodes_.push_back({static_cast<double>(i) / nx, static_cast<double>(j) / ny});
            }
        }
        elements_.reserve(num_elements());
        for (int ey = 0; ey < ny; ++ey) {
            for (int ex = 0; ex < nx; ++ex) {
                elements_.push_back({node_index(ex, ey), node_index(ex + 1, ey), node_index(ex + 1, ey + 1),
                                     node_index(ex, ey + 1)});
            }
        }
    }

    [[nodiscard]] int nx() const noexcept { return nx_; }
    [[nodiscard]] int ny() const noexcept { return ny_; }
    [[nodiscard]] double hx() const noexcept { return 1.0 / nx_; }
    [[nodiscard]] double hy() const noexcept { return 1.0 / ny_; }
    [[nodiscard]] double element_area() const noexcept { return hx() * hy(); }

    [[nodiscard]] std::size_t num_nodes() const noexcept {
        return static_cast<std::size_t>(nx_ + 1) * static_cast<std::size_t>(ny_ + 1);
    }
    [[nodiscard]] std::size_t num_elements() const noexcept {
        return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
    }

    [[nodiscard]] index_t node_index(int i, int j) const noexcept {
        return static_cast<index_t>(j * (nx_ + 1) + i);
    }
    [[nodiscard]] std::size_t element_index(int ex, int ey) const noexcept {
        return static_cast<std::size_t>(ey) * static_cast<std::size_t>(nx_) + static_cast<std::size_t>(ex);
    }

    [[nodiscard]] const std::vector<Point2>& nodes() const noexcept { return nodes_; }
    [[nodiscard]] const std::vector<std::array<index_t, 4>>& elements() const noexcept { return elements_; }
    [[nodiscard]] const std::vector<BoundaryEdge>& boundary_edges() const noexcept { return edges_; }

    [[nodiscard]] double edge_length(const BoundaryEdge& e) const noexcept {
        const Point2 a = nodes_[e.nodes[0]];
        const Point2 b = nodes_[e.nodes[1]];
        return std::hypot(b.x - a.x, b.y - a.y);
    }

    [[nodiscard]] bool has_tag(BoundaryTag tag) const {
        return std::any_of(edges_.begin(), edges_.end(), [tag](const BoundaryEdge& e) { return e.tag == tag; });
    }

    /// Sorted, unique nodes touched by edges carrying `tag`.
    [[nodiscard]] std::vector<index_t> nodes_with_tag(BoundaryTag tag) const {
        std::vector<index_t> out;
        for (const auto& e : edges_) {
            if (e.tag == tag) {
                out.push_back(e.nodes[0]);
                out.push_back(e.nodes[1]);
            }
        }
        std::sort(out.begin(), out.end());
        out.erase(std::unique(out.begin(), out.end()), out.end());
        return out;
    }

    [[nodiscard]] double tagged_length(BoundaryTag tag) const {
        double s = 0.0;
        for (const auto& e : edges_) {
            if (e.tag == tag) {
                s += edge_length(e);
            }
        }
        return s;
    }

    /// Tags every boundary edge by side. The bottom split at x = 1/2
    /// requires nx even.
    void tag_boundary(const BoundaryPartition& partition) {
        edges_.clear();
        edges_.reserve(static_cast<std::size_t>(2 * (nx_ + ny_)));
        for (int i = 0; i < nx_; ++i) {
            const BoundaryTag tag = (2 * i < nx_) ? partition.bottom_left : partition.bottom_right;
            edges_.push_back({{node_index(i, 0), node_index(i + 1, 0)}, tag});
        }
        for (int j = 0; j < ny_; ++j) {
            edges_.push_back({{node_index(nx_, j), node_index(nx_, j + 1)}, partition.right});
        }
        for (int i = nx_; i > 0; --i) {
            edges_.push_back({{node_index(i, ny_), node_index(i - 1, ny_)}, partition.top});
        }
        for (int j = ny_; j > 0; --j) {
            edges_.push_back({{node_index(0, j), node_index(0, j - 1)}, partition.left});
        }
    }

private:
    int nx_ = 0;
    int ny_ = 0;
    std::vector<Point2> nodes_;
    std::vector<std::array<index_t, 4>> elements_;
    std::vector<BoundaryEdge> edges_;
};

/// Uniform NM x NM mesh of the unit square with boundary tags.
inline StructuredMesh build_domain_mesh(int cells, int per_cell, const BoundaryPartition& partition) {
    if (cells < 1 || per_cell < 1) {
        throw std::invalid_argument("build_domain_mesh: N and M must be positive");
    }
    const long long n = static_cast<long long>(cells) * per_cell;
    if (n % 2 != 0) {
        throw std::invalid_argument("build_domain_mesh: N*M must be even so x = 1/2 is a mesh node");
    }
    if (n > 65535) {
        throw std::invalid_argument("build_domain_mesh: grid too large for 32-bit node indices");
    }
    StructuredMesh mesh(static_cast<int>(n), static_cast<int>(n));
    mesh.tag_boundary(partition);
    return mesh;
}

/// Identification of opposite faces of the unit-cell mesh. `leader[v]` is
/// the representative node of v (the one with i < M and j < M), `dof[v]`
/// the compact unknown index of v in [0, M^2).
struct PeriodicMap {
    std::vector<index_t> leader;
    std::vector<index_t> dof;
    std::vector<std::pair<index_t, index_t>> pairs;  // (follower, leader)
    std::size_t num_unknowns = 0;
};

struct CellMesh {
    StructuredMesh mesh;
    PeriodicMap periodic;
    int resolution = 0;
};

inline CellMesh build_cell_mesh(int per_cell) {
    if (per_cell < 2) {
        throw std::invalid_argument("build_cell_mesh: M must be at least 2");
    }
    CellMesh cell{StructuredMesh(per_cell, per_cell), {}, per_cell};
    const int m = per_cell;
    auto& pm = cell.periodic;
    pm.leader.resize(cell.mesh.num_nodes());
    pm.dof.resize(cell.mesh.num_nodes());
    for (int j = 0; j <= m; ++j) {
        for (int i = 0; i <= m; ++i) {
            const index_t v = cell.mesh.node_index(i, j);
            const index_t lead = cell.mesh.node_index(i % m, j % m);
            pm.leader[v] = lead;
            pm.dof[v] = static_cast<index_t>((j % m) * m + (i % m));
            if (lead != v) {
                pm.pairs.emplace_back(v, lead);
            }
        }
    }
    pm.num_unknowns = static_cast<std::size_t>(m) * static_cast<std::size_t>(m);
    return cell;
}

struct CellLocation {
    std::array<int, 2> cell{};
    Point2 local;
};

/// Cell containing x for period 1/N and the local coordinate y = x/eps - cell.
/// Points on an interior cell face belong to the higher cell (floor rule);
/// the outer face x = 1 is kept in cell N-1 with local coordinate 1.
inline CellLocation locate_cell(Point2 x, int cells) {
    if (cells < 1) {
        throw std::invalid_argument("locate_cell: N must be positive");
    }
    CellLocation loc;
    const auto axis = [cells](double c, int& idx, double& y) {
        const double s = c * cells;
        idx = std::clamp(static_cast<int>(std::floor(s)), 0, cells - 1);
        y = s - idx;
    };
    axis(x.x, loc.cell[0], loc.local.x);
    axis(x.y, loc.cell[1], loc.local.y);
    return loc;
}

}  // namespace homog
