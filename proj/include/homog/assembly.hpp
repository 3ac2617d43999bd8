#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <vector>

#include "homog/mesh.hpp"
#include "homog/q1.hpp"
#include "homog/sparse.hpp"

namespace homog {

/// Two-phase periodic cell: kappa2 inside the square [rho, 1-rho]^2 of the
/// unit cell, kappa1 outside.
struct MicrostructureSpec {
    double kappa1 = 1.0;
    double kappa2 = 2.0;
    double rho = 0.25;

    void validate() const {
        if (!(kappa1 > 0.0) || !(kappa2 > 0.0)) {
            throw std::invalid_argument("MicrostructureSpec: kappa values must be positive");
        }
        if (!(rho > 0.0 && rho < 0.5)) {
            throw std::invalid_argument("MicrostructureSpec: rho must lie in (0, 1/2)");
        }
    }

    /// True when the inclusion faces rho and 1-rho fall on element faces of
    /// an M-per-cell grid (M divisible by 4 for rho = 1/4).
    [[nodiscard]] bool aligned_with(int per_cell) const {
        const double s = rho * per_cell;
        return std::abs(s - std::round(s)) <= 1e-9 * std::max(1.0, s);
    }

    void require_aligned(int per_cell) const {
        if (!aligned_with(per_cell)) {
            throw std::invalid_argument("MicrostructureSpec: rho*M must be an integer so the inclusion "
                                        "interface lies on element faces");
        }
    }

    [[nodiscard]] double min_kappa() const { return std::min(kappa1, kappa2); }
    [[nodiscard]] double max_kappa() const { return std::max(kappa1, kappa2); }

    [[nodiscard]] bool in_inclusion(double y1, double y2) const {
        return y1 >= rho && y1 <= 1.0 - rho && y2 >= rho && y2 <= 1.0 - rho;
    }
};

/// Per-element scalar conductivity.
struct CoefficientField {
    std::vector<double> values;

    [[nodiscard]] double min() const { return *std::min_element(values.begin(), values.end()); }
    [[nodiscard]] double max() const { return *std::max_element(values.begin(), values.end()); }
};

/// Samples the microstructure at element centroids of a mesh made of
/// N x N cells.
inline CoefficientField sample_coefficient(const MicrostructureSpec& spec, const StructuredMesh& mesh, int cells) {
    spec.validate();
    if (cells < 1 || mesh.nx() % cells != 0 || mesh.ny() % cells != 0) {
        throw std::invalid_argument("sample_coefficient: mesh is not a whole number of elements per cell");
    }
    const int mx = mesh.nx() / cells;
    const int my = mesh.ny() / cells;
    spec.require_aligned(mx);
    spec.require_aligned(my);
    CoefficientField field;
    field.values.resize(mesh.num_elements());
    for (int ey = 0; ey < mesh.ny(); ++ey) {
        const double y2 = ((ey % my) + 0.5) / my;
        for (int ex = 0; ex < mesh.nx(); ++ex) {
            const double y1 = ((ex % mx) + 0.5) / mx;
            field.values[mesh.element_index(ex, ey)] = spec.in_inclusion(y1, y2) ? spec.kappa2 : spec.kappa1;
        }
    }
    return field;
}

namespace detail {

template <class TensorAt>
CsrMatrix assemble_stiffness_impl(const StructuredMesh& mesh, std::span<const index_t> dof_of_node, std::size_t ndofs,
                                  TensorAt&& tensor_at) {
    const auto& elems = mesh.elements();
    std::vector<index_t> element_dofs(elems.size() * 4);
    for (std::size_t e = 0; e < elems.size(); ++e) {
        for (std::size_t a = 0; a < 4; ++a) {
            const index_t node = elems[e][a];
            element_dofs[4 * e + a] = dof_of_node.empty() ? node : dof_of_node[node];
        }
    }
    CsrMatrix k = pattern_from_elements(ndofs, element_dofs, 4);
    const auto basis = q1::stiffness_basis(mesh.hx(), mesh.hy());
    for (std::size_t e = 0; e < elems.size(); ++e) {
        const auto ke = q1::element_stiffness(basis, tensor_at(e));
        for (std::size_t a = 0; a < 4; ++a) {
            for (std::size_t b = 0; b < 4; ++b) {
                *k.find(element_dofs[4 * e + a], element_dofs[4 * e + b]) += ke[a][b];
            }
        }
    }
    return k;
}

}  // namespace detail

/// Q1 stiffness sum_e kappa_e int_e grad(phi_j).grad(phi_i).
inline CsrMatrix assemble_stiffness(const StructuredMesh& mesh, const CoefficientField& field) {
    if (field.values.size() != mesh.num_elements()) {
        throw std::invalid_argument("assemble_stiffness: coefficient field does not match element count");
    }
    return detail::assemble_stiffness_impl(mesh, {}, mesh.num_nodes(),
                                           [&](std::size_t e) { return Tensor2::identity(field.values[e]); });
}

/// Q1 stiffness for a constant (possibly anisotropic) tensor.
inline CsrMatrix assemble_stiffness(const StructuredMesh& mesh, const Tensor2& tensor) {
    return detail::assemble_stiffness_impl(mesh, {}, mesh.num_nodes(), [&](std::size_t) { return tensor; });
}

/// Stiffness on the periodic unknowns of a unit-cell mesh.
inline CsrMatrix assemble_periodic_stiffness(const CellMesh& cell, const CoefficientField& field) {
    if (field.values.size() != cell.mesh.num_elements()) {
        throw std::invalid_argument("assemble_periodic_stiffness: coefficient field does not match element count");
    }
    return detail::assemble_stiffness_impl(cell.mesh, cell.periodic.dof, cell.periodic.num_unknowns,
                                           [&](std::size_t e) { return Tensor2::identity(field.values[e]); });
}

/// Boundary mass int_{Gamma_tag} phi_i phi_j with exact integration of the
/// linear traces, optionally weighted per edge.
inline CsrMatrix assemble_boundary_mass(const StructuredMesh& mesh, BoundaryTag tag,
                                        std::span<const double> edge_weight = {}) {
    const auto& edges = mesh.boundary_edges();
    if (!edge_weight.empty() && edge_weight.size() != edges.size()) {
        throw std::invalid_argument("assemble_boundary_mass: one weight per boundary edge required");
    }
    std::vector<index_t> edge_dofs;
    std::vector<double> lengths;
    for (std::size_t k = 0; k < edges.size(); ++k) {
        if (edges[k].tag == tag) {
            edge_dofs.push_back(edges[k].nodes[0]);
            edge_dofs.push_back(edges[k].nodes[1]);
            lengths.push_back(mesh.edge_length(edges[k]) * (edge_weight.empty() ? 1.0 : edge_weight[k]));
        }
    }
    CsrMatrix m = pattern_from_elements(mesh.num_nodes(), edge_dofs, 2);
    for (std::size_t k = 0; k < lengths.size(); ++k) {
        const index_t a = edge_dofs[2 * k];
        const index_t b = edge_dofs[2 * k + 1];
        const double len = lengths[k];
        *m.find(a, a) += len / 3.0;
        *m.find(b, b) += len / 3.0;
        *m.find(a, b) += len / 6.0;
        *m.find(b, a) += len / 6.0;
    }
    return m;
}

/// b_i = f int_Omega phi_i + g int_{Gamma_N} phi_i, where Gamma_N is the
/// union of `neumann_tags`.
inline std::vector<double> assemble_load(const StructuredMesh& mesh, double f, double g,
                                         std::initializer_list<BoundaryTag> neumann_tags) {
    std::vector<double> b(mesh.num_nodes(), 0.0);
    const double quarter = 0.25 * mesh.element_area() * f;
    for (const auto& el : mesh.elements()) {
        for (const index_t n : el) {
            b[n] += quarter;
        }
    }
    for (const auto& e : mesh.boundary_edges()) {
        if (std::find(neumann_tags.begin(), neumann_tags.end(), e.tag) == neumann_tags.end()) {
            continue;
        }
        const double half = 0.5 * g * mesh.edge_length(e);
        b[e.nodes[0]] += half;
        b[e.nodes[1]] += half;
    }
    return b;
}

/// Index map between all mesh nodes and the free (unconstrained) ones.
struct DofMap {
    std::vector<index_t> free_nodes;
    std::vector<std::int64_t> position;  // node -> free index, or -1

    static DofMap all_free(std::size_t n) {
        DofMap map;
        map.free_nodes.resize(n);
        map.position.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            map.free_nodes[i] = static_cast<index_t>(i);
            map.position[i] = static_cast<std::int64_t>(i);
        }
        return map;
    }

    static DofMap excluding(std::size_t n, std::span<const index_t> constrained) {
        DofMap map;
        map.position.assign(n, 0);
        for (const index_t c : constrained) {
            map.position[c] = -1;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (map.position[i] == 0) {
                map.position[i] = static_cast<std::int64_t>(map.free_nodes.size());
                map.free_nodes.push_back(static_cast<index_t>(i));
            }
        }
        return map;
    }

    [[nodiscard]] std::size_t size() const noexcept { return free_nodes.size(); }
    [[nodiscard]] std::size_t full_size() const noexcept { return position.size(); }

    [[nodiscard]] std::vector<double> restrict_vector(std::span<const double> full) const {
        std::vector<double> out(free_nodes.size());
        for (std::size_t k = 0; k < free_nodes.size(); ++k) {
            out[k] = full[free_nodes[k]];
        }
        return out;
    }

    /// Scatter into the full numbering; constrained entries are zero.
    [[nodiscard]] std::vector<double> expand(std::span<const double> reduced) const {
        std::vector<double> out(position.size(), 0.0);
        for (std::size_t k = 0; k < free_nodes.size(); ++k) {
            out[free_nodes[k]] = reduced[k];
        }
        return out;
    }

    [[nodiscard]] CsrMatrix restrict_matrix(const CsrMatrix& a) const { return submatrix(a, free_nodes, position); }
};

struct ReducedSystem {
    CsrMatrix matrix;
    std::vector<double> rhs;
    DofMap dofs;
};

/// Symmetric elimination of homogeneous Dirichlet nodes: the constrained
/// rows and columns are removed.
inline ReducedSystem apply_dirichlet(const CsrMatrix& a, std::span<const double> b,
                                     std::span<const index_t> constrained) {
    if (constrained.empty()) {
        throw std::invalid_argument("apply_dirichlet: the Dirichlet boundary is empty");
    }
    if (a.rows() != b.size()) {
        throw std::invalid_argument("apply_dirichlet: dimension mismatch");
    }
    ReducedSystem sys;
    sys.dofs = DofMap::excluding(a.rows(), constrained);
    sys.matrix = sys.dofs.restrict_matrix(a);
    sys.rhs = sys.dofs.restrict_vector(b);
    return sys;
}

inline ReducedSystem apply_dirichlet(const CsrMatrix& a, std::span<const double> b, const StructuredMesh& mesh,
                                     BoundaryTag tag = BoundaryTag::dirichlet) {
    const auto nodes = mesh.nodes_with_tag(tag);
    return apply_dirichlet(a, b, nodes);
}

}  // namespace homog
