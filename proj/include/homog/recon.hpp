#pragma once

#include <array>
#include <span>
#include <stdexcept>
#include <vector>

#include "homog/cell.hpp"
#include "homog/mesh.hpp"
#include "homog/q1.hpp"

namespace homog {

/// (grad u_eps)* = (I + G) grad u0, with G(i, l) = d_i N_l at y = x/eps.
inline std::array<double, 2> corrected_gradient(const Tensor2& g, std::array<double, 2> grad_u0) {
    return {grad_u0[0] + g(0, 0) * grad_u0[0] + g(0, 1) * grad_u0[1],
            grad_u0[1] + g(1, 0) * grad_u0[0] + g(1, 1) * grad_u0[1]};
}

/// Nodal values of element e.
inline std::array<double, 4> element_values(const StructuredMesh& mesh, std::span<const double> u, std::size_t e) {
    const auto& el = mesh.elements()[e];
    return {u[el[0]], u[el[1]], u[el[2]], u[el[3]]};
}

/// Cell-mesh element that coincides with fine element e under y = x/eps
/// (mod 1), for a fine mesh of N x N cells with M elements per cell.
inline std::size_t aligned_cell_element(const StructuredMesh& mesh, std::size_t e, int per_cell) {
    const auto nx = static_cast<std::size_t>(mesh.nx());
    const auto ex = static_cast<int>(e % nx);
    const auto ey = static_cast<int>(e / nx);
    return static_cast<std::size_t>((ey % per_cell) * per_cell + (ex % per_cell));
}

inline void require_aligned(const StructuredMesh& mesh, const CorrectorSet& corr, int cells) {
    if (cells < 1 || mesh.nx() != cells * corr.resolution || mesh.ny() != cells * corr.resolution) {
        throw std::invalid_argument("corrector resolution does not match the per-cell fine resolution");
    }
}

/// Reconstructed fine-scale gradient at every Gauss point (index 4*e + g).
struct ReconstructedGradient {
    std::vector<std::array<double, 2>> values;

    [[nodiscard]] const std::array<double, 2>& at(std::size_t element, std::size_t gauss) const {
        return values[4 * element + gauss];
    }
};

inline ReconstructedGradient reconstruct(const StructuredMesh& mesh, std::span<const double> u0h,
                                         const CorrectorSet& corr, int cells) {
    require_aligned(mesh, corr, cells);
    if (u0h.size() != mesh.num_nodes()) {
        throw std::invalid_argument("reconstruct: solution does not match mesh");
    }
    ReconstructedGradient out;
    out.values.resize(mesh.num_elements() * 4);
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto local = element_values(mesh, u0h, e);
        const std::size_t ce = aligned_cell_element(mesh, e, corr.resolution);
        for (std::size_t g = 0; g < 4; ++g) {
            const auto& gp = q1::gauss_points[g];
            const auto grad = q1::gradient(local, gp[0], gp[1], mesh.hx(), mesh.hy());
            out.values[4 * e + g] = corrected_gradient(corr.gradient(ce, g), grad);
        }
    }
    return out;
}

}  // namespace homog
