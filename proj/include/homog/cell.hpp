#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "homog/assembly.hpp"
#include "homog/linsolve.hpp"
#include "homog/mesh.hpp"
#include "homog/q1.hpp"

namespace homog {

/// Scalar cell coefficient on the M x M unit-cell mesh, one value per
/// element (element index ey*M + ex).
struct CellCoefficient {
    int resolution = 0;
    CoefficientField field;

    [[nodiscard]] double at(std::size_t element) const { return field.values[element]; }
};

inline CellCoefficient cell_coefficient(const MicrostructureSpec& spec, int per_cell) {
    spec.validate();
    spec.require_aligned(per_cell);
    const StructuredMesh cell(per_cell, per_cell);
    return {per_cell, sample_coefficient(spec, cell, 1)};
}

/// Layered cell: `left` on y1 < 1/2, `right` on y1 > 1/2 (M even).
inline CellCoefficient laminate_coefficient(double left, double right, int per_cell) {
    if (per_cell < 2 || per_cell % 2 != 0) {
        throw std::invalid_argument("laminate_coefficient: M must be even");
    }
    if (!(left > 0.0) || !(right > 0.0)) {
        throw std::invalid_argument("laminate_coefficient: values must be positive");
    }
    CellCoefficient c{per_cell, {}};
    c.field.values.resize(static_cast<std::size_t>(per_cell) * per_cell);
    for (int ey = 0; ey < per_cell; ++ey) {
        for (int ex = 0; ex < per_cell; ++ex) {
            c.field.values[static_cast<std::size_t>(ey * per_cell + ex)] = (2 * ex < per_cell) ? left : right;
        }
    }
    return c;
}

/// Discrete periodic correctors N_1, N_2 and the homogenized tensor.
struct CorrectorSet {
    int resolution = 0;
    /// Nodal values on the periodic unknowns, index (j mod M)*M + (i mod M).
    std::array<std::vector<double>, 2> nodal;
    /// Per element and Gauss point (index 4*e + g): G(i, l) = d_i N_l.
    std::vector<Tensor2> gradients;
    Tensor2 a_hat;
    std::array<SolveReport, 2> reports;

    [[nodiscard]] const Tensor2& gradient(std::size_t element, std::size_t gauss) const {
        return gradients[4 * element + gauss];
    }
};

namespace detail {

inline std::vector<Tensor2> corrector_gradients(const CellMesh& cell, const std::array<std::vector<double>, 2>& n) {
    const auto& mesh = cell.mesh;
    std::vector<Tensor2> grads(mesh.num_elements() * 4);
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.elements()[e];
        std::array<std::array<double, 4>, 2> local{};
        for (std::size_t a = 0; a < 4; ++a) {
            local[0][a] = n[0][cell.periodic.dof[el[a]]];
            local[1][a] = n[1][cell.periodic.dof[el[a]]];
        }
        for (std::size_t g = 0; g < 4; ++g) {
            const auto& gp = q1::gauss_points[g];
            Tensor2& t = grads[4 * e + g];
            for (int l = 0; l < 2; ++l) {
                const auto d = q1::gradient(local[static_cast<std::size_t>(l)], gp[0], gp[1], mesh.hx(), mesh.hy());
                t(0, l) = d[0];
                t(1, l) = d[1];
            }
        }
    }
    return grads;
}

}  // namespace detail

/// A_hat_il = avg_Q kappa (delta_il + d_i N_l), integrated with the 2x2
/// Gauss rule used by the stiffness assembly.
inline Tensor2 homogenized_tensor(const CorrectorSet& corr, const CellCoefficient& coeff) {
    if (corr.resolution != coeff.resolution ||
        corr.gradients.size() != 4 * coeff.field.values.size()) {
        throw std::invalid_argument("homogenized_tensor: correctors and coefficient use different cell meshes");
    }
    const double w = q1::gauss_weight / (static_cast<double>(coeff.resolution) * coeff.resolution);
    Tensor2 a{};
    for (std::size_t e = 0; e < coeff.field.values.size(); ++e) {
        const double k = coeff.at(e);
        for (std::size_t g = 0; g < 4; ++g) {
            const Tensor2& grad = corr.gradient(e, g);
            for (int i = 0; i < 2; ++i) {
                for (int l = 0; l < 2; ++l) {
                    a(i, l) += w * k * ((i == l ? 1.0 : 0.0) + grad(i, l));
                }
            }
        }
    }
    return a;
}

/// Rebuilds gradients and A_hat from nodal corrector values.
inline CorrectorSet assemble_corrector_set(const CellCoefficient& coeff, std::array<std::vector<double>, 2> nodal) {
    const CellMesh cell = build_cell_mesh(coeff.resolution);
    for (const auto& n : nodal) {
        if (n.size() != cell.periodic.num_unknowns) {
            throw std::invalid_argument("assemble_corrector_set: nodal vector has wrong size");
        }
    }
    CorrectorSet corr;
    corr.resolution = coeff.resolution;
    corr.gradients = detail::corrector_gradients(cell, nodal);
    corr.nodal = std::move(nodal);
    corr.a_hat = homogenized_tensor(corr, coeff);
    return corr;
}

/// Right-hand side -int_Q kappa e_l . grad(phi_i) of the cell problem for
/// direction l, on the periodic unknowns.
inline std::vector<double> corrector_rhs(const CellMesh& cell, const CellCoefficient& coeff, int l) {
    const auto& mesh = cell.mesh;
    std::vector<double> b(cell.periodic.num_unknowns, 0.0);
    const double w = q1::gauss_weight * mesh.element_area();
    const double scale = (l == 0) ? 1.0 / mesh.hx() : 1.0 / mesh.hy();
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& el = mesh.elements()[e];
        const double k = coeff.at(e);
        for (const auto& gp : q1::gauss_points) {
            const auto g = q1::shape_gradients(gp[0], gp[1]);
            for (std::size_t a = 0; a < 4; ++a) {
                b[cell.periodic.dof[el[a]]] -= w * k * g[a][static_cast<std::size_t>(l)] * scale;
            }
        }
    }
    return b;
}

/// Solves -div(kappa grad N_l) = div(kappa e_l) with periodic boundary
/// conditions and zero mean, for l = 1, 2.
inline CorrectorSet solve_correctors(const CellCoefficient& coeff, const SolverConfig& cfg) {
    if (coeff.resolution < 2 ||
        coeff.field.values.size() != static_cast<std::size_t>(coeff.resolution) * coeff.resolution) {
        throw std::invalid_argument("solve_correctors: coefficient does not match an M x M cell mesh");
    }
    const CellMesh cell = build_cell_mesh(coeff.resolution);
    const CsrMatrix k = assemble_periodic_stiffness(cell, coeff.field);
    std::array<std::vector<double>, 2> nodal;
    std::array<SolveReport, 2> reports;
    // entries of a vanishing right-hand side are O(kappa h) times round-off
    const double noise = 1e-13 * coeff.field.max() / coeff.resolution *
                         std::sqrt(static_cast<double>(cell.periodic.num_unknowns));
    for (int l = 0; l < 2; ++l) {
        auto b = corrector_rhs(cell, coeff, l);
        if (norm2(b) <= noise) {
            std::fill(b.begin(), b.end(), 0.0);
        }
        auto res = cg_solve_projected(k, b, cfg);
        nodal[static_cast<std::size_t>(l)] = std::move(res.x);
        reports[static_cast<std::size_t>(l)] = std::move(res.report);
    }
    CorrectorSet corr = assemble_corrector_set(coeff, std::move(nodal));
    corr.reports = std::move(reports);
    return corr;
}

inline CorrectorSet solve_correctors(const MicrostructureSpec& spec, int per_cell, const SolverConfig& cfg) {
    return solve_correctors(cell_coefficient(spec, per_cell), cfg);
}

/// Q1 gradient d_i N_l at cell coordinate y (wrapped into [0,1)^2).
inline Tensor2 corrector_gradient_at(const CorrectorSet& corr, Point2 y) {
    const int m = corr.resolution;
    const auto wrap = [](double c) {
        const double w = c - std::floor(c);
        return w >= 1.0 ? 0.0 : w;
    };
    const double sx = wrap(y.x) * m;
    const double sy = wrap(y.y) * m;
    const int ex = std::min(static_cast<int>(std::floor(sx)), m - 1);
    const int ey = std::min(static_cast<int>(std::floor(sy)), m - 1);
    const double xi = sx - ex;
    const double eta = sy - ey;
    const auto dof = [m](int i, int j) { return static_cast<std::size_t>((j % m) * m + (i % m)); };
    const std::array<std::size_t, 4> nodes{dof(ex, ey), dof(ex + 1, ey), dof(ex + 1, ey + 1), dof(ex, ey + 1)};
    Tensor2 t{};
    const double h = 1.0 / m;
    for (int l = 0; l < 2; ++l) {
        std::array<double, 4> local{};
        for (std::size_t a = 0; a < 4; ++a) {
            local[a] = corr.nodal[static_cast<std::size_t>(l)][nodes[a]];
        }
        const auto d = q1::gradient(local, xi, eta, h, h);
        t(0, l) = d[0];
        t(1, l) = d[1];
    }
    return t;
}

/// avg_Q kappa |grad(chi) + xi|^2 with chi = xi_l N_l.
inline double cell_energy(const CorrectorSet& corr, const CellCoefficient& coeff, std::array<double, 2> xi) {
    const double w = q1::gauss_weight / (static_cast<double>(coeff.resolution) * coeff.resolution);
    double s = 0.0;
    for (std::size_t e = 0; e < coeff.field.values.size(); ++e) {
        for (std::size_t g = 0; g < 4; ++g) {
            const Tensor2& grad = corr.gradient(e, g);
            const double v0 = xi[0] + grad(0, 0) * xi[0] + grad(0, 1) * xi[1];
            const double v1 = xi[1] + grad(1, 0) * xi[0] + grad(1, 1) * xi[1];
            s += w * coeff.at(e) * (v0 * v0 + v1 * v1);
        }
    }
    return s;
}

}  // namespace homog
