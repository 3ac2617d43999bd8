#pragma once

#include <array>
#include <cmath>
#include <limits>

namespace homog {

/// 2x2 tensor, row-major.
struct Tensor2 {
    std::array<double, 4> v{};

    [[nodiscard]] constexpr double operator()(int i, int j) const { return v[static_cast<std::size_t>(2 * i + j)]; }
    constexpr double& operator()(int i, int j) { return v[static_cast<std::size_t>(2 * i + j)]; }

    static constexpr Tensor2 identity(double s = 1.0) { return Tensor2{{s, 0.0, 0.0, s}}; }
    static constexpr Tensor2 diag(double a, double b) { return Tensor2{{a, 0.0, 0.0, b}}; }

    /// Eigenvalues of the symmetric part, ascending.
    [[nodiscard]] std::array<double, 2> eigenvalues() const {
        const double a = v[0];
        const double d = v[3];
        const double b = 0.5 * (v[1] + v[2]);
        const double mean = 0.5 * (a + d);
        const double rad = std::hypot(0.5 * (a - d), b);
        return {mean - rad, mean + rad};
    }

    [[nodiscard]] double quadratic(std::array<double, 2> xi) const {
        return xi[0] * (v[0] * xi[0] + v[1] * xi[1]) + xi[1] * (v[2] * xi[0] + v[3] * xi[1]);
    }
};

/// Reference data for the bilinear quadrilateral on [0,1]^2 with local
/// nodes (0,0), (1,0), (1,1), (0,1) and the 2x2 Gauss rule.
namespace q1 {

inline constexpr double gauss_offset = 0.28867513459481288225;  // 1/(2*sqrt(3))
inline constexpr std::array<double, 2> gauss_1d{0.5 - gauss_offset, 0.5 + gauss_offset};

/// Gauss points ordered like the element nodes: (lo,lo), (hi,lo), (hi,hi), (lo,hi).
inline constexpr std::array<std::array<double, 2>, 4> gauss_points{{
    {gauss_1d[0], gauss_1d[0]},
    {gauss_1d[1], gauss_1d[0]},
    {gauss_1d[1], gauss_1d[1]},
    {gauss_1d[0], gauss_1d[1]},
}};
inline constexpr double gauss_weight = 0.25;

inline constexpr std::array<double, 4> shape(double xi, double eta) {
    return {(1 - xi) * (1 - eta), xi * (1 - eta), xi * eta, (1 - xi) * eta};
}

/// d(phi_a)/d(xi), d(phi_a)/d(eta) on the reference square.
inline constexpr std::array<std::array<double, 2>, 4> shape_gradients(double xi, double eta) {
    return {{
        {-(1 - eta), -(1 - xi)},
        {(1 - eta), -xi},
        {eta, xi},
        {-eta, (1 - xi)},
    }};
}

/// Physical gradient of a Q1 function with nodal values `u` on an
/// hx-by-hy element, at reference point (xi, eta).
inline std::array<double, 2> gradient(const std::array<double, 4>& u, double xi, double eta, double hx, double hy) {
    const auto g = shape_gradients(xi, eta);
    double dx = 0.0;
    double dy = 0.0;
    for (std::size_t a = 0; a < 4; ++a) {
        dx += u[a] * g[a][0];
        dy += u[a] * g[a][1];
    }
    return {dx / hx, dy / hy};
}

inline double value(const std::array<double, 4>& u, double xi, double eta) {
    const auto s = shape(xi, eta);
    return u[0] * s[0] + u[1] * s[1] + u[2] * s[2] + u[3] * s[3];
}

using ElementMatrix = std::array<std::array<double, 4>, 4>;

/// The four matrices int_e d_j(phi_b) d_i(phi_a), one per (i, j), so that
/// the element stiffness for tensor C is sum_ij C_ij * basis[2i+j].
inline std::array<ElementMatrix, 4> stiffness_basis(double hx, double hy) {
    std::array<ElementMatrix, 4> basis{};
    const double w = gauss_weight * hx * hy;
    const std::array<double, 2> scale{1.0 / hx, 1.0 / hy};
    for (const auto& gp : gauss_points) {
        const auto g = shape_gradients(gp[0], gp[1]);
        for (int i = 0; i < 2; ++i) {
            for (int j = 0; j < 2; ++j) {
                auto& m = basis[static_cast<std::size_t>(2 * i + j)];
                for (std::size_t a = 0; a < 4; ++a) {
                    for (std::size_t b = 0; b < 4; ++b) {
                        m[a][b] += w * g[a][i] * scale[i] * g[b][j] * scale[j];
                    }
                }
            }
        }
    }
    return basis;
}

inline ElementMatrix element_stiffness(const std::array<ElementMatrix, 4>& basis, const Tensor2& c) {
    ElementMatrix k{};
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = 0; b < 4; ++b) {
            k[a][b] = c.v[0] * basis[0][a][b] + c.v[1] * basis[1][a][b] + c.v[2] * basis[2][a][b] +
                      c.v[3] * basis[3][a][b];
        }
    }
    return k;
}

}  // namespace q1
}  // namespace homog
