#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "homog/cell.hpp"
#include "homog/mesh.hpp"
#include "homog/q1.hpp"
#include "homog/recon.hpp"

namespace homog {

namespace detail {

inline void require_same_mesh(const StructuredMesh& mesh, std::span<const double> a, std::span<const double> b) {
    if (a.size() != mesh.num_nodes() || b.size() != mesh.num_nodes()) {
        throw std::invalid_argument("metrics: fields do not match the mesh");
    }
}

/// Sum over elements and Gauss points of fn(e, g, value/gradient data).
template <class Fn>
double integrate(const StructuredMesh& mesh, Fn&& fn) {
    const double w = q1::gauss_weight * mesh.element_area();
    double s = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        for (std::size_t g = 0; g < 4; ++g) {
            s += w * fn(e, g);
        }
    }
    return s;
}

inline std::array<double, 2> gauss_gradient(const StructuredMesh& mesh, std::span<const double> u, std::size_t e,
                                            std::size_t g) {
    const auto& gp = q1::gauss_points[g];
    return q1::gradient(element_values(mesh, u, e), gp[0], gp[1], mesh.hx(), mesh.hy());
}

}  // namespace detail

inline double l2_norm(const StructuredMesh& mesh, std::span<const double> u) {
    return std::sqrt(detail::integrate(mesh, [&](std::size_t e, std::size_t g) {
        const auto& gp = q1::gauss_points[g];
        const double v = q1::value(element_values(mesh, u, e), gp[0], gp[1]);
        return v * v;
    }));
}

inline double h1_seminorm(const StructuredMesh& mesh, std::span<const double> u) {
    return std::sqrt(detail::integrate(mesh, [&](std::size_t e, std::size_t g) {
        const auto d = detail::gauss_gradient(mesh, u, e, g);
        return d[0] * d[0] + d[1] * d[1];
    }));
}

/// ||u_eps - u0||_0 / ||u0||_0
inline double err0(std::span<const double> u_eps, std::span<const double> u0, const StructuredMesh& mesh) {
    detail::require_same_mesh(mesh, u_eps, u0);
    std::vector<double> diff(u0.size());
    for (std::size_t i = 0; i < diff.size(); ++i) {
        diff[i] = u_eps[i] - u0[i];
    }
    return l2_norm(mesh, diff) / l2_norm(mesh, u0);
}

/// |u_eps - u0|_1 / |u0|_1
inline double err2(std::span<const double> u_eps, std::span<const double> u0, const StructuredMesh& mesh) {
    detail::require_same_mesh(mesh, u_eps, u0);
    std::vector<double> diff(u0.size());
    for (std::size_t i = 0; i < diff.size(); ++i) {
        diff[i] = u_eps[i] - u0[i];
    }
    return h1_seminorm(mesh, diff) / h1_seminorm(mesh, u0);
}

/// ||grad u_eps - (I + grad N(x/eps)) grad u0||_0 / |u0|_1
inline double err1(std::span<const double> u_eps, std::span<const double> u0, const CorrectorSet& corr,
                   const StructuredMesh& mesh, int cells) {
    detail::require_same_mesh(mesh, u_eps, u0);
    require_aligned(mesh, corr, cells);
    const double num = detail::integrate(mesh, [&](std::size_t e, std::size_t g) {
        const auto fine = detail::gauss_gradient(mesh, u_eps, e, g);
        const auto rec = corrected_gradient(corr.gradient(aligned_cell_element(mesh, e, corr.resolution), g),
                                            detail::gauss_gradient(mesh, u0, e, g));
        const double d0 = fine[0] - rec[0];
        const double d1 = fine[1] - rec[1];
        return d0 * d0 + d1 * d1;
    });
    return std::sqrt(num) / h1_seminorm(mesh, u0);
}

/// Same as err1, with a precomputed reconstruction.
inline double err1(std::span<const double> u_eps, std::span<const double> u0, const ReconstructedGradient& rec,
                   const StructuredMesh& mesh) {
    detail::require_same_mesh(mesh, u_eps, u0);
    if (rec.values.size() != 4 * mesh.num_elements()) {
        throw std::invalid_argument("err1: reconstruction does not match the mesh");
    }
    const double num = detail::integrate(mesh, [&](std::size_t e, std::size_t g) {
        const auto fine = detail::gauss_gradient(mesh, u_eps, e, g);
        const auto& r = rec.at(e, g);
        return (fine[0] - r[0]) * (fine[0] - r[0]) + (fine[1] - r[1]) * (fine[1] - r[1]);
    });
    return std::sqrt(num) / h1_seminorm(mesh, u0);
}

/// ||grad N(x/eps) grad u0||_0 / |u0|_1, the part the reconstruction adds.
inline double corrector_term(std::span<const double> u0, const CorrectorSet& corr, const StructuredMesh& mesh,
                             int cells) {
    require_aligned(mesh, corr, cells);
    const double num = detail::integrate(mesh, [&](std::size_t e, std::size_t g) {
        const auto d = detail::gauss_gradient(mesh, u0, e, g);
        const Tensor2& t = corr.gradient(aligned_cell_element(mesh, e, corr.resolution), g);
        const double c0 = t(0, 0) * d[0] + t(0, 1) * d[1];
        const double c1 = t(1, 0) * d[0] + t(1, 1) * d[1];
        return c0 * c0 + c1 * c1;
    });
    return std::sqrt(num) / h1_seminorm(mesh, u0);
}

struct ErrorReport {
    int cells = 0;
    int per_cell = 0;
    double err0 = 0.0;
    double err1 = 0.0;
    double err2 = 0.0;
    double u0_l2 = 0.0;
    double u0_h1 = 0.0;
};

inline ErrorReport compute_errors(std::span<const double> u_eps, std::span<const double> u0, const CorrectorSet& corr,
                                  const StructuredMesh& mesh, int cells) {
    ErrorReport r;
    r.cells = cells;
    r.per_cell = corr.resolution;
    r.u0_l2 = l2_norm(mesh, u0);
    r.u0_h1 = h1_seminorm(mesh, u0);
    if (!(r.u0_l2 > 0.0) || !(r.u0_h1 > 0.0)) {
        throw std::invalid_argument("compute_errors: homogenized solution vanishes");
    }
    r.err0 = err0(u_eps, u0, mesh);
    r.err1 = err1(u_eps, u0, corr, mesh, cells);
    r.err2 = err2(u_eps, u0, mesh);
    return r;
}

struct RateSample {
    double eps = 0.0;
    double err = 0.0;
};

/// Least-squares slope of log(err) against log(eps).
inline double estimate_rate(std::span<const RateSample> samples) {
    if (samples.size() < 2) {
        throw std::invalid_argument("estimate_rate: need at least two samples");
    }
    double mx = 0.0;
    double my = 0.0;
    for (const auto& s : samples) {
        if (!(s.err > 0.0) || !(s.eps > 0.0)) {
            throw std::invalid_argument("estimate_rate: errors and eps must be positive");
        }
        mx += std::log(s.eps);
        my += std::log(s.err);
    }
    mx /= static_cast<double>(samples.size());
    my /= static_cast<double>(samples.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (const auto& s : samples) {
        const double dx = std::log(s.eps) - mx;
        sxy += dx * (std::log(s.err) - my);
        sxx += dx * dx;
    }
    if (sxx == 0.0) {
        throw std::invalid_argument("estimate_rate: eps values must be distinct");
    }
    return sxy / sxx;
}

/// Rates between consecutive samples.
inline std::vector<double> pairwise_rates(std::span<const RateSample> samples) {
    std::vector<double> out;
    for (std::size_t k = 1; k < samples.size(); ++k) {
        const RateSample pair[2] = {samples[k - 1], samples[k]};
        out.push_back(estimate_rate(pair));
    }
    return out;
}

}  // namespace homog
