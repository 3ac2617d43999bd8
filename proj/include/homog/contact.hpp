#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "homog/assembly.hpp"
#include "homog/linsolve.hpp"
#include "homog/mesh.hpp"
#include "homog/multigrid.hpp"
#include "homog/q1.hpp"

namespace homog {

struct ContactParameters {
    double f = 1.0;
    double g = 1.0;
    double alpha = 0.5;
    BoundaryPartition partition = BoundaryPartition::contact();
};

struct FineCoefficient {
    MicrostructureSpec micro;
    int cells = 1;
};

struct HomogenizedCoefficient {
    Tensor2 tensor = Tensor2::identity();
};

struct ContactProblemSpec {
    ContactParameters params;
    std::variant<FineCoefficient, HomogenizedCoefficient> coefficient;

    /// Lower ellipticity bound of the active coefficient.
    [[nodiscard]] double min_eigenvalue() const {
        if (const auto* fine = std::get_if<FineCoefficient>(&coefficient)) {
            return fine->micro.min_kappa();
        }
        return std::get<HomogenizedCoefficient>(coefficient).tensor.eigenvalues()[0];
    }
};

/// Rejects problems outside the contraction regime kappa_min > |alpha|
/// (trace constant c_j <= 1 for the unit square with Dirichlet top).
inline void check_solvability(double min_eigenvalue, double alpha) {
    if (!(min_eigenvalue > std::abs(alpha))) {
        throw std::invalid_argument("solvability gate kappa1 > |alpha| fails (kappa1 = " +
                                    std::to_string(min_eigenvalue) + ", alpha = " + std::to_string(alpha) + ")");
    }
}

enum class IterationVariant {
    paper,          // A_h u^{n+1} = b_h + r_h(u^n), whole boundary term explicit
    semi_implicit,  // Robin mass on both contact segments kept on the left
};

struct FixedPointOptions {
    double tol = 1e-10;
    std::size_t max_iter = 200;
    IterationVariant variant = IterationVariant::paper;
    SolverConfig linear{1e-10, 0, Preconditioner::multigrid};
    /// Each inner solve reduces its initial residual by this factor, down
    /// to 1e-2 * min(linear tolerance, tol) but never below inner_floor.
    double inner_reduction = 1e-2;
    double inner_floor = 1e-10;
};

struct FixedPointReport {
    std::size_t iterations = 0;
    std::vector<double> updates;  // ||u^{n+1} - u^n|| / ||u^n||
    std::vector<double> ratios;   // ||u^{n+1} - u^n|| / ||u^n - u^{n-1}||
    bool converged = false;
    double final_update = std::numeric_limits<double>::infinity();
    std::size_t linear_iterations = 0;
};

class FixedPointError : public std::runtime_error {
public:
    FixedPointError(const std::string& what, FixedPointReport report)
        : std::runtime_error(what), report_(std::move(report)) {}

    [[nodiscard]] const FixedPointReport& report() const noexcept { return report_; }

private:
    FixedPointReport report_;
};

/// Boundary masses of the two contact segments, on the free dofs.
struct BoundaryMasses {
    CsrMatrix robin;
    CsrMatrix partial_robin;
};

/// r_h(u) = -alpha M' u - alpha M'' u^+, with u^+ taken nodewise.
inline std::vector<double> boundary_nonlinearity(const BoundaryMasses& m, double alpha, std::span<const double> u) {
    std::vector<double> plus(u.size());
    std::transform(u.begin(), u.end(), plus.begin(), [](double v) { return std::max(v, 0.0); });
    std::vector<double> r(u.size());
    std::vector<double> tmp(u.size());
    m.robin.multiply(u, r);
    m.partial_robin.multiply(plus, tmp);
    for (std::size_t i = 0; i < r.size(); ++i) {
        r[i] = -alpha * (r[i] + tmp[i]);
    }
    return r;
}

/// Discrete contact system on the free dofs:
/// K u + alpha M' u + alpha M'' u^+ = b.
class ContactSystem {
public:
    ContactSystem(const StructuredMesh& mesh, const CsrMatrix& stiffness, const ContactParameters& params)
        : params_(params) {
        if (stiffness.rows() != mesh.num_nodes()) {
            throw std::invalid_argument("ContactSystem: stiffness does not match mesh");
        }
        auto load = assemble_load(mesh, params.f, params.g, {BoundaryTag::neumann});
        auto reduced = apply_dirichlet(stiffness, load, mesh, BoundaryTag::dirichlet);
        stiffness_ = std::move(reduced.matrix);
        rhs_ = std::move(reduced.rhs);
        dofs_ = std::move(reduced.dofs);
        masses_.robin = dofs_.restrict_matrix(assemble_boundary_mass(mesh, BoundaryTag::robin));
        masses_.partial_robin = dofs_.restrict_matrix(assemble_boundary_mass(mesh, BoundaryTag::partial_robin));
    }

    [[nodiscard]] const CsrMatrix& stiffness() const noexcept { return stiffness_; }
    [[nodiscard]] const std::vector<double>& rhs() const noexcept { return rhs_; }
    [[nodiscard]] const DofMap& dofs() const noexcept { return dofs_; }
    [[nodiscard]] const BoundaryMasses& masses() const noexcept { return masses_; }
    [[nodiscard]] const ContactParameters& params() const noexcept { return params_; }

    [[nodiscard]] std::vector<double> nonlinearity(std::span<const double> u) const {
        return boundary_nonlinearity(masses_, params_.alpha, u);
    }

    /// F(u) = K u - b - r_h(u); zero at the discrete solution.
    [[nodiscard]] std::vector<double> residual(std::span<const double> u) const {
        auto f = stiffness_ * u;
        const auto r = nonlinearity(u);
        for (std::size_t i = 0; i < f.size(); ++i) {
            f[i] -= rhs_[i] + r[i];
        }
        return f;
    }

private:
    ContactParameters params_;
    CsrMatrix stiffness_;
    std::vector<double> rhs_;
    DofMap dofs_;
    BoundaryMasses masses_;
};

namespace detail {

/// Builds the preconditioner named in `kind`; `holder` keeps a multigrid
/// hierarchy alive for as long as the returned function is used.
inline PreconditionerFn make_preconditioner(const CsrMatrix& a, const StructuredMesh& mesh, const DofMap& dofs,
                                            Preconditioner kind, std::unique_ptr<GridMultigrid>& holder) {
    switch (kind) {
        case Preconditioner::none: return nullptr;
        case Preconditioner::diagonal: return jacobi_preconditioner(a);
        case Preconditioner::multigrid:
            holder = std::make_unique<GridMultigrid>(a, mesh.nx(), mesh.ny(), dofs);
            return holder->as_preconditioner();
    }
    return nullptr;
}

}  // namespace detail

struct ContactSolution {
    std::vector<double> u;  // nodal values on the full mesh (zero on Gamma_D)
    FixedPointReport report;
};

/// Fixed-point iteration A u^{n+1} = b + r(u^n) until
/// ||u^{n+1} - u^n|| < tol ||u^n||. `initial` (full nodal vector) defaults
/// to zero.
inline ContactSolution fixed_point_solve(const ContactSystem& sys, const StructuredMesh& mesh,
                                         const FixedPointOptions& opts, std::span<const double> initial = {}) {
    opts.linear.validate();
    const double alpha = sys.params().alpha;
    const BoundaryMasses& masses = sys.masses();
    const bool semi = opts.variant == IterationVariant::semi_implicit;

    CsrMatrix semi_matrix;
    if (semi) {
        semi_matrix = add(add(sys.stiffness(), masses.robin, alpha), masses.partial_robin, alpha);
    }
    const CsrMatrix& lhs = semi ? semi_matrix : sys.stiffness();
    std::unique_ptr<GridMultigrid> mg;
    const auto precond = detail::make_preconditioner(lhs, mesh, sys.dofs(), opts.linear.preconditioner, mg);

    // Explicit part of the boundary term for the chosen variant.
    const auto explicit_term = [&](std::span<const double> u) {
        if (!semi) {
            return sys.nonlinearity(u);
        }
        // alpha M'' (u - u^+) = alpha M'' min(u, 0)
        std::vector<double> neg(u.size());
        std::transform(u.begin(), u.end(), neg.begin(), [](double v) { return std::min(v, 0.0); });
        auto t = masses.partial_robin * neg;
        for (auto& v : t) {
            v *= alpha;
        }
        return t;
    };

    const std::size_t n = sys.dofs().size();
    std::vector<double> u = initial.empty() ? std::vector<double>(n, 0.0) : sys.dofs().restrict_vector(initial);
    std::vector<double> next(n);
    std::vector<double> rhs(n);
    std::vector<double> tmp(n);
    const double floor = std::max(1e-2 * std::min(opts.linear.rel_tolerance, opts.tol), opts.inner_floor);
    const std::size_t linear_cap = opts.linear.iteration_limit(n);

    FixedPointReport report;
    auto term = explicit_term(u);
    double previous_step = 0.0;
    while (report.iterations < opts.max_iter) {
        for (std::size_t i = 0; i < n; ++i) {
            rhs[i] = sys.rhs()[i] + term[i];
        }
        lhs.multiply(u, tmp);
        for (std::size_t i = 0; i < n; ++i) {
            tmp[i] = rhs[i] - tmp[i];
        }
        const double rhs_norm = norm2(rhs);
        const double start = rhs_norm > 0.0 ? norm2(tmp) / rhs_norm : 0.0;
        const double inner_tol = std::clamp(opts.inner_reduction * start, floor, 0.5);

        std::copy(u.begin(), u.end(), next.begin());
        const auto lin = pcg(lhs, rhs, next, precond, {inner_tol, linear_cap, 0.0});
        report.linear_iterations += lin.iterations;
        ++report.iterations;
        // an unchanged explicit term makes this the last iterate, so solve it fully
        const bool last = explicit_term(next) == term;
        if (last && inner_tol > floor) {
            report.linear_iterations += pcg(lhs, rhs, next, precond, {floor, linear_cap, 0.0}).iterations;
        }

        double step = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = next[i] - u[i];
            step += d * d;
        }
        step = std::sqrt(step);
        const double unorm = norm2(u);
        const double update = unorm > 0.0 ? step / unorm : (step > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
        report.updates.push_back(update);
        if (report.iterations > 1 && previous_step > 0.0) {
            report.ratios.push_back(step / previous_step);
        }
        previous_step = step;
        std::swap(u, next);
        report.final_update = update;
        if (update < opts.tol || last) {
            report.converged = true;
            break;
        }
        term = explicit_term(u);
    }
    if (!report.converged) {
        throw FixedPointError("fixed_point_solve: no convergence within " + std::to_string(opts.max_iter) +
                                  " iterations (last relative update " + std::to_string(report.final_update) + ")",
                              report);
    }
    return {sys.dofs().expand(u), std::move(report)};
}

/// Assembles the stiffness for the spec's coefficient and runs the fixed
/// point after checking the solvability gate.
inline ContactSolution fixed_point_solve(const ContactProblemSpec& spec, const StructuredMesh& mesh,
                                         const FixedPointOptions& opts, std::span<const double> initial = {}) {
    check_solvability(spec.min_eigenvalue(), spec.params.alpha);
    if (!mesh.has_tag(BoundaryTag::dirichlet)) {
        throw std::invalid_argument("fixed_point_solve: the Dirichlet boundary is empty");
    }
    CsrMatrix k;
    if (const auto* fine = std::get_if<FineCoefficient>(&spec.coefficient)) {
        k = assemble_stiffness(mesh, sample_coefficient(fine->micro, mesh, fine->cells));
    } else {
        k = assemble_stiffness(mesh, std::get<HomogenizedCoefficient>(spec.coefficient).tensor);
    }
    const ContactSystem sys(mesh, k, spec.params);
    k = CsrMatrix();
    return fixed_point_solve(sys, mesh, opts, initial);
}

/// Oscillating-coefficient contact problem on the NM x NM mesh.
inline ContactSolution solve_fine(const StructuredMesh& mesh, const MicrostructureSpec& micro, int cells,
                                  const ContactParameters& params, const FixedPointOptions& opts) {
    return fixed_point_solve(ContactProblemSpec{params, FineCoefficient{micro, cells}}, mesh, opts);
}

/// Homogenized contact problem with constant tensor on the same mesh.
inline ContactSolution solve_homogenized(const StructuredMesh& mesh, const Tensor2& a_hat,
                                         const ContactParameters& params, const FixedPointOptions& opts) {
    return fixed_point_solve(ContactProblemSpec{params, HomogenizedCoefficient{a_hat}}, mesh, opts);
}

struct RobinSolution {
    std::vector<double> u;
    SolveReport report;
};

/// Linear Robin problem on every Robin-tagged edge:
/// int A grad u . grad v + int_Gamma alpha u v = int f v + int_Gamma g v.
/// `alpha` holds one value per boundary edge (or a single value for all).
inline RobinSolution robin_solve(const StructuredMesh& mesh, const CsrMatrix& stiffness, std::span<const double> alpha,
                                 double f, double g, const SolverConfig& cfg) {
    if (stiffness.rows() != mesh.num_nodes()) {
        throw std::invalid_argument("robin_solve: stiffness does not match mesh");
    }
    const auto& edges = mesh.boundary_edges();
    std::vector<double> weights(edges.size());
    if (alpha.size() == 1) {
        std::fill(weights.begin(), weights.end(), alpha[0]);
    } else if (alpha.size() == edges.size()) {
        std::copy(alpha.begin(), alpha.end(), weights.begin());
    } else {
        throw std::invalid_argument("robin_solve: alpha must have one value or one per boundary edge");
    }
    for (std::size_t k = 0; k < edges.size(); ++k) {
        if (edges[k].tag == BoundaryTag::robin && !(weights[k] > 0.0)) {
            throw std::invalid_argument("robin_solve: alpha must be positive on the Robin boundary");
        }
    }
    if (!mesh.has_tag(BoundaryTag::robin)) {
        throw std::invalid_argument("robin_solve: mesh has no Robin boundary");
    }
    cfg.validate();
    const CsrMatrix a = add(stiffness, assemble_boundary_mass(mesh, BoundaryTag::robin, weights));
    const auto b = assemble_load(mesh, f, g, {BoundaryTag::robin});
    const DofMap dofs = DofMap::all_free(mesh.num_nodes());
    std::unique_ptr<GridMultigrid> mg;
    const auto precond = detail::make_preconditioner(a, mesh, dofs, cfg.preconditioner, mg);
    RobinSolution sol;
    sol.u.assign(b.size(), 0.0);
    sol.report = pcg(a, b, sol.u, precond, {cfg.rel_tolerance, cfg.iteration_limit(b.size()), 0.0});
    return sol;
}

inline RobinSolution robin_solve(const StructuredMesh& mesh, const CsrMatrix& stiffness, double alpha, double f,
                                 double g, const SolverConfig& cfg) {
    const double a[1] = {alpha};
    return robin_solve(mesh, stiffness, a, f, g, cfg);
}

}  // namespace homog
