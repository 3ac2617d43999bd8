#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "homog/sparse.hpp"

namespace homog {

enum class Preconditioner { none, diagonal, multigrid };

struct SolverConfig {
    double rel_tolerance = 1e-10;
    std::size_t max_iterations = 0;  // 0 means 10 * dimension
    Preconditioner preconditioner = Preconditioner::diagonal;

    void validate() const {
        if (!(rel_tolerance > 0.0 && rel_tolerance < 1.0)) {
            throw std::invalid_argument("SolverConfig: rel_tolerance must lie in (0, 1)");
        }
    }

    [[nodiscard]] std::size_t iteration_limit(std::size_t dim) const {
        return max_iterations > 0 ? max_iterations : std::max<std::size_t>(1, 10 * dim);
    }
};

struct SolveReport {
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    std::vector<double> residual_history;  // ||r_k|| / ||b||, k = 0..iterations
};

/// Linear solver failure; carries the residual history.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, std::vector<double> history)
        : std::runtime_error(what), history_(std::move(history)) {}

    [[nodiscard]] const std::vector<double>& history() const noexcept { return history_; }

private:
    std::vector<double> history_;
};

/// z = M^{-1} r
using PreconditionerFn = std::function<void(std::span<const double>, std::span<double>)>;

/// Optional hook applied to every residual and search direction; used to
/// stay in the complement of the constants for singular periodic systems.
using ProjectionFn = std::function<void(std::span<double>)>;

struct PcgOptions {
    double rel_tolerance = 1e-10;
    std::size_t max_iterations = 1000;
    /// Stopping is relative to this norm when positive, else to ||b||.
    double reference_norm = 0.0;
};

/// Preconditioned conjugate gradients on A x = b, starting from the
/// incoming x. Stops when ||b - A x|| <= tol * ||b||, checked on the true
/// residual before accepting convergence.
inline SolveReport pcg(const CsrMatrix& a, std::span<const double> b, std::span<double> x,
                       const PreconditionerFn& precond, const PcgOptions& opts,
                       const ProjectionFn& project = nullptr) {
    const std::size_t n = b.size();
    if (a.rows() != n || a.cols() != n || x.size() != n) {
        throw std::invalid_argument("pcg: dimension mismatch");
    }
    SolveReport report;
    const double bnorm = opts.reference_norm > 0.0 ? opts.reference_norm : norm2(b);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        report.residual_history.push_back(0.0);
        return report;
    }
    const double target = opts.rel_tolerance * bnorm;

    std::vector<double> r(n);
    std::vector<double> z(n);
    std::vector<double> p(n);
    std::vector<double> q(n);

    auto true_residual = [&] {
        a.multiply(x, r);
        for (std::size_t i = 0; i < n; ++i) {
            r[i] = b[i] - r[i];
        }
        if (project) {
            project(r);
        }
        return norm2(r);
    };

    double rnorm = true_residual();
    report.residual_history.push_back(rnorm / bnorm);
    std::size_t restarts = 0;
    bool stagnated = false;
    while (true) {
        if (rnorm <= target) {
            report.relative_residual = rnorm / bnorm;
            return report;
        }
        if (report.iterations >= opts.max_iterations) {
            break;
        }
        // (Re)start from the current residual.
        if (precond) {
            precond(r, z);
        } else {
            std::copy(r.begin(), r.end(), z.begin());
        }
        if (project) {
            project(z);
        }
        std::copy(z.begin(), z.end(), p.begin());
        double rz = dot(r, z);
        bool converged = false;
        while (report.iterations < opts.max_iterations) {
            a.multiply(p, q);
            const double pq = dot(p, q);
            if (!(pq > 0.0)) {
                throw SolverError("pcg: matrix is not positive definite on the search space",
                                  report.residual_history);
            }
            const double alpha = rz / pq;
            for (std::size_t i = 0; i < n; ++i) {
                x[i] += alpha * p[i];
                r[i] -= alpha * q[i];
            }
            if (project) {
                project(r);
            }
            ++report.iterations;
            rnorm = norm2(r);
            report.residual_history.push_back(rnorm / bnorm);
            if (rnorm <= target) {
                converged = true;
                break;
            }
            if (precond) {
                precond(r, z);
            } else {
                std::copy(r.begin(), r.end(), z.begin());
            }
            if (project) {
                project(z);
            }
            const double rz_next = dot(r, z);
            const double beta = rz_next / rz;
            rz = rz_next;
            for (std::size_t i = 0; i < n; ++i) {
                p[i] = z[i] + beta * p[i];
            }
        }
        // The recursive residual may drift from the true one; confirm.
        rnorm = true_residual();
        report.residual_history.back() = rnorm / bnorm;
        if (converged && rnorm > target && ++restarts > 5) {
            stagnated = true;
            break;
        }
    }
    report.relative_residual = rnorm / bnorm;
    std::ostringstream msg;
    msg << "pcg: " << (stagnated ? "true residual stagnated above the tolerance" : "no convergence")
        << " after " << report.iterations << " iterations (relative residual " << report.relative_residual
        << ", tolerance " << opts.rel_tolerance << ")";
    throw SolverError(msg.str(), report.residual_history);
}

inline PreconditionerFn jacobi_preconditioner(const CsrMatrix& a) {
    auto diag = a.diagonal();
    for (auto& d : diag) {
        if (!(d > 0.0)) {
            throw std::invalid_argument("jacobi_preconditioner: non-positive diagonal entry");
        }
        d = 1.0 / d;
    }
    return [inv = std::move(diag)](std::span<const double> r, std::span<double> z) {
        for (std::size_t i = 0; i < r.size(); ++i) {
            z[i] = inv[i] * r[i];
        }
    };
}

struct CgResult {
    std::vector<double> x;
    SolveReport report;
};

/// Solves an SPD system with the preconditioner named in `cfg`
/// (none or diagonal; grid multigrid needs mesh data, see GridMultigrid).
inline CgResult cg_solve(const CsrMatrix& a, std::span<const double> b, const SolverConfig& cfg,
                         std::span<const double> initial = {}) {
    cfg.validate();
    if (cfg.preconditioner == Preconditioner::multigrid) {
        throw std::invalid_argument("cg_solve: multigrid needs grid geometry; build a GridMultigrid");
    }
    CgResult out;
    out.x.assign(b.size(), 0.0);
    if (!initial.empty()) {
        std::copy(initial.begin(), initial.end(), out.x.begin());
    }
    PreconditionerFn pre;
    if (cfg.preconditioner == Preconditioner::diagonal) {
        pre = jacobi_preconditioner(a);
    }
    out.report = pcg(a, b, out.x, pre, {cfg.rel_tolerance, cfg.iteration_limit(b.size()), 0.0});
    return out;
}

/// Solves a singular, consistent system whose kernel is the constants.
/// The result has zero weighted mean sum_i w_i x_i = 0 (uniform weights
/// when `weights` is empty).
inline CgResult cg_solve_projected(const CsrMatrix& a, std::span<const double> b, const SolverConfig& cfg,
                                   std::span<const double> weights = {}) {
    cfg.validate();
    if (cfg.preconditioner == Preconditioner::multigrid) {
        throw std::invalid_argument("cg_solve_projected: multigrid is not supported for periodic systems");
    }
    const std::size_t n = b.size();
    if (!weights.empty() && weights.size() != n) {
        throw std::invalid_argument("cg_solve_projected: weight vector has wrong size");
    }
    double sum = 0.0;
    for (const double v : b) {
        sum += v;
    }
    const double bnorm = norm2(b);
    if (std::abs(sum) / std::sqrt(static_cast<double>(n)) > 1e-10 * bnorm) {
        throw std::invalid_argument("cg_solve_projected: right-hand side is not orthogonal to constants");
    }
    const auto remove_mean = [n](std::span<double> v) {
        double s = 0.0;
        for (const double x : v) {
            s += x;
        }
        s /= static_cast<double>(n);
        for (auto& x : v) {
            x -= s;
        }
    };
    std::vector<double> rhs(b.begin(), b.end());
    remove_mean(rhs);

    CgResult out;
    out.x.assign(n, 0.0);
    PreconditionerFn pre;
    if (cfg.preconditioner == Preconditioner::diagonal) {
        pre = jacobi_preconditioner(a);
    }
    out.report = pcg(a, rhs, out.x, pre, {cfg.rel_tolerance, cfg.iteration_limit(n), bnorm}, remove_mean);

    double wsum = 0.0;
    double wx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        wsum += w;
        wx += w * out.x[i];
    }
    const double shift = wx / wsum;
    for (auto& v : out.x) {
        v -= shift;
    }
    return out;
}

}  // namespace homog
