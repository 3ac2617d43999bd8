#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "homog/assembly.hpp"
#include "homog/linsolve.hpp"
#include "homog/sparse.hpp"

namespace homog {

struct MultigridOptions {
    int smoothing_sweeps = 2;
    std::size_t max_direct_size = 1200;  // dense Cholesky on the coarsest level below this size
    std::size_t min_coarse_size = 64;
};

/// Geometric V-cycle for Q1 systems on a uniform (nx+1) x (ny+1) node grid,
/// possibly with some nodes eliminated (Dirichlet). Bilinear prolongation,
/// Galerkin coarse operators, forward Gauss-Seidel before and backward
/// Gauss-Seidel after the coarse correction, so one cycle is a symmetric
/// positive definite preconditioner for SPD input.
///
/// Keeps a reference to the fine matrix, which must outlive the object.
class GridMultigrid {
public:
    GridMultigrid(const CsrMatrix& fine, int nx, int ny, const DofMap& dofs, MultigridOptions opts = {})
        : opts_(opts) {
        if (fine.rows() != dofs.size()) {
            throw std::invalid_argument("GridMultigrid: matrix does not match dof map");
        }
        levels_.emplace_back();
        levels_.back().a = &fine;
        levels_.back().nx = nx;
        levels_.back().ny = ny;
        levels_.back().position = dofs.position;
        prepare_level(levels_.back());

        while (true) {
            Level& f = levels_.back();
            if (f.nx % 2 != 0 || f.ny % 2 != 0 || f.nx < 4 || f.ny < 4 || f.a->rows() <= opts_.min_coarse_size) {
                break;
            }
            Level c;
            c.nx = f.nx / 2;
            c.ny = f.ny / 2;
            c.position.assign(static_cast<std::size_t>(c.nx + 1) * static_cast<std::size_t>(c.ny + 1), -1);
            std::int64_t count = 0;
            for (int j = 0; j <= c.ny; ++j) {
                for (int i = 0; i <= c.nx; ++i) {
                    const auto fine_node = static_cast<std::size_t>(2 * j * (f.nx + 1) + 2 * i);
                    if (f.position[fine_node] >= 0) {
                        c.position[static_cast<std::size_t>(j * (c.nx + 1) + i)] = count++;
                    }
                }
            }
            f.prolong = build_prolongation(f, c, static_cast<std::size_t>(count));
            f.restrict = transpose(f.prolong);
            c.owned = std::make_unique<CsrMatrix>(multiply(f.restrict, multiply(*f.a, f.prolong)));
            c.a = c.owned.get();
            levels_.push_back(std::move(c));
            prepare_level(levels_.back());
        }
        factor_coarsest();
    }

    [[nodiscard]] std::size_t num_levels() const noexcept { return levels_.size(); }

    /// z = one V-cycle applied to r with zero initial guess.
    void apply(std::span<const double> r, std::span<double> z) const { cycle(0, r, z); }

    PreconditionerFn as_preconditioner() const {
        return [this](std::span<const double> r, std::span<double> z) { apply(r, z); };
    }

private:
    struct Level {
        const CsrMatrix* a = nullptr;
        std::unique_ptr<CsrMatrix> owned;
        int nx = 0;
        int ny = 0;
        std::vector<std::int64_t> position;
        CsrMatrix prolong;   // coarse -> this level
        CsrMatrix restrict;  // this level -> coarse
        std::vector<double> inv_diag;
        mutable std::vector<double> residual;
        mutable std::vector<double> coarse_rhs;
        mutable std::vector<double> coarse_sol;
        mutable std::vector<double> correction;
    };

    static CsrMatrix build_prolongation(const Level& f, const Level& c, std::size_t ncoarse) {
        const std::size_t nfine = f.a->rows();
        std::vector<std::size_t> row_ptr(nfine + 1, 0);
        std::vector<index_t> cols;
        std::vector<double> vals;
        cols.reserve(nfine * 4);
        vals.reserve(nfine * 4);
        std::size_t row = 0;
        for (int j = 0; j <= f.ny; ++j) {
            for (int i = 0; i <= f.nx; ++i) {
                if (f.position[static_cast<std::size_t>(j * (f.nx + 1) + i)] < 0) {
                    continue;
                }
                const int i0 = i / 2;
                const int j0 = j / 2;
                const int i1 = (i % 2 != 0) ? i0 + 1 : i0;
                const int j1 = (j % 2 != 0) ? j0 + 1 : j0;
                const double wi = (i1 != i0) ? 0.5 : 1.0;
                const double wj = (j1 != j0) ? 0.5 : 1.0;
                std::pair<std::int64_t, double> entries[4];
                int ne = 0;
                for (int jj = j0; jj <= j1; ++jj) {
                    for (int ii = i0; ii <= i1; ++ii) {
                        const std::int64_t col = c.position[static_cast<std::size_t>(jj * (c.nx + 1) + ii)];
                        if (col >= 0) {
                            entries[ne++] = {col, wi * wj};
                        }
                    }
                }
                std::sort(entries, entries + ne);
                for (int k = 0; k < ne; ++k) {
                    cols.push_back(static_cast<index_t>(entries[k].first));
                    vals.push_back(entries[k].second);
                }
                row_ptr[++row] = cols.size();
            }
        }
        if (row != nfine) {
            throw std::logic_error("GridMultigrid: dof map inconsistent with grid");
        }
        return CsrMatrix(nfine, ncoarse, std::move(row_ptr), std::move(cols), std::move(vals));
    }

    static void prepare_level(Level& lvl) {
        const auto n = lvl.a->rows();
        lvl.inv_diag = lvl.a->diagonal();
        for (auto& d : lvl.inv_diag) {
            if (!(d > 0.0)) {
                throw std::invalid_argument("GridMultigrid: non-positive diagonal entry");
            }
            d = 1.0 / d;
        }
        lvl.residual.resize(n);
        lvl.correction.resize(n);
    }

    void factor_coarsest() {
        const CsrMatrix& a = *levels_.back().a;
        const std::size_t n = a.rows();
        if (n > opts_.max_direct_size) {
            return;
        }
        chol_.assign(n * n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) {
                chol_[i * n + a.col_idx()[k]] = a.values()[k];
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            double d = chol_[j * n + j];
            for (std::size_t k = 0; k < j; ++k) {
                d -= chol_[j * n + k] * chol_[j * n + k];
            }
            if (!(d > 0.0)) {
                throw std::invalid_argument("GridMultigrid: coarse operator is not positive definite");
            }
            d = std::sqrt(d);
            chol_[j * n + j] = d;
            for (std::size_t i = j + 1; i < n; ++i) {
                double s = chol_[i * n + j];
                for (std::size_t k = 0; k < j; ++k) {
                    s -= chol_[i * n + k] * chol_[j * n + k];
                }
                chol_[i * n + j] = s / d;
            }
        }
        chol_n_ = n;
    }

    void solve_coarsest(std::span<const double> b, std::span<double> x) const {
        const std::size_t n = chol_n_;
        for (std::size_t i = 0; i < n; ++i) {
            double s = b[i];
            for (std::size_t k = 0; k < i; ++k) {
                s -= chol_[i * n + k] * x[k];
            }
            x[i] = s / chol_[i * n + i];
        }
        for (std::size_t i = n; i-- > 0;) {
            double s = x[i];
            for (std::size_t k = i + 1; k < n; ++k) {
                s -= chol_[k * n + i] * x[k];
            }
            x[i] = s / chol_[i * n + i];
        }
    }

    static void gauss_seidel(const Level& lvl, std::span<const double> b, std::span<double> x, bool forward) {
        const CsrMatrix& a = *lvl.a;
        const auto rp = a.row_ptr();
        const auto ci = a.col_idx();
        const auto va = a.values();
        const std::size_t n = a.rows();
        for (std::size_t step = 0; step < n; ++step) {
            const std::size_t i = forward ? step : n - 1 - step;
            double s = b[i];
            for (std::size_t k = rp[i]; k < rp[i + 1]; ++k) {
                s -= va[k] * x[ci[k]];
            }
            x[i] += s * lvl.inv_diag[i];
        }
    }

    void cycle(std::size_t l, std::span<const double> b, std::span<double> x) const {
        const Level& lvl = levels_[l];
        std::fill(x.begin(), x.end(), 0.0);
        if (l + 1 == levels_.size()) {
            if (chol_n_ == lvl.a->rows() && chol_n_ > 0) {
                solve_coarsest(b, x);
            } else {
                for (int s = 0; s < 20; ++s) {
                    gauss_seidel(lvl, b, x, true);
                }
                for (int s = 0; s < 20; ++s) {
                    gauss_seidel(lvl, b, x, false);
                }
            }
            return;
        }
        for (int s = 0; s < opts_.smoothing_sweeps; ++s) {
            gauss_seidel(lvl, b, x, true);
        }
        lvl.a->multiply(x, lvl.residual);
        for (std::size_t i = 0; i < lvl.residual.size(); ++i) {
            lvl.residual[i] = b[i] - lvl.residual[i];
        }
        const Level& next = levels_[l + 1];
        lvl.coarse_rhs.resize(next.a->rows());
        lvl.coarse_sol.resize(next.a->rows());
        lvl.restrict.multiply(lvl.residual, lvl.coarse_rhs);
        cycle(l + 1, lvl.coarse_rhs, lvl.coarse_sol);
        lvl.prolong.multiply(lvl.coarse_sol, lvl.correction);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += lvl.correction[i];
        }
        for (int s = 0; s < opts_.smoothing_sweeps; ++s) {
            gauss_seidel(lvl, b, x, false);
        }
    }

    MultigridOptions opts_;
    std::vector<Level> levels_;
    std::vector<double> chol_;
    std::size_t chol_n_ = 0;
};

}  // namespace homog
