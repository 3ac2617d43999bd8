#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace homog {

using index_t = std::uint32_t;

/// Compressed sparse row matrix. Column indices are sorted and unique
/// within each row.
class CsrMatrix {
public:
    CsrMatrix() = default;

    CsrMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_ptr,
              std::vector<index_t> col_idx, std::vector<double> values)
        : rows_(rows), cols_(cols), row_ptr_(std::move(row_ptr)), col_idx_(std::move(col_idx)),
          values_(std::move(values)) {
        if (row_ptr_.size() != rows_ + 1 || col_idx_.size() != values_.size() ||
            row_ptr_.back() != col_idx_.size()) {
            throw std::invalid_argument("CsrMatrix: inconsistent storage");
        }
    }

    /// Empty n-by-n matrix (no stored entries).
    static CsrMatrix zero(std::size_t n) {
        return CsrMatrix(n, n, std::vector<std::size_t>(n + 1, 0), {}, {});
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t nnz() const noexcept { return values_.size(); }

    [[nodiscard]] std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
    [[nodiscard]] std::span<const index_t> col_idx() const noexcept { return col_idx_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] std::span<double> values() noexcept { return values_; }

    /// Pointer to the stored (i, j) entry, or nullptr when (i, j) is not in
    /// the pattern.
    [[nodiscard]] double* find(std::size_t i, std::size_t j) noexcept {
        const auto* hit = locate(i, j);
        return hit ? values_.data() + (hit - col_idx_.data()) : nullptr;
    }

    [[nodiscard]] double coeff(std::size_t i, std::size_t j) const noexcept {
        const auto* hit = locate(i, j);
        return hit ? values_[static_cast<std::size_t>(hit - col_idx_.data())] : 0.0;
    }

    void multiply(std::span<const double> x, std::span<double> y) const {
        if (x.size() != cols_ || y.size() != rows_) {
            throw std::invalid_argument("CsrMatrix::multiply: dimension mismatch");
        }
        for (std::size_t i = 0; i < rows_; ++i) {
            double sum = 0.0;
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                sum += values_[k] * x[col_idx_[k]];
            }
            y[i] = sum;
        }
    }

    [[nodiscard]] std::vector<double> operator*(std::span<const double> x) const {
        std::vector<double> y(rows_);
        multiply(x, y);
        return y;
    }

    [[nodiscard]] std::vector<double> diagonal() const {
        std::vector<double> d(std::min(rows_, cols_), 0.0);
        for (std::size_t i = 0; i < d.size(); ++i) {
            d[i] = coeff(i, i);
        }
        return d;
    }

    void scale(double c) noexcept {
        for (auto& v : values_) {
            v *= c;
        }
    }

    /// Largest |a_ij - a_ji| relative to the largest |a_ij|.
    [[nodiscard]] double symmetry_defect() const {
        double amax = 0.0;
        double defect = 0.0;
        for (std::size_t i = 0; i < rows_; ++i) {
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
                amax = std::max(amax, std::abs(values_[k]));
                defect = std::max(defect, std::abs(values_[k] - coeff(col_idx_[k], i)));
            }
        }
        return amax > 0.0 ? defect / amax : 0.0;
    }

private:
    [[nodiscard]] const index_t* locate(std::size_t i, std::size_t j) const noexcept {
        if (i >= rows_) {
            return nullptr;
        }
        const index_t* first = col_idx_.data() + row_ptr_[i];
        const index_t* last = col_idx_.data() + row_ptr_[i + 1];
        const index_t* it = std::lower_bound(first, last, static_cast<index_t>(j));
        return (it != last && *it == j) ? it : nullptr;
    }

    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<index_t> col_idx_;
    std::vector<double> values_;
};

/// Zero-valued square matrix whose pattern couples every pair of dofs that
/// share an element. `element_dofs` holds `dofs_per_element` consecutive
/// entries per element.
inline CsrMatrix pattern_from_elements(std::size_t n, std::span<const index_t> element_dofs,
                                       std::size_t dofs_per_element) {
    const std::size_t nelem = element_dofs.size() / dofs_per_element;
    std::vector<std::size_t> bound(n + 1, 0);
    for (const index_t d : element_dofs) {
        bound[d + 1] += dofs_per_element;
    }
    std::partial_sum(bound.begin(), bound.end(), bound.begin());
    std::vector<index_t> scratch(bound.back());
    std::vector<std::size_t> fill(bound.begin(), bound.end() - 1);
    for (std::size_t e = 0; e < nelem; ++e) {
        const auto dofs = element_dofs.subspan(e * dofs_per_element, dofs_per_element);
        for (const index_t a : dofs) {
            for (const index_t b : dofs) {
                scratch[fill[a]++] = b;
            }
        }
    }
    std::vector<std::size_t> row_ptr(n + 1, 0);
    std::size_t out = 0;
    for (std::size_t i = 0; i < n; ++i) {
        auto first = scratch.begin() + static_cast<std::ptrdiff_t>(bound[i]);
        auto last = scratch.begin() + static_cast<std::ptrdiff_t>(fill[i]);
        std::sort(first, last);
        last = std::unique(first, last);
        for (auto it = first; it != last; ++it) {
            scratch[out++] = *it;
        }
        row_ptr[i + 1] = out;
    }
    scratch.resize(out);
    scratch.shrink_to_fit();
    std::vector<double> values(out, 0.0);
    return CsrMatrix(n, n, std::move(row_ptr), std::move(scratch), std::move(values));
}

/// a + beta * b over the union of both patterns.
inline CsrMatrix add(const CsrMatrix& a, const CsrMatrix& b, double beta = 1.0) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument("add: dimension mismatch");
    }
    const auto ap = a.row_ptr();
    const auto bp = b.row_ptr();
    const auto ac = a.col_idx();
    const auto bc = b.col_idx();
    const auto av = a.values();
    const auto bv = b.values();
    std::vector<std::size_t> row_ptr(a.rows() + 1, 0);
    std::vector<index_t> cols;
    std::vector<double> vals;
    cols.reserve(a.nnz() + b.nnz());
    vals.reserve(a.nnz() + b.nnz());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        std::size_t ka = ap[i];
        std::size_t kb = bp[i];
        while (ka < ap[i + 1] || kb < bp[i + 1]) {
            if (kb == bp[i + 1] || (ka < ap[i + 1] && ac[ka] < bc[kb])) {
                cols.push_back(ac[ka]);
                vals.push_back(av[ka++]);
            } else if (ka == ap[i + 1] || bc[kb] < ac[ka]) {
                cols.push_back(bc[kb]);
                vals.push_back(beta * bv[kb++]);
            } else {
                cols.push_back(ac[ka]);
                vals.push_back(av[ka++] + beta * bv[kb++]);
            }
        }
        row_ptr[i + 1] = cols.size();
    }
    return CsrMatrix(a.rows(), a.cols(), std::move(row_ptr), std::move(cols), std::move(vals));
}

inline CsrMatrix transpose(const CsrMatrix& a) {
    std::vector<std::size_t> row_ptr(a.cols() + 1, 0);
    for (const index_t c : a.col_idx()) {
        ++row_ptr[c + 1];
    }
    std::partial_sum(row_ptr.begin(), row_ptr.end(), row_ptr.begin());
    std::vector<index_t> cols(a.nnz());
    std::vector<double> vals(a.nnz());
    std::vector<std::size_t> fill(row_ptr.begin(), row_ptr.end() - 1);
    const auto ap = a.row_ptr();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = ap[i]; k < ap[i + 1]; ++k) {
            const std::size_t slot = fill[a.col_idx()[k]]++;
            cols[slot] = static_cast<index_t>(i);
            vals[slot] = a.values()[k];
        }
    }
    return CsrMatrix(a.cols(), a.rows(), std::move(row_ptr), std::move(cols), std::move(vals));
}

/// Sparse product a * b (Gustavson, dense accumulator per row).
inline CsrMatrix multiply(const CsrMatrix& a, const CsrMatrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("multiply: dimension mismatch");
    }
    constexpr auto unset = static_cast<std::size_t>(-1);
    std::vector<std::size_t> marker(b.cols(), unset);
    std::vector<double> accum(b.cols(), 0.0);
    std::vector<index_t> row_cols;
    std::vector<std::size_t> row_ptr(a.rows() + 1, 0);
    std::vector<index_t> cols;
    std::vector<double> vals;
    const auto ap = a.row_ptr();
    const auto bp = b.row_ptr();
    for (std::size_t i = 0; i < a.rows(); ++i) {
        row_cols.clear();
        for (std::size_t ka = ap[i]; ka < ap[i + 1]; ++ka) {
            const index_t k = a.col_idx()[ka];
            const double aik = a.values()[ka];
            for (std::size_t kb = bp[k]; kb < bp[k + 1]; ++kb) {
                const index_t j = b.col_idx()[kb];
                if (marker[j] != i) {
                    marker[j] = i;
                    accum[j] = 0.0;
                    row_cols.push_back(j);
                }
                accum[j] += aik * b.values()[kb];
            }
        }
        std::sort(row_cols.begin(), row_cols.end());
        for (const index_t j : row_cols) {
            cols.push_back(j);
            vals.push_back(accum[j]);
        }
        row_ptr[i + 1] = cols.size();
    }
    return CsrMatrix(a.rows(), b.cols(), std::move(row_ptr), std::move(cols), std::move(vals));
}

/// Rows and columns of `a` restricted to `keep` (given in increasing
/// order); `position[j]` maps an original index to its kept index or -1.
inline CsrMatrix submatrix(const CsrMatrix& a, std::span<const index_t> keep,
                           std::span<const std::int64_t> position) {
    std::vector<std::size_t> row_ptr(keep.size() + 1, 0);
    std::vector<index_t> cols;
    std::vector<double> vals;
    const auto ap = a.row_ptr();
    for (std::size_t r = 0; r < keep.size(); ++r) {
        const index_t i = keep[r];
        for (std::size_t k = ap[i]; k < ap[i + 1]; ++k) {
            const std::int64_t c = position[a.col_idx()[k]];
            if (c >= 0) {
                cols.push_back(static_cast<index_t>(c));
                vals.push_back(a.values()[k]);
            }
        }
        row_ptr[r + 1] = cols.size();
    }
    return CsrMatrix(keep.size(), keep.size(), std::move(row_ptr), std::move(cols), std::move(vals));
}

inline double dot(std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        s += x[i] * y[i];
    }
    return s;
}

inline double norm2(std::span<const double> x) { return std::sqrt(dot(x, x)); }

}  // namespace homog
