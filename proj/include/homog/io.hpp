#pragma once

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "homog/assembly.hpp"
#include "homog/cell.hpp"
#include "homog/mesh.hpp"
#include "homog/recon.hpp"
#include "homog/sparse.hpp"

namespace homog::io {

inline constexpr int full_precision = std::numeric_limits<double>::max_digits10;

/// One record per line: `node i x y`, `element e n0 n1 n2 n3`,
/// `edge a b tag`.
inline void write_mesh(std::ostream& os, const StructuredMesh& mesh) {
    os << std::setprecision(full_precision);
    os << "mesh " << mesh.nx() << ' ' << mesh.ny() << '\n';
    for (std::size_t i = 0; i < mesh.nodes().size(); ++i) {
        os << "node " << i << ' ' << mesh.nodes()[i].x << ' ' << mesh.nodes()[i].y << '\n';
    }
    for (std::size_t e = 0; e < mesh.elements().size(); ++e) {
        const auto& el = mesh.elements()[e];
        os << "element " << e << ' ' << el[0] << ' ' << el[1] << ' ' << el[2] << ' ' << el[3] << '\n';
    }
    for (const auto& edge : mesh.boundary_edges()) {
        os << "edge " << edge.nodes[0] << ' ' << edge.nodes[1] << ' ' << to_string(edge.tag) << '\n';
    }
}

/// Coordinate format, one `row col value` triple per stored entry.
inline void write_matrix(std::ostream& os, const CsrMatrix& a) {
    os << std::setprecision(full_precision);
    os << a.rows() << ' ' << a.cols() << ' ' << a.nnz() << '\n';
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) {
            os << i << ' ' << a.col_idx()[k] << ' ' << a.values()[k] << '\n';
        }
    }
}

/// Whitespace-separated `x y u` per node.
inline void write_solution(std::ostream& os, const StructuredMesh& mesh, std::span<const double> u) {
    os << std::setprecision(full_precision);
    for (std::size_t i = 0; i < mesh.nodes().size(); ++i) {
        os << mesh.nodes()[i].x << ' ' << mesh.nodes()[i].y << ' ' << u[i] << '\n';
    }
}

inline void write_solution_csv(std::ostream& os, const StructuredMesh& mesh, std::span<const double> u) {
    os << std::setprecision(full_precision);
    os << "x,y,u\n";
    for (std::size_t i = 0; i < mesh.nodes().size(); ++i) {
        os << mesh.nodes()[i].x << ',' << mesh.nodes()[i].y << ',' << u[i] << '\n';
    }
}

/// Per element and Gauss point: `element,gauss,x,y,du_dx,du_dy`.
inline void write_gradient_csv(std::ostream& os, const StructuredMesh& mesh, const ReconstructedGradient& grad) {
    os << std::setprecision(full_precision);
    os << "element,gauss,x,y,du_dx,du_dy\n";
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const Point2 origin = mesh.nodes()[mesh.elements()[e][0]];
        for (std::size_t g = 0; g < 4; ++g) {
            const auto& gp = q1::gauss_points[g];
            const auto& v = grad.at(e, g);
            os << e << ',' << g << ',' << origin.x + gp[0] * mesh.hx() << ',' << origin.y + gp[1] * mesh.hy()
               << ',' << v[0] << ',' << v[1] << '\n';
        }
    }
}

/// Header with M, kappa1, kappa2, rho and A_hat, then one line
/// `dof N1 N2` per periodic unknown.
inline void write_correctors(std::ostream& os, const CorrectorSet& corr, const MicrostructureSpec& spec) {
    os << std::setprecision(full_precision);
    os << "# periodic correctors\n";
    os << "M " << corr.resolution << '\n';
    os << "kappa1 " << spec.kappa1 << '\n';
    os << "kappa2 " << spec.kappa2 << '\n';
    os << "rho " << spec.rho << '\n';
    os << "a_hat " << corr.a_hat.v[0] << ' ' << corr.a_hat.v[1] << ' ' << corr.a_hat.v[2] << ' '
       << corr.a_hat.v[3] << '\n';
    os << "nodes " << corr.nodal[0].size() << '\n';
    for (std::size_t i = 0; i < corr.nodal[0].size(); ++i) {
        os << i << ' ' << corr.nodal[0][i] << ' ' << corr.nodal[1][i] << '\n';
    }
}

struct CorrectorFileHeader {
    int resolution = 0;
    MicrostructureSpec spec;
    Tensor2 a_hat;
};

/// Parses a corrector file and rebuilds the set for `spec`. Returns nullopt
/// when the file describes another microstructure or resolution, or when
/// the stored A_hat disagrees with the one recomputed from nodal values.
inline std::optional<CorrectorSet> read_correctors(std::istream& is, const MicrostructureSpec& spec, int per_cell) {
    CorrectorFileHeader h;
    std::size_t count = 0;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "M") {
            ls >> h.resolution;
        } else if (key == "kappa1") {
            ls >> h.spec.kappa1;
        } else if (key == "kappa2") {
            ls >> h.spec.kappa2;
        } else if (key == "rho") {
            ls >> h.spec.rho;
        } else if (key == "a_hat") {
            ls >> h.a_hat.v[0] >> h.a_hat.v[1] >> h.a_hat.v[2] >> h.a_hat.v[3];
        } else if (key == "nodes") {
            ls >> count;
            break;
        } else {
            throw std::runtime_error("read_correctors: unexpected header key '" + key + "'");
        }
        if (!ls) {
            throw std::runtime_error("read_correctors: malformed header line '" + line + "'");
        }
    }
    if (h.resolution != per_cell || h.spec.kappa1 != spec.kappa1 || h.spec.kappa2 != spec.kappa2 ||
        h.spec.rho != spec.rho) {
        return std::nullopt;
    }
    if (count != static_cast<std::size_t>(per_cell) * per_cell) {
        throw std::runtime_error("read_correctors: node count does not match M");
    }
    std::array<std::vector<double>, 2> nodal{std::vector<double>(count), std::vector<double>(count)};
    for (std::size_t k = 0; k < count; ++k) {
        std::size_t idx = 0;
        if (!(is >> idx >> nodal[0][k] >> nodal[1][k]) || idx != k) {
            throw std::runtime_error("read_correctors: malformed node table");
        }
    }
    CorrectorSet corr = assemble_corrector_set(cell_coefficient(spec, per_cell), std::move(nodal));
    for (std::size_t k = 0; k < 4; ++k) {
        if (std::abs(corr.a_hat.v[k] - h.a_hat.v[k]) > 1e-12 * std::max(1.0, std::abs(h.a_hat.v[k]))) {
            return std::nullopt;
        }
    }
    return corr;
}

}  // namespace homog::io
