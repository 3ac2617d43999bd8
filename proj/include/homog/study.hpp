#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "homog/assembly.hpp"
#include "homog/cell.hpp"
#include "homog/contact.hpp"
#include "homog/io.hpp"
#include "homog/metrics.hpp"

namespace homog {

enum class ProblemKind { contact, robin };

struct GridSpec {
    int cells = 0;     // N
    int per_cell = 0;  // M
    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

struct StudyConfig {
    ProblemKind problem = ProblemKind::contact;
    MicrostructureSpec micro{1.0, 2.0, 0.25};
    double alpha = 0.5;
    double f = 1.0;
    double g = 1.0;
    std::vector<GridSpec> grids{{16, 32}, {32, 32}, {64, 32}};
    double linear_tolerance = 1e-10;
    double fixed_point_tolerance = 1e-10;
    std::size_t max_iterations = 200;
    bool semi_implicit = false;
    Preconditioner preconditioner = Preconditioner::multigrid;
    std::filesystem::path output_dir = "study_out";
};

inline std::string to_string(ProblemKind k) { return k == ProblemKind::contact ? "contact" : "robin"; }

inline ProblemKind parse_problem_kind(const std::string& s) {
    if (s == "contact") {
        return ProblemKind::contact;
    }
    if (s == "robin") {
        return ProblemKind::robin;
    }
    throw std::invalid_argument("unknown problem kind '" + s + "' (expected contact or robin)");
}

inline std::string to_string(Preconditioner p) {
    switch (p) {
        case Preconditioner::none: return "none";
        case Preconditioner::diagonal: return "diagonal";
        case Preconditioner::multigrid: return "multigrid";
    }
    return "unknown";
}

inline Preconditioner parse_preconditioner(const std::string& s) {
    if (s == "none") {
        return Preconditioner::none;
    }
    if (s == "diagonal" || s == "jacobi") {
        return Preconditioner::diagonal;
    }
    if (s == "multigrid") {
        return Preconditioner::multigrid;
    }
    throw std::invalid_argument("unknown preconditioner '" + s + "'");
}

/// "16x32,32x32" -> {(16, 32), (32, 32)}
inline std::vector<GridSpec> parse_grids(const std::string& text) {
    std::vector<GridSpec> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }),
                   item.end());
        if (item.empty()) {
            continue;
        }
        const auto x = item.find('x');
        if (x == std::string::npos) {
            throw std::invalid_argument("grid '" + item + "' is not of the form NxM");
        }
        try {
            std::size_t used_n = 0;
            std::size_t used_m = 0;
            const std::string n = item.substr(0, x);
            const std::string m = item.substr(x + 1);
            GridSpec gs{std::stoi(n, &used_n), std::stoi(m, &used_m)};
            if (used_n != n.size() || used_m != m.size()) {
                throw std::invalid_argument("trailing characters");
            }
            out.push_back(gs);
        } catch (const std::exception&) {
            throw std::invalid_argument("grid '" + item + "' is not of the form NxM");
        }
    }
    return out;
}

inline std::string format_grids(const std::vector<GridSpec>& grids) {
    std::string s;
    for (const auto& g : grids) {
        if (!s.empty()) {
            s += ',';
        }
        s += std::to_string(g.cells) + "x" + std::to_string(g.per_cell);
    }
    return s;
}

/// Reads a key=value file with [section] headers. Absent keys keep the
/// defaults of `base`; unknown sections or keys are errors.
inline StudyConfig load_config(std::istream& is, StudyConfig base = {}) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    const std::map<std::string, std::vector<std::string>> known{
        {"problem", {"kind"}},
        {"microstructure", {"kappa1", "kappa2", "rho"}},
        {"physics", {"alpha", "f", "g"}},
        {"grids", {"list"}},
        {"solver", {"linear_tolerance", "fixed_point_tolerance", "max_iterations", "semi_implicit", "preconditioner"}},
        {"output", {"directory"}},
    };
    for (const auto& [section, keys] : tree) {
        const auto it = known.find(section);
        if (it == known.end() || keys.empty()) {
            throw std::invalid_argument("config: unknown section or key outside a section: '" + section + "'");
        }
        for (const auto& [key, value] : keys) {
            if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
                throw std::invalid_argument("config: unknown key '" + section + "." + key + "'");
            }
        }
    }
    StudyConfig c = std::move(base);
    const auto read = [&tree](const char* key, auto& out) {
        if (tree.get_optional<std::string>(key)) {
            out = tree.get<std::remove_reference_t<decltype(out)>>(key);
        }
    };
    try {
        if (auto v = tree.get_optional<std::string>("problem.kind")) {
            c.problem = parse_problem_kind(*v);
        }
        read("microstructure.kappa1", c.micro.kappa1);
        read("microstructure.kappa2", c.micro.kappa2);
        read("microstructure.rho", c.micro.rho);
        read("physics.alpha", c.alpha);
        read("physics.f", c.f);
        read("physics.g", c.g);
        if (auto v = tree.get_optional<std::string>("grids.list")) {
            c.grids = parse_grids(*v);
        }
        read("solver.linear_tolerance", c.linear_tolerance);
        read("solver.fixed_point_tolerance", c.fixed_point_tolerance);
        read("solver.max_iterations", c.max_iterations);
        read("solver.semi_implicit", c.semi_implicit);
        if (auto v = tree.get_optional<std::string>("solver.preconditioner")) {
            c.preconditioner = parse_preconditioner(*v);
        }
        if (auto v = tree.get_optional<std::string>("output.directory")) {
            c.output_dir = *v;
        }
    } catch (const pt::ptree_bad_data& e) {
        throw std::invalid_argument(std::string("config: bad value: ") + e.what());
    }
    return c;
}

inline StudyConfig load_config(const std::filesystem::path& path, StudyConfig base = {}) {
    std::ifstream is(path);
    if (!is) {
        throw std::invalid_argument("config: cannot open '" + path.string() + "'");
    }
    return load_config(is, std::move(base));
}

inline void write_config(std::ostream& os, const StudyConfig& c) {
    os << std::setprecision(io::full_precision);
    os << "[problem]\nkind = " << to_string(c.problem) << "\n\n";
    os << "[microstructure]\nkappa1 = " << c.micro.kappa1 << "\nkappa2 = " << c.micro.kappa2
       << "\nrho = " << c.micro.rho << "\n\n";
    os << "[physics]\nalpha = " << c.alpha << "\nf = " << c.f << "\ng = " << c.g << "\n\n";
    os << "[grids]\nlist = " << format_grids(c.grids) << "\n\n";
    os << "[solver]\nlinear_tolerance = " << c.linear_tolerance
       << "\nfixed_point_tolerance = " << c.fixed_point_tolerance << "\nmax_iterations = " << c.max_iterations
       << "\nsemi_implicit = " << (c.semi_implicit ? "true" : "false")
       << "\npreconditioner = " << to_string(c.preconditioner) << "\n\n";
    os << "[output]\ndirectory = " << c.output_dir.string() << "\n";
}

struct Violation {
    std::string field;
    std::string message;
};

/// Every violated precondition of a study; never throws.
inline std::vector<Violation> validate_config(const StudyConfig& c) {
    std::vector<Violation> out;
    const auto& m = c.micro;
    if (!(m.kappa1 > 0.0) || !(m.kappa2 > 0.0)) {
        out.push_back({"microstructure", "kappa1 and kappa2 must be positive (uniform ellipticity)"});
    }
    if (!(m.rho > 0.0 && m.rho < 0.5)) {
        out.push_back({"microstructure.rho", "geometry: rho must lie in (0, 1/2) so the inclusion fits in the cell"});
    }
    if (c.problem == ProblemKind::contact) {
        const double kmin = std::min(m.kappa1, m.kappa2);
        if (!(kmin > std::abs(c.alpha))) {
            out.push_back({"physics.alpha", "solvability gate kappa1 > |alpha| fails (kappa1 = " +
                                                std::to_string(kmin) + ", alpha = " + std::to_string(c.alpha) +
                                                ")"});
        }
        if (!BoundaryPartition::contact().uses(BoundaryTag::dirichlet)) {
            out.push_back({"problem.kind", "the Dirichlet boundary must be nonempty"});
        }
    } else if (!(c.alpha > 0.0)) {
        out.push_back({"physics.alpha", "Robin coefficient must satisfy alpha >= alpha1 > 0 (coercivity)"});
    }
    if (!std::isfinite(c.f) || !std::isfinite(c.g)) {
        out.push_back({"physics", "f and g must be finite"});
    }
    if (c.grids.empty()) {
        out.push_back({"grids.list", "at least one grid is required"});
    }
    for (const auto& g : c.grids) {
        const std::string tag = "grid " + std::to_string(g.cells) + "x" + std::to_string(g.per_cell);
        if (g.cells < 1 || g.per_cell < 2) {
            out.push_back({"grids.list", tag + ": need N >= 1 and M >= 2"});
            continue;
        }
        if ((static_cast<long long>(g.cells) * g.per_cell) % 2 != 0) {
            out.push_back({"grids.list", tag + ": N*M must be even so x = 1/2 is a node"});
        }
        if (m.rho > 0.0 && m.rho < 0.5 && !m.aligned_with(g.per_cell)) {
            out.push_back({"grids.list", tag + ": rho*M must be an integer (M divisible by 4 for rho = 0.25)"});
        }
    }
    if (!(c.linear_tolerance > 0.0 && c.linear_tolerance < 1.0)) {
        out.push_back({"solver.linear_tolerance", "must lie in (0, 1)"});
    }
    if (!(c.fixed_point_tolerance > 0.0 && c.fixed_point_tolerance < 1.0)) {
        out.push_back({"solver.fixed_point_tolerance", "must lie in (0, 1)"});
    }
    if (c.max_iterations < 1) {
        out.push_back({"solver.max_iterations", "must be at least 1"});
    }
    return out;
}

/// Cached corrector solve: reuses `correctors_M<k>.txt` in `dir` when it
/// matches the microstructure, else solves and writes it.
inline CorrectorSet correctors_cached(const MicrostructureSpec& micro, int per_cell, double tolerance,
                                      const std::filesystem::path& dir, bool* from_cache = nullptr) {
    const auto path = dir / ("correctors_M" + std::to_string(per_cell) + ".txt");
    if (std::filesystem::exists(path)) {
        std::ifstream is(path);
        try {
            if (auto corr = io::read_correctors(is, micro, per_cell)) {
                if (from_cache) {
                    *from_cache = true;
                }
                return std::move(*corr);
            }
        } catch (const std::runtime_error&) {
            // unreadable cache: solve again and overwrite
        }
    }
    if (from_cache) {
        *from_cache = false;
    }
    CorrectorSet corr = solve_correctors(micro, per_cell, SolverConfig{tolerance, 0, Preconditioner::diagonal});
    std::filesystem::create_directories(dir);
    std::ofstream os(path);
    io::write_correctors(os, corr, micro);
    return corr;
}

struct StudyRow {
    GridSpec grid;
    ErrorReport errors;
    std::size_t fine_iters = 0;
    std::size_t homog_iters = 0;
    double wall_seconds = 0.0;
    Tensor2 a_hat;
};

struct StudyResult {
    std::vector<StudyRow> rows;
    std::optional<std::array<double, 3>> rates;  // least squares over all rows
    bool ok = true;
    std::string error;
};

inline std::optional<std::array<double, 3>> study_rates(const std::vector<StudyRow>& rows) {
    std::array<std::vector<RateSample>, 3> samples;
    for (const auto& r : rows) {
        const double eps = 1.0 / r.grid.cells;
        samples[0].push_back({eps, r.errors.err0});
        samples[1].push_back({eps, r.errors.err1});
        samples[2].push_back({eps, r.errors.err2});
    }
    try {
        return std::array<double, 3>{estimate_rate(samples[0]), estimate_rate(samples[1]), estimate_rate(samples[2])};
    } catch (const std::invalid_argument&) {
        return std::nullopt;
    }
}

inline void write_study_csv(std::ostream& os, const StudyResult& result) {
    os << "N,M,ERR0,ERR1,ERR2,fine_iters,homog_iters,wall_seconds\n";
    for (const auto& r : result.rows) {
        os << r.grid.cells << ',' << r.grid.per_cell << ',' << std::setprecision(10) << r.errors.err0 << ','
           << r.errors.err1 << ',' << r.errors.err2 << ',' << r.fine_iters << ',' << r.homog_iters << ','
           << std::fixed << std::setprecision(3) << r.wall_seconds << std::defaultfloat << '\n';
    }
    if (result.rates) {
        const auto& q = *result.rates;
        os << "rate,," << std::setprecision(4) << q[0] << ',' << q[1] << ',' << q[2] << ",,,\n";
    }
}

inline void write_summary(std::ostream& os, const StudyConfig& cfg, const StudyResult& result) {
    os << "problem: " << to_string(cfg.problem) << '\n';
    os << "microstructure: kappa1=" << cfg.micro.kappa1 << " kappa2=" << cfg.micro.kappa2 << " rho=" << cfg.micro.rho
       << '\n';
    os << "physics: alpha=" << cfg.alpha << " f=" << cfg.f << " g=" << cfg.g << '\n';
    os << "iteration: " << (cfg.semi_implicit ? "semi-implicit" : "paper (explicit boundary term)") << '\n';
    if (cfg.problem == ProblemKind::contact) {
        os << "solvability gate kappa1 > |alpha|: "
           << (std::min(cfg.micro.kappa1, cfg.micro.kappa2) > std::abs(cfg.alpha) ? "ok" : "FAILED") << '\n';
    } else {
        os << "Robin coercivity alpha > 0: " << (cfg.alpha > 0.0 ? "ok" : "FAILED") << '\n';
    }
    os << std::setprecision(10);
    for (const auto& r : result.rows) {
        os << "N=" << r.grid.cells << " M=" << r.grid.per_cell << ": A_hat = [" << r.a_hat(0, 0) << ' '
           << r.a_hat(0, 1) << "; " << r.a_hat(1, 0) << ' ' << r.a_hat(1, 1) << "], ERR0=" << r.errors.err0
           << " ERR1=" << r.errors.err1 << " ERR2=" << r.errors.err2 << '\n';
    }
    if (result.rates) {
        os << std::setprecision(4);
        os << "least-squares rates: ERR0 " << (*result.rates)[0] << ", ERR1 " << (*result.rates)[1] << ", ERR2 "
           << (*result.rates)[2] << '\n';
        std::array<std::vector<RateSample>, 3> samples;
        for (const auto& r : result.rows) {
            samples[0].push_back({1.0 / r.grid.cells, r.errors.err0});
            samples[1].push_back({1.0 / r.grid.cells, r.errors.err1});
            samples[2].push_back({1.0 / r.grid.cells, r.errors.err2});
        }
        const char* names[3] = {"ERR0", "ERR1", "ERR2"};
        for (std::size_t k = 0; k < 3; ++k) {
            os << "pairwise rates " << names[k] << ':';
            try {
                for (const double q : pairwise_rates(samples[k])) {
                    os << ' ' << q;
                }
            } catch (const std::invalid_argument&) {
                os << " n/a";
            }
            os << '\n';
        }
    }
    os << "status: " << (result.ok ? "ok" : "FAILED: " + result.error) << '\n';
}

/// Solves one (N, M) grid point: fine and homogenized problems on the same
/// NM x NM mesh, then the three error measures.
inline StudyRow run_grid_point(const StudyConfig& cfg, const GridSpec& grid, const CorrectorSet& corr) {
    const auto t0 = std::chrono::steady_clock::now();
    StudyRow row;
    row.grid = grid;
    row.a_hat = corr.a_hat;
    const SolverConfig linear{cfg.linear_tolerance, 0, cfg.preconditioner};
    std::vector<double> u_eps;
    std::vector<double> u0;
    StructuredMesh mesh;
    if (cfg.problem == ProblemKind::contact) {
        mesh = build_domain_mesh(grid.cells, grid.per_cell, BoundaryPartition::contact());
        const ContactParameters params{cfg.f, cfg.g, cfg.alpha, BoundaryPartition::contact()};
        FixedPointOptions opts;
        opts.tol = cfg.fixed_point_tolerance;
        opts.max_iter = cfg.max_iterations;
        opts.variant = cfg.semi_implicit ? IterationVariant::semi_implicit : IterationVariant::paper;
        opts.linear = linear;
        {
            auto fine = solve_fine(mesh, cfg.micro, grid.cells, params, opts);
            row.fine_iters = fine.report.iterations;
            u_eps = std::move(fine.u);
        }
        auto hom = solve_homogenized(mesh, corr.a_hat, params, opts);
        row.homog_iters = hom.report.iterations;
        u0 = std::move(hom.u);
    } else {
        mesh = build_domain_mesh(grid.cells, grid.per_cell, BoundaryPartition::all(BoundaryTag::robin));
        {
            const auto k = assemble_stiffness(mesh, sample_coefficient(cfg.micro, mesh, grid.cells));
            auto fine = robin_solve(mesh, k, cfg.alpha, cfg.f, cfg.g, linear);
            row.fine_iters = fine.report.iterations;
            u_eps = std::move(fine.u);
        }
        const auto k = assemble_stiffness(mesh, corr.a_hat);
        auto hom = robin_solve(mesh, k, cfg.alpha, cfg.f, cfg.g, linear);
        row.homog_iters = hom.report.iterations;
        u0 = std::move(hom.u);
    }
    row.errors = compute_errors(u_eps, u0, corr, mesh, grid.cells);
    row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

/// Runs every grid of the study in config order and writes study.csv,
/// summary.txt and the corrector caches into the output directory. A
/// failing solve stops the study; the rows done so far are still written.
inline StudyResult run_study(const StudyConfig& cfg, std::ostream* log = nullptr) {
    StudyResult result;
    const auto violations = validate_config(cfg);
    if (!violations.empty()) {
        result.ok = false;
        result.error = violations.front().message;
        return result;
    }
    std::filesystem::create_directories(cfg.output_dir);
    try {
        for (const auto& grid : cfg.grids) {
            bool cached = false;
            const CorrectorSet corr =
                correctors_cached(cfg.micro, grid.per_cell, cfg.linear_tolerance, cfg.output_dir, &cached);
            if (log) {
                *log << "N=" << grid.cells << " M=" << grid.per_cell << " (correctors "
                     << (cached ? "from cache" : "solved") << ") ..." << std::flush;
            }
            result.rows.push_back(run_grid_point(cfg, grid, corr));
            if (log) {
                const auto& r = result.rows.back();
                *log << " ERR0=" << r.errors.err0 << " ERR1=" << r.errors.err1 << " ERR2=" << r.errors.err2 << " ("
                     << r.wall_seconds << " s)\n";
            }
        }
    } catch (const std::exception& e) {
        result.ok = false;
        result.error = e.what();
        if (log) {
            *log << "\nerror: " << e.what() << '\n';
        }
    }
    result.rates = study_rates(result.rows);
    {
        std::ofstream os(cfg.output_dir / "study.csv");
        write_study_csv(os, result);
    }
    {
        std::ofstream os(cfg.output_dir / "summary.txt");
        write_summary(os, cfg, result);
    }
    return result;
}

struct CellRow {
    int per_cell = 0;
    Tensor2 a_hat;
    std::optional<double> change;  // max |A_hat(M) - A_hat(previous M)|
};

/// A_hat for each resolution, with successive differences. When
/// `cache_dir` is set, corrector sets are cached there.
inline std::vector<CellRow> run_cell_only(const MicrostructureSpec& micro, const std::vector<int>& resolutions,
                                          double tolerance, const std::optional<std::filesystem::path>& cache_dir) {
    std::vector<CellRow> rows;
    for (const int m : resolutions) {
        const CorrectorSet corr = cache_dir ? correctors_cached(micro, m, tolerance, *cache_dir)
                                            : solve_correctors(micro, m, {tolerance, 0, Preconditioner::diagonal});
        CellRow row{m, corr.a_hat, std::nullopt};
        if (!rows.empty()) {
            double d = 0.0;
            for (std::size_t k = 0; k < 4; ++k) {
                d = std::max(d, std::abs(corr.a_hat.v[k] - rows.back().a_hat.v[k]));
            }
            row.change = d;
        }
        rows.push_back(row);
    }
    return rows;
}

/// Same table for an arbitrary cell coefficient family (e.g. laminates).
template <class CoefficientFor>
std::vector<CellRow> run_cell_only(CoefficientFor&& coefficient_for, const std::vector<int>& resolutions,
                                   double tolerance) {
    std::vector<CellRow> rows;
    for (const int m : resolutions) {
        const CorrectorSet corr = solve_correctors(coefficient_for(m), {tolerance, 0, Preconditioner::diagonal});
        CellRow row{m, corr.a_hat, std::nullopt};
        if (!rows.empty()) {
            double d = 0.0;
            for (std::size_t k = 0; k < 4; ++k) {
                d = std::max(d, std::abs(corr.a_hat.v[k] - rows.back().a_hat.v[k]));
            }
            row.change = d;
        }
        rows.push_back(row);
    }
    return rows;
}

inline void write_cell_csv(std::ostream& os, const std::vector<CellRow>& rows) {
    os << "M,A11,A12,A21,A22,change\n" << std::setprecision(io::full_precision);
    for (const auto& r : rows) {
        os << r.per_cell << ',' << r.a_hat(0, 0) << ',' << r.a_hat(0, 1) << ',' << r.a_hat(1, 0) << ','
           << r.a_hat(1, 1) << ',';
        if (r.change) {
            os << *r.change;
        }
        os << '\n';
    }
}

}  // namespace homog
