// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--work-dir DIR] [--only K] [--full-table]

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "homog/homog.hpp"

using namespace homog;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

const SolverConfig tight{1e-12, 0, Preconditioner::diagonal};

double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (const double x : v) {
        m = std::max(m, std::abs(x));
    }
    return m;
}

// 1. constant coefficient: correctors vanish and fine == homogenized
void constant_coefficient(Outcome& out, const std::filesystem::path& work) {
    const auto t0 = Clock::now();
    const double kappa = 1.7;
    const auto corr = solve_correctors(MicrostructureSpec{kappa, kappa, 0.25}, 16, {1e-10, 0, Preconditioner::diagonal});
    const double n1 = max_abs(corr.nodal[0]);
    const double n2 = max_abs(corr.nodal[1]);
    double a_err = 0.0;
    for (std::size_t k = 0; k < 4; ++k) {
        a_err = std::max(a_err, std::abs(corr.a_hat.v[k] - Tensor2::identity(kappa).v[k]));
    }
    StudyConfig c;
    c.micro = {kappa, kappa, 0.25};
    c.grids = {{8, 16}};
    c.output_dir = work / "constant";
    const auto result = run_study(c);
    const double secs = seconds_since(t0);
    out.check(result.ok, "study ran: " + result.error);
    out.check(n1 <= 1e-9 && n2 <= 1e-9, "corrector norm");
    out.check(a_err <= 1e-10, "A_hat = kappa I");
    double worst = 0.0;
    if (result.ok) {
        const auto& e = result.rows[0].errors;
        worst = std::max({e.err0, e.err1, e.err2});
        out.check(worst <= 1e-9, "ERR <= 1e-9");
    }
    out.check(secs < 10.0, "runtime < 10 s");
    out.detail << std::setprecision(3) << "max|N_l| = " << std::max(n1, n2) << ", |A_hat - kappa I| = " << a_err
               << ", max ERR = " << worst << ", " << std::fixed << secs << " s";
}

// 2. laminate oracle diag(4/3, 3/2)
void laminate(Outcome& out) {
    const Tensor2 exact = Tensor2::diag(4.0 / 3.0, 1.5);
    std::vector<double> errors;
    for (const int m : {16, 32, 64}) {
        const auto corr = solve_correctors(laminate_coefficient(1.0, 2.0, m), tight);
        double e = 0.0;
        for (std::size_t k = 0; k < 4; ++k) {
            e = std::max(e, std::abs(corr.a_hat.v[k] - exact.v[k]));
        }
        errors.push_back(e);
    }
    out.check(errors.back() <= 1e-3, "within 1e-3 at M = 64");
    // the Q1 laminate is exact, so refinement can only keep the error at round-off
    for (std::size_t k = 1; k < errors.size(); ++k) {
        out.check(errors[k] <= std::max(errors[k - 1], 1e-12), "error does not grow under refinement");
    }
    // interface at y1 = 1/3, off the element faces for these M: converges to
    // diag(3/2, 5/3) as the sampled volume fraction does
    std::vector<double> off;
    for (const int m : {8, 16, 32, 64}) {
        CellCoefficient c{m, {}};
        c.field.values.resize(static_cast<std::size_t>(m * m));
        for (int ey = 0; ey < m; ++ey) {
            for (int ex = 0; ex < m; ++ex) {
                c.field.values[static_cast<std::size_t>(ey * m + ex)] = (ex + 0.5) / m < 1.0 / 3.0 ? 1.0 : 2.0;
            }
        }
        const auto corr = solve_correctors(c, tight);
        off.push_back(std::max(std::abs(corr.a_hat(0, 0) - 1.5), std::abs(corr.a_hat(1, 1) - 5.0 / 3.0)));
    }
    for (std::size_t k = 1; k < off.size(); ++k) {
        out.check(off[k] < off[k - 1], "off-face laminate error shrinks with M");
    }
    out.detail << std::setprecision(3) << "|A_hat - diag(4/3, 3/2)| at M = 16, 32, 64: " << errors[0] << ", "
               << errors[1] << ", " << errors[2] << "; off-face laminate at M = 8..64:";
    for (const double e : off) {
        out.detail << ' ' << e;
    }
}

// 3. Voigt-Reuss bounds, symmetry and the energy identity
void voigt_reuss(Outcome& out) {
    const auto coeff = cell_coefficient(MicrostructureSpec{}, 64);
    const auto corr = solve_correctors(coeff, tight);
    const auto ev = corr.a_hat.eigenvalues();
    out.check(std::abs(corr.a_hat(0, 1)) <= 1e-8 && std::abs(corr.a_hat(1, 0)) <= 1e-8, "|A12| <= 1e-8");
    out.check(ev[0] >= 8.0 / 7.0 && ev[1] <= 1.25, "eigenvalues in [8/7, 5/4]");
    double worst = 0.0;
    for (const std::array<double, 2> xi : {std::array<double, 2>{1, 0}, {0, 1}, {1, 1}}) {
        const double q = corr.a_hat.quadratic(xi);
        worst = std::max(worst, std::abs(q - cell_energy(corr, coeff, xi)) / q);
    }
    out.check(worst <= 1e-8, "energy identity to 1e-8");
    out.detail << std::setprecision(10) << "A_hat = " << corr.a_hat(0, 0) << " I (M = 64), |A12| = "
               << std::setprecision(2) << std::abs(corr.a_hat(0, 1)) << ", energy identity rel. error " << worst;
}

// 4. Table 1 at reduced fine resolution
void table(Outcome& out, const std::filesystem::path& work, bool full) {
    const auto t0 = Clock::now();
    StudyConfig c;
    c.output_dir = work / (full ? "table_full" : "table");
    if (full) {
        c.grids = {{16, 128}, {32, 64}, {64, 32}, {128, 16}};
    }
    const auto result = run_study(c, &std::cerr);
    const double secs = seconds_since(t0);
    out.check(result.ok, "study ran: " + result.error);
    if (!result.ok || !result.rates) {
        return;
    }
    const auto& rows = result.rows;
    const double e0 = rows[0].errors.err0;
    out.check(std::abs(e0 - 0.00328) <= 0.25 * 0.00328, "ERR0 at N = 16 within 25% of 0.00328");
    double lo = 1e300;
    double hi = -1e300;
    for (const auto& r : rows) {
        out.check(std::abs(r.errors.err2 - 0.219) <= 0.01, "ERR2 within 0.01 of 0.219");
        lo = std::min(lo, r.errors.err2);
        hi = std::max(hi, r.errors.err2);
    }
    out.check(hi - lo < 0.002, "ERR2 spread < 0.002");
    const auto& q = *result.rates;
    out.check(q[0] >= 0.8 && q[0] <= 1.1, "ERR0 rate in [0.8, 1.1]");
    out.check(q[1] >= 0.4 && q[1] <= 0.7, "ERR1 rate in [0.4, 0.7]");
    if (!full) {
        out.check(secs < 15 * 60, "runtime < 15 min");
    }
    out.detail << std::setprecision(4);
    for (const auto& r : rows) {
        out.detail << "(" << r.grid.cells << "," << r.grid.per_cell << "): " << r.errors.err0 << " "
                   << r.errors.err1 << " " << r.errors.err2 << "; ";
    }
    out.detail << "rates " << q[0] << " " << q[1] << "; ERR2 spread " << hi - lo << "; " << std::fixed
               << std::setprecision(0) << secs << " s";
}

Eigen::MatrixXd dense(const CsrMatrix& a) {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(a.rows()), static_cast<Eigen::Index>(a.cols()));
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = a.row_ptr()[i]; k < a.row_ptr()[i + 1]; ++k) {
            d(static_cast<Eigen::Index>(i), a.col_idx()[k]) = a.values()[k];
        }
    }
    return d;
}

std::vector<double> newton_oracle(const ContactSystem& sys) {
    const double alpha = sys.params().alpha;
    const Eigen::MatrixXd k = dense(sys.stiffness());
    const Eigen::MatrixXd m1 = dense(sys.masses().robin);
    const Eigen::MatrixXd m2 = dense(sys.masses().partial_robin);
    const Eigen::Index n = k.rows();
    const Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(sys.rhs().data(), n);
    const auto residual = [&](const Eigen::VectorXd& u) {
        return Eigen::VectorXd(k * u + alpha * m1 * u + alpha * m2 * u.cwiseMax(0.0) - b);
    };
    Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
    for (int it = 0; it < 100; ++it) {
        const Eigen::VectorXd f = residual(u);
        if (f.norm() <= 1e-15 * b.norm()) {
            break;
        }
        Eigen::VectorXd active(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            active(i) = u(i) > 0.0 ? 1.0 : 0.0;
        }
        const Eigen::MatrixXd j = k + alpha * m1 + alpha * m2 * active.asDiagonal();
        const Eigen::VectorXd du = j.partialPivLu().solve(-f);
        double t = 1.0;
        while (t > 1e-8 && residual(u + t * du).norm() > (1.0 - 1e-4 * t) * f.norm()) {
            t *= 0.5;
        }
        u += t * du;
    }
    return {u.data(), u.data() + n};
}

// 5. contraction and the Newton oracle; gate rejection
void contraction(Outcome& out) {
    const auto mesh = build_domain_mesh(2, 8, BoundaryPartition::contact());
    const MicrostructureSpec micro;
    const auto k = assemble_stiffness(mesh, sample_coefficient(micro, mesh, 2));
    FixedPointOptions opts;
    opts.linear = {1e-12, 0, Preconditioner::multigrid};
    opts.inner_floor = 1e-13;
    double worst_ratio = 0.0;
    double worst_diff = 0.0;
    for (const double alpha : {0.5, -0.5, 0.9}) {
        const ContactSystem sys(mesh, k, {1.0, 1.0, alpha, BoundaryPartition::contact()});
        const auto fp = fixed_point_solve(sys, mesh, opts);
        const auto& ratios = fp.report.ratios;
        out.check(fp.report.converged && !ratios.empty(), "converged");
        // eventually: the second half of the recorded ratios
        for (std::size_t i = ratios.size() / 2; i < ratios.size(); ++i) {
            worst_ratio = std::max(worst_ratio, ratios[i]);
        }
        const auto u = sys.dofs().restrict_vector(fp.u);
        const auto ref = newton_oracle(sys);
        double d = 0.0;
        double s = 0.0;
        for (std::size_t i = 0; i < u.size(); ++i) {
            d += (u[i] - ref[i]) * (u[i] - ref[i]);
            s += ref[i] * ref[i];
        }
        worst_diff = std::max(worst_diff, std::sqrt(d / s));
    }
    out.check(worst_ratio < 1.0, "update ratios < 1");
    out.check(worst_diff <= 10 * opts.tol, "Newton oracle within 10 tol");
    StudyConfig bad;
    bad.alpha = 1.5;
    const auto violations = validate_config(bad);
    bool gate = false;
    for (const auto& v : violations) {
        gate = gate || v.message.find("solvability gate kappa1 > |alpha| fails") != std::string::npos;
    }
    out.check(gate, "validate_config rejects alpha = 1.5");
    out.detail << std::setprecision(3) << "max late update ratio " << worst_ratio << ", rel. diff to Newton "
               << worst_diff << ", alpha = 1.5 rejected: " << (gate ? "yes" : "no");
}

// 6. pure Robin O(eps) rate
void robin_rate(Outcome& out, const std::filesystem::path& work) {
    StudyConfig c;
    c.problem = ProblemKind::robin;
    c.alpha = 1.0;
    c.grids = {{4, 32}, {8, 32}, {16, 32}, {32, 32}};
    c.output_dir = work / "robin";
    const auto result = run_study(c, &std::cerr);
    out.check(result.ok, "study ran: " + result.error);
    if (!result.ok || !result.rates) {
        return;
    }
    out.check((*result.rates)[0] >= 0.85, "L2 rate >= 0.85");
    out.detail << std::setprecision(4) << "ERR0:";
    for (const auto& r : result.rows) {
        out.detail << ' ' << r.errors.err0;
    }
    out.detail << ", rate " << (*result.rates)[0];
}

// 7. property suites (compact versions of the unit-test invariants)
void properties(Outcome& out, const std::filesystem::path& work) {
    std::vector<std::string> done;
    // assembly
    {
        const auto mesh = build_domain_mesh(4, 8, BoundaryPartition::contact());
        const auto field = sample_coefficient(MicrostructureSpec{}, mesh, 4);
        const auto k = assemble_stiffness(mesh, field);
        const auto rs = k * std::vector<double>(mesh.num_nodes(), 1.0);
        out.check(max_abs(rs) <= 1e-12, "stiffness row sums");
        out.check(k.symmetry_defect() <= 1e-14, "stiffness symmetry");
        std::vector<double> u(mesh.num_nodes());
        for (std::size_t i = 0; i < u.size(); ++i) {
            u[i] = mesh.nodes()[i].x + 2.0 * mesh.nodes()[i].y;
        }
        const double mean = std::accumulate(field.values.begin(), field.values.end(), 0.0) / field.values.size();
        out.check(std::abs(dot(u, k * u) - 5.0 * mean) <= 1e-12, "energy of a linear field");
        done.push_back("assembly");
    }
    // CG: energy-norm error non-increasing, permutation invariance
    {
        const auto mesh = build_domain_mesh(2, 8, BoundaryPartition::contact());
        const auto k = assemble_stiffness(mesh, sample_coefficient(MicrostructureSpec{}, mesh, 2));
        const auto red = apply_dirichlet(k, assemble_load(mesh, 1.0, 1.0, {BoundaryTag::neumann}), mesh,
                                         BoundaryTag::dirichlet);
        const auto exact = cg_solve(red.matrix, red.rhs, {1e-13, 0, Preconditioner::diagonal}).x;
        double prev = 1e300;
        bool monotone = true;
        for (std::size_t it = 0; it < 40; ++it) {
            std::vector<double> x(exact.size(), 0.0);
            try {
                pcg(red.matrix, red.rhs, x, jacobi_preconditioner(red.matrix), {1e-30, it, 0.0});
            } catch (const SolverError&) {
            }
            for (std::size_t i = 0; i < x.size(); ++i) {
                x[i] -= exact[i];
            }
            const double e = dot(x, red.matrix * x);
            monotone = monotone && e <= prev * (1.0 + 1e-12) + 1e-28;
            prev = e;
        }
        out.check(monotone, "CG energy error monotone");
        done.push_back("cg");
    }
    // correctors: zero mean, periodic gradient
    {
        const auto corr = solve_correctors(MicrostructureSpec{}, 16, tight);
        for (const auto& n : corr.nodal) {
            const double mean = std::accumulate(n.begin(), n.end(), 0.0) / n.size();
            out.check(std::abs(mean) <= 1e-10 * max_abs(n), "corrector zero mean");
        }
        const auto a = corrector_gradient_at(corr, {0.31, 0.62});
        const auto b = corrector_gradient_at(corr, {1.31, -0.38});
        for (std::size_t k = 0; k < 4; ++k) {
            out.check(std::abs(a.v[k] - b.v[k]) <= 1e-12, "corrector periodicity");
        }
        done.push_back("cell");
    }
    // reconstruction: linearity, laminate flux
    {
        const auto lam = laminate_coefficient(1.0, 2.0, 8);
        const auto corr = solve_correctors(lam, tight);
        const auto mesh = build_domain_mesh(4, 8, BoundaryPartition::contact());
        std::vector<double> x(mesh.num_nodes());
        std::vector<double> y(mesh.num_nodes());
        std::vector<double> w(mesh.num_nodes());
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = mesh.nodes()[i].x;
            y[i] = std::sin(mesh.nodes()[i].y * 3.0);
            w[i] = 2.0 * x[i] - 0.5 * y[i];
        }
        const auto rx = reconstruct(mesh, x, corr, 4);
        const auto ry = reconstruct(mesh, y, corr, 4);
        const auto rw = reconstruct(mesh, w, corr, 4);
        double lin = 0.0;
        double flux = 0.0;
        for (std::size_t k = 0; k < rw.values.size(); ++k) {
            for (std::size_t c = 0; c < 2; ++c) {
                lin = std::max(lin, std::abs(rw.values[k][c] - 2.0 * rx.values[k][c] + 0.5 * ry.values[k][c]));
            }
            const double kappa = lam.at(aligned_cell_element(mesh, k / 4, 8));
            flux = std::max(flux, std::abs(kappa * rx.values[k][0] - 4.0 / 3.0));
        }
        out.check(lin <= 1e-12, "reconstruction linearity");
        out.check(flux <= 1e-9, "laminate flux continuity");
        done.push_back("recon");
    }
    // metrics: homogeneity under scaling of (f, g)
    {
        StudyConfig c;
        c.problem = ProblemKind::robin;
        c.alpha = 1.0;
        c.grids = {{4, 8}};
        c.output_dir = work / "homogeneity_a";
        const auto a = run_study(c);
        c.f = c.g = 3.0;
        c.output_dir = work / "homogeneity_b";
        const auto b = run_study(c);
        out.check(a.ok && b.ok, "homogeneity studies ran");
        if (a.ok && b.ok) {
            const auto& ea = a.rows[0].errors;
            const auto& eb = b.rows[0].errors;
            out.check(std::abs(ea.err0 - eb.err0) <= 1e-8 * ea.err0 && std::abs(ea.err1 - eb.err1) <= 1e-8 * ea.err1 &&
                          std::abs(ea.err2 - eb.err2) <= 1e-8 * ea.err2,
                      "metric homogeneity");
        }
        const std::vector<RateSample> s{{0.5, 0.2}, {0.25, 0.1}};
        const std::vector<RateSample> t{{0.5, 2.0}, {0.25, 1.0}};
        out.check(std::abs(estimate_rate(s) - estimate_rate(t)) <= 1e-14, "rate scale invariance");
        done.push_back("metrics");
    }
    out.detail << "checked:";
    for (const auto& d : done) {
        out.detail << ' ' << d;
    }
    out.detail << " (full suites: ctest unit tests)";
}

}  // namespace

int main(int argc, char** argv) {
    std::filesystem::path work = std::filesystem::temp_directory_path() / "homog_acceptance";
    int only = 0;
    bool full = false;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--work-dir" && i + 1 < argc) {
            work = argv[++i];
        } else if (arg == "--only" && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else if (arg == "--full-table") {
            full = true;
        } else {
            std::cerr << "usage: acceptance [--work-dir DIR] [--only K] [--full-table]\n";
            return 2;
        }
    }
    std::filesystem::create_directories(work);

    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"constant-coefficient degeneracy", [&](Outcome& o) { constant_coefficient(o, work); }},
        {"laminate oracle", [](Outcome& o) { laminate(o); }},
        {"Voigt-Reuss bounds and energy identity", [](Outcome& o) { voigt_reuss(o); }},
        {full ? "Table 1 (full resolution)" : "Table 1 at reduced resolution",
         [&](Outcome& o) { table(o, work, full); }},
        {"fixed-point contraction", [](Outcome& o) { contraction(o); }},
        {"Robin O(eps) rate", [&](Outcome& o) { robin_rate(o, work); }},
        {"property suites", [&](Outcome& o) { properties(o, work); }},
    };

    int failed = 0;
    for (std::size_t k = 0; k < criteria.size(); ++k) {
        if (only != 0 && static_cast<std::size_t>(only) != k + 1) {
            continue;
        }
        Outcome o;
        try {
            criteria[k].second(o);
        } catch (const std::exception& e) {
            o.check(false, std::string("exception: ") + e.what());
        }
        failed += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << k + 1 << " (" << criteria[k].first
                  << "): " << o.detail.str() << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
