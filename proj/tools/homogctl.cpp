// homogctl: corrector tables and fine-vs-homogenized convergence studies.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "homog/homog.hpp"

namespace {

struct Overrides {
    std::optional<std::string> config;
    std::optional<std::string> out;
    std::optional<std::string> grids;
    std::optional<std::string> problem;
    std::optional<std::string> preconditioner;
    std::optional<double> alpha, f, g, kappa1, kappa2, rho;
    std::optional<double> linear_tolerance, fixed_point_tolerance;
    std::optional<std::size_t> max_iterations;
    bool semi_implicit = false;
};

void add_study_flags(CLI::App* app, Overrides& o) {
    app->add_option("--config", o.config, "study configuration file");
    app->add_option("--out", o.out, "output directory");
    app->add_option("--grids", o.grids, "grid list, e.g. \"16x32,32x32\"");
    app->add_option("--problem", o.problem, "contact or robin");
    app->add_flag("--semi-implicit", o.semi_implicit, "keep the Robin mass on the left-hand side");
    app->add_option("--alpha", o.alpha);
    app->add_option("--f", o.f);
    app->add_option("--g", o.g);
    app->add_option("--kappa1", o.kappa1);
    app->add_option("--kappa2", o.kappa2);
    app->add_option("--rho", o.rho);
    app->add_option("--linear-tolerance", o.linear_tolerance);
    app->add_option("--fixed-point-tolerance", o.fixed_point_tolerance);
    app->add_option("--max-iterations", o.max_iterations);
    app->add_option("--preconditioner", o.preconditioner, "none, diagonal or multigrid");
}

homog::StudyConfig resolve(const Overrides& o) {
    homog::StudyConfig c;
    if (o.config) {
        c = homog::load_config(std::filesystem::path(*o.config));
    }
    if (o.out) c.output_dir = *o.out;
    if (o.grids) c.grids = homog::parse_grids(*o.grids);
    if (o.problem) c.problem = homog::parse_problem_kind(*o.problem);
    if (o.preconditioner) c.preconditioner = homog::parse_preconditioner(*o.preconditioner);
    if (o.alpha) c.alpha = *o.alpha;
    if (o.f) c.f = *o.f;
    if (o.g) c.g = *o.g;
    if (o.kappa1) c.micro.kappa1 = *o.kappa1;
    if (o.kappa2) c.micro.kappa2 = *o.kappa2;
    if (o.rho) c.micro.rho = *o.rho;
    if (o.linear_tolerance) c.linear_tolerance = *o.linear_tolerance;
    if (o.fixed_point_tolerance) c.fixed_point_tolerance = *o.fixed_point_tolerance;
    if (o.max_iterations) c.max_iterations = *o.max_iterations;
    if (o.semi_implicit) c.semi_implicit = true;
    return c;
}

bool report_violations(const homog::StudyConfig& c) {
    const auto v = homog::validate_config(c);
    for (const auto& item : v) {
        std::cerr << "invalid " << item.field << ": " << item.message << '\n';
    }
    return v.empty();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"periodic homogenization studies"};
    app.require_subcommand(1);

    Overrides study_opts;
    auto* study = app.add_subcommand("study", "fine and homogenized solves over a grid list");
    add_study_flags(study, study_opts);

    Overrides validate_opts;
    auto* validate = app.add_subcommand("validate", "check a configuration without solving");
    add_study_flags(validate, validate_opts);

    std::vector<int> resolutions{8, 16, 32, 64};
    double kappa1 = 1.0, kappa2 = 2.0, rho = 0.25, cell_tol = 1e-10;
    std::optional<std::string> cell_out;
    std::optional<std::vector<double>> laminate;
    auto* cell = app.add_subcommand("cell", "homogenized tensor for a list of cell resolutions");
    cell->add_option("--M", resolutions, "cell resolutions")->delimiter(',');
    cell->add_option("--kappa1", kappa1);
    cell->add_option("--kappa2", kappa2);
    cell->add_option("--rho", rho);
    cell->add_option("--tolerance", cell_tol);
    cell->add_option("--out", cell_out, "cache directory for corrector files");
    cell->add_option("--laminate", laminate, "two values: layered cell instead of the inclusion")
        ->expected(2)
        ->delimiter(',');

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            const auto c = resolve(validate_opts);
            if (!report_violations(c)) {
                return 2;
            }
            std::cout << "ok\n";
            homog::write_config(std::cout, c);
            return 0;
        }
        if (*study) {
            const auto c = resolve(study_opts);
            if (!report_violations(c)) {
                return 2;
            }
            const auto result = homog::run_study(c, &std::cerr);
            homog::write_study_csv(std::cout, result);
            std::cerr << "wrote " << (c.output_dir / "study.csv").string() << '\n';
            return result.ok ? 0 : 1;
        }
        if (*cell) {
            std::vector<homog::CellRow> rows;
            if (laminate) {
                const double a = (*laminate)[0];
                const double b = (*laminate)[1];
                rows = homog::run_cell_only([&](int m) { return homog::laminate_coefficient(a, b, m); },
                                            resolutions, cell_tol);
            } else {
                std::optional<std::filesystem::path> dir;
                if (cell_out) {
                    dir = *cell_out;
                }
                rows = homog::run_cell_only(homog::MicrostructureSpec{kappa1, kappa2, rho}, resolutions, cell_tol, dir);
            }
            homog::write_cell_csv(std::cout, rows);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
