#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "homog/study.hpp"

using namespace homog;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("homog_test_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

std::vector<std::string> lines(const std::filesystem::path& p) {
    std::ifstream is(p);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(is, line)) {
        out.push_back(line);
    }
    return out;
}

// drops the trailing wall_seconds field
std::string without_wall_time(const std::string& row) { return row.substr(0, row.rfind(',')); }

bool mentions(const std::vector<Violation>& v, const std::string& text) {
    for (const auto& item : v) {
        if (item.message.find(text) != std::string::npos) {
            return true;
        }
    }
    return false;
}

}  // namespace

TEST(Config, DefaultsAreValid) {
    const StudyConfig c;
    EXPECT_TRUE(validate_config(c).empty());
    EXPECT_EQ(c.grids, (std::vector<GridSpec>{{16, 32}, {32, 32}, {64, 32}}));
    EXPECT_DOUBLE_EQ(c.alpha, 0.5);
}

TEST(Config, GateViolation) {
    StudyConfig c;
    c.alpha = 1.5;
    const auto v = validate_config(c);
    EXPECT_TRUE(mentions(v, "solvability gate kappa1 > |alpha| fails"));
}

TEST(Config, GeometryAndGridViolations) {
    StudyConfig c;
    c.micro.rho = 0.6;
    c.grids = {{3, 3}, {2, 6}};
    c.linear_tolerance = 0.0;
    const auto v = validate_config(c);
    EXPECT_TRUE(mentions(v, "geometry"));
    EXPECT_TRUE(mentions(v, "N*M must be even"));
    EXPECT_TRUE(mentions(v, "linear_tolerance") || mentions(v, "(0, 1)"));
    EXPECT_GE(v.size(), 3u);
    StudyConfig misaligned;
    misaligned.grids = {{2, 6}};
    EXPECT_TRUE(mentions(validate_config(misaligned), "rho*M"));
}

TEST(Config, RobinNeedsPositiveAlpha) {
    StudyConfig c;
    c.problem = ProblemKind::robin;
    c.alpha = 0.0;
    EXPECT_TRUE(mentions(validate_config(c), "coercivity"));
    c.alpha = 5.0;  // no gate for the linear problem
    EXPECT_TRUE(validate_config(c).empty());
}

TEST(Config, LoadAndRoundTrip) {
    std::istringstream in(
        "[problem]\nkind = robin\n[physics]\nalpha = 1.0\n[grids]\nlist = 4x32, 8x32\n"
        "[solver]\nsemi_implicit = true\npreconditioner = diagonal\n");
    const auto c = load_config(in);
    EXPECT_EQ(c.problem, ProblemKind::robin);
    EXPECT_DOUBLE_EQ(c.alpha, 1.0);
    EXPECT_DOUBLE_EQ(c.f, 1.0);
    EXPECT_EQ(c.grids, (std::vector<GridSpec>{{4, 32}, {8, 32}}));
    EXPECT_TRUE(c.semi_implicit);
    EXPECT_EQ(c.preconditioner, Preconditioner::diagonal);
    std::ostringstream out;
    write_config(out, c);
    std::istringstream back(out.str());
    const auto d = load_config(back);
    EXPECT_EQ(d.grids, c.grids);
    EXPECT_EQ(d.problem, c.problem);
    EXPECT_EQ(d.output_dir, c.output_dir);
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    std::istringstream a("[physics]\nbeta = 1\n");
    EXPECT_THROW(load_config(a), std::invalid_argument);
    std::istringstream b("[physics]\nalpha = abc\n");
    EXPECT_THROW(load_config(b), std::invalid_argument);
    std::istringstream c("[grids]\nlist = 16by32\n");
    EXPECT_THROW(load_config(c), std::invalid_argument);
    EXPECT_THROW(parse_grids("8x"), std::invalid_argument);
}

TEST(Study, CsvStructure) {
    StudyConfig c;
    c.grids = {{2, 8}, {4, 8}, {8, 8}};
    c.output_dir = scratch("structure");
    const auto result = run_study(c);
    ASSERT_TRUE(result.ok) << result.error;
    const auto rows = lines(c.output_dir / "study.csv");
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows[0], "N,M,ERR0,ERR1,ERR2,fine_iters,homog_iters,wall_seconds");
    EXPECT_EQ(rows[1].rfind("2,8,", 0), 0u);
    EXPECT_EQ(rows[4].rfind("rate,", 0), 0u);
    EXPECT_TRUE(std::filesystem::exists(c.output_dir / "summary.txt"));
    EXPECT_TRUE(std::filesystem::exists(c.output_dir / "correctors_M8.txt"));
    const auto summary = lines(c.output_dir / "summary.txt");
    bool gate = false;
    for (const auto& l : summary) {
        gate = gate || l.find("solvability gate kappa1 > |alpha|: ok") != std::string::npos;
    }
    EXPECT_TRUE(gate);
}

TEST(Study, ConstantCoefficientErrorsVanish) {
    StudyConfig c;
    c.micro = {1.0, 1.0, 0.25};
    c.grids = {{2, 8}, {4, 8}};
    c.output_dir = scratch("constant");
    const auto result = run_study(c);
    ASSERT_TRUE(result.ok);
    for (const auto& r : result.rows) {
        EXPECT_LE(r.errors.err0, 1e-9);
        EXPECT_LE(r.errors.err1, 1e-9);
        EXPECT_LE(r.errors.err2, 1e-9);
    }
}

TEST(Study, CachedRerunIsByteIdentical) {
    StudyConfig c;
    c.grids = {{2, 8}, {4, 8}};
    c.output_dir = scratch("cache");
    ASSERT_TRUE(run_study(c).ok);
    const auto first = lines(c.output_dir / "study.csv");
    bool cached = false;
    (void)correctors_cached(c.micro, 8, c.linear_tolerance, c.output_dir, &cached);
    EXPECT_TRUE(cached);
    ASSERT_TRUE(run_study(c).ok);
    const auto second = lines(c.output_dir / "study.csv");
    ASSERT_EQ(first.size(), second.size());
    for (std::size_t k = 1; k + 1 < first.size(); ++k) {
        EXPECT_EQ(without_wall_time(first[k]), without_wall_time(second[k]));
    }
    EXPECT_EQ(first.back(), second.back());
}

TEST(Study, StaleCacheIsRecomputed) {
    const auto dir = scratch("stale");
    (void)correctors_cached(MicrostructureSpec{}, 8, 1e-10, dir);
    bool cached = true;
    const auto corr = correctors_cached(MicrostructureSpec{1.0, 3.0, 0.25}, 8, 1e-10, dir, &cached);
    EXPECT_FALSE(cached);
    EXPECT_GT(corr.a_hat(0, 0), 1.2);
}

TEST(Study, CorrectorFileRoundTrip) {
    const auto corr = solve_correctors(MicrostructureSpec{}, 8, {1e-12, 0, Preconditioner::diagonal});
    std::stringstream ss;
    io::write_correctors(ss, corr, MicrostructureSpec{});
    const auto back = io::read_correctors(ss, MicrostructureSpec{}, 8);
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(back->nodal[0], corr.nodal[0]);
    EXPECT_EQ(back->a_hat.v, corr.a_hat.v);
}

TEST(Study, FailureWritesPartialReport) {
    StudyConfig c;
    c.grids = {{2, 8}, {4, 8}};
    c.max_iterations = 2;
    c.output_dir = scratch("failure");
    const auto result = run_study(c);
    EXPECT_FALSE(result.ok);
    EXPECT_FALSE(result.error.empty());
    const auto rows = lines(c.output_dir / "study.csv");
    EXPECT_EQ(rows.size(), 1u);
    const auto summary = lines(c.output_dir / "summary.txt");
    EXPECT_NE(summary.back().find("FAILED"), std::string::npos);
}

TEST(Study, InvalidConfigNotRun) {
    StudyConfig c;
    c.alpha = 1.5;
    c.output_dir = scratch("invalid");
    const auto result = run_study(c);
    EXPECT_FALSE(result.ok);
    EXPECT_NE(result.error.find("solvability gate"), std::string::npos);
    EXPECT_FALSE(std::filesystem::exists(c.output_dir / "study.csv"));
}

TEST(Study, RobinKind) {
    StudyConfig c;
    c.problem = ProblemKind::robin;
    c.alpha = 1.0;
    c.grids = {{2, 8}, {4, 8}};
    c.output_dir = scratch("robin");
    const auto result = run_study(c);
    ASSERT_TRUE(result.ok) << result.error;
    EXPECT_GT(result.rows[0].errors.err0, result.rows[1].errors.err0);
}

TEST(CellOnly, ConstantAndLaminate) {
    const auto rows = run_cell_only(MicrostructureSpec{2.0, 2.0, 0.25}, {8, 16}, 1e-12, std::nullopt);
    for (const auto& r : rows) {
        EXPECT_NEAR(r.a_hat(0, 0), 2.0, 1e-13);
    }
    EXPECT_FALSE(rows[0].change.has_value());
    const auto lam = run_cell_only([](int m) { return laminate_coefficient(1.0, 2.0, m); }, {8, 16}, 1e-12);
    EXPECT_NEAR(lam[1].a_hat(0, 0), 4.0 / 3.0, 1e-9);
    EXPECT_NEAR(lam[1].a_hat(1, 1), 1.5, 1e-9);
}

TEST(CellOnly, DifferencesShrink) {
    const auto rows = run_cell_only(MicrostructureSpec{}, {8, 16, 32, 64}, 1e-12, scratch("cell"));
    for (std::size_t k = 2; k < rows.size(); ++k) {
        EXPECT_LT(*rows[k].change, *rows[k - 1].change);
    }
    std::ostringstream os;
    write_cell_csv(os, rows);
    EXPECT_EQ(os.str().rfind("M,A11,A12,A21,A22,change\n", 0), 0u);
}
