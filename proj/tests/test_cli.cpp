#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli/app.hpp"

namespace cli = torus_cycles::cli;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

cli::CsvTable parse(const std::string& text) {
    std::istringstream in(text);
    return cli::read_csv(in);
}

std::string column(const cli::CsvTable& t, std::size_t row, const std::string& name) {
    for (std::size_t c = 0; c < t.header.size(); ++c)
        if (t.header[c] == name) return cli::format_cell(t.rows.at(row).at(c));
    ADD_FAILURE() << "no column " << name;
    return {};
}

std::string slurp(const fs::path& p) {
    std::ifstream f(p);
    std::stringstream s;
    s << f.rdbuf();
    return s.str();
}

class TempDir {
public:
    TempDir() : path_(fs::temp_directory_path() / ("torus_cycles_cli_" + std::to_string(::getpid()))) {
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    fs::path operator/(const std::string& name) const { return path_ / name; }

private:
    fs::path path_;
};

}  // namespace

TEST(Cli, CycleProbClosedForm) {
    const auto r = run({"cycle-prob", "--model", "gr", "--sigma", "inf", "--d", "1", "--r", "0.1", "--q", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto t = parse(r.out);
    ASSERT_EQ(t.rows.size(), 1u);
    EXPECT_NEAR(std::stod(column(t, 0, "value")), 0.03, 1e-12);
    EXPECT_EQ(column(t, 0, "converged"), "true");
}

TEST(Cli, RadiusBeyondHalfIsUsageError) {
    const auto r = run({"cycle-prob", "--model", "gr", "--sigma", "inf", "--d", "1", "--r", "0.6", "--q", "3"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("r must lie in (0, 0.5]"), std::string::npos) << r.err;
    EXPECT_TRUE(r.out.empty());
}

TEST(Cli, PsiRows) {
    const auto r = run({"psi", "--d", "2", "--k-max", "1"});
    ASSERT_EQ(r.code, 0);
    EXPECT_EQ(r.out, "k,count\n0,1\n1,4\n");
}

TEST(Cli, ExitCodes) {
    EXPECT_EQ(run({"no-such-command"}).code, 2);
    EXPECT_EQ(run({"cycle-prob", "--model", "er", "--p", "0.5"}).code, 2);
    EXPECT_EQ(run({"cycle-prob", "--model", "er", "--p", "0.5", "--q", "1"}).code, 2);
    EXPECT_EQ(run({"hamilton", "--model", "ba", "--p", "0.5", "--n", "4"}).code, 2);
    EXPECT_EQ(run({"cycle-prob", "--model", "er", "--p", "0.5", "--q", "3", "--precision-bits", "100"}).code, 2);
    EXPECT_EQ(run({"psi", "--d", "60", "--k-max", "4000"}).code, 4);
    EXPECT_EQ(run({"mc", "--what", "matrix", "--model", "er", "--p", "0.5", "--n", "25", "--samples", "10"}).code, 4);

    const auto strict = run({"cycle-prob", "--model", "gr", "--sigma", "2", "--d", "2", "--r", "0.2", "--q", "3"});
    EXPECT_EQ(strict.code, 3);
    EXPECT_NE(strict.err.find("--mc-fallback"), std::string::npos);
    const auto fallback = run({"cycle-prob", "--model", "gr", "--sigma", "2", "--d", "2", "--r", "0.2", "--q", "3",
                               "--mc-fallback", "--samples", "20000"});
    ASSERT_EQ(fallback.code, 0) << fallback.err;
    EXPECT_EQ(column(parse(fallback.out), 0, "method"), "monte-carlo");

    // GR d=2 sigma=2 has no Hamilton threshold at n = 3.
    EXPECT_EQ(run({"threshold", "--model", "gr", "--d", "2", "--sigma", "2", "--n", "3"}).code, 3);
    EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, ErrorsAreOneLine) {
    const auto r = run({"psi", "--d", "0"});
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1) << r.err;
}

TEST(Cli, HamiltonAndThreshold) {
    const auto h = run({"hamilton", "--model", "er", "--p", "0.5", "--n", "4"});
    ASSERT_EQ(h.code, 0);
    EXPECT_EQ(column(parse(h.out), 0, "tau"), "0.1875");

    const auto t = run({"threshold", "--model", "er", "--n", "20"});
    ASSERT_EQ(t.code, 0) << t.err;
    const double analytic = std::pow(2.0 / std::tgamma(20.0), 1.0 / 20);
    EXPECT_NEAR(std::stod(column(parse(t.out), 0, "threshold")), analytic, 1e-6);

    const auto c = run({"threshold", "--model", "er", "--n", "5", "--compare", "--d", "2", "--sigma", "2"});
    ASSERT_EQ(c.code, 0) << c.err;
    const auto table = parse(c.out);
    EXPECT_EQ(table.header, (std::vector<std::string>{"n", "threshold_er", "threshold_gr"}));
    ASSERT_EQ(table.rows.size(), 1u);
    EXPECT_LT(std::stod(column(table, 0, "threshold_gr")), std::stod(column(table, 0, "threshold_er")));
}

TEST(Cli, SpectralSweepPrintsDeterminantConstants) {
    const auto r = run({"spectral", "--model", "er", "--p", "1", "--sweep", "n", "--start", "2", "--stop", "5"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto t = parse(r.out);
    ASSERT_EQ(t.rows.size(), 4u);
    EXPECT_EQ(std::stod(column(t, 3, "det")), 4.0);
    EXPECT_EQ(std::stod(column(t, 3, "per")), 44.0);
    EXPECT_FALSE(r.err.empty());
}

TEST(Cli, SelftestPasses) {
    const auto r = run({"selftest"});
    EXPECT_EQ(r.code, 0) << r.out << r.err;
    EXPECT_EQ(r.out.find("FAIL"), std::string::npos) << r.out;
}

TEST(Cli, ReproducibleAcrossRunsAndThreads) {
    const std::vector<std::string> base{"mc", "--what", "cycle", "--model", "gr", "--d", "2", "--sigma", "2",
                                        "--r", "0.2", "--q", "3", "4", "--samples", "50000", "--seed", "123"};
    auto with_threads = [&](const char* t) {
        auto args = base;
        args.insert(args.end(), {"--threads", t});
        return run(args);
    };
    const auto a = with_threads("1");
    const auto b = with_threads("1");
    const auto c = with_threads("5");
    ASSERT_EQ(a.code, 0) << a.err;
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(a.out, c.out);

    const auto m1 = run({"mc", "--what", "matrix", "--model", "er", "--p", "0.3", "--n", "6", "--samples", "2000", "--seed", "9"});
    const auto m2 = run({"mc", "--what", "matrix", "--model", "er", "--p", "0.3", "--n", "6", "--samples", "2000", "--seed", "9"});
    ASSERT_EQ(m1.code, 0) << m1.err;
    EXPECT_EQ(m1.out, m2.out);
}

TEST(Cli, SeedFallsBackToEnvironment) {
    const std::vector<std::string> args{"mc", "--what", "cycle", "--model", "gr", "--d", "1", "--sigma", "inf",
                                        "--r", "0.1", "--q", "3", "--samples", "5000"};
    auto with_seed = args;
    with_seed.insert(with_seed.end(), {"--seed", "77"});
    const auto explicit_seed = run(with_seed);

    ::setenv("TORUS_CYCLES_SEED", "77", 1);
    const auto from_env = run(args);
    ::setenv("TORUS_CYCLES_SEED", "78", 1);
    const auto other = run(args);
    ::setenv("TORUS_CYCLES_SEED", "x", 1);
    const auto bad = run(args);
    ::unsetenv("TORUS_CYCLES_SEED");

    ASSERT_EQ(explicit_seed.code, 0);
    EXPECT_EQ(explicit_seed.out, from_env.out);
    EXPECT_NE(explicit_seed.out, other.out);
    EXPECT_EQ(bad.code, 2);
}

TEST(Cli, WritesOutAndPlotFiles) {
    TempDir dir;
    const auto csv = dir / "sweep.csv";
    const auto svg = dir / "sweep.svg";
    const auto r = run({"cycle-prob", "--model", "gr", "--d", "1", "--sigma", "inf", "--q", "3", "--sweep", "r",
                        "--start", "0.05", "--stop", "0.25", "--points", "5", "--out", csv.string(), "--plot",
                        svg.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_TRUE(r.out.empty());
    const auto t = parse(slurp(csv));
    ASSERT_EQ(t.rows.size(), 5u);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const double radius = std::stod(column(t, i, "r"));
        EXPECT_NEAR(std::stod(column(t, i, "value")), 3 * radius * radius, 1e-10);
    }
    const auto image = slurp(svg);
    EXPECT_EQ(image.rfind("<?xml", 0), 0u);
    EXPECT_NE(image.find("</svg>"), std::string::npos);
}

TEST(Cli, PlotFigures) {
    TempDir dir;
    const auto one = run({"plot", "--figure", "1", "--n", "7", "--out", (dir / "f1.csv").string(), "--plot",
                          (dir / "f1.svg").string()});
    ASSERT_EQ(one.code, 0) << one.err;
    const auto t1 = parse(slurp(dir / "f1.csv"));
    EXPECT_EQ(t1.header, (std::vector<std::string>{"n", "threshold_er", "threshold_gr"}));
    ASSERT_EQ(t1.rows.size(), 5u);
    // No GR Hamilton threshold for n = 3, 4: empty cells.
    EXPECT_EQ(column(t1, 0, "threshold_gr"), "");
    EXPECT_LT(std::stod(column(t1, 4, "threshold_gr")), std::stod(column(t1, 4, "threshold_er")));
    EXPECT_TRUE(fs::exists(dir / "f1.svg"));

    for (const char* fig : {"2", "3"}) {
        const auto csv = dir / (std::string("f") + fig + ".csv");
        const auto r = run({"plot", "--figure", fig, "--n", "6", "--points", "21", "--out", csv.string(), "--plot",
                            (dir / (std::string("f") + fig + ".svg")).string()});
        ASSERT_EQ(r.code, 0) << r.err;
        const auto t = parse(slurp(csv));
        EXPECT_EQ(t.header.size(), 3u) << fig;
        EXPECT_EQ(t.rows.size(), 21u) << fig;
    }
    EXPECT_EQ(run({"plot", "--figure", "5"}).code, 2);
}

TEST(Csv, Examples) {
    cli::CsvTable t{{"n", "threshold_er", "threshold_gr"}, {}};
    EXPECT_EQ(cli::to_csv(t), "n,threshold_er,threshold_gr\n");
    t.rows.push_back({std::int64_t{20}, 0.14480972290039062, std::monostate{}});
    const auto text = cli::to_csv(t);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
    EXPECT_EQ(text, "n,threshold_er,threshold_gr\n20,0.14480972290039062,\n");
    EXPECT_EQ(cli::format_double(0.03), "0.03");
    EXPECT_EQ(cli::format_double(0.1 + 0.2), "0.30000000000000004");
    EXPECT_EQ(cli::format_double(std::nan("")), "nan");
}

TEST(Csv, RejectsRaggedRows) {
    cli::CsvTable t{{"a", "b"}, {{1.0}}};
    EXPECT_THROW(cli::to_csv(t), torus_cycles::invalid_argument);
}

TEST(Csv, RoundTripsThroughReader) {
    cli::CsvTable t{{"name", "x", "k"}, {}};
    const std::vector<double> xs{0.03, 1.0 / 3, -2.5e-300, 6.02214076e23, 3787.8100000000004, 0.0, -0.0};
    for (std::size_t i = 0; i < xs.size(); ++i)
        t.rows.push_back({std::string(i % 2 ? "with,comma" : "say \"hi\""), xs[i], static_cast<std::int64_t>(i) - 3});
    const auto back = parse(cli::to_csv(t));
    ASSERT_EQ(back.header, t.header);
    ASSERT_EQ(back.rows.size(), xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        EXPECT_EQ(std::get<std::string>(back.rows[i][0]), std::get<std::string>(t.rows[i][0]));
        const double x = cli::cell_as_double(back.rows[i][1]);
        EXPECT_EQ(x, xs[i]);
        EXPECT_EQ(std::signbit(x), std::signbit(xs[i]));
        EXPECT_EQ(cli::cell_as_double(back.rows[i][2]), static_cast<double>(i) - 3);
    }
    EXPECT_EQ(cli::to_csv(back), cli::to_csv(t));
}

TEST(Csv, CliOutputRoundTrips) {
    const auto r = run({"spectral", "--model", "er", "--p", "0.37", "--n", "8"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(cli::to_csv(parse(r.out)), r.out);
}

TEST(Svg, Examples) {
    EXPECT_THROW(cli::emit_svg({}, {}), torus_cycles::invalid_argument);
    EXPECT_THROW(cli::emit_svg({{"a", {1, 2}, {1}}}, {}), torus_cycles::invalid_argument);

    const auto flat = cli::emit_svg({{"flat", {0, 1, 2}, {5, 5, 5}}}, {"constant", "x", "y"});
    EXPECT_NE(flat.find("<path"), std::string::npos);
    EXPECT_NE(flat.find("flat"), std::string::npos);

    const auto two = cli::emit_svg({{"ER", {3, 4, 5}, {0.9, 0.8, 0.6}}, {"GR <d=2>", {3, 4, 5}, {0.8, 0.7, 0.5}}},
                                   {"thresholds", "n", "p", false, true});
    EXPECT_NE(two.find("GR &lt;d=2&gt;"), std::string::npos);
    EXPECT_EQ(std::count(two.begin(), two.end(), '\n') > 10, true);
}
