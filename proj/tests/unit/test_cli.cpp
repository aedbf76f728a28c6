#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lfgo/cli/commands.hpp"

using namespace lfgo;
using namespace lfgo::cli;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("lfgo_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
    return path(name).string();
  }

  static std::string read(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "lfgo");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return run_cli(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

std::string sample_csv(double mean, double sd, int n, std::uint64_t seed) {
  auto rng = RngStream(seed).engine();
  std::string s = "x\n";
  for (int i = 0; i < n; ++i) s += io::format_double(sample_normal(mean, sd, rng)) + "\n";
  return s;
}

const char* kSmallSweep = R"({
  "model": {"name": "nl1d"},
  "estimator": "dr2",
  "sampling": {"n_outer": 10},
  "abc": {"n_pool": 200},
  "ratio": {"centers": 20},
  "grid": {"counts": [21]}
})";

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  const auto cfg = parse_config(R"({"model": {"name": "sir", "qoi": "incidence", "t0": 2}, "seed": 9})");
  EXPECT_EQ(cfg.model.name, "sir");
  EXPECT_EQ(cfg.model.qoi, "incidence");
  EXPECT_DOUBLE_EQ(cfg.model.t0, 2.0);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.estimator, "auto");
  EXPECT_EQ(cfg.sampling.n_outer, est::EstimatorConfig{}.n_outer);
  EXPECT_EQ(cfg.abc_cv.epsilon_grid, (std::vector<double>{0.1, 0.2, 0.3, 0.4, 0.5}));
}

TEST(Config, ErrorsCarryLineNumbers) {
  auto message = [](const std::string& text) {
    try {
      parse_config(text, "run.json");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_EQ(message("{\n  \"model\": {\"name\": \"nl1d\"},\n  \"bogus\": 1\n}").rfind("run.json:3:", 0), 0u);
  EXPECT_EQ(message("{\n  \"sampling\": {\n    \"n_outer\": \"many\"\n  }\n}").rfind("run.json:3:", 0), 0u);
  EXPECT_EQ(message("{\n  \"abc\": {\n    \"mlp\": {\"hidden\": 2, \"speed\": 1}\n  }\n}").rfind("run.json:3:", 0), 0u);
  EXPECT_EQ(message("{\n  \"estimator\": \"dr3\"\n}").rfind("run.json:2:", 0), 0u);
  EXPECT_EQ(message("{\n  \"model\": {\"name\": \"nl1d\",}\n}").rfind("run.json:2:", 0), 0u);
  EXPECT_EQ(message("{\n  \"sampling\": {\"n_outer\": 3}\n}").rfind("run.json:2:", 0), 0u);
  EXPECT_NE(message("[1, 2]"), "no error");
  EXPECT_NE(message(R"({"seed": -1})"), "no error");
  EXPECT_NE(message(R"({"model": {"name": "sir", "qoi": "rosenbrock"}})"), "no error");
}

TEST(Config, ResolvedConfigRoundTrips) {
  const auto cfg = parse_config(R"({
    "model": {"name": "nl2d", "qoi": "rosenbrock"},
    "estimator": "dr1",
    "sampling": {"n_outer": 50, "n_replicates": 2, "max_posterior": 200},
    "abc": {"epsilon": 0.2, "adjustment": "mlp", "mlp": {"hidden": 5}},
    "ratio": {"alpha": 0.1, "cv": {"sigmas": [0.5, 1], "sigma_scale": "absolute"}},
    "grid": {"axes": [[0, 0.5], [0.2]]},
    "optimize": {"epochs": 3, "bounds": [[0, 0.5], [0, 1]]},
    "seed": 123, "workers": 2, "output_dir": "somewhere"
  })");
  const json first = resolved_json(cfg);
  const auto again = parse_config(first.dump(2));
  EXPECT_EQ(resolved_json(again), first);
  EXPECT_EQ(first.at("abc").at("adjustment"), "mlp");
  EXPECT_EQ(first.at("ratio").at("cv").at("sigma_scale"), "absolute");
  // defaults are written out too
  EXPECT_TRUE(first.at("abc").contains("min_accept"));
  EXPECT_TRUE(first.at("optimize").contains("ei_jitter"));
}

TEST(Config, RelativeSamplePathsResolveAgainstConfigDir) {
  const auto cfg = parse_config(R"({"ratio_fit": {"numerator": "p.csv", "denominator": "/abs/q.csv"}})", "c.json",
                                "/data/run");
  EXPECT_EQ(cfg.ratio_fit.numerator, "/data/run/p.csv");
  EXPECT_EQ(cfg.ratio_fit.denominator, "/abs/q.csv");
}

TEST_F(CliTest, SweepWritesArtifactsAndReplaysByteIdentically) {
  const auto cfg = write("sweep.json", kSmallSweep);
  ASSERT_EQ(run({"sweep", "--config", cfg, "--out", path("a").string(), "--seed", "4"}), 0) << err_.str();
  ASSERT_EQ(run({"sweep", "--config", cfg, "--out", path("b").string(), "--seed", "4"}), 0) << err_.str();
  const auto csv = read(path("a") / "curve.csv");
  EXPECT_EQ(csv, read(path("b") / "curve.csv"));
  const auto table = io::parse_csv_string(csv);
  EXPECT_EQ(table.header, (std::vector<std::string>{"xi", "mean", "std"}));
  EXPECT_EQ(table.rows.size(), 21u);
  EXPECT_NE(read(path("a") / "curve.svg").find("</svg>"), std::string::npos);

  const auto manifest = json::parse(read(path("a") / "manifest.json"));
  EXPECT_EQ(manifest.at("exit_code"), 0);
  EXPECT_EQ(manifest.at("command"), "sweep");
  EXPECT_EQ(manifest.at("config").at("seed"), 4);
  EXPECT_EQ(manifest.at("artifacts"), json({"resolved_config.json", "curve.csv", "curve.svg"}));
  EXPECT_TRUE(manifest.contains("wall_time_s"));
  EXPECT_TRUE(manifest.contains("failures"));
  EXPECT_TRUE(manifest.contains("version"));
  // the resolved config re-runs to the same curve
  ASSERT_EQ(run({"sweep", "--config", (path("a") / "resolved_config.json").string(), "--out", path("c").string()}), 0);
  EXPECT_EQ(csv, read(path("c") / "curve.csv"));
  // nothing but the listed files
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(path("a"))) files += e.is_regular_file();
  EXPECT_EQ(files, 4u);
}

TEST_F(CliTest, SweepTwoDimensionalContour) {
  const auto cfg = write("s.json", R"({"model": {"name": "nl2d"}, "estimator": "dr1",
    "sampling": {"n_outer": 10}, "abc": {"n_pool": 200}, "ratio": {"centers": 20},
    "grid": {"counts": [2, 3]}, "output_dir": ")" + path("o").string() + "\"}");
  ASSERT_EQ(run({"sweep", "--config", cfg}), 0) << err_.str();
  const auto t = io::parse_csv_string(read(path("o") / "curve.csv"));
  EXPECT_EQ(t.header, (std::vector<std::string>{"xi1", "xi2", "mean", "std"}));
  EXPECT_EQ(t.rows.size(), 6u);
  EXPECT_NE(read(path("o") / "curve.svg").find("<svg"), std::string::npos);
}

TEST_F(CliTest, ConfigErrorsExitOne) {
  EXPECT_EQ(run({"sweep", "--config", write("e.json", R"({"grid": {"counts": [0]}})")}), 1);
  EXPECT_EQ(run({"sweep", "--config", write("n.json", R"({"model": {"name": "nl1d"}})")}), 1);
  EXPECT_NE(err_.str().find("grid"), std::string::npos);
  EXPECT_EQ(run({"sweep", "--config", write("u.json", "{\n\"nope\": 1}")}), 1);
  EXPECT_NE(err_.str().find("u.json:2:"), std::string::npos);
  EXPECT_EQ(run({"sweep", "--config", path("missing.json").string()}), 1);
  EXPECT_EQ(run({"sweep"}), 1);
  EXPECT_EQ(run({}), 1);
  EXPECT_EQ(run({"sweep", "--config", write("x.json", "{}"), "--seed", "abc"}), 1);
  // an estimator the model cannot support
  EXPECT_EQ(run({"sweep", "--config", write("c.json", R"({"model": {"name": "sir"}, "estimator": "nmc_param",
    "grid": {"counts": [2]}})")}),
            1);
}

TEST_F(CliTest, OptimizeStubRecoversBudgetAndBest) {
  const auto cfg = write("o.json", R"({"model": {"name": "nl1d"}, "estimator": "dr2",
    "sampling": {"n_outer": 10}, "abc": {"n_pool": 200}, "ratio": {"centers": 20},
    "optimize": {"epochs": 1, "batch": 2, "initial_points": 3}})");
  ASSERT_EQ(run({"optimize", "--config", cfg, "--out", path("o").string()}), 0) << err_.str();
  const auto trace = io::parse_csv_string(read(path("o") / "bo_trace.csv"));
  EXPECT_EQ(trace.rows.size(), 3u + 2u);
  const auto best = json::parse(read(path("o") / "best.json"));
  EXPECT_EQ(best.at("epochs"), 1);
  double top = -1e300;
  for (const auto& r : trace.rows) top = std::max(top, io::parse_double(r[trace.column("value")]));
  EXPECT_DOUBLE_EQ(best.at("value").get<double>(), top);
  EXPECT_EQ(run({"optimize", "--config", write("b.json", R"({"optimize": {"bounds": [[0.5, 0.2]]}})")}), 1);
  EXPECT_EQ(run({"optimize", "--config", write("c.json", R"({"optimize": {"bounds": [[0, 2]]}})")}), 1);
  EXPECT_EQ(run({"optimize", "--config", write("d.json", R"({"optimize": {"epochs": 0}})")}), 1);
}

TEST_F(CliTest, AbcCvTableShape) {
  const auto cfg = write("a.json", R"({"model": {"name": "sir"}, "abc": {"n_pool": 1000},
    "abc_cv": {"design": [0.4], "n_holdout": 50}})");
  ASSERT_EQ(run({"abc-cv", "--config", cfg, "--out", path("a").string()}), 0) << err_.str();
  const auto wide = io::parse_csv_string(read(path("a") / "abc_cv.csv"));
  EXPECT_EQ(wide.header, (std::vector<std::string>{"epsilon", "theta_0", "theta_1"}));
  EXPECT_EQ(wide.rows.size(), 5u);
  EXPECT_EQ(io::parse_csv_string(read(path("a") / "abc_cv_long.csv")).rows.size(), 10u);

  const auto one = write("one.json", R"({"model": {"name": "sir"}, "abc": {"n_pool": 1000},
    "abc_cv": {"design": [0.4], "n_holdout": 20, "epsilon_grid": [0.2]}})");
  ASSERT_EQ(run({"abc-cv", "--config", one, "--out", path("b").string()}), 0);
  EXPECT_EQ(io::parse_csv_string(read(path("b") / "abc_cv.csv")).rows.size(), 1u);

  EXPECT_EQ(run({"abc-cv", "--config", write("z.json", R"({"model": {"name": "sir"},
    "abc_cv": {"design": [0.4], "epsilon_grid": [0, 0.1]}})")}),
            1);
  EXPECT_EQ(run({"abc-cv", "--config", write("d.json", R"({"model": {"name": "sir"}})")}), 1);
  EXPECT_EQ(run({"abc-cv", "--config", write("r.json", R"({"model": {"name": "sir"}, "abc_cv": {"design": [4]}})")}),
            1);
}

TEST_F(CliTest, RatioFitEqualSamplesGiveUnitMeanRatio) {
  write("p.csv", sample_csv(0.0, 1.0, 400, 1));
  write("q.csv", sample_csv(0.0, 1.0, 400, 2));
  const auto cfg = write("r.json", R"({"ratio_fit": {"numerator": "p.csv", "denominator": "q.csv"}})");
  ASSERT_EQ(run({"ratio-fit", "--config", cfg, "--out", path("r").string()}), 0) << err_.str();
  const auto diag = json::parse(read(path("r") / "diagnostics.json"));
  EXPECT_GE(diag.at("mean_ratio").get<double>(), 0.8);
  EXPECT_LE(diag.at("mean_ratio").get<double>(), 1.2);
  EXPECT_TRUE(diag.contains("heldout_loss"));
  EXPECT_EQ(io::parse_csv_string(read(path("r") / "cv_table.csv")).rows.size(), 20u);
}

// p = N(0, 1), q = N(0.5, 1.2^2); the fitted model is checked against the
// analytic ratio on held-out denominator points.
TEST_F(CliTest, RatioFitGaussianPairMatchesAnalyticRatio) {
  write("p.csv", sample_csv(0.0, 1.0, 1000, 3));
  write("q.csv", sample_csv(0.5, 1.2, 1000, 4));
  write("hp.csv", sample_csv(0.0, 1.0, 500, 5));
  write("hq.csv", sample_csv(0.5, 1.2, 500, 6));
  const auto cfg = write("r.json", R"({"ratio_fit": {"numerator": "p.csv", "denominator": "q.csv",
    "heldout_numerator": "hp.csv", "heldout_denominator": "hq.csv"}})");
  ASSERT_EQ(run({"ratio-fit", "--config", cfg, "--out", path("g").string()}), 0) << err_.str();
  const auto model = densratio::ratio_model_from_json(json::parse(read(path("g") / "ratio_model.json")));
  const Matrix hq = io::to_matrix(io::read_csv_file(path("hq.csv").string()));
  double mse = 0.0;
  for (Eigen::Index i = 0; i < hq.rows(); ++i) {
    const double x = hq(i, 0);
    const double truth = 1.2 * std::exp(-0.5 * x * x + 0.5 * std::pow((x - 0.5) / 1.2, 2));
    mse += std::pow(model.evaluate(hq.row(i).transpose()) - truth, 2);
  }
  mse /= static_cast<double>(hq.rows());
  EXPECT_LT(mse, 0.05);
  EXPECT_TRUE(json::parse(read(path("g") / "diagnostics.json")).at("heldout").get<bool>());
}

TEST_F(CliTest, RatioFitMalformedInputExitsOne) {
  write("p.csv", "x\n1\nnot-a-number\n");
  write("q.csv", sample_csv(0, 1, 10, 1));
  write("w.csv", "x,y\n1,2\n3,4\n");
  EXPECT_EQ(run({"ratio-fit", "--config", write("a.json", R"({"ratio_fit": {"numerator": "p.csv", "denominator": "q.csv"}})")}), 1);
  EXPECT_NE(err_.str().find("not a number"), std::string::npos);
  EXPECT_EQ(run({"ratio-fit", "--config", write("b.json", R"({"ratio_fit": {"numerator": "w.csv", "denominator": "q.csv"}})")}), 1);
  EXPECT_EQ(run({"ratio-fit", "--config", write("c.json", R"({"ratio_fit": {"numerator": "gone.csv", "denominator": "q.csv"}})")}), 1);
  EXPECT_EQ(run({"ratio-fit", "--config", write("d.json", R"({"ratio_fit": {"denominator": "q.csv"}})")}), 1);
}

TEST_F(CliTest, BenchmarkUnknownSuiteExitsOne) {
  EXPECT_EQ(run({"benchmark", "--suite", "nope"}), 1);
  EXPECT_NE(err_.str().find("available"), std::string::npos);
  EXPECT_EQ(run({"benchmark"}), 1);
}

TEST(Cli, WriteAtomicLeavesNoPartialFile) {
  const auto dir = fs::temp_directory_path() / "lfgo_atomic";
  fs::create_directories(dir);
  write_atomic(dir / "f.txt", "hello");
  EXPECT_TRUE(fs::exists(dir / "f.txt"));
  EXPECT_FALSE(fs::exists(dir / "f.txt.partial"));
  EXPECT_THROW(write_atomic(dir / "missing" / "f.txt", "x"), std::runtime_error);
  fs::remove_all(dir);
}
