#pragma once

// Subcommands of the `lfgo` tool. Each writes its artifacts, the resolved
// configuration and a run manifest under the output directory and returns a
// process exit code:
//   0 success, 1 usage or configuration error, 2 computational failure, 3 internal error.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lfgo/abc/threshold_cv.hpp"
#include "lfgo/benchmark/suites.hpp"
#include "lfgo/cli/config.hpp"
#include "lfgo/densratio/io.hpp"
#include "lfgo/design/bayes_opt.hpp"
#include "lfgo/design/grid.hpp"
#include "lfgo/io/csv.hpp"
#include "lfgo/io/svg.hpp"

#ifndef LFGO_VERSION
#define LFGO_VERSION "0.0.0"
#endif

namespace lfgo::cli {

enum ExitCode : int { kSuccess = 0, kConfigError = 1, kComputeError = 2, kInternalError = 3 };

/// Writes `content` next to `path` and renames it into place, so readers
/// never see a partially written file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw std::runtime_error("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

/// Collects a run's artifacts and writes them plus the manifest.
class RunOutput {
 public:
  RunOutput(const RunConfig& cfg, std::string command)
      : cfg_(cfg), command_(std::move(command)), dir_(cfg.output_dir), start_(std::chrono::steady_clock::now()) {
    std::filesystem::create_directories(dir_);
    write("resolved_config.json", resolved_json(cfg).dump(2) + "\n");
  }

  void write(const std::string& name, const std::string& content) {
    write_atomic(dir_ / name, content);
    if (std::find(artifacts_.begin(), artifacts_.end(), name) == artifacts_.end()) artifacts_.push_back(name);
  }
  void write_csv(const std::string& name, const io::CsvTable& t) { write(name, io::to_csv_string(t)); }

  json& summary() { return summary_; }
  json& failures() { return failures_; }

  int finish(int code) {
    json manifest{
        {"tool", "lfgo"},
        {"version", LFGO_VERSION},
        {"command", command_},
        {"exit_code", code},
        {"config", resolved_json(cfg_)},
        {"artifacts", artifacts_},
        {"failures", failures_.is_null() ? json::object() : failures_},
        {"summary", summary_.is_null() ? json::object() : summary_},
        {"wall_time_s", std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count()},
    };
    write_atomic(dir_ / "manifest.json", manifest.dump(2) + "\n");
    return code;
  }

 private:
  const RunConfig& cfg_;
  std::string command_;
  std::filesystem::path dir_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> artifacts_;
  json summary_, failures_;
};

namespace detail {

inline est::EstimatorKind resolve_kind(const RunConfig& cfg, const Model& model) {
  est::EstimatorKind kind;
  if (cfg.estimator == "auto")
    kind = est::resolve_ratio_space(est::RatioSpace::automatic, model.summary_dim(), model.qoi_dim());
  else
    kind = est::estimator_kind_from_string(cfg.estimator);
  if (kind == est::EstimatorKind::nmc_param && !model.has_likelihood())
    cfg.fail("estimator", "estimator 'nmc_param' needs a model with an explicit likelihood");
  if (kind == est::EstimatorKind::nmc_z2 && !model.has_likelihood())
    cfg.fail("estimator", "estimator 'nmc_z2' needs a model with an explicit likelihood");
  if (kind == est::EstimatorKind::nmc_z1 && !model.has_qoi_density())
    cfg.fail("estimator", "estimator 'nmc_z1' needs a stochastic QoI with a density");
  return kind;
}

inline design::DesignGrid build_grid(const RunConfig& cfg, const Model& model) {
  const Bounds b = model.design_bounds();
  try {
    if (!cfg.grid.axes.empty()) return design::DesignGrid(cfg.grid.axes, b);
    if (!cfg.grid.counts.empty()) return design::DesignGrid::uniform(b, cfg.grid.counts);
  } catch (const DomainError& e) {
    cfg.fail("grid", std::string("invalid grid: ") + e.what());
  }
  cfg.fail("grid", "sweep needs 'grid.counts' or 'grid.axes'");
}

inline Matrix read_samples(const RunConfig& cfg, const std::string& key, const std::string& path) {
  if (path.empty()) cfg.fail("ratio_fit", "'ratio_fit." + key + "' is required");
  try {
    const Matrix m = io::to_matrix(io::read_csv_file(path));
    if (m.rows() < 2) throw DomainError("needs at least two rows");
    if (!m.allFinite()) throw DomainError("contains non-finite values");
    return m;
  } catch (const DomainError& e) {
    cfg.fail("ratio_fit." + key, "cannot use '" + path + "': " + e.what());
  }
}

}  // namespace detail

inline int cmd_sweep(const RunConfig& cfg, std::ostream& log = std::cerr) {
  const auto model = make_model(cfg.model);
  const auto kind = detail::resolve_kind(cfg, *model);
  const auto grid = detail::build_grid(cfg, *model);
  for (std::size_t k = 0; k < grid.size(); ++k) check_design(*model, grid.point(k));
  RunOutput out(cfg, "sweep");
  auto ecfg = cfg.sampling;
  ecfg.workers = cfg.workers;

  design::SweepResult res;
  try {
    res = design::grid_sweep(
        grid,
        [&](const DesignPoint& xi, const RngStream& s) {
          auto inner = ecfg;
          inner.workers = 1;
          return est::estimate_utility(*model, xi, kind, inner, s);
        },
        RngStream(cfg.seed), cfg.workers, 1.0);
  } catch (const EstimationError& e) {
    log << "sweep failed: " << e.what() << '\n';
    out.failures() = {{"failed_points", grid.size()}, {"message", e.what()}};
    return out.finish(kComputeError);
  }

  std::size_t failed_outer = 0;
  for (const auto& e : res.estimates) failed_outer += e.n_failed;
  out.failures() = {{"failed_points", res.n_failed_points()}, {"failed_outer_points", failed_outer}};
  out.summary() = {{"estimator", est::to_string(kind)},
                   {"argmax", std::vector<double>(res.argmax->coordinates().begin(), res.argmax->coordinates().end())},
                   {"max_value", res.max_value}};
  out.write_csv("curve.csv", design::export_curve(res));

  const std::string title = "Expected utility (" + est::to_string(kind) + ")";
  if (grid.dim() == 1) {
    std::vector<double> m, s;
    for (const auto& e : res.estimates) {
      m.push_back(e.mean);
      s.push_back(std::isfinite(e.std) ? e.std : 0.0);
    }
    out.write("curve.svg", io::svg_curve_1d(grid.axes()[0], m, s, title));
  } else if (grid.dim() == 2) {
    const auto& ax = grid.axes();
    Matrix v(static_cast<Eigen::Index>(ax[0].size()), static_cast<Eigen::Index>(ax[1].size()));
    for (std::size_t i = 0; i < ax[0].size(); ++i)
      for (std::size_t j = 0; j < ax[1].size(); ++j) {
        const double val = res.estimates[i * ax[1].size() + j].mean;
        v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::isfinite(val) ? val : res.max_value;
      }
    out.write("curve.svg", io::svg_contour_2d(ax[0], ax[1], v, title, "xi1", "xi2"));
  }

  const bool partial = static_cast<double>(res.n_failed_points()) > 0.1 * static_cast<double>(grid.size());
  if (partial) log << "sweep: " << res.n_failed_points() << " of " << grid.size() << " grid points failed\n";
  return out.finish(partial ? kComputeError : kSuccess);
}

inline int cmd_optimize(const RunConfig& cfg, std::ostream& log = std::cerr) {
  const auto model = make_model(cfg.model);
  const auto kind = detail::resolve_kind(cfg, *model);
  Bounds bounds = model->design_bounds();
  if (!cfg.optimize.bounds.empty()) {
    try {
      bounds = Bounds(cfg.optimize.bounds);
    } catch (const DomainError& e) {
      cfg.fail("optimize.bounds", std::string("invalid bounds: ") + e.what());
    }
    const Bounds mb = model->design_bounds();
    if (bounds.dim() != mb.dim()) cfg.fail("optimize.bounds", "'optimize.bounds' has the wrong dimension");
    for (std::size_t i = 0; i < mb.dim(); ++i)
      if (bounds[i].lower < mb[i].lower || bounds[i].upper > mb[i].upper || !(bounds[i].upper > bounds[i].lower))
        cfg.fail("optimize.bounds", "'optimize.bounds' must be nonempty intervals inside the model's design bounds");
  }
  RunOutput out(cfg, "optimize");
  auto bo = cfg.optimize.bo;
  bo.workers = cfg.workers;
  design::BoState st;
  try {
    st = design::bayes_opt(*model, kind, bounds, bo, cfg.sampling, RngStream(cfg.seed));
  } catch (const EstimationError& e) {
    log << "optimization failed: " << e.what() << '\n';
    out.failures() = {{"message", e.what()}};
    return out.finish(kComputeError);
  }
  out.write_csv("bo_trace.csv", design::export_trace(st));
  const Vector& best = st.best_design();
  const json best_json{{"xi", std::vector<double>(best.begin(), best.end())},
                       {"value", st.best_value()},
                       {"epochs", st.epochs_run},
                       {"evaluations", st.values.size()},
                       {"surrogate_failed", st.surrogate_failed},
                       {"estimator", est::to_string(kind)}};
  out.write("best.json", best_json.dump(2) + "\n");
  out.summary() = best_json;
  out.failures() = {{"surrogate_failed", st.surrogate_failed}};
  return out.finish(kSuccess);
}

inline int cmd_abc_cv(const RunConfig& cfg, std::ostream& /*log*/ = std::cerr) {
  const auto model = make_model(cfg.model);
  const auto& cv = cfg.abc_cv;
  if (cv.design.empty()) cfg.fail("abc_cv", "'abc_cv.design' is required");
  if (cv.epsilon_grid.empty()) cfg.fail("abc_cv.epsilon_grid", "'abc_cv.epsilon_grid' must be nonempty");
  for (double e : cv.epsilon_grid)
    if (!(e > 0.0) || !std::isfinite(e))
      cfg.fail("abc_cv.epsilon_grid", "'abc_cv.epsilon_grid' values must lie in (0, inf)");
  if (cv.n_holdout < 1 || cv.n_holdout > cfg.sampling.abc.n_pool)
    cfg.fail("abc_cv.n_holdout", "'abc_cv.n_holdout' must lie in [1, abc.n_pool]");
  Vector x(static_cast<Eigen::Index>(cv.design.size()));
  for (std::size_t i = 0; i < cv.design.size(); ++i) x[static_cast<Eigen::Index>(i)] = cv.design[i];
  std::optional<DesignPoint> xi;
  try {
    xi = DesignPoint(x, model->design_bounds());
  } catch (const DomainError& e) {
    cfg.fail("abc_cv.design", std::string("invalid design: ") + e.what());
  }

  RunOutput out(cfg, "abc-cv");
  const RngStream root(cfg.seed);
  const auto& a = cfg.sampling.abc;
  const auto pool = abc::build_pool(*model, *xi, a.n_pool, abc::ConditionSpace::observation, root.child(0),
                                    a.normalize_summaries, cfg.workers);
  const auto res = abc::cv_select_threshold(pool, cv.epsilon_grid, cv.n_holdout, a.adjustment, a,
                                            model->param_support(), root.child(1), cfg.workers);
  io::CsvTable wide, longt;
  wide.header = {"epsilon"};
  for (std::size_t p = 0; p < model->param_dim(); ++p) wide.header.push_back("theta_" + std::to_string(p));
  longt.header = {"epsilon", "param_index", "median_abs_error"};
  for (const auto& row : res.table) {
    std::vector<double> w{row.epsilon};
    for (Eigen::Index p = 0; p < row.median_abs_error.size(); ++p) {
      w.push_back(row.median_abs_error[p]);
      longt.add_numeric_row({row.epsilon, static_cast<double>(p), row.median_abs_error[p]});
    }
    wide.add_numeric_row(w);
  }
  out.write_csv("abc_cv.csv", wide);
  out.write_csv("abc_cv_long.csv", longt);
  out.summary() = {{"epsilon_star", res.epsilon_star}};
  return out.finish(kSuccess);
}

inline int cmd_ratio_fit(const RunConfig& cfg, std::ostream& /*log*/ = std::cerr) {
  const auto& rf = cfg.ratio_fit;
  const Matrix xp = detail::read_samples(cfg, "numerator", rf.numerator);
  const Matrix xq = detail::read_samples(cfg, "denominator", rf.denominator);
  if (xp.cols() != xq.cols()) cfg.fail("ratio_fit", "numerator and denominator files have different column counts");
  const bool heldout = !rf.heldout_numerator.empty() || !rf.heldout_denominator.empty();
  Matrix hp = xp, hq = xq;
  if (heldout) {
    hp = detail::read_samples(cfg, "heldout_numerator", rf.heldout_numerator);
    hq = detail::read_samples(cfg, "heldout_denominator", rf.heldout_denominator);
    if (hp.cols() != xp.cols() || hq.cols() != xp.cols())
      cfg.fail("ratio_fit", "held-out files must have the same columns as the training files");
  }

  RunOutput out(cfg, "ratio-fit");
  const auto& rs = cfg.sampling.ratio;
  densratio::CvResult cv;
  densratio::RatioModel model;
  try {
    model = densratio::fit_rulsif(xp, xq, rs.alpha, rs.grid, rs.centers, RngStream(cfg.seed), &cv);
  } catch (const FitError& e) {
    out.failures() = {{"message", e.what()}};
    return out.finish(kComputeError);
  }
  const double residual = densratio::normal_equation_residual(model, xp, xq);
  if (rs.nonnegative) model = densratio::refit_nonnegative(std::move(model), xp, xq);

  io::CsvTable t;
  t.header = {"sigma", "lambda", "loss"};
  for (const auto& s : cv.table) t.add_numeric_row({s.sigma, s.lambda, s.loss});
  double mean_ratio = 0.0;
  for (Eigen::Index i = 0; i < hq.rows(); ++i) mean_ratio += model.evaluate(hq.row(i).transpose());
  mean_ratio /= static_cast<double>(hq.rows());
  const json diag{{"sigma", model.basis.sigma},
                  {"lambda", model.lambda},
                  {"alpha", model.alpha},
                  {"centers", model.basis.centers.rows()},
                  {"n_numerator", xp.rows()},
                  {"n_denominator", xq.rows()},
                  {"nonnegative", rs.nonnegative},
                  {"normal_equation_residual", residual},
                  {"heldout", heldout},
                  {"heldout_loss", densratio::heldout_loss(model, hp, hq)},
                  {"mean_ratio", mean_ratio}};
  out.write("ratio_model.json", densratio::to_json(model).dump(2) + "\n");
  out.write_csv("cv_table.csv", t);
  out.write("diagnostics.json", diag.dump(2) + "\n");
  out.summary() = diag;
  return out.finish(kSuccess);
}

/// Runs a named benchmark suite, printing one PASS/FAIL line per check. With
/// an output directory the suite's curves are written there as CSV.
inline int cmd_benchmark(const std::string& suite, const bench::SuiteOptions& opt,
                         const std::optional<std::string>& out_dir, std::ostream& os = std::cout) {
  const auto& names = bench::suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    std::string known;
    for (const auto& n : names) known += " " + n;
    throw ConfigError("unknown suite '" + suite + "' (available:" + known + ")");
  }
  const auto rep = bench::run_suite(suite, opt);
  bench::print_report(os, rep);
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    json checks = json::array();
    std::vector<std::string> files;
    for (const auto& c : rep.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
    for (const auto& [stem, table] : rep.tables) {
      write_atomic(std::filesystem::path(*out_dir) / (stem + ".csv"), io::to_csv_string(table));
      files.push_back(stem + ".csv");
    }
    const json manifest{{"tool", "lfgo"},          {"version", LFGO_VERSION}, {"command", "benchmark"},
                        {"suite", suite},          {"seed", opt.seed},        {"passed", rep.passed()},
                        {"checks", checks},        {"artifacts", files},      {"wall_time_s", rep.wall_time_s}};
    write_atomic(std::filesystem::path(*out_dir) / "manifest.json", manifest.dump(2) + "\n");
  }
  return rep.passed() ? kSuccess : kComputeError;
}

/// Full command-line entry point (also used in-process by the tests).
inline int run_cli(int argc, const char* const* argv, std::ostream& os = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Likelihood-free goal-oriented experimental design", "lfgo"};
  app.set_version_flag("--version", std::string(LFGO_VERSION));
  app.require_subcommand(1);

  std::string config_path, suite, out_dir;
  std::uint64_t seed = 0;
  std::size_t workers = 0;
  const std::vector<std::pair<std::string, std::string>> commands{
      {"sweep", "Grid sweep of the expected utility (curve.csv, curve.svg)"},
      {"optimize", "Bayesian optimization of the expected utility (bo_trace.csv, best.json)"},
      {"abc-cv", "Leave-one-out ABC threshold table (abc_cv.csv)"},
      {"ratio-fit", "Fit a density ratio to two sample files (ratio_model.json, diagnostics)"},
      {"benchmark", "Run a named reproduction suite and print pass/fail lines"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    if (name == "benchmark") {
      sub->add_option("--suite", suite, "Suite name")->required();
    } else {
      sub->add_option("--config", config_path, "JSON run configuration")->required();
    }
    sub->add_option("--seed", seed, "Master seed (overrides the configuration)");
    sub->add_option("--workers", workers, "Worker threads (overrides the configuration)");
    sub->add_option("--out", out_dir, "Output directory (overrides the configuration)");
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, os, err);
    return code == 0 ? kSuccess : kConfigError;
  }

  CLI::App* chosen = nullptr;
  for (auto* s : subs)
    if (s->parsed()) chosen = s;
  const std::string name = chosen->get_name();
  const bool has_seed = chosen->count("--seed") > 0, has_workers = chosen->count("--workers") > 0,
             has_out = chosen->count("--out") > 0;

  try {
    if (name == "benchmark") {
      bench::SuiteOptions opt;
      if (has_seed) opt.seed = seed;
      if (has_workers) opt.workers = workers;
      opt.log = &err;
      return cmd_benchmark(suite, opt, has_out ? std::optional<std::string>(out_dir) : std::nullopt, os);
    }
    RunConfig cfg = load_config(config_path);
    if (has_seed) cfg.seed = seed;
    if (has_workers) cfg.workers = workers;
    if (has_out) cfg.output_dir = out_dir;
    if (name == "sweep") return cmd_sweep(cfg, err);
    if (name == "optimize") return cmd_optimize(cfg, err);
    if (name == "abc-cv") return cmd_abc_cv(cfg, err);
    return cmd_ratio_fit(cfg, err);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const CapabilityError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const EstimationError& e) {
    err << "computation failed: " << e.what() << '\n';
    return kComputeError;
  } catch (const SimulationError& e) {
    err << "computation failed: " << e.what() << '\n';
    return kComputeError;
  } catch (const FitError& e) {
    err << "computation failed: " << e.what() << '\n';
    return kComputeError;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternalError;
  }
}

}  // namespace lfgo::cli
