#pragma once

// Desk-scale reproductions of the published experiments, each reduced to a
// list of pass/fail checks with fixed tolerances. Used by `lfgo benchmark` and
// by the acceptance test binary.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lfgo/abc/threshold_cv.hpp"
#include "lfgo/design/grid.hpp"
#include "lfgo/io/csv.hpp"
#include "lfgo/sim/registry.hpp"

namespace lfgo::bench {

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SuiteReport {
  std::string suite;
  std::vector<Check> checks;
  std::vector<std::pair<std::string, io::CsvTable>> tables;  ///< (file stem, table)
  double wall_time_s = 0.0;

  bool passed() const {
    return !checks.empty() && std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
  }
};

struct SuiteOptions {
  std::uint64_t seed = 20240607;
  std::size_t workers = 1;
  std::ostream* log = nullptr;  ///< per-point progress, if set
};

namespace detail {

inline std::string fmt(double v, int precision = 4) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

inline bool within(double value, double target, double tol) { return std::abs(value - target) <= tol + 1e-12; }

class Progress {
 public:
  explicit Progress(std::ostream* os) : os_(os) {}
  void operator()(const std::string& line) {
    if (!os_) return;
    std::lock_guard lock(mu_);
    *os_ << line << std::endl;
  }

 private:
  std::ostream* os_;
  std::mutex mu_;
};

/// Sweep with per-point progress lines. Grid points run on opt.workers threads.
inline design::SweepResult sweep(const Model& model, est::EstimatorKind kind, const design::DesignGrid& grid,
                                 est::EstimatorConfig cfg, const RngStream& stream, const SuiteOptions& opt,
                                 const std::string& label) {
  cfg.workers = 1;
  Progress progress(opt.log);
  return design::grid_sweep(
      grid,
      [&](const DesignPoint& xi, const RngStream& s) {
        auto e = est::estimate_utility(model, xi, kind, cfg, s);
        std::ostringstream os;
        os << "  " << label << " xi=(";
        for (std::size_t d = 0; d < xi.dim(); ++d) os << (d ? "," : "") << fmt(xi[d], 3);
        os << ") U=" << fmt(e.mean) << " +- " << fmt(e.std, 3) << " [" << fmt(e.wall_time_s, 3) << " s]";
        progress(os.str());
        return e;
      },
      stream, opt.workers);
}

inline std::vector<double> means(const design::SweepResult& r) {
  std::vector<double> v;
  for (const auto& e : r.estimates) v.push_back(e.mean);
  return v;
}

inline std::vector<double> stds(const design::SweepResult& r) {
  std::vector<double> v;
  for (const auto& e : r.estimates) v.push_back(e.std);
  return v;
}

inline std::size_t argmax(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

inline std::size_t argmin(const std::vector<double>& v) {
  return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

/// A point no lower than its neighbors (an endpoint needs only its one neighbor).
inline bool is_local_max(const std::vector<double>& v, std::size_t k) {
  return (k == 0 || v[k] >= v[k - 1]) && (k + 1 == v.size() || v[k] >= v[k + 1]);
}

inline bool local_max_near(const std::vector<double>& v, std::size_t k0, std::size_t radius = 1) {
  const std::size_t lo = k0 >= radius ? k0 - radius : 0, hi = std::min(v.size() - 1, k0 + radius);
  for (std::size_t k = lo; k <= hi; ++k)
    if (is_local_max(v, k)) return true;
  return false;
}

inline std::size_t nearest_index(const std::vector<double>& grid, double x) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < grid.size(); ++k)
    if (std::abs(grid[k] - x) < std::abs(grid[best] - x)) best = k;
  return best;
}

inline std::string curve_text(const std::vector<double>& xs, const std::vector<double>& m) {
  std::ostringstream os;
  for (std::size_t k = 0; k < xs.size(); ++k) os << (k ? " " : "") << fmt(xs[k], 3) << ":" << fmt(m[k], 3);
  return os.str();
}

inline std::unique_ptr<Model> model(const std::string& name, const std::string& qoi, double t0 = 0.1) {
  ModelSpec spec;
  spec.name = name;
  spec.qoi = qoi;
  spec.t0 = t0;
  return make_model(spec);
}

/// Peak location and value checks shared by the sweep suites.
inline void peak_checks(SuiteReport& rep, const std::string& label, const std::vector<double>& xs,
                        const std::vector<double>& m, double xi_target, double xi_tol, double value_target,
                        double value_tol) {
  const std::size_t k = argmax(m);
  rep.checks.push_back({label + " argmax at " + fmt(xi_target) + " +- " + fmt(xi_tol),
                        within(xs[k], xi_target, xi_tol), "argmax " + fmt(xs[k])});
  rep.checks.push_back({label + " peak value " + fmt(value_target) + " +- " + fmt(value_tol),
                        within(m[k], value_target, value_tol), "peak " + fmt(m[k])});
}

inline est::EstimatorConfig sweep_config(std::size_t n_outer, std::size_t replicates, double epsilon) {
  est::EstimatorConfig cfg;
  cfg.n_outer = n_outer;
  cfg.n_inner = n_outer;
  cfg.n_replicates = replicates;
  cfg.abc.epsilon = epsilon;
  return cfg;
}

}  // namespace detail

/// Nonlinear 1D benchmark, Z = Theta: density-ratio estimate (y-space ratio)
/// against nested Monte Carlo with the explicit likelihood.
inline SuiteReport suite_nl1d(const SuiteOptions& opt) {
  constexpr double kAbsTol = 0.3, kSeTol = 3.0;
  SuiteReport rep;
  rep.suite = "nl1d";
  const auto m = detail::model("nl1d", "identity");
  const auto grid = design::DesignGrid::uniform(m->design_bounds(), {21});
  const auto& xs = grid.axes()[0];
  const auto cfg = detail::sweep_config(1000, 3, 0.1);
  const RngStream root(opt.seed);
  const auto dr = detail::sweep(*m, est::EstimatorKind::dr2, grid, cfg, root.child(0), opt, "dr2");
  const auto nmc = detail::sweep(*m, est::EstimatorKind::nmc_param, grid, cfg, root.child(1), opt, "nmc");
  const auto a = detail::means(dr), b = detail::means(nmc), sa = detail::stds(dr), sb = detail::stds(nmc);

  double worst = -HUGE_VAL;
  std::size_t worst_k = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const double tol = std::max(kAbsTol, kSeTol * std::hypot(sa[k], sb[k]));
    if (std::abs(a[k] - b[k]) - tol > worst) {
      worst = std::abs(a[k] - b[k]) - tol;
      worst_k = k;
    }
  }
  rep.checks.push_back({"pointwise |dr2 - nmc| <= max(0.3, 3 combined std)", worst <= 0.0,
                        "worst at xi=" + detail::fmt(xs[worst_k]) + ": dr2 " + detail::fmt(a[worst_k]) + " nmc " +
                            detail::fmt(b[worst_k])});
  const std::size_t k02 = detail::nearest_index(xs, 0.2), k1 = detail::nearest_index(xs, 1.0);
  for (const auto& [label, v] : {std::pair{"dr2", a}, std::pair{"nmc", b}}) {
    rep.checks.push_back({std::string(label) + " minimum at xi=0", detail::argmin(v) == 0,
                          "argmin " + detail::fmt(xs[detail::argmin(v)])});
    rep.checks.push_back({std::string(label) + " local maxima within one step of 0.2 and 1",
                          detail::local_max_near(v, k02) && detail::local_max_near(v, k1), detail::curve_text(xs, v)});
  }
  rep.tables.emplace_back("nl1d_dr2", design::export_curve(dr));
  rep.tables.emplace_back("nl1d_nmc", design::export_curve(nmc));
  return rep;
}

/// Nonlinear 2D benchmark with the Rosenbrock QoI on an 11 x 11 grid.
inline SuiteReport suite_nl2d(const SuiteOptions& opt) {
  constexpr double kStep = 0.1, kTarget = 3.17, kValueTol = 0.5;
  SuiteReport rep;
  rep.suite = "nl2d";
  const auto m = detail::model("nl2d", "rosenbrock");
  const auto grid = design::DesignGrid::uniform(m->design_bounds(), {11, 11});
  const auto cfg = detail::sweep_config(1000, 1, 0.1);
  const auto res = detail::sweep(*m, est::EstimatorKind::dr1, grid, cfg, RngStream(opt.seed).child(0), opt, "dr1");
  const auto& best = *res.argmax;
  rep.checks.push_back({"argmax within one grid step of (0, 0.2)",
                        detail::within(best[0], 0.0, kStep) && detail::within(best[1], 0.2, kStep),
                        "argmax (" + detail::fmt(best[0]) + ", " + detail::fmt(best[1]) + ")"});
  rep.checks.push_back({"max value 3.17 +- 0.5", detail::within(res.max_value, kTarget, kValueTol),
                        "max " + detail::fmt(res.max_value)});
  rep.tables.emplace_back("nl2d_dr1", design::export_curve(res));
  return rep;
}

namespace detail {

inline design::DesignGrid sir_grid() {
  std::vector<double> xs;
  for (int k = 0; k <= 15; ++k) xs.push_back(0.2 * k);
  return design::DesignGrid({xs}, Bounds{{0.0, 3.0}});
}

inline design::SweepResult sir_sweep(const std::string& qoi, double t0, const RngStream& stream,
                                     const SuiteOptions& opt, const std::string& label) {
  const auto m = model("sir", qoi, t0);
  return sweep(*m, est::EstimatorKind::dr1, sir_grid(), sweep_config(1000, 3, 0.1), stream, opt, label);
}

}  // namespace detail

/// SIR with Z = Theta.
inline SuiteReport suite_sir_param(const SuiteOptions& opt) {
  constexpr double kRiseFraction = 0.5, kDeclineMargin = 0.1;
  SuiteReport rep;
  rep.suite = "sir-param";
  const auto res = detail::sir_sweep("identity", 0.1, RngStream(opt.seed).child(0), opt, "dr1");
  const auto xs = detail::sir_grid().axes()[0];
  const auto m = detail::means(res);
  detail::peak_checks(rep, "Z=Theta", xs, m, 0.4, 0.2, 2.07, 0.5);
  const double peak = m[detail::argmax(m)];
  rep.checks.push_back({"utility at xi=0 below half the peak", m.front() <= kRiseFraction * peak,
                        "U(0) " + detail::fmt(m.front())});
  rep.checks.push_back({"utility declines at large xi (U(3) <= peak - 0.1)", m.back() <= peak - kDeclineMargin,
                        "U(3) " + detail::fmt(m.back())});
  rep.tables.emplace_back("sir_param", design::export_curve(res));
  return rep;
}

/// SIR with Z = R(0.3) + R(0.4) + R(0.5).
inline SuiteReport suite_sir_recov(const SuiteOptions& opt) {
  SuiteReport rep;
  rep.suite = "sir-recov";
  const auto res = detail::sir_sweep("recovered_sum", 0.1, RngStream(opt.seed).child(0), opt, "dr1");
  detail::peak_checks(rep, "recovered sum", detail::sir_grid().axes()[0], detail::means(res), 0.2, 0.2, 0.64, 0.35);
  rep.tables.emplace_back("sir_recov", design::export_curve(res));
  return rep;
}

/// SIR with the incidence QoI at t0 = 0.1 (quantitative) and t0 = 2 (flatness only).
inline SuiteReport suite_sir_incidence(const SuiteOptions& opt) {
  constexpr double kFlatTol = 0.2;
  SuiteReport rep;
  rep.suite = "sir-incidence";
  const auto xs = detail::sir_grid().axes()[0];
  const auto early = detail::sir_sweep("incidence", 0.1, RngStream(opt.seed).child(0), opt, "t0=0.1");
  detail::peak_checks(rep, "incidence t0=0.1", xs, detail::means(early), 0.4, 0.2, 1.15, 0.5);
  const auto late = detail::sir_sweep("incidence", 2.0, RngStream(opt.seed).child(1), opt, "t0=2");
  const auto m = detail::means(late);
  const double at04 = m[detail::nearest_index(xs, 0.4)], peak = m[detail::argmax(m)];
  rep.checks.push_back({"incidence t0=2: U(0.4) within 0.2 of the maximum", at04 >= peak - kFlatTol,
                        "U(0.4) " + detail::fmt(at04) + ", max " + detail::fmt(peak)});
  rep.tables.emplace_back("sir_incidence_t0_0.1", design::export_curve(early));
  rep.tables.emplace_back("sir_incidence_t0_2", design::export_curve(late));
  return rep;
}

namespace detail {

inline design::SweepResult fhn_sweep(const std::string& qoi, const RngStream& stream, const SuiteOptions& opt) {
  const auto m = model("fhn", qoi);
  const auto grid = design::DesignGrid::uniform(m->design_bounds(), {15});
  return sweep(*m, est::EstimatorKind::dr1, grid, sweep_config(500, 3, 0.5), stream, opt, qoi);
}

}  // namespace detail

inline SuiteReport suite_fhn_param(const SuiteOptions& opt) {
  SuiteReport rep;
  rep.suite = "fhn-param";
  const auto res = detail::fhn_sweep("identity", RngStream(opt.seed).child(0), opt);
  detail::peak_checks(rep, "Z=Theta", design::DesignGrid::linspace(0.0, 0.8, 15), detail::means(res), 0.69, 0.1,
                      1.94, 0.6);
  rep.tables.emplace_back("fhn_param", design::export_curve(res));
  return rep;
}

/// Spike-rate QoI. "Sharp rise": the last grid value exceeds the mean over
/// designs in [0.3, 0.6] by at least half the peak value.
inline SuiteReport suite_fhn_spike(const SuiteOptions& opt) {
  constexpr double kRiseFraction = 0.5;
  SuiteReport rep;
  rep.suite = "fhn-spike";
  const auto xs = design::DesignGrid::linspace(0.0, 0.8, 15);
  const auto res = detail::fhn_sweep("spike_rate", RngStream(opt.seed).child(0), opt);
  const auto m = detail::means(res);
  detail::peak_checks(rep, "spike rate", xs, m, 0.78, 0.1, 0.77, 0.4);
  double mid = 0.0;
  int n_mid = 0;
  for (std::size_t k = 0; k < xs.size(); ++k)
    if (xs[k] >= 0.3 - 1e-12 && xs[k] <= 0.6 + 1e-12) {
      mid += m[k];
      ++n_mid;
    }
  mid /= n_mid;
  const double peak = m[detail::argmax(m)];
  rep.checks.push_back({"sharp rise at high xi", m.back() - mid >= kRiseFraction * peak,
                        "U(0.8) " + detail::fmt(m.back()) + " vs mean over [0.3,0.6] " + detail::fmt(mid)});
  rep.tables.emplace_back("fhn_spike", design::export_curve(res));
  return rep;
}

/// Wall time of one utility evaluation on the N-dimensional benchmark as the
/// dimension grows (median of three timings per dimension).
inline SuiteReport suite_scaling(const SuiteOptions& opt) {
  constexpr double kMaxGrowth3to10 = 3.0;
  SuiteReport rep;
  rep.suite = "scaling";
  const std::vector<std::size_t> dims{3, 10, 20};
  auto cfg = detail::sweep_config(500, 1, 0.1);
  cfg.workers = opt.workers;
  std::vector<double> times;
  io::CsvTable t;
  t.header = {"n_dim", "wall_time_s", "utility"};
  detail::Progress progress(opt.log);
  for (std::size_t d = 0; d < dims.size(); ++d) {
    ModelSpec spec;
    spec.name = "nlnd";
    spec.qoi = "rosenbrock";
    spec.n_dim = dims[d];
    const auto m = make_model(spec);
    const auto xi = m->design(Vector::Constant(static_cast<Eigen::Index>(dims[d]), 0.2));
    std::vector<double> runs;
    double u = 0.0;
    for (int r = 0; r < 3; ++r) {
      const auto e = est::estimate_utility(*m, xi, est::EstimatorKind::dr1, cfg, RngStream(opt.seed).child(d));
      runs.push_back(e.wall_time_s);
      u = e.mean;
    }
    times.push_back(stats::median(runs));
    progress("  n_dim=" + std::to_string(dims[d]) + " t=" + detail::fmt(times.back()) + " s U=" + detail::fmt(u));
    t.add_numeric_row({static_cast<double>(dims[d]), times.back(), u});
  }
  const double g1 = times[1] / times[0], g2 = times[2] / times[1];
  rep.checks.push_back({"time(n=10) / time(n=3) <= 3", g1 <= kMaxGrowth3to10, "ratio " + detail::fmt(g1)});
  rep.checks.push_back({"super-linear beyond n=10: time(n=20) / time(n=10) > 2", g2 > 2.0, "ratio " + detail::fmt(g2)});
  rep.tables.emplace_back("scaling", std::move(t));
  return rep;
}

/// Leave-one-out threshold table for SIR (1000 held-out candidates from a
/// 10^4 pool at xi = 0.4, linear adjustment).
inline SuiteReport suite_abc_table(const SuiteOptions& opt) {
  constexpr double kRelTol = 0.5, kBeta = 0.0645, kGamma = 0.0256;
  SuiteReport rep;
  rep.suite = "abc-table";
  const auto m = detail::model("sir", "identity");
  Vector x(1);
  x << 0.4;
  const RngStream root(opt.seed);
  const auto pool =
      abc::build_pool(*m, m->design(x), 10000, abc::ConditionSpace::observation, root.child(0), true, opt.workers);
  const abc::AbcConfig cfg;
  const auto res = abc::cv_select_threshold(pool, {0.1, 0.2, 0.3, 0.4, 0.5}, 1000, abc::Adjustment::linear, cfg,
                                            m->param_support(), root.child(1), opt.workers);
  io::CsvTable t;
  t.header = {"epsilon", "beta", "gamma"};
  for (const auto& row : res.table) t.add_numeric_row({row.epsilon, row.median_abs_error[0], row.median_abs_error[1]});
  const Vector& first = res.table.front().median_abs_error;
  rep.checks.push_back({"beta error at eps=0.1 within 50% of 0.0645",
                        detail::within(first[0], kBeta, kRelTol * kBeta), "beta " + detail::fmt(first[0])});
  rep.checks.push_back({"gamma error at eps=0.1 within 50% of 0.0256",
                        detail::within(first[1], kGamma, kRelTol * kGamma), "gamma " + detail::fmt(first[1])});
  bool monotone = true;
  for (std::size_t k = 1; k < res.table.size(); ++k)
    monotone = monotone && (res.table[k].median_abs_error.array() >= res.table[k - 1].median_abs_error.array()).all();
  std::ostringstream detail_text;
  for (const auto& row : res.table)
    detail_text << row.epsilon << ":(" << detail::fmt(row.median_abs_error[0], 3) << ","
                << detail::fmt(row.median_abs_error[1], 3) << ") ";
  rep.checks.push_back({"errors nondecreasing in eps", monotone, detail_text.str()});
  rep.tables.emplace_back("abc_table", std::move(t));
  return rep;
}

namespace detail {

inline Matrix normal_sample(std::size_t n, double mean, double sd, const RngStream& stream) {
  auto rng = stream.engine();
  Matrix x(static_cast<Eigen::Index>(n), 1);
  for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, 0) = sample_normal(mean, sd, rng);
  return x;
}

/// W1 distance between an empirical sample and N(mean, sd^2), integrating
/// |F_n - F| on a fine grid.
inline double wasserstein_to_normal(std::vector<double> x, double mean, double sd) {
  std::sort(x.begin(), x.end());
  const double lo = std::min(x.front(), mean - 8 * sd), hi = std::max(x.back(), mean + 8 * sd);
  const int n_grid = 20000;
  const double h = (hi - lo) / n_grid;
  double w = 0.0;
  std::size_t below = 0;
  for (int g = 0; g < n_grid; ++g) {
    const double t = lo + (g + 0.5) * h;
    while (below < x.size() && x[below] <= t) ++below;
    w += std::abs(static_cast<double>(below) / static_cast<double>(x.size()) - stats::normal_cdf((t - mean) / sd)) * h;
  }
  return w;
}

}  // namespace detail

/// Fast statistical properties of the ratio fitter, the estimators and the simulators.
inline SuiteReport suite_properties(const SuiteOptions& opt) {
  SuiteReport rep;
  rep.suite = "properties";
  const RngStream root(opt.seed);
  const densratio::CvGrid grid;

  {  // solver residual and the alpha = 0 reduction
    const Matrix xp = detail::normal_sample(500, 1.0, 1.0, root.child(0).child(0));
    const Matrix xq = detail::normal_sample(500, 0.0, 1.0, root.child(0).child(1));
    const auto u = densratio::fit_ulsif(xp, xq, grid, 100, root.child(0).child(2));
    const auto r = densratio::fit_rulsif(xp, xq, 0.0, grid, 100, root.child(0).child(2));
    const auto pp = densratio::kernel_matrix(u.input_scale.apply(xp), u.basis.centers, u.basis.sigma);
    const auto [hm, h] = densratio::ulsif_system(densratio::KernelMoments::of(pp),
                                                 densratio::KernelMoments::of(densratio::kernel_matrix(
                                                     u.input_scale.apply(xq), u.basis.centers, u.basis.sigma)),
                                                 0.0);
    const double res = densratio::normal_equation_residual(u, xp, xq) / (1.0 + h.lpNorm<Eigen::Infinity>());
    rep.checks.push_back({"uLSIF normal-equation residual <= 1e-8", res <= 1e-8, "relative residual " + detail::fmt(res)});
    const bool same = u.weights.size() == r.weights.size() && (u.weights.array() == r.weights.array()).all() &&
                      u.basis.sigma == r.basis.sigma && u.lambda == r.lambda;
    rep.checks.push_back({"RuLSIF alpha=0 equals uLSIF bitwise", same, same ? "identical" : "weights differ"});
    (void)hm;
  }
  {  // p = q
    const Matrix xp = detail::normal_sample(1000, 0.0, 1.0, root.child(1).child(0));
    const Matrix xq = detail::normal_sample(1000, 0.0, 1.0, root.child(1).child(1));
    const Matrix held = detail::normal_sample(1000, 0.0, 1.0, root.child(1).child(2));
    const auto model = densratio::fit_ulsif(xp, xq, grid, 100, root.child(1).child(3));
    double mean = 0.0;
    for (Eigen::Index i = 0; i < held.rows(); ++i) mean += model.evaluate(held.row(i).transpose());
    mean /= static_cast<double>(held.rows());
    rep.checks.push_back({"p=q mean ratio in [0.8, 1.2]", mean >= 0.8 && mean <= 1.2, "mean " + detail::fmt(mean)});
  }
  {  // analytic Gaussian ratio exp(x - 0.5)
    const Matrix xp = detail::normal_sample(2000, 1.0, 1.0, root.child(2).child(0));
    const Matrix xq = detail::normal_sample(2000, 0.0, 1.0, root.child(2).child(1));
    const auto model = densratio::fit_ulsif(xp, xq, grid, 100, root.child(2).child(2));
    double mse = 0.0;
    const int n = 301;
    for (int k = 0; k < n; ++k) {
      const double x = -1.0 + 3.0 * k / (n - 1);
      const double err = model.evaluate(Vector::Constant(1, x)) - std::exp(x - 0.5);
      mse += err * err / n;
    }
    rep.checks.push_back({"Gaussian-pair ratio MSE on [-1, 2] <= 0.1 (n=2000)", mse <= 0.1, "MSE " + detail::fmt(mse)});
  }
  {  // linear-Gaussian mutual information
    est::EstimatorConfig cfg = detail::sweep_config(500, 3, 0.1);
    cfg.workers = opt.workers;
    const LinearGaussianModel det(0.5), sto(0.5, 0.5), indep(0.5, 0.0, true);
    const Vector x0 = Vector::Zero(1);
    struct Case {
      est::EstimatorKind kind;
      const LinearGaussianModel* model;
      double floor;
    };
    const std::vector<Case> cases{{est::EstimatorKind::dr1, &det, 0.15},      {est::EstimatorKind::dr2, &det, 0.15},
                                  {est::EstimatorKind::nmc_param, &det, 0.15}, {est::EstimatorKind::nmc_z1, &sto, 0.15},
                                  {est::EstimatorKind::nmc_z2, &sto, 0.15},    {est::EstimatorKind::kde, &det, 0.2}};
    for (std::size_t c = 0; c < cases.size(); ++c) {
      const auto& cs = cases[c];
      const auto e = est::estimate_utility(*cs.model, cs.model->design(x0), cs.kind, cfg, root.child(3).child(c));
      const double truth = cs.kind == est::EstimatorKind::nmc_param ? cs.model->parameter_information()
                                                                    : cs.model->mutual_information();
      const double tol = std::max(cs.floor, 3.0 * e.std);
      rep.checks.push_back({"linear-Gaussian MI recovery: " + est::to_string(cs.kind), detail::within(e.mean, truth, tol),
                            detail::fmt(e.mean) + " +- " + detail::fmt(e.std, 3) + " vs " + detail::fmt(truth)});
    }
    for (auto kind : {est::EstimatorKind::dr1, est::EstimatorKind::dr2}) {
      const auto e = est::estimate_utility(indep, indep.design(x0), kind, cfg, root.child(4).child(static_cast<int>(kind)));
      rep.checks.push_back({"zero-MI model within 3 std of 0: " + est::to_string(kind),
                            std::abs(e.mean) <= 3.0 * e.std + 1e-12,
                            detail::fmt(e.mean) + " +- " + detail::fmt(e.std, 3)});
    }
  }
  {  // 1D benchmark: bijective equality and the data-processing inequality
    est::EstimatorConfig cfg = detail::sweep_config(500, 3, 0.1);
    cfg.workers = opt.workers;
    const auto ident = detail::model("nl1d", "identity"), square = detail::model("nl1d", "centered_square");
    bool eq_ok = true, dpi_ok = true;
    std::ostringstream eq_text, dpi_text;
    const std::vector<double> xs{0.0, 0.2, 0.5, 1.0};
    for (std::size_t k = 0; k < xs.size(); ++k) {
      const auto xi = ident->design(Vector::Constant(1, xs[k]));
      const RngStream s = root.child(5).child(k);
      const auto nmc = est::estimate_utility(*ident, xi, est::EstimatorKind::nmc_param, cfg, s.child(0));
      const auto d2 = est::estimate_utility(*ident, xi, est::EstimatorKind::dr2, cfg, s.child(1));
      const auto d1 = est::estimate_utility(*square, xi, est::EstimatorKind::dr1, cfg, s.child(2));
      eq_ok = eq_ok && std::abs(d2.mean - nmc.mean) <= std::max(0.3, 3.0 * std::hypot(d2.std, nmc.std));
      dpi_ok = dpi_ok && d1.mean <= nmc.mean + 3.0 * std::hypot(d1.std, nmc.std);
      eq_text << detail::fmt(xs[k], 2) << ":" << detail::fmt(d2.mean, 3) << "/" << detail::fmt(nmc.mean, 3) << " ";
      dpi_text << detail::fmt(xs[k], 2) << ":" << detail::fmt(d1.mean, 3) << "/" << detail::fmt(nmc.mean, 3) << " ";
    }
    rep.checks.push_back({"bijective QoI: dr2 matches nested MC on the 1D benchmark", eq_ok, eq_text.str()});
    rep.checks.push_back({"non-injective QoI: dr1 <= nested MC + 3 std (data processing)", dpi_ok, dpi_text.str()});
  }
  {  // SIR invariants over 10^3 trajectories
    bool conserved = true, monotone = true;
    auto rng = root.child(6).engine();
    for (int n = 0; n < 1000; ++n) {
      const double beta = rng.uniform01(), gamma = rng.uniform01() * 0.5;
      const auto traj = sir_simulate(beta, gamma, 3.0, rng);
      const auto& st = traj.states();
      for (std::size_t k = 0; k < st.size(); ++k) {
        conserved = conserved && st[k].s + st[k].i + st[k].r == 500 && st[k].s >= 0 && st[k].i >= 0 && st[k].r >= 0;
        if (k > 0) monotone = monotone && st[k].s <= st[k - 1].s && st[k].r >= st[k - 1].r;
      }
    }
    rep.checks.push_back({"SIR conservation and nonnegativity (1000 trajectories)", conserved, ""});
    rep.checks.push_back({"SIR monotone S and R (1000 trajectories)", monotone, ""});
  }
  {  // conjugate-Gaussian ABC convergence schedule
    const LinearGaussianModel toy(0.1);
    const double y_obs = 1.0, post_var = 1.0 / (1.0 + 100.0), post_mean = post_var * 100.0 * y_obs;
    const std::vector<std::pair<double, std::size_t>> schedule{{0.5, 1000}, {0.2, 10000}, {0.1, 100000}};
    std::vector<double> w;
    for (std::size_t k = 0; k < schedule.size(); ++k) {
      const auto pool = abc::build_pool(toy, toy.design(Vector::Zero(1)), schedule[k].second,
                                        abc::ConditionSpace::observation, root.child(7).child(k), true, opt.workers);
      const auto post = abc::abc_reject(pool, SummaryVector{y_obs}, schedule[k].first, 1);
      w.push_back(detail::wasserstein_to_normal(std::vector<double>(post.thetas.col(0).begin(), post.thetas.col(0).end()),
                                                post_mean, std::sqrt(post_var)));
    }
    rep.checks.push_back({"ABC W1 to the conjugate posterior nonincreasing along the schedule",
                          w[1] <= w[0] && w[2] <= w[1],
                          detail::fmt(w[0]) + " -> " + detail::fmt(w[1]) + " -> " + detail::fmt(w[2])});
  }
  return rep;
}

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"nl1d",      "nl2d",      "sir-param", "sir-recov",  "sir-incidence",
                                              "fhn-param", "fhn-spike", "scaling",   "abc-table", "properties"};
  return names;
}

inline SuiteReport run_suite(const std::string& name, const SuiteOptions& opt = {}) {
  using Fn = SuiteReport (*)(const SuiteOptions&);
  static const std::vector<std::pair<std::string, Fn>> table{
      {"nl1d", suite_nl1d},           {"nl2d", suite_nl2d},           {"sir-param", suite_sir_param},
      {"sir-recov", suite_sir_recov}, {"sir-incidence", suite_sir_incidence},
      {"fhn-param", suite_fhn_param}, {"fhn-spike", suite_fhn_spike}, {"scaling", suite_scaling},
      {"abc-table", suite_abc_table}, {"properties", suite_properties}};
  for (const auto& [n, fn] : table) {
    if (n != name) continue;
    const auto start = std::chrono::steady_clock::now();
    SuiteReport rep = fn(opt);
    rep.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
  }
  throw DomainError("unknown benchmark suite '" + name + "'");
}

/// One "PASS|FAIL  suite: check  (detail)" line per check, then a summary line.
inline void print_report(std::ostream& os, const SuiteReport& rep) {
  for (const auto& c : rep.checks)
    os << (c.pass ? "PASS" : "FAIL") << "  " << rep.suite << ": " << c.name
       << (c.detail.empty() ? "" : "  (" + c.detail + ")") << '\n';
  os << rep.suite << ": " << (rep.passed() ? "passed" : "FAILED") << " in " << detail::fmt(rep.wall_time_s, 4)
     << " s\n";
}

}  // namespace lfgo::bench
