#include <gtest/gtest.h>

#include <cmath>

#include "lfgo/design/bayes_opt.hpp"
#include "lfgo/design/grid.hpp"

using namespace lfgo;
using namespace lfgo::design;

namespace {

est::UtilityEstimate fake(const DesignPoint& xi, double value) {
  est::UtilityEstimate e{xi, value, 0.1, 1, 10, est::EstimatorKind::dr1, 0, 0, 0.0, {}};
  return e;
}

}  // namespace

TEST(Grid, LinspaceHitsEndpointsExactly) {
  const auto v = DesignGrid::linspace(0.0, 3.0, 16);
  ASSERT_EQ(v.size(), 16u);
  EXPECT_EQ(v.front(), 0.0);
  EXPECT_EQ(v.back(), 3.0);
  EXPECT_NEAR(v[1], 0.2, 1e-15);
  EXPECT_EQ(DesignGrid::linspace(0.5, 1.0, 1), std::vector<double>{0.5});
  EXPECT_THROW(DesignGrid::linspace(0.0, 1.0, 0), DomainError);
}

TEST(Grid, RowMajorOrderLastAxisFastest) {
  const auto g = DesignGrid::uniform(Bounds::uniform(2, {0.0, 1.0}), {3, 2});
  ASSERT_EQ(g.size(), 6u);
  EXPECT_EQ(g.point(0).coordinates(), (Vector(2) << 0.0, 0.0).finished());
  EXPECT_EQ(g.point(1).coordinates(), (Vector(2) << 0.0, 1.0).finished());
  EXPECT_EQ(g.point(2).coordinates(), (Vector(2) << 0.5, 0.0).finished());
  EXPECT_EQ(g.point(5).coordinates(), (Vector(2) << 1.0, 1.0).finished());
  EXPECT_THROW(g.point(6), DomainError);
}

TEST(Grid, Validation) {
  const Bounds b{{0.0, 1.0}};
  EXPECT_THROW(DesignGrid({{0.5, 1.5}}, b), DomainError);
  EXPECT_THROW(DesignGrid({{}}, b), DomainError);
  EXPECT_THROW(DesignGrid({{0.5}, {0.5}}, b), DomainError);
  EXPECT_THROW(DesignGrid::uniform(b, {2, 2}), DomainError);
}

TEST(Sweep, EvaluatesEachPointOnItsChildStream) {
  const auto g = DesignGrid::uniform(Bounds{{0.0, 1.0}}, {5});
  const RngStream root(3);
  std::vector<RngStream> seen(5, RngStream(0));
  const auto res = grid_sweep(
      g,
      [&](const DesignPoint& xi, const RngStream& s) {
        seen[static_cast<std::size_t>(std::lround(xi[0] * 4))] = s;
        return fake(xi, -std::pow(xi[0] - 0.5, 2));
      },
      root, 2);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_TRUE(seen[k] == root.child(k));
  EXPECT_EQ(res.argmax_index, 2u);
  EXPECT_DOUBLE_EQ(res.max_value, 0.0);
  EXPECT_EQ(res.n_failed_points(), 0u);
  const auto t = export_curve(res);
  EXPECT_EQ(t.header, (std::vector<std::string>{"xi", "mean", "std"}));
  EXPECT_EQ(t.rows.size(), 5u);
}

TEST(Sweep, TiesGoToLowestIndex) {
  const auto g = DesignGrid::uniform(Bounds{{0.0, 1.0}}, {4});
  const auto res = grid_sweep(g, [](const DesignPoint& xi, const RngStream&) { return fake(xi, 1.0); }, RngStream(1));
  EXPECT_EQ(res.argmax_index, 0u);
}

TEST(Sweep, FailedPointsRecordedThenThreshold) {
  const auto g = DesignGrid::uniform(Bounds{{0.0, 1.0}}, {11});
  auto eval = [](const DesignPoint& xi, const RngStream&) {
    if (xi[0] > 0.85) throw EstimationError("nope");
    return fake(xi, xi[0]);
  };
  // one failure in ten is exactly at the 10% limit
  const auto g10 = DesignGrid::uniform(Bounds{{0.0, 1.0}}, {10});
  const auto ok = grid_sweep(
      g10,
      [](const DesignPoint& xi, const RngStream&) {
        if (xi[0] == 1.0) throw SimulationError("diverged", 1.0);
        return fake(xi, xi[0]);
      },
      RngStream(1), 1, 0.1);
  EXPECT_EQ(ok.n_failed_points(), 1u);
  EXPECT_TRUE(std::isnan(ok.estimates.back().mean));
  // two failures in eleven exceed 10% but are allowed at 100%
  EXPECT_THROW(grid_sweep(g, eval, RngStream(1), 1, 0.1), EstimationError);
  const auto loose = grid_sweep(g, eval, RngStream(1), 1, 1.0);
  EXPECT_EQ(loose.n_failed_points(), 2u);
  EXPECT_NEAR(loose.max_value, 0.8, 1e-12);
}

TEST(Bo, ExpectedImprovementClosedForm) {
  // EI = g Phi(g / s) + s phi(g / s)
  const double g = 0.3, s = 0.5;
  const double ref = g * 0.5 * std::erfc(-(g / s) / std::sqrt(2.0)) +
                     s * std::exp(-0.5 * (g / s) * (g / s)) / std::sqrt(2.0 * std::numbers::pi);
  EXPECT_NEAR(design::detail::expected_improvement(1.3, s * s, 1.0, 0.0), ref, 1e-14);
  EXPECT_DOUBLE_EQ(design::detail::expected_improvement(2.0, 0.0, 1.0, 0.1), 0.9);
  EXPECT_DOUBLE_EQ(design::detail::expected_improvement(0.5, 0.0, 1.0, 0.0), 0.0);
}

TEST(Bo, LatinHypercubeIsStratified) {
  const auto pts = design::detail::latin_hypercube(10, 3, RngStream(2));
  for (Eigen::Index k = 0; k < 3; ++k) {
    std::vector<int> bins(10, 0);
    for (const auto& p : pts) bins[static_cast<std::size_t>(p[k] * 10)]++;
    for (int b : bins) EXPECT_EQ(b, 1);
  }
}

TEST(Bo, FindsMaximumOfSmoothFunction) {
  const Bounds b{{0.0, 1.0}, {0.0, 1.0}};
  auto f = [](const DesignPoint& xi, const RngStream&) {
    return ObjectiveValue{-std::pow(xi[0] - 0.3, 2) - std::pow(xi[1] - 0.7, 2), 0.0};
  };
  BoSettings s;
  s.epochs = 12;
  const auto st = bayes_opt(f, b, s, RngStream(5));
  EXPECT_EQ(st.values.size(), 10u + 12u);
  EXPECT_EQ(st.trace.size(), st.values.size());
  EXPECT_EQ(st.epochs_run, 12u);
  EXPECT_FALSE(st.surrogate_failed);
  EXPECT_NEAR(st.best_design()[0], 0.3, 0.05);
  EXPECT_NEAR(st.best_design()[1], 0.7, 0.05);
  // best_so_far is the running maximum
  double run = -1e300;
  for (const auto& r : st.trace) {
    run = std::max(run, r.value);
    EXPECT_DOUBLE_EQ(r.best_so_far, run);
  }
  const auto t = export_trace(st);
  EXPECT_EQ(t.header, (std::vector<std::string>{"epoch", "xi1", "xi2", "value", "best_so_far"}));
}

TEST(Bo, BatchesAndReplay) {
  const Bounds b{{0.0, 2.0}};
  auto f = [](const DesignPoint& xi, const RngStream&) { return ObjectiveValue{std::sin(3 * xi[0]), 1e-4}; };
  BoSettings s;
  s.epochs = 3;
  s.batch = 2;
  s.initial_points = 4;
  const auto a = bayes_opt(f, b, s, RngStream(6));
  s.workers = 2;
  const auto c = bayes_opt(f, b, s, RngStream(6));
  EXPECT_EQ(a.values.size(), 4u + 3u * 2u);
  EXPECT_EQ(a.values, c.values);
  for (const auto& x : a.designs) EXPECT_TRUE(b.contains(x));
  BoSettings bad;
  bad.epochs = 0;
  EXPECT_THROW(bayes_opt(f, b, bad, RngStream(1)), DomainError);
}

TEST(Bo, NonFiniteObjectiveIsAnError) {
  auto f = [](const DesignPoint&, const RngStream&) { return ObjectiveValue{std::nan(""), 0.0}; };
  EXPECT_THROW(bayes_opt(f, Bounds{{0.0, 1.0}}, BoSettings{}, RngStream(1)), EstimationError);
}
