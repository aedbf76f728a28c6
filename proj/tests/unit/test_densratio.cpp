#include <gtest/gtest.h>

#include <cmath>

#include "lfgo/densratio/io.hpp"
#include "lfgo/densratio/kliep.hpp"
#include "lfgo/densratio/ulsif.hpp"
#include "lfgo/sim/distributions.hpp"

using namespace lfgo;
using namespace lfgo::densratio;

namespace {

Matrix normal_sample(int n, double mean, double sd, std::uint64_t seed) {
  auto rng = RngStream(seed).engine();
  Matrix x(n, 1);
  for (int i = 0; i < n; ++i) x(i, 0) = sample_normal(mean, sd, rng);
  return x;
}

double normal_pdf(double x, double m, double s) { return std::exp(-0.5 * (x - m) * (x - m) / (s * s)) / s; }

}  // namespace

TEST(Kernel, GaussianValuesAndCutoff) {
  Matrix x(2, 1), c(1, 1);
  x << 0.0, 1.0;
  c << 0.0;
  const Matrix k = kernel_matrix(x, c, 0.5);
  EXPECT_DOUBLE_EQ(k(0, 0), 1.0);
  EXPECT_NEAR(k(1, 0), std::exp(-2.0), 1e-15);
  // far-away entries are clamped at exp(-100), never subnormal
  x(1, 0) = 1e3;
  EXPECT_DOUBLE_EQ(kernel_matrix(x, c, 0.5)(1, 0), std::exp(-100.0));
}

TEST(Kernel, MedianDistanceAndCenters) {
  Matrix a(3, 1), b(1, 1);
  a << 0.0, 1.0, 3.0;
  b << 6.0;
  // pairwise distances of {0,1,3,6}: 1,3,6,2,5,3 -> median 3
  EXPECT_DOUBLE_EQ(median_pairwise_distance(a, b), 3.0);
  const Matrix c = sample_centers(a, 10, RngStream(1));
  EXPECT_EQ(c.rows(), 3);
  std::vector<double> v(c.data(), c.data() + 3);
  std::sort(v.begin(), v.end());
  EXPECT_EQ(v, (std::vector<double>{0.0, 1.0, 3.0}));
}

// One center: H = mean_q phi^2, h = mean_p phi, w = h / (H + lambda).
TEST(Ulsif, FixedSingleCenterByHand) {
  Matrix xp(2, 1), xq(3, 1), c(1, 1);
  xp << 0.0, 1.0;
  xq << 0.0, 2.0, -1.0;
  c << 0.0;
  const double s = 1.0, lambda = 0.1;
  auto phi = [&](double x) { return std::exp(-x * x / (2 * s * s)); };
  const double hq = (phi(0) * phi(0) + phi(2) * phi(2) + phi(-1) * phi(-1)) / 3.0;
  const double hp = (phi(0) + phi(1)) / 2.0;
  const auto m = fit_ulsif_fixed(xp, xq, c, s, lambda);
  EXPECT_NEAR(m.weights[0], hp / (hq + lambda), 1e-14);
  Vector x(1);
  x << 0.5;
  EXPECT_NEAR(m.evaluate(x), hp / (hq + lambda) * phi(0.5), 1e-14);
}

TEST(Ulsif, RelativeSystemMixesMoments) {
  Matrix xp(2, 1), xq(2, 1), c(1, 1);
  xp << 0.0, 0.5;
  xq << 1.0, 2.0;
  c << 0.0;
  auto phi = [](double x) { return std::exp(-x * x / 2.0); };
  const double alpha = 0.3, lambda = 0.01;
  const double hmat = alpha * (phi(0) * phi(0) + phi(0.5) * phi(0.5)) / 2.0 +
                      (1 - alpha) * (phi(1) * phi(1) + phi(2) * phi(2)) / 2.0;
  const double h = (phi(0) + phi(0.5)) / 2.0;
  EXPECT_NEAR(fit_ulsif_fixed(xp, xq, c, 1.0, lambda, alpha).weights[0], h / (hmat + lambda), 1e-14);
}

TEST(Ulsif, NormalEquationResidualIsTiny) {
  const Matrix xp = normal_sample(300, 0.0, 1.0, 1), xq = normal_sample(300, 0.5, 1.5, 2);
  CvResult cv;
  const auto m = fit_ulsif(xp, xq, CvGrid{}, 100, RngStream(3), &cv);
  EXPECT_LT(normal_equation_residual(m, xp, xq), 1e-8);
  EXPECT_EQ(cv.table.size(), 5u * 4u);
  // the chosen pair has the smallest CV loss
  double best = 1e300;
  for (const auto& r : cv.table) best = std::min(best, r.loss);
  bool found = false;
  for (const auto& r : cv.table)
    if (r.sigma == cv.sigma && r.lambda == cv.lambda) found = r.loss == best;
  EXPECT_TRUE(found);
  EXPECT_DOUBLE_EQ(m.basis.sigma, cv.sigma);
}

TEST(Ulsif, AlphaZeroIsUlsifBitwise) {
  const Matrix xp = normal_sample(200, 0.0, 1.0, 4), xq = normal_sample(200, 1.0, 1.0, 5);
  const auto a = fit_ulsif(xp, xq, CvGrid{}, 50, RngStream(6));
  const auto b = fit_rulsif(xp, xq, 0.0, CvGrid{}, 50, RngStream(6));
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(a.basis.centers, b.basis.centers);
  EXPECT_EQ(a.basis.sigma, b.basis.sigma);
}

TEST(Ulsif, EqualDistributionsGiveUnitRatio) {
  const Matrix xp = normal_sample(1000, 0.0, 1.0, 7), xq = normal_sample(1000, 0.0, 1.0, 8);
  const auto m = fit_ulsif(xp, xq, CvGrid{}, 100, RngStream(9));
  for (double x : {-1.5, -0.5, 0.0, 0.5, 1.5}) {
    Vector v(1);
    v << x;
    EXPECT_NEAR(m.evaluate(v), 1.0, 0.2) << "x=" << x;
  }
}

// p = N(0, 1), q = N(0, 1.5^2): r(x) = 1.5 exp(-x^2/2 + x^2/4.5).
TEST(Ulsif, RecoversGaussianRatio) {
  const Matrix xp = normal_sample(2000, 0.0, 1.0, 10), xq = normal_sample(2000, 0.0, 1.5, 11);
  const auto m = fit_ulsif(xp, xq, CvGrid{}, 100, RngStream(12));
  double se = 0.0;
  int n = 0;
  for (double x = -2.0; x <= 2.0; x += 0.1, ++n) {
    Vector v(1);
    v << x;
    const double truth = normal_pdf(x, 0, 1) / normal_pdf(x, 0, 1.5);
    se += std::pow(m.evaluate(v) - truth, 2);
  }
  EXPECT_LT(se / n, 0.02);
}

TEST(Ulsif, RelativeRatioIsBounded) {
  const Matrix xp = normal_sample(500, 0.0, 0.5, 13), xq = normal_sample(500, 0.0, 2.0, 14);
  const double alpha = 0.5;
  const auto m = fit_rulsif(xp, xq, alpha, CvGrid{}, 100, RngStream(15));
  Vector v(1);
  v << 0.0;
  // p / (0.5 p + 0.5 q) at 0, with p(0)/q(0) = 4, is 1.6; never above 1/alpha
  EXPECT_NEAR(m.evaluate(v), 1.6, 0.3);
  for (double x = -3; x <= 3; x += 0.25) {
    v << x;
    EXPECT_LT(m.evaluate(v), 1.0 / alpha + 0.3);
  }
}

TEST(Ulsif, InputValidation) {
  const Matrix one(1, 1), two = normal_sample(2, 0, 1, 1), wide(5, 2);
  EXPECT_THROW(fit_ulsif(one, two, CvGrid{}, 10, RngStream(1)), DomainError);
  EXPECT_THROW(fit_ulsif(two, wide, CvGrid{}, 10, RngStream(1)), DomainError);
  EXPECT_THROW(fit_rulsif(two, two, 1.0, CvGrid{}, 10, RngStream(1)), DomainError);
  CvGrid bad;
  bad.folds = 1;
  EXPECT_THROW(fit_ulsif(two, two, bad, 10, RngStream(1)), DomainError);
  Matrix nan = normal_sample(5, 0, 1, 1);
  nan(2, 0) = std::nan("");
  EXPECT_THROW(fit_ulsif(nan, two, CvGrid{}, 10, RngStream(1)), FitError);
}

// Brute-force oracle: enumerate active sets of a small nonnegative QP.
TEST(Nonnegative, SolverMatchesActiveSetEnumeration) {
  Matrix a(3, 3);
  a << 4, 1, 0.5, 1, 3, 1, 0.5, 1, 2;
  Vector h(3);
  h << 1, -2, 0.5;
  double best = 1e300;
  Vector best_w;
  for (int mask = 0; mask < 8; ++mask) {
    std::vector<int> free;
    for (int j = 0; j < 3; ++j)
      if (mask >> j & 1) free.push_back(j);
    Vector w = Vector::Zero(3);
    if (!free.empty()) {
      const Eigen::Index k = static_cast<Eigen::Index>(free.size());
      Matrix af(k, k);
      Vector hf(k);
      for (Eigen::Index i = 0; i < k; ++i) {
        hf[i] = h[free[i]];
        for (Eigen::Index j = 0; j < k; ++j) af(i, j) = a(free[i], free[j]);
      }
      const Vector wf = af.ldlt().solve(hf);
      if (wf.minCoeff() < 0) continue;
      for (Eigen::Index i = 0; i < k; ++i) w[free[i]] = wf[i];
    }
    const double f = 0.5 * w.dot(a * w) - h.dot(w);
    if (f < best) {
      best = f;
      best_w = w;
    }
  }
  const Vector w = densratio::detail::solve_nonnegative(a, h, Vector::Zero(3));
  EXPECT_TRUE(w.isApprox(best_w, 1e-8)) << w.transpose() << " vs " << best_w.transpose();
}

TEST(Nonnegative, RefitSatisfiesKkt) {
  const Matrix xp = normal_sample(400, 0.0, 0.3, 16), xq = normal_sample(400, 0.0, 2.0, 17);
  const auto raw = fit_ulsif(xp, xq, CvGrid{}, 80, RngStream(18));
  const auto m = refit_nonnegative(raw, xp, xq);
  EXPECT_GE(m.weights.minCoeff(), 0.0);
  EXPECT_EQ(m.basis.sigma, raw.basis.sigma);
  const Matrix pp = kernel_matrix(m.input_scale.apply(xp), m.basis.centers, m.basis.sigma);
  const Matrix pq = kernel_matrix(m.input_scale.apply(xq), m.basis.centers, m.basis.sigma);
  Matrix a = pq.transpose() * pq / static_cast<double>(pq.rows());
  a.diagonal().array() += m.lambda;
  const Vector h = pp.colwise().mean().transpose();
  const Vector g = a * m.weights - h;
  for (Eigen::Index j = 0; j < g.size(); ++j) {
    if (m.weights[j] > 0)
      EXPECT_NEAR(g[j], 0.0, 1e-6);
    else
      EXPECT_GE(g[j], -1e-6);
  }
  for (Eigen::Index i = 0; i < xq.rows(); ++i) EXPECT_GE(m.raw(xq.row(i).transpose()), 0.0);
}

TEST(RatioIo, JsonRoundTripEvaluatesIdentically) {
  const Matrix xp = normal_sample(100, 0.0, 1.0, 19), xq = normal_sample(100, 0.3, 1.0, 20);
  const auto m = fit_ulsif(xp, xq, CvGrid{}, 30, RngStream(21));
  const auto back = ratio_model_from_json(nlohmann::json::parse(to_json(m).dump()));
  for (Eigen::Index i = 0; i < xq.rows(); ++i)
    EXPECT_EQ(back.evaluate(xq.row(i).transpose()), m.evaluate(xq.row(i).transpose()));
  auto j = to_json(m);
  j["kind"] = "other";
  EXPECT_THROW(ratio_model_from_json(j), DomainError);
  j = to_json(m);
  j["weights"].push_back(1.0);
  EXPECT_THROW(ratio_model_from_json(j), DomainError);
}

TEST(Ulsif, HeldoutLossFormula) {
  Matrix xp(1, 1), xq(2, 1), c(1, 1);
  xp << 0.0;
  xq << 0.0, 1.0;
  c << 0.0;
  auto m = fit_ulsif_fixed(xp, xq, c, 1.0, 0.0);
  m.weights[0] = 2.0;
  const double rq0 = 2.0, rq1 = 2.0 * std::exp(-0.5), rp = 2.0;
  EXPECT_NEAR(heldout_loss(m, xp, xq), 0.5 * (rq0 * rq0 + rq1 * rq1) / 2.0 - rp, 1e-14);
}

TEST(Kliep, NormalizedAndMonotone) {
  const Matrix xp = normal_sample(300, 0.0, 1.0, 22), xq = normal_sample(300, 0.0, 1.5, 23);
  KliepTrace trace;
  const auto m = fit_kliep(xp, xq, KliepOptions{}, RngStream(24), &trace);
  EXPECT_NEAR(kliep_normalization(m, xq), 1.0, 1e-6);
  EXPECT_GE(m.weights.minCoeff(), 0.0);
  ASSERT_FALSE(trace.objective.empty());
  for (std::size_t k = 1; k < trace.objective.size(); ++k)
    EXPECT_GE(trace.objective[k], trace.objective[k - 1] - 1e-12);
  Vector v(1);
  v << 0.0;
  EXPECT_NEAR(m.evaluate(v), 1.5, 0.4);
}
