#include <gtest/gtest.h>

#include <cmath>

#include "lfgo/sim/registry.hpp"

using namespace lfgo;

namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace

TEST(Nonlinear, OneDMeanByHand) {
  // theta^3 xi^2 + theta exp(-|0.2 - xi|)
  EXPECT_NEAR(nonlinear1d_mean(0.5, 0.2), 0.125 * 0.04 + 0.5, 1e-15);
  EXPECT_NEAR(nonlinear1d_mean(1.0, 1.0), 1.0 + std::exp(-0.8), 1e-15);
  EXPECT_DOUBLE_EQ(nonlinear1d_mean(0.0, 0.7), 0.0);
}

TEST(Nonlinear, TwoDMeanByHand) {
  const Vector y = nonlinear2d_mean(vec({0.5, 1.0}), vec({1.0, 0.2}));
  EXPECT_NEAR(y[0], 0.125 + 1.0, 1e-15);
  EXPECT_NEAR(y[1], 1.0 + 0.5, 1e-15);
  EXPECT_THROW(nonlinear2d_mean(vec({0.5, 1.5}), vec({0.0, 0.0})), DomainError);
}

TEST(Nonlinear, NDimMatchesTwoDOnDiagonal) {
  // The N-dim form and the paired 2D form agree when xi_1 == xi_2.
  for (double a : {0.0, 0.3, 0.9})
    for (double t0 : {0.1, 0.7})
      for (double t1 : {0.2, 1.0}) {
        const Vector th = vec({t0, t1}), xi = vec({a, a});
        EXPECT_TRUE(nonlinear_nd_mean(th, xi).isApprox(nonlinear2d_mean(th, xi), 1e-14));
      }
}

TEST(Nonlinear, RosenbrockQoi) {
  EXPECT_DOUBLE_EQ(rosenbrock_qoi(vec({1.0, 1.0})), 0.0);
  EXPECT_DOUBLE_EQ(rosenbrock_qoi(vec({0.0, 0.0})), 1.0);
  EXPECT_DOUBLE_EQ(rosenbrock_qoi(vec({0.0, 1.0})), 1.0 + 5.0);
  // n = 3 at theta = 0: three (1 - 0)^2 terms, all cross terms zero
  EXPECT_DOUBLE_EQ(rosenbrock_qoi(vec({0.0, 0.0, 0.0})), 3.0);
  EXPECT_DOUBLE_EQ(rosenbrock_qoi(vec({1.0, 1.0, 1.0})), 0.0);
}

TEST(Nonlinear, LikelihoodAndNoise) {
  const auto m = NonlinearModel::one_d();
  auto rng = RngStream(3).engine();
  const ParamVector th{0.6};
  const auto xi = m.design({0.5});
  const double mu = nonlinear1d_mean(0.6, 0.5);
  double s = 0.0, s2 = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double r = m.simulate(th, xi, rng)[0] - mu;
    s += r;
    s2 += r * r;
  }
  EXPECT_NEAR(s / n, 0.0, 5 * 0.01 / std::sqrt(n));
  EXPECT_NEAR(s2 / n, kBenchmarkNoiseVar, 0.05 * kBenchmarkNoiseVar);
  const Observation y{mu + 0.01};
  EXPECT_NEAR(m.log_likelihood(y, th, xi), stats::normal_logpdf(mu + 0.01, mu, 1e-4), 1e-12);

  const auto quiet = NonlinearModel::one_d(NonlinearQoI::identity, NoiseMode::suppressed);
  EXPECT_DOUBLE_EQ(quiet.simulate(th, xi, rng)[0], mu);
}

TEST(Sir, ConservesPopulationAndIsMonotone) {
  auto rng = RngStream(11).engine();
  for (int rep = 0; rep < 50; ++rep) {
    const double beta = sample_uniform(0.0, 0.5, rng), gamma = sample_uniform(0.0, 0.5, rng);
    const auto traj = sir_simulate(beta, gamma, 3.0, rng);
    ASSERT_EQ(traj.states().size(), 301u);
    EXPECT_EQ(traj.states().front(), (SirState{490, 10, 0}));
    for (std::size_t k = 1; k < traj.states().size(); ++k) {
      const auto& a = traj.states()[k - 1];
      const auto& b = traj.states()[k];
      ASSERT_EQ(b.s + b.i + b.r, 500);
      ASSERT_LE(b.s, a.s);
      ASSERT_GE(b.r, a.r);
      ASSERT_GE(b.i, 0);
    }
  }
}

TEST(Sir, ZeroRatesFreezeAndDeterministicMeans) {
  auto rng = RngStream(1).engine();
  const auto frozen = sir_simulate(0.0, 0.0, 1.0, rng);
  EXPECT_EQ(frozen.states().back(), (SirState{490, 10, 0}));
  // one suppressed-noise step: dS = round(490 * 0.5 * 10 / 500) = 5, dI = round(10 * 0.25) = 3 (2.5 rounds away)
  SirSettings s;
  const auto det = sir_simulate(0.5, 0.25, 0.01, rng, s, NoiseMode::suppressed);
  EXPECT_EQ(det.states().back(), (SirState{485, 12, 3}));
  EXPECT_THROW(sir_simulate(1.5, 0.1, 1.0, rng), DomainError);
  EXPECT_THROW(frozen.at(2.0), DomainError);
}

TEST(Sir, ModelObservationAndQois) {
  const SirModel m;
  auto rng = RngStream(2).engine();
  const ParamVector th{0.3, 0.1};
  const auto y = m.simulate(th, m.design({0.0}), rng);
  EXPECT_EQ(y.values, vec({490, 10, 0}));
  EXPECT_EQ(m.predict(th, rng).values, th.values);
  EXPECT_THROW(m.design({3.5}), DomainError);

  const SirModel inc(SirQoI::incidence, 0.0);
  EXPECT_DOUBLE_EQ(inc.predict(th, rng)[0], 0.3 * 10 * 490);
  const SirModel rec(SirQoI::recovered_sum);
  const double z = rec.predict(th, rng)[0];
  EXPECT_GE(z, 0.0);
  EXPECT_LE(z, 1500.0);
}

TEST(Fhn, SpikeSummaryByHand) {
  // samples at t = 0.1, 0.3, ...; two spikes lasting 2 and 1 samples
  const std::vector<double> u{0.0, 1.0, 1.0, 0.0, 0.9, 0.0};
  const auto s = fhn_spike_summary(u, 0.1, 0.2, 0.5);
  EXPECT_EQ(s.crossings, 2u);
  EXPECT_NEAR(s.observed, 1.1, 1e-12);
  EXPECT_NEAR(s.rate, 2.0 / 1.1, 1e-12);
  EXPECT_NEAR(s.duration, 0.2 * 3 / 2, 1e-12);
  const auto flat = fhn_spike_summary({0.0, 0.0}, 0.1, 0.2, 0.5);
  EXPECT_EQ(flat.crossings, 0u);
  EXPECT_DOUBLE_EQ(flat.duration, 0.0);
  // a series starting above threshold opens a spike at its first sample
  EXPECT_EQ(fhn_spike_summary({1.0, 1.0, 0.0}, 0.1, 0.2, 0.5).crossings, 1u);
}

TEST(Fhn, SimulationShapeAndDeterminism) {
  FhnSettings cfg;
  cfg.n_records = 50;
  auto a = RngStream(4).engine(), b = RngStream(4).engine();
  const auto ua = fhn_simulate(0.4, 0.4, 0.5, a, cfg);
  const auto ub = fhn_simulate(0.4, 0.4, 0.5, b, cfg);
  ASSERT_EQ(ua.size(), 50u);
  EXPECT_EQ(ua, ub);
  for (double v : ua) EXPECT_TRUE(std::isfinite(v));
  // noise-free with zero current and theta0 = 0 stays at the origin
  auto c = RngStream(4).engine();
  for (double v : fhn_simulate(0.0, 0.4, 0.0, c, cfg, NoiseMode::suppressed)) EXPECT_DOUBLE_EQ(v, 0.0);
}

TEST(Fhn, TruncatedPriorMatchesAnalyticCdf) {
  auto rng = RngStream(8).engine();
  const int n = 20000;
  int below = 0;
  for (int i = 0; i < n; ++i) {
    const double x = sample_truncated_normal(0.4, 0.3, 0.0, 1.0, rng);
    ASSERT_GE(x, 0.0);
    ASSERT_LE(x, 1.0);
    below += x < 0.3;
  }
  const double p = truncated_normal_cdf(0.3, 0.4, 0.3, 0.0, 1.0);
  EXPECT_NEAR(static_cast<double>(below) / n, p, 4 * std::sqrt(p * (1 - p) / n));
}

TEST(LinearGaussian, ClosedFormInformation) {
  const LinearGaussianModel m(0.5, 0.5);
  // rho^2 = 1 / (1.25 * 1.25)
  EXPECT_NEAR(m.mutual_information(), -0.5 * std::log(1.0 - 1.0 / 1.5625), 1e-14);
  EXPECT_NEAR(m.parameter_information(), 0.5 * std::log(1.0 + 1.0 / 0.25), 1e-14);
  EXPECT_DOUBLE_EQ(LinearGaussianModel(0.5, 0.0, true).mutual_information(), 0.0);
  EXPECT_THROW(LinearGaussianModel(0.0), DomainError);
  EXPECT_THROW(LinearGaussianModel(0.5, 0.0).log_qoi_density(QoIValue{0.0}, ParamVector{0.0}), CapabilityError);
}

TEST(Registry, BuildsEveryModelAndRejectsUnknowns) {
  for (const auto& name : registered_models())
    for (const auto& q : model_qois(name)) {
      ModelSpec spec;
      spec.name = name;
      spec.qoi = q;
      const auto m = make_model(spec);
      EXPECT_EQ(m->name(), name);
      EXPECT_GE(m->qoi_dim(), 1u);
    }
  ModelSpec bad;
  bad.name = "nope";
  EXPECT_THROW(make_model(bad), DomainError);
  bad.name = "sir";
  bad.qoi = "rosenbrock";
  EXPECT_THROW(make_model(bad), DomainError);
  ModelSpec nd;
  nd.name = "nlnd";
  nd.n_dim = 5;
  EXPECT_EQ(make_model(nd)->param_dim(), 5u);
}

TEST(Model, JointSamplesReplayPerIndex) {
  const auto m = NonlinearModel::one_d();
  const auto xi = m.design({0.3});
  const auto a = sample_joint(m, xi, 20, RngStream(6));
  const auto b = sample_joint(m, xi, 20, RngStream(6), 4);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].theta.values, b[i].theta.values);
    EXPECT_EQ(a[i].y.values, b[i].y.values);
    EXPECT_EQ(a[i].z.values, a[i].theta.values);
  }
  EXPECT_THROW(sample_joint(m, xi, 0, RngStream(6)), DomainError);
}
