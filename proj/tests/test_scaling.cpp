#include <gtest/gtest.h>

#include <cmath>
#include <string>
#include <vector>

#include "dqpt/scaling.hpp"

using namespace dqpt;

TEST(CandidateTimes, Examples) {
  EXPECT_EQ(candidate_critical_times(build_comb_spectrum(10, 1.0, 0.0), 3), (std::vector<double>{1.0, 2.0, 3.0}));
  const auto mem = dimensionless_membrane(mode_table(MembraneParams::hbn(1e-6), 50));
  EXPECT_EQ(candidate_critical_times(mem, 1), (std::vector<double>{0.5, 1.0}));
  EXPECT_THROW(candidate_critical_times(mem, 0), DomainError);
}

TEST(FitSamples, ExactPowerLawRecovery) {
  for (double xi : {0.5, 1.0, 1.85, 2.0}) {
    const auto tau = log_space(1e-4, 1e-2, 101);
    std::vector<double> d(tau.size());
    for (std::size_t i = 0; i < tau.size(); ++i) d[i] = 0.37 * std::pow(tau[i], xi);
    const auto f = fit_scaling_samples(tau, d, 1.0);
    EXPECT_EQ(f.model, ScalingModel::PowerLaw);
    ASSERT_TRUE(f.exponent);
    EXPECT_NEAR(*f.exponent, xi, 1e-6);
    EXPECT_NEAR(f.r2_power(), 1.0, 1e-10);
    EXPECT_NEAR(f.prefactor, 0.37, 1e-6);
    EXPECT_LT(f.r2_log(), f.r2_power());
  }
}

TEST(FitSamples, ExactLogarithmPrefersLogModel) {
  const auto tau = log_space(1e-4, 1e-2, 101);
  std::vector<double> d(tau.size());
  for (std::size_t i = 0; i < tau.size(); ++i) d[i] = 5.0 - 0.5 * std::log(tau[i]);
  const auto f = fit_scaling_samples(tau, d);
  EXPECT_EQ(f.model, ScalingModel::Logarithmic);
  EXPECT_FALSE(f.exponent.has_value());
  EXPECT_NEAR(f.prefactor, -0.5, 1e-10);
}

TEST(FitSamples, NonPositiveDeltaNamesTau) {
  const std::vector<double> tau{0.001, 0.002, 0.003};
  const std::vector<double> d{1.0, 0.0, 2.0};
  try {
    fit_scaling_samples(tau, d);
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("0.002"), std::string::npos) << e.what();
  }
}

TEST(FitScaling, WindowDiscipline) {
  const auto s = build_comb_spectrum(1000, 1.0, 0.0);
  EXPECT_THROW(fit_scaling(s, 1.0, {1e-4, 1e-2}, 50), DomainError);  // below 1/N
  EXPECT_THROW(fit_scaling(s, 1.0, {1e-2, 0.5}, 50), DomainError);
  EXPECT_THROW(fit_scaling(s, 1.0, {1e-2, 1e-1}, 5), DomainError);
  EXPECT_THROW(fit_scaling(s, 0.0, {1e-2, 1e-1}, 50), DomainError);
  const auto f = fit_scaling(s, 1.0, {1e-3, 1e-1}, 101);
  EXPECT_GE(f.tau_window.first, 1.0 / static_cast<double>(s.size()));
  EXPECT_EQ(f.n_samples, 101u);
}

TEST(FitScaling, SideSymmetryAndCriticalTimeIndependence) {
  const auto s = build_comb_spectrum(100000, 1.0, 0.0);
  const std::pair<double, double> window{1e-4, 1e-2};
  const auto above = fit_scaling(s, 1.0, window, 101, std::nullopt, Side::Above, 4);
  const auto below = fit_scaling(s, 1.0, window, 101, std::nullopt, Side::Below, 4);
  ASSERT_TRUE(above.exponent && below.exponent);
  EXPECT_LE(std::abs(*above.exponent - *below.exponent),
            std::max(above.power_fit.slope_stderr + below.power_fit.slope_stderr, 1e-12));
  const auto later = fit_scaling(s, 2.0, window, 101, std::nullopt, Side::Above, 4);
  ASSERT_TRUE(later.exponent);
  EXPECT_NEAR(*later.exponent, *above.exponent, 0.05);
}

TEST(FitScaling, WorkerIndependent) {
  const auto s = build_comb_spectrum(20000, 1.0, -1.0);
  const auto a = fit_scaling(s, 1.0, {1e-3, 1e-1}, 60, std::nullopt, Side::Both, 1);
  const auto b = fit_scaling(s, 1.0, {1e-3, 1e-1}, 60, std::nullopt, Side::Both, 6);
  EXPECT_EQ(a.power_fit.slope, b.power_fit.slope);
  EXPECT_EQ(a.log_fit.r_squared, b.log_fit.r_squared);
}

TEST(Crossover, SyntheticQuadratic) {
  const auto c = short_time_crossover_series([](double t) { return 3.0 * t * t; }, 1e4);
  EXPECT_NEAR(c.inner_exponent, 2.0, 1e-3);
  EXPECT_FALSE(c.tau_break.has_value());
}

TEST(Crossover, CombInnerExponentAndBreak) {
  const auto s = build_comb_spectrum(10000, 1.0, 0.0);
  const auto c = short_time_crossover(s, 1.0, 4);
  EXPECT_NEAR(c.inner_exponent, 2.0, 0.1);
  ASSERT_TRUE(c.tau_break);
  EXPECT_GT(*c.tau_break, 1e-5);
  EXPECT_LT(*c.tau_break, 1e-3);
}

TEST(Crossover, Errors) {
  EXPECT_THROW(short_time_crossover(build_comb_spectrum(100, 1.0, 0.0), 1.0), DomainError);
  EXPECT_THROW(short_time_crossover(build_powerlaw_spectrum(1000, 1.0, 1.1, 0.0), 1.0), DomainError);
}

TEST(SizeScaling, PointsAndErrors) {
  const auto one = size_scaling(0.0, {100}, 1e-3);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].size, 100u);
  EXPECT_NEAR(one[0].gamma, return_rate(build_comb_spectrum(100, 1.0, 0.0), 1.001), 1e-13);
  EXPECT_THROW(size_scaling(0.0, {}, 1e-3), DomainError);
  EXPECT_THROW(size_scaling(0.0, {100, 100}, 1e-3), DomainError);
  EXPECT_THROW(size_scaling(0.0, {100}, 1e-3, 0), DomainError);
  const auto a = size_scaling(0.0, {100, 1000, 10000}, 1e-3, 1, 1);
  const auto b = size_scaling(0.0, {100, 1000, 10000}, 1e-3, 1, 5);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].gamma, b[i].gamma);
}

TEST(TransitionOrder, CombLadder) {
  const std::vector<std::pair<double, int>> ladder{{1.0, 0}, {0.0, 1}, {-1.0, 2}};
  for (auto [alpha, order] : ladder) {
    const auto r = transition_order(build_comb_spectrum(2000, 1.0, alpha), 1.0);
    ASSERT_TRUE(r.order) << alpha;
    EXPECT_EQ(*r.order, order) << alpha;
  }
}

TEST(TransitionOrder, InvariantUnderCouplingScale) {
  for (double alpha : {1.0, 0.0, -1.0}) {
    const auto a = transition_order(build_comb_spectrum(2000, 1.0, alpha, 1.0), 1.0);
    const auto b = transition_order(build_comb_spectrum(2000, 1.0, alpha, 7.5), 1.0);
    EXPECT_EQ(a.order, b.order) << alpha;
  }
}

TEST(TransitionOrder, SmoothPointIsAnalytic) {
  const auto r = transition_order(build_comb_spectrum(2000, 1.0, -3.0), 0.5);
  EXPECT_FALSE(r.order.has_value());
  EXPECT_THROW(transition_order(build_comb_spectrum(100, 1.0, 0.0), 1.0), DomainError);
}

TEST(TransitionOrder, MembraneIntegerPeriodIsFirstOrder) {
  const auto s = dimensionless_membrane(mode_table(MembraneParams::hbn(1e-6), 10000));
  const auto r = transition_order(s, 1.0);
  ASSERT_TRUE(r.order);
  EXPECT_EQ(*r.order, 1);
}

TEST(KinkMetric, LinearDispersionDominates) {
  const double pi2 = 2.0 * std::numbers::pi;
  const double linear = kink_jump_metric(build_powerlaw_spectrum(1000, pi2, 1.0, 0.0), 1.0);
  EXPECT_GT(linear, 10.0 * kink_jump_metric(build_powerlaw_spectrum(1000, pi2, 0.9, 0.0), 1.0));
  EXPECT_GT(linear, 10.0 * kink_jump_metric(build_powerlaw_spectrum(1000, pi2, 1.1, 0.0), 1.0));
}

TEST(SideNames, RoundTrip) {
  for (auto s : {Side::Above, Side::Below, Side::Both}) EXPECT_EQ(side_from_string(to_string(s)), s);
  EXPECT_THROW(side_from_string("left"), DomainError);
}
