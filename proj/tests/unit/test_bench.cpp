#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "lanpaint/bench.hpp"
#include "lanpaint/errors.hpp"

using namespace lanpaint;

namespace {

std::vector<State> exact_pair(double mean, double var) {
  // Two points whose sample mean and unbiased variance are exactly (mean, var).
  const double a = std::sqrt(var / 2.0);
  return {State{mean - a}, State{mean + a}};
}

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST(GaussianConditional, DiagonalJointGivesMarginal) {
  const GaussianTarget j{State{1.0, -2.0}, SymMatrix{{2.0, 0.0}, {0.0, 3.0}}};
  const GaussianTarget c = gaussian_conditional(j, Mask{false, true}, State{0.0, 5.0});
  EXPECT_DOUBLE_EQ(c.mean[0], 1.0);
  EXPECT_DOUBLE_EQ(c.cov(0, 0), 2.0);
}

TEST(GaussianConditional, DegenerateObservedBlock) {
  const GaussianTarget j{State{0.0, 0.0}, SymMatrix{{1.0, 0.0}, {0.0, 0.0}}};
  EXPECT_THROW(gaussian_conditional(j, Mask{false, true}, State{0.0, 1.0}), SingularCovariance);
}

TEST(GaussianConditional, MatchesGridNormalisedJoint) {
  RandomSource r(1);
  for (int k = 0; k < 5; ++k) {
    const double sx = 0.5 + r.uniform(), sy = 0.5 + r.uniform(), rho = 1.8 * r.uniform() - 0.9;
    const GaussianTarget j{State{r.normal(), r.normal()},
                           SymMatrix{{sx * sx, rho * sx * sy}, {rho * sx * sy, sy * sy}}};
    const double y0 = r.normal();
    const GaussianTarget c = gaussian_conditional(j, Mask{false, true}, State{0.0, y0});
    const double sd = std::sqrt(c.cov(0, 0));
    // Trapezoid normalisation of p(x, y0) over +/- 10 conditional sds.
    const int n = 20001;
    const double lo = c.mean[0] - 10 * sd, hi = c.mean[0] + 10 * sd, h = (hi - lo) / (n - 1);
    double z = 0;
    std::vector<double> px(n);
    for (int i = 0; i < n; ++i) {
      px[i] = std::exp(gaussian_diffused_log_density(j, State{lo + i * h, y0}, 0.0));
      z += (i == 0 || i == n - 1 ? 0.5 : 1.0) * px[i] * h;
    }
    for (int i = 0; i < n; i += 1000) {
      const double x = lo + i * h;
      const double analytic =
          std::exp(-0.5 * (x - c.mean[0]) * (x - c.mean[0]) / c.cov(0, 0)) /
          (sd * std::sqrt(2 * std::numbers::pi));
      EXPECT_NEAR(px[i] / z, analytic, 1e-6);
    }
  }
}

TEST(KlGaussianMoments, ClosedFormCases) {
  const GaussianTarget unit{State{0.0}, SymMatrix::identity(1)};
  EXPECT_NEAR(kl_gaussian_moments(exact_pair(1.0, 1.0), unit), 0.5, 1e-14);
  EXPECT_NEAR(kl_gaussian_moments(exact_pair(0.0, 1.0), unit), 0.0, 1e-14);
  const double v = 2.0;
  EXPECT_NEAR(kl_gaussian_moments(exact_pair(0.0, v), unit), 0.5 * (v - 1.0 - std::log(v)), 1e-14);
}

TEST(KlGaussianMoments, ExactDrawsNearZero) {
  const GaussianTarget truth{State{0.3}, SymMatrix{{0.36}}};
  RandomSource r(2);
  std::vector<State> s;
  for (int i = 0; i < 1000000; ++i) s.push_back(sample_gaussian(truth, r));
  const double kl = kl_gaussian_moments(s, truth);
  EXPECT_GE(kl, 0.0);
  EXPECT_LT(kl, 5e-6);
}

TEST(KlGaussianMoments, DegenerateSamples) {
  const GaussianTarget unit{State{0.0}, SymMatrix::identity(1)};
  EXPECT_THROW(kl_gaussian_moments({State{1.0}, State{1.0}, State{1.0}}, unit), DegenerateSamples);
  EXPECT_THROW(kl_gaussian_moments({State{1.0}}, unit), DegenerateSamples);
}

TEST(KlHistogram, TargetSelfConsistency) {
  const GmmTarget g = make_benchmark_gmm();
  const HistogramReference ref = make_histogram_reference(g, HistogramSpec::bounding_box(g));
  RandomSource r(3);
  std::vector<State> s;
  for (int i = 0; i < 100000; ++i) s.push_back(sample_gmm(g, r));
  const double kl = kl_histogram_2d(s, ref);
  EXPECT_GE(kl, 0.0);
  EXPECT_LT(kl, 0.05);
}

TEST(KlHistogram, SingleBinIsLarge) {
  const GmmTarget g = make_benchmark_gmm();
  const HistogramReference ref = make_histogram_reference(g, HistogramSpec::bounding_box(g));
  const std::vector<State> s(20000, State{0.0, 0.0});
  EXPECT_GT(kl_histogram_2d(s, ref), 0.5 * std::log(64.0 * 64.0));
}

TEST(KlHistogram, MoreSamplesLowerMedianKl) {
  const GmmTarget g = make_benchmark_gmm();
  const HistogramReference ref = make_histogram_reference(g, HistogramSpec::bounding_box(g));
  double prev = INFINITY;
  for (std::size_t n : {10000u, 20000u, 40000u}) {
    std::vector<double> kls;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      RandomSource r(10 + seed, n);
      std::vector<State> s;
      for (std::size_t i = 0; i < n; ++i) s.push_back(sample_gmm(g, r));
      kls.push_back(kl_histogram_2d(s, ref));
    }
    const double m = median3(kls);
    EXPECT_LT(m, prev) << n;
    prev = m;
  }
}

TEST(KlHistogram, TooFewSamples) {
  const GmmTarget g = make_benchmark_gmm(20);
  EXPECT_THROW(kl_histogram_2d(std::vector<State>(100, State{0.0, 0.0}), g,
                               HistogramSpec::bounding_box(g)),
               DegenerateSamples);
}

TEST(KlHistogram, OneDimensionalSelfConsistency) {
  const GmmTarget g{{0.3, 0.7}, {State{-1.0}, State{1.0}}, {SymMatrix{{0.04}}, SymMatrix{{0.09}}}};
  RandomSource r(4);
  std::vector<double> xs;
  for (int i = 0; i < 100000; ++i) xs.push_back(sample_gmm(g, r)[0]);
  EXPECT_LT(kl_histogram_1d(xs, g, -2.5, 2.5), 0.01);
  const std::vector<double> wrong(100000, -1.0);
  EXPECT_GT(kl_histogram_1d(wrong, g, -2.5, 2.5), 1.0);
}

TEST(GmmConditional, MatchesGridSlice) {
  const GmmTarget g = make_benchmark_gmm(30, 0.2, 5);
  const double y0 = 0.4;
  const GmmTarget c = gmm_conditional(g, Mask{false, true}, State{0.0, y0});
  ASSERT_EQ(c.dim(), 1u);
  const int n = 8001;
  const double lo = -4, hi = 4, h = (hi - lo) / (n - 1);
  double z = 0;
  for (int i = 0; i < n; ++i) {
    z += (i == 0 || i == n - 1 ? 0.5 : 1.0) * std::exp(gmm_diffused_log_density(g, State{lo + i * h, y0}, 0.0)) * h;
  }
  for (double x : {-1.5, -0.2, 0.0, 0.9, 1.7}) {
    const double grid = std::exp(gmm_diffused_log_density(g, State{x, y0}, 0.0)) / z;
    const double cond = std::exp(gmm_diffused_log_density(c, State{x}, 0.0));
    EXPECT_NEAR(cond, grid, 1e-8 + 1e-6 * grid);
  }
}

TEST(BenchmarkMixture, DeterministicShape) {
  const GmmTarget a = make_benchmark_gmm();
  const GmmTarget b = make_benchmark_gmm();
  ASSERT_EQ(a.components(), 500u);
  EXPECT_EQ(a.means, b.means);
  for (std::size_t c = 0; c < a.components(); ++c) {
    EXPECT_LE(std::abs(a.means[c][0]), 2.0);
    EXPECT_LE(std::abs(a.means[c][1]), 2.0);
    EXPECT_DOUBLE_EQ(a.covs[c](0, 0), 0.0025);
    EXPECT_DOUBLE_EQ(a.weights[c], 1.0 / 500.0);
  }
  EXPECT_NE(make_benchmark_gmm(500, 0.05, 1).means, a.means);
}

TEST(TrappingFraction, Percentile) {
  std::vector<double> ref(1000);
  for (int i = 0; i < 1000; ++i) ref[i] = i;
  EXPECT_DOUBLE_EQ(trapping_fraction({0.0, 5.0, 20.0, 500.0}, ref), 0.5);
  EXPECT_THROW(trapping_fraction({}, ref), DegenerateSamples);
}

TEST(GaussianBench, ThresholdAndDeterminism) {
  CondGaussianBench b = CondGaussianBench::standard();
  b.n_samples = 50000;
  LanPaintConfig cfg;
  cfg.inner_steps = 10;
  const BenchmarkReport lp = run_gaussian_bench(b, Method::lanpaint, cfg, {0, 1, false});
  EXPECT_LT(lp.kl, 0.01);
  EXPECT_EQ(lp.method, "lanpaint");
  EXPECT_EQ(lp.inner_steps, 10u);
  EXPECT_EQ(lp.n_samples, 50000u);
  const BenchmarkReport rp = run_gaussian_bench(b, Method::replace, cfg, {0, 1, false});
  EXPECT_GT(rp.kl, 0.01);
  EXPECT_EQ(rp.inner_steps, 0u);
  // Replace misses the conditional mean, which is rho * y = 0.8.
  EXPECT_GT(std::abs(rp.sample_mean[0] - 0.8), std::abs(lp.sample_mean[0] - 0.8));
  const BenchmarkReport again = run_gaussian_bench(b, Method::lanpaint, cfg, {0, 3, false});
  EXPECT_EQ(again.kl, lp.kl);
  EXPECT_EQ(again.sample_mean, lp.sample_mean);
}

// RePaint's inner step size is tied to the outer grid, so it only reaches
// the exactness threshold once the grid is fine enough.
TEST(GaussianBench, RepaintCrossesThresholdOnFinerGrid) {
  CondGaussianBench b = CondGaussianBench::standard();
  b.n_samples = 20000;
  LanPaintConfig cfg;
  cfg.inner_steps = 10;
  const double coarse = run_gaussian_bench(b, Method::repaint, cfg, {0, 1, false}).kl;
  b.outer_steps = 100;
  const double fine = run_gaussian_bench(b, Method::repaint, cfg, {0, 1, false}).kl;
  EXPECT_LT(fine, 0.01);
  EXPECT_LT(fine, coarse);
}

TEST(ScoreRatio, DecompositionIdentity) {
  const CondGaussianBench b = CondGaussianBench::standard();
  RandomSource r(5);
  for (int k = 0; k < 50; ++k) {
    const State z{r.normal(), r.normal()};
    const double t = 0.01 + r.uniform();
    for (double lambda : {0.0, 8.0}) {
      const auto ideal = ideal_observed_score(b.joint, b.mask, b.y_obs, z, t, lambda);
      const ScoreEval g =
          big_score(z, b.y_obs, b.mask, t, lambda, gaussian_diffused_score(b.joint, z, t));
      const auto cg = conditional_y_gradient(b.joint, b.mask, z, t);
      EXPECT_NEAR(ideal[0], (1.0 + lambda) * cg[0] + g.score[1], 1e-10);
    }
  }
}

TEST(ScoreRatio, DecaysTowardsCleanData) {
  const CondGaussianBench b = CondGaussianBench::standard();
  const std::vector<double> ts{1.0, 0.1, 0.01, 0.001, 1e-4};
  const auto curve = score_ratio_curve(b.joint, b.mask, b.y_obs, ts, 8.0, 20000, 0);
  for (std::size_t i = 1; i < curve.size(); ++i) EXPECT_LT(curve[i].ratio, curve[i - 1].ratio);
  EXPECT_LT(curve.back().ratio, 0.05);
  EXPECT_THROW(loglog_slope({curve[0]}), InvalidRange);
}

TEST(ParallelFor, CoversRangeAndRethrows) {
  std::vector<int> hit(1000, 0);
  parallel_for(1000, 4, [&](std::size_t i) { hit[i] += 1; });
  EXPECT_EQ(std::count(hit.begin(), hit.end(), 1), 1000);
  EXPECT_THROW(parallel_for(100, 3, [](std::size_t i) {
                 if (i == 57) throw DegenerateSamples("boom");
               }),
               DegenerateSamples);
}

TEST(ReportCsv, HeaderAndFormatting) {
  BenchmarkReport r;
  r.method = "lanpaint";
  r.outer_steps = 20;
  r.inner_steps = 5;
  r.eta = 0.25;
  r.gamma = 15;
  r.lambda = 8;
  r.kl = 0.1;
  std::ostringstream out;
  write_report_csv(out, {r});
  EXPECT_EQ(out.str(),
            "method,outer_steps,inner_steps,eta,gamma,lambda,alpha,seed,n_samples,kl,trap_frac,"
            "wall_time_s\nlanpaint,20,5,0.25,15,8,0,0,0,0.1,nan,0\n");
  EXPECT_EQ(format_double(INFINITY), "inf");
}
