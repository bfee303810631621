#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lanpaint/fld.hpp"
#include "lanpaint/samplers.hpp"
#include "lanpaint/scores.hpp"
#include "lanpaint/state.hpp"

namespace lanpaint {

// Conditional Gaussian task: sample x given the observed coordinates of a
// joint Gaussian. y_obs has full length; only observed entries matter.
struct CondGaussianBench {
  GaussianTarget joint;
  Mask mask;
  State y_obs;
  std::size_t n_samples = 50000;
  std::size_t outer_steps = 20;

  // 2-D, zero mean, unit variances, correlation rho, second coordinate
  // observed at y.
  static CondGaussianBench standard(double rho = 0.8, double y = 1.0);
};

// Rectangular 2-D binning. The target mass of each bin is integrated with
// a sub x sub midpoint rule.
struct HistogramSpec {
  std::size_t bins_x = 64;
  std::size_t bins_y = 64;
  double lo_x = -1.0, hi_x = 1.0;
  double lo_y = -1.0, hi_y = 1.0;
  double pseudo_count = 0.5;
  std::size_t sub = 8;

  // Box spanning every component mean +/- n_sigma marginal deviations.
  static HistogramSpec bounding_box(const GmmTarget& target, std::size_t bins = 64,
                                    double n_sigma = 3.0);
};

// Per-bin log target mass, reusable across many KL evaluations.
struct HistogramReference {
  HistogramSpec spec;
  std::vector<double> log_mass;  // row-major over (x bin, y bin), normalised
};

HistogramReference make_histogram_reference(const GmmTarget& target, const HistogramSpec& spec);

struct GmmBench {
  GmmTarget target;
  Mask mask{false, true};
  std::size_t n_samples = 20000;
  std::size_t outer_steps = 20;
  HistogramSpec bins;
  // When set, every sample conditions on this y instead of a draw from the
  // y-marginal, and the KL is taken against the exact 1-D conditional.
  std::optional<double> slice_y;

  static GmmBench standard(std::uint64_t generator_seed = 2025);
};

struct BenchmarkReport {
  std::string method;
  std::size_t outer_steps = 0;
  std::size_t inner_steps = 0;
  double eta = 0.0;
  double gamma = 0.0;
  double lambda = 0.0;
  double alpha = 0.0;
  std::uint64_t seed = 0;
  std::size_t n_samples = 0;
  double kl = 0.0;
  double trap_frac = std::numeric_limits<double>::quiet_NaN();
  State sample_mean;
  Matrix sample_cov;
  double wall_time_s = 0.0;
  std::vector<State> samples;  // full states, kept only on request
};

struct BenchOptions {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool keep_samples = false;
};

GaussianTarget gaussian_conditional(const GaussianTarget& joint, const Mask& mask,
                                    const State& y_obs);
// Mixture over the inpainted coordinates given the observed ones.
GmmTarget gmm_conditional(const GmmTarget& joint, const Mask& mask, const State& y_obs);

// Sample mean and unbiased covariance.
std::pair<State, Matrix> sample_moments(const std::vector<State>& samples);

// KL(N(m, S) || truth) with (m, S) fitted to the samples.
double kl_gaussian_moments(const std::vector<State>& samples, const GaussianTarget& truth);

// KL(P || Q) between the smoothed empirical histogram P and the binned
// target Q, in nats. Samples outside the box are counted in the nearest
// edge bin. Needs at least 1e4 samples.
double kl_histogram_2d(const std::vector<State>& samples, const HistogramReference& ref);
double kl_histogram_2d(const std::vector<State>& samples, const GmmTarget& target,
                       const HistogramSpec& spec);
// One-dimensional analogue on [lo, hi] for a 1-D mixture.
double kl_histogram_1d(const std::vector<double>& samples, const GmmTarget& target, double lo,
                       double hi, std::size_t bins = 64, double pseudo_count = 0.5,
                       std::size_t sub = 16);

State sample_gaussian(const GaussianTarget& target, RandomSource& rng);
State sample_gmm(const GmmTarget& target, RandomSource& rng);

// 500 isotropic components with standard deviation 0.05 and equal weights,
// means uniform in [-2, 2]^2, all drawn from generator_seed.
GmmTarget make_benchmark_gmm(std::size_t components = 500, double sd = 0.05,
                             std::uint64_t generator_seed = 2025);

// Share of `log_dens` below the 1st percentile of `reference_log_dens`.
double trapping_fraction(const std::vector<double>& log_dens,
                         std::vector<double> reference_log_dens);

BenchmarkReport run_gaussian_bench(const CondGaussianBench& bench, Method method,
                                   const LanPaintConfig& cfg, const BenchOptions& opt);
BenchmarkReport run_gmm_bench(const GmmBench& bench, Method method, const LanPaintConfig& cfg,
                              const BenchOptions& opt);
// Variant that reuses a precomputed histogram reference (marginal mode only).
BenchmarkReport run_gmm_bench(const GmmBench& bench, const HistogramReference& ref, Method method,
                              const LanPaintConfig& cfg, const BenchOptions& opt);

struct RatioPoint {
  double t = 0.0;
  double alpha_bar = 0.0;
  double ratio = 0.0;
};

// s*_y, the observed-coordinate drift of the ideal guided dynamics, for a
// Gaussian joint at diffusion time t.
std::vector<double> ideal_observed_score(const GaussianTarget& joint, const Mask& mask,
                                         const State& y_obs, const State& z, double t,
                                         double lambda);
// ∇_y log p_t(x | y) at z for a Gaussian joint.
std::vector<double> conditional_y_gradient(const GaussianTarget& joint, const Mask& mask,
                                           const State& z, double t);

// E|s*_y - g_λ| / E|s*_y| at each t, with (x_t, y_t) drawn from the noised
// exact conditional: x_0 ~ p(x | y_o), then both blocks forward-diffused.
std::vector<RatioPoint> score_ratio_curve(const GaussianTarget& joint, const Mask& mask,
                                          const State& y_obs, const std::vector<double>& t_grid,
                                          double lambda, std::size_t n_draws, std::uint64_t seed);
// Least-squares slope of log(ratio) against log(1 - alpha_bar).
double loglog_slope(const std::vector<RatioPoint>& curve);

// Runs fn(i) for i in [0, n) over `threads` workers. The first exception
// thrown by any worker is rethrown after all workers stop.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

// CSV with the fixed column set
//   method,outer_steps,inner_steps,eta,gamma,lambda,alpha,seed,n_samples,kl,trap_frac,wall_time_s
// Numbers are written in shortest round-trip form independent of locale.
void write_report_csv(std::ostream& out, const std::vector<BenchmarkReport>& rows);
std::string format_double(double v);

}  // namespace lanpaint
