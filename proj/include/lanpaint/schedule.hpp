#pragma once

#include <cstddef>
#include <vector>

namespace lanpaint {

// Discrete variance-preserving grid. alpha_bars and times have one more
// entry than betas: index 0 is clean data.
struct DiffusionSchedule {
  std::vector<double> betas;
  std::vector<double> alpha_bars;
  std::vector<double> times;
  double total_time = 0.0;

  std::size_t size() const { return betas.size(); }
};

DiffusionSchedule linear_beta_schedule(std::size_t n, double b1, double b2);

// Continuous-time signal factor e^{-t}.
double alpha_bar_continuous(double t);

// sigma_i = sqrt((1 - abar_i) / abar_i) on the discrete table.
double step_to_sigma(const DiffusionSchedule& schedule, std::size_t i);

inline double sigma_to_alpha_bar(double sigma) { return 1.0 / (1.0 + sigma * sigma); }
// Continuous time whose e^{-t} equals sigma_to_alpha_bar(sigma).
double sigma_to_time(double sigma);
double alpha_bar_to_sigma(double alpha_bar);

// Backward sampling grid: a strictly decreasing sequence of VE noise levels
// sigma_0 > ... > sigma_{n-1} > sigma_n = 0.
class SamplerGrid {
 public:
  explicit SamplerGrid(std::vector<double> sigmas);

  // Sub-samples a fine table with "linspace" spacing: step j uses table
  // index round((n-1)(steps-1-j)/(steps-1)), shifted by one so that the
  // noisiest level is alpha_bars[n].
  static SamplerGrid from_schedule(const DiffusionSchedule& schedule, std::size_t steps);
  // 20-step grid over the 1000-point linear table used by the benchmarks.
  static SamplerGrid standard(std::size_t steps = 20);

  std::size_t steps() const { return sigmas_.size() - 1; }
  double sigma(std::size_t i) const { return sigmas_[i]; }
  double alpha_bar(std::size_t i) const { return sigma_to_alpha_bar(sigmas_[i]); }
  double time(std::size_t i) const { return sigma_to_time(sigmas_[i]); }
  const std::vector<double>& sigmas() const { return sigmas_; }

 private:
  std::vector<double> sigmas_;
};

}  // namespace lanpaint
