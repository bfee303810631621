#include "lanpaint/schedule.hpp"

#include <cmath>

#include "lanpaint/errors.hpp"

namespace lanpaint {

DiffusionSchedule linear_beta_schedule(std::size_t n, double b1, double b2) {
  if (n < 2) throw InvalidRange("linear_beta_schedule: n must be at least 2");
  if (!(b1 > 0.0 && b1 <= b2 && b2 < 1.0)) {
    throw InvalidRange("linear_beta_schedule: need 0 < b1 <= b2 < 1");
  }
  DiffusionSchedule s;
  s.betas.resize(n);
  s.alpha_bars.resize(n + 1);
  s.times.resize(n + 1);
  s.alpha_bars[0] = 1.0;
  s.times[0] = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s.betas[i] = static_cast<double>(i) * (b2 - b1) / static_cast<double>(n - 1) + b1;
    s.alpha_bars[i + 1] = s.alpha_bars[i] * (1.0 - s.betas[i]);
    s.times[i + 1] = s.times[i] + s.betas[i];
  }
  s.total_time = s.times[n];
  return s;
}

double alpha_bar_continuous(double t) {
  if (t < 0.0) throw InvalidRange("alpha_bar_continuous: t must be non-negative");
  return std::exp(-t);
}

double step_to_sigma(const DiffusionSchedule& schedule, std::size_t i) {
  if (i >= schedule.alpha_bars.size()) throw InvalidRange("step_to_sigma: index out of range");
  const double ab = schedule.alpha_bars[i];
  return std::sqrt((1.0 - ab) / ab);
}

double sigma_to_time(double sigma) { return std::log1p(sigma * sigma); }

double alpha_bar_to_sigma(double alpha_bar) {
  if (!(alpha_bar > 0.0 && alpha_bar <= 1.0)) {
    throw InvalidRange("alpha_bar_to_sigma: alpha_bar must lie in (0, 1]");
  }
  return std::sqrt((1.0 - alpha_bar) / alpha_bar);
}

SamplerGrid::SamplerGrid(std::vector<double> sigmas) : sigmas_(std::move(sigmas)) {
  if (sigmas_.size() < 2) throw InvalidRange("SamplerGrid: need at least one step");
  if (sigmas_.back() != 0.0) throw InvalidRange("SamplerGrid: last sigma must be 0");
  for (std::size_t i = 0; i + 1 < sigmas_.size(); ++i) {
    if (!(sigmas_[i] > sigmas_[i + 1])) {
      throw InvalidRange("SamplerGrid: sigmas must be strictly decreasing");
    }
  }
}

SamplerGrid SamplerGrid::from_schedule(const DiffusionSchedule& schedule, std::size_t steps) {
  const std::size_t n = schedule.size();
  if (steps == 0 || steps > n) throw InvalidRange("SamplerGrid: steps must lie in [1, n]");
  std::vector<double> sigmas;
  sigmas.reserve(steps + 1);
  for (std::size_t j = 0; j < steps; ++j) {
    std::size_t k = n - 1;
    if (steps > 1) {
      const double pos = static_cast<double>(n - 1) * static_cast<double>(steps - 1 - j) /
                         static_cast<double>(steps - 1);
      k = static_cast<std::size_t>(std::llround(pos));
    }
    sigmas.push_back(step_to_sigma(schedule, k + 1));
  }
  sigmas.push_back(0.0);
  return SamplerGrid(std::move(sigmas));
}

SamplerGrid SamplerGrid::standard(std::size_t steps) {
  static const DiffusionSchedule table = linear_beta_schedule(1000, 1e-4, 0.02);
  return from_schedule(table, steps);
}

}  // namespace lanpaint
