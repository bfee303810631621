#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "lanpaint/fld.hpp"
#include "lanpaint/schedule.hpp"
#include "lanpaint/scores.hpp"
#include "lanpaint/state.hpp"

namespace lanpaint {

enum class Method { replace, repaint, langevin, lanpaint };

std::string to_string(Method m);
// Throws ConfigError for unknown names.
Method parse_method(std::string_view name);

// One conditional sampling job. y_obs has full length d; only entries on
// observed coordinates are read. cfg.inner_steps is the inner loop length
// for every method except replace; eta is used by langevin and lanpaint;
// gamma0 and alpha_noise by lanpaint only; lambda by lanpaint only
// (langevin always uses λ = 0).
struct SamplerRun {
  Method method = Method::lanpaint;
  SamplerGrid grid = SamplerGrid::standard();
  LanPaintConfig cfg{};
  Mask mask;
  State y_obs;
  bool record = false;
};

struct Trajectory {
  std::vector<State> states;  // state after each outer step, if recorded
  State final;
};

// Forwards to another model and tallies evaluations per diffusion time.
// Not thread-safe; give each chain its own counter.
class CountingScoreModel final : public ScoreModel {
 public:
  explicit CountingScoreModel(const ScoreModel& inner) : inner_(inner) {}
  std::size_t dim() const override { return inner_.dim(); }
  ScoreEval score(const State& z, double t) const override;
  double log_density(const State& z, double t) const override {
    return inner_.log_density(z, t);
  }
  std::size_t calls() const { return calls_; }
  const std::map<double, std::size_t>& calls_by_time() const { return by_time_; }
  void reset() {
    calls_ = 0;
    by_time_.clear();
  }

 private:
  const ScoreModel& inner_;
  mutable std::size_t calls_ = 0;
  mutable std::map<double, std::size_t> by_time_;
};

// √ᾱ z0 + √(1-ᾱ) ε with ᾱ = e^{-t}.
State forward_diffuse(const State& z0, double t, RandomSource& rng);

// Euler step of the probability-flow ODE from grid level i to i+1, taken in
// VE coordinates; input and output are VP states.
State euler_ode_step(const State& z, std::size_t i, const ScoreModel& model,
                     const SamplerGrid& grid);

// The same step written natively in each parameterisation. Inputs and
// outputs are in that parameterisation's coordinates.
State vp_euler_step(const State& z_vp, std::size_t i, const ScoreModel& model,
                    const SamplerGrid& grid);
State ve_euler_step(const State& z_ve, std::size_t i, const ScoreModel& model,
                    const SamplerGrid& grid);
State rf_euler_step(const State& r, std::size_t i, const ScoreModel& model,
                    const SamplerGrid& grid);

// Ancestral DDPM step i (0-based backward index) on the fine table:
// (z + s β)/√(1-β) + √β ξ with β = betas[n-1-i] and s evaluated at
// ᾱ = alpha_bars[n-i].
State ddpm_sde_step(const State& z, std::size_t i, const ScoreModel& model,
                    const DiffusionSchedule& schedule, RandomSource& rng);

// Unconditional probability-flow sampling from z_T ~ N(0, I).
Trajectory run_euler_unconditional(const SamplerGrid& grid, const ScoreModel& model,
                                   RandomSource& rng, bool record = false);

Trajectory run_replace(const SamplerRun& run, const ScoreModel& model, RandomSource& rng);
Trajectory run_repaint(const SamplerRun& run, const ScoreModel& model, RandomSource& rng);
Trajectory run_langevin(const SamplerRun& run, const ScoreModel& model, RandomSource& rng);
Trajectory run_lanpaint(const SamplerRun& run, const ScoreModel& model, RandomSource& rng);

// Per-outer-step constants of a LanPaint run. Building this once and
// reusing it across chains avoids recomputing the oscillator kernels.
struct LanPaintStepPlan {
  double t = 0.0;
  double a_x = 0.0;
  double a_y = 0.0;
  FldParams fld;
};

std::vector<LanPaintStepPlan> plan_lanpaint(const SamplerGrid& grid, const LanPaintConfig& cfg);
Trajectory run_lanpaint(const SamplerRun& run, const std::vector<LanPaintStepPlan>& plan,
                        const ScoreModel& model, RandomSource& rng);

// Dispatches on run.method.
Trajectory run_method(const SamplerRun& run, const ScoreModel& model, RandomSource& rng);

}  // namespace lanpaint
