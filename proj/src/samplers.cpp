#include "lanpaint/samplers.hpp"

#include <cmath>
#include <numbers>

namespace lanpaint {

std::string to_string(Method m) {
  switch (m) {
    case Method::replace: return "replace";
    case Method::repaint: return "repaint";
    case Method::langevin: return "langevin";
    case Method::lanpaint: return "lanpaint";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  if (name == "replace") return Method::replace;
  if (name == "repaint") return Method::repaint;
  if (name == "langevin") return Method::langevin;
  if (name == "lanpaint") return Method::lanpaint;
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (expected replace, repaint, langevin or lanpaint)");
}

ScoreEval CountingScoreModel::score(const State& z, double t) const {
  ++calls_;
  ++by_time_[t];
  return inner_.score(z, t);
}

State forward_diffuse(const State& z0, double t, RandomSource& rng) {
  if (!(t >= 0.0)) throw InvalidRange("forward_diffuse: t must be non-negative");
  const double root = std::exp(-0.5 * t);
  const double sd = std::sqrt(-std::expm1(-t));
  State z(z0.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = root * z0[i] + sd * rng.normal();
  return z;
}

namespace {

void check_step(std::size_t i, const SamplerGrid& grid) {
  if (i >= grid.steps()) throw InvalidRange("step index beyond the sampler grid");
}

// ε at VP state z on grid level i.
std::vector<double> eps_at(const State& z_vp, std::size_t i, const ScoreModel& model,
                           const SamplerGrid& grid) {
  const double t = grid.time(i);
  return score_to_eps(model.score(z_vp, t), t);
}

}  // namespace

State euler_ode_step(const State& z, std::size_t i, const ScoreModel& model,
                     const SamplerGrid& grid) {
  check_step(i, grid);
  const double sigma = grid.sigma(i);
  const double next = grid.sigma(i + 1);
  const std::vector<double> eps = eps_at(z, i, model, grid);
  const double to_ve = std::sqrt(1.0 + sigma * sigma);
  const double to_vp = 1.0 / std::sqrt(1.0 + next * next);
  State out(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    out[j] = (z[j] * to_ve + eps[j] * (next - sigma)) * to_vp;
  }
  return out;
}

State vp_euler_step(const State& z_vp, std::size_t i, const ScoreModel& model,
                    const SamplerGrid& grid) {
  check_step(i, grid);
  const double ab = grid.alpha_bar(i);
  const double ab_next = grid.alpha_bar(i + 1);
  const std::vector<double> eps = eps_at(z_vp, i, model, grid);
  State out(z_vp.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double x0 = (z_vp[j] - std::sqrt(1.0 - ab) * eps[j]) / std::sqrt(ab);
    out[j] = std::sqrt(ab_next) * x0 + std::sqrt(1.0 - ab_next) * eps[j];
  }
  return out;
}

State ve_euler_step(const State& z_ve, std::size_t i, const ScoreModel& model,
                    const SamplerGrid& grid) {
  check_step(i, grid);
  const double sigma = grid.sigma(i);
  const double next = grid.sigma(i + 1);
  const std::vector<double> eps = eps_at(ve_to_vp(z_ve, sigma), i, model, grid);
  State out(z_ve.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = z_ve[j] + eps[j] * (next - sigma);
  return out;
}

State rf_euler_step(const State& r, std::size_t i, const ScoreModel& model,
                    const SamplerGrid& grid) {
  check_step(i, grid);
  const double sigma = grid.sigma(i);
  const double s = sigma / (1.0 + sigma);
  const double s_next = grid.sigma(i + 1) / (1.0 + grid.sigma(i + 1));
  const VeState ve = rf_to_ve(r, s);
  const std::vector<double> eps = eps_at(ve_to_vp(ve.z, ve.sigma), i, model, grid);
  const std::vector<double> v = rf_velocity(eps, r, s);
  State out(r.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = r[j] + v[j] * (s_next - s);
  return out;
}

State ddpm_sde_step(const State& z, std::size_t i, const ScoreModel& model,
                    const DiffusionSchedule& schedule, RandomSource& rng) {
  const std::size_t n = schedule.size();
  if (i >= n) throw InvalidRange("ddpm_sde_step: index beyond the schedule");
  const double beta = schedule.betas[n - 1 - i];
  const double t = -std::log(schedule.alpha_bars[n - i]);
  const ScoreEval s = model.score(z, t);
  const double scale = 1.0 / std::sqrt(1.0 - beta);
  const double noise = std::sqrt(beta);
  State out(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    out[j] = (z[j] + s.score[j] * beta) * scale + noise * rng.normal();
  }
  return out;
}

Trajectory run_euler_unconditional(const SamplerGrid& grid, const ScoreModel& model,
                                   RandomSource& rng, bool record) {
  Trajectory tr;
  State z = gaussian_vector(rng, model.dim());
  for (std::size_t i = 0; i < grid.steps(); ++i) {
    z = euler_ode_step(z, i, model, grid);
    if (record) tr.states.push_back(z);
  }
  tr.final = std::move(z);
  return tr;
}

namespace {

void validate_run(const SamplerRun& run, const ScoreModel& model) {
  const std::size_t d = model.dim();
  run.mask.require_size(d);
  if (run.y_obs.size() != d) throw ConfigError("observation vector must have the model dimension");
  for (std::size_t i = 0; i < d; ++i) {
    if (run.mask[i] && !std::isfinite(run.y_obs[i])) {
      throw ConfigError("observed values must be finite");
    }
  }
  run.cfg.validate();
}

// Overwrites observed coordinates with a fresh draw from p_t(y | y_o).
void replace_observed(State& z, const SamplerRun& run, double t, RandomSource& rng) {
  const double root = std::exp(-0.5 * t);
  const double sd = std::sqrt(-std::expm1(-t));
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (run.mask[j]) z[j] = root * run.y_obs[j] + sd * rng.normal();
  }
}

void pin_observed(State& z, const SamplerRun& run) {
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (run.mask[j]) z[j] = run.y_obs[j];
  }
}

class Recorder {
 public:
  Recorder(bool on, std::size_t steps) : on_(on) {
    if (on_) tr_.states.reserve(steps);
  }
  void push(const State& z) {
    if (on_) tr_.states.push_back(z);
  }
  Trajectory finish(State z) {
    if (on_ && !tr_.states.empty()) tr_.states.back() = z;
    tr_.final = std::move(z);
    return std::move(tr_);
  }

 private:
  bool on_;
  Trajectory tr_;
};

}  // namespace

Trajectory run_replace(const SamplerRun& run, const ScoreModel& model, RandomSource& rng) {
  validate_run(run, model);
  const SamplerGrid& grid = run.grid;
  Recorder rec(run.record, grid.steps());
  State z = gaussian_vector(rng, model.dim());
  for (std::size_t i = 0; i < grid.steps(); ++i) {
    replace_observed(z, run, grid.time(i), rng);
    z = euler_ode_step(z, i, model, grid);
    rec.push(z);
  }
  pin_observed(z, run);
  return rec.finish(std::move(z));
}

Trajectory run_repaint(const SamplerRun& run, const ScoreModel& model, RandomSource& rng) {
  validate_run(run, model);
  const SamplerGrid& grid = run.grid;
  Recorder rec(run.record, grid.steps());
  State z = gaussian_vector(rng, model.dim());
  for (std::size_t i = 0; i < grid.steps(); ++i) {
    const double t = grid.time(i);
    const double ratio = grid.alpha_bar(i) / grid.alpha_bar(i + 1);
    const double keep = std::sqrt(ratio);
    const double fresh = std::sqrt(1.0 - ratio);
    for (std::size_t k = 0; k < run.cfg.inner_steps; ++k) {
      replace_observed(z, run, t, rng);
      z = euler_ode_step(z, i, model, grid);
      for (double& v : z) v = keep * v + fresh * rng.normal();
    }
    replace_observed(z, run, t, rng);
    z = euler_ode_step(z, i, model, grid);
    rec.push(z);
  }
  pin_observed(z, run);
  return rec.finish(std::move(z));
}

Trajectory run_langevin(const SamplerRun& run, const ScoreModel& model, RandomSource& rng) {
  validate_run(run, model);
  const SamplerGrid& grid = run.grid;
  Recorder rec(run.record, grid.steps());
  State z = gaussian_vector(rng, model.dim());
  for (std::size_t i = 0; i < grid.steps(); ++i) {
    const double t = grid.time(i);
    replace_observed(z, run, t, rng);
    const double dtau = run.cfg.eta * std::sqrt(-std::expm1(-t));
    const double kick = std::sqrt(2.0 * dtau);
    for (std::size_t k = 0; k < run.cfg.inner_steps; ++k) {
      const ScoreEval g = big_score(z, run.y_obs, run.mask, t, 0.0, model.score(z, t));
      for (std::size_t j = 0; j < z.size(); ++j) z[j] += g.score[j] * dtau + kick * rng.normal();
    }
    z = euler_ode_step(z, i, model, grid);
    rec.push(z);
  }
  pin_observed(z, run);
  return rec.finish(std::move(z));
}

std::vector<LanPaintStepPlan> plan_lanpaint(const SamplerGrid& grid, const LanPaintConfig& cfg) {
  cfg.validate();
  std::vector<LanPaintStepPlan> plan;
  plan.reserve(grid.steps());
  const double t_ref = grid.time(0);
  const double ax_ref = coef_x(t_ref, cfg.alpha_noise);
  const double ay_ref = coef_y(t_ref, cfg.lambda);
  constexpr double kNoise = std::numbers::sqrt2;
  for (std::size_t i = 0; i < grid.steps(); ++i) {
    LanPaintStepPlan p;
    p.t = grid.time(i);
    p.a_x = coef_x(p.t, cfg.alpha_noise);
    p.a_y = coef_y(p.t, cfg.lambda);
    if (cfg.inner_steps > 0) {
      const FrictionStep fx = friction_and_step(cfg, p.a_x, ax_ref);
      const FrictionStep fy = friction_and_step(cfg, p.a_y, ay_ref);
      p.fld.inpaint = RegionKernels(fx.gamma, p.a_x, kNoise, fx.dtau);
      p.fld.observed = RegionKernels(fy.gamma, p.a_y, kNoise, fy.dtau);
    }
    plan.push_back(std::move(p));
  }
  return plan;
}

Trajectory run_lanpaint(const SamplerRun& run, const std::vector<LanPaintStepPlan>& plan,
                        const ScoreModel& model, RandomSource& rng) {
  validate_run(run, model);
  const SamplerGrid& grid = run.grid;
  if (plan.size() != grid.steps()) throw ConfigError("LanPaint plan does not match the grid");
  Recorder rec(run.record, grid.steps());
  State z = gaussian_vector(rng, model.dim());
  for (std::size_t i = 0; i < grid.steps(); ++i) {
    const LanPaintStepPlan& p = plan[i];
    replace_observed(z, run, p.t, rng);
    if (run.cfg.inner_steps > 0) {
      const CoefFn c_fn = [&](const State& x) {
        const ScoreEval s = model.score(x, p.t);
        return build_c(x, big_score(x, run.y_obs, run.mask, p.t, run.cfg.lambda, s), p.a_x,
                       p.a_y, run.mask);
      };
      FldState st{std::move(z), std::nullopt, std::nullopt};
      for (std::size_t k = 0; k < run.cfg.inner_steps; ++k) {
        st = (k == 0) ? fld_step_first(std::move(st), p.fld, run.mask, c_fn, rng)
                      : fld_step_second(std::move(st), p.fld, run.mask, c_fn, rng);
      }
      z = std::move(st.z);
    }
    z = euler_ode_step(z, i, model, grid);
    rec.push(z);
  }
  pin_observed(z, run);
  return rec.finish(std::move(z));
}

Trajectory run_lanpaint(const SamplerRun& run, const ScoreModel& model, RandomSource& rng) {
  return run_lanpaint(run, plan_lanpaint(run.grid, run.cfg), model, rng);
}

Trajectory run_method(const SamplerRun& run, const ScoreModel& model, RandomSource& rng) {
  switch (run.method) {
    case Method::replace: return run_replace(run, model, rng);
    case Method::repaint: return run_repaint(run, model, rng);
    case Method::langevin: return run_langevin(run, model, rng);
    case Method::lanpaint: return run_lanpaint(run, model, rng);
  }
  throw ConfigError("unknown method");
}

}  // namespace lanpaint
