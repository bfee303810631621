#include "lanpaint/fld.hpp"

#include <cmath>
#include <string>

namespace lanpaint {

void LanPaintConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ConfigError("eta must be positive");
  if (!(gamma0 > 0.0) || !std::isfinite(gamma0)) throw ConfigError("gamma must be positive");
  if (!(alpha_noise >= 0.0) || !std::isfinite(alpha_noise)) {
    throw ConfigError("alpha must be non-negative");
  }
  if (!(lambda > -1.0) || !std::isfinite(lambda)) throw ConfigError("lambda must exceed -1");
}

double coef_x(double t, double alpha_noise) {
  if (!(t >= 0.0)) throw InvalidRange("coef_x: t must be non-negative");
  if (!(alpha_noise >= 0.0)) throw InvalidRange("coef_x: alpha must be non-negative");
  const double ab = std::exp(-t);
  const double denom = -std::expm1(-t) + ab * alpha_noise;
  if (!(denom > 0.0)) throw DegenerateTime("coef_x: zero noise with zero expected noise");
  return 1.0 / denom;
}

double coef_y(double t, double lambda) {
  if (!(t > 0.0)) throw DegenerateTime("coef_y: t must be positive");
  if (!(lambda > -1.0)) throw InvalidRange("coef_y: lambda must exceed -1");
  return (1.0 + lambda) / -std::expm1(-t);
}

ScoreEval big_score(const State& z, const State& y_obs, const Mask& mask, double t,
                    double lambda, const ScoreEval& s) {
  if (!(t > 0.0)) throw DegenerateTime("big_score: t must be positive");
  mask.require_size(z.size());
  if (y_obs.size() != z.size() || s.score.size() != z.size()) {
    throw InvalidRange("big_score: inconsistent lengths");
  }
  const double root = std::exp(-0.5 * t);
  const double var = -std::expm1(-t);
  ScoreEval out = s;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!mask[i]) continue;
    out.score[i] = (1.0 + lambda) * (root * y_obs[i] - z[i]) / var - lambda * s.score[i];
  }
  return out;
}

std::vector<double> build_c(const State& z, const ScoreEval& s_lambda, double a_x, double a_y,
                            const Mask& mask) {
  std::vector<double> c(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    c[i] = s_lambda.score[i] + (mask[i] ? a_y : a_x) * z[i];
  }
  return c;
}

FrictionStep friction_and_step(const LanPaintConfig& cfg, double a, double a_ref) {
  if (!(a > 0.0) || !(a_ref > 0.0)) throw InvalidRange("friction_and_step: A must be positive");
  return {cfg.gamma0 * cfg.gamma0 * a, cfg.eta * a_ref / a};
}

FldParams FldParams::uniform(double gamma, double a, double d_coef, double dtau) {
  RegionKernels k(gamma, a, d_coef, dtau);
  return {k, k};
}

namespace {

void check_lengths(const FldState& s, const Mask& mask) {
  mask.require_size(s.z.size());
  if (s.q && s.q->size() != s.z.size()) throw InvalidRange("FLD momentum has wrong length");
}

void init_momentum(FldState& s, const FldParams& p, const Mask& mask, RandomSource& rng) {
  if (s.q) return;
  State q(s.z.size());
  for (std::size_t i = 0; i < q.size(); ++i) {
    const ShoKernel& k = mask[i] ? p.observed.full : p.inpaint.full;
    q[i] = k.momentum_scale() * rng.normal();
  }
  s.q = std::move(q);
}

std::vector<double> eval_c(const CoefFn& c_fn, const State& z) {
  std::vector<double> c = c_fn(z);
  if (c.size() != z.size()) throw InvalidRange("coefficient function returned wrong length");
  return c;
}

}  // namespace

FldState fld_step_first(FldState state, const FldParams& p, const Mask& mask, const CoefFn& c_fn,
                        RandomSource& rng) {
  check_lengths(state, mask);
  init_momentum(state, p, mask, rng);
  std::vector<double> c = eval_c(c_fn, state.z);
  State& q = *state.q;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const ShoKernel& k = mask[i] ? p.observed.full : p.inpaint.full;
    k.sample(state.z[i], q[i], c[i], rng);
  }
  state.c_prev = std::move(c);
  return state;
}

FldState fld_step_second(FldState state, const FldParams& p, const Mask& mask,
                         const CoefFn& c_fn, RandomSource& rng) {
  check_lengths(state, mask);
  init_momentum(state, p, mask, rng);
  if (!state.c_prev) state.c_prev = eval_c(c_fn, state.z);
  const std::vector<double>& c0 = *state.c_prev;
  State& q = *state.q;
  const std::size_t d = state.z.size();
  for (std::size_t i = 0; i < d; ++i) {
    const ShoKernel& k = mask[i] ? p.observed.half : p.inpaint.half;
    k.sample(state.z[i], q[i], c0[i], rng);
  }
  std::vector<double> c_new = eval_c(c_fn, state.z);
  for (std::size_t i = 0; i < d; ++i) {
    const ShoKernel& k = mask[i] ? p.observed.full : p.inpaint.full;
    q[i] += k.gamma() * (c_new[i] - c0[i]) * k.dtau();
  }
  for (std::size_t i = 0; i < d; ++i) {
    const ShoKernel& k = mask[i] ? p.observed.half : p.inpaint.half;
    k.sample(state.z[i], q[i], c0[i], rng);
  }
  state.c_prev = std::move(c_new);
  return state;
}

}  // namespace lanpaint
