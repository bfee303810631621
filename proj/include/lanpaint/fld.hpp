#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "lanpaint/scores.hpp"
#include "lanpaint/sho.hpp"
#include "lanpaint/state.hpp"

namespace lanpaint {

struct LanPaintConfig {
  double eta = 0.25;
  std::size_t inner_steps = 5;
  double gamma0 = 15.0;
  double alpha_noise = 0.0;
  double lambda = 8.0;

  // Throws ConfigError. inner_steps = 0 is accepted and turns the inner
  // loop off.
  void validate() const;
};

struct FldState {
  State z;
  std::optional<State> q;
  std::optional<std::vector<double>> c_prev;
};

// Restoring coefficients of the two regions at diffusion time t.
double coef_x(double t, double alpha_noise);
double coef_y(double t, double lambda);

// s_x on inpainted coordinates; on observed ones
//   (1+λ)(√ᾱ y_o - y)/(1-ᾱ) - λ s_y.
ScoreEval big_score(const State& z, const State& y_obs, const Mask& mask, double t,
                    double lambda, const ScoreEval& s);

// C = s_λ + A z, with A = A_y on observed and A_x on inpainted coordinates.
std::vector<double> build_c(const State& z, const ScoreEval& s_lambda, double a_x, double a_y,
                            const Mask& mask);

struct FrictionStep {
  double gamma;
  double dtau;
};

// Γ = γ² A and Δτ = η A_ref / A, so Γ Δτ does not depend on the noise level.
FrictionStep friction_and_step(const LanPaintConfig& cfg, double a, double a_ref);

// Kernels for one region: the full step used by the first-order solver and
// the half step used on both sides of the second-order midpoint kick.
struct RegionKernels {
  ShoKernel full;
  ShoKernel half;

  RegionKernels() = default;
  RegionKernels(double gamma, double a, double d_coef, double dtau)
      : full(gamma, a, d_coef, dtau), half(gamma, a, d_coef, 0.5 * dtau) {}
};

struct FldParams {
  RegionKernels inpaint;
  RegionKernels observed;

  // Both regions share the same kernel; for unconditional chains.
  static FldParams uniform(double gamma, double a, double d_coef, double dtau);
};

using CoefFn = std::function<std::vector<double>(const State&)>;

// One SHO step per coordinate with C evaluated once at the current z.
FldState fld_step_first(FldState state, const FldParams& p, const Mask& mask, const CoefFn& c_fn,
                        RandomSource& rng);

// Half step with the cached C, one C evaluation at the midpoint, momentum
// kick Γ(C_new - C_old)Δτ, second half step with the cached C. If no C is
// cached yet it is evaluated first (one extra call).
FldState fld_step_second(FldState state, const FldParams& p, const Mask& mask,
                         const CoefFn& c_fn, RandomSource& rng);

}  // namespace lanpaint
