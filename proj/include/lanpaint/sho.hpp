#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "lanpaint/state.hpp"

namespace lanpaint {

// Linear oscillator  dx = q dτ,  dq = Γ(-q - A x + C) dτ + Γ D dW.
struct ShoParams {
  double gamma = 1.0;
  double a = 0.0;
  std::vector<double> c;
  double d_coef = 0.0;
  double dtau = 1.0;

  void validate() const;
  double discriminant() const { return 1.0 - 4.0 * a / gamma; }
};

// Auxiliary functions of the exact transition law, evaluated at g = Γτ and
// discriminant Δ. one_minus_zeta1 is 1 - ζ₁ computed without subtracting
// from one; the moment formulas use it directly.
struct AuxFunctions {
  double zeta1 = 0.0;
  double one_minus_zeta1 = 0.0;
  double zeta2 = 0.0;
  double e_fn = 0.0;
  double sigma11 = 0.0;
  double sigma22 = 0.0;
};

AuxFunctions aux_functions(double gt, double delta);

namespace detail {
// Individual evaluation branches, exposed so tests can compare them where
// their domains overlap. aux_functions picks among them automatically.
AuxFunctions aux_closed(double gt, double delta);
AuxFunctions aux_taylor_delta(double gt, double delta);
AuxFunctions aux_small_gt(double gt, double delta);
}  // namespace detail

struct ShoMoments {
  State mu_x;
  State mu_q;
  double s_xx = 0.0;
  double s_xq = 0.0;
  double s_qq = 0.0;
};

// Transition law for fixed (Γ, A, D, Δτ). Per-coordinate drive C is
// supplied at each use, so one kernel serves every coordinate and chain.
class ShoKernel {
 public:
  ShoKernel() = default;
  ShoKernel(double gamma, double a, double d_coef, double dtau);

  double gamma() const { return gamma_; }
  double a() const { return a_; }
  double d_coef() const { return d_; }
  double dtau() const { return dtau_; }
  const AuxFunctions& aux() const { return aux_; }
  double s_xx() const { return s_xx_; }
  double s_xq() const { return s_xq_; }
  double s_qq() const { return s_qq_; }

  // Standard deviation of the stationary momentum, sqrt(Γ/2) D.
  double momentum_scale() const { return q_scale_; }

  std::pair<double, double> mean(double x0, double q0, double c) const {
    const double drive = c - a_ * x0;
    return {x0 + q0 * kxq_ + drive * kxc_, q0 * kqq_ + drive * kqc_};
  }

  // Advances one coordinate in place; consumes two normals.
  void sample(double& x, double& q, double c, RandomSource& rng) const {
    const auto [mx, mq] = mean(x, q, c);
    const double n1 = rng.normal();
    const double n2 = rng.normal();
    x = mx + l11_ * n1;
    q = mq + l21_ * n1 + l22_ * n2;
  }

 private:
  double gamma_ = 1.0, a_ = 0.0, d_ = 0.0, dtau_ = 1.0;
  AuxFunctions aux_{};
  double kxq_ = 0, kxc_ = 0, kqq_ = 0, kqc_ = 0;
  double s_xx_ = 0, s_xq_ = 0, s_qq_ = 0;
  double l11_ = 0, l21_ = 0, l22_ = 0;
  double q_scale_ = 0;
};

ShoMoments sho_moments(const State& x0, const State& q0, const ShoParams& p);

// One exact step. A missing q0 is first drawn from N(0, (Γ/2) D²).
std::pair<State, State> sho_step(const State& x0, const std::optional<State>& q0,
                                 const ShoParams& p, RandomSource& rng);

}  // namespace lanpaint
