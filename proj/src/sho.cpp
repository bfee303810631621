#include "lanpaint/sho.hpp"

#include <cmath>

namespace lanpaint {
namespace {

// S = e^{-h} sinh(h√Δ)/√Δ and K = e^{-h} cosh(h√Δ), with h = Γτ/2.
struct SK {
  double s;
  double k;
};

SK sk_closed(double h, double delta) {
  if (delta > 0.0) {
    const double r = std::sqrt(delta);
    const double lo = h * (1.0 - delta) / (1.0 + r);  // h(1 - √Δ)
    const double hi = h * (1.0 + r);
    const double elo = std::exp(-lo);
    const double ehi = std::exp(-hi);
    const double s = (2.0 * h * r <= 1.0) ? ehi * std::expm1(2.0 * h * r) / (2.0 * r)
                                          : (elo - ehi) / (2.0 * r);
    return {s, 0.5 * (elo + ehi)};
  }
  const double e = std::exp(-h);
  if (delta < 0.0) {
    const double w = std::sqrt(-delta);
    return {e * std::sin(h * w) / w, e * std::cos(h * w)};
  }
  return {h * e, e};
}

SK sk_taylor(double h, double delta) {
  // Fourth order in u = h²Δ for sinh(√u)/√u and cosh(√u).
  const double u = h * h * delta;
  const double sinhc = 1.0 + u / 6.0 * (1.0 + u / 20.0 * (1.0 + u / 42.0 * (1.0 + u / 72.0)));
  const double coshv = 1.0 + u / 2.0 * (1.0 + u / 12.0 * (1.0 + u / 30.0 * (1.0 + u / 56.0)));
  const double e = std::exp(-h);
  return {e * h * sinhc, e * coshv};
}

// φ(x) = (1 - e^{-x}) / x, with φ(0) = 1.
double phi1(double x) {
  if (x == 0.0) return 1.0;
  return -std::expm1(-x) / x;
}

AuxFunctions finish(double g, SK sk, double one_minus_z1, double s22) {
  AuxFunctions f;
  const double h = 0.5 * g;
  f.zeta2 = sk.s / h;
  f.e_fn = 1.0 - 2.0 * sk.s;
  f.sigma11 = -std::expm1(-g) + 2.0 * sk.s * (sk.k - sk.s);
  f.one_minus_zeta1 = one_minus_z1;
  f.zeta1 = 1.0 - one_minus_z1;
  f.sigma22 = s22;
  return f;
}

// 1 - ζ₁ and σ₂₂ from S and K; accurate while 1 - Δ is not small.
AuxFunctions from_sk(double g, double delta, SK sk) {
  const double eps = 1.0 - delta;
  const double omz1 = (1.0 - sk.k - sk.s) / (0.25 * g * eps);
  const double s22 = 2.0 * (-std::expm1(-g) - 2.0 * sk.s * sk.k - 2.0 * sk.s * sk.s) / (g * eps);
  return finish(g, sk, omz1, s22);
}

// Same quantities written through φ for Δ > 0, which stays exact as A → 0.
AuxFunctions from_phi(double g, double delta, SK sk) {
  const double h = 0.5 * g;
  const double r = std::sqrt(delta);
  const double lo = h * (1.0 - delta) / (1.0 + r);
  const double hi = h * (1.0 + r);
  const double omz1 = (phi1(lo) - phi1(hi)) / r;
  const double s22 = (phi1(2.0 * lo) - 2.0 * phi1(g) + phi1(2.0 * hi)) / delta;
  return finish(g, sk, omz1, s22);
}

bool use_taylor(double h, double delta) {
  return std::abs(delta) < 1e-4 && h * h * std::abs(delta) < 1e-2;
}

bool use_series(double g, double delta) { return g < 1e-2 && g * g * std::abs(delta) < 1e-2; }

}  // namespace

void ShoParams::validate() const {
  if (!(gamma > 0.0)) throw InvalidRange("SHO friction must be positive");
  if (!(dtau > 0.0)) throw InvalidRange("SHO step must be positive");
  if (!(a >= 0.0)) throw InvalidRange("SHO restoring coefficient must be non-negative");
  if (!(d_coef >= 0.0)) throw InvalidRange("SHO noise scale must be non-negative");
}

namespace detail {

AuxFunctions aux_closed(double gt, double delta) {
  const SK sk = sk_closed(0.5 * gt, delta);
  return delta >= 0.25 ? from_phi(gt, delta, sk) : from_sk(gt, delta, sk);
}

AuxFunctions aux_taylor_delta(double gt, double delta) {
  return from_sk(gt, delta, sk_taylor(0.5 * gt, delta));
}

AuxFunctions aux_small_gt(double gt, double delta) {
  const double d = delta;
  const double d2 = d * d;
  const double d3 = d2 * d;
  // Power series in g; coefficients are polynomials in Δ.
  const double c1[] = {0.5,
                       -1.0 / 6.0,
                       (d + 3.0) / 96.0,
                       -(d + 1.0) / 240.0,
                       (d2 + 10.0 * d + 5.0) / 11520.0,
                       -(d + 3.0) * (3.0 * d + 1.0) / 80640.0,
                       (d3 + 21.0 * d2 + 35.0 * d + 7.0) / 2580480.0,
                       -(d + 1.0) * (d2 + 6.0 * d + 1.0) / 5806080.0};
  const double c2[] = {1.0 / 3.0,
                       -0.25,
                       (d + 6.0) / 60.0,
                       -(d + 2.0) / 72.0,
                       (d2 + 15.0 * d + 15.0) / 2520.0,
                       -(d2 + 5.0 * d + 3.0) / 2880.0,
                       (d3 + 28.0 * d2 + 70.0 * d + 28.0) / 181440.0,
                       -(3.0 * d3 + 28.0 * d2 + 42.0 * d + 12.0) / 604800.0};
  double omz1 = 0.0;
  double s22 = 0.0;
  for (int k = 7; k >= 0; --k) {
    omz1 = omz1 * gt + c1[k];
    s22 = s22 * gt + c2[k];
  }
  omz1 *= gt;
  s22 *= gt * gt;
  const double h = 0.5 * gt;
  const SK sk = use_taylor(h, delta) ? sk_taylor(h, delta) : sk_closed(h, delta);
  return finish(gt, sk, omz1, s22);
}

}  // namespace detail

AuxFunctions aux_functions(double gt, double delta) {
  if (!(gt > 0.0) || !std::isfinite(gt)) throw InvalidRange("aux_functions: need gt > 0");
  if (!std::isfinite(delta)) throw InvalidRange("aux_functions: discriminant must be finite");
  if (use_series(gt, delta)) return detail::aux_small_gt(gt, delta);
  if (use_taylor(0.5 * gt, delta)) return detail::aux_taylor_delta(gt, delta);
  return detail::aux_closed(gt, delta);
}

ShoKernel::ShoKernel(double gamma, double a, double d_coef, double dtau)
    : gamma_(gamma), a_(a), d_(d_coef), dtau_(dtau) {
  ShoParams{gamma, a, {}, d_coef, dtau}.validate();
  const double g = gamma * dtau;
  aux_ = aux_functions(g, 1.0 - 4.0 * a / gamma);
  const double two_s = 1.0 - aux_.e_fn;  // 2S
  kxq_ = dtau * aux_.zeta2;
  kxc_ = dtau * aux_.one_minus_zeta1;
  kqq_ = aux_.e_fn - a * aux_.one_minus_zeta1 * dtau;
  kqc_ = two_s;
  const double d2 = d_coef * d_coef;
  s_xx_ = d2 * dtau * aux_.sigma22;
  const double gz = g * aux_.zeta2;
  s_xq_ = d2 * 0.5 * gz * gz;
  s_qq_ = d2 * 0.5 * gamma * aux_.sigma11;
  const Matrix l = cholesky(SymMatrix({{s_xx_, s_xq_}, {s_xq_, s_qq_}}));
  l11_ = l(0, 0);
  l21_ = l(1, 0);
  l22_ = l(1, 1);
  q_scale_ = std::sqrt(0.5 * gamma) * d_coef;
}

ShoMoments sho_moments(const State& x0, const State& q0, const ShoParams& p) {
  p.validate();
  if (q0.size() != x0.size() || p.c.size() != x0.size()) {
    throw InvalidRange("sho_moments: x0, q0 and C must have equal length");
  }
  const ShoKernel k(p.gamma, p.a, p.d_coef, p.dtau);
  ShoMoments m{State(x0.size()), State(x0.size()), k.s_xx(), k.s_xq(), k.s_qq()};
  for (std::size_t i = 0; i < x0.size(); ++i) {
    const auto [mx, mq] = k.mean(x0[i], q0[i], p.c[i]);
    m.mu_x[i] = mx;
    m.mu_q[i] = mq;
  }
  return m;
}

std::pair<State, State> sho_step(const State& x0, const std::optional<State>& q0,
                                 const ShoParams& p, RandomSource& rng) {
  p.validate();
  if (p.c.size() != x0.size() || (q0 && q0->size() != x0.size())) {
    throw InvalidRange("sho_step: x0, q0 and C must have equal length");
  }
  const ShoKernel k(p.gamma, p.a, p.d_coef, p.dtau);
  State x = x0;
  State q(x0.size());
  if (q0) {
    q = *q0;
  } else {
    for (double& v : q) v = k.momentum_scale() * rng.normal();
  }
  for (std::size_t i = 0; i < x.size(); ++i) k.sample(x[i], q[i], p.c[i], rng);
  return {std::move(x), std::move(q)};
}

}  // namespace lanpaint
