#include "lanpaint/scores.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace lanpaint {
namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

struct Signal {
  double alpha_bar;
  double one_minus;  // 1 - alpha_bar without cancellation
  double root;       // sqrt(alpha_bar)
};

Signal signal_at(double t) {
  if (!(t >= 0.0)) throw InvalidRange("diffusion time must be non-negative");
  return {std::exp(-t), -std::expm1(-t), std::exp(-0.5 * t)};
}

// Solves (abar S + (1 - abar) I) u = z - sqrt(abar) mu and reports the
// quadratic form and log-determinant.
struct GaussianSolve {
  std::vector<double> u;
  double quad = 0.0;
  double logdet = 0.0;
};

GaussianSolve solve_diffused(const State& mean, const SymMatrix& cov, const State& z, double t) {
  const std::size_t d = mean.size();
  if (z.size() != d) throw InvalidRange("state dimension does not match target");
  const Signal sg = signal_at(t);
  std::vector<double> diff(d);
  for (std::size_t i = 0; i < d; ++i) diff[i] = z[i] - sg.root * mean[i];

  GaussianSolve out;
  out.u.resize(d);
  if (d == 2) {
    const double a = sg.alpha_bar * cov(0, 0) + sg.one_minus;
    const double b = sg.alpha_bar * cov(0, 1);
    const double c = sg.alpha_bar * cov(1, 1) + sg.one_minus;
    const double det = a * c - b * b;
    if (!(det > 0.0)) throw SingularCovariance("diffused covariance is singular");
    out.u[0] = (c * diff[0] - b * diff[1]) / det;
    out.u[1] = (a * diff[1] - b * diff[0]) / det;
    out.logdet = std::log(det);
  } else {
    Matrix m(d, d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        m(i, j) = sg.alpha_bar * cov(i, j) + (i == j ? sg.one_minus : 0.0);
    const Matrix l = cholesky(SymMatrix(std::move(m)));
    for (std::size_t i = 0; i < d; ++i) {
      if (!(l(i, i) > 0.0)) throw SingularCovariance("diffused covariance is singular");
      out.logdet += 2.0 * std::log(l(i, i));
    }
    std::vector<double> w(d);
    for (std::size_t i = 0; i < d; ++i) {
      double v = diff[i];
      for (std::size_t k = 0; k < i; ++k) v -= l(i, k) * w[k];
      w[i] = v / l(i, i);
    }
    for (std::size_t ii = d; ii-- > 0;) {
      double v = w[ii];
      for (std::size_t k = ii + 1; k < d; ++k) v -= l(k, ii) * out.u[k];
      out.u[ii] = v / l(ii, ii);
    }
  }
  for (std::size_t i = 0; i < d; ++i) out.quad += diff[i] * out.u[i];
  return out;
}

double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

void GaussianTarget::validate() const {
  if (mean.empty() || cov.dim() != mean.size()) {
    throw InvalidRange("Gaussian target: mean and covariance shapes disagree");
  }
  cholesky(cov);
}

void GmmTarget::validate() const {
  const std::size_t k = weights.size();
  if (k == 0) throw InvalidRange("mixture must have at least one component");
  if (means.size() != k || covs.size() != k) {
    throw InvalidRange("mixture weights, means and covariances differ in length");
  }
  const std::size_t d = dim();
  if (d == 0) throw InvalidRange("mixture components must have dimension >= 1");
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    if (!(weights[i] > 0.0)) throw InvalidRange("mixture weights must be positive");
    if (means[i].size() != d || covs[i].dim() != d) {
      throw InvalidRange("mixture component dimensions differ");
    }
    cholesky(covs[i]);
    total += weights[i];
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidRange("mixture weights must sum to 1");
}

ScoreEval gaussian_diffused_score(const GaussianTarget& target, const State& z, double t) {
  GaussianSolve s = solve_diffused(target.mean, target.cov, z, t);
  for (double& v : s.u) v = -v;
  return {std::move(s.u)};
}

double gaussian_diffused_log_density(const GaussianTarget& target, const State& z, double t) {
  const GaussianSolve s = solve_diffused(target.mean, target.cov, z, t);
  return -0.5 * (s.quad + s.logdet + static_cast<double>(z.size()) * kLog2Pi);
}

GaussianTarget diffuse(const GaussianTarget& target, double t) {
  const Signal sg = signal_at(t);
  const std::size_t d = target.dim();
  State mean(d);
  Matrix cov(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    mean[i] = sg.root * target.mean[i];
    for (std::size_t j = 0; j < d; ++j)
      cov(i, j) = sg.alpha_bar * target.cov(i, j) + (i == j ? sg.one_minus : 0.0);
  }
  return {std::move(mean), SymMatrix(std::move(cov))};
}

ScoreEval gmm_diffused_score(const GmmTarget& target, const State& z, double t) {
  const std::size_t k = target.components();
  const std::size_t d = target.dim();
  std::vector<double> logits(k);
  std::vector<std::vector<double>> grads(k);
  for (std::size_t c = 0; c < k; ++c) {
    GaussianSolve s = solve_diffused(target.means[c], target.covs[c], z, t);
    logits[c] = std::log(target.weights[c]) -
                0.5 * (s.quad + s.logdet + static_cast<double>(d) * kLog2Pi);
    grads[c] = std::move(s.u);
  }
  const double lse = log_sum_exp(logits);
  ScoreEval out{std::vector<double>(d, 0.0)};
  for (std::size_t c = 0; c < k; ++c) {
    const double r = std::exp(logits[c] - lse);
    for (std::size_t i = 0; i < d; ++i) out.score[i] -= r * grads[c][i];
  }
  return out;
}

double gmm_diffused_log_density(const GmmTarget& target, const State& z, double t) {
  std::vector<double> logits(target.components());
  for (std::size_t c = 0; c < logits.size(); ++c) {
    logits[c] = std::log(target.weights[c]) +
                gaussian_diffused_log_density({target.means[c], target.covs[c]}, z, t);
  }
  return log_sum_exp(logits);
}

GaussianScoreModel::GaussianScoreModel(GaussianTarget target) : target_(std::move(target)) {
  target_.validate();
}

ScoreEval GaussianScoreModel::score(const State& z, double t) const {
  return gaussian_diffused_score(target_, z, t);
}

double GaussianScoreModel::log_density(const State& z, double t) const {
  return gaussian_diffused_log_density(target_, z, t);
}

GmmScoreModel::GmmScoreModel(GmmTarget target) : target_(std::move(target)) {
  target_.validate();
  const std::size_t k = target_.components();
  log_weights_.resize(k);
  for (std::size_t c = 0; c < k; ++c) log_weights_[c] = std::log(target_.weights[c]);
  if (target_.dim() == 2) {
    mean2_.resize(2 * k);
    cov2_.resize(3 * k);
    shared_cov_ = true;
    for (std::size_t c = 0; c < k; ++c) {
      mean2_[2 * c] = target_.means[c][0];
      mean2_[2 * c + 1] = target_.means[c][1];
      cov2_[3 * c] = target_.covs[c](0, 0);
      cov2_[3 * c + 1] = target_.covs[c](0, 1);
      cov2_[3 * c + 2] = target_.covs[c](1, 1);
      for (int e = 0; e < 3; ++e) shared_cov_ = shared_cov_ && cov2_[3 * c + e] == cov2_[e];
    }
  }
}

void GmmScoreModel::component_terms(const State& z, double t, std::vector<double>& logits,
                                    std::vector<double>* grads) const {
  const std::size_t k = target_.components();
  logits.resize(k);
  if (target_.dim() != 2) {
    if (grads) grads->assign(k * target_.dim(), 0.0);
    for (std::size_t c = 0; c < k; ++c) {
      const GaussianSolve s = solve_diffused(target_.means[c], target_.covs[c], z, t);
      logits[c] = log_weights_[c] -
                  0.5 * (s.quad + s.logdet + static_cast<double>(target_.dim()) * kLog2Pi);
      if (grads) {
        for (std::size_t i = 0; i < s.u.size(); ++i) (*grads)[c * s.u.size() + i] = -s.u[i];
      }
    }
    return;
  }
  if (z.size() != 2) throw InvalidRange("state dimension does not match target");
  const Signal sg = signal_at(t);
  if (grads) grads->resize(2 * k);
  double ia = 0, ib = 0, ic = 0, half_logdet = 0;
  auto invert = [&](std::size_t c) {
    const double a = sg.alpha_bar * cov2_[3 * c] + sg.one_minus;
    const double b = sg.alpha_bar * cov2_[3 * c + 1];
    const double cc = sg.alpha_bar * cov2_[3 * c + 2] + sg.one_minus;
    const double det = a * cc - b * b;
    if (!(det > 0.0)) throw SingularCovariance("diffused covariance is singular");
    ia = cc / det;
    ib = -b / det;
    ic = a / det;
    half_logdet = 0.5 * std::log(det) + kLog2Pi;
  };
  if (shared_cov_) invert(0);
  const double z0 = z[0], z1 = z[1];
  for (std::size_t c = 0; c < k; ++c) {
    if (!shared_cov_) invert(c);
    const double d0 = z0 - sg.root * mean2_[2 * c];
    const double d1 = z1 - sg.root * mean2_[2 * c + 1];
    const double u0 = ia * d0 + ib * d1;
    const double u1 = ib * d0 + ic * d1;
    logits[c] = log_weights_[c] - 0.5 * (d0 * u0 + d1 * u1) - half_logdet;
    if (grads) {
      (*grads)[2 * c] = -u0;
      (*grads)[2 * c + 1] = -u1;
    }
  }
}

ScoreEval GmmScoreModel::score(const State& z, double t) const {
  // Scratch space reused across calls on the same thread.
  thread_local std::vector<double> logits, grads;
  component_terms(z, t, logits, &grads);
  const std::size_t d = target_.dim();
  const double m = *std::max_element(logits.begin(), logits.end());
  std::vector<double> acc(d, 0.0);
  double norm = 0.0;
  // Components more than 40 nats below the maximum change the sum by less
  // than one part in 1e17 and are skipped.
  const double cutoff = m - 40.0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    if (logits[c] < cutoff) continue;
    const double w = std::exp(logits[c] - m);
    norm += w;
    for (std::size_t i = 0; i < d; ++i) acc[i] += w * grads[c * d + i];
  }
  for (double& v : acc) v /= norm;
  return {std::move(acc)};
}

double GmmScoreModel::log_density(const State& z, double t) const {
  thread_local std::vector<double> logits;
  component_terms(z, t, logits, nullptr);
  return log_sum_exp(logits);
}

std::vector<double> score_to_eps(const ScoreEval& s, double t) {
  if (!(t > 0.0)) throw DegenerateTime("score_to_eps: t must be positive");
  const double scale = -std::sqrt(-std::expm1(-t));
  std::vector<double> eps(s.score.size());
  for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = scale * s.score[i];
  return eps;
}

ScoreEval eps_to_score(std::span<const double> eps, double t) {
  if (!(t > 0.0)) throw DegenerateTime("eps_to_score: t must be positive");
  const double scale = -1.0 / std::sqrt(-std::expm1(-t));
  ScoreEval s{std::vector<double>(eps.size())};
  for (std::size_t i = 0; i < eps.size(); ++i) s.score[i] = scale * eps[i];
  return s;
}

VeState vp_to_ve(const State& z_vp, double t) {
  const Signal sg = signal_at(t);
  VeState out{z_vp, std::sqrt(sg.one_minus / sg.alpha_bar)};
  const double inv_root = std::exp(0.5 * t);
  for (double& v : out.z) v *= inv_root;
  return out;
}

State ve_to_vp(const State& z_ve, double sigma) {
  const double root = 1.0 / std::sqrt(1.0 + sigma * sigma);
  State z = z_ve;
  for (double& v : z) v *= root;
  return z;
}

RfState ve_to_rf(const State& z_ve, double sigma) {
  if (!(sigma >= 0.0)) throw InvalidRange("ve_to_rf: sigma must be non-negative");
  if (std::isinf(sigma)) throw DegenerateTime("ve_to_rf: sigma is infinite");
  RfState out{z_ve, sigma / (1.0 + sigma)};
  for (double& v : out.r) v /= (1.0 + sigma);
  return out;
}

VeState rf_to_ve(const State& r, double s) {
  if (!(s >= 0.0 && s < 1.0)) throw DegenerateTime("rf_to_ve: s must lie in [0, 1)");
  VeState out{r, s / (1.0 - s)};
  for (double& v : out.z) v /= (1.0 - s);
  return out;
}

std::vector<double> rf_velocity(std::span<const double> eps, const State& r, double s) {
  if (!(s < 1.0)) throw DegenerateTime("rf_velocity: s must be below 1");
  std::vector<double> v(eps.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = (eps[i] - r[i]) / (1.0 - s);
  return v;
}

GmmTarget read_gmm(std::istream& in) {
  GmmTarget g;
  std::string line;
  std::size_t dim = 0;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    ss.imbue(std::locale::classic());
    std::vector<double> tok;
    double v;
    while (ss >> v) tok.push_back(v);
    if (!ss.eof()) throw InvalidRange("gmm file line " + std::to_string(lineno) + ": bad number");
    // tokens = 1 + d + d(d+1)/2
    std::size_t d = 0;
    while (1 + (d + 1) + (d + 1) * (d + 2) / 2 <= tok.size()) ++d;
    if (d == 0 || 1 + d + d * (d + 1) / 2 != tok.size()) {
      throw InvalidRange("gmm file line " + std::to_string(lineno) + ": wrong token count");
    }
    if (dim == 0) dim = d;
    if (d != dim) throw InvalidRange("gmm file line " + std::to_string(lineno) + ": dimension changed");
    g.weights.push_back(tok[0]);
    g.means.emplace_back(std::vector<double>(tok.begin() + 1, tok.begin() + 1 + static_cast<long>(d)));
    Matrix cov(d, d);
    std::size_t p = 1 + d;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) cov(i, j) = cov(j, i) = tok[p++];
    g.covs.emplace_back(std::move(cov));
  }
  g.validate();
  return g;
}

GmmTarget load_gmm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidRange("cannot open gmm file: " + path);
  return read_gmm(in);
}

void write_gmm(std::ostream& out, const GmmTarget& target) {
  const auto old_prec = out.precision(std::numeric_limits<double>::max_digits10);
  const std::size_t d = target.dim();
  for (std::size_t c = 0; c < target.components(); ++c) {
    out << target.weights[c];
    for (std::size_t i = 0; i < d; ++i) out << ' ' << target.means[c][i];
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j) out << ' ' << target.covs[c](i, j);
    out << '\n';
  }
  out.precision(old_prec);
}

}  // namespace lanpaint
