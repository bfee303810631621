#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lanpaint/state.hpp"

namespace lanpaint {

struct GaussianTarget {
  State mean;
  SymMatrix cov;

  std::size_t dim() const { return mean.size(); }
  void validate() const;
};

struct GmmTarget {
  std::vector<double> weights;
  std::vector<State> means;
  std::vector<SymMatrix> covs;

  std::size_t dim() const { return means.empty() ? 0 : means.front().size(); }
  std::size_t components() const { return weights.size(); }
  // Checks shapes, positivity and that the weights sum to 1 within 1e-12.
  void validate() const;
};

// Gradient of log p_t at a point.
struct ScoreEval {
  std::vector<double> score;
};

// Joint score of a target diffused by the VP forward process to time t.
class ScoreModel {
 public:
  virtual ~ScoreModel() = default;
  virtual std::size_t dim() const = 0;
  virtual ScoreEval score(const State& z, double t) const = 0;
  virtual double log_density(const State& z, double t) const = 0;
};

class GaussianScoreModel final : public ScoreModel {
 public:
  explicit GaussianScoreModel(GaussianTarget target);
  std::size_t dim() const override { return target_.dim(); }
  ScoreEval score(const State& z, double t) const override;
  double log_density(const State& z, double t) const override;
  const GaussianTarget& target() const { return target_; }

 private:
  GaussianTarget target_;
};

// Mixture model specialised for two dimensions; falls back to Cholesky
// solves for other dimensions.
class GmmScoreModel final : public ScoreModel {
 public:
  explicit GmmScoreModel(GmmTarget target);
  std::size_t dim() const override { return target_.dim(); }
  ScoreEval score(const State& z, double t) const override;
  double log_density(const State& z, double t) const override;
  const GmmTarget& target() const { return target_; }

 private:
  // Writes log(w_k N_k(z)) into logits and, when grads is non-null, the
  // per-component scores row-wise (K x d).
  void component_terms(const State& z, double t, std::vector<double>& logits,
                       std::vector<double>* grads) const;

  GmmTarget target_;
  std::vector<double> log_weights_;
  // Flat 2-D parameters: mean (2) and covariance (xx, xy, yy) per component.
  std::vector<double> mean2_;
  std::vector<double> cov2_;
  bool shared_cov_ = false;
};

ScoreEval gaussian_diffused_score(const GaussianTarget& target, const State& z, double t);
double gaussian_diffused_log_density(const GaussianTarget& target, const State& z, double t);
ScoreEval gmm_diffused_score(const GmmTarget& target, const State& z, double t);
double gmm_diffused_log_density(const GmmTarget& target, const State& z, double t);

// The target pushed through the forward process: N(sqrt(abar) mu, abar S + (1-abar) I).
GaussianTarget diffuse(const GaussianTarget& target, double t);

// eps = -sqrt(1 - abar_t) s and its inverse.
std::vector<double> score_to_eps(const ScoreEval& s, double t);
ScoreEval eps_to_score(std::span<const double> eps, double t);

struct VeState {
  State z;
  double sigma = 0.0;
};
struct RfState {
  State r;
  double s = 0.0;
};

VeState vp_to_ve(const State& z_vp, double t);
State ve_to_vp(const State& z_ve, double sigma);
RfState ve_to_rf(const State& z_ve, double sigma);
VeState rf_to_ve(const State& r, double s);
// Flow velocity v = (eps - r) / (1 - s).
std::vector<double> rf_velocity(std::span<const double> eps, const State& r, double s);

// Text format: one component per line,
//   weight mean_1 .. mean_d cov_11 cov_12 .. cov_1d cov_22 .. cov_dd
// (row-major upper triangle). Blank lines and lines starting with '#' are
// skipped. The dimension is inferred from the token count.
GmmTarget read_gmm(std::istream& in);
GmmTarget load_gmm_file(const std::string& path);
void write_gmm(std::ostream& out, const GmmTarget& target);

}  // namespace lanpaint
