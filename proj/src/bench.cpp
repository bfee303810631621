#include "lanpaint/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <ostream>
#include <thread>

namespace lanpaint {
namespace {

struct Split {
  std::vector<std::size_t> free;      // inpainted coordinates
  std::vector<std::size_t> observed;  // observed coordinates
};

Split split(const Mask& mask) {
  Split s;
  for (std::size_t i = 0; i < mask.size(); ++i) (mask[i] ? s.observed : s.free).push_back(i);
  return s;
}

Matrix block(const SymMatrix& m, const std::vector<std::size_t>& rows,
             const std::vector<std::size_t>& cols) {
  Matrix b(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) b(i, j) = m(rows[i], cols[j]);
  return b;
}

// Solves L Lᵀ x = b for a lower-triangular L with positive diagonal.
std::vector<double> chol_solve(const Matrix& l, std::vector<double> b) {
  const std::size_t n = l.rows();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= l(i, k) * b[k];
    b[i] /= l(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) b[i] -= l(k, i) * b[k];
    b[i] /= l(i, i);
  }
  return b;
}

Matrix strict_cholesky(const SymMatrix& m, const char* what) {
  Matrix l = cholesky(m);
  for (std::size_t i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) > 0.0)) throw SingularCovariance(std::string(what) + " is singular");
  }
  return l;
}

double log_sum_exp(const std::vector<double>& v) {
  const double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

struct Conditioned {
  GaussianTarget target;
  double log_evidence;  // log N(y_o; mu_o, S_oo)
};

Conditioned condition(const GaussianTarget& joint, const Split& sp, const State& y_obs) {
  const std::size_t no = sp.observed.size();
  const std::size_t nf = sp.free.size();
  const Matrix soo = block(joint.cov, sp.observed, sp.observed);
  const Matrix sfo = block(joint.cov, sp.free, sp.observed);
  const Matrix sff = block(joint.cov, sp.free, sp.free);
  const Matrix l = strict_cholesky(SymMatrix(soo), "observed covariance block");

  std::vector<double> r(no);
  for (std::size_t i = 0; i < no; ++i) r[i] = y_obs[sp.observed[i]] - joint.mean[sp.observed[i]];
  const std::vector<double> w = chol_solve(l, r);
  double quad = 0.0, logdet = 0.0;
  for (std::size_t i = 0; i < no; ++i) {
    quad += r[i] * w[i];
    logdet += 2.0 * std::log(l(i, i));
  }

  State mean(nf);
  Matrix cov(nf, nf);
  for (std::size_t i = 0; i < nf; ++i) {
    mean[i] = joint.mean[sp.free[i]];
    for (std::size_t k = 0; k < no; ++k) mean[i] += sfo(i, k) * w[k];
  }
  for (std::size_t j = 0; j < nf; ++j) {
    std::vector<double> col(no);
    for (std::size_t k = 0; k < no; ++k) col[k] = sfo(j, k);
    const std::vector<double> v = chol_solve(l, col);
    for (std::size_t i = 0; i < nf; ++i) {
      double s = 0.0;
      for (std::size_t k = 0; k < no; ++k) s += sfo(i, k) * v[k];
      cov(i, j) = sff(i, j) - s;
    }
  }
  for (std::size_t i = 0; i < nf; ++i)
    for (std::size_t j = i + 1; j < nf; ++j) cov(i, j) = cov(j, i) = 0.5 * (cov(i, j) + cov(j, i));
  constexpr double kLog2Pi = 1.8378770664093454836;
  return {{std::move(mean), SymMatrix(std::move(cov))},
          -0.5 * (quad + logdet + static_cast<double>(no) * kLog2Pi)};
}

double now_seconds() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

constexpr std::uint64_t kReferenceStream = 1ull << 40;

BenchmarkReport make_report(Method method, const LanPaintConfig& cfg, std::size_t outer_steps,
                            std::size_t n, const BenchOptions& opt) {
  BenchmarkReport r;
  r.method = to_string(method);
  r.outer_steps = outer_steps;
  r.inner_steps = method == Method::replace ? 0 : cfg.inner_steps;
  r.eta = cfg.eta;
  r.gamma = cfg.gamma0;
  r.lambda = cfg.lambda;
  r.alpha = cfg.alpha_noise;
  r.seed = opt.seed;
  r.n_samples = n;
  return r;
}

// Runs n conditional chains. y_for(i, rng) returns the full observation
// vector for chain i and may consume randomness before the sampler does.
std::vector<State> run_chains(const ScoreModel& model, Method method, const LanPaintConfig& cfg,
                              const Mask& mask, std::size_t outer_steps, std::size_t n,
                              const BenchOptions& opt,
                              const std::function<State(std::size_t, RandomSource&)>& y_for) {
  SamplerRun base;
  base.method = method;
  base.grid = SamplerGrid::standard(outer_steps);
  base.cfg = cfg;
  base.mask = mask;
  cfg.validate();
  std::vector<LanPaintStepPlan> plan;
  if (method == Method::lanpaint) plan = plan_lanpaint(base.grid, cfg);
  std::vector<State> out(n);
  parallel_for(n, opt.threads, [&](std::size_t i) {
    RandomSource rng(opt.seed, i);
    SamplerRun run = base;
    run.y_obs = y_for(i, rng);
    Trajectory tr = method == Method::lanpaint ? run_lanpaint(run, plan, model, rng)
                                               : run_method(run, model, rng);
    if (!tr.final.all_finite()) throw DegenerateSamples("sampler produced a non-finite state");
    out[i] = std::move(tr.final);
  });
  return out;
}

}  // namespace

CondGaussianBench CondGaussianBench::standard(double rho, double y) {
  CondGaussianBench b;
  b.joint = {State{0.0, 0.0}, SymMatrix({{1.0, rho}, {rho, 1.0}})};
  b.mask = Mask{false, true};
  b.y_obs = State{0.0, y};
  return b;
}

HistogramSpec HistogramSpec::bounding_box(const GmmTarget& target, std::size_t bins,
                                          double n_sigma) {
  if (target.dim() != 2) throw InvalidRange("histogram box needs a 2-D target");
  HistogramSpec s;
  s.bins_x = s.bins_y = bins;
  s.lo_x = s.lo_y = std::numeric_limits<double>::infinity();
  s.hi_x = s.hi_y = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < target.components(); ++k) {
    const double sx = n_sigma * std::sqrt(target.covs[k](0, 0));
    const double sy = n_sigma * std::sqrt(target.covs[k](1, 1));
    s.lo_x = std::min(s.lo_x, target.means[k][0] - sx);
    s.hi_x = std::max(s.hi_x, target.means[k][0] + sx);
    s.lo_y = std::min(s.lo_y, target.means[k][1] - sy);
    s.hi_y = std::max(s.hi_y, target.means[k][1] + sy);
  }
  return s;
}

HistogramReference make_histogram_reference(const GmmTarget& target, const HistogramSpec& spec) {
  if (spec.bins_x == 0 || spec.bins_y == 0 || spec.sub == 0 || !(spec.hi_x > spec.lo_x) ||
      !(spec.hi_y > spec.lo_y)) {
    throw InvalidRange("invalid histogram specification");
  }
  const GmmScoreModel model(target);
  const double wx = (spec.hi_x - spec.lo_x) / static_cast<double>(spec.bins_x);
  const double wy = (spec.hi_y - spec.lo_y) / static_cast<double>(spec.bins_y);
  const double sub = static_cast<double>(spec.sub);
  const double log_cell = std::log(wx * wy / (sub * sub));
  HistogramReference ref{spec, std::vector<double>(spec.bins_x * spec.bins_y)};
  std::vector<double> pts(spec.sub * spec.sub);
  State z(2);
  for (std::size_t i = 0; i < spec.bins_x; ++i) {
    for (std::size_t j = 0; j < spec.bins_y; ++j) {
      for (std::size_t a = 0; a < spec.sub; ++a) {
        z[0] = spec.lo_x + wx * (static_cast<double>(i) + (static_cast<double>(a) + 0.5) / sub);
        for (std::size_t b = 0; b < spec.sub; ++b) {
          z[1] = spec.lo_y + wy * (static_cast<double>(j) + (static_cast<double>(b) + 0.5) / sub);
          pts[a * spec.sub + b] = model.log_density(z, 0.0);
        }
      }
      ref.log_mass[i * spec.bins_y + j] = log_sum_exp(pts) + log_cell;
    }
  }
  const double total = log_sum_exp(ref.log_mass);
  for (double& v : ref.log_mass) v -= total;
  return ref;
}

GmmBench GmmBench::standard(std::uint64_t generator_seed) {
  GmmBench b;
  b.target = make_benchmark_gmm(500, 0.05, generator_seed);
  b.bins = HistogramSpec::bounding_box(b.target);
  return b;
}

GaussianTarget gaussian_conditional(const GaussianTarget& joint, const Mask& mask,
                                    const State& y_obs) {
  mask.require_conditional(joint.dim());
  if (y_obs.size() != joint.dim()) throw InvalidRange("observation vector has wrong length");
  Conditioned c = condition(joint, split(mask), y_obs);
  strict_cholesky(c.target.cov, "conditional covariance");
  return std::move(c.target);
}

GmmTarget gmm_conditional(const GmmTarget& joint, const Mask& mask, const State& y_obs) {
  mask.require_conditional(joint.dim());
  if (y_obs.size() != joint.dim()) throw InvalidRange("observation vector has wrong length");
  const Split sp = split(mask);
  GmmTarget out;
  std::vector<double> logw;
  for (std::size_t k = 0; k < joint.components(); ++k) {
    Conditioned c = condition({joint.means[k], joint.covs[k]}, sp, y_obs);
    logw.push_back(std::log(joint.weights[k]) + c.log_evidence);
    out.means.push_back(std::move(c.target.mean));
    out.covs.push_back(std::move(c.target.cov));
  }
  const double lse = log_sum_exp(logw);
  GmmTarget kept;
  for (std::size_t k = 0; k < logw.size(); ++k) {
    const double w = std::exp(logw[k] - lse);
    if (w > 0.0) {
      kept.weights.push_back(w);
      kept.means.push_back(std::move(out.means[k]));
      kept.covs.push_back(std::move(out.covs[k]));
    }
  }
  const double total = std::accumulate(kept.weights.begin(), kept.weights.end(), 0.0);
  for (double& w : kept.weights) w /= total;
  return kept;
}

std::pair<State, Matrix> sample_moments(const std::vector<State>& samples) {
  if (samples.size() < 2) throw DegenerateSamples("need at least two samples");
  const std::size_t d = samples.front().size();
  const double n = static_cast<double>(samples.size());
  State mean(d);
  for (const State& s : samples) {
    if (s.size() != d) throw DegenerateSamples("samples have differing dimensions");
    for (std::size_t i = 0; i < d; ++i) mean[i] += s[i];
  }
  for (double& m : mean) m /= n;
  Matrix cov(d, d);
  for (const State& s : samples)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j <= i; ++j) cov(i, j) += (s[i] - mean[i]) * (s[j] - mean[j]);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j <= i; ++j) cov(j, i) = cov(i, j) = cov(i, j) / (n - 1.0);
  return {std::move(mean), std::move(cov)};
}

double kl_gaussian_moments(const std::vector<State>& samples, const GaussianTarget& truth) {
  auto [m, s] = sample_moments(samples);
  const std::size_t d = truth.dim();
  if (m.size() != d) throw DegenerateSamples("sample dimension differs from the target");
  const Matrix lt = strict_cholesky(truth.cov, "target covariance");
  Matrix ls;
  try {
    ls = strict_cholesky(SymMatrix(s), "sample covariance");
  } catch (const Error&) {
    throw DegenerateSamples("sample covariance is singular");
  }
  double trace = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    std::vector<double> col(d);
    for (std::size_t i = 0; i < d; ++i) col[i] = s(i, j);
    trace += chol_solve(lt, col)[j];
  }
  std::vector<double> diff(d);
  for (std::size_t i = 0; i < d; ++i) diff[i] = truth.mean[i] - m[i];
  const std::vector<double> w = chol_solve(lt, diff);
  double quad = 0.0, logdet = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    quad += diff[i] * w[i];
    logdet += 2.0 * (std::log(lt(i, i)) - std::log(ls(i, i)));
  }
  const double kl = 0.5 * (trace + quad - static_cast<double>(d) + logdet);
  return std::max(kl, 0.0);
}

double kl_histogram_2d(const std::vector<State>& samples, const HistogramReference& ref) {
  if (samples.size() < 10000) throw DegenerateSamples("histogram KL needs at least 1e4 samples");
  const HistogramSpec& sp = ref.spec;
  std::vector<double> counts(sp.bins_x * sp.bins_y, 0.0);
  auto bin = [](double v, double lo, double hi, std::size_t nb) {
    const double f = std::floor((v - lo) / (hi - lo) * static_cast<double>(nb));
    return static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(nb - 1)));
  };
  for (const State& s : samples) {
    if (s.size() != 2 || !s.all_finite()) throw DegenerateSamples("histogram needs finite 2-D samples");
    counts[bin(s[0], sp.lo_x, sp.hi_x, sp.bins_x) * sp.bins_y + bin(s[1], sp.lo_y, sp.hi_y, sp.bins_y)] += 1.0;
  }
  const double total = static_cast<double>(samples.size()) + sp.pseudo_count * static_cast<double>(counts.size());
  double kl = 0.0;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    const double p = (counts[b] + sp.pseudo_count) / total;
    kl += p * (std::log(p) - ref.log_mass[b]);
  }
  return std::max(kl, 0.0);
}

double kl_histogram_2d(const std::vector<State>& samples, const GmmTarget& target,
                       const HistogramSpec& spec) {
  return kl_histogram_2d(samples, make_histogram_reference(target, spec));
}

double kl_histogram_1d(const std::vector<double>& samples, const GmmTarget& target, double lo,
                       double hi, std::size_t bins, double pseudo_count, std::size_t sub) {
  if (target.dim() != 1) throw InvalidRange("1-D histogram needs a 1-D target");
  if (samples.size() < 2 || bins == 0 || sub == 0 || !(hi > lo)) {
    throw DegenerateSamples("invalid 1-D histogram input");
  }
  const GmmScoreModel model(target);
  const double w = (hi - lo) / static_cast<double>(bins);
  std::vector<double> logq(bins), pts(sub);
  State z(1);
  for (std::size_t i = 0; i < bins; ++i) {
    for (std::size_t a = 0; a < sub; ++a) {
      z[0] = lo + w * (static_cast<double>(i) + (static_cast<double>(a) + 0.5) / static_cast<double>(sub));
      pts[a] = model.log_density(z, 0.0);
    }
    logq[i] = log_sum_exp(pts);
  }
  const double norm = log_sum_exp(logq);
  std::vector<double> counts(bins, 0.0);
  for (double v : samples) {
    if (!std::isfinite(v)) throw DegenerateSamples("non-finite sample");
    const double f = std::floor((v - lo) / w);
    counts[static_cast<std::size_t>(std::clamp(f, 0.0, static_cast<double>(bins - 1)))] += 1.0;
  }
  const double total = static_cast<double>(samples.size()) + pseudo_count * static_cast<double>(bins);
  double kl = 0.0;
  for (std::size_t i = 0; i < bins; ++i) {
    const double p = (counts[i] + pseudo_count) / total;
    kl += p * (std::log(p) - (logq[i] - norm));
  }
  return std::max(kl, 0.0);
}

State sample_gaussian(const GaussianTarget& target, RandomSource& rng) {
  const Matrix l = cholesky(target.cov);
  const std::size_t d = target.dim();
  const State xi = gaussian_vector(rng, d);
  State z = target.mean;
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k <= i; ++k) z[i] += l(i, k) * xi[k];
  return z;
}

State sample_gmm(const GmmTarget& target, RandomSource& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t k = target.components() - 1;
  for (std::size_t c = 0; c < target.components(); ++c) {
    acc += target.weights[c];
    if (u < acc) {
      k = c;
      break;
    }
  }
  return sample_gaussian({target.means[k], target.covs[k]}, rng);
}

GmmTarget make_benchmark_gmm(std::size_t components, double sd, std::uint64_t generator_seed) {
  if (components == 0 || !(sd > 0.0)) throw InvalidRange("invalid mixture generator arguments");
  RandomSource rng(generator_seed, 0);
  GmmTarget g;
  const double var = sd * sd;
  for (std::size_t k = 0; k < components; ++k) {
    const double x = -2.0 + 4.0 * rng.uniform();
    const double y = -2.0 + 4.0 * rng.uniform();
    g.weights.push_back(1.0 / static_cast<double>(components));
    g.means.push_back(State{x, y});
    g.covs.push_back(SymMatrix({{var, 0.0}, {0.0, var}}));
  }
  return g;
}

double trapping_fraction(const std::vector<double>& log_dens,
                         std::vector<double> reference_log_dens) {
  if (log_dens.empty() || reference_log_dens.empty()) {
    throw DegenerateSamples("trapping fraction needs samples");
  }
  const std::size_t k = reference_log_dens.size() / 100;
  std::nth_element(reference_log_dens.begin(), reference_log_dens.begin() + static_cast<long>(k),
                   reference_log_dens.end());
  const double threshold = reference_log_dens[k];
  const auto below = std::count_if(log_dens.begin(), log_dens.end(),
                                   [&](double v) { return v < threshold; });
  return static_cast<double>(below) / static_cast<double>(log_dens.size());
}

BenchmarkReport run_gaussian_bench(const CondGaussianBench& bench, Method method,
                                   const LanPaintConfig& cfg, const BenchOptions& opt) {
  if (bench.n_samples < 2) throw ConfigError("need at least two samples");
  const double start = now_seconds();
  const GaussianTarget truth = gaussian_conditional(bench.joint, bench.mask, bench.y_obs);
  const GaussianScoreModel model(bench.joint);
  const std::vector<State> finals =
      run_chains(model, method, cfg, bench.mask, bench.outer_steps, bench.n_samples, opt,
                 [&](std::size_t, RandomSource&) { return bench.y_obs; });
  const Split sp = split(bench.mask);
  std::vector<State> xs;
  xs.reserve(finals.size());
  for (const State& z : finals) {
    State x(sp.free.size());
    for (std::size_t i = 0; i < sp.free.size(); ++i) x[i] = z[sp.free[i]];
    xs.push_back(std::move(x));
  }
  BenchmarkReport r = make_report(method, cfg, bench.outer_steps, bench.n_samples, opt);
  r.kl = kl_gaussian_moments(xs, truth);
  std::tie(r.sample_mean, r.sample_cov) = sample_moments(xs);
  if (opt.keep_samples) r.samples = finals;
  r.wall_time_s = now_seconds() - start;
  return r;
}

BenchmarkReport run_gmm_bench(const GmmBench& bench, const HistogramReference& ref, Method method,
                              const LanPaintConfig& cfg, const BenchOptions& opt) {
  if (bench.n_samples < 2) throw ConfigError("need at least two samples");
  if (bench.target.dim() != 2) throw ConfigError("mixture benchmark is two-dimensional");
  bench.mask.require_conditional(2);
  const double start = now_seconds();
  const GmmScoreModel model(bench.target);
  const Split sp = split(bench.mask);
  const std::size_t n = bench.n_samples;

  std::vector<State> finals = run_chains(
      model, method, cfg, bench.mask, bench.outer_steps, n, opt,
      [&](std::size_t, RandomSource& rng) {
        State y(2);
        if (bench.slice_y) {
          for (std::size_t o : sp.observed) y[o] = *bench.slice_y;
        } else {
          const State joint = sample_gmm(bench.target, rng);
          for (std::size_t o : sp.observed) y[o] = joint[o];
        }
        return y;
      });

  // Reference draws from the exact law the sampler is meant to reproduce.
  std::vector<State> truth(n);
  GmmTarget cond;
  State slice_obs(2);
  if (bench.slice_y) {
    for (std::size_t o : sp.observed) slice_obs[o] = *bench.slice_y;
    cond = gmm_conditional(bench.target, bench.mask, slice_obs);
  }
  parallel_for(n, opt.threads, [&](std::size_t i) {
    RandomSource rng(opt.seed, kReferenceStream + i);
    if (bench.slice_y) {
      const State x = sample_gmm(cond, rng);
      State z = slice_obs;
      for (std::size_t k = 0; k < sp.free.size(); ++k) z[sp.free[k]] = x[k];
      truth[i] = std::move(z);
    } else {
      truth[i] = sample_gmm(bench.target, rng);
    }
  });

  std::vector<double> lp(n), lp_ref(n);
  parallel_for(n, opt.threads, [&](std::size_t i) {
    lp[i] = model.log_density(finals[i], 0.0);
    lp_ref[i] = model.log_density(truth[i], 0.0);
  });

  BenchmarkReport r = make_report(method, cfg, bench.outer_steps, n, opt);
  if (bench.slice_y) {
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = finals[i][sp.free[0]];
    const double lo = sp.free[0] == 0 ? ref.spec.lo_x : ref.spec.lo_y;
    const double hi = sp.free[0] == 0 ? ref.spec.hi_x : ref.spec.hi_y;
    r.kl = kl_histogram_1d(xs, cond, lo, hi, ref.spec.bins_x, ref.spec.pseudo_count);
  } else {
    r.kl = kl_histogram_2d(finals, ref);
  }
  r.trap_frac = trapping_fraction(lp, std::move(lp_ref));
  std::tie(r.sample_mean, r.sample_cov) = sample_moments(finals);
  if (opt.keep_samples) r.samples = std::move(finals);
  r.wall_time_s = now_seconds() - start;
  return r;
}

BenchmarkReport run_gmm_bench(const GmmBench& bench, Method method, const LanPaintConfig& cfg,
                              const BenchOptions& opt) {
  HistogramReference ref;
  if (bench.slice_y) {
    ref.spec = bench.bins;  // only the box and bin count are used
  } else {
    ref = make_histogram_reference(bench.target, bench.bins);
  }
  return run_gmm_bench(bench, ref, method, cfg, opt);
}

std::vector<double> conditional_y_gradient(const GaussianTarget& joint, const Mask& mask,
                                           const State& z, double t) {
  const Split sp = split(mask);
  const ScoreEval s = gaussian_diffused_score(joint, z, t);
  GaussianTarget marginal{State(sp.observed.size()),
                          SymMatrix(block(joint.cov, sp.observed, sp.observed))};
  State y(sp.observed.size());
  for (std::size_t k = 0; k < sp.observed.size(); ++k) {
    marginal.mean[k] = joint.mean[sp.observed[k]];
    y[k] = z[sp.observed[k]];
  }
  const ScoreEval sm = gaussian_diffused_score(marginal, y, t);
  std::vector<double> g(sp.observed.size());
  for (std::size_t k = 0; k < g.size(); ++k) g[k] = s.score[sp.observed[k]] - sm.score[k];
  return g;
}

std::vector<double> ideal_observed_score(const GaussianTarget& joint, const Mask& mask,
                                         const State& y_obs, const State& z, double t,
                                         double lambda) {
  if (!(t > 0.0)) throw DegenerateTime("ideal score needs t > 0");
  const Split sp = split(mask);
  const ScoreEval s = gaussian_diffused_score(joint, z, t);
  const std::vector<double> cg = conditional_y_gradient(joint, mask, z, t);
  const double root = std::exp(-0.5 * t);
  const double var = -std::expm1(-t);
  std::vector<double> out(sp.observed.size());
  for (std::size_t k = 0; k < out.size(); ++k) {
    const std::size_t o = sp.observed[k];
    out[k] = (1.0 + lambda) * cg[k] - (1.0 + lambda) * (z[o] - root * y_obs[o]) / var -
             lambda * s.score[o];
  }
  return out;
}

std::vector<RatioPoint> score_ratio_curve(const GaussianTarget& joint, const Mask& mask,
                                          const State& y_obs, const std::vector<double>& t_grid,
                                          double lambda, std::size_t n_draws, std::uint64_t seed) {
  if (n_draws == 0) throw InvalidRange("score ratio needs at least one draw");
  const GaussianTarget cond = gaussian_conditional(joint, mask, y_obs);
  const Matrix lc = cholesky(cond.cov);
  const Split sp = split(mask);
  std::vector<RatioPoint> curve;
  for (std::size_t ti = 0; ti < t_grid.size(); ++ti) {
    const double t = t_grid[ti];
    if (!(t > 0.0)) throw InvalidRange("score ratio grid needs t > 0");
    RandomSource rng(seed, ti);
    const double root = std::exp(-0.5 * t);
    const double sd = std::sqrt(-std::expm1(-t));
    double num = 0.0, den = 0.0;
    State z(joint.dim());
    for (std::size_t n = 0; n < n_draws; ++n) {
      const State xi = gaussian_vector(rng, sp.free.size());
      for (std::size_t i = 0; i < sp.free.size(); ++i) {
        double x0 = cond.mean[i];
        for (std::size_t k = 0; k <= i; ++k) x0 += lc(i, k) * xi[k];
        z[sp.free[i]] = root * x0 + sd * rng.normal();
      }
      for (std::size_t o : sp.observed) z[o] = root * y_obs[o] + sd * rng.normal();
      const std::vector<double> ideal = ideal_observed_score(joint, mask, y_obs, z, t, lambda);
      const ScoreEval g =
          big_score(z, y_obs, mask, t, lambda, gaussian_diffused_score(joint, z, t));
      double dn = 0.0, dd = 0.0;
      for (std::size_t k = 0; k < sp.observed.size(); ++k) {
        const double diff = ideal[k] - g.score[sp.observed[k]];
        dn += diff * diff;
        dd += ideal[k] * ideal[k];
      }
      num += std::sqrt(dn);
      den += std::sqrt(dd);
    }
    curve.push_back({t, std::exp(-t), num / den});
  }
  return curve;
}

double loglog_slope(const std::vector<RatioPoint>& curve) {
  if (curve.size() < 2) throw InvalidRange("slope fit needs at least two points");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(curve.size());
  for (const RatioPoint& p : curve) {
    const double x = std::log(-std::expm1(-p.t));
    const double y = std::log(p.ratio);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double denom = n * sxx - sx * sx;
  if (!(std::abs(denom) > 0.0)) throw InvalidRange("slope fit needs distinct noise levels");
  return (n * sxy - sx * sy) / denom;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    constexpr std::size_t kChunk = 64;
    while (!failed.load()) {
      const std::size_t begin = next.fetch_add(kChunk);
      if (begin >= n) break;
      const std::size_t end = std::min(n, begin + kChunk);
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads - 1);
  for (std::size_t k = 1; k < threads; ++k) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_report_csv(std::ostream& out, const std::vector<BenchmarkReport>& rows) {
  out << "method,outer_steps,inner_steps,eta,gamma,lambda,alpha,seed,n_samples,kl,trap_frac,"
         "wall_time_s\n";
  for (const BenchmarkReport& r : rows) {
    out << r.method << ',' << r.outer_steps << ',' << r.inner_steps << ',' << format_double(r.eta)
        << ',' << format_double(r.gamma) << ',' << format_double(r.lambda) << ','
        << format_double(r.alpha) << ',' << r.seed << ',' << r.n_samples << ','
        << format_double(r.kl) << ',' << format_double(r.trap_frac) << ','
        << format_double(r.wall_time_s) << '\n';
  }
}

}  // namespace lanpaint
