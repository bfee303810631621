#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "lanpaint/bench.hpp"
#include "lanpaint/errors.hpp"
#include "lanpaint/fld.hpp"
#include "lanpaint/samplers.hpp"
#include "lanpaint/scores.hpp"
#include "lanpaint/sho.hpp"

namespace py = pybind11;
using namespace lanpaint;

namespace {

using Rows = std::vector<std::vector<double>>;

SymMatrix to_sym(const Rows& rows) {
  Matrix m(rows.size(), rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) throw InvalidRange("covariance must be square");
    for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i][j];
  }
  return SymMatrix(std::move(m));
}

Rows to_rows(const Matrix& m) {
  Rows r(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) r[i][j] = m(i, j);
  }
  return r;
}

GaussianTarget gaussian(const std::vector<double>& mean, const Rows& cov) {
  GaussianTarget g{State(mean), to_sym(cov)};
  g.validate();
  return g;
}

GmmTarget gmm(const std::vector<double>& weights, const Rows& means, const std::vector<Rows>& covs) {
  GmmTarget g;
  g.weights = weights;
  for (const auto& m : means) g.means.emplace_back(m);
  for (const auto& c : covs) g.covs.push_back(to_sym(c));
  g.validate();
  return g;
}

py::dict report_dict(const BenchmarkReport& r) {
  py::dict d;
  d["method"] = r.method;
  d["outer_steps"] = r.outer_steps;
  d["inner_steps"] = r.inner_steps;
  d["eta"] = r.eta;
  d["gamma"] = r.gamma;
  d["lambda"] = r.lambda;
  d["alpha"] = r.alpha;
  d["seed"] = r.seed;
  d["n_samples"] = r.n_samples;
  d["kl"] = r.kl;
  d["trap_frac"] = r.trap_frac;
  d["sample_mean"] = r.sample_mean.values();
  d["sample_cov"] = to_rows(r.sample_cov);
  return d;
}

std::vector<std::vector<double>> inpaint(const ScoreModel& model, const std::string& method,
                                         const std::vector<bool>& observed,
                                         const std::vector<double>& y_obs, std::size_t n_samples,
                                         std::size_t steps, const LanPaintConfig& cfg,
                                         std::uint64_t seed, std::size_t threads) {
  SamplerRun run;
  run.method = parse_method(method);
  run.grid = SamplerGrid::standard(steps);
  run.cfg = cfg;
  run.mask = Mask(observed);
  run.y_obs = State(y_obs);
  std::vector<std::vector<double>> out(n_samples);
  py::gil_scoped_release release;
  parallel_for(n_samples, threads, [&](std::size_t i) {
    RandomSource rng(seed, i);
    out[i] = run_method(run, model, rng).final.values();
  });
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Conditional diffusion sampling with fast Langevin inner loops";

  // Translators run newest first, so the base class goes in before the
  // more specific errors.
  py::register_exception<Error>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<InvalidRange>(m, "InvalidRange", PyExc_ValueError);

  py::class_<LanPaintConfig>(m, "LanPaintConfig")
      .def(py::init<>())
      .def(py::init([](double eta, std::size_t inner_steps, double gamma0, double alpha_noise,
                       double lambda) {
             LanPaintConfig c{eta, inner_steps, gamma0, alpha_noise, lambda};
             c.validate();
             return c;
           }),
           py::arg("eta") = LanPaintConfig{}.eta, py::arg("inner_steps") = LanPaintConfig{}.inner_steps,
           py::arg("gamma0") = LanPaintConfig{}.gamma0, py::arg("alpha_noise") = LanPaintConfig{}.alpha_noise,
           py::arg("lambda_") = LanPaintConfig{}.lambda)
      .def_readwrite("eta", &LanPaintConfig::eta)
      .def_readwrite("inner_steps", &LanPaintConfig::inner_steps)
      .def_readwrite("gamma0", &LanPaintConfig::gamma0)
      .def_readwrite("alpha_noise", &LanPaintConfig::alpha_noise)
      .def_readwrite("lambda_", &LanPaintConfig::lambda)
      .def("validate", &LanPaintConfig::validate)
      .def("__repr__", [](const LanPaintConfig& c) {
        return "LanPaintConfig(eta=" + format_double(c.eta) + ", inner_steps=" + std::to_string(c.inner_steps) +
               ", gamma0=" + format_double(c.gamma0) + ", alpha_noise=" + format_double(c.alpha_noise) +
               ", lambda_=" + format_double(c.lambda) + ")";
      });

  m.def(
      "aux_functions",
      [](double gt, double delta) {
        const AuxFunctions a = aux_functions(gt, delta);
        py::dict d;
        d["zeta1"] = a.zeta1;
        d["one_minus_zeta1"] = a.one_minus_zeta1;
        d["zeta2"] = a.zeta2;
        d["e_fn"] = a.e_fn;
        d["sigma11"] = a.sigma11;
        d["sigma22"] = a.sigma22;
        return d;
      },
      py::arg("gt"), py::arg("delta"));

  m.def(
      "sho_moments",
      [](const std::vector<double>& x0, const std::vector<double>& q0, double gamma, double a,
         const std::vector<double>& c, double d_coef, double dtau) {
        const ShoMoments mo = sho_moments(State(x0), State(q0), {gamma, a, c, d_coef, dtau});
        py::dict d;
        d["mu_x"] = mo.mu_x.values();
        d["mu_q"] = mo.mu_q.values();
        d["s_xx"] = mo.s_xx;
        d["s_xq"] = mo.s_xq;
        d["s_qq"] = mo.s_qq;
        return d;
      },
      py::arg("x0"), py::arg("q0"), py::arg("gamma"), py::arg("a"), py::arg("c"), py::arg("d_coef"),
      py::arg("dtau"));

  m.def(
      "sho_step",
      [](const std::vector<double>& x0, std::optional<std::vector<double>> q0, double gamma, double a,
         const std::vector<double>& c, double d_coef, double dtau, std::uint64_t seed) {
        RandomSource rng(seed);
        std::optional<State> q;
        if (q0) q = State(*q0);
        auto [x, qn] = sho_step(State(x0), q, {gamma, a, c, d_coef, dtau}, rng);
        return py::make_tuple(x.values(), qn.values());
      },
      py::arg("x0"), py::arg("q0"), py::arg("gamma"), py::arg("a"), py::arg("c"), py::arg("d_coef"),
      py::arg("dtau"), py::arg("seed") = 0);

  m.def(
      "gaussian_score",
      [](const std::vector<double>& mean, const Rows& cov, const std::vector<double>& z, double t) {
        return gaussian_diffused_score(gaussian(mean, cov), State(z), t).score;
      },
      py::arg("mean"), py::arg("cov"), py::arg("z"), py::arg("t"));
  m.def(
      "gmm_score",
      [](const std::vector<double>& weights, const Rows& means, const std::vector<Rows>& covs,
         const std::vector<double>& z, double t) {
        return GmmScoreModel(gmm(weights, means, covs)).score(State(z), t).score;
      },
      py::arg("weights"), py::arg("means"), py::arg("covs"), py::arg("z"), py::arg("t"));

  m.def(
      "inpaint_gaussian",
      [](const std::vector<double>& mean, const Rows& cov, const std::vector<bool>& observed,
         const std::vector<double>& y_obs, std::size_t n_samples, const std::string& method,
         std::size_t steps, const LanPaintConfig& cfg, std::uint64_t seed, std::size_t threads) {
        const GaussianScoreModel model(gaussian(mean, cov));
        return inpaint(model, method, observed, y_obs, n_samples, steps, cfg, seed, threads);
      },
      "Draw conditional samples from a Gaussian prior; rows are full states.", py::arg("mean"),
      py::arg("cov"), py::arg("observed"), py::arg("y_obs"), py::arg("n_samples"),
      py::arg("method") = "lanpaint", py::arg("steps") = 20, py::arg("cfg") = LanPaintConfig{},
      py::arg("seed") = 0, py::arg("threads") = 1);
  m.def(
      "inpaint_gmm",
      [](const std::vector<double>& weights, const Rows& means, const std::vector<Rows>& covs,
         const std::vector<bool>& observed, const std::vector<double>& y_obs, std::size_t n_samples,
         const std::string& method, std::size_t steps, const LanPaintConfig& cfg, std::uint64_t seed,
         std::size_t threads) {
        const GmmScoreModel model(gmm(weights, means, covs));
        return inpaint(model, method, observed, y_obs, n_samples, steps, cfg, seed, threads);
      },
      py::arg("weights"), py::arg("means"), py::arg("covs"), py::arg("observed"), py::arg("y_obs"),
      py::arg("n_samples"), py::arg("method") = "lanpaint", py::arg("steps") = 20,
      py::arg("cfg") = LanPaintConfig{}, py::arg("seed") = 0, py::arg("threads") = 1);

  m.def(
      "bench_gaussian",
      [](const std::string& method, std::size_t steps, std::size_t n_samples, const LanPaintConfig& cfg,
         std::uint64_t seed, double rho, double y, std::size_t threads) {
        CondGaussianBench b = CondGaussianBench::standard(rho, y);
        b.outer_steps = steps;
        b.n_samples = n_samples;
        BenchmarkReport r;
        {
          py::gil_scoped_release release;
          r = run_gaussian_bench(b, parse_method(method), cfg, {seed, threads, false});
        }
        return report_dict(r);
      },
      py::arg("method") = "lanpaint", py::arg("steps") = 20, py::arg("n_samples") = 50000,
      py::arg("cfg") = LanPaintConfig{}, py::arg("seed") = 0, py::arg("rho") = 0.8, py::arg("y") = 1.0,
      py::arg("threads") = 1);
  m.def(
      "bench_gmm",
      [](const std::string& method, std::size_t steps, std::size_t n_samples, const LanPaintConfig& cfg,
         std::uint64_t seed, std::optional<double> slice_y, std::uint64_t gmm_seed, std::size_t threads) {
        GmmBench b = GmmBench::standard(gmm_seed);
        b.outer_steps = steps;
        b.n_samples = n_samples;
        b.slice_y = slice_y;
        BenchmarkReport r;
        {
          py::gil_scoped_release release;
          r = run_gmm_bench(b, parse_method(method), cfg, {seed, threads, false});
        }
        return report_dict(r);
      },
      py::arg("method") = "lanpaint", py::arg("steps") = 20, py::arg("n_samples") = 20000,
      py::arg("cfg") = LanPaintConfig{}, py::arg("seed") = 0, py::arg("slice_y") = py::none(),
      py::arg("gmm_seed") = 2025, py::arg("threads") = 1);

  m.def(
      "score_ratio_curve",
      [](const std::vector<double>& t_grid, double lambda, std::size_t n_draws, std::uint64_t seed, double rho,
         double y) {
        const CondGaussianBench b = CondGaussianBench::standard(rho, y);
        std::vector<py::tuple> out;
        for (const RatioPoint& p : score_ratio_curve(b.joint, b.mask, b.y_obs, t_grid, lambda, n_draws, seed)) {
          out.push_back(py::make_tuple(p.t, p.alpha_bar, p.ratio));
        }
        return out;
      },
      "(t, alpha_bar, ratio) triples on the standard conditional-Gaussian joint.", py::arg("t_grid"),
      py::arg("lambda_") = 8.0, py::arg("n_draws") = 100000, py::arg("seed") = 0, py::arg("rho") = 0.8,
      py::arg("y") = 1.0);
  m.def(
      "loglog_slope",
      [](const std::vector<std::pair<double, double>>& alpha_bar_ratio) {
        std::vector<RatioPoint> c;
        for (const auto& [ab, r] : alpha_bar_ratio) c.push_back({-std::log(ab), ab, r});
        return loglog_slope(c);
      },
      "Slope of log(ratio) against log(1 - alpha_bar) from (alpha_bar, ratio) pairs.",
      py::arg("alpha_bar_ratio"));
}
