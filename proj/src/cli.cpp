#include "lanpaint/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <thread>

#include "lanpaint/bench.hpp"
#include "lanpaint/svg.hpp"

namespace lanpaint::cli {
namespace {

constexpr double kDefaultEta = LanPaintConfig{}.eta;

struct SweepOptions {
  std::vector<std::string> methods{"replace", "repaint", "langevin", "lanpaint"};
  std::vector<std::size_t> steps{20};
  std::vector<std::size_t> inner{5};
  std::vector<std::uint64_t> seeds{0};
  double eta = kDefaultEta;
  double gamma = 15.0;
  double lambda = 8.0;
  double alpha = 0.0;
  std::size_t samples = 0;
  std::size_t threads = 0;
  std::string out;
  std::string plot;
  bool timing = false;
};

struct GaussianOptions {
  double rho = 0.8;
  double y = 1.0;
};

struct GmmOptions {
  std::optional<double> slice_y;
  std::string gmm_file;
  std::string scatter;
  std::uint64_t gmm_seed = 2025;
};

struct RatioOptions {
  double lambda = 8.0;
  std::size_t draws = 100000;
  std::uint64_t seed = 0;
  std::size_t points = 20;
  double abar_min = 0.9;
  double abar_max = 0.9999;
  std::string out;
  std::string plot;
};

void add_sweep_options(CLI::App& app, SweepOptions& o, std::size_t default_samples) {
  o.samples = default_samples;
  app.add_option("--method", o.methods, "Comma-separated methods: replace,repaint,langevin,lanpaint")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--steps", o.steps, "Outer diffusion steps (comma-separated list)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--inner", o.inner, "Inner iterations N (comma-separated list)")
      ->delimiter(',')
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--seed", o.seeds, "Master seeds (comma-separated list)")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--eta", o.eta, "Langevin step size")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--gamma", o.gamma, "Friction scale")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--lambda", o.lambda, "Guidance scale (> -1)")->capture_default_str();
  app.add_option("--alpha", o.alpha, "Expected noise level")->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_option("--samples", o.samples, "Samples per cell")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--threads", o.threads, "Worker threads (default: LANPAINT_THREADS or all cores)")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", o.out, "CSV output path (default: stdout)");
  app.add_option("--plot", o.plot, "SVG plot of KL against outer steps");
  app.add_flag("--timing", o.timing, "Record wall-clock time in the CSV (otherwise 0)");
}

// CLI11 only reads config files attached to the root app. The root owns
// --config and this formatter files every top-level key under whichever
// subcommand was selected, so the file stays flat.
class SubcommandConfig : public CLI::ConfigTOML {
 public:
  explicit SubcommandConfig(const CLI::App& root) : root_(root) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::vector<CLI::ConfigItem> items = CLI::ConfigTOML::from_config(input);
    const auto subs = root_.get_subcommands();
    if (subs.empty()) return items;
    for (CLI::ConfigItem& item : items) {
      if (item.parents.empty() && !item.name.empty()) item.parents.push_back(subs.front()->get_name());
    }
    return items;
  }

 private:
  const CLI::App& root_;
};

void enable_config(CLI::App& root) {
  root.set_config("--config", "", "Flat key=value file mirroring the flags; flags take precedence");
  root.config_formatter(std::make_shared<SubcommandConfig>(root));
  root.allow_config_extras(CLI::config_extras_mode::error);
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("LANPAINT_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    throw ConfigError("LANPAINT_THREADS must be a positive integer");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

struct Cell {
  Method method;
  std::size_t steps;
  std::size_t inner;
  std::uint64_t seed;
};

std::vector<Cell> expand(const SweepOptions& o) {
  std::vector<Cell> cells;
  for (const std::string& name : o.methods) {
    const Method m = parse_method(name);
    for (std::size_t s : o.steps) {
      if (m == Method::replace) {
        for (std::uint64_t seed : o.seeds) cells.push_back({m, s, 0, seed});
        continue;
      }
      for (std::size_t n : o.inner)
        for (std::uint64_t seed : o.seeds) cells.push_back({m, s, n, seed});
    }
  }
  if (cells.empty()) throw ConfigError("empty sweep");
  return cells;
}

LanPaintConfig config_for(const SweepOptions& o, const Cell& c) {
  LanPaintConfig cfg;
  cfg.eta = o.eta;
  cfg.inner_steps = c.inner;
  cfg.gamma0 = o.gamma;
  cfg.alpha_noise = o.alpha;
  cfg.lambda = o.lambda;
  cfg.validate();
  return cfg;
}

void emit_csv(const SweepOptions& o, const std::vector<BenchmarkReport>& rows) {
  if (o.out.empty()) {
    write_report_csv(std::cout, rows);
    return;
  }
  std::ofstream f(o.out, std::ios::binary);
  if (!f) throw ConfigError("cannot open output file " + o.out);
  f.imbue(std::locale::classic());
  write_report_csv(f, rows);
}

void emit_kl_plot(const SweepOptions& o, const std::vector<BenchmarkReport>& rows,
                  const std::string& title) {
  if (o.plot.empty()) return;
  // Median KL over seeds for each (method, inner) curve.
  std::map<std::string, std::map<std::size_t, std::vector<double>>> curves;
  for (const BenchmarkReport& r : rows) {
    const std::string name =
        r.method == "replace" ? r.method : r.method + "-" + std::to_string(r.inner_steps);
    curves[name][r.outer_steps].push_back(r.kl);
  }
  SvgPlot plot(title, "outer diffusion steps", "KL divergence");
  plot.log_x().log_y().hline(0.01, "KL = 0.01");
  for (auto& [name, by_steps] : curves) {
    std::vector<double> xs, ys;
    for (auto& [steps, kls] : by_steps) {
      std::sort(kls.begin(), kls.end());
      xs.push_back(static_cast<double>(steps));
      ys.push_back(kls[kls.size() / 2]);
    }
    plot.add(name, xs, ys);
  }
  plot.save(o.plot);
}

void print_summary(const BenchmarkReport& r) {
  std::cerr << r.method << " steps=" << r.outer_steps << " inner=" << r.inner_steps
            << " seed=" << r.seed << " kl=" << format_double(r.kl);
  if (!std::isnan(r.trap_frac)) std::cerr << " trap=" << format_double(r.trap_frac);
  std::cerr << '\n';
}

void finalize(BenchmarkReport& r, bool timing) {
  if (!std::isfinite(r.kl)) throw DegenerateSamples("KL divergence is not finite");
  if (!timing) r.wall_time_s = 0.0;
  print_summary(r);
}

int bench_gaussian(const SweepOptions& o, const GaussianOptions& g) {
  CondGaussianBench bench = CondGaussianBench::standard(g.rho, g.y);
  bench.n_samples = o.samples;
  const std::size_t threads = resolve_threads(o.threads);
  std::vector<BenchmarkReport> rows;
  for (const Cell& c : expand(o)) {
    bench.outer_steps = c.steps;
    BenchmarkReport r = run_gaussian_bench(bench, c.method, config_for(o, c), {c.seed, threads, false});
    finalize(r, o.timing);
    rows.push_back(std::move(r));
  }
  emit_csv(o, rows);
  emit_kl_plot(o, rows, "Conditional Gaussian");
  return kOk;
}

std::string derive_scatter_path(const SweepOptions& o, const GmmOptions& g) {
  if (!g.scatter.empty()) return g.scatter;
  const std::string& base = !o.plot.empty() ? o.plot : o.out;
  if (base.empty()) return "gmm_slice.svg";
  const auto dot = base.find_last_of('.');
  const auto slash = base.find_last_of('/');
  const std::string stem =
      (dot != std::string::npos && (slash == std::string::npos || dot > slash)) ? base.substr(0, dot)
                                                                                 : base;
  return stem + "_slice.svg";
}

int bench_gmm(const SweepOptions& o, const GmmOptions& g) {
  GmmBench bench;
  bench.target = g.gmm_file.empty() ? make_benchmark_gmm(500, 0.05, g.gmm_seed)
                                    : load_gmm_file(g.gmm_file);
  if (bench.target.dim() != 2) throw ConfigError("mixture file must describe a 2-D mixture");
  bench.bins = HistogramSpec::bounding_box(bench.target);
  bench.slice_y = g.slice_y;
  bench.n_samples = o.samples;
  if (!bench.slice_y && bench.n_samples < 10000) {
    throw ConfigError("the histogram KL needs --samples >= 10000");
  }
  const std::size_t threads = resolve_threads(o.threads);
  HistogramReference ref;
  if (bench.slice_y) {
    ref.spec = bench.bins;
  } else {
    ref = make_histogram_reference(bench.target, bench.bins);
  }

  std::vector<BenchmarkReport> rows;
  SvgPlot scatter("Samples at y = " + (g.slice_y ? format_double(*g.slice_y) : std::string()),
                  "x", "y");
  if (bench.slice_y) {
    RandomSource rng(g.gmm_seed, 7);
    std::vector<double> xs, ys;
    for (int i = 0; i < 4000; ++i) {
      const State z = sample_gmm(bench.target, rng);
      xs.push_back(z[0]);
      ys.push_back(z[1]);
    }
    scatter.add("target", xs, ys, SvgPlot::Style::points);
  }
  for (const Cell& c : expand(o)) {
    bench.outer_steps = c.steps;
    BenchmarkReport r = run_gmm_bench(bench, ref, c.method, config_for(o, c),
                                      {c.seed, threads, bench.slice_y.has_value()});
    if (bench.slice_y) {
      std::vector<double> xs, ys;
      for (std::size_t i = 0; i < r.samples.size() && i < 2000; ++i) {
        xs.push_back(r.samples[i][0]);
        ys.push_back(r.samples[i][1]);
      }
      const std::string name =
          c.method == Method::replace ? r.method : r.method + "-" + std::to_string(c.inner);
      scatter.add(name, xs, ys, SvgPlot::Style::points);
      r.samples.clear();
    }
    finalize(r, o.timing);
    rows.push_back(std::move(r));
  }
  emit_csv(o, rows);
  emit_kl_plot(o, rows, "Gaussian mixture");
  if (bench.slice_y) scatter.save(derive_scatter_path(o, g));
  return kOk;
}

int score_ratio(const RatioOptions& o) {
  if (o.points < 2) throw ConfigError("the ratio grid needs at least two points");
  if (!(o.abar_min > 0.0 && o.abar_min < o.abar_max && o.abar_max < 1.0)) {
    throw ConfigError("need 0 < abar-min < abar-max < 1");
  }
  if (!(o.lambda > -1.0)) throw ConfigError("lambda must exceed -1");
  const CondGaussianBench b = CondGaussianBench::standard();
  std::vector<double> ts;
  const double lo = std::log(1.0 - o.abar_max);
  const double hi = std::log(1.0 - o.abar_min);
  for (std::size_t k = 0; k < o.points; ++k) {
    const double v = std::exp(hi + (lo - hi) * static_cast<double>(k) / static_cast<double>(o.points - 1));
    ts.push_back(-std::log1p(-v));
  }
  const auto curve = score_ratio_curve(b.joint, b.mask, b.y_obs, ts, o.lambda, o.draws, o.seed);
  const double slope = loglog_slope(curve);
  if (!std::isfinite(slope)) throw DegenerateSamples("slope is not finite");

  auto write = [&](std::ostream& out) {
    out << "t,alpha_bar,one_minus_alpha_bar,ratio\n";
    for (const RatioPoint& p : curve) {
      out << format_double(p.t) << ',' << format_double(p.alpha_bar) << ','
          << format_double(-std::expm1(-p.t)) << ',' << format_double(p.ratio) << '\n';
    }
  };
  if (o.out.empty()) {
    write(std::cout);
  } else {
    std::ofstream f(o.out, std::ios::binary);
    if (!f) throw ConfigError("cannot open output file " + o.out);
    write(f);
  }
  std::cerr << "slope=" << format_double(slope) << '\n';
  if (!o.out.empty()) std::cout << "slope=" << format_double(slope) << '\n';
  if (!o.plot.empty()) {
    std::vector<double> xs, ys, ref;
    for (const RatioPoint& p : curve) {
      xs.push_back(-std::expm1(-p.t));
      ys.push_back(p.ratio);
      ref.push_back(curve.front().ratio * std::sqrt(xs.back() / -std::expm1(-curve.front().t)));
    }
    SvgPlot plot("Observed-score deviation ratio", "1 - alpha_bar", "ratio");
    plot.log_x().log_y().add("ratio (slope " + format_double(std::round(slope * 1000) / 1000) + ")", xs, ys);
    plot.add("sqrt(1 - alpha_bar) reference", xs, ref);
    plot.save(o.plot);
  }
  return kOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"LanPaint conditional sampling benchmarks"};
  app.require_subcommand(1);

  SweepOptions gauss_sweep, gmm_sweep;
  GaussianOptions gauss;
  GmmOptions gmm;
  RatioOptions ratio;

  CLI::App* g = app.add_subcommand("bench-gaussian", "Conditional Gaussian benchmark");
  add_sweep_options(*g, gauss_sweep, 50000);
  g->add_option("--rho", gauss.rho, "Correlation of the 2-D joint")->check(CLI::Range(-0.999999, 0.999999))->capture_default_str();
  g->add_option("--y", gauss.y, "Observed value")->capture_default_str();
  g->fallthrough();

  CLI::App* m = app.add_subcommand("bench-gmm", "Gaussian mixture benchmark");
  add_sweep_options(*m, gmm_sweep, 20000);
  m->add_option("--slice-y", gmm.slice_y, "Condition every sample on this y (slice diagnostic)");
  m->add_option("--gmm-file", gmm.gmm_file, "Mixture definition file")->check(CLI::ExistingFile);
  m->add_option("--gmm-seed", gmm.gmm_seed, "Seed of the built-in mixture generator")->capture_default_str();
  m->add_option("--scatter", gmm.scatter, "Scatter SVG path for --slice-y mode");
  m->fallthrough();

  CLI::App* r = app.add_subcommand("score-ratio", "Observed-score deviation ratio curve");
  r->add_option("--lambda", ratio.lambda, "Guidance scale")->capture_default_str();
  r->add_option("--samples", ratio.draws, "Draws per noise level")->check(CLI::PositiveNumber)->capture_default_str();
  r->add_option("--seed", ratio.seed, "Seed")->capture_default_str();
  r->add_option("--points", ratio.points, "Number of noise levels")->capture_default_str();
  r->add_option("--abar-min", ratio.abar_min, "Smallest alpha_bar")->capture_default_str();
  r->add_option("--abar-max", ratio.abar_max, "Largest alpha_bar")->capture_default_str();
  r->add_option("--out", ratio.out, "CSV output path (default: stdout)");
  r->add_option("--plot", ratio.plot, "Log-log SVG plot");
  r->fallthrough();

  enable_config(app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (g->parsed()) return bench_gaussian(gauss_sweep, gauss);
    if (m->parsed()) return bench_gmm(gmm_sweep, gmm);
    return score_ratio(ratio);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidRange& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kNumericalError;
  }
}

int run(const std::vector<std::string>& args) {
  std::vector<std::string> copy = args;
  std::vector<char*> argv;
  for (std::string& s : copy) argv.push_back(s.data());
  argv.push_back(nullptr);
  return run(static_cast<int>(copy.size()), argv.data());
}

}  // namespace lanpaint::cli
