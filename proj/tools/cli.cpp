#include "cli.hpp"

#include <CLI11.hpp>
#include <atomic>
#include <csignal>
#include <cmath>
#include <filesystem>
#include <optional>

#include "svl/benchmark.hpp"
#include "svl/diagnostics.hpp"
#include "svl/io.hpp"
#include "svl/kalman.hpp"
#include "svl/samplers.hpp"

namespace svl::cli {

namespace fs = std::filesystem;

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_sigint(int) { g_stop.store(true); }

struct PriorFlags {
  std::vector<double> phi, rho, sigma, mu;

  void add(CLI::App* app) {
    app->add_option("--prior-phi", phi, "Beta(A, B) prior on (phi + 1) / 2")->expected(2);
    app->add_option("--prior-rho", rho, "Beta(A, B) prior on (rho + 1) / 2")->expected(2);
    app->add_option("--prior-sigma", sigma, "Gamma(shape A, rate B) prior on sigma^2")->expected(2);
    app->add_option("--prior-mu", mu, "Normal(M, V) prior on mu")->expected(2);
  }

  PriorConfig build() const {
    PriorConfig p;
    if (!phi.empty()) p.a_phi = phi[0], p.b_phi = phi[1];
    if (!rho.empty()) p.a_rho = rho[0], p.b_rho = rho[1];
    if (!sigma.empty()) p.alpha_sigma = sigma[0], p.beta_sigma = sigma[1];
    if (!mu.empty()) p.mu_mu = mu[0], p.sigma2_mu = mu[1];
    p.validate();
    return p;
  }
};

std::array<double, 4> rw_variance(const std::vector<double>& v) {
  if (v.empty()) return {0.1, 0.1, 0.1, 0.1};
  if (v.size() == 1) return {v[0], v[0], v[0], v[0]};
  if (v.size() == 4) return {v[0], v[1], v[2], v[3]};
  throw InputError("--rw-var takes 1 or 4 values");
}

struct Options {
  // simulate
  std::string out;
  std::string data;
  std::size_t length = 300;
  double phi = 0.95, rho = -0.3, sigma = 0.3, mu = -9.0;
  std::uint64_t seed = 1;
  // fit
  std::string sampler = "rwmh-asis";
  int asis_repeats = 5;
  std::size_t draws = 10000;
  std::optional<std::size_t> burnin;
  std::size_t thin = 1;
  std::vector<double> rw_var;
  bool price_mode = false;
  std::string column;
  std::vector<std::size_t> h_checkpoints;
  // benchmark
  std::size_t jobs = 1;
  std::optional<std::size_t> bench_draws;
  // report
  double seconds = 0.0;
  PriorFlags prior;
};

int cmd_simulate(const Options& o, std::ostream& out) {
  if (o.out.empty()) throw InputError("simulate needs --out");
  if (!o.data.empty()) {
    const GridSpec spec = read_grid_spec(o.data);
    std::size_t files = 0;
    for (const std::size_t T : spec.T_values) {
      for (const double phi : spec.phi_values) {
        for (const double rho : spec.rho_values) {
          for (const double sigma : spec.sigma_values) {
            const GridPoint g{phi, rho, sigma, spec.mu, T};
            for (std::size_t r = 0; r < spec.replications; ++r) {
              const SimulatedData d =
                  simulate_svl(DgpSpec{{phi, rho, sigma, spec.mu}, T, data_seed(spec.seed, g, r)});
              write_simulation(fs::path(o.out) / (grid_file_stem(g, r) + ".csv"), d);
              ++files;
            }
          }
        }
      }
    }
    out << "wrote " << files << " data sets to " << o.out << '\n';
    return kExitOk;
  }
  const DgpSpec spec{{o.phi, o.rho, o.sigma, o.mu}, o.length, o.seed};
  write_simulation(o.out, simulate_svl(spec));
  out << "wrote " << o.length << " returns to " << o.out << '\n';
  return kExitOk;
}

CsvColumn parse_column(const std::string& c) {
  CsvColumn col;
  if (c.empty()) return col;
  if (std::all_of(c.begin(), c.end(), [](char ch) { return std::isdigit(ch); })) {
    const std::size_t k = std::stoul(c);
    if (k < 1) throw InputError("--column numbers start at 1");
    col.index = k - 1;
  } else {
    col.name = c;
  }
  return col;
}

int cmd_fit(const Options& o, std::ostream& out) {
  if (o.data.empty()) throw InputError("fit needs --data");
  if (o.out.empty()) throw InputError("fit needs --out");
  const LoadedReturns data = read_returns_csv(o.data, parse_column(o.column), o.price_mode);
  const PriorConfig prior = o.prior.build();
  SamplerConfig cfg;
  cfg.algorithm = parse_algorithm(o.sampler);
  cfg.asis_repeats = o.asis_repeats;
  cfg.rw_variance = rw_variance(o.rw_var);
  cfg.n_draws = o.draws;
  cfg.n_burnin = o.burnin ? *o.burnin : default_burnin(data.series.size());
  cfg.thin = o.thin;
  cfg.seed = o.seed;
  cfg.h_checkpoints = o.h_checkpoints;

  const ChainOutput chain = run_chain(data.series, prior, cfg);
  const std::uint64_t broken = chain.flags.smoother_breakdown + chain.flags.filter_breakdown;
  if (broken >= cfg.n_draws) {
    throw NumericalBreakdown("every sampling sweep hit a numerical breakdown");
  }
  const EfficiencyReport eff = efficiency_report(chain);
  const fs::path dir(o.out);
  write_draws_csv(dir / "draws.csv", chain.draws);
  if (!chain.h_draws.empty()) {
    std::ofstream h(dir / "h_draws.csv", std::ios::binary);
    for (std::size_t j = 0; j < chain.h_checkpoints.size(); ++j) {
      h << (j ? "," : "") << "h" << chain.h_checkpoints[j];
    }
    h << '\n';
    for (const auto& row : chain.h_draws) {
      for (std::size_t j = 0; j < row.size(); ++j) h << (j ? "," : "") << format_double(row[j]);
      h << '\n';
    }
  }
  write_json(dir / "report.json", fit_report(chain, eff, data.degenerate));

  out << algorithm_name(cfg.algorithm) << ": " << chain.draws.size() << " draws in "
      << chain.sampling_seconds << " s\n";
  for (const ParameterEfficiency& p : eff.parameters) {
    out << "  " << p.name << "  mean " << p.summary.mean << "  sd " << p.summary.sd << "  IF "
        << p.inefficiency << "  ESR " << p.esr << '\n';
  }
  out << "  min ESR " << eff.min_esr << '\n';
  if (data.degenerate) out << "  warning: zero returns present (offset guard in use)\n";
  return kExitOk;
}

int cmd_benchmark(const Options& o, std::ostream& out) {
  if (o.data.empty()) throw InputError("benchmark needs --data (grid spec)");
  if (o.out.empty()) throw InputError("benchmark needs --out");
  GridSpec spec = read_grid_spec(o.data);
  if (o.bench_draws) spec.draws = *o.bench_draws;
  if (o.burnin) spec.burnin = *o.burnin;
  spec.validate();
  BenchmarkOptions opt;
  opt.jobs = std::max<std::size_t>(1, o.jobs);
  opt.out_dir = o.out;
  opt.prior = o.prior.build();
  opt.rw_variance = rw_variance(o.rw_var);
  opt.stop = &g_stop;
  g_stop.store(false);
  auto previous = std::signal(SIGINT, on_sigint);
  const std::vector<RunRecord> records = run_benchmark(spec, opt);
  std::signal(SIGINT, previous);
  std::size_t failed = 0;
  for (const RunRecord& r : records) failed += r.error.empty() ? 0 : 1;
  out << records.size() << " cells written to " << (fs::path(o.out) / "runs.csv").string();
  if (failed) out << " (" << failed << " flagged)";
  if (g_stop.load()) out << " (interrupted)";
  out << '\n';
  return kExitOk;
}

int cmd_report(const Options& o, std::ostream& out) {
  if (o.data.empty()) throw InputError("report needs --data (draws CSV)");
  const std::vector<Draw> draws = read_draws_csv(o.data);
  if (draws.empty()) throw InputError("no draws in " + o.data);
  const nlohmann::json j = to_json(efficiency_report(draws, o.seconds));
  if (o.out.empty()) {
    out << j.dump(2) << '\n';
  } else {
    write_json(o.out, j);
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian estimation of stochastic volatility with leverage"};
  app.require_subcommand(1);
  Options o;

  auto* sim = app.add_subcommand("simulate", "Simulate returns from the SVL model");
  sim->add_option("--out", o.out, "Output CSV (or directory with --data)");
  sim->add_option("--data,--grid", o.data, "Grid spec; writes one file per grid cell");
  sim->add_option("-T,--length", o.length, "Series length");
  sim->add_option("--phi", o.phi);
  sim->add_option("--rho", o.rho);
  sim->add_option("--sigma", o.sigma);
  sim->add_option("--mu", o.mu);
  sim->add_option("--seed", o.seed);

  auto* fit = app.add_subcommand("fit", "Fit the SVL model to a return series");
  fit->add_option("--data", o.data, "CSV with one numeric column")->required();
  fit->add_option("--out", o.out, "Output directory")->required();
  fit->add_option("--sampler", o.sampler)
      ->check(CLI::IsMember({"aux", "rwmh-c", "rwmh-n", "rwmh-asis"}));
  fit->add_option("--asis-repeats", o.asis_repeats);
  fit->add_option("--draws", o.draws);
  fit->add_option("--burnin", o.burnin);
  fit->add_option("--thin", o.thin);
  fit->add_option("--seed", o.seed);
  fit->add_option("--rw-var", o.rw_var, "Random-walk variance (1 or 4 values)")->expected(1, 4);
  fit->add_flag("--price-mode", o.price_mode, "Column holds prices; use de-meaned log returns");
  fit->add_option("--column", o.column, "Column name or 1-based index");
  fit->add_option("--h-at", o.h_checkpoints, "0-based time points whose h draws are stored");
  o.prior.add(fit);

  auto* bench = app.add_subcommand("benchmark", "Run a DGP grid study");
  bench->add_option("--data,--grid", o.data, "Grid spec file")->required();
  bench->add_option("--out", o.out, "Output directory")->required();
  bench->add_option("--jobs", o.jobs);
  bench->add_option("--draws", o.bench_draws);
  bench->add_option("--burnin", o.burnin);
  bench->add_option("--rw-var", o.rw_var)->expected(1, 4);
  o.prior.add(bench);

  auto* rep = app.add_subcommand("report", "Efficiency report from a draws CSV");
  rep->add_option("--data", o.data, "Draws CSV")->required();
  rep->add_option("--seconds", o.seconds, "Sampling seconds for the ESR");
  rep->add_option("--out", o.out, "Output JSON (default stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }

  return guarded(
      [&] {
        if (sim->parsed()) return cmd_simulate(o, out);
        if (fit->parsed()) return cmd_fit(o, out);
        if (bench->parsed()) return cmd_benchmark(o, out);
        return cmd_report(o, out);
      },
      err);
}

int guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const NumericalBreakdown& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const fs::filesystem_error& e) {
    err << "input error: " << e.what() << '\n';
    return kExitInput;
  }
}

}  // namespace svl::cli
