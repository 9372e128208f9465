#include "svl/benchmark.hpp"

#include <cmath>
#include <limits>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace svl {

namespace {

struct Cell {
  GridPoint point;
  std::size_t replication;
  Algorithm sampler;
};

std::vector<Cell> enumerate_cells(const GridSpec& spec) {
  std::vector<Cell> cells;
  for (const std::size_t T : spec.T_values) {
    for (const double phi : spec.phi_values) {
      for (const double rho : spec.rho_values) {
        for (const double sigma : spec.sigma_values) {
          for (std::size_t r = 0; r < spec.replications; ++r) {
            for (const Algorithm a : spec.samplers) {
              cells.push_back({{phi, rho, sigma, spec.mu, T}, r, a});
            }
          }
        }
      }
    }
  }
  return cells;
}

}  // namespace

std::uint64_t cell_seed(std::uint64_t base, const GridPoint& g, std::size_t replication,
                        Algorithm sampler) {
  return mix_seed(data_seed(base, g, replication), hash_string(algorithm_name(sampler)));
}

std::string run_record_header() {
  std::ostringstream h;
  h << "phi_true,rho_true,sigma_true,mu_true,T,replication,sampler,seed,data_seed";
  for (const char* p : kParamNames) {
    h << ',' << p << "_mean," << p << "_sd," << p << "_q025," << p << "_q50," << p << "_q975,"
      << p << "_if," << p << "_ess," << p << "_esr";
  }
  h << ",min_esr,latent_rate,theta_rate,smoother_breakdown,filter_breakdown,hessian_fallback,"
       "optimizer_failure,sampling_seconds,burnin_seconds,draws,burnin,asis_repeats,error";
  return h.str();
}

std::string to_csv_row(const RunRecord& r) {
  const auto f = [](double x) { return std::isfinite(x) ? format_double(x) : std::string("nan"); };
  std::ostringstream o;
  o << f(r.point.phi) << ',' << f(r.point.rho) << ',' << f(r.point.sigma) << ',' << f(r.point.mu)
    << ',' << r.point.length << ',' << r.replication << ',' << algorithm_name(r.sampler) << ','
    << r.seed << ',' << r.data_seed;
  for (std::size_t k = 0; k < 4; ++k) {
    const PosteriorSummary& s = r.summary[k];
    o << ',' << f(s.mean) << ',' << f(s.sd) << ',' << f(s.q025) << ',' << f(s.q50) << ','
      << f(s.q975) << ',' << f(r.inefficiency[k]) << ',' << f(r.ess[k]) << ',' << f(r.esr[k]);
  }
  std::string err = r.error;
  for (char& c : err) {
    if (c == ',' || c == '\n' || c == '"') c = ';';
  }
  o << ',' << f(r.min_esr) << ',' << f(r.latent_rate) << ',' << f(r.theta_rate) << ','
    << r.flags.smoother_breakdown << ',' << r.flags.filter_breakdown << ','
    << r.flags.hessian_fallback << ',' << r.flags.optimizer_failure << ','
    << f(r.sampling_seconds) << ',' << f(r.burnin_seconds) << ',' << r.draws << ',' << r.burnin
    << ',' << r.asis_repeats << ',' << err;
  return o.str();
}

RunRecord run_cell(const GridSpec& spec, const GridPoint& g, std::size_t replication,
                   Algorithm sampler, const BenchmarkOptions& opt) {
  RunRecord rec;
  rec.point = g;
  rec.replication = replication;
  rec.sampler = sampler;
  rec.seed = cell_seed(spec.seed, g, replication, sampler);
  rec.data_seed = data_seed(spec.seed, g, replication);
  rec.draws = spec.draws;
  rec.burnin = spec.burnin ? spec.burnin : default_burnin(g.length);
  rec.asis_repeats = spec.asis_repeats;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  rec.min_esr = rec.latent_rate = rec.theta_rate = nan;
  rec.inefficiency.fill(nan);
  rec.ess.fill(nan);
  rec.esr.fill(nan);
  try {
    const SimulatedData data =
        simulate_svl(DgpSpec{{g.phi, g.rho, g.sigma, g.mu}, g.length, rec.data_seed});
    SamplerConfig cfg;
    cfg.algorithm = sampler;
    cfg.asis_repeats = spec.asis_repeats;
    cfg.rw_variance = opt.rw_variance;
    cfg.n_draws = rec.draws;
    cfg.n_burnin = rec.burnin;
    cfg.seed = rec.seed;
    const ChainOutput out = run_chain(data.returns, opt.prior, cfg);
    const EfficiencyReport eff = efficiency_report(out);
    for (std::size_t k = 0; k < 4; ++k) {
      const ParameterEfficiency& p = eff.parameters[k];
      rec.summary[k] = p.summary;
      rec.inefficiency[k] = p.inefficiency;
      rec.ess[k] = p.ess;
      rec.esr[k] = p.esr;
      if (!p.ok()) rec.error += std::string(rec.error.empty() ? "" : "; ") + p.name + ": " + p.error;
    }
    rec.min_esr = eff.min_esr;
    rec.sampling_seconds = out.sampling_seconds;
    rec.burnin_seconds = out.burnin_seconds;
    rec.flags = out.flags;
    rec.latent_rate = out.moves.latent.rate();
    switch (sampler) {
      case Algorithm::Aux:
        rec.theta_rate = out.moves.aux_theta.rate();
        rec.latent_rate = nan;
        break;
      case Algorithm::RwmhCentered:
        rec.theta_rate = out.moves.theta_centered.rate();
        break;
      case Algorithm::RwmhNonCentered:
        rec.theta_rate = out.moves.theta_noncentered.rate();
        break;
      case Algorithm::RwmhAsis: {
        const auto& c = out.moves.theta_centered;
        const auto& n = out.moves.theta_noncentered;
        rec.theta_rate = MoveStats{c.proposed + n.proposed, c.accepted + n.accepted}.rate();
        break;
      }
    }
    if (!std::isfinite(rec.min_esr) && rec.error.empty()) rec.error = "min_esr not finite";
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  return rec;
}

std::vector<RunRecord> run_benchmark(const GridSpec& spec, const BenchmarkOptions& opt) {
  spec.validate();
  const std::vector<Cell> cells = enumerate_cells(spec);
  std::vector<RunRecord> records(cells.size());
  std::vector<bool> done(cells.size(), false);

  std::ofstream live;
  const std::filesystem::path csv = opt.out_dir.empty() ? "" : opt.out_dir / "runs.csv";
  if (!csv.empty()) {
    std::filesystem::create_directories(opt.out_dir);
    live.open(csv, std::ios::binary | std::ios::trunc);
    if (!live) throw InputError("cannot write " + csv.string());
    live << run_record_header() << '\n' << std::flush;
  }

  std::mutex mtx;
  std::size_t next = 0;
  const auto worker = [&]() {
    while (true) {
      std::size_t i = 0;
      {
        std::lock_guard lock(mtx);
        if (next >= cells.size() || (opt.stop && opt.stop->load())) return;
        i = next++;
      }
      RunRecord rec = run_cell(spec, cells[i].point, cells[i].replication, cells[i].sampler, opt);
      std::lock_guard lock(mtx);
      if (live.is_open()) live << to_csv_row(rec) << '\n' << std::flush;
      records[i] = std::move(rec);
      done[i] = true;
    }
  };
  const std::size_t jobs = std::max<std::size_t>(1, std::min(opt.jobs, cells.size()));
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  std::vector<RunRecord> finished;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (done[i]) finished.push_back(std::move(records[i]));
  }
  if (live.is_open()) {
    live.close();
    std::ofstream sorted(csv, std::ios::binary | std::ios::trunc);
    sorted << run_record_header() << '\n';
    for (const RunRecord& r : finished) sorted << to_csv_row(r) << '\n';
  }
  return finished;
}

}  // namespace svl
