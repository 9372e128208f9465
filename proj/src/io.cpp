#include "svl/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace svl {

namespace fs = std::filesystem;

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\"");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool parse_number(const std::string& field, double& value) {
  if (field.empty()) return false;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  return ec == std::errc() && ptr == end;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  return out;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& value) {
  std::vector<T> out;
  for (const std::string& item : split(value, ',')) {
    if (item.empty()) continue;
    double v = 0.0;
    if (!parse_number(item, v)) throw InputError("grid spec: bad number '" + item + "' in " + key);
    if constexpr (std::is_integral_v<T>) {
      if (v < 0.0 || v != std::floor(v)) {
        throw InputError("grid spec: " + key + " needs non-negative integers");
      }
    }
    out.push_back(static_cast<T>(v));
  }
  return out;
}

}  // namespace

std::string format_double(double x) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

LoadedReturns parse_returns_csv(const std::string& text, const CsvColumn& column, bool price_mode,
                                const std::string& source) {
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  std::size_t col = column.index;
  bool first = true;
  std::vector<double> values;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (first) {
      first = false;
      if (!column.name.empty()) {
        const auto it = std::find(fields.begin(), fields.end(), column.name);
        if (it == fields.end()) {
          throw InputError(source + ": no column named '" + column.name + "' in the header");
        }
        col = static_cast<std::size_t>(it - fields.begin());
        continue;
      }
      double probe = 0.0;
      if (col < fields.size() && !parse_number(fields[col], probe)) continue;  // header
    }
    if (col >= fields.size()) {
      throw InputError(source + ": row " + std::to_string(row) + " has no column " +
                       std::to_string(col + 1));
    }
    double v = 0.0;
    if (!parse_number(fields[col], v)) {
      throw InputError(source + ": row " + std::to_string(row) + ", column " +
                       std::to_string(col + 1) + ": not a number: '" + fields[col] + "'");
    }
    if (!std::isfinite(v)) {
      throw InputError(source + ": row " + std::to_string(row) + ", column " +
                       std::to_string(col + 1) + ": non-finite value");
    }
    values.push_back(v);
  }

  LoadedReturns out;
  out.series.label = source;
  if (price_mode) {
    if (values.size() < 3) throw InputError(source + ": price mode needs at least 3 prices");
    for (const double p : values) {
      if (!(p > 0.0)) throw InputError(source + ": prices must be positive");
    }
    std::vector<double> r(values.size() - 1);
    for (std::size_t t = 1; t < values.size(); ++t) r[t - 1] = std::log(values[t] / values[t - 1]);
    double mean = 0.0;
    for (const double v : r) mean += v;
    mean /= static_cast<double>(r.size());
    for (double& v : r) v -= mean;
    out.series.y = std::move(r);
  } else {
    out.series.y = std::move(values);
  }
  out.series.validate();
  out.degenerate = std::any_of(out.series.y.begin(), out.series.y.end(),
                               [](double v) { return v == 0.0; });
  return out;
}

LoadedReturns read_returns_csv(const fs::path& path, const CsvColumn& column, bool price_mode) {
  return parse_returns_csv(read_file(path), column, price_mode, path.string());
}

void write_column_csv(const fs::path& path, const std::string& header,
                      const std::vector<double>& values) {
  std::ofstream out = open_out(path);
  out << header << '\n';
  for (const double v : values) out << format_double(v) << '\n';
  if (!out) throw InputError("write failed: " + path.string());
}

void write_draws_csv(const fs::path& path, const std::vector<Draw>& draws) {
  std::ofstream out = open_out(path);
  out << "phi,rho,sigma,mu\n";
  for (const Draw& d : draws) {
    out << format_double(d[0]) << ',' << format_double(d[1]) << ',' << format_double(d[2]) << ','
        << format_double(d[3]) << '\n';
  }
  if (!out) throw InputError("write failed: " + path.string());
}

std::vector<Draw> read_draws_csv(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::vector<Draw> draws;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split(line, ',');
    if (row == 1 && fields.size() >= 1 && fields[0] == "phi") continue;
    if (fields.size() != 4) {
      throw InputError(path.string() + ": row " + std::to_string(row) + " needs 4 columns");
    }
    Draw d;
    for (std::size_t k = 0; k < 4; ++k) {
      if (!parse_number(fields[k], d[k])) {
        throw InputError(path.string() + ": row " + std::to_string(row) + ", column " +
                         std::to_string(k + 1) + ": not a number");
      }
    }
    draws.push_back(d);
  }
  return draws;
}

nlohmann::json to_json(const PosteriorSummary& s) {
  return {{"mean", s.mean}, {"sd", s.sd}, {"q025", s.q025}, {"q50", s.q50}, {"q975", s.q975}};
}

namespace {

// JSON has no NaN; failed estimates become null.
nlohmann::json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json to_json(const EfficiencyReport& r) {
  nlohmann::json params = nlohmann::json::object();
  for (const ParameterEfficiency& p : r.parameters) {
    nlohmann::json j = to_json(p.summary);
    j["ess"] = number_or_null(p.ess);
    j["if"] = number_or_null(p.inefficiency);
    j["esr"] = number_or_null(p.esr);
    j["acf"] = p.acf;
    if (!p.ok()) j["error"] = p.error;
    params[p.name] = std::move(j);
  }
  return {{"n_draws", r.n_draws},
          {"seconds", r.seconds},
          {"min_esr", number_or_null(r.min_esr)},
          {"parameters", std::move(params)}};
}

nlohmann::json to_json(const PriorConfig& p) {
  return {{"a_phi", p.a_phi},         {"b_phi", p.b_phi},           {"a_rho", p.a_rho},
          {"b_rho", p.b_rho},         {"alpha_sigma", p.alpha_sigma}, {"beta_sigma", p.beta_sigma},
          {"mu_mu", p.mu_mu},         {"sigma2_mu", p.sigma2_mu}};
}

nlohmann::json to_json(const SamplerConfig& c) {
  return {{"sampler", std::string(algorithm_name(c.algorithm))},
          {"asis_repeats", c.asis_repeats},
          {"rw_variance", c.rw_variance},
          {"draws", c.n_draws},
          {"burnin", c.n_burnin},
          {"thin", c.thin},
          {"seed", c.seed},
          {"offset", c.offset},
          {"h_checkpoints", c.h_checkpoints}};
}

nlohmann::json fit_report(const ChainOutput& out, const EfficiencyReport& eff, bool degenerate) {
  nlohmann::json j = to_json(eff);
  j["sampling_seconds"] = out.sampling_seconds;
  j["burnin_seconds"] = out.burnin_seconds;
  j["length"] = out.length;
  j["degenerate_data"] = degenerate;
  j["config"] = to_json(out.config);
  j["prior"] = to_json(out.prior);
  const auto rate = [](const MoveStats& m) {
    return nlohmann::json{{"proposed", m.proposed}, {"accepted", m.accepted}, {"rate", m.rate()}};
  };
  j["acceptance"] = {{"latent", rate(out.moves.latent)},
                     {"theta_centered", rate(out.moves.theta_centered)},
                     {"theta_noncentered", rate(out.moves.theta_noncentered)},
                     {"aux_theta", rate(out.moves.aux_theta)}};
  j["flags"] = {{"smoother_breakdown", out.flags.smoother_breakdown},
                {"filter_breakdown", out.flags.filter_breakdown},
                {"hessian_fallback", out.flags.hessian_fallback},
                {"optimizer_failure", out.flags.optimizer_failure}};
  if (out.config.algorithm == Algorithm::Aux) {
    j["aux_timings"] = {{"indicators", out.aux_timings.indicators},
                        {"parameters", out.aux_timings.parameters},
                        {"mu", out.aux_timings.mu},
                        {"latent", out.aux_timings.latent}};
  }
  nlohmann::json windows = nlohmann::json::array();
  for (const WindowStats& w : out.windows) {
    windows.push_back({{"first_sweep", w.first_sweep},
                       {"sweeps", w.sweeps},
                       {"latent_rate", w.latent_rate},
                       {"theta_rate", w.theta_rate}});
  }
  j["windows"] = std::move(windows);
  return j;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
  if (!out) throw InputError("write failed: " + path.string());
}

void GridSpec::validate() const {
  if (phi_values.empty() || rho_values.empty() || sigma_values.empty() || T_values.empty() ||
      samplers.empty()) {
    throw InputError("grid spec: phi, rho, sigma, T and samplers must be non-empty");
  }
  for (const double phi : phi_values) {
    for (const double rho : rho_values) {
      for (const double sigma : sigma_values) {
        if (!Params{phi, rho, sigma, mu}.valid()) {
          throw InputError("grid spec: invalid parameter combination phi=" + format_double(phi) +
                           " rho=" + format_double(rho) + " sigma=" + format_double(sigma));
        }
      }
    }
  }
  for (const std::size_t t : T_values) {
    if (t < 2) throw InputError("grid spec: T must be at least 2");
  }
  if (replications < 1) throw InputError("grid spec: replications must be at least 1");
  if (draws < 10) throw InputError("grid spec: draws must be at least 10");
  if (asis_repeats < 1) throw InputError("grid spec: asis_repeats must be at least 1");
}

GridSpec parse_grid_spec(const std::string& text) {
  GridSpec g;
  std::istringstream in(text);
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InputError("grid spec line " + std::to_string(row) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto scalar = [&]() {
      const auto v = parse_list<double>(key, value);
      if (v.size() != 1) throw InputError("grid spec: " + key + " takes a single value");
      return v.front();
    };
    const auto count = [&]() {
      const auto v = parse_list<std::size_t>(key, value);
      if (v.size() != 1) throw InputError("grid spec: " + key + " takes a single value");
      return v.front();
    };
    if (key == "phi") {
      g.phi_values = parse_list<double>(key, value);
    } else if (key == "rho") {
      g.rho_values = parse_list<double>(key, value);
    } else if (key == "sigma") {
      g.sigma_values = parse_list<double>(key, value);
    } else if (key == "mu") {
      g.mu = scalar();
    } else if (key == "T") {
      g.T_values = parse_list<std::size_t>(key, value);
    } else if (key == "replications") {
      g.replications = count();
    } else if (key == "samplers") {
      g.samplers.clear();
      for (const std::string& s : split(value, ',')) {
        if (!s.empty()) g.samplers.push_back(parse_algorithm(s));
      }
    } else if (key == "seed") {
      g.seed = count();
    } else if (key == "draws") {
      g.draws = count();
    } else if (key == "burnin") {
      g.burnin = count();
    } else if (key == "asis_repeats") {
      g.asis_repeats = static_cast<int>(count());
    } else {
      throw InputError("grid spec line " + std::to_string(row) + ": unknown key '" + key + "'");
    }
  }
  g.validate();
  return g;
}

GridSpec read_grid_spec(const fs::path& path) { return parse_grid_spec(read_file(path)); }

std::uint64_t data_seed(std::uint64_t base, const GridPoint& g, std::size_t replication) {
  std::uint64_t s = mix_seed(base, hash_double(g.phi));
  s = mix_seed(s, hash_double(g.rho));
  s = mix_seed(s, hash_double(g.sigma));
  s = mix_seed(s, hash_double(g.mu));
  s = mix_seed(s, g.length);
  return mix_seed(s, replication);
}

std::string grid_file_stem(const GridPoint& g, std::size_t replication) {
  return "sim_phi" + format_double(g.phi) + "_rho" + format_double(g.rho) + "_sigma" +
         format_double(g.sigma) + "_mu" + format_double(g.mu) + "_T" + std::to_string(g.length) +
         "_rep" + std::to_string(replication);
}

fs::path latent_sidecar(const fs::path& path) {
  fs::path out = path;
  out.replace_extension(".latent.csv");
  return out;
}

void write_simulation(const fs::path& path, const SimulatedData& data) {
  write_column_csv(path, "y", data.returns.y);
  write_column_csv(latent_sidecar(path), "h", data.latent.values);
}

}  // namespace svl
