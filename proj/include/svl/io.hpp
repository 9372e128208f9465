#ifndef SVL_IO_HPP_
#define SVL_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "svl/diagnostics.hpp"
#include "svl/model.hpp"
#include "svl/samplers.hpp"

namespace svl {

struct CsvColumn {
  std::string name;   // used when non-empty
  std::size_t index = 0;
};

struct LoadedReturns {
  ReturnSeries series;
  bool degenerate = false;  // at least one exact zero return
};

/// Reads one numeric column; a non-numeric first row is taken as a header.
/// In price mode the column holds prices and the result is the de-meaned log
/// returns. Throws InputError with the row and column of any bad field.
LoadedReturns read_returns_csv(const std::filesystem::path& path, const CsvColumn& column = {},
                               bool price_mode = false);
LoadedReturns parse_returns_csv(const std::string& text, const CsvColumn& column = {},
                                bool price_mode = false, const std::string& source = "<input>");

/// Shortest round-trip decimal form.
std::string format_double(double x);

void write_column_csv(const std::filesystem::path& path, const std::string& header,
                      const std::vector<double>& values);
void write_draws_csv(const std::filesystem::path& path, const std::vector<Draw>& draws);
std::vector<Draw> read_draws_csv(const std::filesystem::path& path);

nlohmann::json to_json(const PosteriorSummary& s);
nlohmann::json to_json(const EfficiencyReport& r);
nlohmann::json to_json(const PriorConfig& p);
nlohmann::json to_json(const SamplerConfig& c);
/// Full fit report: efficiency, summaries, acceptance, flags, timings and
/// the configuration echo.
nlohmann::json fit_report(const ChainOutput& out, const EfficiencyReport& eff, bool degenerate);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

struct GridSpec {
  std::vector<double> phi_values;
  std::vector<double> rho_values;
  std::vector<double> sigma_values;
  double mu = -9.0;
  std::vector<std::size_t> T_values;
  std::size_t replications = 1;
  std::vector<Algorithm> samplers;
  std::uint64_t seed = 1;
  std::size_t draws = 10000;
  std::size_t burnin = 0;  // 0: default for the series length
  int asis_repeats = 5;

  void validate() const;
};

/// Flat `key = value` text; lists are comma separated and `#` starts a
/// comment. Keys: phi, rho, sigma, mu, T, replications, samplers, seed,
/// draws, burnin, asis_repeats.
GridSpec parse_grid_spec(const std::string& text);
GridSpec read_grid_spec(const std::filesystem::path& path);

struct GridPoint {
  double phi = 0.0;
  double rho = 0.0;
  double sigma = 0.0;
  double mu = 0.0;
  std::size_t length = 0;
};

/// Seed of the simulated data set for one grid point and replication.
std::uint64_t data_seed(std::uint64_t base, const GridPoint& g, std::size_t replication);

/// File stem encoding the grid coordinates, e.g.
/// sim_phi0.95_rho-0.3_sigma0.3_mu-9_T300_rep0.
std::string grid_file_stem(const GridPoint& g, std::size_t replication);

/// Writes `<path>` with the returns and `<stem>.latent.csv` with the true h.
void write_simulation(const std::filesystem::path& path, const SimulatedData& data);
std::filesystem::path latent_sidecar(const std::filesystem::path& path);

}  // namespace svl

#endif  // SVL_IO_HPP_
