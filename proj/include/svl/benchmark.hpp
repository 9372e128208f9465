#ifndef SVL_BENCHMARK_HPP_
#define SVL_BENCHMARK_HPP_

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "svl/diagnostics.hpp"
#include "svl/io.hpp"

namespace svl {

struct RunRecord {
  GridPoint point;
  std::size_t replication = 0;
  Algorithm sampler = Algorithm::Aux;
  std::uint64_t seed = 0;
  std::uint64_t data_seed = 0;
  std::array<PosteriorSummary, 4> summary{};
  std::array<double, 4> inefficiency{};
  std::array<double, 4> ess{};
  std::array<double, 4> esr{};
  double min_esr = 0.0;
  double latent_rate = 0.0;
  double theta_rate = 0.0;
  FlagCounts flags;
  std::string error;  // why the cell failed or why min_esr is not finite
  double sampling_seconds = 0.0;
  double burnin_seconds = 0.0;
  std::size_t draws = 0;
  std::size_t burnin = 0;
  int asis_repeats = 0;
};

/// Seed of one cell; independent of which other samplers are in the grid.
std::uint64_t cell_seed(std::uint64_t base, const GridPoint& g, std::size_t replication,
                        Algorithm sampler);

struct BenchmarkOptions {
  std::size_t jobs = 1;
  std::filesystem::path out_dir;  // empty: no files written
  PriorConfig prior;
  std::array<double, 4> rw_variance = {0.1, 0.1, 0.1, 0.1};
  const std::atomic<bool>* stop = nullptr;  // stops handing out new cells when set
};

std::string run_record_header();
std::string to_csv_row(const RunRecord& r);

/// Runs one cell; failures are recorded in the record, never thrown.
RunRecord run_cell(const GridSpec& spec, const GridPoint& g, std::size_t replication,
                   Algorithm sampler, const BenchmarkOptions& opt);

/// Every (grid point x replication x sampler) cell on a pool of `jobs`
/// threads. Rows are appended to <out_dir>/runs.csv as cells finish; at the
/// end the file is rewritten in grid order. Returns records in grid order.
std::vector<RunRecord> run_benchmark(const GridSpec& spec, const BenchmarkOptions& opt);

}  // namespace svl

#endif  // SVL_BENCHMARK_HPP_
