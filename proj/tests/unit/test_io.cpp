#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "svl/io.hpp"

using namespace svl;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "svl_test_io";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_CASE("returns csv: headers and columns") {
  CHECK(parse_returns_csv("0.1\n-0.2\n0.3\n").series.y == std::vector<double>{0.1, -0.2, 0.3});
  CHECK(parse_returns_csv("ret\n0.1\n-0.2\n").series.y == std::vector<double>{0.1, -0.2});
  const std::string two = "date,ret\n1,0.5\n2,-0.25\n\n3,1e-3\n";
  CHECK(parse_returns_csv(two, {"ret", 0}).series.y == std::vector<double>{0.5, -0.25, 1e-3});
  CHECK(parse_returns_csv(two, {"", 1}).series.y == std::vector<double>{0.5, -0.25, 1e-3});
  CHECK(parse_returns_csv("\"r\"\n 0.5 \n0.25\r\n").series.y == std::vector<double>{0.5, 0.25});
}

TEST_CASE("returns csv: errors name the row and column") {
  const auto message = [](const std::string& text, const CsvColumn& c = {}) {
    try {
      parse_returns_csv(text, c, false, "f.csv");
    } catch (const InputError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("y\n0.1\nabc\n").find("row 3, column 1") != std::string::npos);
  CHECK(message("a,b\n1,2\n3\n", {"", 1}).find("row 3") != std::string::npos);
  CHECK(message("y\n0.1\nnan\n").find("non-finite") != std::string::npos);
  CHECK(message("y\n0.1\ninf\n").find("row 3") != std::string::npos);
  CHECK(message("y\n0.1\n", {"z", 0}).find("no column named 'z'") != std::string::npos);
  CHECK_FALSE(message("y\n").empty());
  CHECK_THROWS_AS(read_returns_csv(scratch("does_not_exist.csv")), InputError);
}

TEST_CASE("returns csv: degenerate data is flagged") {
  CHECK(parse_returns_csv("0.1\n0\n0.2\n").degenerate);
  CHECK_FALSE(parse_returns_csv("0.1\n0.3\n0.2\n").degenerate);
}

TEST_CASE("price mode gives de-meaned log returns") {
  const LoadedReturns r = parse_returns_csv("p\n100\n110\n99\n101\n", {}, true);
  REQUIRE(r.series.y.size() == 3);
  const double raw[] = {std::log(1.1), std::log(99.0 / 110.0), std::log(101.0 / 99.0)};
  const double mean = (raw[0] + raw[1] + raw[2]) / 3;
  for (int i = 0; i < 3; ++i) CHECK(r.series.y[i] == doctest::Approx(raw[i] - mean).epsilon(1e-14));
  CHECK_THROWS_AS(parse_returns_csv("1\n2\n", {}, true), InputError);
  CHECK_THROWS_AS(parse_returns_csv("1\n-2\n3\n", {}, true), InputError);
}

TEST_CASE("format_double round trips") {
  for (const double x : {0.1, -9.0, 1e-300, 0.95, 1.0 / 3.0, -2.5e17}) {
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(0.3) == "0.3");
  CHECK(format_double(-9.0) == "-9");
}

TEST_CASE("draws csv round trip") {
  const std::vector<Draw> draws = {{0.95, -0.3, 0.3, -9.0}, {1.0 / 3, -1e-12, 0.123456789, -8.7654321}};
  const fs::path p = scratch("draws.csv");
  write_draws_csv(p, draws);
  CHECK(slurp(p).rfind("phi,rho,sigma,mu\n", 0) == 0);
  CHECK(read_draws_csv(p) == draws);
  std::ofstream(scratch("bad_draws.csv")) << "phi,rho,sigma,mu\n1,2,3\n";
  CHECK_THROWS_AS(read_draws_csv(scratch("bad_draws.csv")), InputError);
}

TEST_CASE("efficiency report json") {
  EfficiencyReport r;
  r.n_draws = 10;
  r.seconds = 2.0;
  r.min_esr = std::numeric_limits<double>::quiet_NaN();
  ParameterEfficiency ok;
  ok.name = "phi";
  ok.ess = 5;
  ok.inefficiency = 2;
  ok.esr = 2.5;
  ok.acf = {1.0, 0.5};
  ok.summary = {0.9, 0.01, 0.88, 0.9, 0.92};
  ParameterEfficiency bad;
  bad.name = "rho";
  bad.ess = bad.esr = bad.inefficiency = std::numeric_limits<double>::quiet_NaN();
  bad.error = "constant";
  r.parameters = {ok, bad};
  const nlohmann::json j = nlohmann::json::parse(to_json(r).dump());
  CHECK(j["n_draws"] == 10);
  CHECK(j["min_esr"].is_null());
  CHECK(j["parameters"]["phi"]["esr"] == 2.5);
  CHECK(j["parameters"]["phi"]["if"] == 2.0);
  CHECK(j["parameters"]["phi"]["q975"] == 0.92);
  CHECK(j["parameters"]["phi"]["acf"].size() == 2);
  CHECK_FALSE(j["parameters"]["phi"].contains("error"));
  CHECK(j["parameters"]["rho"]["ess"].is_null());
  CHECK(j["parameters"]["rho"]["error"] == "constant");
}

TEST_CASE("grid spec parsing") {
  const GridSpec g = parse_grid_spec(
      "# study\n"
      "phi = 0.9, 0.95\n"
      "rho = -0.3\n"
      "sigma = 0.1,0.3  # two\n"
      "mu = -8\n"
      "T = 300, 1000\n"
      "replications = 2\n"
      "samplers = aux, rwmh-asis\n"
      "seed = 42\n"
      "draws = 500\n"
      "burnin = 100\n"
      "asis_repeats = 3\n");
  CHECK(g.phi_values == std::vector<double>{0.9, 0.95});
  CHECK(g.rho_values == std::vector<double>{-0.3});
  CHECK(g.sigma_values == std::vector<double>{0.1, 0.3});
  CHECK(g.mu == -8.0);
  CHECK(g.T_values == std::vector<std::size_t>{300, 1000});
  CHECK(g.replications == 2);
  CHECK(g.samplers == std::vector<Algorithm>{Algorithm::Aux, Algorithm::RwmhAsis});
  CHECK(g.seed == 42);
  CHECK(g.draws == 500);
  CHECK(g.burnin == 100);
  CHECK(g.asis_repeats == 3);

  const std::string base = "rho=0\nsigma=0.2\nT=100\nsamplers=aux\n";
  CHECK_NOTHROW(parse_grid_spec("phi=0.5\n" + base));
  CHECK_THROWS_AS(parse_grid_spec("phi=1.0\n" + base), InputError);
  CHECK_THROWS_AS(parse_grid_spec("phi=0.5\n" + base + "colour=red\n"), InputError);
  CHECK_THROWS_AS(parse_grid_spec("phi=0.5\n" + base + "samplers=gibbs\n"), InputError);
  CHECK_THROWS_AS(parse_grid_spec("phi=0.5\n" + base + "T=1\n"), InputError);
  CHECK_THROWS_AS(parse_grid_spec("phi=0.5\n" + base + "replications=0\n"), InputError);
  CHECK_THROWS_AS(parse_grid_spec("phi=abc\n" + base), InputError);
  CHECK_THROWS_AS(parse_grid_spec("phi 0.5\n" + base), InputError);
  CHECK_THROWS_AS(parse_grid_spec(base), InputError);
}

TEST_CASE("grid file names and seeds") {
  const GridPoint g{0.95, -0.3, 0.3, -9.0, 300};
  CHECK(grid_file_stem(g, 0) == "sim_phi0.95_rho-0.3_sigma0.3_mu-9_T300_rep0");
  CHECK(data_seed(1, g, 0) == data_seed(1, g, 0));
  CHECK(data_seed(1, g, 0) != data_seed(1, g, 1));
  CHECK(data_seed(1, g, 0) != data_seed(2, g, 0));
  GridPoint h = g;
  h.rho = -0.4;
  CHECK(data_seed(1, g, 0) != data_seed(1, h, 0));
  CHECK(latent_sidecar("a/b.csv") == fs::path("a/b.latent.csv"));
}

TEST_CASE("simulation files") {
  const SimulatedData d = simulate_svl(DgpSpec{{0.9, -0.3, 0.3, -9.0}, 25, 3});
  const fs::path p = scratch("sim.csv");
  write_simulation(p, d);
  CHECK(read_returns_csv(p).series.y == d.returns.y);
  CHECK(read_returns_csv(latent_sidecar(p)).series.y == d.latent.values);
}
