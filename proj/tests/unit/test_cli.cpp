#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "twoway/cli.hpp"
#include "twoway/io.hpp"

using namespace twoway;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "twoway_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

ErrorCode code_of(const std::vector<std::string>& args) {
  try {
    cli::parse_config(args);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Empty;
}

}  // namespace

TEST_CASE("mc flags fill the run configuration") {
  const cli::RunConfig cfg =
      cli::parse_config({"mc", "--dgp", "main", "--n", "100", "--t", "100", "--rounds", "200", "--seed", "7"});
  CHECK(cfg.command == "mc");
  CHECK(cfg.rounds == 200);
  CHECK(cfg.seed == 7);
  CHECK(cfg.dgp.family == DgpFamily::Main);
  REQUIRE(cfg.dims.size() == 1);
  CHECK(cfg.dims[0] == std::pair<Index, Index>{100, 100});
  CHECK(cfg.estimators.size() == 3);
  CHECK(cfg.level == 0.95);
  CHECK(cfg.est.sample_split);
  CHECK_FALSE(cfg.est.r2.has_value());
}

TEST_CASE("comma lists of panel sizes") {
  const cli::RunConfig cfg = cli::parse_config({"mc", "--n", "100,200", "--estimators", "ww,factor"});
  REQUIRE(cfg.dims.size() == 2);
  CHECK(cfg.dims[1] == std::pair<Index, Index>{200, 200});
  CHECK(cfg.estimators == std::vector<EstimatorId>{EstimatorId::Ww, EstimatorId::Factor});
  CHECK(code_of({"mc", "--n", "100,200", "--t", "100"}) == ErrorCode::BadValue);
}

TEST_CASE("invalid values and unknown flags") {
  CHECK(code_of({"mc", "--r2", "0"}) == ErrorCode::BadValue);
  CHECK(code_of({"mc", "--h", "-1"}) == ErrorCode::BadValue);
  CHECK(code_of({"mc", "--dgp", "nope"}) == ErrorCode::BadValue);
  CHECK(code_of({"mc", "--bogus", "1"}) == ErrorCode::UnknownFlag);
  CHECK(code_of({"frobnicate"}) == ErrorCode::UnknownFlag);
  CHECK(code_of({"estimate"}) == ErrorCode::BadValue);
  CHECK(code_of({}) == ErrorCode::BadValue);
}

TEST_CASE("command-line flags override the config file") {
  const fs::path file = scratch("precedence.cfg");
  write_text(file, "# bandwidths\nh = 0.3\nrounds = 12\nno_split = true\n");
  const cli::RunConfig cfg = cli::parse_config({"mc", "--config", file.string(), "--h", "0.5"});
  CHECK(cfg.est.h_lambda == 0.5);
  CHECK(cfg.est.h_f == 0.5);
  CHECK(cfg.rounds == 12);
  CHECK_FALSE(cfg.est.sample_split);
  CHECK(cfg.config_file == file);

  const cli::RunConfig only_file = cli::parse_config({"mc", "--config", file.string()});
  CHECK(only_file.est.h_lambda == 0.3);
  CHECK(code_of({"mc", "--config", scratch("missing.cfg").string()}) == ErrorCode::Io);
}

TEST_CASE("the last repeated flag wins") {
  CHECK(cli::parse_config({"mc", "--rounds", "5", "--rounds", "9"}).rounds == 9);
}

TEST_CASE("multidim designs pick the multidim rates") {
  CHECK(cli::parse_config({"mc", "--dgp", "multidim", "--d", "2"}).est.rates == RatePreset::Multidim);
  CHECK(cli::parse_config({"mc", "--dgp", "multidim", "--rates", "main"}).est.rates == RatePreset::Main);
  CHECK(cli::parse_config({"mc", "--dgp", "multidim", "--rates=main"}).est.rates == RatePreset::Main);
}

TEST_CASE("thread count falls back to TWOWAY_THREADS") {
  setenv("TWOWAY_THREADS", "3", 1);
  CHECK(cli::parse_config({"mc"}).threads == 3);
  CHECK(cli::parse_config({"mc", "--threads", "2"}).threads == 2);
  unsetenv("TWOWAY_THREADS");
  CHECK(cli::parse_config({"mc"}).threads == 1);
}

TEST_CASE("describe lists the resolved rates") {
  const std::string text = cli::describe(cli::parse_config({"mc", "--n", "100"}));
  CHECK(text.find("r1=5\n") != std::string::npos);
  CHECK(text.find("r2=4\n") != std::string::npos);
  CHECK(text.find("h_lambda=0.5\n") != std::string::npos);
  CHECK(text.find("seed=1\n") != std::string::npos);
}

TEST_CASE("help is reported, not run") {
  std::string help;
  cli::parse_config({"mc", "--help"}, &help);
  CHECK(help.find("--rounds") != std::string::npos);
}

TEST_CASE("exit codes") {
  CHECK(cli::exit_code(ErrorCode::BadValue) == 2);
  CHECK(cli::exit_code(ErrorCode::UnknownFlag) == 2);
  CHECK(cli::exit_code(ErrorCode::SingularOmega) == 3);
  CHECK(cli::exit_code(ErrorCode::Io) == 4);
}

TEST_CASE("mc summary CSV round trip") {
  McRow a;
  a.estimator = "ww";
  a.n = 100;
  a.t = 50;
  a.rounds = 199;
  a.bias = 0.010912345678901234;
  a.rmse = 1.0 / 3.0;
  a.coverage = 0.955;
  a.mean_se = 1e-17;
  a.sd_beta = 0.1;
  a.failures = 1;
  McRow b = a;
  b.estimator = "factor";
  b.bias = -2.5e-5;
  const fs::path path = scratch("summary.csv");
  write_mc_summary_csv(path, {a, b});
  const auto back = read_mc_summary_csv(path);
  REQUIRE(back.size() == 2);
  CHECK(back[0].estimator == "ww");
  CHECK(back[0].bias == a.bias);
  CHECK(back[0].rmse == a.rmse);
  CHECK(back[0].mean_se == a.mean_se);
  CHECK(back[0].failures == 1);
  CHECK(back[1].bias == b.bias);

  write_mc_summary_csv(path, {});
  std::ifstream in(path);
  std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  CHECK(all == "estimator,N,T,rounds,bias,rmse,coverage,mean_se,sd_beta,failures\n");
  CHECK(read_mc_summary_csv(path).empty());
}

TEST_CASE("panel CSV reading") {
  const fs::path path = scratch("panel.csv");
  write_text(path, "i,t,y,x1\nb,2001,1.5,0.5\na,2001,2,1\nb,2002,3,1.5\na,2002,4,2\n");
  const LabeledPanel p = read_panel_csv(path);
  CHECK(p.units == std::vector<std::string>{"b", "a"});
  CHECK(p.periods == std::vector<std::string>{"2001", "2002"});
  CHECK(p.data.y(1, 1) == 4.0);
  CHECK(p.data.x[0](0, 1) == 1.5);

  write_text(path, "i,t,y,x1\n1,1,1,1\n1,1,2,2\n");
  CHECK_THROWS_AS(read_panel_csv(path), Error);
  write_text(path, "i,t,y,x1\n1,1,1,1\n1,2,2,2\n2,1,1,1\n");
  CHECK_THROWS_AS(read_panel_csv(path), Error);
  write_text(path, "i,t,y\n1,1,1\n");
  CHECK_THROWS_AS(read_panel_csv(path), Error);
  write_text(path, "i,t,y,x1\n1,1,abc,1\n");
  CHECK_THROWS_AS(read_panel_csv(path), Error);
  CHECK_THROWS_AS(read_panel_csv(scratch("absent.csv")), Error);
}

TEST_CASE("simulate, estimate and spectrum end to end") {
  const fs::path dir = scratch("e2e");
  fs::remove_all(dir);
  std::ostringstream out, log;
  cli::run(cli::parse_config({"simulate", "--n", "24", "--seed", "3", "--out", (dir / "panel.csv").string()}), out, log);
  const LabeledPanel p = read_panel_csv(dir / "panel.csv");
  CHECK(p.data.n() == 24);

  cli::run(cli::parse_config({"estimate", "--input", (dir / "panel.csv").string(), "--estimator", "factor", "--out",
                              dir.string()}),
           out, log);
  std::ifstream est(dir / "estimate.csv");
  std::string header, row;
  std::getline(est, header);
  std::getline(est, row);
  CHECK(header == "coef,estimate,se,ci_lower,ci_upper,dfc,estimator");
  CHECK(row.rfind("x1,", 0) == 0);
  CHECK(row.find(",factor") != std::string::npos);

  cli::run(cli::parse_config({"spectrum", "--input", (dir / "panel.csv").string(), "--of", "ols_residual", "--out",
                              dir.string()}),
           out, log);
  CHECK(fs::exists(dir / "spectrum.csv"));

  try {
    cli::run(cli::parse_config({"estimate", "--input", (dir / "panel.csv").string(), "--estimator", "oracle"}), out, log);
    FAIL("oracle must be refused on real data");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BadValue);
  }
}

TEST_CASE("mc writes one summary row per estimator and size") {
  const fs::path dir = scratch("mc");
  fs::remove_all(dir);
  std::ostringstream out, log;
  cli::run(cli::parse_config({"mc", "--n", "16,20", "--rounds", "2", "--estimators", "oracle,factor", "--out",
                              dir.string()}),
           out, log);
  CHECK(read_mc_summary_csv(dir / "mc_summary.csv").size() == 4);
}
