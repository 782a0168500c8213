#include <iomanip>
#include <iostream>

#include "twoway/cli.hpp"
#include "twoway/io.hpp"

#ifndef TWOWAY_BUILD_ID
#define TWOWAY_BUILD_ID "unknown"
#endif

namespace twoway::cli {

namespace {

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create output directory '" + dir.string() + "': " + ec.message());
}

void run_estimate(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const LabeledPanel panel = read_panel_csv(cfg.input);
  const PanelData& data = panel.data;
  const ResolvedHyperparameters hp = resolve_hyperparameters(cfg.est, data.n(), data.t());
  log << "panel N=" << data.n() << " T=" << data.t() << " K=" << data.k() << '\n'
      << "r1=" << hp.r1 << " r2=" << hp.r2 << " h_lambda=" << format_double(hp.h_lambda)
      << " h_f=" << format_double(hp.h_f) << " lags=" << hp.bartlett_lags << '\n';
  if (cfg.estimator == EstimatorId::Oracle) {
    throw Error(ErrorCode::BadValue, "the oracle estimator needs the true effects and is simulation-only");
  }
  const EstimateResult res = run_estimator(cfg.estimator, data, nullptr, cfg.est);
  if (!res.converged) warn("first step hit its iteration cap");
  const auto ci = confidence_interval(res.beta, res.se, cfg.level);
  out << "estimator " << res.estimator << "  N=" << res.n << " T=" << res.t << "  dfc=" << std::setprecision(6)
      << res.dfc << " (" << to_string(res.dfc_mode) << ")\n";
  out << std::setw(6) << "coef" << std::setw(14) << "estimate" << std::setw(14) << "se" << std::setw(14) << "ci_lower"
      << std::setw(14) << "ci_upper" << '\n';
  for (Index j = 0; j < res.beta.size(); ++j) {
    const auto& c = ci[static_cast<std::size_t>(j)];
    out << std::setw(6) << ("x" + std::to_string(j + 1)) << std::setw(14) << res.beta(j) << std::setw(14) << res.se(j)
        << std::setw(14) << c.lower << std::setw(14) << c.upper << '\n';
  }
  ensure_dir(cfg.out);
  write_estimate_csv(cfg.out / "estimate.csv", res, cfg.level);
  log << "wrote " << (cfg.out / "estimate.csv").string() << '\n';
}

void run_mc(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  McConfig mc;
  mc.rounds = cfg.rounds;
  mc.estimators = cfg.estimators;
  mc.dims = cfg.dims;
  mc.level = cfg.level;
  mc.seed = cfg.seed;
  mc.threads = cfg.threads;
  mc.estimator_config = cfg.est;
  const bool warnings = warnings_enabled();
  set_warnings_enabled(false);
  McSummary summary;
  try {
    summary = run_monte_carlo(mc, cfg.dgp);
  } catch (...) {
    set_warnings_enabled(warnings);
    throw;
  }
  set_warnings_enabled(warnings);

  out << std::setw(14) << "estimator" << std::setw(6) << "N" << std::setw(6) << "T" << std::setw(8) << "rounds"
      << std::setw(11) << "bias" << std::setw(11) << "rmse" << std::setw(10) << "coverage" << std::setw(10)
      << "failures" << '\n';
  out << std::fixed << std::setprecision(4);
  for (const auto& r : summary.rows) {
    out << std::setw(14) << r.estimator << std::setw(6) << r.n << std::setw(6) << r.t << std::setw(8) << r.rounds
        << std::setw(11) << r.bias << std::setw(11) << r.rmse << std::setw(10) << r.coverage << std::setw(10)
        << r.failures << '\n';
  }
  out << std::defaultfloat;
  ensure_dir(cfg.out);
  write_mc_summary_csv(cfg.out / "mc_summary.csv", summary.rows);
  write_mc_rounds_csv(cfg.out / "mc_rounds.csv", summary.rounds);
  log << "wrote " << (cfg.out / "mc_summary.csv").string() << " and mc_rounds.csv\n";
}

void run_spectrum(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const PanelData data = read_panel_csv(cfg.input).data;
  Matrix m;
  if (cfg.spectrum_of == "y") {
    m = data.y;
  } else if (cfg.spectrum_of == "ols_residual") {
    m = data.y - apply_beta(data.x, pooled_ols(data.y, data.x));
  } else if (cfg.spectrum_of.size() > 1 && cfg.spectrum_of[0] == 'x') {
    const int k = std::stoi(cfg.spectrum_of.substr(1));
    if (k < 1 || k > data.k()) throw Error(ErrorCode::BadValue, "--of " + cfg.spectrum_of + " is out of range");
    m = data.x[static_cast<std::size_t>(k - 1)];
  } else {
    throw Error(ErrorCode::BadValue, "--of must be y, x<k> or ols_residual");
  }
  const SpectrumReport rep = spectrum_report(m, std::min<Index>(cfg.r_max, std::min(m.rows(), m.cols()) - 1));
  out << "suggested rank " << rep.suggested_rank << '\n';
  for (Index r = 0; r < std::min<Index>(rep.singular_values.size(), cfg.r_max + 1); ++r) {
    out << std::setw(4) << (r + 1) << std::setw(16) << rep.singular_values(r);
    if (r < rep.ratios.size()) out << std::setw(12) << rep.ratios(r);
    out << '\n';
  }
  ensure_dir(cfg.out);
  write_spectrum_csv(cfg.out / "spectrum.csv", rep);
  log << "wrote " << (cfg.out / "spectrum.csv").string() << '\n';
}

void run_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  const SimulatedPanel sim = generate(cfg.dgp);
  std::filesystem::path path = cfg.out;
  if (path.empty() || std::filesystem::is_directory(path)) path /= "panel.csv";
  if (path.has_parent_path()) ensure_dir(path.parent_path());
  write_panel_csv(path, sim.data);
  out << "simulated " << to_string(cfg.dgp.family) << " panel N=" << sim.data.n() << " T=" << sim.data.t() << '\n';
  log << "wrote " << path.string() << '\n';
}

}  // namespace

void run(const RunConfig& cfg, std::ostream& out, std::ostream& log) {
  if (cfg.command == "estimate") return run_estimate(cfg, out, log);
  if (cfg.command == "mc") return run_mc(cfg, out, log);
  if (cfg.command == "spectrum") return run_spectrum(cfg, out, log);
  if (cfg.command == "simulate") return run_simulate(cfg, out, log);
  throw Error(ErrorCode::UnknownFlag, "unknown subcommand '" + cfg.command + "'");
}

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    std::string help;
    const RunConfig cfg = parse_config(args, &help);
    if (!help.empty()) {
      std::cout << help << '\n';
      return 0;
    }
    std::clog << "# twoway build " << TWOWAY_BUILD_ID << '\n' << describe(cfg);
    run(cfg, std::cout, std::clog);
    return 0;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace twoway::cli
