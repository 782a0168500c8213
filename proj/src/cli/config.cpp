#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "twoway/cli.hpp"
#include "twoway/io.hpp"

namespace twoway::cli {

namespace {

const std::set<std::string> kCommands{"estimate", "mc", "spectrum", "simulate"};
const std::set<std::string> kBoolFlags{"no-split", "noiseless", "raw-proxies"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Index parse_positive_index(const std::string& s, const std::string& what) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != s.size() || v < 1) throw Error(ErrorCode::BadValue, what + " must be a positive integer, got '" + s + "'");
  return static_cast<Index>(v);
}

bool truthy(const std::string& v) {
  std::string s = v;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
  if (s == "0" || s == "false" || s == "no" || s == "off") return false;
  throw Error(ErrorCode::BadValue, "expected a boolean, got '" + v + "'");
}

ErrorCode classify(const CLI::ParseError& e) {
  if (dynamic_cast<const CLI::ExtrasError*>(&e) != nullptr) return ErrorCode::UnknownFlag;
  if (dynamic_cast<const CLI::RequiredError*>(&e) != nullptr) return ErrorCode::BadValue;
  return ErrorCode::BadValue;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config file '" + path.string() + "'");
  std::vector<std::pair<std::string, std::string>> pairs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::BadValue, path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    pairs.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return pairs;
}

RunConfig parse_config(const std::vector<std::string>& args_in, std::string* help) {
  if (args_in.empty()) throw Error(ErrorCode::BadValue, "missing subcommand (estimate, mc, spectrum, simulate)");
  const std::string& command = args_in.front();
  if (command == "--help" || command == "-h") {
    if (help) *help = "usage: twoway {estimate|mc|spectrum|simulate} [options]; see `twoway <command> --help`";
    RunConfig cfg;
    return cfg;
  }
  if (!kCommands.count(command)) throw Error(ErrorCode::UnknownFlag, "unknown subcommand '" + command + "'");

  // Config-file values go first so that later command-line flags win.
  std::vector<std::string> cli_args(args_in.begin() + 1, args_in.end());
  std::filesystem::path config_file;
  for (std::size_t a = 0; a < cli_args.size(); ++a) {
    if (cli_args[a] == "--config" && a + 1 < cli_args.size()) {
      config_file = cli_args[a + 1];
      cli_args.erase(cli_args.begin() + static_cast<std::ptrdiff_t>(a), cli_args.begin() + static_cast<std::ptrdiff_t>(a + 2));
      break;
    }
    if (cli_args[a].rfind("--config=", 0) == 0) {
      config_file = cli_args[a].substr(9);
      cli_args.erase(cli_args.begin() + static_cast<std::ptrdiff_t>(a));
      break;
    }
  }
  std::vector<std::string> args;
  if (!config_file.empty()) {
    for (const auto& [key, value] : read_config_file(config_file)) {
      if (kBoolFlags.count(key)) {
        if (truthy(value)) args.push_back("--" + key);
      } else {
        args.push_back("--" + key);
        args.push_back(value);
      }
    }
  }
  args.insert(args.end(), cli_args.begin(), cli_args.end());

  RunConfig cfg;
  cfg.command = command;
  cfg.config_file = config_file;

  CLI::App app{"twoway " + command};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.allow_extras(false);
  app.set_help_flag("--help", "print this help");

  std::string input, out;
  std::string estimator = "ww", kernel = "gaussian", dfc, ww_init = "factor", rates = "main";
  Index r1 = 0, r2 = 0, lags = 0, max_outer = 25, als_max_iter = 500, anchors = 2, r_max = 10, d = 1, rounds = 100;
  double h = 0, h_lambda = 0, h_f = 0, h_oracle = 0, h_pseudo = 0, h_moment = 0, outer_tol = 1e-6, als_tol = 1e-8;
  double level = 0.95, theta = 0.5, beta0 = 2.0, re_scale = 1.0;
  std::string dgp = "main", n_list = "100", t_list, estimators = "oracle,factor,ww", spectrum_of = "y";
  std::uint64_t seed = 1;
  int threads = 1;
  bool no_split = false, noiseless = false, raw_proxies = false;

  const bool estimating = command == "estimate" || command == "mc";
  const bool simulating = command == "mc" || command == "simulate";
  CLI::Option* rates_opt = nullptr;

  app.add_option("--out", out, command == "simulate" ? "output panel CSV" : "output directory");
  if (command == "estimate" || command == "spectrum") app.add_option("--input", input, "long-format panel CSV")->required();

  std::vector<std::pair<CLI::Option*, std::function<void()>>> setters;
  const auto track = [&](CLI::Option* opt, std::function<void()> apply) { setters.emplace_back(opt, std::move(apply)); };

  if (estimating) {
    if (command == "estimate") app.add_option("--estimator", estimator, "oracle|factor|double_factor|ww|pseudo|moment");
    track(app.add_option("--r1", r1, "first-step factor rank")->check(CLI::PositiveNumber), [&] { cfg.est.r1 = r1; });
    track(app.add_option("--r2", r2, "number of eigen-proxy terms")->check(CLI::PositiveNumber), [&] { cfg.est.r2 = r2; });
    track(app.add_option("--h", h, "bandwidth for both proxy sides")->check(CLI::PositiveNumber),
          [&] { cfg.est.h_lambda = cfg.est.h_f = h; });
    track(app.add_option("--h-lambda", h_lambda, "unit-proxy bandwidth")->check(CLI::PositiveNumber),
          [&] { cfg.est.h_lambda = h_lambda; });
    track(app.add_option("--h-f", h_f, "period-proxy bandwidth")->check(CLI::PositiveNumber), [&] { cfg.est.h_f = h_f; });
    track(app.add_option("--h-oracle", h_oracle)->check(CLI::PositiveNumber), [&] { cfg.est.h_oracle = h_oracle; });
    track(app.add_option("--h-pseudo", h_pseudo)->check(CLI::PositiveNumber), [&] { cfg.est.h_pseudo = h_pseudo; });
    track(app.add_option("--h-moment", h_moment)->check(CLI::PositiveNumber), [&] { cfg.est.h_moment = h_moment; });
    app.add_option("--kernel", kernel, "gaussian|epanechnikov");
    track(app.add_option("--dfc", dfc, "factor|nonparam|conservative|none"),
          [&] { cfg.est.dfc_mode = parse_dfc_mode(dfc); });
    track(app.add_option("--lags", lags, "Bartlett lags")->check(CLI::NonNegativeNumber),
          [&] { cfg.est.bartlett_lags = lags; });
    app.add_flag("--no-split", no_split, "skip quadrant cross-fitting");
    app.add_flag("--raw-proxies", raw_proxies, "feed pseudo/moment proxies to the kernel unstandardized");
    app.add_option("--ww-init", ww_init, "factor|multi_index");
    app.add_option("--max-outer", max_outer)->check(CLI::PositiveNumber);
    app.add_option("--outer-tol", outer_tol)->check(CLI::PositiveNumber);
    app.add_option("--als-max-iter", als_max_iter)->check(CLI::PositiveNumber);
    app.add_option("--als-tol", als_tol)->check(CLI::PositiveNumber);
    app.add_option("--anchors", anchors, "pseudo-distance medoid anchors")->check(CLI::PositiveNumber);
    rates_opt = app.add_option("--rates", rates, "main|multidim rate defaults");
    app.add_option("--level", level, "confidence level")->check(CLI::Range(0.0, 1.0));
  }
  if (simulating) {
    app.add_option("--dgp", dgp, "main|multidim|simple|simple_re");
    app.add_option("--n", n_list, "units (comma list for mc)");
    app.add_option("--t", t_list, "periods (comma list, defaults to --n)");
    app.add_option("--d", d, "effect dimension")->check(CLI::PositiveNumber);
    track(app.add_option("--theta", theta)->check(CLI::PositiveNumber), [&] { cfg.dgp.theta = theta; });
    app.add_option("--beta0", beta0);
    app.add_option("--re-scale", re_scale)->check(CLI::NonNegativeNumber);
    app.add_flag("--noiseless", noiseless);
    app.add_option("--seed", seed);
  }
  if (command == "mc") {
    app.add_option("--rounds", rounds)->check(CLI::PositiveNumber);
    app.add_option("--estimators", estimators, "comma list");
    track(app.add_option("--threads", threads)->check(CLI::PositiveNumber), [] {});
  }
  if (command == "spectrum") {
    app.add_option("--of", spectrum_of, "y|x<k>|ols_residual");
    app.add_option("--r-max", r_max)->check(CLI::PositiveNumber);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    if (help) *help = app.help();
    return cfg;
  } catch (const CLI::ParseError& e) {
    throw Error(classify(e), e.what());
  }

  cfg.input = input;
  if (!out.empty()) cfg.out = out;
  for (auto& [opt, apply] : setters)
    if (opt->count() > 0) apply();

  if (estimating) {
    cfg.estimator = parse_estimator(estimator);
    cfg.est.kernel = parse_kernel(kernel);
    cfg.est.sample_split = !no_split;
    cfg.est.standardize_proxies = !raw_proxies;
    if (ww_init == "factor") cfg.est.ww_init = ProxyInit::FactorModel;
    else if (ww_init == "multi_index") cfg.est.ww_init = ProxyInit::MultiIndex;
    else throw Error(ErrorCode::BadValue, "--ww-init must be factor or multi_index");
    cfg.est.max_outer = static_cast<int>(max_outer);
    cfg.est.outer_tol = outer_tol;
    cfg.est.als.max_iter = static_cast<int>(als_max_iter);
    cfg.est.als.tol = als_tol;
    cfg.est.pseudo_anchors = anchors;
    if (rates == "main") cfg.est.rates = RatePreset::Main;
    else if (rates == "multidim") cfg.est.rates = RatePreset::Multidim;
    else throw Error(ErrorCode::BadValue, "--rates must be main or multidim");
    if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::BadValue, "--level must lie in (0, 1)");
    cfg.level = level;
  }
  if (simulating) {
    cfg.dgp.family = parse_dgp(dgp);
    cfg.dgp.d = d;
    cfg.dgp.beta0 = beta0;
    cfg.dgp.re_scale = re_scale;
    cfg.dgp.noiseless = noiseless;
    cfg.seed = seed;
    cfg.dgp.seed = seed;
    const auto ns = split_list(n_list);
    const auto ts = t_list.empty() ? ns : split_list(t_list);
    if (ns.empty() || ns.size() != ts.size()) throw Error(ErrorCode::BadValue, "--n and --t need equally long lists");
    cfg.dims.clear();
    for (std::size_t j = 0; j < ns.size(); ++j)
      cfg.dims.emplace_back(parse_positive_index(ns[j], "--n"), parse_positive_index(ts[j], "--t"));
    cfg.dgp.n = cfg.dims.front().first;
    cfg.dgp.t = cfg.dims.front().second;
    if (command == "simulate" && cfg.dims.size() != 1) throw Error(ErrorCode::BadValue, "simulate takes a single --n/--t");
    // Multi-dimensional designs use the higher rank rates unless told otherwise.
    if (cfg.dgp.family == DgpFamily::Multidim && command == "mc" && rates_opt->count() == 0) {
      cfg.est.rates = RatePreset::Multidim;
    }
  }
  if (command == "mc") {
    cfg.rounds = rounds;
    cfg.estimators.clear();
    for (const auto& name : split_list(estimators)) cfg.estimators.push_back(parse_estimator(name));
    if (cfg.estimators.empty()) throw Error(ErrorCode::BadValue, "--estimators is empty");
    bool threads_given = false;
    for (auto& [opt, apply] : setters)
      if (opt->get_name() == "--threads" && opt->count() > 0) threads_given = true;
    if (threads_given) {
      cfg.threads = threads;
    } else if (const char* env = std::getenv("TWOWAY_THREADS"); env != nullptr && *env != '\0') {
      cfg.threads = static_cast<int>(parse_positive_index(env, "TWOWAY_THREADS"));
    }
  }
  if (command == "spectrum") {
    cfg.spectrum_of = spectrum_of;
    cfg.r_max = r_max;
  }
  return cfg;
}

std::string describe(const RunConfig& cfg) {
  std::ostringstream os;
  const auto kv = [&os](const std::string& k, const auto& v) { os << k << '=' << v << '\n'; };
  kv("command", cfg.command);
  if (!cfg.config_file.empty()) kv("config", cfg.config_file.string());
  if (!cfg.input.empty()) kv("input", cfg.input.string());
  kv("out", cfg.out.string());
  const bool estimating = cfg.command == "estimate" || cfg.command == "mc";
  const bool simulating = cfg.command == "mc" || cfg.command == "simulate";
  if (simulating) {
    kv("dgp", to_string(cfg.dgp.family));
    std::string dims;
    for (const auto& [n, t] : cfg.dims) dims += (dims.empty() ? "" : ",") + std::to_string(n) + "x" + std::to_string(t);
    kv("dims", dims);
    kv("d", cfg.dgp.d);
    kv("theta", cfg.dgp.theta ? format_double(*cfg.dgp.theta) : std::string("default"));
    kv("beta0", format_double(cfg.dgp.beta0));
    if (cfg.dgp.family == DgpFamily::SimpleRe) kv("re_scale", format_double(cfg.dgp.re_scale));
    kv("noiseless", cfg.dgp.noiseless);
    kv("seed", cfg.seed);
  }
  if (estimating) {
    if (cfg.command == "estimate") kv("estimator", to_string(cfg.estimator));
    if (cfg.command == "mc") {
      std::string names;
      for (auto id : cfg.estimators) names += (names.empty() ? "" : ",") + std::string(to_string(id));
      kv("estimators", names);
      kv("rounds", cfg.rounds);
      kv("threads", cfg.threads);
    }
    kv("rates", cfg.est.rates == RatePreset::Main ? "main" : "multidim");
    // Rates resolved at the first (or only) panel size.
    const Index n = cfg.command == "mc" ? cfg.dims.front().first : 0;
    const Index t = cfg.command == "mc" ? cfg.dims.front().second : 0;
    if (n > 0) {
      const ResolvedHyperparameters hp = resolve_hyperparameters(cfg.est, n, t);
      kv("r1", hp.r1);
      kv("r2", hp.r2);
      kv("h_lambda", format_double(hp.h_lambda));
      kv("h_f", format_double(hp.h_f));
      kv("h_oracle", format_double(hp.h_oracle));
      kv("h_pseudo", format_double(hp.h_pseudo));
      kv("h_moment", format_double(hp.h_moment));
      kv("lags", hp.bartlett_lags);
    }
    kv("kernel", to_string(cfg.est.kernel));
    kv("dfc", cfg.est.dfc_mode ? std::string(to_string(*cfg.est.dfc_mode)) : std::string("estimator default"));
    kv("sample_split", cfg.est.sample_split);
    kv("standardize_proxies", cfg.est.standardize_proxies);
    kv("ww_init", cfg.est.ww_init == ProxyInit::MultiIndex ? "multi_index" : "factor");
    kv("max_outer", cfg.est.max_outer);
    kv("outer_tol", format_double(cfg.est.outer_tol));
    kv("als_max_iter", cfg.est.als.max_iter);
    kv("als_tol", format_double(cfg.est.als.tol));
    kv("anchors", cfg.est.pseudo_anchors);
    kv("level", format_double(cfg.level));
  }
  if (cfg.command == "spectrum") {
    kv("of", cfg.spectrum_of);
    kv("r_max", cfg.r_max);
  }
  return os.str();
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadValue:
    case ErrorCode::UnknownFlag:
      return 2;
    case ErrorCode::Io:
      return 4;
    default:
      return 3;
  }
}

}  // namespace twoway::cli
