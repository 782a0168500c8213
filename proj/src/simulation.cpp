#include "twoway/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <thread>

namespace twoway {

std::string_view to_string(DgpFamily family) {
  switch (family) {
    case DgpFamily::Main: return "main";
    case DgpFamily::Multidim: return "multidim";
    case DgpFamily::Simple: return "simple";
    case DgpFamily::SimpleRe: return "simple_re";
  }
  return "main";
}

DgpFamily parse_dgp(std::string_view name) {
  for (DgpFamily f : {DgpFamily::Main, DgpFamily::Multidim, DgpFamily::Simple, DgpFamily::SimpleRe}) {
    if (name == to_string(f)) return f;
  }
  throw Error(ErrorCode::BadValue, "unknown dgp '" + std::string(name) + "' (main, multidim, simple, simple_re)");
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

void normalize_variance(Matrix& m, double variance) {
  m.array() -= m.mean();
  const double var = m.squaredNorm() / static_cast<double>(m.size());
  if (var > 0.0) m *= std::sqrt(variance / var);
}

namespace {

Matrix draw_normal(Index n, Index t, double sd, Rng& rng) {
  std::normal_distribution<double> dist(0.0, sd);
  Matrix m(n, t);
  for (Index j = 0; j < t; ++j)
    for (Index i = 0; i < n; ++i) m(i, j) = dist(rng);
  return m;
}

Matrix draw_uniform(Index rows, Index cols, double lo, double hi, Rng& rng) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Matrix m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

// m_it + (m_{i,t-1} + m_{i-1,t})/sqrt2 + m_{i-1,t-1}/2, missing neighbours dropped.
Matrix spatial_ma(const Matrix& m) {
  const double r2 = 1.0 / std::sqrt(2.0);
  Matrix out = m;
  const Index n = m.rows();
  const Index t = m.cols();
  out.rightCols(t - 1) += r2 * m.leftCols(t - 1);
  out.bottomRows(n - 1) += r2 * m.topRows(n - 1);
  out.bottomRightCorner(n - 1, t - 1) += 0.5 * m.topLeftCorner(n - 1, t - 1);
  return out;
}

std::vector<Index> random_permutation(Index n, Rng& rng) {
  std::vector<Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), Index{0});
  // Fisher-Yates with an explicit draw so the order is library independent.
  for (Index i = n - 1; i > 0; --i) {
    const auto j = static_cast<Index>(rng() % static_cast<std::uint64_t>(i + 1));
    std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  return perm;
}

Matrix permute_rows(const Matrix& m, const std::vector<Index>& perm) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) out.row(static_cast<Index>(i)) = m.row(perm[i]);
  return out;
}

void check_spec(const DgpSpec& spec) {
  if (spec.n < 2 || spec.t < 2) throw Error(ErrorCode::TooSmall, "simulated panels need N, T >= 2");
  if (spec.d < 1) throw Error(ErrorCode::BadValue, "effect dimension d must be >= 1");
  if (spec.theta && !(*spec.theta > 0.0)) throw Error(ErrorCode::BadValue, "theta must be positive");
}

SimulatedPanel assemble(const DgpSpec& spec, Matrix alpha, Matrix gamma, Matrix g, Matrix g_x, const Matrix& eps,
                        const Matrix& eta, Rng& rng) {
  Matrix x = g_x + eta;
  Matrix y = spec.beta0 * x + g + eps;
  SimulatedPanel out;
  out.truth.permutation = random_permutation(spec.n, rng);
  const auto& perm = out.truth.permutation;
  out.data.y = permute_rows(y, perm);
  out.data.x.push_back(permute_rows(x, perm));
  out.truth.g = permute_rows(g, perm);
  out.truth.g_x = permute_rows(g_x, perm);
  out.truth.effects.alpha = permute_rows(alpha, perm);
  out.truth.effects.gamma = std::move(gamma);
  return out;
}

NoisePair iid_noise(const DgpSpec& spec, Rng& rng) {
  NoisePair p;
  if (spec.noiseless) {
    p.eta = p.eps = Matrix::Zero(spec.n, spec.t);
    return p;
  }
  p.eta = draw_normal(spec.n, spec.t, 1.0, rng);
  p.eps = draw_normal(spec.n, spec.t, 1.0, rng);
  return p;
}

}  // namespace

NoisePair gen_noise_pair(Index n, Index t, Rng& rng) {
  if (n < 2 || t < 2) throw Error(ErrorCode::TooSmall, "spatial MA noise needs N, T >= 2");
  const Matrix mu = draw_normal(n, t, 1.0, rng);
  const Matrix mu_star = draw_normal(n, t, 2.0, rng);
  NoisePair p;
  p.eta = spatial_ma(mu) + mu_star;
  normalize_variance(p.eta, 1.0);
  Matrix nu = draw_normal(n, t, 1.0, rng).cwiseProduct(p.eta.cwiseAbs());
  p.eps = spatial_ma(nu);
  normalize_variance(p.eps, 1.0);
  return p;
}

Matrix gen_spatial_ma_noise(Index n, Index t, NoiseKind kind, std::uint64_t seed) {
  Rng rng(seed);
  NoisePair p = gen_noise_pair(n, t, rng);
  return kind == NoiseKind::Eta ? std::move(p.eta) : std::move(p.eps);
}

SimulatedPanel gen_dgp_main(const DgpSpec& spec) {
  check_spec(spec);
  if (spec.d != 1) throw Error(ErrorCode::BadValue, "the main dgp has scalar effects (d = 1)");
  const double theta = spec.theta.value_or(0.5);
  Rng rng(spec.seed);
  const bool pos = spec.law.value_or(EffectLaw::UniformSym) == EffectLaw::UniformPos;
  const Matrix alpha = draw_uniform(spec.n, 1, pos ? 0.0 : -1.0, 1.0, rng);
  const Matrix gamma = draw_uniform(spec.t, 1, pos ? 0.0 : -1.0, 1.0, rng);
  Matrix g(spec.n, spec.t);
  Matrix g_x(spec.n, spec.t);
  const double c = 1.0 / (theta * std::sqrt(2.0 * M_PI));
  for (Index j = 0; j < spec.t; ++j) {
    for (Index i = 0; i < spec.n; ++i) {
      const double diff = alpha(i, 0) - gamma(j, 0);
      g(i, j) = c * std::exp(-diff * diff / (theta * theta));
      g_x(i, j) = std::pow(std::abs(diff) + 1.0, -theta);
    }
  }
  normalize_variance(g, 4.0);
  normalize_variance(g_x, 4.0);
  NoisePair noise;
  if (spec.noiseless) {
    noise.eta = noise.eps = Matrix::Zero(spec.n, spec.t);
  } else {
    noise = gen_noise_pair(spec.n, spec.t, rng);
  }
  return assemble(spec, alpha, gamma, std::move(g), std::move(g_x), noise.eps, noise.eta, rng);
}

SimulatedPanel gen_dgp_multidim(const DgpSpec& spec) {
  check_spec(spec);
  const double theta = spec.theta.value_or(spec.d >= 3 ? 1.0 : 0.5);
  Rng rng(spec.seed);
  const bool pos = spec.law.value_or(EffectLaw::UniformSym) == EffectLaw::UniformPos;
  const Matrix alpha = draw_uniform(spec.n, spec.d, pos ? 0.0 : -1.0, 1.0, rng);
  const Matrix gamma = draw_uniform(spec.t, spec.d, pos ? 0.0 : -1.0, 1.0, rng);
  Matrix g = Matrix::Zero(spec.n, spec.t);
  Matrix g_x = Matrix::Zero(spec.n, spec.t);
  const double c = 1.0 / (theta * std::sqrt(2.0 * M_PI));
  for (Index l = 0; l < spec.d; ++l) {
    for (Index j = 0; j < spec.t; ++j) {
      for (Index i = 0; i < spec.n; ++i) {
        const double diff = alpha(i, l) - gamma(j, l);
        g(i, j) += c * std::exp(-diff * diff / (theta * theta));
        g_x(i, j) += std::pow(std::abs(diff) + 1.0, -theta);
      }
    }
  }
  normalize_variance(g, 4.0);
  normalize_variance(g_x, 4.0);
  const NoisePair noise = iid_noise(spec, rng);
  return assemble(spec, alpha, gamma, std::move(g), std::move(g_x), noise.eps, noise.eta, rng);
}

namespace {

SimulatedPanel simple_family(const DgpSpec& spec, bool random_effects) {
  check_spec(spec);
  Rng rng(spec.seed);
  const Matrix alpha = draw_uniform(spec.n, spec.d, 0.0, 1.0, rng);
  const Matrix gamma = draw_uniform(spec.t, spec.d, 0.0, 1.0, rng);
  const Matrix cross = alpha * gamma.transpose();
  Matrix sines = Matrix::Zero(spec.n, spec.t);
  for (Index l = 0; l < spec.d; ++l)
    for (Index j = 0; j < spec.t; ++j)
      for (Index i = 0; i < spec.n; ++i) sines(i, j) += std::sin(alpha(i, l) * gamma(j, l));
  Matrix g = cross + sines;
  Matrix g_x = g;
  g.colwise() += alpha.rowwise().squaredNorm();
  g_x.rowwise() += gamma.rowwise().squaredNorm().transpose();
  if (random_effects) {
    const Matrix a = draw_normal(spec.n, 1, spec.re_scale, rng);
    const Matrix b = draw_normal(spec.t, 1, spec.re_scale, rng);
    g_x.colwise() += a.col(0);
    g_x.rowwise() += b.col(0).transpose();
  }
  const NoisePair noise = iid_noise(spec, rng);
  return assemble(spec, alpha, gamma, std::move(g), std::move(g_x), noise.eps, noise.eta, rng);
}

}  // namespace

SimulatedPanel gen_dgp_simple(const DgpSpec& spec) { return simple_family(spec, false); }
SimulatedPanel gen_dgp_simple_re(const DgpSpec& spec) { return simple_family(spec, true); }

SimulatedPanel generate(const DgpSpec& spec) {
  switch (spec.family) {
    case DgpFamily::Main: return gen_dgp_main(spec);
    case DgpFamily::Multidim: return gen_dgp_multidim(spec);
    case DgpFamily::Simple: return gen_dgp_simple(spec);
    case DgpFamily::SimpleRe: return gen_dgp_simple_re(spec);
  }
  throw Error(ErrorCode::BadValue, "unknown dgp family");
}

// ---- Monte Carlo --------------------------------------------------------------

namespace {

struct Kahan {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

McSummary run_monte_carlo(const McConfig& cfg, const DgpSpec& spec) {
  if (cfg.rounds < 1) throw Error(ErrorCode::BadValue, "rounds must be >= 1");
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw Error(ErrorCode::BadValue, "level must lie in (0, 1)");
  if (cfg.estimators.empty()) throw Error(ErrorCode::Empty, "no estimators requested");
  if (cfg.dims.empty()) throw Error(ErrorCode::Empty, "no panel dimensions requested");

  const double z = normal_quantile(0.5 * (1.0 + cfg.level));
  const std::size_t n_est = cfg.estimators.size();
  const auto n_rounds = static_cast<std::size_t>(cfg.rounds);
  const std::size_t n_tasks = cfg.dims.size() * n_rounds;

  // records[(task * n_est) + e], filled by whichever worker owns the task.
  std::vector<McRound> records(n_tasks * n_est);
  std::atomic<std::size_t> next{0};

  const auto worker = [&]() {
    for (std::size_t task = next.fetch_add(1); task < n_tasks; task = next.fetch_add(1)) {
      const std::size_t dim = task / n_rounds;
      const std::size_t round = task % n_rounds;
      DgpSpec s = spec;
      s.n = cfg.dims[dim].first;
      s.t = cfg.dims[dim].second;
      s.seed = stream_seed(cfg.seed, (static_cast<std::uint64_t>(dim) << 32) | static_cast<std::uint64_t>(round));
      std::optional<SimulatedPanel> panel;
      try {
        panel = generate(s);
      } catch (const std::exception&) {
      }
      for (std::size_t e = 0; e < n_est; ++e) {
        McRound& rec = records[task * n_est + e];
        rec.estimator = std::string(to_string(cfg.estimators[e]));
        rec.n = s.n;
        rec.t = s.t;
        rec.round = static_cast<Index>(round);
        if (!panel) {
          rec.failed = true;
          continue;
        }
        try {
          const EstimateResult res =
              run_estimator(cfg.estimators[e], panel->data, &panel->truth.effects, cfg.estimator_config);
          rec.beta = res.beta(0);
          rec.se = res.se(0);
          rec.covered = std::abs(rec.beta - spec.beta0) <= z * rec.se;
          rec.failed = !std::isfinite(rec.beta) || !std::isfinite(rec.se);
        } catch (const std::exception&) {
          rec.failed = true;
        }
      }
    }
  };

  const int threads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(n_tasks)));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  McSummary summary;
  for (std::size_t dim = 0; dim < cfg.dims.size(); ++dim) {
    for (std::size_t e = 0; e < n_est; ++e) {
      McRow row;
      row.estimator = std::string(to_string(cfg.estimators[e]));
      row.n = cfg.dims[dim].first;
      row.t = cfg.dims[dim].second;
      Kahan beta_sum, se_sum, cover_sum;
      for (std::size_t r = 0; r < n_rounds; ++r) {
        const McRound& rec = records[(dim * n_rounds + r) * n_est + e];
        if (rec.failed) {
          ++row.failures;
          continue;
        }
        ++row.rounds;
        beta_sum.add(rec.beta);
        se_sum.add(rec.se);
        cover_sum.add(rec.covered ? 1.0 : 0.0);
      }
      if (row.rounds > 0) {
        const auto m = static_cast<double>(row.rounds);
        const double mean = beta_sum.sum / m;
        Kahan dev2, err2;
        for (std::size_t r = 0; r < n_rounds; ++r) {
          const McRound& rec = records[(dim * n_rounds + r) * n_est + e];
          if (rec.failed) continue;
          dev2.add((rec.beta - mean) * (rec.beta - mean));
          err2.add((rec.beta - spec.beta0) * (rec.beta - spec.beta0));
        }
        row.bias = mean - spec.beta0;
        row.rmse = std::sqrt(err2.sum / m);
        row.sd_beta = std::sqrt(dev2.sum / m);
        row.coverage = cover_sum.sum / m;
        row.mean_se = se_sum.sum / m;
      } else {
        row.bias = row.rmse = row.coverage = row.mean_se = row.sd_beta = std::nan("");
      }
      summary.rows.push_back(std::move(row));
    }
  }
  // Per-round records in (dims, estimator, round) order.
  for (std::size_t dim = 0; dim < cfg.dims.size(); ++dim)
    for (std::size_t e = 0; e < n_est; ++e)
      for (std::size_t r = 0; r < n_rounds; ++r) summary.rounds.push_back(records[(dim * n_rounds + r) * n_est + e]);
  return summary;
}

}  // namespace twoway
