#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "twoway/neyman.hpp"

namespace twoway {

enum class DgpFamily { Main, Multidim, Simple, SimpleRe };
enum class EffectLaw { UniformSym, UniformPos };

std::string_view to_string(DgpFamily family);
DgpFamily parse_dgp(std::string_view name);

struct DgpSpec {
  DgpFamily family = DgpFamily::Main;
  Index n = 100;
  Index t = 100;
  Index d = 1;
  std::optional<double> theta;  // main: 1/2; multidim: 1/2 (d=2), 1 (d=3)
  double beta0 = 2.0;
  std::uint64_t seed = 0;
  std::optional<EffectLaw> law;  // simple families force UniformPos
  double re_scale = 1.0;         // sd of the random effects in simple_re
  bool noiseless = false;        // drop eps and eta
};

struct Truth {
  EffectTruth effects;  // rows follow the generated (permuted) unit order
  Matrix g;             // N x T
  Matrix g_x;           // N x T
  std::vector<Index> permutation;  // row i of the panel is original unit permutation[i]
};

struct SimulatedPanel {
  PanelData data;
  Truth truth;
};

using Rng = std::mt19937_64;

/// splitmix64 finalizer; the per-stream seed derivation.
std::uint64_t splitmix64(std::uint64_t x);
/// Seed of stream `index` under a master seed.
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index);

enum class NoiseKind { Eta, Eps };

struct NoisePair {
  Matrix eta;
  Matrix eps;
};

/// Spatial MA(1)-in-both-directions noise. eta carries an extra N(0, 4)
/// term; eps is driven by nu ~ N(0, eta^2) using the standardized eta. Each
/// output has mean zero and unit sample variance.
NoisePair gen_noise_pair(Index n, Index t, Rng& rng);
Matrix gen_spatial_ma_noise(Index n, Index t, NoiseKind kind, std::uint64_t seed);

/// Centers m and rescales to sample variance `variance` (divisor NT).
void normalize_variance(Matrix& m, double variance);

SimulatedPanel gen_dgp_main(const DgpSpec& spec);
SimulatedPanel gen_dgp_multidim(const DgpSpec& spec);
SimulatedPanel gen_dgp_simple(const DgpSpec& spec);
SimulatedPanel gen_dgp_simple_re(const DgpSpec& spec);
SimulatedPanel generate(const DgpSpec& spec);

struct McConfig {
  Index rounds = 100;
  std::vector<EstimatorId> estimators{EstimatorId::Oracle, EstimatorId::Factor, EstimatorId::Ww};
  std::vector<std::pair<Index, Index>> dims{{100, 100}};
  double level = 0.95;
  std::uint64_t seed = 1;
  int threads = 1;
  EstimatorConfig estimator_config;
};

struct McRow {
  std::string estimator;
  Index n = 0;
  Index t = 0;
  Index rounds = 0;  // successful rounds
  double bias = 0.0;
  double rmse = 0.0;
  double coverage = 0.0;
  double mean_se = 0.0;
  double sd_beta = 0.0;
  Index failures = 0;
};

struct McRound {
  std::string estimator;
  Index n = 0;
  Index t = 0;
  Index round = 0;
  double beta = 0.0;
  double se = 0.0;
  bool covered = false;
  bool failed = false;
};

struct McSummary {
  std::vector<McRow> rows;
  std::vector<McRound> rounds;
};

/// Monte Carlo over cfg.dims x rounds. Round r at dims index j draws its
/// panel from stream_seed(cfg.seed, j * 2^32 + r), so results do not depend
/// on cfg.threads. Failed estimator runs are counted and excluded.
McSummary run_monte_carlo(const McConfig& cfg, const DgpSpec& spec);

}  // namespace twoway
