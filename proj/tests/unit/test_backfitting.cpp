#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "twoway/backfitting.hpp"
#include "twoway/simulation.hpp"

using namespace twoway;

namespace {

SmootherPair random_pair(Index n, Index t, unsigned seed, double h = 0.8) {
  return {nw_weights(oracle::random_matrix(static_cast<int>(n), 1, seed), h),
          nw_weights(oracle::random_matrix(static_cast<int>(t), 1, seed + 1), h)};
}

Matrix uniform_grid(Index n) {
  Matrix p(n, 1);
  for (Index i = 0; i < n; ++i) p(i, 0) = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  return p;
}

}  // namespace

TEST_CASE("a single term leaves (I - S1) Z0 (I - S2)'") {
  const Matrix z = oracle::random_matrix(6, 5, 1);
  const SmootherPair p = random_pair(6, 5, 2);
  const BackfitState st = backfit_pass(z, std::span<const SmootherPair>(&p, 1));
  const Matrix z0 = z.array() - z.mean();
  const Matrix expect = (Matrix::Identity(6, 6) - p.rows.weights) * z0 * (Matrix::Identity(5, 5) - p.cols.weights).transpose();
  CHECK((st.residual - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("an identity smoother absorbs everything") {
  const Matrix z = oracle::random_matrix(5, 4, 3);
  SmootherPair id{SmootherMatrix{Matrix::Identity(5, 5)}, random_pair(5, 4, 4).cols};
  std::vector<SmootherPair> pairs{id, random_pair(5, 4, 5)};
  const BackfitState st = backfit_pass(z, pairs);
  CHECK(st.residual.cwiseAbs().maxCoeff() < 1e-14);
  CHECK(st.fitted[1].cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("two-term backfit matches a step-by-step oracle") {
  const Matrix z = oracle::random_matrix(4, 4, 6);
  std::vector<SmootherPair> pairs{random_pair(4, 4, 7, 0.6), random_pair(4, 4, 9, 1.1)};
  const BackfitState st = backfit_pass(z, pairs);
  Matrix r = z;
  double mean = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int t = 0; t < 4; ++t) mean += z(i, t) / 16.0;
  for (int i = 0; i < 4; ++i)
    for (int t = 0; t < 4; ++t) r(i, t) -= mean;
  for (const auto& p : pairs) r = r - oracle::two_way(r, p.rows.weights, p.cols.weights);
  CHECK((st.residual - r).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("backfit decomposition is exact") {
  const Matrix z = 3.0 + oracle::random_matrix(9, 7, 10).array();
  std::vector<SmootherPair> pairs{random_pair(9, 7, 11), random_pair(9, 7, 13), random_pair(9, 7, 15)};
  const BackfitState st = backfit_pass(z, pairs);
  Matrix rebuilt = st.residual.array() + st.mean;
  for (const auto& f : st.fitted) rebuilt += f;
  CHECK((rebuilt - z).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("backfit rejects smoothers of the wrong size") {
  const SmootherPair p = random_pair(4, 4, 17);
  CHECK_THROWS_AS(backfit_pass(Matrix::Zero(5, 4), std::span<const SmootherPair>(&p, 1)), Error);
}

TEST_CASE("residualize reports summed traces") {
  const Matrix y = oracle::random_matrix(6, 6, 18);
  std::vector<SmootherPair> pairs{random_pair(6, 6, 19), random_pair(6, 6, 21)};
  const ResidualizedPanel r = residualize(validate_panel(y, {y}), pairs);
  CHECK(r.trace_w1 == doctest::Approx(pairs[0].rows.weights.trace() + pairs[1].rows.weights.trace()));
  CHECK(r.trace_w2 == doctest::Approx(pairs[0].cols.weights.trace() + pairs[1].cols.weights.trace()));
  CHECK((r.y - r.x[0]).norm() == 0.0);
}

TEST_CASE("WW on a panel without effects stays close to pooled OLS") {
  const Matrix x = oracle::random_matrix(100, 100, 22);
  const Matrix y = 2.0 * x + oracle::random_matrix(100, 100, 23);
  const PanelData p = validate_panel(y, {x});
  WwOptions o;
  o.rank_first_step = 5;
  o.h_lambda = o.h_f = 0.5;
  const WwResult r = ww_residualize(p, o);
  CHECK(std::abs(r.beta(0) - pooled_ols(y, {x})(0)) < 0.05);
  CHECK(r.residual_norms.size() == static_cast<std::size_t>(r.outer_iterations));
}

TEST_CASE("smoothing bias shrinks when the bandwidth is halved") {
  const Index n = 200;
  const Matrix a = uniform_grid(n);
  const Matrix g_eff = uniform_grid(n);
  Matrix g(n, n), gx(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index t = 0; t < n; ++t) {
      g(i, t) = std::exp(a(i, 0) * g_eff(t, 0)) + std::sin(3.0 * a(i, 0)) * g_eff(t, 0);
      gx(i, t) = a(i, 0) * a(i, 0) + g_eff(t, 0);
    }
  const Matrix x = gx + oracle::random_matrix(static_cast<int>(n), static_cast<int>(n), 24);
  const PanelData p = validate_panel(2.0 * x + g, {x});
  double previous = 0.0;
  for (double h : {0.2, 0.1, 0.05}) {
    WwOptions o;
    o.init = ProxyInit::Supplied;
    o.supplied_lambda = a;
    o.supplied_f = g_eff;
    o.rank_second_step = 1;
    o.max_outer = 1;
    o.h_lambda = o.h_f = h;
    const WwResult r = ww_residualize(p, o);
    const double err = (r.panel.y - 2.0 * r.panel.x[0]).norm() / p.y.norm();
    if (previous > 0.0) CHECK(err < 0.5 * previous);
    previous = err;
  }
}

TEST_CASE("identical proxies give bit-identical residuals") {
  DgpSpec spec;
  spec.n = spec.t = 30;
  spec.seed = 25;
  const SimulatedPanel sim = gen_dgp_main(spec);
  WwOptions o;
  o.rank_first_step = 3;
  o.rank_second_step = 2;
  const WwResult a = ww_residualize(sim.data, o);
  const WwResult b = ww_residualize(sim.data, o);
  CHECK(a.panel.y == b.panel.y);
  CHECK(a.beta == b.beta);

  WwOptions s;
  s.init = ProxyInit::Supplied;
  s.supplied_lambda = a.lambda;
  s.supplied_f = a.f;
  s.rank_second_step = 2;
  s.max_outer = 1;
  const WwResult c = ww_residualize(sim.data, s);
  const WwResult d = ww_residualize(sim.data, s);
  CHECK(c.panel.y == d.panel.y);
  CHECK(c.panel.x[0] == d.panel.x[0]);
}

TEST_CASE("oracle WW with a constant effect uses a uniform unit smoother") {
  const Matrix y = oracle::random_matrix(6, 5, 26);
  const PanelData p = validate_panel(y, {y});
  const Matrix gamma = oracle::random_matrix(5, 1, 27);
  const ResidualizedPanel r = oracle_ww(p, Matrix::Zero(6, 1), gamma, 0.5);
  const Matrix s2 = nw_weights(gamma, 0.5).weights;
  const Matrix z0 = y.array() - y.mean();
  const Matrix centred = z0.rowwise() - z0.colwise().mean();
  CHECK((r.y - centred * (Matrix::Identity(5, 5) - s2).transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("oracle WW equals WW with supplied proxies and one pass") {
  DgpSpec spec;
  spec.n = spec.t = 20;
  spec.seed = 28;
  const SimulatedPanel sim = gen_dgp_main(spec);
  const ResidualizedPanel o = oracle_ww(sim.data, sim.truth.effects.alpha, sim.truth.effects.gamma, 0.3);
  WwOptions s;
  s.init = ProxyInit::Supplied;
  s.supplied_lambda = sim.truth.effects.alpha;
  s.supplied_f = sim.truth.effects.gamma;
  s.rank_second_step = 1;
  s.max_outer = 1;
  s.h_lambda = s.h_f = 0.3;
  const WwResult w = ww_residualize(sim.data, s);
  CHECK(o.y == w.panel.y);
  CHECK(o.x[0] == w.panel.x[0]);
}

TEST_CASE("oracle estimator is nearly unbiased on the main design") {
  McConfig mc;
  mc.rounds = 20;
  mc.estimators = {EstimatorId::Oracle};
  mc.seed = 29;
  DgpSpec spec;
  const McSummary s = run_monte_carlo(mc, spec);
  CHECK(std::abs(s.rows[0].bias) < 0.01);
}
