#include <doctest.h>

#include "oracles.hpp"
#include "twoway/proxies.hpp"
#include "twoway/smoothers.hpp"

using namespace twoway;

TEST_CASE("pseudo-distances have zero diagonal and are symmetric") {
  const PseudoDistances d = zhang_pseudo_distance(oracle::random_matrix(6, 5, 1));
  CHECK(d.rows.diagonal().isZero(0.0));
  CHECK(d.cols.diagonal().isZero(0.0));
  CHECK(d.rows == d.rows.transpose());
  CHECK(d.cols.minCoeff() >= 0.0);
}

TEST_CASE("duplicate rows are at distance zero") {
  Matrix m(3, 3);
  m << 2, 0, 0, 2, 0, 0, 0, 2, 0;
  const PseudoDistances d = zhang_pseudo_distance(m);
  CHECK(d.rows(0, 1) == 0.0);
  CHECK(d.rows(0, 2) > 0.0);
}

TEST_CASE("pseudo-distances match a triple-loop oracle on an integer matrix") {
  Matrix m(4, 3);
  m << 1, -2, 3, 0, 4, -1, 2, 2, 5, -3, 1, 0;
  const PseudoDistances d = zhang_pseudo_distance(m);
  CHECK((d.rows - oracle::pseudo_rows(m)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((d.cols - oracle::pseudo_cols(m)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("pseudo-distances need at least three units and periods") {
  try {
    zhang_pseudo_distance(Matrix::Ones(2, 5));
    FAIL("expected TooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooSmall);
  }
}

TEST_CASE("medoids") {
  Matrix p(6, 1);
  p << 0, 0.1, 0.2, 10, 10.1, 10.2;
  Matrix dist(6, 6);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j) dist(i, j) = std::abs(p(i) - p(j));
  CHECK(medoids(dist, 2) == std::vector<Index>{1, 4});
  CHECK(medoids(dist, 1).size() == 1);
  CHECK(medoids(dist, 3).size() == 3);
  CHECK_THROWS_AS(medoids(dist, 0), Error);
}

TEST_CASE("constant outcome gives zero pseudo proxies and a uniform smoother") {
  const Matrix y = Matrix::Constant(5, 4, 3.0);
  const ProxySet s = pseudo_proxy_set(validate_panel(y, {y}));
  CHECK(s.row_proxies.isZero(0.0));
  CHECK(s.row_proxies.cols() == 4);
  CHECK(s.source == ProxySource::Pseudo);
  const SmootherMatrix w = nw_weights(s.row_proxies, 0.5);
  CHECK((w.weights.array() - 0.2).abs().maxCoeff() < 1e-15);
}

TEST_CASE("permuting units permutes the pseudo proxies") {
  const Matrix y = oracle::random_matrix(7, 6, 2);
  const Matrix x = oracle::random_matrix(7, 6, 3);
  const ProxySet base = pseudo_proxy_set(validate_panel(y, {x}));
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(7);
  perm.indices() << 3, 0, 6, 1, 5, 2, 4;
  const ProxySet moved = pseudo_proxy_set(validate_panel(perm * y, {perm * x}));
  const Matrix expect = perm * base.row_proxies;
  for (Index s = 0; s < 2; ++s) {
    const Matrix got = moved.row_proxies.middleCols(2 * s, 2);
    const Matrix want = expect.middleCols(2 * s, 2);
    const bool same = (got - want).cwiseAbs().maxCoeff() < 1e-12;
    const bool swapped = (got - want.rowwise().reverse()).cwiseAbs().maxCoeff() < 1e-12;
    CHECK((same || swapped));
  }
  CHECK((moved.col_proxies - base.col_proxies).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("moment proxies") {
  const Matrix c = Matrix::Constant(4, 5, 2.5);
  const ProxySet s = moment_proxy_set(validate_panel(c, {c}));
  CHECK((s.row_proxies.col(0).array() - 2.5).abs().maxCoeff() < 1e-15);

  Vector alpha(4), gamma(5);
  alpha << 0.3, -1.0, 2.0, 0.7;
  gamma << -1.0, 0.5, 0.0, 0.25, 0.25;
  const Matrix y = alpha.replicate(1, 5) + gamma.transpose().replicate(4, 1);
  const ProxySet m = moment_proxy_set(validate_panel(y, {c}));
  CHECK((m.row_proxies.col(0) - alpha).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(m.row_proxies.cols() == 2);
  CHECK(m.col_proxies.rows() == 5);
}

TEST_CASE("standardize_columns") {
  Matrix m(4, 2);
  m << 1, 5, 2, 5, 3, 5, 6, 5;
  const Matrix s = standardize_columns(m);
  CHECK(std::abs(s.col(0).mean()) < 1e-15);
  CHECK(s.col(0).squaredNorm() / 4.0 == doctest::Approx(1.0));
  CHECK(s.col(1).isZero(0.0));
}
