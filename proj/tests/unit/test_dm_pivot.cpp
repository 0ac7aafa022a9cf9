#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "qrdm/dm_pivot.hpp"
#include "qrdm/svd_oracle.hpp"
#include "support/oracles.hpp"

using namespace qrdm;
using M = Matrix<double>;
using V = Vector<double>;

namespace {

// Columns with norms spread over [lo, 1] and random directions.
M spread_columns(Index m, Index n, double lo, std::mt19937_64& rng) {
  M c = oracle::random_matrix(m, n, rng);
  std::uniform_real_distribution<double> scale(lo, 1.0);
  for (Index j = 0; j < n; ++j) c.col(j) *= scale(rng) / c.col(j).norm();
  return c;
}

}  // namespace

TEST_CASE("candidate_set: uniform norms") {
  V u(3);
  u << 1, 1, 1;
  const auto c = candidate_set(u, 0.5, 64);
  CHECK(c.seed == 0);
  CHECK(c.indices == std::vector<Index>{1, 2});
}

TEST_CASE("candidate_set: threshold excludes everything") {
  V u(3);
  u << 10, 1, 1;
  const auto c = candidate_set(u, 0.5, 64);
  CHECK(c.seed == 0);
  CHECK(c.indices.empty());
  CHECK(c.k_max == 0);
}

TEST_CASE("candidate_set: random norms against filter-and-sort oracle") {
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> val(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    V u(20);
    for (Index i = 0; i < 20; ++i) u(i) = val(rng);
    const auto c = candidate_set(u, 0.15, 4);

    Index seed = 0;
    for (Index i = 0; i < 20; ++i)
      if (u(i) > u(seed)) seed = i;
    std::vector<std::pair<double, Index>> pass;
    for (Index i = 0; i < 20; ++i)
      if (i != seed && u(i) >= 0.15 * u(seed)) pass.push_back({-u(i), i});
    std::sort(pass.begin(), pass.end());
    std::vector<Index> expect;
    for (std::size_t t = 0; t < std::min<std::size_t>(4, pass.size()); ++t) expect.push_back(pass[t].second);

    CHECK(c.seed == seed);
    CHECK(c.indices == expect);
    CHECK(c.k_max == static_cast<Index>(pass.size()));
  }
}

TEST_CASE("candidate_set: zero norms") {
  CHECK_THROWS_AS(candidate_set(V::Zero(3), 0.5, 4), empty_candidate_error);
  CHECK_THROWS_AS(candidate_set(V(0), 0.5, 4), empty_candidate_error);
}

TEST_CASE("cosine_matrix: orthonormal columns") {
  CHECK(cosine_matrix(M::Identity(3, 3)) == M::Identity(3, 3));
}

TEST_CASE("cosine_matrix: 45 degrees") {
  M c(2, 2);
  c << 1, 1 / std::sqrt(2.0), 0, 1 / std::sqrt(2.0);
  const M theta = cosine_matrix(c);
  CHECK(theta(0, 1) == doctest::Approx(0.70710678118654752).epsilon(1e-15));
  CHECK(theta(1, 0) == theta(0, 1));
}

TEST_CASE("cosine_matrix: normalize-then-multiply agrees") {
  std::mt19937_64 rng(42);
  const M c = oracle::random_matrix(16, 5, rng);
  M n = c;
  for (Index j = 0; j < 5; ++j) n.col(j) /= oracle::two_pass_norm(c.col(j));
  const M ref = n.transpose() * n;
  const M theta = cosine_matrix(c);
  CHECK((theta - ref).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(theta.diagonal() == V::Ones(5));
  CHECK(theta == theta.transpose());
}

TEST_CASE("cosine_matrix: zero column") {
  M c = M::Identity(3, 3);
  c.col(1).setZero();
  CHECK_THROWS_AS(cosine_matrix(c), degenerate_column_error);
}

TEST_CASE("dm_select: identity selects everything") {
  DMParams<double> p;
  p.tau = 0.5;
  p.delta = 0.5;
  const M a = M::Identity(3, 3);
  const auto sel = dm_select(a, column_norms(a), p);
  REQUIRE(sel.has_value());
  CHECK(sel->indices == std::vector<Index>{0, 1, 2});
  CHECK(sel->gamma == 1.0);
}

TEST_CASE("dm_select: duplicate column is rejected") {
  M a(4, 3);
  a << 1, 0, 1,  //
      2, 1, 2,   //
      0, 3, 0,   //
      1, 0, 1;
  DMParams<double> p;
  p.delta = 0.9;
  const auto sel = dm_select(a, column_norms(a), p);
  REQUIRE(sel.has_value());
  const auto& j = sel->indices;
  CHECK(!(std::count(j.begin(), j.end(), 0) && std::count(j.begin(), j.end(), 2)));
}

TEST_CASE("dm_select: random 12x8 satisfies every pairwise constraint") {
  std::mt19937_64 rng(43);
  DMParams<double> p;  // tau 0.15, delta 0.9
  for (int trial = 0; trial < 100; ++trial) {
    const M a = oracle::random_matrix(12, 8, rng);
    const V u = column_norms(a);
    const auto sel = dm_select(a, u, p);
    REQUIRE(sel.has_value());
    const auto& j = sel->indices;
    REQUIRE(!j.empty());
    CHECK(u(j[0]) == u.maxCoeff());
    for (std::size_t x = 0; x < j.size(); ++x) {
      CHECK(u(j[x]) >= 0.15 * u.maxCoeff());
      for (std::size_t y = x + 1; y < j.size(); ++y) {
        CHECK(j[x] != j[y]);
        const double cos = a.col(j[x]).dot(a.col(j[y])) / (a.col(j[x]).norm() * a.col(j[y]).norm());
        CHECK(std::abs(cos) < 0.9);
      }
    }
  }
}

TEST_CASE("dm_select: size bounds and determinism") {
  std::mt19937_64 rng(44);
  for (Index kdm : {1, 2, 3, 64}) {
    DMParams<double> p;
    p.k_dm = kdm;
    const M a = spread_columns(10, 12, 0.05, rng);
    const V u = column_norms(a);
    const auto sel = dm_select(a, u, p);
    REQUIRE(sel.has_value());
    const auto cand = candidate_set(u, p.tau, p.k_dm);
    CHECK(static_cast<Index>(sel->indices.size()) >= 1);
    CHECK(static_cast<Index>(sel->indices.size()) <= std::min(cand.k_max, kdm) + 1);
    CHECK(dm_select(a, u, p)->indices == sel->indices);
  }
}

TEST_CASE("dm_select: delta zero gives a singleton") {
  std::mt19937_64 rng(45);
  const M a = oracle::random_matrix(8, 6, rng);
  DMParams<double> p;
  p.delta = 0.0;
  const auto sel = dm_select(a, column_norms(a), p);
  REQUIRE(sel.has_value());
  CHECK(sel->indices.size() == 1);
}

TEST_CASE("dm_select: norm floor triggers fallback") {
  const M a = 1e-20 * M::Identity(3, 3);
  DMParams<double> p;
  CHECK_FALSE(dm_select(a, column_norms(a), p, 1e-10).has_value());
  CHECK_FALSE(dm_select(M::Zero(3, 3), V::Zero(3), p).has_value());
}

TEST_CASE("dm_select: delta_max regime is diagonally dominant") {
  std::mt19937_64 rng(46);
  DMParams<double> p;
  p.use_delta_max = true;
  for (int trial = 0; trial < 100; ++trial) {
    const M a = spread_columns(30, 20, 0.1, rng);
    const auto sel = dm_select(a, column_norms(a), p);
    REQUIRE(sel.has_value());
    CHECK(sel->gamma > 1.0 - p.tau * p.tau);
  }
}

TEST_CASE("DMParams: validation") {
  DMParams<double> p;
  CHECK_NOTHROW(p.validate());
  p.tau = 0.0;
  CHECK_THROWS_AS(p.validate(), contract_error);
  p.tau = 0.5;
  p.delta = 1.0;
  CHECK_THROWS_AS(p.validate(), contract_error);
  p.delta = 0.5;
  p.k_dm = 0;
  CHECK_THROWS_AS(p.validate(), contract_error);
}

TEST_CASE("lemma1_certificate: orthonormal columns are tight") {
  const auto cert = lemma1_certificate(M::Identity(2, 2), 1.0);
  CHECK(cert.holds);
  CHECK(cert.gamma == 1.0);
  CHECK(cert.bound == 1.0);
  CHECK(cert.bound <= sigma_min(M::Identity(2, 2)) * (1 + 1e-15));
}

TEST_CASE("lemma1_certificate: hypothesis violated") {
  M c(2, 2);
  c << 1, 1, 0, 0.1;  // cosine about 0.995
  const auto cert = lemma1_certificate(c, 0.5);
  CHECK(cert.gamma <= 1 - 0.25);
  CHECK_FALSE(cert.holds);
  CHECK(cert.bound == 0.0);
}

TEST_CASE("lemma1_certificate: random delta_max selections obey the bound") {
  std::mt19937_64 rng(47);
  DMParams<double> p;
  p.use_delta_max = true;
  int certified = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const M a = spread_columns(24, 16, 0.1, rng);
    const auto sel = dm_select(a, column_norms(a), p);
    REQUIRE(sel.has_value());
    M c(a.rows(), static_cast<Index>(sel->indices.size()));
    for (std::size_t t = 0; t < sel->indices.size(); ++t) c.col(static_cast<Index>(t)) = a.col(sel->indices[t]);
    const auto cert = lemma1_certificate(c, p.tau);
    CHECK(cert.holds);
    certified += cert.holds;
    CHECK(cert.bound <= oracle::reference_sigmas(c).minCoeff() * (1 + 1e-12));
  }
  CHECK(certified == 50);
}
