#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "qrdm/householder.hpp"
#include "support/oracles.hpp"

using namespace qrdm;
using M = Matrix<double>;
using V = Vector<double>;

namespace {

std::vector<Reflector<double>> random_reflectors(Index m, Index k, std::mt19937_64& rng) {
  std::vector<Reflector<double>> hs;
  for (Index i = 0; i < k; ++i) hs.push_back(make_reflector(oracle::random_vector(m - i, rng)).reflector);
  return hs;
}

M dense_product(const std::vector<Reflector<double>>& hs, Index m) {
  std::vector<V> vs;
  std::vector<double> cs;
  for (const auto& h : hs) {
    vs.push_back(h.v);
    cs.push_back(h.coeff);
  }
  return oracle::dense_reflector_product(vs, cs, m);
}

}  // namespace

TEST_CASE("make_reflector: unit vector") {
  V x(3);
  x << 1, 0, 0;
  const auto r = make_reflector(x);
  CHECK(r.beta == -1.0);
  const V hx = r.reflector.explicit_matrix() * x;
  CHECK(hx(0) == doctest::Approx(-1.0));
  CHECK(std::abs(hx(1)) < 1e-16);
  CHECK(std::abs(hx(2)) < 1e-16);
}

TEST_CASE("make_reflector: 3-4-5") {
  V x(2);
  x << 3, 4;
  CHECK(std::abs(make_reflector(x).beta) == doctest::Approx(5.0));
}

TEST_CASE("make_reflector: zero vector gives the identity") {
  const auto r = make_reflector(V::Zero(4));
  CHECK(r.reflector.coeff == 0.0);
  CHECK(r.beta == 0.0);
  CHECK(r.reflector.explicit_matrix() == M::Identity(4, 4));
}

TEST_CASE("make_reflector: random length 9 annihilates the tail") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    const V x = oracle::random_vector(9, rng);
    const auto r = make_reflector(x);
    const V hx = r.reflector.explicit_matrix() * x;
    CHECK(hx.tail(8).cwiseAbs().maxCoeff() <= 1e-14 * x.norm());
    CHECK(hx(0) == doctest::Approx(r.beta).epsilon(1e-14));
    CHECK(r.reflector.coeff >= 0.0);
    CHECK(r.reflector.coeff <= 2.0);
    // Sign opposite to x(0).
    CHECK(r.beta * x(0) <= 0.0);
    const M h = r.reflector.explicit_matrix();
    CHECK((h.transpose() * h - M::Identity(9, 9)).cwiseAbs().maxCoeff() <= 16 * oracle::ulp * 9);
  }
}

TEST_CASE("make_reflector: matches the dense textbook reflector") {
  std::mt19937_64 rng(22);
  const V x = oracle::random_vector(6, rng);
  const M ref = oracle::dense_householder(x);
  CHECK((make_reflector(x).reflector.explicit_matrix() - ref).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("accumulate_wy: empty list") {
  std::vector<Reflector<double>> none;
  CHECK_THROWS_AS(accumulate_wy<double>(none), contract_error);
}

TEST_CASE("accumulate_wy: single reflector") {
  std::mt19937_64 rng(23);
  const auto hs = random_reflectors(5, 1, rng);
  const auto block = accumulate_wy<double>(hs);
  CHECK(block.Y.col(0) == hs[0].v);
  CHECK(block.W.rows() == 1);
  CHECK(block.W(0, 0) == hs[0].coeff);
}

TEST_CASE("accumulate_wy: two orthogonal-direction reflectors") {
  V a = V::Zero(4), b = V::Zero(3);
  a << 1, 1, 0, 0;
  b << 0, 1, 1;
  std::vector<Reflector<double>> hs{make_reflector(a).reflector, make_reflector(b).reflector};
  const auto block = accumulate_wy<double>(hs);
  CHECK((block.explicit_q() - dense_product(hs, 4)).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("accumulate_wy: k=8 on m=32 matches the dense product") {
  std::mt19937_64 rng(24);
  const auto hs = random_reflectors(32, 8, rng);
  const auto block = accumulate_wy<double>(hs);
  const M q = block.explicit_q();
  CHECK((q - dense_product(hs, 32)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((q.transpose() * q - M::Identity(32, 32)).cwiseAbs().maxCoeff() <= 64 * oracle::ulp * 32 * 8);
  CHECK(block.W.isUpperTriangular());
}

TEST_CASE("accumulate_wy: lengths must descend") {
  std::mt19937_64 rng(25);
  std::vector<Reflector<double>> hs{make_reflector(oracle::random_vector(5, rng)).reflector,
                                    make_reflector(oracle::random_vector(5, rng)).reflector};
  CHECK_THROWS_AS(accumulate_wy<double>(hs), contract_error);
}

TEST_CASE("accumulate_wy_packed agrees with accumulate_wy") {
  std::mt19937_64 rng(26);
  M panel = oracle::random_matrix(10, 3, rng);
  std::vector<double> coeffs;
  std::vector<Reflector<double>> hs;
  for (Index i = 0; i < 3; ++i) {
    coeffs.push_back(householder_in_place(panel.col(i).tail(10 - i)));
    Reflector<double> h;
    h.v = panel.col(i).tail(10 - i);
    h.v(0) = 1.0;
    h.coeff = coeffs.back();
    hs.push_back(h);
  }
  const auto packed = accumulate_wy_packed(panel, std::span<const double>(coeffs));
  const auto listed = accumulate_wy<double>(hs);
  CHECK((packed.explicit_q() - listed.explicit_q()).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("apply_block_left: identity block leaves C unchanged") {
  std::vector<Reflector<double>> hs{make_reflector(V::Zero(5)).reflector, make_reflector(V::Zero(4)).reflector};
  const auto block = accumulate_wy<double>(hs);
  std::mt19937_64 rng(27);
  const M c0 = oracle::random_matrix(5, 3, rng);
  M c = c0;
  apply_block_left(block, c);
  CHECK(c == c0);
}

TEST_CASE("apply_block_left: k=1 equals the scalar reflector") {
  std::mt19937_64 rng(28);
  const auto hs = random_reflectors(7, 1, rng);
  const M c0 = oracle::random_matrix(7, 4, rng);
  M c1 = c0, c2 = c0;
  apply_block_left(accumulate_wy<double>(hs), c1);
  apply_reflector_left(hs[0], c2);
  CHECK((c1 - c2).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("apply_block_left: random block against explicit Q^T C") {
  std::mt19937_64 rng(29);
  const auto hs = random_reflectors(20, 5, rng);
  const auto block = accumulate_wy<double>(hs);
  const M c0 = oracle::random_matrix(20, 6, rng);
  M c = c0;
  apply_block_left(block, c);
  const M ref = dense_product(hs, 20).transpose() * c0;
  CHECK((c - ref).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(std::abs(c.norm() - c0.norm()) <= 1e-13 * c0.norm());
}

TEST_CASE("apply_block_left: one-by-one equals blocked on 64x64") {
  std::mt19937_64 rng(30);
  const auto hs = random_reflectors(64, 16, rng);
  const M c0 = oracle::random_matrix(64, 64, rng);
  M blocked = c0, serial = c0;
  apply_block_left(accumulate_wy<double>(hs), blocked);
  // Q^T C = H_k ... H_1 C: apply H_1 first.
  for (Index i = 0; i < 16; ++i) apply_reflector_left(hs[i], serial.bottomRows(64 - i));
  CHECK((blocked - serial).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("apply_block_left: dimension mismatch") {
  std::mt19937_64 rng(31);
  const auto block = accumulate_wy<double>(random_reflectors(6, 2, rng));
  M c(5, 2);
  CHECK_THROWS_AS(apply_block_left(block, c), contract_error);
}

TEST_CASE("apply_reflector_left: dimension mismatch") {
  M c(4, 2);
  CHECK_THROWS_AS(apply_reflector_left(V::Zero(2), 1.0, c), contract_error);
}
