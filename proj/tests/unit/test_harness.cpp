#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <limits>
#include <numbers>
#include <set>
#include <sstream>

#include "qrdm/harness/generators.hpp"
#include "qrdm/harness/matrix_market.hpp"
#include "qrdm/harness/report.hpp"
#include "qrdm/svd_oracle.hpp"
#include "support/oracles.hpp"

using namespace qrdm;
using namespace qrdm::harness;
using M = Matrix<double>;
using V = Vector<double>;

namespace {

M parse(const std::string& text) {
  std::istringstream in(text);
  return read_matrix_market(in);
}

std::size_t parse_error_line(const std::string& text) {
  try {
    (void)parse(text);
  } catch (const parse_error& e) {
    return e.line();
  }
  return 0;
}

std::vector<RunConfig> all_algorithms() {
  std::vector<RunConfig> out;
  for (Algorithm a : {Algorithm::QRP, Algorithm::QRDM, Algorithm::QRDM2}) {
    RunConfig c;
    c.algo = a;
    out.push_back(c);
  }
  return out;
}

}  // namespace

TEST_CASE("kahan: small examples") {
  const M k2 = kahan_matrix(2, std::numbers::pi / 2);
  CHECK((k2 - M::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-15);

  const M k3 = kahan_matrix_c(3, 0.5);
  const double s = std::sqrt(0.75);
  M expect(3, 3);
  expect << 1, -0.5, -0.5, 0, s, -0.5 * s, 0, 0, s * s;
  CHECK((k3 - expect).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("kahan: structure and argument checks") {
  const M k = kahan_matrix_c(10, 0.2);
  CHECK(k.isUpperTriangular());
  for (Index i = 1; i < 10; ++i) CHECK(k(i, i) < k(i - 1, i - 1));
  for (Index j = 0; j < 10; ++j) CHECK(k.col(j).norm() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK_THROWS_AS(kahan_matrix(1, 1.0), contract_error);
  CHECK_THROWS_AS(kahan_matrix(4, 0.0), contract_error);
  CHECK_THROWS_AS(kahan_matrix(4, 2.0), contract_error);
}

TEST_CASE("random_rank_deficient: rank zero is the zero matrix") {
  const M a = random_rank_deficient(10, 10, 0, std::numeric_limits<double>::infinity(), 5);
  CHECK(a.cwiseAbs().maxCoeff() == 0.0);
  CHECK(jacobi_svd(a).numerical_rank == 0);
  for (Algorithm algo : {Algorithm::QRP, Algorithm::QRDM, Algorithm::QRDM2}) {
    CHECK(factorize<double>(a, algo, DMParams<double>{}).rank == 0);
  }
}

TEST_CASE("random_rank_deficient: 60x40 rank 15") {
  const M a = random_rank_deficient(60, 40, 15, 1e10, 9);
  CHECK(a.rows() == 60);
  CHECK(a.cols() == 40);
  CHECK(jacobi_svd(a).numerical_rank == 15);
}

TEST_CASE("random_rank_deficient: spectrum matches the prescription") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const V want = prescribed_spectrum(30, 20, 8, 1e6, 1e3);
    const V got = jacobi_svd(random_rank_deficient(30, 20, 8, 1e6, seed, 1e3)).sigmas;
    CHECK((got - want).cwiseAbs().maxCoeff() <= 1e-12 * want(0));
    // The well separated leading values are also relatively accurate.
    for (Index i = 0; i < 8; ++i) CHECK(std::abs(got(i) - want(i)) <= 1e-12 * want(i));
  }
  const V big = prescribed_spectrum(50, 40, 20, 1e8, 1e8);
  const V got = jacobi_svd(random_rank_deficient(50, 40, 20, 1e8, 4, 1e8)).sigmas;
  CHECK((got - big).cwiseAbs().maxCoeff() <= 1e-12 * big(0));
}

TEST_CASE("random_rank_deficient: deterministic in the seed") {
  CHECK(random_rank_deficient(12, 9, 4, 1e8, 3) == random_rank_deficient(12, 9, 4, 1e8, 3));
  CHECK(random_rank_deficient(12, 9, 4, 1e8, 3) != random_rank_deficient(12, 9, 4, 1e8, 4));
}

TEST_CASE("prescribed_spectrum: shape and errors") {
  const V s = prescribed_spectrum(5, 4, 2, 1e3, 1e2);
  CHECK(s.size() == 4);
  CHECK(s(0) == doctest::Approx(1.0));
  CHECK(s(1) == doctest::Approx(1e-2));
  CHECK(s(2) == doctest::Approx(1e-5));
  CHECK(s(3) == doctest::Approx(1e-5));
  CHECK_THROWS_AS(prescribed_spectrum(5, 4, 5, 1e3), contract_error);
  CHECK_THROWS_AS(prescribed_spectrum(5, 4, 2, 0.5), contract_error);
}

TEST_CASE("random_orthogonal: orthogonality") {
  std::mt19937_64 rng(91);
  const M q = random_orthogonal(17, rng);
  CHECK((q.transpose() * q - M::Identity(17, 17)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("generate: spec strings") {
  CHECK(generate("gen:identity:n=3") == M::Identity(3, 3));
  CHECK(generate("gen:kahan:n=5,c=0.2") == kahan_matrix_c(5, 0.2));
  CHECK(generate("gen:random:m=8,n=6,r=3,gap=1e8,seed=2") == random_rank_deficient(8, 6, 3, 1e8, 2));
  CHECK(generate("gen:gaussian:m=4,n=3", 7) == gaussian(4, 3, 7));
  CHECK_THROWS_AS(generate("gen:nothing:n=3"), contract_error);
  CHECK_THROWS_AS(generate("gen:identity:n=x"), contract_error);
  CHECK_THROWS_AS(generate("gen:random:m=8,n=6"), contract_error);
  CHECK_THROWS_AS(generate("identity:n=3"), contract_error);
}

TEST_CASE("fixture_suite: forty distinct reproducible matrices") {
  const auto suite = fixture_suite();
  CHECK(suite.size() == 40);
  std::set<std::string> ids;
  for (const auto& f : suite) {
    ids.insert(f.id);
    CHECK(is_generator_spec(f.generator()));
  }
  CHECK(ids.size() == 40);
  CHECK(std::count_if(suite.begin(), suite.end(), [](const FixtureSpec& f) { return f.kind == "kahan"; }) == 6);
}

TEST_CASE("matrix market: array and coordinate") {
  const M a = parse("%%MatrixMarket matrix array real general\n% comment\n2 2\n1\n2\n3\n4\n");
  M expect(2, 2);
  expect << 1, 3, 2, 4;
  CHECK(a == expect);

  const M c = parse("%%MatrixMarket matrix coordinate real general\n3 2 3\n1 1 5\n3 2 -1\n\n1 1 0.5\n");
  M ce = M::Zero(3, 2);
  ce(0, 0) = 5.5;
  ce(2, 1) = -1;
  CHECK(c == ce);
}

TEST_CASE("matrix market: errors carry the line number") {
  CHECK(parse_error_line("") == 1);
  CHECK(parse_error_line("%%MatrixMarket matrix array complex general\n1 1\n1\n") == 1);
  CHECK(parse_error_line("%%MatrixMarket matrix array real symmetric\n1 1\n1\n") == 1);
  CHECK(parse_error_line("%%MatrixMarket matrix array real general\n2 x\n") == 2);
  CHECK(parse_error_line("%%MatrixMarket matrix array real general\n1 2\n1\n") == 4);
  CHECK(parse_error_line("%%MatrixMarket matrix array real general\n1 1\n1\n2\n") == 4);
  CHECK(parse_error_line("%%MatrixMarket matrix array real general\n1 1\nabc\n") == 3);
  CHECK(parse_error_line("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n") == 3);
  CHECK(parse_error_line("%%MatrixMarket matrix coordinate real general\n2 2 5\n") == 2);
  CHECK(parse_error_line("%%MatrixMarket matrix array real general\n100000 100000\n") == 2);
}

TEST_CASE("matrix market: round trip is exact") {
  std::mt19937_64 rng(92);
  M a = oracle::random_matrix(7, 5, rng);
  a(0, 0) = 1e-300;
  a(1, 1) = -1.0 / 3.0;
  a(2, 2) = 0.0;
  std::stringstream ss;
  write_matrix_market(ss, a);
  CHECK(read_matrix_market(ss) == a);
}

TEST_CASE("compare_run: identity gives unit ratios") {
  const std::vector<MatrixCase> mats{{"eye8", M::Identity(8, 8)}};
  const auto rows = compare_run(all_algorithms(), mats);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.matrix == "eye8");
    CHECK(r.rank_oracle == 8);
    CHECK(r.rank_computed == 8);
    CHECK(*r.ratio_d_min == doctest::Approx(1.0));
    CHECK(*r.ratio_d_max == doctest::Approx(1.0));
    CHECK(*r.ratio_s_min == doctest::Approx(1.0));
    CHECK(*r.ratio_s_max == doctest::Approx(1.0));
    CHECK(r.flags.empty());
    CHECK(r.time_s >= 0.0);
  }
  CHECK(rows[0].algo == "qrp");
  CHECK(rows[1].algo == "qrdm");
  CHECK(rows[2].algo == "qrdm2");
}

TEST_CASE("compare_run: deterministic apart from timings, independent of jobs") {
  std::vector<MatrixCase> mats;
  for (int i = 0; i < 4; ++i) {
    mats.push_back({"r" + std::to_string(i), random_rank_deficient(40, 30, 10 + i, 1e10, 300 + i, 1e4)});
  }
  CompareOptions serial;
  CompareOptions parallel;
  parallel.jobs = 4;
  const auto a = compare_run(all_algorithms(), mats, serial);
  const auto b = compare_run(all_algorithms(), mats, parallel);
  REQUIRE(a.size() == 12);
  REQUIRE(b.size() == 12);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].matrix == b[i].matrix);
    CHECK(a[i].algo == b[i].algo);
    CHECK(a[i].rank_oracle == b[i].rank_oracle);
    CHECK(a[i].rank_computed == b[i].rank_computed);
    CHECK(a[i].ratio_d_min == b[i].ratio_d_min);
    CHECK(a[i].ratio_s_max == b[i].ratio_s_max);
    CHECK(a[i].mean_ks == b[i].mean_ks);
    CHECK(a[i].flags == b[i].flags);
  }
  CHECK(a[0].matrix == "r0");
  CHECK(a[11].matrix == "r3");
}

TEST_CASE("ratio_summary: hand-built diagonal") {
  M a = M::Zero(3, 3);
  a.diagonal() << 4, 2, 1;
  const auto r = qrp<double>(a);
  V sig(3);
  sig << 2, 2, 2;
  const auto s = ratio_summary(r, sig, 3);
  CHECK(s.d_max == doctest::Approx(2.0));
  CHECK(s.d_min == doctest::Approx(0.5));
  CHECK(s.d_ratios.size() == 3);
  CHECK(ratio_summary(r, sig, 0).d_ratios.empty());
}

TEST_CASE("csv: round trip") {
  const std::vector<MatrixCase> mats{{"eye4", M::Identity(4, 4)},
                                     {"low", random_rank_deficient(20, 12, 5, 1e10, 8)}};
  const auto rows = compare_run(all_algorithms(), mats);
  std::stringstream ss;
  write_csv(ss, rows);
  std::string header;
  std::getline(ss, header);
  CHECK(header == kCsvHeader);
  ss.seekg(0);
  const auto back = read_csv(ss);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].matrix == rows[i].matrix);
    CHECK(back[i].algo == rows[i].algo);
    CHECK(back[i].m == rows[i].m);
    CHECK(back[i].rank_oracle == rows[i].rank_oracle);
    CHECK(back[i].rank_computed == rows[i].rank_computed);
    CHECK(back[i].ratio_d_min == rows[i].ratio_d_min);
    CHECK(back[i].ratio_d_max == rows[i].ratio_d_max);
    CHECK(back[i].ratio_s_min == rows[i].ratio_s_min);
    CHECK(back[i].ratio_s_max == rows[i].ratio_s_max);
    CHECK(back[i].time_s == rows[i].time_s);
    CHECK(back[i].mean_ks == rows[i].mean_ks);
    CHECK(back[i].flags == rows[i].flags);
  }
}

TEST_CASE("csv: malformed input") {
  std::istringstream bad_header("matrix,algo\n");
  CHECK_THROWS_AS(read_csv(bad_header), parse_error);
  std::istringstream short_row(std::string(kCsvHeader) + "\nx,qrp,1\n");
  try {
    (void)read_csv(short_row);
    FAIL("expected parse_error");
  } catch (const parse_error& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("grid_sweep: identity and determinism") {
  const std::vector<MatrixCase> eye{{"eye6", M::Identity(6, 6)}};
  RunConfig base;
  const auto pts = grid_sweep(eye, {0.0, 0.5, 1.0}, {0.0, 0.5, 1.0}, base);
  REQUIRE(pts.size() == 9);
  for (const auto& p : pts) {
    REQUIRE(p.min_ratio.has_value());
    CHECK(*p.min_ratio == doctest::Approx(1.0));
    CHECK(p.magnitude == 0);
  }
  CHECK(pts.front().tau == 0.0);
  CHECK(pts.back().delta == 1.0);

  const std::vector<MatrixCase> mats{{"k", kahan_matrix_c(30, 0.2)},
                                     {"r", random_rank_deficient(40, 30, 12, 1e10, 12)}};
  const auto a = grid_sweep(mats, {0.1, 0.5}, {0.3, 0.9}, base);
  const auto b = grid_sweep(mats, {0.1, 0.5}, {0.3, 0.9}, base);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].min_ratio == b[i].min_ratio);
    CHECK(a[i].magnitude == b[i].magnitude);
  }
  CHECK_THROWS_AS(grid_sweep(mats, {1.5}, {0.5}, base), contract_error);

  std::ostringstream out;
  write_sweep_csv(out, a);
  CHECK(out.str().rfind(kSweepHeader, 0) == 0);
}
