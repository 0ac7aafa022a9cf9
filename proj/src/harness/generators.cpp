#include "qrdm/harness/generators.hpp"

#include <Eigen/QR>

#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <tuple>
#include <utility>

namespace qrdm::harness {

Mat kahan_matrix(Index n, double theta) {
  if (!(theta > 0.0 && theta <= 0.5 * std::numbers::pi)) {
    throw contract_error("kahan_matrix: theta must lie in (0, pi/2]");
  }
  if (n < 2) throw contract_error("kahan_matrix: n must be at least 2");
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Mat k = Mat::Zero(n, n);
  double scale = 1.0;
  for (Index i = 0; i < n; ++i) {
    k(i, i) = scale;
    for (Index j = i + 1; j < n; ++j) k(i, j) = -c * scale;
    scale *= s;
  }
  return k;
}

Mat kahan_matrix_c(Index n, double c) {
  if (!(c >= 0.0 && c < 1.0)) throw contract_error("kahan_matrix: c must lie in [0, 1)");
  return kahan_matrix(n, std::acos(c));
}

Vec prescribed_spectrum(Index m, Index n, Index r, double gap, double kappa) {
  const Index p = std::min(m, n);
  if (m < 1 || n < 1) throw contract_error("random_rank_deficient: empty shape");
  if (r < 0 || r > p) throw contract_error("random_rank_deficient: need 0 <= r <= min(m, n)");
  if (!(gap > 1.0)) throw contract_error("random_rank_deficient: gap must exceed 1");
  if (!(kappa >= 1.0)) throw contract_error("random_rank_deficient: kappa must be at least 1");
  Vec sigma(p);
  const double lo = std::log10(1.0 / kappa);
  for (Index i = 0; i < r; ++i) {
    const double t = r > 1 ? double(i) / double(r - 1) : 0.0;
    sigma(i) = std::pow(10.0, t * lo);
  }
  const double tail = std::isinf(gap) ? 0.0 : (1.0 / kappa) / gap;
  for (Index i = r; i < p; ++i) sigma(i) = tail;
  return sigma;
}

Mat random_orthogonal(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Mat g(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) g(i, j) = normal(rng);
  }
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  // Sign fix so the distribution is Haar rather than biased by the
  // reflector sign convention.
  for (Index j = 0; j < n; ++j) {
    if (qr.matrixQR()(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  return q;
}

Mat random_rank_deficient(Index m, Index n, Index r, double gap, std::uint64_t seed, double kappa) {
  const Vec sigma = prescribed_spectrum(m, n, r, gap, kappa);
  std::mt19937_64 rng(seed);
  const Mat u = random_orthogonal(m, rng);
  const Mat v = random_orthogonal(n, rng);
  const Index p = sigma.size();
  return u.leftCols(p) * sigma.asDiagonal() * v.leftCols(p).transpose();
}

Mat gaussian(Index m, Index n, std::uint64_t seed) {
  if (m < 1 || n < 1) throw contract_error("gaussian: empty shape");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Mat g(m, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < m; ++i) g(i, j) = normal(rng);
  }
  return g;
}

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct KeyValues {
  std::map<std::string, std::string> kv;
  std::string source;

  bool has(const std::string& k) const { return kv.count(k) > 0; }

  double num(const std::string& k) const {
    auto it = kv.find(k);
    if (it == kv.end()) throw contract_error("generator '" + source + "': missing key '" + k + "'");
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(it->second, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != it->second.size()) {
      throw contract_error("generator '" + source + "': bad value for '" + k + "'");
    }
    return v;
  }

  Index count(const std::string& k) const {
    const double v = num(k);
    if (v != std::floor(v) || v < 0 || v > 1e9) {
      throw contract_error("generator '" + source + "': '" + k + "' must be a count");
    }
    return static_cast<Index>(v);
  }

  std::uint64_t seed(std::uint64_t fallback) const {
    auto it = kv.find("seed");
    if (it == kv.end()) return fallback;
    try {
      std::size_t used = 0;
      const auto v = std::stoull(it->second, &used);
      if (used == it->second.size()) return v;
    } catch (const std::exception&) {
    }
    throw contract_error("generator '" + source + "': bad seed");
  }
};

}  // namespace

std::string FixtureSpec::generator() const {
  if (kind == "kahan") return "gen:kahan:n=" + std::to_string(n) + ",c=" + fmt(c);
  return "gen:random:m=" + std::to_string(m) + ",n=" + std::to_string(n) + ",r=" + std::to_string(r) +
         ",gap=" + fmt(gap) + ",kappa=" + fmt(kappa) + ",seed=" + std::to_string(seed);
}

std::vector<FixtureSpec> fixture_suite() {
  struct Shape {
    Index m, n;
  };
  const Shape shapes[] = {{64, 64},   {96, 64},   {128, 96},  {128, 128}, {160, 120}, {200, 150},
                          {256, 192}, {256, 256}, {100, 80},  {180, 180}, {48, 32},   {256, 128},
                          {120, 120}, {72, 60},   {150, 100}, {220, 200}, {240, 160}};
  const double rank_fraction[] = {0.25, 0.5, 0.75, 1.0};
  // (gap, kappa) pairs.  The first three put the tail near unit roundoff;
  // the last leaves a visible tail at 1e-12.
  const std::pair<double, double> spectra[] = {{1e8, 1e8}, {1e10, 1e6}, {1e12, 1e4}, {1e4, 1e8}};

  std::vector<FixtureSpec> out;
  for (int i = 0; i < 34; ++i) {
    const Shape& sh = shapes[i / 2];
    FixtureSpec f;
    f.kind = "random";
    f.m = sh.m;
    f.n = sh.n;
    const Index p = std::min(sh.m, sh.n);
    f.r = std::max<Index>(1, static_cast<Index>(std::lround(rank_fraction[i % 4] * double(p))));
    std::tie(f.gap, f.kappa) = spectra[(i + i / 4) % 4];
    f.seed = 1001 + static_cast<std::uint64_t>(i);
    char id[32];
    std::snprintf(id, sizeof id, "rand%02d_%ldx%ld", i, static_cast<long>(f.m), static_cast<long>(f.n));
    f.id = id;
    out.push_back(f);
  }
  const Index kahan_n[] = {32, 64, 96};
  const double kahan_c[] = {0.1, 0.2};
  for (double c : kahan_c) {
    for (Index n : kahan_n) {
      FixtureSpec f;
      f.kind = "kahan";
      f.m = f.n = f.r = n;
      f.c = c;
      char id[32];
      std::snprintf(id, sizeof id, "kahan_n%ld_c%02d", static_cast<long>(n), static_cast<int>(std::lround(c * 100)));
      f.id = id;
      out.push_back(f);
    }
  }
  return out;
}

bool is_generator_spec(const std::string& s) { return s.rfind("gen:", 0) == 0; }

Mat generate(const std::string& spec, std::uint64_t default_seed) {
  if (!is_generator_spec(spec)) throw contract_error("generator spec must start with 'gen:'");
  const std::string body = spec.substr(4);
  const auto colon = body.find(':');
  const std::string kind = body.substr(0, colon);
  KeyValues kv;
  kv.source = spec;
  if (colon != std::string::npos) {
    std::stringstream ss(body.substr(colon + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item.empty()) continue;
      const auto eq = item.find('=');
      if (eq == std::string::npos || eq == 0) throw contract_error("generator '" + spec + "': expected key=value");
      kv.kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
  }
  if (kind == "random") {
    const double kappa = kv.has("kappa") ? kv.num("kappa") : 1e8;
    return random_rank_deficient(kv.count("m"), kv.count("n"), kv.count("r"), kv.num("gap"),
                                 kv.seed(default_seed), kappa);
  }
  if (kind == "kahan") {
    if (kv.has("c")) return kahan_matrix_c(kv.count("n"), kv.num("c"));
    return kahan_matrix(kv.count("n"), kv.num("theta"));
  }
  if (kind == "gaussian") return gaussian(kv.count("m"), kv.count("n"), kv.seed(default_seed));
  if (kind == "identity") {
    const Index n = kv.count("n");
    if (n < 1) throw contract_error("identity: n must be positive");
    return Mat::Identity(n, n);
  }
  throw contract_error("unknown generator kind '" + kind + "'");
}

}  // namespace qrdm::harness
