#pragma once

// Test matrices for the experiment harness: Kahan matrices, random matrices
// with a prescribed singular spectrum, and the committed fixture suite.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "qrdm/matrix.hpp"

namespace qrdm::harness {

using Mat = Matrix<double>;
using Vec = Vector<double>;

/// K = S * R with S = diag(1, s, ..., s^(n-1)) and R unit upper triangular
/// with every superdiagonal entry -c, where c = cos(theta), s = sin(theta).
Mat kahan_matrix(Index n, double theta);

/// Same matrix parameterized by c directly.
Mat kahan_matrix_c(Index n, double c);

/// Descending singular values used by random_rank_deficient: r values
/// log-spaced in [1/kappa, 1], then min(m,n) - r values at (1/kappa)/gap.
Vec prescribed_spectrum(Index m, Index n, Index r, double gap, double kappa = 1e8);

/// U * diag(sigma) * V^T with U, V Haar-distributed orthogonal factors built
/// from Householder QR of Gaussian matrices.
Mat random_rank_deficient(Index m, Index n, Index r, double gap, std::uint64_t seed,
                          double kappa = 1e8);

Mat random_orthogonal(Index n, std::mt19937_64& rng);
Mat gaussian(Index m, Index n, std::uint64_t seed);

struct FixtureSpec {
  std::string id;
  std::string kind;  // "random" or "kahan"
  Index m{0};
  Index n{0};
  Index r{0};
  double gap{0};
  double kappa{0};
  double c{0};
  std::uint64_t seed{0};

  /// Generator string accepted by generate().
  std::string generator() const;
};

/// The 40-matrix desk-scale suite (random spectra and a Kahan family).
std::vector<FixtureSpec> fixture_suite();

/// Builds a matrix from "gen:<kind>:key=value,...".  Kinds:
///   random:   m, n, r, gap, kappa (1e8), seed
///   kahan:    n and either c or theta
///   gaussian: m, n, seed
///   identity: n
/// `default_seed` applies when the spec carries no seed.
Mat generate(const std::string& spec, std::uint64_t default_seed = 0);

bool is_generator_spec(const std::string& s);

}  // namespace qrdm::harness
