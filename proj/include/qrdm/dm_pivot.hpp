#pragma once

// Deviation Maximization: choose a block of long, mutually well separated
// columns of a trailing matrix in one pass.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <vector>

#include "qrdm/matrix.hpp"

namespace qrdm {

template <typename Scalar>
struct DMParams {
  Scalar tau{Scalar(0.15)};
  Scalar delta{Scalar(0.9)};
  Index k_dm{64};
  /// Replace delta by the value that makes the selected cosine block strictly
  /// diagonally dominant with gap above 1 - tau^2.
  bool use_delta_max{false};

  void validate() const {
    if (!(tau > Scalar(0) && tau <= Scalar(1))) throw contract_error("DMParams: tau must lie in (0, 1]");
    if (!(delta >= Scalar(0) && delta < Scalar(1))) throw contract_error("DMParams: delta must lie in [0, 1)");
    if (k_dm < 1) throw contract_error("DMParams: k_dm must be positive");
  }
};

/// Result of the norm filter.  `indices` excludes the seed, is sorted by
/// descending norm (ties to the smaller index) and is capped at k_dm;
/// `k_max` counts every column that passed the filter before the cap.
struct CandidateSet {
  Index seed{0};
  std::vector<Index> indices;
  Index k_max{0};
};

template <typename Scalar>
struct DMSelection {
  std::vector<Index> indices;  // seed first, then accepted candidates in visit order
  Index k_max{0};              // size of the capped candidate set fed to the cosine filter
  Scalar gamma{1};             // min_i 1 - sum_{j != i} |theta_ij| over the selection
  Scalar delta{0};             // threshold actually applied
};

template <typename Derived>
CandidateSet candidate_set(const Eigen::MatrixBase<Derived>& u, typename Derived::Scalar tau,
                           Index k_dm) {
  using Scalar = typename Derived::Scalar;
  if (u.size() == 0) throw empty_candidate_error("candidate_set: no columns");
  if (k_dm < 1) throw contract_error("candidate_set: k_dm must be positive");
  CandidateSet out;
  out.seed = argmax(u);
  const Scalar top = u(out.seed);
  if (!(top > Scalar(0))) throw empty_candidate_error("candidate_set: all norms are zero");
  const Scalar threshold = tau * top;
  for (Index i = 0; i < u.size(); ++i) {
    if (i != out.seed && u(i) >= threshold) out.indices.push_back(i);
  }
  out.k_max = static_cast<Index>(out.indices.size());
  std::stable_sort(out.indices.begin(), out.indices.end(),
                   [&](Index a, Index b) { return u(a) > u(b); });
  if (out.k_max > k_dm) out.indices.resize(static_cast<std::size_t>(k_dm));
  return out;
}

/// Theta = D^-1 C^T C D^-1 with D = diag(column norms).  The Gram matrix is
/// accumulated in the upper triangle and scaled in place; the diagonal is
/// set to exactly one.
template <typename Derived>
Matrix<typename Derived::Scalar> cosine_matrix(const Eigen::MatrixBase<Derived>& c) {
  using Scalar = typename Derived::Scalar;
  const Index k = c.cols();
  const Vector<Scalar> norms = column_norms(c);
  for (Index j = 0; j < k; ++j) {
    if (norms(j) == Scalar(0)) throw degenerate_column_error("cosine_matrix: zero column");
  }
  Matrix<Scalar> theta = Matrix<Scalar>::Zero(k, k);
  theta.template selfadjointView<Eigen::Upper>().rankUpdate(c.transpose());
  for (Index j = 0; j < k; ++j) {
    for (Index i = 0; i < j; ++i) {
      theta(i, j) = theta(i, j) / norms(i) / norms(j);
      theta(j, i) = theta(i, j);
    }
    theta(j, j) = Scalar(1);
  }
  return theta;
}

/// min_i 1 - sum_{j != i} |theta_ij|.
template <typename Derived>
typename Derived::Scalar dominance_gap(const Eigen::MatrixBase<Derived>& theta) {
  using Scalar = typename Derived::Scalar;
  Scalar gamma(1);
  for (Index i = 0; i < theta.rows(); ++i) {
    Scalar off(0);
    for (Index j = 0; j < theta.cols(); ++j) {
      if (j != i) off += std::abs(theta(i, j));
    }
    gamma = std::min(gamma, Scalar(1) - off);
  }
  return gamma;
}

/// Runs the selection on `trailing` with norm estimates `u`.  Returns
/// nullopt when max(u) <= norm_floor; the caller then pivots one column at a
/// time instead.
template <typename DerivedA, typename DerivedU>
std::optional<DMSelection<typename DerivedA::Scalar>> dm_select(
    const Eigen::MatrixBase<DerivedA>& trailing, const Eigen::MatrixBase<DerivedU>& u,
    const DMParams<typename DerivedA::Scalar>& params,
    typename DerivedA::Scalar norm_floor = typename DerivedA::Scalar(0)) {
  using Scalar = typename DerivedA::Scalar;
  params.validate();
  if (u.size() != trailing.cols()) throw contract_error("dm_select: norm vector length mismatch");
  if (u.size() == 0 || !(u.maxCoeff() > norm_floor)) return std::nullopt;

  const CandidateSet cand = candidate_set(u, params.tau, params.k_dm);
  const Index k = static_cast<Index>(cand.indices.size());

  DMSelection<Scalar> sel;
  sel.k_max = k;
  sel.delta = params.use_delta_max
                  ? params.tau * params.tau / static_cast<Scalar>(std::max<Index>(k, 1))
                  : params.delta;
  sel.indices.push_back(cand.seed);
  if (k == 0) return sel;

  // Local column 0 is the seed, local column t > 0 is candidate t - 1.
  Matrix<Scalar> gathered(trailing.rows(), k + 1);
  gathered.col(0) = trailing.col(cand.seed);
  for (Index t = 0; t < k; ++t) gathered.col(t + 1) = trailing.col(cand.indices[static_cast<std::size_t>(t)]);
  const Matrix<Scalar> theta = cosine_matrix(gathered);

  std::vector<Index> local{0};
  for (Index t = 1; t <= k; ++t) {
    const bool separated = std::all_of(local.begin(), local.end(), [&](Index j) {
      return std::abs(theta(t, j)) < sel.delta;
    });
    if (separated) {
      local.push_back(t);
      sel.indices.push_back(cand.indices[static_cast<std::size_t>(t - 1)]);
    }
  }

  Matrix<Scalar> sub(static_cast<Index>(local.size()), static_cast<Index>(local.size()));
  for (std::size_t a = 0; a < local.size(); ++a) {
    for (std::size_t b = 0; b < local.size(); ++b) {
      sub(static_cast<Index>(a), static_cast<Index>(b)) = theta(local[a], local[b]);
    }
  }
  sel.gamma = dominance_gap(sub);
  return sel;
}

template <typename Scalar>
struct Lemma1Certificate {
  Scalar gamma{0};
  Scalar bound{0};
  bool holds{false};  // hypotheses satisfied, so sigma_min(C) >= bound is guaranteed
};

/// Lower bound sqrt(gamma + tau^2 - 1) * max_j ||c_j|| on sigma_min(C),
/// valid when every column is at least tau times the longest one and the
/// cosine matrix has dominance gap gamma > 1 - tau^2.
template <typename Derived>
Lemma1Certificate<typename Derived::Scalar> lemma1_certificate(const Eigen::MatrixBase<Derived>& c,
                                                               typename Derived::Scalar tau) {
  using Scalar = typename Derived::Scalar;
  Lemma1Certificate<Scalar> cert;
  if (c.cols() == 0) return cert;
  const Vector<Scalar> norms = column_norms(c);
  const Scalar top = norms.maxCoeff();
  cert.gamma = dominance_gap(cosine_matrix(c));
  const bool long_enough = (norms.array() >= tau * top).all();
  const Scalar slack = cert.gamma + tau * tau - Scalar(1);
  if (long_enough && slack > Scalar(0)) {
    cert.bound = std::sqrt(slack) * top;
    cert.holds = true;
  }
  return cert;
}

}  // namespace qrdm
