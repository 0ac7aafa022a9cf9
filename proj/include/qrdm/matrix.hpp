#pragma once

// Dense column-major storage, norms, permutations and the matrix product
// kernel shared by the factorization drivers.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "qrdm/errors.hpp"

namespace qrdm {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Bounds-checked rectangular view into a parent matrix, i.e. the colon
/// notation A(r0:r0+rows-1, c0:c0+cols-1) with zero-based offsets.
template <typename Derived>
auto view(Eigen::MatrixBase<Derived>& parent, Index row_offset, Index col_offset, Index rows,
          Index cols) {
  if (row_offset < 0 || col_offset < 0 || rows < 0 || cols < 0 ||
      row_offset + rows > parent.rows() || col_offset + cols > parent.cols()) {
    throw contract_error("view: bounds exceed parent matrix");
  }
  return parent.block(row_offset, col_offset, rows, cols);
}

template <typename Derived>
auto view(const Eigen::MatrixBase<Derived>& parent, Index row_offset, Index col_offset, Index rows,
          Index cols) {
  if (row_offset < 0 || col_offset < 0 || rows < 0 || cols < 0 ||
      row_offset + rows > parent.rows() || col_offset + cols > parent.cols()) {
    throw contract_error("view: bounds exceed parent matrix");
  }
  return parent.block(row_offset, col_offset, rows, cols);
}

/// C <- alpha * A * B + beta * C.
///
/// The output argument follows the usual Eigen idiom of accepting a const
/// reference so that block expressions can be passed directly.
template <typename DerivedA, typename DerivedB, typename DerivedC>
void gemm(typename DerivedC::Scalar alpha, const Eigen::MatrixBase<DerivedA>& a,
          const Eigen::MatrixBase<DerivedB>& b, typename DerivedC::Scalar beta,
          const Eigen::MatrixBase<DerivedC>& c_out) {
  auto& c = const_cast<Eigen::MatrixBase<DerivedC>&>(c_out);
  if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols()) {
    throw contract_error("gemm: dimension mismatch");
  }
  using Scalar = typename DerivedC::Scalar;
  if (beta == Scalar(0)) {
    c.setZero();
  } else if (beta != Scalar(1)) {
    c *= beta;
  }
  if (alpha != Scalar(0) && a.cols() > 0) {
    c.noalias() += alpha * a * b;
  }
}

/// Euclidean norm of a vector with a running scale and a scaled sum of
/// squares, so that neither overflow nor harmful underflow occurs.
template <typename Derived>
typename Derived::Scalar column_norm(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  Scalar scale(0);
  Scalar ssq(1);
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar ax = std::abs(x(i));
    if (ax == Scalar(0)) continue;
    if (scale < ax) {
      const Scalar r = scale / ax;
      ssq = Scalar(1) + ssq * r * r;
      scale = ax;
    } else {
      const Scalar r = ax / scale;
      ssq += r * r;
    }
  }
  return scale * std::sqrt(ssq);
}

template <typename Derived>
Vector<typename Derived::Scalar> column_norms(const Eigen::MatrixBase<Derived>& a) {
  Vector<typename Derived::Scalar> u(a.cols());
  for (Index j = 0; j < a.cols(); ++j) u(j) = column_norm(a.col(j));
  return u;
}

/// Index of the largest entry; ties resolve to the smallest index.
template <typename Derived>
Index argmax(const Eigen::MatrixBase<Derived>& u) {
  if (u.size() == 0) throw contract_error("argmax: empty vector");
  Index best = 0;
  for (Index i = 1; i < u.size(); ++i) {
    if (u(i) > u(best)) best = i;
  }
  return best;
}

/// Column permutation Pi stored both as a forward map and as the log of
/// transpositions that produced it.  Position k of A*Pi holds the original
/// column forward()[k].
class Permutation {
 public:
  using Swap = std::pair<Index, Index>;

  Permutation() = default;
  explicit Permutation(Index n) : forward_(static_cast<std::size_t>(n)) {
    if (n < 0) throw contract_error("Permutation: negative size");
    for (Index i = 0; i < n; ++i) forward_[static_cast<std::size_t>(i)] = i;
  }

  Index size() const { return static_cast<Index>(forward_.size()); }
  Index operator[](Index k) const { return forward_.at(static_cast<std::size_t>(k)); }
  const std::vector<Index>& forward() const { return forward_; }
  const std::vector<Swap>& swaps() const { return swaps_; }

  void swap(Index i, Index j) {
    check_index(i);
    check_index(j);
    if (i == j) return;
    std::swap(forward_[static_cast<std::size_t>(i)], forward_[static_cast<std::size_t>(j)]);
    swaps_.emplace_back(i, j);
  }

  /// Rebuilds a permutation by replaying a transposition log from identity.
  static Permutation replay(Index n, const std::vector<Swap>& swaps) {
    Permutation p(n);
    for (const auto& [i, j] : swaps) p.swap(i, j);
    return p;
  }

  Permutation inverse() const {
    Permutation p(size());
    for (auto it = swaps_.rbegin(); it != swaps_.rend(); ++it) p.swap(it->first, it->second);
    return p;
  }

  bool is_bijection() const {
    std::vector<bool> seen(forward_.size(), false);
    for (Index k : forward_) {
      if (k < 0 || k >= size() || seen[static_cast<std::size_t>(k)]) return false;
      seen[static_cast<std::size_t>(k)] = true;
    }
    return true;
  }

  /// Dense Pi such that (A * Pi).col(k) == A.col(forward()[k]).
  template <typename Scalar>
  Matrix<Scalar> to_matrix() const {
    Matrix<Scalar> p = Matrix<Scalar>::Zero(size(), size());
    for (Index k = 0; k < size(); ++k) p((*this)[k], k) = Scalar(1);
    return p;
  }

 private:
  void check_index(Index i) const {
    if (i < 0 || i >= size()) {
      throw contract_error("Permutation: index " + std::to_string(i) + " out of range");
    }
  }

  std::vector<Index> forward_;
  std::vector<Swap> swaps_;
};

/// A <- A * Pi, replaying the transposition log with one column of scratch.
template <typename Derived>
void apply_column_swaps(const Eigen::MatrixBase<Derived>& a_out, const Permutation& p) {
  auto& a = const_cast<Eigen::MatrixBase<Derived>&>(a_out);
  if (p.size() != a.cols()) throw contract_error("apply_column_swaps: size mismatch");
  Vector<typename Derived::Scalar> scratch(a.rows());
  for (const auto& [i, j] : p.swaps()) {
    if (i < 0 || j < 0 || i >= a.cols() || j >= a.cols()) {
      throw contract_error("apply_column_swaps: index out of range");
    }
    scratch = a.col(i);
    a.col(i) = a.col(j);
    a.col(j) = scratch;
  }
}

}  // namespace qrdm
