#pragma once

// Householder reflectors H = I - coeff * v * v^T and their compact WY
// aggregation Q = H_1 H_2 ... H_k = I - Y * W * Y^T with W upper triangular.

#include <span>
#include <vector>

#include "qrdm/matrix.hpp"

namespace qrdm {

template <typename Scalar>
struct Reflector {
  Vector<Scalar> v;  // v(0) == 1
  Scalar coeff{0};

  Index size() const { return v.size(); }

  Matrix<Scalar> explicit_matrix() const {
    Matrix<Scalar> h = Matrix<Scalar>::Identity(size(), size());
    h.noalias() -= coeff * v * v.transpose();
    return h;
  }
};

template <typename Scalar>
struct ReflectorBlock {
  Matrix<Scalar> Y;  // ambient x k, unit lower trapezoidal
  Matrix<Scalar> W;  // k x k, upper triangular

  Index ambient() const { return Y.rows(); }
  Index size() const { return W.cols(); }

  /// I - Y W Y^T, formed densely.  Verification use only.
  Matrix<Scalar> explicit_q() const {
    Matrix<Scalar> q = Matrix<Scalar>::Identity(ambient(), ambient());
    q.noalias() -= Y * W.template triangularView<Eigen::Upper>() * Y.transpose();
    return q;
  }
};

template <typename Scalar>
struct ReflectorResult {
  Reflector<Scalar> reflector;
  Scalar beta{0};
};

/// Overwrites x with (beta, v(1:)) and returns coeff, where H x = beta e_1.
/// beta carries the sign opposite to x(0); a zero vector yields coeff = 0.
template <typename Derived>
typename Derived::Scalar householder_in_place(const Eigen::MatrixBase<Derived>& x_out) {
  using Scalar = typename Derived::Scalar;
  auto& x = const_cast<Eigen::MatrixBase<Derived>&>(x_out);
  if (x.size() < 1) throw contract_error("householder: empty vector");
  const Scalar norm = column_norm(x);
  if (norm == Scalar(0)) return Scalar(0);
  const Scalar alpha = x(0);
  const Scalar beta = alpha >= Scalar(0) ? -norm : norm;
  const Scalar coeff = (beta - alpha) / beta;
  const Scalar denom = alpha - beta;
  x.tail(x.size() - 1) /= denom;
  x(0) = beta;
  return coeff;
}

template <typename Derived>
ReflectorResult<typename Derived::Scalar> make_reflector(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.size() < 1) throw contract_error("make_reflector: empty vector");
  Vector<Scalar> work = x;
  const Scalar coeff = householder_in_place(work);
  ReflectorResult<Scalar> out;
  out.reflector.coeff = coeff;
  out.reflector.v = work;
  out.reflector.v(0) = Scalar(1);
  out.beta = coeff == Scalar(0) ? Scalar(0) : work(0);
  if (coeff == Scalar(0)) out.reflector.v.tail(work.size() - 1).setZero();
  return out;
}

/// C <- (I - coeff * v * v^T) C with v = (1, essential).
template <typename DerivedV, typename DerivedC>
void apply_reflector_left(const Eigen::MatrixBase<DerivedV>& essential,
                          typename DerivedC::Scalar coeff,
                          const Eigen::MatrixBase<DerivedC>& c_out) {
  using Scalar = typename DerivedC::Scalar;
  auto& c = const_cast<Eigen::MatrixBase<DerivedC>&>(c_out);
  if (essential.size() + 1 != c.rows()) {
    throw contract_error("apply_reflector_left: dimension mismatch");
  }
  if (coeff == Scalar(0) || c.cols() == 0) return;
  const Index tail = essential.size();
  Eigen::Matrix<Scalar, 1, Eigen::Dynamic> w = c.row(0);
  if (tail > 0) w.noalias() += essential.transpose() * c.bottomRows(tail);
  w *= coeff;
  c.row(0) -= w;
  if (tail > 0) c.bottomRows(tail).noalias() -= essential * w;
}

template <typename Scalar, typename DerivedC>
void apply_reflector_left(const Reflector<Scalar>& h, const Eigen::MatrixBase<DerivedC>& c) {
  apply_reflector_left(h.v.tail(h.size() - 1), h.coeff, c);
}

namespace detail {

// Forward column-by-column recurrence for W:
//   W(i,i) = coeff_i,  W(0:i, i) = -coeff_i * W(0:i, 0:i) * Y(:, 0:i)^T * Y(:, i).
template <typename Scalar>
void build_w(const Matrix<Scalar>& y, std::span<const Scalar> coeffs, Matrix<Scalar>& w) {
  const Index k = static_cast<Index>(coeffs.size());
  w = Matrix<Scalar>::Zero(k, k);
  for (Index i = 0; i < k; ++i) {
    const Scalar tau = coeffs[static_cast<std::size_t>(i)];
    w(i, i) = tau;
    if (i == 0 || tau == Scalar(0)) continue;
    const Index len = y.rows() - i;
    Vector<Scalar> z = -tau * (y.block(i, 0, len, i).transpose() * y.col(i).tail(len));
    w.col(i).head(i) = w.topLeftCorner(i, i).template triangularView<Eigen::Upper>() * z;
  }
}

}  // namespace detail

/// Compact WY form of H_1 ... H_k, where reflector i acts on the trailing
/// ambient - i coordinates (the triangular pattern of a QR sweep).
template <typename Scalar>
ReflectorBlock<Scalar> accumulate_wy(std::span<const Reflector<Scalar>> reflectors) {
  if (reflectors.empty()) throw contract_error("accumulate_wy: empty reflector list");
  const Index k = static_cast<Index>(reflectors.size());
  const Index ambient = reflectors.front().size();
  if (k > ambient) throw contract_error("accumulate_wy: more reflectors than ambient rows");
  ReflectorBlock<Scalar> block;
  block.Y = Matrix<Scalar>::Zero(ambient, k);
  std::vector<Scalar> coeffs(static_cast<std::size_t>(k));
  for (Index i = 0; i < k; ++i) {
    const auto& h = reflectors[static_cast<std::size_t>(i)];
    if (h.size() != ambient - i) {
      throw contract_error("accumulate_wy: reflector lengths must descend by one");
    }
    block.Y.col(i).tail(ambient - i) = h.v;
    block.Y(i, i) = Scalar(1);
    coeffs[static_cast<std::size_t>(i)] = h.coeff;
  }
  detail::build_w<Scalar>(block.Y, coeffs, block.W);
  return block;
}

/// Compact WY form of reflectors stored LAPACK-style in a panel: column i
/// holds the essential part of v_i strictly below row i.
template <typename Derived, typename Scalar = typename Derived::Scalar>
ReflectorBlock<Scalar> accumulate_wy_packed(const Eigen::MatrixBase<Derived>& panel,
                                            std::span<const Scalar> coeffs) {
  const Index k = static_cast<Index>(coeffs.size());
  if (k == 0) throw contract_error("accumulate_wy: empty reflector list");
  if (panel.cols() < k || panel.rows() < k) {
    throw contract_error("accumulate_wy: panel too small");
  }
  ReflectorBlock<Scalar> block;
  block.Y = panel.leftCols(k).template triangularView<Eigen::StrictlyLower>();
  block.Y.diagonal().setOnes();
  detail::build_w<Scalar>(block.Y, coeffs, block.W);
  return block;
}

/// C <- (I - Y W^T Y^T) C = Q^T C, as three matrix products.
template <typename Scalar, typename DerivedC>
void apply_block_left(const ReflectorBlock<Scalar>& block, const Eigen::MatrixBase<DerivedC>& c_out) {
  auto& c = const_cast<Eigen::MatrixBase<DerivedC>&>(c_out);
  if (block.ambient() != c.rows()) throw contract_error("apply_block_left: dimension mismatch");
  if (c.cols() == 0 || block.size() == 0) return;
  Matrix<Scalar> tmp = block.Y.transpose() * c;
  tmp = block.W.transpose().template triangularView<Eigen::Lower>() * tmp;
  c.noalias() -= block.Y * tmp;
}

}  // namespace qrdm
