#pragma once

// Rank-revealing QR drivers:
//   qrp   - classical column pivoting, one Householder reflector per step;
//   qrdm  - Deviation Maximization block pivoting with compact WY updates;
//   qrdm2 - qrdm plus an in-block length check that rejects selected
//           columns which turned out to be nearly dependent.
//
// All three work on a private copy of A and return the LAPACK-style packed
// factor (R on and above the diagonal, essential reflector parts below).

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "qrdm/dm_pivot.hpp"
#include "qrdm/householder.hpp"
#include "qrdm/matrix.hpp"

namespace qrdm {

struct StopCriterion {
  enum class Variant { EpsTimesN, EpsTimesSqrtN, None };
  Variant variant{Variant::EpsTimesN};

  /// epsilon_1 of the practical criterion for n columns.
  template <typename Scalar>
  Scalar epsilon1(Index n) const {
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    switch (variant) {
      case Variant::EpsTimesN:
        return eps * static_cast<Scalar>(n);
      case Variant::EpsTimesSqrtN:
        return eps * std::sqrt(static_cast<Scalar>(n));
      case Variant::None:
        break;
    }
    return Scalar(0);
  }
};

template <typename Scalar>
struct PartialNorms {
  Vector<Scalar> u;      // current trailing column norms
  Vector<Scalar> u_ref;  // value at the last exact computation
  Scalar recompute_threshold{Scalar(1e-2)};  // applied to squared norms
  Index recomputations{0};

  template <typename Derived>
  static PartialNorms from_matrix(const Eigen::MatrixBase<Derived>& a) {
    PartialNorms pn;
    pn.u = column_norms(a);
    pn.u_ref = pn.u;
    return pn;
  }

  void swap(Index i, Index j) {
    std::swap(u(i), u(j));
    std::swap(u_ref(i), u_ref(j));
  }
};

struct StepRecord {
  Index n_s{0};
  Index k_selected{0};
  Index k_accepted{0};
  bool broke_early{false};
  bool fell_back_to_scalar{false};
  bool dm_block{false};  // columns chosen by Deviation Maximization
  double eps_s{0};
  double gamma{1};  // dominance gap of the accepted block (1 for scalar steps)
};

/// Floating-point operation tallies, split by kernel class.
struct WorkCounters {
  double blocked{0};  // compact WY trailing updates (matrix-matrix)
  double rank1{0};    // single-reflector updates (matrix-vector)
  double other{0};    // reflector generation, norms, cosine matrices, WY build

  double total() const { return blocked + rank1 + other; }
  double blocked_fraction() const { return total() > 0 ? blocked / total() : 0.0; }
  double rank1_fraction() const { return total() > 0 ? rank1 / total() : 0.0; }
};

enum class Algorithm { QRP, QRDM, QRDM2 };

inline const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::QRP:
      return "qrp";
    case Algorithm::QRDM:
      return "qrdm";
    case Algorithm::QRDM2:
      return "qrdm2";
  }
  return "?";
}

template <typename Scalar>
struct RRQRResult {
  Matrix<Scalar> packed;
  Vector<Scalar> coeffs;  // one per processed column
  Permutation perm;
  Index rank{0};
  Index processed{0};  // number of Householder steps taken (n_s at exit)
  bool stopped_early{false};
  std::vector<StepRecord> step_log;
  WorkCounters work;
  Scalar initial_max_norm{0};

  Index rows() const { return packed.rows(); }
  Index cols() const { return packed.cols(); }

  /// |r_ii| for the processed columns.
  Vector<Scalar> abs_diagonal() const {
    return packed.diagonal().head(processed).cwiseAbs();
  }
};

/// Downdates u for columns j >= n_s1 by the squares of the rows
/// n_s .. n_s1-1 just produced, recomputing from the matrix whenever the
/// downdated square drops below recompute_threshold times its reference.
/// Entries j < n_s1 are zeroed.
template <typename Scalar, typename Derived>
void downdate_norms(PartialNorms<Scalar>& pn, const Eigen::MatrixBase<Derived>& a, Index n_s,
                    Index n_s1) {
  const Index n = a.cols();
  const Index m = a.rows();
  if (!(0 <= n_s && n_s < n_s1 && n_s1 <= n && n_s1 <= m)) {
    throw contract_error("downdate_norms: need 0 <= n_s < n_s1 <= min(m, n)");
  }
  for (Index j = 0; j < n_s1; ++j) {
    pn.u(j) = Scalar(0);
    pn.u_ref(j) = Scalar(0);
  }
  for (Index j = n_s1; j < n; ++j) {
    if (pn.u(j) == Scalar(0)) continue;
    const Scalar removed = a.col(j).segment(n_s, n_s1 - n_s).squaredNorm();
    const Scalar updated = pn.u(j) * pn.u(j) - removed;
    if (updated < pn.recompute_threshold * pn.u_ref(j) * pn.u_ref(j)) {
      pn.u(j) = column_norm(a.col(j).tail(m - n_s1));
      pn.u_ref(j) = pn.u(j);
      ++pn.recomputations;
    } else {
      pn.u(j) = std::sqrt(updated);
    }
  }
}

/// sqrt(n - n_s) * max_{j >= n_s} u_j <= epsilon_1 * initial_max_norm.
template <typename Scalar>
bool check_stop(const PartialNorms<Scalar>& pn, Scalar initial_max_norm, Index n, Index n_s,
                const StopCriterion& stop) {
  if (stop.variant == StopCriterion::Variant::None) return false;
  if (!(0 <= n_s && n_s < n)) throw contract_error("check_stop: need 0 <= n_s < n");
  const Scalar trailing_max = pn.u.tail(n - n_s).maxCoeff();
  return std::sqrt(static_cast<Scalar>(n - n_s)) * trailing_max <=
         stop.epsilon1<Scalar>(n) * initial_max_norm;
}

namespace detail {

template <typename Scalar>
class Factorization {
 public:
  Factorization(Matrix<Scalar> a, const StopCriterion& stop) : stop_(stop) {
    res_.packed = std::move(a);
    m_ = res_.packed.rows();
    n_ = res_.packed.cols();
    if (m_ < 1 || n_ < 1) throw contract_error("rrqr: matrix must be nonempty");
    res_.perm = Permutation(n_);
    res_.coeffs = Vector<Scalar>::Zero(std::min(m_, n_));
    pn_ = PartialNorms<Scalar>::from_matrix(res_.packed);
    res_.initial_max_norm = pn_.u.maxCoeff();
    norm_floor_ = static_cast<Scalar>(n_) * std::numeric_limits<Scalar>::epsilon() *
                  res_.initial_max_norm;
    res_.work.other += 2.0 * double(m_) * double(n_);
  }

  Index n_s() const { return n_s_; }
  Index limit() const { return std::min(m_, n_); }
  const PartialNorms<Scalar>& norms() const { return pn_; }
  const Matrix<Scalar>& working() const { return res_.packed; }

  bool should_stop() {
    if (!check_stop(pn_, res_.initial_max_norm, n_, n_s_, stop_)) return false;
    // Confirm against exact trailing norms so that a stop is never
    // triggered by downdating drift.
    for (Index j = n_s_; j < n_; ++j) {
      pn_.u(j) = column_norm(res_.packed.col(j).tail(m_ - n_s_));
      pn_.u_ref(j) = pn_.u(j);
    }
    res_.work.other += 2.0 * double(m_ - n_s_) * double(n_ - n_s_);
    return check_stop(pn_, res_.initial_max_norm, n_, n_s_, stop_);
  }

  /// One classical pivoting step on the column of largest partial norm.
  void scalar_step(bool fallback) {
    const Index pivot = n_s_ + argmax(pn_.u.tail(n_ - n_s_));
    swap_columns(n_s_, pivot);
    reflect_column(n_s_, n_);
    downdate(n_s_ + 1);
    StepRecord rec;
    rec.n_s = n_s_;
    rec.k_selected = 1;
    rec.k_accepted = 1;
    rec.fell_back_to_scalar = fallback;
    res_.step_log.push_back(rec);
    ++n_s_;
  }

  /// One block step.  Returns false if the selection had to fall back.
  bool block_step(const DMParams<Scalar>& params, bool length_check) {
    const Index rows = m_ - n_s_;
    const Index cols = n_ - n_s_;
    auto trailing = res_.packed.bottomRightCorner(rows, cols);
    auto u = pn_.u.tail(cols);
    std::optional<DMSelection<Scalar>> sel = dm_select(trailing, u, params, norm_floor_);
    if (!sel) {
      scalar_step(true);
      return false;
    }
    const Index kc = static_cast<Index>(sel->k_max) + 1;
    res_.work.other += 2.0 * double(rows) * double(kc) * double(kc + 1) / 2.0;

    const Scalar eps_s = params.tau * u.maxCoeff();
    const Index k = std::min<Index>(static_cast<Index>(sel->indices.size()), rows);
    move_to_front(sel->indices, k);

    // Triangularize the selected columns with rank-1 updates restricted to
    // the block; stop early if the next column has become too short.
    Index accepted = 0;
    bool broke = false;
    for (Index l = 0; l < k; ++l) {
      const Index col = n_s_ + l;
      reflect_column(col, n_s_ + k);
      accepted = l + 1;
      if (length_check && accepted < k) {
        const Index next = col + 1;
        const Scalar next_norm = column_norm(res_.packed.col(next).tail(m_ - next));
        res_.work.other += 2.0 * double(m_ - next);
        if (next_norm < eps_s) {
          broke = true;
          break;
        }
      }
    }

    // Blocked update of everything right of the selected columns.
    const Index rest = n_ - (n_s_ + k);
    if (rest > 0) {
      auto panel = res_.packed.block(n_s_, n_s_, rows, accepted);
      const ReflectorBlock<Scalar> block = accumulate_wy_packed(
          panel, std::span<const Scalar>(res_.coeffs.data() + n_s_, static_cast<std::size_t>(accepted)));
      res_.work.other += 2.0 * double(rows) * double(accepted) * double(accepted);
      apply_block_left(block, res_.packed.block(n_s_, n_s_ + k, rows, rest));
      res_.work.blocked += 4.0 * double(rows) * double(accepted) * double(rest) +
                           double(accepted) * double(accepted) * double(rest);
    }

    downdate(n_s_ + accepted);

    StepRecord rec;
    rec.n_s = n_s_;
    rec.k_selected = k;
    rec.k_accepted = accepted;
    rec.broke_early = broke;
    rec.dm_block = true;
    rec.eps_s = static_cast<double>(eps_s);
    rec.gamma = broke ? static_cast<double>(accepted_gamma(accepted)) : static_cast<double>(sel->gamma);
    res_.step_log.push_back(rec);
    n_s_ += accepted;
    return true;
  }

  RRQRResult<Scalar> finish(bool stopped) && {
    res_.processed = n_s_;
    res_.stopped_early = stopped;
    res_.coeffs.conservativeResize(n_s_);
    if (stopped || stop_.variant != StopCriterion::Variant::None) {
      res_.rank = earliest_stop();
    } else {
      const Scalar threshold = std::numeric_limits<Scalar>::epsilon() * static_cast<Scalar>(n_) *
                               res_.initial_max_norm;
      res_.rank = (res_.packed.diagonal().head(n_s_).cwiseAbs().array() > threshold).count();
    }
    return std::move(res_);
  }

 private:
  void swap_columns(Index i, Index j) {
    if (i == j) return;
    res_.packed.col(i).swap(res_.packed.col(j));
    pn_.swap(i, j);
    res_.perm.swap(i, j);
  }

  // Moves trailing-relative columns sel[0..k) to positions n_s .. n_s+k-1
  // by successive transpositions.
  void move_to_front(const std::vector<Index>& sel, Index k) {
    std::vector<Index> at(static_cast<std::size_t>(n_ - n_s_));
    std::vector<Index> where(at.size());
    for (std::size_t p = 0; p < at.size(); ++p) {
      at[p] = static_cast<Index>(p);
      where[p] = static_cast<Index>(p);
    }
    for (Index i = 0; i < k; ++i) {
      const Index target = i;
      const Index source = where[static_cast<std::size_t>(sel[static_cast<std::size_t>(i)])];
      if (source == target) continue;
      swap_columns(n_s_ + target, n_s_ + source);
      const Index a = at[static_cast<std::size_t>(target)];
      const Index b = at[static_cast<std::size_t>(source)];
      std::swap(at[static_cast<std::size_t>(target)], at[static_cast<std::size_t>(source)]);
      where[static_cast<std::size_t>(a)] = source;
      where[static_cast<std::size_t>(b)] = target;
    }
  }

  // Generates the reflector for column `col` and applies it to columns
  // col+1 .. end-1.
  void reflect_column(Index col, Index end) {
    const Index len = m_ - col;
    res_.coeffs(col) = householder_in_place(res_.packed.col(col).tail(len));
    res_.work.other += 3.0 * double(len);
    const Index width = end - col - 1;
    if (width > 0 && len > 0) {
      apply_reflector_left(res_.packed.col(col).tail(len - 1), res_.coeffs(col),
                           res_.packed.block(col, col + 1, len, width));
      res_.work.rank1 += 4.0 * double(len) * double(width);
    }
  }

  void downdate(Index n_s1) {
    if (n_s1 >= n_) {
      pn_.u.setZero();
      pn_.u_ref.setZero();
      return;
    }
    const Index before = pn_.recomputations;
    downdate_norms(pn_, res_.packed, n_s_, n_s1);
    res_.work.other += 2.0 * double(n_s1 - n_s_) * double(n_ - n_s1) +
                       2.0 * double(m_ - n_s1) * double(pn_.recomputations - before);
  }

  // Smallest j <= n_s such that the stop test holds at every position j..n_s,
  // evaluated exactly on R(j:, j:).  Later reflectors act on rows >= j only,
  // so these column norms equal the trailing norms a driver stopping at j
  // would have seen; block steps can overshoot the numerical rank otherwise.
  Index earliest_stop() const {
    const Scalar scale = res_.initial_max_norm;
    if (!(scale > Scalar(0))) return 0;
    const Scalar limit = stop_.epsilon1<Scalar>(n_);
    // sq(c) = ||R(j:, c)||^2 / scale^2 for c >= j.
    Vector<Scalar> sq = Vector<Scalar>::Zero(n_);
    for (Index c = n_s_; c < n_; ++c) {
      if (n_s_ < m_) sq(c) = (res_.packed.col(c).tail(m_ - n_s_) / scale).squaredNorm();
    }
    Index j = n_s_;
    auto holds = [&](Index pos) {
      if (pos >= n_) return true;
      return std::sqrt(static_cast<Scalar>(n_ - pos)) * std::sqrt(sq.tail(n_ - pos).maxCoeff()) <= limit;
    };
    if (!holds(j)) return n_s_;
    while (j > 0) {
      const Index p = j - 1;
      for (Index c = p; c < n_; ++c) {
        const Scalar v = res_.packed(p, c) / scale;
        sq(c) += v * v;
      }
      if (!holds(p)) break;
      j = p;
    }
    return j;
  }

  // Dominance gap of the columns kept after an early break, recomputed from
  // the upper triangle they produced (orthogonal invariance of the cosines).
  Scalar accepted_gamma(Index accepted) const {
    Matrix<Scalar> t = res_.packed.block(n_s_, n_s_, accepted, accepted)
                           .template triangularView<Eigen::Upper>();
    return dominance_gap(cosine_matrix(t));
  }

  RRQRResult<Scalar> res_;
  PartialNorms<Scalar> pn_;
  StopCriterion stop_;
  Scalar norm_floor_{0};
  Index m_{0};
  Index n_{0};
  Index n_s_{0};
};

template <typename Scalar>
RRQRResult<Scalar> run(Matrix<Scalar> a, Algorithm algo, const DMParams<Scalar>& params,
                       const StopCriterion& stop) {
  if (algo != Algorithm::QRP) params.validate();
  Factorization<Scalar> f(std::move(a), stop);
  bool stopped = false;
  while (f.n_s() < f.limit()) {
    if (f.should_stop()) {
      stopped = true;
      break;
    }
    if (algo == Algorithm::QRP) {
      f.scalar_step(false);
    } else {
      f.block_step(params, algo == Algorithm::QRDM2);
    }
  }
  return std::move(f).finish(stopped);
}

}  // namespace detail

template <typename Scalar>
RRQRResult<Scalar> qrp(Matrix<Scalar> a, const StopCriterion& stop = {}) {
  return detail::run<Scalar>(std::move(a), Algorithm::QRP, DMParams<Scalar>{}, stop);
}

template <typename Scalar>
RRQRResult<Scalar> qrdm(Matrix<Scalar> a, const DMParams<Scalar>& params,
                        const StopCriterion& stop = {}) {
  return detail::run<Scalar>(std::move(a), Algorithm::QRDM, params, stop);
}

template <typename Scalar>
RRQRResult<Scalar> qrdm2(Matrix<Scalar> a, const DMParams<Scalar>& params,
                         const StopCriterion& stop = {}) {
  return detail::run<Scalar>(std::move(a), Algorithm::QRDM2, params, stop);
}

template <typename Scalar>
RRQRResult<Scalar> factorize(Matrix<Scalar> a, Algorithm algo, const DMParams<Scalar>& params,
                             const StopCriterion& stop = {}) {
  return detail::run<Scalar>(std::move(a), algo, params, stop);
}

template <typename Scalar>
struct QRFactors {
  Matrix<Scalar> Q;  // m x m orthogonal
  Matrix<Scalar> R;  // m x n
};

/// Explicit Q and R with Q * R = A * Pi.  R holds the triangular rows of the
/// processed columns; if the factorization stopped early, its trailing block
/// is the unreduced remainder.
template <typename Scalar>
QRFactors<Scalar> reconstruct(const RRQRResult<Scalar>& result) {
  const Index m = result.rows();
  const Index n = result.cols();
  const Index r = result.processed;
  QRFactors<Scalar> f;
  f.Q = Matrix<Scalar>::Identity(m, m);
  for (Index i = r - 1; i >= 0; --i) {
    apply_reflector_left(result.packed.col(i).tail(m - i - 1), result.coeffs(i),
                         f.Q.bottomRightCorner(m - i, m - i));
  }
  f.R = Matrix<Scalar>::Zero(m, n);
  for (Index j = 0; j < n; ++j) {
    const Index top = std::min(j + 1, r);
    f.R.col(j).head(top) = result.packed.col(j).head(top);
  }
  if (r < m && r < n) {
    f.R.bottomRightCorner(m - r, n - r) = result.packed.bottomRightCorner(m - r, n - r);
  }
  return f;
}

}  // namespace qrdm
