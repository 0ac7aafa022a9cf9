#pragma once

// Reference singular values (one-sided Jacobi) and empirical checks of the
// inequalities the pivoting analysis relies on.

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qrdm/dm_pivot.hpp"
#include "qrdm/matrix.hpp"
#include "qrdm/rrqr.hpp"

namespace qrdm {

template <typename Scalar>
struct SpectrumReport {
  Vector<Scalar> sigmas;  // descending
  Index numerical_rank{0};
  Index convergence_sweeps{0};
  Scalar rotation_tolerance{0};
};

template <typename Scalar>
class convergence_error : public std::runtime_error {
 public:
  convergence_error(const std::string& what, SpectrumReport<Scalar> partial)
      : std::runtime_error(what), partial_(std::move(partial)) {}
  const SpectrumReport<Scalar>& partial() const { return partial_; }

 private:
  SpectrumReport<Scalar> partial_;
};

struct JacobiOptions {
  double sine_tolerance{1e-15};
  int max_sweeps{30};
  Index max_columns{512};
};

/// Count of sigma_i > factor * sigma_1, with factor = eps * n by default.
template <typename Scalar>
Index numerical_rank(const Vector<Scalar>& sigmas, Scalar factor) {
  if (sigmas.size() == 0) return 0;
  const Scalar threshold = factor * sigmas(0);
  return (sigmas.array() > threshold).count();
}

/// One-sided (Hestenes) Jacobi.  Wide inputs are transposed, then the
/// transposed triangular QR factor is orthogonalized.  A pair is rotated while
/// |g_p . g_q| exceeds tol * ||g_p|| ||g_q||, with tol the larger of the
/// configured sine tolerance and the dot-product rounding level sqrt(m)*eps.
template <typename Derived>
SpectrumReport<typename Derived::Scalar> jacobi_svd(const Eigen::MatrixBase<Derived>& a,
                                                    const JacobiOptions& opt = {}) {
  using Scalar = typename Derived::Scalar;
  const Index n_orig = a.cols();
  Matrix<Scalar> g;
  if (a.rows() >= a.cols()) {
    g = a;
  } else {
    g = a.transpose();
  }
  if (g.cols() > opt.max_columns) throw contract_error("jacobi_svd: matrix exceeds desk-scale guard");
  if (g.rows() >= g.cols() && g.cols() > 0) {
    // Jacobi on R^T converges in markedly fewer sweeps than on R.
    Eigen::HouseholderQR<Matrix<Scalar>> qr(g);
    g = qr.matrixQR().topRows(g.cols()).template triangularView<Eigen::Upper>().transpose();
  }
  const Index m = g.rows();
  const Index n = g.cols();

  SpectrumReport<Scalar> rep;
  rep.rotation_tolerance =
      std::max(static_cast<Scalar>(opt.sine_tolerance),
               std::sqrt(static_cast<Scalar>(std::max<Index>(m, 1))) * std::numeric_limits<Scalar>::epsilon());
  Vector<Scalar> sq(n);
  for (Index j = 0; j < n; ++j) sq(j) = g.col(j).squaredNorm();
  // Columns below eps * ||A||_F carry no relative information; rotating
  // them against each other only chases rounding noise.
  const Scalar negligible = std::numeric_limits<Scalar>::epsilon() * std::sqrt(sq.sum());
  const Scalar negligible_sq = negligible * negligible;

  bool converged = n <= 1;
  for (int sweep = 1; sweep <= opt.max_sweeps && !converged; ++sweep) {
    rep.convergence_sweeps = sweep;
    bool rotated = false;
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const Scalar alpha = sq(p);
        const Scalar beta = sq(q);
        if (std::min(alpha, beta) <= negligible_sq) continue;
        const Scalar gamma = g.col(p).dot(g.col(q));
        if (std::abs(gamma) <= rep.rotation_tolerance * std::sqrt(alpha) * std::sqrt(beta)) continue;
        rotated = true;
        const Scalar zeta = (beta - alpha) / (Scalar(2) * gamma);
        const Scalar t = (zeta >= Scalar(0) ? Scalar(1) : Scalar(-1)) /
                         (std::abs(zeta) + std::sqrt(Scalar(1) + zeta * zeta));
        const Scalar c = Scalar(1) / std::sqrt(Scalar(1) + t * t);
        const Scalar s = c * t;
        for (Index i = 0; i < m; ++i) {
          const Scalar gp = g(i, p);
          const Scalar gq = g(i, q);
          g(i, p) = c * gp - s * gq;
          g(i, q) = s * gp + c * gq;
        }
        sq(p) = g.col(p).squaredNorm();
        sq(q) = g.col(q).squaredNorm();
      }
    }
    converged = !rotated;
  }

  Vector<Scalar> sig(n);
  for (Index j = 0; j < n; ++j) sig(j) = column_norm(g.col(j));
  std::sort(sig.data(), sig.data() + sig.size(), std::greater<Scalar>());
  rep.sigmas = sig;
  rep.numerical_rank = numerical_rank<Scalar>(
      sig, std::numeric_limits<Scalar>::epsilon() * static_cast<Scalar>(n_orig));
  if (!converged) {
    throw convergence_error<Scalar>("jacobi_svd: no convergence within sweep limit", rep);
  }
  return rep;
}

template <typename Derived>
typename Derived::Scalar sigma_min(const Eigen::MatrixBase<Derived>& a) {
  const auto rep = jacobi_svd(a);
  return rep.sigmas.size() ? rep.sigmas(rep.sigmas.size() - 1) : typename Derived::Scalar(0);
}

struct BoundReport {
  std::string name;
  double lhs{0};
  double rhs{0};
  bool holds{false};
  double slack{0};
  bool applicable{true};

  bool violated() const { return applicable && !holds; }
};

/// Relative slack granted to inequalities that can hold with equality.
inline constexpr double kBoundTolerance = 1e-12;

namespace detail {

inline BoundReport less_equal(std::string name, double lhs, double rhs) {
  BoundReport r;
  r.name = std::move(name);
  r.lhs = lhs;
  r.rhs = rhs;
  r.holds = lhs <= rhs * (1.0 + kBoundTolerance) + std::numeric_limits<double>::min();
  r.slack = rhs - lhs;
  return r;
}

inline BoundReport greater_equal(std::string name, double lhs, double rhs) {
  BoundReport r = less_equal(std::move(name), rhs, lhs);
  std::swap(r.lhs, r.rhs);
  r.slack = lhs - rhs;
  return r;
}

}  // namespace detail

/// max_i ||a_i|| <= ||A||_2 <= sqrt(n) max_i ||a_i||  and
/// ||A||_max <= ||A||_2 <= sqrt(mn) ||A||_max.
template <typename Derived>
std::vector<BoundReport> norm_bounds_check(const Eigen::MatrixBase<Derived>& a) {
  const auto rep = jacobi_svd(a);
  const double s1 = rep.sigmas.size() ? static_cast<double>(rep.sigmas(0)) : 0.0;
  const double max_col = a.cols() ? static_cast<double>(column_norms(a).maxCoeff()) : 0.0;
  const double max_abs = a.size() ? static_cast<double>(a.cwiseAbs().maxCoeff()) : 0.0;
  const double m = static_cast<double>(a.rows());
  const double n = static_cast<double>(a.cols());
  return {
      detail::less_equal("max_col_norm<=norm2", max_col, s1),
      detail::less_equal("norm2<=sqrt(n)*max_col_norm", s1, std::sqrt(n) * max_col),
      detail::less_equal("max_abs<=norm2", max_abs, s1),
      detail::less_equal("norm2<=sqrt(mn)*max_abs", s1, std::sqrt(m * n) * max_abs),
  };
}

/// sigma_min(A) <= min_i ||b_i||^-1 <= sqrt(n) sigma_min(A), b_i the rows of
/// A^-1.  lhs = min_i ||b_i||^-1, rhs = sigma_min, slack = lhs / rhs.
template <typename Derived>
BoundReport row_inverse_bound_check(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() != a.cols()) throw contract_error("row_inverse_bound_check: matrix must be square");
  BoundReport r;
  r.name = "sigma_min<=min_row_inv<=sqrt(n)*sigma_min";
  const auto rep = jacobi_svd(a);
  const Index n = a.cols();
  const Scalar smin = rep.sigmas(n - 1);
  const Scalar smax = rep.sigmas(0);
  if (!(smin > Scalar(0)) || smax / smin > Scalar(1e12)) {
    r.applicable = false;
    return r;
  }
  Eigen::HouseholderQR<Matrix<Scalar>> qr(a.eval());
  const Matrix<Scalar> inv = qr.solve(Matrix<Scalar>::Identity(n, n));
  Scalar max_row(0);
  for (Index i = 0; i < n; ++i) max_row = std::max(max_row, column_norm(inv.row(i).transpose()));
  const double lhs = 1.0 / static_cast<double>(max_row);
  const double rhs = static_cast<double>(smin);
  r.lhs = lhs;
  r.rhs = rhs;
  r.slack = lhs / rhs;
  const double tol = 1e-9;  // inverse computed at condition <= 1e12
  r.holds = rhs <= lhs * (1.0 + tol) && lhs <= std::sqrt(double(n)) * rhs * (1.0 + tol);
  return r;
}

enum class SddAxis { Rows, Cols };

/// alpha = min_i |a_ii| - sum_{j != i} |a_ij| (by rows, or by columns);
/// nullopt when alpha <= 0.
template <typename Derived>
std::optional<typename Derived::Scalar> sdd_gap(const Eigen::MatrixBase<Derived>& a, SddAxis by) {
  using Scalar = typename Derived::Scalar;
  if (a.rows() != a.cols()) throw contract_error("sdd_gap: matrix must be square");
  const Index n = a.rows();
  Scalar alpha = std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < n; ++i) {
    Scalar off(0);
    for (Index j = 0; j < n; ++j) {
      if (j == i) continue;
      off += by == SddAxis::Rows ? std::abs(a(i, j)) : std::abs(a(j, i));
    }
    alpha = std::min(alpha, std::abs(a(i, i)) - off);
  }
  if (n == 0 || !(alpha > Scalar(0))) return std::nullopt;
  return alpha;
}

/// Checks that DAD is SDD by rows whenever gamma > 1 - tau^2, where gamma is
/// the row dominance gap of A after unit-diagonal normalization.
/// lhs = gamma, rhs = 1 - tau^2, slack = SDD gap of DAD (NaN if none).
template <typename DerivedA, typename DerivedD>
BoundReport scaled_sdd_check(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedD>& d,
                             typename DerivedA::Scalar tau) {
  using Scalar = typename DerivedA::Scalar;
  if (a.rows() != a.cols() || d.size() != a.rows()) throw contract_error("scaled_sdd_check: dimension mismatch");
  if (!(tau > Scalar(0) && tau <= Scalar(1))) throw contract_error("scaled_sdd_check: tau must lie in (0, 1]");
  const Index n = a.rows();
  const Scalar dbar = d.cwiseAbs().maxCoeff();
  for (Index i = 0; i < n; ++i) {
    if (d(i) == Scalar(0)) throw contract_error("scaled_sdd_check: zero scaling entry");
    if (std::abs(d(i)) < tau * dbar) throw contract_error("scaled_sdd_check: |d_i| < tau * max|d|");
    if (a(i, i) == Scalar(0)) throw contract_error("scaled_sdd_check: zero diagonal entry");
  }
  Scalar gamma = std::numeric_limits<Scalar>::infinity();
  for (Index i = 0; i < n; ++i) {
    Scalar off(0);
    for (Index j = 0; j < n; ++j) {
      if (j != i) off += std::abs(a(i, j) / a(i, i));
    }
    gamma = std::min(gamma, Scalar(1) - off);
  }
  const Matrix<Scalar> dad = d.asDiagonal() * a * d.asDiagonal();
  const auto dad_gap = sdd_gap(dad, SddAxis::Rows);

  BoundReport r;
  r.name = "gamma>1-tau^2 => DAD SDD";
  r.lhs = static_cast<double>(gamma);
  r.rhs = static_cast<double>(Scalar(1) - tau * tau);
  r.applicable = gamma > Scalar(1) - tau * tau;
  r.holds = !r.applicable || dad_gap.has_value();
  r.slack = dad_gap ? static_cast<double>(*dad_gap) : std::numeric_limits<double>::quiet_NaN();
  return r;
}

/// Per-step lower bounds on sigma_min(R11) for a pivoted QR trace.
///
/// For each outer step with n_s -> n_s1 = n_s + k:
///   lemma:   sigma_min(T) >= sqrt(g) / sqrt(n - n_s1 + 1) * sigma_{n_s1}(A)
///   theorem: sigma_min(R11(n_s1)) >= sigma_{n_s1}(A) * sigma_min(R11(n_s)) / sigma_1(A)
///              / sqrt(2 (n - n_s1 + 1) n_s1) * sqrt(g) / (k^2 n_s)
/// where T is the diagonal block produced by the step and
/// g = gamma + tau^2 - 1.  At n_s = 0 the theorem reduces to the lemma since
/// R11 = T.  Scalar pivoting steps use k = 1, gamma = tau = 1.  With
/// `classical` set the block factor sqrt(g) / (k^2 n_s) is dropped, which is
/// the classical column-pivoting estimate.  Steps with g <= 0, or whose
/// sigma_{n_s1}(A) lies below eps * n * sigma_1 (round-off level), are
/// reported as not applicable.
template <typename Scalar>
std::vector<BoundReport> step_bounds_check(const Matrix<Scalar>& a, const RRQRResult<Scalar>& result,
                                           Scalar tau, bool classical) {
  const auto spec = jacobi_svd(a);
  const Index n = a.cols();
  const Scalar s1 = spec.sigmas.size() ? spec.sigmas(0) : Scalar(0);
  const Scalar noise = std::numeric_limits<Scalar>::epsilon() * static_cast<Scalar>(n) * s1;
  std::vector<BoundReport> out;
  Scalar prev_min(0);
  for (const StepRecord& step : result.step_log) {
    const Index ns = step.n_s;
    const Index k = step.k_accepted;
    const Index ns1 = ns + k;
    const bool scalar = !step.dm_block;
    const Scalar gamma = scalar ? Scalar(1) : static_cast<Scalar>(step.gamma);
    const Scalar t = scalar ? Scalar(1) : tau;
    const Scalar g = gamma + t * t - Scalar(1);

    const Matrix<Scalar> r11 =
        result.packed.topLeftCorner(ns1, ns1).template triangularView<Eigen::Upper>();
    const Matrix<Scalar> tblk = r11.bottomRightCorner(k, k);
    const Scalar cur_min = sigma_min(r11);
    const Scalar t_min = sigma_min(tblk);
    const Scalar target = ns1 <= spec.sigmas.size() ? spec.sigmas(ns1 - 1) : Scalar(0);
    const bool applicable = g > Scalar(0) && target > noise;
    const std::string tag = "step@" + std::to_string(ns);

    const Scalar lemma_rhs = std::sqrt(std::max(g, Scalar(0))) /
                             std::sqrt(static_cast<Scalar>(n - ns1 + 1)) * target;
    BoundReport lemma = detail::greater_equal("lemma:" + tag, static_cast<double>(t_min),
                                              static_cast<double>(lemma_rhs));
    lemma.applicable = applicable;

    Scalar thm_rhs = lemma_rhs;
    if (ns > 0) {
      thm_rhs = target * (prev_min / s1) /
                std::sqrt(Scalar(2) * static_cast<Scalar>(n - ns1 + 1) * static_cast<Scalar>(ns1));
      if (!classical) {
        thm_rhs *= std::sqrt(std::max(g, Scalar(0))) /
                   (static_cast<Scalar>(k) * static_cast<Scalar>(k) * static_cast<Scalar>(ns));
      }
    }
    BoundReport thm = detail::greater_equal("theorem:" + tag, static_cast<double>(cur_min),
                                            static_cast<double>(thm_rhs));
    thm.applicable = applicable;

    out.push_back(std::move(thm));
    out.push_back(std::move(lemma));
    prev_min = cur_min;
  }
  return out;
}

template <typename Scalar>
std::vector<BoundReport> qrdm_theorem_check(const Matrix<Scalar>& a, const RRQRResult<Scalar>& result,
                                            const DMParams<Scalar>& params) {
  return step_bounds_check(a, result, params.tau, false);
}

template <typename Scalar>
std::vector<BoundReport> qrp_theorem_check(const Matrix<Scalar>& a, const RRQRResult<Scalar>& result) {
  return step_bounds_check(a, result, Scalar(1), true);
}

}  // namespace qrdm
