#pragma once

// Comparison runs of the pivoted QR drivers against the Jacobi oracle and
// their CSV reports.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qrdm/rrqr.hpp"

namespace qrdm::harness {

struct RunConfig {
  Algorithm algo{Algorithm::QRDM2};
  DMParams<double> params{};
  StopCriterion stop{};
  std::uint64_t seed{0};
  std::string input;
};

struct MatrixCase {
  std::string id;
  Matrix<double> a;
};

struct ComparisonRow {
  std::string matrix;
  std::string algo;
  Index m{0};
  Index n{0};
  std::optional<Index> rank_oracle;
  Index rank_computed{0};
  std::optional<double> ratio_d_min, ratio_d_max;
  std::optional<double> ratio_s_min, ratio_s_max;
  double time_s{0};
  double mean_ks{0};
  Index breaks{0};
  Index fallbacks{0};
  std::string flags;  // '|' separated; empty when clean

  bool oracle_failed() const;
};

struct CompareOptions {
  bool ratios{true};
  /// Oracle numerical rank counts sigma_i > rank_factor * sigma_1; a
  /// non-positive value means eps * n.
  double rank_factor{0};
  unsigned jobs{1};
};

/// Quantities derived from one factorization and the oracle spectrum.
struct RatioSummary {
  double d_min{0}, d_max{0};  // over i <= n_r of d_i / sigma_i
  double s_min{0}, s_max{0};  // over i <= n_r of sigma_i(R11) / sigma_i
  std::vector<double> d_ratios;
};

/// d_i are the n_r largest |r_ii| sorted descending; R11 is the leading
/// n_r x n_r block of R.  Empty ratio vectors when n_r == 0.
RatioSummary ratio_summary(const RRQRResult<double>& result, const Vector<double>& sigmas, Index n_r);

double oracle_rank_factor(const CompareOptions& opt, Index n);

/// One row per (matrix, config), ordered matrix-major.  Each driver call is
/// timed with a monotonic clock after one discarded warm-up run.
std::vector<ComparisonRow> compare_run(const std::vector<RunConfig>& configs,
                                       const std::vector<MatrixCase>& matrices,
                                       const CompareOptions& opt = {});

inline constexpr const char* kCsvHeader =
    "matrix,algo,m,n,rank_oracle,rank_computed,ratio_d_min,ratio_d_max,ratio_s_min,ratio_s_max,"
    "time_s,mean_ks,breaks,fallbacks,flags";

void write_csv(std::ostream& out, const std::vector<ComparisonRow>& rows);
std::vector<ComparisonRow> read_csv(std::istream& in);

struct SweepPoint {
  double tau{0};
  double delta{0};
  std::optional<double> min_ratio;  // min over matrices of min_i d_i / sigma_i
  std::optional<int> magnitude;     // floor(log10(min_ratio))
  double cumulative_time_s{0};      // driver time summed over the matrix set
};

/// Runs `base.algo` at every (tau, delta) grid point.  tau = 0 is replaced
/// by the unit roundoff and delta = 1 by the largest double below 1 when
/// running; points report the requested grid values.
std::vector<SweepPoint> grid_sweep(const std::vector<MatrixCase>& matrices, const std::vector<double>& taus,
                                   const std::vector<double>& deltas, const RunConfig& base,
                                   const CompareOptions& opt = {});

inline constexpr const char* kSweepHeader = "tau,delta,min_ratio,magnitude,cumulative_time_s";

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points);

/// "%.16e" (17 significant digits).
std::string format_real(double x);

}  // namespace qrdm::harness
