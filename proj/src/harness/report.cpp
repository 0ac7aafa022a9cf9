#include "qrdm/harness/report.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "qrdm/svd_oracle.hpp"

namespace qrdm::harness {

bool ComparisonRow::oracle_failed() const { return flags.find("oracle_failed") != std::string::npos; }

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

double oracle_rank_factor(const CompareOptions& opt, Index n) {
  if (opt.rank_factor > 0) return opt.rank_factor;
  return std::numeric_limits<double>::epsilon() * static_cast<double>(n);
}

RatioSummary ratio_summary(const RRQRResult<double>& result, const Vector<double>& sigmas, Index n_r) {
  RatioSummary out;
  if (n_r <= 0) return out;
  const Vector<double> diag = result.abs_diagonal();
  std::vector<double> d(diag.data(), diag.data() + diag.size());
  std::sort(d.begin(), d.end(), std::greater<double>());
  const QRFactors<double> f = reconstruct(result);
  const Index k = std::min<Index>(n_r, std::min(f.R.rows(), f.R.cols()));
  const Vector<double> r11_sigmas = jacobi_svd(f.R.topLeftCorner(k, k)).sigmas;

  out.d_min = out.s_min = std::numeric_limits<double>::infinity();
  out.d_max = out.s_max = 0;
  for (Index i = 0; i < n_r; ++i) {
    const double di = i < static_cast<Index>(d.size()) ? d[static_cast<std::size_t>(i)] : 0.0;
    const double ratio = di / sigmas(i);
    out.d_ratios.push_back(ratio);
    out.d_min = std::min(out.d_min, ratio);
    out.d_max = std::max(out.d_max, ratio);
    const double si = i < k ? r11_sigmas(i) : 0.0;
    out.s_min = std::min(out.s_min, si / sigmas(i));
    out.s_max = std::max(out.s_max, si / sigmas(i));
  }
  return out;
}

namespace {

using Clock = std::chrono::steady_clock;

struct Oracle {
  bool ok{false};
  Vector<double> sigmas;
  Index rank{0};
};

Oracle run_oracle(const Matrix<double>& a, const CompareOptions& opt) {
  Oracle o;
  try {
    const auto rep = jacobi_svd(a);
    o.sigmas = rep.sigmas;
    o.rank = numerical_rank<double>(rep.sigmas, oracle_rank_factor(opt, a.cols()));
    o.ok = true;
  } catch (const std::exception&) {
    o.ok = false;
  }
  return o;
}

struct Timed {
  RRQRResult<double> result;
  double seconds{0};
};

Timed timed_run(const Matrix<double>& a, const RunConfig& cfg) {
  (void)factorize<double>(a, cfg.algo, cfg.params, cfg.stop);  // warm-up, discarded
  Matrix<double> copy = a;
  const auto t0 = Clock::now();
  RRQRResult<double> r = factorize<double>(std::move(copy), cfg.algo, cfg.params, cfg.stop);
  const auto t1 = Clock::now();
  return {std::move(r), std::chrono::duration<double>(t1 - t0).count()};
}

void add_flag(std::string& flags, const char* f) {
  if (!flags.empty()) flags += '|';
  flags += f;
}

ComparisonRow make_row(const MatrixCase& mc, const RunConfig& cfg, const Oracle& oracle,
                       const CompareOptions& opt) {
  ComparisonRow row;
  row.matrix = mc.id;
  row.algo = to_string(cfg.algo);
  row.m = mc.a.rows();
  row.n = mc.a.cols();
  const Timed t = timed_run(mc.a, cfg);
  row.time_s = t.seconds;
  row.rank_computed = t.result.rank;
  Index steps = 0;
  double ks = 0;
  for (const StepRecord& s : t.result.step_log) {
    ks += static_cast<double>(s.k_accepted);
    ++steps;
    row.breaks += s.broke_early ? 1 : 0;
    row.fallbacks += s.fell_back_to_scalar ? 1 : 0;
  }
  row.mean_ks = steps ? ks / static_cast<double>(steps) : 0.0;
  if (t.result.stopped_early) add_flag(row.flags, "stopped_early");
  if (!opt.ratios) return row;
  if (!oracle.ok) {
    add_flag(row.flags, "oracle_failed");
    return row;
  }
  row.rank_oracle = oracle.rank;
  if (oracle.rank > 0) {
    try {
      const RatioSummary s = ratio_summary(t.result, oracle.sigmas, oracle.rank);
      row.ratio_d_min = s.d_min;
      row.ratio_d_max = s.d_max;
      row.ratio_s_min = s.s_min;
      row.ratio_s_max = s.s_max;
    } catch (const std::exception&) {
      add_flag(row.flags, "oracle_failed");
    }
  }
  return row;
}

// Runs body(i) for i in [0, count) on `jobs` workers.
template <typename F>
void parallel_for(std::size_t count, unsigned jobs, F body) {
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < jobs; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> g(failure_lock);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::string opt_real(const std::optional<double>& x) { return x ? format_real(*x) : std::string(); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_opt_real(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return std::stod(s);
}

}  // namespace

std::vector<ComparisonRow> compare_run(const std::vector<RunConfig>& configs,
                                       const std::vector<MatrixCase>& matrices, const CompareOptions& opt) {
  std::vector<Oracle> oracles(matrices.size());
  if (opt.ratios) {
    parallel_for(matrices.size(), opt.jobs, [&](std::size_t i) { oracles[i] = run_oracle(matrices[i].a, opt); });
  }
  std::vector<ComparisonRow> rows(matrices.size() * configs.size());
  parallel_for(rows.size(), opt.jobs, [&](std::size_t job) {
    const std::size_t mi = job / configs.size();
    const std::size_t ci = job % configs.size();
    rows[job] = make_row(matrices[mi], configs[ci], oracles[mi], opt);
  });
  return rows;
}

void write_csv(std::ostream& out, const std::vector<ComparisonRow>& rows) {
  out << kCsvHeader << '\n';
  for (const ComparisonRow& r : rows) {
    out << r.matrix << ',' << r.algo << ',' << r.m << ',' << r.n << ','
        << (r.rank_oracle ? std::to_string(*r.rank_oracle) : std::string()) << ',' << r.rank_computed << ','
        << opt_real(r.ratio_d_min) << ',' << opt_real(r.ratio_d_max) << ',' << opt_real(r.ratio_s_min) << ','
        << opt_real(r.ratio_s_max) << ',' << format_real(r.time_s) << ',' << format_real(r.mean_ks) << ','
        << r.breaks << ',' << r.fallbacks << ',' << r.flags << '\n';
  }
}

std::vector<ComparisonRow> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw parse_error("missing CSV header", 1);
  std::vector<ComparisonRow> rows;
  std::size_t number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 15) throw parse_error("expected 15 fields", number);
    try {
      ComparisonRow r;
      r.matrix = f[0];
      r.algo = f[1];
      r.m = std::stol(f[2]);
      r.n = std::stol(f[3]);
      if (!f[4].empty()) r.rank_oracle = std::stol(f[4]);
      r.rank_computed = std::stol(f[5]);
      r.ratio_d_min = parse_opt_real(f[6]);
      r.ratio_d_max = parse_opt_real(f[7]);
      r.ratio_s_min = parse_opt_real(f[8]);
      r.ratio_s_max = parse_opt_real(f[9]);
      r.time_s = std::stod(f[10]);
      r.mean_ks = std::stod(f[11]);
      r.breaks = std::stol(f[12]);
      r.fallbacks = std::stol(f[13]);
      r.flags = f[14];
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw parse_error("malformed numeric field", number);
    }
  }
  return rows;
}

std::vector<SweepPoint> grid_sweep(const std::vector<MatrixCase>& matrices, const std::vector<double>& taus,
                                   const std::vector<double>& deltas, const RunConfig& base,
                                   const CompareOptions& opt) {
  for (double t : taus) {
    if (!(t >= 0.0 && t <= 1.0)) throw contract_error("grid_sweep: tau outside [0, 1]");
  }
  for (double d : deltas) {
    if (!(d >= 0.0 && d <= 1.0)) throw contract_error("grid_sweep: delta outside [0, 1]");
  }
  std::vector<Oracle> oracles(matrices.size());
  parallel_for(matrices.size(), opt.jobs, [&](std::size_t i) { oracles[i] = run_oracle(matrices[i].a, opt); });

  std::vector<SweepPoint> points;
  for (double tau : taus) {
    for (double delta : deltas) {
      SweepPoint p;
      p.tau = tau;
      p.delta = delta;
      RunConfig cfg = base;
      cfg.params.tau = tau == 0.0 ? std::numeric_limits<double>::epsilon() : tau;
      cfg.params.delta = delta == 1.0 ? std::nextafter(1.0, 0.0) : delta;
      double worst = std::numeric_limits<double>::infinity();
      bool any = false;
      std::vector<double> times(matrices.size(), 0.0);
      std::vector<std::optional<double>> mins(matrices.size());
      parallel_for(matrices.size(), opt.jobs, [&](std::size_t i) {
        const Timed t = timed_run(matrices[i].a, cfg);
        times[i] = t.seconds;
        if (oracles[i].ok && oracles[i].rank > 0) {
          mins[i] = ratio_summary(t.result, oracles[i].sigmas, oracles[i].rank).d_min;
        }
      });
      for (std::size_t i = 0; i < matrices.size(); ++i) {
        p.cumulative_time_s += times[i];
        if (mins[i]) {
          worst = std::min(worst, *mins[i]);
          any = true;
        }
      }
      if (any) {
        p.min_ratio = worst;
        if (worst > 0) p.magnitude = static_cast<int>(std::floor(std::log10(worst)));
      }
      points.push_back(p);
    }
  }
  return points;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points) {
  out << kSweepHeader << '\n';
  for (const SweepPoint& p : points) {
    out << format_real(p.tau) << ',' << format_real(p.delta) << ',' << opt_real(p.min_ratio) << ','
        << (p.magnitude ? std::to_string(*p.magnitude) : std::string()) << ',' << format_real(p.cumulative_time_s)
        << '\n';
  }
}

}  // namespace qrdm::harness
