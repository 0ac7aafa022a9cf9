// qrdm: factor, compare, sweep and generate test matrices from the shell.
//
//   qrdm factor  INPUT            [--algo A] [--tau T] [--delta D] [--kdm K] [--stop S] [--check]
//   qrdm compare INPUT...         [--algo A]... [--jobs J] [--rank-factor F] [--out CSV]
//   qrdm sweep   INPUT...         [--taus GRID] [--deltas GRID] [--out CSV]
//   qrdm gen     SPEC --out FILE  |  qrdm gen --suite DIR
//
// INPUT is a MatrixMarket file, a directory of .mtx files, or a generator
// spec such as gen:random:m=60,n=40,r=15,gap=1e8.
//
// Exit status: 0 success, 1 parse or configuration error, 2 oracle failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "qrdm/harness/generators.hpp"
#include "qrdm/harness/matrix_market.hpp"
#include "qrdm/harness/report.hpp"
#include "qrdm/svd_oracle.hpp"

namespace fs = std::filesystem;
using namespace qrdm;
using namespace qrdm::harness;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitOracle = 2;

struct Common {
  double tau{0.15};
  double delta{0.9};
  Index kdm{64};
  std::string stop{"n"};
  std::uint64_t seed{0};
  bool delta_max{false};
  std::string out;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--tau", c.tau, "norm threshold tau in (0, 1]")->capture_default_str();
  cmd->add_option("--delta", c.delta, "cosine threshold delta in [0, 1)")->capture_default_str();
  cmd->add_option("--kdm", c.kdm, "candidate cap k_DM")->capture_default_str();
  cmd->add_option("--stop", c.stop, "stopping rule")
      ->check(CLI::IsMember({"n", "sqrt-n", "none"}))
      ->capture_default_str();
  cmd->add_option("--seed", c.seed, "seed for generator inputs without one")->capture_default_str();
  cmd->add_flag("--delta-max", c.delta_max, "use the dominance-guaranteeing delta");
  cmd->add_option("--out", c.out, "output file (default stdout)");
}

Algorithm parse_algo(const std::string& s) {
  if (s == "qrp") return Algorithm::QRP;
  if (s == "qrdm") return Algorithm::QRDM;
  if (s == "qrdm2") return Algorithm::QRDM2;
  throw contract_error("unknown algorithm '" + s + "'");
}

RunConfig make_config(const Common& c, const std::string& algo) {
  RunConfig cfg;
  cfg.algo = parse_algo(algo);
  cfg.params.tau = c.tau;
  cfg.params.delta = c.delta;
  cfg.params.k_dm = c.kdm;
  cfg.params.use_delta_max = c.delta_max;
  cfg.params.validate();
  cfg.seed = c.seed;
  cfg.stop.variant = c.stop == "n"        ? StopCriterion::Variant::EpsTimesN
                     : c.stop == "sqrt-n" ? StopCriterion::Variant::EpsTimesSqrtN
                                          : StopCriterion::Variant::None;
  return cfg;
}

std::string spec_id(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  return s;
}

std::vector<MatrixCase> load_inputs(const std::vector<std::string>& inputs, std::uint64_t seed) {
  std::vector<MatrixCase> out;
  for (const std::string& in : inputs) {
    if (is_generator_spec(in)) {
      out.push_back({spec_id(in), generate(in, seed)});
    } else if (fs::is_directory(in)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(in)) {
        if (e.path().extension() == ".mtx") files.push_back(e.path());
      }
      std::sort(files.begin(), files.end());
      for (const auto& f : files) out.push_back({f.stem().string(), read_matrix_market(f.string())});
    } else {
      out.push_back({fs::path(in).stem().string(), read_matrix_market(in)});
    }
  }
  if (out.empty()) throw contract_error("no input matrices");
  return out;
}

// "a:b:step" (inclusive) or a comma-separated list.
std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  if (std::count(s.begin(), s.end(), ':') == 2) {
    double a = 0, b = 0, h = 0;
    char c1 = 0, c2 = 0;
    std::istringstream ss(s);
    if (!(ss >> a >> c1 >> b >> c2 >> h) || !(h > 0) || b < a) throw contract_error("bad grid '" + s + "'");
    const long steps = std::lround(std::floor((b - a) / h + 1e-9));
    for (long i = 0; i <= steps; ++i) out.push_back(a + h * double(i));
    return out;
  }
  std::istringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    out.push_back(std::stod(item, &used));
    if (used != item.size()) throw contract_error("bad grid value '" + item + "'");
  }
  return out;
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw contract_error("cannot write " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

int run_factor(const Common& c, const std::string& algo, const std::string& input, bool check) {
  const RunConfig cfg = make_config(c, algo);
  const auto cases = load_inputs({input}, c.seed);
  Output out(c.out);
  std::ostream& os = out.stream();
  int status = kExitOk;
  for (const MatrixCase& mc : cases) {
    const RRQRResult<double> r = factorize<double>(mc.a, cfg.algo, cfg.params, cfg.stop);
    Index breaks = 0, fallbacks = 0;
    for (const auto& s : r.step_log) {
      breaks += s.broke_early;
      fallbacks += s.fell_back_to_scalar;
    }
    os << "matrix " << mc.id << "\nalgo " << to_string(cfg.algo) << "\nm " << mc.a.rows() << "\nn "
       << mc.a.cols() << "\nrank " << r.rank << "\nsteps " << r.step_log.size() << "\nbreaks " << breaks
       << "\nfallbacks " << fallbacks << "\nstopped_early " << (r.stopped_early ? 1 : 0) << "\nperm";
    for (Index k = 0; k < r.perm.size(); ++k) os << ' ' << r.perm[k] + 1;  // 1-based
    os << "\nabs_diag";
    const Vector<double> d = r.abs_diagonal();
    for (Index k = 0; k < d.size(); ++k) os << ' ' << format_real(d(k));
    os << '\n';
    if (!check) continue;
    try {
      const auto reports = cfg.algo == Algorithm::QRP ? qrp_theorem_check(mc.a, r)
                                                      : qrdm_theorem_check(mc.a, r, cfg.params);
      Index violations = 0;
      for (const auto& b : reports) {
        if (b.violated()) {
          ++violations;
          os << "violated " << b.name << ' ' << format_real(b.lhs) << ' ' << format_real(b.rhs) << '\n';
        }
      }
      os << "bound_checks " << reports.size() << "\nbound_violations " << violations << '\n';
      if (violations) status = kExitOracle;
    } catch (const std::exception& e) {
      std::cerr << "oracle failure on " << mc.id << ": " << e.what() << '\n';
      status = kExitOracle;
    }
  }
  return status;
}

int run_compare(const Common& c, const std::vector<std::string>& algos, const std::vector<std::string>& inputs,
                unsigned jobs, double rank_factor) {
  std::vector<RunConfig> configs;
  for (const auto& a : algos) configs.push_back(make_config(c, a));
  const auto cases = load_inputs(inputs, c.seed);
  CompareOptions opt;
  opt.jobs = jobs;
  opt.rank_factor = rank_factor;
  const auto rows = compare_run(configs, cases, opt);
  Output out(c.out);
  write_csv(out.stream(), rows);
  const bool failed = std::any_of(rows.begin(), rows.end(), [](const auto& r) { return r.oracle_failed(); });
  return failed ? kExitOracle : kExitOk;
}

int run_sweep(const Common& c, const std::string& algo, const std::vector<std::string>& inputs,
              const std::string& taus, const std::string& deltas, unsigned jobs, double rank_factor) {
  const RunConfig base = make_config(c, algo);
  const auto cases = load_inputs(inputs, c.seed);
  CompareOptions opt;
  opt.jobs = jobs;
  opt.rank_factor = rank_factor;
  const auto points = grid_sweep(cases, parse_grid(taus), parse_grid(deltas), base, opt);
  Output out(c.out);
  write_sweep_csv(out.stream(), points);
  const bool failed = std::any_of(points.begin(), points.end(), [](const auto& p) { return !p.min_ratio; });
  return failed ? kExitOracle : kExitOk;
}

int run_gen(const Common& c, const std::string& spec, const std::string& suite_dir) {
  if (!suite_dir.empty()) {
    fs::create_directories(suite_dir);
    std::ofstream manifest(fs::path(suite_dir) / "manifest.csv");
    manifest << "id,kind,m,n,r,gap,kappa,c,seed,generator\n";
    for (const FixtureSpec& f : fixture_suite()) {
      write_matrix_market((fs::path(suite_dir) / (f.id + ".mtx")).string(), generate(f.generator()));
      manifest << f.id << ',' << f.kind << ',' << f.m << ',' << f.n << ',' << f.r << ',' << format_real(f.gap)
               << ',' << format_real(f.kappa) << ',' << format_real(f.c) << ',' << f.seed << ','
               << spec_id(f.generator()) << '\n';
    }
    return kExitOk;
  }
  if (spec.empty()) throw contract_error("gen: need a generator spec or --suite");
  const Matrix<double> a = generate(spec, c.seed);
  if (c.out.empty()) {
    write_matrix_market(std::cout, a);
  } else {
    write_matrix_market(c.out, a);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rank-revealing QR with Deviation Maximization pivoting"};
  app.require_subcommand(1);

  Common factor_opts, compare_opts, sweep_opts, gen_opts;
  std::string factor_algo = "qrdm2", sweep_algo = "qrdm2", factor_input, gen_spec, suite_dir;
  std::vector<std::string> compare_algos{"qrp", "qrdm", "qrdm2"}, compare_inputs, sweep_inputs;
  std::string taus = "0.15", deltas = "0.9";
  unsigned compare_jobs = 1, sweep_jobs = 1;
  double compare_rank_factor = 0, sweep_rank_factor = 0;
  bool check = false;

  auto* factor = app.add_subcommand("factor", "factor one matrix and print the pivoting trace");
  add_common(factor, factor_opts);
  factor->add_option("--algo", factor_algo, "qrp, qrdm or qrdm2")->capture_default_str();
  factor->add_flag("--check", check, "verify the per-step singular value bounds");
  factor->add_option("input", factor_input, "matrix file or generator spec")->required();

  auto* compare = app.add_subcommand("compare", "oracle comparison report (CSV)");
  add_common(compare, compare_opts);
  compare->add_option("--algo", compare_algos, "algorithms to run (repeatable)")->capture_default_str();
  compare->add_option("--jobs", compare_jobs, "worker threads")->capture_default_str();
  compare->add_option("--rank-factor", compare_rank_factor, "oracle rank threshold factor (default eps*n)");
  compare->add_option("inputs", compare_inputs, "matrix files, directories or generator specs")->required();

  auto* sweep = app.add_subcommand("sweep", "(tau, delta) grid report (CSV)");
  add_common(sweep, sweep_opts);
  sweep->add_option("--algo", sweep_algo, "qrdm or qrdm2")->capture_default_str();
  sweep->add_option("--taus", taus, "a:b:step or comma list")->capture_default_str();
  sweep->add_option("--deltas", deltas, "a:b:step or comma list")->capture_default_str();
  sweep->add_option("--jobs", sweep_jobs, "worker threads")->capture_default_str();
  sweep->add_option("--rank-factor", sweep_rank_factor, "oracle rank threshold factor (default eps*n)");
  sweep->add_option("inputs", sweep_inputs, "matrix files, directories or generator specs")->required();

  auto* gen = app.add_subcommand("gen", "write a generated matrix or the fixture suite");
  add_common(gen, gen_opts);
  gen->add_option("--suite", suite_dir, "write the fixture suite and manifest into DIR");
  gen->add_option("spec", gen_spec, "generator spec");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (factor->parsed()) return run_factor(factor_opts, factor_algo, factor_input, check);
    if (compare->parsed()) {
      return run_compare(compare_opts, compare_algos, compare_inputs, compare_jobs, compare_rank_factor);
    }
    if (sweep->parsed()) {
      return run_sweep(sweep_opts, sweep_algo, sweep_inputs, taus, deltas, sweep_jobs, sweep_rank_factor);
    }
    if (gen->parsed()) return run_gen(gen_opts, gen_spec, suite_dir);
  } catch (const convergence_error<double>& e) {
    std::cerr << "oracle failure: " << e.what() << '\n';
    return kExitOracle;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitConfig;
}
