#include "qrdm/harness/matrix_market.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace qrdm::harness {

namespace {

constexpr long long kMaxEntries = 1LL << 28;

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return s;
}

std::vector<std::string> tokens(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> out;
  std::string t;
  while (ss >> t) out.push_back(t);
  return out;
}

bool blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](unsigned char ch) { return std::isspace(ch); });
}

long long to_count(const std::string& t, std::size_t line) {
  long long v = 0;
  const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec == std::errc::result_out_of_range) throw parse_error("dimension overflow: " + t, line);
  if (ec != std::errc() || end != t.data() + t.size()) throw parse_error("expected integer, got '" + t + "'", line);
  if (v < 0) throw parse_error("negative size: " + t, line);
  return v;
}

double to_real(const std::string& t, std::size_t line) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(t, &used);
  } catch (const std::out_of_range&) {
    throw parse_error("value out of range: " + t, line);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != t.size()) throw parse_error("expected real, got '" + t + "'", line);
  return v;
}

class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next line that is neither a comment nor blank.
  bool next(std::string& line) {
    while (std::getline(in_, line)) {
      ++number_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '%' || blank(line)) continue;
      return true;
    }
    return false;
  }

  bool raw(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++number_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

  std::size_t number() const { return number_; }

 private:
  std::istream& in_;
  std::size_t number_{0};
};

}  // namespace

Matrix<double> read_matrix_market(std::istream& in) {
  LineReader reader(in);
  std::string line;
  if (!reader.raw(line)) throw parse_error("empty input", 1);
  const auto head = tokens(line);
  if (head.size() != 5 || head[0] != "%%MatrixMarket" || lower(head[1]) != "matrix") {
    throw parse_error("expected '%%MatrixMarket matrix <format> real general'", reader.number());
  }
  const std::string format = lower(head[2]);
  if (format != "array" && format != "coordinate") {
    throw parse_error("unsupported format '" + head[2] + "'", reader.number());
  }
  if (lower(head[3]) != "real") throw parse_error("unsupported field '" + head[3] + "'", reader.number());
  if (lower(head[4]) != "general") throw parse_error("unsupported symmetry '" + head[4] + "'", reader.number());
  const bool coordinate = format == "coordinate";

  if (!reader.next(line)) throw parse_error("missing size line", reader.number() + 1);
  const auto size = tokens(line);
  if (size.size() != (coordinate ? 3u : 2u)) throw parse_error("malformed size line", reader.number());
  const long long m = to_count(size[0], reader.number());
  const long long n = to_count(size[1], reader.number());
  if (m > 0 && n > kMaxEntries / m) throw parse_error("dimension overflow", reader.number());
  Matrix<double> a = Matrix<double>::Zero(m, n);

  if (coordinate) {
    const long long nnz = to_count(size[2], reader.number());
    if (nnz > m * n) throw parse_error("more entries than the matrix holds", reader.number());
    for (long long k = 0; k < nnz; ++k) {
      if (!reader.next(line)) throw parse_error("unexpected end of file", reader.number() + 1);
      const auto t = tokens(line);
      if (t.size() != 3) throw parse_error("expected 'row col value'", reader.number());
      const long long i = to_count(t[0], reader.number());
      const long long j = to_count(t[1], reader.number());
      if (i < 1 || i > m || j < 1 || j > n) throw parse_error("index out of range", reader.number());
      a(i - 1, j - 1) += to_real(t[2], reader.number());
    }
  } else {
    const long long total = m * n;
    for (long long k = 0; k < total; ++k) {
      if (!reader.next(line)) throw parse_error("unexpected end of file", reader.number() + 1);
      const auto t = tokens(line);
      if (t.size() != 1) throw parse_error("expected one value per line", reader.number());
      a(k % m, k / m) = to_real(t[0], reader.number());
    }
  }
  if (reader.next(line)) throw parse_error("trailing data after last entry", reader.number());
  return a;
}

Matrix<double> read_matrix_market(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open " + path, 0);
  return read_matrix_market(in);
}

void write_matrix_market(std::ostream& out, const Matrix<double>& a) {
  out << "%%MatrixMarket matrix array real general\n" << a.rows() << ' ' << a.cols() << '\n';
  char buf[40];
  for (Index j = 0; j < a.cols(); ++j) {
    for (Index i = 0; i < a.rows(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g\n", a(i, j));
      out << buf;
    }
  }
}

void write_matrix_market(const std::string& path, const Matrix<double>& a) {
  std::ofstream out(path);
  if (!out) throw contract_error("cannot write " + path);
  write_matrix_market(out, a);
  if (!out) throw contract_error("write failed: " + path);
}

}  // namespace qrdm::harness
