#include "csv_io.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <stdexcept>

namespace tflab::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t b = 0;
  while (true) {
    const auto e = line.find(',', b);
    out.push_back(trim(line.substr(b, e == std::string::npos ? std::string::npos : e - b)));
    if (e == std::string::npos) break;
    b = e + 1;
  }
  return out;
}

bool parse(const std::string& s, double& v) {
  const char* end = s.data() + s.size();
  const auto [p, ec] = std::from_chars(s.data(), end, v);
  return ec == std::errc() && p == end && !s.empty();
}

}  // namespace

Table read_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error(fmt::format("cannot open '{}'", path));
  Table t;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    const auto fields = split(s);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t i = 0; i < fields.size() && numeric; ++i) numeric = parse(fields[i], row[i]);
    if (!numeric) {
      if (t.rows.empty() && t.header.empty()) {
        t.header = fields;
        continue;
      }
      throw std::runtime_error(fmt::format("{}:{}: non-numeric field", path, lineno));
    }
    if (!t.rows.empty() && row.size() != t.rows.front().size())
      throw std::runtime_error(
          fmt::format("{}:{}: expected {} columns, got {}", path, lineno, t.rows.front().size(), row.size()));
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::vector<GridFunction> read_signals(const std::string& path, int count) {
  const Table t = read_table(path);
  if (t.rows.size() < 2) throw std::runtime_error(fmt::format("{}: need at least two samples", path));
  const std::size_t w = t.rows.front().size();
  const std::size_t per = w == 1 + static_cast<std::size_t>(count) ? 1 : 2;
  if (w != 1 + per * static_cast<std::size_t>(count))
    throw std::runtime_error(fmt::format("{}: expected {} or {} columns (x then {} function{}), got {}", path,
                                         1 + count, 1 + 2 * count, count, count == 1 ? "" : "s", w));
  const std::size_t n = t.rows.size();
  const double x0 = t.rows.front()[0];
  const double h = t.rows[1][0] - x0;
  if (!(h > 0.0)) throw std::runtime_error(fmt::format("{}: x must increase", path));
  for (std::size_t i = 0; i < n; ++i) {
    const double want = x0 + static_cast<double>(i) * h;
    if (std::abs(t.rows[i][0] - want) > 1e-9 * std::max(1.0, std::abs(want)))
      throw std::runtime_error(fmt::format("{}: x is not uniform at row {}", path, i + 1));
  }
  const Grid g(x0, x0 + static_cast<double>(n) * h, n);
  std::vector<GridFunction> out;
  for (int f = 0; f < count; ++f) {
    GridFunction v(g);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = 1 + per * static_cast<std::size_t>(f);
      v[i] = per == 1 ? cplx(t.rows[i][c]) : cplx(t.rows[i][c], t.rows[i][c + 1]);
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<TopDatum> read_tops(const std::string& path) {
  const Table t = read_table(path);
  std::vector<TopDatum> out;
  for (const auto& r : t.rows) {
    if (r.size() != 3) throw std::runtime_error(fmt::format("{}: top rows are lo, hi, xi", path));
    if (!(r[1] > r[0])) throw std::runtime_error(fmt::format("{}: empty top interval [{}, {})", path, r[0], r[1]));
    out.emplace_back(Interval{r[0], r[1]}, r[2]);
  }
  return out;
}

void write_signals(const std::string& path, const std::vector<std::string>& names,
                   const std::vector<GridFunction>& fs) {
  std::string s = "x";
  for (const auto& n : names) s += fmt::format(",{0}_re,{0}_im", n);
  s += '\n';
  const Grid& g = fs.front().grid();
  for (std::size_t i = 0; i < g.n(); ++i) {
    s += fmt::format("{:.17g}", g.x(i));
    for (const auto& f : fs) s += fmt::format(",{:.17g},{:.17g}", f[i].real(), f[i].imag());
    s += '\n';
  }
  if (path == "-") {
    std::cout << s;
    return;
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error(fmt::format("cannot open '{}' for writing", path));
  os << s;
  if (!os) throw std::runtime_error(fmt::format("write to '{}' failed", path));
}

}  // namespace tflab::cli
