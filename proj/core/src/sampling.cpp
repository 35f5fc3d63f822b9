#include "tflab/sampling.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <sstream>

namespace tflab {

namespace {

bool is_pow2(std::size_t n) { return n >= 2 && (n & (n - 1)) == 0; }

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

Grid::Grid(double x0, double x1, std::size_t n) : x0_(x0), x1_(x1), n_(n) {
  if (!std::isfinite(x0) || !std::isfinite(x1) || !(x1 > x0))
    throw std::invalid_argument(fmt::format("grid: need x0 < x1, got [{}, {})", x0, x1));
  if (!is_pow2(n)) throw std::invalid_argument(fmt::format("grid: n = {} is not a power of two >= 2", n));
  h_ = (x1 - x0) / static_cast<double>(n);
}

std::int64_t Grid::signed_bin(std::size_t k) const {
  const auto kk = static_cast<std::int64_t>(k), nn = static_cast<std::int64_t>(n_);
  return kk < nn / 2 ? kk : kk - nn;
}

std::size_t Grid::storage_bin(std::int64_t k) const {
  const auto nn = static_cast<std::int64_t>(n_);
  return static_cast<std::size_t>(((k % nn) + nn) % nn);
}

std::size_t Grid::first_at_or_after(double x) const {
  const double t = (x - x0_) / h_;
  const double c = std::ceil(t - 1e-9);
  if (c <= 0) return 0;
  if (c >= static_cast<double>(n_)) return n_;
  return static_cast<std::size_t>(c);
}

bool Grid::dyadic_aligned() const {
  int e = 0;
  const double mant = std::frexp(h_, &e);
  if (mant != 0.5) return false;
  const double q = x0_ / h_;
  return q == std::floor(q);
}

GridFunction::GridFunction(const Grid& g, std::vector<cplx> values) : grid_(g), v_(std::move(values)) {
  if (v_.size() != g.n()) throw GridMismatch("grid function: value count does not match grid");
}

cplx GridFunction::interpolate(double x) const {
  const double t = (x - grid_.x0()) / grid_.spacing();
  const double fl = std::floor(t);
  const double w = t - fl;
  const auto i = static_cast<std::int64_t>(fl);
  const auto n = static_cast<std::int64_t>(v_.size());
  auto at = [&](std::int64_t k) { return (k >= 0 && k < n) ? v_[static_cast<std::size_t>(k)] : cplx{}; };
  return (1.0 - w) * at(i) + w * at(i + 1);
}

double GridFunction::norm_inf() const {
  double m = 0.0;
  for (const auto& z : v_) m = std::max(m, std::abs(z));
  return m;
}

double GridFunction::norm_p(double p) const {
  if (std::isinf(p)) return norm_inf();
  if (!(p > 0)) throw std::invalid_argument("norm_p: p must be positive");
  double s = 0.0;
  for (const auto& z : v_) s += std::pow(std::abs(z), p);
  return std::pow(s * grid_.spacing(), 1.0 / p);
}

cplx GridFunction::integral() const {
  cplx s{};
  for (const auto& z : v_) s += z;
  return s * grid_.spacing();
}

double GridFunction::support_measure(double tol) const {
  std::size_t c = 0;
  for (const auto& z : v_)
    if (std::abs(z) > tol) ++c;
  return static_cast<double>(c) * grid_.spacing();
}

void require_same_grid(const Grid& a, const Grid& b) {
  if (!(a == b))
    throw GridMismatch(fmt::format("grid mismatch: [{}, {})/{} vs [{}, {})/{}", a.x0(), a.x1(), a.n(), b.x0(),
                                   b.x1(), b.n()));
}

GridFunction& GridFunction::operator+=(const GridFunction& o) {
  require_same_grid(grid_, o.grid_);
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& o) {
  require_same_grid(grid_, o.grid_);
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
  return *this;
}

GridFunction& GridFunction::operator*=(cplx c) {
  for (auto& z : v_) z *= c;
  return *this;
}

GridFunction& GridFunction::operator*=(const GridFunction& o) {
  require_same_grid(grid_, o.grid_);
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] *= o.v_[i];
  return *this;
}

GridFunction GridFunction::conj() const {
  GridFunction out(*this);
  for (auto& z : out.v_) z = std::conj(z);
  return out;
}

GridFunction GridFunction::abs() const {
  GridFunction out(*this);
  for (auto& z : out.v_) z = std::abs(z);
  return out;
}

GridFunction GridFunction::modulated(double xi) const {
  GridFunction out(*this);
  for (std::size_t i = 0; i < v_.size(); ++i) out.v_[i] *= std::polar(1.0, 2.0 * kPi * xi * grid_.x(i));
  return out;
}

cplx inner_product(const GridFunction& f, const GridFunction& g) {
  require_same_grid(f.grid(), g.grid());
  cplx s{};
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * std::conj(g[i]);
  return s * f.grid().spacing();
}

double sup_diff(const GridFunction& f, const GridFunction& g) {
  require_same_grid(f.grid(), g.grid());
  double m = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) m = std::max(m, std::abs(f[i] - g[i]));
  return m;
}

double DyadicInterval::length() const { return std::ldexp(1.0, j); }
double DyadicInterval::lo() const { return static_cast<double>(m) * length(); }
DyadicInterval DyadicInterval::parent() const { return {j + 1, floor_div(m, 2)}; }

bool DyadicInterval::contains(const DyadicInterval& o) const {
  if (o.j > j) return false;
  const int d = j - o.j;
  if (d >= 62) return false;
  return floor_div(o.m, std::int64_t{1} << d) == m;
}

DyadicInterval DyadicInterval::containing(double x, int j) {
  return {j, static_cast<std::int64_t>(std::floor(x / std::ldexp(1.0, j)))};
}

IntervalSet::IntervalSet(std::vector<Interval> parts) : parts_(std::move(parts)) { normalize(); }

void IntervalSet::normalize() {
  std::erase_if(parts_, [](const Interval& I) { return I.empty(); });
  std::sort(parts_.begin(), parts_.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  std::vector<Interval> out;
  for (const auto& I : parts_) {
    if (!out.empty() && I.lo <= out.back().hi)
      out.back().hi = std::max(out.back().hi, I.hi);
    else
      out.push_back(I);
  }
  parts_ = std::move(out);
}

IntervalSet IntervalSet::from_mask(const Grid& g, const std::vector<bool>& mask) {
  if (mask.size() != g.n()) throw GridMismatch("interval set: mask size does not match grid");
  std::vector<Interval> parts;
  std::size_t i = 0;
  while (i < mask.size()) {
    if (!mask[i]) {
      ++i;
      continue;
    }
    std::size_t e = i;
    while (e < mask.size() && mask[e]) ++e;
    parts.push_back({g.x(i), g.x0() + static_cast<double>(e) * g.spacing()});
    i = e;
  }
  return IntervalSet(std::move(parts));
}

double IntervalSet::measure() const {
  double s = 0.0;
  for (const auto& I : parts_) s += I.length();
  return s;
}

bool IntervalSet::contains(double x) const {
  auto it = std::upper_bound(parts_.begin(), parts_.end(), x, [](double v, const Interval& I) { return v < I.lo; });
  if (it == parts_.begin()) return false;
  return std::prev(it)->contains(x);
}

bool IntervalSet::contains(const Interval& J, double tol) const {
  return std::any_of(parts_.begin(), parts_.end(), [&](const Interval& I) { return I.contains(J, tol); });
}

IntervalSet IntervalSet::unite(const IntervalSet& o) const {
  auto parts = parts_;
  parts.insert(parts.end(), o.parts_.begin(), o.parts_.end());
  return IntervalSet(std::move(parts));
}

IntervalSet IntervalSet::intersect(const IntervalSet& o) const {
  std::vector<Interval> out;
  std::size_t a = 0, b = 0;
  while (a < parts_.size() && b < o.parts_.size()) {
    const double lo = std::max(parts_[a].lo, o.parts_[b].lo);
    const double hi = std::min(parts_[a].hi, o.parts_[b].hi);
    if (hi > lo) out.push_back({lo, hi});
    if (parts_[a].hi < o.parts_[b].hi)
      ++a;
    else
      ++b;
  }
  return IntervalSet(std::move(out));
}

IntervalSet IntervalSet::subtract(const IntervalSet& o) const {
  std::vector<Interval> out;
  for (const auto& I : parts_) {
    double cur = I.lo;
    for (const auto& J : o.parts_) {
      if (J.hi <= cur) continue;
      if (J.lo >= I.hi) break;
      if (J.lo > cur) out.push_back({cur, J.lo});
      cur = std::max(cur, J.hi);
      if (cur >= I.hi) break;
    }
    if (cur < I.hi) out.push_back({cur, I.hi});
  }
  return IntervalSet(std::move(out));
}

GridFunction IntervalSet::indicator(const Grid& g) const {
  GridFunction out(g);
  for (const auto& I : parts_) {
    const auto r = sample_range(g, I);
    for (std::size_t i = r.b; i < r.e; ++i) out[i] = 1.0;
  }
  return out;
}

IndexRange sample_range(const Grid& g, const Interval& I) {
  if (I.empty()) return {};
  return {g.first_at_or_after(I.lo), g.first_at_or_after(I.hi)};
}

GridFunction maximal_function(const GridFunction& f, double p) {
  const std::size_t n = f.size();
  GridFunction out(f.grid());
  if (std::isinf(p)) {
    const double m = f.norm_inf();
    for (std::size_t i = 0; i < n; ++i) out[i] = m;
    return out;
  }
  if (!(p > 0)) throw std::invalid_argument("maximal_function: p must be positive");
  std::vector<double> pre(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) pre[i + 1] = pre[i] + std::pow(std::abs(f[i]), p);
  std::vector<double> best(n, 0.0), avg(n);
  for (std::size_t len = 1; len <= n; len *= 2) {
    const std::size_t starts = n - len + 1;
    for (std::size_t s = 0; s < starts; ++s) avg[s] = (pre[s + len] - pre[s]) / static_cast<double>(len);
    // starts containing i: [i-len+1, i] clipped to [0, starts-1]
    std::deque<std::size_t> dq;
    std::size_t next = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t hi = std::min(i, starts - 1);
      while (next <= hi) {
        while (!dq.empty() && avg[dq.back()] <= avg[next]) dq.pop_back();
        dq.push_back(next++);
      }
      const std::size_t lo = i + 1 >= len ? i + 1 - len : 0;
      while (!dq.empty() && dq.front() < lo) dq.pop_front();
      if (!dq.empty()) best[i] = std::max(best[i], avg[dq.front()]);
    }
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = std::pow(best[i], 1.0 / p);
  return out;
}

GridFunction maximal_function_bruteforce(const GridFunction& f, double p) {
  const std::size_t n = f.size();
  GridFunction out(f.grid());
  if (std::isinf(p)) return maximal_function(f, p);
  std::vector<double> a(n), best(n, 0.0), suf(n + 2);
  for (std::size_t i = 0; i < n; ++i) a[i] = std::pow(std::abs(f[i]), p);
  for (std::size_t s = 0; s < n; ++s) {
    double sum = 0.0;
    std::vector<double> av(n + 1, 0.0);
    for (std::size_t e = s + 1; e <= n; ++e) {
      sum += a[e - 1];
      av[e] = sum / static_cast<double>(e - s);
    }
    suf[n + 1] = 0.0;
    for (std::size_t e = n; e > s; --e) suf[e] = std::max(suf[e + 1], av[e]);
    for (std::size_t i = s; i < n; ++i) best[i] = std::max(best[i], suf[i + 1]);
  }
  for (std::size_t i = 0; i < n; ++i) out[i] = std::pow(best[i], 1.0 / p);
  return out;
}

std::vector<DyadicInterval> superlevel_decompose(const GridFunction& g, double lam, double dilation) {
  const Grid& G = g.grid();
  if (!G.dyadic_aligned()) throw ResolutionError("superlevel_decompose: grid is not dyadic-aligned");
  if (!(dilation >= 1.0)) throw std::invalid_argument("superlevel_decompose: dilation must be >= 1");
  const std::size_t n = G.n();
  std::vector<std::size_t> bad(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) bad[i + 1] = bad[i] + (g[i].real() > lam ? 0 : 1);

  const int jmin = static_cast<int>(std::lround(std::log2(G.spacing())));
  const int jmax = static_cast<int>(std::floor(std::log2(G.length() / dilation) + 1e-12));
  const double tol = 1e-9 * G.spacing();
  auto qualifies = [&](const DyadicInterval& Q) {
    if (Q.j > jmax) return false;
    const Interval D = Q.interval().dilate(dilation);
    if (D.lo < G.x0() - tol || D.hi > G.x1() + tol) return false;
    const auto r = sample_range(G, D);
    if (r.size() == 0) return false;
    return bad[r.e] - bad[r.b] == 0;
  };

  std::vector<DyadicInterval> out;
  for (int j = jmax; j >= jmin; --j) {
    const double len = std::ldexp(1.0, j);
    const auto m0 = static_cast<std::int64_t>(std::ceil(G.x0() / len - 1e-12));
    const auto m1 = static_cast<std::int64_t>(std::floor(G.x1() / len + 1e-12));
    for (std::int64_t m = m0; m < m1; ++m) {
      const DyadicInterval Q{j, m};
      if (qualifies(Q) && !qualifies(Q.parent())) out.push_back(Q);
    }
  }
  std::sort(out.begin(), out.end(), [](const DyadicInterval& a, const DyadicInterval& b) { return a.lo() < b.lo(); });
  return out;
}

void write_csv(const GridFunction& f, std::ostream& os) {
  os << "x,re,im\n";
  for (std::size_t i = 0; i < f.size(); ++i)
    os << fmt::format("{:.17g},{:.17g},{:.17g}\n", f.grid().x(i), f[i].real(), f[i].imag());
}

void write_csv(const GridFunction& f, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_csv: cannot open " + path);
  write_csv(f, os);
}

GridFunction read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_csv: cannot open " + path);
  std::string line;
  std::getline(is, line);
  std::vector<double> xs;
  std::vector<cplx> vs;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    xs.push_back(std::stod(a));
    vs.emplace_back(std::stod(b), c.empty() ? 0.0 : std::stod(c));
  }
  if (xs.size() < 2) throw std::runtime_error("read_csv: need at least two rows");
  const double h = xs[1] - xs[0];
  for (std::size_t i = 1; i < xs.size(); ++i)
    if (std::abs(xs[i] - xs[0] - static_cast<double>(i) * h) > 1e-9 * std::max(1.0, std::abs(xs[i])))
      throw std::runtime_error("read_csv: x column is not uniformly spaced");
  const Grid g(xs[0], xs[0] + h * static_cast<double>(xs.size()), xs.size());
  return GridFunction(g, std::move(vs));
}

}  // namespace tflab
