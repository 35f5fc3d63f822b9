#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tflab/common.hpp"

namespace tflab {

// Periodic sample grid: n points x_i = x0 + i*h on [x0, x1), h = (x1-x0)/n.
// Sample i stands for the cell [x_i, x_i + h).
class Grid {
 public:
  Grid() = default;
  Grid(double x0, double x1, std::size_t n);

  [[nodiscard]] double x0() const { return x0_; }
  [[nodiscard]] double x1() const { return x1_; }
  [[nodiscard]] std::size_t n() const { return n_; }
  [[nodiscard]] double spacing() const { return h_; }
  [[nodiscard]] double length() const { return x1_ - x0_; }
  [[nodiscard]] double x(std::size_t i) const { return x0_ + static_cast<double>(i) * h_; }
  [[nodiscard]] Interval domain() const { return {x0_, x1_}; }
  // Signed DFT bin for storage index k, and its frequency k/L.
  [[nodiscard]] std::int64_t signed_bin(std::size_t k) const;
  [[nodiscard]] std::size_t storage_bin(std::int64_t k) const;
  [[nodiscard]] double freq(std::int64_t k) const { return static_cast<double>(k) / length(); }
  [[nodiscard]] double nyquist() const { return 0.5 * static_cast<double>(n_) / length(); }
  // First sample index with x_i >= x (clamped to [0, n]).
  [[nodiscard]] std::size_t first_at_or_after(double x) const;
  // Grid with the same domain and 2n points.
  [[nodiscard]] Grid refined() const { return Grid(x0_, x1_, 2 * n_); }
  // True when h and x0 are dyadic multiples compatible with dyadic intervals.
  [[nodiscard]] bool dyadic_aligned() const;

  bool operator==(const Grid& o) const { return x0_ == o.x0_ && x1_ == o.x1_ && n_ == o.n_; }

 private:
  double x0_ = 0.0, x1_ = 1.0, h_ = 0.0;
  std::size_t n_ = 0;
};

class GridFunction {
 public:
  GridFunction() = default;
  explicit GridFunction(const Grid& g) : grid_(g), v_(g.n(), cplx{}) {}
  GridFunction(const Grid& g, std::vector<cplx> values);

  template <class F>
  static GridFunction sample(const Grid& g, F&& f) {
    GridFunction out(g);
    for (std::size_t i = 0; i < g.n(); ++i) out.v_[i] = cplx(f(g.x(i)));
    return out;
  }

  [[nodiscard]] const Grid& grid() const { return grid_; }
  [[nodiscard]] std::size_t size() const { return v_.size(); }
  [[nodiscard]] const std::vector<cplx>& values() const { return v_; }
  [[nodiscard]] std::vector<cplx>& values() { return v_; }
  cplx& operator[](std::size_t i) { return v_[i]; }
  const cplx& operator[](std::size_t i) const { return v_[i]; }
  // Piecewise-linear interpolation; zero outside the domain (non-periodic).
  [[nodiscard]] cplx interpolate(double x) const;

  [[nodiscard]] double norm_p(double p) const;  // p = inf allowed
  [[nodiscard]] double norm1() const { return norm_p(1.0); }
  [[nodiscard]] double norm2() const { return norm_p(2.0); }
  [[nodiscard]] double norm_inf() const;
  [[nodiscard]] cplx integral() const;
  // Measure of {f != 0}.
  [[nodiscard]] double support_measure(double tol = 0.0) const;

  GridFunction& operator+=(const GridFunction& o);
  GridFunction& operator-=(const GridFunction& o);
  GridFunction& operator*=(cplx c);
  GridFunction& operator*=(const GridFunction& o);
  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(GridFunction a, cplx c) { return a *= c; }
  friend GridFunction operator*(cplx c, GridFunction a) { return a *= c; }
  friend GridFunction operator*(GridFunction a, const GridFunction& b) { return a *= b; }
  [[nodiscard]] GridFunction conj() const;
  [[nodiscard]] GridFunction abs() const;
  [[nodiscard]] GridFunction modulated(double xi) const;  // f(x) e^{2 pi i xi x}

 private:
  Grid grid_;
  std::vector<cplx> v_;
};

void require_same_grid(const Grid& a, const Grid& b);

// h * sum f_i conj(g_i)
[[nodiscard]] cplx inner_product(const GridFunction& f, const GridFunction& g);
[[nodiscard]] double sup_diff(const GridFunction& f, const GridFunction& g);

// Dyadic interval [m 2^j, (m+1) 2^j) in absolute coordinates.
struct DyadicInterval {
  int j = 0;
  std::int64_t m = 0;

  [[nodiscard]] double length() const;
  [[nodiscard]] double lo() const;
  [[nodiscard]] double hi() const { return lo() + length(); }
  [[nodiscard]] Interval interval() const { return {lo(), hi()}; }
  [[nodiscard]] DyadicInterval parent() const;
  [[nodiscard]] bool contains(const DyadicInterval& o) const;
  static DyadicInterval containing(double x, int j);
  bool operator==(const DyadicInterval&) const = default;
  auto operator<=>(const DyadicInterval&) const = default;
};

// Finite union of half-open intervals, kept sorted and merged.
class IntervalSet {
 public:
  IntervalSet() = default;
  explicit IntervalSet(std::vector<Interval> parts);
  static IntervalSet single(double lo, double hi) { return IntervalSet({{lo, hi}}); }
  // Union of the cells of samples where mask is set.
  static IntervalSet from_mask(const Grid& g, const std::vector<bool>& mask);

  [[nodiscard]] const std::vector<Interval>& parts() const { return parts_; }
  [[nodiscard]] bool empty() const { return parts_.empty(); }
  [[nodiscard]] double measure() const;
  [[nodiscard]] bool contains(double x) const;
  [[nodiscard]] bool contains(const Interval& I, double tol = 0.0) const;
  [[nodiscard]] IntervalSet unite(const IntervalSet& o) const;
  [[nodiscard]] IntervalSet intersect(const IntervalSet& o) const;
  [[nodiscard]] IntervalSet subtract(const IntervalSet& o) const;
  [[nodiscard]] GridFunction indicator(const Grid& g) const;

 private:
  void normalize();
  std::vector<Interval> parts_;
};

// Dyadic Hardy-Littlewood maximal function
//   M_p f(x_i) = sup over dyadic-length sample windows Q containing x_i
//   of (avg_Q |f|^p)^{1/p}.
// Windows have 2^l samples and lie inside the domain. O(n log n).
[[nodiscard]] GridFunction maximal_function(const GridFunction& f, double p);
// Same supremum over all sample windows of any length; O(n^2) oracle.
[[nodiscard]] GridFunction maximal_function_bruteforce(const GridFunction& f, double p);

// Maximal dyadic intervals Q (|Q| >= h) with dilation*Q inside the domain
// and Re g > lam at every sample of dilation*Q. Requires a dyadic-aligned grid.
[[nodiscard]] std::vector<DyadicInterval> superlevel_decompose(const GridFunction& g, double lam,
                                                               double dilation = 9.0);

// Sample index range [b, e) of the cells inside I.
struct IndexRange {
  std::size_t b = 0, e = 0;
  [[nodiscard]] std::size_t size() const { return e > b ? e - b : 0; }
};
[[nodiscard]] IndexRange sample_range(const Grid& g, const Interval& I);

// CSV columns x,re,im. The grid is inferred from the x column.
void write_csv(const GridFunction& f, const std::string& path);
void write_csv(const GridFunction& f, std::ostream& os);
[[nodiscard]] GridFunction read_csv(const std::string& path);

}  // namespace tflab
