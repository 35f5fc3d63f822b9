#pragma once

#include <algorithm>
#include <complex>
#include <cstddef>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace tflab {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kE = 2.718281828459045235360287471352662498;

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Grid too coarse (or too small) to represent the requested object.
struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct GridMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DegeneracyError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Half-open interval [lo, hi).
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] double length() const { return hi - lo; }
  [[nodiscard]] double center() const { return 0.5 * (lo + hi); }
  [[nodiscard]] bool empty() const { return !(hi > lo); }
  [[nodiscard]] bool contains(double x) const { return x >= lo && x < hi; }
  // Containment of intervals, with an absolute slack for rounding.
  [[nodiscard]] bool contains(const Interval& o, double tol = 0.0) const {
    return o.lo >= lo - tol && o.hi <= hi + tol;
  }
  [[nodiscard]] bool intersects(const Interval& o, double tol = 0.0) const {
    return std::min(hi, o.hi) - std::max(lo, o.lo) > tol;
  }
  // Concentric dilate cI.
  [[nodiscard]] Interval dilate(double c) const {
    const double m = center(), r = 0.5 * c * length();
    return {m - r, m + r};
  }
  [[nodiscard]] Interval shifted(double t) const { return {lo + t, hi + t}; }
  [[nodiscard]] Interval scaled(double mu) const { return {mu * lo, mu * hi}; }
  bool operator==(const Interval&) const = default;
};

// Generic named-statistic report shared by the verify_* routines.
struct Report {
  std::string name;
  bool passed = true;
  std::map<std::string, double> values;
  std::vector<std::string> notes;

  double& operator[](const std::string& key) { return values[key]; }
  [[nodiscard]] double at(const std::string& key) const { return values.at(key); }
};

// Worker count: TFLAB_THREADS if set, else hardware concurrency.
[[nodiscard]] unsigned thread_count();

// Static block partition of [0, n); fn(i) must not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace tflab
