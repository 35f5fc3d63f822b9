#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tflab/modelsum.hpp"
#include "tflab/osgood.hpp"
#include "tflab/timefreq.hpp"

namespace tflab {

enum class Theorem { T1, T2, T3, C15 };
enum class SetFamily { Interval, Cantor };

[[nodiscard]] std::string to_string(Theorem t);
[[nodiscard]] Theorem theorem_from_string(const std::string& s);
[[nodiscard]] std::string to_string(SetFamily f);
[[nodiscard]] SetFamily family_from_string(const std::string& s);

// Hoelder triple used by each sweep when none is given.
[[nodiscard]] Vec3 default_alpha(Theorem t);
// alpha_1 + alpha_2 + alpha_3 = 1, max alpha_j <= 1, min alpha_j >= -1/2.
[[nodiscard]] bool in_hexagon(const Vec3& alpha, double tol = 1e-12);

// Dyadic ratios 2^-first .. 2^-last.
[[nodiscard]] std::vector<double> dyadic_ratios(int first, int last);

struct SweepConfig {
  Theorem theorem = Theorem::T1;
  Vec3 alpha = default_alpha(Theorem::T1);
  SetFamily family = SetFamily::Interval;
  int cantor_depth = 2;
  std::vector<double> ratios = dyadic_ratios(1, 10);
  std::size_t grid_n = std::size_t{1} << 16;
  double domain = 64.0;  // grid [-domain/2, domain/2)
  double eps = kSweepEps;
  std::uint64_t seed = 1;  // draws the lattice frequency offset theta_xi
  Vec3 beta{0.70710678118654752, -0.70710678118654752, 0.0};
  int scale_hi = 0;      // largest tile length 2^scale_hi
  int m_xi_max = 64;     // |m_xi| bound, further limited by resolvability
  Interval window{-1.0, 2.0};  // tile intervals lie inside
  bool direct = true;    // also evaluate lambda_direct

  // Throws PreconditionError on invalid fields.
  void validate() const;
};

struct SweepRow {
  double delta = 0.0;
  double lambda_model = 0.0;   // max over well-discretized classes, f3 phase-matched on F3'
  double lambda_direct = 0.0;  // |Lambda_beta(f1, f2, 1_{F3'})|, NaN when not evaluated
  double bound_rhs = 0.0;      // theorem right side with constant 1
  double ratio = 0.0;          // lambda_model / bound_rhs
  double normalized = 0.0;     // lambda_model / (bound_rhs without its growth factor)
  double f3_major_fraction = 0.0;
  std::string status = "ok";   // "ok" or the failure reason
  [[nodiscard]] bool ok() const { return status == "ok"; }
};

struct LatticeSummary {
  std::size_t tritiles = 0;
  std::size_t classes = 0;
  int scale_lo = 0, scale_hi = 0;
  double theta_xi = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  LatticeSummary lattice;
};

// The sweep lattice: unit-area tritiles with dyadic I = [m 2^s, (m+1) 2^s) in
// cfg.window, scales 2^scale_lo .. 2^scale_hi, every band resolvable on the grid.
[[nodiscard]] std::vector<Tritile> sweep_lattice(const SweepConfig& cfg, const Grid& g, double theta_xi,
                                                 LatticeSummary* summary = nullptr);
// Split into well-discretized classes. Tritiles sharing (scale, m_xi) never
// conflict, so classes are formed greedily over those types.
[[nodiscard]] std::vector<std::vector<Tritile>> sweep_classes(const std::vector<Tritile>& S,
                                                              const WellDiscOptions& opt);

[[nodiscard]] SweepResult run_sweep(const SweepConfig& cfg, const InghamTable& t);

enum class GrowthModel { Log, LogLog, Power };
[[nodiscard]] std::string to_string(GrowthModel m);

struct GrowthFit {
  GrowthModel model = GrowthModel::Log;
  double coefficient = 0.0;  // c (log, loglog) or exponent p (power)
  double intercept = 0.0;    // a (log, loglog: y = a + c x) or log a (power: y = a (1/delta)^p)
  double residual = 0.0;     // RMS of y - fit, in the units of y
  std::size_t used = 0;
};

// Regressors: log -> log(1/delta), loglog -> log log(e^e + 1/delta),
// power -> least squares of log y against log(1/delta), exponent clamped to
// >= min_exponent. Throws PreconditionError with fewer than 4 usable points.
[[nodiscard]] GrowthFit fit_growth(const std::vector<double>& delta, const std::vector<double>& y, GrowthModel model,
                                   double min_exponent = -std::numeric_limits<double>::infinity());
// Uses the normalized column of the ok rows.
[[nodiscard]] GrowthFit fit_growth(const std::vector<SweepRow>& rows, GrowthModel model,
                                   double min_exponent = -std::numeric_limits<double>::infinity());
[[nodiscard]] double evaluate(const GrowthFit& f, double delta);

// Running maximum of the normalized column over rows sorted by decreasing delta.
[[nodiscard]] std::vector<double> envelope(const std::vector<SweepRow>& rows);
// Least-squares exponent p of normalized ~ C log(1/delta)^p over rows with delta < 1.
[[nodiscard]] double log_growth_exponent(const std::vector<SweepRow>& rows);
// Least-squares slope of log |column| against log(1/delta) for "model" or "direct".
[[nodiscard]] double trend_slope(const std::vector<SweepRow>& rows, const std::string& column);

struct ReportPaths {
  std::string csv;
  std::string svg;  // empty: no plot
};

// CSV with header (RFC 4180 quoting) and, for non-empty rows, an SVG log-log
// plot of ratio and normalized vs 1/delta with the fits (of normalized) overlaid. Returns 0, or 2 for
// empty rows (header-only CSV, no SVG). Throws std::runtime_error on I/O errors.
int emit_report(const std::vector<SweepRow>& rows, const std::vector<GrowthFit>& fits, const ReportPaths& paths);
void write_csv(const std::vector<SweepRow>& rows, std::ostream& os);
void write_svg(const std::vector<SweepRow>& rows, const std::vector<GrowthFit>& fits, std::ostream& os);
[[nodiscard]] std::string csv_field(const std::string& s);

}  // namespace tflab
