#include "tflab/lab.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <stdexcept>
#include <tuple>

#include "tflab/fft.hpp"
#include "tflab/packets.hpp"

namespace tflab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// One (scale, m_xi) row of the sweep lattice: positions m_x in [m_lo, m_hi).
struct LatticeType {
  double len = 0.0;
  Vec3 xi{};
  std::int64_t m_lo = 0, m_hi = 0;
  int scale = 0;

  [[nodiscard]] Tritile at(std::int64_t m, int id) const {
    Tritile s;
    const double lo = len * static_cast<double>(m);
    s.I = {lo, lo + len};
    for (int j = 0; j < 3; ++j) s.omega[j] = {xi[j] - 0.5 / len, xi[j] + 0.5 / len};
    s.id = id;
    return s;
  }
};

std::vector<LatticeType> lattice_types(const SweepConfig& cfg, const Grid& g, double theta_xi) {
  const Vec3 gamma = gamma_for(cfg.beta);
  std::vector<LatticeType> out;
  for (int s = cfg.scale_hi;; --s) {
    const double len = std::ldexp(1.0, s);
    if (len < 2.0 * g.spacing()) break;
    const auto m_lo = static_cast<std::int64_t>(std::ceil(cfg.window.lo / len));
    const auto m_hi = static_cast<std::int64_t>(std::floor(cfg.window.hi / len));
    if (m_hi <= m_lo) continue;
    bool any = false;
    for (int mx = -cfg.m_xi_max; mx <= cfg.m_xi_max; ++mx) {
      LatticeType T;
      T.len = len;
      T.scale = s;
      T.m_lo = m_lo;
      T.m_hi = m_hi;
      bool ok = true;
      for (int j = 0; j < 3 && ok; ++j) {
        T.xi[j] = (gamma[j] * (mx + theta_xi) + cfg.beta[j]) / len;
        ok = packet_resolvable(g, T.xi[j], cfg.eps, len);
      }
      if (ok) {
        out.push_back(T);
        any = true;
      }
    }
    // Below the finest resolvable scale nothing further fits.
    if (!any && !out.empty()) break;
  }
  return out;
}

// Greedy first-fit over representatives; returns the class of each.
std::vector<std::size_t> greedy_classes(const std::vector<Tritile>& reps, const WellDiscOptions& opt,
                                        std::size_t* count) {
  std::vector<std::vector<std::size_t>> classes;
  std::vector<std::size_t> of(reps.size());
  for (std::size_t a = 0; a < reps.size(); ++a) {
    bool placed = false;
    for (std::size_t c = 0; c < classes.size() && !placed; ++c) {
      const bool fits = std::none_of(classes[c].begin(), classes[c].end(),
                                     [&](std::size_t b) { return pair_violation(reps[b], reps[a], opt).has_value(); });
      if (fits) {
        classes[c].push_back(a);
        of[a] = c;
        placed = true;
      }
    }
    if (!placed) {
      of[a] = classes.size();
      classes.push_back({a});
    }
  }
  *count = classes.size();
  return of;
}

// Type representative with I = [0, len): every pair of types is compared
// with nested (or equal) intervals, which is where the position-dependent
// rules can fire.
Tritile representative(const Tritile& s, int id) {
  Tritile r = s;
  r.I = {0.0, s.I.length()};
  r.id = id;
  return r;
}

GridFunction bump(const Grid& g, const Interval& I, double p) {
  const double c = I.center(), r = 0.5 * I.length();
  GridFunction f = GridFunction::sample(g, [&](double x) {
    const double u = (x - c) / r;
    return std::abs(u) < 1.0 ? std::exp(1.0 - 1.0 / (1.0 - u * u)) : 0.0;
  });
  const double nrm = f.norm_p(p);
  if (!(nrm > 0.0)) throw ResolutionError(fmt::format("bump on [{}, {}) has no grid samples", I.lo, I.hi));
  return f * cplx(1.0 / nrm);
}

IntervalSet cantor(double lo, double len, int depth) {
  std::vector<Interval> parts{{lo, lo + len}};
  for (int d = 0; d < depth; ++d) {
    std::vector<Interval> next;
    for (const Interval& I : parts) {
      const double t = I.length() / 3.0;
      next.push_back({I.lo, I.lo + t});
      next.push_back({I.hi - t, I.hi});
    }
    parts = std::move(next);
  }
  return IntervalSet(parts);
}

double star(double t) {
  const double l = std::log(kE + t);
  return (1.0 + t) * l * l * l;
}

double loglog_ee(double t) { return std::log(std::log(std::exp(kE) + t)); }

struct Inputs {
  GridFunction f1, f2, h1, h2;
  double F1 = 1.0, F2 = 0.0, F3 = 1.0;
  double f1_norm = 1.0, f2_norm = 1.0;
};

double rms(const std::vector<double>& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return r.empty() ? 0.0 : std::sqrt(s / static_cast<double>(r.size()));
}

struct Line {
  double a = 0.0, c = 0.0;
};

Line ols(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw PreconditionError("fit: regressor has no spread");
  const double c = sxy / sxx;
  return {my - c * mx, c};
}

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  return fmt::format("{:.17g}", v);
}

}  // namespace

std::string to_string(Theorem t) {
  switch (t) {
    case Theorem::T1: return "T1";
    case Theorem::T2: return "T2";
    case Theorem::T3: return "T3";
    case Theorem::C15: return "C15";
  }
  return "?";
}

Theorem theorem_from_string(const std::string& s) {
  if (s == "T1") return Theorem::T1;
  if (s == "T2") return Theorem::T2;
  if (s == "T3") return Theorem::T3;
  if (s == "C15") return Theorem::C15;
  throw PreconditionError(fmt::format("unknown theorem '{}' (T1, T2, T3, C15)", s));
}

std::string to_string(SetFamily f) { return f == SetFamily::Interval ? "interval" : "cantor"; }

SetFamily family_from_string(const std::string& s) {
  if (s == "interval") return SetFamily::Interval;
  if (s == "cantor") return SetFamily::Cantor;
  throw PreconditionError(fmt::format("unknown set family '{}' (interval, cantor)", s));
}

std::string to_string(GrowthModel m) {
  switch (m) {
    case GrowthModel::Log: return "log";
    case GrowthModel::LogLog: return "loglog";
    case GrowthModel::Power: return "power";
  }
  return "?";
}

Vec3 default_alpha(Theorem t) {
  switch (t) {
    case Theorem::T1: return {0.5, 1.0, -0.5};
    case Theorem::T2: return {0.75, 0.75, -0.5};
    case Theorem::T3: return {0.75, 0.5, -0.25};
    case Theorem::C15: return {0.75, 0.75, -0.5};
  }
  return {};
}

bool in_hexagon(const Vec3& a, double tol) {
  const double s = a[0] + a[1] + a[2];
  return std::abs(s - 1.0) <= tol && std::max({a[0], a[1], a[2]}) <= 1.0 + tol &&
         std::min({a[0], a[1], a[2]}) >= -0.5 - tol;
}

std::vector<double> dyadic_ratios(int first, int last) {
  std::vector<double> out;
  for (int k = first; k <= last; ++k) out.push_back(std::ldexp(1.0, -k));
  return out;
}

void SweepConfig::validate() const {
  for (std::size_t i = 0; i < ratios.size(); ++i) {
    if (!(ratios[i] > 0.0) || !std::isfinite(ratios[i])) throw PreconditionError("sweep: ratios must be positive");
    if (i > 0 && !(ratios[i] < ratios[i - 1])) throw PreconditionError("sweep: ratios must be strictly decreasing");
  }
  if (!in_hexagon(alpha)) {
    throw PreconditionError(fmt::format("sweep: alpha ({}, {}, {}) outside the hexagon", alpha[0], alpha[1], alpha[2]));
  }
  if (alpha[0] < 0.0 || alpha[1] < 0.0) throw PreconditionError("sweep: alpha_1 and alpha_2 must be nonnegative");
  const double tol = 1e-12;
  switch (theorem) {
    case Theorem::T2:
      if (std::abs(alpha[2] + 0.5) > tol || !(alpha[0] > 0.5 && alpha[0] < 1.0))
        throw PreconditionError("sweep T2: needs alpha_3 = -1/2 and 1/2 < alpha_1 < 1");
      break;
    case Theorem::T3:
      if (std::abs(alpha[1] - 0.5) > tol || !(alpha[0] >= 0.0 && alpha[0] < 1.0))
        throw PreconditionError("sweep T3: needs alpha_2 = 1/2 and 0 <= alpha_1 < 1");
      break;
    case Theorem::T1:
    case Theorem::C15: break;
  }
  if (grid_n < 16 || (grid_n & (grid_n - 1)) != 0) throw PreconditionError("sweep: grid_n must be a power of two >= 16");
  if (!(domain > 0.0)) throw PreconditionError("sweep: domain must be positive");
  if (!(eps > 0.0 && eps <= 1.0)) throw PreconditionError("sweep: eps must lie in (0, 1]");
  (void)ModelSumConfig::make(beta, eps);
  if (m_xi_max < 0) throw PreconditionError("sweep: m_xi_max must be nonnegative");
  if (cantor_depth < 0) throw PreconditionError("sweep: cantor_depth must be nonnegative");
  if (!(window.lo < window.hi) || window.lo < -0.5 * domain || window.hi > 0.5 * domain)
    throw PreconditionError("sweep: window must be a non-empty interval inside the domain");
}

std::vector<Tritile> sweep_lattice(const SweepConfig& cfg, const Grid& g, double theta_xi, LatticeSummary* summary) {
  const std::vector<LatticeType> types = lattice_types(cfg, g, theta_xi);
  std::vector<Tritile> out;
  int id = 0;
  for (const LatticeType& T : types)
    for (std::int64_t m = T.m_lo; m < T.m_hi; ++m) out.push_back(T.at(m, id++));
  if (summary) {
    summary->tritiles = out.size();
    summary->theta_xi = theta_xi;
    summary->scale_hi = types.empty() ? 0 : types.front().scale;
    summary->scale_lo = types.empty() ? 0 : types.back().scale;
  }
  return out;
}

std::vector<std::vector<Tritile>> sweep_classes(const std::vector<Tritile>& S, const WellDiscOptions& opt) {
  using Key = std::tuple<double, double, double, double>;
  std::map<Key, std::size_t> index;
  std::vector<std::size_t> type_of(S.size());
  std::vector<Tritile> reps;
  for (std::size_t i = 0; i < S.size(); ++i) {
    const Key k{S[i].I.length(), S[i].omega[0].lo, S[i].omega[1].lo, S[i].omega[2].lo};
    auto [it, fresh] = index.try_emplace(k, reps.size());
    if (fresh) reps.push_back(representative(S[i], static_cast<int>(reps.size())));
    type_of[i] = it->second;
  }
  std::size_t count = 0;
  const std::vector<std::size_t> cls = greedy_classes(reps, opt, &count);
  std::vector<std::vector<Tritile>> out(count);
  for (std::size_t i = 0; i < S.size(); ++i) out[cls[type_of[i]]].push_back(S[i]);
  return out;
}

SweepResult run_sweep(const SweepConfig& cfg, const InghamTable& t) {
  cfg.validate();
  if (cfg.ratios.empty()) return {};
  const Grid g(-0.5 * cfg.domain, 0.5 * cfg.domain, cfg.grid_n);
  const double h = g.spacing();
  std::mt19937_64 rng(cfg.seed);
  const double theta_xi = std::uniform_real_distribution<double>(0.0, 1.0)(rng);

  const std::vector<LatticeType> types = lattice_types(cfg, g, theta_xi);
  std::vector<Tritile> reps;
  for (std::size_t i = 0; i < types.size(); ++i) reps.push_back(types[i].at(0, static_cast<int>(i)));
  const WellDiscOptions wd{};
  std::size_t n_classes = 0;
  const std::vector<std::size_t> cls = greedy_classes(reps, wd, &n_classes);

  SweepResult result;
  (void)sweep_lattice(cfg, g, theta_xi, &result.lattice);
  result.lattice.classes = n_classes;

  const Theorem th = cfg.theorem;
  const Vec3& al = cfg.alpha;
  const Interval unit{0.0, 1.0};
  const IntervalSet F3 = IntervalSet::single(0.0, 1.0);

  // f1 does not depend on delta.
  GridFunction f1;
  switch (th) {
    case Theorem::T1: f1 = bump(g, unit, 2.0); break;
    case Theorem::T2:
    case Theorem::T3: f1 = bump(g, unit, 1.0 / al[0]); break;
    case Theorem::C15: f1 = IntervalSet::single(0.0, 1.0).indicator(g); break;
  }
  const Spectrum S1 = spectrum_of(f1);
  std::vector<std::vector<cplx>> a1(types.size());
  parallel_for(types.size(), [&](std::size_t i) {
    const LatticeType& T = types[i];
    a1[i] = packet_row_coefficients(S1, T.len, T.xi[0], cfg.eps, t, T.m_lo, T.m_hi);
  });

  const Vec3 b{cfg.beta[0] - cfg.beta[2], cfg.beta[1] - cfg.beta[2], 0.0};
  const double bmin = std::min(std::abs(b[0]) > 0 ? std::abs(b[0]) : 1e300, std::abs(b[1]) > 0 ? std::abs(b[1]) : 1e300);
  BhtOptions bo;
  bo.t_max = std::min(g.length(), 2.0 * cfg.window.length() / bmin);

  for (const double delta : cfg.ratios) {
    SweepRow row;
    row.delta = delta;
    try {
      IntervalSet F2set = cfg.family == SetFamily::Interval
                              ? IntervalSet::single(0.0, delta)
                              : cantor(0.0, delta * std::pow(1.5, cfg.cantor_depth), cfg.cantor_depth);
      for (const Interval& P : F2set.parts())
        if (P.length() < h * (1.0 - 1e-12))
          throw ResolutionError(fmt::format("F2 piece of length {:.3g} below grid spacing {:.3g}", P.length(), h));

      Inputs in;
      const GridFunction ind2 = F2set.indicator(g);
      in.F2 = ind2.support_measure();
      in.F3 = F3.measure();
      in.F1 = 1.0;
      in.f1 = f1;
      if (th == Theorem::T3) {
        in.f2 = bump(g, {0.0, delta * (cfg.family == SetFamily::Interval ? 1.0 : std::pow(1.5, cfg.cantor_depth))},
                     2.0);
        in.h2 = in.f2;
      } else {
        in.f2 = ind2;
        in.h2 = ind2;
      }
      in.h1 = f1;
      if (th == Theorem::C15) in.F1 = f1.support_measure();

      const ExceptionalSets ex = exceptional_sets(in.h1, in.h2, F3, al);
      row.f3_major_fraction = ex.F3_prime.measure() / in.F3;
      const GridFunction f3 = ex.F3_prime.indicator(g);

      const Spectrum S2 = spectrum_of(in.f2);
      std::vector<std::vector<cplx>> c(types.size());
      parallel_for(types.size(), [&](std::size_t i) {
        const LatticeType& T = types[i];
        const std::vector<cplx> a2 = packet_row_coefficients(S2, T.len, T.xi[1], cfg.eps, t, T.m_lo, T.m_hi);
        const double w = 1.0 / std::sqrt(T.len);
        c[i].resize(a2.size());
        for (std::size_t m = 0; m < a2.size(); ++m) c[i][m] = w * a1[i][m] * a2[m];
      });

      // Per class, K(x) = sum_s eps_s |I_s|^{-1/2} a1 a2 conj(upsilon_{s_3}(x)); the
      // phase-matched f3 on F3' gives Lambda = h sum_{F3'} |K|.
      std::vector<double> per_class(n_classes, 0.0);
      parallel_for(n_classes, [&](std::size_t k) {
        std::vector<cplx> G(g.n());
        for (std::size_t i = 0; i < types.size(); ++i) {
          if (cls[i] != k) continue;
          accumulate_conj_row(G, g, types[i].len, types[i].xi[2], cfg.eps, t, types[i].m_lo, c[i]);
        }
        const GridFunction K = from_spectrum(g, G);
        std::vector<cplx> terms;
        for (std::size_t i = 0; i < g.n(); ++i)
          if (f3[i] != cplx{}) terms.emplace_back(std::abs(K[i]));
        per_class[k] = h * pairwise_sum(terms).real();
      });
      row.lambda_model = per_class.empty() ? 0.0 : *std::max_element(per_class.begin(), per_class.end());

      row.lambda_direct = cfg.direct ? std::abs(lambda_direct(in.f1, in.f2, f3, cfg.beta, bo)) : kNaN;

      double base = 0.0, growth = 1.0;
      switch (th) {
        case Theorem::T1:
          base = in.f1.norm2() * in.F2 / std::sqrt(in.F3);
          growth = std::log(kE + in.F3 / in.F2);
          break;
        case Theorem::T2:
          base = in.f1.norm_p(1.0 / al[0]) * std::pow(in.F2, al[1]) / std::sqrt(in.F3) /
                 ((1.0 - al[0]) * (1.0 - al[1]));
          growth = std::pow(star(std::max(std::log(in.F3 / in.F2), 1.0 / (1.0 - al[0]))), 2.0 * al[0] - 1.0);
          break;
        case Theorem::T3:
          base = in.f1.norm_p(1.0 / al[0]) * in.f2.norm2() * std::pow(in.F3, 0.5 - al[0]);
          growth = std::pow(star(1.0 / (1.0 - al[0])), 2.0 * al[0] - 1.0) / (1.0 - al[0]);
          break;
        case Theorem::C15:
          base = std::pow(in.F1, al[0]) * std::pow(in.F2, al[1]) * std::pow(in.F3, al[2]);
          growth = loglog_ee(in.F3 / std::min(in.F1, in.F2));
          break;
      }
      row.bound_rhs = base * growth;
      row.ratio = row.lambda_model / row.bound_rhs;
      row.normalized = row.lambda_model / base;
      if (4.0 * row.f3_major_fraction < 1.0 - 1e-12)
        throw std::logic_error("sweep: major-subset guarantee violated");
    } catch (const ResolutionError& e) {
      row = SweepRow{};
      row.delta = delta;
      row.lambda_model = row.lambda_direct = row.bound_rhs = row.ratio = row.normalized = row.f3_major_fraction = kNaN;
      row.status = fmt::format("resolution: {}", e.what());
    }
    result.rows.push_back(row);
  }
  return result;
}

GrowthFit fit_growth(const std::vector<double>& delta, const std::vector<double>& y, GrowthModel model,
                     double min_exponent) {
  if (delta.size() != y.size()) throw PreconditionError("fit_growth: size mismatch");
  std::vector<double> d, v;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!(delta[i] > 0.0) || !std::isfinite(delta[i]) || !std::isfinite(y[i])) continue;
    if (model == GrowthModel::Power && !(y[i] > 0.0)) continue;
    d.push_back(delta[i]);
    v.push_back(y[i]);
  }
  if (d.size() < 4) throw PreconditionError(fmt::format("fit_growth: {} usable rows, need at least 4", d.size()));
  GrowthFit f;
  f.model = model;
  f.used = d.size();
  std::vector<double> x(d.size());
  if (model == GrowthModel::Power) {
    std::vector<double> ly(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      x[i] = std::log(1.0 / d[i]);
      ly[i] = std::log(v[i]);
    }
    Line l = ols(x, ly);
    if (l.c < min_exponent) {
      l.c = min_exponent;
      double s = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) s += ly[i] - l.c * x[i];
      l.a = s / static_cast<double>(x.size());
    }
    f.coefficient = l.c;
    f.intercept = l.a;
  } else {
    for (std::size_t i = 0; i < d.size(); ++i)
      x[i] = model == GrowthModel::Log ? std::log(1.0 / d[i]) : loglog_ee(1.0 / d[i]);
    const Line l = ols(x, v);
    f.coefficient = l.c;
    f.intercept = l.a;
  }
  std::vector<double> r(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) r[i] = v[i] - evaluate(f, d[i]);
  f.residual = rms(r);
  return f;
}

GrowthFit fit_growth(const std::vector<SweepRow>& rows, GrowthModel model, double min_exponent) {
  std::vector<double> d, y;
  for (const SweepRow& r : rows)
    if (r.ok()) {
      d.push_back(r.delta);
      y.push_back(r.normalized);
    }
  return fit_growth(d, y, model, min_exponent);
}

double evaluate(const GrowthFit& f, double delta) {
  switch (f.model) {
    case GrowthModel::Log: return f.intercept + f.coefficient * std::log(1.0 / delta);
    case GrowthModel::LogLog: return f.intercept + f.coefficient * loglog_ee(1.0 / delta);
    case GrowthModel::Power: return std::exp(f.intercept + f.coefficient * std::log(1.0 / delta));
  }
  return kNaN;
}

std::vector<double> envelope(const std::vector<SweepRow>& rows) {
  std::vector<const SweepRow*> ok;
  for (const SweepRow& r : rows)
    if (r.ok()) ok.push_back(&r);
  std::stable_sort(ok.begin(), ok.end(), [](const SweepRow* a, const SweepRow* b) { return a->delta > b->delta; });
  std::vector<double> out;
  double m = -std::numeric_limits<double>::infinity();
  for (const SweepRow* r : ok) {
    m = std::max(m, r->normalized);
    out.push_back(m);
  }
  return out;
}

double log_growth_exponent(const std::vector<SweepRow>& rows) {
  std::vector<double> x, y;
  for (const SweepRow& r : rows)
    if (r.ok() && r.normalized > 0.0 && r.delta < 1.0) {
      x.push_back(std::log(std::log(1.0 / r.delta)));
      y.push_back(std::log(r.normalized));
    }
  if (x.size() < 2) throw PreconditionError("log_growth_exponent: need two usable rows");
  return ols(x, y).c;
}

double trend_slope(const std::vector<SweepRow>& rows, const std::string& column) {
  if (column != "model" && column != "direct") throw PreconditionError("trend_slope: column is 'model' or 'direct'");
  std::vector<double> x, y;
  for (const SweepRow& r : rows) {
    if (!r.ok()) continue;
    const double v = column == "model" ? r.lambda_model : r.lambda_direct;
    if (!(v > 0.0) || !std::isfinite(v)) continue;
    x.push_back(std::log(1.0 / r.delta));
    y.push_back(std::log(v));
  }
  if (x.size() < 2) throw PreconditionError("trend_slope: need two usable rows");
  return ols(x, y).c;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

void write_csv(const std::vector<SweepRow>& rows, std::ostream& os) {
  os << "delta,lambda_model,lambda_direct,bound_rhs,ratio,normalized,f3_major_fraction,status\r\n";
  for (const SweepRow& r : rows) {
    os << num(r.delta) << ',' << num(r.lambda_model) << ',' << num(r.lambda_direct) << ',' << num(r.bound_rhs) << ','
       << num(r.ratio) << ',' << num(r.normalized) << ',' << num(r.f3_major_fraction) << ',' << csv_field(r.status)
       << "\r\n";
  }
}

void write_svg(const std::vector<SweepRow>& rows, const std::vector<GrowthFit>& fits, std::ostream& os) {
  const double W = 640, H = 420, ml = 70, mr = 20, mt = 30, mb = 50;
  std::vector<std::pair<double, double>> pts, rat;
  for (const SweepRow& r : rows) {
    if (!r.ok()) continue;
    if (r.normalized > 0.0) pts.emplace_back(std::log10(1.0 / r.delta), std::log10(r.normalized));
    if (r.ratio > 0.0) rat.emplace_back(std::log10(1.0 / r.delta), std::log10(r.ratio));
  }
  std::vector<std::pair<double, double>> all = pts;
  all.insert(all.end(), rat.begin(), rat.end());
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!all.empty()) {
    x0 = x1 = all.front().first;
    y0 = y1 = all.front().second;
    for (auto [x, y] : all) {
      x0 = std::min(x0, x);
      x1 = std::max(x1, x);
      y0 = std::min(y0, y);
      y1 = std::max(y1, y);
    }
  }
  if (x1 - x0 < 1e-9) x1 = x0 + 1;
  const double pad = std::max(0.1, 0.1 * (y1 - y0));
  y0 -= pad;
  y1 += pad;
  auto X = [&](double x) { return ml + (x - x0) / (x1 - x0) * (W - ml - mr); };
  auto Y = [&](double y) { return H - mb - (y - y0) / (y1 - y0) * (H - mt - mb); };

  os << fmt::format(R"(<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">)", W, H,
                    W, H)
     << "\n";
  os << fmt::format(R"(<rect x="0" y="0" width="{}" height="{}" fill="white"/>)", W, H) << "\n";
  os << fmt::format(R"(<path d="M{:.2f},{:.2f} L{:.2f},{:.2f} L{:.2f},{:.2f}" fill="none" stroke="black"/>)", ml, mt,
                    ml, H - mb, W - mr, H - mb)
     << "\n";
  os << fmt::format(R"(<text x="{:.2f}" y="{:.2f}" font-size="12" text-anchor="middle">log10(1/delta)</text>)",
                    0.5 * (ml + W - mr), H - 12)
     << "\n";
  os << fmt::format(
            R"svg(<text x="16" y="{:.2f}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.2f})">log10(ratio), log10(normalized)</text>)svg",
            0.5 * (mt + H - mb), 0.5 * (mt + H - mb))
     << "\n";
  for (int k = 0; k <= 4; ++k) {
    const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
    os << fmt::format(R"(<text x="{:.2f}" y="{:.2f}" font-size="10" text-anchor="middle">{:.2f}</text>)", X(xv),
                      H - mb + 14, xv)
       << "\n";
    os << fmt::format(R"(<text x="{:.2f}" y="{:.2f}" font-size="10" text-anchor="end">{:.2f}</text>)", ml - 4,
                      Y(yv) + 3, yv)
       << "\n";
  }
  static const char* colors[] = {"#c0392b", "#2471a3", "#229954", "#7d3c98"};
  std::size_t ci = 0;
  for (const GrowthFit& f : fits) {
    std::string d;
    for (int k = 0; k <= 64; ++k) {
      const double xv = x0 + (x1 - x0) * k / 64.0;
      const double yv = evaluate(f, std::pow(10.0, -xv));
      if (!(yv > 0.0)) continue;
      d += fmt::format("{}{:.2f},{:.2f} ", d.empty() ? "M" : "L", X(xv), Y(std::log10(yv)));
    }
    const char* col = colors[ci++ % 4];
    if (!d.empty()) os << fmt::format(R"(<path d="{}" fill="none" stroke="{}" stroke-width="1.5"/>)", d, col) << "\n";
    os << fmt::format(R"(<text x="{:.2f}" y="{:.2f}" font-size="11" fill="{}">{} fit: c={:.4g}, rms={:.3g}</text>)",
                      ml + 8, mt + 14.0 * static_cast<double>(ci), col, to_string(f.model), f.coefficient, f.residual)
       << "\n";
  }
  for (auto [x, y] : pts)
    os << fmt::format(R"(<circle cx="{:.2f}" cy="{:.2f}" r="3" fill="black"/>)", X(x), Y(y)) << "\n";
  for (auto [x, y] : rat)
    os << fmt::format(R"(<circle cx="{:.2f}" cy="{:.2f}" r="3" fill="none" stroke="black"/>)", X(x), Y(y)) << "\n";
  os << fmt::format(R"(<text x="{:.2f}" y="{:.2f}" font-size="11">filled: normalized, open: ratio</text>)", W - mr - 190,
                    H - mb - 8)
     << "\n";
  os << "</svg>\n";
}

int emit_report(const std::vector<SweepRow>& rows, const std::vector<GrowthFit>& fits, const ReportPaths& paths) {
  auto open = [](const std::string& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error(fmt::format("cannot open '{}' for writing", p));
    return os;
  };
  if (!paths.csv.empty()) {
    std::ofstream os = open(paths.csv);
    write_csv(rows, os);
    if (!os) throw std::runtime_error(fmt::format("write to '{}' failed", paths.csv));
  }
  if (rows.empty()) return 2;
  if (!paths.svg.empty()) {
    std::ofstream os = open(paths.svg);
    write_svg(rows, fits, os);
    if (!os) throw std::runtime_error(fmt::format("write to '{}' failed", paths.svg));
  }
  return 0;
}

}  // namespace tflab
