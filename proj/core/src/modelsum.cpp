#include "tflab/modelsum.hpp"

#include <fmt/format.h>

#include <cmath>

#include "tflab/fft.hpp"
#include "tflab/packets.hpp"

namespace tflab {

namespace {

cplx pairwise(const cplx* v, std::size_t n) {
  if (n == 0) return {};
  if (n == 1) return v[0];
  if (n <= 8) {
    cplx s{};
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise(v, h) + pairwise(v + h, n - h);
}

bool is_power_of_two(double mu) {
  if (!(mu > 0.0) || !std::isfinite(mu)) return false;
  int e = 0;
  return std::frexp(mu, &e) == 0.5;
}

std::vector<cplx> slot(const GridFunction& f, const std::vector<Tritile>& S, int j, const InghamTable& t, double eps) {
  std::vector<cplx> out(S.size());
  if (S.empty()) return out;
  const Spectrum F = spectrum_of(f);
  parallel_for(S.size(), [&](std::size_t i) {
    const TopDatum td(S[i].I, S[i].omega[j].center());
    out[i] = packet_coefficient(F, packet_spectrum(td, eps, t, f.grid()));
  });
  return out;
}

void require_well_discretized(const std::vector<Tritile>& S, const ModelSumOptions& opt) {
  if (!opt.check) return;
  const WellDiscResult r = check_well_discretized(S, opt.wd);
  if (!r.ok) {
    const Violation& v = r.violations.front();
    throw PreconditionError(
        fmt::format("model_sum: collection not well-discretized ({} between ids {} and {})", v.rule, v.a, v.b));
  }
}

Vec3 checked_b(const Vec3& beta) {
  (void)ModelSumConfig::make(beta);
  return {beta[0] - beta[2], beta[1] - beta[2], 0.0};
}

struct Quadrature {
  double dt = 0.0;
  std::size_t m = 0;
  [[nodiscard]] double node(std::size_t k) const { return (static_cast<double>(k) + 0.5) * dt; }
};

Quadrature quadrature(const Grid& g, const BhtOptions& opt) {
  const double h = g.spacing();
  const double h_cut = opt.h_cut > 0.0 ? opt.h_cut : h;
  if (h_cut < h * (1.0 - 1e-12)) {
    throw PreconditionError(fmt::format("bht_direct: h_cut {} below grid spacing {}", h_cut, h));
  }
  const double t_max = opt.t_max > 0.0 ? opt.t_max : g.length();
  Quadrature q;
  q.dt = 2.0 * h_cut;
  const double m = std::floor(t_max / q.dt + 0.5);
  q.m = m > 0.0 ? static_cast<std::size_t>(m) : 0;
  return q;
}

}  // namespace

ModelSumConfig ModelSumConfig::make(const Vec3& beta, double eps, double R) {
  const double n2 = beta[0] * beta[0] + beta[1] * beta[1] + beta[2] * beta[2];
  if (std::abs(n2 - 1.0) > 1e-9) throw PreconditionError(fmt::format("beta must be unit, |beta|^2 = {}", n2));
  const double s = beta[0] + beta[1] + beta[2];
  if (std::abs(s) > 1e-9) throw PreconditionError(fmt::format("beta must be orthogonal to (1,1,1), sum = {}", s));
  if (!(eps > 0.0 && eps <= 1.0)) throw PreconditionError("eps must lie in (0, 1]");
  if (!(R > 1.0)) throw PreconditionError("R must exceed 1");
  ModelSumConfig c;
  c.beta = beta;
  c.gamma = gamma_for(beta);
  c.delta_beta = std::min({std::abs(beta[0] - beta[1]), std::abs(beta[1] - beta[2]), std::abs(beta[0] - beta[2])});
  c.eps = eps;
  c.R = R;
  return c;
}

cplx pairwise_sum(const std::vector<cplx>& v) { return pairwise(v.data(), v.size()); }

TileCoeffs model_coefficients(const std::vector<Tritile>& S, const GridFunction& f1, const GridFunction& f2,
                              const GridFunction& f3, const InghamTable& t, double eps) {
  require_same_grid(f1.grid(), f2.grid());
  require_same_grid(f1.grid(), f3.grid());
  TileCoeffs a(S.size());
  const GridFunction* fs[3] = {&f1, &f2, &f3};
  for (int j = 0; j < 3; ++j) {
    const std::vector<cplx> c = slot(*fs[j], S, j, t, eps);
    for (std::size_t i = 0; i < S.size(); ++i) a[i][j] = c[i];
  }
  return a;
}

cplx model_sum_from(const std::vector<Tritile>& S, const TileCoeffs& a) {
  if (a.size() != S.size()) throw PreconditionError("model_sum_from: coefficient count mismatch");
  std::vector<cplx> terms(S.size());
  for (std::size_t i = 0; i < S.size(); ++i) {
    terms[i] = S[i].eps / std::sqrt(S[i].I.length()) * a[i][0] * a[i][1] * a[i][2];
  }
  return pairwise_sum(terms);
}

double model_sum_abs(const std::vector<Tritile>& S, const TileCoeffs& a) {
  if (a.size() != S.size()) throw PreconditionError("model_sum_abs: coefficient count mismatch");
  std::vector<cplx> terms(S.size());
  for (std::size_t i = 0; i < S.size(); ++i) {
    terms[i] = std::abs(a[i][0]) * std::abs(a[i][1]) * std::abs(a[i][2]) / std::sqrt(S[i].I.length());
  }
  return pairwise_sum(terms).real();
}

cplx model_sum(const std::vector<Tritile>& S, const GridFunction& f1, const GridFunction& f2, const GridFunction& f3,
               const InghamTable& t, const ModelSumOptions& opt) {
  if (S.empty()) return {};
  require_well_discretized(S, opt);
  return model_sum_from(S, model_coefficients(S, f1, f2, f3, t, opt.eps));
}

GridFunction holder_dilate(const GridFunction& f, double mu, double alpha, const Grid& target) {
  if (!is_power_of_two(mu)) throw PreconditionError(fmt::format("holder_dilate: mu = {} is not a power of two", mu));
  const double scale = std::pow(mu, -alpha);
  if (mu == 1.0 && target == f.grid()) return f * cplx(scale);

  const Grid& g = f.grid();
  const Spectrum F = spectrum_of(f);
  const auto n = static_cast<std::int64_t>(g.n());

  // Fast path: the points x_i / mu lie on a 2^m-refined (mu > 1) or on the
  // original (mu < 1) grid when x0 (1 - mu) / h is an integer.
  const double shift = g.x0() * (1.0 - mu) / g.spacing();
  if (target == g && std::abs(shift - std::round(shift)) < 1e-9) {
    GridFunction out(g);
    if (mu > 1.0) {
      const auto r = static_cast<std::size_t>(mu);
      const Grid gf(g.x0(), g.x1(), g.n() * r);
      std::vector<cplx> Ff(gf.n());
      for (std::int64_t k = -n / 2; k < n / 2; ++k) Ff[gf.storage_bin(k)] = F.at(k);
      const GridFunction fine = from_spectrum(gf, Ff);
      for (std::size_t i = 0; i < g.n(); ++i) {
        const double y = g.x(i) / mu;
        const std::int64_t k = std::llround((y - gf.x0()) / gf.spacing());
        if (k >= 0 && k < static_cast<std::int64_t>(gf.n())) out[i] = scale * fine[static_cast<std::size_t>(k)];
      }
    } else {
      for (std::size_t i = 0; i < g.n(); ++i) {
        const double y = g.x(i) / mu;
        const std::int64_t k = std::llround((y - g.x0()) / g.spacing());
        if (k >= 0 && k < n) out[i] = scale * f[static_cast<std::size_t>(k)];
      }
    }
    return out;
  }

  const std::int64_t k_lo = -n / 2;
  const double L = g.length();
  const Interval dom = g.domain();
  GridFunction out(target);
  parallel_for(target.n(), [&](std::size_t i) {
    const double y = target.x(i) / mu;
    if (!dom.contains(y)) return;
    // (1/L) sum_k F_k e^{2 pi i k y / L}; the phase is recomputed every 64 bins.
    const double th = 2.0 * kPi * y / L;
    cplx acc{};
    cplx w, step = std::polar(1.0, th);
    for (std::int64_t k = k_lo; k < k_lo + n; ++k) {
      if ((k - k_lo) % 64 == 0) w = std::polar(1.0, th * static_cast<double>(k));
      acc += F.at(k) * w;
      w *= step;
    }
    out[i] = scale * acc / L;
  });
  return out;
}

std::vector<Tritile> rescale_tritiles(const std::vector<Tritile>& S, double mu) {
  if (!(mu > 0.0)) throw PreconditionError("rescale_tritiles: mu must be positive");
  std::vector<Tritile> out = S;
  for (Tritile& s : out) {
    s.I = s.I.scaled(mu);
    for (Interval& w : s.omega) w = w.scaled(1.0 / mu);
  }
  return out;
}

double RescaleCheck::rel_error() const {
  const double d = std::abs(lhs - rhs);
  const double m = std::abs(lhs);
  return m > 0.0 ? d / m : d;
}

RescaleCheck rescale_check(const std::vector<Tritile>& S, const GridFunction& f1, const GridFunction& f2,
                           const GridFunction& f3, double mu, const Vec3& alpha, const InghamTable& t,
                           const ModelSumOptions& opt) {
  if (!is_power_of_two(mu)) throw PreconditionError(fmt::format("rescale_check: mu = {} is not a power of two", mu));
  const double asum = alpha[0] + alpha[1] + alpha[2];
  if (std::abs(asum - 1.0) > 1e-12) throw PreconditionError(fmt::format("rescale_check: alpha sums to {}", asum));
  const Grid& g = f1.grid();
  const std::vector<Tritile> Smu = rescale_tritiles(S, mu);
  for (const Tritile& s : Smu) {
    if (!g.domain().contains(s.I, 1e-12 * g.length())) {
      throw DomainError(fmt::format("rescale_check: tritile {} maps to [{}, {}) outside the grid", s.id, s.I.lo, s.I.hi));
    }
  }
  RescaleCheck r;
  r.lhs = model_sum(S, f1, f2, f3, t, opt);
  r.rhs = model_sum(Smu, holder_dilate(f1, mu, alpha[0], g), holder_dilate(f2, mu, alpha[1], g),
                    holder_dilate(f3, mu, alpha[2], g), t, opt);
  return r;
}

GridFunction bht_direct(const GridFunction& f1, const GridFunction& f2, const std::array<double, 2>& b,
                        const BhtOptions& opt) {
  require_same_grid(f1.grid(), f2.grid());
  const Grid& g = f1.grid();
  const Quadrature q = quadrature(g, opt);
  GridFunction out(g);
  parallel_for(g.n(), [&](std::size_t i) {
    const double x = g.x(i);
    std::vector<cplx> terms(q.m);
    for (std::size_t k = 0; k < q.m; ++k) {
      const double tt = q.node(k);
      const cplx plus = f1.interpolate(x - b[0] * tt) * f2.interpolate(x - b[1] * tt);
      const cplx minus = f1.interpolate(x + b[0] * tt) * f2.interpolate(x + b[1] * tt);
      terms[k] = (plus - minus) * (q.dt / tt);
    }
    out[i] = pairwise_sum(terms);
  });
  return out;
}

cplx lambda_direct(const GridFunction& f1, const GridFunction& f2, const GridFunction& f3, const Vec3& beta,
                   const BhtOptions& opt) {
  require_same_grid(f1.grid(), f2.grid());
  require_same_grid(f1.grid(), f3.grid());
  const Vec3 b = checked_b(beta);
  const Grid& g = f1.grid();
  const Quadrature q = quadrature(g, opt);
  const double h = g.spacing();
  std::vector<cplx> per_t(q.m);
  parallel_for(q.m, [&](std::size_t k) {
    const double tt = q.node(k);
    std::vector<cplx> terms(g.n());
    for (std::size_t i = 0; i < g.n(); ++i) {
      if (f3[i] == cplx{}) continue;
      const double x = g.x(i);
      const cplx plus = f1.interpolate(x - b[0] * tt) * f2.interpolate(x - b[1] * tt);
      const cplx minus = f1.interpolate(x + b[0] * tt) * f2.interpolate(x + b[1] * tt);
      terms[i] = (plus - minus) * f3[i];
    }
    per_t[k] = pairwise_sum(terms) * (h * q.dt / tt);
  });
  return pairwise_sum(per_t);
}

}  // namespace tflab
