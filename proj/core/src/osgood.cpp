#include "tflab/osgood.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>

#include "tflab/fft.hpp"

namespace tflab {

struct OsgoodParams::Cache {
  std::mutex m;
  std::map<double, double> tau;
};

OsgoodParams::OsgoodParams(double lambda) : lambda_(lambda), cache_(std::make_shared<Cache>()) {
  if (!(lambda > 0) || !std::isfinite(lambda)) throw std::invalid_argument("osgood: lambda must be positive");
  u0_ = kE / lambda;
}

double eval_u(const OsgoodParams& p, double t) {
  if (!(t >= 0)) throw DomainError(fmt::format("u: t = {} is negative", t));
  const double s = std::log(t + kE);
  return (t + kE) * std::pow(s, 1.0 + p.lambda()) / p.lambda();
}

double eval_log_u_of_s(const OsgoodParams& p, double s) {
  if (!(s >= 1.0)) throw DomainError("log u: s = log(t+e) must be >= 1");
  return s + (1.0 + p.lambda()) * std::log(s) - std::log(p.lambda());
}

double eval_U(const OsgoodParams& p, double x) {
  if (!(x >= 0)) throw DomainError(fmt::format("U: x = {} is negative", x));
  if (x <= p.u0()) return 0.0;
  double lo = 0.0, hi = 1.0;
  while (eval_u(p, hi) < x) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    (eval_u(p, mid) < x ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double OsgoodParams::B_u(double tau) const {
  if (!(tau > 0)) throw DomainError("B_u: tau must be positive");
  {
    std::lock_guard<std::mutex> lock(cache_->m);
    auto it = cache_->tau.find(tau);
    if (it != cache_->tau.end()) return it->second;
  }
  // log(1+u(t)) - tau t is eventually decreasing; scan log-spaced t then refine.
  auto f = [&](double t) { return std::log1p(eval_u(*this, t)) - tau * t; };
  double best_t = 0.0, best = f(0.0);
  for (double t = 1e-6; t < 1e15; t *= 1.05) {
    const double v = f(t);
    if (v > best) best = v, best_t = t;
    if (tau * t > best + 60.0 + std::log1p(t)) break;
  }
  double lo = best_t / 1.05, hi = best_t * 1.05;
  for (int it = 0; it < 200; ++it) {
    const double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
    (f(a) < f(b) ? lo : hi) = (f(a) < f(b) ? a : b);
  }
  best = std::max(best, f(0.5 * (lo + hi)));
  const double val = std::exp(best);
  std::lock_guard<std::mutex> lock(cache_->m);
  cache_->tau[tau] = val;
  return val;
}

double osgood_partial_integral(const OsgoodParams& p, double S) {
  if (!(S >= 1.0)) throw DomainError("osgood integral: log horizon must be >= 1");
  // t = e^s - e, dt = e^s ds; then s = e^r to spread panels over decades.
  auto g = [&](double r) {
    const double s = std::exp(r);
    return std::exp(s - eval_log_u_of_s(p, s)) * s;
  };
  const double R = std::log(S);
  if (R == 0.0) return 0.0;
  const int panels = 20000;
  const double hr = R / panels;
  double sum = g(0.0) + g(R);
  for (int i = 1; i < panels; ++i) sum += g(i * hr) * ((i % 2) ? 4.0 : 2.0);
  return sum * hr / 3.0;
}

double osgood_horizon(const OsgoodParams& p, double tol) { return std::pow(tol, -1.0 / p.lambda()); }

Report verify_osgood(const OsgoodParams& p, double S, double tol) {
  Report r;
  r.name = "osgood";
  const double I = osgood_partial_integral(p, S);
  r["log_horizon"] = S;
  r["partial"] = I;
  r["closed_form"] = 1.0 - std::pow(S, -p.lambda());
  r["tail"] = 1.0 - I;
  r.passed = std::abs(1.0 - I) <= tol;
  if (!r.passed)
    r.notes.push_back(fmt::format("partial integral {:.6g} is not within {} of 1 at log horizon {}", I, tol, S));
  return r;
}

bool check_increasing_convex(const OsgoodParams& p, double t_max, std::size_t samples) {
  double prev = eval_u(p, 0.0), prev_slope = -1.0;
  for (std::size_t i = 1; i <= samples; ++i) {
    const double t0 = t_max * std::pow(static_cast<double>(i - 1) / samples, 3.0);
    const double t1 = t_max * std::pow(static_cast<double>(i) / samples, 3.0);
    const double v = eval_u(p, t1);
    if (!(v > prev)) return false;
    const double slope = (v - prev) / (t1 - t0);
    if (slope < prev_slope * (1.0 - 1e-12)) return false;
    prev = v;
    prev_slope = slope;
  }
  return true;
}

namespace {

double sinc(double a) {
  if (std::abs(a) < 1e-8) return 1.0 - (kPi * a) * (kPi * a) / 6.0;
  return std::sin(kPi * a) / (kPi * a);
}

// FT of u 1_{[0,1/u]} at zeta.
cplx box_hat(double u, double zeta) { return std::polar(sinc(zeta / u), -kPi * zeta / u); }

int resolve_k_max(const OsgoodParams& p, int k_max, double h) {
  if (k_max < 0) throw std::invalid_argument("build_ingham: k_max must be >= 0");
  if (k_max == 0) {
    int k = 1;
    if (1.0 / eval_u(p, 1.0) < 0.5 * h) throw ResolutionError("build_ingham: grid cannot resolve 1/u(1)");
    while (1.0 / eval_u(p, static_cast<double>(k + 1)) >= 0.5 * h) ++k;
    return k;
  }
  for (int k = 1; k <= k_max; ++k)
    if (1.0 / eval_u(p, static_cast<double>(k)) < 0.5 * h)
      throw ResolutionError(fmt::format(
          "build_ingham: grid too coarse to resolve 1/u(k) at k = {} (1/u = {:.3g}, h = {:.3g})", k,
          1.0 / eval_u(p, static_cast<double>(k)), h));
  return k_max;
}

std::size_t upsilon_points(double x_max) {
  std::size_t n = 2;
  while (2.0 * x_max / static_cast<double>(n) > 0.25) n *= 2;
  return n;
}

}  // namespace

double InghamTable::V0_at(double s) const {
  const double h = v0_grid.spacing();
  const double t = (s - v0_grid.x0()) / h;
  if (t <= 0) return 0.0;
  const auto n = static_cast<double>(v0_grid.n());
  if (t >= n) return V0.back();
  // cubic Hermite with V0' = v0 at the nodes
  const double fl = std::floor(t);
  const auto i = static_cast<std::size_t>(fl);
  const double w = t - fl, w2 = w * w, w3 = w2 * w;
  const double d0 = v0[i].real() * h, d1 = v0[(i + 1) % v0_grid.n()].real() * h;
  return (2 * w3 - 3 * w2 + 1) * V0[i] + (w3 - 2 * w2 + w) * d0 + (-2 * w3 + 3 * w2) * V0[i + 1] + (w3 - w2) * d1;
}

double InghamTable::v_at(double xi) const { return V0_at(3.0 * xi + 1.5) - V0_at(3.0 * xi - 0.5); }

GridFunction upsilon_on(const InghamTable& t, const Grid& g) {
  if (g.nyquist() < 0.5) throw ResolutionError("upsilon_on: grid Nyquist below the window band 1/2");
  std::vector<cplx> F(g.n());
  for (std::size_t k = 0; k < g.n(); ++k) F[k] = t.v_at(g.freq(g.signed_bin(k)));
  return from_spectrum(g, F);
}

cplx v0_hat_product(const InghamTable& t, double zeta) {
  cplx acc = 1.0;
  for (double u : t.u_values) acc *= box_hat(u, zeta);
  return acc;
}

cplx upsilon_product(const InghamTable& t, double x) {
  const double tail = std::abs(x) < 1e-12 ? 2.0 / 3.0 : std::sin(2.0 * kPi * x / 3.0) / (kPi * x);
  return std::polar(1.0, -kPi * x / 3.0) * v0_hat_product(t, -x / 3.0) * tail;
}

InghamTable build_ingham(const OsgoodParams& p, int k_max, std::size_t grid_n, const InghamOptions& opt) {
  InghamTable t;
  t.params = p;
  t.grid_n = grid_n;
  t.v0_grid = Grid(-2.0, 2.0, grid_n);
  const Grid& g = t.v0_grid;
  t.k_max = resolve_k_max(p, k_max, g.spacing());
  for (int k = 1; k <= t.k_max; ++k) t.u_values.push_back(eval_u(p, static_cast<double>(k)));

  std::vector<cplx> F(g.n());
  parallel_for(g.n(), [&](std::size_t k) {
    const double z = g.freq(g.signed_bin(k));
    cplx acc = 1.0;
    for (double u : t.u_values) acc *= box_hat(u, z);
    F[k] = acc;
  });
  t.v0 = from_spectrum(g, F);

  const double h = g.spacing();
  t.V0.assign(g.n() + 1, 0.0);
  for (std::size_t i = 0; i < g.n(); ++i) {
    const double a = t.v0[i].real(), b = t.v0[(i + 1) % g.n()].real();
    t.V0[i + 1] = t.V0[i] + 0.5 * h * (a + b);
  }

  const Grid sg(-1.0, 1.0, grid_n);
  t.spectrum = GridFunction::sample(sg, [&](double xi) { return t.v_at(xi); });

  // ||upsilon||_2^2 = int v^2 on a grid three times finer than the V0 grid.
  const double hq = h / 3.0;
  double s2 = 0.0;
  for (double xi = -0.5; xi < 0.5; xi += hq) {
    const double v = t.v_at(xi);
    s2 += v * v;
  }
  t.upsilon_l2 = std::sqrt(s2 * hq);

  const std::size_t nu = opt.upsilon_n ? opt.upsilon_n : upsilon_points(opt.x_max);
  t.upsilon = upsilon_on(t, Grid(-opt.x_max, opt.x_max, nu));
  return t;
}

std::vector<double> recurrence_integrals(const OsgoodParams& p, int k_max, std::size_t grid_n) {
  const Grid g(-2.0, 2.0, grid_n);
  const int K = resolve_k_max(p, k_max, g.spacing());
  std::vector<cplx> F(g.n(), 1.0);
  std::vector<double> out;
  for (int k = 1; k <= K; ++k) {
    const double u = eval_u(p, static_cast<double>(k));
    for (std::size_t b = 0; b < g.n(); ++b) F[b] *= box_hat(u, g.freq(g.signed_bin(b)));
    out.push_back(from_spectrum(g, F).integral().real());
  }
  return out;
}

Report verify_sandwich(const InghamTable& t) {
  Report r;
  r.name = "sandwich";
  double viol = 0.0;
  const Grid& sg = t.spectrum.grid();
  for (std::size_t i = 0; i < sg.n(); ++i) {
    const double xi = sg.x(i);
    const double v = t.spectrum[i].real();
    const double lower = std::abs(xi) <= 1.0 / 6.0 ? 1.0 : 0.0;
    const double upper = std::abs(xi) <= 0.5 ? 1.0 : 0.0;
    viol = std::max({viol, lower - v, v - upper});
  }
  double mass = 0.0, vmax = 0.0, outside = 0.0;
  const Grid& g = t.v0_grid;
  for (std::size_t i = 0; i < g.n(); ++i) {
    const double x = g.x(i), v = t.v0[i].real();
    mass += v;
    vmax = std::max(vmax, v);
    if (x < 0.0 || x > 1.0) outside = std::max(outside, std::abs(v));
  }
  r["max_violation"] = viol;
  r["v0_integral"] = mass * g.spacing();
  r["v0_sup"] = vmax;
  r["u1"] = t.u_values.empty() ? 0.0 : t.u_values.front();
  r["v0_outside_support"] = outside;
  r["k_max"] = t.k_max;
  r.passed = viol <= 1e-6;
  return r;
}

Report verify_decay(const GridFunction& ups, const OsgoodParams& p, double a, double a_max, double x_max) {
  Report r;
  r.name = "decay";
  const Grid& g = ups.grid();
  if (g.x0() > -2.0 * x_max || g.x1() < 2.0 * x_max)
    throw ResolutionError("verify_decay: samples do not cover |x| <= 2 x_max");
  double c1 = 0.0, c2 = 0.0, tail = 0.0;
  bool finite = true;
  for (std::size_t i = 0; i < g.n(); ++i) {
    const double ax = std::abs(g.x(i));
    if (ax > 2.0 * x_max) continue;
    const double c = std::abs(ups[i]) * std::exp(a * eval_U(p, ax));
    if (!std::isfinite(c)) finite = false;
    c2 = std::max(c2, c);
    if (ax <= x_max) c1 = std::max(c1, c);
    if (ax >= 0.5 * x_max && ax <= x_max) tail = std::max(tail, c);
  }
  r["a"] = a;
  r["sup_C"] = c1;
  r["sup_C_doubled"] = c2;
  r["tail_C"] = tail;
  const bool stable = c2 <= 1.1 * c1 || c2 == 0.0;
  r["stable"] = stable ? 1.0 : 0.0;
  r.passed = finite && stable && a <= a_max;
  if (a > a_max) r.notes.push_back(fmt::format("exponent a = {} exceeds the guaranteed decay rate {}", a, a_max));
  if (!stable) r.notes.push_back("envelope grows when the range doubles");
  return r;
}

Report verify_decay(const InghamTable& t, double a, double x_max) {
  const std::size_t n = upsilon_points(4.0 * x_max);
  const GridFunction ups = upsilon_on(t, Grid(-4.0 * x_max, 4.0 * x_max, n));
  return verify_decay(ups, t.params, a, t.decay_rate, x_max);
}

namespace {

constexpr char kMagic[4] = {'T', 'F', 'L', 'I'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <class T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("ingham cache: truncated file");
  return v;
}

}  // namespace

void save_ingham(const InghamTable& t, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("save_ingham: cannot open " + path);
  os.write(kMagic, 4);
  put(os, kVersion);
  put(os, t.params.lambda());
  put(os, static_cast<std::int32_t>(t.k_max));
  put(os, static_cast<std::uint64_t>(t.grid_n));
  put(os, t.upsilon.grid().x1());
  put(os, static_cast<std::uint64_t>(t.upsilon.grid().n()));
  put(os, t.upsilon_l2);
  for (const auto& z : t.v0.values()) put(os, z.real());
  for (const auto& z : t.upsilon.values()) put(os, z);
}

InghamTable load_ingham(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_ingham: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) throw std::runtime_error("load_ingham: bad magic");
  if (get<std::uint32_t>(is) != kVersion) throw std::runtime_error("load_ingham: unsupported version");
  const OsgoodParams p(get<double>(is));
  InghamTable t;
  t.params = p;
  t.k_max = get<std::int32_t>(is);
  t.grid_n = get<std::uint64_t>(is);
  const double x_max = get<double>(is);
  const auto nu = get<std::uint64_t>(is);
  t.upsilon_l2 = get<double>(is);
  for (int k = 1; k <= t.k_max; ++k) t.u_values.push_back(eval_u(p, static_cast<double>(k)));
  t.v0_grid = Grid(-2.0, 2.0, t.grid_n);
  t.v0 = GridFunction(t.v0_grid);
  for (std::size_t i = 0; i < t.grid_n; ++i) t.v0[i] = get<double>(is);
  const double h = t.v0_grid.spacing();
  t.V0.assign(t.grid_n + 1, 0.0);
  for (std::size_t i = 0; i < t.grid_n; ++i)
    t.V0[i + 1] = t.V0[i] + 0.5 * h * (t.v0[i].real() + t.v0[(i + 1) % t.grid_n].real());
  const Grid sg(-1.0, 1.0, t.grid_n);
  t.spectrum = GridFunction::sample(sg, [&](double xi) { return t.v_at(xi); });
  t.upsilon = GridFunction(Grid(-x_max, x_max, nu));
  for (std::size_t i = 0; i < nu; ++i) t.upsilon[i] = get<cplx>(is);
  return t;
}

InghamTable ingham_cached(const OsgoodParams& p, int k_max, std::size_t grid_n, const std::string& cache_dir,
                          const InghamOptions& opt) {
  if (cache_dir.empty()) return build_ingham(p, k_max, grid_n, opt);
  namespace fs = std::filesystem;
  const fs::path file =
      fs::path(cache_dir) / fmt::format("ingham_l{:.6g}_k{}_n{}_x{:.6g}.bin", p.lambda(), k_max, grid_n, opt.x_max);
  if (fs::exists(file)) {
    try {
      return load_ingham(file.string());
    } catch (const std::exception&) {
      // stale or corrupt entry: rebuild below
    }
  }
  InghamTable t = build_ingham(p, k_max, grid_n, opt);
  std::error_code ec;
  fs::create_directories(cache_dir, ec);
  save_ingham(t, file.string());
  return t;
}

}  // namespace tflab
