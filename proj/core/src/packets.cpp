#include "tflab/packets.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace tflab {

Tile Tile::make(const Interval& I, const Interval& omega) {
  const double area = I.length() * omega.length();
  if (std::abs(area - 1.0) > 1e-12) throw std::invalid_argument(fmt::format("tile: |I||omega| = {} != 1", area));
  return {I, omega};
}

std::vector<cplx> PacketSpectrum::dense(const Grid& g) const {
  std::vector<cplx> F(g.n());
  for (std::size_t q = 0; q < P.size(); ++q) F[g.storage_bin(k_lo + static_cast<std::int64_t>(q))] = P[q];
  return F;
}

namespace {

struct Band {
  std::int64_t k_lo, k_hi;
};

Band band_bins(const Grid& g, double xi, double eps, double len) {
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("packet: eps must lie in (0, 1]");
  if (!(len > 0.0)) throw std::invalid_argument("packet: interval must be non-empty");
  const double L = g.length(), half = 0.5 * eps / len;
  const auto k_lo = static_cast<std::int64_t>(std::ceil(L * (xi - half) - 1e-9));
  const auto k_hi = static_cast<std::int64_t>(std::floor(L * (xi + half) + 1e-9));
  const auto nh = static_cast<std::int64_t>(g.n() / 2);
  if (k_lo <= -nh || k_hi >= nh)
    throw ResolutionError(fmt::format("packet: band [{:.6g}, {:.6g}] exceeds Nyquist {:.6g}", xi - half, xi + half,
                                      g.nyquist()));
  if (k_hi - k_lo + 1 < kMinPacketBins)
    throw ResolutionError(fmt::format("packet: only {} DFT bins across band of width {:.3g} (domain too short)",
                                      k_hi - k_lo + 1, 2 * half));
  return {k_lo, k_hi};
}

// Normalized spectrum of the packet centered at c.
PacketSpectrum make_spectrum(const Grid& g, double len, double c, double xi, double eps, const InghamTable& t) {
  const Band b = band_bins(g, xi, eps, len);
  PacketSpectrum s;
  s.k_lo = b.k_lo;
  s.P.resize(static_cast<std::size_t>(b.k_hi - b.k_lo + 1));
  const double amp = std::sqrt(len / eps);
  double mass = 0.0;
  for (std::size_t q = 0; q < s.P.size(); ++q) {
    const double dz = g.freq(b.k_lo + static_cast<std::int64_t>(q)) - xi;
    const double v = t.v_at(len * dz / eps);
    s.P[q] = amp * v * std::polar(1.0, -2.0 * kPi * dz * c);
    mass += std::norm(s.P[q]);
  }
  mass /= g.length();
  if (!(mass > 0.0)) throw ResolutionError("packet: band holds no window mass");
  const double inv = 1.0 / std::sqrt(mass);
  for (auto& z : s.P) z *= inv;
  return s;
}

std::size_t row_period(const Grid& g, double len) {
  const double Nd = g.length() / len;
  const double Nr = std::round(Nd);
  if (std::abs(Nd - Nr) > 1e-9 * Nd || Nr < 1)
    throw ResolutionError(fmt::format("packet row: domain length {} is not a multiple of |I| = {}", g.length(), len));
  return static_cast<std::size_t>(Nr);
}

std::size_t mod_index(std::int64_t k, std::size_t N) {
  const auto n = static_cast<std::int64_t>(N);
  return static_cast<std::size_t>(((k % n) + n) % n);
}

}  // namespace

bool packet_resolvable(const Grid& g, double xi, double eps, double len) {
  try {
    (void)band_bins(g, xi, eps, len);
    return true;
  } catch (const ResolutionError&) {
    return false;
  }
}

PacketSpectrum packet_spectrum(const TopDatum& td, double eps, const InghamTable& t, const Grid& g) {
  return make_spectrum(g, td.I.length(), td.I.center(), td.xi, eps, t);
}

WavePacket canonical_packet(const TopDatum& td, double eps, const InghamTable& t, const Grid& g) {
  WavePacket p;
  p.td = td;
  p.eps = eps;
  p.a = eps / 100.0;
  p.center_freq = td.xi;
  p.spec = packet_spectrum(td, eps, t, g);
  p.samples = from_spectrum(g, p.spec.dense(g));
  return p;
}

cplx packet_coefficient(const Spectrum& F, const PacketSpectrum& P) {
  cplx s{};
  for (std::size_t q = 0; q < P.P.size(); ++q) s += F.at(P.k_lo + static_cast<std::int64_t>(q)) * std::conj(P.P[q]);
  return s / F.grid.length();
}

std::vector<cplx> packet_row_coefficients(const Spectrum& F, double len, double xi, double eps, const InghamTable& t,
                                          std::int64_t m_lo, std::int64_t m_hi) {
  const Grid& g = F.grid;
  const std::size_t N = row_period(g, len);
  const PacketSpectrum P0 = make_spectrum(g, len, 0.0, xi, eps, t);
  std::vector<cplx> A(N);
  for (std::size_t q = 0; q < P0.P.size(); ++q) {
    const std::int64_t k = P0.k_lo + static_cast<std::int64_t>(q);
    A[mod_index(k, N)] += F.at(k) * std::conj(P0.P[q]) * std::polar(1.0, kPi * static_cast<double>(k) / N);
  }
  fft_inplace(A, +1);
  std::vector<cplx> out;
  out.reserve(static_cast<std::size_t>(std::max<std::int64_t>(0, m_hi - m_lo)));
  const double invL = 1.0 / g.length();
  for (std::int64_t m = m_lo; m < m_hi; ++m) {
    const double c = len * (static_cast<double>(m) + 0.5);
    out.push_back(A[mod_index(m, N)] * invL * std::polar(1.0, -2.0 * kPi * xi * c));
  }
  return out;
}

void accumulate_conj_row(std::vector<cplx>& G, const Grid& g, double len, double xi, double eps,
                         const InghamTable& t, std::int64_t m_lo, const std::vector<cplx>& c) {
  if (G.size() != g.n()) throw GridMismatch("accumulate_conj_row: spectrum size mismatch");
  const std::size_t N = row_period(g, len);
  const PacketSpectrum P0 = make_spectrum(g, len, 0.0, xi, eps, t);
  std::vector<cplx> T(N);
  for (std::size_t i = 0; i < c.size(); ++i) {
    const std::int64_t m = m_lo + static_cast<std::int64_t>(i);
    const double cm = len * (static_cast<double>(m) + 0.5);
    T[mod_index(m, N)] += c[i] * std::polar(1.0, -2.0 * kPi * xi * cm);
  }
  fft_inplace(T, +1);
  for (std::size_t q = 0; q < P0.P.size(); ++q) {
    const std::int64_t k = P0.k_lo + static_cast<std::int64_t>(q);
    G[g.storage_bin(-k)] +=
        std::conj(P0.P[q]) * std::polar(1.0, kPi * static_cast<double>(k) / N) * T[mod_index(k, N)];
  }
}

Report verify_packet_decay(const WavePacket& p, const InghamTable& t) {
  Report r;
  r.name = "packet_decay";
  auto sup_env = [&](const GridFunction& s) {
    double m = 0.0;
    const double c = p.td.I.center(), len = p.td.I.length();
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double y = std::abs(s.grid().x(i) - c) / len;
      m = std::max(m, std::abs(s[i]) * std::exp(p.a * eval_U(t.params, y)));
    }
    return m;
  };
  const double c1 = sup_env(p.samples);
  const WavePacket q = canonical_packet(p.td, p.eps, t, p.samples.grid().refined());
  const double c2 = sup_env(q.samples);
  r["sup"] = c1;
  r["sup_refined"] = c2;
  r.passed = std::isfinite(c1) && std::abs(c2 - c1) <= 0.1 * c1;
  return r;
}

GridFunction packet_cutoff(const InghamTable& t, const Grid& g, const Interval& I, double uK) {
  const double c = I.center(), scale = uK * I.length();
  return GridFunction::sample(g, [&](double x) {
    const double y = (x - c) / scale;
    return std::abs(y) >= 0.5 ? 0.0 : t.v_at(y);
  });
}

namespace {

double adapt_constant(const GridFunction& f, const Interval& I, double xi, double N) {
  const Grid& g = f.grid();
  const std::size_t n = g.n();
  const double c = I.center(), len = I.length(), h = g.spacing();
  std::vector<cplx> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = f[i] * std::polar(1.0, -2.0 * kPi * xi * g.x(i));
  double best = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const cplx der = (d[(i + 1) % n] - d[(i + n - 1) % n]) / (2.0 * h);
    const double w = std::pow(1.0 + std::abs(g.x(i) - c) / len, N) * std::sqrt(len);
    best = std::max(best, std::max(std::abs(d[i]), len * std::abs(der)) * w);
  }
  return best;
}

struct Prepared {
  double K, uK, factor;
  Interval support;
  GridFunction cut;
  std::vector<std::string> notes;
};

Prepared prepare_split(const WavePacket& phi, double K, const InghamTable& t, const SplitOptions& opt) {
  if (!(K >= 1.0)) throw std::invalid_argument("split: K must be >= 1");
  const Grid& g = phi.samples.grid();
  Prepared pr;
  pr.K = K;
  auto fits = [&](double k) { return g.domain().contains(phi.td.I.dilate(eval_u(t.params, k)), 1e-12); };
  if (!fits(K)) {
    if (!opt.clamp || !fits(1.0))
      throw DomainError(fmt::format("split: u(K) I = {} I leaves the grid domain", eval_u(t.params, K)));
    double lo = 1.0, hi = K;
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (fits(mid) ? lo : hi) = mid;
    }
    pr.notes.push_back(fmt::format("K clamped from {} to {} to fit the grid", K, lo));
    pr.K = lo;
  }
  pr.uK = eval_u(t.params, pr.K);
  pr.support = phi.td.I.dilate(pr.uK);
  pr.factor = std::exp(-phi.a * pr.K / 12.0);
  pr.cut = packet_cutoff(t, g, phi.td.I, pr.uK);
  return pr;
}

void finish_split(SplitResult& r, const WavePacket& phi, const SplitOptions& opt) {
  const Spectrum S = spectrum_of(r.phi_c);
  const Grid& g = S.grid;
  const double len = phi.td.I.length();
  double mass = 0.0, tw = 0.0;
  for (std::size_t k = 0; k < g.n(); ++k) {
    const double dz = std::abs(g.freq(g.signed_bin(k)) - phi.center_freq);
    if (dz < 2.0 / len) continue;
    mass += std::norm(S.F[k]);
    tw = std::max(tw, std::abs(S.F[k]) * std::pow(1.0 + len * dz, opt.N) / r.factor / std::sqrt(len));
  }
  r.tail = std::sqrt(mass / g.length());
  r.tail_weighted = tw;
  r.adapt_phi_c = adapt_constant(r.phi_c, phi.td.I, phi.center_freq, opt.N);
  r.adapt_psi = adapt_constant(r.psi, phi.td.I, phi.center_freq, opt.N);
}

}  // namespace

SplitResult split_truncate(const WavePacket& phi, double K, const InghamTable& t, const SplitOptions& opt) {
  Prepared pr = prepare_split(phi, K, t, opt);
  SplitResult r;
  r.K = pr.K;
  r.uK = pr.uK;
  r.factor = pr.factor;
  r.support = pr.support;
  r.notes = pr.notes;
  r.xi0 = std::numeric_limits<double>::quiet_NaN();
  const Grid& g = phi.samples.grid();
  r.phi_c = GridFunction(g);
  r.psi = GridFunction(g);
  for (std::size_t i = 0; i < g.n(); ++i) {
    const double v = pr.cut[i].real();
    r.phi_c[i] = phi.samples[i] * v;
    r.psi[i] = phi.samples[i] * (1.0 - v) / pr.factor;
  }
  finish_split(r, phi, opt);
  return r;
}

SplitResult split_meanzero(const WavePacket& phi, double K, double xi0, const InghamTable& t, double R,
                           const SplitOptions& opt) {
  const Grid& g = phi.samples.grid();
  const double len = phi.td.I.length();
  auto admissible = [&](double z) {
    const double nz = std::abs(len * (z - phi.center_freq));
    return nz > 0.5 && nz <= 0.5 * R;
  };
  if (!admissible(xi0))
    throw PreconditionError(fmt::format("split_meanzero: normalized xi0 = {} not in R I0 \\ I0",
                                        len * (xi0 - phi.center_freq)));
  const double xs = std::round(xi0 * g.length()) / g.length();
  if (!admissible(xs)) throw PreconditionError("split_meanzero: xi0 leaves the admissible band after bin snapping");

  Prepared pr = prepare_split(phi, K, t, opt);
  SplitResult r;
  r.K = pr.K;
  r.uK = pr.uK;
  r.factor = pr.factor;
  r.support = pr.support;
  r.notes = pr.notes;
  r.xi0 = xs;
  if (xs != xi0) r.notes.push_back(fmt::format("xi0 snapped from {} to DFT bin {}", xi0, xs));

  std::vector<cplx> w(g.n()), e(g.n());
  cplx swv{};
  double sv = 0.0;
  for (std::size_t i = 0; i < g.n(); ++i) {
    e[i] = std::polar(1.0, 2.0 * kPi * xs * g.x(i));
    w[i] = phi.samples[i] * std::conj(e[i]);
    const double v = pr.cut[i].real();
    swv += w[i] * v;
    sv += v;
  }
  const cplx A = swv / sv;
  r.phi_c = GridFunction(g);
  r.psi = GridFunction(g);
  cplx m1{}, m2{};
  for (std::size_t i = 0; i < g.n(); ++i) {
    const double v = pr.cut[i].real();
    r.phi_c[i] = (w[i] * v - A * v) * e[i];
    r.psi[i] = (A * v + (1.0 - v) * w[i]) * e[i] / pr.factor;
    m1 += r.phi_c[i] * std::conj(e[i]);
    m2 += r.psi[i] * std::conj(e[i]);
  }
  r.mean_phi_c = std::abs(m1) * g.spacing();
  r.mean_psi = std::abs(m2) * g.spacing();
  finish_split(r, phi, opt);
  return r;
}

Interval omega_for(double xi, double len, double eps) {
  const double W = 1.0 / len;
  if (eps > 1.0 / 6.0) return {xi - 0.5 * W, xi + 0.5 * W};
  const double a = xi - 2.0 * eps * W, b = xi + 2.0 * eps * W;
  Interval best{xi - 0.5 * W, xi + 0.5 * W};
  double best_d = std::numeric_limits<double>::infinity();
  for (int j = 0; j < 3; ++j) {
    const double shift = j / 3.0;
    const auto m0 = static_cast<std::int64_t>(std::ceil((b - W) / W - shift - 1e-12));
    const auto m1 = static_cast<std::int64_t>(std::floor(a / W - shift + 1e-12));
    for (std::int64_t m = m0; m <= m1; ++m) {
      const double lo = (static_cast<double>(m) + shift) * W;
      const double d = std::abs(lo + 0.5 * W - xi);
      if (d < best_d - 1e-15 * W) best_d = d, best = {lo, lo + W};
    }
  }
  return best;
}

std::vector<double> dedup_sorted(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  return out;
}

std::vector<double> xi_lattice_u(const Interval& J, const Interval& omega, double u) {
  const Interval W = omega.dilate(5.0);
  const double step = 1.0 / (3.0 * u * J.length());
  const auto q0 = static_cast<std::int64_t>(std::ceil(W.lo / step - 1e-9));
  const auto q1 = static_cast<std::int64_t>(std::ceil(W.hi / step - 1e-9)) - 1;
  std::vector<double> out;
  for (std::int64_t q = q0; q <= q1; ++q) out.push_back(static_cast<double>(q) * step);
  return out;
}

std::vector<double> xi_lattice(const Interval& J, const Interval& omega, double K, const OsgoodParams& p) {
  return xi_lattice_u(J, omega, eval_u(p, K));
}

XiHResult xi_H(const TopDatum& td, const Interval& H, double K, const OsgoodParams& p, const PacketFamily& fam) {
  XiHResult r;
  const double u = eval_u(p, K);
  const Interval& I = td.I;
  if (H.dilate(3.0).contains(I, 1e-12) || !H.intersects(I.dilate(3.0 * u))) {
    r.regime = "empty";
    return r;
  }
  std::vector<double> all{td.xi};
  double min_step = std::numeric_limits<double>::infinity();
  const Interval H3 = H.dilate(3.0);
  const double lenH = H.length();
  for (int l = 0;; ++l) {
    const double len = std::ldexp(I.length(), -l);
    if (len < lenH / (3.0 * u) - 1e-15 || len < fam.min_len) break;
    if (l > 60) break;
    if (len > std::ldexp(lenH, static_cast<int>(std::min(10.0 * K, 1000.0)))) continue;
    const double count = std::ldexp(1.0, l);
    // positions with H inside 3u J
    const double ia = std::ceil((H.hi - 1.5 * u * len - I.lo) / len - 0.5 - 1e-9);
    const double ib = std::floor((H.lo + 1.5 * u * len - I.lo) / len - 0.5 + 1e-9);
    const double A0 = std::max(0.0, ia), A1 = std::min(count - 1.0, ib);
    if (A0 > A1) continue;
    // positions with J inside 3H
    const double b0 = std::ceil((H3.lo - I.lo) / len - 1e-9), b1 = std::floor((H3.hi - I.lo) / len - 1.0 + 1e-9);
    const bool all_inside = b0 <= A0 && A1 <= b1;
    if (all_inside) continue;
    ++r.levels;
    const Interval J{I.lo, I.lo + len};
    for (double off : fam.offsets) {
      const double xiJ = td.xi + off / len;
      const auto lat = xi_lattice_u(J, omega_for(xiJ, len, fam.eps), u);
      all.insert(all.end(), lat.begin(), lat.end());
    }
    min_step = std::min(min_step, 1.0 / (3.0 * u * len));
  }
  r.freqs = dedup_sorted(std::move(all), std::isfinite(min_step) ? min_step / 100.0 : 0.0);
  const double count = static_cast<double>(r.freqs.size());
  if (!H.intersects(I.dilate(9.0))) {
    r.regime = "far";
    r.bound_constant = count / (u * std::log(u));
  } else {
    r.regime = "near";
    r.bound_constant = count / (K * u);
  }
  return r;
}

}  // namespace tflab
