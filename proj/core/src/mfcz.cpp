#include "tflab/mfcz.hpp"

#include <fmt/format.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "tflab/fft.hpp"

namespace tflab {

namespace {

// Maximality of Q confines |Q| to (d/11, d/2] with d = dist(x, complement of E)
// for every 3Q containing x: three dyadic sizes, three intervals per size.
constexpr double kThreeQOverlapBound = 9.0;

double avg_norm(const GridFunction& f, const IndexRange& r, double p) {
  if (r.size() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = r.b; i < r.e; ++i) s += std::pow(std::abs(f[i]), p);
  return std::pow(s / static_cast<double>(r.size()), 1.0 / p);
}

// max_zeta |h sum_i b_i e^{-2 pi i zeta x_i}| over the samples in r.
double max_moment(const GridFunction& b, const IndexRange& r, const std::vector<double>& freqs) {
  const Grid& g = b.grid();
  double worst = 0.0;
  for (double z : freqs) {
    cplx s{};
    for (std::size_t i = r.b; i < r.e; ++i) s += b[i] * std::polar(1.0, -2.0 * kPi * z * g.x(i));
    worst = std::max(worst, std::abs(s) * g.spacing());
  }
  return worst;
}

}  // namespace

RieszResult riesz_project(const GridFunction& h, const Interval& three_q, const std::vector<double>& freqs,
                          double rank_tol) {
  const Grid& grid = h.grid();
  const IndexRange r = sample_range(grid, three_q);
  for (std::size_t i = 0; i < h.size(); ++i)
    if ((i < r.b || i >= r.e) && h[i] != cplx{}) throw PreconditionError("riesz_project: h is not supported in 3Q");
  for (double z : freqs)
    if (!std::isfinite(z)) throw PreconditionError("riesz_project: non-finite frequency");

  RieszResult out;
  out.g = GridFunction(grid);
  out.b = h;
  std::vector<double> zs = freqs;
  std::sort(zs.begin(), zs.end());
  zs.erase(std::unique(zs.begin(), zs.end()), zs.end());
  const auto m = static_cast<Eigen::Index>(r.size());
  const auto N = static_cast<Eigen::Index>(zs.size());
  if (N == 0 || m == 0) return out;

  const double sh = std::sqrt(grid.spacing());
  const double c = three_q.center();
  Eigen::MatrixXcd A(m, N);
  for (Eigen::Index j = 0; j < N; ++j)
    for (Eigen::Index i = 0; i < m; ++i)
      A(i, j) = sh * std::polar(1.0, 2.0 * kPi * zs[j] * (grid.x(r.b + i) - c));
  Eigen::VectorXcd y(m);
  for (Eigen::Index i = 0; i < m; ++i) y(i) = sh * h[r.b + i];

  // Pivoted Gram-Schmidt with reorthogonalized basis vectors.
  const double ref = A.colwise().norm().maxCoeff();
  std::vector<bool> used(static_cast<std::size_t>(N), false);
  const Eigen::Index rmax = std::min(m, N);
  Eigen::MatrixXcd Qb(m, rmax);
  Eigen::Index rank = 0;
  while (rank < rmax) {
    Eigen::Index piv = -1;
    double best = 0.0;
    for (Eigen::Index j = 0; j < N; ++j) {
      if (used[j]) continue;
      const double nj = A.col(j).norm();
      if (nj > best) best = nj, piv = j;
    }
    if (piv < 0 || best <= rank_tol * ref) break;
    used[piv] = true;
    Eigen::VectorXcd q = A.col(piv);
    if (rank > 0) q -= Qb.leftCols(rank) * (Qb.leftCols(rank).adjoint() * q);
    q /= q.norm();
    Qb.col(rank) = q;
    ++rank;
    const Eigen::RowVectorXcd proj = q.adjoint() * A;
    A.noalias() -= q * proj;
  }
  out.rank = static_cast<std::size_t>(rank);
  if (rank < N) out.notes.push_back(fmt::format("exponential system rank {} of {} frequencies", rank, N));

  const Eigen::VectorXcd gw = Qb.leftCols(rank) * (Qb.leftCols(rank).adjoint() * y);
  for (Eigen::Index i = 0; i < m; ++i) {
    out.g[r.b + i] = gw(i) / sh;
    out.b[r.b + i] = h[r.b + i] - out.g[r.b + i];
  }
  const double hn = h.norm2();
  out.max_residual = hn > 0.0 ? max_moment(out.b, r, zs) / hn : 0.0;
  return out;
}

GridFunction MfczSplit::bad() const {
  GridFunction b(good.grid());
  for (const auto& [q, bq] : bad_parts) b += bq;
  return b;
}

int counting_overlap(const std::vector<TopDatum>& tops, double c) {
  std::vector<std::pair<double, int>> ev;
  for (const auto& td : tops) {
    const Interval J = td.I.dilate(c);
    ev.emplace_back(J.lo, +1);
    ev.emplace_back(J.hi, -1);
  }
  // half-open: a closing end at x is processed before an opening one
  std::sort(ev.begin(), ev.end());
  int cur = 0, best = 0;
  for (const auto& e : ev) best = std::max(best, cur += e.second);
  return best;
}

MfczSplit mfcz_decompose(const GridFunction& f, const std::vector<TopDatum>& tops, double lam, int k, double p,
                         const OsgoodParams& params, const MfczOptions& opt) {
  if (!(p >= 1.0 && p < 2.0)) throw PreconditionError("mfcz_decompose: p must lie in [1, 2)");
  if (!(lam > 0.0)) throw PreconditionError("mfcz_decompose: lambda must be positive");
  if (k < 1) throw PreconditionError("mfcz_decompose: k must be >= 1");
  const Grid& grid = f.grid();

  MfczSplit s;
  s.lam = lam;
  s.k = k;
  s.p = p;
  const double a = opt.family.eps / 100.0;
  const double C = opt.C > 0.0 ? opt.C : 1e3 / a;
  s.K = C * k;
  s.uK = eval_u(params, s.K);
  Report& d = s.diagnostics;
  d.name = "mfcz";
  d["C"] = C;
  d["K"] = s.K;
  d["uK"] = s.uK;

  const int overlap = counting_overlap(tops, 3.0 * s.uK);
  d["counting_overlap"] = overlap;
  if (std::ldexp(1.0, k) < overlap)
    throw PreconditionError(fmt::format("mfcz_decompose: counting function {} exceeds 2^k = {}", overlap,
                                        std::ldexp(1.0, k)));

  const GridFunction M = maximal_function(f, p);
  std::vector<bool> mask(grid.n());
  for (std::size_t i = 0; i < grid.n(); ++i) mask[i] = M[i].real() > lam;
  s.exceptional = IntervalSet::from_mask(grid, mask);
  s.q_intervals = superlevel_decompose(M, lam, 9.0);
  for (const auto& q : s.q_intervals)
    if (s.uK * q.length() > grid.length())
      throw ResolutionError(fmt::format("mfcz_decompose: u(K)|Q| = {} exceeds the domain length {}",
                                        s.uK * q.length(), grid.length()));

  for (const auto& td : tops) {
    bool inside = false;
    for (const auto& q : s.q_intervals) inside = inside || q.interval().dilate(9.0).contains(td.I, 1e-12);
    if (!inside) s.tops.push_back(td);
  }
  d["tops_kept"] = static_cast<double>(s.tops.size());

  // Per-top family restricted to levels whose lattice stays below Nyquist.
  const double nyq = grid.nyquist();
  double off_max = 0.0;
  for (double o : opt.family.offsets) off_max = std::max(off_max, std::abs(o));
  std::vector<PacketFamily> fams;
  double dedup_tol = std::numeric_limits<double>::infinity();
  for (const auto& td : s.tops) {
    if (std::abs(td.xi) >= nyq) throw ResolutionError("mfcz_decompose: top frequency beyond Nyquist");
    PacketFamily fam = opt.family;
    fam.min_len = std::max(fam.min_len, (off_max + 3.0) / (nyq - std::abs(td.xi)));
    fams.push_back(fam);
    dedup_tol = std::min(dedup_tol, 1.0 / (300.0 * s.uK * td.I.length()));
  }
  if (!std::isfinite(dedup_tol)) dedup_tol = 0.0;

  const std::size_t nq = s.q_intervals.size();
  std::vector<RieszResult> res(nq);
  std::vector<std::vector<double>> xis(nq);
  parallel_for(nq, [&](std::size_t qi) {
    const Interval H = s.q_intervals[qi].interval().dilate(3.0);
    std::vector<double> all;
    for (std::size_t t = 0; t < s.tops.size(); ++t) {
      if (!H.intersects(s.tops[t].I.dilate(3.0 * s.uK))) continue;
      const XiHResult xr = xi_H(s.tops[t], H, s.K, params, fams[t]);
      all.insert(all.end(), xr.freqs.begin(), xr.freqs.end());
    }
    std::sort(all.begin(), all.end());
    xis[qi] = dedup_sorted(std::move(all), dedup_tol);
    const IndexRange rq = sample_range(grid, s.q_intervals[qi].interval());
    GridFunction fq(grid);
    for (std::size_t i = rq.b; i < rq.e; ++i) fq[i] = f[i];
    res[qi] = riesz_project(fq, H, xis[qi], opt.rank_tol);
  });

  s.good = GridFunction(grid);
  std::vector<bool> covered(grid.n(), false);
  double mean_zero = 0.0, support_violation = 0.0, proj_residual = 0.0;
  double xi_max = 0.0, xi_const = 0.0, be_max = 0.0, be_min = std::numeric_limits<double>::infinity();
  const double f1 = f.norm1();
  const double bound_scale = s.uK * s.uK * std::ldexp(1.0, k);
  for (std::size_t qi = 0; qi < nq; ++qi) {
    const DyadicInterval& q = s.q_intervals[qi];
    const IndexRange rq = sample_range(grid, q.interval());
    const IndexRange r3 = sample_range(grid, q.interval().dilate(3.0));
    for (std::size_t i = rq.b; i < rq.e; ++i) covered[i] = true;
    s.good += res[qi].g;
    for (std::size_t i = 0; i < grid.n(); ++i)
      if (i < r3.b || i >= r3.e) support_violation = std::max(support_violation, std::abs(res[qi].b[i]));
    if (f1 > 0.0) mean_zero = std::max(mean_zero, max_moment(res[qi].b, r3, xis[qi]) / f1);
    proj_residual = std::max(proj_residual, res[qi].max_residual);
    const double nx = static_cast<double>(xis[qi].size());
    xi_max = std::max(xi_max, nx);
    xi_const = std::max(xi_const, nx / bound_scale);
    GridFunction fq(grid);
    for (std::size_t i = rq.b; i < rq.e; ++i) fq[i] = f[i];
    const double fa = avg_norm(fq, rq, p);
    if (nx > 0.0 && fa > 0.0) {
      const double ratio = avg_norm(res[qi].g, r3, 2.0) / (std::pow(nx, 1.0 / p - 0.5) * fa);
      s.be_ratio[q] = ratio;
      be_max = std::max(be_max, ratio);
      be_min = std::min(be_min, ratio);
    }
    for (const auto& n : res[qi].notes) d.notes.push_back(fmt::format("Q=[{},{}): {}", q.lo(), q.hi(), n));
    s.xi_q[q] = std::move(xis[qi]);
    s.bad_parts[q] = std::move(res[qi].b);
  }
  for (std::size_t i = 0; i < grid.n(); ++i)
    if (!covered[i]) s.good[i] += f[i];

  std::vector<TopDatum> q3;
  for (const auto& q : s.q_intervals) q3.emplace_back(q.interval(), 0.0);
  double len_sum = 0.0;
  for (const auto& td : s.tops) len_sum += td.I.length();
  const GridFunction recon = s.good + s.bad();
  const double finf = f.norm_inf();
  const double g2 = s.good.norm2();
  const double rhs = std::pow(lam, 2.0 - p) * std::pow(f.norm_p(p), p - 1.0) *
                     std::pow(s.uK * s.uK * std::log(s.uK) * len_sum, 1.0 / p - 0.5);

  d["q_count"] = static_cast<double>(nq);
  d["exceptional_measure"] = s.exceptional.measure();
  d["reconstruction_error"] = finf > 0.0 ? sup_diff(f, recon) / finf : sup_diff(f, recon);
  d["support_violation"] = support_violation;
  d["mean_zero_max"] = mean_zero;
  d["projection_residual"] = proj_residual;
  d["overlap_3q"] = counting_overlap(q3, 3.0);
  d["xi_count_max"] = xi_max;
  d["xi_bound_constant"] = xi_const;
  d["be_ratio_max"] = be_max;
  d["be_ratio_min"] = std::isfinite(be_min) ? be_min : 0.0;
  d["g_l2"] = g2;
  d["g_l2_rhs"] = rhs;
  d["g_l2_constant"] = rhs > 0.0 ? g2 / rhs : 0.0;
  d.passed = d.at("reconstruction_error") <= 1e-9 && support_violation == 0.0 && mean_zero <= 1e-8 &&
             d.at("overlap_3q") <= kThreeQOverlapBound;
  return s;
}

Report verify_mfcz(const MfczSplit& split, const InghamTable& table, const MfczVerifyOptions& opt) {
  Report r;
  r.name = "verify_mfcz";
  const Grid& grid = split.good.grid();
  const GridFunction b = split.bad();
  const Spectrum F = spectrum_of(b);
  const double L = grid.length(), nyq = grid.nyquist();
  const double max_len = opt.eps * L / kMinPacketBins;
  double sup_ratio = 0.0, block_l2 = 0.0, block_l1 = 0.0;
  double included = 0.0, excluded = 0.0, skipped = 0.0;

  for (const auto& td : split.tops) {
    struct Level {
      double len;
      std::int64_t m0;
      std::vector<cplx> c0, c2;
      std::vector<bool> in_e;
    };
    std::vector<Level> lv;
    int l0 = -1;  // D(I) level of lv[0]
    for (int l = 0; l < 40; ++l) {
      const double len = std::ldexp(td.I.length(), -l);
      const double reach = std::max(std::abs(td.xi), std::abs(td.xi + opt.mean_zero_offset / len)) + opt.eps / len;
      if (len > max_len * (1.0 + 1e-12)) {
        skipped += std::ldexp(1.0, l);
        continue;
      }
      if (reach >= nyq) break;
      const double pos = td.I.lo / len;
      if (std::abs(pos - std::round(pos)) > 1e-9) throw PreconditionError("verify_mfcz: top interval is not dyadic");
      Level L1;
      L1.len = len;
      L1.m0 = std::llround(pos);
      const auto cnt = static_cast<std::int64_t>(std::llround(std::ldexp(1.0, l)));
      L1.c0 = packet_row_coefficients(F, len, td.xi, opt.eps, table, L1.m0, L1.m0 + cnt);
      L1.c2 = packet_row_coefficients(F, len, td.xi + opt.mean_zero_offset / len, opt.eps, table, L1.m0,
                                      L1.m0 + cnt);
      for (std::int64_t i = 0; i < cnt; ++i) {
        const double lo = len * static_cast<double>(L1.m0 + i);
        L1.in_e.push_back(split.exceptional.contains(Interval{lo, lo + len}, 1e-12));
      }
      if (l0 < 0) l0 = l;
      lv.push_back(std::move(L1));
    }
    if (lv.empty()) continue;
    const double lam = split.lam;
    for (const auto& L1 : lv)
      for (std::size_t i = 0; i < L1.c0.size(); ++i) {
        if (L1.in_e[i]) {
          excluded += 1.0;
          continue;
        }
        included += 1.0;
        sup_ratio = std::max(sup_ratio, std::abs(L1.c0[i]) / std::sqrt(L1.len) / lam);
      }
    // Block statistics over every resolvable J0 not inside E.
    const std::size_t nl = lv.size();
    const std::size_t nfine = lv.back().c2.size();
    for (std::size_t a = 0; a < nl; ++a) {
      for (std::size_t i0 = 0; i0 < lv[a].c2.size(); ++i0) {
        if (lv[a].in_e[i0]) continue;
        double sumsq = 0.0;
        const std::size_t span_f = nfine / lv[a].c2.size();
        std::vector<double> S(span_f, 0.0);
        for (std::size_t l = a; l < nl; ++l) {
          const std::size_t per = lv[l].c2.size() / lv[a].c2.size();
          const std::size_t fine_per = nfine / lv[l].c2.size();
          for (std::size_t j = i0 * per; j < (i0 + 1) * per; ++j) {
            if (lv[l].in_e[j]) continue;
            const double v = std::norm(lv[l].c2[j]);
            sumsq += v;
            for (std::size_t c = (j - i0 * per) * fine_per; c < (j - i0 * per + 1) * fine_per; ++c)
              S[c] += v / lv[l].len;
          }
        }
        const double len0 = lv[a].len;
        double integral = 0.0;
        for (double v : S) integral += std::sqrt(v) * lv.back().len;
        block_l2 = std::max(block_l2, std::sqrt(sumsq / len0) / lam);
        block_l1 = std::max(block_l1, integral / len0 / lam);
      }
    }
  }
  r["sup_ratio"] = sup_ratio;
  r["block_l2"] = block_l2;
  r["block_l1"] = block_l1;
  r["included_tiles"] = included;
  r["excluded_tiles"] = excluded;
  r["unresolved_tiles"] = skipped;
  r["b_l2"] = b.norm2();
  return r;
}

MfczSweep mfcz_k_sweep(const GridFunction& f, const std::vector<TopDatum>& tops, double lam,
                       const std::vector<int>& ks, double p, const InghamTable& table, const MfczOptions& opt,
                       const MfczVerifyOptions& vopt) {
  MfczSweep sw;
  for (int k : ks) {
    const MfczSplit s = mfcz_decompose(f, tops, lam, k, p, table.params, opt);
    const Report v = verify_mfcz(s, table, vopt);
    const double scale = std::ldexp(1.0, 4 * k);
    for (const char* name : {"sup_ratio", "block_l2", "block_l1"})
      sw.rows.push_back({k, name, v.at(name), v.at(name) * scale});
    for (const char* name : {"g_l2_constant", "xi_bound_constant", "be_ratio_max"})
      sw.rows.push_back({k, name, s.diagnostics.at(name), s.diagnostics.at(name)});
    sw.ks.push_back(k);
    sw.sup_ratio.push_back(v.at("sup_ratio"));
  }
  const std::size_t n = sw.ks.size();
  if (n >= 2) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += sw.ks[i];
      my += std::log(std::max(sw.sup_ratio[i], 1e-300));
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dx = sw.ks[i] - mx;
      sxy += dx * (std::log(std::max(sw.sup_ratio[i], 1e-300)) - my);
      sxx += dx * dx;
    }
    sw.slope = sxy / sxx;
  }
  return sw;
}

void write_diagnostics_csv(const std::vector<MfczDiagRow>& rows, std::ostream& os) {
  os << "k,statistic,value,fitted\n";
  for (const auto& r : rows) os << fmt::format("{},{},{:.17g},{:.17g}\n", r.k, r.statistic, r.value, r.fitted);
}

}  // namespace tflab
