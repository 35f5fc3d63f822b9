#include "tflab/timefreq.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>
#include <ostream>
#include <set>

#include "tflab/fft.hpp"

namespace tflab {

namespace {

double slack(const Interval& a, const Interval& b, double tol) { return tol * std::max(a.length(), b.length()); }

bool nested_or_disjoint(const Interval& a, const Interval& b, double tol) {
  const double s = slack(a, b, tol);
  return !a.intersects(b, s) || a.contains(b, s) || b.contains(a, s);
}

bool same_interval(const Interval& a, const Interval& b, double tol) {
  const double s = slack(a, b, tol);
  return std::abs(a.lo - b.lo) <= s && std::abs(a.hi - b.hi) <= s;
}

bool inside(const Interval& outer, const Interval& inner) {
  return outer.contains(inner, 1e-12 * std::max(outer.length(), 1.0));
}

void append_pair_violations(const Tritile& s, const Tritile& t, const WellDiscOptions& opt, std::vector<Violation>& out,
                            bool first_only) {
  auto push = [&](const char* rule, int j) {
    out.push_back({rule, s.id, t.id, j});
    return first_only;
  };
  if (!nested_or_disjoint(s.I, t.I, opt.tol) && push("grid_I", -1)) return;
  for (int j = 0; j < 3; ++j)
    if (!nested_or_disjoint(s.omega[j].dilate(10.0), t.omega[j].dilate(10.0), opt.tol) &&
        push("grid_omega", j + 1))
      return;
  const double ls = s.I.length(), lt = t.I.length();
  const double lo = std::min(ls, lt), hi = std::max(ls, lt);
  if (hi - lo > opt.tol * hi && lo > hi / opt.scale_gap * (1.0 + opt.tol) && push("scale", -1)) return;
  const bool same_I = same_interval(s.I, t.I, opt.tol);
  if (same_I) {
    for (int j = 0; j < 3; ++j)
      if (s.omega[j].intersects(t.omega[j], slack(s.omega[j], t.omega[j], opt.tol)) && push("same_I", j + 1)) return;
  }
  // Nesting dichotomy, applied to spatially nested pairs with |I_small| <= |I_big|.
  auto nesting = [&](const Tritile& big, const Tritile& small) {
    if (!big.I.contains(small.I, slack(big.I, small.I, opt.tol))) return false;
    for (int j = 0; j < 3; ++j) {
      const Interval a = big.omega[j].dilate(2.0), b = small.omega[j].dilate(2.0);
      if (!a.intersects(b, slack(a, b, opt.tol))) continue;
      bool bad = false;
      for (int k = 0; k < 3 && !bad; ++k) {
        const Interval ra = big.omega[k].dilate(opt.R), rb = small.omega[k].dilate(opt.R);
        if (!rb.contains(ra, slack(ra, rb, opt.tol))) bad = true;
        if (k != j) {
          const Interval ta = big.omega[k].dilate(10.0), tb = small.omega[k].dilate(10.0);
          if (ta.intersects(tb, slack(ta, tb, opt.tol))) bad = true;
        }
      }
      if (bad) {
        out.push_back({"nesting", s.id, t.id, j + 1});
        return true;
      }
    }
    return false;
  };
  const bool reported = ls >= lt * (1.0 - opt.tol) && nesting(s, t);
  if (!reported && lt >= ls * (1.0 - opt.tol)) nesting(t, s);
}

// <f, upsilon_{s_j}> for one slot j (0-based).
std::vector<cplx> slot_coefficients(const GridFunction& f, const std::vector<Tritile>& S, int j, const InghamTable& t,
                                    double eps, const Spectrum& F) {
  std::vector<cplx> out(S.size());
  parallel_for(S.size(), [&](std::size_t i) {
    const TopDatum td(S[i].I, S[i].omega[j].center());
    out[i] = packet_coefficient(F, packet_spectrum(td, eps, t, f.grid()));
  });
  return out;
}

struct Item {
  double lo, hi;  // membership interval for the top frequency
  double up_hi;   // up-part membership [lo, up_hi)
  long double w;
};

struct Piece {
  double pos;
  long double full, up;
};

// Running sums over half-open membership intervals, evaluated at each event.
std::vector<Piece> sweep(const std::vector<Item>& items) {
  struct Ev {
    double x;
    long double dfull, dup;
  };
  std::vector<Ev> ev;
  ev.reserve(4 * items.size());
  for (const Item& it : items) {
    if (!(it.hi > it.lo)) continue;
    ev.push_back({it.lo, it.w, 0});
    ev.push_back({it.hi, -it.w, 0});
    if (it.up_hi > it.lo) {
      ev.push_back({it.lo, 0, it.w});
      ev.push_back({it.up_hi, 0, -it.w});
    }
  }
  std::sort(ev.begin(), ev.end(), [](const Ev& a, const Ev& b) { return a.x < b.x; });
  std::vector<Piece> out;
  long double full = 0, up = 0;
  for (std::size_t i = 0; i < ev.size();) {
    const double x = ev[i].x;
    for (; i < ev.size() && ev[i].x == x; ++i) {
      full += ev[i].dfull;
      up += ev[i].dup;
    }
    out.push_back({x, std::max<long double>(full, 0), std::max<long double>(up, 0)});
  }
  return out;
}

std::vector<Interval> distinct_tops(const std::vector<Tritile>& S, const std::vector<std::size_t>& idx,
                                    const std::vector<Interval>& extra) {
  std::vector<Interval> tops;
  tops.reserve(idx.size() + extra.size());
  for (std::size_t i : idx) tops.push_back(S[i].I);
  tops.insert(tops.end(), extra.begin(), extra.end());
  // Larger first, then by position.
  std::sort(tops.begin(), tops.end(), [](const Interval& a, const Interval& b) {
    if (a.length() != b.length()) return a.length() > b.length();
    return a.lo < b.lo;
  });
  tops.erase(std::unique(tops.begin(), tops.end()), tops.end());
  return tops;
}

std::vector<Item> block_items(const std::vector<Tritile>& S, const std::vector<std::size_t>& idx, const TileCoeffs& a,
                              int jj, int kk, const Interval& top, std::vector<std::size_t>* members) {
  std::vector<Item> items;
  for (std::size_t i : idx) {
    if (!inside(top, S[i].I)) continue;
    const Interval w2 = S[i].omega[kk].dilate(2.0);
    const double c = S[i].omega[jj].center();
    items.push_back({w2.lo, w2.hi, std::min(w2.hi, c), static_cast<long double>(std::norm(a[i][jj]))});
    if (members) members->push_back(i);
  }
  return items;
}

double size_over(const std::vector<Tritile>& S, const std::vector<std::size_t>& idx, const TileCoeffs& a, int jj,
                 const std::vector<Interval>& extra) {
  long double best = 0;
  for (std::size_t i : idx) best = std::max<long double>(best, std::norm(a[i][jj]) / S[i].I.length());
  for (const Interval& top : distinct_tops(S, idx, extra)) {
    for (int kk = 0; kk < 3; ++kk) {
      if (kk == jj) continue;
      for (const Piece& p : sweep(block_items(S, idx, a, jj, kk, top, nullptr)))
        best = std::max<long double>(best, p.full / top.length());
    }
  }
  return std::sqrt(static_cast<double>(best));
}

enum class Mode { Up, Down, Any };

struct Candidate {
  bool found = false;
  bool single = false;
  std::size_t tile = 0;
  Interval top;
  int kk = -1;
  double xi = 0.0;
  long double value = 0;  // |I_T|^{-1} times the block sum
};

// Strict preference of c over best in the given mode.
bool better(const Candidate& c, const Candidate& best, Mode mode) {
  if (!best.found) return true;
  auto tail = [&] {
    if (c.top.length() != best.top.length()) return c.top.length() > best.top.length();
    if (c.top.lo != best.top.lo) return c.top.lo < best.top.lo;
    if (c.xi != best.xi) return c.xi < best.xi;
    return c.kk < best.kk;
  };
  switch (mode) {
    case Mode::Up:
      if (c.xi != best.xi) return c.xi < best.xi;
      return tail();
    case Mode::Down:
      if (c.xi != best.xi) return c.xi > best.xi;
      return tail();
    case Mode::Any:
      if (c.value != best.value) return c.value > best.value;
      return tail();
  }
  return false;
}

Candidate find_candidate(const std::vector<Tritile>& S, const std::vector<std::size_t>& idx, const TileCoeffs& a,
                         int jj, long double thr2, Mode mode) {
  Candidate best;
  if (mode == Mode::Any) {
    for (std::size_t i : idx) {
      const long double v = std::norm(a[i][jj]) / S[i].I.length();
      if (!(v > thr2)) continue;
      Candidate c;
      c.found = c.single = true;
      c.tile = i;
      c.top = S[i].I;
      c.kk = jj;
      c.xi = S[i].omega[jj].center();
      c.value = v;
      if (better(c, best, mode)) best = c;
    }
  }
  for (const Interval& top : distinct_tops(S, idx, {})) {
    for (int kk = 0; kk < 3; ++kk) {
      if (kk == jj) continue;
      for (const Piece& p : sweep(block_items(S, idx, a, jj, kk, top, nullptr))) {
        const long double v = p.full / top.length();
        if (!(v > thr2)) continue;
        if (mode == Mode::Up && !(2 * p.up >= p.full)) continue;
        if (mode == Mode::Down && !(2 * (p.full - p.up) > p.full)) continue;
        Candidate c;
        c.found = true;
        c.top = top;
        c.kk = kk;
        c.xi = p.pos;
        c.value = v;
        if (better(c, best, mode)) best = c;
      }
    }
  }
  return best;
}

std::vector<std::size_t> tree_members(const std::vector<Tritile>& S, const std::vector<std::size_t>& idx,
                                      const Candidate& c) {
  std::vector<std::size_t> out;
  for (std::size_t i : idx) {
    if (!inside(c.top, S[i].I)) continue;
    const Interval w2 = S[i].omega[c.kk].dilate(2.0);
    if (w2.lo <= c.xi && c.xi < w2.hi) out.push_back(i);
  }
  return out;
}

double bmo_statistic(const Forest& F) {
  double best = 0.0;
  for (const Tree& probe : F.trees) {
    double s = 0.0;
    for (const Tree& T : F.trees)
      if (inside(probe.top.I, T.top.I)) s += T.top.I.length();
    best = std::max(best, s / probe.top.I.length());
  }
  return best;
}

}  // namespace

void Tritile::validate() const {
  if (!(I.length() > 0.0)) throw PreconditionError("tritile: empty spatial interval");
  for (int j = 0; j < 3; ++j) {
    const double area = I.length() * omega[j].length();
    if (std::abs(area - 1.0) > 1e-12)
      throw PreconditionError(fmt::format("tritile {}: |I||omega_{}| = {} != 1", id, j + 1, area));
  }
  if (std::abs(eps) > 1.0 + 1e-15) throw PreconditionError(fmt::format("tritile {}: |eps| > 1", id));
}

Vec3 gamma_for(const Vec3& beta) {
  const double nb = std::sqrt(beta[0] * beta[0] + beta[1] * beta[1] + beta[2] * beta[2]);
  if (std::abs(nb - 1.0) > 1e-9) throw PreconditionError("beta must have unit length");
  if (std::abs(beta[0] + beta[1] + beta[2]) > 1e-9) throw PreconditionError("beta must be orthogonal to (1,1,1)");
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (std::abs(beta[i] - beta[j]) <= 1e-6)
        throw DegeneracyError(fmt::format("beta components {} and {} coincide", i + 1, j + 1));
  // gamma = beta x n with n = (1,1,1)/sqrt 3, so det(gamma, beta, n) = |gamma|^2 > 0.
  const double r = 1.0 / std::sqrt(3.0);
  Vec3 g{(beta[1] - beta[2]) * r, (beta[2] - beta[0]) * r, (beta[0] - beta[1]) * r};
  const double ng = std::sqrt(g[0] * g[0] + g[1] * g[1] + g[2] * g[2]);
  for (double& v : g) v /= ng;
  return g;
}

std::vector<Tritile> build_tritile_lattice(const LatticeRanges& m, const Vec3& theta, const Vec3& beta, double dil) {
  if (!(dil > 1.0)) throw PreconditionError("lattice: dilation must exceed 1");
  const Vec3 gamma = gamma_for(beta);
  std::vector<Tritile> out;
  int id = 0;
  for (std::int64_t ms = m.sigma.lo; ms < m.sigma.hi; ++ms) {
    const double scale = std::pow(dil, static_cast<double>(ms) + theta[0]);
    for (std::int64_t mx = m.x.lo; mx < m.x.hi; ++mx) {
      const double c = scale * (static_cast<double>(mx) + theta[1]);
      for (std::int64_t mxi = m.xi.lo; mxi < m.xi.hi; ++mxi) {
        Tritile s;
        s.I = {c - 0.5 * scale, c + 0.5 * scale};
        for (int j = 0; j < 3; ++j) {
          const double w = (gamma[j] * (static_cast<double>(mxi) + theta[2]) + beta[j]) / scale;
          s.omega[j] = {w - 0.5 / scale, w + 0.5 / scale};
        }
        s.id = id++;
        out.push_back(s);
      }
    }
  }
  return out;
}

std::optional<Violation> pair_violation(const Tritile& s, const Tritile& t, const WellDiscOptions& opt) {
  std::vector<Violation> v;
  append_pair_violations(s, t, opt, v, true);
  if (v.empty()) return std::nullopt;
  return v.front();
}

WellDiscResult check_well_discretized(const std::vector<Tritile>& S, const WellDiscOptions& opt) {
  WellDiscResult r;
  for (std::size_t a = 0; a < S.size(); ++a)
    for (std::size_t b = a + 1; b < S.size(); ++b) append_pair_violations(S[a], S[b], opt, r.violations, false);
  r.ok = r.violations.empty();
  return r;
}

std::vector<std::vector<Tritile>> partition_well_discretized(const std::vector<Tritile>& S,
                                                             const WellDiscOptions& opt) {
  std::vector<std::vector<Tritile>> classes;
  for (const Tritile& s : S) {
    bool placed = false;
    for (auto& cls : classes) {
      const bool fits =
          std::none_of(cls.begin(), cls.end(), [&](const Tritile& t) { return pair_violation(t, s, opt).has_value(); });
      if (fits) {
        cls.push_back(s);
        placed = true;
        break;
      }
    }
    if (!placed) classes.push_back({s});
  }
  return classes;
}

TileCoeffs tile_coefficients(const GridFunction& f, const std::vector<Tritile>& S, const InghamTable& t, double eps) {
  TileCoeffs out(S.size());
  if (S.empty()) return out;
  const Spectrum F = spectrum_of(f);
  for (int j = 0; j < 3; ++j) {
    const std::vector<cplx> c = slot_coefficients(f, S, j, t, eps, F);
    for (std::size_t i = 0; i < S.size(); ++i) out[i][j] = c[i];
  }
  return out;
}

std::optional<double> lacunary_frequency(const std::vector<Tritile>& members, int k, double R) {
  if (k < 1 || k > 3) throw PreconditionError("lacunary_frequency: slot must be 1, 2 or 3");
  if (members.empty()) return std::nullopt;
  double lo = -HUGE_VAL, hi = HUGE_VAL;
  std::vector<Interval> doubled;
  for (const Tritile& s : members) {
    const Interval r = s.omega[k - 1].dilate(R);
    lo = std::max(lo, r.lo);
    hi = std::min(hi, r.hi);
    doubled.push_back(s.omega[k - 1].dilate(2.0));
  }
  if (!(hi > lo)) return std::nullopt;
  const IntervalSet rest = IntervalSet::single(lo, hi).subtract(IntervalSet(doubled));
  const Interval* best = nullptr;
  for (const Interval& p : rest.parts())
    if (!best || p.length() > best->length()) best = &p;
  if (!best) return std::nullopt;
  return best->center();
}

bool validate_tree(const Tree& T, double R, std::string* why) {
  auto fail = [&](std::string msg) {
    if (why) *why = std::move(msg);
    return false;
  };
  if (T.type < 1 || T.type > 3) return fail("tree type must be 1, 2 or 3");
  for (const Tritile& s : T.tritiles) {
    if (!inside(T.top.I, s.I)) return fail(fmt::format("tritile {}: I_s not inside I_T", s.id));
    if (!s.omega[T.type - 1].dilate(2.0).contains(T.top.xi))
      return fail(fmt::format("tritile {}: xi_T not in 2 omega_s{}", s.id, T.type));
  }
  for (int k = 1; k <= 3; ++k) {
    if (k == T.type) continue;
    if (!T.lacunary[k - 1]) return fail(fmt::format("missing lacunary frequency for slot {}", k));
    const double x = *T.lacunary[k - 1];
    for (const Tritile& s : T.tritiles) {
      if (!s.omega[k - 1].dilate(R).contains(x) || s.omega[k - 1].dilate(2.0).contains(x))
        return fail(fmt::format("tritile {}: xi_(T,{}) not in R omega \\ 2 omega", s.id, k));
    }
  }
  return true;
}

bool assign_lacunary(Tree& T, double R) {
  bool ok = true;
  for (int k = 1; k <= 3; ++k) {
    if (k == T.type) {
      T.lacunary[k - 1].reset();
      continue;
    }
    T.lacunary[k - 1] = lacunary_frequency(T.tritiles, k, R);
    ok = ok && T.lacunary[k - 1].has_value();
  }
  return ok;
}

double tree_size(const GridFunction& f, const Tree& T, int j, const InghamTable& t, const SizeOptions& opt) {
  if (j < 1 || j > 3) throw PreconditionError("tree_size: slot must be 1, 2 or 3");
  if (T.tritiles.empty()) return 0.0;
  if (j != T.type) {
    std::optional<double> x = T.lacunary[j - 1];
    bool ok = x.has_value();
    if (ok)
      for (const Tritile& s : T.tritiles)
        if (!s.omega[j - 1].dilate(opt.R).contains(*x) || s.omega[j - 1].dilate(2.0).contains(*x)) ok = false;
    if (!ok && !lacunary_frequency(T.tritiles, j, opt.R))
      throw PreconditionError(fmt::format("tree_size: reduction to slot {} is not lacunary", j));
  }
  const Spectrum F = spectrum_of(f);
  const std::vector<cplx> a = slot_coefficients(f, T.tritiles, j - 1, t, opt.eps, F);
  if (j == T.type) {
    double best = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      best = std::max(best, std::abs(a[i]) / std::sqrt(T.tritiles[i].I.length()));
    return best;
  }
  long double s = 0;
  for (const cplx& c : a) s += std::norm(c);
  return std::sqrt(static_cast<double>(s) / T.top.I.length());
}

double size_j_from(const std::vector<Tritile>& S, const TileCoeffs& a, int j, const std::vector<Interval>& extra_tops) {
  if (j < 1 || j > 3) throw PreconditionError("size_j: slot must be 1, 2 or 3");
  if (a.size() != S.size()) throw PreconditionError("size_j: coefficient count mismatch");
  std::vector<std::size_t> idx(S.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return size_over(S, idx, a, j - 1, extra_tops);
}

double size_j(const GridFunction& f, const std::vector<Tritile>& S, int j, const InghamTable& t, const SizeOptions& opt,
              const std::vector<Interval>& extra_tops) {
  if (S.empty()) return 0.0;
  return size_j_from(S, tile_coefficients(f, S, t, opt.eps), j, extra_tops);
}

double maximal_cap(const GridFunction& f, const std::vector<Tritile>& S) {
  const GridFunction M = maximal_function(f, 1.0);
  double best = 0.0;
  for (const Tritile& s : S) {
    const IndexRange r = sample_range(f.grid(), s.I);
    if (r.size() == 0) continue;
    double lo = HUGE_VAL;
    for (std::size_t i = r.b; i < r.e; ++i) lo = std::min(lo, M[i].real());
    best = std::max(best, lo);
  }
  return best;
}

double Forest::counting(double x) const {
  double n = 0.0;
  for (const Tree& T : trees)
    if (T.top.I.contains(x)) n += 1.0;
  return n;
}

double Forest::top_measure() const {
  double s = 0.0;
  for (const Tree& T : trees) s += T.top.I.length();
  return s;
}

std::size_t Forest::tritile_count() const {
  std::size_t n = 0;
  for (const Tree& T : trees) n += T.tritiles.size();
  return n;
}

SizeLemmaResult size_lemma_split_from(const std::vector<Tritile>& S, const TileCoeffs& a, int j, double sigma,
                                      double f_l2, double f_inf, double R) {
  if (j < 1 || j > 3) throw PreconditionError("size_lemma_split: slot must be 1, 2 or 3");
  if (!(sigma > 0.0)) throw PreconditionError("size_lemma_split: sigma must be positive");
  const int jj = j - 1;
  SizeLemmaResult out;
  out.forest.sigma = sigma;
  out.size_before = size_j_from(S, a, j);
  if (out.size_before > sigma * (1.0 + 1e-12))
    throw PreconditionError(fmt::format("size_lemma_split: size_{} = {} exceeds sigma = {}", j, out.size_before, sigma));

  std::vector<std::size_t> idx(S.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  // Relative margin absorbs the rounding of sigma = size computed in double.
  const long double thr2 = static_cast<long double>(sigma) * sigma / 4 * (1 + 1e-13L);
  int lacunary_failures = 0;

  auto take = [&](const std::vector<std::size_t>& members, const TopDatum& top, int type) {
    Tree T;
    T.top = top;
    T.type = type;
    for (std::size_t i : members) T.tritiles.push_back(S[i]);
    if (!assign_lacunary(T, R)) ++lacunary_failures;
    out.forest.trees.push_back(std::move(T));
    std::vector<std::size_t> keep;
    keep.reserve(idx.size());
    std::set<std::size_t> gone(members.begin(), members.end());
    for (std::size_t i : idx)
      if (!gone.count(i)) keep.push_back(i);
    idx.swap(keep);
  };

  const Mode modes[3] = {Mode::Up, Mode::Down, Mode::Any};
  for (int sweep_no = 0; sweep_no < 3; ++sweep_no) {
    for (;;) {
      const Candidate c = find_candidate(S, idx, a, jj, thr2, modes[sweep_no]);
      if (!c.found) break;
      if (c.single)
        take({c.tile}, TopDatum(S[c.tile].I, c.xi), j);
      else
        take(tree_members(S, idx, c), TopDatum(c.top, c.xi), c.kk + 1);
      ++out.sweeps[sweep_no];
    }
  }

  for (std::size_t i : idx) out.lo.push_back(S[i]);
  out.size_after = size_over(S, idx, a, jj, {});
  const double s2 = sigma * sigma;
  out.counting_constant = f_l2 > 0.0 ? out.forest.top_measure() * s2 / (f_l2 * f_l2) : 0.0;
  out.bmo_constant = f_inf > 0.0 ? bmo_statistic(out.forest) * s2 / (f_inf * f_inf) : 0.0;
  if (lacunary_failures > 0)
    out.notes.push_back(fmt::format("{} selected trees lack a lacunary frequency in some slot", lacunary_failures));
  return out;
}

SizeLemmaResult size_lemma_split(const std::vector<Tritile>& S, const GridFunction& f, int j, double sigma,
                                 const InghamTable& t, const SizeOptions& opt) {
  return size_lemma_split_from(S, tile_coefficients(f, S, t, opt.eps), j, sigma, f.norm2(), f.norm_inf(), opt.R);
}

SingleTreeBound single_tree_bound(const Tree& T, const GridFunction& f1, const GridFunction& f2, const GridFunction& f3,
                                  const InghamTable& t, const SizeOptions& opt) {
  SingleTreeBound b;
  if (T.tritiles.empty()) return b;
  const GridFunction* fs[3] = {&f1, &f2, &f3};
  TileCoeffs a(T.tritiles.size());
  for (int k = 0; k < 3; ++k) {
    const Spectrum F = spectrum_of(*fs[k]);
    const std::vector<cplx> c = slot_coefficients(*fs[k], T.tritiles, k, t, opt.eps, F);
    for (std::size_t i = 0; i < c.size(); ++i) a[i][k] = c[i];
  }
  long double lhs = 0;
  for (std::size_t i = 0; i < a.size(); ++i)
    lhs += std::abs(a[i][0]) * std::abs(a[i][1]) * std::abs(a[i][2]) / std::sqrt(T.tritiles[i].I.length());
  double rhs = T.top.I.length();
  for (int k = 1; k <= 3; ++k) rhs *= size_j_from(T.tritiles, a, k, {T.top.I});
  b.lhs = static_cast<double>(lhs);
  b.rhs = rhs;
  return b;
}

F3Decomposition f3_decompose(const std::vector<Tritile>& S, const GridFunction& f3, const InghamTable& t,
                             const SizeOptions& opt, int max_rounds) {
  F3Decomposition out;
  if (S.empty()) return out;
  const TileCoeffs a = tile_coefficients(f3, S, t, opt.eps);
  const double f_l2 = f3.norm2(), f_inf = f3.norm_inf();
  const double F3 = f3.support_measure();
  out.sigma0 = size_j_from(S, a, 3);

  std::vector<Tritile> cur = S;
  TileCoeffs ca = a;
  for (int k = 0; !cur.empty(); ++k) {
    const double sk = out.sigma0 * std::ldexp(1.0, -k);
    if (!(size_j_from(cur, ca, 3) > 0.0) || k >= max_rounds) {
      F3Level rest;
      rest.k = k >= max_rounds && size_j_from(cur, ca, 3) > 0.0 ? k : kSizeZeroLevel;
      rest.rest = cur;
      rest.size = size_j_from(cur, ca, 3);
      if (rest.k != kSizeZeroLevel) out.c_size = std::max(out.c_size, rest.size / sk);
      out.levels.push_back(std::move(rest));
      break;
    }
    const SizeLemmaResult r = size_lemma_split_from(cur, ca, 3, sk, f_l2, f_inf, opt.R);
    F3Level lvl;
    lvl.k = k;
    lvl.forest = r.forest;
    lvl.forest.k = k;
    std::vector<Tritile> members;
    for (const Tree& T : r.forest.trees) members.insert(members.end(), T.tritiles.begin(), T.tritiles.end());
    {
      std::map<int, std::size_t> pos;
      for (std::size_t i = 0; i < cur.size(); ++i) pos[cur[i].id] = i;
      TileCoeffs ma;
      for (const Tritile& s : members) ma.push_back(ca[pos.at(s.id)]);
      lvl.size = size_j_from(members, ma, 3);
      TileCoeffs la;
      for (const Tritile& s : r.lo) la.push_back(ca[pos.at(s.id)]);
      ca.swap(la);
    }
    out.c_size = std::max(out.c_size, lvl.size / sk);
    if (F3 > 0.0 && f_inf > 0.0)
      out.c_tops = std::max(out.c_tops, lvl.forest.top_measure() * sk * sk / (F3 * f_inf * f_inf));
    if (f_inf > 0.0) out.c_bmo = std::max(out.c_bmo, bmo_statistic(lvl.forest) * sk * sk / (f_inf * f_inf));
    cur = r.lo;
    if (!lvl.forest.trees.empty()) out.levels.push_back(std::move(lvl));
  }
  return out;
}

Interval shifted_dyadic_hull(const Interval& J, int* group) {
  if (!(J.length() > 0.0)) throw PreconditionError("shifted_dyadic_hull: empty interval");
  Interval best{};
  int best_g = -1;
  const int a0 = static_cast<int>(std::ceil(std::log2(J.length())));
  for (int g = 0; g < 3; ++g) {
    const double alpha = g / 3.0;
    for (int a = a0; a < a0 + 64; ++a) {
      const double len = std::ldexp(1.0, a);
      // Level length 2^a = 2^{-k} with k = -a; offset (-1)^k alpha 2^a.
      const double off = ((-a) % 2 == 0 ? 1.0 : -1.0) * alpha * len;
      const double m = std::floor((J.lo - off) / len);
      const Interval cand{m * len + off, (m + 1.0) * len + off};
      if (cand.lo <= J.lo && J.hi <= cand.hi) {
        if (best_g < 0 || cand.length() < best.length()) {
          best = cand;
          best_g = g;
        }
        break;
      }
    }
  }
  if (group) *group = best_g;
  return best;
}

CountingSplit counting_split(const Forest& F, int k, const OsgoodParams& p, const CountingOptions& opt) {
  CountingSplit out;
  out.good.k = out.small.k = k;
  out.good.sigma = out.small.sigma = F.sigma;
  out.threshold_inf = std::exp2(opt.inf_exp * k);
  out.threshold_l1 = std::exp2(opt.l1_exp * k);
  const double mu = 3.0 * eval_u(p, opt.C * std::max(k, 0));

  const std::size_t n = F.trees.size();
  std::vector<Interval> hull(n);
  std::vector<int> grp(n, 0);
  for (std::size_t i = 0; i < n; ++i) hull[i] = shifted_dyadic_hull(F.trees[i].top.I.dilate(mu), &grp[i]);
  std::set<int> used(grp.begin(), grp.end());
  const double tau = used.empty() ? out.threshold_inf : out.threshold_inf / static_cast<double>(used.size());

  // {N > tau} over the hulls in `sel`, as an interval set.
  auto superlevel = [&](const std::vector<std::size_t>& sel) {
    std::vector<std::pair<double, int>> ev;
    for (std::size_t i : sel) {
      ev.push_back({hull[i].lo, 1});
      ev.push_back({hull[i].hi, -1});
    }
    std::sort(ev.begin(), ev.end());
    std::vector<Interval> parts;
    int N = 0;
    for (std::size_t e = 0; e < ev.size();) {
      const double x = ev[e].first;
      for (; e < ev.size() && ev[e].first == x; ++e) N += ev[e].second;
      if (N > tau && e < ev.size()) parts.push_back({x, ev[e].first});
    }
    return IntervalSet(parts);
  };

  std::vector<bool> small(n, false);
  for (int g : used) {
    std::vector<std::size_t> sel;
    for (std::size_t i = 0; i < n; ++i)
      if (grp[i] == g) sel.push_back(i);
    IntervalSet J = superlevel(sel);
    out.level_measures.push_back(J.measure());
    std::vector<std::size_t> stock;
    for (std::size_t i : sel)
      if (J.contains(hull[i], 1e-12 * hull[i].length())) {
        small[i] = true;
        stock.push_back(i);
      }
    // Peeling: report |J^j| until the stock empties.
    while (!stock.empty()) {
      J = superlevel(stock);
      out.level_measures.push_back(J.measure());
      ++out.peel_steps;
      std::vector<std::size_t> next;
      for (std::size_t i : stock)
        if (J.contains(hull[i], 1e-12 * hull[i].length())) next.push_back(i);
      if (next.size() == stock.size()) {
        out.stalled = true;
        break;
      }
      stock.swap(next);
    }
  }

  for (std::size_t i = 0; i < n; ++i) (small[i] ? out.small : out.good).trees.push_back(F.trees[i]);

  std::vector<std::pair<double, int>> ev;
  for (std::size_t i = 0; i < n; ++i)
    if (!small[i]) {
      const Interval J = F.trees[i].top.I.dilate(mu);
      ev.push_back({J.lo, 1});
      ev.push_back({J.hi, -1});
    }
  std::sort(ev.begin(), ev.end());
  int N = 0;
  for (const auto& e : ev) {
    N += e.second;
    out.good_inf = std::max(out.good_inf, static_cast<double>(N));
  }
  out.small_l1 = out.small.top_measure();
  out.inf_ok = out.good_inf <= out.threshold_inf;
  out.l1_ok = out.small_l1 <= out.threshold_l1;
  return out;
}

ExceptionalSets exceptional_sets(const GridFunction& h1, const GridFunction& h2, const IntervalSet& F3,
                                 const Vec3& alpha) {
  if (std::abs(alpha[0] + alpha[1] + alpha[2] - 1.0) > 1e-9) throw PreconditionError("alpha must sum to 1");
  if (alpha[0] < 0.0 || alpha[0] > 1.0 || alpha[1] < 0.0 || alpha[1] > 1.0 || alpha[2] < -0.5)
    throw PreconditionError("alpha outside 0 <= alpha_1, alpha_2 <= 1, alpha_3 >= -1/2");
  require_same_grid(h1.grid(), h2.grid());
  const Grid& g = h1.grid();
  const double F3m = F3.measure();

  struct Part {
    GridFunction M;
    double level;  // threshold at C = 1
  };
  std::vector<Part> parts;
  const GridFunction* hs[2] = {&h1, &h2};
  for (int j = 0; j < 2; ++j) {
    if (alpha[j] == 0.0) continue;  // M_inf h <= ||h||_inf: empty for C >= 1
    const double p = 1.0 / alpha[j];
    const double nrm = hs[j]->norm_p(p);
    if (!(nrm > 0.0)) continue;
    parts.push_back({maximal_function(*hs[j], p), nrm / std::pow(F3m, alpha[j])});
  }

  ExceptionalSets out;
  for (int it = 0; it < 200; ++it) {
    std::vector<bool> mask(g.n(), false);
    for (const Part& P : parts)
      for (std::size_t i = 0; i < g.n(); ++i)
        if (P.M[i].real() > out.C * P.level) mask[i] = true;
    out.E = IntervalSet::from_mask(g, mask);
    std::vector<Interval> three;
    if (!out.E.empty()) {
      const GridFunction ind = out.E.indicator(g);
      for (const DyadicInterval& Q : superlevel_decompose(ind, 0.5, 1.0)) three.push_back(Q.interval().dilate(3.0));
    }
    out.E_bar = IntervalSet(three);
    out.F3_prime = F3.subtract(out.E_bar);
    if (4.0 * out.F3_prime.measure() >= F3m) return out;
    out.C *= 2.0;
    ++out.doublings;
  }
  throw ResolutionError("exceptional_sets: no major subset after 200 doublings");
}

void write_forest_jsonl(const Forest& F, std::ostream& os) {
  using nlohmann::json;
  for (const Tree& T : F.trees) {
    json j;
    j["k"] = F.k;
    j["sigma"] = F.sigma;
    j["type"] = T.type;
    j["top"] = {{"lo", T.top.I.lo}, {"hi", T.top.I.hi}, {"xi", T.top.xi}};
    json lac = json::array();
    for (const auto& x : T.lacunary) lac.push_back(x ? json(*x) : json(nullptr));
    j["lacunary"] = lac;
    json members = json::array();
    for (const Tritile& s : T.tritiles) {
      json m;
      m["id"] = s.id;
      m["I"] = {s.I.lo, s.I.hi};
      m["omega"] = {{s.omega[0].lo, s.omega[0].hi}, {s.omega[1].lo, s.omega[1].hi}, {s.omega[2].lo, s.omega[2].hi}};
      members.push_back(m);
    }
    j["tritiles"] = members;
    os << j.dump() << '\n';
  }
}

}  // namespace tflab
