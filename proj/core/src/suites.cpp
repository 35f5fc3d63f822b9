#include "tflab/suites.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace tflab {

namespace {

std::multiset<int> ids(const std::vector<Tritile>& S) {
  std::multiset<int> out;
  for (const Tritile& s : S) out.insert(s.id);
  return out;
}

std::multiset<int> ids(const Forest& F) {
  std::multiset<int> out;
  for (const Tree& T : F.trees)
    for (const Tritile& s : T.tritiles) out.insert(s.id);
  return out;
}

}  // namespace

cplx Signal::operator()(double x) const {
  cplx s{};
  for (const Bump& b : bumps) {
    const double d = (x - b.x0) / b.width;
    s += b.amp * std::exp(-d * d) * std::polar(1.0, 2.0 * kPi * b.xi * x);
  }
  return s;
}

GridFunction Signal::on(const Grid& g) const {
  return GridFunction::sample(g, [&](double x) { return (*this)(x); });
}

WellDiscOptions tf_wd() {
  WellDiscOptions o;
  o.R = kTfR;
  o.scale_gap = 2.0;
  return o;
}

SizeOptions tf_size() {
  SizeOptions o;
  o.eps = kTfEps;
  o.R = kTfR;
  return o;
}

TfInstance random_instance(std::uint64_t seed, int target, double nyquist) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  TfInstance out;
  for (int j = 0; j < 3; ++j) out.anchors.push_back(-10.0 + 20.0 * U(rng));
  const WellDiscOptions wd = tf_wd();
  int id = 0;
  for (int attempt = 0; attempt < 40 * target && static_cast<int>(out.S.size()) < target; ++attempt) {
    const int a = -2 + static_cast<int>(rng() % 4);
    const double len = std::ldexp(1.0, a);
    const auto cells = static_cast<std::int64_t>(32.0 / len);
    const auto m = static_cast<std::int64_t>(16.0 / len) + static_cast<std::int64_t>(rng() % cells);
    Tritile s;
    s.I = {static_cast<double>(m) * len, static_cast<double>(m + 1) * len};
    bool ok = true;
    for (int j = 0; j < 3 && ok; ++j) {
      const double w = 10.0 / len;
      const double mj = std::floor(out.anchors[j] / w) + static_cast<double>(static_cast<int>(rng() % 3) - 1);
      const double c = (mj + 0.5) * w;
      if (std::abs(c) + kTfEps / (2.0 * len) > nyquist - 1.0) ok = false;
      s.omega[j] = {c - 0.5 / len, c + 0.5 / len};
    }
    if (!ok) continue;
    s.eps = std::polar(1.0, 2.0 * kPi * U(rng));
    s.id = id;
    const bool fits =
        std::none_of(out.S.begin(), out.S.end(), [&](const Tritile& t) { return pair_violation(t, s, wd).has_value(); });
    if (!fits) continue;
    out.S.push_back(s);
    ++id;
  }
  for (int q = 0; q < 6; ++q) {
    Signal::Bump b;
    b.amp = 0.5 + 1.5 * U(rng);
    b.x0 = 18.0 + 28.0 * U(rng);
    b.width = 0.3 + 2.0 * U(rng);
    b.xi = out.anchors[rng() % 3] + (U(rng) - 0.5) * 4.0;
    out.f.bumps.push_back(b);
  }
  return out;
}

std::optional<Tree> random_tree(const std::vector<Tritile>& S, std::mt19937_64& rng, double R) {
  if (S.empty()) return std::nullopt;
  const Tritile& s0 = S[rng() % S.size()];
  Tree T;
  T.type = 1 + static_cast<int>(rng() % 3);
  const int a0 = static_cast<int>(std::lround(std::log2(s0.I.length())));
  const int a = a0 + static_cast<int>(rng() % static_cast<unsigned>(4 - a0));
  const double len = std::ldexp(1.0, a);
  const double lo = std::floor(s0.I.lo / len) * len;
  T.top = TopDatum(Interval{lo, lo + len}, s0.omega[T.type - 1].center());
  for (const Tritile& s : S)
    if (T.top.I.contains(s.I) && s.omega[T.type - 1].dilate(2.0).contains(T.top.xi)) T.tritiles.push_back(s);
  if (!assign_lacunary(T, R)) return std::nullopt;
  return T;
}

GridFunction random_bumpy(std::uint64_t seed, std::size_t n, int bumps) {
  const Grid g(0, 64, n);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0, 1);
  GridFunction f(g);
  for (std::size_t i = 0; i < g.n(); ++i) f[i] = 0.05 * cplx(nd(rng), nd(rng));
  for (int b = 0; b < bumps; ++b) {
    const double c = 8 + 48 * ud(rng), w = 0.25 + 0.75 * ud(rng), a = 1 + 3 * ud(rng);
    for (std::size_t i = 0; i < g.n(); ++i)
      if (std::abs(g.x(i) - c) < w) f[i] += a * cplx(nd(rng), nd(rng));
  }
  return f;
}

Report run_mfcz_suite(const MfczSuiteOptions& opt, const InghamTable& t) {
  if (opt.cases < 1) throw PreconditionError("mfcz suite: cases must be positive");
  MfczOptions mo;
  mo.C = 1.0;
  Report r;
  r.name = "mfcz_suite";
  std::mt19937_64 rng(opt.seed);
  double recon = 0.0, mean_zero = 0.0, support = 0.0;
  double case_lo = INFINITY, case_hi = 0.0, q_lo = INFINITY, q_hi = 0.0;
  double per_k[4] = {0.0, 0.0, 0.0, 0.0};
  std::vector<std::pair<GridFunction, std::vector<TopDatum>>> inputs;
  for (int c = 0; c < opt.cases; ++c) {
    const GridFunction f = random_bumpy(rng(), opt.n, 1 + static_cast<int>(rng() % 4));
    const auto m = static_cast<std::int64_t>(12 + rng() % 40);
    const std::vector<TopDatum> tops{TopDatum(DyadicInterval{0, m}, 0.125 * static_cast<double>(rng() % 8))};
    const int k = 1 + c % 4;
    const MfczSplit s = mfcz_decompose(f, tops, 1.0, k, opt.p, t.params, mo);
    recon = std::max(recon, s.diagnostics.at("reconstruction_error"));
    mean_zero = std::max(mean_zero, s.diagnostics.at("mean_zero_max"));
    support = std::max(support, s.diagnostics.at("support_violation"));
    const double be = s.diagnostics.at("be_ratio_max");
    if (be > 0.0) {
      case_lo = std::min(case_lo, be);
      case_hi = std::max(case_hi, be);
      per_k[k - 1] = std::max(per_k[k - 1], be);
    }
    for (const auto& [q, v] : s.be_ratio) {
      q_lo = std::min(q_lo, v);
      q_hi = std::max(q_hi, v);
    }
    inputs.emplace_back(f, tops);
  }
  double k_lo = INFINITY, k_hi = 0.0;
  for (double v : per_k)
    if (v > 0.0) {
      k_lo = std::min(k_lo, v);
      k_hi = std::max(k_hi, v);
    }
  // k sweep on the first case whose statistic is nonzero at every k.
  double slope = 0.0;
  int sweep_case = -1;
  for (std::size_t c = 0; c < inputs.size() && sweep_case < 0; ++c) {
    const MfczSweep sw = mfcz_k_sweep(inputs[c].first, inputs[c].second, 1.0, {1, 2, 3, 4}, opt.p, t, mo);
    if (std::all_of(sw.sup_ratio.begin(), sw.sup_ratio.end(), [](double v) { return v > 0.0; })) {
      slope = sw.slope;
      sweep_case = static_cast<int>(c);
    }
  }
  auto spread = [](double lo, double hi) { return hi > 0.0 && std::isfinite(lo) ? hi / lo : INFINITY; };
  r["cases"] = opt.cases;
  r["reconstruction_max"] = recon;
  r["mean_zero_max"] = mean_zero;
  r["support_violations"] = support;
  r["be_max"] = case_hi;
  r["be_spread_k"] = spread(k_lo, k_hi);
  r["be_spread_cases"] = spread(case_lo, case_hi);
  r["be_spread_q"] = spread(q_lo, q_hi);
  r["k_slope"] = slope;
  r["k_sweep_case"] = sweep_case;
  r.passed = recon <= 1e-9 && mean_zero <= 1e-8 && support == 0.0 && r.at("be_spread_k") <= 10.0 && sweep_case >= 0 &&
             slope < 0.0;
  return r;
}

Report run_tree_suite(const TreeSuiteOptions& opt, const InghamTable& t) {
  if (opt.cases < 1) throw PreconditionError("tree suite: cases must be positive");
  const Grid g(0, 64, 4096);
  const SizeOptions so = tf_size();
  Report r;
  r.name = "tree_suite";
  int partition = 0, halving = 0, invalid = 0;
  for (int c = 0; c < opt.cases; ++c) {
    const auto inst = random_instance(opt.seed + static_cast<std::uint64_t>(c));
    const GridFunction f = inst.f.on(g);
    const int j = 1 + c % 3;
    const double sigma = size_j(f, inst.S, j, t, so);
    const auto split = size_lemma_split(inst.S, f, j, sigma, t, so);
    std::multiset<int> all = ids(split.lo);
    const std::multiset<int> hi = ids(split.forest);
    all.insert(hi.begin(), hi.end());
    if (all != ids(inst.S)) ++partition;
    if (size_j(f, split.lo, j, t, so) > sigma / 2 + 1e-12) ++halving;
    for (const Tree& T : split.forest.trees)
      if (!validate_tree(T, kTfR)) ++invalid;
  }

  double suite[2] = {0.0, 0.0};
  for (int c = 0; c < std::min(opt.cases, opt.doubling_cases); ++c) {
    const auto inst = random_instance(opt.seed + 1000 + static_cast<std::uint64_t>(c));
    for (int k = 0; k < 2; ++k) {
      const Grid gk(0, 64, 4096u << k);
      const GridFunction f = inst.f.on(gk);
      const double sigma = size_j(f, inst.S, 3, t, so);
      suite[k] = std::max(suite[k], size_lemma_split(inst.S, f, 3, sigma, t, so).counting_constant);
    }
  }

  std::mt19937_64 rng(opt.seed ^ 0x9e3779b97f4a7c15ULL);
  double worst = 0.0;
  int trees = 0;
  for (int c = 0; trees < opt.cases && c < 20 * opt.cases; ++c) {
    const auto inst = random_instance(opt.seed + 2000 + static_cast<std::uint64_t>(c));
    const auto T = random_tree(inst.S, rng);
    if (!T) continue;
    ++trees;
    if (!validate_tree(*T, kTfR)) ++invalid;
    const GridFunction f = inst.f.on(g);
    const auto b = single_tree_bound(*T, f, f.conj(), f.modulated(-0.5), t, so);
    if (b.rhs > 0.0) worst = std::max(worst, b.ratio());
  }

  Forest nested;
  for (int i = 0; i < 200; ++i) {
    Tree T;
    T.top = TopDatum(Interval{0.0, std::ldexp(1.0, -i)}, 0.0);
    Tritile s;
    s.I = T.top.I;
    for (int q = 0; q < 3; ++q) s.omega[q] = {0.5 - 0.5 / s.I.length(), 0.5 + 0.5 / s.I.length()};
    s.id = i;
    T.tritiles = {s};
    nested.trees.push_back(T);
  }
  int nested_fail = 0;
  for (int k = 1; k <= 3; ++k) {
    const auto cs = counting_split(nested, k, t.params);
    std::multiset<int> all = ids(cs.good);
    const auto sm = ids(cs.small);
    all.insert(sm.begin(), sm.end());
    if (cs.stalled || !cs.inf_ok || !cs.l1_ok || all != ids(nested)) ++nested_fail;
  }

  r["cases"] = opt.cases;
  r["partition_failures"] = partition;
  r["halving_failures"] = halving;
  r["invalid_trees"] = invalid;
  r["counting_constant_coarse"] = suite[0];
  r["counting_constant_fine"] = suite[1];
  r["counting_drift"] = suite[0] > 0.0 ? std::abs(suite[1] / suite[0] - 1.0) : INFINITY;
  r["random_trees"] = trees;
  r["tree_ratio_max"] = worst;
  r["nested_failures"] = nested_fail;
  r.passed = partition == 0 && halving == 0 && invalid == 0 && r.at("counting_drift") <= 0.25 && nested_fail == 0 &&
             worst <= 1.0 + 1e-12;
  return r;
}

}  // namespace tflab
