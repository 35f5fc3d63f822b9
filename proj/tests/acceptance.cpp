// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tf_fixtures.hpp"
#include "tflab/lab.hpp"
#include "tflab/modelsum.hpp"
#include "tflab/packets.hpp"
#include "tflab/suites.hpp"

using namespace tflab;
using namespace tflab::fixtures;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> details;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    details.push_back(fmt::format("{}{}", ok ? "" : "!", what));
  }
};

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (const auto& x : v) s += (s.empty() ? "" : "; ") + x;
  return s;
}

double rel(cplx a, cplx b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

// Ingham window on 2^16 points.
Outcome ingham_window() {
  Outcome o;
  const InghamTable t = build_ingham(OsgoodParams(1.0), 0, 1 << 16);
  const Report s = verify_sandwich(t);
  const double u1 = eval_u(t.params, 1.0);
  o.check(s.at("max_violation") <= 1e-6, fmt::format("sandwich violation {:.2e} <= 1e-6", s.at("max_violation")));
  o.check(std::abs(s.at("v0_integral") - 1.0) <= 1e-8,
          fmt::format("|int v0 - 1| = {:.2e} <= 1e-8", std::abs(s.at("v0_integral") - 1.0)));
  o.check(s.at("v0_sup") <= u1 + 1e-6, fmt::format("sup v0 {:.6f} <= u(1) + 1e-6 = {:.6f}", s.at("v0_sup"), u1));
  o.check(std::abs(u1 - 6.4128) < 1e-4, fmt::format("u(1) = {:.6f}", u1));
  const Report d = verify_decay(t, 0.01, 50.0);
  o.check(d.passed && std::isfinite(d.at("sup_C")),
          fmt::format("decay sup |x|<=50 {:.4g}, |x|<=100 {:.4g} (within 10%)", d.at("sup_C"), d.at("sup_C_doubled")));
  return o;
}

Outcome splitting() {
  Outcome o;
  const Grid g(-128, 128, 1 << 14);
  const WavePacket phi = canonical_packet(TopDatum(Interval{0, 1}, 0.0), 1.0, ingham(), g);
  const double l1 = phi.samples.norm1();
  double recon = 0.0, outside = 0.0, mean = 0.0;
  std::vector<double> tails;
  for (double K : {1.0, 2.0, 4.0, 8.0}) {
    const SplitResult s = split_truncate(phi, K, ingham());
    for (std::size_t i = 0; i < g.n(); ++i) {
      recon = std::max(recon, std::abs(phi.samples[i] - s.phi_c[i] - s.factor * s.psi[i]));
      if (!s.support.contains(g.x(i))) outside = std::max(outside, std::abs(s.phi_c[i]));
    }
    tails.push_back(s.tail);
    const SplitResult m = split_meanzero(phi, K, 2.3, ingham());
    recon = std::max(recon, sup_diff(phi.samples, m.phi_c + m.psi * m.factor));
    mean = std::max({mean, m.mean_phi_c, m.mean_psi});
  }
  o.check(recon <= 1e-12, fmt::format("reconstruction {:.2e} <= 1e-12", recon));
  o.check(outside == 0.0, fmt::format("truncated part outside support {:.1e}", outside));
  o.check(mean <= 1e-8 * l1, fmt::format("mean-zero residual {:.2e} <= 1e-8 |phi|_1 = {:.2e}", mean, 1e-8 * l1));
  bool decreasing = true;
  for (std::size_t i = 1; i < tails.size(); ++i) decreasing = decreasing && tails[i] < tails[i - 1];
  o.check(decreasing, fmt::format("tail K=1,2,4,8: {:.4g} {:.4g} {:.4g} {:.4g}", tails[0], tails[1], tails[2], tails[3]));
  return o;
}

Outcome mfcz_suite() {
  Outcome o;
  const Report r = run_mfcz_suite({}, ingham());
  o.check(r.at("reconstruction_max") <= 1e-9, fmt::format("reconstruction {:.2e}", r.at("reconstruction_max")));
  o.check(r.at("mean_zero_max") <= 1e-8, fmt::format("mean-zero {:.2e}", r.at("mean_zero_max")));
  o.check(r.at("support_violations") == 0.0, fmt::format("support violations {}", r.at("support_violations")));
  o.check(r.at("be_spread_k") <= 10.0,
          fmt::format("BE spread over k {:.3g} <= 10 (per case {:.3g}, per Q {:.3g})", r.at("be_spread_k"),
                      r.at("be_spread_cases"), r.at("be_spread_q")));
  o.check(r.at("k_slope") < 0.0, fmt::format("k slope {:.3g} < 0", r.at("k_slope")));
  o.check(r.passed, "suite report passed");
  return o;
}

Outcome tree_suite() {
  Outcome o;
  const Report r = run_tree_suite({}, ingham());
  o.check(r.at("partition_failures") == 0.0, fmt::format("partition failures {}", r.at("partition_failures")));
  o.check(r.at("halving_failures") == 0.0, fmt::format("halving failures {}", r.at("halving_failures")));
  o.check(r.at("invalid_trees") == 0.0, fmt::format("invalid trees {}", r.at("invalid_trees")));
  o.check(r.at("counting_drift") <= 0.25, fmt::format("counting constant drift {:.2e} <= 0.25", r.at("counting_drift")));
  o.check(r.at("nested_failures") == 0.0, fmt::format("nested fixture failures {}", r.at("nested_failures")));
  o.check(r.passed, "suite report passed");
  return o;
}

Outcome model_sum_algebra() {
  Outcome o;
  const Grid grid(0, 64, 4096);
  ModelSumOptions tf;
  tf.eps = kTfEps;
  tf.wd = tf_wd();

  double tri = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const TfInstance inst = random_instance(seed, 40);
    std::mt19937_64 rng(seed + 100);
    std::uniform_real_distribution<double> U(-1, 1);
    GridFunction f[3], g[3];
    for (int j = 0; j < 3; ++j) {
      f[j] = matched_signal(grid, inst.S, j, rng);
      g[j] = matched_signal(grid, inst.S, j, rng);
    }
    const cplx c(U(rng), U(rng));
    for (int j = 0; j < 3; ++j) {
      GridFunction h[3] = {f[0], f[1], f[2]};
      const cplx base = model_sum(inst.S, h[0], h[1], h[2], ingham(), tf);
      h[j] = g[j];
      const cplx other = model_sum(inst.S, h[0], h[1], h[2], ingham(), tf);
      h[j] = f[j] + c * g[j];
      const cplx mixed = model_sum(inst.S, h[0], h[1], h[2], ingham(), tf);
      tri = std::max(tri, std::abs(mixed - base - c * other) / (std::abs(base) + std::abs(c * other)));
    }
  }
  o.check(tri <= 1e-10, fmt::format("trilinearity {:.2e} <= 1e-10", tri));

  const Grid wide(-64, 64, 8192);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0, 1);
  ModelSumOptions unit;
  unit.eps = 1.0;
  unit.check = false;
  double resc = 0.0;
  for (int c = 0; c < 20; ++c) {
    const int count = 1 + static_cast<int>(rng() % 3);
    std::vector<Tritile> S;
    GridFunction f[3] = {GridFunction(wide), GridFunction(wide), GridFunction(wide)};
    for (int q = 0; q < count; ++q) {
      const double len = std::ldexp(1.0, -2 + static_cast<int>(rng() % 2));
      const double lo = len * static_cast<double>(static_cast<int>(rng() % 4) - 2) + 2.0 * (q - 1);
      Vec3 cc;
      for (int j = 0; j < 3; ++j) cc[j] = (std::floor(-1.5 + 3 * U(rng)) + 0.5) / len;
      S.push_back(make_tritile({lo, lo + len}, cc, q, std::polar(1.0, 2 * kPi * U(rng))));
      for (int j = 0; j < 3; ++j)
        f[j] += gaussian(wide, lo + 0.5 * len + U(rng) - 0.5, 0.5 + U(rng), cc[j] + U(rng) - 0.5);
    }
    const double a1 = 0.2 + 0.6 * U(rng), a2 = 0.2 + 0.6 * U(rng);
    for (double mu : {2.0, 0.5})
      resc = std::max(resc, rescale_check(S, f[0], f[1], f[2], mu, {a1, a2, 1.0 - a1 - a2}, ingham(), unit).rel_error());
  }
  o.check(resc <= 1e-8, fmt::format("Hoelder rescaling over 20 configurations {:.2e} <= 1e-8", resc));

  std::mt19937_64 trng(17);
  double worst = 0.0;
  int trees = 0, invalid = 0;
  for (int c = 0; trees < 100; ++c) {
    const TfInstance inst = random_instance(3000 + c);
    const auto T = random_tree(inst.S, trng);
    if (!T) continue;
    ++trees;
    if (!validate_tree(*T, kTfR)) ++invalid;
    const GridFunction f = inst.f.on(grid);
    const SingleTreeBound b = single_tree_bound(*T, f, f.conj(), f.modulated(-0.5), ingham(), tf_size());
    if (b.rhs > 0.0) worst = std::max(worst, b.ratio());
  }
  o.check(invalid == 0 && std::isfinite(worst) && worst <= 1.0 + 1e-12,
          fmt::format("single-tree ratio over {} trees max {:.4g} <= 1", trees, worst));
  return o;
}

Outcome direct_oracle() {
  Outcome o;
  {
    const Grid g(-4, 4, 2048);
    const GridFunction f1 = GridFunction::sample(g, [](double x) { return x >= -1 && x < 1 ? 1.0 : 0.0; });
    const GridFunction f2 = GridFunction::sample(g, [](double x) { return x >= 0 && x < 1 ? 1.0 : 0.0; });
    const double v = bht_direct(f1, f2, {1, 0})[g.first_at_or_after(0.5)].real();
    o.check(std::abs(v - std::log(3.0)) <= 1e-2, fmt::format("indicator case {:.5f} vs log 3 = {:.5f}", v, std::log(3.0)));
  }
  {
    std::vector<double> v;
    for (std::size_t n : {256u, 512u, 1024u, 2048u}) {
      const Grid g(-8, 8, n);
      const GridFunction B = bht_direct(gaussian(g, 0, 1), gaussian(g, 0.7, 0.7), {0.7, -0.3});
      v.push_back(B[g.first_at_or_after(0.25)].real());
    }
    double worst = INFINITY;
    for (std::size_t k = 2; k < v.size(); ++k)
      worst = std::min(worst, std::abs(v[k - 1] - v[k - 2]) / std::abs(v[k] - v[k - 1]));
    o.check(worst >= 2.0, fmt::format("Richardson contraction min {:.3g} >= 2", worst));
  }
  {
    const Grid g(-8, 8, 1024);
    double worst = 0.0;
    for (double th : {0.2, 1.3, 2.9}) {
      const Vec3 beta = beta_at(th);
      const GridFunction f1 = gaussian(g, 0.3, 1, 0.2), f2 = gaussian(g, -0.5, 1.5, -0.1), f3 = gaussian(g, 0, 2, 0.05);
      const GridFunction B = bht_direct(f1, f2, {beta[0] - beta[2], beta[1] - beta[2]});
      worst = std::max(worst, rel(lambda_direct(f1, f2, f3, beta), inner_product(B, f3.conj())));
    }
    o.check(worst <= 1e-9, fmt::format("duality {:.2e} <= 1e-9", worst));
  }
  return o;
}

std::vector<double> ok_deltas(const std::vector<SweepRow>& rows) {
  std::vector<double> d;
  for (const SweepRow& r : rows)
    if (r.ok()) d.push_back(r.delta);
  return d;
}

SweepResult t1_result;

Outcome endpoint_sweeps() {
  Outcome o;
  SweepConfig t1;
  t1_result = run_sweep(t1, ingham());
  const auto& rows = t1_result.rows;
  std::size_t ok = 0;
  for (const SweepRow& r : rows) ok += r.ok() ? 1 : 0;
  o.check(ok == 10, fmt::format("T1 rows ok {}/10", ok));
  {
    const std::vector<double> d = ok_deltas(rows), env = envelope(rows);
    const GrowthFit lg = fit_growth(d, env, GrowthModel::Log);
    const GrowthFit pw = fit_growth(d, env, GrowthModel::Power, 0.1);
    o.check(lg.residual < pw.residual,
            fmt::format("T1 log residual {:.4g} < power residual {:.4g} (p = {:.3g})", lg.residual, pw.residual,
                        pw.coefficient));
    double lo = INFINITY, hi = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double q = env[i] / std::log(kE + 1.0 / d[i]);
      lo = std::min(lo, q);
      hi = std::max(hi, q);
    }
    o.check(hi / lo <= 10.0, fmt::format("T1 envelope / log(e + 1/delta) spread {:.3g} <= 10", hi / lo));
  }
  {
    SweepConfig c15;
    c15.theorem = Theorem::C15;
    c15.alpha = default_alpha(Theorem::C15);
    const SweepResult res = run_sweep(c15, ingham());
    const std::vector<double> d = ok_deltas(res.rows), env = envelope(res.rows);
    o.check(d.size() == 10, fmt::format("C15 rows ok {}/10", d.size()));
    std::vector<double> C;
    double run = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      run = std::max(run, env[i] / std::log(std::log(std::exp(kE) + 1.0 / d[i])));
      C.push_back(run);
    }
    if (C.size() >= 4) {
      const auto first = C.end() - 4;
      const double lo = *std::min_element(first, C.end()), hi = *std::max_element(first, C.end());
      bool dominated = true;
      for (std::size_t i = 0; i < d.size(); ++i)
        dominated = dominated && env[i] <= C.back() * std::log(std::log(std::exp(kE) + 1.0 / d[i])) * (1 + 1e-12);
      o.check(dominated, fmt::format("C15 envelope <= C loglog with C = {:.4g}", C.back()));
      o.check(hi / lo <= 1.25, fmt::format("C15 C over the last 4 ratios spread {:.4g} <= 1.25", hi / lo));
    }
  }
  return o;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(is), {}};
}

Outcome reproducibility() {
  Outcome o;
  const auto dir = std::filesystem::temp_directory_path() / "tflab_acceptance";
  std::filesystem::create_directories(dir);
  const SweepResult again = run_sweep(SweepConfig{}, ingham());
  const int ra = emit_report(t1_result.rows, {}, {(dir / "a.csv").string(), ""});
  const int rb = emit_report(again.rows, {}, {(dir / "b.csv").string(), ""});
  const std::string a = slurp(dir / "a.csv"), b = slurp(dir / "b.csv");
  o.check(ra == 0 && rb == 0 && !a.empty(), fmt::format("two default T1 runs wrote {} and {} bytes", a.size(), b.size()));
  o.check(a == b, "CSV files byte-identical");
  std::filesystem::remove_all(dir);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {1, "Ingham window", 10, ingham_window},
      {2, "splitting lemmas", 20, splitting},
      {3, "MFCZ suite", 60, mfcz_suite},
      {4, "tree/forest combinatorics", 60, tree_suite},
      {5, "model-sum algebra", 0, model_sum_algebra},
      {6, "direct oracle", 0, direct_oracle},
      {7, "endpoint sweeps", 300, endpoint_sweeps},
      {8, "reproducibility", 0, reproducibility},
  };
  (void)ingham();
  int failed = 0;
  for (const Criterion& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.check(false, fmt::format("exception: {}", e.what()));
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0) o.check(secs <= c.budget_s, fmt::format("runtime {:.1f} s <= {:.0f} s", secs, c.budget_s));
    if (!o.pass) ++failed;
    fmt::print("criterion {}: {} {} ({:.1f} s) {}\n", c.id, o.pass ? "PASS" : "FAIL", c.name, secs, join(o.details));
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", all.size() - static_cast<std::size_t>(failed), all.size());
  return failed == 0 ? 0 : 1;
}
