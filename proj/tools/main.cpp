#include <fmt/format.h>

#include <CLI11.hpp>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "csv_io.hpp"
#include "tflab/lab.hpp"
#include "tflab/mfcz.hpp"
#include "tflab/modelsum.hpp"
#include "tflab/osgood.hpp"
#include "tflab/suites.hpp"

using namespace tflab;

namespace {

constexpr int kOk = 0, kError = 1, kEmpty = 2;

void print_report(const Report& r) {
  fmt::print("[{}] {}\n", r.name.empty() ? "report" : r.name, r.passed ? "pass" : "FAIL");
  for (const auto& [k, v] : r.values) fmt::print("  {} = {:.10g}\n", k, v);
  constexpr std::size_t kMaxNotes = 8;
  for (std::size_t i = 0; i < r.notes.size() && i < kMaxNotes; ++i) fmt::print("  note: {}\n", r.notes[i]);
  if (r.notes.size() > kMaxNotes) fmt::print("  ({} more notes)\n", r.notes.size() - kMaxNotes);
}

struct TableOpts {
  std::string path;  // load instead of building
  double lambda = 1.0;
  std::size_t grid_n = 1 << 14;
};

void add_table_opts(CLI::App* sub, TableOpts& o) {
  sub->add_option("--table", o.path, "Load a window table written by 'ingham --out'");
  sub->add_option("--window-lambda", o.lambda, "Osgood parameter of the window when building");
}

InghamTable table_for(const TableOpts& o) {
  return o.path.empty() ? build_ingham(OsgoodParams(o.lambda), 0, o.grid_n) : load_ingham(o.path);
}

// ingham ------------------------------------------------------------------

struct InghamCmd {
  double lambda = 1.0;
  int kmax = 0;
  std::size_t grid_n = 1 << 16;
  double decay_a = 0.01;
  double decay_x = 50.0;
  std::string out;
};

int run_ingham(const InghamCmd& c) {
  const InghamTable t = build_ingham(OsgoodParams(c.lambda), c.kmax, c.grid_n);
  Report s = verify_sandwich(t);
  s.name = "sandwich";
  Report d = verify_decay(t, c.decay_a, c.decay_x);
  d.name = "decay";
  print_report(s);
  print_report(d);
  if (!c.out.empty()) {
    save_ingham(t, c.out);
    fmt::print("wrote {}\n", c.out);
  }
  return s.passed && d.passed ? kOk : kError;
}

// mfcz --------------------------------------------------------------------

struct MfczCmd {
  std::string signal, tops_file, out, diag;
  double lam = 1.0, p = 1.0, C = 1.0;
  int k = 1;
  TableOpts table;
};

int run_mfcz(const MfczCmd& c) {
  const GridFunction f = cli::read_signals(c.signal, 1).front();
  const std::vector<TopDatum> tops = c.tops_file.empty() ? std::vector<TopDatum>{} : cli::read_tops(c.tops_file);
  const InghamTable t = table_for(c.table);
  MfczOptions mo;
  mo.C = c.C;
  const MfczSplit s = mfcz_decompose(f, tops, c.lam, c.k, c.p, t.params, mo);
  Report d = s.diagnostics;
  d.name = "mfcz";
  print_report(d);
  if (!c.out.empty()) cli::write_signals(c.out, {"good", "bad"}, {s.good, s.bad()});
  if (s.q_intervals.empty()) {
    fmt::print(stderr, "warning: no exceptional intervals at lambda = {}; f is all good\n", c.lam);
    return kEmpty;
  }
  return d.passed ? kOk : kError;
}

// tree-suite --------------------------------------------------------------

struct SuiteCmd {
  std::uint64_t seed = 1000;
  int cases = 100;
  bool mfcz = false;
  TableOpts table;
};

int run_suite(const SuiteCmd& c) {
  const InghamTable t = table_for(c.table);
  TreeSuiteOptions o;
  o.seed = c.seed;
  o.cases = c.cases;
  const Report r = run_tree_suite(o, t);
  print_report(r);
  bool ok = r.passed;
  if (c.mfcz) {
    MfczSuiteOptions m;
    m.seed = c.seed;
    const Report rm = run_mfcz_suite(m, t);
    print_report(rm);
    ok = ok && rm.passed;
  }
  return ok ? kOk : kError;
}

// sweep -------------------------------------------------------------------

struct SweepCmd {
  std::string theorem = "T1", family = "interval";
  std::vector<double> alpha, ratios;
  int first = 1, last = 10;
  std::size_t grid_n = std::size_t{1} << 16;
  double eps = kSweepEps;
  std::uint64_t seed = 1;
  int cantor_depth = 2, m_xi_max = 64;
  bool no_direct = false;
  std::string out_csv = "sweep.csv", out_svg;
  TableOpts table;
};

int run_sweep_cmd(const SweepCmd& c) {
  SweepConfig cfg;
  cfg.theorem = theorem_from_string(c.theorem);
  cfg.alpha = default_alpha(cfg.theorem);
  if (!c.alpha.empty()) {
    if (c.alpha.size() != 3) throw PreconditionError("--alpha takes three values");
    cfg.alpha = {c.alpha[0], c.alpha[1], c.alpha[2]};
  }
  cfg.family = family_from_string(c.family);
  cfg.cantor_depth = c.cantor_depth;
  cfg.ratios = c.ratios.empty() ? dyadic_ratios(c.first, c.last) : c.ratios;
  cfg.grid_n = c.grid_n;
  cfg.eps = c.eps;
  cfg.seed = c.seed;
  cfg.m_xi_max = c.m_xi_max;
  cfg.direct = !c.no_direct;
  cfg.validate();

  const InghamTable t = table_for(c.table);
  const SweepResult res = run_sweep(cfg, t);
  const auto& L = res.lattice;
  fmt::print("lattice: {} tritiles in {} classes, scales 2^{}..2^{}, theta_xi = {:.6f}\n", L.tritiles, L.classes,
             L.scale_lo, L.scale_hi, L.theta_xi);
  std::vector<GrowthFit> fits;
  std::size_t ok = 0;
  for (const auto& r : res.rows) {
    if (r.ok()) ++ok;
    else fmt::print(stderr, "warning: delta = {}: {}\n", r.delta, r.status);
  }
  if (ok >= 4) {
    for (GrowthModel m : {GrowthModel::Log, GrowthModel::LogLog, GrowthModel::Power}) {
      fits.push_back(fit_growth(res.rows, m, m == GrowthModel::Power ? 0.0 : -INFINITY));
      fmt::print("fit {:6}: coefficient {:.6g}, intercept {:.6g}, rms {:.6g}\n", to_string(m),
                 fits.back().coefficient, fits.back().intercept, fits.back().residual);
    }
  }
  const int code = emit_report(res.rows, fits, {c.out_csv, c.out_svg});
  if (code == kEmpty) fmt::print(stderr, "warning: no rows (empty ratio list)\n");
  else fmt::print("wrote {}{}\n", c.out_csv, c.out_svg.empty() ? "" : " and " + c.out_svg);
  return code;
}

// oracle ------------------------------------------------------------------

struct OracleCmd {
  std::string input, out = "-";
  std::vector<double> b{1.0, -1.0};
  double h_cut = 0.0, t_max = 0.0;
};

int run_oracle(const OracleCmd& c) {
  if (c.b.size() != 2) throw PreconditionError("--b takes two values");
  const auto fs = cli::read_signals(c.input, 2);
  BhtOptions o;
  o.h_cut = c.h_cut;
  o.t_max = c.t_max;
  const GridFunction y = bht_direct(fs[0], fs[1], {c.b[0], c.b[1]}, o);
  cli::write_signals(c.out, {"bht"}, {y});
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-frequency laboratory: windows, decompositions, tree audits, model-sum sweeps"};
  app.set_config("--config", "", "TOML-style key = value file; [subcommand] sections; flags override it");
  app.require_subcommand(1);
  app.footer("Environment: TFLAB_THREADS caps worker threads.\nExit codes: 0 ok, 1 error, 2 empty result.");

  InghamCmd ic;
  auto* ing = app.add_subcommand("ingham", "Build the window and verify sandwich and decay");
  ing->add_option("--lambda", ic.lambda, "Osgood parameter")->check(CLI::PositiveNumber);
  ing->add_option("--kmax", ic.kmax, "Convolution factors (0: largest resolvable)")->check(CLI::NonNegativeNumber);
  ing->add_option("--grid-n", ic.grid_n, "Grid points for v0 on [-2, 2)");
  ing->add_option("--decay-a", ic.decay_a, "Decay rate a in |upsilon| e^{a U}");
  ing->add_option("--decay-x", ic.decay_x, "Range |x| <= X of the decay check");
  ing->add_option("--out", ic.out, "Save the table to this file");

  MfczCmd mc;
  auto* mf = app.add_subcommand("mfcz", "Decompose a CSV signal into good and bad parts");
  mf->add_option("--signal", mc.signal, "CSV with x, re[, im]")->required()->check(CLI::ExistingFile);
  mf->add_option("--tops-file", mc.tops_file, "CSV rows lo, hi, xi")->check(CLI::ExistingFile);
  mf->add_option("--lam", mc.lam, "Level lambda")->check(CLI::PositiveNumber);
  mf->add_option("--k", mc.k, "Counting parameter k")->check(CLI::PositiveNumber);
  mf->add_option("--p", mc.p, "Exponent p in [1, 2]");
  mf->add_option("--C", mc.C, "K = C k (0: the resolution-limited default)");
  mf->add_option("--out", mc.out, "CSV of x, good, bad ('-' for stdout)");
  add_table_opts(mf, mc.table);

  SuiteCmd sc;
  auto* ts = app.add_subcommand("tree-suite", "Randomized size-lemma, single-tree and counting audits");
  ts->add_option("--seed", sc.seed, "Base seed");
  ts->add_option("--cases", sc.cases, "Random instances")->check(CLI::PositiveNumber);
  ts->add_flag("--with-mfcz", sc.mfcz, "Also run the 50-case decomposition suite");
  add_table_opts(ts, sc.table);

  SweepCmd wc;
  auto* sw = app.add_subcommand("sweep", "Endpoint sweep of the model sum over delta");
  sw->add_option("--theorem", wc.theorem, "T1, T2, T3 or C15")
      ->check(CLI::IsMember({"T1", "T2", "T3", "C15"}));
  sw->add_option("--alpha", wc.alpha, "Hoelder triple a1,a2,a3")->delimiter(',')->expected(3);
  sw->add_option("--ratios", wc.ratios, "Explicit decreasing delta list")->delimiter(',');
  sw->add_option("--first", wc.first, "Dyadic ratios 2^-first..2^-last when --ratios is absent");
  sw->add_option("--last", wc.last, "See --first");
  sw->add_option("--family", wc.family, "interval or cantor")->check(CLI::IsMember({"interval", "cantor"}));
  sw->add_option("--cantor-depth", wc.cantor_depth, "Middle-thirds depth");
  sw->add_option("--grid-n", wc.grid_n, "Grid points on [-32, 32)");
  sw->add_option("--eps", wc.eps, "Packet parameter");
  sw->add_option("--seed", wc.seed, "Lattice offset seed");
  sw->add_option("--m-xi-max", wc.m_xi_max, "Frequency index bound");
  sw->add_flag("--no-direct", wc.no_direct, "Skip the direct Lambda evaluation");
  sw->add_option("--out-csv", wc.out_csv, "CSV output");
  sw->add_option("--out-svg", wc.out_svg, "SVG plot output (optional)");
  add_table_opts(sw, wc.table);

  OracleCmd oc;
  auto* orc = app.add_subcommand("oracle", "Direct bilinear Hilbert transform of CSV inputs");
  orc->add_option("--input", oc.input, "CSV with x, f1, f2 (real or re, im pairs)")->required()->check(CLI::ExistingFile);
  orc->add_option("--b", oc.b, "Direction b1,b2")->delimiter(',')->expected(2);
  orc->add_option("--h-cut", oc.h_cut, "Smallest |t| (0: grid spacing)");
  orc->add_option("--t-max", oc.t_max, "Largest |t| (0: domain length)");
  orc->add_option("--out", oc.out, "CSV output ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    (void)app.exit(e);
    return kError;
  }

  try {
    if (*ing) return run_ingham(ic);
    if (*mf) return run_mfcz(mc);
    if (*ts) return run_suite(sc);
    if (*sw) return run_sweep_cmd(wc);
    if (*orc) return run_oracle(oc);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kError;
  }
  return kError;
}
