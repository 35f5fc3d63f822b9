#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "tflab/mfcz.hpp"
#include "tflab/osgood.hpp"
#include "tflab/sampling.hpp"
#include "tflab/timefreq.hpp"

namespace tflab {

// Gaussian wave packets summed into a continuous test signal.
struct Signal {
  struct Bump {
    double amp, x0, width, xi;
  };
  std::vector<Bump> bumps;

  [[nodiscard]] cplx operator()(double x) const;
  [[nodiscard]] GridFunction on(const Grid& g) const;
};

// Packet parameter and separation used by the randomized tree suites.
inline constexpr double kTfEps = 0.25;
inline constexpr double kTfR = 32.0;

[[nodiscard]] WellDiscOptions tf_wd();
[[nodiscard]] SizeOptions tf_size();

struct TfInstance {
  std::vector<Tritile> S;
  Signal f;
  std::vector<double> anchors;  // per-slot anchor frequencies
};

// Random well-discretized collection on [0, 64): dyadic I of length 1/4 .. 2
// inside [16, 48), each 10 omega_j a cell of the grid (10/|I|) Z, drawn near
// per-slot anchors so that trees of every type occur. Candidates that break
// well-discretization against the accepted ones are dropped.
[[nodiscard]] TfInstance random_instance(std::uint64_t seed, int target = 80, double nyquist = 32.0);

// Maximal j-tree around a random member: top interval a dyadic ancestor of
// I_s0 (length <= 8), top frequency c(omega_{s0,j}).
[[nodiscard]] std::optional<Tree> random_tree(const std::vector<Tritile>& S, std::mt19937_64& rng, double R = kTfR);

// Noise floor plus a few narrow complex bumps, sampled on [0, 64) with n points.
[[nodiscard]] GridFunction random_bumpy(std::uint64_t seed, std::size_t n = 4096, int bumps = 3);

struct MfczSuiteOptions {
  std::uint64_t seed = 1;
  int cases = 50;
  std::size_t n = 4096;
  double p = 1.0;
};

// Randomized decompositions with k = 1 + c mod 4 and one random top each.
// Values: reconstruction_max (relative to ||f||_inf), mean_zero_max (relative
// to ||f||_1), support_violations, be_max (largest Borwein-Erdelyi ratio),
// be_spread_k (max/min over k of the largest ratio among cases with that k),
// be_spread_cases (same over per-case maxima), be_spread_q (over every Q),
// k_slope (log sup_ratio against k, k = 1..4, on the first case where the
// statistic is nonzero for all k), k_sweep_case, cases.
[[nodiscard]] Report run_mfcz_suite(const MfczSuiteOptions& opt, const InghamTable& t);

struct TreeSuiteOptions {
  std::uint64_t seed = 1000;
  int cases = 100;
  int doubling_cases = 30;  // grid-doubling audit uses the first cases only
};

// Values: partition_failures, halving_failures, invalid_trees (size lemma on
// each random instance), counting_constant_coarse / _fine (suite maxima on
// 4096 and 8192 points) and counting_drift = |fine/coarse - 1|,
// tree_ratio_max (single tree inequality over one random tree per case),
// nested_failures (counting_split on the 200-deep nested stack, k = 1..3).
[[nodiscard]] Report run_tree_suite(const TreeSuiteOptions& opt, const InghamTable& t);

}  // namespace tflab
