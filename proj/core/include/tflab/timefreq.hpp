#pragma once

#include <array>
#include <climits>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tflab/osgood.hpp"
#include "tflab/packets.hpp"
#include "tflab/sampling.hpp"

namespace tflab {

using Vec3 = std::array<double, 3>;

struct Tritile {
  Interval I;
  std::array<Interval, 3> omega;
  cplx eps{1.0, 0.0};
  int id = -1;

  // Throws unless |I||omega_j| = 1 (relative 1e-12) and |eps| <= 1.
  void validate() const;
};

struct MRange {
  std::int64_t lo = 0, hi = 0;  // [lo, hi)
};

struct LatticeRanges {
  MRange sigma, x, xi;
};

// Unit gamma with (gamma, beta, (1,1,1)) a positively oriented orthogonal basis.
// Throws DegeneracyError when two components of beta agree within 1e-6.
[[nodiscard]] Vec3 gamma_for(const Vec3& beta);

inline constexpr double kLatticeDilation = 1.0 + 1.0 / 65536.0;

// Tritiles with I = dil^{s}(m_x + th_x) -+ dil^{s}/2 and
// omega_j = (gamma_j (m_xi + th_xi) + beta_j) / dil^{s} -+ dil^{-s}/2,
// s = m_sigma + th_sigma. Ids are assigned in emission order.
[[nodiscard]] std::vector<Tritile> build_tritile_lattice(const LatticeRanges& m, const Vec3& theta, const Vec3& beta,
                                                         double dil = kLatticeDilation);

struct WellDiscOptions {
  double R = 16.0;
  // Distinct scales must differ by at least this factor.
  double scale_gap = 2.0;
  double tol = 1e-9;  // relative slack for interval comparisons
};

struct Violation {
  std::string rule;  // "grid_I", "grid_omega", "scale", "same_I", "nesting"
  int a = -1, b = -1;  // tritile ids
  int j = -1;          // frequency slot, when relevant
};

struct WellDiscResult {
  bool ok = true;
  std::vector<Violation> violations;
};

[[nodiscard]] WellDiscResult check_well_discretized(const std::vector<Tritile>& S, const WellDiscOptions& opt = {});
// First violation between two tritiles, if any.
[[nodiscard]] std::optional<Violation> pair_violation(const Tritile& s, const Tritile& t, const WellDiscOptions& opt);
// Greedy first-fit split into well-discretized classes, in input order.
[[nodiscard]] std::vector<std::vector<Tritile>> partition_well_discretized(const std::vector<Tritile>& S,
                                                                           const WellDiscOptions& opt = {});

// <f, upsilon_{s_j}> for every tritile, canonical packets with parameter eps.
using TileCoeffs = std::vector<std::array<cplx, 3>>;
[[nodiscard]] TileCoeffs tile_coefficients(const GridFunction& f, const std::vector<Tritile>& S, const InghamTable& t,
                                           double eps);

struct Tree {
  TopDatum top;
  std::vector<Tritile> tritiles;
  int type = 1;  // 1, 2, 3
  std::array<std::optional<double>, 3> lacunary;  // xi_{T,k} for k != type
};

// A point of (intersection of R omega_{s_k}) minus (union of 2 omega_{s_k}),
// or nullopt. k is 1-based.
[[nodiscard]] std::optional<double> lacunary_frequency(const std::vector<Tritile>& members, int k, double R);
// I_s in I_T and xi_T in 2 omega_{s,type} for all members, lacunary
// frequencies present and valid for k != type.
[[nodiscard]] bool validate_tree(const Tree& T, double R, std::string* why = nullptr);
// Fills T.lacunary for k != type; returns false when one does not exist.
bool assign_lacunary(Tree& T, double R);

struct SizeOptions {
  double eps = 0.25;  // packet parameter
  double R = 16.0;
};

// Single tree size: j == type gives sup_s |<f, phi_{s_j}>| / |I_s|^{1/2};
// otherwise (|I_T|^{-1} sum_s |<f, phi_{s_j}>|^2)^{1/2}, requiring the j-reduction
// to be lacunary (PreconditionError otherwise).
[[nodiscard]] double tree_size(const GridFunction& f, const Tree& T, int j, const InghamTable& t,
                               const SizeOptions& opt = {});

// Operative size_j(f; S): the largest of the single-tile values and the
// block values of the maximal k-trees (k != j) with top interval in
// {I_s} and any top frequency. extra_tops are added to the candidate tops.
[[nodiscard]] double size_j(const GridFunction& f, const std::vector<Tritile>& S, int j, const InghamTable& t,
                            const SizeOptions& opt = {}, const std::vector<Interval>& extra_tops = {});
[[nodiscard]] double size_j_from(const std::vector<Tritile>& S, const TileCoeffs& a, int j,
                                 const std::vector<Interval>& extra_tops = {});

// sup_s inf_{x in I_s} M_1 f(x)
[[nodiscard]] double maximal_cap(const GridFunction& f, const std::vector<Tritile>& S);

struct Forest {
  std::vector<Tree> trees;
  int k = 0;
  double sigma = 0.0;
  [[nodiscard]] double counting(double x) const;  // N(x) = sum 1_{I_T}(x)
  [[nodiscard]] double top_measure() const;       // sum |I_T|
  [[nodiscard]] std::size_t tritile_count() const;
};

struct SizeLemmaResult {
  std::vector<Tritile> lo;
  Forest forest;
  double size_before = 0.0;
  double size_after = 0.0;         // size_j(f; S_lo)
  double counting_constant = 0.0;  // sum |I_T| sigma^2 / ||f||_2^2
  double bmo_constant = 0.0;       // max_I |I|^{-1} sum_{I_T in I} |I_T| sigma^2 / ||f||_inf^2
  int sweeps[3] = {0, 0, 0};       // trees removed per sweep
  std::vector<std::string> notes;
};

[[nodiscard]] SizeLemmaResult size_lemma_split(const std::vector<Tritile>& S, const GridFunction& f, int j,
                                               double sigma, const InghamTable& t, const SizeOptions& opt = {});
[[nodiscard]] SizeLemmaResult size_lemma_split_from(const std::vector<Tritile>& S, const TileCoeffs& a, int j,
                                                    double sigma, double f_l2, double f_inf, double R = 16.0);

struct SingleTreeBound {
  double lhs = 0.0;
  double rhs = 0.0;
  [[nodiscard]] double ratio() const { return rhs > 0.0 ? lhs / rhs : 0.0; }
};

[[nodiscard]] SingleTreeBound single_tree_bound(const Tree& T, const GridFunction& f1, const GridFunction& f2,
                                                const GridFunction& f3, const InghamTable& t,
                                                const SizeOptions& opt = {});

inline constexpr int kSizeZeroLevel = INT_MAX;

struct F3Level {
  int k = 0;  // kSizeZeroLevel for the size-zero remainder
  Forest forest;
  std::vector<Tritile> rest;  // remainder tritiles at kSizeZeroLevel
  double size = 0.0;          // size_3(f3; S_k)
};

struct F3Decomposition {
  std::vector<F3Level> levels;
  double sigma0 = 0.0;
  double c_size = 0.0;      // max_k size_k / (sigma0 2^-k)
  double c_tops = 0.0;      // max_k sum |I_T| sigma_k^2 / (|F3| ||f3||_inf^2)
  double c_bmo = 0.0;       // max_k max_I |I|^{-1} sum_{I_T in I} |I_T| sigma_k^2 / ||f3||_inf^2
};

[[nodiscard]] F3Decomposition f3_decompose(const std::vector<Tritile>& S, const GridFunction& f3,
                                           const InghamTable& t, const SizeOptions& opt = {},
                                           int max_rounds = 200);

struct CountingOptions {
  double C = 1.0;          // mu = 3 u(C k)
  double inf_exp = 2.0;    // threshold_inf = 2^{inf_exp k}
  double l1_exp = -2.0;    // threshold_1 = 2^{l1_exp k}
};

struct CountingSplit {
  Forest good;
  Forest small;
  double threshold_inf = 0.0;
  double threshold_l1 = 0.0;
  double good_inf = 0.0;  // ||sum_{good} 1_{J_T}||_inf
  double small_l1 = 0.0;  // ||sum_{small} 1_{I_T}||_1
  bool inf_ok = false;
  bool l1_ok = false;
  bool stalled = false;              // peeling made no progress at some step
  std::vector<double> level_measures;  // |J^j| per peeling step, all groups
  int peel_steps = 0;
};

[[nodiscard]] CountingSplit counting_split(const Forest& F, int k, const OsgoodParams& p,
                                           const CountingOptions& opt = {});

// Smallest interval of the one-third shifted dyadic grids D_0, D_1, D_2
// containing J; group receives the grid index.
[[nodiscard]] Interval shifted_dyadic_hull(const Interval& J, int* group = nullptr);

struct ExceptionalSets {
  IntervalSet E;
  IntervalSet E_bar;
  IntervalSet F3_prime;
  double C = 1.0;
  int doublings = 0;
};

// E = union_j {M_{1/alpha_j} h_j > C ||h_j||_{1/alpha_j} / |F3|^{alpha_j}},
// C doubled from 1 until |F3 minus E_bar| >= |F3|/4.
[[nodiscard]] ExceptionalSets exceptional_sets(const GridFunction& h1, const GridFunction& h2, const IntervalSet& F3,
                                               const Vec3& alpha);

// One JSON object per tree: top, type, lacunary, member ids and intervals.
void write_forest_jsonl(const Forest& F, std::ostream& os);

}  // namespace tflab
