#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tflab/osgood.hpp"
#include "tflab/packets.hpp"
#include "tflab/sampling.hpp"

namespace tflab {

struct RieszResult {
  GridFunction g;
  GridFunction b;
  std::size_t rank = 0;       // numerical rank of the exponential system on 3Q
  double max_residual = 0.0;  // max_zeta |<b, e_zeta>_{3Q}| / ||h||_2
  std::vector<std::string> notes;
};

// Orthogonal projection in L2(three_q) of h onto span{e^{2 pi i zeta x}}.
// h must vanish outside three_q. Columns whose residual after pivoted
// Gram-Schmidt falls below rank_tol times the largest column norm are treated
// as dependent.
[[nodiscard]] RieszResult riesz_project(const GridFunction& h, const Interval& three_q, const std::vector<double>& freqs,
                                        double rank_tol = 1e-12);

struct MfczOptions {
  double C = 0.0;  // K = C k; 0 means 1e3 / a with a = eps / 100
  PacketFamily family{0.125, {0.0, 2.0}, 0.0};
  double rank_tol = 1e-12;
};

struct MfczSplit {
  GridFunction good;
  std::map<DyadicInterval, GridFunction> bad_parts;
  std::vector<DyadicInterval> q_intervals;
  std::map<DyadicInterval, std::vector<double>> xi_q;
  std::map<DyadicInterval, double> be_ratio;  // Borwein-Erdelyi ratio per Q
  IntervalSet exceptional;                    // E_lambda
  std::vector<TopDatum> tops;                 // after erasing I inside some 9Q
  double lam = 1.0;
  int k = 1;
  double p = 1.0;
  double K = 1.0;
  double uK = 0.0;
  Report diagnostics;

  [[nodiscard]] GridFunction bad() const;
};

// Max over x of the number of intervals c I (I over tops) containing x.
[[nodiscard]] int counting_overlap(const std::vector<TopDatum>& tops, double c);

[[nodiscard]] MfczSplit mfcz_decompose(const GridFunction& f, const std::vector<TopDatum>& tops, double lam, int k,
                                       double p, const OsgoodParams& params, const MfczOptions& opt = {});

struct MfczVerifyOptions {
  double eps = 0.125;
  double mean_zero_offset = 2.0;
};

// Packet statistics of the bad part over D(I) for each top datum, in units
// of lambda:
//   sup_ratio   sup_{J not in E} |<b, phi_J>| / |J|^{1/2}
//   block_l2    sup_{J0} (|J0|^{-1} sum_{J in J0, J not in E} |<b, phi_J>|^2)^{1/2}
//   block_l1    sup_{J0} |J0|^{-1} || (sum |<b, phi_J>|^2 1_J / |J|)^{1/2} ||_{L1(J0)}
// The block statistics use the mean-zero family xi_J = xi + offset / |J|.
[[nodiscard]] Report verify_mfcz(const MfczSplit& split, const InghamTable& table, const MfczVerifyOptions& opt = {});

struct MfczDiagRow {
  int k = 0;
  std::string statistic;
  double value = 0.0;
  double fitted = 0.0;
};

struct MfczSweep {
  std::vector<MfczDiagRow> rows;
  std::vector<int> ks;
  std::vector<double> sup_ratio;
  double slope = 0.0;  // least-squares slope of log(sup_ratio) against k
};

[[nodiscard]] MfczSweep mfcz_k_sweep(const GridFunction& f, const std::vector<TopDatum>& tops, double lam,
                                     const std::vector<int>& ks, double p, const InghamTable& table,
                                     const MfczOptions& opt = {}, const MfczVerifyOptions& vopt = {});

void write_diagnostics_csv(const std::vector<MfczDiagRow>& rows, std::ostream& os);

}  // namespace tflab
