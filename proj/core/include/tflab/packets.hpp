#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tflab/fft.hpp"
#include "tflab/osgood.hpp"
#include "tflab/sampling.hpp"

namespace tflab {

// Spatial interval and frequency anchoring a packet family. Intervals are
// general half-open intervals; dyadic ones convert implicitly.
struct TopDatum {
  Interval I;
  double xi = 0.0;

  TopDatum() = default;
  TopDatum(const Interval& I_, double xi_) : I(I_), xi(xi_) {}
  TopDatum(const DyadicInterval& I_, double xi_) : I(I_.interval()), xi(xi_) {}
};

struct Tile {
  Interval I;
  Interval omega;

  // Throws unless |I| |omega| = 1.
  static Tile make(const Interval& I, const Interval& omega);
};

// Packet spectrum on the band bins k_lo .. k_lo + P.size() - 1 (signed).
struct PacketSpectrum {
  std::int64_t k_lo = 0;
  std::vector<cplx> P;

  [[nodiscard]] std::int64_t k_hi() const { return k_lo + static_cast<std::int64_t>(P.size()) - 1; }
  [[nodiscard]] std::vector<cplx> dense(const Grid& g) const;
};

struct WavePacket {
  TopDatum td;
  double eps = 1.0;
  double a = 0.01;  // adaptation rate eps/100
  double center_freq = 0.0;
  GridFunction samples;
  PacketSpectrum spec;
};

// Minimum number of DFT bins across a packet band.
inline constexpr int kMinPacketBins = 4;

// True when packet_spectrum would accept (xi, eps, len) on g.
[[nodiscard]] bool packet_resolvable(const Grid& g, double xi, double eps, double len);

// Mod_xi Dil^2_{|I|/eps} Tr_{c(I)} upsilon on the grid's DFT bins, normalized
// to unit discrete L2 norm.
[[nodiscard]] PacketSpectrum packet_spectrum(const TopDatum& td, double eps, const InghamTable& t, const Grid& g);
[[nodiscard]] WavePacket canonical_packet(const TopDatum& td, double eps, const InghamTable& t, const Grid& g);
// <f, p> = h sum f conj(p), via Parseval over the packet band.
[[nodiscard]] cplx packet_coefficient(const Spectrum& F, const PacketSpectrum& P);

// Coefficients <f, p_m> for the packets on I_m = [m len, (m+1) len),
// m in [m_lo, m_hi), all sharing xi and eps. Needs L/len integral.
[[nodiscard]] std::vector<cplx> packet_row_coefficients(const Spectrum& F, double len, double xi, double eps,
                                                        const InghamTable& t, std::int64_t m_lo, std::int64_t m_hi);
// Adds the spectrum of sum_m c_m conj(p_m(x)) to G (storage order of F.grid).
void accumulate_conj_row(std::vector<cplx>& G, const Grid& g, double len, double xi, double eps, const InghamTable& t,
                         std::int64_t m_lo, const std::vector<cplx>& c);

// |p(x)| e^{a U(|x - c(I)|/|I|)}: sup on the grid and on the refined grid.
[[nodiscard]] Report verify_packet_decay(const WavePacket& p, const InghamTable& t);

struct SplitOptions {
  double N = 10.0;
  bool clamp = false;  // sweep mode: shrink K to fit the grid instead of throwing
};

struct SplitResult {
  GridFunction phi_c;
  GridFunction psi;
  double factor = 1.0;  // e^{-aK/12}
  double K = 1.0;
  double uK = 0.0;
  Interval support;            // u(K) I
  double xi0 = 0.0;            // mean-zero frequency actually used
  double tail = 0.0;           // L2 mass of phi_c's spectrum at |zeta - xi| >= 2/|I|
  double tail_weighted = 0.0;  // sup |Phi_c| (1 + |I||zeta - xi|)^N e^{aK/12} / |I|^{1/2} on the tail
  double adapt_phi_c = 0.0;    // fitted polynomial-adaptedness constants (j = 0, 1)
  double adapt_psi = 0.0;
  double mean_phi_c = 0.0;  // |int phi_c e^{-2 pi i xi0 x}| (mean-zero split only)
  double mean_psi = 0.0;
  std::vector<std::string> notes;
};

// Cutoff v((x - c)/(uK |I|)), exactly zero outside uK I.
[[nodiscard]] GridFunction packet_cutoff(const InghamTable& t, const Grid& g, const Interval& I, double uK);

[[nodiscard]] SplitResult split_truncate(const WavePacket& phi, double K, const InghamTable& t,
                                         const SplitOptions& opt = {});
// xi0 is snapped to the nearest DFT bin; requires 1/2 < |I||xi0 - xi| <= R/2.
[[nodiscard]] SplitResult split_meanzero(const WavePacket& phi, double K, double xi0, const InghamTable& t,
                                         double R = 16.0, const SplitOptions& opt = {});

// Interval of length 1/len from the three one-third translates of the dyadic
// grid, containing [xi - 2 eps/len, xi + 2 eps/len] with center nearest xi.
// Falls back to the centered interval when eps > 1/6.
[[nodiscard]] Interval omega_for(double xi, double len, double eps);

// 5 omega intersected with Z/(3 u |J|), sorted.
[[nodiscard]] std::vector<double> xi_lattice_u(const Interval& J, const Interval& omega, double u);
[[nodiscard]] std::vector<double> xi_lattice(const Interval& J, const Interval& omega, double K,
                                             const OsgoodParams& p);

// Packet family attached to a top datum: phi_J for J in D(I) with
// xi_J = xi + offset/|J|.
struct PacketFamily {
  double eps = 0.125;
  std::vector<double> offsets{0.0};
  double min_len = 0.0;  // finest admissible |J|
};

struct XiHResult {
  std::vector<double> freqs;
  std::string regime;  // "empty", "far", "near"
  double bound_constant = 0.0;
  int levels = 0;
};

[[nodiscard]] XiHResult xi_H(const TopDatum& td, const Interval& H, double K, const OsgoodParams& p,
                             const PacketFamily& fam = {});

// Merge sorted values closer than tol.
[[nodiscard]] std::vector<double> dedup_sorted(std::vector<double> v, double tol);

}  // namespace tflab
