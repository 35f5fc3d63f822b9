#pragma once

#include <array>
#include <vector>

#include "tflab/osgood.hpp"
#include "tflab/sampling.hpp"
#include "tflab/timefreq.hpp"

namespace tflab {

struct ModelSumConfig {
  Vec3 beta{};
  Vec3 gamma{};
  double delta_beta = 0.0;  // min_{i<j} |beta_i - beta_j|
  double eps = 1.0 / 65536.0;
  double R = 16.0;

  // Validates beta (unit, orthogonal to (1,1,1), nondegenerate) and derives gamma.
  static ModelSumConfig make(const Vec3& beta, double eps = 1.0 / 65536.0, double R = 16.0);
};

// Desk-scale packet parameter for sweeps.
inline constexpr double kSweepEps = 1.0 / 16.0;

struct ModelSumOptions {
  double eps = kSweepEps;
  bool check = true;  // verify well-discretization first
  WellDiscOptions wd{};
};

// sum_s eps_s |I_s|^{-1/2} prod_j <f_j, upsilon_{s_j}>
[[nodiscard]] cplx model_sum(const std::vector<Tritile>& S, const GridFunction& f1, const GridFunction& f2,
                             const GridFunction& f3, const InghamTable& t, const ModelSumOptions& opt = {});
// Same sum from precomputed coefficients a[s][j] = <f_j, upsilon_{s_j}>.
[[nodiscard]] cplx model_sum_from(const std::vector<Tritile>& S, const TileCoeffs& a);
// sum_s |I_s|^{-1/2} prod_j |a[s][j]|
[[nodiscard]] double model_sum_abs(const std::vector<Tritile>& S, const TileCoeffs& a);
// a[s][j] = <f_j, upsilon_{s_j}>
[[nodiscard]] TileCoeffs model_coefficients(const std::vector<Tritile>& S, const GridFunction& f1,
                                            const GridFunction& f2, const GridFunction& f3, const InghamTable& t,
                                            double eps);

// Dil^{1/alpha}_mu f(x) = mu^{-alpha} f(x / mu), sampled on `target` using
// band-limited (trigonometric) interpolation of f. mu must be a power of two.
[[nodiscard]] GridFunction holder_dilate(const GridFunction& f, double mu, double alpha, const Grid& target);

// S^mu: I -> mu I (as a set), omega -> omega / mu.
[[nodiscard]] std::vector<Tritile> rescale_tritiles(const std::vector<Tritile>& S, double mu);

struct RescaleCheck {
  cplx lhs;
  cplx rhs;
  [[nodiscard]] double rel_error() const;
};

// lhs = Lambda_S(f1, f2, f3); rhs = Lambda_{S^mu}(Dil^{1/alpha_j}_mu f_j) on the same grid.
// Throws DomainError when the rescaled tiles leave the grid.
[[nodiscard]] RescaleCheck rescale_check(const std::vector<Tritile>& S, const GridFunction& f1, const GridFunction& f2,
                                         const GridFunction& f3, double mu, const Vec3& alpha, const InghamTable& t,
                                         const ModelSumOptions& opt = {});

struct BhtOptions {
  double h_cut = 0.0;  // smallest |t|; 0 means the grid spacing
  double t_max = 0.0;  // largest |t|; 0 means the domain length
};

// Symmetric principal-value quadrature of
//   BHT_b(f1, f2)(x) = p.v. int f1(x - b1 t) f2(x - b2 t) dt / t
// with nodes t_m = (m + 1/2) 2 h_cut, +t and -t paired before summation,
// and linear interpolation off the grid (zero outside the domain).
[[nodiscard]] GridFunction bht_direct(const GridFunction& f1, const GridFunction& f2, const std::array<double, 2>& b,
                                      const BhtOptions& opt = {});

// Lambda_beta(f1, f2, f3) = <BHT_b(f1, f2), conj f3>, b = (beta1 - beta3, beta2 - beta3),
// summed with the t loop outside.
[[nodiscard]] cplx lambda_direct(const GridFunction& f1, const GridFunction& f2, const GridFunction& f3,
                                 const Vec3& beta, const BhtOptions& opt = {});

// Pairwise (tree) summation, deterministic in the input order.
[[nodiscard]] cplx pairwise_sum(const std::vector<cplx>& v);

}  // namespace tflab
