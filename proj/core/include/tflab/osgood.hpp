#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tflab/common.hpp"
#include "tflab/sampling.hpp"

namespace tflab {

// u(t) = (1/lambda)(t+e)(log(t+e))^{1+lambda}, t >= 0.
class OsgoodParams {
 public:
  explicit OsgoodParams(double lambda = 1.0);

  [[nodiscard]] double lambda() const { return lambda_; }
  [[nodiscard]] double u0() const { return u0_; }
  // B_u(tau) = sup_{t>=0} (1+u(t)) e^{-tau t}, memoized per tau.
  [[nodiscard]] double B_u(double tau) const;

 private:
  struct Cache;
  double lambda_;
  double u0_;
  std::shared_ptr<Cache> cache_;
};

[[nodiscard]] double eval_u(const OsgoodParams& p, double t);
// log u as a function of s = log(t+e); usable far beyond double range of t.
[[nodiscard]] double eval_log_u_of_s(const OsgoodParams& p, double s);
// U = u^{-1} on [u(0), inf); extended by 0 on [0, u(0)).
[[nodiscard]] double eval_U(const OsgoodParams& p, double x);

// int_0^T dt/u(t) with T = e^S - e, by composite Simpson in log coordinates.
[[nodiscard]] double osgood_partial_integral(const OsgoodParams& p, double log_horizon);
// Smallest S with closed-form tail S^{-lambda} <= tol.
[[nodiscard]] double osgood_horizon(const OsgoodParams& p, double tol);
[[nodiscard]] Report verify_osgood(const OsgoodParams& p, double log_horizon, double tol = 1e-3);
[[nodiscard]] bool check_increasing_convex(const OsgoodParams& p, double t_max = 1e6, std::size_t samples = 4096);

struct InghamTable {
  OsgoodParams params;
  int k_max = 0;
  std::size_t grid_n = 0;
  double decay_rate = 0.01;
  std::vector<double> u_values;  // u(1..k_max)
  Grid v0_grid;                  // [-2, 2)
  GridFunction v0;
  std::vector<double> V0;  // cumulative integral at x_i, i = 0..n
  GridFunction spectrum;   // v on [-1, 1)
  GridFunction upsilon;    // Ingham window samples on [-x_max, x_max)
  double upsilon_l2 = 0.0;

  [[nodiscard]] double V0_at(double s) const;
  // v(xi) = V0(3 xi + 3/2) - V0(3 xi - 1/2)
  [[nodiscard]] double v_at(double xi) const;
};

struct InghamOptions {
  double x_max = 64.0;
  std::size_t upsilon_n = 0;  // 0: smallest power of two with spacing <= 1/4
};

// k_max = 0 picks the largest k with 1/u(k) >= h/2 (h = 4/grid_n).
[[nodiscard]] InghamTable build_ingham(const OsgoodParams& p, int k_max, std::size_t grid_n,
                                       const InghamOptions& opt = {});
// Ingham window sampled on an arbitrary grid by DFT of v (exact up to periodization).
[[nodiscard]] GridFunction upsilon_on(const InghamTable& t, const Grid& g);
// Closed-form product evaluation of the window (truncated at t.k_max factors).
[[nodiscard]] cplx upsilon_product(const InghamTable& t, double x);
[[nodiscard]] cplx v0_hat_product(const InghamTable& t, double zeta);
// Integrals of the partial convolutions v_1 * ... * v_k, k = 1..k_max.
[[nodiscard]] std::vector<double> recurrence_integrals(const OsgoodParams& p, int k_max, std::size_t grid_n);

[[nodiscard]] Report verify_sandwich(const InghamTable& t);
// C(x) = |upsilon(x)| e^{a U(|x|)}: sup over |x| <= x_max against the doubled range.
[[nodiscard]] Report verify_decay(const InghamTable& t, double a, double x_max);
[[nodiscard]] Report verify_decay(const GridFunction& upsilon, const OsgoodParams& p, double a, double a_max,
                                  double x_max);

void save_ingham(const InghamTable& t, const std::string& path);
[[nodiscard]] InghamTable load_ingham(const std::string& path);
// Cached build keyed by (lambda, k_max, grid_n); cache_dir empty disables caching.
[[nodiscard]] InghamTable ingham_cached(const OsgoodParams& p, int k_max, std::size_t grid_n,
                                        const std::string& cache_dir, const InghamOptions& opt = {});

}  // namespace tflab
