#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "tflab/osgood.hpp"
#include "tflab/suites.hpp"
#include "tflab/timefreq.hpp"

namespace tflab::fixtures {

inline const InghamTable& ingham() {
  static const InghamTable t = build_ingham(OsgoodParams(1.0), 0, 1 << 14);
  return t;
}

// omega_j = c_j + [-1/(2|I|), 1/(2|I|)).
inline Tritile make_tritile(const Interval& I, const Vec3& c, int id, cplx eps = 1.0) {
  Tritile s;
  s.I = I;
  const double h = 0.5 / I.length();
  for (int j = 0; j < 3; ++j) s.omega[j] = {c[j] - h, c[j] + h};
  s.id = id;
  s.eps = eps;
  return s;
}

// Unit beta orthogonal to (1, 1, 1) at angle theta.
inline Vec3 beta_at(double theta) {
  const double a = 1 / std::sqrt(2.0), b = 1 / std::sqrt(6.0);
  const Vec3 e1{a, -a, 0}, e2{b, b, -2 * b};
  return {std::cos(theta) * e1[0] + std::sin(theta) * e2[0], std::cos(theta) * e1[1] + std::sin(theta) * e2[1],
          std::cos(theta) * e1[2] + std::sin(theta) * e2[2]};
}

inline GridFunction gaussian(const Grid& g, double c, double w, double xi = 0.0) {
  return GridFunction::sample(g, [&](double x) {
    const double d = (x - c) / w;
    return std::exp(-d * d) * std::polar(1.0, 2 * kPi * xi * x);
  });
}

// Sum of Gaussian packets sitting on each (I_s, omega_{s_j}) with random phases.
inline GridFunction matched_signal(const Grid& g, const std::vector<Tritile>& S, int j, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(0, 1);
  GridFunction f(g);
  for (const Tritile& s : S)
    f += gaussian(g, s.I.center(), s.I.length(), s.omega[j].center()) * std::polar(0.5 + U(rng), 2 * kPi * U(rng));
  return f;
}

}  // namespace tflab::fixtures
