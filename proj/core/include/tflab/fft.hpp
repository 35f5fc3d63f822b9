#pragma once

#include <vector>

#include "tflab/sampling.hpp"

namespace tflab {

// Unnormalized DFT in place: sign -1 gives sum_j a_j e^{-2 pi i jk/n}.
void fft_inplace(std::vector<cplx>& a, int sign);

// Continuous-normalized spectrum on the grid's DFT bins:
//   F_k = h sum_i f_i e^{-2 pi i zeta_k x_i},  zeta_k = k/L, k signed.
// Storage follows FFT order (grid.storage_bin).
struct Spectrum {
  Grid grid;
  std::vector<cplx> F;

  [[nodiscard]] cplx at(std::int64_t k) const { return F[grid.storage_bin(k)]; }
};

[[nodiscard]] Spectrum spectrum_of(const GridFunction& f);
// Inverse: f_i = (1/L) sum_k F_k e^{2 pi i zeta_k x_i}.
[[nodiscard]] GridFunction from_spectrum(const Grid& g, const std::vector<cplx>& F);

}  // namespace tflab
