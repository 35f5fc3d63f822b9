#include "tflab/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace tflab {

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

fftw_plan plan_for(std::size_t n, int sign) {
  static std::map<std::pair<std::size_t, int>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto key = std::make_pair(n, sign);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<cplx> tmp(n);
  auto* p = reinterpret_cast<fftw_complex*>(tmp.data());
  fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), p, p, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD,
                                    FFTW_ESTIMATE | FFTW_UNALIGNED);
  cache.emplace(key, plan);
  return plan;
}

}  // namespace

void fft_inplace(std::vector<cplx>& a, int sign) {
  if (a.empty()) return;
  fftw_plan plan = plan_for(a.size(), sign);
  auto* p = reinterpret_cast<fftw_complex*>(a.data());
  fftw_execute_dft(plan, p, p);
}

Spectrum spectrum_of(const GridFunction& f) {
  const Grid& g = f.grid();
  std::vector<cplx> a = f.values();
  fft_inplace(a, -1);
  const double h = g.spacing();
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double ph = -2.0 * kPi * g.freq(g.signed_bin(k)) * g.x0();
    a[k] *= h * std::polar(1.0, ph);
  }
  return {g, std::move(a)};
}

GridFunction from_spectrum(const Grid& g, const std::vector<cplx>& F) {
  if (F.size() != g.n()) throw GridMismatch("from_spectrum: size mismatch");
  std::vector<cplx> a(F.size());
  const double invL = 1.0 / g.length();
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double ph = 2.0 * kPi * g.freq(g.signed_bin(k)) * g.x0();
    a[k] = F[k] * invL * std::polar(1.0, ph);
  }
  fft_inplace(a, +1);
  return GridFunction(g, std::move(a));
}

}  // namespace tflab
