#pragma once

// Direct textbook evaluations used as independent references in tests.
// Deliberately plain loops in long double, sharing no code with the library.

#include <cmath>
#include <cstddef>
#include <vector>

namespace unisyn::testing {

inline double oracle_psnr(const std::vector<double>& a, const std::vector<double>& b) {
  long double peak = a[0];
  long double sq = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] > peak) peak = a[i];
    if (b[i] > peak) peak = b[i];
    const long double d = static_cast<long double>(a[i]) - b[i];
    sq += d * d;
  }
  const long double mse = sq / a.size();
  return static_cast<double>(10.0L * std::log10(peak * peak / mse));
}

inline double oracle_ssim(const std::vector<double>& a, const std::vector<double>& b, double c1, double c2) {
  const long double n = a.size();
  long double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  long double va = 0, vb = 0, cov = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
    cov += (a[i] - ma) * (b[i] - mb);
  }
  va /= n;
  vb /= n;
  cov /= n;
  return static_cast<double>((2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2)));
}

}  // namespace unisyn::testing
