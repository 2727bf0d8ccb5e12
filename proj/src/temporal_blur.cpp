#include "segstab/temporal_blur.hpp"

#include <cmath>

#include "segstab/error.hpp"

namespace segstab {

std::vector<double> gaussian_taps(double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw DataError("sigma must be finite and >= 0");
  if (sigma == 0.0) return {1.0};
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  for (int k = -radius; k <= radius; ++k) {
    taps[k + radius] = std::exp(-(k * k) / (2.0 * sigma * sigma));
  }
  return taps;
}

std::vector<double> blur_series(std::span<const double> series, std::span<const double> taps) {
  const int n = static_cast<int>(series.size());
  const int radius = static_cast<int>(taps.size() / 2);
  std::vector<double> out(series.size());
  for (int t = 0; t < n; ++t) {
    double acc = 0.0;
    double norm = 0.0;
    for (int k = -radius; k <= radius; ++k) {
      const int s = t + k;
      if (s < 0 || s >= n) continue;
      acc += taps[k + radius] * series[s];
      norm += taps[k + radius];
    }
    out[t] = acc / norm;
  }
  return out;
}

}  // namespace segstab
