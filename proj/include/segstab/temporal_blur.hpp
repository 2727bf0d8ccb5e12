#pragma once

#include <span>
#include <vector>

namespace segstab {

/// Unnormalized Gaussian taps exp(-k^2 / (2 sigma^2)) for k in [-r, r],
/// r = ceil(3 sigma). sigma = 0 yields the single tap {1}.
std::vector<double> gaussian_taps(double sigma);

/// Convolves a series with gaussian_taps(sigma). Near the ends the taps that
/// fall outside the series are dropped and the remaining weights renormalized.
std::vector<double> blur_series(std::span<const double> series, std::span<const double> taps);

}  // namespace segstab
