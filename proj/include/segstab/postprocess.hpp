#pragma once

#include <span>
#include <vector>

#include "segstab/types.hpp"

namespace segstab {

/// Weighted guided filter parameters. Window extents are 2r+1 along each axis.
struct WgfConfig {
  int radius_x = 8;
  int radius_y = 8;
  int radius_t = 2;  // 0 filters every frame on its own
  double epsilon = 1e-2;
  double weight_floor = 0.05;
};

/// Confidence weights floor + (1 - floor) * |2p - 1|: lowest at p = 0.5.
std::vector<double> confidence_weights(std::span<const float> plane, double floor);

/// Weighted guided filter over the (t, y, x) volume, one class plane at a time.
///
/// The guide is the frame stack (RGB uses the 3x3 covariance system, grayscale
/// the scalar one). Regression statistics inside each box window are weighted
/// by confidence_weights; the per-window coefficients are then averaged with
/// plain box means before being applied to the guide. Output is clamped to
/// [0,1] and is generally not normalized across classes; pass it through
/// argmax_merge for labels.
SoftMaskVolume wgf_3d(std::span<const Image> guide, const SoftMaskVolume& volume,
                      const WgfConfig& cfg = {});

/// Single-frame weighted guided filter built on summed-area tables.
/// radius_t is ignored.
std::vector<float> wgf_2d(const Image& guide, std::span<const float> plane, const WgfConfig& cfg = {});

/// wgf_2d applied to every (frame, class) plane of a volume.
SoftMaskVolume wgf_2d_per_frame(std::span<const Image> guide, const SoftMaskVolume& volume,
                                const WgfConfig& cfg = {});

/// Per-class, per-pixel Gaussian blur along time (sigma in frames, truncated at
/// 3 sigma, renormalized at the clip ends). sigma = 0 is the identity.
SoftMaskVolume temporal_gaussian_smooth(const SoftMaskVolume& volume, double sigma_frames);

}  // namespace segstab
