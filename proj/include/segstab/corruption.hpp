#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "segstab/types.hpp"

namespace segstab {

inline constexpr std::array<int, 3> kErosionLevels{0, 10, 20};
inline constexpr std::array<double, 3> kJitterLevels{0.0, 4.0, 8.0};

struct CorruptionSpec {
  int erosion_px = 0;
  double jitter_mag = 0.0;
  std::uint64_t seed = 0;
  int grid_cells = 32;
};

/// Uniformly distributed unit vector derived from `seed`.
Vec2 random_direction(std::uint64_t seed);

/// Directional erosion: a pixel of class c survives only if the pixels
/// round(k * direction) behind it, k = 1..n, are also class c. Removed pixels
/// become background.
LabelMask erode_directional(const LabelMask& mask, int n, Vec2 direction);

/// Displacement field of the jitter: control points every `grid_cells` pixels
/// carry a vector of length `magnitude` in a direction drawn from (seed, frame);
/// pixels in between are interpolated bilinearly.
FlowField jitter_field(int width, int height, double magnitude, int frame, std::uint64_t seed,
                       int grid_cells = 32);

/// Resamples `mask` through jitter_field (nearest neighbour, background outside).
LabelMask jitter_piecewise_affine(const LabelMask& mask, double magnitude, int frame,
                                  std::uint64_t seed, int grid_cells = 32);

/// Erosion (one direction for the whole clip) followed by per-frame jitter.
std::vector<LabelMask> corrupt_sequence(std::span<const LabelMask> masks, const CorruptionSpec& spec);

struct QualificationClip {
  int erosion_px = 0;
  double jitter_mag = 0.0;
  int accuracy_rank = 3;     // 3 = uncorrupted, 1 = strongest erosion
  int consistency_rank = 3;  // 3 = uncorrupted, 1 = strongest jitter
  std::vector<LabelMask> masks;
};

/// The 3x3 grid of erosion x jitter corruptions. Every cell shares the erosion
/// direction and the per-frame jitter directions drawn from `seed`, so the two
/// axes differ only in magnitude. Cells are ordered erosion-major.
std::vector<QualificationClip> qualification_grid(std::span<const LabelMask> masks,
                                                  std::uint64_t seed, int grid_cells = 32);

}  // namespace segstab
