#pragma once

#include <optional>

#include "segstab/types.hpp"

namespace segstab {

/// Thresholds of the forward-backward consistency test.
struct OcclusionParams {
  double alpha = 0.01;
  double beta = 0.5;
};

struct WarpedLabels {
  LabelMask labels;
  OcclusionMask valid;
};

struct WarpedVolume {
  SoftMaskVolume planes;  // single frame
  OcclusionMask valid;
};

/// Bilinear lookup of a flow field at a sub-pixel position. Empty when the
/// position lies outside [0, w-1] x [0, h-1].
std::optional<Vec2> sample_bilinear(const FlowField& flow, double x, double y);

/// Backward warp of a label map: output(y) = source(round(y + target_to_source(y))).
///
/// `target_to_source` lives on the target grid and points into the source
/// frame, so producing the source mask expressed in frame q requires the flow
/// q -> p. Labels are sampled nearest-neighbor; samples landing outside the
/// image get label 0 and validity 0.
WarpedLabels warp_labels(const LabelMask& source, const FlowField& target_to_source);

/// Bilinear counterpart of warp_labels for confidence planes of `frame`.
/// Taps outside the image contribute zero; validity is 1 only where the sample
/// position lies inside [0, w-1] x [0, h-1].
WarpedVolume warp_soft(const SoftMaskVolume& volume, int frame, const FlowField& target_to_source);

/// Forward-backward consistency check on the grid of `forward`'s source frame.
/// A pixel x is occluded when
///   |f(x) + b(x + f(x))|^2 > alpha * (|f(x)|^2 + |b(x + f(x))|^2) + beta
/// or when x + f(x) leaves the image.
OcclusionMask occlusion_mask(const FlowField& forward, const FlowField& backward,
                             const OcclusionParams& params = {});

}  // namespace segstab
