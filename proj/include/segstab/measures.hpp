#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segstab/flow.hpp"
#include "segstab/types.hpp"

namespace segstab {

/// Constant N dividing the pair average in the consistency measure.
enum class Normalization {
  None,               // N = 1
  SqrtNonBackground,  // N = sqrt(non-background pixels summed over all frames)
  BoundaryMedian,     // N = median over frames of the boundary pixel count
};

/// How the smoothness measure divides by the boundary pixel count.
enum class SmoothNormalization {
  BoundaryMedian,  // sum_t ||.|| / median_t N_bd(t)
  PerFrame,        // sum_t ||.|| / N_bd(t)
};

struct ConsistencyConfig {
  int window = 3;
  Normalization normalization = Normalization::BoundaryMedian;
  OcclusionParams occlusion;
  /// Use the agreement indicator (1 = same label) instead of disagreement.
  bool literal_dcat = false;
};

/// Both directed terms of one frame pair, each in [0, 1].
struct PairTerm {
  int i = 0;
  int j = 0;
  double forward = 0.0;   // frame i warped into frame j
  double backward = 0.0;  // frame j warped into frame i
  std::size_t forward_valid = 0;
  std::size_t backward_valid = 0;
  double value() const { return forward + backward; }
};

struct MeasureReport {
  double e_cons = 0.0;
  std::optional<double> e_smooth;
  std::vector<PairTerm> pairs;
  double pair_mean = 0.0;
  double normalizer = 1.0;
  Normalization normalization = Normalization::BoundaryMedian;
  int window = 3;
  double n_bd_median = 0.0;
  std::uint64_t n_nbg_total = 0;
  /// Directed terms whose occlusion mask had no valid pixel (counted as 0).
  int empty_terms = 0;
};

/// Per-pixel indicator: 1 where labels differ (or agree when `agreement`).
std::vector<std::uint8_t> d_cat(const LabelMask& a, const LabelMask& b, bool agreement = false);

/// The two directed terms between masks p and q. `p_to_q` is the flow from
/// frame p to frame q and `q_to_p` its reverse.
PairTerm pair_terms(const LabelMask& p, const LabelMask& q, const FlowField& p_to_q,
                    const FlowField& q_to_p, const ConsistencyConfig& cfg = {});

/// Symmetric pair discrepancy, in [0, 2].
double e_pair(const LabelMask& p, const LabelMask& q, const FlowField& p_to_q,
              const FlowField& q_to_p, const ConsistencyConfig& cfg = {});

/// Flow-based inconsistency of a sequence: the mean pair discrepancy over all
/// unordered pairs with 0 < j - i <= window, divided by the normalization
/// constant. e_smooth is left unset.
MeasureReport e_cons(const VideoSequence& seq, const ConsistencyConfig& cfg = {});

/// Pixels of a non-background label with a 4-neighbour of a different label.
/// The image border counts as a differing neighbour.
std::uint64_t count_boundary_pixels(const LabelMask& mask);

std::uint64_t count_non_background(const LabelMask& mask);

/// Median of the per-frame boundary counts (mean of the middle two for even T).
double median_boundary_count(std::span<const LabelMask> masks);

/// Temporal smoothness: sum over frames of the L2 norm between the one-hot
/// masks and their temporal Gaussian blur (sigma in seconds), divided by the
/// boundary pixel count.
double e_smooth(std::span<const LabelMask> masks, double fps, double sigma_seconds,
                SmoothNormalization norm = SmoothNormalization::BoundaryMedian);
double e_smooth(const VideoSequence& seq, double sigma_seconds,
                SmoothNormalization norm = SmoothNormalization::BoundaryMedian);

/// e_cons followed by e_smooth on the same sequence.
MeasureReport measure(const VideoSequence& seq, const ConsistencyConfig& cfg, double sigma_seconds);

/// Intersection over union of class `cls`; 1 when both sets are empty.
double iou(const LabelMask& pred, const LabelMask& gt, int cls);
/// |pred & gt| / |gt| for class `cls`; 1 when gt is empty.
double recall(const LabelMask& pred, const LabelMask& gt, int cls);
/// |pred & gt| / |pred| for class `cls`; 1 when pred is empty.
double precision(const LabelMask& pred, const LabelMask& gt, int cls);

/// Mean recall of `cls` over a sequence of frames.
double mean_recall(std::span<const LabelMask> pred, std::span<const LabelMask> gt, int cls);

const char* to_string(Normalization n);
Normalization parse_normalization(const std::string& name);

}  // namespace segstab
