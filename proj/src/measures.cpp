#include "segstab/measures.hpp"

#include <algorithm>
#include <cmath>

#include "segstab/error.hpp"
#include "segstab/parallel.hpp"
#include "segstab/temporal_blur.hpp"

namespace segstab {

namespace {

void require_same_grid(const LabelMask& a, const LabelMask& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw DimensionError(std::string(what) + ": mask sizes differ");
  }
}

struct DirectedTerm {
  double value = 0.0;
  std::size_t valid = 0;
};

// Source mask warped onto the target grid, compared on pixels whose
// correspondence survives the forward-backward check.
DirectedTerm directed_term(const LabelMask& source, const LabelMask& target,
                           const FlowField& target_to_source, const FlowField& source_to_target,
                           const ConsistencyConfig& cfg) {
  const WarpedLabels warped = warp_labels(source, target_to_source);
  const OcclusionMask occ = occlusion_mask(target_to_source, source_to_target, cfg.occlusion);
  const auto diff = d_cat(target, warped.labels, cfg.literal_dcat);
  auto in_bounds = warped.valid.valid();
  auto visible = occ.valid();
  std::size_t valid = 0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < diff.size(); ++i) {
    if (in_bounds[i] && visible[i]) {
      ++valid;
      hits += diff[i];
    }
  }
  if (valid == 0) return {};
  return {static_cast<double>(hits) / static_cast<double>(valid), valid};
}

}  // namespace

std::vector<std::uint8_t> d_cat(const LabelMask& a, const LabelMask& b, bool agreement) {
  require_same_grid(a, b, "d_cat");
  auto la = a.labels();
  auto lb = b.labels();
  std::vector<std::uint8_t> out(la.size());
  for (std::size_t i = 0; i < la.size(); ++i) {
    const bool same = la[i] == lb[i];
    out[i] = (same == agreement) ? 1 : 0;
  }
  return out;
}

PairTerm pair_terms(const LabelMask& p, const LabelMask& q, const FlowField& p_to_q,
                    const FlowField& q_to_p, const ConsistencyConfig& cfg) {
  require_same_grid(p, q, "e_pair");
  if (p_to_q.width() != p.width() || p_to_q.height() != p.height() ||
      q_to_p.width() != p.width() || q_to_p.height() != p.height()) {
    throw DimensionError("e_pair: flow size differs from mask size");
  }
  const DirectedTerm fwd = directed_term(p, q, q_to_p, p_to_q, cfg);
  const DirectedTerm bwd = directed_term(q, p, p_to_q, q_to_p, cfg);
  PairTerm term;
  term.forward = fwd.value;
  term.backward = bwd.value;
  term.forward_valid = fwd.valid;
  term.backward_valid = bwd.valid;
  return term;
}

double e_pair(const LabelMask& p, const LabelMask& q, const FlowField& p_to_q,
              const FlowField& q_to_p, const ConsistencyConfig& cfg) {
  return pair_terms(p, q, p_to_q, q_to_p, cfg).value();
}

MeasureReport e_cons(const VideoSequence& seq, const ConsistencyConfig& cfg) {
  if (cfg.window < 1) throw DataError("window K must be at least 1");
  if (cfg.occlusion.alpha < 0 || cfg.occlusion.beta < 0) {
    throw DataError("occlusion thresholds must be non-negative");
  }
  const int t_count = seq.num_frames();
  MeasureReport report;
  report.normalization = cfg.normalization;
  report.window = cfg.window;

  for (int i = 0; i < t_count; ++i) {
    for (int j = i + 1; j <= std::min(t_count - 1, i + cfg.window); ++j) {
      // fail before any work if a flow is absent
      seq.flow(i, j);
      seq.flow(j, i);
      report.pairs.push_back({.i = i, .j = j});
    }
  }

  const auto& masks = seq.masks();
  parallel_for(report.pairs.size(), [&](std::size_t k) {
    PairTerm& slot = report.pairs[k];
    const PairTerm t =
        pair_terms(masks[slot.i], masks[slot.j], seq.flow(slot.i, slot.j), seq.flow(slot.j, slot.i), cfg);
    slot.forward = t.forward;
    slot.backward = t.backward;
    slot.forward_valid = t.forward_valid;
    slot.backward_valid = t.backward_valid;
  });

  double sum = 0.0;
  for (const auto& p : report.pairs) {
    sum += p.value();
    report.empty_terms += (p.forward_valid == 0) + (p.backward_valid == 0);
  }
  report.pair_mean = report.pairs.empty() ? 0.0 : sum / static_cast<double>(report.pairs.size());

  for (const auto& m : masks) report.n_nbg_total += count_non_background(m);
  report.n_bd_median = median_boundary_count(masks);

  switch (cfg.normalization) {
    case Normalization::None:
      report.normalizer = 1.0;
      break;
    case Normalization::SqrtNonBackground:
      report.normalizer = std::sqrt(static_cast<double>(report.n_nbg_total));
      break;
    case Normalization::BoundaryMedian:
      report.normalizer = report.n_bd_median;
      break;
  }
  if (report.normalizer == 0.0) {
    if (report.pair_mean != 0.0) {
      throw DataError(std::string("normalization constant is zero (") + to_string(cfg.normalization) +
                      ") with a nonzero pair mean");
    }
    report.e_cons = 0.0;
  } else {
    report.e_cons = report.pair_mean / report.normalizer;
  }
  return report;
}

std::uint64_t count_boundary_pixels(const LabelMask& mask) {
  const int w = mask.width();
  const int h = mask.height();
  std::uint64_t count = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Label l = mask.at(x, y);
      if (l == 0) continue;
      const bool edge = x == 0 || y == 0 || x == w - 1 || y == h - 1 || mask.at(x - 1, y) != l ||
                        mask.at(x + 1, y) != l || mask.at(x, y - 1) != l || mask.at(x, y + 1) != l;
      count += edge ? 1 : 0;
    }
  }
  return count;
}

std::uint64_t count_non_background(const LabelMask& mask) {
  auto labels = mask.labels();
  return static_cast<std::uint64_t>(
      std::count_if(labels.begin(), labels.end(), [](Label l) { return l != 0; }));
}

double median_boundary_count(std::span<const LabelMask> masks) {
  if (masks.empty()) return 0.0;
  std::vector<std::uint64_t> counts;
  counts.reserve(masks.size());
  for (const auto& m : masks) counts.push_back(count_boundary_pixels(m));
  std::sort(counts.begin(), counts.end());
  const std::size_t n = counts.size();
  if (n % 2 == 1) return static_cast<double>(counts[n / 2]);
  return 0.5 * (static_cast<double>(counts[n / 2 - 1]) + static_cast<double>(counts[n / 2]));
}

double e_smooth(std::span<const LabelMask> masks, double fps, double sigma_seconds,
                SmoothNormalization norm) {
  if (masks.size() < 2) throw DataError("e_smooth needs at least two frames");
  if (!(fps > 0.0)) throw DataError("e_smooth needs a positive fps");
  if (!(sigma_seconds > 0.0)) throw DataError("e_smooth needs sigma > 0");
  const int w = masks.front().width();
  const int h = masks.front().height();
  int classes = 1;
  for (const auto& m : masks) {
    require_same_grid(masks.front(), m, "e_smooth");
    classes = std::max(classes, m.num_classes());
  }
  const auto taps = gaussian_taps(sigma_seconds * fps);
  const std::size_t t_count = masks.size();
  const std::size_t n = static_cast<std::size_t>(w) * h;

  std::vector<double> sq(t_count, 0.0);
  std::vector<double> series(t_count);
  for (int c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      bool constant = true;
      for (std::size_t t = 0; t < t_count; ++t) {
        series[t] = masks[t].labels()[i] == c ? 1.0 : 0.0;
        constant = constant && series[t] == series[0];
      }
      if (constant) continue;
      const auto blurred = blur_series(series, taps);
      for (std::size_t t = 0; t < t_count; ++t) {
        const double d = series[t] - blurred[t];
        sq[t] += d * d;
      }
    }
  }

  if (norm == SmoothNormalization::BoundaryMedian) {
    double total = 0.0;
    for (double s : sq) total += std::sqrt(s);
    const double n_bd = median_boundary_count(masks);
    if (n_bd == 0.0) {
      if (total != 0.0) throw DataError("e_smooth: boundary count is zero with a nonzero numerator");
      return 0.0;
    }
    return total / n_bd;
  }

  double total = 0.0;
  for (std::size_t t = 0; t < t_count; ++t) {
    const double num = std::sqrt(sq[t]);
    const auto n_bd = count_boundary_pixels(masks[t]);
    if (n_bd == 0) {
      if (num != 0.0) throw DataError("e_smooth: frame has no boundary but a nonzero residual");
      continue;
    }
    total += num / static_cast<double>(n_bd);
  }
  return total;
}

double e_smooth(const VideoSequence& seq, double sigma_seconds, SmoothNormalization norm) {
  return e_smooth(seq.masks(), seq.fps(), sigma_seconds, norm);
}

MeasureReport measure(const VideoSequence& seq, const ConsistencyConfig& cfg, double sigma_seconds) {
  MeasureReport report = e_cons(seq, cfg);
  report.e_smooth = e_smooth(seq, sigma_seconds);
  return report;
}

namespace {

struct Overlap {
  std::uint64_t pred = 0;
  std::uint64_t gt = 0;
  std::uint64_t both = 0;
};

Overlap overlap(const LabelMask& pred, const LabelMask& gt, int cls) {
  require_same_grid(pred, gt, "overlap");
  auto p = pred.labels();
  auto g = gt.labels();
  Overlap o;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const bool in_p = p[i] == cls;
    const bool in_g = g[i] == cls;
    o.pred += in_p;
    o.gt += in_g;
    o.both += in_p && in_g;
  }
  return o;
}

}  // namespace

double iou(const LabelMask& pred, const LabelMask& gt, int cls) {
  const Overlap o = overlap(pred, gt, cls);
  const std::uint64_t uni = o.pred + o.gt - o.both;
  if (uni == 0) return 1.0;
  return static_cast<double>(o.both) / static_cast<double>(uni);
}

double recall(const LabelMask& pred, const LabelMask& gt, int cls) {
  const Overlap o = overlap(pred, gt, cls);
  if (o.gt == 0) return 1.0;
  return static_cast<double>(o.both) / static_cast<double>(o.gt);
}

double precision(const LabelMask& pred, const LabelMask& gt, int cls) {
  const Overlap o = overlap(pred, gt, cls);
  if (o.pred == 0) return 1.0;
  return static_cast<double>(o.both) / static_cast<double>(o.pred);
}

double mean_recall(std::span<const LabelMask> pred, std::span<const LabelMask> gt, int cls) {
  if (pred.size() != gt.size() || pred.empty()) {
    throw DataError("mean_recall: sequences must be non-empty and of equal length");
  }
  double sum = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) sum += recall(pred[t], gt[t], cls);
  return sum / static_cast<double>(pred.size());
}

const char* to_string(Normalization n) {
  switch (n) {
    case Normalization::None:
      return "none";
    case Normalization::SqrtNonBackground:
      return "sqrt-nbg";
    case Normalization::BoundaryMedian:
      return "boundary-median";
  }
  return "unknown";
}

Normalization parse_normalization(const std::string& name) {
  if (name == "none") return Normalization::None;
  if (name == "sqrt-nbg") return Normalization::SqrtNonBackground;
  if (name == "boundary-median") return Normalization::BoundaryMedian;
  throw DataError("unknown normalization '" + name + "'");
}

}  // namespace segstab
