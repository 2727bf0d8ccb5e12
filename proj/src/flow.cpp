#include "segstab/flow.hpp"

#include <algorithm>
#include <cmath>

#include "segstab/error.hpp"

namespace segstab {

namespace {

template <typename A, typename B>
void require_same_grid(const A& a, const B& b, const char* what) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw DimensionError(std::string(what) + ": grids differ");
  }
}

struct Taps {
  int x0, y0;
  double fx, fy;
};

Taps taps_for(double x, double y) {
  const double xf = std::floor(x);
  const double yf = std::floor(y);
  return {static_cast<int>(xf), static_cast<int>(yf), x - xf, y - yf};
}

bool inside(double x, double y, int w, int h) {
  return x >= 0.0 && y >= 0.0 && x <= w - 1 && y <= h - 1;
}

}  // namespace

std::optional<Vec2> sample_bilinear(const FlowField& flow, double x, double y) {
  const int w = flow.width();
  const int h = flow.height();
  if (!inside(x, y, w, h)) return std::nullopt;
  const Taps t = taps_for(x, y);
  // the upper neighbour carries zero weight on the last row/column
  const int x1 = std::min(t.x0 + 1, w - 1);
  const int y1 = std::min(t.y0 + 1, h - 1);
  const Vec2 a = flow.at(t.x0, t.y0);
  const Vec2 b = flow.at(x1, t.y0);
  const Vec2 c = flow.at(t.x0, y1);
  const Vec2 d = flow.at(x1, y1);
  const double w00 = (1 - t.fx) * (1 - t.fy);
  const double w10 = t.fx * (1 - t.fy);
  const double w01 = (1 - t.fx) * t.fy;
  const double w11 = t.fx * t.fy;
  return Vec2{w00 * a.x + w10 * b.x + w01 * c.x + w11 * d.x,
              w00 * a.y + w10 * b.y + w01 * c.y + w11 * d.y};
}

WarpedLabels warp_labels(const LabelMask& source, const FlowField& target_to_source) {
  require_same_grid(source, target_to_source, "warp_labels");
  const int w = source.width();
  const int h = source.height();
  std::vector<Label> labels(static_cast<std::size_t>(w) * h, 0);
  std::vector<std::uint8_t> valid(labels.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vec2 f = target_to_source.at(x, y);
      const double sx = std::floor(x + f.x + 0.5);
      const double sy = std::floor(y + f.y + 0.5);
      if (sx < 0 || sy < 0 || sx > w - 1 || sy > h - 1) continue;
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      labels[i] = source.at(static_cast<int>(sx), static_cast<int>(sy));
      valid[i] = 1;
    }
  }
  return {LabelMask(w, h, source.num_classes(), std::move(labels)),
          OcclusionMask(w, h, std::move(valid))};
}

WarpedVolume warp_soft(const SoftMaskVolume& volume, int frame, const FlowField& target_to_source) {
  require_same_grid(volume, target_to_source, "warp_soft");
  if (frame < 0 || frame >= volume.frames()) throw DataError("warp_soft: frame out of range");
  const int w = volume.width();
  const int h = volume.height();
  const std::size_t n = volume.plane_size();
  std::vector<float> out(static_cast<std::size_t>(volume.classes()) * n, 0.0f);
  std::vector<std::uint8_t> valid(n, 0);

  auto tap = [&](std::span<const float> plane, int x, int y) -> double {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0.0;
    return plane[static_cast<std::size_t>(y) * w + x];
  };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vec2 f = target_to_source.at(x, y);
      const double sx = x + f.x;
      const double sy = y + f.y;
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      valid[i] = inside(sx, sy, w, h) ? 1 : 0;
      const Taps t = taps_for(sx, sy);
      for (int c = 0; c < volume.classes(); ++c) {
        auto plane = volume.plane(frame, c);
        double v = 0.0;
        if (t.fx == 0.0 && t.fy == 0.0) {
          v = tap(plane, t.x0, t.y0);
        } else {
          v = (1 - t.fx) * (1 - t.fy) * tap(plane, t.x0, t.y0) +
              t.fx * (1 - t.fy) * tap(plane, t.x0 + 1, t.y0) +
              (1 - t.fx) * t.fy * tap(plane, t.x0, t.y0 + 1) +
              t.fx * t.fy * tap(plane, t.x0 + 1, t.y0 + 1);
        }
        out[static_cast<std::size_t>(c) * n + i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return {SoftMaskVolume(1, volume.classes(), w, h, std::move(out)),
          OcclusionMask(w, h, std::move(valid))};
}

OcclusionMask occlusion_mask(const FlowField& forward, const FlowField& backward,
                             const OcclusionParams& params) {
  require_same_grid(forward, backward, "occlusion_mask");
  const int w = forward.width();
  const int h = forward.height();
  std::vector<std::uint8_t> valid(static_cast<std::size_t>(w) * h, 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vec2 f = forward.at(x, y);
      const auto b = sample_bilinear(backward, x + f.x, y + f.y);
      if (!b) continue;
      const double rx = f.x + b->x;
      const double ry = f.y + b->y;
      const double lhs = rx * rx + ry * ry;
      const double rhs =
          params.alpha * (f.x * f.x + f.y * f.y + b->x * b->x + b->y * b->y) + params.beta;
      valid[static_cast<std::size_t>(y) * w + x] = lhs > rhs ? 0 : 1;
    }
  }
  return OcclusionMask(w, h, std::move(valid));
}

}  // namespace segstab
