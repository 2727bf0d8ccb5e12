#include "segstab/corruption.hpp"

#include <cmath>
#include <numbers>

#include "keyed_rng.hpp"
#include "segstab/error.hpp"

namespace segstab {

Vec2 random_direction(std::uint64_t seed) {
  auto eng = detail::keyed_engine({seed, detail::kErosionTag});
  const double angle = 2.0 * std::numbers::pi * detail::unit_uniform(eng);
  return {std::cos(angle), std::sin(angle)};
}

LabelMask erode_directional(const LabelMask& mask, int n, Vec2 direction) {
  if (n < 0) throw DataError("erosion size must be non-negative");
  if (n == 0) return mask;
  const double len = std::hypot(direction.x, direction.y);
  if (!(std::abs(len - 1.0) < 1e-6)) throw DataError("erosion direction must be a unit vector");

  std::vector<std::pair<int, int>> offsets;
  for (int k = 1; k <= n; ++k) {
    offsets.emplace_back(static_cast<int>(std::lround(k * direction.x)),
                         static_cast<int>(std::lround(k * direction.y)));
  }
  const int w = mask.width();
  const int h = mask.height();
  std::vector<Label> labels(mask.labels().begin(), mask.labels().end());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Label l = mask.at(x, y);
      if (l == 0) continue;
      for (const auto& [dx, dy] : offsets) {
        const int sx = x - dx;
        const int sy = y - dy;
        if (sx < 0 || sy < 0 || sx >= w || sy >= h || mask.at(sx, sy) != l) {
          labels[static_cast<std::size_t>(y) * w + x] = 0;
          break;
        }
      }
    }
  }
  return LabelMask(w, h, mask.num_classes(), std::move(labels));
}

FlowField jitter_field(int width, int height, double magnitude, int frame, std::uint64_t seed,
                       int grid_cells) {
  if (magnitude < 0) throw DataError("jitter magnitude must be non-negative");
  if (grid_cells < 1) throw DataError("control grid spacing must be positive");
  const int nx = (width - 1 + grid_cells - 1) / grid_cells + 1;
  const int ny = (height - 1 + grid_cells - 1) / grid_cells + 1;

  auto eng = detail::keyed_engine({seed, static_cast<std::uint64_t>(frame), detail::kJitterTag});
  std::vector<Vec2> control(static_cast<std::size_t>(nx) * ny);
  for (auto& c : control) {
    const double angle = 2.0 * std::numbers::pi * detail::unit_uniform(eng);
    c = {magnitude * std::cos(angle), magnitude * std::sin(angle)};
  }

  std::vector<float> vectors(2 * static_cast<std::size_t>(width) * height);
  for (int y = 0; y < height; ++y) {
    const int gy = std::min(y / grid_cells, ny - 2 < 0 ? 0 : ny - 2);
    const double fy = ny > 1 ? static_cast<double>(y - gy * grid_cells) / grid_cells : 0.0;
    for (int x = 0; x < width; ++x) {
      const int gx = std::min(x / grid_cells, nx - 2 < 0 ? 0 : nx - 2);
      const double fx = nx > 1 ? static_cast<double>(x - gx * grid_cells) / grid_cells : 0.0;
      const int gx1 = std::min(gx + 1, nx - 1);
      const int gy1 = std::min(gy + 1, ny - 1);
      const Vec2& a = control[static_cast<std::size_t>(gy) * nx + gx];
      const Vec2& b = control[static_cast<std::size_t>(gy) * nx + gx1];
      const Vec2& c = control[static_cast<std::size_t>(gy1) * nx + gx];
      const Vec2& d = control[static_cast<std::size_t>(gy1) * nx + gx1];
      const double dx = (1 - fx) * (1 - fy) * a.x + fx * (1 - fy) * b.x + (1 - fx) * fy * c.x + fx * fy * d.x;
      const double dy = (1 - fx) * (1 - fy) * a.y + fx * (1 - fy) * b.y + (1 - fx) * fy * c.y + fx * fy * d.y;
      const std::size_t i = 2 * (static_cast<std::size_t>(y) * width + x);
      vectors[i] = static_cast<float>(dx);
      vectors[i + 1] = static_cast<float>(dy);
    }
  }
  return FlowField(width, height, std::move(vectors));
}

LabelMask jitter_piecewise_affine(const LabelMask& mask, double magnitude, int frame,
                                  std::uint64_t seed, int grid_cells) {
  if (magnitude == 0.0) return mask;
  const int w = mask.width();
  const int h = mask.height();
  const FlowField field = jitter_field(w, h, magnitude, frame, seed, grid_cells);
  std::vector<Label> labels(mask.size(), 0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Vec2 d = field.at(x, y);
      const long sx = std::lround(x + d.x);
      const long sy = std::lround(y + d.y);
      if (sx < 0 || sy < 0 || sx >= w || sy >= h) continue;
      labels[static_cast<std::size_t>(y) * w + x] = mask.at(static_cast<int>(sx), static_cast<int>(sy));
    }
  }
  return LabelMask(w, h, mask.num_classes(), std::move(labels));
}

std::vector<LabelMask> corrupt_sequence(std::span<const LabelMask> masks, const CorruptionSpec& spec) {
  const Vec2 direction = random_direction(spec.seed);
  std::vector<LabelMask> out;
  out.reserve(masks.size());
  for (std::size_t t = 0; t < masks.size(); ++t) {
    const LabelMask eroded = erode_directional(masks[t], spec.erosion_px, direction);
    out.push_back(jitter_piecewise_affine(eroded, spec.jitter_mag, static_cast<int>(t), spec.seed,
                                          spec.grid_cells));
  }
  return out;
}

std::vector<QualificationClip> qualification_grid(std::span<const LabelMask> masks,
                                                  std::uint64_t seed, int grid_cells) {
  if (masks.empty()) throw DataError("qualification grid needs ground-truth masks");
  std::vector<QualificationClip> grid;
  for (std::size_t a = 0; a < kErosionLevels.size(); ++a) {
    for (std::size_t c = 0; c < kJitterLevels.size(); ++c) {
      QualificationClip clip;
      clip.erosion_px = kErosionLevels[a];
      clip.jitter_mag = kJitterLevels[c];
      clip.accuracy_rank = 3 - static_cast<int>(a);
      clip.consistency_rank = 3 - static_cast<int>(c);
      clip.masks = corrupt_sequence(
          masks, {.erosion_px = clip.erosion_px, .jitter_mag = clip.jitter_mag, .seed = seed,
                  .grid_cells = grid_cells});
      grid.push_back(std::move(clip));
    }
  }
  return grid;
}

}  // namespace segstab
