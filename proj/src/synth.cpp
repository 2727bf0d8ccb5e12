#include "segstab/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "segstab/error.hpp"

namespace segstab {

namespace {

// Checker plus gradient, evaluated in scene coordinates.
double background_texture(double x, double y) {
  const int cell = 8;
  const bool odd = (static_cast<long>(std::floor(x / cell)) + static_cast<long>(std::floor(y / cell))) & 1;
  const double grad = 0.25 * (0.5 + 0.5 * std::sin(0.05 * x + 0.03 * y));
  return 0.15 + (odd ? 0.2 : 0.0) + grad;
}

double object_texture(double u, double v, double base) {
  const bool odd = (static_cast<long>(std::floor(u / 4)) + static_cast<long>(std::floor(v / 4))) & 1;
  return base + (odd ? 0.08 : 0.0);
}

double star_radius(double angle, double outer) {
  constexpr int points = 5;
  const double inner = 0.5 * outer;
  const double sector = std::numbers::pi / points;
  double a = std::fmod(angle + std::numbers::pi / 2, 2 * sector);
  if (a < 0) a += 2 * sector;
  const double frac = a < sector ? a / sector : (2 * sector - a) / sector;
  // radial interpolation between tips and notches
  return outer + (inner - outer) * frac;
}

// Every shape fits inside its size x size bounding box.
void check_in_canvas(double size, Vec2 c, int w, int h) {
  const double r = size / 2.0;
  if (c.x - r < 0 || c.y - r < 0 || c.x + r > w || c.y + r > h) {
    throw DataError("shape leaves the canvas");
  }
}

std::vector<float> rgb(double v, double tint_r, double tint_b) {
  return {static_cast<float>(std::clamp(v * tint_r, 0.0, 1.0)), static_cast<float>(std::clamp(v, 0.0, 1.0)),
          static_cast<float>(std::clamp(v * tint_b, 0.0, 1.0))};
}

}  // namespace

Shape parse_shape(const std::string& name) {
  if (name == "square") return Shape::Square;
  if (name == "disk") return Shape::Disk;
  if (name == "star") return Shape::Star;
  throw DataError("unknown shape '" + name + "'");
}

bool shape_contains(Shape shape, double size, double cx, double cy, double x, double y) {
  const double dx = x - cx;
  const double dy = y - cy;
  const double half = size / 2.0;
  switch (shape) {
    case Shape::Square:
      return dx >= -half && dx < half && dy >= -half && dy < half;
    case Shape::Disk:
      return dx * dx + dy * dy < half * half;
    case Shape::Star: {
      const double r = std::hypot(dx, dy);
      if (r == 0.0) return true;
      return r < star_radius(std::atan2(dy, dx), half);
    }
  }
  return false;
}

SyntheticScene make_translating_scene(const TranslatingSceneParams& p) {
  if (p.frames < 1) throw DataError("scene needs at least one frame");
  if (p.window < 1) throw DataError("window must be at least 1");
  const int w = p.width;
  const int h = p.height;
  // centre the trajectory on the canvas
  const double mid = (p.frames - 1) / 2.0;
  const Vec2 start{std::floor(w / 2.0 - p.velocity.x * mid), std::floor(h / 2.0 - p.velocity.y * mid)};

  SyntheticScene scene;
  scene.centers.resize(1);
  std::vector<Image> frames;
  std::vector<LabelMask> masks;
  for (int t = 0; t < p.frames; ++t) {
    const Vec2 c{start.x + t * p.velocity.x, start.y + t * p.velocity.y};
    check_in_canvas(p.size, c, w, h);
    scene.centers[0].push_back(c);
    std::vector<float> pixels;
    pixels.reserve(static_cast<std::size_t>(w) * h * 3);
    std::vector<Label> labels(static_cast<std::size_t>(w) * h, 0);
    const Vec2 shift{t * p.velocity.x, t * p.velocity.y};
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const bool inside = shape_contains(p.shape, p.size, c.x, c.y, x + 0.5, y + 0.5);
        std::vector<float> px;
        if (inside) {
          labels[static_cast<std::size_t>(y) * w + x] = 1;
          px = rgb(object_texture(x - c.x, y - c.y, 0.7), 1.2, 0.6);
        } else {
          px = rgb(background_texture(x - shift.x, y - shift.y), 0.9, 1.1);
        }
        pixels.insert(pixels.end(), px.begin(), px.end());
      }
    }
    frames.emplace_back(w, h, 3, std::move(pixels));
    masks.emplace_back(w, h, 2, std::move(labels));
  }

  FlowMap flows;
  for (int i = 0; i < p.frames; ++i) {
    for (int j = std::max(0, i - p.window); j <= std::min(p.frames - 1, i + p.window); ++j) {
      if (i == j) continue;
      const Vec2 d{(j - i) * p.velocity.x, (j - i) * p.velocity.y};
      flows.emplace(FramePair{i, j}, FlowField::constant(w, h, d));
      std::vector<std::uint8_t> valid(static_cast<std::size_t>(w) * h, 0);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const double tx = x + d.x;
          const double ty = y + d.y;
          valid[static_cast<std::size_t>(y) * w + x] = (tx >= 0 && ty >= 0 && tx <= w - 1 && ty <= h - 1) ? 1 : 0;
        }
      }
      scene.truth.emplace(FramePair{i, j}, OcclusionMask(w, h, std::move(valid)));
    }
  }
  scene.sequence = VideoSequence(std::move(frames), std::move(masks), std::move(flows), p.fps, 2);
  return scene;
}

SyntheticScene make_occlusion_scene(int frames, int window, double fps) {
  if (frames < 2) throw DataError("occlusion scene needs at least two frames");
  if (window < 1) throw DataError("window must be at least 1");
  constexpr int speed = 4;
  constexpr double far_size = 24.0;   // square
  constexpr double near_size = 48.0;  // disk, covers the square at the crossing
  constexpr int margin = 8;
  const int travel = speed * (frames - 1);
  const int w = 2 * margin + static_cast<int>(near_size) + travel;
  const int h = 96;
  const double cy = h / 2.0;
  const double left = margin + near_size / 2.0;

  auto far_center = [&](int t) { return Vec2{left + speed * t, cy}; };
  auto near_center = [&](int t) { return Vec2{left + travel - speed * t, cy}; };
  auto far_velocity = Vec2{speed, 0};
  auto near_velocity = Vec2{-speed, 0};

  // 0 background, 1 far, 2 near: the visible surface label at a pixel
  auto surface = [&](int t, int x, int y) -> Label {
    const Vec2 n = near_center(t);
    if (shape_contains(Shape::Disk, near_size, n.x, n.y, x + 0.5, y + 0.5)) return 2;
    const Vec2 f = far_center(t);
    if (shape_contains(Shape::Square, far_size, f.x, f.y, x + 0.5, y + 0.5)) return 1;
    return 0;
  };
  auto label_at = [&](int t, int x, int y) -> Label {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0xffff;
    return surface(t, x, y);
  };

  SyntheticScene scene;
  scene.centers.resize(2);
  std::vector<Image> images;
  std::vector<LabelMask> masks;
  for (int t = 0; t < frames; ++t) {
    scene.centers[0].push_back(far_center(t));
    scene.centers[1].push_back(near_center(t));
    std::vector<float> pixels;
    pixels.reserve(static_cast<std::size_t>(w) * h * 3);
    std::vector<Label> labels(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const Label l = surface(t, x, y);
        labels[static_cast<std::size_t>(y) * w + x] = l;
        std::vector<float> px;
        if (l == 2) {
          const Vec2 c = near_center(t);
          px = rgb(object_texture(x - c.x, y - c.y, 0.8), 0.6, 1.2);
        } else if (l == 1) {
          const Vec2 c = far_center(t);
          px = rgb(object_texture(x - c.x, y - c.y, 0.55), 1.3, 0.7);
        } else {
          px = rgb(background_texture(x, y), 1.0, 1.0);
        }
        pixels.insert(pixels.end(), px.begin(), px.end());
      }
    }
    images.emplace_back(w, h, 3, std::move(pixels));
    masks.emplace_back(w, h, 3, std::move(labels));
  }

  FlowMap flows;
  for (int i = 0; i < frames; ++i) {
    for (int j = std::max(0, i - window); j <= std::min(frames - 1, i + window); ++j) {
      if (i == j) continue;
      const int dt = j - i;
      std::vector<float> vec(2 * static_cast<std::size_t>(w) * h);
      std::vector<std::uint8_t> valid(static_cast<std::size_t>(w) * h);
      std::vector<std::uint8_t> far_ok(static_cast<std::size_t>(w) * h, 1);
      for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
          const std::size_t k = static_cast<std::size_t>(y) * w + x;
          const Label l = masks[i].at(x, y);
          Vec2 v{0, 0};
          if (l == 1) v = far_velocity;
          if (l == 2) v = near_velocity;
          const int dx = static_cast<int>(dt * v.x);
          const int dy = static_cast<int>(dt * v.y);
          vec[2 * k] = static_cast<float>(dx);
          vec[2 * k + 1] = static_cast<float>(dy);
          // visible in the target iff the same surface shows at the destination
          const Label there = label_at(j, x + dx, y + dy);
          valid[k] = there == l ? 1 : 0;
          if (l == 1 && there == 2) far_ok[k] = 0;
        }
      }
      flows.emplace(FramePair{i, j}, FlowField(w, h, std::move(vec)));
      scene.truth.emplace(FramePair{i, j}, OcclusionMask(w, h, std::move(valid)));
      scene.far_hidden.emplace(FramePair{i, j}, OcclusionMask(w, h, std::move(far_ok)));
    }
  }
  scene.sequence = VideoSequence(std::move(images), std::move(masks), std::move(flows), fps, 3);
  return scene;
}

}  // namespace segstab
