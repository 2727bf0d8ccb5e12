#pragma once

#include <map>
#include <string>

#include "segstab/types.hpp"

namespace segstab {

enum class Shape { Square, Disk, Star };

Shape parse_shape(const std::string& name);

/// Indicator of `shape` centred at (cx, cy) with extent `size` (side, diameter
/// or outer diameter), evaluated at pixel centre (x, y).
bool shape_contains(Shape shape, double size, double cx, double cy, double x, double y);

struct TranslatingSceneParams {
  Shape shape = Shape::Square;
  double size = 32.0;
  Vec2 velocity{3.0, 0.0};
  int frames = 8;
  int width = 128;
  int height = 128;
  int window = 3;  // flows are generated for every pair with |i - j| <= window
  double fps = 30.0;
};

struct SyntheticScene {
  VideoSequence sequence;
  /// Analytic validity per stored flow pair on the source grid (0 = occluded).
  std::map<FramePair, OcclusionMask> truth;
  /// Pixels of the far object hidden by the near object in the target frame
  /// (0 = hidden). Empty for single-object scenes.
  std::map<FramePair, OcclusionMask> far_hidden;
  /// Centre of each object per frame, for oracles.
  std::vector<std::vector<Vec2>> centers;
};

/// Textured scene panning by `velocity` per frame: background texture and the
/// object (class 1) translate together, so every flow is the constant
/// (j - i) * velocity and only pixels leaving the canvas are occluded.
/// Throws DataError when the object would leave the canvas.
SyntheticScene make_translating_scene(const TranslatingSceneParams& params);

/// Two objects on crossing horizontal paths over a static textured background:
/// a far square (class 1) moving right and a near disk (class 2) moving left
/// that fully covers the square at the crossing. Flows follow the visible
/// surface; `truth` marks every surface point not visible in the target frame.
SyntheticScene make_occlusion_scene(int frames, int window = 3, double fps = 30.0);

}  // namespace segstab
