#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

namespace segstab {

using Label = std::uint16_t;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Frame pixels in [0,1], row-major, channel-interleaved. 1 or 3 channels.
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels);
  Image(int width, int height, int channels, std::vector<float> data);

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  float at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  std::span<const float> data() const { return data_; }

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<float> data_;
};

/// Per-pixel class labels in [0, num_classes). Label 0 is background.
class LabelMask {
 public:
  LabelMask() = default;
  LabelMask(int width, int height, int num_classes);
  LabelMask(int width, int height, int num_classes, std::vector<Label> labels);

  int width() const { return width_; }
  int height() const { return height_; }
  int num_classes() const { return num_classes_; }
  std::size_t size() const { return labels_.size(); }
  Label at(int x, int y) const { return labels_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const Label> labels() const { return labels_; }

  friend bool operator==(const LabelMask&, const LabelMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int num_classes_ = 1;
  std::vector<Label> labels_;
};

/// Per-pixel displacement (dx, dy) in pixels, stored interleaved.
class FlowField {
 public:
  FlowField() = default;
  FlowField(int width, int height);
  FlowField(int width, int height, std::vector<float> vectors);
  static FlowField constant(int width, int height, Vec2 v);

  int width() const { return width_; }
  int height() const { return height_; }
  Vec2 at(int x, int y) const {
    const std::size_t i = 2 * (static_cast<std::size_t>(y) * width_ + x);
    return {vectors_[i], vectors_[i + 1]};
  }
  std::span<const float> vectors() const { return vectors_; }

  friend bool operator==(const FlowField&, const FlowField&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> vectors_;
};

/// 1 = correspondence valid, 0 = occluded or out of bounds.
class OcclusionMask {
 public:
  OcclusionMask() = default;
  OcclusionMask(int width, int height, std::uint8_t fill = 1);
  OcclusionMask(int width, int height, std::vector<std::uint8_t> valid);

  int width() const { return width_; }
  int height() const { return height_; }
  std::uint8_t at(int x, int y) const { return valid_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<const std::uint8_t> valid() const { return valid_; }
  std::size_t count_valid() const;

  friend bool operator==(const OcclusionMask&, const OcclusionMask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> valid_;
};

/// Per (frame, class, pixel) confidences in [0,1], ordered frame-major then
/// class then row then column.
class SoftMaskVolume {
 public:
  SoftMaskVolume() = default;
  SoftMaskVolume(int frames, int classes, int width, int height);
  SoftMaskVolume(int frames, int classes, int width, int height, std::vector<float> values);

  int frames() const { return frames_; }
  int classes() const { return classes_; }
  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t plane_size() const { return static_cast<std::size_t>(width_) * height_; }

  std::span<const float> plane(int frame, int cls) const;
  std::span<const float> values() const { return values_; }

  /// Class confidences sum to one at every pixel of every frame within `tolerance`.
  bool is_normalized(double tolerance = 1e-4) const;

  friend bool operator==(const SoftMaskVolume&, const SoftMaskVolume&) = default;

 private:
  int frames_ = 0;
  int classes_ = 0;
  int width_ = 0;
  int height_ = 0;
  std::vector<float> values_;
};

struct FramePair {
  int from = 0;
  int to = 0;
  friend auto operator<=>(const FramePair&, const FramePair&) = default;
};

using FlowMap = std::map<FramePair, FlowField>;

/// Frames, masks and pairwise flows of one clip. flows[{i, j}] maps frame i onto frame j.
class VideoSequence {
 public:
  VideoSequence() = default;
  VideoSequence(std::vector<Image> frames, std::vector<LabelMask> masks, FlowMap flows,
                double fps, int num_classes);

  int num_frames() const { return static_cast<int>(masks_.size()); }
  int width() const { return masks_.front().width(); }
  int height() const { return masks_.front().height(); }
  double fps() const { return fps_; }
  int num_classes() const { return num_classes_; }

  const std::vector<Image>& frames() const { return frames_; }
  const std::vector<LabelMask>& masks() const { return masks_; }
  const FlowMap& flows() const { return flows_; }
  const FlowField& flow(int from, int to) const;
  bool has_flow(int from, int to) const { return flows_.contains({from, to}); }

  /// Same frames and flows with the masks replaced.
  VideoSequence with_masks(std::vector<LabelMask> masks) const;

 private:
  std::vector<Image> frames_;
  std::vector<LabelMask> masks_;
  FlowMap flows_;
  double fps_ = 30.0;
  int num_classes_ = 2;
};

/// Single-frame volume holding the indicator plane of every class.
SoftMaskVolume one_hot(const LabelMask& mask);

/// One-hot encoding of a whole mask sequence.
SoftMaskVolume one_hot(std::span<const LabelMask> masks);

/// Per pixel, the smallest class index attaining the maximum confidence.
LabelMask argmax_merge(const SoftMaskVolume& volume, int frame);

}  // namespace segstab
