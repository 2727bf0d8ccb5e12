#include "segstab/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "segstab/error.hpp"

namespace segstab {

namespace {

void check_dims(int width, int height) {
  if (width <= 0 || height <= 0) {
    throw DimensionError("dimensions must be positive, got " + std::to_string(width) + "x" +
                         std::to_string(height));
  }
}

std::size_t pixel_count(int width, int height) {
  return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

}  // namespace

Image::Image(int width, int height, int channels)
    : Image(width, height, channels,
            std::vector<float>(pixel_count(std::max(width, 0), std::max(height, 0)) *
                               std::max(channels, 0))) {}

Image::Image(int width, int height, int channels, std::vector<float> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  check_dims(width, height);
  if (channels != 1 && channels != 3) {
    throw DataError("image must have 1 or 3 channels, got " + std::to_string(channels));
  }
  if (data_.size() != pixel_count(width, height) * channels) {
    throw DimensionError("image data length does not match width*height*channels");
  }
  for (float v : data_) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw DataError("image samples must be finite and in [0,1]");
    }
  }
}

LabelMask::LabelMask(int width, int height, int num_classes)
    : LabelMask(width, height, num_classes,
                std::vector<Label>(pixel_count(std::max(width, 0), std::max(height, 0)), 0)) {}

LabelMask::LabelMask(int width, int height, int num_classes, std::vector<Label> labels)
    : width_(width), height_(height), num_classes_(num_classes), labels_(std::move(labels)) {
  check_dims(width, height);
  if (num_classes < 1) throw DataError("num_classes must be at least 1");
  if (labels_.size() != pixel_count(width, height)) {
    throw DimensionError("label count does not match width*height");
  }
  for (Label l : labels_) {
    if (l >= num_classes) {
      throw DataError("label " + std::to_string(l) + " out of range for " +
                      std::to_string(num_classes) + " classes");
    }
  }
}

FlowField::FlowField(int width, int height)
    : FlowField(width, height,
                std::vector<float>(2 * pixel_count(std::max(width, 0), std::max(height, 0)))) {}

FlowField::FlowField(int width, int height, std::vector<float> vectors)
    : width_(width), height_(height), vectors_(std::move(vectors)) {
  check_dims(width, height);
  if (vectors_.size() != 2 * pixel_count(width, height)) {
    throw DimensionError("flow data length does not match 2*width*height");
  }
  for (float v : vectors_) {
    if (!std::isfinite(v)) throw DataError("flow components must be finite");
  }
}

FlowField FlowField::constant(int width, int height, Vec2 v) {
  std::vector<float> data(2 * pixel_count(width, height));
  for (std::size_t i = 0; i < data.size(); i += 2) {
    data[i] = static_cast<float>(v.x);
    data[i + 1] = static_cast<float>(v.y);
  }
  return FlowField(width, height, std::move(data));
}

OcclusionMask::OcclusionMask(int width, int height, std::uint8_t fill)
    : OcclusionMask(width, height,
                    std::vector<std::uint8_t>(pixel_count(std::max(width, 0), std::max(height, 0)),
                                              fill)) {}

OcclusionMask::OcclusionMask(int width, int height, std::vector<std::uint8_t> valid)
    : width_(width), height_(height), valid_(std::move(valid)) {
  check_dims(width, height);
  if (valid_.size() != pixel_count(width, height)) {
    throw DimensionError("occlusion mask length does not match width*height");
  }
  for (auto v : valid_) {
    if (v > 1) throw DataError("occlusion mask values must be 0 or 1");
  }
}

std::size_t OcclusionMask::count_valid() const {
  return static_cast<std::size_t>(std::count(valid_.begin(), valid_.end(), std::uint8_t{1}));
}

SoftMaskVolume::SoftMaskVolume(int frames, int classes, int width, int height)
    : SoftMaskVolume(frames, classes, width, height,
                     std::vector<float>(static_cast<std::size_t>(std::max(frames, 0)) *
                                        std::max(classes, 0) *
                                        pixel_count(std::max(width, 0), std::max(height, 0)))) {}

SoftMaskVolume::SoftMaskVolume(int frames, int classes, int width, int height,
                               std::vector<float> values)
    : frames_(frames), classes_(classes), width_(width), height_(height), values_(std::move(values)) {
  check_dims(width, height);
  if (frames < 1 || classes < 1) throw DimensionError("volume needs at least one frame and class");
  if (values_.size() != static_cast<std::size_t>(frames) * classes * pixel_count(width, height)) {
    throw DimensionError("volume data length does not match T*C*H*W");
  }
  for (float v : values_) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw DataError("volume confidences must be finite and in [0,1]");
    }
  }
}

std::span<const float> SoftMaskVolume::plane(int frame, int cls) const {
  const std::size_t n = plane_size();
  return std::span<const float>(values_).subspan(
      (static_cast<std::size_t>(frame) * classes_ + cls) * n, n);
}

bool SoftMaskVolume::is_normalized(double tolerance) const {
  const std::size_t n = plane_size();
  for (int t = 0; t < frames_; ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (int c = 0; c < classes_; ++c) sum += plane(t, c)[i];
      if (std::abs(sum - 1.0) > tolerance) return false;
    }
  }
  return true;
}

VideoSequence::VideoSequence(std::vector<Image> frames, std::vector<LabelMask> masks,
                             FlowMap flows, double fps, int num_classes)
    : frames_(std::move(frames)),
      masks_(std::move(masks)),
      flows_(std::move(flows)),
      fps_(fps),
      num_classes_(num_classes) {
  if (masks_.empty()) throw DataError("sequence must contain at least one frame");
  if (!frames_.empty() && frames_.size() != masks_.size()) {
    throw DataError("frame count and mask count differ");
  }
  if (!(fps_ > 0.0) || !std::isfinite(fps_)) throw DataError("fps must be positive");
  const int w = masks_.front().width();
  const int h = masks_.front().height();
  for (const auto& m : masks_) {
    if (m.width() != w || m.height() != h) throw DimensionError("masks differ in size");
    if (m.num_classes() > num_classes_) throw DataError("mask declares more classes than sequence");
  }
  for (const auto& f : frames_) {
    if (f.width() != w || f.height() != h) throw DimensionError("frames differ in size from masks");
    if (f.channels() != frames_.front().channels()) throw DataError("frames differ in channel count");
  }
  const int t = num_frames();
  for (const auto& [pair, field] : flows_) {
    if (pair.from < 0 || pair.from >= t || pair.to < 0 || pair.to >= t || pair.from == pair.to) {
      throw DataError("flow pair (" + std::to_string(pair.from) + ", " + std::to_string(pair.to) +
                      ") is not a valid frame pair");
    }
    if (field.width() != w || field.height() != h) throw DimensionError("flow differs in size");
    if (!flows_.contains({pair.to, pair.from})) {
      throw DataError("flow (" + std::to_string(pair.from) + ", " + std::to_string(pair.to) +
                      ") stored without its reverse");
    }
  }
}

const FlowField& VideoSequence::flow(int from, int to) const {
  auto it = flows_.find({from, to});
  if (it == flows_.end()) {
    throw DataError("missing flow " + std::to_string(from) + " -> " + std::to_string(to));
  }
  return it->second;
}

VideoSequence VideoSequence::with_masks(std::vector<LabelMask> masks) const {
  return VideoSequence(frames_, std::move(masks), flows_, fps_, num_classes_);
}

SoftMaskVolume one_hot(const LabelMask& mask) {
  return one_hot(std::span<const LabelMask>(&mask, 1));
}

SoftMaskVolume one_hot(std::span<const LabelMask> masks) {
  if (masks.empty()) throw DataError("cannot one-hot encode an empty mask list");
  const int w = masks.front().width();
  const int h = masks.front().height();
  int classes = 1;
  for (const auto& m : masks) {
    if (m.width() != w || m.height() != h) throw DimensionError("masks differ in size");
    classes = std::max(classes, m.num_classes());
  }
  const std::size_t n = pixel_count(w, h);
  std::vector<float> values(masks.size() * classes * n, 0.0f);
  for (std::size_t t = 0; t < masks.size(); ++t) {
    auto labels = masks[t].labels();
    for (std::size_t i = 0; i < n; ++i) {
      values[(t * classes + labels[i]) * n + i] = 1.0f;
    }
  }
  return SoftMaskVolume(static_cast<int>(masks.size()), classes, w, h, std::move(values));
}

LabelMask argmax_merge(const SoftMaskVolume& volume, int frame) {
  if (frame < 0 || frame >= volume.frames()) {
    throw DataError("frame " + std::to_string(frame) + " out of range");
  }
  const std::size_t n = volume.plane_size();
  std::vector<Label> labels(n, 0);
  std::vector<float> best(volume.plane(frame, 0).begin(), volume.plane(frame, 0).end());
  for (int c = 1; c < volume.classes(); ++c) {
    auto p = volume.plane(frame, c);
    for (std::size_t i = 0; i < n; ++i) {
      // strict comparison keeps the smallest index on ties
      if (p[i] > best[i]) {
        best[i] = p[i];
        labels[i] = static_cast<Label>(c);
      }
    }
  }
  return LabelMask(volume.width(), volume.height(), volume.classes(), std::move(labels));
}

}  // namespace segstab
