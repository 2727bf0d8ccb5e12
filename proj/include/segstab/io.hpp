#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"

#include "segstab/measures.hpp"
#include "segstab/stats.hpp"
#include "segstab/types.hpp"

namespace segstab::io {

namespace fs = std::filesystem;

/// Middlebury .flo magic number.
inline constexpr float kFloMagic = 202021.25f;

// Middlebury .flo: float magic, int32 width, int32 height, then (dx, dy)
// float pairs row-major; everything little-endian.
FlowField read_flo(const fs::path& path);
void write_flo(const fs::path& path, const FlowField& flow);

/// 8-bit grayscale or paletted PNG, pixel value = label. `num_classes` defaults
/// to max label + 1.
LabelMask read_mask_png(const fs::path& path, std::optional<int> num_classes = std::nullopt);
/// Writes an 8-bit grayscale PNG; labels above 255 are rejected.
void write_mask_png(const fs::path& path, const LabelMask& mask);

/// 8-bit gray or RGB(A) PNG scaled to [0,1]; alpha is dropped.
Image read_image_png(const fs::path& path);
/// Quantizes to 8 bits per channel.
void write_image_png(const fs::path& path, const Image& image);

// "SMV1 T C H W\n" followed by T*C*H*W little-endian float32 in
// (frame, class, row, col) order.
SoftMaskVolume read_volume(const fs::path& path);
void write_volume(const fs::path& path, const SoftMaskVolume& volume);

/// Contents of <seq>/meta.json.
struct SequenceMeta {
  double fps = 30.0;
  int num_classes = 2;
};

std::string frame_name(int index);                 // 00007.png
std::string flow_name(int from, int to);           // 00001_00003.flo

/// Reads <dir>/frames/%05d.png (optional), <dir>/masks/%05d.png,
/// <dir>/flow/%05d_%05d.flo and <dir>/meta.json.
VideoSequence load_sequence(const fs::path& dir);
void save_sequence(const fs::path& dir, const VideoSequence& seq);
SequenceMeta read_meta(const fs::path& dir);
void write_meta(const fs::path& dir, const SequenceMeta& meta);
/// Masks of <dir>/masks in index order.
std::vector<LabelMask> load_masks(const fs::path& dir, std::optional<int> num_classes = std::nullopt);
void save_masks(const fs::path& dir, std::span<const LabelMask> masks);

nlohmann::ordered_json to_json(const MeasureReport& report);
/// "i,j,forward,backward,e_pair" header plus one row per pair.
std::string pairs_csv(const MeasureReport& report);

/// `video_id,worker_id,rating[,accuracy_rank,consistency_rank]` with a header row.
RatingsTable read_ratings_csv(const fs::path& path);
/// `video_id,<measure>,<measure>...` with a header row naming the measures.
MeasureTable read_measures_csv(const fs::path& path);

nlohmann::ordered_json to_json(const StudyReport& report);

/// Writes `text` to `path` atomically enough for a batch tool (truncate + write).
void write_text(const fs::path& path, const std::string& text);

}  // namespace segstab::io
