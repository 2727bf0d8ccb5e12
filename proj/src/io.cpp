#include "segstab/io.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <regex>
#include <set>
#include <sstream>

#include "segstab/error.hpp"

namespace segstab::io {

namespace {

// ---------------------------------------------------------------- bytes

std::vector<unsigned char> read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

void write_all(const fs::path& path, std::span<const unsigned char> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("write failed for " + path.string());
}

std::uint32_t load_u32le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32le(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<unsigned char>(v >> (8 * k)));
}

float load_f32le(const unsigned char* p) { return std::bit_cast<float>(load_u32le(p)); }
void store_f32le(std::vector<unsigned char>& out, float v) { store_u32le(out, std::bit_cast<std::uint32_t>(v)); }

// ---------------------------------------------------------------- png

enum class PngMode { Labels, Pixels };

struct RawPng {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int channels = 0;
  std::vector<unsigned char> data;
  std::vector<png_bytep> rows;
  std::string error;
  char message[256] = {};
};

void png_fail(png_structp png, png_const_charp msg) {
  auto* raw = static_cast<RawPng*>(png_get_error_ptr(png));
  std::snprintf(raw->message, sizeof(raw->message), "%s", msg);
  png_longjmp(png, 1);
}

void png_warn(png_structp, png_const_charp) {}

// Only trivially destructible locals live here: libpng reports errors by longjmp.
bool decode_png(std::FILE* fp, PngMode mode, RawPng& out) {
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    out.error = "not a PNG file";
    return false;
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &out, png_fail, png_warn);
  if (!png) {
    out.error = "libpng initialisation failed";
    return false;
  }
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (out.error.empty()) out.error = out.message;
    return false;
  }
  png_init_io(png, fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);

  if (mode == PngMode::Labels) {
    if (depth > 8) {
      out.error = "unsupported bit depth " + std::to_string(depth) + " for a label mask";
      png_destroy_read_struct(&png, &info, nullptr);
      return false;
    }
    if (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_PALETTE) {
      out.error = "label masks must be grayscale or paletted";
      png_destroy_read_struct(&png, &info, nullptr);
      return false;
    }
    if (depth < 8) png_set_packing(png);
    out.channels = 1;
  } else {
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    out.channels = (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) ? 1 : 3;
  }
  png_read_update_info(png, info);
  if (png_get_rowbytes(png, info) != static_cast<std::size_t>(out.width) * out.channels) {
    out.error = "unexpected PNG row layout";
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  out.data.resize(static_cast<std::size_t>(out.width) * out.height * out.channels);
  out.rows.resize(out.height);
  for (png_uint_32 y = 0; y < out.height; ++y) {
    out.rows[y] = out.data.data() + static_cast<std::size_t>(y) * out.width * out.channels;
  }
  png_read_image(png, out.rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

struct EncodeJob {
  png_uint_32 width = 0;
  png_uint_32 height = 0;
  int color_type = PNG_COLOR_TYPE_GRAY;
  int channels = 1;
  const unsigned char* data = nullptr;
  std::vector<png_bytep> rows;
  char message[256] = {};
};

void png_write_fail(png_structp png, png_const_charp msg) {
  auto* job = static_cast<EncodeJob*>(png_get_error_ptr(png));
  std::snprintf(job->message, sizeof(job->message), "%s", msg);
  png_longjmp(png, 1);
}

bool encode_png(std::FILE* fp, EncodeJob& job) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &job, png_write_fail, png_warn);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, job.width, job.height, 8, job.color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, job.rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

using FilePtr = std::unique_ptr<std::FILE, int (*)(std::FILE*)>;

FilePtr open_file(const fs::path& path, const char* mode) {
  FilePtr fp(std::fopen(path.c_str(), mode), &std::fclose);
  if (!fp) throw FormatError(std::string("cannot open ") + path.string());
  return fp;
}

RawPng decode_file(const fs::path& path, PngMode mode) {
  auto fp = open_file(path, "rb");
  RawPng raw;
  if (!decode_png(fp.get(), mode, raw)) throw FormatError(path.string() + ": " + raw.error);
  return raw;
}

void encode_file(const fs::path& path, png_uint_32 w, png_uint_32 h, int channels,
                 const std::vector<unsigned char>& data) {
  EncodeJob job;
  job.width = w;
  job.height = h;
  job.channels = channels;
  job.color_type = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  job.rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) {
    job.rows[y] = const_cast<unsigned char*>(data.data()) + static_cast<std::size_t>(y) * w * channels;
  }
  auto fp = open_file(path, "wb");
  if (!encode_png(fp.get(), job)) throw FormatError(path.string() + ": " + job.message);
}

// ---------------------------------------------------------------- csv

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    rows.push_back(split_csv(line));
  }
  if (rows.empty()) throw FormatError(path.string() + ": empty CSV");
  return rows;
}

double parse_number(const std::string& s, const fs::path& path) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw FormatError(path.string() + ": not a number: '" + s + "'");
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------- flo

FlowField read_flo(const fs::path& path) {
  const auto bytes = read_all(path);
  if (bytes.size() < 12) throw FormatError(path.string() + ": truncated .flo header");
  if (load_f32le(bytes.data()) != kFloMagic) throw FormatError(path.string() + ": bad .flo magic");
  const auto w = static_cast<std::int32_t>(load_u32le(bytes.data() + 4));
  const auto h = static_cast<std::int32_t>(load_u32le(bytes.data() + 8));
  if (w <= 0 || h <= 0 || w > (1 << 16) || h > (1 << 16)) {
    throw FormatError(path.string() + ": implausible .flo dimensions");
  }
  const std::size_t count = 2 * static_cast<std::size_t>(w) * h;
  if (bytes.size() != 12 + 4 * count) {
    throw FormatError(path.string() + ": .flo payload size does not match header");
  }
  std::vector<float> vectors(count);
  for (std::size_t i = 0; i < count; ++i) {
    vectors[i] = load_f32le(bytes.data() + 12 + 4 * i);
    if (!std::isfinite(vectors[i])) throw FormatError(path.string() + ": non-finite flow value");
  }
  return FlowField(w, h, std::move(vectors));
}

void write_flo(const fs::path& path, const FlowField& flow) {
  std::vector<unsigned char> bytes;
  bytes.reserve(12 + 4 * flow.vectors().size());
  store_f32le(bytes, kFloMagic);
  store_u32le(bytes, static_cast<std::uint32_t>(flow.width()));
  store_u32le(bytes, static_cast<std::uint32_t>(flow.height()));
  for (float v : flow.vectors()) store_f32le(bytes, v);
  write_all(path, bytes);
}

// ---------------------------------------------------------------- png

LabelMask read_mask_png(const fs::path& path, std::optional<int> num_classes) {
  const RawPng raw = decode_file(path, PngMode::Labels);
  std::vector<Label> labels(raw.data.begin(), raw.data.end());
  const int max_label = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
  const int classes = num_classes.value_or(max_label + 1);
  if (max_label >= classes) {
    throw FormatError(path.string() + ": label " + std::to_string(max_label) + " exceeds " +
                      std::to_string(classes) + " classes");
  }
  return LabelMask(static_cast<int>(raw.width), static_cast<int>(raw.height), classes, std::move(labels));
}

void write_mask_png(const fs::path& path, const LabelMask& mask) {
  std::vector<unsigned char> data(mask.size());
  auto labels = mask.labels();
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (labels[i] > 255) throw FormatError("mask PNG supports at most 256 classes");
    data[i] = static_cast<unsigned char>(labels[i]);
  }
  encode_file(path, mask.width(), mask.height(), 1, data);
}

Image read_image_png(const fs::path& path) {
  const RawPng raw = decode_file(path, PngMode::Pixels);
  std::vector<float> data(raw.data.size());
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<float>(raw.data[i] / 255.0);
  return Image(static_cast<int>(raw.width), static_cast<int>(raw.height), raw.channels, std::move(data));
}

void write_image_png(const fs::path& path, const Image& image) {
  std::vector<unsigned char> data(image.data().size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = static_cast<unsigned char>(std::lround(std::clamp(image.data()[i], 0.0f, 1.0f) * 255.0f));
  }
  encode_file(path, image.width(), image.height(), image.channels(), data);
}

// ---------------------------------------------------------------- volume

SoftMaskVolume read_volume(const fs::path& path) {
  const auto bytes = read_all(path);
  const auto limit = bytes.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(bytes.size(), 128));
  const auto newline = std::find(bytes.begin(), limit, '\n');
  if (newline == limit) throw FormatError(path.string() + ": missing SMV header line");
  const std::string header(bytes.begin(), newline);
  std::istringstream in(header);
  std::string magic;
  long long t = 0, c = 0, h = 0, w = 0;
  std::string rest;
  if (!(in >> magic >> t >> c >> h >> w) || magic != "SMV1" || (in >> rest)) {
    throw FormatError(path.string() + ": malformed SMV header '" + header + "'");
  }
  if (t < 1 || c < 1 || h < 1 || w < 1 || t * c * h * w > (1ll << 32)) {
    throw FormatError(path.string() + ": implausible SMV dimensions");
  }
  const std::size_t offset = static_cast<std::size_t>(newline - bytes.begin()) + 1;
  const std::size_t count = static_cast<std::size_t>(t * c * h * w);
  if (bytes.size() - offset != 4 * count) {
    throw FormatError(path.string() + ": SMV payload length does not match header");
  }
  std::vector<float> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = load_f32le(bytes.data() + offset + 4 * i);
    if (std::isnan(values[i])) throw FormatError(path.string() + ": NaN in SMV payload");
    if (!(values[i] >= 0.0f && values[i] <= 1.0f)) {
      throw FormatError(path.string() + ": SMV value outside [0,1]");
    }
  }
  return SoftMaskVolume(static_cast<int>(t), static_cast<int>(c), static_cast<int>(w),
                        static_cast<int>(h), std::move(values));
}

void write_volume(const fs::path& path, const SoftMaskVolume& volume) {
  const std::string header = "SMV1 " + std::to_string(volume.frames()) + " " +
                             std::to_string(volume.classes()) + " " + std::to_string(volume.height()) +
                             " " + std::to_string(volume.width()) + "\n";
  std::vector<unsigned char> bytes(header.begin(), header.end());
  bytes.reserve(bytes.size() + 4 * volume.values().size());
  for (float v : volume.values()) store_f32le(bytes, v);
  write_all(path, bytes);
}

// ---------------------------------------------------------------- layout

std::string frame_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05d.png", index);
  return buf;
}

std::string flow_name(int from, int to) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%05d_%05d.flo", from, to);
  return buf;
}

SequenceMeta read_meta(const fs::path& dir) {
  const fs::path path = dir / "meta.json";
  std::ifstream in(path);
  if (!in) throw FormatError("missing " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    SequenceMeta meta;
    meta.fps = j.at("fps").get<double>();
    meta.num_classes = j.at("num_classes").get<int>();
    if (!(meta.fps > 0) || meta.num_classes < 1) throw FormatError(path.string() + ": invalid fps or num_classes");
    return meta;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_meta(const fs::path& dir, const SequenceMeta& meta) {
  nlohmann::ordered_json j;
  j["fps"] = meta.fps;
  j["num_classes"] = meta.num_classes;
  write_text(dir / "meta.json", j.dump(2) + "\n");
}

namespace {

// Sorted indices of files named %05d<suffix>, required to be 0..n-1.
std::vector<fs::path> indexed_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw FormatError("missing directory " + dir.string());
  static const std::regex pattern(R"(\d{5}\.png)");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, pattern)) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (std::size_t i = 0; i < files.size(); ++i) {
    if (files[i].filename().string() != frame_name(static_cast<int>(i))) {
      throw FormatError(dir.string() + ": frame files are not numbered contiguously from 00000");
    }
  }
  if (files.empty()) throw FormatError(dir.string() + ": no %05d.png files");
  return files;
}

}  // namespace

std::vector<LabelMask> load_masks(const fs::path& dir, std::optional<int> num_classes) {
  std::vector<LabelMask> masks;
  for (const auto& f : indexed_files(dir / "masks")) masks.push_back(read_mask_png(f, num_classes));
  return masks;
}

void save_masks(const fs::path& dir, std::span<const LabelMask> masks) {
  fs::create_directories(dir / "masks");
  for (std::size_t t = 0; t < masks.size(); ++t) {
    write_mask_png(dir / "masks" / frame_name(static_cast<int>(t)), masks[t]);
  }
}

VideoSequence load_sequence(const fs::path& dir) {
  const SequenceMeta meta = read_meta(dir);
  auto masks = load_masks(dir, meta.num_classes);
  std::vector<Image> frames;
  if (fs::exists(dir / "frames")) {
    for (const auto& f : indexed_files(dir / "frames")) frames.push_back(read_image_png(f));
  }
  FlowMap flows;
  if (fs::exists(dir / "flow")) {
    static const std::regex pattern(R"((\d{5})_(\d{5})\.flo)");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir / "flow")) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      std::smatch m;
      const std::string name = f.filename().string();
      if (!std::regex_match(name, m, pattern)) continue;
      flows.emplace(FramePair{std::stoi(m[1]), std::stoi(m[2])}, read_flo(f));
    }
  }
  try {
    return VideoSequence(std::move(frames), std::move(masks), std::move(flows), meta.fps, meta.num_classes);
  } catch (const Error& e) {
    throw FormatError(dir.string() + ": " + e.what());
  }
}

void save_sequence(const fs::path& dir, const VideoSequence& seq) {
  fs::create_directories(dir);
  if (!seq.frames().empty()) {
    fs::create_directories(dir / "frames");
    for (int t = 0; t < seq.num_frames(); ++t) {
      write_image_png(dir / "frames" / frame_name(t), seq.frames()[t]);
    }
  }
  save_masks(dir, seq.masks());
  if (!seq.flows().empty()) {
    fs::create_directories(dir / "flow");
    for (const auto& [pair, field] : seq.flows()) write_flo(dir / "flow" / flow_name(pair.from, pair.to), field);
  }
  write_meta(dir, {seq.fps(), seq.num_classes()});
}

// ---------------------------------------------------------------- reports

nlohmann::ordered_json to_json(const MeasureReport& report) {
  nlohmann::ordered_json j;
  j["e_cons"] = report.e_cons;
  j["e_smooth"] = report.e_smooth ? nlohmann::ordered_json(*report.e_smooth) : nlohmann::ordered_json();
  j["normalization"] = to_string(report.normalization);
  j["normalizer"] = report.normalizer;
  j["window"] = report.window;
  j["pair_count"] = report.pairs.size();
  j["pair_mean"] = report.pair_mean;
  j["n_bd_median"] = report.n_bd_median;
  j["n_nbg_total"] = report.n_nbg_total;
  j["empty_terms"] = report.empty_terms;
  auto& pairs = j["pairs"] = nlohmann::ordered_json::array();
  for (const auto& p : report.pairs) {
    pairs.push_back({{"i", p.i}, {"j", p.j}, {"forward", p.forward}, {"backward", p.backward},
                     {"e_pair", p.value()}});
  }
  return j;
}

std::string pairs_csv(const MeasureReport& report) {
  std::string out = "i,j,forward,backward,e_pair\n";
  for (const auto& p : report.pairs) {
    out += std::to_string(p.i) + "," + std::to_string(p.j) + "," + format_double(p.forward) + "," +
           format_double(p.backward) + "," + format_double(p.value()) + "\n";
  }
  return out;
}

RatingsTable read_ratings_csv(const fs::path& path) {
  const auto rows = read_csv(path);
  const auto& header = rows.front();
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* required : {"video_id", "worker_id", "rating"}) {
    if (!col.contains(required)) throw FormatError(path.string() + ": missing column " + required);
  }
  const bool has_ranks = col.contains("accuracy_rank") && col.contains("consistency_rank");
  RatingsTable table;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r];
    auto cell = [&](const std::string& name) -> std::string {
      const std::size_t i = col.at(name);
      return i < cells.size() ? cells[i] : std::string();
    };
    Rating rating;
    rating.video_id = cell("video_id");
    rating.worker_id = cell("worker_id");
    rating.rating = parse_number(cell("rating"), path);
    if (has_ranks && !cell("accuracy_rank").empty()) {
      rating.accuracy_rank = static_cast<int>(parse_number(cell("accuracy_rank"), path));
      rating.consistency_rank = static_cast<int>(parse_number(cell("consistency_rank"), path));
    }
    if (rating.video_id.empty() || rating.worker_id.empty()) {
      throw FormatError(path.string() + ": empty id on row " + std::to_string(r + 1));
    }
    table.push_back(std::move(rating));
  }
  try {
    validate(table);
  } catch (const DataError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return table;
}

MeasureTable read_measures_csv(const fs::path& path) {
  const auto rows = read_csv(path);
  const auto& header = rows.front();
  if (header.empty() || header.front() != "video_id" || header.size() < 2) {
    throw FormatError(path.string() + ": header must be video_id,<measure>...");
  }
  MeasureTable table;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) {
      throw FormatError(path.string() + ": row " + std::to_string(r + 1) + " has the wrong column count");
    }
    for (std::size_t c = 1; c < header.size(); ++c) {
      table[header[c]][rows[r][0]] = parse_number(rows[r][c], path);
    }
  }
  return table;
}

nlohmann::ordered_json to_json(const StudyReport& report) {
  auto corr = [](const Correlation& c) {
    return nlohmann::ordered_json{{"rho", c.rho}, {"p_value", c.p_value}, {"n", c.n}};
  };
  nlohmann::ordered_json j;
  j["agreement_cutoff"] =
      std::isinf(report.cutoff) ? nlohmann::ordered_json() : nlohmann::ordered_json(report.cutoff);
  auto& corrs = j["correlations"] = nlohmann::ordered_json::array();
  for (const auto& c : report.correlations) {
    corrs.push_back({{"measure", c.measure}, {"unfiltered", corr(c.all)}, {"filtered", corr(c.filtered)}});
  }
  auto& videos = j["videos"] = nlohmann::ordered_json::array();
  for (const auto& v : report.videos) {
    videos.push_back({{"video_id", v.video_id}, {"ratings", v.ratings}, {"mean", v.mean}, {"stddev", v.stddev}});
  }
  j["unrated_videos"] = report.unrated_videos;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  write_all(path, std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
}

}  // namespace segstab::io
