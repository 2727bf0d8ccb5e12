#include <gtest/gtest.h>

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <random>

#include "segstab/error.hpp"
#include "segstab/io.hpp"
#include "segstab/synth.hpp"
#include "testing.hpp"

namespace segstab {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const fs::path& p, const std::string& bytes) {
  std::ofstream(p, std::ios::binary) << bytes;
}

// Writes a PNG with arbitrary colour type and depth; rows are raw bytes.
void write_raw_png(const fs::path& path, int w, int h, int depth, int color,
                   const std::vector<unsigned char>& bytes, const std::vector<png_color>& palette = {}) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  ASSERT_NE(fp, nullptr);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, fp);
  png_set_IHDR(png, info, w, h, depth, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  if (!palette.empty()) png_set_PLTE(png, info, palette.data(), static_cast<int>(palette.size()));
  png_write_info(png, info);
  const std::size_t stride = bytes.size() / h;
  for (int y = 0; y < h; ++y) png_write_row(png, bytes.data() + y * stride);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

TEST(Flo, TwoByOneFileLayout) {
  TempDir dir("flo");
  const FlowField f(2, 1, {1.5f, -2.f, 0.25f, 8.f});
  io::write_flo(dir.path() / "a.flo", f);
  const std::string bytes = slurp(dir.path() / "a.flo");
  ASSERT_EQ(bytes.size(), 28u);
  float magic;
  std::int32_t w, h;
  std::memcpy(&magic, bytes.data(), 4);
  std::memcpy(&w, bytes.data() + 4, 4);
  std::memcpy(&h, bytes.data() + 8, 4);
  EXPECT_EQ(magic, 202021.25f);
  EXPECT_EQ(w, 2);
  EXPECT_EQ(h, 1);
  float third;
  std::memcpy(&third, bytes.data() + 20, 4);
  EXPECT_EQ(third, 0.25f);
  EXPECT_EQ(io::read_flo(dir.path() / "a.flo"), f);
}

TEST(Flo, MalformedInputs) {
  TempDir dir("flo_bad");
  io::write_flo(dir.path() / "ok.flo", FlowField(3, 2));
  std::string bytes = slurp(dir.path() / "ok.flo");

  std::string bad_magic = bytes;
  bad_magic[0] ^= 0x5a;
  spit(dir.path() / "magic.flo", bad_magic);
  EXPECT_THROW(io::read_flo(dir.path() / "magic.flo"), FormatError);

  spit(dir.path() / "short.flo", bytes.substr(0, bytes.size() - 4));
  EXPECT_THROW(io::read_flo(dir.path() / "short.flo"), FormatError);
  spit(dir.path() / "long.flo", bytes + "xxxx");
  EXPECT_THROW(io::read_flo(dir.path() / "long.flo"), FormatError);
  spit(dir.path() / "tiny.flo", bytes.substr(0, 6));
  EXPECT_THROW(io::read_flo(dir.path() / "tiny.flo"), FormatError);

  std::string negative = bytes;
  const std::int32_t minus = -3;
  std::memcpy(negative.data() + 4, &minus, 4);
  spit(dir.path() / "neg.flo", negative);
  EXPECT_THROW(io::read_flo(dir.path() / "neg.flo"), FormatError);
  EXPECT_THROW(io::read_flo(dir.path() / "missing.flo"), FormatError);
}

TEST(MaskPng, RoundTrip) {
  TempDir dir("mask");
  std::mt19937_64 rng(1);
  const LabelMask m = testing::random_mask(rng, 37, 23, 7);
  io::write_mask_png(dir.path() / "m.png", m);
  EXPECT_EQ(io::read_mask_png(dir.path() / "m.png", 7), m);
  EXPECT_THROW(io::write_mask_png(dir.path() / "big.png", LabelMask(2, 2, 300, {0, 1, 299, 2})), FormatError);
}

TEST(MaskPng, PalettedIndicesAreLabels) {
  TempDir dir("pal");
  const std::vector<png_color> palette{{0, 0, 0}, {255, 0, 0}, {0, 255, 0}};
  write_raw_png(dir.path() / "p.png", 3, 2, 8, PNG_COLOR_TYPE_PALETTE, {0, 1, 2, 2, 1, 0}, palette);
  const LabelMask m = io::read_mask_png(dir.path() / "p.png");
  EXPECT_EQ(m, LabelMask(3, 2, 3, {0, 1, 2, 2, 1, 0}));
}

TEST(MaskPng, RejectsRgbAndSixteenBit) {
  TempDir dir("reject");
  write_raw_png(dir.path() / "rgb.png", 2, 2, 8, PNG_COLOR_TYPE_RGB, std::vector<unsigned char>(12, 1));
  EXPECT_THROW(io::read_mask_png(dir.path() / "rgb.png"), FormatError);
  write_raw_png(dir.path() / "deep.png", 2, 2, 16, PNG_COLOR_TYPE_GRAY, std::vector<unsigned char>(8, 0));
  EXPECT_THROW(io::read_mask_png(dir.path() / "deep.png"), FormatError);
  spit(dir.path() / "junk.png", "\x89PNG\r\n\x1a\nnot really");
  EXPECT_THROW(io::read_mask_png(dir.path() / "junk.png"), FormatError);
  spit(dir.path() / "text.png", "hello");
  EXPECT_THROW(io::read_mask_png(dir.path() / "text.png"), FormatError);
}

TEST(MaskPng, LabelAboveClassCountRejected) {
  TempDir dir("classes");
  io::write_mask_png(dir.path() / "m.png", LabelMask(2, 1, 5, {0, 4}));
  EXPECT_THROW(io::read_mask_png(dir.path() / "m.png", 3), Error);
}

TEST(ImagePng, RoundTripQuantized) {
  TempDir dir("img");
  std::vector<float> px;
  for (int i = 0; i < 4 * 3 * 3; ++i) px.push_back((i * 7 % 256) / 255.f);
  const Image img(4, 3, 3, px);
  io::write_image_png(dir.path() / "i.png", img);
  const Image back = io::read_image_png(dir.path() / "i.png");
  ASSERT_EQ(back.channels(), 3);
  for (std::size_t i = 0; i < px.size(); ++i) EXPECT_FLOAT_EQ(back.data()[i], px[i]);
}

TEST(Volume, RoundTripAndHeader) {
  TempDir dir("smv");
  std::vector<float> v(2 * 3 * 4 * 5);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i) / v.size();
  const SoftMaskVolume vol(2, 3, 5, 4, v);
  io::write_volume(dir.path() / "v.smv", vol);
  const std::string bytes = slurp(dir.path() / "v.smv");
  EXPECT_EQ(bytes.substr(0, bytes.find('\n') + 1), "SMV1 2 3 4 5\n");
  EXPECT_EQ(io::read_volume(dir.path() / "v.smv"), vol);

  spit(dir.path() / "short.smv", bytes.substr(0, bytes.size() - 4));
  EXPECT_THROW(io::read_volume(dir.path() / "short.smv"), FormatError);
  spit(dir.path() / "hdr.smv", "SMV1 2 3 4\n" + bytes.substr(bytes.find('\n') + 1));
  EXPECT_THROW(io::read_volume(dir.path() / "hdr.smv"), FormatError);
  spit(dir.path() / "magic.smv", "SMV2" + bytes.substr(4));
  EXPECT_THROW(io::read_volume(dir.path() / "magic.smv"), FormatError);
  spit(dir.path() / "nonl.smv", "SMV1 2 3 4 5");
  EXPECT_THROW(io::read_volume(dir.path() / "nonl.smv"), FormatError);
}

TEST(SequenceDir, SaveLoadRoundTrip) {
  TempDir dir("seq");
  const auto scene = make_translating_scene({.size = 16, .velocity = {1, 2}, .frames = 4, .width = 40,
                                             .height = 36, .window = 2, .fps = 24});
  io::save_sequence(dir.path() / "s", scene.sequence);
  EXPECT_TRUE(fs::exists(dir.path() / "s" / "frames" / "00003.png"));
  EXPECT_TRUE(fs::exists(dir.path() / "s" / "flow" / "00001_00003.flo"));
  const VideoSequence back = io::load_sequence(dir.path() / "s");
  EXPECT_EQ(back.masks(), scene.sequence.masks());
  EXPECT_EQ(back.flows(), scene.sequence.flows());
  EXPECT_EQ(back.fps(), 24.0);
  EXPECT_EQ(back.num_classes(), 2);
  EXPECT_EQ(back.frames().size(), 4u);
}

TEST(SequenceDir, MissingPiecesAreDataErrors) {
  TempDir dir("seq_bad");
  EXPECT_THROW(io::load_sequence(dir.path() / "nope"), Error);
  const auto scene = make_translating_scene({.size = 8, .velocity = {1, 0}, .frames = 3, .width = 24, .height = 24});
  io::save_sequence(dir.path() / "s", scene.sequence);
  fs::remove(dir.path() / "s" / "flow" / "00002_00001.flo");
  EXPECT_THROW(io::load_sequence(dir.path() / "s"), Error);
}

TEST(Csv, RatingsAndMeasures) {
  TempDir dir("csv");
  spit(dir.path() / "r.csv",
       "video_id,worker_id,rating,accuracy_rank,consistency_rank\n"
       "v1,w1,4,,\n"
       "q,w1,2,1,3\n");
  const auto table = io::read_ratings_csv(dir.path() / "r.csv");
  ASSERT_EQ(table.size(), 2u);
  EXPECT_FALSE(table[0].is_qualification());
  EXPECT_EQ(table[1].consistency_rank, 3);
  EXPECT_EQ(table[1].rating, 2.0);

  spit(dir.path() / "m.csv", "video_id,e_cons,e_smooth\nv1,0.5,0.25\nv2,1e-3,2\n");
  const auto measures = io::read_measures_csv(dir.path() / "m.csv");
  EXPECT_EQ(measures.at("e_smooth").at("v2"), 2.0);
  EXPECT_EQ(measures.at("e_cons").at("v2"), 1e-3);

  spit(dir.path() / "bad.csv", "video_id,worker_id,rating\nv1,w1,seven\n");
  EXPECT_THROW(io::read_ratings_csv(dir.path() / "bad.csv"), Error);
  spit(dir.path() / "nohdr.csv", "video_id,rating\nv1,3\n");
  EXPECT_THROW(io::read_ratings_csv(dir.path() / "nohdr.csv"), Error);
}

TEST(Reports, JsonAndCsv) {
  const auto scene = make_translating_scene({.size = 10, .velocity = {1, 0}, .frames = 3, .width = 30, .height = 30});
  const auto report = measure(scene.sequence, {}, 0.15);
  const auto j = io::to_json(report);
  EXPECT_EQ(j.at("e_cons").get<double>(), 0.0);
  EXPECT_EQ(j.at("normalization").get<std::string>(), "boundary-median");
  const std::string csv = io::pairs_csv(report);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "i,j,forward,backward,e_pair");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3);
}

}  // namespace
}  // namespace segstab
