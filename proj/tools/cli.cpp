#include "cli.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>

#include "CLI11.hpp"
#include "segstab/corruption.hpp"
#include "segstab/error.hpp"
#include "segstab/io.hpp"
#include "segstab/measures.hpp"
#include "segstab/postprocess.hpp"
#include "segstab/stats.hpp"
#include "segstab/synth.hpp"

namespace segstab::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

void emit(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    io::write_text(path, text);
  }
}

// ---------------------------------------------------------------- measure

struct MeasureArgs {
  std::string seq;
  int window = 3;
  std::string norm = "boundary-median";
  double sigma_sec = 0.15;
  double alpha = 0.01;
  double beta = 0.5;
  bool literal_dcat = false;
  std::string out;
  std::string csv;
};

void run_measure(const MeasureArgs& a, std::ostream& out, std::ostream& err) {
  const VideoSequence seq = io::load_sequence(a.seq);
  ConsistencyConfig cfg;
  cfg.window = a.window;
  cfg.normalization = parse_normalization(a.norm);
  cfg.occlusion = {a.alpha, a.beta};
  cfg.literal_dcat = a.literal_dcat;
  MeasureReport report = e_cons(seq, cfg);
  if (seq.num_frames() >= 2) report.e_smooth = e_smooth(seq, a.sigma_sec);
  if (report.empty_terms > 0) {
    err << "warning: " << report.empty_terms << " pair term(s) had no non-occluded pixel and count as 0\n";
  }
  emit(a.out, io::to_json(report).dump(2) + "\n", out);
  if (!a.csv.empty()) io::write_text(a.csv, io::pairs_csv(report));
}

// ---------------------------------------------------------------- postprocess

struct PostArgs {
  std::string volume;
  std::string seq;
  std::string out;
  std::string masks_out;
  WgfConfig wgf;
  double sigma = 1.0;
};

SoftMaskVolume input_volume(const PostArgs& a, const VideoSequence* seq) {
  if (!a.volume.empty()) return io::read_volume(a.volume);
  if (!seq) throw DataError("either --volume or --seq is required");
  return one_hot(seq->masks());
}

void write_post_outputs(const PostArgs& a, const SoftMaskVolume& result) {
  if (!a.out.empty()) io::write_volume(a.out, result);
  if (!a.masks_out.empty()) {
    std::vector<LabelMask> masks;
    for (int t = 0; t < result.frames(); ++t) masks.push_back(argmax_merge(result, t));
    io::save_masks(a.masks_out, masks);
  }
  if (a.out.empty() && a.masks_out.empty()) throw DataError("nothing to write: give --out and/or --masks-out");
}

void run_wgf(const PostArgs& a, std::ostream& err) {
  if (a.seq.empty()) throw DataError("wgf needs --seq for the guide frames");
  const VideoSequence seq = io::load_sequence(a.seq);
  if (seq.frames().empty()) throw DataError(a.seq + " has no frames/ directory for the guide");
  const SoftMaskVolume volume = input_volume(a, &seq);
  if (!volume.is_normalized()) err << "warning: input confidences do not sum to 1 per pixel\n";
  write_post_outputs(a, wgf_3d(seq.frames(), volume, a.wgf));
}

void run_gauss(const PostArgs& a) {
  std::optional<VideoSequence> seq;
  if (!a.seq.empty()) seq = io::load_sequence(a.seq);
  const SoftMaskVolume volume = input_volume(a, seq ? &*seq : nullptr);
  write_post_outputs(a, temporal_gaussian_smooth(volume, a.sigma));
}

// ---------------------------------------------------------------- corrupt

struct CorruptArgs {
  std::string seq;
  std::string out;
  std::uint64_t seed = 0;
  int grid_cells = 32;
  std::optional<int> erosion;
  std::optional<double> jitter;
};

void copy_sequence_inputs(const fs::path& src, const fs::path& dst) {
  fs::create_directories(dst);
  for (const char* sub : {"frames", "flow"}) {
    if (!fs::exists(src / sub)) continue;
    fs::create_directories(dst / sub);
    for (const auto& entry : fs::directory_iterator(src / sub)) {
      fs::copy_file(entry.path(), dst / sub / entry.path().filename(), fs::copy_options::overwrite_existing);
    }
  }
  fs::copy_file(src / "meta.json", dst / "meta.json", fs::copy_options::overwrite_existing);
}

void run_corrupt(const CorruptArgs& a) {
  const VideoSequence seq = io::load_sequence(a.seq);
  const fs::path out = a.out;
  json manifest;
  manifest["source"] = a.seq;
  manifest["seed"] = a.seed;
  manifest["grid_cells"] = a.grid_cells;
  manifest["erosion_direction"] = {random_direction(a.seed).x, random_direction(a.seed).y};
  auto& clips = manifest["clips"] = json::array();

  if (a.erosion || a.jitter) {
    const CorruptionSpec spec{a.erosion.value_or(0), a.jitter.value_or(0.0), a.seed, a.grid_cells};
    copy_sequence_inputs(a.seq, out);
    io::save_masks(out, corrupt_sequence(seq.masks(), spec));
    clips.push_back({{"dir", "."}, {"erosion_px", spec.erosion_px}, {"jitter_mag", spec.jitter_mag}});
  } else {
    for (const auto& clip : qualification_grid(seq.masks(), a.seed, a.grid_cells)) {
      const std::string name =
          "a" + std::to_string(clip.accuracy_rank) + "_c" + std::to_string(clip.consistency_rank);
      copy_sequence_inputs(a.seq, out / name);
      io::save_masks(out / name, clip.masks);
      clips.push_back({{"dir", name},
                       {"erosion_px", clip.erosion_px},
                       {"jitter_mag", clip.jitter_mag},
                       {"accuracy_rank", clip.accuracy_rank},
                       {"consistency_rank", clip.consistency_rank}});
    }
  }
  io::write_text(out / "manifest.json", manifest.dump(2) + "\n");
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string scene = "translating";
  std::string shape = "square";
  double size = 32;
  double vx = 3;
  double vy = 0;
  int frames = 8;
  int width = 128;
  int height = 128;
  int window = 3;
  double fps = 30;
  std::string out;
};

void run_synth(const SynthArgs& a) {
  SyntheticScene scene;
  if (a.scene == "translating") {
    scene = make_translating_scene({.shape = parse_shape(a.shape),
                                    .size = a.size,
                                    .velocity = {a.vx, a.vy},
                                    .frames = a.frames,
                                    .width = a.width,
                                    .height = a.height,
                                    .window = a.window,
                                    .fps = a.fps});
  } else {
    scene = make_occlusion_scene(a.frames, a.window, a.fps);
  }
  io::save_sequence(a.out, scene.sequence);
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::string pred;
  std::string gt;
  std::vector<int> classes;
  std::string out;
};

void run_eval(const EvalArgs& a, std::ostream& out) {
  const auto pred = io::load_masks(a.pred);
  const auto gt = io::load_masks(a.gt);
  if (pred.size() != gt.size()) throw DataError("prediction and ground truth differ in frame count");
  std::vector<int> classes = a.classes;
  if (classes.empty()) {
    int max_class = 0;
    for (const auto& m : gt) max_class = std::max(max_class, m.num_classes() - 1);
    for (int c = 1; c <= max_class; ++c) classes.push_back(c);
  }
  json report;
  report["frames"] = pred.size();
  auto& per_class = report["classes"] = json::array();
  for (int c : classes) {
    json iou_frames = json::array();
    json recall_frames = json::array();
    double iou_sum = 0.0, recall_sum = 0.0;
    for (std::size_t t = 0; t < pred.size(); ++t) {
      const double i = iou(pred[t], gt[t], c);
      const double r = recall(pred[t], gt[t], c);
      iou_sum += i;
      recall_sum += r;
      iou_frames.push_back(i);
      recall_frames.push_back(r);
    }
    const double n = static_cast<double>(pred.size());
    per_class.push_back({{"class", c},
                         {"mean_iou", iou_sum / n},
                         {"mean_recall", recall_sum / n},
                         {"iou", iou_frames},
                         {"recall", recall_frames}});
  }
  emit(a.out, report.dump(2) + "\n", out);
}

// ---------------------------------------------------------------- study

struct StudyArgs {
  std::string ratings;
  std::string measures;
  double cutoff = std::numeric_limits<double>::infinity();
  std::size_t min_clips = 3;
  bool no_filter = false;
  std::string out;
};

void run_study(const StudyArgs& a, std::ostream& out) {
  const RatingsTable table = io::read_ratings_csv(a.ratings);
  const MeasureTable measures = io::read_measures_csv(a.measures);
  const bool has_qualification =
      std::any_of(table.begin(), table.end(), [](const Rating& r) { return r.is_qualification(); });
  json workers = json::array();
  std::set<std::string> qualified;
  const bool filter = has_qualification && !a.no_filter;
  if (filter) {
    for (const auto& s : score_workers(table, a.min_clips)) {
      auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(); };
      workers.push_back({{"worker_id", s.worker_id},
                         {"clips", s.clips},
                         {"rho_consistency", opt(s.rho_consistency)},
                         {"rho_accuracy", opt(s.rho_accuracy)},
                         {"kept", s.kept}});
      if (s.kept) qualified.insert(s.worker_id);
    }
  }
  const StudyReport report = aggregate_and_correlate(table, measures, a.cutoff, filter ? &qualified : nullptr);
  json j;
  j["worker_filtering"] = filter;
  j["qualified_workers"] = qualified.size();
  j["workers"] = workers;
  const json body = io::to_json(report);
  for (const auto& [k, v] : body.items()) j[k] = v;
  emit(a.out, j.dump(2) + "\n", out);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Temporal stability tooling for video segmentation masks", "segstab"};
  app.require_subcommand(1);

  MeasureArgs measure_args;
  auto* measure = app.add_subcommand("measure", "Consistency and smoothness of a sequence directory");
  measure->add_option("seq,--seq", measure_args.seq, "Sequence directory")->required();
  measure->add_option("--K", measure_args.window, "Temporal window K")->check(CLI::PositiveNumber);
  measure->add_option("--norm", measure_args.norm, "none | sqrt-nbg | boundary-median")
      ->check(CLI::IsMember({"none", "sqrt-nbg", "boundary-median"}));
  measure->add_option("--sigma-sec", measure_args.sigma_sec, "Smoothness blur sigma in seconds")
      ->check(CLI::PositiveNumber);
  measure->add_option("--alpha", measure_args.alpha, "Occlusion test alpha")->check(CLI::NonNegativeNumber);
  measure->add_option("--beta", measure_args.beta, "Occlusion test beta")->check(CLI::NonNegativeNumber);
  measure->add_flag("--literal-dcat", measure_args.literal_dcat, "Count label agreement instead of disagreement");
  measure->add_option("--out", measure_args.out, "Report JSON path (default stdout)");
  measure->add_option("--csv", measure_args.csv, "Per-pair CSV path");

  PostArgs post_args;
  auto* post = app.add_subcommand("postprocess", "Temporal stabilisation of soft masks");
  post->require_subcommand(1);
  auto add_io = [&](CLI::App* cmd) {
    cmd->add_option("--volume", post_args.volume, "Input SMV volume (default: one-hot of --seq masks)");
    cmd->add_option("--seq", post_args.seq, "Sequence directory");
    cmd->add_option("--out", post_args.out, "Output SMV volume");
    cmd->add_option("--masks-out", post_args.masks_out, "Directory for argmax label PNGs");
  };
  auto* wgf = post->add_subcommand("wgf", "3D weighted guided filter");
  add_io(wgf);
  wgf->add_option("--radius-x", post_args.wgf.radius_x)->check(CLI::NonNegativeNumber);
  wgf->add_option("--radius-y", post_args.wgf.radius_y)->check(CLI::NonNegativeNumber);
  wgf->add_option("--radius-t", post_args.wgf.radius_t)->check(CLI::NonNegativeNumber);
  wgf->add_option("--eps", post_args.wgf.epsilon)->check(CLI::PositiveNumber);
  wgf->add_option("--weight-floor", post_args.wgf.weight_floor)->check(CLI::Range(1e-9, 1.0));
  auto* gauss = post->add_subcommand("gauss", "Temporal Gaussian blur baseline");
  add_io(gauss);
  gauss->add_option("--sigma", post_args.sigma, "Sigma in frames")->check(CLI::NonNegativeNumber);

  CorruptArgs corrupt_args;
  auto* corrupt = app.add_subcommand("corrupt", "Qualification corruptions of ground-truth masks");
  corrupt->add_option("--seq", corrupt_args.seq, "Source sequence directory")->required();
  corrupt->add_option("--out", corrupt_args.out, "Output directory")->required();
  corrupt->add_option("--seed", corrupt_args.seed, "Random seed");
  corrupt->add_option("--grid-cells", corrupt_args.grid_cells, "Jitter control-point spacing")
      ->check(CLI::PositiveNumber);
  corrupt->add_option("--erosion", corrupt_args.erosion, "Single clip: erosion in pixels")
      ->check(CLI::NonNegativeNumber);
  corrupt->add_option("--jitter", corrupt_args.jitter, "Single clip: jitter magnitude in pixels")
      ->check(CLI::NonNegativeNumber);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Write a synthetic sequence with exact flow");
  synth->add_option("--scene", synth_args.scene)->check(CLI::IsMember({"translating", "occlusion"}));
  synth->add_option("--shape", synth_args.shape)->check(CLI::IsMember({"square", "disk", "star"}));
  synth->add_option("--size", synth_args.size)->check(CLI::PositiveNumber);
  synth->add_option("--vx", synth_args.vx);
  synth->add_option("--vy", synth_args.vy);
  synth->add_option("--frames", synth_args.frames)->check(CLI::PositiveNumber);
  synth->add_option("--width", synth_args.width)->check(CLI::PositiveNumber);
  synth->add_option("--height", synth_args.height)->check(CLI::PositiveNumber);
  synth->add_option("--K", synth_args.window)->check(CLI::PositiveNumber);
  synth->add_option("--fps", synth_args.fps)->check(CLI::PositiveNumber);
  synth->add_option("--out", synth_args.out, "Output sequence directory")->required();

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "IoU and recall against ground truth");
  eval->add_option("--pred", eval_args.pred, "Directory containing masks/")->required();
  eval->add_option("--gt", eval_args.gt, "Directory containing masks/")->required();
  eval->add_option("--class", eval_args.classes, "Class indices (default: all non-background)");
  eval->add_option("--out", eval_args.out, "Report JSON path (default stdout)");

  StudyArgs study_args;
  auto* study = app.add_subcommand("study", "Correlate user-study ratings with measures");
  study->add_option("--ratings", study_args.ratings, "Ratings CSV")->required();
  study->add_option("--measures", study_args.measures, "Measures CSV")->required();
  study->add_option("--cutoff", study_args.cutoff, "Drop videos whose rating stddev exceeds this")
      ->check(CLI::NonNegativeNumber);
  study->add_option("--min-clips", study_args.min_clips, "Qualification clips required per worker");
  study->add_flag("--no-filter", study_args.no_filter, "Keep every worker");
  study->add_option("--out", study_args.out, "Report JSON path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    if (e.get_exit_code() == 0) return kOk;
    err << "run with --help for usage\n";
    return kUsage;
  }

  try {
    if (*measure) run_measure(measure_args, out, err);
    if (*wgf) run_wgf(post_args, err);
    if (*gauss) run_gauss(post_args);
    if (*corrupt) run_corrupt(corrupt_args);
    if (*synth) run_synth(synth_args);
    if (*eval) run_eval(eval_args, out);
    if (*study) run_study(study_args, out);
  } catch (const segstab::Error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kOk;
}

}  // namespace segstab::cli
