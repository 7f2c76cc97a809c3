#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "handseg/dataset.hpp"
#include "handseg/error.hpp"
#include "handseg/eval.hpp"
#include "handseg/image_io.hpp"
#include "handseg/pipeline.hpp"
#include "handseg/scene.hpp"

namespace handseg::app {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw DataError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  out << text;
  if (!out) throw DataError("cannot write " + p.string());
}

json parse_config(const std::string& path) {
  if (path.empty()) return json::object();
  try {
    return json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ParamError("malformed config " + path + ": " + e.what());
  }
}

PoolParams pool_params_from(const json& j) {
  PoolParams p;
  try {
    if (j.contains("forest")) {
      const json& f = j["forest"];
      p.forest.n_trees = f.value("trees", p.forest.n_trees);
      p.forest.max_depth = f.value("depth", p.forest.max_depth);
      p.forest.min_leaf_samples = f.value("min_leaf", p.forest.min_leaf_samples);
      p.forest.bootstrap_fraction = f.value("bootstrap", p.forest.bootstrap_fraction);
      p.forest.features_per_split =
          f.value("features_per_split", p.forest.features_per_split);
      p.forest.seed = f.value("seed", p.forest.seed);
    }
    if (j.contains("bins")) {
      const auto b = j["bins"].get<std::vector<int>>();
      if (b.size() != 3) throw ParamError("bins must have three entries");
      p.bins = {b[0], b[1], b[2]};
    }
    p.samples_per_class = j.value("samples_per_class", p.samples_per_class);
  } catch (const json::exception& e) {
    throw ParamError(std::string("malformed config: ") + e.what());
  }
  return p;
}

// --- train -------------------------------------------------------------------

struct TrainArgs {
  std::string config, frames, masks, out;
  std::optional<int> trees, depth;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
  PoolParams params = pool_params_from(parse_config(a.config));
  if (a.trees) params.forest.n_trees = *a.trees;
  if (a.depth) params.forest.max_depth = *a.depth;
  if (a.seed) params.forest.seed = *a.seed;
  params.forest.validate();

  const auto pairs = io::load_training_pairs(a.frames, a.masks);
  BuildReport report;
  const ModelPool pool = build_pool(pairs, params, &report);
  if (fs::path(a.out).has_parent_path())
    fs::create_directories(fs::path(a.out).parent_path());
  save_pool(pool, a.out);
  out << "trained " << pool.size() << " models from " << pairs.size()
      << " pairs";
  if (!report.skipped.empty()) out << " (" << report.skipped.size() << " skipped)";
  out << "\n";
  return kOk;
}

// --- run ---------------------------------------------------------------------

struct RunArgs {
  std::string config, pool, frames, out;
  std::optional<int> stride, working_width;
  std::optional<std::size_t> k;
  std::optional<double> lambda, threshold;
  std::optional<std::string> lr_model;
  bool no_split = false;
};

json segments_json(const FrameResult& r) {
  json segs = json::array();
  for (const SegmentResult& s : r.segments)
    segs.push_back({{"label", to_string(s.label)},
                    {"x", s.features.x},
                    {"theta", s.features.theta},
                    {"ratio", std::isinf(s.ratio) ? json("inf") : json(s.ratio)},
                    {"area", s.contour.area}});
  return segs;
}

int cmd_run(const RunArgs& a, std::ostream& out) {
  PipelineConfig config;
  if (!a.config.empty()) config = load_config(a.config);
  config.pool_path = a.pool;
  if (a.stride) config.sample_stride = *a.stride;
  if (a.working_width) config.working_width = *a.working_width;
  if (a.k) config.segment.k = *a.k;
  if (a.lambda) config.segment.lambda = *a.lambda;
  if (a.threshold) config.segment.threshold = *a.threshold;
  if (a.lr_model) config.lr_model_path = *a.lr_model;
  if (a.no_split) config.enable_split = false;
  config.validate();

  const ModelPool pool = load_pool(config.pool_path);
  const LRModel model = config.lr_model_path.empty()
                            ? LRModel{}
                            : load_lr_model(config.lr_model_path);
  const auto files = io::list_images(a.frames);
  if (files.empty()) throw DataError("no frames in " + a.frames);
  fs::create_directories(a.out);

  VideoProcessor proc(config, pool, model);
  json frames = json::array();
  for (std::size_t i = 0; i < files.size();
       i += static_cast<std::size_t>(config.sample_stride)) {
    Frame frame = io::read_frame(files[i]);
    frame.set_index(static_cast<std::int64_t>(i));
    const FrameResult r = proc.process(frame);
    const std::string name = files[i].stem().string() + ".png";
    io::write_lr_mask(fs::path(a.out) / name, r.lr_mask);
    frames.push_back({{"index", r.frame_index},
                      {"source", files[i].filename().string()},
                      {"mask", name},
                      {"occlusion", r.occlusion_flag},
                      {"split", r.split_applied},
                      {"segments", segments_json(r)}});
  }
  json results{{"format", "handseg-results"},
               {"version", 1},
               {"config", json::parse(config_to_json(config))},
               {"frames", frames}};
  write_text(fs::path(a.out) / "results.json", results.dump(2) + "\n");
  out << "processed " << frames.size() << " frames\n";
  return kOk;
}

// --- fit-id-model --------------------------------------------------------------

struct FitArgs {
  std::string masks, out;
  std::size_t min_per_class = 30;
};

std::vector<fs::path> truth_names(const fs::path& dir) {
  if (fs::is_directory(dir / "left") && fs::is_directory(dir / "right")) {
    std::map<std::string, fs::path> names;
    for (const char* sub : {"left", "right"})
      for (const fs::path& p : io::list_images(dir / sub))
        names.emplace(p.stem().string(), p.filename());
    std::vector<fs::path> out;
    for (auto& [stem, p] : names) out.push_back(p);
    return out;
  }
  std::vector<fs::path> out;
  for (const fs::path& p : io::list_images(dir)) out.push_back(p.filename());
  return out;
}

int cmd_fit(const FitArgs& a, std::ostream& out) {
  std::vector<LabeledFeatures> samples;
  for (const fs::path& name : truth_names(a.masks)) {
    const LRMask truth = io::read_lr_truth(a.masks, name);
    for (PixelClass cls : {PixelClass::kLeft, PixelClass::kRight}) {
      const auto contours = extract_contours(class_mask(truth, cls));
      if (contours.empty()) continue;
      const Contour* best = &contours.front();
      for (const Contour& c : contours)
        if (c.area > best->area) best = &c;
      if (best->boundary.size() < 6) continue;
      try {
        const EllipseFit e = fit_ellipse(*best);
        samples.push_back({extract_features(e, truth.width(), truth.height()),
                           cls == PixelClass::kLeft ? HandLabel::kLeft
                                                    : HandLabel::kRight});
      } catch (const DataError&) {
        // degenerate outline, skip
      }
    }
  }
  const LRModel model = fit_model(samples, FitOptions{a.min_per_class});
  save_lr_model(model, a.out);
  out << "fitted model from " << samples.size() << " hand outlines\n";
  return kOk;
}

// --- eval ----------------------------------------------------------------------

struct EvalArgs {
  std::string pred, truth, report;
};

bool has_images(const fs::path& dir) { return !io::list_images(dir).empty(); }

// Per-frame flags from a results.json sidecar, keyed by mask filename.
std::map<std::string, bool> predicted_flags(const fs::path& dir) {
  std::map<std::string, bool> flags;
  const fs::path p = dir / "results.json";
  if (!fs::is_regular_file(p)) return flags;
  try {
    const json j = json::parse(read_text(p));
    for (const json& f : j.at("frames"))
      flags[fs::path(f.at("mask").get<std::string>()).stem().string()] =
          f.at("occlusion").get<bool>();
  } catch (const json::exception& e) {
    throw DataError("malformed results file " + p.string() + ": " + e.what());
  }
  return flags;
}

// Optional truth flags: occlusion.json {"<stem>": bool, ...}.
std::optional<std::map<std::string, bool>> truth_flags(const fs::path& dir) {
  const fs::path p = dir / "occlusion.json";
  if (!fs::is_regular_file(p)) return std::nullopt;
  try {
    return json::parse(read_text(p)).get<std::map<std::string, bool>>();
  } catch (const json::exception& e) {
    throw DataError("malformed occlusion file " + p.string() + ": " + e.what());
  }
}

VideoEval eval_one(const std::string& name, const fs::path& pred_dir,
                   const fs::path& truth_dir) {
  const auto pflags = predicted_flags(pred_dir);
  const auto tflags = truth_flags(truth_dir);
  const auto files = io::list_images(pred_dir);
  if (files.empty()) throw DataError("no predictions in " + pred_dir.string());
  std::vector<LRMask> preds, truths;
  // std::span<const bool> needs contiguous bools, which vector<bool> lacks.
  const std::size_t n = files.size();
  std::unique_ptr<bool[]> flagged(new bool[n]());
  std::unique_ptr<bool[]> tflag(new bool[n]());
  for (std::size_t k = 0; k < n; ++k) {
    const fs::path& p = files[k];
    const std::string stem = p.stem().string();
    const io::LabelImage raw = io::read_label_image(p);
    LRMask pm(raw.width(), raw.height());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] > 2) throw DataError("prediction is not three-class: " + p.string());
      pm[i] = raw[i];
    }
    LRMask tm = io::read_lr_truth(truth_dir, p.filename());
    if (!tm.same_shape(pm)) throw DataError("size mismatch for " + stem);
    preds.push_back(std::move(pm));
    truths.push_back(std::move(tm));
    const auto it = pflags.find(stem);
    flagged[k] = it != pflags.end() && it->second;
    if (tflags) {
      const auto jt = tflags->find(stem);
      tflag[k] = jt != tflags->end() && jt->second;
    }
  }
  return evaluate_video(name, preds, truths,
                        std::span<const bool>(flagged.get(), n),
                        std::span<const bool>(tflag.get(), tflags ? n : 0));
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const fs::path pred(a.pred), truth(a.truth);
  if (!fs::is_directory(pred)) throw DataError("not a directory: " + a.pred);
  if (!fs::is_directory(truth)) throw DataError("not a directory: " + a.truth);
  std::vector<VideoEval> videos;
  if (has_images(pred)) {
    videos.push_back(eval_one(pred.filename().string(), pred, truth));
  } else {
    std::vector<fs::path> subs;
    for (const auto& e : fs::directory_iterator(pred))
      if (e.is_directory()) subs.push_back(e.path());
    std::sort(subs.begin(), subs.end());
    for (const fs::path& s : subs)
      videos.push_back(eval_one(s.filename().string(), s, truth / s.filename()));
    if (videos.empty()) throw DataError("no predictions in " + a.pred);
  }
  const std::string report = report_to_json(videos);
  write_text(a.report, report);
  const auto agg = json::parse(report)["aggregate"];
  out << "frames " << agg["frames"] << ", binary F1 " << agg["binary"]["f1"]
      << ", left acc " << agg["identification"]["left_accuracy"]
      << ", right acc " << agg["identification"]["right_accuracy"] << "\n";
  return kOk;
}

// --- synth ---------------------------------------------------------------------

struct SynthArgs {
  std::string out;
  int frames = 60;
  std::uint64_t seed = 1;
  int merge_at = -1;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SceneParams p;
  p.frames = a.frames;
  p.seed = a.seed;
  if (a.merge_at >= 0) p.merges.push_back({a.merge_at, 12, 6, 2.0});
  const auto scene = generate_scene(p);
  const fs::path root(a.out);
  for (const char* d : {"frames", "masks", "truth"}) fs::create_directories(root / d);
  json flags = json::object();
  for (const SceneFrame& f : scene) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05lld.png",
                  static_cast<long long>(f.frame.index()));
    io::write_frame_png(root / "frames" / name, f.frame);
    std::vector<std::uint8_t> bin(f.truth.size());
    for (std::size_t i = 0; i < bin.size(); ++i) bin[i] = f.truth[i] ? 255 : 0;
    BinaryMask bm(f.truth.width(), f.truth.height(), std::move(bin));
    std::vector<Rgb> palette(256);
    for (int v = 0; v < 256; ++v)
      palette[v] = {static_cast<std::uint8_t>(v), static_cast<std::uint8_t>(v),
                    static_cast<std::uint8_t>(v)};
    io::write_indexed_png(root / "masks" / name, bm.width(), bm.height(),
                          bm.values(), palette);
    io::write_lr_mask(root / "truth" / name, f.truth);
    flags[fs::path(name).stem().string()] = f.occluded;
  }
  write_text(root / "truth" / "occlusion.json", flags.dump(2) + "\n");
  write_text(root / "scene.json", scene_to_json(p));
  out << "wrote " << scene.size() << " frames\n";
  return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"Egocentric left/right hand segmentation"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Build an illumination model pool");
  t->add_option("--config", train.config, "JSON config file")->check(CLI::ExistingFile);
  t->add_option("--frames", train.frames, "Training frame directory")->required();
  t->add_option("--masks", train.masks, "Binary hand mask directory")->required();
  t->add_option("--out", train.out, "Output pool file")->required();
  t->add_option("--trees", train.trees, "Trees per forest");
  t->add_option("--depth", train.depth, "Maximum tree depth");
  t->add_option("--seed", train.seed, "Random seed");

  RunArgs run;
  auto* r = app.add_subcommand("run", "Segment and identify hands in a frame directory");
  r->add_option("--config", run.config, "JSON config file")->check(CLI::ExistingFile);
  r->add_option("--pool", run.pool, "Model pool file")->required();
  r->add_option("--frames", run.frames, "Frame directory")->required();
  r->add_option("--out", run.out, "Output mask directory")->required();
  r->add_option("--stride", run.stride, "Process every Nth frame");
  r->add_option("--k", run.k, "Models fused per frame");
  r->add_option("--lambda", run.lambda, "Fusion decay");
  r->add_option("--threshold", run.threshold, "Binarisation threshold");
  r->add_option("--lr-model", run.lr_model, "Left/right model file");
  r->add_option("--working-width", run.working_width, "Processing width, 0 = native");
  r->add_flag("--no-split", run.no_split, "Disable occlusion splitting");

  FitArgs fit;
  auto* f = app.add_subcommand("fit-id-model", "Fit the left/right model from labelled masks");
  f->add_option("--masks", fit.masks, "Three-class or left/right mask directory")->required();
  f->add_option("--out", fit.out, "Output model file")->required();
  f->add_option("--min-per-class", fit.min_per_class, "Minimum outlines per hand");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score predicted masks against truth");
  e->add_option("--pred", ev.pred, "Prediction directory")->required();
  e->add_option("--truth", ev.truth, "Truth directory")->required();
  e->add_option("--report", ev.report, "Output report file")->required();

  SynthArgs syn;
  auto* s = app.add_subcommand("synth", "Render a synthetic two-hand scene");
  s->add_option("--out", syn.out, "Output directory")->required();
  s->add_option("--frames", syn.frames, "Frame count");
  s->add_option("--seed", syn.seed, "Random seed");
  s->add_option("--merge-at", syn.merge_at, "Frame at which the hands start to merge");

  std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& pe) {
    err << "error: " << pe.what() << "\n" << "run with --help for usage\n";
    return kUsage;
  }

  try {
    if (*t) return cmd_train(train, out);
    if (*r) return cmd_run(run, out);
    if (*f) return cmd_fit(fit, out);
    if (*e) return cmd_eval(ev, out);
    if (*s) return cmd_synth(syn, out);
    return kUsage;
  } catch (const ParamError& pe) {
    err << "error: " << pe.what() << "\n";
    return kUsage;
  } catch (const DataError& de) {
    err << "error: " << de.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& fe) {
    err << "error: " << fe.what() << "\n";
    return kData;
  } catch (const std::exception& ex) {
    err << "internal error: " << ex.what() << "\n";
    return kInternal;
  }
}

}  // namespace handseg::app
