// Command-line front end. Every subcommand wraps one library operation;
// `pipeline` chains them over scene directories.
//
// Exit codes: 0 ok, 1 usage, 2 I/O, 3 format/validation.

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "sscvox/augment.hpp"
#include "sscvox/io.hpp"
#include "sscvox/metrics.hpp"
#include "sscvox/net/checkpoint.hpp"
#include "sscvox/net/grad_check.hpp"
#include "sscvox/net/trainer.hpp"
#include "sscvox/scene.hpp"
#include "sscvox/synthetic.hpp"
#include "sscvox/training.hpp"
#include "sscvox/tsdf.hpp"

namespace fs = std::filesystem;
using namespace sscvox;

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_logger_mt("sscvox");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::err);
  if (const char* env = std::getenv("SSCVOX_LOG")) {
    const std::string level = env;
    if (level == "info") spdlog::set_level(spdlog::level::info);
    else if (level == "debug") spdlog::set_level(spdlog::level::debug);
  }
}

std::array<int, 3> to_dims(const std::vector<int>& v, const char* flag) {
  if (v.size() != 3) throw UsageError(std::string(flag) + " needs three comma-separated values");
  return {v[0], v[1], v[2]};
}

struct GridFlags {
  double voxel = 0.02;
  std::vector<int> dims{240, 144, 240};
  double low_voxel = 0.08;
  std::vector<int> low_dims{60, 36, 60};
  double truncation = kDefaultTruncation;
  bool toy = false;

  void add(CLI::App* app, bool high, bool low) {
    if (high) {
      app->add_option("--voxel", voxel, "High-res voxel size (m)")->capture_default_str();
      app->add_option("--dims", dims, "High-res grid dims nx,ny,nz")
          ->delimiter(',')
          ->expected(3)
          ->capture_default_str();
      app->add_option("--truncation", truncation, "F-TSDF truncation (m)")->capture_default_str();
    }
    if (low) {
      app->add_option("--low-voxel", low_voxel, "Low-res voxel size (m)")->capture_default_str();
      app->add_option("--low-dims", low_dims, "Low-res grid dims nx,ny,nz")
          ->delimiter(',')
          ->expected(3)
          ->capture_default_str();
    }
    app->add_flag("--toy", toy, "Use the toy grids 40,24,40@0.12 and 10,6,10@0.48");
  }

  SceneGrids grids(const Vec3& origin) const {
    SceneGrids g;
    if (toy) {
      g = toy_grids();
    } else {
      g.high = GridSpec{to_dims(dims, "--dims"), voxel, Vec3::Zero()};
      g.low = GridSpec{to_dims(low_dims, "--low-dims"), low_voxel, Vec3::Zero()};
    }
    g.high.origin = origin;
    g.low.origin = origin;
    g.truncation = truncation;
    if (!(truncation > 0.0)) throw UsageError("--truncation must be positive");
    g.high.validate();
    g.low.validate();
    return g;
  }
};

struct SceneFiles {
  DepthMap depth;
  SceneConfig config;
  ProbMap2D probs;
  std::optional<LabelGrid> gt;
};

SceneFiles load_scene(const fs::path& dir, bool need_probs) {
  if (!fs::is_directory(dir)) throw IoError("scene directory not found: " + dir.string());
  SceneFiles s;
  s.depth = read_depth_png(dir / "depth.png");
  s.config = read_config(dir / "intrinsics.json");
  if (need_probs) s.probs = read_prb(dir / "probs.prb");
  if (fs::exists(dir / "gt.vxl")) s.gt = read_label_vxl(dir / "gt.vxl");
  return s;
}

void check_depth_matches(const DepthMap& d, const CameraIntrinsics& k) {
  if (d.width != k.width || d.height != k.height) {
    throw ValidationError("depth image is " + std::to_string(d.width) + "x" +
                          std::to_string(d.height) + " but intrinsics say " +
                          std::to_string(k.width) + "x" + std::to_string(k.height));
  }
}

// ---------------------------------------------------------------- project
struct ProjectArgs {
  std::string depth, config, out;
  GridFlags grid;
};

int run_project(const ProjectArgs& a) {
  const DepthMap depth = read_depth_png(a.depth);
  const SceneConfig cfg = read_config(a.config);
  check_depth_matches(depth, cfg.intrinsics);
  const SceneGrids g = a.grid.grids(cfg.require_origin());
  const auto points = depth_to_points(depth, cfg.intrinsics, cfg.alignment);
  const LabelGrid surface = surface_grid(points, g.high);
  const VisibilityGrid vis = visibility(depth, cfg.intrinsics, cfg.alignment, g.high);
  fs::create_directories(a.out);
  write_vxl(fs::path(a.out) / "surface.vxl", surface);
  write_vxl(fs::path(a.out) / "visibility.vxl", vis);
  std::size_t counts[4] = {0, 0, 0, 0};
  for (Visibility v : vis.data()) {
    counts[v == Visibility::kOutsideView ? 3 : static_cast<int>(v)]++;
  }
  std::size_t surf = 0;
  for (auto v : surface.data()) surf += v;
  std::cout << "points=" << points.size() << "\nsurface_voxels=" << surf
            << "\nvisible_empty=" << counts[0] << "\nsurface=" << counts[1]
            << "\noccluded=" << counts[2] << "\noutside_view=" << counts[3] << "\n";
  return 0;
}

// ---------------------------------------------------------------- normals
struct NormalsArgs {
  std::string depth, config, out;
  NormalOptions opts;
};

int run_normals(const NormalsArgs& a) {
  const DepthMap depth = read_depth_png(a.depth);
  const SceneConfig cfg = read_config(a.config);
  check_depth_matches(depth, cfg.intrinsics);
  const NormalMap n = compute_normals(depth, cfg.intrinsics, cfg.alignment, a.opts);
  write_rgb_png(a.out, n.width, n.height, n.rgb);
  std::size_t defined = 0;
  for (const Vec3& v : n.normals) defined += v.squaredNorm() > 0.0;
  std::cout << "pixels=" << n.normals.size() << "\ndefined=" << defined << "\n";
  return 0;
}

// ---------------------------------------------------------------- encode-tsdf
struct EncodeArgs {
  std::string depth, config, surface, vis, out;
  GridFlags grid;
};

int run_encode(const EncodeArgs& a) {
  FloatGrid tsdf;
  if (!a.surface.empty() || !a.vis.empty()) {
    if (a.surface.empty() || a.vis.empty()) throw UsageError("--surface and --vis go together");
    const LabelGrid surface = read_label_vxl(a.surface);
    const VisibilityGrid vis = read_visibility_vxl(a.vis);
    tsdf = ftsdf_encode(surface, vis, a.grid.truncation);
  } else {
    if (a.depth.empty() || a.config.empty()) {
      throw UsageError("give --depth and --config, or --surface and --vis");
    }
    const DepthMap depth = read_depth_png(a.depth);
    const SceneConfig cfg = read_config(a.config);
    check_depth_matches(depth, cfg.intrinsics);
    const SceneGrids g = a.grid.grids(cfg.require_origin());
    const auto points = depth_to_points(depth, cfg.intrinsics, cfg.alignment);
    tsdf = ftsdf_encode(surface_grid(points, g.high),
                        visibility(depth, cfg.intrinsics, cfg.alignment, g.high), g.truncation);
  }
  write_vxl(a.out, tsdf);
  double lo = 1.0, hi = -1.0;
  for (float v : tsdf.data()) {
    lo = std::min<double>(lo, v);
    hi = std::max<double>(hi, v);
  }
  std::cout << "voxels=" << tsdf.voxels() << "\nmin=" << lo << "\nmax=" << hi << "\n";
  return 0;
}

// ---------------------------------------------------------------- priors
struct PriorsArgs {
  std::string probs, depth, config, out;
  GridFlags grid;
};

int run_priors(const PriorsArgs& a) {
  const ProbMap2D probs = read_prb(a.probs);
  const DepthMap depth = read_depth_png(a.depth);
  const SceneConfig cfg = read_config(a.config);
  check_depth_matches(depth, cfg.intrinsics);
  const SceneGrids g = a.grid.grids(cfg.require_origin());
  PriorDiagnostics diag;
  const FloatGrid priors = project_priors(probs, depth, cfg.intrinsics, cfg.alignment, g.low, &diag);
  write_vxl(a.out, priors);
  std::cout << "valid_pixels=" << diag.valid_pixels
            << "\ndropped_outside_grid=" << diag.dropped_outside_grid
            << "\noccupied_voxels=" << diag.occupied_voxels << "\n";
  return 0;
}

// ---------------------------------------------------------------- augment
struct AugmentArgs {
  std::string code, in, out;
  bool inverse = false;
};

int run_augment(const AugmentArgs& a) {
  AugCode g = AugCode::parse(a.code);
  if (a.inverse) g = inverse(g);
  const AnyGrid grid = read_vxl(a.in);
  if (const auto* labels = std::get_if<LabelGrid>(&grid)) {
    write_vxl(a.out, apply(g, *labels));
  } else {
    write_vxl(a.out, apply(g, std::get<FloatGrid>(grid)));
  }
  std::cout << "code=" << g.to_string() << "\n";
  return 0;
}

// ---------------------------------------------------------------- tta
struct TtaArgs {
  std::string model, in, out;
  bool single = false;
  GridFlags grid;
};

FloatGrid predict_scene(net::MiniSpawn& model, const FloatGrid& tsdf, const FloatGrid& priors,
                        bool tta) {
  const auto& cfg = model.config();
  if (priors.spec().dims != cfg.output_dims || tsdf.spec().dims != cfg.input_dims()) {
    throw ValidationError("model expects low-res dims " + std::to_string(cfg.output_dims[0]) + "," +
                          std::to_string(cfg.output_dims[1]) + "," +
                          std::to_string(cfg.output_dims[2]) + " and 4x that at high res");
  }
  if (!tta) return net::predict(model, tsdf, priors);
  return tta_ensemble(net::make_predictor(model), SceneInputs{tsdf, priors});
}

int run_tta(const TtaArgs& a) {
  auto model = net::load_checkpoint(a.model);
  const SceneFiles s = load_scene(a.in, true);
  check_depth_matches(s.depth, s.config.intrinsics);
  const SceneGrids g = a.grid.grids(s.config.require_origin());
  const ProcessedScene p = process_scene(s.depth, s.config, s.probs, g);
  const FloatGrid probs = predict_scene(*model, p.tsdf, p.priors, !a.single);
  write_vxl(a.out, probs);
  std::cout << "voxels=" << probs.voxels() << "\nchannels=" << probs.channels()
            << "\naugmentations=" << (a.single ? 1 : 8) << "\n";
  return 0;
}

// ---------------------------------------------------------------- balance
struct BalanceArgs {
  std::string gt, vis, out;
  std::uint64_t seed = 0;
};

int run_balance(const BalanceArgs& a) {
  const LabelGrid gt = read_label_vxl(a.gt);
  const VisibilityGrid vis = read_visibility_vxl(a.vis);
  std::mt19937_64 rng(a.seed);
  BalanceStats stats;
  const SelectionMask mask = balance_sample(gt, vis, rng, &stats);
  if (!a.out.empty()) write_vxl(a.out, mask.bits);
  std::cout << "occupied=" << stats.occupied
            << "\noccluded_empty_candidates=" << stats.occluded_empty_candidates
            << "\nsampled_empty=" << stats.sampled_empty << "\nselected=" << mask.count() << "\n";
  return 0;
}

// ---------------------------------------------------------------- loss
struct LossArgs {
  std::string pred, gt, vis;
  std::uint64_t seed = 0;
};

int run_loss(const LossArgs& a) {
  const FloatGrid probs = read_float_vxl(a.pred);
  const LabelGrid gt = read_label_vxl(a.gt);
  const VisibilityGrid vis = read_visibility_vxl(a.vis);
  std::mt19937_64 rng(a.seed);
  BalanceStats stats;
  const SelectionMask mask = balance_sample(gt, vis, rng, &stats);
  const double loss = weighted_ce_loss(probs, gt, mask, default_class_table());
  std::cout << std::setprecision(10) << "loss=" << loss << "\nselected=" << mask.count()
            << "\noccupied=" << stats.occupied << "\nsampled_empty=" << stats.sampled_empty
            << "\noccluded_empty_candidates=" << stats.occluded_empty_candidates << "\n";
  return 0;
}

// ---------------------------------------------------------------- train-toy
struct TrainArgs {
  std::string out, loss_csv;
  std::vector<std::string> scenes;
  int synthetic = 4;
  net::TrainOptions train;
  net::MiniSpawnConfig model;
  std::uint64_t seed = 0;
  GridFlags grid;
};

int run_train(TrainArgs& a) {
  std::vector<net::TrainingScene> data;
  if (!a.scenes.empty()) {
    for (const auto& dir : a.scenes) {
      SceneFiles s = load_scene(dir, true);
      if (!s.gt) throw IoError("training scene has no gt.vxl: " + dir);
      check_depth_matches(s.depth, s.config.intrinsics);
      const SceneGrids g = a.grid.grids(s.config.require_origin());
      ProcessedScene p = process_scene(s.depth, s.config, s.probs, g);
      if (!s.gt->spec().compatible(p.priors.spec())) {
        throw ValidationError("gt.vxl does not match the low-res grid in " + dir);
      }
      data.push_back({std::move(p.tsdf), std::move(p.priors), std::move(*s.gt), std::move(p.low_vis)});
    }
  } else {
    if (a.synthetic < 1) throw UsageError("--synthetic must be >= 1");
    const SceneGrids g = toy_grids();
    for (int i = 0; i < a.synthetic; ++i) {
      SyntheticOptions so;
      so.seed = a.seed * 1000003ULL + static_cast<std::uint64_t>(i);
      data.push_back(make_training_scene(make_synthetic_scene(so), g));
    }
  }
  a.model.output_dims = data.front().priors.spec().dims;
  net::MiniSpawn model(a.model);
  model.init(a.seed);
  a.train.seed = a.seed;
  std::ofstream csv;
  if (!a.loss_csv.empty()) {
    csv.open(a.loss_csv);
    if (!csv) throw IoError("cannot write " + a.loss_csv);
    csv << "step,loss,lr\n";
  }
  const auto report = net::train(model, data, a.train, default_class_table(),
                                 [&](long step, double loss, double lr) {
                                   spdlog::debug("step {} loss {:.6f} lr {:.3e}", step, loss, lr);
                                   if (csv) csv << step << "," << loss << "," << lr << "\n";
                                 });
  net::save_checkpoint(a.out, model);
  const auto& l = report.step_loss;
  std::cout << std::setprecision(8) << "scenes=" << data.size() << "\nsteps=" << l.size()
            << "\nfirst_loss=" << l.front() << "\nlast_loss=" << l.back() << "\n";
  return 0;
}

// ---------------------------------------------------------------- grad-check
struct GradArgs {
  std::string module = "bn_ddr";
  std::uint64_t seed = 0;
};

double tolerance_for(net::GradCheckModule m) {
  switch (m) {
    case net::GradCheckModule::kLinear: return 1e-7;
    case net::GradCheckModule::kMiniSpawn: return 1e-3;
    default: return 1e-4;
  }
}

int run_grad(const GradArgs& a) {
  const auto m = net::parse_grad_check_module(a.module);
  const auto r = net::grad_check(m, a.seed);
  const double tol = tolerance_for(m);
  std::cout << std::setprecision(6) << "module=" << net::to_string(m)
            << "\nmax_rel_error=" << r.max_rel_error << "\ntolerance=" << tol
            << "\nchecked=" << r.checked << "\nkink_retries=" << r.kink_retries
            << "\nworst=" << r.worst << "\nresult=" << (r.max_rel_error < tol ? "pass" : "fail")
            << "\n";
  if (r.max_rel_error >= tol) throw ValidationError("gradient check failed for " + a.module);
  return 0;
}

// ---------------------------------------------------------------- evaluate
struct EvaluateArgs {
  std::string pred, gt, vis, csv;
};

LabelGrid as_labels(const AnyGrid& g) {
  if (const auto* l = std::get_if<LabelGrid>(&g)) {
    if (l->channels() != 1) throw ValidationError("label grid must have one channel");
    return *l;
  }
  return net::argmax_labels(std::get<FloatGrid>(g));
}

std::string iou_text(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream s;
  s << std::fixed << std::setprecision(4) << *v;
  return s.str();
}

void print_report(std::ostream& os, const SscMetrics& ssc, const CompletionMetrics& comp,
                  const ClassTable& table) {
  os << std::fixed << std::setprecision(4);
  os << "completion  precision " << comp.precision << "  recall " << comp.recall << "  iou "
     << comp.iou << "\n";
  for (int c = 1; c < table.size(); ++c) {
    os << "  " << std::left << std::setw(10) << table.names[c] << std::right << "  "
       << (ssc.iou[c] ? iou_text(ssc.iou[c]) : std::string("   -  ")) << "\n";
  }
  os << "mIoU " << ssc.miou << " over " << ssc.classes_in_mean << " classes\n";
  os.unsetf(std::ios::floatfield);
}

std::string metrics_csv(const SscMetrics& ssc, const ClassTable& table) {
  std::ostringstream os;
  os << "class,tp,fp,fn,iou\n";
  for (int c = 1; c < table.size(); ++c) {
    os << table.names[c] << "," << ssc.counts.tp[c] << "," << ssc.counts.fp[c] << ","
       << ssc.counts.fn[c] << "," << iou_text(ssc.iou[c]) << "\n";
  }
  return os.str();
}

int run_evaluate(const EvaluateArgs& a) {
  for (const auto& d : {a.pred, a.gt, a.vis}) {
    if (!fs::is_directory(d)) throw IoError("not a directory: " + d);
  }
  std::vector<fs::path> names;
  for (const auto& e : fs::directory_iterator(a.pred)) {
    if (e.path().extension() == ".vxl") names.push_back(e.path().filename());
  }
  std::sort(names.begin(), names.end());
  if (names.empty()) throw IoError("no .vxl predictions in " + a.pred);
  const ClassTable table = default_class_table();
  MetricsAccumulator acc;
  for (const auto& n : names) {
    const LabelGrid pred = as_labels(read_vxl(fs::path(a.pred) / n));
    const LabelGrid gt = read_label_vxl(fs::path(a.gt) / n);
    const VisibilityGrid vis = read_visibility_vxl(fs::path(a.vis) / n);
    const auto ssc = ssc_metrics(pred, gt, vis, table);
    const auto comp = completion_metrics(pred, gt, vis);
    acc.add(ssc, comp);
    std::cout << n.string() << "  completion_iou " << std::fixed << std::setprecision(4)
              << comp.iou << "  mIoU " << ssc.miou << "\n";
    std::cout.unsetf(std::ios::floatfield);
  }
  const SscMetrics ssc = acc.dataset_ssc();
  std::cout << "\ndataset (" << acc.scenes() << " scenes)\n";
  print_report(std::cout, ssc, acc.dataset_completion(), table);
  std::cout << std::fixed << std::setprecision(4) << "scene-mean mIoU " << acc.scene_mean_miou()
            << "\nscene-mean completion iou " << acc.scene_mean_completion_iou() << "\n";
  const std::string csv = metrics_csv(ssc, table);
  if (a.csv.empty()) {
    std::cout << "\n" << csv;
  } else {
    atomic_write(a.csv, csv);
  }
  return 0;
}

// ---------------------------------------------------------------- pipeline
struct PipelineArgs {
  std::vector<std::string> scenes;
  std::string model;
  bool no_tta = false;
  int jobs = 1;
  std::uint64_t seed = 0;
  GridFlags grid;
};

struct SceneResult {
  std::optional<SscMetrics> ssc;
  std::optional<CompletionMetrics> completion;
};

SceneResult pipeline_scene(const fs::path& dir, const PipelineArgs& a, net::MiniSpawn* model) {
  const SceneFiles s = load_scene(dir, true);
  check_depth_matches(s.depth, s.config.intrinsics);
  const SceneGrids g = a.grid.grids(s.config.require_origin());
  const ProcessedScene p = process_scene(s.depth, s.config, s.probs, g);
  const NormalMap normals = compute_normals(s.depth, s.config.intrinsics, s.config.alignment);

  // Without a model the projected priors are the prediction.
  const FloatGrid probs = model ? predict_scene(*model, p.tsdf, p.priors, !a.no_tta) : p.priors;
  const LabelGrid pred = net::argmax_labels(probs);

  const fs::path out = dir / "out";
  fs::create_directories(out);
  write_vxl(out / "surface.vxl", p.surface);
  write_vxl(out / "visibility_high.vxl", p.high_vis);
  write_vxl(out / "tsdf.vxl", p.tsdf);
  write_vxl(out / "priors.vxl", p.priors);
  write_vxl(out / "visibility.vxl", p.low_vis);
  write_rgb_png(out / "normals.png", normals.width, normals.height, normals.rgb);
  write_vxl(out / "probs.vxl", probs);
  write_vxl(out / "pred.vxl", pred);

  SceneResult r;
  if (s.gt) {
    if (!s.gt->spec().compatible(g.low)) throw ValidationError("gt.vxl does not match the low-res grid");
    std::mt19937_64 rng(a.seed);
    write_vxl(out / "mask.vxl", balance_sample(*s.gt, p.low_vis, rng).bits);
    const ClassTable table = default_class_table();
    r.ssc = ssc_metrics(pred, *s.gt, p.low_vis, table);
    r.completion = completion_metrics(pred, *s.gt, p.low_vis);
    atomic_write(out / "metrics.csv", metrics_csv(*r.ssc, table));
  }
  return r;
}

int run_pipeline(const PipelineArgs& a) {
  if (a.jobs < 1) throw UsageError("--jobs must be >= 1");
  std::unique_ptr<net::MiniSpawn> model;
  if (!a.model.empty()) model = net::load_checkpoint(a.model);

  std::vector<SceneResult> results(a.scenes.size());
  std::vector<std::exception_ptr> errors(a.scenes.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&](net::MiniSpawn* m) {
    for (std::size_t i; (i = next++) < a.scenes.size();) {
      try {
        spdlog::info("scene {}", a.scenes[i]);
        results[i] = pipeline_scene(a.scenes[i], a, m);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int jobs = std::min<int>(a.jobs, static_cast<int>(a.scenes.size()));
  if (jobs <= 1) {
    worker(model.get());
  } else {
    // Layers cache activations, so each worker needs its own copy of the model.
    std::vector<std::unique_ptr<net::MiniSpawn>> copies;
    for (int j = 0; j < jobs; ++j) {
      copies.push_back(model ? net::decode_checkpoint(net::encode_checkpoint(*model)) : nullptr);
    }
    std::vector<std::thread> threads;
    for (int j = 0; j < jobs; ++j) threads.emplace_back(worker, copies[j].get());
    for (auto& t : threads) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  MetricsAccumulator acc;
  for (std::size_t i = 0; i < results.size(); ++i) {
    std::cout << a.scenes[i] << ": " << (fs::path(a.scenes[i]) / "out").string();
    if (results[i].ssc) {
      acc.add(*results[i].ssc, *results[i].completion);
      std::cout << std::fixed << std::setprecision(4) << "  completion_iou "
                << results[i].completion->iou << "  mIoU " << results[i].ssc->miou;
      std::cout.unsetf(std::ios::floatfield);
    }
    std::cout << "\n";
  }
  if (acc.scenes() > 0) {
    std::cout << "\n";
    print_report(std::cout, acc.dataset_ssc(), acc.dataset_completion(), default_class_table());
  }
  return 0;
}

// ---------------------------------------------------------------- make-scene
struct MakeSceneArgs {
  std::string out;
  SyntheticOptions opts;
  bool toy = false;
};

int run_make_scene(MakeSceneArgs& a) {
  if (a.toy) {
    a.opts.low = toy_grids().low;
  } else {
    a.opts.low = GridSpec::low_res();
  }
  write_scene_dir(a.out, make_synthetic_scene(a.opts));
  std::cout << "scene=" << a.out << "\n";
  return 0;
}

// ---------------------------------------------------------------- dump
struct DumpArgs {
  std::string in;
  bool csv = false;
  bool nonzero = false;
};

int run_dump(const DumpArgs& a) {
  const AnyGrid g = read_vxl(a.in);
  std::visit(
      [&](const auto& grid) {
        const GridSpec& s = grid.spec();
        if (!a.csv) {
          std::cout << "channels=" << grid.channels() << "\ndims=" << s.dims[0] << ","
                    << s.dims[1] << "," << s.dims[2] << "\nvoxel_size=" << s.voxel_size
                    << "\norigin=" << s.origin.x() << "," << s.origin.y() << "," << s.origin.z()
                    << "\n";
          return;
        }
        std::cout << "c,x,y,z,value\n";
        for (int c = 0; c < grid.channels(); ++c)
          for (int x = 0; x < grid.nx(); ++x)
            for (int y = 0; y < grid.ny(); ++y)
              for (int z = 0; z < grid.nz(); ++z) {
                const auto v = grid.at(c, x, y, z);
                if (a.nonzero && v == 0) continue;
                std::cout << c << "," << x << "," << y << "," << z << "," << +v << "\n";
              }
      },
      g);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"sscvox: semantic scene completion data path and toy network"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");
  std::function<int()> action;

  ProjectArgs project;
  auto* c = app.add_subcommand("project", "Depth map to surface voxels and visibility states");
  c->add_option("--depth", project.depth, "16-bit depth PNG (mm)")->required();
  c->add_option("--config", project.config, "Intrinsics/alignment JSON")->required();
  c->add_option("--out", project.out, "Output directory")->capture_default_str();
  project.out = "out";
  project.grid.add(c, true, false);
  c->callback([&] { action = [&] { return run_project(project); }; });

  NormalsArgs normals;
  c = app.add_subcommand("normals", "Surface normals from depth as an RGB image");
  c->add_option("--depth", normals.depth, "16-bit depth PNG (mm)")->required();
  c->add_option("--config", normals.config, "Intrinsics/alignment JSON")->required();
  c->add_option("--out", normals.out, "Output PNG")->required();
  c->add_option("--window", normals.opts.window, "Plane-fit window (odd)")->capture_default_str();
  c->add_option("--max-jump", normals.opts.max_depth_jump, "Neighbor depth tolerance (m)")
      ->capture_default_str();
  c->callback([&] { action = [&] { return run_normals(normals); }; });

  EncodeArgs encode;
  c = app.add_subcommand("encode-tsdf", "F-TSDF volume from depth or from surface + visibility");
  c->add_option("--depth", encode.depth, "16-bit depth PNG (mm)");
  c->add_option("--config", encode.config, "Intrinsics/alignment JSON");
  c->add_option("--surface", encode.surface, "Surface VXL1 (instead of --depth)");
  c->add_option("--vis", encode.vis, "Visibility VXL1 (with --surface)");
  c->add_option("--out", encode.out, "Output VXL1")->required();
  encode.grid.add(c, true, false);
  c->callback([&] { action = [&] { return run_encode(encode); }; });

  PriorsArgs priors;
  c = app.add_subcommand("priors", "Project 2D class probabilities into the low-res prior volume");
  c->add_option("--probs", priors.probs, "PRB1 probability map")->required();
  c->add_option("--depth", priors.depth, "16-bit depth PNG (mm)")->required();
  c->add_option("--config", priors.config, "Intrinsics/alignment JSON")->required();
  c->add_option("--out", priors.out, "Output VXL1")->required();
  priors.grid.add(c, false, true);
  c->callback([&] { action = [&] { return run_priors(priors); }; });

  AugmentArgs augment;
  c = app.add_subcommand("augment", "Apply an augmentation code to a VXL1 grid");
  c->add_option("--code", augment.code, "Code: 000..111 as (flip_x, flip_z, swap), letters x/z/s, or id")
      ->required();
  c->add_option("--in", augment.in, "Input VXL1")->required();
  c->add_option("--out", augment.out, "Output VXL1")->required();
  c->add_flag("--inverse", augment.inverse, "Apply the inverse code");
  c->callback([&] { action = [&] { return run_augment(augment); }; });

  TtaArgs tta;
  c = app.add_subcommand("tta", "Predict a scene with the toy model under all eight codes");
  c->add_option("--model", tta.model, "NET1 checkpoint")->required();
  c->add_option("--in", tta.in, "Scene directory")->required();
  c->add_option("--out", tta.out, "Output 12-channel VXL1")->required();
  c->add_flag("--single", tta.single, "Skip test-time augmentation");
  tta.grid.add(c, true, true);
  c->callback([&] { action = [&] { return run_tta(tta); }; });

  BalanceArgs balance;
  c = app.add_subcommand("balance", "Balanced voxel selection for the loss");
  c->add_option("--gt", balance.gt, "Ground-truth labels VXL1")->required();
  c->add_option("--vis", balance.vis, "Visibility VXL1")->required();
  c->add_option("--out", balance.out, "Optional mask VXL1");
  c->add_option("--seed", balance.seed, "RNG seed")->capture_default_str();
  c->callback([&] { action = [&] { return run_balance(balance); }; });

  LossArgs loss;
  c = app.add_subcommand("loss", "Class-weighted cross-entropy on a balanced selection");
  c->add_option("--pred", loss.pred, "12-channel probability VXL1")->required();
  c->add_option("--gt", loss.gt, "Ground-truth labels VXL1")->required();
  c->add_option("--vis", loss.vis, "Visibility VXL1")->required();
  c->add_option("--seed", loss.seed, "RNG seed")->capture_default_str();
  c->callback([&] { action = [&] { return run_loss(loss); }; });

  TrainArgs train;
  train.out = "toy.net";
  train.train.base_lr = 2e-2;  // the toy net needs a larger step than full scale
  c = app.add_subcommand("train-toy", "Train the miniature network with SGD and the one-cycle schedule");
  c->add_option("--out", train.out, "Output NET1 checkpoint")->capture_default_str();
  c->add_option("--scene", train.scenes, "Training scene directory (repeatable)");
  c->add_option("--synthetic", train.synthetic, "Synthetic toy scenes when no --scene is given")
      ->capture_default_str();
  c->add_option("--steps", train.train.steps, "SGD steps")->capture_default_str();
  c->add_option("--batch", train.train.batch_size, "Scenes per mini-batch")->capture_default_str();
  c->add_option("--lr", train.train.base_lr, "Base learning rate")->capture_default_str();
  c->add_option("--weight-decay", train.train.weight_decay, "Weight decay")->capture_default_str();
  c->add_option("--warmup", train.train.schedule.warmup_frac, "Warmup fraction")->capture_default_str();
  c->add_flag("--augment", train.train.augment, "Random augmentation code per mini-batch");
  c->add_option("--branch-width", train.model.branch_width, "Input branch width")->capture_default_str();
  c->add_option("--fused-width", train.model.fused_width, "Encoder/decoder width")->capture_default_str();
  c->add_option("--deep-width", train.model.deep_width, "Bottleneck width")->capture_default_str();
  c->add_option("--loss-csv", train.loss_csv, "Write step,loss,lr per step");
  c->add_option("--seed", train.seed, "RNG seed")->capture_default_str();
  train.grid.add(c, true, true);
  c->callback([&] { action = [&] { return run_train(train); }; });

  GradArgs grad;
  c = app.add_subcommand("grad-check", "Finite-difference gradient check of a network module");
  c->add_option("--module", grad.module, "linear, conv3d, batchnorm, bn_ddr or mini_spawn")
      ->capture_default_str();
  c->add_option("--seed", grad.seed, "RNG seed")->capture_default_str();
  c->callback([&] { action = [&] { return run_grad(grad); }; });

  EvaluateArgs evaluate;
  c = app.add_subcommand("evaluate", "Completion and semantic completion scores over directories");
  c->add_option("--pred", evaluate.pred, "Directory of predicted label (or probability) VXL1")
      ->required();
  c->add_option("--gt", evaluate.gt, "Directory of ground-truth VXL1 with matching names")
      ->required();
  c->add_option("--vis", evaluate.vis, "Directory of visibility VXL1 with matching names")
      ->required();
  c->add_option("--csv", evaluate.csv, "Write the per-class CSV here (default: stdout)");
  c->callback([&] { action = [&] { return run_evaluate(evaluate); }; });

  PipelineArgs pipeline;
  c = app.add_subcommand("pipeline", "Full preprocessing, prediction and scoring of scene directories");
  c->add_option("--scene", pipeline.scenes, "Scene directory (repeatable)")->required();
  c->add_option("--model", pipeline.model, "NET1 checkpoint; without it the priors are the prediction");
  c->add_flag("--no-tta", pipeline.no_tta, "Predict once instead of under all eight codes");
  c->add_option("--jobs", pipeline.jobs, "Scenes processed in parallel")->capture_default_str();
  c->add_option("--seed", pipeline.seed, "RNG seed")->capture_default_str();
  pipeline.grid.add(c, true, true);
  c->callback([&] { action = [&] { return run_pipeline(pipeline); }; });

  MakeSceneArgs make;
  c = app.add_subcommand("make-scene", "Write a synthetic scene directory");
  c->add_option("--out", make.out, "Scene directory")->required();
  c->add_option("--seed", make.opts.seed, "RNG seed")->capture_default_str();
  c->add_option("--width", make.opts.image_width, "Image width")->capture_default_str();
  c->add_option("--height", make.opts.image_height, "Image height")->capture_default_str();
  c->add_option("--focal", make.opts.focal, "Focal length (px)")->capture_default_str();
  c->add_option("--furniture", make.opts.furniture, "Furniture boxes")->capture_default_str();
  c->add_flag("--toy", make.toy, "Ground truth on the 10,6,10@0.48 toy grid");
  c->callback([&] { action = [&] { return run_make_scene(make); }; });

  DumpArgs dump;
  c = app.add_subcommand("dump", "Print a VXL1 header, or its voxels as CSV");
  c->add_option("--in", dump.in, "VXL1 file")->required();
  c->add_flag("--as-csv", dump.csv, "Emit c,x,y,z,value rows");
  c->add_flag("--nonzero", dump.nonzero, "Skip zero values in CSV output");
  c->callback([&] { action = [&] { return run_dump(dump); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  try {
    return action();
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(e.kind());
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kIo);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::kValidation);
  }
}
