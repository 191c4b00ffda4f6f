#include "cli.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "CLI11.hpp"
#include "elemgrasp/augment.hpp"
#include "elemgrasp/decomposer_model.hpp"
#include "elemgrasp/errors.hpp"
#include "elemgrasp/eval.hpp"
#include "elemgrasp/graspnet_model.hpp"
#include "elemgrasp/image.hpp"
#include "json.hpp"

namespace elemgrasp::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

constexpr const char* kOracle = "oracle";

struct Common {
  std::string config_path;
  std::string dataset;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<bool> deterministic;
};

// Shared state of one invocation: resolved config and the run manifest.
struct Run {
  std::string command;
  std::vector<std::string> args;
  KeyValueConfig config;
  json inputs = json::object();
  json outputs = json::array();
  json results = json::object();
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
      return kExitConfig;
    case ErrorCode::kNoElementsDetected:
      return kExitNoElements;
    case ErrorCode::kIo:
      return kExitIo;
    default:
      return kExitData;
  }
}

std::string format_list(const std::vector<double>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

void load_config(Run& run, const Common& c, const std::vector<std::string>& seed_keys) {
  if (!c.config_path.empty()) {
    run.config = KeyValueConfig::load(c.config_path);
    run.inputs["config"] = c.config_path;
  }
  for (const auto& key : seed_keys) {
    if (c.seed) run.config.set(key + ".seed", std::to_string(*c.seed));
    if (c.deterministic && key != "dataset" && key != "augment") {
      run.config.set(key + ".deterministic", *c.deterministic ? "true" : "false");
    }
  }
}

fs::path require_dir(const std::string& path, const char* what) {
  if (path.empty()) throw Error(ErrorCode::kConfig, std::string("--") + what + " is required");
  if (!fs::is_directory(path)) throw Error(ErrorCode::kMissingFile, std::string(what) + " directory not found: " + path);
  return path;
}

fs::path require_out(const std::string& path) {
  if (path.empty()) throw Error(ErrorCode::kConfig, "--out is required");
  return path;
}

// Outputs must not land inside the dataset being read.
void check_outside(const fs::path& out, const fs::path& dataset) {
  const auto o = fs::weakly_canonical(out);
  const auto d = fs::weakly_canonical(dataset);
  auto [di, oi] = std::mismatch(d.begin(), d.end(), o.begin(), o.end());
  if (di == d.end()) throw Error(ErrorCode::kConfig, "--out must not be inside the input dataset");
}

void print_epoch(const char* what, const EpochRecord& r) {
  std::printf("%s epoch %d loss %.5f val_loss %.5f val_metric %.4f (%.1fs)\n", what, r.epoch, r.train_loss, r.val_loss,
              r.val_metric, r.seconds);
  std::fflush(stdout);
}

void write_run_manifest(const Run& run, const fs::path& dir, int exit_code, const std::string& error) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  json values = json::object();
  for (const auto& [k, v] : run.config.values()) values[k] = v;
  json m = {{"tool", "elemgrasp"},
            {"version", "0.1.0"},
            {"command", run.command},
            {"args", run.args},
            {"config", values},
            {"inputs", run.inputs},
            {"outputs", run.outputs},
            {"results", run.results},
            {"exit_code", exit_code}};
  if (!error.empty()) m["error"] = error;
  std::ofstream out(dir / kRunManifestName, std::ios::binary);
  out << m.dump(2) << "\n";
}

void cmd_generate(Run& run, const Common& c, std::optional<int> count) {
  load_config(run, c, {"dataset"});
  if (count) run.config.set("dataset.count", std::to_string(*count));
  const auto cfg = GenerationConfig::from_config(run.config);
  const fs::path out = require_out(c.out);
  const auto summary = generate_dataset(cfg, out);
  const auto violations = validate_dataset(out);
  if (!violations.empty()) {
    throw Error(ErrorCode::kSchemaViolation, violations.front().sample_id + ": " + violations.front().message);
  }
  const std::string checksum = dataset_checksum(out);
  for (const auto& [split, n] : summary.split_counts) {
    run.results["split_counts"][split] = n;
    std::printf("%s: %d samples\n", split.c_str(), n);
  }
  run.results["dataset_checksum"] = checksum;
  run.outputs.push_back(out.string());
  std::printf("dataset %s checksum %s\n", out.c_str(), checksum.c_str());
}

void cmd_augment(Run& run, const Common& c, std::optional<int> multiplier) {
  load_config(run, c, {"augment"});
  if (multiplier) run.config.set("augment.multiplier", std::to_string(*multiplier));
  const auto cfg = AugmentConfig::from_config(run.config);
  const fs::path src = require_dir(c.dataset, "dataset");
  const fs::path out = require_out(c.out);
  check_outside(out, src);
  const int m = static_cast<int>(run.config.get_int("augment.multiplier", 4));
  run.inputs["dataset"] = src.string();
  run.inputs["dataset_checksum"] = dataset_checksum(src);
  const auto s = augment_dataset(src, out, cfg, m);
  run.results = {{"originals", s.originals}, {"emitted", s.emitted}, {"skipped", s.skipped},
                 {"dataset_checksum", dataset_checksum(out)}};
  run.outputs.push_back(out.string());
  std::printf("originals %d augmented %d skipped %d\n", s.originals, s.emitted, s.skipped);
}

void record_dataset(Run& run, const fs::path& dataset) {
  run.inputs["dataset"] = dataset.string();
  run.inputs["dataset_checksum"] = dataset_checksum(dataset);
}

void cmd_train_decomposer(Run& run, const Common& c, std::optional<int> epochs) {
  load_config(run, c, {"decomposer"});
  if (epochs) run.config.set("decomposer.epochs", std::to_string(*epochs));
  const auto cfg = DecomposerConfig::from_config(run.config);
  const fs::path dataset = require_dir(c.dataset, "dataset");
  const fs::path out = require_out(c.out);
  check_outside(out, dataset);
  record_dataset(run, dataset);
  const auto result = train_decomposer(dataset, cfg, [](const EpochRecord& r) { print_epoch("decomposer", r); });
  save_decomposer(result.model, out);
  write_training_log(out / "training_log.jsonl", result.log);
  run.results = {{"fingerprint", result.model.fingerprint},
                 {"final_loss", result.log.back().train_loss},
                 {"final_val_metric", result.log.back().val_metric}};
  run.outputs.push_back(out.string());
}

void cmd_train_graspnet(Run& run, const Common& c, std::optional<int> epochs) {
  load_config(run, c, {"graspnet"});
  if (epochs) run.config.set("graspnet.epochs", std::to_string(*epochs));
  const auto cfg = GraspNetConfig::from_config(run.config);
  const fs::path dataset = require_dir(c.dataset, "dataset");
  const fs::path out = require_out(c.out);
  check_outside(out, dataset);
  record_dataset(run, dataset);
  const auto result = train_grasp_net(dataset, cfg, [](const EpochRecord& r) { print_epoch("graspnet", r); });
  save_grasp_net(result.model, out);
  write_training_log(out / "training_log.jsonl", result.log);
  run.results = {{"fingerprint", result.model.fingerprint},
                 {"approach_branch", result.model.approach_branch},
                 {"final_loss", result.log.back().train_loss},
                 {"final_val_metric", result.log.back().val_metric}};
  run.outputs.push_back(out.string());
}

struct Models {
  std::optional<TrainedDecomposer> decomposer;
  std::optional<TrainedGraspNet> graspnet;
  DetectionSource detections;
  GraspSource grasps;
  json metadata = json::object();
};

Models load_models(const std::string& decomposer, const std::string& graspnet) {
  if (decomposer.empty() || graspnet.empty()) {
    throw Error(ErrorCode::kConfig, "--decomposer and --graspnet are required");
  }
  Models m;
  if (decomposer == kOracle) {
    m.detections = oracle_detection_source();
    m.metadata["decomposer_fingerprint"] = kOracle;
  } else {
    m.decomposer = load_decomposer(decomposer);
    m.detections = detection_source(*m.decomposer);
    m.metadata["decomposer_fingerprint"] = m.decomposer->fingerprint;
    m.metadata["decomposer_backbone"] = kDecomposerBackbone;
  }
  if (graspnet == kOracle) {
    m.grasps = oracle_grasp_source();
    m.metadata["graspnet_fingerprint"] = kOracle;
  } else {
    m.graspnet = load_grasp_net(graspnet);
    m.grasps = grasp_source(*m.graspnet);
    m.metadata["graspnet_fingerprint"] = m.graspnet->fingerprint;
    m.metadata["approach_branch"] = m.graspnet->approach_branch;
  }
  return m;
}

struct EvalFlags {
  std::string decomposer;
  std::string graspnet;
  std::optional<double> mdc;
  std::vector<double> thresholds;
  std::vector<std::string> splits;
  bool no_plots = false;
};

void cmd_evaluate(Run& run, const Common& c, const EvalFlags& f) {
  load_config(run, c, {});
  if (f.mdc) run.config.set("eval.mdc", std::to_string(*f.mdc));
  if (!f.thresholds.empty()) run.config.set("eval.thresholds", format_list(f.thresholds));
  PipelineOptions options;
  options.mdc = run.config.get_double("eval.mdc", options.mdc);
  options.thresholds = run.config.get_double_list("eval.thresholds", options.thresholds);
  options.primary_threshold = run.config.get_double("eval.primary_threshold", options.primary_threshold);
  options.angle_threshold_deg = run.config.get_double("eval.angle_threshold_deg", options.angle_threshold_deg);
  const auto dsc_mdcs = run.config.get_double_list("eval.dsc_mdcs", {0.8, 0.85, 0.9});
  const auto splits = f.splits.empty() ? run.config.get_list("eval.splits", {"val", "novel"}) : f.splits;

  const fs::path dataset = require_dir(c.dataset, "dataset");
  const fs::path out = require_out(c.out);
  check_outside(out, dataset);
  record_dataset(run, dataset);

  std::vector<Sample> samples;
  for (const auto& split : splits) {
    // The novel split is optional; any other requested split must exist.
    if (!fs::is_directory(dataset / split)) {
      if (split == kNovelSplit && f.splits.empty()) continue;
      throw Error(ErrorCode::kMissingSplit, "split '" + split + "' not found in " + dataset.string());
    }
    auto part = load_split(dataset, split);
    samples.insert(samples.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }

  Models models = load_models(f.decomposer, f.graspnet);
  EvalReport report = evaluate_pipeline(models.detections, models.grasps, samples, options);
  report.dsc = evaluate_decomposer(models.detections, samples, dsc_mdcs);
  report.metadata = models.metadata;
  report.metadata["dataset"] = dataset.string();
  report.metadata["dataset_checksum"] = run.inputs["dataset_checksum"];
  report.metadata["splits"] = splits;

  const unsigned formats = f.no_plots ? (kReportJson | kReportTables) : kReportAll;
  for (const auto& p : write_report(report, out, formats)) run.outputs.push_back(p.string());

  const std::size_t p = report.primary_index();
  std::printf("%-10s %8s %10s %12s\n", "split", "attempts", "success%", "meanJaccard%");
  const std::array<std::pair<const char*, const Tally*>, 3> rows = {
      {{"seen", &report.seen}, {"unseen", &report.unseen}, {"overall", &report.overall}}};
  for (const auto& [name, t] : rows) {
    std::printf("%-10s %8d %10.2f %12.2f\n", name, t->attempts, t->rate(p), t->mean_jaccard());
  }
  run.results = {{"success_rate", report.overall.rate(p)},
                 {"seen_success_rate", report.seen.rate(p)},
                 {"unseen_success_rate", report.unseen.rate(p)},
                 {"failures", report.failures}};
}

cv::Mat read_color_image(const std::string& path, const char* what) {
  if (path.empty()) throw Error(ErrorCode::kConfig, std::string("--") + what + " is required");
  cv::Mat img = cv::imread(path, cv::IMREAD_COLOR);
  if (img.empty()) throw Error(ErrorCode::kMissingFile, std::string("cannot read ") + what + " image " + path);
  if (img.cols != kImageSize || img.rows != kImageSize) {
    throw Error(ErrorCode::kDimensionMismatch, std::string(what) + " image must be 224 x 224");
  }
  return img;
}

void draw_grasp(cv::Mat& img, const GraspRectangle& g) {
  const auto c = rect_corners(g);
  auto pt = [&](int i) { return cv::Point2d(c[i].x, c[i].y); };
  const cv::Scalar opening(0, 200, 0);
  const cv::Scalar jaw(0, 0, 230);
  cv::line(img, pt(0), pt(1), opening, 1, cv::LINE_AA);
  cv::line(img, pt(2), pt(3), opening, 1, cv::LINE_AA);
  cv::line(img, pt(1), pt(2), jaw, 2, cv::LINE_AA);
  cv::line(img, pt(3), pt(0), jaw, 2, cv::LINE_AA);
}

struct InferFlags {
  std::string decomposer;
  std::string graspnet;
  std::string object;
  std::string approach;
  std::string overlay;
  std::optional<double> mdc;
};

void cmd_infer(Run& run, const Common& c, const InferFlags& f) {
  load_config(run, c, {});
  if (f.mdc) run.config.set("eval.mdc", std::to_string(*f.mdc));
  const double mdc = run.config.get_double("eval.mdc", 0.85);
  if (f.decomposer == kOracle || f.graspnet == kOracle) {
    throw Error(ErrorCode::kConfig, "infer needs trained models; oracles require labels");
  }
  const cv::Mat object = read_color_image(f.object, "object");
  const cv::Mat approach = read_color_image(f.approach, "approach");
  run.inputs["object"] = f.object;
  run.inputs["approach"] = f.approach;
  Models models = load_models(f.decomposer, f.graspnet);

  const auto dets = decompose(*models.decomposer, object, mdc);
  json detections = json::array();
  for (const auto& d : dets) detections.push_back({{"class", class_name(d.element_class)}, {"confidence", d.confidence}});
  run.results["detections"] = detections;
  if (dets.empty()) throw Error(ErrorCode::kNoElementsDetected, "decomposition found no elements above mdc " + std::to_string(mdc));

  const GraspRectangle g = predict_grasp(*models.graspnet, object, approach, dets);
  const json grasp = {{"cx", g.cx()}, {"cy", g.cy()}, {"theta", g.theta_deg()}, {"width", g.width_px()},
                      {"height", g.height_px()}};
  run.results["grasp"] = grasp;
  std::cout << json{{"grasp", grasp}, {"detections", detections}}.dump(2) << std::endl;

  if (!f.overlay.empty()) {
    cv::Mat canvas = object.clone();
    draw_grasp(canvas, g);
    if (!cv::imwrite(f.overlay, canvas)) throw Error(ErrorCode::kIo, "cannot write " + f.overlay);
    run.outputs.push_back(f.overlay);
  }
}

void add_common(CLI::App* sub, Common& c, bool dataset, bool seed) {
  sub->add_option("--config", c.config_path, "INI config file; flags override its values")->check(CLI::ExistingFile);
  if (dataset) sub->add_option("--dataset", c.dataset, "Input dataset directory");
  sub->add_option("--out", c.out, "Output directory");
  if (seed) sub->add_option("--seed", c.seed, "Seed override");
  sub->add_option("--deterministic", c.deterministic, "Deterministic kernels and single thread (true/false)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"Element-based grasp detection: data generation, training, evaluation and inference", "elemgrasp"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "0.1.0");

  Common common;
  std::optional<int> count, multiplier, epochs;
  EvalFlags eval_flags;
  InferFlags infer_flags;

  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset");
  add_common(gen, common, false, true);
  gen->add_option("--count", count, "Number of train+val samples");

  auto* aug = app.add_subcommand("augment", "Write an augmented copy of a dataset");
  add_common(aug, common, true, true);
  aug->add_option("--multiplier", multiplier, "Total copies per sample, original included");

  auto* td = app.add_subcommand("train-decomposer", "Train the element decomposer");
  add_common(td, common, true, true);
  td->add_option("--epochs", epochs, "Epoch override");

  auto* tg = app.add_subcommand("train-graspnet", "Train the grasp network");
  add_common(tg, common, true, true);
  tg->add_option("--epochs", epochs, "Epoch override");

  auto* ev = app.add_subcommand("evaluate", "Evaluate a decomposer and grasp network");
  add_common(ev, common, true, false);
  ev->add_option("--decomposer", eval_flags.decomposer, "Decomposer artifact directory or 'oracle'");
  ev->add_option("--graspnet", eval_flags.graspnet, "Grasp network artifact directory or 'oracle'");
  ev->add_option("--mdc", eval_flags.mdc, "Minimum detection confidence");
  ev->add_option("--thresholds", eval_flags.thresholds, "Jaccard thresholds, ascending")->delimiter(',');
  ev->add_option("--splits", eval_flags.splits, "Splits to evaluate")->delimiter(',');
  ev->add_flag("--no-plots", eval_flags.no_plots, "Skip PNG plots");

  auto* inf = app.add_subcommand("infer", "Predict a grasp for one object/approach image pair");
  add_common(inf, common, false, false);
  inf->add_option("--decomposer", infer_flags.decomposer, "Decomposer artifact directory")->required();
  inf->add_option("--graspnet", infer_flags.graspnet, "Grasp network artifact directory")->required();
  inf->add_option("--object", infer_flags.object, "Top-view object image")->required();
  inf->add_option("--approach", infer_flags.approach, "Approach image")->required();
  inf->add_option("--overlay", infer_flags.overlay, "Write the object image with the grasp drawn");
  inf->add_option("--mdc", infer_flags.mdc, "Minimum detection confidence");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  Run run;
  run.args = args;
  CLI::App* sub = app.get_subcommands().front();
  run.command = sub->get_name();
  int rc = kExitOk;
  std::string error;
  // Dataset writers refuse non-empty targets; leave such directories alone.
  std::error_code ec;
  const bool foreign_out = (sub == gen || sub == aug) && !common.out.empty() && fs::exists(common.out, ec) &&
                           !fs::is_empty(common.out, ec);
  try {
    if (sub == gen) cmd_generate(run, common, count);
    if (sub == aug) cmd_augment(run, common, multiplier);
    if (sub == td) cmd_train_decomposer(run, common, epochs);
    if (sub == tg) cmd_train_graspnet(run, common, epochs);
    if (sub == ev) cmd_evaluate(run, common, eval_flags);
    if (sub == inf) cmd_infer(run, common, infer_flags);
  } catch (const Error& e) {
    rc = exit_code_for(e.code());
    error = e.what();
  } catch (const std::exception& e) {
    rc = kExitInternal;
    error = e.what();
  }
  if (!error.empty()) std::fprintf(stderr, "elemgrasp %s: %s\n", run.command.c_str(), error.c_str());

  if (!common.out.empty() && !(foreign_out && rc != kExitOk)) {
    try {
      write_run_manifest(run, common.out, rc, error);
    } catch (const std::exception& e) {
      std::fprintf(stderr, "elemgrasp: cannot write run manifest: %s\n", e.what());
    }
  }
  return rc;
}

}  // namespace elemgrasp::cli
