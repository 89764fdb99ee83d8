#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "protoprompt/config.hpp"
#include "protoprompt/dataset.hpp"
#include "protoprompt/eval.hpp"
#include "protoprompt/finetune.hpp"
#include "protoprompt/pipeline.hpp"
#include "protoprompt/raster.hpp"
#include "protoprompt/report_io.hpp"
#include "protoprompt/resize.hpp"
#include "protoprompt/superpixel_cache.hpp"
#include "protoprompt/synthetic_dataset.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace protoprompt::cli {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfigError:
    case ErrorCode::kInvalidArgument: return kExitUsage;
    case ErrorCode::kEmptySupport:
    case ErrorCode::kClassNotFound:
    case ErrorCode::kCorruptDataset:
    case ErrorCode::kEmptyDataset:
    case ErrorCode::kSchemaError:
    case ErrorCode::kInvalidComparison:
    case ErrorCode::kIoError: return kExitData;
    case ErrorCode::kBackendUnavailable: return kExitBackend;
    case ErrorCode::kNonFiniteLoss: return kExitFailure;
  }
  return kExitFailure;
}

namespace {

// A missing input path is a usage problem, reported before any work starts.
struct MissingInput {
  std::string path;
};

struct Common {
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<long long> seed;
  std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool out_required, const std::string& out_help) {
  cmd->add_option("--config", c.config_file, "key = value configuration file");
  cmd->add_option("--set", c.overrides, "override a configuration key (key=value), repeatable");
  cmd->add_option("--seed", c.seed, "shorthand for --set seed=N");
  auto* out = cmd->add_option("--out", c.out, out_help);
  if (out_required) out->required();
}

void must_exist(const std::string& path) {
  if (!path.empty() && !fs::exists(path)) throw MissingInput{path};
}

RunConfig resolve(const Common& c) {
  RunConfig cfg;
  if (!c.config_file.empty()) {
    must_exist(c.config_file);
    cfg.merge_file(c.config_file);
  }
  for (const auto& o : c.overrides) cfg.merge_override(o);
  if (c.seed) cfg.set("seed", std::to_string(*c.seed));
  return cfg;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

json kinds_json(const PromptSet& set) {
  json j = json::array();
  for (auto k : set.kinds()) j.push_back(to_string(k));
  return j;
}

std::string percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

void write_config_snapshot(const fs::path& dir, const RunConfig& cfg) {
  write_text_file(dir / "run_config.json", cfg.to_json().dump(2) + "\n");
  write_text_file(dir / "run_config.txt", cfg.to_text());
}

// ---------------------------------------------------------------- infer

struct InferArgs {
  Common common;
  std::string support_image, support_mask, query, truth, prompts;
};

int cmd_infer(const InferArgs& a, std::ostream& out) {
  for (const auto* p : {&a.support_image, &a.support_mask, &a.query, &a.truth}) must_exist(*p);
  RunConfig cfg = resolve(a.common);
  if (!a.prompts.empty()) cfg.set("prompts.enabled", a.prompts);
  const auto t0 = std::chrono::steady_clock::now();
  const Pipeline pipeline(make_encoder(cfg), make_segmenter(cfg), pipeline_config(cfg));
  const Image2D support = read_image_png(a.support_image);
  const BinaryMask mask = read_mask_png(a.support_mask);
  const Image2D query = read_image_png(a.query);
  if (support.shape() != mask.shape())
    fail(ErrorCode::kCorruptDataset, "support mask '" + a.support_mask + "' is " + to_string(mask.shape()) +
                                         " but the support image is " + to_string(support.shape()));
  const auto result = pipeline.run(support, mask, query);

  const fs::path mask_path = a.common.out;
  write_mask_png(mask_path, result.final_mask);
  json side;
  side["config"] = cfg.to_json();
  side["inputs"] = {{"support_image", a.support_image}, {"support_mask", a.support_mask}, {"query", a.query}};
  side["encoder"] = pipeline.encoder().name();
  side["segmenter"] = pipeline.segmenter().name();
  side["working_shape"] = {result.working_shape.rows, result.working_shape.cols};
  side["prompts_enabled"] = kinds_json(pipeline.config().enabled);
  side["empty_prediction"] = result.empty_prediction();
  if (result.prompts) {
    const auto& b = *result.prompts;
    side["prompts_used"] = kinds_json(b.present());
    side["bbox"] = b.bbox ? json{b.bbox->row_min, b.bbox->col_min, b.bbox->row_max, b.bbox->col_max} : json(nullptr);
    side["points"] = json::array();
    for (const auto& p : b.points) {
      side["points"].push_back({{"row", p.row},
                                {"col", p.col},
                                {"label", p.polarity == Polarity::kPositive ? 1 : 0},
                                {"kind", to_string(p.source)}});
    }
    side["selected_component"] = {{"confidence", b.source_component.confidence},
                                  {"area", b.source_component.pixels.size()}};
  } else {
    side["prompts_used"] = json::array();
    side["selected_component"] = nullptr;
  }
  side["segmenter_score"] = result.segmenter_score;
  side["segmenter_calls"] = result.segmenter_calls;
  side["foreground_pixels"] = result.final_mask.count();
  side["timings_ms"] = {
      {"coarse", result.timings.coarse_ms}, {"refine", result.timings.refine_ms}, {"total", ms_since(t0)}};
  if (!a.truth.empty()) {
    const auto truth = read_mask_png(a.truth);
    side["dice_vs_truth"] = dice(result.final_mask, truth);
    side["iou_vs_truth"] = iou(result.final_mask, truth);
  }
  auto sidecar = mask_path;
  sidecar.replace_extension(".json");
  write_text_file(sidecar, side.dump(2) + "\n");
  out << "mask: " << mask_path.string() << "\nsidecar: " << sidecar.string() << "\n";
  if (side.contains("dice_vs_truth")) out << "dice vs truth: " << percent(side["dice_vs_truth"]) << "\n";
  return kExitOk;
}

// ------------------------------------------------------- dataset plumbing

struct LoadedDataset {
  DatasetManifest manifest;
  ManifestConfig config;
  std::vector<PairPlan> plans;
  int folds = 1;
};

LoadedDataset load_dataset(const RunConfig& cfg, const std::string& dataset_arg, const std::string& split) {
  LoadedDataset d;
  const fs::path root = resolve_dataset_root(dataset_arg.empty() ? fs::path(cfg.get("dataset.root")) : fs::path(dataset_arg));
  if (root.empty()) fail(ErrorCode::kConfigError, "no dataset given (use --dataset or dataset.root)");
  must_exist(root.string());
  d.config = manifest_config(cfg);
  d.manifest = build_manifest(root, d.config);
  if (d.manifest.layout == DatasetLayout::kVolumes) {
    d.folds = d.config.folds;
    d.plans = plan_volume_pairs(d.manifest, configured_classes(cfg));
  } else {
    d.plans = plan_image_pairs(d.manifest);
  }
  if (!split.empty() && split != "all" && split != "test") {
    std::vector<PairPlan> kept;
    for (const auto& p : d.plans) {
      const bool volume_fold = d.manifest.layout == DatasetLayout::kVolumes && split == std::to_string(p.fold);
      if (volume_fold || p.class_id == split) kept.push_back(p);
    }
    if (kept.empty()) fail(ErrorCode::kConfigError, "split '" + split + "' selects no evaluation pairs");
    d.plans = std::move(kept);
  }
  return d;
}

// Evaluates every plan with each segment function, loading pairs in batches
// of `workers` so that only a few volumes are resident at once.
std::vector<std::vector<VolumeResult>> evaluate_plans(const LoadedDataset& d, const std::vector<SegmentFn>& fns,
                                                      const EvaluationOptions& options, int workers) {
  std::vector<std::vector<VolumeResult>> results(fns.size());
  for (std::size_t start = 0; start < d.plans.size(); start += workers) {
    std::vector<VolumePair> batch;
    for (std::size_t i = start; i < std::min(d.plans.size(), start + workers); ++i)
      batch.push_back(load_pair(d.manifest, d.plans[i], d.config));
    for (std::size_t f = 0; f < fns.size(); ++f)
      for (auto& r : evaluate_volumes(fns[f], batch, options, workers)) results[f].push_back(std::move(r));
  }
  return results;
}

void print_summary(const EvalReport& report, std::ostream& out) {
  const auto classes = summarize(report);
  for (const auto& cs : classes) {
    out << display_name(cs.class_id) << ": Dice " << cs.dice.format_percent() << "  IoU " << cs.iou.format_percent()
        << "  (" << cs.folds.size() << " folds)\n";
  }
  if (classes.size() > 1) {
    const auto mean = summarize_mean(classes, report.folds);
    out << "Mean: Dice " << mean.dice.format_percent() << "  IoU " << mean.iou.format_percent() << "\n";
  }
}

// ------------------------------------------------------------- evaluate

struct EvaluateArgs {
  Common common;
  std::string dataset, split, wilcoxon, report;
  std::optional<int> workers;
};

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  must_exist(a.wilcoxon);
  must_exist(a.report);
  RunConfig cfg = resolve(a.common);
  if (a.workers) cfg.set("eval.workers", std::to_string(*a.workers));
  const fs::path dir = a.common.out;

  EvalReport report;
  if (!a.report.empty()) {
    report = load_report(a.report);
  } else {
    const auto options = evaluation_options(cfg);
    const int workers = static_cast<int>(cfg.get_int("eval.workers"));
    const auto data = load_dataset(cfg, a.dataset, a.split);
    const Pipeline pipeline(make_encoder(cfg), make_segmenter(cfg), pipeline_config(cfg));
    report.dataset = data.manifest.root;
    report.seed = cfg.seed();
    report.folds = data.folds;
    report.config = cfg.to_json();
    report.volumes = std::move(evaluate_plans(data, {segment_with(pipeline)}, options, workers)[0]);
    const std::string method = pipeline.encoder().name() + " + " + pipeline.segmenter().name();
    persist_report(report, dir / "report.json");
    write_fold_csv(report, dir / "folds.csv");
    write_class_table_csv(report, method, dir / "table.csv");
    std::vector<Bar> bars;
    for (const auto& cs : summarize(report)) bars.push_back({display_name(cs.class_id), cs.dice.mean, cs.dice.std});
    write_bar_chart_svg(bars, "Dice by class (" + method + ")", dir / "dice.svg");
    write_config_snapshot(dir, cfg);
    print_summary(report, out);
    out << "report: " << (dir / "report.json").string() << "\n";
  }

  if (!a.wilcoxon.empty()) {
    const auto other = load_report(a.wilcoxon);
    const auto rows = compare_reports(report, other);
    const std::string label = (a.report.empty() ? std::string("this run") : a.report) + " vs " + a.wilcoxon;
    write_wilcoxon_csv(rows, label, dir / "wilcoxon.csv");
    json j{{"comparison", label}, {"config", cfg.to_json()}, {"rows", wilcoxon_to_json(rows)}};
    write_text_file(dir / "wilcoxon.json", j.dump(2) + "\n");
    for (const auto& r : rows) {
      char buf[160];
      std::snprintf(buf, sizeof buf, "wilcoxon %-8s n=%-3d W+=%-7.1f p=%.6g (%s)\n", r.label.c_str(), r.test.n_used,
                    r.test.w_plus, r.test.p_value, to_string(r.test.method));
      out << buf;
    }
  } else if (!a.report.empty()) {
    print_summary(report, out);
  }
  return kExitOk;
}

// --------------------------------------------------------------- ablate

struct AblateArgs {
  Common common;
  std::string dataset, combos, split;
  std::optional<int> workers;
};

int cmd_ablate(const AblateArgs& a, std::ostream& out) {
  RunConfig cfg = resolve(a.common);
  if (!a.combos.empty()) cfg.set("ablate.combos", a.combos);
  if (a.workers) cfg.set("eval.workers", std::to_string(*a.workers));
  const auto combos = ablation_combos(cfg);
  const auto options = evaluation_options(cfg);
  const int workers = static_cast<int>(cfg.get_int("eval.workers"));
  const auto data = load_dataset(cfg, a.dataset, a.split);
  const auto encoder = make_encoder(cfg);
  const auto segmenter = make_segmenter(cfg);

  std::vector<std::unique_ptr<Pipeline>> pipelines;
  std::vector<SegmentFn> fns;
  for (const auto& combo : combos) {
    auto pc = pipeline_config(cfg);
    pc.enabled = combo;
    pipelines.push_back(std::make_unique<Pipeline>(encoder, segmenter, pc));
    fns.push_back(segment_with(*pipelines.back()));
  }
  const auto results = evaluate_plans(data, fns, options, workers);

  std::vector<std::string> splits;
  for (const auto& p : data.plans) splits.push_back(p.class_id);
  splits = canonical_class_order(splits);

  const fs::path dir = a.common.out;
  std::string csv = "prompts";
  for (const auto& s : splits) csv += "," + display_name(s) + " Dice," + display_name(s) + " IoU";
  csv += ",Mean Dice,Mean IoU\n";
  json rows = json::array();
  std::vector<Bar> bars;
  for (std::size_t c = 0; c < combos.size(); ++c) {
    json row{{"prompts", combos[c].to_string()}, {"splits", json::object()}};
    csv += combos[c].to_string();
    double mean_dice = 0, mean_iou = 0;
    for (const auto& s : splits) {
      double d = 0, j = 0;
      int n = 0;
      for (const auto& v : results[c]) {
        if (v.class_id != s) continue;
        d += v.dice();
        j += v.iou();
        ++n;
      }
      d /= n;
      j /= n;
      mean_dice += d / splits.size();
      mean_iou += j / splits.size();
      row["splits"][s] = {{"dice", d}, {"iou", j}, {"volumes", n}};
      csv += "," + percent(d) + "," + percent(j);
    }
    row["mean_dice"] = mean_dice;
    row["mean_iou"] = mean_iou;
    csv += "," + percent(mean_dice) + "," + percent(mean_iou) + "\n";
    rows.push_back(row);
    bars.push_back({combos[c].to_string(), mean_dice, 0.0});
    out << combos[c].to_string() << ": mean Dice " << percent(mean_dice) << ", mean IoU " << percent(mean_iou) << "\n";
  }
  write_text_file(dir / "ablation.csv", csv);
  write_text_file(dir / "ablation.json", json{{"config", cfg.to_json()}, {"rows", rows}}.dump(2) + "\n");
  write_bar_chart_svg(bars, "Mean Dice by prompt combination", dir / "ablation.svg");
  write_config_snapshot(dir, cfg);
  return kExitOk;
}

// ------------------------------------------------------------- finetune

struct FinetuneArgs {
  Common common;
  std::string dataset, resume;
  std::optional<int> steps;
};

std::vector<Image2D> training_images(const LoadedDataset& d, const SplitSpec& split) {
  const fs::path root(d.manifest.root);
  std::vector<Image2D> out;
  const auto items = training_items(d.manifest, split);
  if (d.manifest.layout == DatasetLayout::kImagePairs) {
    for (const auto& item : items) out.push_back(read_image_png(root / item.image));
    return out;
  }
  std::map<std::string, std::vector<int>> by_scan;
  std::map<std::string, fs::path> scan_dirs;
  for (const auto& item : items) {
    by_scan[item.scan_id].push_back(item.slice);
    scan_dirs[item.scan_id] = root / fs::path(item.image).parent_path();
  }
  for (const auto& [scan, slices] : by_scan) {
    const auto vol = load_volume(scan_dirs[scan], d.config.normalization);
    for (int z : slices) out.push_back(vol.images[z]);
  }
  return out;
}

int cmd_finetune(const FinetuneArgs& a, std::ostream& out) {
  must_exist(a.resume);
  RunConfig cfg = resolve(a.common);
  if (a.steps) cfg.set("finetune.steps", std::to_string(*a.steps));
  auto tc = train_config(cfg);
  if (cfg.get("encoder.backend") != "stub") {
    fail(ErrorCode::kBackendUnavailable,
         "adapter finetuning needs gradients through the encoder, which the external helper does not expose; "
         "use encoder.backend=stub");
  }
  const std::string setting = cfg.get("dataset.setting");
  if (setting != "standard" && setting != "exclude-test-class")
    fail(ErrorCode::kConfigError, "dataset.setting must be standard or exclude-test-class");
  const SplitSpec split{cfg.get("dataset.held_out_class"),
                        setting == "standard" ? SplitSetting::kStandard : SplitSetting::kExcludeTestClass};
  if (split.setting == SplitSetting::kExcludeTestClass && split.held_out_class.empty())
    fail(ErrorCode::kConfigError, "dataset.setting=exclude-test-class needs dataset.held_out_class");

  const fs::path dir = a.common.out;
  tc.output_dir = dir;
  const LoadedDataset data{build_manifest(resolve_dataset_root(a.dataset.empty() ? fs::path(cfg.get("dataset.root"))
                                                                                 : fs::path(a.dataset)),
                                          manifest_config(cfg)),
                           manifest_config(cfg),
                           {},
                           1};
  auto images = training_images(data, split);
  const auto cap = cfg.get_int("finetune.max_images");
  if (cap > 0 && static_cast<std::size_t>(cap) < images.size()) {
    // Evenly spaced subset keeps coverage of the whole dataset.
    std::vector<Image2D> kept;
    for (long long i = 0; i < cap; ++i) kept.push_back(images[i * images.size() / cap]);
    images = std::move(kept);
  }
  if (images.empty()) fail(ErrorCode::kEmptyDataset, "no training images after applying the split");

  SuperpixelCache cache(dir / "superpixel_cache");
  std::vector<TrainingImage> training;
  for (const auto& img : images) {
    auto resized = resize(img, {tc.image_size, tc.image_size}, Interpolation::kBilinear);
    auto sp = cache.get(resized, tc.superpixels);
    training.push_back({std::move(resized), std::move(sp)});
  }
  write_config_snapshot(dir, cfg);
  TrainableStubEncoder encoder(stub_encoder_options(cfg), tc.adapter_rank, cfg.seed());
  std::optional<fs::path> resume;
  if (!a.resume.empty()) resume = a.resume;
  const auto report = train(training, encoder, tc, resume);
  out << "trained on " << training.size() << " images; steps run: " << report.history.size() << "\n";
  if (!report.history.empty()) {
    const auto& last = report.history.back();
    out << "step " << last.step << ": l_seg " << last.seg << ", l_reg " << last.reg << "\n";
  }
  out << "checkpoint: " << report.last_checkpoint.string() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string out, kind = "volumes", format = "nifti";
  int scans = 5, slices = 12, size = 96, count = 20;
  std::vector<std::string> subsets;
  long long seed = 0;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  if (a.size < 32) fail(ErrorCode::kConfigError, "--size must be >= 32");
  if (a.seed < 0) fail(ErrorCode::kConfigError, "--seed must be >= 0");
  if (a.kind == "volumes") {
    synthetic::VolumeDatasetSpec spec;
    spec.scans = a.scans;
    spec.slices = a.slices;
    spec.shape = {a.size, a.size};
    spec.seed = static_cast<std::uint64_t>(a.seed);
    if (a.format != "nifti" && a.format != "png") fail(ErrorCode::kConfigError, "--format must be nifti or png");
    spec.format = a.format == "nifti" ? VolumeFormat::kNifti : VolumeFormat::kPngSlices;
    synthetic::write_volume_dataset(a.out, spec);
    out << "wrote " << a.scans << " scans to " << a.out << "\n";
  } else if (a.kind == "images") {
    synthetic::ImageDatasetSpec spec;
    spec.shape = {a.size, a.size};
    spec.seed = static_cast<std::uint64_t>(a.seed);
    spec.subsets.clear();
    for (const auto& s : a.subsets.empty() ? std::vector<std::string>{"synthetic"} : a.subsets) spec.subsets[s] = a.count;
    synthetic::write_image_dataset(a.out, spec);
    out << "wrote " << spec.subsets.size() << " subsets of " << a.count << " images to " << a.out << "\n";
  } else {
    fail(ErrorCode::kConfigError, "--kind must be volumes or images");
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"One-shot segmentation from prototype matching and prompt-driven refinement"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  InferArgs infer;
  auto* c_infer = app.add_subcommand("infer", "segment one query image from one annotated support image");
  c_infer->add_option("--support-image", infer.support_image, "support image (PNG)")->required();
  c_infer->add_option("--support-mask", infer.support_mask, "support mask (PNG, foreground >= 128)")->required();
  c_infer->add_option("--query", infer.query, "query image (PNG)")->required();
  c_infer->add_option("--prompts", infer.prompts, "prompt kinds, e.g. bbox+conf+cent");
  c_infer->add_option("--truth", infer.truth, "optional query ground truth; adds Dice/IoU to the sidecar");
  add_common(c_infer, infer.common, true, "output mask path (.png); the sidecar goes next to it as .json");

  EvaluateArgs evaluate;
  auto* c_eval = app.add_subcommand("evaluate", "cross-validated one-shot evaluation");
  c_eval->add_option("--dataset", evaluate.dataset, "dataset root");
  c_eval->add_option("--split", evaluate.split, "all (default), a fold number, or a class/subset name");
  c_eval->add_option("--wilcoxon", evaluate.wilcoxon, "other report.json to compare against");
  c_eval->add_option("--report", evaluate.report, "reuse an existing report.json instead of evaluating");
  c_eval->add_option("--workers", evaluate.workers, "volumes evaluated in parallel");
  add_common(c_eval, evaluate.common, true, "output directory");

  AblateArgs ablate;
  auto* c_ablate = app.add_subcommand("ablate", "compare prompt combinations");
  c_ablate->add_option("--dataset", ablate.dataset, "dataset root");
  c_ablate->add_option("--split", ablate.split, "all (default), a fold number, or a class/subset name");
  c_ablate->add_option("--combos", ablate.combos, "';'-separated combinations, e.g. 'cent;bbox+conf'");
  c_ablate->add_option("--workers", ablate.workers, "volumes evaluated in parallel");
  add_common(c_ablate, ablate.common, true, "output directory");

  FinetuneArgs finetune;
  auto* c_ft = app.add_subcommand("finetune", "self-supervised adapter training on target images");
  c_ft->add_option("--dataset", finetune.dataset, "dataset root");
  c_ft->add_option("--steps", finetune.steps, "shorthand for --set finetune.steps=N");
  c_ft->add_option("--resume", finetune.resume, "adapter_step{N}.json to continue from");
  add_common(c_ft, finetune.common, true, "output directory for checkpoints and the loss log");

  SynthArgs synth;
  auto* c_synth = app.add_subcommand("synth", "write a generated dataset");
  c_synth->add_option("--out", synth.out, "output directory")->required();
  c_synth->add_option("--kind", synth.kind, "volumes or images");
  c_synth->add_option("--format", synth.format, "volume format: nifti or png");
  c_synth->add_option("--scans", synth.scans, "number of scans");
  c_synth->add_option("--slices", synth.slices, "slices per scan");
  c_synth->add_option("--size", synth.size, "image side length");
  c_synth->add_option("--count", synth.count, "images per subset");
  c_synth->add_option("--subset", synth.subsets, "subset name, repeatable");
  c_synth->add_option("--seed", synth.seed, "generator seed");

  std::vector<const char*> argv{"protoprompt"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (c_infer->parsed()) return cmd_infer(infer, out);
    if (c_eval->parsed()) return cmd_evaluate(evaluate, out);
    if (c_ablate->parsed()) return cmd_ablate(ablate, out);
    if (c_ft->parsed()) return cmd_finetune(finetune, out);
    if (c_synth->parsed()) return cmd_synth(synth, out);
  } catch (const MissingInput& m) {
    err << "error: file not found: " << m.path << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace protoprompt::cli
