#include "protoprompt/segmenter.hpp"

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "protoprompt/error.hpp"
#include "protoprompt/npy.hpp"
#include "subprocess.hpp"

namespace protoprompt {

SegmentationCandidate PromptableSegmenter::segment(const Image2D& image, const PromptBundle& prompts) const {
  const PromptSet supported = accepts();
  if (!prompts.enabled.subset_of(supported) || !prompts.present().subset_of(supported)) {
    fail(ErrorCode::kInvalidArgument, "segmenter '" + name() + "' does not accept prompts {" +
                                          prompts.present().to_string() + "}; supported: {" +
                                          supported.to_string() + "}");
  }
  require(prompts.frame == image.shape(), "segment: prompt frame " + to_string(prompts.frame) +
                                              " does not match image " + to_string(image.shape()));
  auto candidates = predict(image, prompts);
  require(!candidates.empty(), "segment: backend '" + name() + "' produced no candidates");
  std::size_t best = 0;
  for (std::size_t i = 1; i < candidates.size(); ++i)
    if (candidates[i].score > candidates[best].score) best = i;
  require(candidates[best].mask.shape() == image.shape(), "segment: backend mask does not match image shape");
  return std::move(candidates[best]);
}

std::string StubSegmenter::name() const {
  return mode_ == StubSegmenterMode::kBoxFill ? "stub-box-fill" : "stub-component-echo";
}

std::vector<SegmentationCandidate> StubSegmenter::predict(const Image2D& image, const PromptBundle& prompts) const {
  if (mode_ == StubSegmenterMode::kComponentEcho) return {{prompts.component_mask(), 1.0}};

  std::optional<BoundingBox> box = prompts.bbox;
  if (!box) {
    for (const auto& p : prompts.points) {
      if (p.polarity != Polarity::kPositive) continue;
      if (!box) {
        box = BoundingBox{p.row, p.col, p.row, p.col};
        continue;
      }
      box->row_min = std::min(box->row_min, p.row);
      box->row_max = std::max(box->row_max, p.row);
      box->col_min = std::min(box->col_min, p.col);
      box->col_max = std::max(box->col_max, p.col);
    }
  }
  std::vector<std::uint8_t> labels(image.shape().area(), 0);
  if (box) {
    for (int r = box->row_min; r <= box->row_max; ++r)
      for (int c = box->col_min; c <= box->col_max; ++c) labels[static_cast<std::size_t>(r) * image.cols() + c] = 1;
  }
  return {{BinaryMask(image.rows(), image.cols(), std::move(labels)), 1.0}};
}

ExternalSegmenter::ExternalSegmenter(ExternalSegmenterOptions options) : options_(std::move(options)) {}

std::string ExternalSegmenter::model_id(ExternalSegmenterVariant variant) {
  switch (variant) {
    case ExternalSegmenterVariant::kHuge: return "sam_vit_h";
    case ExternalSegmenterVariant::kBase: return "sam_vit_b";
    case ExternalSegmenterVariant::kMedSamBase: return "medsam_vit_b";
  }
  return "";
}

std::string ExternalSegmenter::name() const {
  switch (options_.variant) {
    case ExternalSegmenterVariant::kHuge: return "external-huge";
    case ExternalSegmenterVariant::kBase: return "external-base";
    case ExternalSegmenterVariant::kMedSamBase: return "external-medsam-base";
  }
  return "external";
}

PromptSet ExternalSegmenter::accepts() const {
  if (options_.variant == ExternalSegmenterVariant::kMedSamBase) return {PromptKind::kBbox};
  return PromptSet::all();
}

std::string prompts_to_json(const PromptBundle& prompts) {
  nlohmann::json j;
  j["frame"] = {prompts.frame.rows, prompts.frame.cols};
  if (prompts.bbox) {
    j["bbox"] = {prompts.bbox->row_min, prompts.bbox->col_min, prompts.bbox->row_max, prompts.bbox->col_max};
  } else {
    j["bbox"] = nullptr;
  }
  j["points"] = nlohmann::json::array();
  for (const auto& p : prompts.points) {
    j["points"].push_back({{"row", p.row},
                           {"col", p.col},
                           {"label", p.polarity == Polarity::kPositive ? 1 : 0},
                           {"kind", to_string(p.source)}});
  }
  return j.dump();
}

std::vector<SegmentationCandidate> ExternalSegmenter::predict(const Image2D& image, const PromptBundle& prompts) const {
  if (options_.weights_path.empty() || !std::filesystem::exists(options_.weights_path)) {
    fail(ErrorCode::kBackendUnavailable,
         "segmenter weights not found at '" + options_.weights_path.string() +
             "'; download the checkpoint and set segmenter.weights_path, or use segmenter.backend=stub-box-fill");
  }
  detail::TempDir tmp;
  const auto image_path = tmp.path() / "image.npy";
  const auto prompt_path = tmp.path() / "prompts.json";
  const auto mask_path = tmp.path() / "masks.npy";
  const auto score_path = tmp.path() / "scores.json";

  npy::Array arr;
  arr.dtype = npy::DType::kFloat32;
  arr.shape = {static_cast<std::size_t>(image.rows()), static_cast<std::size_t>(image.cols()),
               static_cast<std::size_t>(image.channels())};
  arr.values.assign(image.pixels().begin(), image.pixels().end());
  npy::write(image_path, arr);
  std::ofstream(prompt_path) << prompts_to_json(prompts);

  const auto result = detail::run_command(
      options_.command, {"segment", "--model", model_id(options_.variant), "--weights",
                         options_.weights_path.string(), "--device", options_.device, "--image", image_path.string(),
                         "--prompts", prompt_path.string(), "--output", mask_path.string(), "--scores",
                         score_path.string()});
  if (result.exit_code != 0 || !std::filesystem::exists(mask_path) || !std::filesystem::exists(score_path)) {
    fail(ErrorCode::kBackendUnavailable, "segmenter command '" + options_.command + "' failed (exit " +
                                             std::to_string(result.exit_code) + "): " + result.output);
  }
  const auto masks = npy::read(mask_path);
  nlohmann::json scores;
  std::ifstream(score_path) >> scores;
  if (masks.shape.size() != 3 || masks.shape[1] != static_cast<std::size_t>(image.rows()) ||
      masks.shape[2] != static_cast<std::size_t>(image.cols()) || !scores.is_array() ||
      scores.size() != masks.shape[0]) {
    fail(ErrorCode::kBackendUnavailable, "segmenter returned masks/scores of unexpected shape");
  }
  std::vector<SegmentationCandidate> out;
  const std::size_t plane = image.shape().area();
  for (std::size_t k = 0; k < masks.shape[0]; ++k) {
    std::vector<std::uint8_t> labels(plane);
    for (std::size_t i = 0; i < plane; ++i) labels[i] = masks.values[k * plane + i] > 0.5 ? 1 : 0;
    out.push_back({BinaryMask(image.rows(), image.cols(), std::move(labels)), scores[k].get<double>()});
  }
  return out;
}

std::unique_ptr<PromptableSegmenter> make_segmenter(const std::string& name, const ExternalSegmenterOptions& external) {
  if (name == "stub-box-fill" || name == "stub") return std::make_unique<StubSegmenter>(StubSegmenterMode::kBoxFill);
  if (name == "stub-component-echo") return std::make_unique<StubSegmenter>(StubSegmenterMode::kComponentEcho);
  ExternalSegmenterOptions options = external;
  if (name == "external-huge") {
    options.variant = ExternalSegmenterVariant::kHuge;
  } else if (name == "external-base") {
    options.variant = ExternalSegmenterVariant::kBase;
  } else if (name == "external-medsam-base") {
    options.variant = ExternalSegmenterVariant::kMedSamBase;
  } else {
    fail(ErrorCode::kConfigError, "unknown segmenter backend '" + name +
                                      "' (expected stub-box-fill, stub-component-echo, external-huge, "
                                      "external-base, external-medsam-base)");
  }
  return std::make_unique<ExternalSegmenter>(options);
}

}  // namespace protoprompt
