#include "protoprompt/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "protoprompt/error.hpp"

namespace protoprompt {

const std::vector<ConfigKey>& config_schema() {
  using T = ConfigType;
  static const std::vector<ConfigKey> schema = {
      {"seed", T::kInt, "0", "seed for every random choice"},
      {"encoder.backend", T::kString, "stub", "stub or external"},
      {"encoder.adapter", T::kString, "", "adapter checkpoint (adapter_step{N}.json) applied to the stub encoder"},
      {"encoder.feature_dim", T::kInt, "0", "feature channels; 0 picks 128 (stub) or 1024 (external)"},
      {"encoder.patch_stride", T::kInt, "14", "pixels per feature cell"},
      {"encoder.bandwidth", T::kReal, "0.15", "stub kernel width"},
      {"encoder.model", T::kString, "dinov2_vitl14", "external model id"},
      {"encoder.weights_path", T::kString, "", "external encoder weights"},
      {"encoder.device", T::kString, "cpu", "external encoder device"},
      {"encoder.command", T::kString, "python3 tools/external_backend.py", "external helper command"},
      {"segmenter.backend", T::kString, "stub-box-fill",
       "stub-box-fill, stub-component-echo, external-huge, external-base or external-medsam-base"},
      {"segmenter.weights_path", T::kString, "", "external segmenter weights"},
      {"segmenter.device", T::kString, "cpu", "external segmenter device"},
      {"segmenter.command", T::kString, "python3 tools/external_backend.py", "external helper command"},
      {"pipeline.image_size", T::kInt, "672", "square working resolution; 0 keeps native size"},
      {"protoseg.window", T::kString, "4x4", "local pooling window in feature cells (RxC or N)"},
      {"protoseg.occupancy_threshold", T::kReal, "0.95", "minimum class share for a local prototype"},
      {"protoseg.alpha", T::kReal, "20", "similarity temperature"},
      {"prompts.enabled", T::kString, "bbox+conf+cent", "prompt kinds sent to the segmenter"},
      {"prompts.threshold", T::kReal, "0.5", "foreground threshold on the coarse map"},
      {"prompts.connectivity", T::kInt, "8", "4 or 8"},
      {"prompts.conf_points", T::kInt, "1", "positive points at the highest probabilities"},
      {"prompts.neg_points", T::kInt, "1", "negative points outside the component"},
      {"dataset.root", T::kString, "", "dataset directory (overridden by PROTOPROMPT_DATASET_ROOT)"},
      {"dataset.modality", T::kString, "MRI", "CT, MRI or endoscopy"},
      {"dataset.ct_window_min", T::kReal, "-160", "CT window lower bound (HU)"},
      {"dataset.ct_window_max", T::kReal, "240", "CT window upper bound (HU)"},
      {"dataset.mri_low_percentile", T::kReal, "0.5", "MRI clipping percentile"},
      {"dataset.mri_high_percentile", T::kReal, "99.5", "MRI clipping percentile"},
      {"dataset.held_out_class", T::kString, "", "class removed from training slices under exclude-test-class"},
      {"dataset.setting", T::kString, "standard", "standard or exclude-test-class"},
      {"dataset.test_split_sizes", T::kString, "", "extra image-pair test split sizes, e.g. 'Kvasir:64,mine:10'"},
      {"eval.classes", T::kString, "lk,rk,spleen,liver", "classes evaluated on volume datasets"},
      {"eval.sections", T::kInt, "3", "sections per class span"},
      {"eval.folds", T::kInt, "5", "cross-validation folds"},
      {"eval.exclude_empty_slices", T::kBool, "false", "drop both-empty slices from slice means"},
      {"eval.workers", T::kInt, "1", "volumes evaluated in parallel"},
      {"ablate.combos", T::kString, "cent;conf;cent+conf;bbox;cent+conf+bbox;cent+conf+neg+bbox",
       "prompt combinations, ';'-separated"},
      {"finetune.steps", T::kInt, "100000", "optimisation steps"},
      {"finetune.lr", T::kReal, "1e-4", "Adam learning rate"},
      {"finetune.image_size", T::kInt, "256", "training resolution"},
      {"finetune.rank", T::kInt, "4", "adapter rank"},
      {"finetune.reg_weight", T::kReal, "1", "weight of the alignment loss"},
      {"finetune.checkpoint_interval", T::kInt, "1000", "steps between checkpoints"},
      {"finetune.max_images", T::kInt, "0", "cap on training images; 0 uses all"},
      {"finetune.superpixel_scale", T::kReal, "100", "Felzenszwalb scale (8-bit units)"},
      {"finetune.superpixel_sigma", T::kReal, "0.8", "Felzenszwalb smoothing"},
      {"finetune.superpixel_min_size", T::kInt, "400", "Felzenszwalb minimum segment size"},
      {"finetune.max_rotation_deg", T::kReal, "20", "augmentation rotation range"},
      {"finetune.min_scale", T::kReal, "0.9", "augmentation scale range"},
      {"finetune.max_scale", T::kReal, "1.1", "augmentation scale range"},
      {"finetune.max_translation", T::kReal, "0.1", "augmentation shift, fraction of side"},
      {"finetune.min_gamma", T::kReal, "0.7", "intensity gamma range"},
      {"finetune.max_gamma", T::kReal, "1.3", "intensity gamma range"},
      {"finetune.noise_sigma", T::kReal, "0.02", "additive noise level"},
  };
  return schema;
}

namespace {

const ConfigKey* find_key(const std::string& name) {
  for (const auto& k : config_schema())
    if (k.name == name) return &k;
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_int(const std::string& s, long long& out) {
  const auto* end = s.data() + s.size();
  const auto r = std::from_chars(s.data(), end, out);
  return r.ec == std::errc() && r.ptr == end;
}

bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  std::istringstream in(s);
  in >> out;
  return !in.fail() && in.eof() && std::isfinite(out);
}

bool parse_bool(const std::string& s, bool& out) {
  if (s == "true" || s == "1" || s == "yes" || s == "on") {
    out = true;
    return true;
  }
  if (s == "false" || s == "0" || s == "no" || s == "off") {
    out = false;
    return true;
  }
  return false;
}

void check_type(const ConfigKey& key, const std::string& value, const std::string& origin) {
  long long i;
  double d;
  bool b;
  bool ok = true;
  switch (key.type) {
    case ConfigType::kString: break;
    case ConfigType::kInt: ok = parse_int(value, i); break;
    case ConfigType::kReal: ok = parse_real(value, d); break;
    case ConfigType::kBool: ok = parse_bool(value, b); break;
  }
  if (!ok) fail(ErrorCode::kConfigError, origin + ": '" + value + "' is not a valid value for " + key.name);
}

[[noreturn]] void config_fail(const std::string& message) { fail(ErrorCode::kConfigError, message); }

void config_require(bool ok, const std::string& message) {
  if (!ok) config_fail(message);
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& k : config_schema()) values_[k.name] = k.default_value;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto* k = find_key(key);
  if (!k) config_fail("unknown config key '" + key + "'");
  check_type(*k, value, "config");
  values_[key] = value;
}

void RunConfig::merge_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    const std::string where = origin + ":" + std::to_string(n);
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) config_fail(where + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const auto* k = find_key(key);
    if (!k) config_fail(where + ": unknown config key '" + key + "'");
    check_type(*k, value, where);
    values_[key] = value;
  }
}

void RunConfig::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) config_fail("cannot read config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  merge_text(buf.str(), path.string());
}

void RunConfig::merge_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) config_fail("override '" + assignment + "' must look like key=value");
  merge_text(assignment, "--set");
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) config_fail("unknown config key '" + key + "'");
  return it->second;
}

long long RunConfig::get_int(const std::string& key) const {
  long long v = 0;
  if (!parse_int(get(key), v)) config_fail(key + " is not an integer");
  return v;
}

double RunConfig::get_real(const std::string& key) const {
  double v = 0;
  if (!parse_real(get(key), v)) config_fail(key + " is not a number");
  return v;
}

bool RunConfig::get_bool(const std::string& key) const {
  bool v = false;
  if (!parse_bool(get(key), v)) config_fail(key + " is not a boolean");
  return v;
}

std::uint64_t RunConfig::seed() const {
  const long long s = get_int("seed");
  config_require(s >= 0, "seed must be >= 0");
  return static_cast<std::uint64_t>(s);
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& k : config_schema()) {
    switch (k.type) {
      case ConfigType::kString: j[k.name] = get(k.name); break;
      case ConfigType::kInt: j[k.name] = get_int(k.name); break;
      case ConfigType::kReal: j[k.name] = get_real(k.name); break;
      case ConfigType::kBool: j[k.name] = get_bool(k.name); break;
    }
  }
  return j;
}

std::string RunConfig::to_text() const {
  std::string out;
  for (const auto& k : config_schema()) out += k.name + " = " + get(k.name) + "\n";
  return out;
}

ProtoSegConfig protoseg_config(const RunConfig& config) {
  ProtoSegConfig c;
  const std::string w = config.get("protoseg.window");
  long long r = 0, col = 0;
  const auto x = w.find_first_of("xX");
  const bool ok = x == std::string::npos ? parse_int(w, r) && (col = r, true)
                                         : parse_int(w.substr(0, x), r) && parse_int(w.substr(x + 1), col);
  config_require(ok && r >= 1 && col >= 1, "protoseg.window must be N or RxC with positive sizes, got '" + w + "'");
  c.window = {static_cast<int>(r), static_cast<int>(col)};
  c.occupancy_threshold = config.get_real("protoseg.occupancy_threshold");
  config_require(c.occupancy_threshold > 0.0 && c.occupancy_threshold <= 1.0,
                 "protoseg.occupancy_threshold must lie in (0, 1]");
  c.alpha = config.get_real("protoseg.alpha");
  config_require(c.alpha > 0.0, "protoseg.alpha must be > 0");
  return c;
}

PromptConfig prompt_config(const RunConfig& config) {
  PromptConfig c;
  c.threshold = config.get_real("prompts.threshold");
  config_require(c.threshold > 0.0 && c.threshold < 1.0, "prompts.threshold must lie in (0, 1)");
  const auto conn = config.get_int("prompts.connectivity");
  config_require(conn == 4 || conn == 8, "prompts.connectivity must be 4 or 8");
  c.connectivity = conn == 4 ? Connectivity::kFour : Connectivity::kEight;
  c.conf_points = static_cast<int>(config.get_int("prompts.conf_points"));
  c.neg_points = static_cast<int>(config.get_int("prompts.neg_points"));
  config_require(c.conf_points >= 1 && c.neg_points >= 1, "prompts.conf_points and prompts.neg_points must be >= 1");
  return c;
}

namespace {

PromptSet parse_prompts(const std::string& text, const std::string& key) {
  try {
    const auto set = PromptSet::parse(text);
    config_require(!set.empty(), key + " must name at least one prompt kind");
    return set;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kConfigError) throw;
    config_fail(key + ": " + e.what());
  }
}

}  // namespace

PipelineConfig pipeline_config(const RunConfig& config) {
  PipelineConfig c;
  c.image_size = static_cast<int>(config.get_int("pipeline.image_size"));
  config_require(c.image_size >= 0, "pipeline.image_size must be >= 0");
  c.protoseg = protoseg_config(config);
  c.prompts = prompt_config(config);
  c.enabled = parse_prompts(config.get("prompts.enabled"), "prompts.enabled");
  return c;
}

StubEncoderOptions stub_encoder_options(const RunConfig& config) {
  StubEncoderOptions o;
  const auto dim = config.get_int("encoder.feature_dim");
  o.feature_dim = dim == 0 ? 128 : static_cast<int>(dim);
  o.patch_stride = static_cast<int>(config.get_int("encoder.patch_stride"));
  o.bandwidth = config.get_real("encoder.bandwidth");
  o.seed = config.seed();
  config_require(o.feature_dim >= 1 && o.patch_stride >= 1 && o.bandwidth > 0.0,
                 "encoder.feature_dim, encoder.patch_stride and encoder.bandwidth must be positive");
  return o;
}

std::shared_ptr<const EncoderBackend> make_encoder(const RunConfig& config) {
  const std::string backend = config.get("encoder.backend");
  const std::string adapter = config.get("encoder.adapter");
  if (backend == "stub") {
    if (!adapter.empty()) return std::make_shared<TrainableStubEncoder>(encoder_from_checkpoint(load_checkpoint(adapter)));
    return std::make_shared<StubEncoder>(stub_encoder_options(config));
  }
  if (backend == "external") {
    config_require(adapter.empty(), "encoder.adapter applies only to encoder.backend=stub");
    ExternalEncoderOptions o;
    o.command = config.get("encoder.command");
    o.weights_path = config.get("encoder.weights_path");
    o.device = config.get("encoder.device");
    o.model = config.get("encoder.model");
    const auto dim = config.get_int("encoder.feature_dim");
    o.feature_dim = dim == 0 ? 1024 : static_cast<int>(dim);
    o.patch_stride = static_cast<int>(config.get_int("encoder.patch_stride"));
    config_require(o.feature_dim >= 1 && o.patch_stride >= 1, "encoder dimensions must be positive");
    return std::make_shared<ExternalEncoder>(o);
  }
  config_fail("unknown encoder.backend '" + backend + "' (expected stub or external)");
}

std::shared_ptr<const PromptableSegmenter> make_segmenter(const RunConfig& config) {
  ExternalSegmenterOptions o;
  o.command = config.get("segmenter.command");
  o.weights_path = config.get("segmenter.weights_path");
  o.device = config.get("segmenter.device");
  return make_segmenter(config.get("segmenter.backend"), o);
}

EvaluationOptions evaluation_options(const RunConfig& config) {
  EvaluationOptions o;
  o.sections = static_cast<int>(config.get_int("eval.sections"));
  config_require(o.sections >= 1, "eval.sections must be >= 1");
  o.exclude_empty_slices = config.get_bool("eval.exclude_empty_slices");
  config_require(config.get_int("eval.folds") >= 1, "eval.folds must be >= 1");
  config_require(config.get_int("eval.workers") >= 1, "eval.workers must be >= 1");
  return o;
}

ManifestConfig manifest_config(const RunConfig& config) {
  ManifestConfig m;
  m.normalization.modality = [&] {
    try {
      return parse_modality(config.get("dataset.modality"));
    } catch (const Error& e) {
      config_fail(e.what());
    }
  }();
  m.normalization.ct_window_min = config.get_real("dataset.ct_window_min");
  m.normalization.ct_window_max = config.get_real("dataset.ct_window_max");
  m.normalization.mri_low_percentile = config.get_real("dataset.mri_low_percentile");
  m.normalization.mri_high_percentile = config.get_real("dataset.mri_high_percentile");
  config_require(m.normalization.ct_window_max > m.normalization.ct_window_min, "CT window must have max > min");
  config_require(m.normalization.mri_low_percentile >= 0 &&
                     m.normalization.mri_low_percentile < m.normalization.mri_high_percentile &&
                     m.normalization.mri_high_percentile <= 100,
                 "MRI percentiles must satisfy 0 <= low < high <= 100");
  m.folds = static_cast<int>(config.get_int("eval.folds"));
  config_require(m.folds >= 1, "eval.folds must be >= 1");
  std::stringstream sizes(config.get("dataset.test_split_sizes"));
  for (std::string entry; std::getline(sizes, entry, ',');) {
    if (entry.empty()) continue;
    const auto colon = entry.rfind(':');
    config_require(colon != std::string::npos && colon > 0,
                   "dataset.test_split_sizes entry '" + entry + "' is not name:count");
    int n = -1;
    try {
      std::size_t used = 0;
      n = std::stoi(entry.substr(colon + 1), &used);
      if (used != entry.size() - colon - 1) n = -1;
    } catch (const std::exception&) {
    }
    config_require(n >= 0, "dataset.test_split_sizes entry '" + entry + "' needs a non-negative count");
    m.test_split_sizes[entry.substr(0, colon)] = n;
  }
  return m;
}

std::vector<std::string> configured_classes(const RunConfig& config) {
  std::vector<std::string> out;
  std::stringstream in(config.get("eval.classes"));
  for (std::string item; std::getline(in, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  config_require(!out.empty(), "eval.classes must list at least one class");
  return out;
}

std::vector<PromptSet> ablation_combos(const RunConfig& config) {
  std::vector<PromptSet> out;
  std::stringstream in(config.get("ablate.combos"));
  for (std::string item; std::getline(in, item, ';');) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_prompts(item, "ablate.combos"));
  }
  config_require(!out.empty(), "ablate.combos must list at least one combination");
  return out;
}

TrainConfig train_config(const RunConfig& config) {
  TrainConfig t;
  t.steps = static_cast<int>(config.get_int("finetune.steps"));
  config_require(t.steps >= 1, "finetune.steps must be >= 1");
  t.learning_rate = config.get_real("finetune.lr");
  config_require(t.learning_rate > 0.0, "finetune.lr must be > 0, got " + config.get("finetune.lr"));
  t.image_size = static_cast<int>(config.get_int("finetune.image_size"));
  config_require(t.image_size >= 16, "finetune.image_size must be >= 16");
  t.adapter_rank = static_cast<int>(config.get_int("finetune.rank"));
  config_require(t.adapter_rank >= 1, "finetune.rank must be >= 1");
  t.reg_weight = config.get_real("finetune.reg_weight");
  config_require(t.reg_weight >= 0.0, "finetune.reg_weight must be >= 0");
  t.checkpoint_interval = static_cast<int>(config.get_int("finetune.checkpoint_interval"));
  config_require(t.checkpoint_interval >= 1, "finetune.checkpoint_interval must be >= 1");
  t.seed = config.seed();
  t.protoseg = protoseg_config(config);
  t.superpixels.scale = config.get_real("finetune.superpixel_scale");
  t.superpixels.sigma = config.get_real("finetune.superpixel_sigma");
  t.superpixels.min_size = static_cast<int>(config.get_int("finetune.superpixel_min_size"));
  config_require(t.superpixels.scale > 0 && t.superpixels.sigma >= 0 && t.superpixels.min_size >= 1,
                 "superpixel parameters out of range");
  auto& a = t.augment;
  a.max_rotation_deg = config.get_real("finetune.max_rotation_deg");
  a.min_scale = config.get_real("finetune.min_scale");
  a.max_scale = config.get_real("finetune.max_scale");
  a.max_translation = config.get_real("finetune.max_translation");
  a.min_gamma = config.get_real("finetune.min_gamma");
  a.max_gamma = config.get_real("finetune.max_gamma");
  a.noise_sigma = config.get_real("finetune.noise_sigma");
  config_require(a.max_rotation_deg >= 0 && a.min_scale > 0 && a.min_scale <= a.max_scale && a.max_translation >= 0 &&
                     a.min_gamma > 0 && a.min_gamma <= a.max_gamma && a.noise_sigma >= 0,
                 "augmentation parameters out of range");
  return t;
}

}  // namespace protoprompt
