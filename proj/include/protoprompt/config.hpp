#pragma once

// Layered run configuration: built-in defaults, then a flat `key = value`
// file, then command-line overrides. Every key is declared up front, so a
// typo fails loudly instead of being ignored.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "protoprompt/dataset.hpp"
#include "protoprompt/encoder.hpp"
#include "protoprompt/eval.hpp"
#include "protoprompt/finetune.hpp"
#include "protoprompt/pipeline.hpp"
#include "protoprompt/segmenter.hpp"

namespace protoprompt {

enum class ConfigType { kString, kInt, kReal, kBool };

struct ConfigKey {
  std::string name;
  ConfigType type;
  std::string default_value;
  std::string help;
};

const std::vector<ConfigKey>& config_schema();

class RunConfig {
 public:
  RunConfig();  // defaults only

  // Lines are `key = value`; `#` starts a comment. Config error on unknown
  // keys, malformed lines or values that do not parse as the key's type.
  void merge_file(const std::filesystem::path& path);
  void merge_text(const std::string& text, const std::string& origin = "<text>");
  // `key=value`, as given to --set.
  void merge_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  std::string get_string(const std::string& key) const { return get(key); }
  long long get_int(const std::string& key) const;
  double get_real(const std::string& key) const;
  bool get_bool(const std::string& key) const;
  std::uint64_t seed() const;

  // Typed snapshot of every key, embedded in each output artifact.
  nlohmann::json to_json() const;
  // Canonical `key = value` text that merge_text reads back.
  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
};

// Builders from a resolved configuration; they validate ranges and report
// problems as config errors.
ProtoSegConfig protoseg_config(const RunConfig& config);
PromptConfig prompt_config(const RunConfig& config);
PipelineConfig pipeline_config(const RunConfig& config);
std::shared_ptr<const EncoderBackend> make_encoder(const RunConfig& config);
std::shared_ptr<const PromptableSegmenter> make_segmenter(const RunConfig& config);
EvaluationOptions evaluation_options(const RunConfig& config);
ManifestConfig manifest_config(const RunConfig& config);
TrainConfig train_config(const RunConfig& config);
StubEncoderOptions stub_encoder_options(const RunConfig& config);
std::vector<std::string> configured_classes(const RunConfig& config);
// Prompt combinations for the ablation study, in run order.
std::vector<PromptSet> ablation_combos(const RunConfig& config);

}  // namespace protoprompt
