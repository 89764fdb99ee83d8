#pragma once

// Persistence of evaluation reports and the derived tables and plots.

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "protoprompt/eval.hpp"

namespace protoprompt {

nlohmann::json report_to_json(const EvalReport& report);
// Schema error on a version mismatch or a missing/mistyped field.
EvalReport report_from_json(const nlohmann::json& j);

void persist_report(const EvalReport& report, const std::filesystem::path& path);
EvalReport load_report(const std::filesystem::path& path);

// Long layout: one row per (class, fold) and one aggregate row per class,
// plus the same for the organ-averaged "mean" class.
void write_fold_csv(const EvalReport& report, const std::filesystem::path& path);

// One row holding "mean±std" Dice cells under LK, RK, Spleen, Liver (or the
// class ids present) and Mean.
void write_class_table_csv(const EvalReport& report, const std::string& method, const std::filesystem::path& path);

std::string display_name(const std::string& class_id);

// Two columns: comparison label and p-value.
void write_wilcoxon_csv(const std::vector<WilcoxonRow>& rows, const std::string& comparison,
                        const std::filesystem::path& path);
nlohmann::json wilcoxon_to_json(const std::vector<WilcoxonRow>& rows);

struct Bar {
  std::string label;
  double value = 0.0;
  double error = 0.0;  // half-height of the error bar; 0 draws none
};

// Static bar chart with values in [0, 1] drawn as percentages.
void write_bar_chart_svg(const std::vector<Bar>& bars, const std::string& title, const std::filesystem::path& path);

void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace protoprompt
