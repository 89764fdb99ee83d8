#include "protoprompt/report_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "protoprompt/error.hpp"

namespace fs = std::filesystem;

namespace protoprompt {

void write_text_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorCode::kIoError, "cannot write '" + path.string() + "'");
    out << contents;
    if (!out) fail(ErrorCode::kIoError, "failed writing '" + path.string() + "'");
  }
  fs::rename(tmp, path);
}

nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["schema_version"] = report.schema_version;
  j["dataset"] = report.dataset;
  j["seed"] = report.seed;
  j["folds"] = report.folds;
  j["config"] = report.config;
  auto& vols = j["volumes"] = nlohmann::json::array();
  for (const auto& v : report.volumes) {
    nlohmann::json jv{{"class", v.class_id},
                      {"support_scan", v.support_scan},
                      {"query_scan", v.query_scan},
                      {"fold", v.fold},
                      {"dice", v.dice()},
                      {"iou", v.iou()}};
    auto& slices = jv["slices"] = nlohmann::json::array();
    for (const auto& s : v.slices) {
      slices.push_back({{"slice", s.slice},
                        {"section", s.section},
                        {"support_slice", s.support_slice},
                        {"intersection", s.counts.intersection},
                        {"predicted", s.counts.predicted},
                        {"truth", s.counts.truth},
                        {"excluded", s.excluded},
                        {"dice", s.dice()},
                        {"iou", s.iou()}});
    }
    vols.push_back(std::move(jv));
  }
  return j;
}

namespace {

template <typename T>
T field(const nlohmann::json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(ErrorCode::kSchemaError, where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::kSchemaError, where + ": field '" + key + "' has the wrong type");
  }
}

}  // namespace

EvalReport report_from_json(const nlohmann::json& j) {
  const int version = field<int>(j, "schema_version", "report");
  if (version != kReportSchemaVersion) {
    fail(ErrorCode::kSchemaError, "report schema version " + std::to_string(version) + " is not supported (expected " +
                                      std::to_string(kReportSchemaVersion) + ")");
  }
  EvalReport r;
  r.dataset = field<std::string>(j, "dataset", "report");
  r.seed = field<std::uint64_t>(j, "seed", "report");
  r.folds = field<int>(j, "folds", "report");
  if (!j.contains("config") || !j["config"].is_object()) fail(ErrorCode::kSchemaError, "report: missing field 'config'");
  r.config = j["config"];
  const auto vols = field<nlohmann::json>(j, "volumes", "report");
  if (!vols.is_array()) fail(ErrorCode::kSchemaError, "report: 'volumes' must be an array");
  for (std::size_t i = 0; i < vols.size(); ++i) {
    const std::string where = "report volume " + std::to_string(i);
    const auto& jv = vols[i];
    VolumeResult v;
    v.class_id = field<std::string>(jv, "class", where);
    v.support_scan = field<std::string>(jv, "support_scan", where);
    v.query_scan = field<std::string>(jv, "query_scan", where);
    v.fold = field<int>(jv, "fold", where);
    const auto slices = field<nlohmann::json>(jv, "slices", where);
    if (!slices.is_array()) fail(ErrorCode::kSchemaError, where + ": 'slices' must be an array");
    for (const auto& js : slices) {
      SliceRecord s;
      s.slice = field<int>(js, "slice", where);
      s.section = field<int>(js, "section", where);
      s.support_slice = field<int>(js, "support_slice", where);
      s.counts.intersection = field<std::size_t>(js, "intersection", where);
      s.counts.predicted = field<std::size_t>(js, "predicted", where);
      s.counts.truth = field<std::size_t>(js, "truth", where);
      s.excluded = field<bool>(js, "excluded", where);
      if (s.counts.intersection > std::min(s.counts.predicted, s.counts.truth))
        fail(ErrorCode::kSchemaError, where + ": intersection exceeds a mask size");
      v.slices.push_back(s);
    }
    r.volumes.push_back(std::move(v));
  }
  return r;
}

void persist_report(const EvalReport& report, const fs::path& path) {
  write_text_file(path, report_to_json(report).dump(2) + "\n");
}

EvalReport load_report(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIoError, "cannot read report '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kSchemaError, "report '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return report_from_json(j);
}

namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
  return out + "\"";
}

std::string aggregate_cell(const Aggregate& a) {
  return a.folds.size() >= 2 ? a.format_percent() : "n/a";
}

}  // namespace

std::string display_name(const std::string& class_id) {
  if (class_id == "lk") return "LK";
  if (class_id == "rk") return "RK";
  if (class_id == "spleen") return "Spleen";
  if (class_id == "liver") return "Liver";
  return class_id;
}

void write_fold_csv(const EvalReport& report, const fs::path& path) {
  const auto classes = summarize(report);
  std::ostringstream out;
  out << "class,fold,dice,iou,volumes\n";
  auto emit = [&](const std::string& name, const std::map<int, FoldScore>& folds, const Aggregate& dice,
                  const Aggregate& iou) {
    for (const auto& [fold, fs] : folds)
      out << csv_field(name) << ',' << fold << ',' << number(fs.dice) << ',' << number(fs.iou) << ',' << fs.volumes
          << '\n';
    out << csv_field(name) << ",mean±std," << csv_field(aggregate_cell(dice)) << ',' << csv_field(aggregate_cell(iou))
        << ',';
    int total = 0;
    for (const auto& [_, fs] : folds) total += fs.volumes;
    out << total << '\n';
  };
  for (const auto& cs : classes) emit(cs.class_id, cs.folds, cs.dice, cs.iou);
  if (classes.size() > 1) {
    const auto mean = summarize_mean(classes, report.folds);
    emit("mean", mean.folds, mean.dice, mean.iou);
  }
  write_text_file(path, out.str());
}

void write_class_table_csv(const EvalReport& report, const std::string& method, const fs::path& path) {
  const auto classes = summarize(report);
  std::ostringstream out;
  out << "method";
  for (const auto& cs : classes) out << ',' << csv_field(display_name(cs.class_id));
  out << ",Mean\n" << csv_field(method);
  for (const auto& cs : classes) out << ',' << csv_field(aggregate_cell(cs.dice));
  out << ',' << csv_field(aggregate_cell(summarize_mean(classes, report.folds).dice)) << '\n';
  write_text_file(path, out.str());
}

void write_wilcoxon_csv(const std::vector<WilcoxonRow>& rows, const std::string& comparison, const fs::path& path) {
  std::ostringstream out;
  out << "comparison,p_value\n";
  for (const auto& r : rows) {
    char p[32];
    std::snprintf(p, sizeof p, "%.6g", r.test.p_value);
    out << csv_field(comparison + " (" + r.label + ")") << ',' << p << '\n';
  }
  write_text_file(path, out.str());
}

nlohmann::json wilcoxon_to_json(const std::vector<WilcoxonRow>& rows) {
  auto j = nlohmann::json::array();
  for (const auto& r : rows) {
    j.push_back({{"label", r.label},
                 {"p_value", r.test.p_value},
                 {"w_plus", r.test.w_plus},
                 {"n", r.test.n_used},
                 {"method", to_string(r.test.method)},
                 {"mean_dice_a", r.mean_a},
                 {"mean_dice_b", r.mean_b}});
  }
  return j;
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_bar_chart_svg(const std::vector<Bar>& bars, const std::string& title, const fs::path& path) {
  const double left = 50, top = 40, plot_h = 240, slot = 90, bar_w = 54;
  const double width = left + slot * std::max<std::size_t>(bars.size(), 1) + 20, height = top + plot_h + 60;
  auto y_of = [&](double v) { return top + plot_h * (1.0 - std::clamp(v, 0.0, 1.0)); };
  std::ostringstream svg;
  char buf[256];
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << xml_escape(title)
      << "</text>\n";
  for (int tick = 0; tick <= 100; tick += 25) {
    const double y = y_of(tick / 100.0);
    std::snprintf(buf, sizeof buf,
                  "<line x1=\"%g\" y1=\"%g\" x2=\"%g\" y2=\"%g\" stroke=\"#ddd\"/>"
                  "<text x=\"%g\" y=\"%g\" text-anchor=\"end\">%d</text>\n",
                  left, y, width - 10, y, left - 6, y + 4, tick);
    svg << buf;
  }
  for (std::size_t i = 0; i < bars.size(); ++i) {
    const auto& b = bars[i];
    const double x = left + slot * i + (slot - bar_w) / 2;
    const double y = y_of(b.value);
    std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"#4a78b5\"/>\n", x, y,
                  bar_w, top + plot_h - y);
    svg << buf;
    if (b.error > 0) {
      const double cx = x + bar_w / 2, y0 = y_of(b.value - b.error), y1 = y_of(b.value + b.error);
      std::snprintf(buf, sizeof buf,
                    "<path d=\"M%g %gV%gM%g %gH%gM%g %gH%g\" stroke=\"black\" fill=\"none\"/>\n", cx, y0, y1,
                    cx - 8, y0, cx + 8, cx - 8, y1, cx + 8);
      svg << buf;
    }
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" text-anchor=\"middle\">%.1f</text>\n", x + bar_w / 2,
                  y - 4, 100.0 * b.value);
    svg << buf;
    svg << "<text x=\"" << x + bar_w / 2 << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"middle\">"
        << xml_escape(b.label) << "</text>\n";
  }
  svg << "</svg>\n";
  write_text_file(path, svg.str());
}

}  // namespace protoprompt
