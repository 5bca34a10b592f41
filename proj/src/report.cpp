#include "cherry/report.hpp"

#include <cmath>
#include <cstdio>

namespace cherry {

std::string format_fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, value);
  return buf;
}

std::string Table::render() const {
  auto line = [](const std::vector<std::string>& cells) {
    std::string out = "|";
    for (const auto& c : cells) out += " " + c + " |";
    return out + "\n";
  };
  std::string out = line(headers);
  out += "|";
  for (std::size_t i = 0; i < headers.size(); ++i) out += "---|";
  out += "\n";
  for (const auto& r : rows) out += line(r);
  return out;
}

json Table::to_json() const { return {{"headers", headers}, {"rows", rows}}; }

Table config_distribution_table(const std::vector<ConfigDistribution>& distributions) {
  Table t{{"Conf.", "Class 1", "Class 2", "Class 3"}, {}};
  for (const auto& d : distributions) {
    std::vector<std::string> labels{std::to_string(d.config_id)};
    std::vector<std::string> counts{""};
    for (std::size_t c = 0; c < 3; ++c) {
      if (c >= d.classes.size()) {
        labels.push_back("-");
        counts.push_back("-");
        continue;
      }
      const auto& cc = d.classes[c];
      std::string set = "{";
      for (std::size_t i = 0; i < cc.labels.size(); ++i) {
        if (i) set += ",";
        set += "(" + std::to_string(to_int(cc.labels[i])) + ")";
      }
      labels.push_back(set + "}");
      counts.push_back(std::to_string(cc.count) + " (" + std::to_string(std::lround(cc.share * 100.0)) + "%)");
    }
    t.rows.push_back(std::move(labels));
    t.rows.push_back(std::move(counts));
  }
  return t;
}

Table config_performance_table(const std::vector<std::pair<int, MetricReport>>& results) {
  Table t{{"Conf. #", "Acc.", "F-1"}, {}};
  for (const auto& [id, m] : results) {
    t.rows.push_back({std::to_string(id), format_fixed(m.accuracy, 3), format_fixed(m.macro_f1, 3)});
  }
  return t;
}

Table correlation_table(const std::vector<std::pair<std::string, SpearmanResult>>& results) {
  Table t{{"Bias score source", "r", "P-value"}, {}};
  for (const auto& [source, s] : results) t.rows.push_back({source, format_fixed(s.r, 2), format_fixed(s.p_value, 2)});
  return t;
}

std::string bias_band_name(BiasCategory category) {
  switch (category) {
    case BiasCategory::kLeft: return "Left";
    case BiasCategory::kLeftCenter: return "Left center";
    case BiasCategory::kCenter: return "Center";
    case BiasCategory::kRightCenter: return "Right center";
    case BiasCategory::kRight: return "Right";
  }
  return "";
}

Table bias_band_table(const std::vector<BiasBandRow>& rows) {
  Table t{{"Bias category", "Mean", "STD", "Sample size"}, {}};
  for (const auto& r : rows) {
    t.rows.push_back({bias_band_name(r.category), format_fixed(r.mean, 2),
                      r.stddev ? format_fixed(*r.stddev, 2) : "-", std::to_string(r.sample_size)});
  }
  return t;
}

Table sweep_table(const std::vector<SweepCell>& cells) {
  Table t{{"Context length", "Scorer", "Accuracy", "Macro F-1"}, {}};
  for (const auto& c : cells) {
    if (c.metrics) {
      t.rows.push_back({std::to_string(c.length), c.scorer, format_fixed(c.metrics->accuracy, 3),
                        format_fixed(c.metrics->macro_f1, 3)});
    } else {
      t.rows.push_back({std::to_string(c.length), c.scorer, "error: " + c.error, "-"});
    }
  }
  return t;
}

}  // namespace cherry
