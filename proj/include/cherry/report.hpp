#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cherry/dataset.hpp"
#include "cherry/detect.hpp"
#include "cherry/json_io.hpp"

namespace cherry {

struct Table {
  std::vector<std::string> headers;
  std::vector<std::vector<std::string>> rows;

  std::string render() const;  // pipe table, one line per row
  json to_json() const;
};

// "Conf. | Class 1 | Class 2 | Class 3": per config one row of label sets
// such as {(2),(3)} and one row of counts such as "2175 (64%)".
Table config_distribution_table(const std::vector<ConfigDistribution>& distributions);

// "Conf. # | Acc. | F-1"
Table config_performance_table(const std::vector<std::pair<int, MetricReport>>& results);

// "Bias score source | r | P-value"
Table correlation_table(const std::vector<std::pair<std::string, SpearmanResult>>& results);

// "Bias category | Mean | STD | Sample size"; STD is "-" for a single outlet.
Table bias_band_table(const std::vector<BiasBandRow>& rows);

std::string bias_band_name(BiasCategory category);  // "Left center", ...

struct SweepCell {
  std::size_t length = 0;
  std::string scorer;
  std::optional<MetricReport> metrics;
  std::string error;
};

// "Context length | Scorer | Accuracy | Macro F-1"; failed cells show the error.
Table sweep_table(const std::vector<SweepCell>& cells);

std::string format_fixed(double value, int digits);

}  // namespace cherry
