#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drc/types.hpp"

namespace drc {

/// One configuration's repeat-level error rates, as read back from
/// results.jsonl "repeat" lines.
struct ReportGroup {
  std::string architecture;
  std::string task;
  Index layers = 0;
  Index nodes = 0;
  std::optional<std::string> snr_db;
  std::vector<double> errors;

  Index total_nodes() const { return layers * nodes; }
  double mean() const;
  /// Sample standard deviation (n - 1); 0 for a single value.
  double sd() const;
  /// Series label used in the plot legend.
  std::string series() const;
};

/// Groups the "repeat" lines of any number of results.jsonl texts by
/// (task, architecture, layers, nodes, snr). Throws invalid_argument when
/// nothing matches.
std::vector<ReportGroup> collect_groups(const std::vector<std::string>& jsonl_texts,
                                        const std::string& architecture_filter = "");

/// Tab-separated table: architecture, task, snr_db, layers, nodes,
/// total_nodes, repeats, mean_error, sd_error (sd is +-1 sample sd).
std::string report_table(const std::vector<ReportGroup>& groups);

/// SVG line plot of mean error against total nodes, one series per
/// architecture (and noise level), with +-1 sd bars.
std::string report_svg(const std::vector<ReportGroup>& groups, const std::string& title = "");

}  // namespace drc
