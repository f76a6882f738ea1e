#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dimo/evaluate.hpp"

namespace dimo {

inline constexpr std::string_view kReportSchema = "dimo.report/1";

enum class ReportFormat { Json, Csv, Markdown };

/// Lossless report: config, cells, per-group and overall counts, and every
/// per-sample record. Timing lives only in "wall_ms" fields.
nlohmann::json report_to_json(const EvalReport& report);
nlohmann::json record_to_json(const SampleRecord& record);

/// One row per (group, modality) cell:
/// group,modality,hits,total,accuracy
std::string report_to_csv(const EvalReport& report);

/// Table with one row per report; each group gets text/icon/avg columns,
/// followed by an overall Avg block. Percentages with one decimal, "-" for
/// empty cells.
std::string reports_to_markdown(const std::vector<const EvalReport*>& reports);
std::string report_to_markdown(const EvalReport& report);

/// Iteration-count table: one column per sweep value, one accuracy row.
std::string sweep_to_markdown(const std::vector<std::pair<int, const EvalReport*>>& sweep);

std::string emit_report(const EvalReport& report, ReportFormat format);

/// Accuracy as a percentage with one decimal, or "-".
std::string format_percent(const Cell& cell);

}  // namespace dimo
