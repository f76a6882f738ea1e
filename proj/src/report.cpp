#include "dimo/report.hpp"

#include <set>

#include <fmt/format.h>

#include "dimo/trace_json.hpp"

namespace dimo {

namespace {

using nlohmann::json;

json cell_json(const Cell& c) {
  json acc = nullptr;
  if (auto a = c.accuracy()) acc = *a;
  return {{"hits", c.hits}, {"total", c.total}, {"accuracy", acc}};
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string md_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string format_percent(const Cell& cell) {
  if (auto a = cell.accuracy()) return fmt::format("{:.1f}", *a * 100.0);
  return "-";
}

json record_to_json(const SampleRecord& s) {
  return {{"id", s.id},
          {"group", s.group},
          {"modality", to_string(s.modality)},
          {"final_point", s.final_point ? point_json(*s.final_point) : json()},
          {"hit", s.hit},
          {"iterations", s.iterations},
          {"error", s.error.empty() ? json() : json(s.error)},
          {"wall_ms", s.wall_ms}};
}

json report_to_json(const EvalReport& report) {
  json groups = json::object();
  for (const auto& [name, g] : report.groups) {
    groups[name] = {{"text", cell_json(g.text)},
                    {"icon", cell_json(g.icon)},
                    {"avg", cell_json(g.combined())}};
  }
  json samples = json::array();
  for (const auto& s : report.samples) {
    samples.push_back(record_to_json(s));
  }
  return {{"schema", kReportSchema},
          {"label", report.label},
          {"config", to_json(report.config)},
          {"complete", report.complete},
          {"groups", std::move(groups)},
          {"overall",
           {{"text", cell_json(report.overall_text)},
            {"icon", cell_json(report.overall_icon)},
            {"avg", cell_json(report.overall)}}},
          {"samples", std::move(samples)},
          {"wall_ms", report.wall_ms}};
}

std::string report_to_csv(const EvalReport& report) {
  std::string out = "group,modality,hits,total,accuracy\n";
  for (const auto& [name, g] : report.groups) {
    for (const auto& [label, cell] : {std::pair{"text", g.text}, std::pair{"icon", g.icon}}) {
      const auto acc = cell.accuracy();
      out += fmt::format("{},{},{},{},{}\n", csv_field(name), label, cell.hits, cell.total,
                         acc ? fmt::format("{}", *acc) : std::string());
    }
  }
  return out;
}

std::string reports_to_markdown(const std::vector<const EvalReport*>& reports) {
  std::set<std::string> names;
  for (const auto* r : reports) {
    for (const auto& [name, g] : r->groups) names.insert(name);
  }
  std::string header = "| Method |";
  std::string rule = "|---|";
  for (const auto& name : names) {
    for (const char* sub : {"text", "icon", "avg"}) {
      header += fmt::format(" {} {} |", md_escape(name), sub);
      rule += "---:|";
    }
  }
  header += " Avg text | Avg icon | Avg avg |";
  rule += "---:|---:|---:|";

  std::string out = header + "\n" + rule + "\n";
  for (const auto* r : reports) {
    std::string row = fmt::format("| {} |", md_escape(r->label));
    for (const auto& name : names) {
      const auto it = r->groups.find(name);
      const GroupCells g = it == r->groups.end() ? GroupCells{} : it->second;
      row += fmt::format(" {} | {} | {} |", format_percent(g.text), format_percent(g.icon),
                         format_percent(g.combined()));
    }
    row += fmt::format(" {} | {} | {} |", format_percent(r->overall_text),
                       format_percent(r->overall_icon), format_percent(r->overall));
    out += row + "\n";
  }
  return out;
}

std::string report_to_markdown(const EvalReport& report) { return reports_to_markdown({&report}); }

std::string sweep_to_markdown(const std::vector<std::pair<int, const EvalReport*>>& sweep) {
  std::string header = "| max_iter |";
  std::string rule = "|---|";
  std::string row = "| acc (%) |";
  for (const auto& [value, report] : sweep) {
    header += fmt::format(" {} |", value);
    rule += "---:|";
    row += fmt::format(" {} |", format_percent(report->overall));
  }
  return header + "\n" + rule + "\n" + row + "\n";
}

std::string emit_report(const EvalReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json:
      return report_to_json(report).dump(2) + "\n";
    case ReportFormat::Csv:
      return report_to_csv(report);
    case ReportFormat::Markdown:
      return report_to_markdown(report);
  }
  return {};
}

}  // namespace dimo
