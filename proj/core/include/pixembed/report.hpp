#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace pixembed {

struct ReportRow {
  std::string case_label;  // "<table>:case<n>", e.g. "gauss:case6"
  std::string noise;       // noise spec string
  std::string variant;
  double accuracy = 0;     // percent

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct ExperimentReport {
  std::vector<ReportRow> rows;
  std::map<std::string, std::string> metadata;
  bool complete = true;

  /// Accuracy of (case, variant); throws DomainError if absent.
  double accuracy(std::string_view case_label, std::string_view variant) const;
};

enum class ReportFormat { Csv, Markdown, PlotData };

ReportFormat parse_report_format(std::string_view text);
std::string extension(ReportFormat format);

/// Header `case,noise,variant,accuracy`; accuracies in shortest round-trip form.
std::string to_csv(const ExperimentReport& report);
/// Throws FormatError.
ExperimentReport parse_csv(std::string_view text);

/// One table per case prefix, one accuracy column per variant.
std::string to_markdown(const ExperimentReport& report);

/// gnuplot-style blocks `# <table> <variant>` of "case-index accuracy" lines,
/// separated by two blank lines.
std::string to_plotdata(const ExperimentReport& report);

std::string render(const ExperimentReport& report, ReportFormat format);

/// Throws IoError when the file cannot be written.
void emit_report(const ExperimentReport& report, ReportFormat format,
                 const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, std::string_view text);
std::string read_text(const std::filesystem::path& path);

}  // namespace pixembed
