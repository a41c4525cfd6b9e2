#include "pixembed/report.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "pixembed/errors.hpp"
#include "pixembed/noise.hpp"

namespace pixembed {

namespace {

std::string shortest(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string table_of(const std::string& case_label) {
  const auto colon = case_label.find(':');
  return colon == std::string::npos ? std::string("results") : case_label.substr(0, colon);
}

std::string case_of(const std::string& case_label) {
  const auto colon = case_label.find(':');
  return colon == std::string::npos ? case_label : case_label.substr(colon + 1);
}

// Ordered unique values, first-seen order.
template <class F>
std::vector<std::string> distinct(const std::vector<ReportRow>& rows, F key) {
  std::vector<std::string> out;
  for (const auto& r : rows) {
    auto k = key(r);
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(std::move(k));
  }
  return out;
}

std::string variant_heading(const std::string& variant) {
  if (variant == "with_pe") return "Accuracy (with PE)";
  if (variant == "without_pe") return "Accuracy (without PE)";
  if (variant == "norm_only") return "Accuracy (normalization only)";
  return "Accuracy (" + variant + ")";
}

}  // namespace

double ExperimentReport::accuracy(std::string_view case_label, std::string_view variant) const {
  for (const auto& r : rows) {
    if (r.case_label == case_label && r.variant == variant) return r.accuracy;
  }
  throw DomainError("report has no row for " + std::string(case_label) + " / " + std::string(variant));
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "csv") return ReportFormat::Csv;
  if (text == "markdown" || text == "md") return ReportFormat::Markdown;
  if (text == "plotdata") return ReportFormat::PlotData;
  throw DomainError("unknown report format '" + std::string(text) + "' (csv|markdown|plotdata)");
}

std::string extension(ReportFormat format) {
  switch (format) {
    case ReportFormat::Csv: return ".csv";
    case ReportFormat::Markdown: return ".md";
    case ReportFormat::PlotData: return ".plot";
  }
  return "";
}

std::string to_csv(const ExperimentReport& report) {
  std::string out = "case,noise,variant,accuracy\n";
  for (const auto& r : report.rows) {
    out += r.case_label + ',' + r.noise + ',' + r.variant + ',' + shortest(r.accuracy) + '\n';
  }
  return out;
}

ExperimentReport parse_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "case,noise,variant,accuracy") {
    throw FormatError("report csv must start with 'case,noise,variant,accuracy'");
  }
  ExperimentReport report;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) cells.push_back(cell);
    if (cells.size() != 4) throw FormatError("report csv line " + std::to_string(lineno) + ": expected 4 cells");
    ReportRow row{cells[0], cells[1], cells[2], 0};
    auto [ptr, ec] = std::from_chars(cells[3].data(), cells[3].data() + cells[3].size(), row.accuracy);
    if (ec != std::errc{} || ptr != cells[3].data() + cells[3].size()) {
      throw FormatError("report csv line " + std::to_string(lineno) + ": bad accuracy");
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string to_markdown(const ExperimentReport& report) {
  std::ostringstream os;
  if (!report.complete) os << "> **Incomplete report**: the run aborted before every case finished.\n\n";
  for (const auto& table : distinct(report.rows, [](const ReportRow& r) { return table_of(r.case_label); })) {
    std::vector<ReportRow> rows;
    for (const auto& r : report.rows) {
      if (table_of(r.case_label) == table) rows.push_back(r);
    }
    const auto variants = distinct(rows, [](const ReportRow& r) { return r.variant; });
    os << "### " << table << "\n\n| Number | Index |";
    for (const auto& v : variants) os << ' ' << variant_heading(v) << " |";
    os << "\n|---|---|";
    for (std::size_t i = 0; i < variants.size(); ++i) os << "---|";
    os << '\n';
    for (const auto& label : distinct(rows, [](const ReportRow& r) { return r.case_label; })) {
      std::string index;
      for (const auto& r : rows) {
        if (r.case_label == label) {
          try {
            index = describe_noise(parse_noise(r.noise));
          } catch (const Error&) {
            index = r.noise;
          }
          break;
        }
      }
      os << "| " << case_of(label) << " | " << index << " |";
      for (const auto& v : variants) {
        auto it = std::find_if(rows.begin(), rows.end(),
                               [&](const ReportRow& r) { return r.case_label == label && r.variant == v; });
        char buf[32];
        if (it != rows.end()) std::snprintf(buf, sizeof buf, "%.2f", it->accuracy);
        os << ' ' << (it != rows.end() ? buf : "-") << " |";
      }
      os << '\n';
    }
    os << '\n';
  }
  if (!report.metadata.empty()) {
    os << "| Key | Value |\n|---|---|\n";
    for (const auto& [k, v] : report.metadata) os << "| " << k << " | " << v << " |\n";
  }
  return os.str();
}

std::string to_plotdata(const ExperimentReport& report) {
  std::ostringstream os;
  bool first = true;
  const auto tables = distinct(report.rows, [](const ReportRow& r) { return table_of(r.case_label); });
  for (const auto& table : tables) {
    std::vector<ReportRow> rows;
    for (const auto& r : report.rows) {
      if (table_of(r.case_label) == table) rows.push_back(r);
    }
    const auto labels = distinct(rows, [](const ReportRow& r) { return r.case_label; });
    for (const auto& v : distinct(rows, [](const ReportRow& r) { return r.variant; })) {
      if (!first) os << "\n\n";
      first = false;
      os << "# " << table << ' ' << v << '\n';
      for (std::size_t i = 0; i < labels.size(); ++i) {
        for (const auto& r : rows) {
          if (r.case_label == labels[i] && r.variant == v) os << (i + 1) << ' ' << shortest(r.accuracy) << '\n';
        }
      }
    }
  }
  return os.str();
}

std::string render(const ExperimentReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Csv: return to_csv(report);
    case ReportFormat::Markdown: return to_markdown(report);
    case ReportFormat::PlotData: return to_plotdata(report);
  }
  return {};
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void emit_report(const ExperimentReport& report, ReportFormat format, const std::filesystem::path& path) {
  write_text(path, render(report, format));
}

}  // namespace pixembed
