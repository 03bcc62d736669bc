#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "fpsel/search.hpp"

namespace fpsel {

enum class ReportFormat { Json, Csv, FPCore, Code };
std::optional<ReportFormat> parse_report_format(std::string_view name);

struct ReportEntry {
  double cost = 0.0;
  /// p minus the mean test error in bits.
  double accuracy = 0.0;
  double train_error = 0.0;
  double test_error = 0.0;
  std::string fpcore;
  /// Target-language text when every operator has a codegen template.
  std::optional<std::string> code;
  std::size_t iteration = 0;
  std::int64_t id = 0;
  std::int64_t parent = -1;
};

struct Report {
  std::string input;
  std::string target;
  int precision = 53;
  SearchConfig config;
  ReportEntry original;
  /// Sorted by cost ascending.
  std::vector<ReportEntry> frontier;
  std::vector<IterationTrace> trace;
};

Report make_report(const std::string& input_text, const Program& input, const TargetDesc& target,
                   const SearchConfig& cfg, const SearchResult& result);

/// Writes the report. `Code` throws TargetError if an operator lacks a
/// codegen template.
void emit_report(const Report& r, ReportFormat format, std::ostream& out);

/// Shortest text that reads back as the same double.
std::string format_number(double v);

}  // namespace fpsel
