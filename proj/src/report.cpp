#include <charconv>

#include "fpsel/report.hpp"
#include "json.hpp"

namespace fpsel {

std::optional<ReportFormat> parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "fpcore") return ReportFormat::FPCore;
  if (name == "code") return ReportFormat::Code;
  return std::nullopt;
}

std::string format_number(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

namespace {

ReportEntry entry_of(const Candidate& c, const TargetDesc& target, int p) {
  ReportEntry e;
  e.cost = c.cost;
  e.train_error = c.train_error;
  e.test_error = c.test_error.value_or(c.error);
  e.accuracy = p - e.test_error;
  e.fpcore = format_fpcore(c.program, &target);
  try {
    e.code = format_target_code(c.program, target, true);
  } catch (const TargetError&) {
    e.code = std::nullopt;
  }
  e.iteration = c.iteration;
  e.id = c.id;
  e.parent = c.parent;
  return e;
}

nlohmann::ordered_json entry_json(const ReportEntry& e) {
  nlohmann::ordered_json j;
  j["cost"] = e.cost;
  j["accuracy"] = e.accuracy;
  j["train_error"] = e.train_error;
  j["test_error"] = e.test_error;
  j["fpcore"] = e.fpcore;
  if (e.code) j["code"] = *e.code;
  j["iteration"] = e.iteration;
  j["id"] = e.id;
  j["parent"] = e.parent;
  return j;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string header(const ReportEntry& e) {
  return "; cost=" + format_number(e.cost) + " accuracy=" + format_number(e.accuracy) + "\n";
}

}  // namespace

Report make_report(const std::string& input_text, const Program& input, const TargetDesc& target,
                   const SearchConfig& cfg, const SearchResult& result) {
  Report r;
  r.input = input_text;
  r.target = target.name;
  r.precision = precision(input.output);
  r.config = cfg;
  r.original = entry_of(result.original, target, r.precision);
  for (const auto& c : result.frontier) r.frontier.push_back(entry_of(c, target, r.precision));
  r.trace = result.trace;
  return r;
}

void emit_report(const Report& r, ReportFormat format, std::ostream& out) {
  switch (format) {
    case ReportFormat::Json: {
      nlohmann::ordered_json j;
      j["input"] = r.input;
      j["target"] = r.target;
      j["precision"] = r.precision;
      j["config"] = {{"seed", r.config.seed},
                     {"points", r.config.points},
                     {"iterations", r.config.iterations},
                     {"node_limit", r.config.node_limit},
                     {"iter_limit", r.config.iter_limit},
                     {"candidates_per_site", r.config.candidates_per_site},
                     {"sites_per_iteration", r.config.sites_per_iteration},
                     {"error_threshold", r.config.error_threshold}};
      j["original"] = entry_json(r.original);
      j["frontier"] = nlohmann::ordered_json::array();
      for (const auto& e : r.frontier) j["frontier"].push_back(entry_json(e));
      j["trace"] = nlohmann::ordered_json::array();
      for (const auto& t : r.trace) {
        j["trace"].push_back({{"iteration", t.iteration},
                              {"expanded", t.expanded},
                              {"sites", t.sites},
                              {"egraph_nodes", t.egraph_nodes},
                              {"site_candidates", t.site_candidates},
                              {"new_candidates", t.new_candidates},
                              {"frontier_size", t.frontier_size},
                              {"min_cost", t.min_cost},
                              {"min_error", t.min_error}});
      }
      out << j.dump(2) << "\n";
      return;
    }
    case ReportFormat::Csv:
      out << "cost,accuracy,fpcore\n";
      for (const auto& e : r.frontier)
        out << format_number(e.cost) << "," << format_number(e.accuracy) << "," << csv_quote(e.fpcore) << "\n";
      return;
    case ReportFormat::FPCore:
      for (const auto& e : r.frontier) out << header(e) << e.fpcore << "\n";
      return;
    case ReportFormat::Code:
      for (const auto& e : r.frontier)
        if (!e.code) throw TargetError("target has operators without #:codegen templates; cannot emit code");
      for (const auto& e : r.frontier) out << header(e) << *e.code << "\n";
      return;
  }
}

}  // namespace fpsel
