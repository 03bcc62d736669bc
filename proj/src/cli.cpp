#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "CLI11.hpp"
#include "fpsel/cli.hpp"
#include "fpsel/report.hpp"

namespace fpsel {

namespace {

std::string read_all(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  s.erase(s.begin(), std::find_if_not(s.begin(), s.end(), ws));
  s.erase(std::find_if_not(s.rbegin(), s.rend(), ws).base(), s.end());
  return s;
}

std::string cost_text(double c) {
  std::string s = format_number(c);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string signature(const OperatorDef& op) {
  std::string s = "(";
  for (std::size_t i = 0; i < op.arg_types.size(); ++i) s += (i ? " " : "") + std::string(type_name(op.arg_types[i]));
  return s + ") -> " + std::string(type_name(op.ret_type));
}

std::string impl_text(const OperatorImpl& impl) {
  if (impl.kind == OperatorImpl::Kind::RoundedAt) return "rounded-at " + std::to_string(impl.bits);
  return "correctly-rounded";
}

void print_target(const TargetDesc& t, std::ostream& out) {
  out << "target " << t.name << ": " << t.operators.size() << " operator" << (t.operators.size() == 1 ? "" : "s")
      << "\n";
  if (t.operators.empty()) return;
  std::vector<std::array<std::string, 5>> rows = {{"name", "signature", "cost", "impl", "desugaring"}};
  for (const auto& [name, op] : t.operators)
    rows.push_back({name, signature(op), cost_text(op.cost), impl_text(op.impl), to_sexpr(op.approx)});
  std::array<std::size_t, 5> width{};
  for (const auto& r : rows)
    for (std::size_t i = 0; i < 5; ++i) width[i] = std::max(width[i], r[i].size());
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < 4; ++i) out << std::left << std::setw(static_cast<int>(width[i] + 2)) << r[i];
    out << r[4] << "\n";
  }
}

struct CompileArgs {
  std::string target;
  std::string input;
  std::uint64_t seed = 0;
  std::size_t points = 512;
  std::size_t iters = 4;
  std::size_t node_limit = 8000;
  std::string format = "json";
  std::string out = "-";
};

int compile(const CompileArgs& a, std::ostream& out, std::istream& in) {
  TargetDesc target = [&] {
    try {
      return load_target(a.target);
    } catch (const ParseError& e) {
      throw TargetError(a.target + ":" + e.what());
    }
  }();
  std::string text;
  if (a.input == "-") {
    text = read_all(in);
  } else {
    std::ifstream f(a.input);
    if (!f) throw Error("cannot read input `" + a.input + "`");
    text = read_all(f);
  }
  Program program = resolve(parse_program(text), target);
  SearchConfig cfg;
  cfg.seed = a.seed;
  cfg.points = a.points;
  cfg.iterations = a.iters;
  cfg.node_limit = a.node_limit;
  SearchResult result = improve(program, target, cfg);
  Report report = make_report(trim(text), program, target, cfg, result);
  ReportFormat fmt = *parse_report_format(a.format);

  std::ostringstream buf;
  emit_report(report, fmt, buf);
  if (a.out == "-") {
    out << buf.str();
  } else {
    std::ofstream f(a.out, std::ios::binary);
    if (!f) throw Error("cannot write `" + a.out + "`");
    f << buf.str();
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, std::istream& in) {
  CLI::App app{"Target-aware floating-point compiler"};
  app.name("fpsel");
  app.require_subcommand(1);

  CompileArgs ca;
  auto* compile_cmd = app.add_subcommand("compile", "Search for cost/accuracy trade-offs of one FPCore program");
  compile_cmd->add_option("--target", ca.target, "Target description file")->required();
  compile_cmd->add_option("--input", ca.input, "FPCore program file, or - for stdin")->required();
  compile_cmd->add_option("--seed", ca.seed, "Sampling seed");
  compile_cmd->add_option("--points", ca.points, "Sample points per train/test split")->check(CLI::PositiveNumber);
  compile_cmd->add_option("--iters", ca.iters, "Search iterations")->check(CLI::PositiveNumber);
  compile_cmd->add_option("--node-limit", ca.node_limit, "E-graph node limit")->check(CLI::PositiveNumber);
  compile_cmd->add_option("--format", ca.format, "Report format")
      ->check(CLI::IsMember({"json", "csv", "fpcore", "code"}));
  compile_cmd->add_option("--out", ca.out, "Output file, or - for stdout");

  std::string target_path;
  auto* check_cmd = app.add_subcommand("check-target", "Validate a target file and list its operators");
  check_cmd->add_option("path", target_path, "Target description file")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "fpsel: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (*check_cmd) {
      print_target(load_target(target_path), out);
      return kExitOk;
    }
    return compile(ca, out, in);
  } catch (const NoSuchOperator& e) {
    err << "fpsel: target cannot express `" << e.surface() << "` at " << e.type() << ": " << e.what() << "\n";
    return kExitInput;
  } catch (const SamplingExhausted& e) {
    err << "fpsel: program domain too small to sample: " << e.what() << "\n";
    return kExitInput;
  } catch (const TargetError& e) {
    err << "fpsel: invalid target: " << e.what() << "\n";
    return kExitInput;
  } catch (const ParseError& e) {
    err << "fpsel: parse error at " << e.what() << "\n";
    return *check_cmd ? kExitInput : kExitFailure;
  } catch (const std::exception& e) {
    err << "fpsel: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace fpsel
