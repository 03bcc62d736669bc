#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fpsel/egraph.hpp"
#include "fpsel/oracle.hpp"
#include "fpsel/target.hpp"

namespace fpsel {

struct SearchConfig {
  std::size_t iterations = 4;
  std::size_t node_limit = 8000;
  /// Saturation rounds per site; the node limit usually binds first.
  std::size_t iter_limit = 8;
  std::size_t candidates_per_site = 40;
  /// Top-k per heuristic.
  std::size_t sites_per_iteration = 3;
  /// Points per split; the test split has the same size.
  std::size_t points = 512;
  std::uint64_t seed = 0;
  /// Local-error threshold, in bits, for a node to count as a site.
  double error_threshold = 0.5;

  /// Throws Error unless every count is positive.
  void validate() const;
};

struct Candidate {
  Program program{{}, Expr::var("_"), TypeTag::B64};
  double cost = 0.0;
  /// Mean bits of error on the point set the candidate was last scored on.
  double error = 0.0;
  double train_error = 0.0;
  std::optional<double> test_error;
  std::size_t iteration = 0;
  std::int64_t id = 0;
  std::int64_t parent = -1;
  /// Structural key, also the tie-break order.
  std::string key;
};

/// Non-dominated over (cost, error), sorted by cost ascending.
using Frontier = std::vector<Candidate>;

/// Exact non-dominated subset. Equal programs collapse to one; of two
/// programs with equal cost and error the smaller key survives.
Frontier pareto_filter(std::vector<Candidate> cands);

enum class SiteReason { LocalError, CostOpportunity, Both };
std::string_view site_reason_name(SiteReason r);

struct Site {
  NodePath path;
  SiteReason reason;
};

/// Union of the top-k nodes by local error (above the threshold) and the
/// top-k by clamped cost opportunity (above 0). Nodes in If conditions,
/// comparisons, and subtrees holding a branch are never chosen.
std::vector<Site> pick_sites(const Candidate& c, const TargetDesc& target, const std::vector<SamplePoint>& points,
                             std::size_t k, double error_threshold = 0.5);

struct RewriteOutcome {
  std::vector<Program> programs;
  SaturationReport saturation;
  std::size_t variants = 0;
};

/// Saturates the site subexpression with the full rule set, multi-extracts
/// at its type and splices each variant back into the program.
RewriteOutcome rewrite_site(const Program& p, const NodePath& site, const TargetDesc& target,
                            const SearchConfig& cfg);

struct IterationTrace {
  std::size_t iteration = 0;
  std::size_t expanded = 0;
  std::vector<std::string> sites;
  std::vector<std::size_t> egraph_nodes;
  std::vector<std::size_t> site_candidates;
  std::size_t new_candidates = 0;
  std::size_t frontier_size = 0;
  double min_cost = 0.0;
  double min_error = 0.0;
};

struct SearchResult {
  /// Input program, scored on the test points.
  Candidate original;
  /// Scored on the test points.
  Frontier frontier;
  std::vector<IterationTrace> trace;
  std::vector<SamplePoint> train;
  std::vector<SamplePoint> test;
  std::vector<double> test_truth;
};

SearchResult improve(const Program& p, const TargetDesc& target, const SearchConfig& cfg);

}  // namespace fpsel
