#include <algorithm>
#include <set>

#include "fpsel/costing.hpp"
#include "fpsel/extraction.hpp"
#include "fpsel/rules.hpp"
#include "fpsel/search.hpp"

namespace fpsel {

void SearchConfig::validate() const {
  if (iterations == 0 || node_limit == 0 || iter_limit == 0 || candidates_per_site == 0 || sites_per_iteration == 0 ||
      points == 0)
    throw Error("search limits must be positive");
}

Frontier pareto_filter(std::vector<Candidate> cands) {
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.error != b.error) return a.error < b.error;
    if (a.key != b.key) return a.key < b.key;
    return a.id < b.id;
  });
  Frontier out;
  std::set<std::string> seen;
  for (auto& c : cands) {
    if (!seen.insert(c.key).second) continue;
    // Sorted by cost, so c survives iff it beats every cheaper-or-equal
    // survivor on error.
    if (!out.empty() && c.error >= out.back().error) continue;
    out.push_back(std::move(c));
  }
  return out;
}

std::string_view site_reason_name(SiteReason r) {
  switch (r) {
    case SiteReason::LocalError: return "local-error";
    case SiteReason::CostOpportunity: return "cost-opportunity";
    case SiteReason::Both: return "both";
  }
  return "?";
}

namespace {

bool has_branch(const Expr& e) {
  if (e.is(ExprKind::If) || e.is(ExprKind::Cmp)) return true;
  return std::any_of(e.args().begin(), e.args().end(), has_branch);
}

std::set<NodePath> eligible_sites(const Expr& body) {
  std::set<NodePath> out;
  NodePath path;
  auto rec = [&](auto& self, const Expr& n, bool in_cond) -> void {
    if (n.is(ExprKind::Cmp)) return;
    if (!in_cond && n.is(ExprKind::FloatOp) && !has_branch(n)) out.insert(path);
    for (std::uint32_t i = 0; i < n.args().size(); ++i) {
      path.push_back(i);
      self(self, n.args()[i], in_cond || (n.is(ExprKind::If) && i == 0));
      path.pop_back();
    }
  };
  rec(rec, body, false);
  return out;
}

std::vector<NodePath> top_k(const std::map<NodePath, double>& scores, const std::set<NodePath>& allowed,
                            double threshold, std::size_t k) {
  std::vector<std::pair<double, NodePath>> ranked;
  for (const auto& [path, v] : scores)
    if (v > threshold && allowed.count(path)) ranked.push_back({v, path});
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<NodePath> out;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) out.push_back(ranked[i].second);
  return out;
}

std::string path_text(const NodePath& p) {
  if (p.empty()) return "root";
  std::string s;
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? "." : "") + std::to_string(p[i]);
  return s;
}

}  // namespace

std::vector<Site> pick_sites(const Candidate& c, const TargetDesc& target, const std::vector<SamplePoint>& points,
                             std::size_t k, double error_threshold) {
  std::set<NodePath> allowed = eligible_sites(c.program.body);
  if (allowed.empty()) return {};
  auto by_error = top_k(local_error(c.program, points, target), allowed, error_threshold, k);
  auto by_cost = top_k(cost_opportunity(c.program.body, param_env(c.program), target).clamped, allowed, 0.0, k);
  std::vector<Site> out;
  for (const auto& p : by_error) out.push_back({p, SiteReason::LocalError});
  for (const auto& p : by_cost) {
    auto it = std::find_if(out.begin(), out.end(), [&](const Site& s) { return s.path == p; });
    if (it != out.end())
      it->reason = SiteReason::Both;
    else
      out.push_back({p, SiteReason::CostOpportunity});
  }
  return out;
}

RewriteOutcome rewrite_site(const Program& p, const NodePath& site, const TargetDesc& target,
                            const SearchConfig& cfg) {
  const Expr& sub = at_path(p.body, site);
  VarEnv env = param_env(p);
  TypeTag t = typecheck(sub, env, target);
  std::vector<RewriteRule> rules = math_rules();
  for (auto& r : derive_rules(target)) rules.push_back(std::move(r));

  EGraph g;
  ClassId root = g.add(sub);
  RewriteOutcome out;
  out.saturation = g.saturate(rules, {cfg.node_limit, cfg.iter_limit});
  CostModel cm(target);
  Extractor ex(g, cm, env);
  auto variants = ex.multi_extract(root, t, cfg.candidates_per_site);
  out.variants = variants.size();
  for (const auto& v : variants) {
    Program q{p.params, replace_at(p.body, site, v), p.output};
    typecheck(q.body, env, target);
    out.programs.push_back(std::move(q));
  }
  return out;
}

SearchResult improve(const Program& p, const TargetDesc& target, const SearchConfig& cfg) {
  cfg.validate();
  CostModel cm(target);
  SampleSet all = sample_with_truth(p, target, 2 * cfg.points, cfg.seed);
  SearchResult res;
  std::vector<double> train_truth;
  for (std::size_t i = 0; i < all.points.size(); ++i) {
    bool train = i < cfg.points;
    (train ? res.train : res.test).push_back(std::move(all.points[i]));
    (train ? train_truth : res.test_truth).push_back(all.truth[i]);
  }

  std::int64_t next_id = 0;
  auto evaluate = [&](Program prog, std::size_t iteration, std::int64_t parent) {
    Candidate c;
    c.key = to_sexpr(prog.body);
    c.cost = program_cost(prog.body, cm);
    c.train_error = accuracy(prog, res.train, train_truth, target).mean_bits;
    c.error = c.train_error;
    c.program = std::move(prog);
    c.iteration = iteration;
    c.id = next_id++;
    c.parent = parent;
    return c;
  };

  Candidate original = evaluate(p, 0, -1);
  Frontier frontier = pareto_filter({original});
  std::set<std::string> seen = {original.key};
  std::set<std::string> expanded;

  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    IterationTrace tr;
    tr.iteration = it;
    std::vector<Candidate> pool = frontier;
    for (const Candidate& member : frontier) {
      // Rewriting is deterministic, so a member expanded earlier would only
      // regenerate programs already seen.
      if (!expanded.insert(member.key).second) continue;
      ++tr.expanded;
      for (const Site& s : pick_sites(member, target, res.train, cfg.sites_per_iteration, cfg.error_threshold)) {
        RewriteOutcome ro = rewrite_site(member.program, s.path, target, cfg);
        tr.sites.push_back("#" + std::to_string(member.id) + "@" + path_text(s.path) + ":" +
                           std::string(site_reason_name(s.reason)));
        tr.egraph_nodes.push_back(ro.saturation.node_count);
        tr.site_candidates.push_back(ro.variants);
        for (auto& prog : ro.programs) {
          std::string key = to_sexpr(prog.body);
          if (!seen.insert(key).second) continue;
          pool.push_back(evaluate(std::move(prog), it, member.id));
          ++tr.new_candidates;
        }
      }
    }
    frontier = pareto_filter(std::move(pool));
    tr.frontier_size = frontier.size();
    tr.min_cost = frontier.front().cost;
    tr.min_error = std::min_element(frontier.begin(), frontier.end(), [](const Candidate& a, const Candidate& b) {
                     return a.error < b.error;
                   })->error;
    res.trace.push_back(std::move(tr));
  }

  auto score_test = [&](Candidate& c) {
    c.test_error = accuracy(c.program, res.test, res.test_truth, target).mean_bits;
    c.error = *c.test_error;
  };
  for (auto& c : frontier) score_test(c);
  score_test(original);
  res.frontier = pareto_filter(std::move(frontier));
  res.original = std::move(original);
  return res;
}

}  // namespace fpsel
