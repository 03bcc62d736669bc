#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fpsel/ir.hpp"
#include "fpsel/target.hpp"

namespace fpsel {

using ClassId = std::uint32_t;

/// E-node head. `id` indexes the graph's symbol tables for Var, Lit and
/// Float heads, and is the RealFn ordinal for Real heads.
struct Head {
  enum class Kind : std::uint8_t { Var, Lit, Real, Float };
  Kind kind = Kind::Var;
  std::uint32_t id = 0;

  bool operator==(const Head&) const = default;
  auto operator<=>(const Head&) const = default;
};

inline constexpr std::size_t kMaxArity = 4;

struct ENode {
  Head head;
  std::uint8_t arity = 0;
  std::array<ClassId, kMaxArity> kids{};

  const ClassId* begin() const { return kids.data(); }
  const ClassId* end() const { return kids.data() + arity; }
  bool operator==(const ENode& o) const {
    if (head != o.head || arity != o.arity) return false;
    for (std::uint8_t i = 0; i < arity; ++i)
      if (kids[i] != o.kids[i]) return false;
    return true;
  }
};

struct ENodeHash {
  std::size_t operator()(const ENode& n) const noexcept;
};

/// Pattern-variable bindings, indexed by the rule's variable numbering.
using Subst = std::vector<ClassId>;
inline constexpr ClassId kUnbound = std::numeric_limits<ClassId>::max();

/// A pattern compiled against a rule's variable numbering.
struct Pattern {
  Expr source;
  std::vector<std::string> vars;
};

Pattern compile_pattern(const Expr& e, std::vector<std::string> vars = {});

struct SaturationLimits {
  std::size_t node_limit = 8000;
  std::size_t iter_limit = 8;
};

struct SaturationReport {
  /// Unsound: an iteration merged two different constants (a rewrite was
  /// applied at a singularity); the graph is rolled back to before it.
  enum class StopReason { Saturated, NodeLimit, IterLimit, Unsound };
  StopReason stopped_by = StopReason::Saturated;
  std::size_t iterations = 0;
  std::size_t node_count = 0;
};

std::string_view stop_reason_name(SaturationReport::StopReason r);

/// Hash-consed e-graph with union-find. Classes are equivalence under real
/// semantics; real and float e-nodes share classes.
class EGraph {
 public:
  explicit EGraph(std::size_t node_limit = std::numeric_limits<std::size_t>::max()) : node_limit_(node_limit) {}

  ClassId add(const Expr& e);
  ClassId add_node(ENode node);
  /// Returns the class if the term is already represented.
  std::optional<ClassId> lookup(const Expr& e) const;

  ClassId find(ClassId id) const;
  ClassId merge(ClassId a, ClassId b);
  /// Restores congruence and canonical node lists. Returns the number of
  /// extra unions performed.
  std::size_t rebuild();

  std::vector<std::pair<ClassId, Subst>> ematch(const Pattern& p) const;

  SaturationReport saturate(const std::vector<RewriteRule>& rules, SaturationLimits limits);

  std::size_t node_count() const { return memo_.size(); }
  std::size_t class_count() const;
  void set_node_limit(std::size_t limit) { node_limit_ = limit; }

  /// Canonical class ids in increasing order.
  std::vector<ClassId> classes() const;
  const std::vector<ENode>& nodes(ClassId id) const { return classes_[find(id)].nodes; }

  const std::string& var_name(const Head& h) const { return var_names_[h.id]; }
  const std::string& op_name(const Head& h) const { return op_names_[h.id]; }
  const Rational& lit_value(const Head& h) const { return lits_[h.id]; }
  std::string head_name(const Head& h) const;

  /// True once a merge has joined classes holding different constants.
  bool unsound() const { return unsound_; }

  /// Literal value held by a class, if any.
  const Rational* class_constant(ClassId id) const;

  /// Debug dump: one line per class `cN := node | node`.
  std::string dump() const;

 private:
  struct EClass {
    std::vector<ENode> nodes;
    std::vector<std::pair<ENode, ClassId>> parents;
  };

  ENode canonicalize(ENode n) const;
  std::uint32_t intern_var(const std::string& s);
  std::uint32_t intern_op(const std::string& s);
  std::uint32_t intern_lit(const Rational& q);
  std::optional<Head> lookup_head(const Expr& e) const;

  ClassId instantiate(const Expr& p, const Pattern& pat, const Subst& s);

  mutable std::vector<ClassId> parent_;
  std::vector<EClass> classes_;
  std::unordered_map<ENode, ClassId, ENodeHash> memo_;
  std::vector<ClassId> pending_;
  std::size_t node_limit_;
  bool unsound_ = false;

  std::vector<std::string> var_names_;
  std::unordered_map<std::string, std::uint32_t> var_index_;
  std::vector<std::string> op_names_;
  std::unordered_map<std::string, std::uint32_t> op_index_;
  std::vector<Rational> lits_;
  std::unordered_map<std::string, std::uint32_t> lit_index_;

  std::map<Head, std::vector<ClassId>> head_index_;
};

}  // namespace fpsel
