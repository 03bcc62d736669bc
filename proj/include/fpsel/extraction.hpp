#pragma once

#include <map>
#include <optional>
#include <vector>

#include "fpsel/costing.hpp"
#include "fpsel/egraph.hpp"

namespace fpsel {

/// Lowest tree-cost well-typed float program per (e-class, float type).
///
/// Only float-operator, variable and literal e-nodes produce entries. A
/// variable has only its declared type; a literal is available at every
/// float type that represents it exactly. Ties go to the smaller term, then
/// to the lexicographically smaller head name.
class Extractor {
 public:
  struct Entry {
    double cost = 0.0;
    std::size_t size = 0;
    ENode node;
  };

  /// The graph must be rebuilt and must outlive the extractor.
  Extractor(const EGraph& g, const CostModel& cm, VarEnv env);

  const Entry* entry(ClassId c, TypeTag t) const;
  std::optional<double> best_cost(ClassId c, TypeTag t) const;

  /// Throws NoWellTypedProgram when the class has no program of type t.
  Expr extract(ClassId c, TypeTag t) const;

  /// One candidate per e-node of the class that yields type t, children at
  /// their best; deduplicated, cheapest `cap` kept, sorted by cost.
  std::vector<Expr> multi_extract(ClassId c, TypeTag t, std::size_t cap) const;

  std::size_t entry_count() const { return table_.size(); }

 private:
  /// Type produced by a node, or nullopt when it yields no float program at
  /// all. Literals are handled separately since they have several types.
  std::optional<TypeTag> node_type(const ENode& n) const;
  std::optional<Entry> node_entry(const ENode& n, TypeTag t) const;
  bool better(const Entry& a, const Entry& b) const;
  Expr build(const ENode& n, TypeTag t) const;

  const EGraph& g_;
  const CostModel& cm_;
  VarEnv env_;
  std::map<std::pair<ClassId, TypeTag>, Entry> table_;
};

}  // namespace fpsel
