#pragma once

// Symbolic control-flow graph of a method's security semantics: semantic
// locations over (CFG node, behavior flag), guarded transitions with
// simultaneous state-variable assignments, the initial predicate, and the
// location-indexed safety invariant.

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "heapguard/heap/domain.hpp"
#include "heapguard/sir/cfg.hpp"
#include "heapguard/sym/predicate.hpp"

namespace heapguard::scfg {

struct Transition {
  sym::Predicate guard;
  sym::AssignmentSet update;
  uint32_t target = 0;
};

struct LocationInfo {
  uint32_t node = 0;  // CFG node (statement index, or exit)
  bool behavior = false;  // junction statements split: false = junction step, true = statement
  std::string name;
};

class Scfg {
 public:
  std::shared_ptr<sym::VarSpace> space;
  std::shared_ptr<sym::PredicateManager> mgr;
  std::shared_ptr<heap::HeapDomainInstance> heap;

  std::vector<LocationInfo> locations;
  std::vector<std::vector<Transition>> delta;
  uint32_t initial = 0;

  sym::Predicate init_pred;      // X0
  sym::Valuation init_bindings;  // the bound part of X0, a cube

  sym::Var choice;        // nondeterministic branch input
  sym::Var upgrade_mode;  // weak-update phase flag
  sym::Var region;        // active high region (enum; value 0 means none)
  sym::Var pc;
  std::map<std::string, sym::Var> var_level;  // x -> level of variable x

  std::vector<sym::Var> state_vars;  // everything but the input

  uint32_t location_count() const { return static_cast<uint32_t>(locations.size()); }
  std::optional<uint32_t> find_location(uint32_t node, bool behavior) const {
    auto it = loc_index_.find({node, behavior});
    if (it == loc_index_.end()) return std::nullopt;
    return it->second;
  }
  uint32_t add_location(LocationInfo info) {
    uint32_t id = location_count();
    loc_index_[{info.node, info.behavior}] = id;
    locations.push_back(std::move(info));
    delta.emplace_back();
    return id;
  }

 private:
  std::map<std::pair<uint32_t, bool>, uint32_t> loc_index_;
};

/// Location-indexed safety predicates; tt anywhere not constrained.
struct SafetyInvariant {
  std::vector<sym::Predicate> at;
  sym::Predicate of(uint32_t loc) const { return at.at(loc); }
};

struct ValidationIssue {
  uint32_t location = 0;
  std::string what;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
};

/// Checks symbolically that every location is deterministic (pairwise
/// disjoint guards) and reactive (guards cover every input/state valuation).
ValidationReport validate_scfg(const Scfg& s);

}  // namespace heapguard::scfg
