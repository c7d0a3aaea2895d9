#pragma once

// Parameterizable symbolic abstract heap domains: a family picks which of
// the aliasing and transitive field-aliasing relations are tracked
// flow-sensitively; the instance materializes level and relation variables
// over a method's reference set and provides the predicate transformers for
// reference assignments, mutations, and the junction-time bulk upgrade.

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "heapguard/heap/hierarchy.hpp"
#include "heapguard/sym/predicate.hpp"

namespace heapguard::heap {

struct HeapFamily {
  std::string name;
  std::set<RelKind> sensitive;
  std::set<RelKind> insensitive;

  static HeapFamily deep() { return {"deep", {RelKind::Alias, RelKind::FieldReach}, {}}; }
  static HeapFamily shal() { return {"shal", {RelKind::Alias}, {RelKind::FieldReach}}; }
  static HeapFamily dumb() { return {"dumb", {}, {RelKind::Alias, RelKind::FieldReach}}; }
  static HeapFamily by_name(const std::string& name);
};

/// The two abstract heap copies of the security semantics: the working heap
/// and the placeholder used around upgrade analyses.
enum class HeapCopy : uint8_t { Cur = 0, Saved = 1 };

struct RefDecl {
  std::string name;
  std::string type;
};

/// Single seeded transformer bug for the oracle suites' mutation controls.
enum class TransformerBug : uint8_t {
  None,
  DropFieldAliasOnLoad,  // loads forget who could reach the loaded object
  SkipFreachUpgrade,     // level upgrades ignore transitive field-aliases
  DropAliasOnCopy,       // reference copies keep stale alias facts
};

TransformerBug bug_by_name(const std::string& name);

/// Reference operations the relation transformers distinguish.
struct RefOp {
  enum class Kind : uint8_t { Erase, Copy, Load, Store } kind;
  uint32_t r = 0;  // target (receiver for Store)
  uint32_t s = 0;  // source (unused for Erase)
};

/// Heap transformer selector: reference assignments carry no level, mutations
/// take the level of the information flowing into mutated objects.
struct HeapOp {
  enum class Kind : uint8_t {
    AssignNull,      // r = null
    AssignCopy,      // r = s
    AssignLoad,      // r = s.f_r
    MutateNew,       // r = new, level
    MutatePrim,      // r.f_p <- , level
    MutateRefStore,  // r.f_r = s, level
  } kind;
  uint32_t r = 0;
  uint32_t s = 0;
};

class HeapDomainInstance {
 public:
  struct RelEntry {
    RelKind rel;
    uint32_t r, s;  // Alias entries are canonical with r <= s
    friend bool operator==(const RelEntry& a, const RelEntry& b) {
      return a.rel == b.rel && a.r == b.r && a.s == b.s;
    }
    friend bool operator<(const RelEntry& a, const RelEntry& b) {
      if (a.rel != b.rel) return a.rel < b.rel;
      if (a.r != b.r) return a.r < b.r;
      return a.s < b.s;
    }
  };

  /// Computes the variable/constant partition over R and registers level and
  /// relation variables for the requested copies into `space`.
  HeapDomainInstance(HeapFamily family, std::vector<RefDecl> refs, const ClassHierarchy& hier,
                     sym::VarSpace& space, bool with_saved_copy);

  const HeapFamily& family() const { return family_; }
  const std::vector<RefDecl>& refs() const { return refs_; }
  uint32_t ref_count() const { return static_cast<uint32_t>(refs_.size()); }
  std::optional<uint32_t> ref_index(const std::string& name) const;
  bool has_saved_copy() const { return with_saved_; }

  const std::vector<RelEntry>& tracked() const { return tracked_; }      // variables
  const std::vector<RelEntry>& const_false() const { return c_false_; }  // never hold
  const std::vector<RelEntry>& const_true() const { return c_true_; }    // always assumed

  sym::Var level_var(HeapCopy c, uint32_t ref) const;
  std::optional<sym::Var> rel_var(HeapCopy c, RelKind rel, uint32_t r, uint32_t s) const;

  /// The relation value as a predicate: the tracked variable, or the
  /// pre-analysis constant.
  sym::Predicate rel_value(sym::PredicateManager& mgr, HeapCopy c, RelKind rel, uint32_t r,
                           uint32_t s) const;
  sym::Predicate level_value(sym::PredicateManager& mgr, HeapCopy c, uint32_t ref) const;

  // Relation-variable updates for reference operations, on the working copy.
  sym::AssignmentSet upd_hp_rel(sym::PredicateManager& mgr, const RefOp& op,
                                TransformerBug bug = TransformerBug::None) const;
  // Weak level upgrade of everything that may alias or transitively reach r.
  sym::AssignmentSet upd_hp_lev(sym::PredicateManager& mgr, uint32_t r, sym::Predicate level,
                                TransformerBug bug = TransformerBug::None) const;
  // Full transformers combining relation and level parts.
  sym::AssignmentSet heap_transformer(sym::PredicateManager& mgr, const HeapOp& op,
                                      std::optional<sym::Predicate> level,
                                      TransformerBug bug = TransformerBug::None) const;

  /// Predicate forcing every tracked relation touching R' to false and every
  /// level of R' to low.
  sym::Predicate null_refs_pred(sym::PredicateManager& mgr, const std::vector<uint32_t>& subset,
                                HeapCopy c = HeapCopy::Cur) const;

  /// Copies relations back from the saved copy and joins levels upward
  /// through the saved copy's relations (junction-time merge).
  sym::AssignmentSet bulk_upgrade(sym::PredicateManager& mgr) const;
  /// Saved copy := working copy (on entering a high branch).
  sym::AssignmentSet snapshot(sym::PredicateManager& mgr) const;
  /// Simultaneous exchange of the two copies (start of an upgrade analysis).
  sym::AssignmentSet swap_copies(sym::PredicateManager& mgr) const;

  /// All heap state variables of one copy, levels first.
  std::vector<sym::Var> copy_vars(HeapCopy c) const;

 private:
  void classify_pair(const ClassHierarchy& hier, RelKind rel, uint32_t r, uint32_t s);
  RelEntry canon(RelKind rel, uint32_t r, uint32_t s) const {
    if (rel == RelKind::Alias && s < r) std::swap(r, s);
    return RelEntry{rel, r, s};
  }

  HeapFamily family_;
  std::vector<RefDecl> refs_;
  bool with_saved_ = false;
  std::vector<RelEntry> tracked_, c_false_, c_true_;
  std::map<RelEntry, uint8_t> kind_;  // 0 tracked, 1 false, 2 true
  std::map<RelEntry, sym::Var> rel_vars_[2];
  std::vector<sym::Var> lev_vars_[2];
};

}  // namespace heapguard::heap
