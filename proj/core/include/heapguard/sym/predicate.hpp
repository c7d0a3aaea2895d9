#pragma once

// Canonical predicates over a VarSpace, backed by reduced ordered binary
// decision diagrams with hash-consed nodes. Structural equality coincides
// with semantic equivalence, and node allocation is deterministic, so a
// fixed variable order yields bit-for-bit reproducible runs.

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "heapguard/sym/var_space.hpp"

namespace heapguard::sym {

class PredicateManager;

struct NodeBudgetExceeded : std::runtime_error {
  NodeBudgetExceeded() : std::runtime_error("predicate node budget exceeded") {}
};

class Predicate {
 public:
  Predicate() = default;

  bool valid() const { return mgr_ != nullptr; }
  PredicateManager* manager() const { return mgr_; }
  uint32_t node() const { return node_; }

  // Canonical form: structural equality is semantic equivalence.
  friend bool operator==(const Predicate& a, const Predicate& b) {
    return a.mgr_ == b.mgr_ && a.node_ == b.node_;
  }
  friend bool operator!=(const Predicate& a, const Predicate& b) { return !(a == b); }
  friend bool operator<(const Predicate& a, const Predicate& b) {
    return a.mgr_ != b.mgr_ ? a.mgr_ < b.mgr_ : a.node_ < b.node_;
  }

  Predicate operator!() const;
  Predicate operator&&(const Predicate& o) const;
  Predicate operator||(const Predicate& o) const;

  bool is_true() const;
  bool is_false() const;

 private:
  friend class PredicateManager;
  Predicate(PredicateManager* mgr, uint32_t node) : mgr_(mgr), node_(node) {}

  PredicateManager* mgr_ = nullptr;
  uint32_t node_ = 0;
};

enum class Classification { Tautology, Unsatisfiable, Contingent };

/// Guarded simultaneous assignments to state variables. Boolean targets carry
/// a predicate right-hand side; enum targets only ever receive constants.
/// Absent variables are unchanged; an empty set is the identity.
class AssignmentSet {
 public:
  struct Rhs {
    Predicate pred;                     // Boolean target
    std::optional<uint32_t> enum_value; // enum target
  };

  bool empty() const { return entries_.empty(); }
  const std::map<uint32_t, Rhs>& entries() const { return entries_; }

  void set(Var v, Predicate rhs) {
    if (entries_.count(v.index)) throw std::logic_error("variable assigned twice");
    entries_[v.index] = Rhs{rhs, std::nullopt};
  }
  void set_enum(Var v, uint32_t value) {
    if (entries_.count(v.index)) throw std::logic_error("variable assigned twice");
    entries_[v.index] = Rhs{Predicate{}, value};
  }
  bool assigns(Var v) const { return entries_.count(v.index) != 0; }
  const Rhs& rhs(Var v) const { return entries_.at(v.index); }

 private:
  friend class PredicateManager;
  std::map<uint32_t, Rhs> entries_;
};

/// Total or partial valuation of a VarSpace, used by cofactor and by the
/// concrete interpreter when it evaluates ghost-state updates.
class Valuation {
 public:
  void set_bool(Var v, bool b) { values_[v.index] = b ? 1u : 0u; }
  void set_enum(Var v, uint32_t value) { values_[v.index] = value; }
  bool has(Var v) const { return values_.count(v.index) != 0; }
  uint32_t get(Var v) const { return values_.at(v.index); }
  bool get_bool(Var v) const { return values_.at(v.index) != 0; }
  const std::map<uint32_t, uint32_t>& values() const { return values_; }
  void erase(Var v) { values_.erase(v.index); }

 private:
  std::map<uint32_t, uint32_t> values_;
};

class PredicateManager {
 public:
  explicit PredicateManager(std::shared_ptr<const VarSpace> space,
                            size_t node_budget = kDefaultNodeBudget);

  const VarSpace& space() const { return *space_; }
  std::shared_ptr<const VarSpace> space_ptr() const { return space_; }

  Predicate top() { return wrap(1); }
  Predicate bottom() { return wrap(0); }
  Predicate constant(bool b) { return wrap(b ? 1 : 0); }

  /// Boolean variable as a predicate.
  Predicate var(Var v);
  /// Enum variable equals a constant value (a cube over its bits).
  Predicate enum_eq(Var v, uint32_t value);

  Predicate negate(Predicate f);
  Predicate conj(Predicate f, Predicate g);
  Predicate disj(Predicate f, Predicate g);
  Predicate implies(Predicate f, Predicate g);
  Predicate equiv(Predicate f, Predicate g);
  Predicate ite(Predicate c, Predicate t, Predicate e);

  Classification classify(Predicate f) const;
  /// f entails g.
  bool entails(Predicate f, Predicate g) { return implies(f, g).is_true(); }

  /// Existential quantification over whole registry variables.
  Predicate exists(Predicate f, const std::vector<Var>& vars);

  /// Simultaneous substitution: replace every assigned variable in f by its
  /// right-hand side, all evaluated on the pre-state.
  Predicate substitute(Predicate f, const AssignmentSet& a);

  /// Partial evaluation of f under the bindings of a cube. The result
  /// mentions no bound variable and agrees with f wherever the cube holds.
  Predicate cofactor(Predicate f, const Valuation& bindings);

  /// Merge per Boolean disjunction (both the Boolean over-approximations and
  /// the true-is-high level encoding combine with "or"); enum targets must
  /// agree when assigned on both sides.
  AssignmentSet merge(const AssignmentSet& a, const AssignmentSet& b);

  /// Evaluate under a total valuation.
  bool eval(Predicate f, const Valuation& v) const;

  /// Registry variables f depends on.
  std::vector<Var> support(Predicate f) const;

  /// Stable text dump: sum of products, variables in registry order.
  std::string dump(Predicate f) const;

  size_t node_count() const { return nodes_.size(); }
  size_t node_budget() const { return node_budget_; }
  void set_node_budget(size_t b) { node_budget_ = b; }

  static constexpr size_t kDefaultNodeBudget = size_t(1) << 24;

 private:
  friend class Predicate;

  struct Node {
    uint32_t bit;
    uint32_t lo;
    uint32_t hi;
  };
  struct NodeKey {
    uint32_t bit, lo, hi;
    bool operator==(const NodeKey& o) const {
      return bit == o.bit && lo == o.lo && hi == o.hi;
    }
  };
  struct NodeKeyHash {
    size_t operator()(const NodeKey& k) const {
      uint64_t h = k.bit;
      h = h * 0x9e3779b97f4a7c15ull + k.lo;
      h = h * 0x9e3779b97f4a7c15ull + k.hi;
      return static_cast<size_t>(h ^ (h >> 32));
    }
  };
  struct TripleHash {
    size_t operator()(const std::tuple<uint32_t, uint32_t, uint32_t>& t) const {
      auto [a, b, c] = t;
      uint64_t h = a;
      h = h * 0x100000001b3ull + b;
      h = h * 0x100000001b3ull + c;
      return static_cast<size_t>(h ^ (h >> 29));
    }
  };

  Predicate wrap(uint32_t n) { return Predicate(this, n); }
  uint32_t mk(uint32_t bit, uint32_t lo, uint32_t hi);
  uint32_t ite_rec(uint32_t f, uint32_t g, uint32_t h);
  uint32_t not_rec(uint32_t f);
  uint32_t bit_of(uint32_t node) const { return nodes_[node].bit; }
  void check_same_space(Predicate f) const {
    if (f.manager() != this) throw std::logic_error("predicates from different variable spaces");
  }

  std::shared_ptr<const VarSpace> space_;
  std::vector<Node> nodes_;
  std::unordered_map<NodeKey, uint32_t, NodeKeyHash> unique_;
  std::unordered_map<std::tuple<uint32_t, uint32_t, uint32_t>, uint32_t, TripleHash> ite_cache_;
  std::unordered_map<uint32_t, uint32_t> not_cache_;
  size_t node_budget_;
};

}  // namespace heapguard::sym
