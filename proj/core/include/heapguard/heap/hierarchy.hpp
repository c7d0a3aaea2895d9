#pragma once

// Class-hierarchy pre-analysis behind CanRelate: subtyping, which classes a
// declared reference may point to, and a class-level reachability closure
// over reference-field types.

#include <map>
#include <set>
#include <string>
#include <vector>

#include "heapguard/sir/typecheck.hpp"

namespace heapguard::heap {

enum class RelKind : uint8_t { Alias, FieldReach };

enum class ThreeVal : uint8_t { No, Maybe, Yes };

class ClassHierarchy {
 public:
  explicit ClassHierarchy(const sir::TypedProgram& tp);

  bool known(const std::string& cls) const { return family_.count(cls) != 0; }
  bool is_subclass(const std::string& sub, const std::string& super) const;
  /// Classes an object referenced with declared type `cls` may have.
  const std::set<std::string>& family(const std::string& cls) const { return family_.at(cls); }
  /// Two declared types may name the same object (one assignable to the other).
  bool may_alias(const std::string& a, const std::string& b) const;
  /// Some object typed `a` may reach some object typed `b` through one or
  /// more reference fields.
  bool may_reach(const std::string& a, const std::string& b) const;

  /// Sound three-valued pre-analysis fact for a relation between two
  /// references of the given declared types. `same_var` marks the r-vs-r
  /// query, where reflexive relations always hold.
  ThreeVal can_relate(const std::string& t_r, const std::string& t_s, RelKind rel,
                      bool same_var) const;

 private:
  const sir::TypedProgram* tp_;
  std::map<std::string, std::set<std::string>> family_;
  // reach_[K] = classes reachable from an object of runtime class K via >= 1
  // reference-field hops, where a field of declared type T may point to any
  // class in T's family.
  std::map<std::string, std::set<std::string>> reach_;
};

}  // namespace heapguard::heap
