#include "heapguard/heap/hierarchy.hpp"

#include <stdexcept>

namespace heapguard::heap {

ClassHierarchy::ClassHierarchy(const sir::TypedProgram& tp) : tp_(&tp) {
  auto names = tp.class_names();
  for (const auto& c : names) family_[c] = {c};
  for (const auto& c : names)
    for (const auto& d : names)
      if (tp.is_subclass(d, c)) family_[c].insert(d);

  // One-step field edges per runtime class, then transitive closure.
  std::map<std::string, std::set<std::string>> step;
  for (const auto& k : names) {
    for (const auto& [field, decl_type] : tp.all_ref_fields(k)) {
      (void)field;
      for (const auto& target : family_[decl_type]) step[k].insert(target);
    }
  }
  for (const auto& k : names) {
    // BFS over field edges, starting from one hop.
    std::set<std::string>& out = reach_[k];
    std::vector<std::string> work(step[k].begin(), step[k].end());
    out.insert(step[k].begin(), step[k].end());
    while (!work.empty()) {
      std::string cur = work.back();
      work.pop_back();
      for (const auto& next : step[cur])
        if (out.insert(next).second) work.push_back(next);
    }
  }
}

bool ClassHierarchy::is_subclass(const std::string& sub, const std::string& super) const {
  return tp_->is_subclass(sub, super);
}

bool ClassHierarchy::may_alias(const std::string& a, const std::string& b) const {
  return is_subclass(a, b) || is_subclass(b, a);
}

bool ClassHierarchy::may_reach(const std::string& a, const std::string& b) const {
  // The source may have any runtime class in a's family; the target object
  // has some class in b's family.
  for (const auto& k : family(a)) {
    auto it = reach_.find(k);
    if (it == reach_.end()) continue;
    for (const auto& l : family(b))
      if (it->second.count(l)) return true;
  }
  return false;
}

ThreeVal ClassHierarchy::can_relate(const std::string& t_r, const std::string& t_s, RelKind rel,
                                    bool same_var) const {
  if (!known(t_r)) throw std::invalid_argument("unknown type '" + t_r + "'");
  if (!known(t_s)) throw std::invalid_argument("unknown type '" + t_s + "'");
  switch (rel) {
    case RelKind::Alias:
      if (same_var) return ThreeVal::Yes;  // aliasing is reflexive
      return may_alias(t_r, t_s) ? ThreeVal::Maybe : ThreeVal::No;
    case RelKind::FieldReach:
      // Not reflexive: r may reach itself only through an actual field cycle.
      return may_reach(t_r, t_s) ? ThreeVal::Maybe : ThreeVal::No;
  }
  return ThreeVal::Maybe;
}

}  // namespace heapguard::heap
