#include "heapguard/heap/domain.hpp"

#include <algorithm>
#include <stdexcept>

namespace heapguard::heap {

using sym::AssignmentSet;
using sym::Predicate;
using sym::PredicateManager;
using sym::Var;

HeapFamily HeapFamily::by_name(const std::string& name) {
  if (name == "deep") return deep();
  if (name == "shal") return shal();
  if (name == "dumb") return dumb();
  throw std::invalid_argument("unknown heap domain '" + name + "' (expected deep|shal|dumb)");
}

TransformerBug bug_by_name(const std::string& name) {
  if (name == "none") return TransformerBug::None;
  if (name == "drop-fieldalias") return TransformerBug::DropFieldAliasOnLoad;
  if (name == "skip-freach-upgrade") return TransformerBug::SkipFreachUpgrade;
  if (name == "drop-alias-on-copy") return TransformerBug::DropAliasOnCopy;
  throw std::invalid_argument("unknown transformer mutant '" + name + "'");
}

namespace {
std::string rel_tag(RelKind rel) { return rel == RelKind::Alias ? "alias" : "freach"; }
std::string copy_tag(HeapCopy c) { return c == HeapCopy::Cur ? "" : "'"; }
}  // namespace

HeapDomainInstance::HeapDomainInstance(HeapFamily family, std::vector<RefDecl> refs,
                                       const ClassHierarchy& hier, sym::VarSpace& space,
                                       bool with_saved_copy)
    : family_(std::move(family)), refs_(std::move(refs)), with_saved_(with_saved_copy) {
  if (refs_.empty() && !family_.name.empty()) {
    // A method without references still has a (degenerate) heap abstraction.
  }
  const uint32_t n = ref_count();
  // Aliasing is symmetric: one entry per unordered pair, diagonal included.
  for (uint32_t r = 0; r < n; ++r)
    for (uint32_t s = r; s < n; ++s) classify_pair(hier, RelKind::Alias, r, s);
  for (uint32_t r = 0; r < n; ++r)
    for (uint32_t s = 0; s < n; ++s) classify_pair(hier, RelKind::FieldReach, r, s);

  // Level variables for each copy, interleaved per reference so the
  // working/saved pair of each variable stays adjacent in the diagram order.
  const int copies = with_saved_ ? 2 : 1;
  for (uint32_t r = 0; r < n; ++r) {
    for (int c = 0; c < copies; ++c)
      lev_vars_[c].push_back(
          space.add_bool("reach" + copy_tag(static_cast<HeapCopy>(c)) + "(" + refs_[r].name + ")"));
  }
  for (const RelEntry& e : tracked_) {
    for (int c = 0; c < copies; ++c) {
      std::string name = rel_tag(e.rel) + copy_tag(static_cast<HeapCopy>(c)) + "(" +
                         refs_[e.r].name + "," + refs_[e.s].name + ")";
      rel_vars_[c].emplace(e, space.add_bool(std::move(name)));
    }
  }
}

void HeapDomainInstance::classify_pair(const ClassHierarchy& hier, RelKind rel, uint32_t r,
                                       uint32_t s) {
  bool sensitive = family_.sensitive.count(rel) != 0;
  bool insensitive = family_.insensitive.count(rel) != 0;
  if (!sensitive && !insensitive) return;
  ThreeVal fact = hier.can_relate(refs_[r].type, refs_[s].type, rel, r == s);
  RelEntry e = canon(rel, r, s);
  if (fact == ThreeVal::No) {
    c_false_.push_back(e);
    kind_[e] = 1;
  } else if (sensitive && fact == ThreeVal::Maybe) {
    tracked_.push_back(e);
    kind_[e] = 0;
  } else {
    // Flow-sensitive "yes", or flow-insensitive "maybe"/"yes": constant true.
    c_true_.push_back(e);
    kind_[e] = 2;
  }
}

std::optional<uint32_t> HeapDomainInstance::ref_index(const std::string& name) const {
  for (uint32_t i = 0; i < refs_.size(); ++i)
    if (refs_[i].name == name) return i;
  return std::nullopt;
}

Var HeapDomainInstance::level_var(HeapCopy c, uint32_t ref) const {
  if (c == HeapCopy::Saved && !with_saved_) throw std::logic_error("no saved heap copy");
  return lev_vars_[static_cast<int>(c)].at(ref);
}

std::optional<Var> HeapDomainInstance::rel_var(HeapCopy c, RelKind rel, uint32_t r,
                                               uint32_t s) const {
  auto it = rel_vars_[static_cast<int>(c)].find(canon(rel, r, s));
  if (it == rel_vars_[static_cast<int>(c)].end()) return std::nullopt;
  return it->second;
}

Predicate HeapDomainInstance::rel_value(PredicateManager& mgr, HeapCopy c, RelKind rel, uint32_t r,
                                        uint32_t s) const {
  RelEntry e = canon(rel, r, s);
  auto it = kind_.find(e);
  if (it == kind_.end()) return mgr.bottom();  // relation not part of this family
  switch (it->second) {
    case 0:
      return mgr.var(rel_vars_[static_cast<int>(c)].at(e));
    case 1:
      return mgr.bottom();
    default:
      return mgr.top();
  }
}

Predicate HeapDomainInstance::level_value(PredicateManager& mgr, HeapCopy c, uint32_t ref) const {
  return mgr.var(level_var(c, ref));
}

AssignmentSet HeapDomainInstance::upd_hp_rel(PredicateManager& mgr, const RefOp& op,
                                             TransformerBug bug) const {
  const HeapCopy c = HeapCopy::Cur;
  AssignmentSet acc;
  auto assign = [&](RelKind rel, uint32_t x, uint32_t y, Predicate rhs) {
    auto var = rel_var(c, rel, x, y);
    if (!var) return;  // constants stand for themselves
    AssignmentSet one;
    one.set(*var, rhs);
    acc = mgr.merge(acc, one);
  };
  auto alias = [&](uint32_t x, uint32_t y) { return rel_value(mgr, c, RelKind::Alias, x, y); };
  auto freach = [&](uint32_t x, uint32_t y) {
    return rel_value(mgr, c, RelKind::FieldReach, x, y);
  };
  const uint32_t n = ref_count();
  const uint32_t r = op.r, s = op.s;

  switch (op.kind) {
    case RefOp::Kind::Erase:
      for (uint32_t d = 0; d < n; ++d) {
        assign(RelKind::Alias, d, r, mgr.bottom());
        assign(RelKind::FieldReach, r, d, mgr.bottom());
        assign(RelKind::FieldReach, d, r, mgr.bottom());
      }
      break;

    case RefOp::Kind::Copy: {
      // r takes over s's relations: rename r to s in every queried pair.
      auto renamed = [&](uint32_t x) { return x == r ? s : x; };
      bool drop_alias = bug == TransformerBug::DropAliasOnCopy;
      for (uint32_t d = 0; d < n; ++d) {
        if (!drop_alias) assign(RelKind::Alias, d, r, alias(renamed(d), s));
        assign(RelKind::FieldReach, r, d, freach(s, renamed(d)));
        if (d != r) assign(RelKind::FieldReach, d, r, freach(d, s));
      }
      break;
    }

    case RefOp::Kind::Load: {
      // r now names the object s's reference field points to.
      for (uint32_t d = 0; d < n; ++d) {
        if (d != r) assign(RelKind::Alias, d, r, freach(s, d));
        if (d != r) assign(RelKind::FieldReach, r, d, freach(s, d));
      }
      if (bug != TransformerBug::DropFieldAliasOnLoad) {
        for (uint32_t d = 0; d < n; ++d) {
          if (d == r) continue;
          assign(RelKind::FieldReach, d, r, alias(d, s) || freach(d, s));
        }
        // The loaded object is cyclic only if some reference names an object
        // that both sits under s and reaches itself.
        Predicate self = mgr.bottom();
        for (uint32_t w = 0; w < n; ++w) {
          if (w == r) continue;
          self = self || (freach(s, w) && freach(w, w));
        }
        assign(RelKind::FieldReach, r, r, self);
      }
      break;
    }

    case RefOp::Kind::Store:
      // Storing may only add transitive field-aliases: anything at or above r
      // now reaches anything at or below s.
      for (const RelEntry& e : tracked_) {
        if (e.rel != RelKind::FieldReach) continue;
        uint32_t a = e.r, b = e.s;
        Predicate grow =
            (alias(a, r) || freach(a, r)) && (alias(b, s) || freach(s, b));
        assign(RelKind::FieldReach, a, b, freach(a, b) || grow);
      }
      break;
  }
  return acc;
}

AssignmentSet HeapDomainInstance::upd_hp_lev(PredicateManager& mgr, uint32_t r, Predicate level,
                                             TransformerBug bug) const {
  const HeapCopy c = HeapCopy::Cur;
  AssignmentSet acc;
  for (uint32_t s = 0; s < ref_count(); ++s) {
    Predicate cond = rel_value(mgr, c, RelKind::Alias, s, r);
    if (bug != TransformerBug::SkipFreachUpgrade)
      cond = cond || rel_value(mgr, c, RelKind::FieldReach, s, r);
    if (cond.is_false()) continue;  // level join with low is the identity
    Predicate rhs = level_value(mgr, c, s) || (cond && level);
    AssignmentSet one;
    one.set(level_var(c, s), rhs);
    acc = mgr.merge(acc, one);
  }
  return acc;
}

AssignmentSet HeapDomainInstance::heap_transformer(PredicateManager& mgr, const HeapOp& op,
                                                   std::optional<Predicate> level,
                                                   TransformerBug bug) const {
  auto level_assign = [&](uint32_t r, Predicate value) {
    AssignmentSet a;
    a.set(level_var(HeapCopy::Cur, r), value);
    return a;
  };
  switch (op.kind) {
    case HeapOp::Kind::AssignNull:
      return mgr.merge(upd_hp_rel(mgr, {RefOp::Kind::Erase, op.r, 0}, bug),
                       level_assign(op.r, mgr.bottom()));
    case HeapOp::Kind::AssignCopy:
      return mgr.merge(upd_hp_rel(mgr, {RefOp::Kind::Copy, op.r, op.s}, bug),
                       level_assign(op.r, level_value(mgr, HeapCopy::Cur, op.s)));
    case HeapOp::Kind::AssignLoad:
      return mgr.merge(upd_hp_rel(mgr, {RefOp::Kind::Load, op.r, op.s}, bug),
                       level_assign(op.r, level_value(mgr, HeapCopy::Cur, op.s)));
    case HeapOp::Kind::MutateNew:
      if (!level) throw std::logic_error("allocation needs a level");
      return mgr.merge(upd_hp_rel(mgr, {RefOp::Kind::Erase, op.r, 0}, bug),
                       level_assign(op.r, *level));
    case HeapOp::Kind::MutatePrim:
      if (!level) throw std::logic_error("mutation needs a level");
      return upd_hp_lev(mgr, op.r, *level, bug);
    case HeapOp::Kind::MutateRefStore:
      if (!level) throw std::logic_error("mutation needs a level");
      return mgr.merge(upd_hp_rel(mgr, {RefOp::Kind::Store, op.r, op.s}, bug),
                       upd_hp_lev(mgr, op.r, *level, bug));
  }
  throw std::logic_error("unhandled heap operation");
}

Predicate HeapDomainInstance::null_refs_pred(PredicateManager& mgr,
                                             const std::vector<uint32_t>& subset,
                                             HeapCopy c) const {
  Predicate acc = mgr.top();
  auto touches = [&](const RelEntry& e) {
    return std::find(subset.begin(), subset.end(), e.r) != subset.end() ||
           std::find(subset.begin(), subset.end(), e.s) != subset.end();
  };
  for (const RelEntry& e : tracked_)
    if (touches(e)) acc = acc && !mgr.var(rel_vars_[static_cast<int>(c)].at(e));
  for (uint32_t r : subset) acc = acc && !mgr.var(level_var(c, r));
  return acc;
}

AssignmentSet HeapDomainInstance::bulk_upgrade(PredicateManager& mgr) const {
  // Relations come back from the saved copy; levels join upward through the
  // saved copy's relations.
  AssignmentSet acc;
  for (const RelEntry& e : tracked_) {
    AssignmentSet one;
    one.set(rel_vars_[0].at(e), mgr.var(rel_vars_[1].at(e)));
    acc = mgr.merge(acc, one);
  }
  const uint32_t n = ref_count();
  for (uint32_t s = 0; s < n; ++s) {
    Predicate joined = level_value(mgr, HeapCopy::Cur, s);
    for (uint32_t r = 0; r < n; ++r) {
      Predicate cond = rel_value(mgr, HeapCopy::Saved, RelKind::Alias, s, r) ||
                       rel_value(mgr, HeapCopy::Saved, RelKind::FieldReach, s, r);
      if (cond.is_false()) continue;
      joined = joined || (cond && level_value(mgr, HeapCopy::Saved, r));
    }
    AssignmentSet one;
    one.set(level_var(HeapCopy::Cur, s), joined);
    acc = mgr.merge(acc, one);
  }
  return acc;
}

AssignmentSet HeapDomainInstance::snapshot(PredicateManager& mgr) const {
  AssignmentSet acc;
  for (uint32_t r = 0; r < ref_count(); ++r)
    acc.set(level_var(HeapCopy::Saved, r), level_value(mgr, HeapCopy::Cur, r));
  for (const RelEntry& e : tracked_) acc.set(rel_vars_[1].at(e), mgr.var(rel_vars_[0].at(e)));
  return acc;
}

AssignmentSet HeapDomainInstance::swap_copies(PredicateManager& mgr) const {
  AssignmentSet acc;
  for (uint32_t r = 0; r < ref_count(); ++r) {
    acc.set(level_var(HeapCopy::Saved, r), level_value(mgr, HeapCopy::Cur, r));
    acc.set(level_var(HeapCopy::Cur, r), level_value(mgr, HeapCopy::Saved, r));
  }
  for (const RelEntry& e : tracked_) {
    acc.set(rel_vars_[1].at(e), mgr.var(rel_vars_[0].at(e)));
    acc.set(rel_vars_[0].at(e), mgr.var(rel_vars_[1].at(e)));
  }
  return acc;
}

std::vector<Var> HeapDomainInstance::copy_vars(HeapCopy c) const {
  std::vector<Var> out = lev_vars_[static_cast<int>(c)];
  for (const RelEntry& e : tracked_) out.push_back(rel_vars_[static_cast<int>(c)].at(e));
  return out;
}

}  // namespace heapguard::heap
