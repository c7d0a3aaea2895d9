#include "heapguard/crt/heap.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace heapguard::crt {

ConcreteHeap::ConcreteHeap(std::vector<std::string> ref_names,
                           std::vector<std::string> runtime_types)
    : names_(std::move(ref_names)) {
  for (uint32_t r = 0; r < names_.size(); ++r) {
    uint32_t cls =
        fresh_class(runtime_types.empty() ? std::string{} : runtime_types.at(r));
    class_of_.push_back(cls);
    null_.insert(cls);
  }
}

uint32_t ConcreteHeap::fresh_class(const std::string& type) {
  uint32_t cls = next_class_++;
  types_[cls] = type;
  prim_fields_[cls] = {};
  edges_[cls] = {};
  return cls;
}

std::vector<uint32_t> ConcreteHeap::members(uint32_t cls) const {
  std::vector<uint32_t> out;
  for (uint32_t r = 0; r < class_of_.size(); ++r)
    if (class_of_[r] == cls) out.push_back(r);
  return out;
}

void ConcreteHeap::drop_if_empty(uint32_t cls) {
  if (!members(cls).empty()) return;
  // The object is no longer named: it and every fact about it leave the
  // model, including edges from other objects to it.
  types_.erase(cls);
  null_.erase(cls);
  prim_fields_.erase(cls);
  edges_.erase(cls);
  for (auto& [c, es] : edges_) {
    for (auto it = es.begin(); it != es.end();)
      it = it->second == cls ? es.erase(it) : ++it;
  }
}

void ConcreteHeap::move_ref(uint32_t r, uint32_t cls) {
  uint32_t old = class_of_[r];
  class_of_[r] = cls;
  if (old != cls) drop_if_empty(old);
}

bool ConcreteHeap::field_alias(uint32_t r, const std::string& f, uint32_t s) const {
  if (is_null(r) || is_null(s)) return false;
  auto it = edges_.at(class_of_[r]).find(f);
  return it != edges_.at(class_of_[r]).end() && it->second == class_of_[s];
}

bool ConcreteHeap::reaches(uint32_t r, uint32_t s) const {
  // One or more field hops from r's object to s's object.
  std::set<uint32_t> seen;
  std::vector<uint32_t> work;
  for (const auto& [f, t] : edges_.at(class_of_[r]))
    if (seen.insert(t).second) work.push_back(t);
  while (!work.empty()) {
    uint32_t cls = work.back();
    work.pop_back();
    if (cls == class_of_[s]) return true;
    for (const auto& [f, t] : edges_.at(cls))
      if (seen.insert(t).second) work.push_back(t);
  }
  return seen.count(class_of_[s]) != 0;
}

std::optional<FieldValue> ConcreteHeap::prim_field(uint32_t r, const std::string& f) const {
  const auto& fields = prim_fields_.at(class_of_[r]);
  auto it = fields.find(f);
  if (it == fields.end()) return std::nullopt;
  return it->second;
}

void ConcreteHeap::assign_null(uint32_t r) {
  uint32_t cls = fresh_class(types_.at(class_of_[r]));
  // A null reference names no object; reads through it are undefined.
  null_.insert(cls);
  move_ref(r, cls);
}

void ConcreteHeap::assign_new(uint32_t r, const std::string& runtime_type,
                              const FieldTypes& prim_fields) {
  uint32_t cls = fresh_class(runtime_type);
  for (const auto& [f, is_bool] : prim_fields) {
    (void)is_bool;
    prim_fields_[cls][f] = FieldValue::defaulted();
  }
  move_ref(r, cls);
}

void ConcreteHeap::assign_copy(uint32_t r, uint32_t s) { move_ref(r, class_of_[s]); }

void ConcreteHeap::assign_load(uint32_t r, uint32_t s, const std::string& f,
                               const std::string& static_type) {
  auto& es = edges_.at(class_of_[s]);
  auto it = es.find(f);
  if (it != es.end()) {
    move_ref(r, it->second);
    return;
  }
  // The object exists concretely but was never related to a named
  // reference; it appears as a fresh opaque class with unknown contents.
  uint32_t cls = fresh_class(static_type);
  uint32_t src = class_of_[s];
  move_ref(r, cls);
  if (edges_.count(src)) edges_.at(src)[f] = cls;
}

void ConcreteHeap::store_ref(uint32_t r, const std::string& f, uint32_t s) {
  // A null source nulls the field: field-alias facts relate objects, and a
  // null reference names none.
  if (is_null(s))
    edges_.at(class_of_[r]).erase(f);
  else
    edges_.at(class_of_[r])[f] = class_of_[s];
}

void ConcreteHeap::store_prim(uint32_t r, const std::string& f, FieldValue v) {
  prim_fields_.at(class_of_[r])[f] = v;
}

std::vector<uint32_t> ConcreteHeap::class_members(uint32_t r) const {
  return members(class_of_[r]);
}

std::vector<std::vector<uint32_t>> ConcreteHeap::partition() const {
  std::map<uint32_t, std::vector<uint32_t>> by_class;
  for (uint32_t r = 0; r < class_of_.size(); ++r) by_class[class_of_[r]].push_back(r);
  std::vector<std::vector<uint32_t>> out;
  for (auto& [c, refs] : by_class) out.push_back(refs);
  std::sort(out.begin(), out.end());
  return out;
}

bool ConcreteHeap::well_formed() const {
  std::set<uint32_t> live;
  for (uint32_t r = 0; r < class_of_.size(); ++r) live.insert(class_of_[r]);
  for (uint32_t cls : live)
    if (!types_.count(cls) || !prim_fields_.count(cls) || !edges_.count(cls)) return false;
  for (const auto& [cls, es] : edges_) {
    if (!live.count(cls)) return false;
    for (const auto& [f, target] : es)
      if (!live.count(target)) return false;
  }
  return edges_.size() == live.size();
}

bool operator==(const ConcreteHeap& a, const ConcreteHeap& b) {
  if (a.names_ != b.names_) return false;
  if (a.partition() != b.partition()) return false;
  // Representative-based comparison of per-object state.
  for (const auto& cls : a.partition()) {
    uint32_t rep = cls.front();
    if (a.prim_fields_.at(a.class_of_[rep]) != b.prim_fields_.at(b.class_of_[rep])) return false;
    const auto& ea = a.edges_.at(a.class_of_[rep]);
    const auto& eb = b.edges_.at(b.class_of_[rep]);
    if (ea.size() != eb.size()) return false;
    for (const auto& [f, target] : ea) {
      auto it = eb.find(f);
      if (it == eb.end()) return false;
      // Compare targets as reference sets.
      auto ta = a.members(target);
      auto tb = b.members(it->second);
      if (ta != tb) return false;
    }
  }
  return true;
}

std::string ConcreteHeap::describe() const {
  std::ostringstream os;
  for (const auto& cls : partition()) {
    os << "{";
    for (size_t i = 0; i < cls.size(); ++i) os << (i ? "," : "") << names_[cls[i]];
    uint32_t id = class_of_[cls.front()];
    os << "}";
    auto t = types_.find(id);
    if (t != types_.end() && !t->second.empty()) os << ":" << t->second;
    for (const auto& [f, v] : prim_fields_.at(id)) {
      os << " " << f << "=";
      switch (v.kind) {
        case FieldValue::Kind::Int:
        case FieldValue::Kind::Bool:
          os << v.num;
          break;
        case FieldValue::Kind::Default:
          os << "0";
          break;
        case FieldValue::Kind::Und:
          os << "und";
          break;
      }
    }
    for (const auto& [f, target] : edges_.at(id)) {
      os << " " << f << "->{";
      auto ms = members(target);
      for (size_t i = 0; i < ms.size(); ++i) os << (i ? "," : "") << names_[ms[i]];
      os << "}";
    }
    os << "; ";
  }
  return os.str();
}

RefGraph low_reference_graph(const ConcreteHeap& h, const std::vector<Level>& lev) {
  // The subgraph induced on the low references. Facts that name a high
  // reference are not low-observable: which secret-typed name an object
  // carries may legitimately differ between runs a low observer cannot
  // tell apart.
  RefGraph g;
  const uint32_t n = h.ref_count();
  for (uint32_t r = 0; r < n; ++r)
    if (lev[r] == Level::Low) g.nodes.insert(r);
  for (uint32_t r : g.nodes) {
    for (uint32_t s : g.nodes) {
      if (h.aliased(r, s)) g.edges.insert({r, "alias", s});
      if (!h.is_null(r))
        for (const auto& [f, target] : h.edges_of(r)) {
          (void)target;
          if (h.field_alias(r, f, s)) g.edges.insert({r, f, s});
        }
    }
  }
  return g;
}

namespace {

bool low_fields_equal(const ConcreteHeap& h1, const ConcreteHeap& h2,
                      const std::vector<Level>& lev) {
  for (uint32_t r = 0; r < h1.ref_count(); ++r) {
    if (lev[r] != Level::Low) continue;
    if (!(h1.prim_fields_of(r) == h2.prim_fields_of(r))) return false;
  }
  return true;
}

}  // namespace

bool indistinguishable(const ConcreteHeap& h1, const ConcreteHeap& h2,
                       const std::vector<Level>& lev, bool full_iso) {
  RefGraph g1 = low_reference_graph(h1, lev);
  RefGraph g2 = low_reference_graph(h2, lev);
  if (g1.nodes != g2.nodes) return false;
  if (low_fields_equal(h1, h2, lev) && g1.edges == g2.edges) return true;
  if (!full_iso) return false;
  // Brute-force search for a label-preserving bijection over the named
  // references that maps one edge set onto the other and matches low
  // primitive fields (graphs here are tiny).
  std::vector<uint32_t> perm(h1.ref_count());
  std::iota(perm.begin(), perm.end(), 0);
  do {
    bool ok = true;
    for (uint32_t r = 0; r < perm.size() && ok; ++r) {
      ok = lev[r] == lev[perm[r]];
      if (ok && lev[r] == Level::Low) ok = h1.prim_fields_of(r) == h2.prim_fields_of(perm[r]);
    }
    if (!ok) continue;
    std::set<RefGraphEdge> mapped;
    for (const auto& e : g1.edges) mapped.insert({perm[e.from], e.rel, perm[e.to]});
    if (mapped == g2.edges) return true;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return false;
}

}  // namespace heapguard::crt
