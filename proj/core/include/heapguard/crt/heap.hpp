#pragma once

// Storeless concrete heap: an alias partition of the method's references
// into classes (each class is one object), field-alias edges between
// classes, and primitive field contents. Facts exist only about named
// references; when the last reference leaves a class, the object and its
// edges drop out of the model.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace heapguard::crt {

struct FieldValue {
  enum class Kind : uint8_t { Int, Bool, Default, Und } kind = Kind::Default;
  int64_t num = 0;

  static FieldValue of_int(int64_t v) { return {Kind::Int, v}; }
  static FieldValue of_bool(bool b) { return {Kind::Bool, b ? 1 : 0}; }
  static FieldValue defaulted() { return {Kind::Default, 0}; }
  static FieldValue undefined() { return {Kind::Und, 0}; }

  bool is_und() const { return kind == Kind::Und; }
  /// Reads collapse the default marker to the zero value of the field type.
  int64_t read(bool is_bool) const {
    (void)is_bool;
    return kind == Kind::Default ? 0 : num;
  }
  friend bool operator==(const FieldValue& a, const FieldValue& b) {
    if (a.kind == Kind::Und || b.kind == Kind::Und) return a.kind == b.kind;
    int64_t av = a.kind == Kind::Default ? 0 : a.num;
    int64_t bv = b.kind == Kind::Default ? 0 : b.num;
    return av == bv;
  }
};

enum class Level : uint8_t { Low = 0, High = 1 };
inline Level join(Level a, Level b) { return a == Level::High || b == Level::High ? Level::High : Level::Low; }

class ConcreteHeap {
 public:
  /// All references start null: one fresh class each, undefined fields.
  explicit ConcreteHeap(std::vector<std::string> ref_names,
                        std::vector<std::string> runtime_types = {});

  uint32_t ref_count() const { return static_cast<uint32_t>(names_.size()); }
  const std::string& ref_name(uint32_t r) const { return names_[r]; }

  /// Null references name no object; dereferencing them traps.
  bool is_null(uint32_t r) const { return null_.count(class_of_[r]) != 0; }

  /// References naming the same object as r (including r), sorted.
  std::vector<uint32_t> class_members(uint32_t r) const;

  /// Two references alias when they name the same object; null names none.
  bool aliased(uint32_t r, uint32_t s) const {
    return class_of_[r] == class_of_[s] && !is_null(r);
  }
  /// r's reference field f aliases s.
  bool field_alias(uint32_t r, const std::string& f, uint32_t s) const;
  /// r reaches s's object through one or more field edges.
  bool reaches(uint32_t r, uint32_t s) const;

  const std::string& runtime_type(uint32_t r) const { return types_.at(class_of_[r]); }
  std::optional<FieldValue> prim_field(uint32_t r, const std::string& f) const;
  const std::map<std::string, FieldValue>& prim_fields_of(uint32_t r) const {
    return prim_fields_.at(class_of_[r]);
  }
  const std::map<std::string, uint32_t>& edges_of(uint32_t r) const {
    return edges_.at(class_of_[r]);
  }

  // Mutations per the concrete transformers; `fields` gives the primitive
  // field names (with bool-ness) a freshly named object exposes.
  using FieldTypes = std::map<std::string, bool>;  // name -> is_bool

  void assign_null(uint32_t r);
  void assign_new(uint32_t r, const std::string& runtime_type, const FieldTypes& prim_fields);
  void assign_copy(uint32_t r, uint32_t s);
  /// r = s.f; when s has no f edge the object is unknown to the model and r
  /// moves to a fresh opaque class with undefined fields.
  void assign_load(uint32_t r, uint32_t s, const std::string& f, const std::string& static_type);
  void store_ref(uint32_t r, const std::string& f, uint32_t s);
  /// Writes through every alias of r.
  void store_prim(uint32_t r, const std::string& f, FieldValue v);
  std::optional<FieldValue> load_prim(uint32_t r, const std::string& f) const {
    return prim_field(r, f);
  }

  /// Structural equality up to class-id renaming.
  friend bool operator==(const ConcreteHeap& a, const ConcreteHeap& b);

  /// Partition classes as reference-index sets, sorted (canonical form).
  std::vector<std::vector<uint32_t>> partition() const;
  /// Invariants of the representation: classes partition the references and
  /// every edge targets a live class.
  bool well_formed() const;

  std::string describe() const;

 private:
  uint32_t fresh_class(const std::string& type);
  void move_ref(uint32_t r, uint32_t cls);
  void drop_if_empty(uint32_t cls);
  std::vector<uint32_t> members(uint32_t cls) const;

  std::vector<std::string> names_;
  std::vector<uint32_t> class_of_;
  std::map<uint32_t, std::string> types_;
  std::set<uint32_t> null_;
  std::map<uint32_t, std::map<std::string, FieldValue>> prim_fields_;
  std::map<uint32_t, std::map<std::string, uint32_t>> edges_;  // field -> class id
  uint32_t next_class_ = 0;
};

struct RefGraphEdge {
  uint32_t from;
  std::string rel;  // "alias" or the field name
  uint32_t to;
  friend bool operator==(const RefGraphEdge& a, const RefGraphEdge& b) {
    return a.from == b.from && a.rel == b.rel && a.to == b.to;
  }
  friend bool operator<(const RefGraphEdge& a, const RefGraphEdge& b) {
    return std::tie(a.from, a.rel, a.to) < std::tie(b.from, b.rel, b.to);
  }
};

struct RefGraph {
  std::set<uint32_t> nodes;       // the low references
  std::set<RefGraphEdge> edges;   // relations with at least one low endpoint
};

/// Subgraph of the reference graph spanned by the low-marked references:
/// alias and per-field edges keeping any edge with a low endpoint.
RefGraph low_reference_graph(const ConcreteHeap& h, const std::vector<Level>& lev);

/// Low reference graphs identical (identity map over the shared names) and
/// low references' primitive fields equal. `full_iso` additionally accepts
/// any label-preserving bijection (brute force; for cross-checking).
bool indistinguishable(const ConcreteHeap& h1, const ConcreteHeap& h2,
                       const std::vector<Level>& lev, bool full_iso = false);

}  // namespace heapguard::crt
