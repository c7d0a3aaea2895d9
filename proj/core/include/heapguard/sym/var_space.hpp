#pragma once

// Registry of symbolic state/input variables for one method analysis.
// Variables are either Boolean or small enums; enums are bit-blasted with a
// binary encoding. The registration order fixes the decision-diagram
// variable order, so it must not change once predicates have been built.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace heapguard::sym {

struct Var {
  uint32_t index = UINT32_MAX;

  bool valid() const { return index != UINT32_MAX; }
  friend bool operator==(Var a, Var b) { return a.index == b.index; }
  friend bool operator<(Var a, Var b) { return a.index < b.index; }
};

enum class VarKind : uint8_t { Boolean, Enum };

class VarSpace {
 public:
  struct Info {
    std::string name;
    VarKind kind = VarKind::Boolean;
    uint32_t cardinality = 2;
    uint32_t first_bit = 0;  // decision-diagram bit ids [first_bit, first_bit+bit_width)
    uint32_t bit_width = 1;
    bool is_input = false;
  };

  Var add_bool(std::string name, bool is_input = false) {
    return add(std::move(name), VarKind::Boolean, 2, is_input);
  }

  /// Enum variable with values 0..cardinality-1, bit-blasted little-endian.
  Var add_enum(std::string name, uint32_t cardinality) {
    if (cardinality < 1) throw std::invalid_argument("enum cardinality must be >= 1");
    return add(std::move(name), VarKind::Enum, cardinality, false);
  }

  const Info& info(Var v) const { return vars_.at(v.index); }
  const std::string& name(Var v) const { return info(v).name; }
  uint32_t var_count() const { return static_cast<uint32_t>(vars_.size()); }
  uint32_t bit_count() const { return next_bit_; }

  std::optional<Var> find(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) return std::nullopt;
    return Var{it->second};
  }

  /// Registry variable that owns a given diagram bit.
  Var owner_of_bit(uint32_t bit) const { return Var{bit_owner_.at(bit)}; }

  std::vector<Var> all_vars() const {
    std::vector<Var> out;
    out.reserve(vars_.size());
    for (uint32_t i = 0; i < vars_.size(); ++i) out.push_back(Var{i});
    return out;
  }

  std::vector<Var> input_vars() const {
    std::vector<Var> out;
    for (uint32_t i = 0; i < vars_.size(); ++i)
      if (vars_[i].is_input) out.push_back(Var{i});
    return out;
  }

 private:
  Var add(std::string name, VarKind kind, uint32_t cardinality, bool is_input) {
    if (by_name_.count(name)) throw std::invalid_argument("duplicate variable name: " + name);
    Info info;
    info.name = name;
    info.kind = kind;
    info.cardinality = cardinality;
    info.is_input = is_input;
    info.first_bit = next_bit_;
    info.bit_width = 1;
    if (kind == VarKind::Enum) {
      uint32_t width = 0;
      while ((1u << width) < cardinality) ++width;
      info.bit_width = width == 0 ? 1 : width;
    }
    uint32_t idx = static_cast<uint32_t>(vars_.size());
    for (uint32_t b = 0; b < info.bit_width; ++b) bit_owner_.push_back(idx);
    next_bit_ += info.bit_width;
    by_name_.emplace(std::move(name), idx);
    vars_.push_back(std::move(info));
    return Var{idx};
  }

  std::vector<Info> vars_;
  std::vector<uint32_t> bit_owner_;
  std::unordered_map<std::string, uint32_t> by_name_;
  uint32_t next_bit_ = 0;
};

}  // namespace heapguard::sym
