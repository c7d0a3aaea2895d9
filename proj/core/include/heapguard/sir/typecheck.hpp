#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "heapguard/sir/ast.hpp"

namespace heapguard::sir {

struct TypeError : std::runtime_error {
  TypeError(std::string msg, SourcePos p)
      : std::runtime_error(std::move(msg) + " at line " + std::to_string(p.line) + ":" +
                           std::to_string(p.col)),
        pos(p) {}
  SourcePos pos;
};

struct MethodInfo {
  std::map<std::string, Type> vars;  // params and locals
  std::vector<std::string> refs;     // reference variables, params first, declaration order
  std::vector<std::string> prims;    // primitive variables, same order
  std::set<std::string> param_names;
  std::map<std::string, uint32_t> label_index;
};

/// Program with every variable occurrence bound and type-consistent, the
/// primitive/reference distinction resolved into final statement kinds, and
/// per-method symbol tables.
class TypedProgram {
 public:
  static TypedProgram check(Program p);

  const Program& program() const { return program_; }
  const Method& method(const std::string& name) const {
    return program_.methods.at(method_index_.at(name));
  }
  bool has_method(const std::string& name) const { return method_index_.count(name) != 0; }
  const MethodInfo& info(const std::string& method_name) const {
    return infos_.at(method_index_.at(method_name));
  }
  const ClassDecl& class_decl(const std::string& name) const {
    return program_.classes.at(class_index_.at(name));
  }
  bool has_class(const std::string& name) const { return class_index_.count(name) != 0; }
  std::vector<std::string> class_names() const;

  /// Walks the parent chain; true when `sub` is `super` or a subclass of it.
  bool is_subclass(const std::string& sub, const std::string& super) const;
  /// Field lookup including inherited fields; empty optional when absent.
  std::optional<PrimType> prim_field(const std::string& cls, const std::string& field) const;
  std::optional<std::string> ref_field(const std::string& cls, const std::string& field) const;
  /// All fields available on `cls`, inherited first.
  std::vector<std::pair<std::string, PrimType>> all_prim_fields(const std::string& cls) const;
  std::vector<std::pair<std::string, std::string>> all_ref_fields(const std::string& cls) const;

 private:
  Program program_;
  std::map<std::string, size_t> class_index_;
  std::map<std::string, size_t> method_index_;
  std::vector<MethodInfo> infos_;
};

TypedProgram typecheck(Program p);

}  // namespace heapguard::sir
