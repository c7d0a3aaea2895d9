#pragma once

// Typed AST of the security IR: classes with primitive/reference fields and
// methods whose bodies are label-indexed three-address statement sequences.

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace heapguard::sir {

struct SourcePos {
  int line = 0;
  int col = 0;
};

enum class PrimType : uint8_t { Int, Bool };

struct Type {
  enum class Kind : uint8_t { Prim, Ref } kind = Kind::Prim;
  PrimType prim = PrimType::Int;
  std::string class_name;  // Kind::Ref

  bool is_ref() const { return kind == Kind::Ref; }
  bool is_prim() const { return kind == Kind::Prim; }
  static Type make_prim(PrimType p) { return Type{Kind::Prim, p, {}}; }
  static Type make_ref(std::string cls) { return Type{Kind::Ref, PrimType::Int, std::move(cls)}; }

  friend bool operator==(const Type& a, const Type& b) {
    if (a.kind != b.kind) return false;
    return a.kind == Kind::Prim ? a.prim == b.prim : a.class_name == b.class_name;
  }
};

std::string to_string(const Type& t);

struct ClassDecl {
  std::string name;
  std::optional<std::string> parent;
  std::vector<std::pair<std::string, PrimType>> prim_fields;
  std::vector<std::pair<std::string, std::string>> ref_fields;  // name, class name
  SourcePos pos;
};

struct Expr {
  enum class Kind : uint8_t { IntLit, BoolLit, Var, Unary, Binary, RefEq };
  Kind kind = Kind::IntLit;
  int64_t int_value = 0;
  bool bool_value = false;
  std::string name;  // Var
  std::string op;    // Unary: "-" "!"; Binary: + - * / < <= > >= == != && ||
  std::shared_ptr<const Expr> lhs, rhs;
  std::string ref_lhs, ref_rhs;  // RefEq operand names (rewritten by the typechecker)
  SourcePos pos;
};
using ExprPtr = std::shared_ptr<const Expr>;

bool structurally_equal(const Expr& a, const Expr& b);
std::string to_string(const Expr& e);

enum class StmtKind : uint8_t {
  AssignExpr,  // v = e
  LoadPrim,    // v = r.f_p
  StorePrim,   // r.f_p = e
  CopyRef,     // r = s
  LoadRef,     // r = s.f_r
  StoreRef,    // r.f_r = s
  NewRef,      // r = new c
  NullRef,     // r = null
  Call,        // r.m(w, ...)
  Goto,        // goto lbl
  Branch,      // if (e) goto lbl
  OutputPrim,  // output low|high (v)
  OutputRef,   // output low|high (r)
};

struct Statement {
  StmtKind kind = StmtKind::AssignExpr;
  std::optional<std::string> label;
  std::string target;  // assigned variable, receiver, or output argument
  std::string source;  // source variable of ref copies/loads/stores
  std::string field;
  std::string klass;   // NewRef
  std::string method;  // Call
  std::vector<std::string> args;
  std::string goto_label;
  ExprPtr expr;
  bool out_high = false;
  SourcePos pos;
};

bool structurally_equal(const Statement& a, const Statement& b);

struct VarDecl {
  std::string name;
  Type type;
  SourcePos pos;
};

struct Method {
  std::string name;
  std::vector<VarDecl> params;
  std::vector<VarDecl> locals;
  std::vector<Statement> body;
  SourcePos pos;
};

struct Program {
  std::vector<ClassDecl> classes;
  std::vector<Method> methods;
};

bool structurally_equal(const Program& a, const Program& b);

/// Canonical text form; parse(print(p)) reproduces the AST.
std::string print_program(const Program& p);

}  // namespace heapguard::sir
