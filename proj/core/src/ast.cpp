#include "heapguard/sir/ast.hpp"

#include <sstream>

namespace heapguard::sir {

std::string to_string(const Type& t) {
  if (t.is_ref()) return t.class_name;
  return t.prim == PrimType::Int ? "int" : "bool";
}

namespace {

int expr_level(const Expr& e) {
  if (e.kind == Expr::Kind::Binary || e.kind == Expr::Kind::RefEq) {
    const std::string& op = e.kind == Expr::Kind::RefEq ? "==" : e.op;
    if (op == "||") return 1;
    if (op == "&&") return 2;
    if (op == "==" || op == "!=") return 3;
    if (op == "<" || op == "<=" || op == ">" || op == ">=") return 4;
    if (op == "+" || op == "-") return 5;
    return 6;
  }
  if (e.kind == Expr::Kind::Unary) return 7;
  return 8;
}

void print_expr(std::ostream& os, const Expr& e, int parent_level, bool right_operand) {
  int level = expr_level(e);
  bool parens = level < parent_level || (level == parent_level && right_operand && level < 7);
  if (parens) os << "(";
  switch (e.kind) {
    case Expr::Kind::IntLit:
      os << e.int_value;
      break;
    case Expr::Kind::BoolLit:
      os << (e.bool_value ? "true" : "false");
      break;
    case Expr::Kind::Var:
      os << e.name;
      break;
    case Expr::Kind::Unary:
      os << e.op;
      print_expr(os, *e.lhs, 7, false);
      break;
    case Expr::Kind::Binary:
      print_expr(os, *e.lhs, level, false);
      os << " " << e.op << " ";
      print_expr(os, *e.rhs, level, true);
      break;
    case Expr::Kind::RefEq:
      os << e.ref_lhs << " == " << e.ref_rhs;
      break;
  }
  if (parens) os << ")";
}

void print_statement(std::ostream& os, const Statement& s) {
  if (s.label) os << *s.label << ": ";
  switch (s.kind) {
    case StmtKind::AssignExpr:
      os << s.target << " = ";
      print_expr(os, *s.expr, 0, false);
      break;
    case StmtKind::LoadPrim:
    case StmtKind::LoadRef:
      os << s.target << " = " << s.source << "." << s.field;
      break;
    case StmtKind::StorePrim:
      os << s.target << "." << s.field << " = ";
      print_expr(os, *s.expr, 0, false);
      break;
    case StmtKind::StoreRef:
      os << s.target << "." << s.field << " = " << s.source;
      break;
    case StmtKind::CopyRef:
      os << s.target << " = " << s.source;
      break;
    case StmtKind::NewRef:
      os << s.target << " = new " << s.klass;
      break;
    case StmtKind::NullRef:
      os << s.target << " = null";
      break;
    case StmtKind::Call: {
      os << s.target << "." << s.method << "(";
      for (size_t i = 0; i < s.args.size(); ++i) os << (i ? ", " : "") << s.args[i];
      os << ")";
      break;
    }
    case StmtKind::Goto:
      os << "goto " << s.goto_label;
      break;
    case StmtKind::Branch:
      os << "if (";
      print_expr(os, *s.expr, 0, false);
      os << ") goto " << s.goto_label;
      break;
    case StmtKind::OutputPrim:
    case StmtKind::OutputRef:
      os << "output " << (s.out_high ? "high" : "low") << "(" << s.target << ")";
      break;
  }
  os << ";";
}

}  // namespace

std::string to_string(const Expr& e) {
  std::ostringstream os;
  print_expr(os, e, 0, false);
  return os.str();
}

std::string print_program(const Program& p) {
  std::ostringstream os;
  for (const auto& c : p.classes) {
    os << "class " << c.name;
    if (c.parent) os << " extends " << *c.parent;
    os << " {";
    for (const auto& [name, pt] : c.prim_fields)
      os << " " << (pt == PrimType::Int ? "int" : "bool") << " " << name << ";";
    for (const auto& [name, cls] : c.ref_fields) os << " " << cls << " " << name << ";";
    os << " }\n";
  }
  for (const auto& m : p.methods) {
    os << "method " << m.name << "(";
    for (size_t i = 0; i < m.params.size(); ++i)
      os << (i ? ", " : "") << to_string(m.params[i].type) << " " << m.params[i].name;
    os << ") {\n";
    for (const auto& l : m.locals) os << "  local " << to_string(l.type) << " " << l.name << ";\n";
    for (const auto& s : m.body) {
      os << "  ";
      print_statement(os, s);
      os << "\n";
    }
    os << "}\n";
  }
  return os.str();
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) {
    // A typechecked `r == s` compares equal to its surface Binary form.
    auto is_releq_pair = [](const Expr& x, const Expr& y) {
      return x.kind == Expr::Kind::RefEq && y.kind == Expr::Kind::Binary && y.op == "==" &&
             y.lhs->kind == Expr::Kind::Var && y.rhs->kind == Expr::Kind::Var &&
             y.lhs->name == x.ref_lhs && y.rhs->name == x.ref_rhs;
    };
    return is_releq_pair(a, b) || is_releq_pair(b, a);
  }
  switch (a.kind) {
    case Expr::Kind::IntLit:
      return a.int_value == b.int_value;
    case Expr::Kind::BoolLit:
      return a.bool_value == b.bool_value;
    case Expr::Kind::Var:
      return a.name == b.name;
    case Expr::Kind::Unary:
      return a.op == b.op && structurally_equal(*a.lhs, *b.lhs);
    case Expr::Kind::Binary:
      return a.op == b.op && structurally_equal(*a.lhs, *b.lhs) &&
             structurally_equal(*a.rhs, *b.rhs);
    case Expr::Kind::RefEq:
      return a.ref_lhs == b.ref_lhs && a.ref_rhs == b.ref_rhs;
  }
  return false;
}

bool structurally_equal(const Statement& a, const Statement& b) {
  if (a.kind != b.kind || a.label != b.label || a.target != b.target || a.source != b.source ||
      a.field != b.field || a.klass != b.klass || a.method != b.method || a.args != b.args ||
      a.goto_label != b.goto_label || a.out_high != b.out_high)
    return false;
  if ((a.expr == nullptr) != (b.expr == nullptr)) return false;
  return !a.expr || structurally_equal(*a.expr, *b.expr);
}

bool structurally_equal(const Program& a, const Program& b) {
  if (a.classes.size() != b.classes.size() || a.methods.size() != b.methods.size()) return false;
  for (size_t i = 0; i < a.classes.size(); ++i) {
    const auto& x = a.classes[i];
    const auto& y = b.classes[i];
    if (x.name != y.name || x.parent != y.parent || x.prim_fields != y.prim_fields ||
        x.ref_fields != y.ref_fields)
      return false;
  }
  for (size_t i = 0; i < a.methods.size(); ++i) {
    const auto& x = a.methods[i];
    const auto& y = b.methods[i];
    if (x.name != y.name || x.body.size() != y.body.size()) return false;
    auto same_decls = [](const std::vector<VarDecl>& u, const std::vector<VarDecl>& v) {
      if (u.size() != v.size()) return false;
      for (size_t j = 0; j < u.size(); ++j)
        if (u[j].name != v[j].name || !(u[j].type == v[j].type)) return false;
      return true;
    };
    if (!same_decls(x.params, y.params) || !same_decls(x.locals, y.locals)) return false;
    for (size_t j = 0; j < x.body.size(); ++j)
      if (!structurally_equal(x.body[j], y.body[j])) return false;
  }
  return true;
}

}  // namespace heapguard::sir
