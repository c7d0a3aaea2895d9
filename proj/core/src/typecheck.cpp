#include "heapguard/sir/typecheck.hpp"

#include <algorithm>

namespace heapguard::sir {

namespace {

struct Checker {
  TypedProgram* tp;
  Program& p;
  std::map<std::string, size_t>& class_index;

  void check_classes() {
    for (size_t i = 0; i < p.classes.size(); ++i) {
      const auto& c = p.classes[i];
      if (!class_index.emplace(c.name, i).second)
        throw TypeError("duplicate class '" + c.name + "'", c.pos);
    }
    for (const auto& c : p.classes) {
      if (c.parent && !class_index.count(*c.parent))
        throw TypeError("unknown parent class '" + *c.parent + "'", c.pos);
      // Parent chain must be acyclic.
      std::set<std::string> seen{c.name};
      const ClassDecl* cur = &c;
      while (cur->parent) {
        if (!seen.insert(*cur->parent).second)
          throw TypeError("cyclic class hierarchy involving '" + c.name + "'", c.pos);
        cur = &p.classes[class_index.at(*cur->parent)];
      }
    }
    for (const auto& c : p.classes) {
      std::set<std::string> names;
      for (const auto& [n, _] : c.prim_fields)
        if (!names.insert(n).second) throw TypeError("duplicate field '" + n + "'", c.pos);
      for (const auto& [n, cls] : c.ref_fields) {
        if (!names.insert(n).second) throw TypeError("duplicate field '" + n + "'", c.pos);
        if (!class_index.count(cls))
          throw TypeError("field '" + n + "' has unknown class '" + cls + "'", c.pos);
      }
      // No shadowing of inherited fields.
      const ClassDecl* cur = &c;
      while (cur->parent) {
        cur = &p.classes[class_index.at(*cur->parent)];
        for (const auto& [n, _] : cur->prim_fields)
          if (names.count(n))
            throw TypeError("field '" + n + "' shadows an inherited field", c.pos);
        for (const auto& [n, _] : cur->ref_fields)
          if (names.count(n))
            throw TypeError("field '" + n + "' shadows an inherited field", c.pos);
      }
    }
  }

  void check_type(const Type& t, SourcePos pos) {
    if (t.is_ref() && !class_index.count(t.class_name))
      throw TypeError("unknown class '" + t.class_name + "'", pos);
  }

  MethodInfo check_method(Method& m) {
    MethodInfo info;
    auto declare = [&](const VarDecl& d, bool is_param) {
      check_type(d.type, d.pos);
      if (!info.vars.emplace(d.name, d.type).second)
        throw TypeError("duplicate variable '" + d.name + "'", d.pos);
      (d.type.is_ref() ? info.refs : info.prims).push_back(d.name);
      if (is_param) info.param_names.insert(d.name);
    };
    for (const auto& d : m.params) declare(d, true);
    for (const auto& d : m.locals) declare(d, false);
    for (uint32_t i = 0; i < m.body.size(); ++i)
      if (m.body[i].label) info.label_index[*m.body[i].label] = i;
    for (auto& s : m.body) check_statement(s, info);
    return info;
  }

  const Type& var_type(const std::string& name, const MethodInfo& info, SourcePos pos) {
    auto it = info.vars.find(name);
    if (it == info.vars.end()) throw TypeError("unbound identifier '" + name + "'", pos);
    return it->second;
  }

  // Expression typing; rewrites `r == s` over references into RefEq nodes.
  Type check_expr(ExprPtr& e, const MethodInfo& info) {
    Expr& node = const_cast<Expr&>(*e);
    switch (node.kind) {
      case Expr::Kind::IntLit:
        return Type::make_prim(PrimType::Int);
      case Expr::Kind::BoolLit:
        return Type::make_prim(PrimType::Bool);
      case Expr::Kind::Var: {
        const Type& t = var_type(node.name, info, node.pos);
        if (t.is_ref())
          throw TypeError("reference '" + node.name + "' used as a primitive value", node.pos);
        return t;
      }
      case Expr::Kind::Unary: {
        ExprPtr sub = node.lhs;
        Type t = check_expr(sub, info);
        node.lhs = sub;
        if (node.op == "-" && !(t.is_prim() && t.prim == PrimType::Int))
          throw TypeError("unary '-' expects int", node.pos);
        if (node.op == "!" && !(t.is_prim() && t.prim == PrimType::Bool))
          throw TypeError("'!' expects bool", node.pos);
        return t;
      }
      case Expr::Kind::Binary: {
        // `x == y` / `x != y` over two reference names becomes RefEq.
        if ((node.op == "==" || node.op == "!=") && node.lhs->kind == Expr::Kind::Var &&
            node.rhs->kind == Expr::Kind::Var) {
          auto lt = info.vars.find(node.lhs->name);
          auto rt = info.vars.find(node.rhs->name);
          if (lt != info.vars.end() && rt != info.vars.end() && lt->second.is_ref() &&
              rt->second.is_ref()) {
            if (node.op == "!=") {
              // Keep `r != s` as !(r == s).
              auto eq = std::make_shared<Expr>();
              eq->kind = Expr::Kind::RefEq;
              eq->ref_lhs = node.lhs->name;
              eq->ref_rhs = node.rhs->name;
              eq->pos = node.pos;
              node.kind = Expr::Kind::Unary;
              node.op = "!";
              node.lhs = eq;
              node.rhs = nullptr;
              return Type::make_prim(PrimType::Bool);
            }
            node.kind = Expr::Kind::RefEq;
            node.ref_lhs = node.lhs->name;
            node.ref_rhs = node.rhs->name;
            node.lhs = nullptr;
            node.rhs = nullptr;
            return Type::make_prim(PrimType::Bool);
          }
        }
        ExprPtr l = node.lhs, r = node.rhs;
        Type lt = check_expr(l, info), rt = check_expr(r, info);
        node.lhs = l;
        node.rhs = r;
        auto is_int = [](const Type& t) { return t.is_prim() && t.prim == PrimType::Int; };
        auto is_bool = [](const Type& t) { return t.is_prim() && t.prim == PrimType::Bool; };
        if (node.op == "+" || node.op == "-" || node.op == "*" || node.op == "/") {
          if (!is_int(lt) || !is_int(rt))
            throw TypeError("arithmetic on non-int operands", node.pos);
          return Type::make_prim(PrimType::Int);
        }
        if (node.op == "<" || node.op == "<=" || node.op == ">" || node.op == ">=") {
          if (!is_int(lt) || !is_int(rt))
            throw TypeError("comparison on non-int operands", node.pos);
          return Type::make_prim(PrimType::Bool);
        }
        if (node.op == "==" || node.op == "!=") {
          if (!(lt == rt)) throw TypeError("'==' operands have different types", node.pos);
          return Type::make_prim(PrimType::Bool);
        }
        if (node.op == "&&" || node.op == "||") {
          if (!is_bool(lt) || !is_bool(rt))
            throw TypeError("logical operator on non-bool operands", node.pos);
          return Type::make_prim(PrimType::Bool);
        }
        throw TypeError("unknown operator '" + node.op + "'", node.pos);
      }
      case Expr::Kind::RefEq:
        return Type::make_prim(PrimType::Bool);
    }
    throw TypeError("malformed expression", node.pos);
  }

  void check_statement(Statement& s, const MethodInfo& info) {
    switch (s.kind) {
      case StmtKind::AssignExpr: {
        const Type& tt = var_type(s.target, info, s.pos);
        // `x = y` with both references is a reference copy.
        if (s.expr->kind == Expr::Kind::Var) {
          auto st = info.vars.find(s.expr->name);
          if (st != info.vars.end() && st->second.is_ref()) {
            if (!tt.is_ref())
              throw TypeError("assigning reference '" + s.expr->name + "' to primitive '" +
                                  s.target + "'",
                              s.pos);
            if (!tp->is_subclass(st->second.class_name, tt.class_name))
              throw TypeError("'" + s.expr->name + "' is not assignable to '" + s.target + "'",
                              s.pos);
            s.kind = StmtKind::CopyRef;
            s.source = s.expr->name;
            s.expr = nullptr;
            return;
          }
        }
        if (tt.is_ref())
          throw TypeError("assigning a primitive expression to reference '" + s.target + "'",
                          s.pos);
        Type et = check_expr(s.expr, info);
        if (!(et == tt)) throw TypeError("assignment type mismatch for '" + s.target + "'", s.pos);
        return;
      }
      case StmtKind::LoadPrim: {
        const Type& tt = var_type(s.target, info, s.pos);
        const Type& st = var_type(s.source, info, s.pos);
        if (!st.is_ref()) throw TypeError("field access on primitive '" + s.source + "'", s.pos);
        if (auto pf = tp->prim_field(st.class_name, s.field)) {
          if (!tt.is_prim() || tt.prim != *pf)
            throw TypeError("field '" + s.field + "' type mismatch", s.pos);
          s.kind = StmtKind::LoadPrim;
          return;
        }
        if (auto rf = tp->ref_field(st.class_name, s.field)) {
          if (!tt.is_ref())
            throw TypeError("loading reference field into primitive '" + s.target + "'", s.pos);
          if (!tp->is_subclass(*rf, tt.class_name))
            throw TypeError("field '" + s.field + "' is not assignable to '" + s.target + "'",
                            s.pos);
          s.kind = StmtKind::LoadRef;
          return;
        }
        throw TypeError("class '" + st.class_name + "' has no field '" + s.field + "'", s.pos);
      }
      case StmtKind::StorePrim: {
        const Type& rt = var_type(s.target, info, s.pos);
        if (!rt.is_ref()) throw TypeError("field store on primitive '" + s.target + "'", s.pos);
        if (auto pf = tp->prim_field(rt.class_name, s.field)) {
          Type et = check_expr(s.expr, info);
          if (!et.is_prim() || et.prim != *pf)
            throw TypeError("field '" + s.field + "' store type mismatch", s.pos);
          return;
        }
        if (auto rf = tp->ref_field(rt.class_name, s.field)) {
          if (s.expr->kind != Expr::Kind::Var)
            throw TypeError("reference field '" + s.field + "' needs a reference right-hand side",
                            s.pos);
          const Type& st = var_type(s.expr->name, info, s.pos);
          if (!st.is_ref())
            throw TypeError("storing primitive into reference field '" + s.field + "'", s.pos);
          if (!tp->is_subclass(st.class_name, *rf))
            throw TypeError("'" + s.expr->name + "' is not assignable to field '" + s.field + "'",
                            s.pos);
          s.kind = StmtKind::StoreRef;
          s.source = s.expr->name;
          s.expr = nullptr;
          return;
        }
        throw TypeError("class '" + rt.class_name + "' has no field '" + s.field + "'", s.pos);
      }
      case StmtKind::NewRef: {
        const Type& tt = var_type(s.target, info, s.pos);
        if (!tt.is_ref()) throw TypeError("'new' assigned to primitive '" + s.target + "'", s.pos);
        if (!class_index.count(s.klass)) throw TypeError("unknown class '" + s.klass + "'", s.pos);
        if (!tp->is_subclass(s.klass, tt.class_name))
          throw TypeError("'new " + s.klass + "' is not assignable to '" + s.target + "'", s.pos);
        return;
      }
      case StmtKind::NullRef: {
        if (!var_type(s.target, info, s.pos).is_ref())
          throw TypeError("'null' assigned to primitive '" + s.target + "'", s.pos);
        return;
      }
      case StmtKind::Call: {
        if (!var_type(s.target, info, s.pos).is_ref())
          throw TypeError("method call on primitive '" + s.target + "'", s.pos);
        for (const auto& a : s.args) var_type(a, info, s.pos);
        return;
      }
      case StmtKind::Goto:
        return;
      case StmtKind::Branch: {
        Type t = check_expr(s.expr, info);
        if (!t.is_prim() || t.prim != PrimType::Bool)
          throw TypeError("branch condition must be bool", s.pos);
        return;
      }
      case StmtKind::OutputPrim: {
        const Type& t = var_type(s.target, info, s.pos);
        if (t.is_ref()) s.kind = StmtKind::OutputRef;
        return;
      }
      default:
        throw TypeError("unexpected statement form", s.pos);
    }
  }
};

}  // namespace

TypedProgram TypedProgram::check(Program p) {
  TypedProgram tp;
  tp.program_ = std::move(p);
  Checker ck{&tp, tp.program_, tp.class_index_};
  ck.check_classes();
  for (size_t i = 0; i < tp.program_.methods.size(); ++i) {
    const auto& m = tp.program_.methods[i];
    if (!tp.method_index_.emplace(m.name, i).second)
      throw TypeError("duplicate method '" + m.name + "'", m.pos);
  }
  for (auto& m : tp.program_.methods) tp.infos_.push_back(ck.check_method(m));
  return tp;
}

TypedProgram typecheck(Program p) { return TypedProgram::check(std::move(p)); }

std::vector<std::string> TypedProgram::class_names() const {
  std::vector<std::string> out;
  for (const auto& c : program_.classes) out.push_back(c.name);
  return out;
}

bool TypedProgram::is_subclass(const std::string& sub, const std::string& super) const {
  const ClassDecl* cur = &class_decl(sub);
  for (;;) {
    if (cur->name == super) return true;
    if (!cur->parent) return false;
    cur = &class_decl(*cur->parent);
  }
}

std::optional<PrimType> TypedProgram::prim_field(const std::string& cls,
                                                 const std::string& field) const {
  const ClassDecl* cur = &class_decl(cls);
  for (;;) {
    for (const auto& [n, t] : cur->prim_fields)
      if (n == field) return t;
    if (!cur->parent) return std::nullopt;
    cur = &class_decl(*cur->parent);
  }
}

std::optional<std::string> TypedProgram::ref_field(const std::string& cls,
                                                   const std::string& field) const {
  const ClassDecl* cur = &class_decl(cls);
  for (;;) {
    for (const auto& [n, t] : cur->ref_fields)
      if (n == field) return t;
    if (!cur->parent) return std::nullopt;
    cur = &class_decl(*cur->parent);
  }
}

std::vector<std::pair<std::string, PrimType>> TypedProgram::all_prim_fields(
    const std::string& cls) const {
  std::vector<const ClassDecl*> chain;
  const ClassDecl* cur = &class_decl(cls);
  for (;;) {
    chain.push_back(cur);
    if (!cur->parent) break;
    cur = &class_decl(*cur->parent);
  }
  std::vector<std::pair<std::string, PrimType>> out;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it)
    for (const auto& f : (*it)->prim_fields) out.push_back(f);
  return out;
}

std::vector<std::pair<std::string, std::string>> TypedProgram::all_ref_fields(
    const std::string& cls) const {
  std::vector<const ClassDecl*> chain;
  const ClassDecl* cur = &class_decl(cls);
  for (;;) {
    chain.push_back(cur);
    if (!cur->parent) break;
    cur = &class_decl(*cur->parent);
  }
  std::vector<std::pair<std::string, std::string>> out;
  for (auto it = chain.rbegin(); it != chain.rend(); ++it)
    for (const auto& f : (*it)->ref_fields) out.push_back(f);
  return out;
}

}  // namespace heapguard::sir
