#include "heapguard/scfg/summary.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace heapguard::scfg {

namespace {

// Tiny recursive-descent parser for the stub formula surface.
// bool := bterm ( '|' bterm )*
// bterm := bfac ( '&' bfac )*
// bfac := '!' bfac | atom
// atom := 'true' | 'false' | alias(r,s) | freach(r,s) | ite(bool,any,any)
//       | level '=' level | '(' bool ')'
// level := 'low' | 'high' | 'pc' | lev(x) | reach(r) | join(level,level)
//        | ite(bool,level,level)
class FormulaParser {
 public:
  explicit FormulaParser(const std::string& s) : s_(s) {}

  FormulaPtr run() {
    FormulaPtr f = parse_bool();
    skip();
    if (i_ != s_.size()) throw StubError("trailing input in formula: '" + s_.substr(i_) + "'");
    return f;
  }

  // Accepts either sort; effect right-hand sides are often bare levels.
  FormulaPtr run_any() {
    size_t save = i_;
    try {
      FormulaPtr lev = parse_level();
      skip();
      if (i_ == s_.size()) return lev;
    } catch (const StubError&) {
    }
    i_ = save;
    return run();
  }

 private:
  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool eat(char c) {
    skip();
    if (i_ < s_.size() && s_[i_] == c) {
      ++i_;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!eat(c)) throw StubError(std::string("expected '") + c + "' in formula");
  }
  std::string ident() {
    skip();
    size_t start = i_;
    while (i_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_'))
      ++i_;
    if (start == i_) throw StubError("expected an identifier in formula");
    return s_.substr(start, i_ - start);
  }
  bool peek_word(const std::string& w) {
    skip();
    if (s_.compare(i_, w.size(), w) != 0) return false;
    size_t end = i_ + w.size();
    if (end < s_.size() &&
        (std::isalnum(static_cast<unsigned char>(s_[end])) || s_[end] == '_'))
      return false;
    return true;
  }
  bool eat_word(const std::string& w) {
    if (!peek_word(w)) return false;
    i_ += w.size();
    return true;
  }

  FormulaPtr mk(Formula f) { return std::make_shared<Formula>(std::move(f)); }

  FormulaPtr parse_bool() {
    FormulaPtr lhs = parse_bterm();
    while (eat('|')) {
      Formula f;
      f.kind = Formula::Kind::Or;
      f.a = lhs;
      f.b = parse_bterm();
      lhs = mk(std::move(f));
    }
    return lhs;
  }

  FormulaPtr parse_bterm() {
    FormulaPtr lhs = parse_bfac();
    while (eat('&')) {
      Formula f;
      f.kind = Formula::Kind::And;
      f.a = lhs;
      f.b = parse_bfac();
      lhs = mk(std::move(f));
    }
    return lhs;
  }

  FormulaPtr parse_bfac() {
    if (eat('!')) {
      Formula f;
      f.kind = Formula::Kind::Not;
      f.a = parse_bfac();
      return mk(std::move(f));
    }
    return parse_atom();
  }

  FormulaPtr parse_atom() {
    skip();
    if (eat('(')) {
      FormulaPtr f = parse_bool();
      expect(')');
      return f;
    }
    if (peek_word("true") || peek_word("false")) {
      Formula f;
      f.kind = Formula::Kind::BoolLit;
      f.bool_value = eat_word("true");
      if (!f.bool_value) eat_word("false");
      return mk(std::move(f));
    }
    if (peek_word("alias") || peek_word("freach")) {
      bool alias = eat_word("alias");
      if (!alias) eat_word("freach");
      Formula f;
      f.kind = alias ? Formula::Kind::Alias : Formula::Kind::Freach;
      expect('(');
      f.arg0 = ident();
      expect(',');
      f.arg1 = ident();
      expect(')');
      return maybe_eq(mk(std::move(f)), /*is_level=*/false);
    }
    if (peek_word("ite")) {
      FormulaPtr f = parse_ite();
      return f->is_level() ? maybe_eq(f, true) : f;
    }
    // Otherwise a level expression, which must be part of a comparison.
    FormulaPtr lev = parse_level();
    return maybe_eq(lev, true);
  }

  FormulaPtr maybe_eq(FormulaPtr lhs, bool is_level) {
    skip();
    if (i_ < s_.size() && s_[i_] == '=') {
      ++i_;
      Formula f;
      f.kind = Formula::Kind::Eq;
      f.a = lhs;
      f.b = parse_level();
      return mk(std::move(f));
    }
    if (is_level) throw StubError("level expression used where a condition is expected");
    return lhs;
  }

  FormulaPtr parse_ite() {
    eat_word("ite");
    expect('(');
    Formula f;
    f.kind = Formula::Kind::Ite;
    f.c = parse_bool();
    expect(',');
    f.a = parse_branch();
    expect(',');
    f.b = parse_branch();
    expect(')');
    if (f.a->is_level() != f.b->is_level())
      throw StubError("ite branches mix level and condition values");
    return mk(std::move(f));
  }

  // An ite branch can be a level or a boolean formula.
  FormulaPtr parse_branch() {
    skip();
    size_t save = i_;
    try {
      return parse_level();
    } catch (const StubError&) {
      i_ = save;
      return parse_bool();
    }
  }

  FormulaPtr parse_level() {
    skip();
    Formula f;
    if (eat_word("low")) {
      f.kind = Formula::Kind::LevLow;
      return mk(std::move(f));
    }
    if (eat_word("high")) {
      f.kind = Formula::Kind::LevHigh;
      return mk(std::move(f));
    }
    if (eat_word("pc")) {
      f.kind = Formula::Kind::LevPc;
      return mk(std::move(f));
    }
    if (eat_word("lev")) {
      f.kind = Formula::Kind::LevVar;
      expect('(');
      f.arg0 = ident();
      expect(')');
      return mk(std::move(f));
    }
    if (eat_word("reach")) {
      f.kind = Formula::Kind::LevReach;
      expect('(');
      f.arg0 = ident();
      expect(')');
      return mk(std::move(f));
    }
    if (eat_word("join")) {
      f.kind = Formula::Kind::Join;
      expect('(');
      f.a = parse_level();
      expect(',');
      f.b = parse_level();
      expect(')');
      return mk(std::move(f));
    }
    if (peek_word("ite")) {
      FormulaPtr ite = parse_ite();
      if (!ite->is_level()) throw StubError("condition-valued ite used as a level");
      return ite;
    }
    throw StubError("expected a level expression");
  }

  const std::string& s_;
  size_t i_ = 0;
};

void validate_formula(const Formula& f, const MethodSummary& s) {
  auto is_formal = [&](const std::string& n, bool needs_ref) {
    for (const auto& fm : s.formals)
      if (fm.name == n) return !needs_ref || fm.is_ref;
    return false;
  };
  switch (f.kind) {
    case Formula::Kind::LevVar:
      if (!is_formal(f.arg0, false))
        throw StubError("stub for " + s.klass + "." + s.method + " mentions non-argument '" +
                        f.arg0 + "'");
      break;
    case Formula::Kind::LevReach:
      if (!is_formal(f.arg0, true))
        throw StubError("stub for " + s.klass + "." + s.method +
                        ": reach() needs a reference argument, got '" + f.arg0 + "'");
      break;
    case Formula::Kind::Alias:
    case Formula::Kind::Freach:
      if (!is_formal(f.arg0, true) || !is_formal(f.arg1, true))
        throw StubError("stub for " + s.klass + "." + s.method +
                        ": relation over non-reference or non-argument names");
      break;
    default:
      break;
  }
  if (f.a) validate_formula(*f.a, s);
  if (f.b) validate_formula(*f.b, s);
  if (f.c) validate_formula(*f.c, s);
}

MethodSummary parse_one(const std::string& key, const nlohmann::json& body) {
  MethodSummary s;
  auto dot = key.find('.');
  auto paren = key.find('(');
  if (dot == std::string::npos || paren == std::string::npos || paren < dot ||
      key.back() != ')')
    throw StubError("malformed stub key '" + key + "' (expected Class.method(sig))");
  s.klass = key.substr(0, dot);
  s.method = key.substr(dot + 1, paren - dot - 1);
  std::string sig = key.substr(paren + 1, key.size() - paren - 2);
  std::istringstream ss(sig);
  std::string part;
  while (std::getline(ss, part, ',')) {
    std::istringstream ps(part);
    StubFormal fm;
    if (!(ps >> fm.type >> fm.name))
      throw StubError("malformed formal '" + part + "' in stub key '" + key + "'");
    fm.is_ref = fm.type != "int" && fm.type != "bool";
    s.formals.push_back(std::move(fm));
  }
  if (!body.is_object()) throw StubError("stub body for '" + key + "' must be an object");
  if (body.contains("guard") && !body["guard"].is_null()) {
    if (!body["guard"].is_string()) throw StubError("stub guard must be a string");
    s.guard = FormulaParser(body["guard"].get<std::string>()).run();
    if (s.guard->is_level()) throw StubError("stub guard must be a condition, not a level");
  } else {
    auto g = std::make_shared<Formula>();
    g->kind = Formula::Kind::BoolLit;
    g->bool_value = true;
    s.guard = g;
  }
  if (body.contains("effect") && !body["effect"].is_null()) {
    const auto& eff = body["effect"];
    std::vector<std::string> lines;
    if (eff.is_array()) {
      for (const auto& e : eff) lines.push_back(e.get<std::string>());
    } else if (eff.is_object()) {
      for (auto it = eff.begin(); it != eff.end(); ++it)
        lines.push_back(it.key() + " := " + it.value().get<std::string>());
    } else {
      throw StubError("stub effect must be a list of assignments or an object");
    }
    for (const auto& line : lines) {
      auto pos = line.find(":=");
      if (pos == std::string::npos)
        throw StubError("malformed effect '" + line + "' (expected lhs := formula)");
      std::string lhs = line.substr(0, pos);
      std::string rhs = line.substr(pos + 2);
      // Trim.
      auto trim = [](std::string& x) {
        while (!x.empty() && std::isspace(static_cast<unsigned char>(x.front()))) x.erase(0, 1);
        while (!x.empty() && std::isspace(static_cast<unsigned char>(x.back()))) x.pop_back();
      };
      trim(lhs);
      trim(rhs);
      EffectAssign ea;
      auto parse_args = [&](const std::string& inner, bool two) {
        auto open = inner.find('(');
        std::string args = inner.substr(open + 1, inner.size() - open - 2);
        auto comma = args.find(',');
        if (two) {
          ea.arg0 = args.substr(0, comma);
          ea.arg1 = args.substr(comma + 1);
          trim(ea.arg0);
          trim(ea.arg1);
        } else {
          ea.arg0 = args;
          trim(ea.arg0);
        }
      };
      if (lhs == "ret") {
        ea.target = EffectAssign::Target::Ret;
      } else if (lhs.rfind("lev(", 0) == 0) {
        ea.target = EffectAssign::Target::Lev;
        parse_args(lhs, false);
      } else if (lhs.rfind("reach(", 0) == 0) {
        ea.target = EffectAssign::Target::Reach;
        parse_args(lhs, false);
      } else if (lhs.rfind("alias(", 0) == 0) {
        ea.target = EffectAssign::Target::Alias;
        parse_args(lhs, true);
      } else if (lhs.rfind("freach(", 0) == 0) {
        ea.target = EffectAssign::Target::Freach;
        parse_args(lhs, true);
      } else {
        throw StubError("unknown effect target '" + lhs + "'");
      }
      ea.rhs = FormulaParser(rhs).run_any();
      bool want_level = ea.target == EffectAssign::Target::Lev ||
                        ea.target == EffectAssign::Target::Reach ||
                        ea.target == EffectAssign::Target::Ret;
      if (ea.rhs->is_level() != want_level)
        throw StubError("effect '" + line + "' assigns the wrong sort of value");
      s.effects.push_back(std::move(ea));
    }
  }
  validate_formula(*s.guard, s);
  for (const auto& ea : s.effects) {
    auto check_ref = [&](const std::string& n) {
      for (const auto& fm : s.formals)
        if (fm.name == n && fm.is_ref) return;
      throw StubError("effect target mentions non-argument '" + n + "' in stub " + s.klass +
                      "." + s.method);
    };
    if (ea.target == EffectAssign::Target::Reach || ea.target == EffectAssign::Target::Alias ||
        ea.target == EffectAssign::Target::Freach)
      check_ref(ea.arg0);
    if (ea.target == EffectAssign::Target::Alias || ea.target == EffectAssign::Target::Freach)
      check_ref(ea.arg1);
    if (ea.target == EffectAssign::Target::Lev) {
      bool found = false;
      for (const auto& fm : s.formals) found |= fm.name == ea.arg0;
      if (!found)
        throw StubError("effect target mentions non-argument '" + ea.arg0 + "' in stub " +
                        s.klass + "." + s.method);
    }
    validate_formula(*ea.rhs, s);
  }
  return s;
}

}  // namespace

FormulaPtr parse_formula(const std::string& text) { return FormulaParser(text).run(); }

std::string formula_to_string(const Formula& f) {
  std::ostringstream os;
  auto rec = [&](auto&& self, const Formula& x, bool paren) -> void {
    switch (x.kind) {
      case Formula::Kind::LevLow:
        os << "low";
        break;
      case Formula::Kind::LevHigh:
        os << "high";
        break;
      case Formula::Kind::LevPc:
        os << "pc";
        break;
      case Formula::Kind::LevVar:
        os << "lev(" << x.arg0 << ")";
        break;
      case Formula::Kind::LevReach:
        os << "reach(" << x.arg0 << ")";
        break;
      case Formula::Kind::Join:
        os << "join(";
        self(self, *x.a, false);
        os << ",";
        self(self, *x.b, false);
        os << ")";
        break;
      case Formula::Kind::BoolLit:
        os << (x.bool_value ? "true" : "false");
        break;
      case Formula::Kind::Alias:
        os << "alias(" << x.arg0 << "," << x.arg1 << ")";
        break;
      case Formula::Kind::Freach:
        os << "freach(" << x.arg0 << "," << x.arg1 << ")";
        break;
      case Formula::Kind::Eq:
        self(self, *x.a, true);
        os << "=";
        self(self, *x.b, true);
        break;
      case Formula::Kind::And:
        if (paren) os << "(";
        self(self, *x.a, true);
        os << " & ";
        self(self, *x.b, true);
        if (paren) os << ")";
        break;
      case Formula::Kind::Or:
        if (paren) os << "(";
        self(self, *x.a, true);
        os << " | ";
        self(self, *x.b, true);
        if (paren) os << ")";
        break;
      case Formula::Kind::Not:
        os << "!";
        self(self, *x.a, true);
        break;
      case Formula::Kind::Ite:
        os << "ite(";
        self(self, *x.c, false);
        os << ",";
        self(self, *x.a, false);
        os << ",";
        self(self, *x.b, false);
        os << ")";
        break;
    }
  };
  rec(rec, f, false);
  return os.str();
}

void SummaryTable::add(MethodSummary s) {
  auto key = std::make_pair(s.klass, s.method);
  table_[key] = std::move(s);
}

const MethodSummary* SummaryTable::find(const std::string& klass,
                                        const std::string& method) const {
  auto it = table_.find({klass, method});
  return it == table_.end() ? nullptr : &it->second;
}

std::vector<const MethodSummary*> SummaryTable::all() const {
  std::vector<const MethodSummary*> out;
  for (const auto& [k, v] : table_) out.push_back(&v);
  return out;
}

SummaryTable parse_summaries(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw StubError(std::string("stub file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw StubError("stub file must be a JSON object");
  SummaryTable table;
  for (auto it = doc.begin(); it != doc.end(); ++it) table.add(parse_one(it.key(), it.value()));
  return table;
}

SummaryTable load_summaries(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StubError("cannot open stub file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_summaries(ss.str());
}

}  // namespace heapguard::scfg
