#include "heapguard/sir/parser.hpp"

#include <cctype>
#include <set>
#include <sstream>

namespace heapguard::sir {

namespace {

const std::set<std::string> kKeywords = {"class", "extends", "method", "local", "int",
                                         "bool",  "goto",    "if",     "output", "low",
                                         "high",  "new",     "null",   "true",   "false"};

struct Token {
  enum class Kind { Ident, Keyword, Int, Punct, Eof } kind = Kind::Eof;
  std::string text;
  int64_t value = 0;
  SourcePos pos;
};

class Lexer {
 public:
  explicit Lexer(const std::string& src) : src_(src) { advance(); }

  const Token& peek() const { return tok_; }
  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

 private:
  void advance() {
    skip_ws();
    tok_.pos = {line_, col_};
    if (i_ >= src_.size()) {
      tok_.kind = Token::Kind::Eof;
      tok_.text.clear();
      return;
    }
    char c = src_[i_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string s;
      while (i_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[i_])) || src_[i_] == '_'))
        s.push_back(take());
      tok_.kind = kKeywords.count(s) ? Token::Kind::Keyword : Token::Kind::Ident;
      tok_.text = std::move(s);
      return;
    }
    if (std::isdigit(static_cast<unsigned char>(c))) {
      int64_t v = 0;
      std::string s;
      while (i_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[i_]))) {
        v = v * 10 + (src_[i_] - '0');
        s.push_back(take());
      }
      tok_.kind = Token::Kind::Int;
      tok_.text = std::move(s);
      tok_.value = v;
      return;
    }
    // Multi-char operators first.
    static const char* two[] = {"==", "!=", "<=", ">=", "&&", "||"};
    for (const char* op : two) {
      if (src_.compare(i_, 2, op) == 0) {
        tok_.kind = Token::Kind::Punct;
        tok_.text = op;
        take();
        take();
        return;
      }
    }
    tok_.kind = Token::Kind::Punct;
    tok_.text = std::string(1, take());
  }

  void skip_ws() {
    for (;;) {
      while (i_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[i_]))) take();
      if (i_ + 1 < src_.size() && src_[i_] == '/' && src_[i_ + 1] == '/') {
        while (i_ < src_.size() && src_[i_] != '\n') take();
        continue;
      }
      break;
    }
  }

  char take() {
    char c = src_[i_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  const std::string& src_;
  size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;
  Token tok_;
};

class Parser {
 public:
  explicit Parser(const std::string& src) : lex_(src) {}

  Program run() {
    Program p;
    while (!at_eof()) {
      if (peek_kw("class"))
        p.classes.push_back(parse_class());
      else if (peek_kw("method"))
        p.methods.push_back(parse_method());
      else
        fail("expected 'class' or 'method'");
    }
    return p;
  }

 private:
  bool at_eof() { return lex_.peek().kind == Token::Kind::Eof; }
  bool peek_kw(const std::string& kw) {
    return lex_.peek().kind == Token::Kind::Keyword && lex_.peek().text == kw;
  }
  bool peek_punct(const std::string& p) {
    return lex_.peek().kind == Token::Kind::Punct && lex_.peek().text == p;
  }
  [[noreturn]] void fail(const std::string& msg) { throw ParseError(msg, lex_.peek().pos); }
  Token expect_punct(const std::string& p) {
    if (!peek_punct(p)) fail("expected '" + p + "'");
    return lex_.next();
  }
  Token expect_kw(const std::string& kw) {
    if (!peek_kw(kw)) fail("expected '" + kw + "'");
    return lex_.next();
  }
  std::string expect_ident(const char* what) {
    if (lex_.peek().kind != Token::Kind::Ident) fail(std::string("expected ") + what);
    return lex_.next().text;
  }

  ClassDecl parse_class() {
    ClassDecl c;
    c.pos = lex_.peek().pos;
    expect_kw("class");
    c.name = expect_ident("class name");
    if (peek_kw("extends")) {
      lex_.next();
      c.parent = expect_ident("parent class name");
    }
    expect_punct("{");
    while (!peek_punct("}")) {
      if (peek_kw("int") || peek_kw("bool")) {
        PrimType pt = lex_.next().text == "int" ? PrimType::Int : PrimType::Bool;
        c.prim_fields.emplace_back(expect_ident("field name"), pt);
      } else {
        std::string cls = expect_ident("field type");
        c.ref_fields.emplace_back(expect_ident("field name"), cls);
      }
      expect_punct(";");
    }
    expect_punct("}");
    return c;
  }

  Type parse_type() {
    if (peek_kw("int")) {
      lex_.next();
      return Type::make_prim(PrimType::Int);
    }
    if (peek_kw("bool")) {
      lex_.next();
      return Type::make_prim(PrimType::Bool);
    }
    return Type::make_ref(expect_ident("type name"));
  }

  Method parse_method() {
    Method m;
    m.pos = lex_.peek().pos;
    expect_kw("method");
    m.name = expect_ident("method name");
    expect_punct("(");
    if (!peek_punct(")")) {
      for (;;) {
        VarDecl d;
        d.pos = lex_.peek().pos;
        d.type = parse_type();
        d.name = expect_ident("parameter name");
        m.params.push_back(std::move(d));
        if (!peek_punct(",")) break;
        lex_.next();
      }
    }
    expect_punct(")");
    expect_punct("{");
    while (peek_kw("local")) {
      lex_.next();
      VarDecl d;
      d.pos = lex_.peek().pos;
      d.type = parse_type();
      d.name = expect_ident("local name");
      m.locals.push_back(std::move(d));
      expect_punct(";");
    }
    if (peek_punct("}")) fail("method body must contain at least one statement");
    while (!peek_punct("}")) m.body.push_back(parse_statement());
    expect_punct("}");

    std::set<std::string> labels;
    for (const auto& s : m.body) {
      if (!s.label) continue;
      if (!labels.insert(*s.label).second)
        throw ParseError("duplicate label '" + *s.label + "'", s.pos);
    }
    for (const auto& s : m.body) {
      if ((s.kind == StmtKind::Goto || s.kind == StmtKind::Branch) && !labels.count(s.goto_label))
        throw ParseError("unresolved label '" + s.goto_label + "'", s.pos);
    }
    return m;
  }

  Statement parse_statement() {
    Statement s;
    s.pos = lex_.peek().pos;
    // Optional label: IDENT ':' not followed by '='-style continuation.
    if (lex_.peek().kind == Token::Kind::Ident) {
      Token id = lex_.next();
      if (peek_punct(":")) {
        lex_.next();
        s.label = id.text;
        s.pos = lex_.peek().pos;
        parse_core(s);
      } else {
        parse_core_after_ident(s, id);
      }
    } else {
      parse_core(s);
    }
    expect_punct(";");
    return s;
  }

  void parse_core(Statement& s) {
    if (peek_kw("goto")) {
      lex_.next();
      s.kind = StmtKind::Goto;
      s.goto_label = expect_ident("label");
      return;
    }
    if (peek_kw("if")) {
      lex_.next();
      expect_punct("(");
      s.expr = parse_expr();
      expect_punct(")");
      expect_kw("goto");
      s.kind = StmtKind::Branch;
      s.goto_label = expect_ident("label");
      return;
    }
    if (peek_kw("output")) {
      lex_.next();
      if (peek_kw("low"))
        s.out_high = false;
      else if (peek_kw("high"))
        s.out_high = true;
      else
        fail("expected 'low' or 'high'");
      lex_.next();
      expect_punct("(");
      s.kind = StmtKind::OutputPrim;  // resolved to OutputRef by typecheck when needed
      s.target = expect_ident("output argument");
      expect_punct(")");
      return;
    }
    if (lex_.peek().kind != Token::Kind::Ident) fail("expected a statement");
    Token id = lex_.next();
    parse_core_after_ident(s, id);
  }

  void parse_core_after_ident(Statement& s, const Token& id) {
    s.target = id.text;
    if (peek_punct(".")) {
      lex_.next();
      std::string member = expect_ident("member name");
      if (peek_punct("(")) {
        lex_.next();
        s.kind = StmtKind::Call;
        s.method = member;
        if (!peek_punct(")")) {
          for (;;) {
            s.args.push_back(expect_ident("argument name"));
            if (!peek_punct(",")) break;
            lex_.next();
          }
        }
        expect_punct(")");
        return;
      }
      expect_punct("=");
      s.kind = StmtKind::StorePrim;  // or StoreRef once types are known
      s.field = member;
      s.expr = parse_expr();
      return;
    }
    expect_punct("=");
    if (peek_kw("new")) {
      lex_.next();
      s.kind = StmtKind::NewRef;
      s.klass = expect_ident("class name");
      return;
    }
    if (peek_kw("null")) {
      lex_.next();
      s.kind = StmtKind::NullRef;
      return;
    }
    // Either `x = y.f` (field load) or `x = expr`.
    if (lex_.peek().kind == Token::Kind::Ident) {
      Token rhs = lex_.next();
      if (peek_punct(".")) {
        lex_.next();
        s.kind = StmtKind::LoadPrim;  // or LoadRef once types are known
        s.source = rhs.text;
        s.field = expect_ident("field name");
        return;
      }
      s.kind = StmtKind::AssignExpr;  // or CopyRef once types are known
      s.expr = continue_expr_from_ident(rhs);
      return;
    }
    s.kind = StmtKind::AssignExpr;
    s.expr = parse_expr();
  }

  // Expression grammar, lowest precedence first: || && (==/!=) (< <= > >=) (+ -) (* /) unary.
  ExprPtr parse_expr() { return parse_or(); }

  ExprPtr continue_expr_from_ident(const Token& id) {
    auto v = std::make_shared<Expr>();
    v->kind = Expr::Kind::Var;
    v->name = id.text;
    v->pos = id.pos;
    return continue_binary(v, 1);
  }

  static int op_level(const std::string& op) {
    if (op == "||") return 1;
    if (op == "&&") return 2;
    if (op == "==" || op == "!=") return 3;
    if (op == "<" || op == "<=" || op == ">" || op == ">=") return 4;
    if (op == "+" || op == "-") return 5;
    if (op == "*" || op == "/") return 6;
    return -1;
  }

  ExprPtr parse_or() { return continue_binary(parse_unary(), 1); }

  // Precedence climbing, left-associative at every level.
  ExprPtr continue_binary(ExprPtr lhs, int min_level) {
    for (;;) {
      if (lex_.peek().kind != Token::Kind::Punct) return lhs;
      int level = op_level(lex_.peek().text);
      if (level < min_level) return lhs;
      Token op = lex_.next();
      ExprPtr rhs = continue_binary(parse_unary(), level + 1);
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::Binary;
      e->op = op.text;
      e->lhs = lhs;
      e->rhs = rhs;
      e->pos = op.pos;
      lhs = e;
    }
  }

  ExprPtr parse_unary() {
    if (peek_punct("!") || peek_punct("-")) {
      Token op = lex_.next();
      auto e = std::make_shared<Expr>();
      e->kind = Expr::Kind::Unary;
      e->op = op.text;
      e->lhs = parse_unary();
      e->pos = op.pos;
      return e;
    }
    return parse_primary();
  }

  ExprPtr parse_primary() {
    auto e = std::make_shared<Expr>();
    e->pos = lex_.peek().pos;
    if (lex_.peek().kind == Token::Kind::Int) {
      e->kind = Expr::Kind::IntLit;
      e->int_value = lex_.next().value;
      return e;
    }
    if (peek_kw("true") || peek_kw("false")) {
      e->kind = Expr::Kind::BoolLit;
      e->bool_value = lex_.next().text == "true";
      return e;
    }
    if (lex_.peek().kind == Token::Kind::Ident) {
      e->kind = Expr::Kind::Var;
      e->name = lex_.next().text;
      return e;
    }
    if (peek_punct("(")) {
      lex_.next();
      ExprPtr inner = parse_expr();
      expect_punct(")");
      return inner;
    }
    fail("expected an expression");
  }

  Lexer lex_;
};

}  // namespace

Program parse_program(const std::string& source) { return Parser(source).run(); }

}  // namespace heapguard::sir
