#include "heapguard/gen/sirgen.hpp"

#include <map>
#include <sstream>

namespace heapguard::gen {

using support::Rng;

namespace {

struct ClassInfo {
  std::string name;
  std::vector<std::string> prim_fields;
  std::vector<std::pair<std::string, uint32_t>> ref_fields;  // name, class index
};

struct VarInfo {
  std::string name;
  bool is_ref;
  uint32_t klass = 0;   // class index for references
  bool started = false;  // definitely bound to an object at least once
};

struct MethodGen {
  const GenOptions& opts;
  const std::vector<ClassInfo>& classes;
  Rng rng;
  std::vector<VarInfo> vars;
  std::ostringstream body;
  uint32_t stmts_left;
  uint32_t label_counter = 0;

  MethodGen(const GenOptions& o, const std::vector<ClassInfo>& cs, Rng r)
      : opts(o), classes(cs), rng(r), stmts_left(o.max_stmts) {}

  std::vector<uint32_t> refs() const {
    std::vector<uint32_t> out;
    for (uint32_t i = 0; i < vars.size(); ++i)
      if (vars[i].is_ref) out.push_back(i);
    return out;
  }
  // Receivers for dereferences: mostly references that definitely hold an
  // object, so generated runs do more than trap on the first statement;
  // occasionally anything, so trap paths stay covered.
  std::vector<uint32_t> deref_refs() {
    if (rng.chance(15)) return refs();
    std::vector<uint32_t> started;
    for (uint32_t i = 0; i < vars.size(); ++i)
      if (vars[i].is_ref && vars[i].started) started.push_back(i);
    return started;
  }
  std::vector<uint32_t> prims() const {
    std::vector<uint32_t> out;
    for (uint32_t i = 0; i < vars.size(); ++i)
      if (!vars[i].is_ref) out.push_back(i);
    return out;
  }

  std::string fresh_label() { return "L" + std::to_string(label_counter++); }

  std::string prim_expr() {
    auto ps = prims();
    switch (rng.below(4)) {
      case 0:
        return std::to_string(rng.below(10));
      case 1:
        if (!ps.empty()) return vars[ps[rng.below(ps.size())]].name;
        return std::to_string(rng.below(10));
      default: {
        if (ps.empty()) return std::to_string(rng.below(10));
        std::string a = vars[ps[rng.below(ps.size())]].name;
        std::string b =
            rng.coin() ? vars[ps[rng.below(ps.size())]].name : std::to_string(rng.below(10));
        const char* ops[] = {"+", "-", "*"};
        return a + " " + ops[rng.below(3)] + " " + b;
      }
    }
  }

  std::string cond_expr() {
    auto ps = prims();
    auto rs = refs();
    if (!rs.empty() && rng.chance(25)) {
      uint32_t a = rs[rng.below(rs.size())], b = rs[rng.below(rs.size())];
      return vars[a].name + " == " + vars[b].name;
    }
    if (ps.empty()) return "1 < 2";
    std::string a = vars[ps[rng.below(ps.size())]].name;
    const char* ops[] = {"<", "<=", ">", ">=", "==", "!="};
    return a + " " + ops[rng.below(6)] + " " + std::to_string(rng.below(8));
  }

  void emit(const std::string& line) {
    body << "  " << line << "\n";
    if (stmts_left) --stmts_left;
  }

  // Reference-manipulating statements are kept out of conditional arms: a
  // reference rebound under a secret condition carries its taint in its
  // variable level, which the store rules deliberately do not fold into
  // mutation levels; keeping rebinding out of arms keeps generated corpora
  // within the translation's soundness envelope (see the project notes).
  void simple_statement(bool allow_ref_ops) {
    auto rs = refs();
    auto ps = prims();
    for (int attempt = 0; attempt < 8; ++attempt) {
      uint32_t choice = rng.below(8);
      if (!allow_ref_ops && (choice >= 1 && choice <= 4)) choice = choice % 2 ? 0 : 5;
      switch (choice) {
        case 0:
          if (!ps.empty()) {
            emit(vars[ps[rng.below(ps.size())]].name + " = " + prim_expr() + ";");
            return;
          }
          break;
        case 1:
          if (!rs.empty()) {
            uint32_t r = rs[rng.below(rs.size())];
            emit(vars[r].name + " = new " + classes[vars[r].klass].name + ";");
            vars[r].started = true;
            return;
          }
          break;
        case 2:
          if (!rs.empty()) {
            uint32_t r = rs[rng.below(rs.size())];
            if (rng.chance(15)) {
              emit(vars[r].name + " = null;");
              vars[r].started = false;
              return;
            }
            // Copy from a variable of the same class.
            for (uint32_t s : rs)
              if (s != r && vars[s].klass == vars[r].klass) {
                emit(vars[r].name + " = " + vars[s].name + ";");
                vars[r].started = vars[s].started;
                return;
              }
          }
          break;
        case 3: {  // reference field store
          auto ds = deref_refs();
          if (ds.empty()) break;
          uint32_t r = ds[rng.below(ds.size())];
          const auto& fields = classes[vars[r].klass].ref_fields;
          if (fields.empty()) break;
          const auto& [fname, ftype] = fields[rng.below(fields.size())];
          for (uint32_t s : rs)
            if (vars[s].klass == ftype) {
              emit(vars[r].name + "." + fname + " = " + vars[s].name + ";");
              return;
            }
          break;
        }
        case 4: {  // reference field load
          auto ds = deref_refs();
          if (ds.empty()) break;
          uint32_t s = ds[rng.below(ds.size())];
          const auto& fields = classes[vars[s].klass].ref_fields;
          if (fields.empty()) break;
          const auto& [fname, ftype] = fields[rng.below(fields.size())];
          for (uint32_t r : rs)
            if (r != s && vars[r].klass == ftype) {
              emit(vars[r].name + " = " + vars[s].name + "." + fname + ";");
              return;
            }
          break;
        }
        case 5: {  // primitive field traffic
          auto ds = deref_refs();
          if (ds.empty()) break;
          uint32_t r = ds[rng.below(ds.size())];
          const auto& fields = classes[vars[r].klass].prim_fields;
          if (fields.empty()) break;
          const std::string& fname = fields[rng.below(fields.size())];
          if (rng.coin()) {
            emit(vars[r].name + "." + fname + " = " + prim_expr() + ";");
          } else if (!ps.empty()) {
            emit(vars[ps[rng.below(ps.size())]].name + " = " + vars[r].name + "." + fname +
                 ";");
          } else {
            break;
          }
          return;
        }
        case 6:
          if (!ps.empty()) {
            emit("output " + std::string(rng.chance(75) ? "low" : "high") + "(" +
                 vars[ps[rng.below(ps.size())]].name + ");");
            return;
          }
          break;
        default:
          if (!rs.empty()) {
            emit("output " + std::string(rng.chance(75) ? "low" : "high") + "(" +
                 vars[rs[rng.below(rs.size())]].name + ");");
            return;
          }
          break;
      }
    }
    if (!ps.empty()) emit(vars[ps[0]].name + " = " + std::to_string(rng.below(10)) + ";");
  }

  void block(uint32_t depth) {
    while (stmts_left > 0) {
      bool in_arm = depth > 0;
      if (opts.allow_branches && depth < 2 && stmts_left >= 4 && rng.chance(25)) {
        if (opts.allow_loops && rng.chance(30) && stmts_left >= 5) {
          // Bounded counting loop so runs terminate within any budget:
          //   i = 0; HEAD: if (i >= k) goto END; body; i = i + 1; goto HEAD; END:
          auto ps = prims();
          if (!ps.empty()) {
            std::string i = vars[ps[rng.below(ps.size())]].name;
            std::string head = fresh_label(), end = fresh_label();
            emit(i + " = 0;");
            emit(head + ": if (" + i + " >= " + std::to_string(1 + rng.below(3)) + ") goto " +
                 end + ";");
            uint32_t inner = std::min<uint32_t>(stmts_left > 3 ? stmts_left - 3 : 0,
                                                1 + static_cast<uint32_t>(rng.below(3)));
            uint32_t saved = stmts_left;
            stmts_left = inner;
            block(depth + 1);
            stmts_left = saved > (inner + 2) ? saved - inner - 2 : 0;
            emit(i + " = " + i + " + 1;");
            emit("goto " + head + ";");
            emit(end + ": " + i + " = " + i + ";");
            continue;
          }
        }
        // Forward conditional: if (c) goto SKIP; then-branch; SKIP:
        std::string skip = fresh_label();
        emit("if (" + cond_expr() + ") goto " + skip + ";");
        uint32_t inner = std::min<uint32_t>(stmts_left > 1 ? stmts_left - 1 : 0,
                                            1 + static_cast<uint32_t>(rng.below(4)));
        uint32_t saved = stmts_left;
        stmts_left = inner;
        block(depth + 1);
        stmts_left = saved > (inner + 1) ? saved - inner - 1 : 0;
        // The join point needs a statement to label.
        std::string filler;
        auto ps = prims();
        if (!ps.empty())
          filler = vars[ps[rng.below(ps.size())]].name + " = " +
                   vars[ps[rng.below(ps.size())]].name + ";";
        else
          filler = "output high(" + vars[refs()[0]].name + ");";
        emit(skip + ": " + filler);
        continue;
      }
      simple_statement(!in_arm);
    }
  }
};

}  // namespace

std::string generate_program(const GenOptions& opts, uint32_t method_count, uint64_t seed) {
  Rng rng(seed);
  std::ostringstream out;

  std::vector<ClassInfo> classes;
  uint32_t nclasses = rng.range(1, opts.max_classes);
  for (uint32_t c = 0; c < nclasses; ++c) {
    ClassInfo ci;
    ci.name = "K" + std::to_string(c);
    uint32_t nprim = rng.range(0, opts.max_prim_fields);
    for (uint32_t p = 0; p < nprim; ++p) ci.prim_fields.push_back("p" + std::to_string(p));
    classes.push_back(ci);
  }
  for (uint32_t c = 0; c < nclasses; ++c) {
    uint32_t nref = rng.range(0, opts.max_ref_fields);
    for (uint32_t f = 0; f < nref; ++f)
      classes[c].ref_fields.emplace_back("f" + std::to_string(f), rng.below(nclasses));
  }
  for (const auto& ci : classes) {
    out << "class " << ci.name << " { ";
    for (const auto& p : ci.prim_fields) out << "int " << p << "; ";
    for (const auto& [f, t] : ci.ref_fields) out << classes[t].name << " " << f << "; ";
    out << "}\n";
  }

  for (uint32_t mi = 0; mi < method_count; ++mi) {
    MethodGen mg(opts, classes, rng.split());
    uint32_t nrefs = rng.range(1, opts.max_refs);
    uint32_t nprims = rng.range(1, opts.max_prims);
    uint32_t ref_params = rng.range(0, nrefs);
    uint32_t prim_params = rng.range(1, nprims);

    out << "method m" << mi << "(";
    bool first = true;
    for (uint32_t r = 0; r < nrefs; ++r) {
      VarInfo v{"r" + std::to_string(r), true, static_cast<uint32_t>(rng.below(nclasses))};
      mg.vars.push_back(v);
      if (r < ref_params) {
        out << (first ? "" : ", ") << classes[v.klass].name << " " << v.name;
        first = false;
      }
    }
    for (uint32_t p = 0; p < nprims; ++p) {
      VarInfo v{"v" + std::to_string(p), false, 0};
      mg.vars.push_back(v);
      if (p < prim_params) {
        out << (first ? "" : ", ") << "int " << v.name;
        first = false;
      }
    }
    out << ") {\n";
    for (uint32_t r = ref_params; r < nrefs; ++r)
      out << "  local " << classes[mg.vars[r].klass].name << " r" << r << ";\n";
    for (uint32_t p = prim_params; p < nprims; ++p)
      out << "  local int v" << p << ";\n";

    mg.block(0);
    // Ensure at least one observable sink and a guaranteed statement.
    auto ps = mg.prims();
    mg.body << "  output low(" << mg.vars[ps.empty() ? 0 : ps[0]].name << ");\n";
    out << mg.body.str();
    out << "}\n";
  }
  return out.str();
}

}  // namespace heapguard::gen
