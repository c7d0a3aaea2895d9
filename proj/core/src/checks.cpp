#include "heapguard/crt/checks.hpp"

#include <algorithm>
#include <functional>
#include <sstream>

#include "heapguard/sir/parser.hpp"
#include "heapguard/support/rng.hpp"
#include "json.hpp"

namespace heapguard::crt {

using heap::HeapCopy;
using heap::HeapDomainInstance;
using heap::HeapFamily;
using heap::HeapOp;
using heap::RelKind;
using heap::TransformerBug;
using support::Rng;
using sym::AssignmentSet;
using sym::Predicate;
using sym::PredicateManager;
using sym::Valuation;
using sym::Var;

std::string CheckReport::to_json() const {
  nlohmann::json j;
  j["check"] = check;
  j["domain"] = domain;
  j["seed"] = seed;
  j["trials"] = trials;
  j["cases"] = cases;
  j["skipped"] = skipped;
  j["violations"] = nlohmann::json::array();
  for (const auto& v : violations)
    j["violations"].push_back({{"description", v.description}, {"reproducer", v.reproducer}});
  j["notes"] = notes;
  return j.dump(2);
}

namespace {

// --------------------------------------------------------------------------
// Shared vocabulary fixtures.

sir::TypedProgram table_program(const std::string& text) {
  return sir::typecheck(sir::parse_program(text));
}

struct Vocabulary {
  std::string description;
  sir::TypedProgram tp;
  std::vector<heap::RefDecl> refs;
};

std::vector<Vocabulary> inductive_vocabularies(uint32_t max_refs) {
  std::vector<Vocabulary> out;
  const std::string recursive_table =
      "class C { int p; C f; } method unused(int v) { output high(v); }";
  std::vector<heap::RefDecl> refs;
  for (uint32_t n = 1; n <= max_refs; ++n) {
    refs.push_back({std::string(1, static_cast<char>('x' + n - 1)), "C"});
    out.push_back({"recursive class, " + std::to_string(n) + " refs",
                   table_program(recursive_table), refs});
  }
  if (max_refs >= 3) {
    out.push_back({"two-class table {a:A, b:B, r:B}",
                   table_program("class A { int fi; } class B { A fa; } "
                                 "method unused(int v) { output high(v); }"),
                   {{"a", "A"}, {"b", "B"}, {"r", "B"}}});
  }
  return out;
}

// Evaluate an assignment set as a function on total valuations.
Valuation apply_assign(PredicateManager& mgr, const Valuation& pre, const AssignmentSet& t) {
  Valuation post = pre;
  for (const auto& [vi, rhs] : t.entries()) {
    Var v{vi};
    if (rhs.enum_value)
      post.set_enum(v, *rhs.enum_value);
    else
      post.set_bool(v, mgr.eval(rhs.pred, pre));
  }
  return post;
}

struct TypingView {
  const HeapDomainInstance& inst;
  PredicateManager& mgr;
  HeapCopy copy = HeapCopy::Cur;

  bool rel(const Valuation& v, RelKind k, uint32_t r, uint32_t s) const {
    return mgr.eval(inst.rel_value(mgr, copy, k, r, s), v);
  }
  bool lev(const Valuation& v, uint32_t r) const { return v.get_bool(inst.level_var(copy, r)); }

  bool sound_alias_typing(const Valuation& v) const {
    uint32_t n = inst.ref_count();
    for (uint32_t r = 0; r < n; ++r)
      for (uint32_t s = r + 1; s < n; ++s)
        if (rel(v, RelKind::Alias, r, s) && lev(v, r) != lev(v, s)) return false;
    return true;
  }
  bool sound_reach_typing(const Valuation& v) const {
    uint32_t n = inst.ref_count();
    for (uint32_t r = 0; r < n; ++r)
      for (uint32_t s = 0; s < n; ++s)
        if (rel(v, RelKind::FieldReach, r, s) && !lev(v, r) && lev(v, s)) return false;
    return true;
  }
  // Laws every concrete heap satisfies: aliasing is transitive, field-reach
  // is transitive, and aliased references reach (and are reached by) the
  // same objects.
  bool coherent(const Valuation& v) const {
    uint32_t n = inst.ref_count();
    for (uint32_t a = 0; a < n; ++a)
      for (uint32_t b = 0; b < n; ++b) {
        if (a != b && rel(v, RelKind::Alias, a, b)) {
          for (uint32_t c = 0; c < n; ++c) {
            if (rel(v, RelKind::Alias, b, c) && !rel(v, RelKind::Alias, a, c)) return false;
            if (rel(v, RelKind::FieldReach, a, c) != rel(v, RelKind::FieldReach, b, c))
              return false;
            if (rel(v, RelKind::FieldReach, c, a) != rel(v, RelKind::FieldReach, c, b))
              return false;
          }
        }
        if (rel(v, RelKind::FieldReach, a, b))
          for (uint32_t c = 0; c < n; ++c)
            if (rel(v, RelKind::FieldReach, b, c) && !rel(v, RelKind::FieldReach, a, c))
              return false;
      }
    return true;
  }

  std::string dump(const Valuation& v) const {
    std::ostringstream os;
    uint32_t n = inst.ref_count();
    for (uint32_t r = 0; r < n; ++r)
      os << inst.refs()[r].name << (lev(v, r) ? "=high " : "=low ");
    for (const auto& e : inst.tracked())
      os << (e.rel == RelKind::Alias ? "alias(" : "freach(") << inst.refs()[e.r].name << ","
         << inst.refs()[e.s].name << ")=" << rel(v, e.rel, e.r, e.s) << " ";
    return os.str();
  }
};

struct NamedTransformer {
  std::string name;
  AssignmentSet assigns;
  // Admissibility of the level argument at a given valuation (the level of
  // a reference store must cover the stored reference's heap level).
  Predicate admissible;
};

std::vector<NamedTransformer> all_transformers(const HeapDomainInstance& inst,
                                               PredicateManager& mgr, TransformerBug bug) {
  std::vector<NamedTransformer> out;
  uint32_t n = inst.ref_count();
  Predicate always = mgr.top();
  auto name_of = [&](uint32_t r) { return inst.refs()[r].name; };
  for (uint32_t r = 0; r < n; ++r) {
    out.push_back({name_of(r) + " = null",
                   inst.heap_transformer(mgr, {HeapOp::Kind::AssignNull, r, 0}, {}, bug),
                   always});
    for (bool high : {false, true}) {
      Predicate l = mgr.constant(high);
      std::string lt = high ? "high" : "low";
      out.push_back({name_of(r) + " = new [" + lt + "]",
                     inst.heap_transformer(mgr, {HeapOp::Kind::MutateNew, r, 0}, l, bug),
                     always});
      out.push_back({name_of(r) + ".fp <- [" + lt + "]",
                     inst.heap_transformer(mgr, {HeapOp::Kind::MutatePrim, r, 0}, l, bug),
                     always});
    }
    for (uint32_t s = 0; s < n; ++s) {
      if (s == r) continue;
      out.push_back({name_of(r) + " = " + name_of(s),
                     inst.heap_transformer(mgr, {HeapOp::Kind::AssignCopy, r, s}, {}, bug),
                     always});
      out.push_back({name_of(r) + " = " + name_of(s) + ".f",
                     inst.heap_transformer(mgr, {HeapOp::Kind::AssignLoad, r, s}, {}, bug),
                     always});
      for (bool high : {false, true}) {
        Predicate l = mgr.constant(high);
        std::string lt = high ? "high" : "low";
        Predicate ok = high ? always : !mgr.var(inst.level_var(HeapCopy::Cur, s));
        out.push_back(
            {name_of(r) + ".f = " + name_of(s) + " [" + lt + "]",
             inst.heap_transformer(mgr, {HeapOp::Kind::MutateRefStore, r, s}, l, bug), ok});
      }
    }
  }
  return out;
}

}  // namespace

CheckReport check_inductive(const std::string& domain, uint32_t max_refs,
                            const InductiveOptions& opts) {
  CheckReport report;
  report.check = "inductive";
  report.domain = domain;

  for (const auto& voc : inductive_vocabularies(max_refs)) {
    heap::ClassHierarchy hier(voc.tp);
    auto space = std::make_shared<sym::VarSpace>();
    HeapDomainInstance inst(HeapFamily::by_name(domain), voc.refs, hier, *space,
                            /*with_saved_copy=*/true);
    PredicateManager mgr(space);
    TypingView view{inst, mgr};

    std::vector<Var> cur_vars = inst.copy_vars(HeapCopy::Cur);
    std::vector<Var> saved_vars = inst.copy_vars(HeapCopy::Saved);
    const size_t bits = cur_vars.size();
    if (bits > 22) {
      report.notes.push_back("skipped " + voc.description + ": too many variables");
      continue;
    }
    auto unpack = [&](uint64_t code, const std::vector<Var>& vars, Valuation& v) {
      for (size_t i = 0; i < vars.size(); ++i) v.set_bool(vars[i], (code >> i) & 1);
    };

    std::vector<NamedTransformer> transformers = all_transformers(inst, mgr, opts.bug);
    for (uint64_t code = 0; code < (1ull << bits); ++code) {
      Valuation v;
      unpack(code, cur_vars, v);
      for (Var sv : saved_vars) v.set_bool(sv, false);
      if (!view.sound_alias_typing(v) || !view.sound_reach_typing(v)) continue;
      if (opts.coherent_prestates && !view.coherent(v)) continue;
      for (const auto& t : transformers) {
        if (!mgr.eval(t.admissible, v)) continue;
        ++report.cases;
        Valuation post = apply_assign(mgr, v, t.assigns);
        if (view.sound_alias_typing(post) && view.sound_reach_typing(post)) continue;
        if (report.violations.size() >= opts.max_violations) {
          report.notes.push_back("further violations suppressed");
          return report;
        }
        report.violations.push_back(
            {voc.description + ": transformer '" + t.name + "' breaks sound typing\n  pre:  " +
                 view.dump(v) + "\n  post: " + view.dump(post),
             ""});
      }
    }

    // Junction-time merge over both copies where the joint space is small.
    if (2 * bits <= 16) {
      AssignmentSet bulk = inst.bulk_upgrade(mgr);
      TypingView saved_view{inst, mgr, HeapCopy::Saved};
      for (uint64_t cur = 0; cur < (1ull << bits); ++cur) {
        Valuation v;
        unpack(cur, cur_vars, v);
        {
          Valuation probe = v;
          for (Var sv : saved_vars) probe.set_bool(sv, false);
          if (!view.sound_alias_typing(probe) || !view.sound_reach_typing(probe)) continue;
          if (opts.coherent_prestates && !view.coherent(probe)) continue;
        }
        for (uint64_t saved = 0; saved < (1ull << bits); ++saved) {
          unpack(saved, saved_vars, v);
          if (!saved_view.sound_alias_typing(v) || !saved_view.sound_reach_typing(v)) continue;
          if (opts.coherent_prestates && !saved_view.coherent(v)) continue;
          // The merge is only applied with the saved levels below the
          // working levels.
          bool below = true;
          for (uint32_t r = 0; r < inst.ref_count() && below; ++r)
            below = !saved_view.lev(v, r) || view.lev(v, r);
          if (!below) continue;
          ++report.cases;
          Valuation post = apply_assign(mgr, v, bulk);
          if (view.sound_alias_typing(post) && view.sound_reach_typing(post)) continue;
          if (report.violations.size() >= opts.max_violations) {
            report.notes.push_back("further violations suppressed");
            return report;
          }
          report.violations.push_back(
              {voc.description + ": junction merge breaks sound typing\n  pre:  " +
                   view.dump(v) + "\n  post: " + view.dump(post),
               ""});
        }
      }
    }
  }
  return report;
}

// ===========================================================================
// Indistinguishability preservation.

namespace {

struct SampledTable {
  std::string source;  // class declarations as .sir text
  sir::TypedProgram tp;
  std::vector<heap::RefDecl> refs;
};

SampledTable sample_table(Rng& rng, uint32_t max_refs) {
  uint32_t nclasses = rng.range(1, 3);
  std::ostringstream src;
  for (uint32_t c = 0; c < nclasses; ++c) {
    src << "class C" << c << " { ";
    uint32_t nprim = rng.range(0, 2);
    for (uint32_t p = 0; p < nprim; ++p) src << "int p" << p << "; ";
    uint32_t nref = rng.range(0, 2);
    for (uint32_t f = 0; f < nref; ++f) src << "C" << rng.below(nclasses) << " f" << f << "; ";
    src << "}\n";
  }
  src << "method unused(int v) { output high(v); }\n";
  SampledTable t{src.str(), table_program(src.str()), {}};
  uint32_t nrefs = rng.range(2, max_refs);
  for (uint32_t r = 0; r < nrefs; ++r)
    t.refs.push_back({"r" + std::to_string(r), "C" + std::to_string(rng.below(nclasses))});
  return t;
}

// One differential operation, applied to both concrete heaps and the
// abstract valuation.
struct DiffOp {
  enum class Kind : uint8_t { Null, New, Copy, Load, StoreRef, StorePrim } kind;
  uint32_t r = 0, s = 0;
  std::string field;
  bool high = false;       // mutation level
  int64_t v1 = 0, v2 = 0;  // written values per heap (equal when low)

  std::string text(const std::vector<heap::RefDecl>& refs) const {
    std::ostringstream os;
    switch (kind) {
      case Kind::Null:
        os << refs[r].name << " = null";
        break;
      case Kind::New:
        os << refs[r].name << " = new " << refs[r].type << (high ? " [high]" : " [low]");
        break;
      case Kind::Copy:
        os << refs[r].name << " = " << refs[s].name;
        break;
      case Kind::Load:
        os << refs[r].name << " = " << refs[s].name << "." << field;
        break;
      case Kind::StoreRef:
        os << refs[r].name << "." << field << " = " << refs[s].name
           << (high ? " [high]" : " [low]");
        break;
      case Kind::StorePrim:
        os << refs[r].name << "." << field << " = " << (high ? "secret" : "shared") << "("
           << v1 << "/" << v2 << ")";
        break;
    }
    return os.str();
  }
};

struct DiffState {
  ConcreteHeap h1, h2;
  Valuation abs;
};

struct TrialRecipe {
  std::vector<DiffOp> setup;       // builds the shared initial heap
  std::vector<Level> init_levels;  // per reference, reach-closed
  std::vector<size_t> slack;       // tracked-relation indexes widened to true
  struct FieldTweak {
    uint32_t ref;
    std::string field;
    int64_t value;
  };
  struct EdgeTweak {
    uint32_t ref;
    std::string field;
    uint32_t target;
  };
  std::vector<FieldTweak> field_tweaks;  // second heap only
  std::vector<EdgeTweak> edge_tweaks;    // second heap only
  std::vector<DiffOp> chain;
};

struct DiffContext {
  const SampledTable& table;
  const HeapDomainInstance& inst;
  PredicateManager& mgr;
  TransformerBug bug;

  uint32_t ref_count() const { return inst.ref_count(); }

  ConcreteHeap::FieldTypes prim_fields_of(const std::string& klass) const {
    ConcreteHeap::FieldTypes out;
    for (const auto& [f, t] : table.tp.all_prim_fields(klass))
      out[f] = t == sir::PrimType::Bool;
    return out;
  }

  void apply_concrete(ConcreteHeap& h, const DiffOp& op, bool second) const {
    switch (op.kind) {
      case DiffOp::Kind::Null:
        h.assign_null(op.r);
        break;
      case DiffOp::Kind::New:
        h.assign_new(op.r, table.refs[op.r].type, prim_fields_of(table.refs[op.r].type));
        break;
      case DiffOp::Kind::Copy:
        h.assign_copy(op.r, op.s);
        break;
      case DiffOp::Kind::Load:
        h.assign_load(op.r, op.s, op.field,
                      *table.tp.ref_field(table.refs[op.s].type, op.field));
        break;
      case DiffOp::Kind::StoreRef:
        h.store_ref(op.r, op.field, op.s);
        break;
      case DiffOp::Kind::StorePrim:
        h.store_prim(op.r, op.field, FieldValue::of_int(second ? op.v2 : op.v1));
        break;
    }
  }

  void apply_abstract(Valuation& abs, const DiffOp& op) const {
    HeapOp hop{HeapOp::Kind::AssignNull, op.r, op.s};
    std::optional<Predicate> level;
    switch (op.kind) {
      case DiffOp::Kind::Null:
        hop.kind = HeapOp::Kind::AssignNull;
        break;
      case DiffOp::Kind::New:
        hop.kind = HeapOp::Kind::MutateNew;
        level = mgr.constant(op.high);
        break;
      case DiffOp::Kind::Copy:
        hop.kind = HeapOp::Kind::AssignCopy;
        break;
      case DiffOp::Kind::Load:
        hop.kind = HeapOp::Kind::AssignLoad;
        break;
      case DiffOp::Kind::StoreRef:
        hop.kind = HeapOp::Kind::MutateRefStore;
        level = mgr.constant(op.high);
        break;
      case DiffOp::Kind::StorePrim:
        hop.kind = HeapOp::Kind::MutatePrim;
        level = mgr.constant(op.high);
        break;
    }
    abs = apply_assign(mgr, abs, inst.heap_transformer(mgr, hop, level, bug));
  }

  void apply(DiffState& st, const DiffOp& op) const {
    apply_abstract(st.abs, op);
    apply_concrete(st.h1, op, false);
    apply_concrete(st.h2, op, true);
  }

  std::vector<Level> abstract_levels(const Valuation& abs) const {
    std::vector<Level> out;
    for (uint32_t r = 0; r < inst.ref_count(); ++r)
      out.push_back(abs.get_bool(inst.level_var(HeapCopy::Cur, r)) ? Level::High : Level::Low);
    return out;
  }

  bool indist(const DiffState& st) const {
    return indistinguishable(st.h1, st.h2, abstract_levels(st.abs));
  }

  // Every well-typed operation with an admissible level that dereferences no
  // null receiver in either heap. A low-level mutation additionally requires
  // the receiver to resolve to the same object in both heaps: when the
  // operation writes to secretly different places it is not one operation
  // pair in the sense of the preservation property, and the translation
  // marks such writes high through the receiver's variable level.
  std::vector<DiffOp> candidates(const DiffState& st, Rng& rng) const {
    std::vector<DiffOp> out;
    uint32_t n = inst.ref_count();
    auto null_free = [&](uint32_t x) { return !st.h1.is_null(x) && !st.h2.is_null(x); };
    auto same_object = [&](uint32_t x) {
      return st.h1.class_members(x) == st.h2.class_members(x);
    };
    for (uint32_t r = 0; r < n; ++r) {
      out.push_back({DiffOp::Kind::Null, r});
      for (bool high : {false, true}) {
        DiffOp nw{DiffOp::Kind::New, r};
        nw.high = high;
        out.push_back(nw);
      }
      if (null_free(r)) {
        for (const auto& [f, t] : table.tp.all_prim_fields(table.refs[r].type)) {
          (void)t;
          for (bool high : {false, true}) {
            if (!high && !same_object(r)) continue;
            DiffOp sp{DiffOp::Kind::StorePrim, r};
            sp.field = f;
            sp.high = high;
            sp.v1 = static_cast<int64_t>(rng.below(16));
            sp.v2 = high ? static_cast<int64_t>(rng.below(16)) : sp.v1;
            out.push_back(sp);
          }
        }
      }
      for (uint32_t s = 0; s < n; ++s) {
        if (s == r) continue;
        if (table.tp.is_subclass(table.refs[s].type, table.refs[r].type))
          out.push_back({DiffOp::Kind::Copy, r, s});
        if (null_free(s)) {
          for (const auto& [f, cls] : table.tp.all_ref_fields(table.refs[s].type)) {
            if (!table.tp.is_subclass(cls, table.refs[r].type)) continue;
            DiffOp ld{DiffOp::Kind::Load, r, s};
            ld.field = f;
            out.push_back(ld);
          }
        }
        if (null_free(r)) {
          for (const auto& [f, cls] : table.tp.all_ref_fields(table.refs[r].type)) {
            if (!table.tp.is_subclass(table.refs[s].type, cls)) continue;
            bool s_high = st.abs.get_bool(inst.level_var(HeapCopy::Cur, s));
            for (bool high : {false, true}) {
              if (!high && (s_high || !same_object(r))) continue;
              DiffOp sr{DiffOp::Kind::StoreRef, r, s};
              sr.field = f;
              sr.high = high;
              out.push_back(sr);
            }
          }
        }
      }
    }
    return out;
  }

  // Replay a recipe from scratch; true when every step stays
  // indistinguishable (or the recipe no longer constructs a valid pair).
  bool replay_clean(const TrialRecipe& rec, const DiffOp* extra) const {
    std::vector<std::string> names;
    for (const auto& r : table.refs) names.push_back(r.name);
    ConcreteHeap a(names), b(names);
    for (const auto& op : rec.setup) {
      apply_concrete(a, op, false);
      apply_concrete(b, op, true);
    }
    for (const auto& t : rec.field_tweaks)
      if (!b.is_null(t.ref)) b.store_prim(t.ref, t.field, FieldValue::of_int(t.value));
    for (const auto& t : rec.edge_tweaks)
      if (!b.is_null(t.ref) && !b.is_null(t.target)) b.store_ref(t.ref, t.field, t.target);
    Valuation v;
    uint32_t n = inst.ref_count();
    for (uint32_t x = 0; x < n; ++x)
      v.set_bool(inst.level_var(HeapCopy::Cur, x), rec.init_levels[x] == Level::High);
    const auto& tracked = inst.tracked();
    for (size_t i = 0; i < tracked.size(); ++i) {
      const auto& e = tracked[i];
      bool holds = a.aliased(e.r, e.s) || b.aliased(e.r, e.s);
      if (e.rel == RelKind::FieldReach) holds = a.reaches(e.r, e.s) || b.reaches(e.r, e.s);
      holds = holds || std::find(rec.slack.begin(), rec.slack.end(), i) != rec.slack.end();
      v.set_bool(*inst.rel_var(HeapCopy::Cur, e.rel, e.r, e.s), holds);
    }
    DiffState state{std::move(a), std::move(b), v};
    if (!indist(state)) return true;  // precondition broken, not a violation
    // Reach-closure of the initial levels must also hold, else invalid.
    for (uint32_t x = 0; x < n; ++x)
      for (uint32_t y = 0; y < n; ++y)
        if ((state.h1.reaches(x, y) || state.h2.reaches(x, y)) &&
            rec.init_levels[y] == Level::High && rec.init_levels[x] == Level::Low)
          return true;
    for (const auto& op : rec.chain) {
      apply(state, op);
      if (!indist(state)) return false;
    }
    if (extra) {
      apply(state, *extra);
      if (!indist(state)) return false;
    }
    return true;
  }
};

std::string recipe_text(const TrialRecipe& rec, const SampledTable& table,
                        const HeapDomainInstance& inst, const DiffOp* failing) {
  std::ostringstream os;
  os << table.source;
  os << "// levels:";
  for (size_t i = 0; i < rec.init_levels.size(); ++i)
    os << " " << table.refs[i].name << "="
       << (rec.init_levels[i] == Level::High ? "high" : "low");
  os << "\n";
  for (size_t idx : rec.slack) {
    const auto& e = inst.tracked()[idx];
    os << "// widened: " << (e.rel == RelKind::Alias ? "alias(" : "freach(")
       << table.refs[e.r].name << "," << table.refs[e.s].name << ")\n";
  }
  for (const auto& t : rec.field_tweaks)
    os << "// second heap: " << table.refs[t.ref].name << "." << t.field << " = " << t.value
       << "\n";
  for (const auto& t : rec.edge_tweaks)
    os << "// second heap: " << table.refs[t.ref].name << "." << t.field << " -> "
       << table.refs[t.target].name << "\n";
  os << "method repro(";
  for (size_t i = 0; i < table.refs.size(); ++i)
    os << (i ? ", " : "") << table.refs[i].type << " " << table.refs[i].name;
  os << ") {\n";
  for (const auto& op : rec.setup) os << "  " << op.text(table.refs) << ";\n";
  os << "  // the heaps diverge here (high part only)\n";
  for (const auto& op : rec.chain) os << "  " << op.text(table.refs) << ";\n";
  if (failing) os << "  " << failing->text(table.refs) << "; // violating step\n";
  os << "}\n";
  return os.str();
}

}  // namespace

CheckReport check_secure_abstraction(const std::string& domain,
                                     const AbstractionCheckOptions& opts) {
  CheckReport report;
  report.check = "abstraction";
  report.domain = domain;
  report.seed = opts.seed;
  Rng rng(opts.seed);

  for (uint64_t trial = 0; trial < opts.trials; ++trial) {
    ++report.trials;
    Rng trial_rng = rng.split();

    SampledTable table = sample_table(trial_rng, opts.max_refs);
    heap::ClassHierarchy hier(table.tp);
    auto space = std::make_shared<sym::VarSpace>();
    HeapDomainInstance inst(HeapFamily::by_name(domain), table.refs, hier, *space, false);
    PredicateManager mgr(space);
    DiffContext cx{table, inst, mgr, opts.bug};
    const uint32_t n = inst.ref_count();

    std::vector<std::string> names;
    for (const auto& r : table.refs) names.push_back(r.name);

    TrialRecipe rec;
    {
      // Setup script over one probe heap (shared low values).
      ConcreteHeap probe(names);
      uint32_t steps = trial_rng.range(1, 7);
      for (uint32_t k = 0; k < steps; ++k) {
        std::vector<DiffOp> cand;
        for (uint32_t r = 0; r < n; ++r) {
          cand.push_back({DiffOp::Kind::New, r});
          for (uint32_t s = 0; s < n; ++s) {
            if (s == r) continue;
            if (table.tp.is_subclass(table.refs[s].type, table.refs[r].type))
              cand.push_back({DiffOp::Kind::Copy, r, s});
            if (!probe.is_null(r) && !probe.is_null(s)) {
              for (const auto& [f, cls] : table.tp.all_ref_fields(table.refs[r].type)) {
                if (!table.tp.is_subclass(table.refs[s].type, cls)) continue;
                DiffOp sr{DiffOp::Kind::StoreRef, r, s};
                sr.field = f;
                cand.push_back(sr);
              }
            }
          }
          if (!probe.is_null(r)) {
            for (const auto& [f, t] : table.tp.all_prim_fields(table.refs[r].type)) {
              (void)t;
              DiffOp sp{DiffOp::Kind::StorePrim, r};
              sp.field = f;
              sp.v1 = sp.v2 = static_cast<int64_t>(trial_rng.below(16));
              cand.push_back(sp);
            }
          }
        }
        if (cand.empty()) break;
        DiffOp pick = cand[trial_rng.below(cand.size())];
        cx.apply_concrete(probe, pick, false);
        rec.setup.push_back(pick);
      }
    }

    ConcreteHeap h1(names);
    for (const auto& op : rec.setup) cx.apply_concrete(h1, op, false);

    // Levels: pure per concrete class, closed under reachability.
    rec.init_levels.assign(n, Level::Low);
    for (const auto& cls : h1.partition()) {
      Level l = trial_rng.coin() ? Level::High : Level::Low;
      for (uint32_t r : cls) rec.init_levels[r] = l;
    }
    for (bool changed = true; changed;) {
      changed = false;
      for (uint32_t r = 0; r < n; ++r)
        for (uint32_t s = 0; s < n; ++s)
          if (h1.reaches(r, s) && rec.init_levels[s] == Level::High &&
              rec.init_levels[r] == Level::Low) {
            rec.init_levels[r] = Level::High;
            changed = true;
          }
    }

    // Second heap diverges in the high region only.
    ConcreteHeap h2 = h1;
    auto is_high = [&](uint32_t ref) { return rec.init_levels[ref] == Level::High; };
    for (const auto& cls : h1.partition()) {
      uint32_t rep = cls.front();
      if (!is_high(rep) || h1.is_null(rep)) continue;
      for (const auto& [f, t] : table.tp.all_prim_fields(h1.runtime_type(rep))) {
        (void)t;
        if (!trial_rng.coin()) continue;
        TrialRecipe::FieldTweak tw{rep, f, static_cast<int64_t>(trial_rng.below(16))};
        h2.store_prim(rep, f, FieldValue::of_int(tw.value));
        rec.field_tweaks.push_back(tw);
      }
      for (const auto& [f, cls_name] : table.tp.all_ref_fields(h1.runtime_type(rep))) {
        if (!trial_rng.chance(30)) continue;
        std::vector<uint32_t> targets;
        for (uint32_t s = 0; s < n; ++s)
          if (is_high(s) && !h2.is_null(s) &&
              table.tp.is_subclass(h2.runtime_type(s), cls_name))
            targets.push_back(s);
        if (targets.empty()) continue;
        uint32_t tgt = targets[trial_rng.below(targets.size())];
        h2.store_ref(rep, f, tgt);
        rec.edge_tweaks.push_back({rep, f, tgt});
      }
    }

    // Abstraction: exact relations of both heaps, plus occasional widening.
    Valuation abs;
    for (uint32_t r = 0; r < n; ++r)
      abs.set_bool(inst.level_var(HeapCopy::Cur, r), rec.init_levels[r] == Level::High);
    const auto& tracked = inst.tracked();
    for (size_t i = 0; i < tracked.size(); ++i) {
      const auto& e = tracked[i];
      bool holds = e.rel == RelKind::Alias
                       ? (h1.aliased(e.r, e.s) || h2.aliased(e.r, e.s))
                       : (h1.reaches(e.r, e.s) || h2.reaches(e.r, e.s));
      if (!holds && trial_rng.chance(10)) {
        rec.slack.push_back(i);
        holds = true;
      }
      abs.set_bool(*inst.rel_var(HeapCopy::Cur, e.rel, e.r, e.s), holds);
    }
    // The second heap's rewires may create reach facts for low observers; the
    // level closure must still hold, otherwise the sample is not a valid
    // calling context.
    bool closed = true;
    for (uint32_t r = 0; r < n && closed; ++r)
      for (uint32_t s = 0; s < n && closed; ++s)
        if (h2.reaches(r, s) && is_high(s) && !is_high(r)) closed = false;

    DiffState st{std::move(h1), std::move(h2), abs};
    if (!closed || !cx.indist(st)) {
      ++report.skipped;
      continue;
    }

    bool violated = false;
    for (uint32_t step = 0; step <= opts.chain_length && !violated; ++step) {
      std::vector<DiffOp> cand = cx.candidates(st, trial_rng);
      for (const auto& op : cand) {
        ++report.cases;
        DiffState probe = st;
        cx.apply(probe, op);
        if (cx.indist(probe)) continue;
        violated = true;
        // Minimize before reporting.
        TrialRecipe best = rec;
        DiffOp failing = op;
        for (;;) {
          bool shrunk = false;
          for (size_t i = 0; i < best.chain.size() && !shrunk; ++i) {
            TrialRecipe t = best;
            t.chain.erase(t.chain.begin() + i);
            if (!cx.replay_clean(t, &failing)) {
              best = t;
              shrunk = true;
            }
          }
          for (size_t i = 0; i < best.setup.size() && !shrunk; ++i) {
            TrialRecipe t = best;
            t.setup.erase(t.setup.begin() + i);
            if (!cx.replay_clean(t, &failing)) {
              best = t;
              shrunk = true;
            }
          }
          if (!shrunk) break;
        }
        report.violations.push_back(
            {"operation '" + op.text(table.refs) + "' breaks indistinguishability (trial " +
                 std::to_string(trial) + ")",
             recipe_text(best, table, inst, &failing)});
        break;
      }
      if (violated) break;
      if (step == opts.chain_length) break;
      std::vector<DiffOp> cand2 = cx.candidates(st, trial_rng);
      if (cand2.empty()) break;
      DiffOp pick = cand2[trial_rng.below(cand2.size())];
      cx.apply(st, pick);
      rec.chain.push_back(pick);
    }
    if (report.violations.size() >= opts.max_violations) {
      report.notes.push_back("stopped after " + std::to_string(report.trials) + " trials");
      break;
    }
  }
  return report;
}

// ===========================================================================
// Noninterference.

namespace {

// Primitive values biased toward branch boundaries so divergent secrets
// actually flip conditions.
int64_t sample_prim(Rng& rng) {
  uint64_t pick = rng.below(10);
  if (pick < 5) return static_cast<int64_t>(rng.below(2));
  if (pick < 8) return static_cast<int64_t>(rng.below(8));
  return static_cast<int64_t>(rng.below(32));
}

}  // namespace

CheckReport check_noninterference(const sir::TypedProgram& tp, const std::string& method,
                                  const scfg::EncodedMethod& enc, const infer::Guard& guard,
                                  const NiCheckOptions& opts) {
  CheckReport report;
  report.check = "noninterference";
  report.domain = guard.domain;
  report.seed = opts.seed;
  Rng rng(opts.seed);

  const sir::Method& m = tp.method(method);
  const sir::MethodInfo& info = tp.info(method);
  const auto& hd = *enc.scfg.heap;
  sym::PredicateManager& mgr = *enc.scfg.mgr;
  const uint32_t n = hd.ref_count();

  Predicate effective_guard = opts.override_guard_true ? mgr.top() : guard.formula;
  if (effective_guard.is_false()) {
    report.notes.push_back("guard is unsatisfiable; the property is vacuous for " + method);
    return report;
  }

  std::vector<std::string> names;
  for (uint32_t r = 0; r < n; ++r) names.push_back(hd.refs()[r].name);

  uint64_t produced = 0;
  uint64_t attempts_left = opts.pairs * opts.sample_attempts;
  while (produced < opts.pairs && attempts_left-- > 0) {
    Rng trial_rng = rng.split();

    std::map<std::string, int64_t> args;
    std::map<std::string, Level> typing;
    Level pc = trial_rng.chance(10) ? Level::High : Level::Low;
    for (const auto& d : m.params) {
      typing[d.name] = trial_rng.coin() ? Level::High : Level::Low;
      if (d.type.is_prim()) args[d.name] = sample_prim(trial_rng);
    }

    // Parameter heap structure.
    ConcreteHeap h1(names);
    std::vector<uint32_t> param_refs;
    for (uint32_t r = 0; r < n; ++r)
      if (info.param_names.count(names[r])) param_refs.push_back(r);
    auto prim_fields_of = [&](const std::string& klass) {
      ConcreteHeap::FieldTypes out;
      for (const auto& [f, t] : tp.all_prim_fields(klass)) out[f] = t == sir::PrimType::Bool;
      return out;
    };
    for (uint32_t r : param_refs) {
      if (!trial_rng.chance(80)) continue;  // sometimes a parameter stays null
      bool aliased = false;
      if (trial_rng.chance(30)) {
        for (uint32_t s : param_refs) {
          if (s >= r || h1.is_null(s)) continue;
          if (tp.is_subclass(h1.runtime_type(s), hd.refs()[r].type)) {
            h1.assign_copy(r, s);
            aliased = true;
            break;
          }
        }
      }
      if (!aliased) h1.assign_new(r, hd.refs()[r].type, prim_fields_of(hd.refs()[r].type));
    }
    for (uint32_t r : param_refs) {
      if (h1.is_null(r)) continue;
      for (const auto& [f, cls] : tp.all_ref_fields(h1.runtime_type(r))) {
        if (!trial_rng.coin()) continue;
        std::vector<uint32_t> targets;
        for (uint32_t s : param_refs)
          if (!h1.is_null(s) && tp.is_subclass(h1.runtime_type(s), cls)) targets.push_back(s);
        if (!targets.empty()) h1.store_ref(r, f, targets[trial_rng.below(targets.size())]);
      }
      for (const auto& [f, t] : tp.all_prim_fields(h1.runtime_type(r))) {
        (void)t;
        h1.store_prim(r, f, FieldValue::of_int(static_cast<int64_t>(trial_rng.below(16))));
      }
    }

    // Heap typing: pure per class, closed under reachability.
    std::vector<Level> levels(n, Level::Low);
    for (const auto& cls : h1.partition()) {
      Level l = trial_rng.coin() ? Level::High : Level::Low;
      for (uint32_t r : cls) levels[r] = l;
    }
    for (bool changed = true; changed;) {
      changed = false;
      for (uint32_t r = 0; r < n; ++r)
        for (uint32_t s = 0; s < n; ++s)
          if (h1.reaches(r, s) && levels[s] == Level::High && levels[r] == Level::Low) {
            levels[r] = Level::High;
            changed = true;
          }
    }
    std::map<std::string, Level> heap_levels;
    for (uint32_t r = 0; r < n; ++r) heap_levels[names[r]] = levels[r];

    ProgState st1 = initial_state(enc, tp, method, args, typing, h1, heap_levels, pc);
    for (const auto& e : hd.tracked()) {
      Var var = *hd.rel_var(HeapCopy::Cur, e.rel, e.r, e.s);
      if (!st1.ghost.get_bool(var) && trial_rng.chance(10)) st1.ghost.set_bool(var, true);
    }
    if (!mgr.eval(effective_guard, st1.ghost)) continue;

    // Compatible twin: identical ghost state; high primitive parameters and
    // high classes may differ.
    ProgState st2 = st1;
    for (const auto& d : m.params)
      if (d.type.is_prim() && typing[d.name] == Level::High && trial_rng.chance(75))
        st2.prims[d.name] = sample_prim(trial_rng);
    for (const auto& cls : st1.heap.partition()) {
      uint32_t rep = cls.front();
      if (levels[rep] == Level::Low || st1.heap.is_null(rep)) continue;
      for (const auto& [f, t] : tp.all_prim_fields(st1.heap.runtime_type(rep))) {
        (void)t;
        if (trial_rng.coin())
          st2.heap.store_prim(rep, f,
                              FieldValue::of_int(static_cast<int64_t>(trial_rng.below(16))));
      }
    }
    if (!indistinguishable(st1.heap, st2.heap, levels)) {
      ++report.skipped;
      continue;
    }

    ++produced;
    ++report.trials;
    ++report.cases;

    Trace t1 = run_concrete(enc, tp, method, st1, opts.budget, trial_rng.split());
    Trace t2 = run_concrete(enc, tp, method, st2, opts.budget, trial_rng.split());
    auto lo1 = t1.low_payloads();
    auto lo2 = t2.low_payloads();
    size_t common = std::min(lo1.size(), lo2.size());
    bool prefix_ok =
        std::equal(lo1.begin(), lo1.begin() + static_cast<long>(common), lo2.begin());
    // Termination-insensitive: a strictly shorter sequence is fine only when
    // that run did not halt normally (budget or trap cut it off), or the
    // longer one went on after the shorter halted... a halted run's sequence
    // is complete, so equal-length is required when both halt.
    bool lengths_ok = lo1.size() == lo2.size() ||
                      (lo1.size() < lo2.size() ? t1.status != Trace::Status::Halted
                                               : t2.status != Trace::Status::Halted);
    if (prefix_ok && lengths_ok) continue;

    std::ostringstream repro;
    repro << sir::print_program(tp.program());
    repro << "// method: " << method << ", domain: " << guard.domain << "\n";
    repro << "// pc=" << (pc == Level::High ? "high" : "low");
    for (const auto& [v, l] : typing)
      repro << " " << v << "=" << (l == Level::High ? "high" : "low");
    repro << "\n// prims1:";
    for (const auto& [v, x] : st1.prims) repro << " " << v << "=" << x;
    repro << "\n// prims2:";
    for (const auto& [v, x] : st2.prims) repro << " " << v << "=" << x;
    repro << "\n// heap1: " << st1.heap.describe() << "\n// heap2: " << st2.heap.describe()
          << "\n// run1:";
    for (const auto& p : lo1) repro << " [" << p << "]";
    repro << "\n// run2:";
    for (const auto& p : lo2) repro << " [" << p << "]";
    repro << "\n";
    report.violations.push_back(
        {"low observation sequences are not prefix-related for " + method, repro.str()});
    if (report.violations.size() >= 3) break;
  }
  if (produced < opts.pairs)
    report.notes.push_back("sampler produced " + std::to_string(produced) + " of " +
                           std::to_string(opts.pairs) + " requested pairs");
  return report;
}

}  // namespace heapguard::crt
