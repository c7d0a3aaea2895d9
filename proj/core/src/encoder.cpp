#include "heapguard/scfg/encoder.hpp"

#include <algorithm>

namespace heapguard::scfg {

using heap::HeapCopy;
using heap::HeapDomainInstance;
using heap::HeapOp;
using heap::RelKind;
using sir::Statement;
using sir::StmtKind;
using sym::AssignmentSet;
using sym::Predicate;
using sym::PredicateManager;
using sym::Var;

namespace {

struct Encoder {
  const sir::TypedProgram& tp;
  const sir::Method& m;
  const sir::MethodInfo& info;
  const SummaryTable& summaries;
  const EncodeOptions& options;
  heap::ClassHierarchy hier;

  EncodedMethod out;
  Scfg& s = out.scfg;
  PredicateManager* mgr = nullptr;

  Encoder(const sir::TypedProgram& tp, const sir::Method& m, const sir::MethodInfo& info,
          const SummaryTable& summaries, const EncodeOptions& options)
      : tp(tp), m(m), info(info), summaries(summaries), options(options), hier(tp) {}

  Predicate lev(const std::string& var_name) { return mgr->var(s.var_level.at(var_name)); }
  Predicate pc() { return mgr->var(s.pc); }
  Predicate upg() { return mgr->var(s.upgrade_mode); }
  Predicate choice() { return mgr->var(s.choice); }
  uint32_t ref_of(const std::string& name) { return *s.heap->ref_index(name); }
  Predicate reach(const std::string& name) {
    return s.heap->level_value(*mgr, HeapCopy::Cur, ref_of(name));
  }

  Predicate expr_level(const sir::Expr& e) {
    switch (e.kind) {
      case sir::Expr::Kind::IntLit:
      case sir::Expr::Kind::BoolLit:
        return mgr->bottom();
      case sir::Expr::Kind::Var:
        return lev(e.name);
      case sir::Expr::Kind::Unary:
        return expr_level(*e.lhs);
      case sir::Expr::Kind::Binary:
        return expr_level(*e.lhs) || expr_level(*e.rhs);
      case sir::Expr::Kind::RefEq:
        return lev(e.ref_lhs) || lev(e.ref_rhs);
    }
    return mgr->bottom();
  }

  // (if in upgrade mode then low else l) joined with the context level.
  Predicate mode_level(Predicate l) { return (!upg() && l) || pc(); }

  // Strong update in nominal mode, weak pc-upgrade in upgrade mode.
  AssignmentSet weak_assign(Var target, Predicate l) {
    AssignmentSet a;
    a.set(target, (mgr->ite(upg(), mgr->var(target), l)) || pc());
    return a;
  }

  void build_vars() {
    auto space = std::make_shared<sym::VarSpace>();
    s.space = space;
    s.choice = space->add_bool("choice", /*is_input=*/true);
    s.upgrade_mode = space->add_bool("upg");
    s.region = space->add_enum("region", out.cdrs.region_count() + 1);
    s.pc = space->add_bool("pc");
    for (const auto& d : m.params) s.var_level[d.name] = space->add_bool("lev(" + d.name + ")");
    for (const auto& d : m.locals) s.var_level[d.name] = space->add_bool("lev(" + d.name + ")");

    std::vector<heap::RefDecl> refs;
    for (const auto& r : info.refs) refs.push_back({r, info.vars.at(r).class_name});
    s.heap = std::make_shared<HeapDomainInstance>(
        heap::HeapFamily{family_.name, family_.sensitive, family_.insensitive}, refs, hier,
        *space, /*with_saved_copy=*/true);

    for (Var v : space->all_vars())
      if (!space->info(v).is_input) s.state_vars.push_back(v);

    s.mgr = std::make_shared<PredicateManager>(space);
    mgr = s.mgr.get();
  }

  void build_locations() {
    const uint32_t exit = out.cfg.exit_node();
    for (uint32_t n = 0; n <= exit; ++n) {
      std::string base = n == exit ? "exit" : "l" + std::to_string(n);
      s.add_location({n, false, base});
      if (out.cdrs.is_junction(n)) s.add_location({n, true, base + ":stmt"});
    }
    s.initial = *s.find_location(0, false);
    if (out.cfg.stmt_count == 0) s.initial = *s.find_location(exit, false);
  }

  uint32_t behavior_location(uint32_t node) {
    return out.cdrs.is_junction(node) ? *s.find_location(node, true)
                                      : *s.find_location(node, false);
  }
  uint32_t entry_location(uint32_t node) { return *s.find_location(node, false); }

  void add_transition(uint32_t loc, Predicate g, AssignmentSet t, uint32_t target) {
    s.delta[loc].push_back(Transition{g, std::move(t), target});
  }

  void build_junctions() {
    for (const auto& [node, region_ids] : out.cdrs.junction_regions) {
      uint32_t jloc = *s.find_location(node, false);
      uint32_t bloc = *s.find_location(node, true);
      Predicate any_active = mgr->bottom();
      for (uint32_t rid : region_ids) any_active = any_active || mgr->enum_eq(s.region, rid);
      // Pass through when no region of this junction is active.
      add_transition(jloc, !any_active, {}, bloc);
      // Begin the weak-update walk of an active region, back at its branch.
      for (uint32_t rid : region_ids) {
        AssignmentSet start = s.heap->swap_copies(*mgr);
        start.set(s.upgrade_mode, mgr->top());
        add_transition(jloc, !upg() && mgr->enum_eq(s.region, rid), std::move(start),
                       entry_location(out.cdrs.region(rid).inducing));
      }
      // Finish the walk: restore mode and context, merge the two heaps.
      AssignmentSet end;
      end.set_enum(s.region, 0);
      end.set(s.upgrade_mode, mgr->bottom());
      end.set(s.pc, mgr->bottom());
      end = mgr->merge(end, s.heap->bulk_upgrade(*mgr));
      add_transition(jloc, upg() && any_active, std::move(end), bloc);
    }
  }

  Predicate sink_invariant(const Statement& st) {
    if (st.out_high) return mgr->top();
    Predicate inv = !lev(st.target) && !pc();
    if (info.vars.at(st.target).is_ref()) inv = inv && !reach(st.target);
    return inv;
  }

  void build_statements() {
    const uint32_t exit = out.cfg.exit_node();
    for (uint32_t n = 0; n <= exit; ++n) {
      uint32_t bloc = behavior_location(n);
      if (n == exit) {
        add_transition(bloc, mgr->top(), {}, bloc);
        continue;
      }
      const Statement& st = m.body[n];
      const auto& succs = out.cfg.succ[n];
      uint32_t fall = entry_location(succs.empty() ? exit : succs[0]);

      switch (st.kind) {
        case StmtKind::Goto:
          add_transition(bloc, mgr->top(), {}, fall);
          break;

        case StmtKind::OutputPrim:
        case StmtKind::OutputRef:
          out.invariant.at[bloc] = out.invariant.at[bloc] && sink_invariant(st);
          add_transition(bloc, mgr->top(), {}, fall);
          break;

        case StmtKind::Branch: {
          uint32_t taken = entry_location(succs[0]);
          uint32_t fallthrough = entry_location(succs[1]);
          uint32_t rid = out.cdrs.region_of_branch.at(n);
          Predicate cond_level = expr_level(*st.expr);
          Predicate high_entry = !upg() && cond_level && !pc();
          Predicate plain = upg() || !cond_level || pc();
          AssignmentSet snap = s.heap->snapshot(*mgr);
          snap.set_enum(s.region, rid);
          snap.set(s.pc, mgr->top());
          add_transition(bloc, choice() && high_entry, snap, taken);
          add_transition(bloc, choice() && plain, {}, taken);
          add_transition(bloc, !choice() && high_entry, snap, fallthrough);
          add_transition(bloc, !choice() && plain, {}, fallthrough);
          break;
        }

        case StmtKind::AssignExpr:
          add_transition(bloc, mgr->top(),
                         weak_assign(s.var_level.at(st.target), expr_level(*st.expr)), fall);
          break;

        case StmtKind::LoadPrim:
          add_transition(
              bloc, mgr->top(),
              weak_assign(s.var_level.at(st.target), lev(st.source) || reach(st.source)), fall);
          break;

        case StmtKind::CopyRef: {
          AssignmentSet t = weak_assign(s.var_level.at(st.target), lev(st.source));
          t = mgr->merge(t, s.heap->heap_transformer(
                                *mgr,
                                {HeapOp::Kind::AssignCopy, ref_of(st.target), ref_of(st.source)},
                                std::nullopt, options.bug));
          add_transition(bloc, mgr->top(), std::move(t), fall);
          break;
        }

        case StmtKind::LoadRef: {
          AssignmentSet t =
              weak_assign(s.var_level.at(st.target), lev(st.source) || reach(st.source));
          t = mgr->merge(t, s.heap->heap_transformer(
                                *mgr,
                                {HeapOp::Kind::AssignLoad, ref_of(st.target), ref_of(st.source)},
                                std::nullopt, options.bug));
          add_transition(bloc, mgr->top(), std::move(t), fall);
          break;
        }

        case StmtKind::NewRef: {
          AssignmentSet t = weak_assign(s.var_level.at(st.target), mgr->bottom());
          t = mgr->merge(t, s.heap->heap_transformer(
                                *mgr, {HeapOp::Kind::MutateNew, ref_of(st.target), 0}, pc(),
                                options.bug));
          add_transition(bloc, mgr->top(), std::move(t), fall);
          break;
        }

        case StmtKind::NullRef: {
          AssignmentSet t = weak_assign(s.var_level.at(st.target), mgr->bottom());
          t = mgr->merge(t, s.heap->heap_transformer(
                                *mgr, {HeapOp::Kind::AssignNull, ref_of(st.target), 0},
                                std::nullopt, options.bug));
          add_transition(bloc, mgr->top(), std::move(t), fall);
          break;
        }

        case StmtKind::StorePrim: {
          AssignmentSet t = s.heap->heap_transformer(
              *mgr, {HeapOp::Kind::MutatePrim, ref_of(st.target), 0},
              mode_level(expr_level(*st.expr)), options.bug);
          add_transition(bloc, mgr->top(), std::move(t), fall);
          break;
        }

        case StmtKind::StoreRef: {
          AssignmentSet t = s.heap->heap_transformer(
              *mgr, {HeapOp::Kind::MutateRefStore, ref_of(st.target), ref_of(st.source)},
              mode_level(lev(st.source) || reach(st.source)), options.bug);
          add_transition(bloc, mgr->top(), std::move(t), fall);
          break;
        }

        case StmtKind::Call:
          build_call(bloc, st, fall);
          break;
      }
    }
  }

  // Formula over stub formals, instantiated against the actuals of one call
  // site (with pc seen through the receiver's level).
  struct CallContext {
    std::map<std::string, std::string> actual;  // formal -> caller variable
    Predicate pc_value;
  };

  Predicate eval_formula(const Formula& f, const CallContext& cx) {
    switch (f.kind) {
      case Formula::Kind::LevLow:
        return mgr->bottom();
      case Formula::Kind::LevHigh:
        return mgr->top();
      case Formula::Kind::LevPc:
        return cx.pc_value;
      case Formula::Kind::LevVar:
        return lev(cx.actual.at(f.arg0));
      case Formula::Kind::LevReach:
        return reach(cx.actual.at(f.arg0));
      case Formula::Kind::Join:
        return eval_formula(*f.a, cx) || eval_formula(*f.b, cx);
      case Formula::Kind::BoolLit:
        return mgr->constant(f.bool_value);
      case Formula::Kind::Alias:
        return s.heap->rel_value(*mgr, HeapCopy::Cur, RelKind::Alias,
                                 ref_of(cx.actual.at(f.arg0)), ref_of(cx.actual.at(f.arg1)));
      case Formula::Kind::Freach:
        return s.heap->rel_value(*mgr, HeapCopy::Cur, RelKind::FieldReach,
                                 ref_of(cx.actual.at(f.arg0)), ref_of(cx.actual.at(f.arg1)));
      case Formula::Kind::Eq:
        return mgr->equiv(eval_formula(*f.a, cx), eval_formula(*f.b, cx));
      case Formula::Kind::And:
        return eval_formula(*f.a, cx) && eval_formula(*f.b, cx);
      case Formula::Kind::Or:
        return eval_formula(*f.a, cx) || eval_formula(*f.b, cx);
      case Formula::Kind::Not:
        return !eval_formula(*f.a, cx);
      case Formula::Kind::Ite:
        return mgr->ite(eval_formula(*f.c, cx), eval_formula(*f.a, cx), eval_formula(*f.b, cx));
    }
    return mgr->bottom();
  }

  AssignmentSet eval_effect(const MethodSummary& sum, const CallContext& cx) {
    AssignmentSet acc;
    for (const auto& ea : sum.effects) {
      AssignmentSet one;
      switch (ea.target) {
        case EffectAssign::Target::Ret:
          continue;  // call results are discarded in this language
        case EffectAssign::Target::Lev:
          one.set(s.var_level.at(cx.actual.at(ea.arg0)), eval_formula(*ea.rhs, cx));
          break;
        case EffectAssign::Target::Reach:
          one.set(s.heap->level_var(HeapCopy::Cur, ref_of(cx.actual.at(ea.arg0))),
                  eval_formula(*ea.rhs, cx));
          break;
        case EffectAssign::Target::Alias:
        case EffectAssign::Target::Freach: {
          RelKind rel = ea.target == EffectAssign::Target::Alias ? RelKind::Alias
                                                                 : RelKind::FieldReach;
          auto var = s.heap->rel_var(HeapCopy::Cur, rel, ref_of(cx.actual.at(ea.arg0)),
                                     ref_of(cx.actual.at(ea.arg1)));
          if (!var) continue;  // pre-analysis constant stands
          one.set(*var, eval_formula(*ea.rhs, cx));
          break;
        }
      }
      acc = mgr->merge(acc, one);
    }
    return acc;
  }

  void build_call(uint32_t bloc, const Statement& st, uint32_t fall) {
    const std::string& recv_class = info.vars.at(st.target).class_name;

    // Virtual dispatch: any declared override in the receiver's subtype
    // family, plus the nearest inherited summary.
    std::vector<const MethodSummary*> candidates;
    for (const auto& cls : hier.family(recv_class))
      if (const MethodSummary* ms = summaries.find(cls, st.method)) candidates.push_back(ms);
    if (!summaries.find(recv_class, st.method)) {
      const sir::ClassDecl* cur = &tp.class_decl(recv_class);
      while (cur->parent) {
        cur = &tp.class_decl(*cur->parent);
        if (const MethodSummary* ms = summaries.find(cur->name, st.method)) {
          candidates.push_back(ms);
          break;
        }
      }
    }
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    Predicate call_pc = pc() || lev(st.target);

    if (candidates.empty()) {
      if (!options.assume_worst)
        throw EncodeError("no summary for method '" + recv_class + "." + st.method +
                          "' (see --assume-worst)");
      // Havoc: arguments and receiver may have been raised and related
      // arbitrarily; callers get the most restrictive consistent view.
      AssignmentSet t;
      std::vector<uint32_t> arg_refs{ref_of(st.target)};
      for (const auto& a : st.args) {
        if (info.vars.at(a).is_ref()) {
          arg_refs.push_back(ref_of(a));
          t.set(s.heap->level_var(HeapCopy::Cur, ref_of(a)), mgr->top());
        } else {
          t.set(s.var_level.at(a), mgr->top());
        }
      }
      t.set(s.heap->level_var(HeapCopy::Cur, ref_of(st.target)), mgr->top());
      AssignmentSet rels;
      for (size_t i = 0; i < arg_refs.size(); ++i)
        for (size_t j = 0; j < arg_refs.size(); ++j) {
          for (RelKind rel : {RelKind::Alias, RelKind::FieldReach}) {
            auto var = s.heap->rel_var(HeapCopy::Cur, rel, arg_refs[i], arg_refs[j]);
            if (!var || rels.assigns(*var)) continue;
            rels.set(*var, mgr->top());
          }
        }
      t = mgr->merge(t, rels);
      out.warnings.push_back("assumed worst-case summary for '" + recv_class + "." + st.method +
                             "'");
      add_transition(bloc, mgr->top(), std::move(t), fall);
      return;
    }

    Predicate guard_inv = mgr->top();
    AssignmentSet effect;
    for (const MethodSummary* ms : candidates) {
      if (ms->formals.size() != st.args.size())
        throw EncodeError("call to '" + recv_class + "." + st.method + "' passes " +
                          std::to_string(st.args.size()) + " arguments, summary expects " +
                          std::to_string(ms->formals.size()));
      CallContext cx;
      cx.pc_value = call_pc;
      for (size_t i = 0; i < ms->formals.size(); ++i) {
        const auto& formal = ms->formals[i];
        const auto& actual = st.args[i];
        if (formal.is_ref != info.vars.at(actual).is_ref())
          throw EncodeError("argument '" + actual + "' of call to '" + recv_class + "." +
                            st.method + "' does not match the summary signature");
        cx.actual[formal.name] = actual;
      }
      guard_inv = guard_inv && eval_formula(*ms->guard, cx);
      effect = mgr->merge(effect, eval_effect(*ms, cx));
    }
    out.invariant.at[bloc] = out.invariant.at[bloc] && guard_inv;
    add_transition(bloc, mgr->top(), std::move(effect), fall);
  }

  void build_init() {
    sym::Valuation b;
    b.set_bool(s.upgrade_mode, false);
    b.set_enum(s.region, 0);
    std::vector<uint32_t> local_refs;
    for (const auto& d : m.locals) {
      b.set_bool(s.var_level.at(d.name), false);
      if (d.type.is_ref()) local_refs.push_back(ref_of(d.name));
    }
    for (uint32_t r : local_refs) b.set_bool(s.heap->level_var(HeapCopy::Cur, r), false);
    for (const auto& e : s.heap->tracked()) {
      bool touches_local = std::find(local_refs.begin(), local_refs.end(), e.r) !=
                               local_refs.end() ||
                           std::find(local_refs.begin(), local_refs.end(), e.s) !=
                               local_refs.end();
      if (touches_local)
        b.set_bool(*s.heap->rel_var(HeapCopy::Cur, e.rel, e.r, e.s), false);
    }
    for (Var v : s.heap->copy_vars(HeapCopy::Saved)) b.set_bool(v, false);

    Predicate x0 = mgr->top();
    for (const auto& [vi, value] : b.values()) {
      Var v{vi};
      const auto& vinfo = s.space->info(v);
      x0 = x0 && (vinfo.kind == sym::VarKind::Boolean
                      ? (value ? mgr->var(v) : !mgr->var(v))
                      : mgr->enum_eq(v, value));
    }
    s.init_bindings = std::move(b);
    s.init_pred = x0;
  }

  heap::HeapFamily family_;

  EncodedMethod run(const heap::HeapFamily& family) {
    family_ = family;
    out.cfg = sir::build_cfg(m, info);
    out.pdom = sir::postdominator_tree(out.cfg);
    out.cdrs = sir::compute_cdrs(out.cfg, out.pdom);
    out.warnings = out.cfg.warnings;
    build_vars();
    build_locations();
    out.invariant.at.assign(s.location_count(), mgr->top());
    build_junctions();
    build_statements();
    build_init();
    return std::move(out);
  }
};

}  // namespace

EncodedMethod encode_method(const sir::TypedProgram& program, const std::string& method_name,
                            const heap::HeapFamily& family, const SummaryTable& summaries,
                            const EncodeOptions& options) {
  if (!program.has_method(method_name))
    throw EncodeError("no method named '" + method_name + "'");
  Encoder enc(program, program.method(method_name), program.info(method_name), summaries,
              options);
  return enc.run(family);
}

ValidationReport validate_scfg(const Scfg& s) {
  ValidationReport report;
  PredicateManager& mgr = *s.mgr;
  for (uint32_t loc = 0; loc < s.location_count(); ++loc) {
    const auto& ts = s.delta[loc];
    Predicate cover = mgr.bottom();
    for (size_t i = 0; i < ts.size(); ++i) {
      cover = cover || ts[i].guard;
      for (size_t j = i + 1; j < ts.size(); ++j) {
        if (!(ts[i].guard && ts[j].guard).is_false())
          report.issues.push_back(
              {loc, "transitions " + std::to_string(i) + " and " + std::to_string(j) +
                        " of " + s.locations[loc].name + " are simultaneously enabled"});
      }
    }
    if (!cover.is_true())
      report.issues.push_back(
          {loc, "guards of " + s.locations[loc].name + " do not cover all valuations"});
  }
  return report;
}

}  // namespace heapguard::scfg
