#include "heapguard/crt/interp.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace heapguard::crt {

using heap::HeapCopy;
using heap::RelKind;
using scfg::Scfg;
using sir::Statement;
using sir::StmtKind;

namespace {

struct Trap {
  std::string reason;
};

int64_t eval_expr(const sir::Expr& e, const std::map<std::string, int64_t>& prims,
                  const ConcreteHeap& heap,
                  const std::map<std::string, uint32_t>& ref_index) {
  switch (e.kind) {
    case sir::Expr::Kind::IntLit:
      return e.int_value;
    case sir::Expr::Kind::BoolLit:
      return e.bool_value ? 1 : 0;
    case sir::Expr::Kind::Var:
      return prims.at(e.name);
    case sir::Expr::Kind::Unary: {
      int64_t v = eval_expr(*e.lhs, prims, heap, ref_index);
      return e.op == "-" ? -v : (v ? 0 : 1);
    }
    case sir::Expr::Kind::Binary: {
      int64_t a = eval_expr(*e.lhs, prims, heap, ref_index);
      int64_t b = eval_expr(*e.rhs, prims, heap, ref_index);
      const std::string& op = e.op;
      if (op == "+") return a + b;
      if (op == "-") return a - b;
      if (op == "*") return a * b;
      if (op == "/") {
        if (b == 0) throw Trap{"division by zero"};
        return a / b;
      }
      if (op == "<") return a < b;
      if (op == "<=") return a <= b;
      if (op == ">") return a > b;
      if (op == ">=") return a >= b;
      if (op == "==") return a == b;
      if (op == "!=") return a != b;
      if (op == "&&") return (a && b) ? 1 : 0;
      if (op == "||") return (a || b) ? 1 : 0;
      throw std::logic_error("unknown operator " + op);
    }
    case sir::Expr::Kind::RefEq:
      return heap.aliased(ref_index.at(e.ref_lhs), ref_index.at(e.ref_rhs)) ? 1 : 0;
  }
  return 0;
}

}  // namespace

ProgState initial_state(const scfg::EncodedMethod& enc, const sir::TypedProgram& tp,
                        const std::string& method, const std::map<std::string, int64_t>& args,
                        const std::map<std::string, Level>& typing, ConcreteHeap heap,
                        const std::map<std::string, Level>& heap_levels, Level pc_level) {
  const Scfg& s = enc.scfg;
  const sir::MethodInfo& info = tp.info(method);
  const sir::Method& m = tp.method(method);

  ProgState st{s.initial, {}, {}, {}, std::move(heap)};

  for (const auto& d : m.params) {
    st.typing[d.name] = typing.at(d.name);
    if (d.type.is_prim()) st.prims[d.name] = args.at(d.name);
  }
  for (const auto& d : m.locals) {
    st.typing[d.name] = Level::Low;
    if (d.type.is_prim()) st.prims[d.name] = 0;
  }

  sym::Valuation& g = st.ghost;
  g.set_bool(s.choice, false);
  g.set_bool(s.upgrade_mode, false);
  g.set_enum(s.region, 0);
  g.set_bool(s.pc, pc_level == Level::High);
  for (const auto& [name, var] : s.var_level)
    g.set_bool(var, st.typing.at(name) == Level::High);

  const auto& hd = *s.heap;
  for (uint32_t r = 0; r < hd.ref_count(); ++r) {
    Level hl = Level::Low;
    auto it = heap_levels.find(hd.refs()[r].name);
    if (it != heap_levels.end()) hl = it->second;
    bool is_param = info.param_names.count(hd.refs()[r].name) != 0;
    g.set_bool(hd.level_var(HeapCopy::Cur, r), is_param && hl == Level::High);
    g.set_bool(hd.level_var(HeapCopy::Saved, r), false);
  }
  for (const auto& e : hd.tracked()) {
    bool holds = e.rel == RelKind::Alias ? st.heap.aliased(e.r, e.s) : st.heap.reaches(e.r, e.s);
    g.set_bool(*hd.rel_var(HeapCopy::Cur, e.rel, e.r, e.s), holds);
    g.set_bool(*hd.rel_var(HeapCopy::Saved, e.rel, e.r, e.s), false);
  }
  return st;
}

std::string serialize_reachable(const ConcreteHeap& h, uint32_t root,
                                const std::vector<Level>& ghost_levels) {
  // Class level: join over the references naming it.
  auto class_level = [&](uint32_t some_ref) {
    Level l = Level::Low;
    for (uint32_t r = 0; r < h.ref_count(); ++r)
      if (h.aliased(r, some_ref)) l = join(l, ghost_levels[r]);
    return l;
  };

  std::ostringstream os;
  std::map<uint32_t, int> index;       // representative ref -> BFS number
  std::vector<uint32_t> order;         // representatives in BFS order
  auto rep_of = [&](uint32_t r) {
    for (uint32_t x = 0; x < h.ref_count(); ++x)
      if (h.aliased(x, r)) return x;
    return r;
  };

  uint32_t depth_cap = h.ref_count() + 1;
  std::vector<std::pair<uint32_t, uint32_t>> queue{{rep_of(root), 0}};
  index[rep_of(root)] = 0;
  order.push_back(rep_of(root));
  for (size_t qi = 0; qi < queue.size(); ++qi) {
    auto [rep, depth] = queue[qi];
    if (depth >= depth_cap) continue;
    if (class_level(rep) == Level::High) continue;
    for (const auto& [f, target] : h.edges_of(rep)) {
      (void)target;
      uint32_t trep = rep_of([&] {
        for (uint32_t r = 0; r < h.ref_count(); ++r)
          if (h.field_alias(rep, f, r)) return r;
        return rep;
      }());
      if (!index.count(trep)) {
        index[trep] = static_cast<int>(order.size());
        order.push_back(trep);
        queue.emplace_back(trep, depth + 1);
      }
    }
  }

  for (size_t i = 0; i < order.size(); ++i) {
    uint32_t rep = order[i];
    bool high = class_level(rep) == Level::High;
    os << "#" << i;
    if (high) {
      os << "[high]";
      continue;
    }
    os << "{";
    bool first = true;
    for (const auto& [f, v] : h.prim_fields_of(rep)) {
      os << (first ? "" : ",") << f << "=";
      first = false;
      switch (v.kind) {
        case FieldValue::Kind::Int:
        case FieldValue::Kind::Bool:
          os << v.num;
          break;
        case FieldValue::Kind::Default:
          os << 0;
          break;
        case FieldValue::Kind::Und:
          os << "und";
          break;
      }
    }
    for (const auto& [f, target] : h.edges_of(rep)) {
      (void)target;
      uint32_t trep = rep_of([&] {
        for (uint32_t r = 0; r < h.ref_count(); ++r)
          if (h.field_alias(rep, f, r)) return r;
        return rep;
      }());
      os << (first ? "" : ",") << f << "->";
      first = false;
      auto it = index.find(trep);
      if (it == index.end())
        os << "?";
      else
        os << "#" << it->second;
    }
    os << "}";
  }
  return os.str();
}

Trace run_concrete(const scfg::EncodedMethod& enc, const sir::TypedProgram& tp,
                   const std::string& method, ProgState state, uint64_t budget,
                   support::Rng rng, ProgState* final_state) {
  const Scfg& s = enc.scfg;
  const sir::Method& m = tp.method(method);
  sym::PredicateManager& mgr = *s.mgr;
  const auto& hd = *s.heap;

  std::map<std::string, uint32_t> ref_index;
  for (uint32_t r = 0; r < hd.ref_count(); ++r) ref_index[hd.refs()[r].name] = r;

  const uint32_t exit_node = enc.cfg.exit_node();
  auto ghost_levels = [&]() {
    std::vector<Level> out;
    for (uint32_t r = 0; r < hd.ref_count(); ++r)
      out.push_back(state.ghost.get_bool(hd.level_var(HeapCopy::Cur, r)) ? Level::High
                                                                         : Level::Low);
    return out;
  };

  Trace trace;
  try {
    for (;;) {
      const scfg::LocationInfo& li = s.locations[state.location];
      bool is_junction_step = enc.cdrs.is_junction(li.node) && !li.behavior;
      bool behaves = !is_junction_step;
      bool nominal = !state.ghost.get_bool(s.upgrade_mode);

      if (li.node == exit_node && behaves) {
        trace.status = Trace::Status::Halted;
        if (final_state) *final_state = std::move(state);
        return trace;
      }
      if (trace.steps >= budget) {
        trace.status = Trace::Status::BudgetExhausted;
        if (final_state) *final_state = std::move(state);
        return trace;
      }
      ++trace.steps;

      const Statement* st = li.node < exit_node ? &m.body[li.node] : nullptr;

      // Resolve the branch input: concretely in nominal mode, by coin in an
      // upgrade walk; elsewhere it is irrelevant.
      bool choice_value = false;
      if (behaves && st && st->kind == StmtKind::Branch) {
        if (nominal)
          choice_value =
              eval_expr(*st->expr, state.prims, state.heap, ref_index) != 0;
        else
          choice_value = rng.coin();
      }
      state.ghost.set_bool(s.choice, choice_value);

      // Program effects happen in nominal mode only.
      if (behaves && nominal && st) {
        switch (st->kind) {
          case StmtKind::AssignExpr:
            state.prims[st->target] = eval_expr(*st->expr, state.prims, state.heap, ref_index);
            break;
          case StmtKind::LoadPrim: {
            uint32_t r = ref_index.at(st->source);
            if (state.heap.is_null(r)) throw Trap{"null dereference at " + st->source};
            auto v = state.heap.load_prim(r, st->field);
            if (!v || v->is_und()) throw Trap{"read of undefined field " + st->field};
            state.prims[st->target] =
                v->read(tp.prim_field(state.heap.runtime_type(r), st->field) ==
                        sir::PrimType::Bool);
            break;
          }
          case StmtKind::StorePrim: {
            uint32_t r = ref_index.at(st->target);
            if (state.heap.is_null(r)) throw Trap{"null dereference at " + st->target};
            int64_t v = eval_expr(*st->expr, state.prims, state.heap, ref_index);
            bool is_bool =
                tp.prim_field(state.heap.runtime_type(r), st->field) == sir::PrimType::Bool;
            state.heap.store_prim(r, st->field,
                                  is_bool ? FieldValue::of_bool(v != 0) : FieldValue::of_int(v));
            break;
          }
          case StmtKind::CopyRef:
            state.heap.assign_copy(ref_index.at(st->target), ref_index.at(st->source));
            break;
          case StmtKind::LoadRef: {
            uint32_t src = ref_index.at(st->source);
            if (state.heap.is_null(src)) throw Trap{"null dereference at " + st->source};
            std::string static_type =
                *tp.ref_field(state.heap.runtime_type(src), st->field);
            state.heap.assign_load(ref_index.at(st->target), src, st->field, static_type);
            break;
          }
          case StmtKind::StoreRef: {
            uint32_t r = ref_index.at(st->target);
            if (state.heap.is_null(r)) throw Trap{"null dereference at " + st->target};
            state.heap.store_ref(r, st->field, ref_index.at(st->source));
            break;
          }
          case StmtKind::NewRef: {
            ConcreteHeap::FieldTypes fields;
            for (const auto& [f, t] : tp.all_prim_fields(st->klass))
              fields[f] = t == sir::PrimType::Bool;
            state.heap.assign_new(ref_index.at(st->target), st->klass, fields);
            break;
          }
          case StmtKind::NullRef:
            state.heap.assign_null(ref_index.at(st->target));
            break;
          case StmtKind::OutputPrim:
            trace.observations.push_back(
                {st->out_high ? Level::High : Level::Low,
                 std::to_string(state.prims.at(st->target))});
            break;
          case StmtKind::OutputRef: {
            uint32_t r = ref_index.at(st->target);
            trace.observations.push_back(
                {st->out_high ? Level::High : Level::Low,
                 serialize_reachable(state.heap, r, ghost_levels())});
            break;
          }
          case StmtKind::Call:
            throw Trap{"method calls are not interpreted concretely"};
          case StmtKind::Goto:
          case StmtKind::Branch:
            break;
        }
      }

      // Exactly one security-semantics transition must be enabled.
      const scfg::Transition* enabled = nullptr;
      for (const auto& t : s.delta[state.location]) {
        if (!mgr.eval(t.guard, state.ghost)) continue;
        if (enabled) throw std::logic_error("two transitions enabled at " + li.name);
        enabled = &t;
      }
      if (!enabled) throw std::logic_error("no transition enabled at " + li.name);

      // Simultaneous ghost update: right-hand sides read the pre-state.
      std::vector<std::pair<sym::Var, uint32_t>> updates;
      for (const auto& [vi, rhs] : enabled->update.entries()) {
        sym::Var v{vi};
        uint32_t value = rhs.enum_value ? *rhs.enum_value
                                        : (mgr.eval(rhs.pred, state.ghost) ? 1u : 0u);
        updates.emplace_back(v, value);
      }
      for (auto& [v, value] : updates) {
        if (s.space->info(v).kind == sym::VarKind::Enum)
          state.ghost.set_enum(v, value);
        else
          state.ghost.set_bool(v, value != 0);
      }
      state.location = enabled->target;
    }
  } catch (const Trap& t) {
    trace.status = Trace::Status::Trapped;
    trace.trap_reason = t.reason;
    if (final_state) *final_state = std::move(state);
    return trace;
  }
}

}  // namespace heapguard::crt
