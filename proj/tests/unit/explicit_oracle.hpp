#pragma once

// Explicit-state oracle over a small encoded method: enumerates every
// (location, state-variable valuation), builds the forward transition
// relation by evaluating guards, and answers backward reachability queries
// independently of the symbolic engine.

#include <map>
#include <set>
#include <vector>

#include "heapguard/scfg/encoder.hpp"

namespace heapguard::testing {

struct ExplicitSystem {
  const scfg::EncodedMethod& enc;
  std::vector<sym::Var> vars;       // state variables, fixed order
  std::vector<uint32_t> domains;    // cardinality per variable
  uint64_t state_count = 1;

  explicit ExplicitSystem(const scfg::EncodedMethod& e) : enc(e) {
    for (sym::Var v : e.scfg.state_vars) {
      vars.push_back(v);
      domains.push_back(e.scfg.space->info(v).kind == sym::VarKind::Enum
                            ? e.scfg.space->info(v).cardinality
                            : 2);
      state_count *= domains.back();
    }
  }

  sym::Valuation unpack(uint64_t code) const {
    sym::Valuation v;
    for (size_t i = 0; i < vars.size(); ++i) {
      v.set_enum(vars[i], static_cast<uint32_t>(code % domains[i]));
      code /= domains[i];
    }
    return v;
  }

  uint64_t pack(const sym::Valuation& v) const {
    uint64_t code = 0;
    for (size_t i = vars.size(); i-- > 0;) code = code * domains[i] + v.get(vars[i]);
    return code;
  }

  // Successor under one input choice; asserts determinism.
  std::pair<uint32_t, uint64_t> step(uint32_t loc, uint64_t code, bool choice) const {
    sym::PredicateManager& mgr = *enc.scfg.mgr;
    sym::Valuation v = unpack(code);
    v.set_bool(enc.scfg.choice, choice);
    const scfg::Transition* hit = nullptr;
    for (const auto& t : enc.scfg.delta[loc]) {
      if (!mgr.eval(t.guard, v)) continue;
      if (hit) throw std::logic_error("nondeterministic location");
      hit = &t;
    }
    if (!hit) throw std::logic_error("stuck location");
    sym::Valuation next = unpack(code);
    for (const auto& [vi, rhs] : hit->update.entries()) {
      sym::Var var{vi};
      uint32_t value = rhs.enum_value ? *rhs.enum_value : (mgr.eval(rhs.pred, v) ? 1u : 0u);
      next.set_enum(var, value);
    }
    return {hit->target, pack(next)};
  }

  // All states from which a state in `bad` is reachable (including bad).
  std::set<std::pair<uint32_t, uint64_t>> backward_reach(
      const std::set<std::pair<uint32_t, uint64_t>>& bad) const {
    // Forward edges, then reverse BFS.
    std::map<std::pair<uint32_t, uint64_t>, std::vector<std::pair<uint32_t, uint64_t>>> preds;
    for (uint32_t loc = 0; loc < enc.scfg.location_count(); ++loc) {
      for (uint64_t code = 0; code < state_count; ++code) {
        for (bool choice : {false, true}) {
          auto next = step(loc, code, choice);
          preds[next].push_back({loc, code});
        }
      }
    }
    std::set<std::pair<uint32_t, uint64_t>> seen = bad;
    std::vector<std::pair<uint32_t, uint64_t>> work(bad.begin(), bad.end());
    while (!work.empty()) {
      auto cur = work.back();
      work.pop_back();
      auto it = preds.find(cur);
      if (it == preds.end()) continue;
      for (const auto& p : it->second)
        if (seen.insert(p).second) work.push_back(p);
    }
    return seen;
  }
};

}  // namespace heapguard::testing
