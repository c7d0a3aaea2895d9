#include "heapguard/infer/coreach.hpp"

#include <set>

namespace heapguard::infer {

using sym::Predicate;

namespace {

Predicate location_preimage(const scfg::Scfg& s, const StateSet& b, uint32_t loc,
                            const std::vector<sym::Var>& inputs) {
  sym::PredicateManager& mgr = *s.mgr;
  Predicate acc = mgr.bottom();
  for (const auto& t : s.delta[loc])
    acc = acc || (t.guard && mgr.substitute(b.at[t.target], t.update));
  return mgr.exists(acc, inputs);
}

struct Deadline {
  std::chrono::steady_clock::time_point end;
  size_t node_cap;
  const sym::PredicateManager& mgr;

  void check() const {
    if (std::chrono::steady_clock::now() > end)
      throw AnalysisInterrupted("analysis exceeded its time budget");
    if (mgr.node_count() > node_cap)
      throw AnalysisInterrupted("analysis exceeded its node budget");
  }
};

}  // namespace

StateSet preimage(const scfg::Scfg& s, const StateSet& b) {
  std::vector<sym::Var> inputs = s.space->input_vars();
  StateSet out;
  out.at.reserve(s.location_count());
  for (uint32_t loc = 0; loc < s.location_count(); ++loc)
    out.at.push_back(location_preimage(s, b, loc, inputs));
  return out;
}

CoreachResult coreach(const scfg::Scfg& s, const StateSet& b0, const CoreachOptions& opts) {
  sym::PredicateManager& mgr = *s.mgr;
  std::vector<sym::Var> inputs = s.space->input_vars();
  Deadline deadline{std::chrono::steady_clock::now() + opts.limits.timeout, opts.limits.node_cap,
                    mgr};

  CoreachResult res;
  res.fixpoint = b0;

  if (opts.record_rounds) {
    res.rounds.push_back(res.fixpoint);
    for (;;) {
      deadline.check();
      StateSet next = preimage(s, res.fixpoint);
      bool changed = false;
      for (uint32_t loc = 0; loc < s.location_count(); ++loc) {
        next.at[loc] = b0.at[loc] || next.at[loc] || res.fixpoint.at[loc];
        changed |= !(next.at[loc] == res.fixpoint.at[loc]);
      }
      ++res.iterations;
      if (!changed) break;
      res.fixpoint = next;
      res.rounds.push_back(res.fixpoint);
    }
    return res;
  }

  // Chaotic iteration: when B grows at a location, its predecessors need a
  // fresh pre-image.
  std::vector<std::vector<uint32_t>> preds(s.location_count());
  for (uint32_t loc = 0; loc < s.location_count(); ++loc)
    for (const auto& t : s.delta[loc]) preds[t.target].push_back(loc);

  std::set<uint32_t> work;
  for (uint32_t loc = 0; loc < s.location_count(); ++loc)
    if (!b0.at[loc].is_false())
      for (uint32_t p : preds[loc]) work.insert(p);

  while (!work.empty()) {
    deadline.check();
    uint32_t loc = *work.begin();
    work.erase(work.begin());
    Predicate pre = location_preimage(s, res.fixpoint, loc, inputs);
    Predicate grown = res.fixpoint.at[loc] || pre;
    ++res.iterations;
    if (grown == res.fixpoint.at[loc]) continue;
    res.fixpoint.at[loc] = grown;
    for (uint32_t p : preds[loc]) work.insert(p);
  }
  return res;
}

}  // namespace heapguard::infer
