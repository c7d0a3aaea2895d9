#pragma once

// Backward co-reachability over an encoded method: the least fixed point of
// pre-images above the unsafe states, with per-analysis resource caps.

#include <chrono>
#include <optional>
#include <stdexcept>
#include <vector>

#include "heapguard/scfg/scfg.hpp"

namespace heapguard::infer {

struct StateSet {
  std::vector<sym::Predicate> at;  // one predicate per location

  static StateSet constant(const scfg::Scfg& s, sym::Predicate p) {
    StateSet b;
    b.at.assign(s.location_count(), p);
    return b;
  }
};

struct AnalysisInterrupted : std::runtime_error {
  explicit AnalysisInterrupted(std::string why) : std::runtime_error(std::move(why)) {}
};

struct ResourceLimits {
  std::chrono::milliseconds timeout{std::chrono::milliseconds(300000)};
  size_t node_cap = sym::PredicateManager::kDefaultNodeBudget;
};

/// pre(B)(l) = exists inputs . OR over transitions (guard and B(target)
/// after the transition's simultaneous assignments).
StateSet preimage(const scfg::Scfg& s, const StateSet& b);

struct CoreachOptions {
  ResourceLimits limits;
  bool record_rounds = false;  // keep the synchronous iterates B_0, B_1, ...
};

struct CoreachResult {
  StateSet fixpoint;
  uint32_t iterations = 0;
  std::vector<StateSet> rounds;  // only when recorded
};

/// Least fixed point of B0 ∪ pre(B). The default schedule is a worklist
/// seeded from locations carrying a nontrivial B0 entry; with
/// `record_rounds` the iteration is synchronous so the recorded iterates
/// match the round-by-round trace.
CoreachResult coreach(const scfg::Scfg& s, const StateSet& b0, const CoreachOptions& opts = {});

}  // namespace heapguard::infer
