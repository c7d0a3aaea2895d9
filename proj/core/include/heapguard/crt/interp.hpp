#pragma once

// Concrete interpreter of the full semantics: program statements execute in
// nominal mode over primitive valuations and the storeless concrete heap,
// while the encoded security semantics evolves in lockstep as ghost state.
// Upgrade-analysis excursions walk the control structure without program
// effects; their nondeterministic branching is resolved by a seeded RNG.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "heapguard/crt/heap.hpp"
#include "heapguard/scfg/encoder.hpp"
#include "heapguard/support/rng.hpp"

namespace heapguard::crt {

struct Observation {
  Level channel = Level::Low;
  std::string payload;  // canonical serialization
};

struct Trace {
  enum class Status : uint8_t { Halted, BudgetExhausted, Trapped };
  std::vector<Observation> observations;
  Status status = Trace::Status::Halted;
  std::string trap_reason;
  uint64_t steps = 0;

  std::vector<std::string> low_payloads() const {
    std::vector<std::string> out;
    for (const auto& o : observations)
      if (o.channel == Level::Low) out.push_back(o.payload);
    return out;
  }
};

struct ProgState {
  uint32_t location = 0;
  std::map<std::string, int64_t> prims;     // valuation of primitive variables
  std::map<std::string, Level> typing;      // security typing of variables
  sym::Valuation ghost;                     // security-semantics state variables
  ConcreteHeap heap;
};

/// Initial state: locals start null / zero with low typing; parameters take
/// the given values, typing, and heap. The ghost state mirrors the typing,
/// and its relation variables take the heap's concrete relations (optionally
/// widened by the caller afterwards).
ProgState initial_state(const scfg::EncodedMethod& enc, const sir::TypedProgram& tp,
                        const std::string& method, const std::map<std::string, int64_t>& args,
                        const std::map<std::string, Level>& typing, ConcreteHeap heap,
                        const std::map<std::string, Level>& heap_levels, Level pc_level);

/// Deterministic execution for a step budget. Every step asserts that
/// exactly one transition of the security semantics is enabled. When
/// `final_state` is given it receives the state at the end of the run.
Trace run_concrete(const scfg::EncodedMethod& enc, const sir::TypedProgram& tp,
                   const std::string& method, ProgState state, uint64_t budget,
                   support::Rng rng, ProgState* final_state = nullptr);

/// Canonical serialization of the sub-heap visible through r at the given
/// ghost typing: breadth-first over field edges up to depth = reference
/// count, stopping at classes the ghost typing marks high.
std::string serialize_reachable(const ConcreteHeap& h, uint32_t root,
                                const std::vector<Level>& ghost_levels);

}  // namespace heapguard::crt
