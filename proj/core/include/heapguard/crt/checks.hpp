#pragma once

// Executable ground truth: the inductive-invariant enumeration over abstract
// heap valuations, the randomized indistinguishability-preservation
// differential against the storeless concrete heap, and the randomized
// noninterference test driving the concrete interpreter under synthesized
// guards.

#include <cstdint>
#include <string>
#include <vector>

#include "heapguard/crt/interp.hpp"
#include "heapguard/heap/domain.hpp"
#include "heapguard/infer/guard.hpp"

namespace heapguard::crt {

struct CheckViolation {
  std::string description;
  std::string reproducer;  // minimized, when the check supports it
};

struct CheckReport {
  std::string check;
  std::string domain;
  uint64_t seed = 0;
  uint64_t trials = 0;
  uint64_t cases = 0;     // individual assertions evaluated
  uint64_t skipped = 0;   // trials abandoned by the sampler
  std::vector<CheckViolation> violations;
  std::vector<std::string> notes;

  bool ok() const { return violations.empty(); }
  std::string to_json() const;
};

// ---------------------------------------------------------------------------
// Inductive typing invariants (exhaustive).

struct InductiveOptions {
  // Also require the relational laws every concrete heap obeys (aliasing
  // transitivity and its congruence on field-reach, field-reach
  // transitivity) of the enumerated pre-states.
  bool coherent_prestates = false;
  heap::TransformerBug bug = heap::TransformerBug::None;
  uint32_t max_violations = 5;
};

/// Enumerates every valuation of the relation and level variables satisfying
/// the sound-typing predicates (aliased references carry equal levels;
/// levels never increase along field-reach), applies every transformer with
/// every level argument, and reports valuations whose post-state breaks
/// either predicate. max_refs <= 3 keeps the enumeration exact.
CheckReport check_inductive(const std::string& domain, uint32_t max_refs,
                            const InductiveOptions& opts = {});

// ---------------------------------------------------------------------------
// Indistinguishability preservation (randomized differential).

struct AbstractionCheckOptions {
  uint64_t trials = 10000;
  uint64_t seed = 1;
  uint32_t max_refs = 4;
  uint32_t chain_length = 6;
  heap::TransformerBug bug = heap::TransformerBug::None;
  uint32_t max_violations = 3;
};

/// Per trial: sample a class table, a concrete heap pair indistinguishable
/// under a sampled (consistent, soundly typed) abstract heap, then drive a
/// chain of operations; at every step, every syntactic operation with an
/// admissible level is applied to copies and the posts must remain
/// indistinguishable under the abstract post. Reports carry a minimized
/// reproducer script.
CheckReport check_secure_abstraction(const std::string& domain,
                                     const AbstractionCheckOptions& opts = {});

// ---------------------------------------------------------------------------
// Noninterference (randomized end-to-end).

struct NiCheckOptions {
  uint64_t pairs = 100;   // guard-satisfying compatible pairs per method
  uint64_t budget = 10000;
  uint64_t seed = 1;
  uint32_t sample_attempts = 300;  // rejection-sampling cap per pair
  bool override_guard_true = false;  // unsound control for mutation testing
};

/// Samples compatible initial-state pairs satisfying the method's guard,
/// runs both to the step budget, and requires the low observation sequences
/// to be prefix-related. Methods whose guard is unsatisfiable are vacuous
/// and noted as such.
CheckReport check_noninterference(const sir::TypedProgram& tp, const std::string& method,
                                  const scfg::EncodedMethod& enc, const infer::Guard& guard,
                                  const NiCheckOptions& opts = {});

}  // namespace heapguard::crt
