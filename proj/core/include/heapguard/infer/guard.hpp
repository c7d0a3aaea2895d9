#pragma once

// End-to-end guard synthesis: encode, co-reach, project onto the calling
// context, classify, and render (text, minimal-cube DNF, JSON).

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "heapguard/infer/coreach.hpp"
#include "heapguard/scfg/encoder.hpp"

namespace heapguard::infer {

enum class GuardClass : uint8_t { SecureAlways, InsecureAlways, Conditional };

std::string to_string(GuardClass c);

struct GuardStats {
  uint32_t locations = 0;
  uint32_t statebits = 0;
  uint32_t iterations = 0;
  uint64_t millis = 0;
};

struct Guard {
  std::string method;
  std::string domain;
  // The manager keeps the predicate's variable space alive.
  std::shared_ptr<sym::PredicateManager> mgr;
  std::shared_ptr<sym::VarSpace> space;
  sym::Predicate formula;  // over calling-context facts only
  GuardClass classification = GuardClass::Conditional;
  bool interrupted = false;
  std::string interrupt_reason;
  GuardStats stats;
  // Relation facts this guard's domain fixed as constants, keyed by the
  // shared atom name; used when moving formulas between domains.
  std::map<std::string, bool> const_facts;
};

struct SynthesisOptions {
  ResourceLimits limits;
  bool assume_worst = false;
  heap::TransformerBug bug = heap::TransformerBug::None;
};

/// Algorithm: encode the method, take the complement of the invariant as the
/// unsafe states, co-reach backwards, then factor the initial-state-bound
/// variables out of the safe entry states. On resource exhaustion the method
/// is reported interrupted with the conservative always-insecure guard.
Guard synthesize_guard(const sir::TypedProgram& program, const std::string& method,
                       const heap::HeapFamily& family, const scfg::SummaryTable& summaries,
                       const SynthesisOptions& options = {});

/// As above but over an already encoded method (shares its manager).
Guard synthesize_guard_from(const scfg::EncodedMethod& enc, std::string method,
                            std::string domain, const ResourceLimits& limits = {});

GuardClass classify_guard(const Guard& g);

enum class GuardFormat : uint8_t { Text, Dnf, Json };

/// Deterministic rendering. Text and DNF name atoms with the stub-formula
/// surface (pc, lev, reach, alias, freach); DNF lists minimal satisfying
/// cubes.
std::string render_guard(const Guard& g, GuardFormat format);

/// The DNF cubes as atom lists (each cube one conjunction).
std::vector<std::vector<std::string>> guard_cubes(const Guard& g);

/// Moves a guard formula into another guard's variable space by matching
/// variable names; throws if a mentioned variable does not exist there.
sym::Predicate transfer_formula(const Guard& from, const Guard& into);

/// Diagnostic: does `stronger`'s guard entail `weaker`'s once both live in
/// the same space (names matched)?
bool guard_implies(const Guard& stronger, const Guard& weaker);

}  // namespace heapguard::infer
