#pragma once

// Seeded generator of well-typed programs in the security IR, used by the
// randomized suites: structured control flow (conditionals and bounded
// loops), a small class table, and plenty of heap traffic and sinks.

#include <string>
#include <vector>

#include "heapguard/support/rng.hpp"

namespace heapguard::gen {

struct GenOptions {
  uint32_t max_classes = 3;
  uint32_t max_ref_fields = 2;
  uint32_t max_prim_fields = 2;
  uint32_t max_refs = 4;   // reference variables per method (params + locals)
  uint32_t max_prims = 3;  // primitive variables per method
  uint32_t max_stmts = 20;
  bool allow_branches = true;
  bool allow_loops = true;
};

/// One self-contained program (class table plus `count` methods named
/// m0, m1, ...) as `.sir` text; always parses and typechecks.
std::string generate_program(const GenOptions& opts, uint32_t method_count, uint64_t seed);

}  // namespace heapguard::gen
