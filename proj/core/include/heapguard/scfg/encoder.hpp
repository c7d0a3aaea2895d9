#pragma once

#include <memory>
#include <string>

#include "heapguard/scfg/scfg.hpp"
#include "heapguard/scfg/summary.hpp"
#include "heapguard/sir/cfg.hpp"

namespace heapguard::scfg {

struct EncodeError : std::runtime_error {
  explicit EncodeError(std::string msg) : std::runtime_error(std::move(msg)) {}
};

struct EncodeOptions {
  // Without a summary for a called method, fail; with assume_worst, apply a
  // maximally restrictive havoc summary instead.
  bool assume_worst = false;
  heap::TransformerBug bug = heap::TransformerBug::None;
};

struct EncodedMethod {
  Scfg scfg;
  SafetyInvariant invariant;
  sir::Cfg cfg;
  sir::PostDomTree pdom;
  sir::CdrTable cdrs;
  std::vector<std::string> warnings;
};

/// Applies the translation rules over semantic locations: every statement in
/// nominal mode, the branch/junction machinery for implicit flows, heap
/// transformers from the chosen domain, and summaries at call sites. The
/// initial predicate leaves the calling context free: pc, argument levels,
/// argument heap levels, and relations among arguments.
EncodedMethod encode_method(const sir::TypedProgram& program, const std::string& method_name,
                            const heap::HeapFamily& family, const SummaryTable& summaries,
                            const EncodeOptions& options = {});

}  // namespace heapguard::scfg
