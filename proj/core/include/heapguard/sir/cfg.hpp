#pragma once

// Per-method control-flow graph over statement indices plus a unique exit
// node, the postdominator tree, and control-dependence regions with their
// junctions (one region per branching node).

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "heapguard/sir/typecheck.hpp"

namespace heapguard::sir {

struct Cfg {
  uint32_t stmt_count = 0;
  // succ[n] lists successors; for branch nodes the order is [taken, fallthrough].
  std::vector<std::vector<uint32_t>> succ;
  std::vector<std::string> warnings;
  // Analysis-only edges added so postdominance is total on exit-free cycles;
  // they are not part of the encoded control flow.
  std::vector<std::pair<uint32_t, uint32_t>> virtual_edges;

  uint32_t exit_node() const { return stmt_count; }
  uint32_t node_count() const { return stmt_count + 1; }
  bool is_virtual(uint32_t from, uint32_t to) const {
    for (auto [f, t] : virtual_edges)
      if (f == from && t == to) return true;
    return false;
  }
  /// Successors including virtual edges, deduplicated (for graph algorithms).
  std::vector<uint32_t> analysis_succ(uint32_t n) const;
  /// Real control-flow successors only, deduplicated.
  std::vector<uint32_t> real_succ(uint32_t n) const;
};

Cfg build_cfg(const Method& m, const MethodInfo& info);

struct PostDomTree {
  std::vector<uint32_t> ipdom;  // ipdom[exit] == exit (root)
  uint32_t root = 0;

  bool postdominates(uint32_t a, uint32_t b) const {
    // a postdominates b (reflexively).
    uint32_t n = b;
    for (;;) {
      if (n == a) return true;
      if (n == ipdom[n]) return false;
      n = ipdom[n];
    }
  }
  bool strictly_postdominates(uint32_t a, uint32_t b) const {
    return a != b && postdominates(a, b);
  }
};

PostDomTree postdominator_tree(const Cfg& g);

struct IrreducibleCfg : std::runtime_error {
  explicit IrreducibleCfg(std::string msg) : std::runtime_error(std::move(msg)) {}
};

struct Cdr {
  uint32_t id = 0;  // 1-based; 0 is reserved for "no active region"
  uint32_t inducing = 0;
  uint32_t junction = 0;
  std::vector<uint32_t> nodes;  // control-dependent on the inducing branch, sorted
};

struct CdrTable {
  std::vector<Cdr> regions;  // ordered by inducing node
  std::map<uint32_t, std::vector<uint32_t>> junction_regions;  // node -> region ids
  std::map<uint32_t, uint32_t> region_of_branch;

  const Cdr& region(uint32_t id) const { return regions.at(id - 1); }
  uint32_t region_count() const { return static_cast<uint32_t>(regions.size()); }
  bool is_junction(uint32_t node) const { return junction_regions.count(node) != 0; }
};

/// One region per branching node: the nodes control-dependent on it, bounded
/// by its junction (the immediate postdominator). Throws IrreducibleCfg when
/// two regions partially overlap, which is where the junction-based region
/// structure breaks down.
CdrTable compute_cdrs(const Cfg& g, const PostDomTree& t);

}  // namespace heapguard::sir
