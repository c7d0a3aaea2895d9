#include "heapguard/sir/cfg.hpp"

#include <algorithm>
#include <set>

namespace heapguard::sir {

std::vector<uint32_t> Cfg::analysis_succ(uint32_t n) const {
  std::vector<uint32_t> out;
  for (uint32_t s : succ[n])
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  return out;
}

std::vector<uint32_t> Cfg::real_succ(uint32_t n) const {
  std::vector<uint32_t> out;
  for (uint32_t s : succ[n]) {
    if (is_virtual(n, s)) continue;
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  return out;
}

Cfg build_cfg(const Method& m, const MethodInfo& info) {
  Cfg g;
  g.stmt_count = static_cast<uint32_t>(m.body.size());
  g.succ.assign(g.node_count(), {});
  const uint32_t exit = g.exit_node();

  auto target_of = [&](const std::string& label) { return info.label_index.at(label); };

  for (uint32_t i = 0; i < g.stmt_count; ++i) {
    const Statement& s = m.body[i];
    uint32_t fall = i + 1 < g.stmt_count ? i + 1 : exit;
    switch (s.kind) {
      case StmtKind::Goto:
        g.succ[i] = {target_of(s.goto_label)};
        break;
      case StmtKind::Branch:
        g.succ[i] = {target_of(s.goto_label), fall};  // taken first
        break;
      default:
        g.succ[i] = {fall};
        break;
    }
  }

  // Totalize postdominance: every node must reach exit. Nodes trapped in
  // exit-free cycles get a virtual edge to exit and a warning; the analysis
  // is termination-insensitive, so this does not affect guard soundness.
  for (;;) {
    std::vector<bool> reaches(g.node_count(), false);
    reaches[exit] = true;
    bool changed = true;
    while (changed) {
      changed = false;
      for (uint32_t n = 0; n < g.stmt_count; ++n) {
        if (reaches[n]) continue;
        for (uint32_t s : g.succ[n])
          if (reaches[s]) {
            reaches[n] = true;
            changed = true;
            break;
          }
      }
    }
    uint32_t stuck = UINT32_MAX;
    for (uint32_t n = 0; n < g.stmt_count; ++n)
      if (!reaches[n]) {
        stuck = n;
        break;
      }
    if (stuck == UINT32_MAX) break;
    g.succ[stuck].push_back(exit);
    g.virtual_edges.emplace_back(stuck, exit);
    g.warnings.push_back("statement " + std::to_string(stuck) +
                         " cannot reach the method exit; assuming divergence there");
  }
  return g;
}

PostDomTree postdominator_tree(const Cfg& g) {
  // Cooper–Harvey–Kennedy iterative dominance on the reverse graph.
  const uint32_t n = g.node_count();
  const uint32_t exit = g.exit_node();

  std::vector<std::vector<uint32_t>> pred(n);
  for (uint32_t u = 0; u < n; ++u)
    for (uint32_t v : g.analysis_succ(u)) pred[v].push_back(u);

  // Reverse postorder of the reverse graph, rooted at exit.
  std::vector<uint32_t> order;
  std::vector<bool> visited(n, false);
  std::vector<std::pair<uint32_t, size_t>> stack{{exit, 0}};
  visited[exit] = true;
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < pred[node].size()) {
      uint32_t next = pred[node][idx++];
      if (!visited[next]) {
        visited[next] = true;
        stack.emplace_back(next, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  std::reverse(order.begin(), order.end());  // exit first

  std::vector<uint32_t> rpo_index(n, UINT32_MAX);
  for (uint32_t i = 0; i < order.size(); ++i) rpo_index[order[i]] = i;

  const uint32_t kUndef = UINT32_MAX;
  std::vector<uint32_t> idom(n, kUndef);
  idom[exit] = exit;

  auto intersect = [&](uint32_t a, uint32_t b) {
    while (a != b) {
      while (rpo_index[a] > rpo_index[b]) a = idom[a];
      while (rpo_index[b] > rpo_index[a]) b = idom[b];
    }
    return a;
  };

  bool changed = true;
  while (changed) {
    changed = false;
    for (uint32_t node : order) {
      if (node == exit) continue;
      uint32_t new_idom = kUndef;
      for (uint32_t s : g.analysis_succ(node)) {  // preds in the reverse graph
        if (idom[s] == kUndef) continue;
        new_idom = new_idom == kUndef ? s : intersect(new_idom, s);
      }
      if (new_idom != kUndef && idom[node] != new_idom) {
        idom[node] = new_idom;
        changed = true;
      }
    }
  }

  PostDomTree t;
  t.root = exit;
  t.ipdom = std::move(idom);
  return t;
}

CdrTable compute_cdrs(const Cfg& g, const PostDomTree& t) {
  CdrTable table;
  for (uint32_t b = 0; b < g.stmt_count; ++b) {
    // Branching nodes only, counting multiplicity (a conditional whose arms
    // coincide still branches) but not analysis-only virtual edges.
    size_t real_arcs = 0;
    for (uint32_t s : g.succ[b]) real_arcs += !g.is_virtual(b, s);
    if (real_arcs < 2) continue;
    Cdr r;
    r.inducing = b;
    r.junction = t.ipdom[b];
    std::set<uint32_t> nodes;
    for (uint32_t u : g.analysis_succ(b)) {
      // Nodes on the postdominator chain from each successor up to the
      // junction are exactly those control-dependent on b.
      uint32_t w = u;
      while (w != r.junction) {
        nodes.insert(w);
        w = t.ipdom[w];
      }
    }
    r.nodes.assign(nodes.begin(), nodes.end());
    r.id = static_cast<uint32_t>(table.regions.size()) + 1;
    table.region_of_branch[b] = r.id;
    table.junction_regions[r.junction].push_back(r.id);
    table.regions.push_back(std::move(r));
  }

  // Junction-based regions require proper nesting; partial overlap means the
  // control flow is irreducible for this construction.
  for (size_t i = 0; i < table.regions.size(); ++i) {
    for (size_t j = i + 1; j < table.regions.size(); ++j) {
      const auto& a = table.regions[i].nodes;
      const auto& b = table.regions[j].nodes;
      std::vector<uint32_t> inter;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
      if (inter.empty()) continue;
      if (inter.size() == a.size() || inter.size() == b.size()) continue;
      throw IrreducibleCfg(
          "irreducible control flow: regions of branches at statements " +
          std::to_string(table.regions[i].inducing) + " and " +
          std::to_string(table.regions[j].inducing) + " partially overlap");
    }
  }
  return table;
}

}  // namespace heapguard::sir
