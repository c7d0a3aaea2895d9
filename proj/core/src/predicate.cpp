#include "heapguard/sym/predicate.hpp"

#include <algorithm>
#include <sstream>

namespace heapguard::sym {

Predicate Predicate::operator!() const { return mgr_->negate(*this); }
Predicate Predicate::operator&&(const Predicate& o) const { return mgr_->conj(*this, o); }
Predicate Predicate::operator||(const Predicate& o) const { return mgr_->disj(*this, o); }
bool Predicate::is_true() const { return node_ == 1; }
bool Predicate::is_false() const { return node_ == 0; }

PredicateManager::PredicateManager(std::shared_ptr<const VarSpace> space, size_t node_budget)
    : space_(std::move(space)), node_budget_(node_budget) {
  // Terminal sentinels: 0 = false, 1 = true. The bit field is a sentinel
  // larger than any real bit so terminals sort below all decision nodes.
  nodes_.push_back(Node{UINT32_MAX, 0, 0});
  nodes_.push_back(Node{UINT32_MAX, 1, 1});
}

uint32_t PredicateManager::mk(uint32_t bit, uint32_t lo, uint32_t hi) {
  if (lo == hi) return lo;
  NodeKey key{bit, lo, hi};
  auto it = unique_.find(key);
  if (it != unique_.end()) return it->second;
  if (nodes_.size() >= node_budget_) throw NodeBudgetExceeded{};
  uint32_t id = static_cast<uint32_t>(nodes_.size());
  nodes_.push_back(Node{bit, lo, hi});
  unique_.emplace(key, id);
  return id;
}

uint32_t PredicateManager::not_rec(uint32_t f) {
  if (f <= 1) return f ^ 1u;
  auto it = not_cache_.find(f);
  if (it != not_cache_.end()) return it->second;
  const Node n = nodes_[f];
  uint32_t r = mk(n.bit, not_rec(n.lo), not_rec(n.hi));
  not_cache_.emplace(f, r);
  return r;
}

uint32_t PredicateManager::ite_rec(uint32_t f, uint32_t g, uint32_t h) {
  if (f == 1) return g;
  if (f == 0) return h;
  if (g == h) return g;
  if (g == 1 && h == 0) return f;
  if (g == 0 && h == 1) return not_rec(f);
  auto key = std::make_tuple(f, g, h);
  auto it = ite_cache_.find(key);
  if (it != ite_cache_.end()) return it->second;
  uint32_t top = bit_of(f);
  if (g > 1) top = std::min(top, bit_of(g));
  if (h > 1) top = std::min(top, bit_of(h));
  auto cof = [&](uint32_t x, bool hi) {
    if (x <= 1 || nodes_[x].bit != top) return x;
    return hi ? nodes_[x].hi : nodes_[x].lo;
  };
  uint32_t hi = ite_rec(cof(f, true), cof(g, true), cof(h, true));
  uint32_t lo = ite_rec(cof(f, false), cof(g, false), cof(h, false));
  uint32_t r = mk(top, lo, hi);
  ite_cache_.emplace(key, r);
  return r;
}

Predicate PredicateManager::var(Var v) {
  const auto& info = space_->info(v);
  if (info.kind != VarKind::Boolean) throw std::logic_error("var() on enum variable " + info.name);
  return wrap(mk(info.first_bit, 0, 1));
}

Predicate PredicateManager::enum_eq(Var v, uint32_t value) {
  const auto& info = space_->info(v);
  if (info.kind != VarKind::Enum) throw std::logic_error("enum_eq() on Boolean variable " + info.name);
  if (value >= info.cardinality) throw std::logic_error("enum value out of range for " + info.name);
  // Cube over the bits, built bottom-up so it stays reduced.
  uint32_t acc = 1;
  for (uint32_t b = info.bit_width; b-- > 0;) {
    uint32_t bit = info.first_bit + b;
    bool set = (value >> b) & 1u;
    acc = set ? mk(bit, 0, acc) : mk(bit, acc, 0);
  }
  return wrap(acc);
}

Predicate PredicateManager::negate(Predicate f) {
  check_same_space(f);
  return wrap(not_rec(f.node()));
}
Predicate PredicateManager::conj(Predicate f, Predicate g) {
  check_same_space(f);
  check_same_space(g);
  return wrap(ite_rec(f.node(), g.node(), 0));
}
Predicate PredicateManager::disj(Predicate f, Predicate g) {
  check_same_space(f);
  check_same_space(g);
  return wrap(ite_rec(f.node(), 1, g.node()));
}
Predicate PredicateManager::implies(Predicate f, Predicate g) {
  check_same_space(f);
  check_same_space(g);
  return wrap(ite_rec(f.node(), g.node(), 1));
}
Predicate PredicateManager::equiv(Predicate f, Predicate g) {
  check_same_space(f);
  check_same_space(g);
  return wrap(ite_rec(f.node(), g.node(), not_rec(g.node())));
}
Predicate PredicateManager::ite(Predicate c, Predicate t, Predicate e) {
  check_same_space(c);
  check_same_space(t);
  check_same_space(e);
  return wrap(ite_rec(c.node(), t.node(), e.node()));
}

Classification PredicateManager::classify(Predicate f) const {
  if (f.node() == 1) return Classification::Tautology;
  if (f.node() == 0) return Classification::Unsatisfiable;
  return Classification::Contingent;
}

Predicate PredicateManager::exists(Predicate f, const std::vector<Var>& vars) {
  check_same_space(f);
  std::set<uint32_t> bits;
  for (Var v : vars) {
    const auto& info = space_->info(v);
    for (uint32_t b = 0; b < info.bit_width; ++b) bits.insert(info.first_bit + b);
  }
  std::unordered_map<uint32_t, uint32_t> memo;
  auto rec = [&](auto&& self, uint32_t n) -> uint32_t {
    if (n <= 1) return n;
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    const Node nd = nodes_[n];
    uint32_t lo = self(self, nd.lo);
    uint32_t hi = self(self, nd.hi);
    uint32_t r = bits.count(nd.bit) ? ite_rec(lo, 1, hi) : mk(nd.bit, lo, hi);
    memo.emplace(n, r);
    return r;
  };
  return wrap(rec(rec, f.node()));
}

Predicate PredicateManager::substitute(Predicate f, const AssignmentSet& a) {
  check_same_space(f);
  if (a.empty()) return f;
  // Per-bit replacement table; identity where unassigned.
  std::unordered_map<uint32_t, uint32_t> repl;
  for (const auto& [vi, rhs] : a.entries()) {
    const auto& info = space_->info(Var{vi});
    if (rhs.enum_value.has_value()) {
      for (uint32_t b = 0; b < info.bit_width; ++b)
        repl[info.first_bit + b] = ((*rhs.enum_value >> b) & 1u) ? 1u : 0u;
    } else {
      check_same_space(rhs.pred);
      if (info.kind != VarKind::Boolean)
        throw std::logic_error("predicate assigned to enum variable " + info.name);
      repl[info.first_bit] = rhs.pred.node();
    }
  }
  std::unordered_map<uint32_t, uint32_t> memo;
  auto rec = [&](auto&& self, uint32_t n) -> uint32_t {
    if (n <= 1) return n;
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    const Node nd = nodes_[n];
    uint32_t lo = self(self, nd.lo);
    uint32_t hi = self(self, nd.hi);
    auto rit = repl.find(nd.bit);
    uint32_t g = rit == repl.end() ? mk(nd.bit, 0, 1) : rit->second;
    uint32_t r = ite_rec(g, hi, lo);
    memo.emplace(n, r);
    return r;
  };
  return wrap(rec(rec, f.node()));
}

Predicate PredicateManager::cofactor(Predicate f, const Valuation& bindings) {
  check_same_space(f);
  std::unordered_map<uint32_t, uint32_t> fixed;  // bit -> 0/1
  for (const auto& [vi, value] : bindings.values()) {
    const auto& info = space_->info(Var{vi});
    for (uint32_t b = 0; b < info.bit_width; ++b)
      fixed[info.first_bit + b] = (value >> b) & 1u;
  }
  std::unordered_map<uint32_t, uint32_t> memo;
  auto rec = [&](auto&& self, uint32_t n) -> uint32_t {
    if (n <= 1) return n;
    auto it = memo.find(n);
    if (it != memo.end()) return it->second;
    const Node nd = nodes_[n];
    uint32_t r;
    auto fit = fixed.find(nd.bit);
    if (fit != fixed.end()) {
      r = self(self, fit->second ? nd.hi : nd.lo);
    } else {
      r = mk(nd.bit, self(self, nd.lo), self(self, nd.hi));
    }
    memo.emplace(n, r);
    return r;
  };
  return wrap(rec(rec, f.node()));
}

AssignmentSet PredicateManager::merge(const AssignmentSet& a, const AssignmentSet& b) {
  AssignmentSet out = a;
  for (const auto& [vi, rhs] : b.entries()) {
    auto it = out.entries_.find(vi);
    if (it == out.entries_.end()) {
      out.entries_[vi] = rhs;
      continue;
    }
    if (rhs.enum_value.has_value() || it->second.enum_value.has_value()) {
      if (rhs.enum_value != it->second.enum_value)
        throw std::logic_error("conflicting enum assignments to " + space_->name(Var{vi}));
      continue;
    }
    it->second.pred = disj(it->second.pred, rhs.pred);
  }
  return out;
}

bool PredicateManager::eval(Predicate f, const Valuation& v) const {
  uint32_t n = f.node();
  while (n > 1) {
    const Node nd = nodes_[n];
    Var owner = space_->owner_of_bit(nd.bit);
    const auto& info = space_->info(owner);
    uint32_t value = v.get(owner);
    uint32_t bit_index = nd.bit - info.first_bit;
    n = ((value >> bit_index) & 1u) ? nd.hi : nd.lo;
  }
  return n == 1;
}

std::vector<Var> PredicateManager::support(Predicate f) const {
  std::set<uint32_t> seen_vars;
  std::set<uint32_t> visited;
  std::vector<uint32_t> stack{f.node()};
  while (!stack.empty()) {
    uint32_t n = stack.back();
    stack.pop_back();
    if (n <= 1 || visited.count(n)) continue;
    visited.insert(n);
    seen_vars.insert(space_->owner_of_bit(nodes_[n].bit).index);
    stack.push_back(nodes_[n].lo);
    stack.push_back(nodes_[n].hi);
  }
  std::vector<Var> out;
  for (uint32_t vi : seen_vars) out.push_back(Var{vi});
  return out;
}

std::string PredicateManager::dump(Predicate f) const {
  if (f.node() == 0) return "false";
  if (f.node() == 1) return "true";
  // Sum of products: one product term per path to the true terminal,
  // with literals listed in registry (bit) order.
  std::ostringstream os;
  bool first_term = true;
  std::vector<std::pair<uint32_t, bool>> path;  // (bit, phase)
  auto emit = [&]() {
    if (!first_term) os << " | ";
    first_term = false;
    bool first_lit = true;
    for (auto [bit, phase] : path) {
      if (!first_lit) os << " & ";
      first_lit = false;
      Var owner = space_->owner_of_bit(bit);
      const auto& info = space_->info(owner);
      if (!phase) os << "!";
      os << info.name;
      if (info.bit_width > 1) os << "." << (bit - info.first_bit);
    }
    if (first_lit) os << "true";
  };
  auto rec = [&](auto&& self, uint32_t n) -> void {
    if (n == 0) return;
    if (n == 1) {
      emit();
      return;
    }
    const Node nd = nodes_[n];
    path.emplace_back(nd.bit, false);
    self(self, nd.lo);
    path.back().second = true;
    self(self, nd.hi);
    path.pop_back();
  };
  rec(rec, f.node());
  return os.str();
}

}  // namespace heapguard::sym
