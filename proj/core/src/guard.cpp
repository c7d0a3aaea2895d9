#include "heapguard/infer/guard.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "json.hpp"

namespace heapguard::infer {

using sym::Predicate;
using sym::PredicateManager;
using sym::Var;

std::string to_string(GuardClass c) {
  switch (c) {
    case GuardClass::SecureAlways:
      return "secure-always";
    case GuardClass::InsecureAlways:
      return "insecure-always";
    case GuardClass::Conditional:
      return "conditional";
  }
  return "?";
}

Guard synthesize_guard_from(const scfg::EncodedMethod& enc, std::string method,
                            std::string domain, const ResourceLimits& limits) {
  const scfg::Scfg& s = enc.scfg;
  PredicateManager& mgr = *s.mgr;

  Guard g;
  g.method = std::move(method);
  g.domain = std::move(domain);
  g.mgr = s.mgr;
  g.space = s.space;
  g.stats.locations = s.location_count();
  g.stats.statebits = 0;
  for (Var v : s.state_vars) g.stats.statebits += s.space->info(v).bit_width;

  auto fact_name = [&](const heap::HeapDomainInstance::RelEntry& e) {
    std::string tag = e.rel == heap::RelKind::Alias ? "alias" : "freach";
    return tag + "(" + s.heap->refs()[e.r].name + "," + s.heap->refs()[e.s].name + ")";
  };
  for (const auto& e : s.heap->const_true()) g.const_facts[fact_name(e)] = true;
  for (const auto& e : s.heap->const_false()) g.const_facts[fact_name(e)] = false;

  auto start = std::chrono::steady_clock::now();
  try {
    StateSet b0;
    b0.at.reserve(s.location_count());
    for (uint32_t loc = 0; loc < s.location_count(); ++loc)
      b0.at.push_back(!enc.invariant.of(loc));

    CoreachOptions opts;
    opts.limits = limits;
    CoreachResult res = coreach(s, b0, opts);
    g.stats.iterations = res.iterations;

    Predicate safe_entry = !res.fixpoint.at[s.initial];
    g.formula = mgr.cofactor(safe_entry, s.init_bindings);

    // The guard must mention calling-context variables only.
    for (Var v : mgr.support(g.formula)) {
      if (s.init_bindings.has(v))
        throw std::logic_error("guard mentions initial-state-bound variable " +
                               s.space->name(v));
      if (s.space->info(v).is_input)
        throw std::logic_error("guard mentions input variable " + s.space->name(v));
    }
  } catch (const AnalysisInterrupted& e) {
    g.interrupted = true;
    g.interrupt_reason = e.what();
    g.formula = mgr.bottom();
  } catch (const sym::NodeBudgetExceeded& e) {
    g.interrupted = true;
    g.interrupt_reason = e.what();
    g.formula = mgr.bottom();
  }
  g.stats.millis = static_cast<uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                             std::chrono::steady_clock::now() - start)
                                             .count());
  g.classification = classify_guard(g);
  return g;
}

Guard synthesize_guard(const sir::TypedProgram& program, const std::string& method,
                       const heap::HeapFamily& family, const scfg::SummaryTable& summaries,
                       const SynthesisOptions& options) {
  scfg::EncodeOptions eo;
  eo.assume_worst = options.assume_worst;
  eo.bug = options.bug;
  scfg::EncodedMethod enc = scfg::encode_method(program, method, family, summaries, eo);
  enc.scfg.mgr->set_node_budget(options.limits.node_cap);
  return synthesize_guard_from(enc, method, family.name, options.limits);
}

GuardClass classify_guard(const Guard& g) {
  switch (g.mgr->classify(g.formula)) {
    case sym::Classification::Tautology:
      return GuardClass::SecureAlways;
    case sym::Classification::Unsatisfiable:
      return GuardClass::InsecureAlways;
    default:
      return GuardClass::Conditional;
  }
}

namespace {

// Literal rendering over the shared atom surface. Level-valued variables
// (pc, lev, reach) print as =high / =low; relation variables print bare or
// negated.
std::string literal_text(const sym::VarSpace& space, Var v, bool positive) {
  const std::string& name = space.name(v);
  bool is_relation = name.rfind("alias", 0) == 0 || name.rfind("freach", 0) == 0;
  if (is_relation) return positive ? name : "!" + name;
  return name + (positive ? "=high" : "=low");
}

struct Implicant {
  uint64_t care = 0;  // bit set => literal present
  uint64_t value = 0; // literal phase where care bit set

  bool covers(uint64_t minterm) const { return (minterm & care) == (value & care); }
};

// Prime implicants via pairwise merging, then a greedy irredundant cover.
// Support sizes beyond the cap fall back to raw diagram cubes.
std::vector<Implicant> prime_implicants(const std::vector<uint64_t>& minterms, uint64_t full_mask,
                                        int bits) {
  std::vector<Implicant> current;
  current.reserve(minterms.size());
  for (uint64_t m : minterms) current.push_back({full_mask, m});
  std::vector<Implicant> primes;
  while (!current.empty()) {
    std::vector<Implicant> next;
    std::vector<bool> merged(current.size(), false);
    auto key = [](const Implicant& i) { return std::make_pair(i.care, i.value); };
    std::set<std::pair<uint64_t, uint64_t>> seen;
    for (size_t i = 0; i < current.size(); ++i) {
      for (size_t j = i + 1; j < current.size(); ++j) {
        if (current[i].care != current[j].care) continue;
        uint64_t diff = (current[i].value ^ current[j].value) & current[i].care;
        if (__builtin_popcountll(diff) != 1) continue;
        Implicant m{current[i].care & ~diff, current[i].value & ~diff};
        merged[i] = merged[j] = true;
        if (seen.insert(key(m)).second) next.push_back(m);
      }
    }
    for (size_t i = 0; i < current.size(); ++i)
      if (!merged[i]) primes.push_back(current[i]);
    current = std::move(next);
    (void)bits;
  }
  return primes;
}

}  // namespace

std::vector<std::vector<std::string>> guard_cubes(const Guard& g) {
  PredicateManager& mgr = *g.mgr;
  const sym::VarSpace& space = *g.space;
  std::vector<std::vector<std::string>> cubes;
  if (g.formula.is_true() || g.formula.is_false()) return cubes;

  std::vector<Var> support = mgr.support(g.formula);
  constexpr size_t kEnumCap = 14;
  if (support.size() <= kEnumCap) {
    // Exact minimal cubes over the support.
    int bits = static_cast<int>(support.size());
    uint64_t full_mask = (bits == 64) ? ~0ull : ((1ull << bits) - 1);
    std::vector<uint64_t> minterms;
    for (uint64_t m = 0; m < (1ull << bits); ++m) {
      sym::Valuation val;
      for (int i = 0; i < bits; ++i) val.set_bool(support[i], (m >> i) & 1);
      if (mgr.eval(g.formula, val)) minterms.push_back(m);
    }
    auto primes = prime_implicants(minterms, full_mask, bits);
    // Greedy cover: repeatedly take the prime covering the most uncovered
    // minterms; ties resolve on (fewer literals, lexicographic) order.
    std::sort(primes.begin(), primes.end(), [](const Implicant& a, const Implicant& b) {
      int ca = __builtin_popcountll(a.care), cb = __builtin_popcountll(b.care);
      if (ca != cb) return ca < cb;
      if (a.care != b.care) return a.care < b.care;
      return a.value < b.value;
    });
    std::set<uint64_t> uncovered(minterms.begin(), minterms.end());
    std::vector<Implicant> chosen;
    while (!uncovered.empty()) {
      size_t best = primes.size();
      size_t best_count = 0;
      for (size_t i = 0; i < primes.size(); ++i) {
        size_t count = 0;
        for (uint64_t m : uncovered)
          if (primes[i].covers(m)) ++count;
        if (count > best_count) {
          best_count = count;
          best = i;
        }
      }
      if (best == primes.size()) break;
      const Implicant& pick = primes[best];
      chosen.push_back(pick);
      for (auto it = uncovered.begin(); it != uncovered.end();)
        it = pick.covers(*it) ? uncovered.erase(it) : ++it;
    }
    for (const Implicant& imp : chosen) {
      std::vector<std::string> cube;
      for (int i = 0; i < static_cast<int>(support.size()); ++i)
        if ((imp.care >> i) & 1)
          cube.push_back(literal_text(space, support[i], (imp.value >> i) & 1));
      if (cube.empty()) cube.push_back("true");
      cubes.push_back(std::move(cube));
    }
  } else {
    // Too wide for exact minimization: disjoint cubes straight off the
    // canonical diagram (still deterministic).
    std::string sop = mgr.dump(g.formula);
    std::istringstream ss(sop);
    std::string term;
    while (std::getline(ss, term, '|')) {
      std::vector<std::string> cube;
      std::istringstream ts(term);
      std::string lit;
      while (std::getline(ts, lit, '&')) {
        lit.erase(std::remove(lit.begin(), lit.end(), ' '), lit.end());
        if (lit.empty()) continue;
        bool neg = lit[0] == '!';
        std::string name = neg ? lit.substr(1) : lit;
        auto var = space.find(name);
        cube.push_back(var ? literal_text(space, *var, !neg) : lit);
      }
      cubes.push_back(std::move(cube));
    }
  }
  return cubes;
}

std::string render_guard(const Guard& g, GuardFormat format) {
  auto text_of = [&]() -> std::string {
    if (g.formula.is_true()) return "true";
    if (g.formula.is_false()) return "false";
    std::ostringstream os;
    auto cubes = guard_cubes(g);
    for (size_t i = 0; i < cubes.size(); ++i) {
      if (i) os << " | ";
      if (cubes.size() > 1 && cubes[i].size() > 1) os << "(";
      for (size_t j = 0; j < cubes[i].size(); ++j) {
        if (j) os << " & ";
        os << cubes[i][j];
      }
      if (cubes.size() > 1 && cubes[i].size() > 1) os << ")";
    }
    return os.str();
  };

  switch (format) {
    case GuardFormat::Text:
      return text_of();
    case GuardFormat::Dnf: {
      std::ostringstream os;
      auto cubes = guard_cubes(g);
      if (g.formula.is_true()) return "true\n";
      if (g.formula.is_false()) return "false\n";
      for (const auto& cube : cubes) {
        for (size_t j = 0; j < cube.size(); ++j) os << (j ? " & " : "") << cube[j];
        os << "\n";
      }
      return os.str();
    }
    case GuardFormat::Json: {
      nlohmann::json j;
      j["method"] = g.method;
      j["domain"] = g.domain;
      j["classification"] = to_string(g.classification);
      j["formula"] = text_of();
      nlohmann::json dnf = nlohmann::json::array();
      for (const auto& cube : guard_cubes(g)) {
        nlohmann::json c = nlohmann::json::array();
        for (const auto& lit : cube) c.push_back(lit);
        dnf.push_back(c);
      }
      j["dnf"] = dnf;
      j["interrupted"] = g.interrupted;
      j["stats"] = {{"locations", g.stats.locations},
                    {"statebits", g.stats.statebits},
                    {"iterations", g.stats.iterations},
                    {"millis", g.stats.millis}};
      return j.dump();
    }
  }
  return "";
}

sym::Predicate transfer_formula(const Guard& from, const Guard& into) {
  PredicateManager& dst = *into.mgr;
  if (from.mgr.get() == into.mgr.get()) return from.formula;
  // Rebuild bottom-up over the source diagram, matching variables by name.
  std::map<uint32_t, Predicate> memo;
  auto rec = [&](auto&& self, Predicate f) -> Predicate {
    if (f.is_false()) return dst.bottom();
    if (f.is_true()) return dst.top();
    auto it = memo.find(f.node());
    if (it != memo.end()) return it->second;
    std::vector<Var> sup = from.mgr->support(f);
    // The earliest-ordered support variable is the diagram root's owner.
    Var root = sup.front();
    const std::string& name = from.space->name(root);
    auto target = into.space->find(name);
    sym::Valuation v0, v1;
    v0.set_bool(root, false);
    v1.set_bool(root, true);
    Predicate lo = self(self, from.mgr->cofactor(f, v0));
    Predicate hi = self(self, from.mgr->cofactor(f, v1));
    Predicate r;
    if (target) {
      r = dst.ite(dst.var(*target), hi, lo);
    } else {
      // The fact is a pre-analysis constant in the target domain.
      auto it = into.const_facts.find(name);
      if (it == into.const_facts.end())
        throw std::invalid_argument("guard variable '" + name +
                                    "' has no counterpart in the target domain");
      r = it->second ? hi : lo;
    }
    memo.emplace(f.node(), r);
    return r;
  };
  return rec(rec, from.formula);
}

bool guard_implies(const Guard& stronger, const Guard& weaker) {
  Predicate moved = transfer_formula(stronger, weaker);
  return weaker.mgr->entails(moved, weaker.formula);
}

}  // namespace heapguard::infer
