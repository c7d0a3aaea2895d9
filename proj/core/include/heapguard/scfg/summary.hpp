#pragma once

// Method summaries (guards and effects) consumed from user stub files.
// A stub maps "Class.method(T a, U b)" to a guard formula over the formals'
// security facts and an effect: assignments to those facts. The formula
// surface is shared with guard rendering: low, high, pc, lev(x), reach(r),
// alias(r,s), freach(r,s), join, ite, =, &, |, !.

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace heapguard::scfg {

struct StubError : std::runtime_error {
  explicit StubError(std::string msg) : std::runtime_error(std::move(msg)) {}
};

struct Formula {
  enum class Kind : uint8_t {
    LevLow,    // level constant
    LevHigh,
    LevPc,
    LevVar,    // lev(x)
    LevReach,  // reach(r)
    Join,      // join(a, b)
    BoolLit,   // true / false
    Alias,     // alias(r, s)
    Freach,    // freach(r, s)
    Eq,        // level = level
    And,
    Or,
    Not,
    Ite,  // ite(cond, a, b), level- or bool-valued by context
  };
  Kind kind = Kind::LevLow;
  bool bool_value = false;
  std::string arg0, arg1;  // formal names
  std::shared_ptr<const Formula> a, b, c;

  bool is_level() const {
    switch (kind) {
      case Kind::LevLow:
      case Kind::LevHigh:
      case Kind::LevPc:
      case Kind::LevVar:
      case Kind::LevReach:
      case Kind::Join:
        return true;
      case Kind::Ite:
        return b && b->is_level();
      default:
        return false;
    }
  }
};
using FormulaPtr = std::shared_ptr<const Formula>;

FormulaPtr parse_formula(const std::string& text);
std::string formula_to_string(const Formula& f);

struct StubFormal {
  std::string name;
  bool is_ref = false;
  std::string type;  // class name or int/bool
};

struct EffectAssign {
  enum class Target : uint8_t { Lev, Reach, Alias, Freach, Ret } target;
  std::string arg0, arg1;
  FormulaPtr rhs;
};

struct MethodSummary {
  std::string klass;
  std::string method;
  std::vector<StubFormal> formals;
  FormulaPtr guard;  // boolean formula
  std::vector<EffectAssign> effects;
};

class SummaryTable {
 public:
  void add(MethodSummary s);
  const MethodSummary* find(const std::string& klass, const std::string& method) const;
  bool empty() const { return table_.empty(); }
  size_t size() const { return table_.size(); }
  std::vector<const MethodSummary*> all() const;

 private:
  std::map<std::pair<std::string, std::string>, MethodSummary> table_;
};

/// Load and validate a stub file (JSON). Guards and effects may mention only
/// formal arguments and pc; `ret` is accepted as an effect target for the
/// (ignored) return value.
SummaryTable load_summaries(const std::string& path);
SummaryTable parse_summaries(const std::string& json_text);

}  // namespace heapguard::scfg
