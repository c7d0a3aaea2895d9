#pragma once

#include <stdexcept>
#include <string>

#include "heapguard/sir/ast.hpp"

namespace heapguard::sir {

struct ParseError : std::runtime_error {
  ParseError(std::string msg, SourcePos p)
      : std::runtime_error(std::move(msg) + " at line " + std::to_string(p.line) + ":" +
                           std::to_string(p.col)),
        pos(p) {}
  SourcePos pos;
};

/// Parse a `.sir` program. Labels are preserved and source positions retained
/// for diagnostics. Statement kinds that depend on declared types (primitive
/// vs reference stores, loads, copies, outputs) are provisional until
/// typecheck resolves them.
Program parse_program(const std::string& source);

}  // namespace heapguard::sir
