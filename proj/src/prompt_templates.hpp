// SPDX-License-Identifier: Apache-2.0
// Snippet templates, internal to the prompt generator.
//
// Placeholders are '$' followed by one letter:
//   $b builtin name      $K keyword (checker prompts)
//   $v $w $u $x $y       distinct domain identifiers
//   $f function name     $C class name       $n small integer
#pragma once

#include <span>
#include <string_view>

namespace atlas::detail {

struct ObjectTemplate {
  std::string_view ast;
  std::string_view body;
  bool needs_function = false;  // wrapped in its own def at module level
  bool needs_async = false;     // enclosing def must be async
};

struct CheckerTemplate {
  char category;
  std::string_view body;
};

std::span<const ObjectTemplate> object_templates();
std::span<const CheckerTemplate> checker_templates();

}  // namespace atlas::detail
