// SPDX-License-Identifier: Apache-2.0
#include "prompt_templates.hpp"

#include <array>

namespace atlas::detail {

namespace {

constexpr bool F = true;

constexpr std::array kObjectTemplates = {
    ObjectTemplate{"For", "for $w in $b($v):\n    $u.append($w)"},
    ObjectTemplate{"For", "for $w in $b($v):\n    $u = $w"},
    ObjectTemplate{"While", "while $b($v) > $n:\n    $v = $v[1:]"},
    ObjectTemplate{"While", "while not $b($v):\n    $w += 1"},
    ObjectTemplate{"If", "if $b($v):\n    $w = $n"},
    ObjectTemplate{"If", "if $b($v) > $n:\n    $w = $v\nelse:\n    $w = None"},
    ObjectTemplate{"FunctionDef", "def $f($v):\n    return $b($v)"},
    ObjectTemplate{"FunctionDef", "def $f($v, $w=$n):\n    $u = $b($v)\n    return $u"},
    ObjectTemplate{"AsyncFunctionDef", "async def $f($v):\n    return $b($v)"},
    ObjectTemplate{"AsyncFunctionDef", "async def $f($v, $w):\n    $u = $b($w)\n    return $u"},
    ObjectTemplate{"ClassDef", "class $C:\n    $w = $b($v)"},
    ObjectTemplate{"ClassDef", "class $C($b):\n    $w = $n"},
    ObjectTemplate{"Return", "return $b($v)", F},
    ObjectTemplate{"Return", "$w = $n\nreturn $b($v) + $w", F},
    ObjectTemplate{"Delete", "del $v[$b($w)]"},
    ObjectTemplate{"Delete", "del $v[$b($w):]"},
    ObjectTemplate{"Assign", "$w = $b($v)"},
    ObjectTemplate{"Assign", "$w = $b"},
    ObjectTemplate{"AugAssign", "$w += $b($v)"},
    ObjectTemplate{"AugAssign", "$w -= $b($v)"},
    ObjectTemplate{"AnnAssign", "$w: \"$x\" = $b($v)"},
    ObjectTemplate{"AnnAssign", "$w: $b = $v"},
    ObjectTemplate{"AsyncFor", "async for $w in $b($v):\n    $u.append($w)", F, F},
    ObjectTemplate{"AsyncFor", "async for $w in $b($v):\n    $u = $w", F, F},
    ObjectTemplate{"With", "with $b($v) as $w:\n    $u = $w"},
    ObjectTemplate{"With", "with $b($v):\n    $w = $n"},
    ObjectTemplate{"AsyncWith", "async with $b($v) as $w:\n    $u = $w", F, F},
    ObjectTemplate{"AsyncWith", "async with $b($v):\n    $w = $n", F, F},
    ObjectTemplate{"Raise", "raise $b($v)"},
    ObjectTemplate{"Raise", "if $v is None:\n    raise $b(\"$x\")"},
    ObjectTemplate{"Try", "try:\n    $w = $b($v)\nexcept:\n    $w = None"},
    ObjectTemplate{"Try", "try:\n    $w = $b($v)\nfinally:\n    $u = $n"},
    ObjectTemplate{"Assert", "assert $b($v)"},
    ObjectTemplate{"Assert", "assert $b($v) > $n, \"$x\""},
    ObjectTemplate{"Import", "import $b"},
    ObjectTemplate{"Import", "import $x_lib as $b"},
    ObjectTemplate{"ImportFrom", "from $x_lib import $b"},
    ObjectTemplate{"ImportFrom", "from $b import $w"},
    ObjectTemplate{"Global", "global $w\n$w = $b($v)", F},
    ObjectTemplate{"Global", "global $w\n$w += $b($v)", F},
    ObjectTemplate{"Nonlocal",
                   "$w = $n\ndef $f():\n    nonlocal $w\n    $w = $b($v)\n    return $w", F},
    ObjectTemplate{"Nonlocal", "$w = $n\ndef $f():\n    nonlocal $w\n    $w += $b($v)", F},
    ObjectTemplate{"Pass", "if $b($v):\n    pass"},
    ObjectTemplate{"Pass", "class $C($b):\n    pass"},
    ObjectTemplate{"Break", "for $w in $v:\n    if $b($w):\n        break"},
    ObjectTemplate{"Break", "while True:\n    if $b($v) > $n:\n        break"},
    ObjectTemplate{"Continue", "for $w in $v:\n    if not $b($w):\n        continue\n    $u = $w"},
    ObjectTemplate{"Continue", "for $w in $v:\n    if $b($w) < $n:\n        continue"},
    ObjectTemplate{"BinOp", "$w = $b($v) + $n"},
    ObjectTemplate{"BinOp", "$w = $n * $b($v)"},
    ObjectTemplate{"UnaryOp", "$w = -$b($v)"},
    ObjectTemplate{"UnaryOp", "$w = not $b($v)"},
    ObjectTemplate{"Lambda", "$w = lambda $u: $b($u)"},
    ObjectTemplate{"Lambda", "$w = lambda: $b($v)"},
    ObjectTemplate{"Dict", "$w = {\"$x\": $b($v)}"},
    ObjectTemplate{"Dict", "$w = {\"$x\": $b, \"$y\": $n}"},
    ObjectTemplate{"Set", "$w = {$b($v), $n}"},
    ObjectTemplate{"Set", "$w = {$b}"},
    ObjectTemplate{"ListComp", "$w = [$b($u) for $u in $v]"},
    ObjectTemplate{"ListComp", "$w = [$u for $u in $b($v)]"},
    ObjectTemplate{"SetComp", "$w = {$b($u) for $u in $v}"},
    ObjectTemplate{"SetComp", "$w = {$u for $u in $b($v)}"},
    ObjectTemplate{"DictComp", "$w = {$u: $b($u) for $u in $v}"},
    ObjectTemplate{"DictComp", "$w = {$u: $n for $u in $b($v)}"},
    ObjectTemplate{"GeneratorExp", "$w = ($b($u) for $u in $v)"},
    ObjectTemplate{"GeneratorExp", "$w = ($u for $u in $b($v))"},
    ObjectTemplate{"Await", "$w = await $b($v)", F, F},
    ObjectTemplate{"Await", "await $b($v)", F, F},
    ObjectTemplate{"Yield", "yield $b($v)", F},
    ObjectTemplate{"Yield", "$w = yield $b($v)", F},
    ObjectTemplate{"Compare", "$w = $b($v) > $n"},
    ObjectTemplate{"Compare", "$w = $b($v) == $b($u)"},
    ObjectTemplate{"Call", "$b($v)"},
    ObjectTemplate{"Call", "$w = $b($v, $u)"},
    ObjectTemplate{"Attribute", "$w = $b.__name__"},
    ObjectTemplate{"Attribute", "$w = $b($v).$x"},
    ObjectTemplate{"Subscript", "$w = $v[$b($u)]"},
    ObjectTemplate{"Subscript", "$w = $b($v)[$n]"},
    ObjectTemplate{"Starred", "$w = [*$b($v)]"},
    ObjectTemplate{"Starred", "$w = ($v, *$b($u))"},
    ObjectTemplate{"List", "$w = [$b($v), $n]"},
    ObjectTemplate{"List", "$w = [$b]"},
    ObjectTemplate{"Tuple", "$w = ($b($v), $v)"},
    ObjectTemplate{"Tuple", "$w = $b, $n"},
    ObjectTemplate{"Slice", "$w = $v[:$b($u)]"},
    ObjectTemplate{"Slice", "$w = $v[$n:$b($u)]"},
};

constexpr std::array kCheckerTemplates = {
    CheckerTemplate{'A', "$w = \"$x $K $y\""},
    CheckerTemplate{'A', "$w = \"the $K step\""},
    CheckerTemplate{'A', "$w = '$K $x'"},
    CheckerTemplate{'B', "$w = $n  # $K here"},
    CheckerTemplate{'B', "$w = $v  # $K $x"},
    CheckerTemplate{'C', "$K_$x = $n"},
    CheckerTemplate{'C', "$x_$K_total = $n"},
    CheckerTemplate{'C', "$w = $Kdown_count"},
    CheckerTemplate{'D', "$w = {\"$K\": True}"},
    CheckerTemplate{'D', "$w = {\"$K\": $n, \"$x\": $n}"},
    CheckerTemplate{'E', "print(\"$K time\")"},
    CheckerTemplate{'E', "print(\"$x\", \"$K\")"},
};

}  // namespace

std::span<const ObjectTemplate> object_templates() { return kObjectTemplates; }
std::span<const CheckerTemplate> checker_templates() { return kCheckerTemplates; }

}  // namespace atlas::detail
