#!/usr/bin/env python3
"""Node-type counts and referenced identifiers from CPython's ast module.

Reads snippets separated by lines equal to '#---' from the file given as
argv[1] and prints one JSON object per snippet:
  {"ok": bool, "counts": {type: n}, "names": [identifier, ...]}
Context, operator and comparison singletons are excluded from the counts.
With --compile a snippet is ok only if compile() also accepts it.
"""
import ast
import json
import sys

SKIP = (ast.expr_context, ast.operator, ast.boolop, ast.unaryop, ast.cmpop)


def analyse(src):
    tree = ast.parse(src)
    counts = {}
    names = set()
    for node in ast.walk(tree):
        if isinstance(node, SKIP):
            continue
        kind = type(node).__name__
        counts[kind] = counts.get(kind, 0) + 1
        if isinstance(node, ast.Name):
            names.add(node.id)
        elif isinstance(node, ast.alias):
            names.update(node.name.split("."))
            if node.asname:
                names.add(node.asname)
        elif isinstance(node, ast.ImportFrom) and node.module:
            names.update(node.module.split("."))
        elif isinstance(node, (ast.Global, ast.Nonlocal)):
            names.update(node.names)
    return counts, sorted(names)


def main():
    text = open(sys.argv[1], encoding="utf-8").read()
    check_compile = "--compile" in sys.argv[2:]
    for snippet in text.split("\n#---\n"):
        try:
            counts, names = analyse(snippet)
            if check_compile:
                compile(snippet, "<prompt>", "exec")
            print(json.dumps({"ok": True, "counts": counts, "names": names}, sort_keys=True))
        except SyntaxError:
            print(json.dumps({"ok": False, "counts": {}, "names": []}))


if __name__ == "__main__":
    main()
