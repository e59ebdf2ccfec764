#!/usr/bin/env python3
"""Reference extraction built on Python's own ast module.

Prints one tab-separated row per resolved sink call:
    file  qualname  start_line  end_line  sink  call_line
Used once to freeze tests/fixtures/expected_hits.tsv; kept so the table can be
re-derived and reviewed.
"""
import ast
import sys
from pathlib import Path

BUILTINS = {"exec", "eval"}
SUBPROCESS = {"call", "run", "Popen", "check_output"}
OS = {"popen", "system", "spawnl", "spawnle", "spawnlp", "spawnlpe", "spawnv", "spawnve",
      "spawnvp", "spawnvpe", "posix_spawn", "posix_spawnp", "execl", "execle", "execlp",
      "execlpe", "execv", "execve", "execvp", "execvpe"}
CATALOG = BUILTINS | {"subprocess." + n for n in SUBPROCESS} | {"os." + n for n in OS}


def dotted(node):
    parts = []
    while isinstance(node, ast.Attribute):
        parts.append(node.attr)
        node = node.value
    if not isinstance(node, ast.Name):
        return None
    parts.append(node.id)
    return ".".join(reversed(parts))


def module_bindings(tree):
    names = set()
    for stmt in tree.body:
        if isinstance(stmt, (ast.FunctionDef, ast.AsyncFunctionDef, ast.ClassDef)):
            names.add(stmt.name)
        elif isinstance(stmt, (ast.Assign, ast.AnnAssign, ast.AugAssign)):
            targets = stmt.targets if isinstance(stmt, ast.Assign) else [stmt.target]
            for t in targets:
                for n in ast.walk(t):
                    if isinstance(n, ast.Name):
                        names.add(n.id)
    return names


def imports(tree):
    table, stars = {}, []
    for node in ast.walk(tree):
        if isinstance(node, ast.Import):
            for a in node.names:
                if a.asname:
                    table.setdefault(a.asname, []).append(a.name)
                else:
                    head = a.name.split(".")[0]
                    table.setdefault(head, []).append(head)
        elif isinstance(node, ast.ImportFrom):
            mod = "." * node.level + (node.module or "")
            for a in node.names:
                if a.name == "*":
                    stars.append(mod)
                else:
                    table.setdefault(a.asname or a.name, []).append(mod + "." + a.name)
    return table, stars


def resolve(chain, table, stars, bound):
    head, _, rest = chain.partition(".")
    rest = "." + rest if rest else ""
    if head in table:
        for target in table[head]:
            q = target + rest
            if q.startswith("builtins."):
                q = q[len("builtins."):]
            if q in CATALOG:
                return q
        return None
    if head in bound:
        return None
    for mod in stars:
        if mod + "." + chain in CATALOG:
            return mod + "." + chain
    if "." not in chain and chain in BUILTINS:
        return chain
    return None


def walk(node, stack, out):
    for child in ast.iter_child_nodes(node):
        if isinstance(child, (ast.FunctionDef, ast.AsyncFunctionDef)):
            # decorators, defaults and annotations belong to the enclosing scope
            for sub in child.decorator_list + child.args.defaults + child.args.kw_defaults:
                if sub is not None:
                    walk_expr(sub, stack, out)
            walk(child, stack + [child], out)
        elif isinstance(child, ast.ClassDef):
            walk(child, stack + [child], out)
        else:
            if isinstance(child, ast.Call):
                out.append((child, stack))
            walk(child, stack, out)


def walk_expr(node, stack, out):
    if isinstance(node, ast.Call):
        out.append((node, stack))
    walk(node, stack, out)


def main(root):
    root = Path(root)
    for path in sorted(root.rglob("*.py")):
        rel = path.relative_to(root).as_posix()
        tree = ast.parse(path.read_text(encoding="utf-8"))
        table, stars = imports(tree)
        bound = module_bindings(tree)
        calls = []
        walk(tree, [], calls)
        for call, stack in sorted(calls, key=lambda c: (c[0].lineno, c[0].col_offset)):
            chain = dotted(call.func)
            if chain is None:
                continue
            sink = resolve(chain, table, stars, bound)
            if sink is None:
                continue
            funcs = [n for n in stack if isinstance(n, (ast.FunctionDef, ast.AsyncFunctionDef))]
            if funcs:
                fn = funcs[-1]
                qual = ".".join(n.name for n in stack[: stack.index(fn) + 1])
                print(f"{rel}\t{qual}\t{fn.lineno}\t{fn.end_lineno}\t{sink}\t{call.lineno}")
            else:
                print(f"{rel}\t<module>\t-\t-\t{sink}\t{call.lineno}")


if __name__ == "__main__":
    main(sys.argv[1])
