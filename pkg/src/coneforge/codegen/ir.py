"""Scalar-operation IR for unrolled kernels.

A KernelProgram is a straight-line list of scalar statements over named
statically sized arrays.  Every array index is a compile-time constant, so
the program can be bounds-checked once here and then rendered to branch-free
target code (the only branches allowed are the sign tests of dynamic pivot
regularization, which get their own statement kind).

Expressions are nested tuples:

    ("ld", array, index)     load array[index]
    ("k", value)             float literal
    ("loc", name)            local scalar variable
    ("bin", op, a, b)        binary op, op in "+ - * /"
    ("neg", a)               negation
    ("sqrt", a)              square root

Statements:

    ("set", array, index, expr)       array[index] = expr
    ("acc", array, index, op, expr)   array[index] op= expr, op in "+ -"
    ("setl", name, expr)              local = expr
    ("dynreg", index, sign)           regularize pivot D[index] toward sign

Statements are grouped; a group is an indivisible run (local variables never
cross group boundaries) and the emitter may split a program into compiled
chunks only between groups.
"""

from __future__ import annotations

from dataclasses import dataclass, field

OP_BUDGET_DEFAULT = 2_000_000

_BIN_OPS = ("+", "-", "*", "/")


def ld(arr: str, idx: int) -> tuple:
    return ("ld", arr, int(idx))


def k(value: float) -> tuple:
    return ("k", float(value))


def loc(name: str) -> tuple:
    return ("loc", name)


def bin_(op: str, a: tuple, b: tuple) -> tuple:
    return ("bin", op, a, b)


def add(a: tuple, b: tuple) -> tuple:
    return ("bin", "+", a, b)


def sub(a: tuple, b: tuple) -> tuple:
    return ("bin", "-", a, b)


def mul(a: tuple, b: tuple) -> tuple:
    return ("bin", "*", a, b)


def chain(first: tuple, op: str, terms: list) -> tuple:
    """Left-associated fold: ((first op t0) op t1) ...

    Mirrors a sequential accumulation loop, so rounding order is identical
    to the loop it replaces.
    """
    e = first
    for t in terms:
        e = ("bin", op, e, t)
    return e


@dataclass
class KernelProgram:
    """Straight-line scalar program over named static arrays."""

    name: str
    arrays: dict
    groups: list = field(default_factory=list)

    def append(self, group: list) -> None:
        self.groups.append(group)

    def stmt_count(self) -> int:
        return sum(len(g) for g in self.groups)

    def flop_count(self) -> int:
        total = 0
        for g in self.groups:
            for st in g:
                total += _stmt_flops(st)
        return total

    def mac_count(self) -> int:
        """Number of multiply-accumulate statements (acc of a product)."""
        total = 0
        for g in self.groups:
            for st in g:
                if st[0] == "acc" and st[4][0] == "bin" and st[4][1] == "*":
                    total += 1
        return total

    def validate(self) -> None:
        """Check every array access is in bounds and locals are defined
        before use within their group."""
        for g in self.groups:
            defined = set()
            for st in g:
                kind = st[0]
                if kind == "set":
                    _, arr, idx, expr = st
                    self._check_ref(arr, idx)
                    _check_expr(expr, self.arrays, defined)
                elif kind == "acc":
                    _, arr, idx, op, expr = st
                    if op not in ("+", "-"):
                        raise ValueError(f"bad accumulate op {op!r}")
                    self._check_ref(arr, idx)
                    _check_expr(expr, self.arrays, defined)
                elif kind == "setl":
                    _, name, expr = st
                    _check_expr(expr, self.arrays, defined)
                    defined.add(name)
                elif kind == "dynreg":
                    _, idx, sign = st
                    self._check_ref("D", idx)
                    if sign not in (1, -1):
                        raise ValueError(f"dynreg sign must be +-1, got {sign}")
                else:
                    raise ValueError(f"unknown statement kind {kind!r}")

    def _check_ref(self, arr: str, idx) -> None:
        if arr not in self.arrays:
            raise ValueError(f"{self.name}: unknown array {arr!r}")
        if not isinstance(idx, int) or isinstance(idx, bool):
            raise ValueError(f"{self.name}: index into {arr} is not a constant")
        if not 0 <= idx < self.arrays[arr]:
            raise ValueError(
                f"{self.name}: index {idx} out of bounds for "
                f"{arr}[{self.arrays[arr]}]"
            )

    def locals_used(self) -> list:
        names = []
        for g in self.groups:
            for st in g:
                if st[0] == "setl" and st[1] not in names:
                    names.append(st[1])
        return names


def _check_expr(expr: tuple, arrays: dict, defined: set) -> None:
    kind = expr[0]
    if kind == "ld":
        _, arr, idx = expr
        if arr not in arrays:
            raise ValueError(f"unknown array {arr!r}")
        if not isinstance(idx, int) or isinstance(idx, bool):
            raise ValueError(f"index into {arr} is not a constant")
        if not 0 <= idx < arrays[arr]:
            raise ValueError(f"index {idx} out of bounds for {arr}[{arrays[arr]}]")
    elif kind == "k":
        if not isinstance(expr[1], float):
            raise ValueError("constant is not a float")
    elif kind == "loc":
        if expr[1] not in defined:
            raise ValueError(f"local {expr[1]!r} used before assignment")
    elif kind == "bin":
        _, op, a, b = expr
        if op not in _BIN_OPS:
            raise ValueError(f"bad binary op {op!r}")
        _check_expr(a, arrays, defined)
        _check_expr(b, arrays, defined)
    elif kind in ("neg", "sqrt"):
        _check_expr(expr[1], arrays, defined)
    else:
        raise ValueError(f"unknown expression kind {kind!r}")


def _expr_flops(expr: tuple) -> int:
    kind = expr[0]
    if kind in ("ld", "k", "loc"):
        return 0
    if kind == "bin":
        return 1 + _expr_flops(expr[2]) + _expr_flops(expr[3])
    if kind in ("neg", "sqrt"):
        return 1 + _expr_flops(expr[1])
    return 0


def _stmt_flops(st: tuple) -> int:
    kind = st[0]
    if kind == "set":
        return _expr_flops(st[3])
    if kind == "acc":
        return 1 + _expr_flops(st[4])
    if kind == "setl":
        return _expr_flops(st[2])
    if kind == "dynreg":
        return 2
    return 0


def execute(prog: KernelProgram, bindings: dict, eps: float = 0.0) -> int:
    """Interpret a program over the given arrays (testing aid).

    bindings maps IR array names to indexable float buffers.  Replays the
    exact scalar sequence the rendered code would run; returns the number
    of wrong-sign pivots encountered in dynreg statements.
    """
    nreg = 0
    for g in prog.groups:
        local = {}
        for st in g:
            kind = st[0]
            if kind == "set":
                _, arr, idx, expr = st
                bindings[arr][idx] = _eval(expr, bindings, local)
            elif kind == "acc":
                _, arr, idx, op, expr = st
                v = _eval(expr, bindings, local)
                if op == "+":
                    bindings[arr][idx] += v
                else:
                    bindings[arr][idx] -= v
            elif kind == "setl":
                local[st[1]] = _eval(st[2], bindings, local)
            elif kind == "dynreg":
                _, idx, sign = st
                d = bindings["D"][idx]
                if sign > 0:
                    if d <= 0.0:
                        d = eps
                        nreg += 1
                    else:
                        d = d + eps
                else:
                    if d >= 0.0:
                        d = -eps
                        nreg += 1
                    else:
                        d = d - eps
                bindings["D"][idx] = d
                bindings["Dinv"][idx] = 1.0 / d
            else:
                raise ValueError(f"unknown statement kind {kind!r}")
    return nreg


def _eval(expr: tuple, bindings: dict, local: dict) -> float:
    kind = expr[0]
    if kind == "ld":
        return bindings[expr[1]][expr[2]]
    if kind == "k":
        return expr[1]
    if kind == "loc":
        return local[expr[1]]
    if kind == "bin":
        a = _eval(expr[2], bindings, local)
        b = _eval(expr[3], bindings, local)
        op = expr[1]
        if op == "+":
            return a + b
        if op == "-":
            return a - b
        if op == "*":
            return a * b
        return a / b
    if kind == "neg":
        return -_eval(expr[1], bindings, local)
    if kind == "sqrt":
        return _eval(expr[1], bindings, local) ** 0.5
    raise ValueError(f"unknown expression kind {kind!r}")


def render_expr(expr: tuple, names: dict) -> str:
    """Render an expression to C/Cython syntax.

    names maps IR array names to target identifiers.  Parenthesization is
    explicit everywhere so the emitted text carries no precedence surprises.
    """
    kind = expr[0]
    if kind == "ld":
        return f"{names[expr[1]]}[{expr[2]}]"
    if kind == "k":
        return _float_lit(expr[1])
    if kind == "loc":
        return expr[1]
    if kind == "bin":
        return f"({render_expr(expr[2], names)} {expr[1]} {render_expr(expr[3], names)})"
    if kind == "neg":
        return f"(-{render_expr(expr[1], names)})"
    if kind == "sqrt":
        return f"sqrt({render_expr(expr[1], names)})"
    raise ValueError(f"unknown expression kind {kind!r}")


def render_stmt(st: tuple, names: dict, dynreg_cfg: dict) -> list:
    """Render a statement to one or more target lines.

    dynreg_cfg supplies the identifiers used by pivot regularization:
    D array, Dinv array, epsilon variable, and regularization counter.
    """
    kind = st[0]
    if kind == "set":
        _, arr, idx, expr = st
        return [f"{names[arr]}[{idx}] = {render_expr(expr, names)}"]
    if kind == "acc":
        _, arr, idx, op, expr = st
        return [f"{names[arr]}[{idx}] {op}= {render_expr(expr, names)}"]
    if kind == "setl":
        _, name, expr = st
        return [f"{name} = {render_expr(expr, names)}"]
    if kind == "dynreg":
        _, idx, sign = st
        d = dynreg_cfg["D"]
        dinv = dynreg_cfg["Dinv"]
        eps = dynreg_cfg["eps"]
        ctr = dynreg_cfg["counter"]
        lines = [f"dv = {d}[{idx}]"]
        if sign > 0:
            lines += [
                "if dv <= 0.0:",
                f"    dv = {eps}",
                f"    {ctr} += 1",
                "else:",
                f"    dv = dv + {eps}",
            ]
        else:
            lines += [
                "if dv >= 0.0:",
                f"    dv = -{eps}",
                f"    {ctr} += 1",
                "else:",
                f"    dv = dv - {eps}",
            ]
        lines += [f"{d}[{idx}] = dv", f"{dinv}[{idx}] = 1.0 / dv"]
        return lines
    raise ValueError(f"unknown statement kind {kind!r}")


def _float_lit(v: float) -> str:
    """Exact float literal: repr round-trips doubles."""
    if v != v:
        return "NAN"
    if v == float("inf"):
        return "INFINITY"
    if v == float("-inf"):
        return "(-INFINITY)"
    text = repr(float(v))
    return text if ("." in text or "e" in text or "E" in text) else text + ".0"
