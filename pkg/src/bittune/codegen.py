"""Reduced-precision script emission and its runtime dialect.

The emitted script is plain Python over a tiny runtime: ``mp(x, n)``
rounds x to n significant bits, where x is a quoted decimal literal, an
already-rounded value, or one unrounded arithmetic expression; sqrt goes
through ``mp_sqrt(value, n)``.  Every literal, read, operation result,
and store in the source program becomes one wrapper carrying its solved
width, so the script performs exactly the roundings the tuned
interpreter performs and reproduces its results bit for bit.

Literals stay quoted because the source text is the exact value; a bare
Python float would silently pre-round to 53 bits before mp() could see
it.  Arithmetic operators on rounded values build a deferred node
instead of computing, and the enclosing mp() call evaluates it with a
single correct rounding at the target width; using an operator result
without wrapping it in mp() is an error by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import mpfloat
from .mpfloat import MPValue
from .program import (
    Assign, BinOp, Compare, Expr, If, Neg, Num, Program, Require, Sqrt, Stmt,
    Var, While,
)
from .render import MissingWidthError

HEADER = '''"""Reduced-precision program; widths were solved per control point.

Run with: python3 <this file>  (any suffix works; the content is Python)
Every mp(x, n) call rounds to n significant bits (round to nearest,
ties to even); arithmetic between wrapped values is evaluated lazily so
each operation is rounded exactly once, at its own width.
"""

from bittune.codegen import mp, mp_sqrt

'''


@dataclass(frozen=True)
class _Deferred:
    op: str
    left: MPValue
    right: MPValue


def defer(op: str, left, right) -> _Deferred:
    """Record one arithmetic operation for a later single rounding."""
    if not isinstance(left, MPValue) or not isinstance(right, MPValue):
        raise TypeError(
            "operands must be rounded values; wrap inner expressions in mp()")
    return _Deferred(op, left, right)


def mp(x, n: int) -> MPValue:
    """Round x to n significant bits (n < 1 behaves as 1)."""
    if n < 1:
        n = 1
    if isinstance(x, _Deferred):
        return mpfloat.arith(x.op, x.left, x.right, n)
    if isinstance(x, MPValue):
        return mpfloat.round_to(x, n)
    if isinstance(x, str):
        return mpfloat.parse_decimal(x, n)
    if isinstance(x, int):
        return mpfloat.round_to(mpfloat.from_int(x, max(n, 1)), n)
    raise TypeError(f"mp() cannot round {type(x).__name__}; "
                    f"pass a quoted literal or a rounded value")


def mp_sqrt(x: MPValue, n: int) -> MPValue:
    if not isinstance(x, MPValue):
        raise TypeError("mp_sqrt takes a rounded value; wrap the argument in mp()")
    return mpfloat.sqrt(x, 1 if n < 1 else n)


def _width(widths: dict[int, int], point: int) -> int:
    if point not in widths:
        raise MissingWidthError(point)
    return widths[point]


def _emit_expr(e: Expr, widths) -> str:
    if isinstance(e, Num):
        return f"mp('{e.text}', {_width(widths, e.point)})"
    if isinstance(e, Var):
        return f"mp({e.name}, {_width(widths, e.point)})"
    if isinstance(e, Sqrt):
        return f"mp_sqrt({_emit_expr(e.arg, widths)}, {_width(widths, e.point)})"
    if isinstance(e, Neg):
        return f"mp(-{_emit_expr(e.operand, widths)}, {_width(widths, e.point)})"
    if isinstance(e, BinOp):
        left = _emit_expr(e.left, widths)
        right = _emit_expr(e.right, widths)
        return f"mp({left} {e.op} {right}, {_width(widths, e.point)})"
    raise TypeError(f"unexpected expression node {e!r}")


def _emit_cond(c: Compare, widths) -> str:
    return f"{_emit_expr(c.left, widths)} {c.op} {_emit_expr(c.right, widths)}"


def _emit_stmts(stmts: list[Stmt], widths, indent: int, out: list[str]) -> None:
    pad = "    " * indent
    if not stmts:
        out.append(f"{pad}pass")
        return
    for st in stmts:
        if isinstance(st, Assign):
            rhs = _emit_expr(st.expr, widths)
            out.append(f"{pad}{st.name} = mp({rhs}, {_width(widths, st.point)})")
        elif isinstance(st, While):
            out.append(f"{pad}while {_emit_cond(st.cond, widths)}:")
            _emit_stmts(st.body, widths, indent + 1, out)
        elif isinstance(st, If):
            out.append(f"{pad}if {_emit_cond(st.cond, widths)}:")
            _emit_stmts(st.then_body, widths, indent + 1, out)
            if st.else_body:
                out.append(f"{pad}else:")
                _emit_stmts(st.else_body, widths, indent + 1, out)
        elif isinstance(st, Require):
            out.append(f"{pad}# require_nsb({st.name}, {st.bits})")
        else:
            raise TypeError(f"unexpected statement {st!r}")


def emit_mp_code(prog: Program, widths: dict[int, int]) -> str:
    """Emit the runnable reduced-precision script for a solved assignment."""
    out: list[str] = []
    _emit_stmts(prog.stmts, widths, 0, out)
    return HEADER + "\n".join(out) + "\n"
