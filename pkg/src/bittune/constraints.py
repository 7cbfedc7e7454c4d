"""Precision-demand constraint systems over program control points.

Two systems share one generator walk.  The plain system (C1) has one
integer variable nsb(p) per control point plus a carry variable xi(r)
per binary-operation result, bounded below by 1: every operation may
feed one carry bit into its operands' demands.  The refined system (C2)
adds error-width variables nsbe(p) tracking how many bits of the
accumulated error are significant, and replaces the constant carry at
additions and subtractions with a definition

    xi(r) = min(max(ufp(b) - ufp(a) + nsb(a) + nsbe(a), 0),
                max(ufp(a) - ufp(b) + nsb(b) + nsbe(b), 0), 1)

which is 0 exactly when one operand's error tail lies entirely below
the other operand's first bit, so no carry can cross.  Multiplications
and divisions keep the constant carry bound in both systems.

All ufp constants come from a recorded range map; a point whose
observed values were all zero uses the sentinel ufp and is reported.
Demands flow backward (operand width >= result width plus an alignment
constant), error widths flow forward.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .flow import DefUseLink
from .interp import UfpMap
from .program import (
    Assign, BinOp, Compare, Expr, If, Neg, Num, Program, Require, Sqrt, Stmt,
    Var, While,
)

DEFAULT_COND_NSB = 53
DEFAULT_PMAX = 500


class GenError(ValueError):
    """Constraint generation cannot proceed (e.g. requirement on dead code)."""


@dataclass(frozen=True)
class IntVar:
    kind: str                   # nsb | nsbe | xi
    point: int
    operands: tuple[int, int] | None = None    # xi only: the two operand points

    @property
    def name(self) -> str:
        return f"{self.kind}_{self.point}"

    def __str__(self) -> str:
        if self.kind == "xi" and self.operands is not None:
            return f"xi_{self.point}({self.operands[0]},{self.operands[1]})"
        return self.name


def nsb(point: int) -> IntVar:
    return IntVar("nsb", point)


def nsbe(point: int) -> IntVar:
    return IntVar("nsbe", point)


def xi(point: int, a: int, b: int) -> IntVar:
    return IntVar("xi", point, (a, b))


@dataclass(frozen=True)
class LinExpr:
    """const + sum of coef * var."""

    const: int
    terms: tuple[tuple[int, IntVar], ...] = ()

    def evaluate(self, values) -> int:
        return self.const + sum(c * values[v] for c, v in self.terms)

    def __str__(self) -> str:
        parts = []
        for c, v in self.terms:
            if c == 1:
                parts.append(f"+ {v}")
            elif c == -1:
                parts.append(f"- {v}")
            else:
                parts.append(f"{'+' if c > 0 else '-'} {abs(c)}*{v}")
        if self.const or not parts:
            parts.append(f"{'+' if self.const >= 0 else '-'} {abs(self.const)}")
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else text


@dataclass(frozen=True)
class LinearConstraint:
    """lhs >= rhs, with lhs a single variable (None means the constant 0)."""

    lhs: IntVar | None
    rhs: LinExpr
    origin: str                 # operand | carry | copy | link | require | cond | seed | error
    site: int                   # control point the row is attributed to

    def holds(self, values) -> bool:
        left = values[self.lhs] if self.lhs is not None else 0
        return left >= self.rhs.evaluate(values)

    def __str__(self) -> str:
        left = str(self.lhs) if self.lhs is not None else "0"
        return f"{left} >= {self.rhs}"


@dataclass(frozen=True)
class XiDef:
    """xi = min(max(arg1, 0), max(arg2, 0), 1)."""

    var: IntVar
    arg1: LinExpr
    arg2: LinExpr
    site: int

    def evaluate(self, values) -> int:
        return min(max(self.arg1.evaluate(values), 0),
                   max(self.arg2.evaluate(values), 0), 1)

    def __str__(self) -> str:
        return (f"{self.var} = min(max({self.arg1}, 0), "
                f"max({self.arg2}, 0), 1)")


@dataclass
class ConstraintSystem:
    kind: str                              # "c1" | "c2" | "policy"
    pmax: int
    variables: list[IntVar] = field(default_factory=list)
    constraints: list[LinearConstraint] = field(default_factory=list)
    xi_defs: list[XiDef] = field(default_factory=list)
    objective: list[IntVar] = field(default_factory=list)   # minimized sum
    skipped_points: list[int] = field(default_factory=list)
    zero_ufp_points: list[int] = field(default_factory=list)

    _seen: set = field(default_factory=set, repr=False)

    def declare(self, *vars_: IntVar) -> None:
        for v in vars_:
            if v not in self._seen:
                self._seen.add(v)
                self.variables.append(v)

    def add(self, lhs: IntVar | None, rhs: LinExpr, origin: str, site: int) -> None:
        if lhs is not None:
            self.declare(lhs)
        self.declare(*(v for _, v in rhs.terms))
        self.constraints.append(LinearConstraint(lhs, rhs, origin, site))

    def objective_value(self, values) -> int:
        return sum(values[v] for v in self.objective)

    def satisfied_by(self, values) -> bool:
        return all(c.holds(values) for c in self.constraints)

    def dump(self) -> str:
        lines = [f"minimize sum nsb over {len(self.objective)} points,"
                 f" bounds [0, {self.pmax}]"]
        lines += [str(c) for c in self.constraints]
        lines += [str(d) for d in self.xi_defs]
        return "\n".join(lines) + "\n"


def system_stats(system: ConstraintSystem) -> dict[str, int]:
    return {"num_vars": len(system.variables),
            "num_constraints": len(system.constraints)}


def _expr(const: int, *terms: tuple[int, IntVar]) -> LinExpr:
    return LinExpr(const, tuple(terms))


class _Generator:
    def __init__(self, prog: Program, ranges: UfpMap, links: list[DefUseLink],
                 refined: bool, cond_nsb: int, pmax: int):
        self.prog = prog
        self.ranges = ranges
        self.links = links
        self.refined = refined
        self.cond_nsb = cond_nsb
        self.system = ConstraintSystem("c2" if refined else "c1", pmax)
        self.zero_points: set[int] = set()

    def ufp(self, point: int) -> int:
        u = self.ranges.ufp(point)
        if u == self.ranges.ufp_zero:
            self.zero_points.add(point)
        return u

    def visited(self, point: int) -> bool:
        return self.ranges.visited(point)

    def is_zero(self, point: int) -> bool:
        """The point held zero on every recorded visit, so its stored
        value is exact at any width and it contributes no error terms."""
        return (self.ranges.visited(point)
                and self.ranges.ufp(point) == self.ranges.ufp_zero)

    def run(self) -> ConstraintSystem:
        sys = self.system
        for point in range(self.prog.n_points):
            sys.declare(nsb(point))
        sys.objective = [nsb(p) for p in range(self.prog.n_points)]
        self.stmts(self.prog.stmts)
        self.emit_links()
        sys.skipped_points = sorted(p for p in range(self.prog.n_points)
                                    if not self.visited(p))
        sys.zero_ufp_points = sorted(self.zero_points)
        return sys

    def stmts(self, body: list[Stmt]) -> None:
        for st in body:
            if isinstance(st, Assign):
                self.expr(st.expr)
                if self.visited(st.point):
                    root = st.expr.point
                    self.system.add(nsb(root), _expr(0, (1, nsb(st.point))),
                                    "copy", st.point)
                    if self.refined:
                        self.system.add(nsbe(st.point),
                                        _expr(0, (1, nsbe(root))),
                                        "copy", st.point)
            elif isinstance(st, While):
                self.cond(st.cond)
                self.stmts(st.body)
            elif isinstance(st, If):
                self.cond(st.cond)
                self.stmts(st.then_body)
                self.stmts(st.else_body)
            elif isinstance(st, Require):
                if not self.visited(st.point):
                    raise GenError(
                        f"require_nsb({st.name}, {st.bits}) at control point "
                        f"{st.point} has no range information: the statement "
                        f"was never executed")
                self.system.add(nsb(st.point), _expr(st.bits),
                                "require", st.point)
            else:
                raise TypeError(f"unexpected statement {st!r}")

    def cond(self, c: Compare) -> None:
        self.expr(c.left)
        self.expr(c.right)
        for side in (c.left, c.right):
            if self.visited(side.point):
                self.system.add(nsb(side.point), _expr(self.cond_nsb),
                                "cond", side.point)

    def expr(self, e: Expr) -> None:
        if isinstance(e, Num):
            # One bit of representation error per literal, except a zero
            # literal, which every width stores exactly.
            if self.refined and self.visited(e.point) and not self.is_zero(e.point):
                self.system.add(nsbe(e.point), _expr(1), "seed", e.point)
        elif isinstance(e, Var):
            pass                                    # handled via def-use links
        elif isinstance(e, Neg):
            self.expr(e.operand)
            if self.visited(e.point):
                self.copy_like(e.operand.point, e.point)
        elif isinstance(e, Sqrt):
            self.expr(e.arg)
            if self.visited(e.point):
                r, a = e.point, e.arg.point
                if not self.is_zero(a):
                    k = self.ufp(a) - 2 * self.ufp(r) - 2
                    self.system.add(nsb(a), _expr(k, (1, nsb(r))), "operand", r)
                if self.refined:
                    self.system.add(nsbe(r), _expr(0, (1, nsbe(a))),
                                    "operand", r)
        elif isinstance(e, BinOp):
            self.expr(e.left)
            self.expr(e.right)
            if self.visited(e.point):
                self.binop(e)
        else:
            raise TypeError(f"unexpected expression node {e!r}")

    def copy_like(self, src: int, dst: int) -> None:
        self.system.add(nsb(src), _expr(0, (1, nsb(dst))), "copy", dst)
        if self.refined:
            self.system.add(nsbe(dst), _expr(0, (1, nsbe(src))), "copy", dst)

    def binop(self, e: BinOp) -> None:
        sys = self.system
        r, a, b = e.point, e.left.point, e.right.point
        ua, ub, ur = self.ufp(a), self.ufp(b), self.ufp(r)
        x = xi(r, a, b)
        if e.op in ("+", "-"):
            ka, kb = ua - ur, ub - ur
        elif e.op == "*":
            ka = kb = ua + ub - ur
        else:                                       # division a / b
            ka = kb = ua - ub - ur
        sys.add(nsb(a), _expr(ka, (1, nsb(r)), (1, x)), "operand", r)
        sys.add(nsb(b), _expr(kb, (1, nsb(r)), (1, x)), "operand", r)
        carried = e.op in ("*", "/") or not self.refined
        if carried:
            sys.add(x, _expr(1), "carry", r)
        if not self.refined:
            return
        if e.op in ("+", "-"):
            sys.add(nsbe(r), _expr(0, (1, nsbe(a))), "operand", r)
            sys.add(nsbe(r), _expr(0, (1, nsbe(b))), "operand", r)
            # Each cross row spans one operand's error top down to the
            # other's error floor.  An always-zero operand is exact, so
            # no error floor anchors to it; emitting the row anyway would
            # turn the zero sentinel into a huge positive constant.
            if not self.is_zero(b):
                sys.add(nsbe(r), _expr(ua - ub, (1, nsb(b)), (-1, nsb(a)),
                                       (1, nsbe(b)), (1, x)), "operand", r)
            if not self.is_zero(a):
                sys.add(nsbe(r), _expr(ub - ua, (1, nsb(a)), (-1, nsb(b)),
                                       (1, nsbe(a)), (1, x)), "operand", r)
            sys.declare(x)
            sys.xi_defs.append(XiDef(
                x,
                _expr(ub - ua, (1, nsb(a)), (1, nsbe(a))),
                _expr(ua - ub, (1, nsb(b)), (1, nsbe(b))),
                r))
        else:
            sys.add(nsbe(r), _expr(-2, (1, nsb(a)), (1, nsbe(a)),
                                   (1, nsbe(b))), "operand", r)
            sys.add(nsbe(r), _expr(-2, (1, nsb(b)), (1, nsbe(b)),
                                   (1, nsbe(a))), "operand", r)

    def emit_links(self) -> None:
        carried = {l.def_point for l in self.links if l.back_edge}
        for link in self.links:
            d, u = link.def_point, link.use_point
            if not (self.visited(d) and self.visited(u)):
                continue
            if link.back_edge and not link.loop_cond_use:
                # A body-internal back edge: the pre-loop definition's link
                # already carries the first iteration's demand, and later
                # iterations' demands are the same static constraint.
                continue
            # A definition that stays live across the loop's back edge
            # (an accumulator) re-rounds its own previous value every
            # iteration, so after V visits it carries up to V compounded
            # roundings: keep ceil(log2 V) guard bits beyond what each
            # use needs.  This is what skews loop widths upward so the
            # requirement holds at any iteration, not just the first.
            # A temporary rewritten from scratch each iteration carries
            # a single rounding and needs no guard.
            margin = (self.ranges.visits(d) - 1).bit_length() if d in carried else 0
            self.system.add(nsb(d), _expr(margin, (1, nsb(u))), "link", u)
            if self.refined and not link.back_edge:
                self.system.add(nsbe(u), _expr(0, (1, nsbe(d))), "link", u)


def gen_ilp(prog: Program, ranges: UfpMap, links: list[DefUseLink],
            cond_nsb: int = DEFAULT_COND_NSB,
            pmax: int = DEFAULT_PMAX) -> ConstraintSystem:
    """The plain system C1: constant carry bit at every binary operation."""
    return _Generator(prog, ranges, links, False, cond_nsb, pmax).run()


def gen_refined(prog: Program, ranges: UfpMap, links: list[DefUseLink],
                cond_nsb: int = DEFAULT_COND_NSB,
                pmax: int = DEFAULT_PMAX) -> ConstraintSystem:
    """The refined system C2: carry bits at additions become min-definitions."""
    return _Generator(prog, ranges, links, True, cond_nsb, pmax).run()
