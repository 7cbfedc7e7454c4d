"""Program execution: reference, range-recording, and tuned modes.

One tree-walking interpreter core serves all three modes; they differ
only in the width chosen at each control point and in what gets recorded
per visit.  The reference mode evaluates everything at one high working
precision.  Range analysis additionally tracks, per control point, the
magnitude extremes and the visit count over one or more runs.  The tuned
mode evaluates every point at its solved width: literals parse to the
literal point's width, reads re-round the stored value to the read
point's width, operations round correctly to the result point's width,
and stores round to the target point's width.  With a uniform assignment
the tuned mode reproduces the reference bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import mpfloat
from .mpfloat import DEFAULT_PRECISION, MPDomainError, MPValue, abs_, round_to
from .program import (
    Assign, BinOp, Compare, If, Neg, Num, Program, Require, Sqrt, Var, While,
)

MAX_STEPS = 10_000_000


class EvalError(RuntimeError):
    def __init__(self, message: str, point: int | None = None):
        if point is not None:
            message = f"{message} (control point {point})"
        super().__init__(message)
        self.point = point


@dataclass
class Trace:
    env: dict[str, MPValue]
    samples: dict[str, list[MPValue]] = field(default_factory=dict)
    steps: int = 0


@dataclass
class PointRange:
    max_abs: MPValue
    min_abs: MPValue
    visits: int


@dataclass
class UfpMap:
    """Per-point magnitude information from one or more recorded runs."""

    ranges: dict[int, PointRange] = field(default_factory=dict)
    ufp_zero: int = -DEFAULT_PRECISION

    def visited(self, point: int) -> bool:
        return point in self.ranges

    def visits(self, point: int) -> int:
        r = self.ranges.get(point)
        return r.visits if r else 0

    def ufp(self, point: int) -> int:
        """ufp of the largest magnitude seen; the sentinel for all-zero points."""
        r = self.ranges.get(point)
        if r is None or r.max_abs.is_zero():
            return self.ufp_zero
        return mpfloat.ufp(r.max_abs)

    def record(self, point: int, value: MPValue) -> None:
        a = abs_(value)
        r = self.ranges.get(point)
        if r is None:
            self.ranges[point] = PointRange(a, a, 1)
        else:
            if a > r.max_abs:
                r.max_abs = a
            if a < r.min_abs:
                r.min_abs = a
            r.visits += 1

    def merge(self, other: "UfpMap") -> None:
        for point, r in other.ranges.items():
            mine = self.ranges.get(point)
            if mine is None:
                self.ranges[point] = PointRange(r.max_abs, r.min_abs, r.visits)
            else:
                if r.max_abs > mine.max_abs:
                    mine.max_abs = r.max_abs
                if r.min_abs < mine.min_abs:
                    mine.min_abs = r.min_abs
                mine.visits += r.visits


_COMPARE = {
    "<": lambda c: c < 0,
    "<=": lambda c: c <= 0,
    ">": lambda c: c > 0,
    ">=": lambda c: c >= 0,
    "==": lambda c: c == 0,
    "!=": lambda c: c != 0,
}


class _Interp:
    def __init__(self, prog: Program, width_for, bindings=None, track=(),
                 max_steps: int = MAX_STEPS, ranges: UfpMap | None = None):
        self.prog = prog
        self.width_for = width_for
        self.track = tuple(track)
        self.max_steps = max_steps
        self.ranges = ranges
        self.steps = 0
        self.env: dict[str, MPValue] = {}
        self.samples: dict[str, list[MPValue]] = {v: [] for v in self.track}
        for name, value in (bindings or {}).items():
            if isinstance(value, str):
                value = mpfloat.parse_decimal(value, DEFAULT_PRECISION)
            self.env[name] = value

    def record(self, point: int, value: MPValue) -> MPValue:
        if self.ranges is not None:
            self.ranges.record(point, value)
        return value

    def eval(self, e) -> MPValue:
        if isinstance(e, Num):
            return self.record(e.point,
                               mpfloat.parse_decimal(e.text, self.width_for(e.point)))
        if isinstance(e, Var):
            raw = self.env.get(e.name)
            if raw is None:
                raise EvalError(f"variable {e.name!r} read before assignment",
                                e.point)
            return self.record(e.point, round_to(raw, self.width_for(e.point)))
        if isinstance(e, BinOp):
            a = self.eval(e.left)
            b = self.eval(e.right)
            try:
                v = mpfloat.arith(e.op, a, b, self.width_for(e.point))
            except MPDomainError as err:
                raise EvalError(str(err), e.point) from err
            return self.record(e.point, v)
        if isinstance(e, Neg):
            v = mpfloat.arith("neg", self.eval(e.operand), None,
                              self.width_for(e.point))
            return self.record(e.point, v)
        if isinstance(e, Sqrt):
            a = self.eval(e.arg)
            try:
                v = mpfloat.sqrt(a, self.width_for(e.point))
            except MPDomainError as err:
                raise EvalError(str(err), e.point) from err
            return self.record(e.point, v)
        raise TypeError(f"unexpected expression node {e!r}")

    def test(self, cond: Compare) -> bool:
        left = self.eval(cond.left)
        right = self.eval(cond.right)
        c = -1 if left < right else (0 if left == right else 1)
        return _COMPARE[cond.op](c)

    def tick(self) -> None:
        self.steps += 1
        if self.steps > self.max_steps:
            raise EvalError(f"iteration cap of {self.max_steps} steps exceeded")

    def run(self, stmts) -> None:
        for st in stmts:
            if isinstance(st, Assign):
                self.tick()
                v = self.eval(st.expr)
                stored = round_to(v, self.width_for(st.point))
                self.record(st.point, stored)
                self.env[st.name] = stored
                if st.name in self.samples:
                    self.samples[st.name].append(stored)
            elif isinstance(st, While):
                self.tick()
                while self.test(st.cond):
                    self.run(st.body)
                    self.tick()
            elif isinstance(st, If):
                self.tick()
                if self.test(st.cond):
                    self.run(st.then_body)
                else:
                    self.run(st.else_body)
            elif isinstance(st, Require):
                self.tick()
                raw = self.env.get(st.name)
                if raw is None:
                    raise EvalError(
                        f"require_nsb on unassigned variable {st.name!r}",
                        st.point)
                self.record(st.point, round_to(raw, self.width_for(st.point)))
            else:
                raise TypeError(f"unexpected statement {st!r}")

    def trace(self) -> Trace:
        return Trace(self.env, self.samples, self.steps)


def run_reference(prog: Program, pref: int = DEFAULT_PRECISION, bindings=None,
                  track=(), max_steps: int = MAX_STEPS) -> Trace:
    """Execute every operation at pref bits."""
    it = _Interp(prog, lambda p: pref, bindings, track, max_steps)
    it.run(prog.stmts)
    return it.trace()


def analyze_ranges(prog: Program, pref: int = DEFAULT_PRECISION,
                   binding_sets=None, ufp_zero: int | None = None,
                   max_steps: int = MAX_STEPS) -> UfpMap:
    """Record per-point magnitude ranges over one run per binding set."""
    sets = list(binding_sets) if binding_sets else [None]
    out = UfpMap(ufp_zero=-pref if ufp_zero is None else ufp_zero)
    for bindings in sets:
        it = _Interp(prog, lambda p: pref, bindings, (), max_steps, ranges=UfpMap())
        it.run(prog.stmts)
        out.merge(it.ranges)
    return out


def run_tuned(prog: Program, widths: dict[int, int], bindings=None, track=(),
              max_steps: int = MAX_STEPS) -> Trace:
    """Execute with each control point at its assigned width (clamped to >= 1)."""

    def width_for(point: int) -> int:
        n = widths.get(point)
        if n is None:
            raise EvalError("no width assigned", point)
        return n if n >= 1 else 1

    it = _Interp(prog, width_for, bindings, track, max_steps)
    it.run(prog.stmts)
    return it.trace()
