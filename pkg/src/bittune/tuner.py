"""Pipeline orchestration: parse, record ranges, solve, verify, report.

tune() runs the whole chain for one source text and returns the solved
assignment together with a report carrying the per-point widths, system
sizes, timings, and a verification table.  Verification compares the
tuned execution against the high-precision reference: for each
require_nsb(v, n) the absolute error |tuned - reference| must stay
within tolerance_factor * 2^(ufp(ref) - n + 1).  The factor (default
100) absorbs accumulation over long runs; the per-operation bound
itself is what the constraints guarantee locally.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field
from fractions import Fraction

from . import mpfloat
from .constraints import (
    DEFAULT_COND_NSB, DEFAULT_PMAX, gen_ilp, gen_refined, system_stats,
)
from .flow import build_links
from .interp import MAX_STEPS, Trace, analyze_ranges, run_reference, run_tuned
from .parse import parse_program
from .program import Program, Require
from .solver import (
    DEFAULT_NODE_LIMIT, DEFAULT_PI_CAP, NsbAssignment, policy_iterate,
    solve_monotone,
)

METHODS = ("ilp", "pi")


class TuneError(ValueError):
    pass


@dataclass
class TuningConfig:
    method: str = "ilp"
    pref: int = mpfloat.DEFAULT_PRECISION
    cond_nsb: int = DEFAULT_COND_NSB
    pmax: int = DEFAULT_PMAX
    pi_cap: int = DEFAULT_PI_CAP
    node_limit: int = DEFAULT_NODE_LIMIT
    max_steps: int = MAX_STEPS
    tolerance_factor: int = 100
    bindings: tuple = ()          # input-binding dicts for open programs

    def check(self) -> None:
        if self.method not in METHODS:
            raise TuneError(f"method must be one of {METHODS}, got {self.method!r}")
        if not (1 <= self.cond_nsb <= self.pmax):
            raise TuneError(
                f"cond_nsb {self.cond_nsb} outside [1, pmax={self.pmax}]")
        if self.pref > self.pmax:
            raise TuneError(f"pref {self.pref} exceeds pmax {self.pmax}")


@dataclass
class VerifyRow:
    var: str
    point: int
    bits: int
    error: str                    # |tuned - reference|, decimal
    ref_ufp: int
    bound: str                    # 2^(ufp - bits + 1), decimal
    passed: bool


@dataclass
class TuningReport:
    method: str
    total_bits: dict[str, int]
    nsb: dict[str, int]           # control point (as str, for JSON) -> width
    systems: dict[str, dict[str, int]]
    pi_iterations: int = 0
    analysis_seconds: float = 0.0
    skipped_points: list[int] = field(default_factory=list)
    zero_ufp_points: list[int] = field(default_factory=list)
    steps_reference: int = 0
    steps_tuned: int = 0
    diverged: bool = False
    verification: list[VerifyRow] = field(default_factory=list)

    def all_passed(self) -> bool:
        return not self.diverged and all(r.passed for r in self.verification)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "TuningReport":
        raw = json.loads(text)
        rows = [VerifyRow(**r) for r in raw.pop("verification")]
        return cls(verification=rows, **raw)

    def to_text(self) -> str:
        lines = [f"method: {self.method}"]
        for name in sorted(self.total_bits):
            lines.append(f"total bits ({name}): {self.total_bits[name]}")
        for name, stats in self.systems.items():
            desc = ", ".join(f"{k}={v}" for k, v in sorted(stats.items()))
            lines.append(f"system {name}: {desc}")
        if self.method == "pi":
            lines.append(f"policy iterations: {self.pi_iterations}")
        lines.append(f"analysis seconds: {self.analysis_seconds:.3f}")
        if self.diverged:
            lines.append(f"control flow diverged: reference ran "
                         f"{self.steps_reference} steps, tuned "
                         f"{self.steps_tuned}")
        if self.verification:
            header = f"{'variable':<16} {'bits':>4} {'error':>13} " \
                     f"{'bound':>13}  result"
            lines.append(header)
            for r in self.verification:
                status = "pass" if r.passed else "FAIL"
                lines.append(f"{r.var:<16} {r.bits:>4} {r.error:>13} "
                             f"{r.bound:>13}  {status}")
        return "\n".join(lines) + "\n"


def _fraction_str(f: Fraction) -> str:
    if f == 0:
        return "0"
    as_float = float(f)
    if as_float != 0.0:
        return repr(as_float)
    # Far below float range: report the binary order of magnitude.
    return f"2^{f.numerator.bit_length() - f.denominator.bit_length()}"


def _verify_rows(prog: Program, ref: Trace, tuned: Trace,
                 tolerance_factor: int) -> list[VerifyRow]:
    rows = []

    def walk(stmts):
        for st in stmts:
            if isinstance(st, Require):
                ref_v = ref.env[st.name]
                tuned_v = tuned.env.get(st.name)
                err = (abs(mpfloat.to_fraction(ref_v) - mpfloat.to_fraction(tuned_v))
                       if tuned_v is not None else None)
                u = (mpfloat.ufp(ref_v) if not ref_v.is_zero()
                     else -mpfloat.DEFAULT_PRECISION)
                bound = Fraction(2) ** (u - st.bits + 1)
                passed = err is not None and err <= tolerance_factor * bound
                rows.append(VerifyRow(
                    st.name, st.point, st.bits,
                    _fraction_str(err) if err is not None else "unavailable",
                    u, _fraction_str(bound), passed))
            elif hasattr(st, "body"):
                walk(st.body)
            elif hasattr(st, "then_body"):
                walk(st.then_body)
                walk(st.else_body)

    walk(prog.stmts)
    return rows


def _require_count(prog: Program) -> int:
    return sum(1 for node in prog.points if isinstance(node, Require))


def tune(source: str, cfg: TuningConfig | None = None):
    """Full pipeline; returns (NsbAssignment, TuningReport)."""
    cfg = cfg or TuningConfig()
    cfg.check()
    t0 = time.perf_counter()
    prog = (parse_program(source, _input_names(cfg))
            if isinstance(source, str) else source)
    if _require_count(prog) == 0:
        raise TuneError("program has no require_nsb statement; nothing to tune")
    links = build_links(prog)
    ranges = analyze_ranges(prog, cfg.pref, cfg.bindings or None,
                            ufp_zero=-cfg.pmax, max_steps=cfg.max_steps)
    c1 = gen_ilp(prog, ranges, links, cfg.cond_nsb, cfg.pmax)
    a_ilp = solve_monotone(c1)
    systems = {"c1": system_stats(c1)}
    totals = {"ilp": a_ilp.total}
    pi_iterations = 0
    if cfg.method == "pi":
        c2 = gen_refined(prog, ranges, links, cfg.cond_nsb, cfg.pmax)
        assignment, _policy, pi_iterations = policy_iterate(
            c2, cfg.node_limit, cfg.pi_cap)
        stats2 = system_stats(c2)
        stats2["xi_defs"] = len(c2.xi_defs)
        systems["c2"] = stats2
        totals["pi"] = assignment.total
        active = c2
    else:
        assignment = a_ilp
        active = c1
    if not active.satisfied_by(assignment.values):
        raise TuneError("solved assignment fails substitution check")
    elapsed = time.perf_counter() - t0

    widths = assignment.widths()
    ref = run_reference(prog, cfg.pref, _first_binding(cfg),
                        max_steps=cfg.max_steps)
    tuned = run_tuned(prog, widths, _first_binding(cfg),
                      max_steps=cfg.max_steps)
    report = TuningReport(
        method=cfg.method,
        total_bits=totals,
        nsb={str(p): n for p, n in sorted(widths.items())},
        systems=systems,
        pi_iterations=pi_iterations,
        analysis_seconds=round(elapsed, 3),
        skipped_points=active.skipped_points,
        zero_ufp_points=active.zero_ufp_points,
        steps_reference=ref.steps,
        steps_tuned=tuned.steps,
        diverged=ref.steps != tuned.steps,
        verification=_verify_rows(prog, ref, tuned, cfg.tolerance_factor),
    )
    return assignment, report


def _first_binding(cfg: TuningConfig):
    return cfg.bindings[0] if cfg.bindings else None


def _input_names(cfg: TuningConfig) -> tuple:
    names: set[str] = set()
    for b in cfg.bindings:
        names |= set(b)
    return tuple(sorted(names))


def verify(source, assignment: NsbAssignment | dict, cfg: TuningConfig | None = None):
    """Run reference vs tuned and build the verification table."""
    cfg = cfg or TuningConfig()
    prog = (parse_program(source, _input_names(cfg))
            if isinstance(source, str) else source)
    widths = (assignment.widths() if isinstance(assignment, NsbAssignment)
              else dict(assignment))
    ref = run_reference(prog, cfg.pref, _first_binding(cfg),
                        max_steps=cfg.max_steps)
    tuned = run_tuned(prog, widths, _first_binding(cfg),
                      max_steps=cfg.max_steps)
    rows = _verify_rows(prog, ref, tuned, cfg.tolerance_factor)
    return rows, ref, tuned
