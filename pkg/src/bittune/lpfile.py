"""CPLEX-LP text export for constraint systems, plus solution import.

The export lets any external ILP solver cross-check the built-in ones:
variables keep their deterministic nsb_p / nsbe_p / xi_p names, every
row is rewritten as ``lhs - rhs-terms >= constant``, and all variables
are declared integer over [0, pmax].  Systems with carry definitions
must be exported under a policy, which resolves them into linear rows.

Solutions come back as ``name = value`` lines (one per variable, '#'
comments allowed) and can be checked against the system directly.
"""

from __future__ import annotations

from .constraints import ConstraintSystem


def _wrap(parts: list[str], head: str, limit: int = 72) -> list[str]:
    lines = []
    cur = head
    for p in parts:
        if len(cur) + len(p) + 1 > limit and cur != head:
            lines.append(cur)
            cur = "   "
        cur += " " + p
    lines.append(cur)
    return lines


def export_lp(system: ConstraintSystem, policy=None) -> str:
    """Render the system (resolved under policy if needed) as LP text."""
    if system.xi_defs:
        if policy is None:
            raise ValueError(
                "system has carry definitions; export requires a policy")
        from .solver import apply_policy
        system = apply_policy(system, policy)

    out: list[str] = ["\\ precision-demand constraint system"]
    out.append("Minimize")
    obj_parts = []
    for i, v in enumerate(system.objective):
        obj_parts.append(("+ " if i else "") + v.name)
    out += _wrap(obj_parts, " obj:")

    out.append("Subject To")
    for i, c in enumerate(system.constraints):
        coeffs: dict[str, int] = {}
        if c.lhs is not None:
            coeffs[c.lhs.name] = 1
        for coef, v in c.rhs.terms:
            coeffs[v.name] = coeffs.get(v.name, 0) - coef
        parts = []
        for name, k in coeffs.items():
            if k == 0:
                continue
            sign = "+" if k > 0 else "-"
            mag = "" if abs(k) == 1 else f"{abs(k)} "
            parts.append(f"{sign} {mag}{name}")
        if not parts:
            # Degenerate row with no variables left: keep it as a comment so
            # row numbering in the file matches the system.
            out.append(f" \\ c{i}: 0 >= {c.rhs.const}")
            continue
        parts.append(f">= {c.rhs.const}")
        out += _wrap(parts, f" c{i}:")

    out.append("Bounds")
    for v in system.variables:
        out.append(f" 0 <= {v.name} <= {system.pmax}")
    out.append("General")
    out += _wrap([v.name for v in system.variables], " ")
    out.append("End")
    return "\n".join(out) + "\n"


def parse_solution(text: str) -> dict[str, int]:
    """Read 'name = value' lines; '#' starts a comment."""
    values: dict[str, int] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"malformed solution line {raw!r}")
        name, _, val = line.partition("=")
        values[name.strip()] = int(val.strip())
    return values


def check_solution(system: ConstraintSystem, named: dict[str, int],
                   policy=None) -> tuple[bool, int]:
    """(feasible, objective total) of an external solution for the system."""
    if system.xi_defs:
        from .solver import apply_policy
        if policy is None:
            raise ValueError("carry definitions present; a policy is required")
        system = apply_policy(system, policy)
    values = {}
    for v in system.variables:
        if v.name not in named:
            raise ValueError(f"solution is missing variable {v.name}")
        values[v] = named[v.name]
    feasible = system.satisfied_by(values) and all(
        0 <= n <= system.pmax for n in values.values())
    return feasible, system.objective_value(values)
