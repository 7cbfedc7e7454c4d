"""Five-body gravitational benchmark: program builder and precision sweep.

The generated program is the classic solar-system integrator (Sun,
Jupiter, Saturn, Uranus, Neptune) stepped with the pairwise update
scheme of the Computer Language Benchmarks Game n-body program:
velocities first from all ten body pairs, then positions, one pair
of nested statements per coordinate.  The Sun is pinned at the
origin, so its velocity variables are never declared and the Sun
side of each Sun-planet pair is dropped.

Time is measured in years: with masses scaled by solar_mass = 4*pi^2
the gravitational constant is 1 in AU/year units, and initial
velocities (given per day) are scaled by days_per_year once in the
prologue.  A sweep horizon of H years runs the loop up to
t_max = H - dt/2; the half-step guard keeps the trip count identical
between the reference run and every tuned run, however t rounds.
"""

from __future__ import annotations

import csv
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from importlib import resources
from pathlib import Path

from .flow import build_links
from .interp import Trace, analyze_ranges, run_reference, run_tuned
from .mpfloat import to_float, to_fraction
from .parse import parse_program
from .solver import policy_iterate, solve_monotone
from .constraints import gen_ilp, gen_refined

BODY_ORDER = ("Sun", "Jupiter", "Saturn", "Uranus", "Neptune")
COORDS = ("x", "y", "z")


@dataclass(frozen=True)
class BodySpec:
    """One body's initial state, kept as the decimal literals that will
    appear in the generated source (never as floats: the program parses
    them exactly, so the strings are the ground truth)."""

    name: str
    x: str
    y: str
    z: str
    vx: str
    vy: str
    vz: str
    mass: str

    @property
    def fixed(self) -> bool:
        """The body pinned at the origin (the Sun)."""
        return self.x == self.y == self.z == "0.0"


@dataclass(frozen=True)
class BenchConstants:
    days_per_year: str
    solar_mass: str
    bodies: tuple[BodySpec, ...]

    def planets(self) -> tuple[BodySpec, ...]:
        return tuple(b for b in self.bodies if not b.fixed)


def _data_path() -> Path:
    return Path(str(resources.files(__package__).joinpath("data", "nbody_bodies.txt")))


def load_bodies(path: str | Path | None = None) -> BenchConstants:
    """Read the body table shipped with the package (or an override)."""
    text = Path(path if path is not None else _data_path()).read_text()
    table: dict[str, str] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        table[key.strip()] = value.strip()

    bodies = []
    for name in BODY_ORDER:
        k = name.lower()
        bodies.append(BodySpec(name, table[f"{k}.x"], table[f"{k}.y"],
                               table[f"{k}.z"], table[f"{k}.vx"],
                               table[f"{k}.vy"], table[f"{k}.vz"],
                               table[f"{k}.mass"]))
    return BenchConstants(table["days_per_year"], table["solar_mass"],
                          tuple(bodies))


def build_nbody_program(constants: BenchConstants | None = None,
                        dt: str = "0.01", t_max: str = "1000.0",
                        req: int = 24) -> str:
    """Emit the benchmark as mini-language source.

    req is the bit requirement placed on each planet coordinate after
    the loop.  The Sun contributes its (zero) position to the pair
    terms but receives no velocity or position updates.
    """
    c = constants if constants is not None else load_bodies()
    sun = c.bodies[0]
    if not sun.fixed:
        raise ValueError("first body must sit at the origin")

    out = ["# Solar-system step benchmark: pairwise gravity, velocity",
           "# updates before position updates, Sun pinned at the origin.",
           f"dt = {dt};",
           "t = 0.0;",
           f"t_max = {t_max};",
           f"days_per_year = {c.days_per_year};",
           f"solar_mass = {c.solar_mass};"]
    for b in c.bodies:
        out.append(f"x{b.name} = {b.x};")
        out.append(f"y{b.name} = {b.y};")
        out.append(f"z{b.name} = {b.z};")
        if not b.fixed:
            out.append(f"vx{b.name} = {b.vx} * days_per_year;")
            out.append(f"vy{b.name} = {b.vy} * days_per_year;")
            out.append(f"vz{b.name} = {b.vz} * days_per_year;")
        if b.mass == "1.0":
            out.append(f"mass{b.name} = solar_mass;")
        else:
            out.append(f"mass{b.name} = {b.mass} * solar_mass;")

    out.append("while (t < t_max) {")
    names = [b.name for b in c.bodies]
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            bi, bj = c.bodies[i], c.bodies[j]
            for d in COORDS:
                out.append(f"  d{d} = {d}{bi.name} - {d}{bj.name};")
            out.append("  distance = sqrt(dx * dx + dy * dy + dz * dz);")
            out.append("  mag = dt / (distance * distance * distance);")
            if not bi.fixed:
                for d in COORDS:
                    out.append(f"  v{d}{bi.name} = v{d}{bi.name}"
                               f" - d{d} * mass{bj.name} * mag;")
            for d in COORDS:
                out.append(f"  v{d}{bj.name} = v{d}{bj.name}"
                           f" + d{d} * mass{bi.name} * mag;")
    for b in c.planets():
        for d in COORDS:
            out.append(f"  {d}{b.name} = {d}{b.name} + dt * v{d}{b.name};")
    out.append("  t = t + dt;")
    out.append("}")
    for b in c.planets():
        for d in COORDS:
            out.append(f"require_nsb({d}{b.name}, {req});")
    return "\n".join(out) + "\n"


def horizon_t_max(years: float | str, dt: str = "0.01") -> str:
    """t_max for an H-year horizon: H - dt/2, exactly in decimal."""
    guard = Decimal(str(years)) - Decimal(dt) / 2
    return format(guard, "f")


def planet_coord_names(constants: BenchConstants | None = None) -> tuple[str, ...]:
    c = constants if constants is not None else load_bodies()
    return tuple(f"{d}{b.name}" for b in c.planets() for d in COORDS)


def total_energy(env) -> float:
    """Kinetic plus pairwise potential energy of a program environment.

    env maps variable names to interpreter values; masses, positions
    and velocities are read back under the same names the builder
    emits.  With the benchmark's units the result is in
    solar-mass AU^2 / year^2 and G = 1.
    """

    def f(name: str) -> float:
        return to_float(env[name])

    names = [b for b in BODY_ORDER]
    e = 0.0
    for b in names:
        if f"vx{b}" in env:
            v2 = f(f"vx{b}") ** 2 + f(f"vy{b}") ** 2 + f(f"vz{b}") ** 2
            e += 0.5 * f(f"mass{b}") * v2
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            dx = f(f"x{names[i]}") - f(f"x{names[j]}")
            dy = f(f"y{names[i]}") - f(f"y{names[j]}")
            dz = f(f"z{names[i]}") - f(f"z{names[j]}")
            r = math.sqrt(dx * dx + dy * dy + dz * dz)
            e -= f(f"mass{names[i]}") * f(f"mass{names[j]}") / r
    return e


def reference_energy_drift(years: float = 10.0, dt: str = "0.01",
                           pref: int = 200,
                           constants: BenchConstants | None = None) -> float:
    """|E(end) - E(start)| / |E(start)| for the reference integrator."""
    c = constants if constants is not None else load_bodies()
    start = run_reference(parse_program(build_nbody_program(c, dt, horizon_t_max(0, dt))), pref)
    end = run_reference(parse_program(build_nbody_program(c, dt, horizon_t_max(years, dt))), pref)
    e0 = total_energy(start.env)
    return abs(total_energy(end.env) - e0) / abs(e0)


def _distance(ref_env, tuned_env, body: str) -> float:
    """Euclidean distance between the two runs' positions of one body,
    with the differences taken exactly before any float rounding."""
    s = Fraction(0)
    for d in COORDS:
        diff = to_fraction(ref_env[f"{d}{body}"]) - to_fraction(tuned_env[f"{d}{body}"])
        s += diff * diff
    return math.sqrt(float(s))


@dataclass(frozen=True)
class ExperimentPlan:
    """One precision sweep: every requirement in nsb_values at every
    horizon, sharing the reference run and range analysis per horizon.

    t_max, when set, overrides the horizon-derived loop bound for every
    cell (the horizon then only labels the output rows).  out_dir is
    the default output directory; run_experiment's argument wins.
    """

    nsb_values: tuple[int, ...] = (11, 18, 24, 34, 43, 53)
    horizons_years: tuple[float, ...] = (10.0,)
    dt: str = "0.01"
    t_max: str | None = None
    method: str = "ilp"
    pref: int = 500
    cond_nsb: int = 53
    write_series: bool = True
    out_dir: str | None = None

    def __post_init__(self):
        for n in self.nsb_values:
            if not 1 <= n <= self.pref:
                raise ValueError(f"requirement {n} outside [1, {self.pref}]")


@dataclass(frozen=True)
class SummaryRow:
    nsb: int
    horizon_years: float
    body: str
    distance_au: float
    tune_seconds: float
    run_seconds: float


def _solve_for(source: str, ranges, plan: ExperimentPlan):
    prog = parse_program(source)
    links = build_links(prog)
    c1 = gen_ilp(prog, ranges, links, plan.cond_nsb, plan.pref)
    if plan.method == "pi":
        c2 = gen_refined(prog, ranges, links, plan.cond_nsb, plan.pref)
        assignment, _, _ = policy_iterate(c2)
    else:
        assignment = solve_monotone(c1)
    return prog, assignment


def _cell_t_max(plan: ExperimentPlan, years: float) -> str:
    return plan.t_max if plan.t_max is not None else horizon_t_max(years, plan.dt)


def _prepare_horizon(plan: ExperimentPlan, c: BenchConstants, years: float):
    """Range analysis and reference trace, shared by every requirement
    at this horizon (neither depends on the require_nsb bit counts)."""
    base_prog = parse_program(build_nbody_program(c, plan.dt, _cell_t_max(plan, years)))
    ranges = analyze_ranges(base_prog, plan.pref)
    ref = run_reference(base_prog, plan.pref, track=planet_coord_names(c))
    return ranges, ref


def _run_cell(plan: ExperimentPlan, c: BenchConstants, years: float,
              req: int, shared=None):
    """Tune and run one (requirement, horizon) cell.

    Returns (distances, series, tune_seconds, run_seconds) where
    distances is [(body, final drift)] and series the per-step rows or
    None.  tune_seconds covers constraint generation and solving only;
    the shared range/reference stage is not charged to any cell (a
    worker recomputes it when shared is None, e.g. under a process
    pool, but the attribution stays the same).
    """
    coords = planet_coord_names(c)
    bodies = [b.name for b in c.planets()]
    ranges, ref = shared if shared is not None else _prepare_horizon(plan, c, years)

    source = build_nbody_program(c, plan.dt, _cell_t_max(plan, years), req)
    t0 = time.perf_counter()
    prog, assignment = _solve_for(source, ranges, plan)
    tune_s = time.perf_counter() - t0

    t0 = time.perf_counter()
    tuned = run_tuned(prog, assignment.widths(), track=coords)
    run_s = time.perf_counter() - t0
    _check_aligned(ref, tuned, coords)

    distances = [(body, _distance(ref.env, tuned.env, body)) for body in bodies]
    series = _series_rows(ref, tuned, bodies) if plan.write_series else None
    return distances, series, tune_s, run_s


def run_experiment(plan: ExperimentPlan, out_dir: str | Path | None = None,
                   constants: BenchConstants | None = None,
                   jobs: int = 1) -> list[SummaryRow]:
    """Run the sweep and write summary.csv (plus one series file per
    cell when write_series is set) under out_dir.

    With jobs > 1 the cells run in separate processes, each redoing
    the range/reference stage; results and row order are identical to
    the sequential run.  On error, rows for the cells that finished
    are still flushed to summary.csv before the exception propagates.
    """
    c = constants if constants is not None else load_bodies()
    target = out_dir if out_dir is not None else plan.out_dir
    if target is None:
        raise ValueError("run_experiment needs an output directory "
                         "(argument or plan.out_dir)")
    out = Path(target)
    out.mkdir(parents=True, exist_ok=True)

    cells = [(years, req) for years in plan.horizons_years
             for req in plan.nsb_values]
    results: dict[tuple[float, int], tuple] = {}
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = {pool.submit(_run_cell, plan, c, years, req): (years, req)
                           for years, req in cells}
                for fut in as_completed(futures):
                    results[futures[fut]] = fut.result()
        else:
            for years in plan.horizons_years:
                shared = _prepare_horizon(plan, c, years)
                for req in plan.nsb_values:
                    results[(years, req)] = _run_cell(plan, c, years, req, shared)
    finally:
        rows = _collect_rows(plan, cells, results, out)
        _write_summary(out / "summary.csv", rows)
    return rows


def _collect_rows(plan, cells, results, out: Path) -> list[SummaryRow]:
    rows: list[SummaryRow] = []
    for years, req in cells:
        if (years, req) not in results:
            continue
        distances, series, tune_s, run_s = results[(years, req)]
        for body, dist in distances:
            rows.append(SummaryRow(req, years, body, dist, tune_s, run_s))
        if series is not None:
            _write_series(out / _series_name(req, years), series)
    return rows


def _write_summary(path: Path, rows: list[SummaryRow]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["nsb", "horizon_years", "body", "distance_au",
                    "tune_seconds", "run_seconds"])
        for r in rows:
            w.writerow([r.nsb, r.horizon_years, r.body, repr(r.distance_au),
                        f"{r.tune_seconds:.3f}", f"{r.run_seconds:.3f}"])


def _series_name(req: int, years: float) -> str:
    return f"series_nsb{req:02d}_h{years:g}y.csv"


def _check_aligned(ref: Trace, tuned: Trace, coords) -> None:
    nref = len(ref.samples[coords[0]])
    ntuned = len(tuned.samples[coords[0]])
    if nref != ntuned:
        raise RuntimeError(f"trip counts diverged: reference stored "
                           f"{nref} samples, tuned {ntuned}")


def _series_rows(ref: Trace, tuned: Trace, bodies) -> list[tuple[int, str, float]]:
    """Per-step drift rows (k, body, distance); k = 0 is the state
    before the first step and k = n the state after step n."""
    rows = []
    steps = len(ref.samples[f"x{bodies[0]}"])
    for k in range(steps):
        for body in bodies:
            env_r = {f"{d}{body}": ref.samples[f"{d}{body}"][k] for d in COORDS}
            env_t = {f"{d}{body}": tuned.samples[f"{d}{body}"][k] for d in COORDS}
            rows.append((k, body, _distance(env_r, env_t, body)))
    return rows


def _write_series(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "body", "distance_au"])
        for k, body, dist in rows:
            w.writerow([k, body, repr(dist)])
