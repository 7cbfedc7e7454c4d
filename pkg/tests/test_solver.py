"""Solvers: least fixed point, branch and bound, policy improvement.

Oracles are kept deliberately independent: a chaotic-iteration loop
written here in the dumbest possible style, full enumeration over small
boxes, and (when scipy is importable) an external LP/MILP solver.
"""

import itertools
import random

import pytest

from bittune.constraints import (
    ConstraintSystem, LinExpr, gen_refined, nsb,
)
from bittune.flow import build_links
from bittune.interp import analyze_ranges
from bittune.parse import parse_program
from bittune.solver import (
    Policy, SolverError, apply_policy, policy_iterate, solve_ilp,
    solve_monotone,
)
from helpers import gen_straight_line


def make_system(rows, n_vars, pmax):
    """rows: list of (lhs_index, const, ((coef, var_index), ...))."""
    sys_ = ConstraintSystem("test", pmax)
    vars_ = [nsb(i) for i in range(n_vars)]
    sys_.declare(*vars_)
    sys_.objective = list(vars_)
    for lhs_i, const, terms in rows:
        expr = LinExpr(const, tuple((c, vars_[i]) for c, i in terms))
        sys_.add(vars_[lhs_i] if lhs_i is not None else None, expr, "test", 0)
    return sys_, vars_


def random_monotone_rows(rng, n_vars, n_rows, cmax):
    """DAG-shaped rows (terms only reference lower-numbered variables),
    so the system is always feasible inside a large enough box."""
    rows = []
    for _ in range(n_rows):
        lhs = rng.randrange(n_vars)
        terms = tuple((1, rng.randrange(lhs)) for _ in range(rng.randint(0, 2))
                      if lhs > 0)
        rows.append((lhs, rng.randint(0, cmax), terms))
    return rows


def random_mixed_rows(rng, n_vars, n_rows, cmax):
    rows = []
    for _ in range(n_rows):
        lhs = rng.randrange(n_vars)
        terms = []
        for _ in range(rng.randint(0, 3)):
            v = rng.randrange(n_vars)
            if v != lhs:
                terms.append((rng.choice((1, -1)), v))
        rows.append((lhs, rng.randint(-cmax, cmax), tuple(terms)))
    return rows


def chaotic_fixpoint(rows, n_vars, pmax):
    """Independent oracle: raise left sides until every row holds."""
    vals = [0] * n_vars
    for _ in range(n_vars * len(rows) * pmax + 10):
        changed = False
        for lhs, const, terms in rows:
            need = const + sum(c * vals[i] for c, i in terms)
            if lhs is not None and vals[lhs] < need:
                vals[lhs] = need
                changed = True
        if not changed:
            return vals
    raise AssertionError("oracle did not stabilize")


def enumerate_optimum(rows, n_vars, box):
    best = None
    for point in itertools.product(range(box + 1), repeat=n_vars):
        ok = all(
            (point[lhs] if lhs is not None else 0)
            >= const + sum(c * point[i] for c, i in terms)
            for lhs, const, terms in rows)
        if ok:
            total = sum(point)
            if best is None or total < best[0]:
                best = (total, point)
    return best


class TestMonotone:
    def test_kleene_matches_chaotic_oracle(self, rng):
        for _ in range(60):
            n = rng.randint(1, 20)
            rows = random_monotone_rows(rng, n, rng.randint(1, 40), 15)
            sys_, vars_ = make_system(rows, n, pmax=500)
            want = chaotic_fixpoint(rows, n, 500)
            if max(want) > 500:
                # The DAG's uncapped fixed point can compound past the
                # box; the solver must report that instead of clamping.
                with pytest.raises(SolverError):
                    solve_monotone(sys_)
                continue
            got = solve_monotone(sys_)
            assert [got.values[v] for v in vars_] == want

    def test_least_point_decrement_breaks_feasibility(self, rng):
        # Every feasible point dominates the least fixed point, so
        # lowering any solved coordinate must violate some row.
        for _ in range(30):
            n = rng.randint(2, 10)
            rows = random_monotone_rows(rng, n, rng.randint(2, 20), 12)
            if max(chaotic_fixpoint(rows, n, 500)) > 500:
                continue
            sys_, vars_ = make_system(rows, n, pmax=500)
            sol = solve_monotone(sys_)
            assert sys_.satisfied_by(sol.values)
            for v in vars_:
                if sol.values[v] == 0:
                    continue
                lowered = dict(sol.values)
                lowered[v] -= 1
                assert not sys_.satisfied_by(lowered)

    def test_total_is_objective_sum(self):
        sys_, vars_ = make_system([(0, 7, ()), (1, 3, ((1, 0),))], 2, 100)
        sol = solve_monotone(sys_)
        assert sol.total == 7 + 10

    def test_unsatisfiable_growth_cycle(self):
        # a >= b + 1 and b >= a + 1 has no fixed point below any cap.
        rows = [(0, 1, ((1, 1),)), (1, 1, ((1, 0),))]
        sys_, _ = make_system(rows, 2, pmax=60)
        with pytest.raises(SolverError):
            solve_monotone(sys_)

    def test_rejects_negative_coefficients(self):
        sys_, _ = make_system([(0, 2, ((-1, 1),))], 2, 100)
        with pytest.raises(SolverError):
            solve_monotone(sys_)


class TestBranchAndBound:
    def test_matches_enumeration_on_small_boxes(self, rng):
        for _ in range(40):
            n = rng.randint(1, 4)
            rows = random_mixed_rows(rng, n, rng.randint(1, 6), 6)
            sys_, vars_ = make_system(rows, n, pmax=8)
            want = enumerate_optimum(rows, n, 8)
            if want is None:
                with pytest.raises(SolverError):
                    solve_ilp(sys_)
                continue
            got = solve_ilp(sys_)
            assert got.total == want[0]
            assert sys_.satisfied_by(got.values)

    def test_monotone_systems_agree_with_kleene(self, rng):
        for _ in range(25):
            n = rng.randint(1, 12)
            rows = random_monotone_rows(rng, n, rng.randint(1, 25), 10)
            if max(chaotic_fixpoint(rows, n, 200)) > 200:
                continue
            sys_, vars_ = make_system(rows, n, pmax=200)
            assert solve_ilp(sys_).total == solve_monotone(sys_).total

    def test_pure_upper_bound_rows(self):
        # A None left side is a standing requirement 0 >= const + terms.
        sys_, vars_ = make_system([(0, 5, ()), (None, 3, ((-1, 0),))], 1, 50)
        sol = solve_ilp(sys_)
        assert sol.values[vars_[0]] == 5

    def test_infeasible_upper_bound(self):
        sys_, _ = make_system([(0, 10, ()), (None, 1, ((1, 0),))], 1, 50)
        with pytest.raises(SolverError, match="no integer point"):
            solve_ilp(sys_)

    def test_node_limit(self, rng):
        rows = random_mixed_rows(random.Random(7), 8, 16, 10)
        sys_, _ = make_system(rows, 8, pmax=30)
        with pytest.raises(SolverError, match="exceeded"):
            solve_ilp(sys_, node_limit=1)

    def test_policy_required_for_carry_definitions(self):
        src = "a = 8.0;\nb = 0.5;\nc = a + b;\nrequire_nsb(c, 12);\n"
        prog = parse_program(src)
        c2 = gen_refined(prog, analyze_ranges(prog, 100), build_links(prog))
        with pytest.raises(SolverError, match="policy"):
            solve_ilp(c2)


class TestPolicyIteration:
    def _refined(self, src):
        prog = parse_program(src)
        return gen_refined(prog, analyze_ranges(prog, 100), build_links(prog))

    def test_never_worse_than_always_carry(self, rng):
        for _ in range(20):
            c2 = self._refined(gen_straight_line(rng, max_ops=5))
            base = solve_ilp(c2, Policy.const_one(c2))
            improved, _, iterations = policy_iterate(c2)
            assert improved.total <= base.total
            assert iterations >= 1
            assert c2.satisfied_by(improved.values)

    def test_wide_gap_addition_switches_policy(self):
        # b sits ~49 binades below a while the requirement only forces
        # ~31 bits, so a's error can never reach b's carry position:
        # the carry argument goes negative, xi drops to 0, and each
        # point on a's chain sheds one bit.
        c2 = self._refined("a = 512.0;\nb = 0.000000000001;\nc = a + b;\n"
                           "require_nsb(c, 30);\n")
        improved, policy, iterations = policy_iterate(c2)
        base = solve_ilp(c2, Policy.const_one(c2))
        assert improved.total < base.total
        assert iterations == 2
        assert any(sel != 3 for sel in policy.selections.values())

    def test_balanced_addition_keeps_const_one(self):
        # With comparable magnitudes both carry arguments exceed 1, so
        # the always-carry start is already optimal.
        c2 = self._refined("a = 512.0;\nb = 0.25;\nc = a + b;\n"
                           "require_nsb(c, 30);\n")
        improved, policy, iterations = policy_iterate(c2)
        assert iterations == 1
        assert all(sel == 3 for sel in policy.selections.values())
        assert improved.total == solve_ilp(c2, Policy.const_one(c2)).total

    def test_policy_substitution_preserves_variables(self):
        c2 = self._refined("a = 8.0;\nb = 0.5;\nc = a + b;\n"
                           "require_nsb(c, 12);\n")
        plain = apply_policy(c2, Policy.const_one(c2))
        xi_vars = {d.var for d in c2.xi_defs}
        assert not xi_vars & set(plain.variables)
        assert plain.objective == c2.objective

    def test_converged_flag_set(self, rng):
        c2 = self._refined("a = 8.0;\nb = 0.5;\nc = a + b;\n"
                           "require_nsb(c, 12);\n")
        improved, _, _ = policy_iterate(c2)
        assert improved.converged


class TestExternalSolverBelt:
    def test_lp_relaxation_matches_least_fixed_point(self, rng):
        # For monotone systems the feasible region's unique minimal
        # point is integral, so the LP optimum equals the Kleene total.
        scipy_opt = pytest.importorskip("scipy.optimize")
        import numpy as np
        for _ in range(15):
            n = rng.randint(2, 12)
            rows = random_monotone_rows(rng, n, rng.randint(2, 20), 10)
            if max(chaotic_fixpoint(rows, n, 300)) > 300:
                continue
            sys_, vars_ = make_system(rows, n, pmax=300)
            sol = solve_monotone(sys_)
            index = {v: i for i, v in enumerate(vars_)}
            a_ub, b_ub = [], []
            for c in sys_.constraints:
                coeff = [0.0] * n
                if c.lhs is not None:
                    coeff[index[c.lhs]] -= 1.0
                for k, v in c.rhs.terms:
                    coeff[index[v]] += float(k)
                a_ub.append(coeff)
                b_ub.append(float(-c.rhs.const))
            res = scipy_opt.linprog(
                c=np.ones(n), A_ub=np.array(a_ub), b_ub=np.array(b_ub),
                bounds=[(0, 300)] * n, method="highs")
            assert res.status == 0
            assert round(res.fun) == sol.total

    def test_milp_matches_branch_and_bound(self, rng):
        scipy_opt = pytest.importorskip("scipy.optimize")
        import numpy as np
        for _ in range(15):
            n = rng.randint(2, 8)
            rows = random_mixed_rows(rng, n, rng.randint(2, 10), 8)
            sys_, vars_ = make_system(rows, n, pmax=25)
            index = {v: i for i, v in enumerate(vars_)}
            a_ub, b_ub = [], []
            for c in sys_.constraints:
                coeff = [0.0] * n
                if c.lhs is not None:
                    coeff[index[c.lhs]] -= 1.0
                for k, v in c.rhs.terms:
                    coeff[index[v]] += float(k)
                a_ub.append(coeff)
                b_ub.append(float(-c.rhs.const))
            res = scipy_opt.milp(
                c=np.ones(n),
                constraints=scipy_opt.LinearConstraint(
                    np.array(a_ub), ub=np.array(b_ub)),
                integrality=np.ones(n),
                bounds=scipy_opt.Bounds(0, 25))
            if res.status == 2:                      # infeasible
                with pytest.raises(SolverError):
                    solve_ilp(sys_)
                continue
            assert res.status == 0
            assert round(res.fun) == solve_ilp(sys_).total
