import itertools

import numpy as np
import pytest

from simrep.simulators.fba import (
    FbaInfeasible,
    FbaUnbounded,
    FluxNetwork,
    fba_knockout,
    fba_solve,
    load_toy_network,
    objective_value,
)


def vertex_enumeration(s, lb, ub, c):
    """Best objective over all candidate vertices (bound-assignment search)."""
    m, n = s.shape
    best = None
    for assign in itertools.product((None, "lb", "ub"), repeat=n):
        fixed = [j for j in range(n) if assign[j] is not None]
        free = [j for j in range(n) if assign[j] is None]
        v = np.zeros(n)
        for j in fixed:
            v[j] = lb[j] if assign[j] == "lb" else ub[j]
        if free:
            sf = s[:, free]
            if np.linalg.matrix_rank(sf) < len(free):
                continue
            rhs = -s[:, fixed] @ v[fixed] if fixed else np.zeros(m)
            v[free] = np.linalg.lstsq(sf, rhs, rcond=None)[0]
        if np.abs(s @ v).max() > 1e-9:
            continue
        if np.any(v < lb - 1e-9) or np.any(v > ub + 1e-9):
            continue
        obj = float(c @ v)
        if best is None or obj > best:
            best = obj
    return best


def simple_net(s, lb, ub, c, mets=None):
    n = len(lb)
    return FluxNetwork(
        s, lb, ub, c,
        reactions=tuple(f"R{j}" for j in range(n)),
        metabolites=tuple(mets or (f"M{i}" for i in range(s.shape[0]))),
        subsystems=tuple("sub" for _ in range(n)),
    )


class TestSolve:
    def test_single_unconstrained_reaction(self):
        net = simple_net(np.zeros((0, 1)), [0.0], [10.0], [1.0])
        out = fba_solve(net)
        assert out.data[0] == pytest.approx(10.0, abs=1e-10)

    def test_uptake_chain_throughput(self):
        # uptake (negative flux into the cell, bound [-5, 0]) feeds secretion
        s = np.array([[-1.0, -1.0]])  # A consumed by both columns' convention
        net = simple_net(s, [-5.0, 0.0], [0.0, 100.0], [0.0, 1.0], mets=("A",))
        out = fba_solve(net)
        assert out.data[1] == pytest.approx(5.0, abs=1e-10)
        assert out.data[0] == pytest.approx(-5.0, abs=1e-10)

    def test_random_small_lps_match_vertex_enumeration(self):
        rng = np.random.default_rng(42)
        checked = 0
        for _ in range(200):
            n = int(rng.integers(2, 7))
            m = int(rng.integers(1, n))
            s = np.round(rng.normal(size=(m, n)) * rng.integers(0, 2, size=(m, n)), 1)
            lb = np.round(rng.uniform(-5, 0, n), 1)
            ub = np.round(rng.uniform(0, 5, n), 1)
            c = np.round(rng.normal(size=n), 1)
            if not np.any(c != 0):
                c[0] = 1.0
            expected = vertex_enumeration(s, lb, ub, c)
            net = simple_net(s, lb, ub, c)
            try:
                out = fba_solve(net)
            except FbaInfeasible:
                assert expected is None
                continue
            assert expected is not None
            assert objective_value(net, out) == pytest.approx(expected, abs=1e-8)
            assert np.abs(s @ out.data).max() <= 1e-8
            assert np.all(out.data >= lb - 1e-10) and np.all(out.data <= ub + 1e-10)
            checked += 1
        assert checked > 100

    def test_deterministic(self):
        net = load_toy_network()
        a, b = fba_solve(net), fba_solve(net)
        assert np.array_equal(a.data, b.data)

    def test_infeasible_reported(self):
        # forced uptake with no consumer cannot balance
        s = np.array([[-1.0]])
        net = simple_net(s, [-5.0, ], [-2.0], [1.0], mets=("A",))
        with pytest.raises(FbaInfeasible):
            fba_solve(net)

    def test_unbounded_reported(self):
        # a free cycle carrying objective grows without limit
        s = np.array([[1.0, -1.0]])
        net = simple_net(s, [-np.inf, -np.inf], [np.inf, np.inf], [1.0, 0.0],
                         mets=("A",))
        with pytest.raises(FbaUnbounded):
            fba_solve(net)


class TestKnockout:
    def test_zero_flux_knockout_same_objective(self, toy_net):
        base = fba_solve(toy_net)
        base_obj = objective_value(toy_net, base)
        for i, flux in enumerate(base.data):
            if abs(flux) <= 1e-12:
                out = fba_knockout(toy_net, i)
                assert objective_value(toy_net, out) == pytest.approx(base_obj, abs=1e-8)

    def test_objective_reaction_knockout_zeroes_objective(self, toy_net):
        out = fba_knockout(toy_net, "R_BIO")
        assert objective_value(toy_net, out) == pytest.approx(0.0, abs=1e-9)

    def test_every_toy_knockout_matches_reference_lp(self, toy_net):
        # vertex enumeration is intractable at 20 reactions; an independent
        # LP implementation (HiGHS) serves as the reference there
        from scipy.optimize import linprog

        for i in range(toy_net.n_reactions):
            knocked = toy_net.with_bounds(i, lower=0.0, upper=0.0)
            ref = linprog(
                -knocked.objective,
                A_eq=knocked.stoichiometry,
                b_eq=np.zeros(len(knocked.metabolites)),
                bounds=list(zip(knocked.lower, knocked.upper)),
                method="highs",
            )
            out = fba_knockout(toy_net, i)
            assert ref.status == 0
            assert objective_value(toy_net, out) == pytest.approx(-ref.fun, abs=1e-8)

    def test_unknown_reaction(self, toy_net):
        with pytest.raises(KeyError):
            fba_knockout(toy_net, "R_NOPE")
        with pytest.raises(IndexError):
            fba_knockout(toy_net, 99)


class TestToyNetwork:
    def test_dimensions(self, toy_net):
        assert toy_net.stoichiometry.shape == (12, 20)
        assert len(set(toy_net.subsystems)) == 4

    def test_base_optimum(self, toy_net):
        out = fba_solve(toy_net)
        assert objective_value(toy_net, out) == pytest.approx(12.0, abs=1e-9)
        assert np.abs(toy_net.stoichiometry @ out.data).max() <= 1e-8

    def test_bound_modification_is_pure(self, toy_net):
        before = toy_net.lower.copy()
        toy_net.with_bounds("EX_A", lower=-1.0)
        assert np.array_equal(toy_net.lower, before)

    def test_json_validation(self):
        with pytest.raises(ValueError, match="lower bound exceeds"):
            simple_net(np.zeros((0, 1)), [5.0], [1.0], [1.0])
        with pytest.raises(ValueError, match="objective"):
            simple_net(np.zeros((0, 1)), [0.0], [1.0], [0.0])
