"""Flux balance analysis on small metabolic networks.

Solves max c.v subject to S.v = 0 and lb <= v <= ub with a two-phase
bounded-variable simplex using Bland's smallest-index rule for both the
entering and leaving choices, so the solver cannot cycle and always returns
the same vertex for the same input. Negative flux through an exchange
reaction is flow into the cell.

Networks load from a JSON description; a 20-reaction, 12-metabolite toy
network with four subsystems ships with the package as a stand-in for
genome-scale models.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .output import SimulationOutput

TOL = 1e-9
FEAS_TOL = 1e-7


class FbaInfeasible(RuntimeError):
    pass


class FbaUnbounded(RuntimeError):
    pass


@dataclass(frozen=True)
class FluxNetwork:
    stoichiometry: np.ndarray  # metabolites x reactions
    lower: np.ndarray
    upper: np.ndarray
    objective: np.ndarray
    reactions: tuple[str, ...]
    metabolites: tuple[str, ...]
    subsystems: tuple[str, ...]

    def __post_init__(self):
        s = np.asarray(self.stoichiometry, dtype=np.float64)
        object.__setattr__(self, "stoichiometry", s)
        for name in ("lower", "upper", "objective"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        m, n = s.shape
        if not (len(self.lower) == len(self.upper) == len(self.objective)
                == len(self.reactions) == len(self.subsystems) == n):
            raise ValueError("per-reaction arrays do not match the stoichiometry width")
        if len(self.metabolites) != m:
            raise ValueError("metabolite names do not match the stoichiometry height")
        if np.any(self.lower > self.upper):
            bad = self.reactions[int(np.argmax(self.lower > self.upper))]
            raise ValueError(f"reaction {bad}: lower bound exceeds upper bound")
        if not np.any(self.objective != 0):
            raise ValueError("objective must have at least one nonzero coefficient")

    @property
    def n_reactions(self) -> int:
        return self.stoichiometry.shape[1]

    def reaction_index(self, reaction: str | int) -> int:
        if isinstance(reaction, str):
            try:
                return self.reactions.index(reaction)
            except ValueError:
                raise KeyError(f"unknown reaction {reaction!r}") from None
        if not 0 <= reaction < self.n_reactions:
            raise IndexError(f"reaction index {reaction} out of range")
        return int(reaction)

    def with_bounds(self, reaction: str | int, lower: float | None = None,
                    upper: float | None = None) -> "FluxNetwork":
        i = self.reaction_index(reaction)
        lo, up = self.lower.copy(), self.upper.copy()
        if lower is not None:
            lo[i] = lower
        if upper is not None:
            up[i] = upper
        return replace(self, lower=lo, upper=up)

    @classmethod
    def from_json(cls, obj: dict) -> "FluxNetwork":
        mets = tuple(obj["metabolites"])
        met_index = {m: i for i, m in enumerate(mets)}
        rxns = obj["reactions"]
        s = np.zeros((len(mets), len(rxns)))
        lower, upper, objective = [], [], []
        names, subsystems = [], []
        for j, r in enumerate(rxns):
            names.append(r["id"])
            subsystems.append(r["subsystem"])
            lower.append(float(r["lower"]))
            upper.append(float(r["upper"]))
            objective.append(float(r.get("objective", 0.0)))
            for met, coef in r["stoich"].items():
                if met not in met_index:
                    raise ValueError(f"reaction {r['id']}: unknown metabolite {met!r}")
                s[met_index[met], j] = float(coef)
        return cls(s, lower, upper, objective, tuple(names), mets, tuple(subsystems))

    @classmethod
    def load(cls, path: str | Path) -> "FluxNetwork":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_json(json.load(f))


def load_toy_network() -> FluxNetwork:
    text = resources.files("simrep.data").joinpath("toy_flux_network.json").read_text()
    return FluxNetwork.from_json(json.loads(text))


def _solve_lp(a: np.ndarray, lower: np.ndarray, upper: np.ndarray,
              obj: np.ndarray) -> np.ndarray:
    """Maximize obj.x s.t. a.x = 0, lower <= x <= upper (bounds may be +-inf)."""
    m, n = a.shape

    # start every structural variable at a bound (nearest zero when both are
    # finite); fully free variables rest at zero until they enter the basis
    x = np.zeros(n + m)
    for j in range(n):
        lo, up = lower[j], upper[j]
        if np.isneginf(lo) and np.isposinf(up):
            x[j] = 0.0
        elif np.isneginf(lo):
            x[j] = up
        elif np.isposinf(up):
            x[j] = lo
        else:
            x[j] = lo if abs(lo) <= abs(up) else up

    resid = -a @ x[:n]
    signs = np.where(resid >= 0, 1.0, -1.0)
    full_a = np.hstack([a, np.diag(signs)])
    lb = np.concatenate([lower, np.zeros(m)])
    ub = np.concatenate([upper, np.full(m, np.inf)])
    x[n:] = np.abs(resid)
    basis = list(range(n, n + m))

    phase1 = np.concatenate([np.zeros(n), -np.ones(m)])
    x = _simplex(full_a, lb, ub, phase1, basis, x)
    if x[n:].sum() > FEAS_TOL:
        raise FbaInfeasible(
            f"no flux vector satisfies the balance and bound constraints "
            f"(phase-1 residual {x[n:].sum():.3e})"
        )

    ub[n:] = 0.0  # artificials pinned at zero for phase 2
    x[n:] = 0.0
    phase2 = np.concatenate([obj, np.zeros(m)])
    x = _simplex(full_a, lb, ub, phase2, basis, x)
    return x[:n]


def _simplex(a, lb, ub, obj, basis, x):
    n_total = a.shape[1]
    in_basis = np.zeros(n_total, dtype=bool)
    in_basis[basis] = True

    for _ in range(200 * (n_total + 10)):
        b_mat = a[:, basis]
        y = np.linalg.solve(b_mat.T, obj[basis])
        reduced = obj - y @ a

        entering, direction = -1, 0
        for j in range(n_total):
            if in_basis[j] or ub[j] - lb[j] <= TOL:
                continue
            at_lower = np.isfinite(lb[j]) and x[j] <= lb[j] + FEAS_TOL
            at_upper = np.isfinite(ub[j]) and x[j] >= ub[j] - FEAS_TOL
            free = not (np.isfinite(lb[j]) or np.isfinite(ub[j]))
            if reduced[j] > TOL and (at_lower or free):
                entering, direction = j, +1
                break
            if reduced[j] < -TOL and (at_upper or free):
                entering, direction = j, -1
                break
        if entering < 0:
            break  # optimal

        d = np.linalg.solve(b_mat, a[:, entering])
        # basic variable i moves by -direction * d[i] * t as entering moves by t
        t_best = ub[entering] - lb[entering]  # bound flip
        leave_pos = -1
        for i in range(len(basis)):
            delta = -direction * d[i]
            v = basis[i]
            if delta > TOL:
                if np.isposinf(ub[v]):
                    continue
                t = (ub[v] - x[v]) / delta
            elif delta < -TOL:
                if np.isneginf(lb[v]):
                    continue
                t = (x[v] - lb[v]) / (-delta)
            else:
                continue
            t = max(t, 0.0)
            if t < t_best - TOL or (
                t < t_best + TOL and (leave_pos < 0 or v < basis[leave_pos])
            ):
                t_best = t
                leave_pos = i
        if not np.isfinite(t_best):
            raise FbaUnbounded(
                "objective is unbounded: a flux direction can grow without limit"
            )

        x[entering] += direction * t_best
        for i in range(len(basis)):
            x[basis[i]] += -direction * d[i] * t_best
        if leave_pos >= 0:
            leaving = basis[leave_pos]
            # snap the leaving variable onto the bound it reached
            delta = -direction * d[leave_pos]
            x[leaving] = ub[leaving] if delta > 0 else lb[leaving]
            basis[leave_pos] = entering
            in_basis[leaving] = False
            in_basis[entering] = True
        else:
            # bound flip: land exactly on the opposite bound
            x[entering] = ub[entering] if direction > 0 else lb[entering]
    else:
        raise RuntimeError("simplex failed to converge within the iteration cap")

    # re-solve basics against the equality constraints to shed accumulated error
    if basis:
        nonbasic = ~in_basis
        rhs = -a[:, nonbasic] @ x[nonbasic]
        x[np.asarray(basis, dtype=int)] = np.linalg.solve(a[:, basis], rhs)
    return x


def fba_solve(net: FluxNetwork) -> SimulationOutput:
    """Optimal flux vector for the network's objective."""
    v = _solve_lp(net.stoichiometry, net.lower, net.upper, net.objective)
    return SimulationOutput("vector", v)


def fba_knockout(net: FluxNetwork, reaction: str | int) -> SimulationOutput:
    """Re-solve with one reaction's flux forced to zero."""
    i = net.reaction_index(reaction)
    return fba_solve(net.with_bounds(i, lower=0.0, upper=0.0))


def objective_value(net: FluxNetwork, out: SimulationOutput) -> float:
    return float(net.objective @ out.data)
