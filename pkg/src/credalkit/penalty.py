"""Convex expectations generated by finite penalty-atom families.

An atom family ``{(P_i, c_i)}`` induces ``X -> max_i (E_{P_i}[X] - c_i)``,
a convex increasing functional preserving constants once the smallest cost
is zero.  The minimal (convex, lower semicontinuous) penalty representing
the same functional is the convex envelope of the atoms, evaluated here by
a small linear program; points outside the atom hull carry infinite
penalty.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import ValidationError
from .lp import DEFAULT_TOL, OPTIMAL, solve_lp
from .spaces import ProbVector, RandomVariable, Space, _check_same_space
from .credal import _membership_rows, DEDUP_TOL

# Costs may exceed the envelope by at most this before an atom is dropped.
DOMINANCE_TOL = 1e-9


class PenaltyAtoms:
    """A finite family of (probability, cost) atoms with min cost zero.

    If the smallest input cost is positive, construction shifts every cost
    down by it and records the shift in ``normalization_shift`` so reports
    can surface the adjustment; negative costs are rejected.
    """

    __slots__ = ("space", "points", "costs", "normalization_shift")

    def __init__(self, space: Space, atoms: Sequence[tuple[ProbVector, float]]):
        atoms = tuple(atoms)
        if not atoms:
            raise ValidationError("a penalty family needs at least one atom")
        costs = np.array([float(c) for _, c in atoms])
        if not np.all(np.isfinite(costs)):
            raise ValidationError("atom costs must be finite")
        if np.any(costs < 0.0):
            raise ValidationError(f"negative atom cost {costs.min()!r}")
        for P, _ in atoms:
            _check_same_space(P.space, space, "penalty atom")
        shift = float(costs.min())
        if shift > 0.0:
            costs = costs - shift
        else:
            shift = 0.0
        points = np.stack([P.weights for P, _ in atoms])
        points.setflags(write=False)
        costs.setflags(write=False)
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "normalization_shift", shift)

    def __setattr__(self, name, value):
        raise AttributeError("PenaltyAtoms is immutable")

    @classmethod
    def from_rows(cls, space: Space, rows: Sequence[tuple[Sequence[float], float]]):
        return cls(space, [(ProbVector(space, w), c) for w, c in rows])

    @property
    def n_atoms(self) -> int:
        return self.points.shape[0]

    def atom(self, i: int) -> tuple[ProbVector, float]:
        return ProbVector(self.space, self.points[i]), float(self.costs[i])

    def __repr__(self) -> str:
        return f"PenaltyAtoms({self.space!r}, {self.n_atoms} atoms)"


def convex_expectation(A: PenaltyAtoms, X: RandomVariable) -> float:
    """``max_i (E_{P_i}[X] - c_i)``; bounded by the sup norm of ``X``."""
    _check_same_space(A.space, X.space, "convex expectation")
    return float(np.max(A.points @ X.values - A.costs))


def minimal_penalty(A: PenaltyAtoms, P: ProbVector, tol: float = DEFAULT_TOL) -> float:
    """The convex envelope of the atom costs at ``P``; +inf outside the hull.

    This is the unique convex lower semicontinuous penalty generating
    ``convex_expectation(A, .)``, evaluated by the cheapest-mixture LP.
    """
    _check_same_space(A.space, P.space, "minimal penalty")
    rows, rhs = _membership_rows(A.points, P.weights)
    res = solve_lp(A.costs, rows, rhs, tol)
    if res.status != OPTIMAL:
        return float("inf")
    return max(res.value, 0.0)


def envelope_atoms(A: PenaltyAtoms, tol: float = DOMINANCE_TOL) -> PenaltyAtoms:
    """Drop atoms whose cost the remaining family already undercuts.

    Exact duplicates go first (keeping the earliest listing); then each atom
    is removed when the current family without it reproduces its point at a
    cost more than ``tol`` cheaper.  Removals are sequential in listing
    order, so the surviving family still generates the same convex
    expectation.
    """
    keep: list[int] = []
    for i in range(A.n_atoms):
        dup = any(
            np.max(np.abs(A.points[i] - A.points[j])) <= DEDUP_TOL
            and abs(A.costs[i] - A.costs[j]) <= DEDUP_TOL
            for j in keep
        )
        if not dup:
            keep.append(i)

    pos = 0
    while pos < len(keep) and len(keep) > 1:
        i = keep[pos]
        others = [j for j in keep if j != i]
        rows, rhs = _membership_rows(A.points[others], A.points[i])
        res = solve_lp(A.costs[others], rows, rhs)
        if res.status == OPTIMAL and A.costs[i] > res.value + tol:
            keep.pop(pos)
        else:
            pos += 1
    return PenaltyAtoms(
        A.space,
        [(ProbVector(A.space, A.points[i]), float(A.costs[i])) for i in keep],
    )
