"""The duality quadrangle: dual-report and dual-type scores.

Swapping the report for a dual vector gives the market/menu form
A(d, t) = <t, d> - G*(d); swapping the type gives A*(t, d) =
<t, d> - G(t).  Fenchel-Young ties the four corners together, and
subgradient membership is operationalized as Fenchel-Young equality
within tolerance rather than by symbolic subdifferentials.

The conjugate is represented implicitly through grid evaluation, except
for the squared norm where the closed form ||d||^2 / 4 applies whenever
the maximizer d/2 lies inside the grid's bounding box.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from .core import (
    DEFAULT_TOL,
    CheckReport,
    ConvexSpec,
    SquaredNorm,
    TypeSpace,
    Witness,
    conjugate,
    eval_convex,
)
from .properties import LabeledSample

__all__ = [
    "conjugate_value",
    "dual_report_score",
    "dual_type_score",
    "biconjugate",
    "check_duality_identities",
    "Equilibrium",
    "elicitation_game_equilibria",
    "dual_property",
]

#: Fenchel-Young equality within this counts as subgradient membership.
EQUALITY_TOL = 1e-6


def conjugate_value(g: ConvexSpec, d, grid: TypeSpace) -> float:
    """Grid conjugate, upgraded to the closed form for the squared norm
    when the true maximizer d/2 falls inside the grid's bounding box."""
    d = np.atleast_1d(np.asarray(d, dtype=float))
    if isinstance(g, SquaredNorm):
        half = d / 2.0
        lo = grid.points.min(axis=0)
        hi = grid.points.max(axis=0)
        if np.all(half >= lo - 1e-12) and np.all(half <= hi + 1e-12):
            return float(half @ half)
    return conjugate(g, d, grid)


def dual_report_score(g: ConvexSpec, d, t, grid: TypeSpace) -> float:
    """Menu / market score for reporting the dual vector d: <t, d> - G*(d)."""
    d = np.atleast_1d(np.asarray(d, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return float(t @ d) - conjugate_value(g, d, grid)


def dual_type_score(g: ConvexSpec, t, d) -> float:
    """Score when the roles flip and d is the true object: <t, d> - G(t)."""
    d = np.atleast_1d(np.asarray(d, dtype=float))
    t = np.atleast_1d(np.asarray(t, dtype=float))
    return float(t @ d) - eval_convex(g, t)


def biconjugate(g: ConvexSpec, t, grid: TypeSpace, duals) -> float:
    """G**(t) by two nested conjugations: max over the dual grid of
    <t, d> - G*(d)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    duals = np.asarray(duals, dtype=float)
    if duals.ndim == 1:
        duals = duals.reshape(-1, 1)
    values = [float(t @ d) - conjugate_value(g, d, grid) for d in duals]
    return max(values)


def _conjugates(g: ConvexSpec, duals: np.ndarray, grid: TypeSpace) -> np.ndarray:
    return np.array([conjugate_value(g, d, grid) for d in duals])


def check_duality_identities(
    g: ConvexSpec,
    grid: TypeSpace,
    duals,
    tol: float = DEFAULT_TOL,
) -> CheckReport:
    """Three identities over every (t, d) pair of grid x duals:

    (a) Fenchel-Young: G(t) + G*(d) >= <t, d>, slack above -tol;
    (b) A(d, t) - A*(t, d) equals G(t) - G*(d) within tol;
    (c) the mixed divergence G(t) + G*(d) - <t, d> agrees between its
        two evaluation orders within tol.
    """
    duals = np.asarray(duals, dtype=float)
    if duals.ndim == 1:
        duals = duals.reshape(-1, 1)
    evals = np.array([eval_convex(g, t) for t in grid.points])
    conjs = _conjugates(g, duals, grid)
    inner = grid.points @ duals.T  # inner[i, j] = <t_i, d_j>

    fy = evals[:, None] + conjs[None, :] - inner
    report_minus_type = (inner - conjs[None, :]) - (inner - evals[:, None])
    diff_identity = report_minus_type - (evals[:, None] - conjs[None, :])
    div_primal = (evals[:, None] + conjs[None, :]) - inner
    div_dual = (conjs[None, :] - inner) + evals[:, None]
    div_gap = div_primal - div_dual

    witnesses = []
    for i, j in np.argwhere(fy < -tol):
        witnesses.append(
            Witness(
                kind="fenchel-young",
                indices=(int(i), int(j)),
                slack=float(-fy[i, j]),
                detail="G(t) + G*(d) < <t, d>",
            )
        )
    for i, j in np.argwhere(np.abs(diff_identity) > tol):
        witnesses.append(
            Witness(
                kind="difference",
                indices=(int(i), int(j)),
                slack=float(abs(diff_identity[i, j])),
                detail="A(d,t) - A*(t,d) != G(t) - G*(d)",
            )
        )
    for i, j in np.argwhere(np.abs(div_gap) > tol):
        witnesses.append(
            Witness(
                kind="divergence-symmetry",
                indices=(int(i), int(j)),
                slack=float(abs(div_gap[i, j])),
                detail="mixed divergences disagree",
            )
        )
    info = {
        "tol": tol,
        "max_fenchel_young_violation": float(max(0.0, -fy.min())),
        "max_difference_violation": float(np.abs(diff_identity).max()),
        "max_divergence_gap": float(np.abs(div_gap).max()),
    }
    return CheckReport.from_witnesses(witnesses, info)


@dataclass
class Equilibrium:
    """A dual-optimal pair: d is a subgradient at t and vice versa, with
    the two players' equilibrium payoffs G(t) and G*(d)."""

    d_index: int
    t_index: int
    d: np.ndarray
    t: np.ndarray
    value_primal: float  # G(t)
    value_dual: float  # G*(d)


def elicitation_game_equilibria(
    g: ConvexSpec,
    t_grid: TypeSpace,
    d_grid,
    grid: TypeSpace,
    eq_tol: float = EQUALITY_TOL,
) -> List[Equilibrium]:
    """Pure equilibria of the two-player elicitation game on finite
    strategy grids: the pairs where Fenchel-Young holds with equality
    within ``eq_tol``.  Conjugates are evaluated over ``grid``."""
    d_grid = np.asarray(d_grid, dtype=float)
    if d_grid.ndim == 1:
        d_grid = d_grid.reshape(-1, 1)
    if len(d_grid) == 0:
        return []
    evals = np.array([eval_convex(g, t) for t in t_grid.points])
    conjs = _conjugates(g, d_grid, grid)
    inner = d_grid @ t_grid.points.T  # inner[j, i] = <d_j, t_i>
    gap = conjs[:, None] + evals[None, :] - inner
    out: List[Equilibrium] = []
    for j, i in np.argwhere(np.abs(gap) <= eq_tol):
        out.append(
            Equilibrium(
                d_index=int(j),
                t_index=int(i),
                d=d_grid[j].copy(),
                t=t_grid.points[i].copy(),
                value_primal=float(evals[i]),
                value_dual=float(conjs[j]),
            )
        )
    return out


def dual_property(sample: LabeledSample) -> dict:
    """Invert the type -> report relation into report -> list of types;
    insertion order follows first appearance, groups preserve order."""
    out: dict = {}
    for point, label in zip(sample.points, sample.labels):
        out.setdefault(int(label), []).append(point.copy())
    return {label: np.vstack(points) for label, points in out.items()}
