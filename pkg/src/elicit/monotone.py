"""Implementability checkers.

A family of linear functionals over a finite type space is a selection
of subgradients of some convex function exactly when it is cyclically
monotone, so each checker here either certifies the condition or
returns a concrete counterexample: a violating pair, a positive-weight
cycle, a nonzero triangle circulation, or a local truthfulness failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .core import (
    DEFAULT_TOL,
    CheckReport,
    DimensionMismatchError,
    EvaluationError,
    LinearFamily,
    ScoreTable,
    TypeSpace,
    Witness,
)

__all__ = [
    "CheckReport",
    "Witness",
    "cmon_weights",
    "longest_paths",
    "check_wmon",
    "check_cmon",
    "check_path_independence",
    "check_local_truthful",
]


def cmon_weights(ts: TypeSpace, fam: LinearFamily) -> np.ndarray:
    """Complete-digraph edge weights w[i, j] = d_i . (t_j - t_i)."""
    fam.check_aligned(ts)
    inner = fam.vectors @ ts.points.T
    return inner - np.diag(inner)[:, None]


@dataclass
class LongestPathResult:
    dist: np.ndarray
    pred: np.ndarray
    cycle: Optional[list]
    cycle_weight: float = 0.0


def longest_paths(
    weights: np.ndarray,
    source: Optional[int] = None,
    tol: float = DEFAULT_TOL,
) -> LongestPathResult:
    """Bellman-Ford longest paths on a complete digraph.

    ``source=None`` uses a virtual source connected to every node with
    weight 0, which turns the run into a pure positive-cycle detector.
    Relaxations must improve by more than an epsilon of ``tol / 4m`` so
    float noise cannot masquerade as a cycle; any cycle with total
    weight above ``tol`` is still guaranteed to be found.  The first
    cycle whose exact weight exceeds ``tol`` is returned as a witness
    (first detected, not minimal).
    """
    m = weights.shape[0]
    eps = tol / max(1, 4 * m)
    if source is None:
        dist = np.zeros(m)
    else:
        dist = np.full(m, -np.inf)
        dist[source] = 0.0
    pred = np.full(m, -1, dtype=int)

    for _ in range(max(0, m - 1)):
        cand = dist[:, None] + weights
        np.fill_diagonal(cand, -np.inf)
        best = cand.max(axis=0)
        improved = best > dist + eps
        if not improved.any():
            return LongestPathResult(dist, pred, None)
        pred[improved] = cand[:, improved].argmax(axis=0)
        dist[improved] = best[improved]

    # an edge that still relaxes after m-1 rounds implies a positive cycle
    cand = dist[:, None] + weights
    np.fill_diagonal(cand, -np.inf)
    best = cand.max(axis=0)
    for v in np.flatnonzero(best > dist + eps):
        u = int(cand[:, int(v)].argmax())
        cycle = _extract_cycle(pred, u, int(v), m)
        if cycle is None:
            continue
        w = _cycle_weight(weights, cycle)
        if w > tol:
            return LongestPathResult(dist, pred, cycle, w)
    return LongestPathResult(dist, pred, None)


def _extract_cycle(pred: np.ndarray, u: int, v: int, m: int) -> Optional[list]:
    """Walk predecessors from a relaxable edge (u, v) until a node repeats."""
    trail = {v: 0}
    order = [v]
    x = u
    for _ in range(2 * m):
        if x < 0:
            return None
        if x in trail:
            cycle = order[trail[x]:]
            cycle.reverse()  # pred-walk is backwards along edges
            return cycle
        trail[x] = len(order)
        order.append(x)
        x = int(pred[x])
    return None


def _cycle_weight(weights: np.ndarray, cycle: Sequence[int]) -> float:
    total = 0.0
    for a, b in zip(cycle, list(cycle[1:]) + [cycle[0]]):
        total += float(weights[a, b])
    return total


def check_wmon(ts: TypeSpace, fam: LinearFamily, tol: float = DEFAULT_TOL) -> CheckReport:
    """Weak monotonicity: d_t(t'-t) + d_{t'}(t-t') <= tol per pair."""
    w = cmon_weights(ts, fam)
    pair = w + w.T
    witnesses = []
    m = len(ts)
    for i in range(m):
        for j in range(i + 1, m):
            if pair[i, j] > tol:
                witnesses.append(
                    Witness(
                        kind="pair",
                        indices=(i, j),
                        slack=float(pair[i, j]),
                        detail="weak monotonicity violated",
                    )
                )
    return CheckReport.from_witnesses(witnesses, {"tol": tol})


def check_cmon(ts: TypeSpace, fam: LinearFamily, tol: float = DEFAULT_TOL) -> CheckReport:
    """Cyclic monotonicity via positive-cycle detection.

    Builds the complete digraph with weights d_t(t'-t) and looks for a
    positive-weight cycle; the witness, when one exists, is the cycle
    with its total weight.
    """
    w = cmon_weights(ts, fam)
    res = longest_paths(w, source=None, tol=tol)
    if res.cycle is None:
        return CheckReport.from_witnesses([], {"tol": tol})
    witness = Witness(
        kind="cycle",
        indices=tuple(res.cycle),
        slack=res.cycle_weight,
        detail="positive-weight cycle",
    )
    return CheckReport.from_witnesses([witness], {"tol": tol})


def _edge_integral(
    fam_fn: Callable, x: np.ndarray, y: np.ndarray, samples: int
) -> float:
    """Composite trapezoid of tau -> d_{x+tau(y-x)} . (y-x) over [0, 1]."""
    direction = y - x
    taus = np.linspace(0.0, 1.0, samples)
    vals = np.empty(samples)
    for k, tau in enumerate(taus):
        point = x + tau * direction
        try:
            d = np.atleast_1d(np.asarray(fam_fn(point), dtype=float))
        except Exception as exc:  # caller-supplied callable
            raise EvaluationError(f"family callable failed at {point}: {exc}") from exc
        if d.shape != direction.shape:
            raise DimensionMismatchError(
                f"family callable returned shape {d.shape}, expected {direction.shape}"
            )
        vals[k] = float(d @ direction)
    h = 1.0 / (samples - 1)
    return float(h * (vals.sum() - 0.5 * (vals[0] + vals[-1])))


def check_path_independence(
    fam_fn: Callable,
    triangle: Sequence,
    samples: int = 101,
    tol_integral: float = 1e-6,
) -> CheckReport:
    """Closed-loop line integral around one triangle, trapezoid rule.

    The loop sum of a selection of subgradients vanishes; a rotational
    (vortex) component shows up as nonzero circulation.  A coarse
    re-integration (roughly half the nodes) estimates the
    discretization error, which is reported and added to the tolerance.
    """
    if samples < 2:
        raise ValueError("samples must be >= 2")
    pts = [np.atleast_1d(np.asarray(p, dtype=float)) for p in triangle]
    if len(pts) != 3:
        raise ValueError("triangle must consist of three points")
    edges = [(pts[0], pts[1]), (pts[1], pts[2]), (pts[2], pts[0])]
    circulation = sum(_edge_integral(fam_fn, x, y, samples) for x, y in edges)
    coarse_n = max(2, (samples + 1) // 2)
    coarse = sum(_edge_integral(fam_fn, x, y, coarse_n) for x, y in edges)
    allowance = abs(circulation - coarse)
    tol_effective = tol_integral + allowance
    info = {
        "circulation": circulation,
        "allowance": allowance,
        "tol_effective": tol_effective,
    }
    if abs(circulation) <= tol_effective:
        return CheckReport.from_witnesses([], info)
    witness = Witness(
        kind="loop",
        indices=(0, 1, 2),
        slack=abs(circulation),
        detail="nonzero circulation around triangle",
    )
    return CheckReport.from_witnesses([witness], info)


def _truthful_witnesses(
    values: np.ndarray,
    report_of: np.ndarray,
    pairs,
    tol: float,
) -> list:
    out = []
    for i, j in pairs:
        ri, rj = report_of[i], report_of[j]
        gain_i = values[rj, i] - values[ri, i]
        gain_j = values[ri, j] - values[rj, j]
        worst = max(gain_i, gain_j)
        if worst > tol:
            out.append(
                Witness(
                    kind="pair",
                    indices=(int(i), int(j)),
                    slack=float(worst),
                    detail="misreport gains within pair",
                )
            )
    return out


def check_local_truthful(
    score: ScoreTable,
    ts: TypeSpace,
    report_of: Sequence[int],
    radius: float,
    tol: float = DEFAULT_TOL,
) -> CheckReport:
    """Weak local truthfulness: both misreport inequalities restricted to
    pairs within ``radius`` of each other.

    The report also runs the unrestricted check and records whether the
    local and global verdicts agree (``info['agrees']``).
    """
    if radius <= 0:
        raise ValueError("radius must be positive")
    report_of = np.asarray(list(report_of), dtype=int)
    if len(report_of) != len(ts):
        raise DimensionMismatchError("report_of must cover every type")
    if report_of.min() < 0 or report_of.max() >= len(score):
        raise ValueError("report_of refers to a report outside the table")
    values = score.payoff_matrix(ts)
    m = len(ts)
    gaps = np.linalg.norm(
        ts.points[:, None, :] - ts.points[None, :, :], axis=-1
    )
    local_pairs = [
        (i, j) for i in range(m) for j in range(i + 1, m) if gaps[i, j] <= radius
    ]
    all_pairs = [(i, j) for i in range(m) for j in range(i + 1, m)]
    witnesses = _truthful_witnesses(values, report_of, local_pairs, tol)
    global_witnesses = _truthful_witnesses(values, report_of, all_pairs, tol)
    local_passed = not witnesses
    global_passed = not global_witnesses
    info = {
        "tol": tol,
        "radius": radius,
        "checked_pairs": len(local_pairs),
        "global_passed": global_passed,
        "agrees": local_passed == global_passed,
    }
    return CheckReport.from_witnesses(witnesses, info)
