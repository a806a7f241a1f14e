"""Finite-valued property elicitation via power diagrams.

A finite-report property is elicitable exactly when its level sets form
a power diagram, so this module provides: nearest-site labeling under
the power distance, the affine score a diagram induces, fitting weights
to a labeled sample (a linear feasibility problem once sites are
fixed), the pairwise monotonicity check on cells, homothets that
preserve every cell boundary, a sandwich test for level-set convexity,
and the conversion from Bregman-divergence diagrams to power diagrams.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import lp
from .core import (
    DEFAULT_TOL,
    CheckReport,
    ConvexSpec,
    DimensionMismatchError,
    NonPositiveScaleError,
    ScoreTable,
    TypeSpace,
    Witness,
    conjugate,
    subgradient,
)

__all__ = [
    "PowerDiagramSpec",
    "LabeledSample",
    "Labeling",
    "FitWeightsResult",
    "power_cells",
    "score_from_diagram",
    "fit_weights",
    "check_wmon_cells",
    "homothet_transform",
    "check_level_set_convexity",
    "bregman_to_power",
]

#: Second-best power distances within this of the best are flagged as ties.
TIE_TOL = 1e-9


def _as_points(points, what: str) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2:
        raise DimensionMismatchError(f"{what} must be a 2-D array of row vectors")
    if not np.all(np.isfinite(pts)):
        raise ValueError(f"{what} must be finite")
    return pts


@dataclass
class PowerDiagramSpec:
    """Sites p_i with weights w_i; the cell of site i collects the points
    where ||p_i - t||^2 - w_i is minimal."""

    sites: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.sites = _as_points(self.sites, "sites")
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if len(self.sites) == 0:
            raise ValueError("diagram needs at least one site")
        if len(self.weights) != len(self.sites):
            raise DimensionMismatchError("one weight per site required")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")
        seen = set()
        for i, p in enumerate(self.sites):
            key = p.tobytes()
            if key in seen:
                raise ValueError(f"duplicate site at index {i}")
            seen.add(key)

    @property
    def dim(self) -> int:
        return self.sites.shape[1]

    def __len__(self) -> int:
        return len(self.sites)


@dataclass
class LabeledSample:
    """Sample points with a report (site) label each."""

    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        self.points = _as_points(self.points, "points")
        self.labels = np.asarray(self.labels, dtype=int).reshape(-1)
        if len(self.labels) != len(self.points):
            raise DimensionMismatchError("one label per point required")
        if len(self.labels) and self.labels.min() < 0:
            raise ValueError("labels must be nonnegative indices")

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class Labeling:
    """Power-cell labels with boundary ties recorded."""

    labels: np.ndarray
    ties: np.ndarray


def _power_costs(diag: PowerDiagramSpec, points: np.ndarray) -> np.ndarray:
    diffs = points[:, None, :] - diag.sites[None, :, :]
    return np.einsum("kmn,kmn->km", diffs, diffs) - diag.weights[None, :]


def power_cells(diag: PowerDiagramSpec, points) -> Labeling:
    """Label each point with its least-power-distance site; ties break
    toward the lowest site index and raise the tie flag."""
    points = _as_points(points, "points")
    if points.shape[1] != diag.dim:
        raise DimensionMismatchError("points dimension != diagram dimension")
    costs = _power_costs(diag, points)
    labels = costs.argmin(axis=1)
    best = costs[np.arange(len(points)), labels]
    ties = (costs <= best[:, None] + TIE_TOL).sum(axis=1) >= 2
    return Labeling(labels=labels.astype(int), ties=ties)


def score_from_diagram(diag: PowerDiagramSpec) -> ScoreTable:
    """Affine score whose argmax cells are exactly the diagram's cells:
    report r scores 2 <p_r, t> + w_r - ||p_r||^2."""
    sq = np.einsum("ij,ij->i", diag.sites, diag.sites)
    return ScoreTable(
        reports=list(range(len(diag))),
        linear=2.0 * diag.sites,
        constant=diag.weights - sq,
    )


@dataclass
class FitWeightsResult:
    """Outcome of weight fitting; infeasibility is a certified answer,
    not an error, and carries the conflicting constraints."""

    feasible: bool
    weights: Optional[np.ndarray] = None
    witnesses: List[Witness] = field(default_factory=list)


def fit_weights(sites, sample: LabeledSample, tol: float = DEFAULT_TOL) -> FitWeightsResult:
    """Fit weights so every sample point lands in its labeled cell.

    With sites fixed the cell-membership constraints are linear in w:
    for a point t labeled i and any other site j,
        w_j - w_i <= ||p_j - t||^2 - ||p_i - t||^2.
    Solved by Phase-I simplex; a feasible w is normalized to min 0, and
    infeasibility returns the constraints in the Farkas support.
    """
    sites = _as_points(sites, "sites")
    m = len(sites)
    if len(sample) and sample.labels.max() >= m:
        raise ValueError("sample label exceeds site count")
    if len(sample) and sample.points.shape[1] != sites.shape[1]:
        raise DimensionMismatchError("sample dimension != sites dimension")
    rows = []
    rhs = []
    meta = []  # (sample index, labeled site, competitor site)
    for k in range(len(sample)):
        t = sample.points[k]
        i = int(sample.labels[k])
        di = float((sites[i] - t) @ (sites[i] - t))
        for j in range(m):
            if j == i:
                continue
            row = np.zeros(m)
            row[j] = 1.0
            row[i] = -1.0
            dj = float((sites[j] - t) @ (sites[j] - t))
            rows.append(row)
            rhs.append(dj - di)
            meta.append((k, i, j))
    if not rows:
        return FitWeightsResult(feasible=True, weights=np.zeros(m))
    res = lp.feasible_point(np.asarray(rows), np.asarray(rhs), tol=tol)
    if res.feasible:
        w = res.x - res.x.min()
        return FitWeightsResult(feasible=True, weights=w)
    witnesses = []
    for r in np.flatnonzero(res.farkas > tol):
        k, i, j = meta[int(r)]
        witnesses.append(
            Witness(
                kind="constraint",
                indices=(k, i, j),
                slack=float(res.farkas[int(r)]),
                detail=f"point {k} labeled {i} conflicts against site {j}",
            )
        )
    return FitWeightsResult(feasible=False, witnesses=witnesses)


def check_wmon_cells(
    sites, sample: LabeledSample, tol: float = DEFAULT_TOL
) -> CheckReport:
    """Pairwise monotonicity across labels: for t in cell i and t' in
    cell j, require p_i . (t' - t) <= p_j . (t' - t)."""
    sites = _as_points(sites, "sites")
    if len(sample) and sample.labels.max() >= len(sites):
        raise ValueError("sample label exceeds site count")
    if len(sample) == 0:
        return CheckReport.from_witnesses([], {"tol": tol})
    if sample.points.shape[1] != sites.shape[1]:
        raise DimensionMismatchError("sample dimension != sites dimension")
    site_of = sites[sample.labels]  # (k, n)
    inner = site_of @ sample.points.T  # inner[a, b] = p_{label a} . t_b
    diag_own = np.einsum("ij,ij->i", site_of, sample.points)
    # slack for pair (a, b): (p_la - p_lb) . (t_b - t_a)
    slack = inner + inner.T - diag_own[:, None] - diag_own[None, :]
    witnesses = []
    k = len(sample)
    for a in range(k):
        for b in range(a + 1, k):
            if sample.labels[a] == sample.labels[b]:
                continue
            if slack[a, b] > tol:
                witnesses.append(
                    Witness(
                        kind="pair",
                        indices=(a, b),
                        slack=float(slack[a, b]),
                        detail=(
                            f"labels ({int(sample.labels[a])}, "
                            f"{int(sample.labels[b])}) break monotonicity"
                        ),
                    )
                )
    return CheckReport.from_witnesses(witnesses, {"tol": tol})


def homothet_transform(
    diag: PowerDiagramSpec, alpha: float, p0
) -> PowerDiagramSpec:
    """Translate and positively scale the sites, recomputing weights so
    that every pairwise cell boundary -- and hence every label -- is
    preserved.

    With p'_r = alpha p_r + p0, choosing
        w'_r = alpha w_r + (alpha^2 - alpha) ||p_r||^2 + 2 alpha <p_r, p0>
    makes the new power cost an affine reparameterization of the old one
    (alpha times it plus a site-independent term), fixing the argmin.
    """
    if alpha <= 0:
        raise NonPositiveScaleError(f"scale must be positive, got {alpha}")
    p0 = np.atleast_1d(np.asarray(p0, dtype=float))
    if len(p0) != diag.dim:
        raise DimensionMismatchError("offset dimension != diagram dimension")
    sq = np.einsum("ij,ij->i", diag.sites, diag.sites)
    new_sites = alpha * diag.sites + p0
    new_weights = alpha * diag.weights + (alpha**2 - alpha) * sq + 2.0 * alpha * (
        diag.sites @ p0
    )
    return PowerDiagramSpec(sites=new_sites, weights=new_weights)


def check_level_set_convexity(
    sample: LabeledSample, eps: float = 1e-6
) -> CheckReport:
    """Sandwich test: a differently-labeled point lying (within ``eps``)
    strictly between two same-labeled points contradicts convexity of
    the level sets.  Necessary condition only; points within ``eps`` of
    a segment endpoint are not flagged since a cell boundary may pass
    arbitrarily close to the endpoints."""
    if len(sample) == 0:
        raise ValueError("sample must be nonempty")
    pts = sample.points
    labels = sample.labels
    k = len(sample)
    witnesses = []
    for a in range(k):
        for b in range(a + 1, k):
            if labels[a] != labels[b]:
                continue
            seg = pts[b] - pts[a]
            seg_sq = float(seg @ seg)
            if seg_sq == 0.0:
                continue
            for c in range(k):
                if labels[c] == labels[a]:
                    continue
                rel = pts[c] - pts[a]
                tau = float(rel @ seg) / seg_sq
                if not 0.0 < tau < 1.0:
                    continue
                if min(np.linalg.norm(rel), np.linalg.norm(pts[c] - pts[b])) <= eps:
                    continue
                perp = rel - tau * seg
                dist = float(np.sqrt(perp @ perp))
                if dist <= eps:
                    witnesses.append(
                        Witness(
                            kind="sandwich",
                            indices=(a, b, c),
                            slack=float(eps - dist),
                            detail=(
                                f"label {int(labels[c])} point between two "
                                f"label {int(labels[a])} points"
                            ),
                        )
                    )
    return CheckReport.from_witnesses(witnesses, {"eps": eps})


def bregman_to_power(
    g: ConvexSpec, bregman_sites, grid: TypeSpace
) -> PowerDiagramSpec:
    """Convert a nearest-site diagram under the regret divergence of
    ``g`` into an ordinary power diagram.

    Site t_j maps to p_j = dG_{t_j} / 2 with weight
    ||dG_{t_j}||^2 / 4 - G*(dG_{t_j}); the conjugate is evaluated over
    ``grid``, which is exact whenever the grid contains the sites.
    """
    sites = _as_points(bregman_sites, "sites")
    new_sites = np.empty_like(sites)
    weights = np.empty(len(sites))
    for j, t in enumerate(sites):
        d = subgradient(g, t)
        new_sites[j] = d / 2.0
        weights[j] = float(d @ d) / 4.0 - conjugate(g, d, grid)
    return PowerDiagramSpec(sites=new_sites, weights=weights)
