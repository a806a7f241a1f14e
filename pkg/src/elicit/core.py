"""Convex-function engine and shared domain types.

Everything downstream (truthfulness checks, payment synthesis, scoring
rules, power diagrams) is driven by a convex function together with a
selection of subgradients.  This module provides the three supported
representations of a convex function -- a max of affine pieces, the
squared Euclidean norm, and negative entropy on the probability simplex
-- plus evaluation, subgradient selection, discrete Legendre
conjugation, and the Bregman-style regret divergence.

Vectors are numpy float64 arrays.  Extended reals are plain floats where
``-inf`` is a legal value for score constants and payoffs (log-score
style); ``+inf`` and ``nan`` are rejected at every public boundary.  The
multiplication convention ``0 * (-inf) == 0`` is implemented by
:func:`ext_mul`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

__all__ = [
    "DEFAULT_TOL",
    "INTERIOR_EPS",
    "SIMPLEX_TOL",
    "ElicitError",
    "DomainError",
    "DimensionMismatchError",
    "EvaluationError",
    "NotImplementableError",
    "NotMonotoneError",
    "InconsistentAnchorsError",
    "UnreachableActionError",
    "NonPositiveScaleError",
    "Witness",
    "CheckReport",
    "TypeSpace",
    "LinearFamily",
    "MaxAffine",
    "SquaredNorm",
    "NegEntropy",
    "ConvexSpec",
    "ScoreTable",
    "ext_mul",
    "require_extended_real",
    "eval_convex",
    "subgradient",
    "conjugate",
    "check_subgradient_selection",
    "bregman_divergence",
]

#: Absolute tolerance for equality/inequality checks.
DEFAULT_TOL = 1e-9
#: Coordinates below this are treated as on the simplex boundary.
INTERIOR_EPS = 1e-12
#: Tolerance for simplex membership (sum to one, nonnegativity).
SIMPLEX_TOL = 1e-9


class ElicitError(Exception):
    """Base class for all library errors."""


class DomainError(ElicitError):
    """Input lies outside the valid domain of a convex function."""


class DimensionMismatchError(ElicitError):
    """Vector dimensions or collection lengths do not line up."""


class EvaluationError(ElicitError):
    """A caller-supplied callable failed during evaluation."""


class NotImplementableError(ElicitError):
    """No payment rule can make the given allocation truthful.

    Carries the violating cycle as ``.cycle`` (type indices) and its
    total weight as ``.weight``.
    """

    def __init__(self, cycle: Sequence[int], weight: float):
        self.cycle = list(cycle)
        self.weight = float(weight)
        super().__init__(
            f"positive cycle {self.cycle} with weight {self.weight:.6g}"
        )


class NotMonotoneError(ElicitError):
    """A 1-D allocation decreases; carries the first offending pair."""

    def __init__(self, index: int, left: float, right: float):
        self.index = index
        self.left = float(left)
        self.right = float(right)
        super().__init__(
            f"allocation decreases at breakpoint {index}: "
            f"{self.left:.6g} -> {self.right:.6g}"
        )


class InconsistentAnchorsError(ElicitError):
    """Anchored surplus values cannot all belong to one convex function."""


class UnreachableActionError(ElicitError):
    """A subgradient puts weight on an action the decision rule never takes."""


class NonPositiveScaleError(ElicitError):
    """Homothet scale factors must be strictly positive."""


# ---------------------------------------------------------------------------
# extended reals


def require_extended_real(x: float, what: str = "value") -> float:
    """Validate a float as real-or-(-inf); reject +inf and nan."""
    x = float(x)
    if math.isnan(x) or x == math.inf:
        raise ValueError(f"{what} must be finite or -inf, got {x}")
    return x


def ext_mul(p: float, x: float) -> float:
    """Multiply with the convention 0 * (-inf) == 0."""
    if p == 0.0:
        return 0.0
    return p * x


# ---------------------------------------------------------------------------
# check reports


@dataclass
class Witness:
    """One violation record: which indices, and by how much."""

    kind: str
    indices: tuple
    slack: float
    detail: str = ""

    def to_obj(self) -> dict:
        return {
            "kind": self.kind,
            "indices": list(self.indices),
            "slack": self.slack,
            "detail": self.detail,
        }


@dataclass
class CheckReport:
    """Outcome of a verification: ``passed`` iff ``witnesses`` is empty."""

    passed: bool
    witnesses: list
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.passed != (len(self.witnesses) == 0):
            raise ValueError("passed flag inconsistent with witness list")

    @classmethod
    def from_witnesses(cls, witnesses, info=None) -> "CheckReport":
        witnesses = list(witnesses)
        return cls(passed=not witnesses, witnesses=witnesses, info=dict(info or {}))

    def to_obj(self) -> dict:
        return {
            "passed": self.passed,
            "witnesses": [w.to_obj() for w in self.witnesses],
            "info": dict(self.info),
        }


# ---------------------------------------------------------------------------
# domain types


def _as_matrix(points, what: str) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2:
        raise DimensionMismatchError(f"{what} must be a 2-D array of row vectors")
    if not np.all(np.isfinite(pts)):
        raise ValueError(f"{what} must be finite")
    return pts


def _as_vector(v, what: str = "vector") -> np.ndarray:
    vec = np.atleast_1d(np.asarray(v, dtype=float))
    if vec.ndim != 1:
        raise DimensionMismatchError(f"{what} must be 1-D")
    if not np.all(np.isfinite(vec)):
        raise ValueError(f"{what} must be finite")
    return vec


@dataclass
class TypeSpace:
    """A finite list of type vectors in R^n, pairwise distinct."""

    points: np.ndarray

    def __post_init__(self):
        self.points = _as_matrix(self.points, "points")
        if len(self.points) == 0:
            raise ValueError("type space must be nonempty")
        seen = set()
        for i, p in enumerate(self.points):
            key = p.tobytes()
            if key in seen:
                raise ValueError(f"duplicate type at index {i}")
            seen.add(key)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class LinearFamily:
    """One linear functional per type: allocation rules and subgradient
    selections, indexed positionally against a :class:`TypeSpace`."""

    vectors: np.ndarray

    def __post_init__(self):
        self.vectors = _as_matrix(self.vectors, "vectors")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def __len__(self) -> int:
        return len(self.vectors)

    def check_aligned(self, ts: TypeSpace) -> None:
        if len(self) != len(ts) or self.dim != ts.dim:
            raise DimensionMismatchError(
                f"family ({len(self)} x {self.dim}) not aligned with "
                f"type space ({len(ts)} x {ts.dim})"
            )


@dataclass
class MaxAffine:
    """G(t) = max_k <slopes[k], t> + intercepts[k]; finite everywhere."""

    slopes: np.ndarray
    intercepts: np.ndarray
    domain_hint: Optional[str] = None

    def __post_init__(self):
        self.slopes = _as_matrix(self.slopes, "slopes")
        self.intercepts = _as_vector(self.intercepts, "intercepts")
        if len(self.slopes) == 0:
            raise ValueError("max-affine spec needs at least one piece")
        if len(self.slopes) != len(self.intercepts):
            raise DimensionMismatchError("one intercept per slope required")

    @property
    def dim(self) -> int:
        return self.slopes.shape[1]


@dataclass
class SquaredNorm:
    """G(t) = <t, t>."""

    domain_hint: Optional[str] = None


@dataclass
class NegEntropy:
    """G(t) = sum_i t_i ln t_i on the probability simplex, 0 ln 0 = 0."""

    domain_hint: Optional[str] = "simplex"


ConvexSpec = Union[MaxAffine, SquaredNorm, NegEntropy]


@dataclass
class ScoreTable:
    """Affine score on a finite report set.

    Row r is the affine function t -> <linear[r], t> + constant[r].
    Linear parts are finite; constants may be -inf but never +inf.
    """

    reports: list
    linear: np.ndarray
    constant: np.ndarray

    def __post_init__(self):
        self.reports = list(self.reports)
        self.linear = _as_matrix(self.linear, "linear parts")
        self.constant = np.asarray(self.constant, dtype=float).reshape(-1)
        if not (len(self.reports) == len(self.linear) == len(self.constant)):
            raise DimensionMismatchError("reports, linear, constant must align")
        for c in self.constant:
            require_extended_real(c, "score constant")

    @property
    def dim(self) -> int:
        return self.linear.shape[1]

    def __len__(self) -> int:
        return len(self.reports)

    def evaluate(self, report_idx: int, t) -> float:
        """Score of ``report_idx`` as a function of true type ``t``."""
        t = _as_vector(t, "type")
        return float(self.linear[report_idx] @ t + self.constant[report_idx])

    def evaluate_all(self, t) -> np.ndarray:
        t = _as_vector(t, "type")
        return self.linear @ t + self.constant

    def payoff_matrix(self, ts: TypeSpace) -> np.ndarray:
        """Matrix V[r, i] = score of report r at type i."""
        if ts.dim != self.dim:
            raise DimensionMismatchError("score table dimension != type space")
        return self.linear @ ts.points.T + self.constant[:, None]

    def validate_regular(self, ts: TypeSpace) -> None:
        """Gamma-regularity: the best report is finite at every type."""
        best = self.payoff_matrix(ts).max(axis=0)
        if not np.all(np.isfinite(best)):
            bad = int(np.argmin(np.isfinite(best)))
            raise ValueError(f"no finite-scoring report at type index {bad}")


# ---------------------------------------------------------------------------
# convex-function operations


def _check_simplex(t: np.ndarray) -> None:
    if np.any(t < -SIMPLEX_TOL) or abs(float(t.sum()) - 1.0) > SIMPLEX_TOL:
        raise DomainError(
            f"point {t.tolist()} is not on the probability simplex "
            f"(tolerance {SIMPLEX_TOL})"
        )


def eval_convex(g: ConvexSpec, t) -> float:
    """Evaluate the convex function at ``t``.

    Raises :class:`DomainError` for negative-entropy inputs off the
    simplex beyond tolerance.
    """
    t = _as_vector(t, "point")
    if isinstance(g, MaxAffine):
        if g.dim != len(t):
            raise DimensionMismatchError(f"expected dimension {g.dim}, got {len(t)}")
        return float(np.max(g.slopes @ t + g.intercepts))
    if isinstance(g, SquaredNorm):
        return float(t @ t)
    if isinstance(g, NegEntropy):
        _check_simplex(t)
        pos = t[t > 0.0]
        return float(np.sum(pos * np.log(pos)))
    raise TypeError(f"unknown convex spec {type(g).__name__}")


def subgradient(g: ConvexSpec, t) -> np.ndarray:
    """Return one subgradient of ``g`` at ``t``.

    Max-affine ties are broken toward the lowest piece index, so the
    selection is deterministic.  Negative entropy requires a strictly
    interior point (all coordinates >= 1e-12).
    """
    t = _as_vector(t, "point")
    if isinstance(g, MaxAffine):
        if g.dim != len(t):
            raise DimensionMismatchError(f"expected dimension {g.dim}, got {len(t)}")
        active = int(np.argmax(g.slopes @ t + g.intercepts))
        return g.slopes[active].copy()
    if isinstance(g, SquaredNorm):
        return 2.0 * t
    if isinstance(g, NegEntropy):
        _check_simplex(t)
        if np.any(t < INTERIOR_EPS):
            raise DomainError(
                "negative entropy has no finite subgradient on the simplex "
                f"boundary (coordinates must be >= {INTERIOR_EPS})"
            )
        return 1.0 + np.log(t)
    raise TypeError(f"unknown convex spec {type(g).__name__}")


def _max_affine_breakpoints(g: MaxAffine, lo: float, hi: float) -> np.ndarray:
    """1-D crossing points of all piece pairs, clipped to [lo, hi]."""
    a = g.slopes[:, 0]
    b = g.intercepts
    pts = []
    for i in range(len(a)):
        for j in range(i + 1, len(a)):
            if a[i] != a[j]:
                x = (b[j] - b[i]) / (a[i] - a[j])
                if lo <= x <= hi:
                    pts.append(x)
    return np.asarray(pts, dtype=float)


def conjugate(g: ConvexSpec, d, grid: TypeSpace) -> float:
    """Discrete Legendre transform: max over the grid of <d, v> - G(v).

    The result is a certified lower bound on the true conjugate, and is
    exact whenever a maximizer lies on the grid.  For 1-D max-affine
    functions the piece-crossing points inside the grid's hull are also
    scanned, which makes the 1-D max-affine conjugate exact.
    """
    d = _as_vector(d, "dual vector")
    if len(d) != grid.dim:
        raise DimensionMismatchError("dual vector dimension != grid dimension")
    values = grid.points @ d - np.array([eval_convex(g, v) for v in grid.points])
    best = float(np.max(values))
    if isinstance(g, MaxAffine) and grid.dim == 1:
        lo = float(grid.points.min())
        hi = float(grid.points.max())
        for x in _max_affine_breakpoints(g, lo, hi):
            cand = d[0] * x - eval_convex(g, [x])
            if cand > best:
                best = cand
    return best


def check_subgradient_selection(
    g: ConvexSpec,
    fam: LinearFamily,
    ts: TypeSpace,
    tol: float = DEFAULT_TOL,
) -> CheckReport:
    """Verify G(t') >= G(t) + d_t(t' - t) - tol over all ordered pairs.

    Witnesses list every violating pair together with its slack.
    """
    fam.check_aligned(ts)
    evals = np.array([eval_convex(g, t) for t in ts.points])
    inner = fam.vectors @ ts.points.T  # inner[i, j] = d_i . t_j
    diag = np.diag(inner)
    # slack[i, j] = G(t_i) + d_i(t_j - t_i) - G(t_j)
    slack = evals[:, None] + inner - diag[:, None] - evals[None, :]
    witnesses = []
    for i, j in np.argwhere(slack > tol):
        if i == j:
            continue
        witnesses.append(
            Witness(
                kind="pair",
                indices=(int(i), int(j)),
                slack=float(slack[i, j]),
                detail="subgradient inequality violated",
            )
        )
    return CheckReport.from_witnesses(witnesses, {"tol": tol})


def bregman_divergence(g: ConvexSpec, t, t_report) -> float:
    """Regret of reporting ``t_report`` under truth ``t``:
    G(t) - G(t') - <t - t', dG_{t'}>.  Nonnegative by convexity."""
    t = _as_vector(t, "point")
    t_report = _as_vector(t_report, "report point")
    d = subgradient(g, t_report)
    return eval_convex(g, t) - eval_convex(g, t_report) - float((t - t_report) @ d)
