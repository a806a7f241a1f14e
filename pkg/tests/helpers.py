"""Shared test oracles: brute-force and finite-difference reference
implementations kept independent of the library code paths they check."""

from __future__ import annotations

from itertools import combinations, permutations

import numpy as np

from elicit import LinearFamily, MaxAffine, TypeSpace


def central_diff_grad(f, t, h=1e-6):
    """Central finite-difference gradient, one coordinate at a time."""
    t = np.asarray(t, dtype=float)
    grad = np.empty_like(t)
    for k in range(len(t)):
        e = np.zeros_like(t)
        e[k] = h
        grad[k] = (f(t + e) - f(t - e)) / (2 * h)
    return grad


def brute_force_cmon(ts: TypeSpace, fam: LinearFamily, tol=1e-9):
    """Enumerate every simple cycle and return (passed, worst_weight).

    Cycles are subsets with all cyclic orders, first element pinned to
    kill rotations.  Exponential; intended for <= 6 types.
    """
    pts = ts.points
    vecs = fam.vectors
    m = len(pts)
    w = vecs @ pts.T - np.einsum("ij,ij->i", vecs, pts)[:, None]
    worst = -np.inf
    for size in range(2, m + 1):
        for subset in combinations(range(m), size):
            first = subset[0]
            for rest in permutations(subset[1:]):
                cycle = (first,) + rest
                total = sum(
                    w[a, b] for a, b in zip(cycle, cycle[1:] + (first,))
                )
                worst = max(worst, total)
    return worst <= tol, worst


def tangent_max_affine(curve_grad, curve_val, anchors) -> MaxAffine:
    """Max-affine under-approximation of a convex function from tangents
    taken at the anchor points."""
    anchors = np.asarray(anchors, dtype=float)
    if anchors.ndim == 1:
        anchors = anchors.reshape(-1, 1)
    slopes = np.vstack([np.atleast_1d(curve_grad(a)) for a in anchors])
    intercepts = np.array(
        [curve_val(a) - slopes[i] @ a for i, a in enumerate(anchors)]
    )
    return MaxAffine(slopes=slopes, intercepts=intercepts)


def random_max_affine(rng, dim, max_pieces=8, scale=2.0) -> MaxAffine:
    k = int(rng.integers(1, max_pieces + 1))
    return MaxAffine(
        slopes=rng.uniform(-scale, scale, size=(k, dim)),
        intercepts=rng.uniform(-scale, scale, size=k),
    )


def random_typespace(rng, dim, max_points=50, scale=2.0) -> TypeSpace:
    m = int(rng.integers(2, max_points + 1))
    pts = rng.uniform(-scale, scale, size=(m, dim))
    # exact duplicates are astronomically unlikely but cheap to rule out
    _, idx = np.unique(pts, axis=0, return_index=True)
    return TypeSpace(pts[np.sort(idx)])


def kl_divergence(p, q):
    """sum_i p_i ln(p_i / q_i) with 0 ln 0 = 0; q must be interior."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))
