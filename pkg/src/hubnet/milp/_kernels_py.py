"""Numpy fallback for the simplex pivot kernels.

Semantics must match hubnet/milp/_kernels_c.pyx exactly; the test suite runs
both backends over the same LP corpus.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def pivot_update(binv: np.ndarray, w: np.ndarray, r: int) -> None:
    """Rank-one update of the dense basis inverse after column r is replaced.

    w is the entering column expressed in the current basis (binv @ A_j).
    """
    br = binv[r] / w[r]
    binv -= np.outer(w, br)
    binv[r] = br


def ratio_test(xB, lbB, ubB, delta, gap, tol, phase1):
    """Largest step t along the entering direction before a bound blocks.

    delta is the per-unit change of each basic value; gap caps the step at
    the entering variable's own bound range. In phase 1, basics that are
    currently outside a bound block only when they reach the violated bound;
    moving further away never blocks.

    Returns (t, blocking_position, to_upper). blocking_position is -1 for a
    bound flip of the entering variable (t == gap) and -2 if the step is
    unbounded.
    """
    m = xB.shape[0]
    best_t = gap
    best_i = -1
    best_target = False
    best_mag = 0.0
    for i in range(m):
        d = delta[i]
        if d > tol:
            if phase1 and xB[i] > ubB[i] + tol:
                continue  # moving further above; handled by pricing
            if phase1 and xB[i] < lbB[i] - tol:
                limit, target = lbB[i], False
            else:
                limit, target = ubB[i], True
            if not np.isfinite(limit):
                continue
            t = (limit - xB[i]) / d
        elif d < -tol:
            if phase1 and xB[i] < lbB[i] - tol:
                continue
            if phase1 and xB[i] > ubB[i] + tol:
                limit, target = ubB[i], True
            else:
                limit, target = lbB[i], False
            if not np.isfinite(limit):
                continue
            t = (limit - xB[i]) / d
        else:
            continue
        if t < 0.0:
            t = 0.0
        if t < best_t - 1e-12 or (t < best_t + 1e-12 and abs(d) > best_mag):
            best_t = t
            best_i = i
            best_target = target
            best_mag = abs(d)
    if best_i < 0:
        if not np.isfinite(best_t):
            return np.inf, -2, False
        return best_t, -1, False
    return best_t, best_i, best_target


def dual_ratio_test(d, alpha, stat, lb, ub, tol):
    """Entering column for the dual simplex.

    alpha is the pivot row in nonbasic coordinates oriented so the leaving
    basic's value increases when an at-lower nonbasic with alpha < 0
    increases. stat: 0 at lower, 1 at upper, 2 basic, 3 free. Returns the
    entering column index, or -1 when none qualifies (primal infeasible).
    """
    n = d.shape[0]
    best_j = -1
    best_ratio = np.inf
    best_mag = 0.0
    for j in range(n):
        s = stat[j]
        if s == 2:
            continue
        if ub[j] - lb[j] <= tol and s != 3:
            continue  # fixed variable cannot enter
        a = alpha[j]
        if s == 0:
            if a >= -tol:
                continue
            ratio = d[j] / (-a)
        elif s == 1:
            if a <= tol:
                continue
            ratio = -d[j] / a
        else:  # free
            if abs(a) <= tol:
                continue
            ratio = abs(d[j]) / abs(a)
        if ratio < 0.0:
            ratio = 0.0
        if ratio < best_ratio - 1e-12 or (
            ratio < best_ratio + 1e-12 and abs(a) > best_mag
        ):
            best_ratio = ratio
            best_j = j
            best_mag = abs(a)
    return best_j
