"""Scalar-loop kernels compiled with numba.

The arithmetic mirrors ``_numpy.py`` operation for operation so that both
backends agree to rounding on short horizons.
"""

import numpy as np
from numba import njit

from .layout import (
    CODE, KP, KM, FLAT, EPS, RHO, Y0, HTR, V0, D1, CC, PLATEAU, CA, CB,
)

_J = dict(cache=True, nogil=True)


@njit(**_J)
def bridge_blockers(keys):
    n = keys.shape[0]
    left = np.empty(n, np.int64)
    right = np.empty(n, np.int64)
    stack = np.empty(n, np.int64)
    top = 0
    for i in range(n):
        while top > 0 and keys[stack[top - 1]] < keys[i]:
            top -= 1
        left[i] = stack[top - 1] if top > 0 else -1
        stack[top] = i
        top += 1
    top = 0
    for i in range(n - 1, -1, -1):
        while top > 0 and keys[stack[top - 1]] < keys[i]:
            top -= 1
        right[i] = stack[top - 1] if top > 0 else n
        stack[top] = i
        top += 1
    return left, right


@njit(**_J)
def pliss_margins(log_a, log_g1):
    n = log_a.shape[0]
    out = np.empty(n, np.float64)
    best = 0.0
    # best = max window sum of (log a_i - log g1) starting at j, right to left
    for j in range(n - 1, -1, -1):
        c = log_a[j] - log_g1
        if j == n - 1 or best <= 0.0:
            best = c
        else:
            best = c + best
        out[j] = -log_g1 - best
    return out


@njit(**_J)
def _mu(th, y):
    s = y if y <= 0.5 else 1.0 - y
    y0 = th[Y0]
    if s <= y0:
        return 1.0 - np.sqrt(1.0 - th[RHO] * s / 2.0)
    w = (s - y0) / th[HTR]
    if w >= 1.0:
        return th[PLATEAU]
    p1 = w - w * w + w * w * w / 3.0
    p2 = w * w / 2.0 - 2.0 * w * w * w / 3.0 + w * w * w * w / 4.0
    return th[V0] + th[HTR] * (th[D1] * p1 + th[CC] * p2)


@njit(**_J)
def _dmu(th, y):
    sgn = 1.0 if y <= 0.5 else -1.0
    s = y if y <= 0.5 else 1.0 - y
    y0 = th[Y0]
    if s <= y0:
        return sgn * (th[RHO] / 4.0) / np.sqrt(1.0 - th[RHO] * s / 2.0)
    w = (s - y0) / th[HTR]
    if w >= 1.0:
        return 0.0
    return sgn * (th[D1] + th[CC] * w) * (1.0 - w) * (1.0 - w)


@njit(**_J)
def _fx_parts(th, x, y):
    """f, f_x, f_y of the unflattened horizontal family at (x, y)."""
    if th[CODE] == 0.0:
        eps = th[EPS]
        if abs(x) >= eps:
            return 1.0 - 2.0 * x * x, -4.0 * x, 0.0
        u = x * x / (eps * eps)
        q = 1.0 - u
        mu = _mu(th, y)
        f = 1.0 - 2.0 * x * x - mu * (q * q * q)
        fx = -4.0 * x + mu * 3.0 * (q * q) * 2.0 * x / (eps * eps)
        fy = -_dmu(th, y) * (q * q * q)
        return f, fx, fy
    a = th[CA] + th[CB] * y
    return 1.0 - a * x * x, -2.0 * a * x, -th[CB] * x * x


@njit(**_J)
def step(th, x, y, side):
    """One application of F.  Returns (x', y', f_x, f_y, K_y, ok)."""
    if x > 0.0:
        sgn = 1.0
    elif x < 0.0:
        sgn = -1.0
    elif side != 0.0:
        sgn = side
    else:
        return 0.0, 0.0, 0.0, 0.0, 0.0, False
    flat = th[FLAT]
    if flat > 0.0 and abs(x) <= flat:
        f, fx, fy = _fx_parts(th, sgn * flat, y)
        fx = 0.0
    else:
        f, fx, fy = _fx_parts(th, x, y)
    if sgn > 0.0:
        yn = th[KP] * y
        ky = th[KP]
    else:
        yn = 1.0 - th[KM] * y
        ky = -th[KM]
    return f, yn, fx, fy, ky, True


@njit(**_J)
def strip_entry(th, xs, ys, sides, n_steps, eps):
    m = xs.shape[0]
    out = np.full(m, -1, np.int64)
    for i in range(m):
        x = xs[i]
        y = ys[i]
        s = sides[i]
        for k in range(1, n_steps + 1):
            x, y, fx, fy, ky, ok = step(th, x, y, s)
            if not ok:
                out[i] = -2
                break
            s = 0.0
            if abs(x) < eps:
                out[i] = k
                break
    return out


@njit(**_J)
def orbit_trace(th, x0, y0, side0, n):
    xs = np.empty(n + 1)
    ys = np.empty(n + 1)
    A = np.empty(n + 1)
    B = np.empty(n + 1)
    D = np.empty(n + 1)
    xs[0] = x0
    ys[0] = y0
    A[0] = 1.0
    B[0] = 0.0
    D[0] = 1.0
    s = side0
    stop = n
    for k in range(n):
        xn, yn, fx, fy, ky, ok = step(th, xs[k], ys[k], s)
        if not ok:
            stop = k
            break
        s = 0.0
        xs[k + 1] = xn
        ys[k + 1] = yn
        A[k + 1] = fx * A[k]
        B[k + 1] = fx * B[k] + fy * D[k]
        D[k + 1] = ky * D[k]
    return xs, ys, A, B, D, stop


@njit(**_J)
def iterate_batch(th, xs, ys, sides, n):
    m = xs.shape[0]
    ox = xs.copy()
    oy = ys.copy()
    good = np.ones(m, np.bool_)
    for i in range(m):
        x = xs[i]
        y = ys[i]
        s = sides[i]
        for k in range(n):
            x, y, fx, fy, ky, ok = step(th, x, y, s)
            if not ok:
                good[i] = False
                break
            s = 0.0
        ox[i] = x
        oy[i] = y
    return ox, oy, good


@njit(**_J)
def cone_batch(th, xs, ys, N, n0, gamma0, lam0, lam1):
    m = xs.shape[0]
    worst = np.zeros(m)
    first_viol = np.full(m, -1, np.int64)
    min_growth = np.full(m, np.inf)
    first_fail = np.full(m, -1, np.int64)
    for i in range(m):
        x = xs[i]
        y = ys[i]
        A = 1.0
        B = 0.0
        D = 1.0
        for n in range(1, N + 1):
            x, y, fx, fy, ky, ok = step(th, x, y, 0.0)
            if not ok:
                worst[i] = np.nan
                break
            B = fx * B + fy * D
            A = fx * A
            D = ky * D
            if n <= n0:
                continue
            den = min(abs(A + gamma0 * B), abs(A - gamma0 * B))
            bound = 2.0 * (lam0 / lam1) ** n * gamma0
            if den == 0.0:
                ratio = np.inf if gamma0 * abs(D) > 0.0 else 0.0
            else:
                ratio = gamma0 * abs(D) / den / bound if bound > 0.0 else 0.0
            if ratio > worst[i]:
                worst[i] = ratio
            if ratio > 1.0 and first_viol[i] < 0:
                first_viol[i] = n
            g = abs(A) / lam1 ** n
            if g < min_growth[i]:
                min_growth[i] = g
            if g <= 1.0 and first_fail[i] < 0:
                first_fail[i] = n
    return worst, first_viol, min_growth, first_fail


@njit(**_J)
def range_sums(vals, starts, stops):
    """Range sums from a table of dyadic block sums, same scheme and
    summation order as the numpy backend."""
    n = vals.shape[0]
    m = starts.shape[0]
    out = np.zeros(m)
    if n == 0 or m == 0:
        return out
    levels = 1
    while (1 << levels) <= n:
        levels += 1
    table = np.zeros((levels, n))
    table[0, :] = vals
    for k in range(1, levels):
        half = 1 << (k - 1)
        for i in range(n - (1 << k) + 1):
            table[k, i] = table[k - 1, i] + table[k - 1, i + half]
    for q in range(m):
        pos = starts[q]
        length = stops[q] - starts[q]
        s = 0.0
        for k in range(levels - 1, -1, -1):
            if (length >> k) & 1:
                s += table[k, pos]
                pos += 1 << k
        out[q] = s
    return out
