"""Vectorized numpy kernels; same API and arithmetic order as ``_numba``."""

import numpy as np

from .layout import (
    CODE, KP, KM, FLAT, EPS, RHO, Y0, HTR, V0, D1, CC, PLATEAU, CA, CB,
)


def bridge_blockers(keys):
    """Nearest index on each side whose key is >= keys[i], via a sparse table."""
    keys = np.asarray(keys, dtype=np.int64)
    n = keys.shape[0]
    if n == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    table = [keys]
    span = 1
    while 2 * span <= n:
        prev = table[-1]
        table.append(np.maximum(prev[:-span], prev[span:]))
        span *= 2
    idx = np.arange(n)

    def range_max(lo, hi):
        # max of keys[lo:hi] for hi > lo, elementwise
        length = hi - lo
        level = np.floor(np.log2(np.maximum(length, 1))).astype(np.int64)
        out = np.empty(lo.shape[0], np.int64)
        for lv in np.unique(level):
            sel = level == lv
            t = table[lv]
            w = 1 << lv
            out[sel] = np.maximum(t[lo[sel]], t[hi[sel] - w])
        return out

    # left: smallest window length L with max(keys[i-L:i]) >= keys[i]
    left = np.full(n, -1, np.int64)
    has = np.zeros(n, bool)
    nz = idx > 0
    has[nz] = range_max(np.zeros(nz.sum(), np.int64), idx[nz]) >= keys[nz]
    lo_len = np.zeros(n, np.int64)
    hi_len = idx.copy()
    act = np.where(has)[0]
    while act.size:
        mid = (lo_len[act] + hi_len[act]) // 2
        ok = np.zeros(act.size, bool)
        pos = mid > 0
        ok[pos] = range_max(act[pos] - mid[pos], act[pos]) >= keys[act[pos]]
        hi_len[act[ok]] = mid[ok]
        lo_len[act[~ok]] = mid[~ok]
        done = hi_len[act] - lo_len[act] <= 1
        left[act[done]] = act[done] - hi_len[act[done]]
        act = act[~done]

    right = np.full(n, n, np.int64)
    rem = n - 1 - idx
    has = np.zeros(n, bool)
    nz = rem > 0
    has[nz] = range_max(idx[nz] + 1, idx[nz] + 1 + rem[nz]) >= keys[nz]
    lo_len = np.zeros(n, np.int64)
    hi_len = rem.copy()
    act = np.where(has)[0]
    while act.size:
        mid = (lo_len[act] + hi_len[act]) // 2
        ok = np.zeros(act.size, bool)
        pos = mid > 0
        ok[pos] = range_max(act[pos] + 1, act[pos] + 1 + mid[pos]) >= keys[act[pos]]
        hi_len[act[ok]] = mid[ok]
        lo_len[act[~ok]] = mid[~ok]
        done = hi_len[act] - lo_len[act] <= 1
        right[act[done]] = act[done] + hi_len[act[done]]
        act = act[~done]
    return left, right


def pliss_margins(log_a, log_g1):
    c = np.asarray(log_a, dtype=float) - log_g1
    n = c.shape[0]
    if n == 0:
        return np.empty(0)
    # max_{k>=j} sum_{i=j}^{k} c_i = max_{k>=j} P[k] - P[j-1]
    prefix = np.cumsum(c)
    suffix_max = np.maximum.accumulate(prefix[::-1])[::-1]
    before = np.concatenate(([0.0], prefix[:-1]))
    return -log_g1 - (suffix_max - before)


def _mu(th, y):
    s = np.where(y <= 0.5, y, 1.0 - y)
    y0 = th[Y0]
    wing = 1.0 - np.sqrt(np.maximum(1.0 - th[RHO] * s / 2.0, 0.0))
    w = (s - y0) / th[HTR]
    p1 = w - w * w + w * w * w / 3.0
    p2 = w * w / 2.0 - 2.0 * w * w * w / 3.0 + w * w * w * w / 4.0
    trans = th[V0] + th[HTR] * (th[D1] * p1 + th[CC] * p2)
    return np.where(s <= y0, wing, np.where(w >= 1.0, th[PLATEAU], trans))


def _dmu(th, y):
    sgn = np.where(y <= 0.5, 1.0, -1.0)
    s = np.where(y <= 0.5, y, 1.0 - y)
    y0 = th[Y0]
    wing = (th[RHO] / 4.0) / np.sqrt(np.maximum(1.0 - th[RHO] * s / 2.0, 1e-300))
    w = (s - y0) / th[HTR]
    trans = (th[D1] + th[CC] * w) * (1.0 - w) * (1.0 - w)
    return sgn * np.where(s <= y0, wing, np.where(w >= 1.0, 0.0, trans))


def fx_parts(th, x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if th[CODE] == 0.0:
        eps = th[EPS]
        u = x * x / (eps * eps)
        q = 1.0 - u
        mu = _mu(th, y)
        inside = np.abs(x) < eps
        f = np.where(inside, 1.0 - 2.0 * x * x - mu * (q * q * q), 1.0 - 2.0 * x * x)
        fx = np.where(inside, -4.0 * x + mu * 3.0 * (q * q) * 2.0 * x / (eps * eps), -4.0 * x)
        fy = np.where(inside, -_dmu(th, y) * (q * q * q), 0.0)
        return f, fx, fy
    a = th[CA] + th[CB] * y
    return 1.0 - a * x * x, -2.0 * a * x, -th[CB] * x * x


def step(th, x, y, side):
    """Vectorized F; returns (x', y', f_x, f_y, K_y, ok)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    side = np.broadcast_to(np.asarray(side, dtype=float), x.shape)
    sgn = np.where(x > 0.0, 1.0, np.where(x < 0.0, -1.0, side))
    ok = sgn != 0.0
    flat = th[FLAT]
    flattened = (np.abs(x) <= flat) if flat > 0.0 else np.zeros(x.shape, bool)
    xe = np.where(flattened, sgn * flat, x)
    f, fx, fy = fx_parts(th, xe, y)
    fx = np.where(flattened, 0.0, fx)
    pos = sgn > 0.0
    yn = np.where(pos, th[KP] * y, 1.0 - th[KM] * y)
    ky = np.where(pos, th[KP], -th[KM])
    return f, yn, fx, fy, ky, ok


def strip_entry(th, xs, ys, sides, n_steps, eps):
    x = np.array(xs, dtype=float)
    y = np.array(ys, dtype=float)
    s = np.array(sides, dtype=float)
    out = np.full(x.shape[0], -1, np.int64)
    act = np.arange(x.shape[0])
    for k in range(1, n_steps + 1):
        if act.size == 0:
            break
        xn, yn, _, _, _, ok = step(th, x[act], y[act], s[act])
        bad = ~ok
        out[act[bad]] = -2
        s[act] = 0.0
        x[act] = xn
        y[act] = yn
        hit = ok & (np.abs(xn) < eps)
        out[act[hit]] = k
        act = act[ok & ~hit]
    return out


def orbit_trace(th, x0, y0, side0, n):
    xs = np.empty(n + 1)
    ys = np.empty(n + 1)
    A = np.empty(n + 1)
    B = np.empty(n + 1)
    D = np.empty(n + 1)
    xs[0], ys[0], A[0], B[0], D[0] = x0, y0, 1.0, 0.0, 1.0
    s = side0
    stop = n
    for k in range(n):
        xn, yn, fx, fy, ky, ok = step(th, xs[k], ys[k], s)
        if not bool(ok):
            stop = k
            break
        s = 0.0
        xs[k + 1] = xn
        ys[k + 1] = yn
        A[k + 1] = fx * A[k]
        B[k + 1] = fx * B[k] + fy * D[k]
        D[k + 1] = ky * D[k]
    return xs, ys, A, B, D, stop


def iterate_batch(th, xs, ys, sides, n):
    x = np.array(xs, dtype=float)
    y = np.array(ys, dtype=float)
    s = np.array(sides, dtype=float)
    good = np.ones(x.shape[0], bool)
    for _ in range(n):
        act = np.where(good)[0]
        if act.size == 0:
            break
        xn, yn, _, _, _, ok = step(th, x[act], y[act], s[act])
        good[act[~ok]] = False
        keep = act[ok]
        x[keep] = xn[ok]
        y[keep] = yn[ok]
        s[act] = 0.0
    return x, y, good


def cone_batch(th, xs, ys, N, n0, gamma0, lam0, lam1):
    x = np.array(xs, dtype=float)
    y = np.array(ys, dtype=float)
    m = x.shape[0]
    A = np.ones(m)
    B = np.zeros(m)
    D = np.ones(m)
    worst = np.zeros(m)
    first_viol = np.full(m, -1, np.int64)
    min_growth = np.full(m, np.inf)
    first_fail = np.full(m, -1, np.int64)
    alive = np.ones(m, bool)
    zero = np.zeros(m)
    with np.errstate(divide="ignore", invalid="ignore"):
        for n in range(1, N + 1):
            xn, yn, fx, fy, ky, ok = step(th, x, y, zero)
            newly_dead = alive & ~ok
            worst[newly_dead] = np.nan
            alive &= ok
            x = np.where(alive, xn, x)
            y = np.where(alive, yn, y)
            B = fx * B + fy * D
            A = fx * A
            D = ky * D
            if n <= n0:
                continue
            den = np.minimum(np.abs(A + gamma0 * B), np.abs(A - gamma0 * B))
            bound = 2.0 * (lam0 / lam1) ** n * gamma0
            if bound > 0.0:
                ratio = np.where(den == 0.0,
                                 np.where(gamma0 * np.abs(D) > 0.0, np.inf, 0.0),
                                 gamma0 * np.abs(D) / den / bound)
            else:
                ratio = np.zeros(m)
            upd = alive & (ratio > worst)
            worst[upd] = ratio[upd]
            nv = alive & (ratio > 1.0) & (first_viol < 0)
            first_viol[nv] = n
            g = np.abs(A) / lam1 ** n
            upd = alive & (g < min_growth)
            min_growth[upd] = g[upd]
            nf = alive & (g <= 1.0) & (first_fail < 0)
            first_fail[nf] = n
    return worst, first_viol, min_growth, first_fail


def range_sums(vals, starts, stops):
    """Range sums from a table of dyadic block sums: each range is split into
    power-of-two blocks, so no prefix differences (and no cancellation)."""
    vals = np.asarray(vals, dtype=float)
    starts = np.asarray(starts, dtype=np.int64)
    lengths = np.asarray(stops, dtype=np.int64) - starts
    out = np.zeros(starts.shape[0])
    n = vals.shape[0]
    if n == 0 or starts.shape[0] == 0:
        return out
    table = [vals]
    while (1 << len(table)) <= n:
        prev = table[-1]
        half = 1 << (len(table) - 1)
        table.append(prev[:-half] + prev[half:])
    pos = starts.copy()
    for k in range(len(table) - 1, -1, -1):
        use = (lengths >> k) & 1 == 1
        if np.any(use):
            out[use] += table[k][pos[use]]
            pos[use] += 1 << k
    return out
