"""Numpy implementation of the grid kernels (used when the extension is absent).

Same double-double algorithms as ``_kernels.pyx``, vectorised over arrays.
A double-double number is a pair ``(hi, lo)`` of equally shaped arrays.
"""

import numpy as np

BACKEND = "python"

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
COMB_TEETH = 1024.0
SPLITTER = 134217729.0
LN2_HI = 0.6931471805599453
LN2_LO = 2.3190468138462996e-17
TAYLOR_DEGREE = 12
EXP_TABLE_SIZE = 64


def two_sum(a, b):
    s = a + b
    bb = s - a
    return s, (a - (s - bb)) + (b - bb)


def quick_two_sum(a, b):
    s = a + b
    return s, b - (s - a)


def _split(a):
    t = SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def two_prod(a, b):
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    return p, ((ah * bh - p) + ah * bl + al * bh) + al * bl


def add(a, b):
    s, e = two_sum(a[0], b[0])
    t, f = two_sum(a[1], b[1])
    s, e = quick_two_sum(s, e + t)
    return quick_two_sum(s, e + f)


def add_d(a, b):
    s, e = two_sum(a[0], b)
    return quick_two_sum(s, e + a[1])


def neg(a):
    return -a[0], -a[1]


def sub(a, b):
    return add(a, neg(b))


def mul(a, b):
    p, e = two_prod(a[0], b[0])
    return quick_two_sum(p, e + (a[0] * b[1] + a[1] * b[0]))


def mul_d(a, b):
    p, e = two_prod(a[0], b)
    return quick_two_sum(p, e + a[1] * b)


def div(a, b):
    q1 = a[0] / b[0]
    r = sub(a, mul_d(b, q1))
    q2 = r[0] / b[0]
    r = sub(r, mul_d(b, q2))
    q3 = r[0] / b[0]
    return add_d(quick_two_sum(q1, q2), q3)


def ldexp(a, k):
    return np.ldexp(a[0], k), np.ldexp(a[1], k)


def dd_sqrt(a):
    with np.errstate(invalid="ignore", divide="ignore"):
        q = np.sqrt(a[0])
        r = sub(a, two_prod(q, q))
        out = quick_two_sum(q, r[0] / (2.0 * q))
    zero = a[0] == 0.0
    return np.where(zero, 0.0, out[0]), np.where(zero, 0.0, out[1])


def _const(x):
    return np.float64(x), np.float64(0.0)


_ONE = _const(1.0)
INV_FACT = [div(_ONE, _const(float(np.prod(np.arange(1, i + 1))))) for i in range(16)]


def _exp_series(r, halvings=20, degree=9):
    """exp(r) for small r by halving, Taylor, squaring back; used for the table."""
    r = ldexp(r, -halvings)
    s = r
    t = r
    for i in range(2, degree + 1):
        t = mul(t, r)
        s = add(s, mul(t, INV_FACT[i]))
    for _ in range(halvings):
        s = add(ldexp(s, 1), mul(s, s))
    return add_d(s, 1.0)


_ln2_steps = mul_d((np.float64(LN2_HI), np.float64(LN2_LO)),
                   np.arange(EXP_TABLE_SIZE) / EXP_TABLE_SIZE)
EXP_TABLE = _exp_series(_ln2_steps)


def dd_exp(a):
    """exp(a) = 2^m 2^(j/64) exp(r) with |r| <= ln2/128."""
    hi = a[0]
    big = hi > 709.0
    tiny = hi < -745.0
    safe = np.where(big | tiny, 0.0, hi)
    a = (safe, np.where(big | tiny, 0.0, a[1]))
    z = np.floor(safe * (EXP_TABLE_SIZE / LN2_HI) + 0.5)
    r = sub(a, add(two_prod(LN2_HI / EXP_TABLE_SIZE, z), two_prod(LN2_LO / EXP_TABLE_SIZE, z)))
    rh = r[0]
    t = np.full_like(rh, INV_FACT[TAYLOR_DEGREE][0])
    for i in range(TAYLOR_DEGREE - 1, 5, -1):
        t = t * rh + INV_FACT[i][0]
    p = (t, np.zeros_like(t))
    for i in range(5, 0, -1):
        p = add(mul(p, r), INV_FACT[i])
    p = mul(p, r)
    n = z.astype(np.int64)
    j = n & (EXP_TABLE_SIZE - 1)
    m = (n - j) // EXP_TABLE_SIZE
    e = (EXP_TABLE[0][j], EXP_TABLE[1][j])
    out = ldexp(add(e, mul(e, p)), m)
    return (np.where(big, np.inf, np.where(tiny, 0.0, out[0])),
            np.where(big | tiny, 0.0, out[1]))


def dd_log(a):
    bad = ~(a[0] > 0.0)
    with np.errstate(invalid="ignore", divide="ignore"):
        x = np.log(np.where(bad, 1.0, a[0]))
    e = dd_exp((-x, np.zeros_like(x)))
    r = add_d(add_d(mul((np.where(bad, 1.0, a[0]), np.where(bad, 0.0, a[1])), e), -1.0), x)
    return np.where(bad, np.nan, r[0]), np.where(bad, 0.0, r[1])


def pow_mode(alpha):
    """(mode, k): 0 general, 1 alpha=-k, 2 alpha=-k/2, 3 alpha=0."""
    alpha = float(alpha)
    if alpha == 0.0:
        return 3, 0
    if alpha == np.floor(alpha) and alpha >= -64.0:
        return 1, int(-alpha)
    if 2 * alpha == np.floor(2 * alpha) and alpha >= -64.0:
        return 2, int(-2 * alpha)
    return 0, 0


def _ipow(a, k):
    r = (np.ones_like(a[0]), np.zeros_like(a[0]))
    while k > 0:
        if k & 1:
            r = mul(r, a)
        a = mul(a, a)
        k >>= 1
    return r


def dd_pow(a, alpha):
    mode, k = pow_mode(alpha)
    one = (np.ones_like(a[0]), np.zeros_like(a[0]))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if mode == 3:
            return one
        if mode == 1:
            return div(one, _ipow(a, k))
        if mode == 2:
            return div(one, _ipow(dd_sqrt(a), k))
        return dd_exp(mul_d(dd_log(a), alpha))


def dd_pow_array(hi, lo, alpha):
    return dd_pow((np.asarray(hi, float), np.asarray(lo, float)), alpha)


def dd_log_array(hi, lo):
    return dd_log((np.asarray(hi, float), np.asarray(lo, float)))


def noise(delta, seed, kind, x):
    x = np.ascontiguousarray(x, dtype=float)
    if delta == 0.0:
        return np.zeros_like(x)
    seed = np.uint64(seed)
    if kind == 1:
        k = np.floor(x * COMB_TEETH).astype(np.int64).view(np.uint64)
        even = ((k + seed) & np.uint64(1)) == 0
        return np.where(even, delta, -delta)
    with np.errstate(over="ignore"):
        z = x.view(np.uint64) ^ (seed * GOLDEN)
        z = z + GOLDEN
        z = (z ^ (z >> np.uint64(30))) * MIX1
        z = (z ^ (z >> np.uint64(27))) * MIX2
        z = z ^ (z >> np.uint64(31))
    u = (z >> np.uint64(11)).astype(float) * 1.1102230246251565e-16
    return delta * (2.0 * u - 1.0)


def _table(txs, tvals, x):
    hi = x[0]
    out = np.full_like(hi, np.nan)
    lo_ = np.full_like(hi, 0.0)
    if len(txs) == 0:
        return out, lo_
    ok = (hi >= txs[0]) & (hi <= txs[-1])
    j = np.clip(np.searchsorted(txs, hi, side="right") - 1, 0, len(txs) - 2)
    slope = div(two_sum(tvals[j + 1], -tvals[j]), two_sum(txs[j + 1], -txs[j]))
    v = add_d(mul(slope, add_d(x, -txs[j])), tvals[j])
    return np.where(ok, v[0], np.nan), np.where(ok, v[1], 0.0)


def _f(kind, p0, p1, alpha, txs, tvals, nd, ns, nk, x, cx, key):
    """f at x given cx = 1 - x accurately; noise keyed on the double ``key``."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if kind == 0:
            v = add_d(add(mul_d(dd_pow(x, alpha), p0), mul_d(dd_pow(cx, alpha), p1)), -p1)
        elif kind == 1:
            v = add_d(mul_d(dd_log(cx), p0), p1)
        else:
            v = _table(txs, tvals, x)
    for delta, seed, k in zip(nd, ns, nk):
        v = add_d(v, noise(float(delta), seed, int(k), key))
    return v


def eval_f(kind, p0, p1, alpha, txs, tvals, nd, ns, nk, x):
    x = np.ascontiguousarray(x, dtype=float)
    v = _f(kind, p0, p1, alpha, txs, tvals, nd, ns, nk, (x, np.zeros_like(x)),
           two_sum(1.0, -x), x)
    return v[0] + v[1]


def defect_field(kind, p0, p1, alpha, txs, tvals, nd, ns, nk, gx, gy):
    gx = np.ascontiguousarray(gx, dtype=float)
    gy = np.ascontiguousarray(gy, dtype=float)
    spec = (kind, p0, p1, alpha, txs, tvals, nd, ns, nk)
    zero = np.zeros_like(gx)
    cx = two_sum(1.0, -gx)
    cy = two_sum(1.0, -gy)
    # 1 - x - y is exact for doubles of moderate size; it gives 1 - u and 1 - v
    # without cancellation near the hypotenuse
    cxy = add_d(cx, -gy)
    u = div((gy, zero), cx)
    v = div((gx, zero), cy)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        left = mul(dd_pow(cx, alpha), _f(*spec, u, div(cxy, cx), gy / (1.0 - gx)))
        right = mul(dd_pow(cy, alpha), _f(*spec, v, div(cxy, cy), gx / (1.0 - gy)))
        d = add(sub(_f(*spec, (gx, zero), cx, gx), _f(*spec, (gy, zero), cy, gy)),
                sub(left, right))
    return d[0] + d[1]


def max_abs_defect(kind, p0, p1, alpha, txs, tvals, nd, ns, nk, gx, gy):
    d = np.abs(defect_field(kind, p0, p1, alpha, txs, tvals, nd, ns, nk, gx, gy))
    if len(d) == 0:
        return -1.0, -1
    bad = np.flatnonzero(np.isnan(d))
    if len(bad):
        return float("nan"), int(bad[0])
    i = int(np.argmax(d))
    return float(d[i]), i
