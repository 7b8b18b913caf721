# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled grid kernels in double-double arithmetic.

Exact solutions with alpha << 0 take values near margin**alpha (1e15 at
alpha=-5, margin=1e-3) while the defect cancels to zero, so every term is
carried with ~106 bits and only the final sum is rounded to a double.
Must agree with ``_kernels_py`` to rounding of the final result.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport pow, log, floor, sqrt, ldexp, isnan, NAN, INFINITY, fabs
from libc.stdint cimport uint64_t, int64_t
from libc.string cimport memcpy

cnp.import_array()

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef uint64_t MIX1 = 0xBF58476D1CE4E5B9ULL
cdef uint64_t MIX2 = 0x94D049BB133111EBULL
cdef double COMB_TEETH = 1024.0
cdef double SPLITTER = 134217729.0
cdef double LN2_HI = 0.6931471805599453
cdef double LN2_LO = 2.3190468138462996e-17
cdef int TAYLOR_DEGREE = 12
cdef enum:
    EXP_TABLE_SIZE = 64

ctypedef struct dd:
    double hi
    double lo

cdef dd INV_FACT[16]
cdef dd EXP_TABLE[EXP_TABLE_SIZE]


# --- error-free transforms and double-double arithmetic ------------------

cdef inline dd _mk(double hi, double lo) noexcept nogil:
    cdef dd r
    r.hi = hi
    r.lo = lo
    return r

cdef inline dd two_sum(double a, double b) noexcept nogil:
    cdef double s = a + b
    cdef double bb = s - a
    return _mk(s, (a - (s - bb)) + (b - bb))

cdef inline dd quick_two_sum(double a, double b) noexcept nogil:
    cdef double s = a + b
    return _mk(s, b - (s - a))

cdef inline dd two_prod(double a, double b) noexcept nogil:
    cdef double p = a * b
    cdef double t = SPLITTER * a
    cdef double ah = t - (t - a)
    cdef double al = a - ah
    t = SPLITTER * b
    cdef double bh = t - (t - b)
    cdef double bl = b - bh
    return _mk(p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)

cdef inline dd dd_add(dd a, dd b) noexcept nogil:
    cdef dd s = two_sum(a.hi, b.hi)
    cdef dd t = two_sum(a.lo, b.lo)
    s.lo += t.hi
    s = quick_two_sum(s.hi, s.lo)
    s.lo += t.lo
    return quick_two_sum(s.hi, s.lo)

cdef inline dd dd_add_d(dd a, double b) noexcept nogil:
    cdef dd s = two_sum(a.hi, b)
    s.lo += a.lo
    return quick_two_sum(s.hi, s.lo)

cdef inline dd dd_neg(dd a) noexcept nogil:
    return _mk(-a.hi, -a.lo)

cdef inline dd dd_sub(dd a, dd b) noexcept nogil:
    return dd_add(a, dd_neg(b))

cdef inline dd dd_mul(dd a, dd b) noexcept nogil:
    cdef dd p = two_prod(a.hi, b.hi)
    p.lo += a.hi * b.lo + a.lo * b.hi
    return quick_two_sum(p.hi, p.lo)

cdef inline dd dd_mul_d(dd a, double b) noexcept nogil:
    cdef dd p = two_prod(a.hi, b)
    p.lo += a.lo * b
    return quick_two_sum(p.hi, p.lo)

cdef inline dd dd_div(dd a, dd b) noexcept nogil:
    cdef double q1 = a.hi / b.hi
    cdef dd r = dd_sub(a, dd_mul_d(b, q1))
    cdef double q2 = r.hi / b.hi
    r = dd_sub(r, dd_mul_d(b, q2))
    cdef double q3 = r.hi / b.hi
    return dd_add_d(quick_two_sum(q1, q2), q3)

cdef inline dd dd_ldexp(dd a, int k) noexcept nogil:
    return _mk(ldexp(a.hi, k), ldexp(a.lo, k))

cdef inline dd dd_sqrt(dd a) noexcept nogil:
    if a.hi <= 0.0:
        return _mk(0.0 if a.hi == 0.0 else NAN, 0.0)
    cdef double q = sqrt(a.hi)
    cdef dd r = dd_sub(a, two_prod(q, q))
    return quick_two_sum(q, r.hi / (2.0 * q))

cdef dd dd_exp(dd a) noexcept nogil:
    """exp(a) = 2^m * 2^(j/64) * exp(r) with |r| <= ln2/128."""
    cdef double z, t, rh
    cdef long n, j, m
    cdef dd r, p
    cdef int i
    if a.hi > 709.0:
        return _mk(INFINITY, 0.0)
    if a.hi < -745.0:
        return _mk(0.0, 0.0)
    z = floor(a.hi * (EXP_TABLE_SIZE / LN2_HI) + 0.5)
    n = <long>z
    r = dd_sub(a, dd_add(two_prod(LN2_HI / EXP_TABLE_SIZE, z),
                         two_prod(LN2_LO / EXP_TABLE_SIZE, z)))
    # Taylor terms of order >= 6 are below 2^-53 relative; plain doubles suffice
    rh = r.hi
    t = INV_FACT[TAYLOR_DEGREE].hi
    for i in range(TAYLOR_DEGREE - 1, 5, -1):
        t = t * rh + INV_FACT[i].hi
    p = _mk(t, 0.0)
    for i in range(5, 0, -1):
        p = dd_add(dd_mul(p, r), INV_FACT[i])
    p = dd_mul(p, r)
    j = n & (EXP_TABLE_SIZE - 1)
    m = (n - j) // EXP_TABLE_SIZE
    p = dd_add(EXP_TABLE[j], dd_mul(EXP_TABLE[j], p))
    return dd_ldexp(p, <int>m)

cdef dd dd_log(dd a) noexcept nogil:
    cdef double x
    if a.hi <= 0.0 or isnan(a.hi):
        return _mk(NAN, 0.0)
    x = log(a.hi)
    # one Newton step on exp(y) = a doubles the number of correct bits
    return dd_add_d(dd_add_d(dd_mul(a, dd_exp(_mk(-x, 0.0))), -1.0), x)

cdef inline dd dd_ipow(dd a, long k) noexcept nogil:
    cdef dd r = _mk(1.0, 0.0)
    while k > 0:
        if k & 1:
            r = dd_mul(r, a)
        a = dd_mul(a, a)
        k >>= 1
    return r

cdef inline dd dd_pow(dd a, double alpha, int mode, long k) noexcept nogil:
    """a**alpha; mode 0 general, 1 alpha=-k, 2 alpha=-k/2, 3 alpha=0."""
    if mode == 3:
        return _mk(1.0, 0.0)
    if mode == 1:
        return dd_div(_mk(1.0, 0.0), dd_ipow(a, k))
    if mode == 2:
        return dd_div(_mk(1.0, 0.0), dd_ipow(dd_sqrt(a), k))
    return dd_exp(dd_mul_d(dd_log(a), alpha))


cdef dd _exp_series(dd r) noexcept nogil:
    """exp(r) for |r| < 1 by halving 20 times, Taylor, and squaring back."""
    cdef dd s, t
    cdef int i
    r = dd_ldexp(r, -20)
    s = r
    t = r
    for i in range(2, 10):
        t = dd_mul(t, r)
        s = dd_add(s, dd_mul(t, INV_FACT[i]))
    for i in range(20):
        s = dd_add(dd_ldexp(s, 1), dd_mul(s, s))
    return dd_add_d(s, 1.0)


cdef void _init_constants() noexcept:
    cdef int i
    cdef double f = 1.0
    INV_FACT[0] = _mk(1.0, 0.0)
    for i in range(1, 16):
        f *= i
        INV_FACT[i] = dd_div(_mk(1.0, 0.0), _mk(f, 0.0))
    for i in range(EXP_TABLE_SIZE):
        EXP_TABLE[i] = _exp_series(dd_mul_d(_mk(LN2_HI, LN2_LO), i / <double>EXP_TABLE_SIZE))

_init_constants()


# --- noise ---------------------------------------------------------------

cdef inline uint64_t _bits(double x) noexcept nogil:
    cdef uint64_t u
    memcpy(&u, &x, 8)
    return u

cdef inline double _noise1(double delta, uint64_t seed, long kind, double x) noexcept nogil:
    cdef uint64_t z
    cdef int64_t k
    if delta == 0.0:
        return 0.0
    if kind == 1:
        k = <int64_t>floor(x * COMB_TEETH)
        if ((<uint64_t>k + seed) & 1ULL) == 0:
            return delta
        return -delta
    z = _bits(x) ^ (seed * GOLDEN)
    z = z + GOLDEN
    z = (z ^ (z >> 30)) * MIX1
    z = (z ^ (z >> 27)) * MIX2
    z = z ^ (z >> 31)
    return delta * (2.0 * (<double>(z >> 11) * 1.1102230246251565e-16) - 1.0)


# --- function specs --------------------------------------------------------

cdef struct Spec:
    long kind
    double p0
    double p1
    double alpha
    int mode
    long k
    const double* txs
    const double* tvals
    Py_ssize_t tn
    const double* nd
    const uint64_t* ns
    const long* nk
    Py_ssize_t nn


cdef inline dd _table(const Spec* s, dd x) noexcept nogil:
    cdef Py_ssize_t lo = 0, hi = s.tn - 1, mid
    cdef dd slope
    if s.tn == 0 or isnan(x.hi) or x.hi < s.txs[0] or x.hi > s.txs[s.tn - 1]:
        return _mk(NAN, 0.0)
    while hi - lo > 1:
        mid = (lo + hi) >> 1
        if s.txs[mid] <= x.hi:
            lo = mid
        else:
            hi = mid
    slope = dd_div(two_sum(s.tvals[hi], -s.tvals[lo]), two_sum(s.txs[hi], -s.txs[lo]))
    return dd_add_d(dd_mul(slope, dd_add_d(x, -s.txs[lo])), s.tvals[lo])


cdef inline dd _f(const Spec* s, dd x, dd cx, double key) noexcept nogil:
    """f at x, given cx = 1 - x accurately; noise is keyed on the double ``key``."""
    cdef dd v
    cdef Py_ssize_t j
    if s.kind == 0:
        v = dd_add_d(dd_add(dd_mul_d(dd_pow(x, s.alpha, s.mode, s.k), s.p0),
                            dd_mul_d(dd_pow(cx, s.alpha, s.mode, s.k), s.p1)), -s.p1)
    elif s.kind == 1:
        v = dd_add_d(dd_mul_d(dd_log(cx), s.p0), s.p1)
    else:
        v = _table(s, x)
    for j in range(s.nn):
        v = dd_add_d(v, _noise1(s.nd[j], s.ns[j], s.nk[j], key))
    return v


cdef inline dd _power_at(const Spec* s, dd px, dd pcx) noexcept nogil:
    """a x^alpha + b (1-x)^alpha - b from precomputed powers."""
    return dd_add_d(dd_add(dd_mul_d(px, s.p0), dd_mul_d(pcx, s.p1)), -s.p1)


cdef inline dd _noise_at(const Spec* s, dd v, double key) noexcept nogil:
    cdef Py_ssize_t j
    for j in range(s.nn):
        v = dd_add_d(v, _noise1(s.nd[j], s.ns[j], s.nk[j], key))
    return v


cdef inline double _defect(const Spec* s, double x, double y) noexcept nogil:
    cdef dd cx = two_sum(1.0, -x)
    cdef dd cy = two_sum(1.0, -y)
    # 1 - x - y is exact for doubles of moderate size; it gives 1 - u and 1 - v
    # without cancellation near the hypotenuse
    cdef dd cxy = dd_add_d(cx, -y)
    cdef dd u = dd_div(_mk(y, 0.0), cx)
    cdef dd v = dd_div(_mk(x, 0.0), cy)
    cdef dd cu = dd_div(cxy, cx)
    cdef dd cv = dd_div(cxy, cy)
    cdef double ku = y / (1.0 - x)
    cdef double kv = x / (1.0 - y)
    cdef dd pcx = dd_pow(cx, s.alpha, s.mode, s.k)
    cdef dd pcy = dd_pow(cy, s.alpha, s.mode, s.k)
    cdef dd fx, fy, fu, fv, d
    if s.kind == 0:
        # (1-x)^alpha serves both as weight and inside f(x)
        fx = _noise_at(s, _power_at(s, dd_pow(_mk(x, 0.0), s.alpha, s.mode, s.k), pcx), x)
        fy = _noise_at(s, _power_at(s, dd_pow(_mk(y, 0.0), s.alpha, s.mode, s.k), pcy), y)
        fu = _noise_at(s, _power_at(s, dd_pow(u, s.alpha, s.mode, s.k),
                                    dd_pow(cu, s.alpha, s.mode, s.k)), ku)
        fv = _noise_at(s, _power_at(s, dd_pow(v, s.alpha, s.mode, s.k),
                                    dd_pow(cv, s.alpha, s.mode, s.k)), kv)
    else:
        fx = _f(s, _mk(x, 0.0), cx, x)
        fy = _f(s, _mk(y, 0.0), cy, y)
        fu = _f(s, u, cu, ku)
        fv = _f(s, v, cv, kv)
    d = dd_add(dd_sub(fx, fy), dd_sub(dd_mul(pcx, fu), dd_mul(pcy, fv)))
    return d.hi + d.lo


cdef void _pow_mode(double alpha, int* mode, long* k) noexcept:
    mode[0] = 0
    k[0] = 0
    if alpha == 0.0:
        mode[0] = 3
    elif alpha == floor(alpha) and alpha >= -64.0:
        mode[0] = 1
        k[0] = <long>(-alpha)
    elif 2.0 * alpha == floor(2.0 * alpha) and alpha >= -64.0:
        mode[0] = 2
        k[0] = <long>(-2.0 * alpha)


cdef Spec _spec(long kind, double p0, double p1, double alpha,
                const double[::1] txs, const double[::1] tvals,
                const double[::1] nd, const uint64_t[::1] ns, const long[::1] nk):
    cdef Spec s
    s.kind = kind
    s.p0 = p0
    s.p1 = p1
    s.alpha = alpha
    _pow_mode(alpha, &s.mode, &s.k)
    s.tn = txs.shape[0]
    s.txs = &txs[0] if s.tn else NULL
    s.tvals = &tvals[0] if s.tn else NULL
    s.nn = nd.shape[0]
    s.nd = &nd[0] if s.nn else NULL
    s.ns = &ns[0] if s.nn else NULL
    s.nk = &nk[0] if s.nn else NULL
    return s


# --- Python entry points -----------------------------------------------------

def noise(double delta, uint64_t seed, long kind, const double[::1] x):
    cdef Py_ssize_t i, n = x.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _noise1(delta, seed, kind, x[i])
    return out


def eval_f(long kind, double p0, double p1, double alpha,
           const double[::1] txs, const double[::1] tvals,
           const double[::1] nd, const uint64_t[::1] ns, const long[::1] nk,
           const double[::1] x):
    cdef Spec s = _spec(kind, p0, p1, alpha, txs, tvals, nd, ns, nk)
    cdef Py_ssize_t i, n = x.shape[0]
    cdef dd v
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            v = _f(&s, _mk(x[i], 0.0), two_sum(1.0, -x[i]), x[i])
            o[i] = v.hi + v.lo
    return out


def defect_field(long kind, double p0, double p1, double alpha,
                 const double[::1] txs, const double[::1] tvals,
                 const double[::1] nd, const uint64_t[::1] ns, const long[::1] nk,
                 const double[::1] gx, const double[::1] gy):
    cdef Spec s = _spec(kind, p0, p1, alpha, txs, tvals, nd, ns, nk)
    cdef Py_ssize_t i, n = gx.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _defect(&s, gx[i], gy[i])
    return out


def max_abs_defect(long kind, double p0, double p1, double alpha,
                   const double[::1] txs, const double[::1] tvals,
                   const double[::1] nd, const uint64_t[::1] ns, const long[::1] nk,
                   const double[::1] gx, const double[::1] gy):
    """Return ``(max |defect|, index)``; the first NaN wins with its index."""
    cdef Spec s = _spec(kind, p0, p1, alpha, txs, tvals, nd, ns, nk)
    cdef Py_ssize_t i, best_i = -1, n = gx.shape[0]
    cdef double d, best = -1.0
    with nogil:
        for i in range(n):
            d = fabs(_defect(&s, gx[i], gy[i]))
            if isnan(d):
                best = d
                best_i = i
                break
            if d > best:
                best = d
                best_i = i
    return best, best_i


def dd_pow_array(const double[::1] hi, const double[::1] lo, double alpha):
    """Double-double power, exposed for accuracy tests."""
    cdef int mode
    cdef long k
    _pow_mode(alpha, &mode, &k)
    cdef Py_ssize_t i, n = hi.shape[0]
    out_hi = np.empty(n)
    out_lo = np.empty(n)
    cdef double[::1] oh = out_hi, ol = out_lo
    cdef dd r
    with nogil:
        for i in range(n):
            r = dd_pow(_mk(hi[i], lo[i]), alpha, mode, k)
            oh[i] = r.hi
            ol[i] = r.lo
    return out_hi, out_lo


def dd_log_array(const double[::1] hi, const double[::1] lo):
    cdef Py_ssize_t i, n = hi.shape[0]
    out_hi = np.empty(n)
    out_lo = np.empty(n)
    cdef double[::1] oh = out_hi, ol = out_lo
    cdef dd r
    with nogil:
        for i in range(n):
            r = dd_log(_mk(hi[i], lo[i]))
            oh[i] = r.hi
            ol[i] = r.lo
    return out_hi, out_lo
