"""Deterministic test data: exact solutions, noise, canonical families, tables, and oracles."""

from __future__ import annotations

import bisect
import hashlib
import math
import struct
from dataclasses import dataclass
from typing import Sequence

import gmpy2
import numpy as np

from .domain import DomainError, DomainGrid, as_alpha
from .equation import (COMB, NOISE_KINDS, UNIFORM, FunctionSpec, LogForm, Perturbed,
                       Pointwise, PowerForm, Tabulated, eval_array)
from .infomeasure import (FamilyParams, MeasureFamily, PowerFamily,
                          TabulatedFamily, _canonical, _check_variant, bridge_pair,
                          family_samples, fit_points, merge_first, split_pair, swap_last)


@dataclass(frozen=True)
class PerturbationPlan:
    """Bounded deterministic noise: |noise(x)| <= delta, a function of (seed, x) only."""
    delta: float
    seed: int = 0
    kind: str = UNIFORM

    def __post_init__(self):
        if not self.delta >= 0:
            raise DomainError(f"noise bound must be >= 0, got {self.delta!r}")
        if self.kind not in NOISE_KINDS:
            raise DomainError(f"unknown noise kind {self.kind!r}; use {sorted(NOISE_KINDS)}")


def make_exact_power(a: float, b: float, alpha) -> PowerForm:
    """a x^alpha + b (1-x)^alpha - b, an exact solution for alpha < 0."""
    if as_alpha(alpha).is_zero:
        raise DomainError("alpha = 0 has no power-form solution; use make_exact_log")
    return PowerForm(float(a), float(b))


def make_exact_log(lam: float, c: float) -> LogForm:
    """lam ln(1-x) + c, an exact solution for alpha = 0."""
    return LogForm(float(lam), float(c))


def perturb(spec: FunctionSpec, plan: PerturbationPlan) -> Perturbed:
    return Perturbed(spec, float(plan.delta), int(plan.seed), plan.kind)


# --- tables --------------------------------------------------------------

def sample_points(count: int, margin: float = 1e-3, spacing: str = "graded") -> np.ndarray:
    """``count`` increasing points from ``margin`` to ``1 - margin``.

    "graded" spacing is geometric towards both ends, where x^alpha and
    (1-x)^alpha curve most; "uniform" is evenly spaced.
    """
    if count < 2:
        raise DomainError(f"need at least 2 points, got {count}")
    if not 0 < margin < 0.5:
        raise DomainError(f"margin out of range ]0, 1/2[: {margin!r}")
    if spacing == "uniform":
        xs = np.linspace(margin, 1.0 - margin, count)
    elif spacing == "graded":
        s = np.linspace(-1.0, 1.0, count)
        xs = 0.5 + np.sign(s) * 0.5 * (1.0 - (2.0 * margin)**np.abs(s))
    else:
        raise DomainError(f"unknown spacing {spacing!r}")
    xs[0], xs[-1] = margin, 1.0 - margin
    if not np.all(np.diff(xs) > 0):
        raise DomainError("too many points for this margin; samples collide")
    return xs


def tabulate(spec: FunctionSpec, alpha, xs) -> Tabulated:
    xs = np.asarray(xs, dtype=float)
    return Tabulated(xs, eval_array(spec, alpha, xs))


# --- families ------------------------------------------------------------

def make_canonical_family(params: FamilyParams, alpha, max_n: int) -> MeasureFamily:
    """J_n for n = 2..max_n; exactly recursive and 3-semisymmetric."""
    a = as_alpha(alpha).value
    _check_variant(params, a)
    meta = {"kind": "canonical", "alpha": a, "params": _family_params_dict(params)}
    return MeasureFamily(max_n, lambda p: _canonical(params, a, p), meta)


def _family_params_dict(params: FamilyParams) -> dict:
    if isinstance(params, PowerFamily):
        return {"kind": "power", "c": params.c, "d": params.d}
    return {"kind": "log", "c": params.c, "lambda": params.lam}


def family_noise(delta: float, seed: int, p: Sequence[float]) -> float:
    """delta * (2u - 1) with u uniform in [0, 1[ hashed from (seed, n, bits of p)."""
    if delta == 0.0:
        return 0.0
    msg = struct.pack(f"<QQ{len(p)}d", seed % 2**64, len(p), *p)
    z = int.from_bytes(hashlib.blake2b(msg, digest_size=8).digest(), "little")
    return delta * (2.0 * ((z >> 11) * 2.0**-53) - 1.0)


def perturb_family(family: MeasureFamily, deltas: Sequence[float], seed: int) -> MeasureFamily:
    """I_n + noise with |noise| <= deltas[n - 2], for n = 2..max_n."""
    deltas = [float(d) for d in deltas]
    if len(deltas) < family.max_n - 1:
        raise DomainError(f"need {family.max_n - 1} deltas (n = 2..{family.max_n}), "
                          f"got {len(deltas)}")
    if any(not d >= 0 for d in deltas):
        raise DomainError("deltas must be >= 0")

    def ev(p):
        return family(p) + family_noise(deltas[len(p) - 2], seed, p)

    meta = dict(family.metadata, noise={"deltas": deltas[:family.max_n - 1], "seed": seed})
    return MeasureFamily(family.max_n, ev, meta)


def family_noise_epsilons(deltas: Sequence[float], alpha, N: int,
                          margin: float = 1e-2) -> list:
    """Triangle-inequality bounds [eps_1, ..., eps_{N-1}] for a canonical family plus noise.

    Valid on vectors whose components are all >= margin:
    eps_1 <= 2 delta_3 and eps_{n-1} <= delta_n + delta_{n-1} + (2 margin)^alpha delta_2.
    """
    a = as_alpha(alpha).value
    d = {n: float(deltas[n - 2]) for n in range(2, len(deltas) + 2)}
    if N < 2 or max(N, 3) > len(deltas) + 1:
        raise DomainError(f"need deltas for n = 2..{max(N, 3)}")
    # a hair under 2*margin covers rounding in p1 + p2
    weight = (2.0 * margin * (1.0 - 1e-9))**a
    eps = [2.0 * d[3]]
    for n in range(3, max(N, 3) + 1):
        eps.append(d[n] + d[n - 1] + weight * d[2])
    return eps[:max(N - 1, 2)]


def tabulate_family(family: MeasureFamily, alpha, max_n: int, samples_per_n: int,
                    seed: int = 0, margin: float = 1e-2, u_grid=None) -> TabulatedFamily:
    """Sample ``family`` and close the table under the maps certification reads.

    For each n-vector the (n-1)-merge and the 2-split are added; for n = 3 the
    swapped vector too; and I_2 at the bridge points used by the fitters.
    """
    a = as_alpha(alpha).value
    if max_n < 2 or max_n > family.max_n:
        raise DomainError(f"cannot tabulate n = 2..{max_n} from a family with max_n={family.max_n}")
    by_n = {n: [p.p for p in family_samples(n, samples_per_n, seed, margin)]
            for n in range(2, max_n + 1)}
    by_n[2] += [bridge_pair(float(x)) for x in fit_points(a, u_grid)]
    if max_n >= 3:
        by_n[3] += [swap_last(p) for p in by_n[3]]
    for n in range(max_n, 2, -1):
        for p in list(by_n[n]):
            by_n[n - 1].append(merge_first(p))
            by_n[2].append(split_pair(p))
        if n == 4:
            by_n[3] += [swap_last(p) for p in by_n[3]]
    entries = {}
    for vecs in by_n.values():
        for p in vecs:
            if p not in entries:
                entries[p] = family(p)
    meta = dict(family.metadata, samples_per_n=samples_per_n, seed=seed, margin=margin)
    return TabulatedFamily(a, entries, meta)


# --- brute-force oracle --------------------------------------------------

ORACLE_PRECISION = 160

_M64 = 2**64 - 1
_GOLDEN = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return z ^ (z >> 31)


def _oracle_noise(delta: float, seed: int, kind: str, key: float) -> float:
    if delta == 0.0:
        return 0.0
    if kind == COMB:
        k = math.floor(key * 1024.0)
        return delta if (k + seed) % 2 == 0 else -delta
    bits = struct.unpack("<Q", struct.pack("<d", key))[0]
    z = _mix((bits ^ (seed * _GOLDEN)) + _GOLDEN & _M64)
    return delta * (2.0 * ((z >> 11) * 2.0**-53) - 1.0)


def _oracle_f(spec, alpha, t, key: float):
    """f(t) in multiprecision; noise added as the double it is in any implementation."""
    mpf = gmpy2.mpfr
    if isinstance(spec, Perturbed):
        n = _oracle_noise(spec.delta, spec.seed % 2**64, spec.kind, key)
        return _oracle_f(spec.base, alpha, t, key) + mpf(n)
    if isinstance(spec, PowerForm):
        return mpf(spec.a) * t**alpha + mpf(spec.b) * (1 - t)**alpha - mpf(spec.b)
    if isinstance(spec, LogForm):
        return mpf(spec.lam) * gmpy2.log(1 - t) + mpf(spec.c)
    if isinstance(spec, Tabulated):
        xs = spec._oracle_xs
        j = min(max(bisect.bisect_right(xs, t) - 1, 0), len(xs) - 2)
        x0, x1 = mpf(float(spec.xs[j])), mpf(float(spec.xs[j + 1]))
        v0, v1 = mpf(float(spec.values[j])), mpf(float(spec.values[j + 1]))
        if t < x0 or t > mpf(float(spec.xs[-1])):
            raise DomainError(f"x={float(t)!r} outside the table")
        return v0 + (v1 - v0) / (x1 - x0) * (t - x0)
    if isinstance(spec, Pointwise):
        return mpf(float(spec.func(float(t))))
    raise TypeError(f"unsupported spec {type(spec).__name__}")


def _prepare(spec):
    # a plain list of mpfr knots for bisect; stashed on the frozen table
    while isinstance(spec, Perturbed):
        spec = spec.base
    if isinstance(spec, Tabulated) and not hasattr(spec, "_oracle_xs"):
        object.__setattr__(spec, "_oracle_xs", [gmpy2.mpfr(float(v)) for v in spec.xs])


@dataclass(frozen=True)
class DefectField:
    grid: DomainGrid
    values: np.ndarray

    def max_abs(self) -> tuple[float, int]:
        d = np.abs(self.values)
        i = int(np.argmax(d))
        return float(d[i]), i


def _oracle_point(spec, al, x: float, y: float) -> float:
    X, Y = gmpy2.mpfr(x), gmpy2.mpfr(y)
    fx = _oracle_f(spec, al, X, x)
    fy = _oracle_f(spec, al, Y, y)
    # the double quotient is the noise key of the composed arguments
    left = (1 - X)**al * _oracle_f(spec, al, Y / (1 - X), y / (1.0 - x))
    right = (1 - Y)**al * _oracle_f(spec, al, X / (1 - Y), x / (1.0 - y))
    return float(fx + left - fy - right)


def oracle_defect(spec: FunctionSpec, alpha, x: float, y: float) -> float:
    """One defect value, written out directly in multiprecision arithmetic."""
    _prepare(spec)
    a = as_alpha(alpha).value
    with gmpy2.context(gmpy2.get_context(), precision=ORACLE_PRECISION):
        return _oracle_point(spec, gmpy2.mpfr(a), float(x), float(y))


def oracle_defect_scan(spec: FunctionSpec, alpha, grid: DomainGrid) -> DefectField:
    """Defect at every grid point by the multiprecision transcription above."""
    if len(grid) == 0:
        raise DomainError("empty grid")
    _prepare(spec)
    a = as_alpha(alpha).value
    with gmpy2.context(gmpy2.get_context(), precision=ORACLE_PRECISION):
        al = gmpy2.mpfr(a)
        vals = [_oracle_point(spec, al, x, y) for x, y in zip(grid.x.tolist(), grid.y.tolist())]
    return DefectField(grid, np.array(vals))


def oracle_residual_bound_coefficient(alpha, grid: DomainGrid) -> float:
    """max over grid of 2 + (1-x)^alpha + (1-y)^alpha, by an explicit loop."""
    a = as_alpha(alpha).value
    best = 0.0
    for x, y in zip(grid.x.tolist(), grid.y.tolist()):
        best = max(best, 2.0 + math.pow(1.0 - x, a) + math.pow(1.0 - y, a))
    return best
