"""Candidate functions, the equation defect, and the auxiliary transforms F, g, G."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import _kernels_py as dd
from . import kernels
from .domain import DomainError, DomainGrid, as_alpha

UNIFORM = "uniform"
COMB = "deterministic-comb"
NOISE_KINDS = {UNIFORM: 0, COMB: 1}

ESTIMATED = "estimated-on-grid"
SUPPLIED = "supplied"
NOISE_BOUND = "derived-from-noise-bound"
PROVENANCES = (ESTIMATED, SUPPLIED, NOISE_BOUND)


class EvaluationError(ValueError):
    """f could not be evaluated at a requested point."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


@dataclass(frozen=True)
class PowerForm:
    """f(x) = a x^alpha + b (1-x)^alpha - b."""
    a: float
    b: float


@dataclass(frozen=True)
class LogForm:
    """f(x) = lam ln(1-x) + c."""
    lam: float
    c: float


@dataclass(frozen=True, eq=False)
class Tabulated:
    """Samples on ]0,1[ with linear interpolation between them."""
    xs: np.ndarray = field(compare=False)
    values: np.ndarray = field(compare=False)

    def __post_init__(self):
        xs = np.array(self.xs, dtype=float)
        vals = np.array(self.values, dtype=float)
        if xs.ndim != 1 or xs.shape != vals.shape or len(xs) < 2:
            raise DomainError("tabulated xs and values must be 1-d, equal length, >= 2 samples")
        if not np.all(np.diff(xs) > 0):
            raise DomainError("tabulated xs must be strictly increasing")
        if xs[0] <= 0.0 or xs[-1] >= 1.0:
            raise DomainError("tabulated xs must lie in ]0,1[")
        if not np.all(np.isfinite(vals)):
            raise DomainError("tabulated values must be finite")
        xs.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True)
class Perturbed:
    """base + noise(x) with |noise| <= delta, a deterministic function of (seed, x)."""
    base: "FunctionSpec"
    delta: float
    seed: int = 0
    kind: str = UNIFORM

    def __post_init__(self):
        if not self.delta >= 0:
            raise DomainError(f"noise bound must be >= 0, got {self.delta!r}")
        if self.kind not in NOISE_KINDS:
            raise DomainError(f"unknown noise kind {self.kind!r}")


@dataclass(frozen=True)
class Pointwise:
    """Arbitrary scalar callable; evaluated point by point (no compiled path)."""
    func: Callable[[float], float]
    label: str = "pointwise"


FunctionSpec = Union[PowerForm, LogForm, Tabulated, Perturbed, Pointwise]


def _plan(spec, alpha: float):
    """Flatten a spec into the argument tuple of the kernel functions, or None."""
    layers = []
    while isinstance(spec, Perturbed):
        layers.append((spec.delta, spec.seed, NOISE_KINDS[spec.kind]))
        spec = spec.base
    empty = np.empty(0)
    if isinstance(spec, PowerForm):
        head = (0, float(spec.a), float(spec.b), alpha, empty, empty)
    elif isinstance(spec, LogForm):
        head = (1, float(spec.lam), float(spec.c), alpha, empty, empty)
    elif isinstance(spec, Tabulated):
        head = (2, 0.0, 0.0, alpha, spec.xs, spec.values)
    else:
        return None
    nd = np.array([d for d, _, _ in layers], dtype=float)
    ns = np.array([s % 2**64 for _, s, _ in layers], dtype=np.uint64)
    nk = np.array([k for _, _, k in layers], dtype=np.int_)
    return head + (nd, ns, nk)


def _check_range(spec, x: np.ndarray):
    """Raise with the first offending point if x leaves the domain of spec."""
    bad = ~((x > 0.0) & (x < 1.0))
    if np.any(bad):
        pt = float(x[np.flatnonzero(bad)[0]])
        raise EvaluationError(f"x={pt!r} outside ]0,1[", pt)
    while isinstance(spec, Perturbed):
        spec = spec.base
    if isinstance(spec, Tabulated):
        bad = (x < spec.xs[0]) | (x > spec.xs[-1])
        if np.any(bad):
            pt = float(x[np.flatnonzero(bad)[0]])
            raise EvaluationError(
                f"x={pt!r} outside tabulated range [{spec.xs[0]!r}, {spec.xs[-1]!r}]", pt)


def eval_array(spec: FunctionSpec, alpha, xs) -> np.ndarray:
    """Vectorised eval_f."""
    a = as_alpha(alpha).value
    xs = np.ascontiguousarray(xs, dtype=float)
    _check_range(spec, xs)
    plan = _plan(spec, a)
    if plan is not None:
        return kernels.eval_f(*plan, xs)
    return np.array([_eval_scalar(spec, a, float(x)) for x in xs])


def _eval_scalar(spec, a: float, x: float) -> float:
    if isinstance(spec, Perturbed):
        n = kernels.noise(spec.delta, spec.seed % 2**64, NOISE_KINDS[spec.kind], np.array([x]))
        return _eval_scalar(spec.base, a, x) + float(n[0])
    if isinstance(spec, Pointwise):
        return float(spec.func(x))
    plan = _plan(spec, a)
    return float(kernels.eval_f(*plan, np.array([x]))[0])


def eval_dd(spec: FunctionSpec, alpha, x):
    """f at double-double points ``x = (hi, lo)``, returned as a double-double pair.

    Used where a few values are needed to more than double precision. Noise is
    keyed on ``hi``; specs without a kernel plan come back with ``lo = 0``.
    """
    a = as_alpha(alpha).value
    hi = np.ascontiguousarray(x[0], dtype=float)
    lo = np.ascontiguousarray(x[1], dtype=float)
    _check_range(spec, hi)
    plan = _plan(spec, a)
    if plan is None:
        return eval_array(spec, a, hi), np.zeros_like(hi)
    cx = dd.sub((np.ones_like(hi), np.zeros_like(hi)), (hi, lo))
    return dd._f(*plan, (hi, lo), cx, hi)


def eval_f(spec: FunctionSpec, alpha, x: float) -> float:
    return float(eval_array(spec, alpha, np.array([float(x)]))[0])


def _check_interior(x: float, y: float):
    if not (x > 0 and y > 0 and x + y < 1):
        raise DomainError(f"({x!r}, {y!r}) is not in the open triangle")


def defect(spec: FunctionSpec, alpha, x: float, y: float) -> float:
    """f(x) + (1-x)^a f(y/(1-x)) - f(y) - (1-y)^a f(x/(1-y))."""
    x, y = float(x), float(y)
    _check_interior(x, y)
    return float(defect_array(spec, alpha, np.array([x]), np.array([y]))[0])


def defect_array(spec: FunctionSpec, alpha, gx, gy) -> np.ndarray:
    a = as_alpha(alpha).value
    gx = np.ascontiguousarray(gx, dtype=float)
    gy = np.ascontiguousarray(gy, dtype=float)
    plan = _plan(spec, a)
    # composed arguments lie in ]0,1[ whenever (x, y) is interior
    _check_range(spec, np.concatenate([gx, gy, gy / (1.0 - gx), gx / (1.0 - gy)]))
    if plan is not None:
        return kernels.defect_field(*plan, gx, gy)
    fx = eval_array(spec, a, gx)
    fy = eval_array(spec, a, gy)
    left = (1.0 - gx)**a * eval_array(spec, a, gy / (1.0 - gx))
    right = (1.0 - gy)**a * eval_array(spec, a, gx / (1.0 - gy))
    return (fx - fy) + (left - right)


@dataclass(frozen=True)
class ResidualEstimate:
    """A value for epsilon together with where it came from."""
    value: float
    provenance: str
    argmax: tuple[float, float] | None = None
    grid: DomainGrid | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.value >= 0:
            raise DomainError(f"residual must be >= 0, got {self.value!r}")
        if self.provenance not in PROVENANCES:
            raise DomainError(f"unknown provenance {self.provenance!r}")


def supplied_epsilon(value: float) -> ResidualEstimate:
    return ResidualEstimate(float(value), SUPPLIED)


def residual_sup(spec: FunctionSpec, alpha, grid: DomainGrid) -> ResidualEstimate:
    """Grid maximum of |defect|; a lower bound for the sup over the open triangle."""
    if len(grid) == 0:
        raise DomainError("empty grid")
    a = as_alpha(alpha).value
    plan = _plan(spec, a)
    if plan is not None:
        _check_range(spec, np.concatenate(
            [grid.x, grid.y, grid.y / (1.0 - grid.x), grid.x / (1.0 - grid.y)]))
        value, i = kernels.max_abs_defect(*plan, grid.x, grid.y)
    else:
        d = np.abs(defect_array(spec, a, grid.x, grid.y))
        i = int(np.argmax(d)) if not np.any(np.isnan(d)) else int(np.flatnonzero(np.isnan(d))[0])
        value = float(d[i])
    pt = (float(grid.x[i]), float(grid.y[i]))
    if not math.isfinite(value):
        raise EvaluationError(f"defect is not finite at {pt}", pt)
    return ResidualEstimate(float(value), ESTIMATED, pt, grid)


def _positive(*args):
    for v in args:
        if not v > 0:
            raise DomainError(f"arguments must be > 0, got {args}")


def transform_F(spec: FunctionSpec, alpha, u: float, v: float) -> float:
    """(u+v)^a f(v/(u+v)); homogeneous of degree alpha."""
    _positive(u, v)
    a = as_alpha(alpha).value
    s = u + v
    return s**a * eval_f(spec, a, v / s)


def transform_g(spec: FunctionSpec, alpha, u: float) -> float:
    """F(u, 1) - F(1, u)."""
    _positive(u)
    a = as_alpha(alpha).value
    s = 1.0 + u
    fx = eval_array(spec, a, np.array([1.0 / s, u / s]))
    return s**a * (fx[0] - fx[1])


def transform_g_array(spec: FunctionSpec, alpha, us) -> np.ndarray:
    us = np.asarray(us, dtype=float)
    _positive(*us)
    a = as_alpha(alpha).value
    s = 1.0 + us
    return s**a * (eval_array(spec, a, 1.0 / s) - eval_array(spec, a, us / s))


def transform_G(spec: FunctionSpec, alpha, u: float, v: float) -> float:
    """F(u, v) + g(v)."""
    _positive(u, v)
    return transform_F(spec, alpha, u, v) + transform_g(spec, alpha, v)


def cocycle_defect(spec: FunctionSpec, alpha, u: float, v: float, w: float) -> float:
    """F(u+v, w) + F(u, v) - F(u+w, v) - F(u, w)."""
    _positive(u, v, w)
    F = lambda p, q: transform_F(spec, alpha, p, q)  # noqa: E731
    return (F(u + v, w) + F(u, v)) - (F(u + w, v) + F(u, w))
