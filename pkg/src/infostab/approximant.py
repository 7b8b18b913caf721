"""Construction of the exact solution close to an approximate one, and its certificate.

For alpha < 0 the solution is ``a x^alpha + b (1-x)^alpha - b`` with

    c = g(2) / (2^alpha - 1),   a = f0(1/2) / (2^(1-alpha) - 1),   b = a + c,

where ``g(u) = F(u, 1) - F(1, u)`` and ``f0(x) = f(x) - c((1-x)^alpha - 1)``.
For alpha = 0 it is ``lam ln(1-x) + c`` with ``lam`` a minimax fit of
``g(u) ~ lam ln u`` and ``c = f(1/2) - lam ln(1/2)``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import gmpy2
import numpy as np

from . import _kernels_py as dd
from . import kernels
from .domain import DomainError, DomainGrid, as_alpha
from .equation import (ESTIMATED, NOISE_BOUND, FunctionSpec, LogForm, PowerForm,
                       ResidualEstimate, _plan, eval_array, eval_dd, eval_f,
                       transform_g_array)

#: constants of the stability theorem as stated (before sharpening in alpha)
POWER_CONSTANT = 15.0
LOG_CONSTANT = 63.0
#: |l| <= 127 eps for the logarithmic part on the closed domain
RIGIDITY_CONSTANT = 127.0
#: slack for float rounding, in units of 2^-52 times the size of f on the grid
ROUNDING_ULPS = 1024

SATISFIED = "satisfied"
INCONCLUSIVE = "inconclusive"
VIOLATED = "violated"

LOG_FAMILY_NOTE = "logarithmic part restricted to the measurable family lam*ln(u)"


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class PowerParams:
    a: float
    b: float
    c: Optional[float] = None

    def __post_init__(self):
        c = self.b - self.a
        if self.c is None:
            object.__setattr__(self, "c", c)
        elif abs(self.c - c) > 1e-12 * max(1.0, abs(self.a), abs(self.b)):
            raise DomainError(f"inconsistent power params: c={self.c!r} but b-a={c!r}")

    kind = "power"


@dataclass(frozen=True)
class LogParams:
    lam: float
    c: float

    kind = "log"


ApproximantParams = Union[PowerParams, LogParams]


def bound_constant(alpha) -> float:
    """Per-alpha stability constant; 63 at alpha = 0.

    For alpha < 0 this is (8 + 6*2^alpha + 2^-alpha) / (2^(1-alpha) - 1), which
    increases to 15 as alpha -> 0-.
    """
    a = as_alpha(alpha).value
    if a == 0.0:
        return LOG_CONSTANT
    t = 2.0**a
    return (8.0 + 6.0 * t + 1.0 / t) / (2.0 / t - 1.0)


def theorem_constant(alpha) -> float:
    return LOG_CONSTANT if as_alpha(alpha).is_zero else POWER_CONSTANT


def _dd_const(v: float):
    return np.array([float(v)]), np.zeros(1)


def power_fit_points():
    """The points 1/3, 2/3, 1/2 read by fit_power_params, as a double-double pair."""
    one = _dd_const(1.0)
    third = dd.div(one, _dd_const(3.0))
    rest = dd.sub(one, third)
    return (np.concatenate([third[0], rest[0], [0.5]]),
            np.concatenate([third[1], rest[1], [0.0]]))


def fit_power_params(spec: FunctionSpec, alpha) -> PowerParams:
    """Closed-form construction, carried out in double-double.

    The three values f(1/3), f(2/3), f(1/2) are taken at double-double points,
    so an exact power-form spec with double coefficients is recovered exactly.
    """
    al = as_alpha(alpha)
    if al.is_zero:
        raise FitError("alpha = 0 has no power-form solution; use fit_log_params")
    a_ = al.value
    one = _dd_const(1.0)
    fv = eval_dd(spec, al, power_fit_points())
    f13, f23, fh = ((fv[0][i:i + 1], fv[1][i:i + 1]) for i in range(3))
    g2 = dd.mul(dd.dd_pow(_dd_const(3.0), a_), dd.sub(f13, f23))
    p2 = dd.dd_pow(_dd_const(2.0), a_)
    c = dd.div(g2, dd.add_d(p2, -1.0))
    f0_half = dd.sub(fh, dd.mul(c, dd.add_d(dd.div(one, p2), -1.0)))
    a = dd.div(f0_half, dd.add_d(dd.div(_dd_const(2.0), p2), -1.0))
    b = dd.add(a, c)
    return PowerParams(float(a[0][0] + a[1][0]), float(b[0][0] + b[1][0]),
                       float(c[0][0] + c[1][0]))


def default_u_grid(margin: float = 1e-3, count: int = 129) -> np.ndarray:
    """Log-spaced u with both 1/(1+u) and u/(1+u) inside [margin, 1-margin].

    Always contains u = 2 and u = 1/2; never contains u = 1.
    """
    if not 0 < margin < 0.5:
        raise DomainError(f"margin out of range: {margin!r}")
    # nudged inwards so rounding in u/(1+u) cannot land below margin
    lo = margin / (1.0 - margin) * (1.0 + 1e-9)
    u = np.geomspace(lo, 1.0 / lo, count)
    u = np.union1d(u, [0.5, 2.0])
    return u[np.abs(np.log(u)) > 1e-12]


def _minimax_slope(g: np.ndarray, ell: np.ndarray) -> float:
    """argmin over lam of max_i |g_i - lam * ell_i| (golden-section on a convex function)."""
    scale = float(np.max(np.abs(ell)))
    if scale == 0.0:
        raise FitError("u grid has no point with ln u != 0")
    phi = lambda lam: float(np.max(np.abs(g - lam * ell)))  # noqa: E731
    lam_ls = float(np.dot(g, ell) / np.dot(ell, ell))
    r = phi(lam_ls)
    k = int(np.argmax(np.abs(ell)))
    # any minimiser keeps |g_k - lam ell_k| <= r
    centre = g[k] / ell[k]
    lo, hi = centre - r / scale, centre + r / scale
    if r == 0.0:
        return lam_ls
    inv = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - inv * (hi - lo)
    x2 = lo + inv * (hi - lo)
    f1, f2 = phi(x1), phi(x2)
    for _ in range(200):
        if hi - lo <= 4e-16 * max(1.0, abs(lo), abs(hi)):
            break
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - inv * (hi - lo)
            f1 = phi(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + inv * (hi - lo)
            f2 = phi(x2)
    best = min((lam_ls, r), (x1, f1), (x2, f2), key=lambda t: t[1])
    return best[0]


def fit_log_params(spec: FunctionSpec, u_grid: Sequence[float] | None = None) -> LogParams:
    u = default_u_grid() if u_grid is None else np.asarray(u_grid, dtype=float)
    if u.size == 0:
        raise FitError("empty u grid")
    if np.any(u <= 0):
        raise FitError("u grid must be positive")
    u = u[u != 1.0]
    if u.size == 0:
        raise FitError("u grid contains only u = 1")
    g = transform_g_array(spec, 0.0, u)
    lam = _minimax_slope(g, np.log(u))
    c = eval_f(spec, 0.0, 0.5) - lam * math.log(0.5)
    return LogParams(lam, c)


def fit_params(spec: FunctionSpec, alpha, u_grid=None) -> ApproximantParams:
    al = as_alpha(alpha)
    if al.is_zero:
        return fit_log_params(spec, u_grid)
    return fit_power_params(spec, al)


def eval_approximant_array(params: ApproximantParams, alpha, xs) -> np.ndarray:
    """Evaluated with the same kernel as exact specs, so exact params reproduce them bit for bit."""
    a = as_alpha(alpha).value
    xs = np.ascontiguousarray(xs, dtype=float)
    if np.any((xs <= 0) | (xs >= 1)):
        raise DomainError("approximant is evaluated on ]0,1[ only; use extend_boundary")
    if isinstance(params, PowerParams):
        if a == 0.0:
            raise DomainError("power params need alpha < 0")
        spec = PowerForm(params.a, params.b)
    else:
        if a != 0.0:
            raise DomainError("log params need alpha = 0")
        spec = LogForm(params.lam, params.c)
    return kernels.eval_f(*_plan(spec, a), xs)


def eval_approximant(params: ApproximantParams, alpha, x: float) -> float:
    return float(eval_approximant_array(params, alpha, np.array([float(x)]))[0])


def noise_residual_bound(delta: float, alpha, grid: DomainGrid) -> ResidualEstimate:
    """delta * max over grid of (2 + (1-x)^alpha + (1-y)^alpha).

    Upper-bounds the grid residual of ``exact + noise`` with ``|noise| <= delta``.
    """
    if not delta >= 0:
        raise DomainError(f"delta must be >= 0, got {delta!r}")
    a = as_alpha(alpha).value
    coeff = 2.0 + (1.0 - grid.x)**a + (1.0 - grid.y)**a
    i = int(np.argmax(coeff))
    return ResidualEstimate(float(delta) * float(coeff[i]), NOISE_BOUND,
                            (float(grid.x[i]), float(grid.y[i])), grid)


# --- closed domain -------------------------------------------------------

@dataclass(frozen=True)
class H1:
    """0 at x=0, a-b at x=1, a x^alpha + b (1-x)^alpha - b inside."""
    a: float
    b: float

    kind = "h1"

    def __call__(self, x: float, alpha: float) -> float:
        if x == 0.0:
            return 0.0
        if x == 1.0:
            return self.a - self.b
        return self.a * x**alpha + self.b * (1.0 - x)**alpha - self.b


@dataclass(frozen=True)
class H2:
    """f(0) at x=0, f(1) at x=1, constant c inside."""
    a_end0: float
    b_end1: float
    c_mid: float

    kind = "h2"

    def __call__(self, x: float, alpha: float = 0.0) -> float:
        if x == 0.0:
            return self.a_end0
        if x == 1.0:
            return self.b_end1
        return self.c_mid


BoundaryExtension = Union[H1, H2]


def closed_defect(h, alpha, x: float, y: float) -> float:
    """Defect of a function on [0,1] at a point of the closed triangle.

    The closed triangle is x, y in [0,1[ with x + y <= 1. Evaluated in
    multiprecision with enough bits to absorb the powers m^alpha, m the
    smallest positive one of x, y, 1-x-y.
    """
    x, y = float(x), float(y)
    al = as_alpha(alpha).value
    with gmpy2.context(gmpy2.get_context(), precision=160):
        gaps = [g for g in (gmpy2.mpfr(x), gmpy2.mpfr(y), 1 - gmpy2.mpfr(x) - gmpy2.mpfr(y))
                if g > 0]
        lost = -al * max(0.0, -float(gmpy2.log2(min(gaps)))) if gaps else 0.0
    with gmpy2.context(gmpy2.get_context(), precision=160 + 2 * math.ceil(lost)):
        a = gmpy2.mpfr(al)
        X, Y = gmpy2.mpfr(x), gmpy2.mpfr(y)
        s = Fraction(x) + Fraction(y)
        on_edge = s == 1
        if not (0.0 <= x < 1.0 and 0.0 <= y < 1.0 and s <= 1):
            raise DomainError(f"({x!r}, {y!r}) is not in the closed triangle")
        u = gmpy2.mpfr(1) if on_edge else Y / (1 - X)
        v = gmpy2.mpfr(1) if on_edge else X / (1 - Y)
        left = (1 - X)**a * h(u, a)
        right = (1 - Y)**a * h(v, a)
        return float((h(X, a) - h(Y, a)) + (left - right))


@dataclass
class BoundaryReport:
    extension: BoundaryExtension
    f0: Optional[float]
    f1: Optional[float]
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks.values())


def _check(value: float, bound: float, allowance: float = 0.0) -> dict:
    return {"value": float(value), "bound": float(bound),
            "passed": bool(value <= bound + allowance)}


def extend_boundary(params: ApproximantParams, alpha, f0_value=None, f1_value=None,
                    epsilon: float = 0.0, allowance: float = 0.0) -> BoundaryReport:
    """h1 (alpha < 0) or h2 (alpha = 0) plus the endpoint checks on f(0), f(1).

    ``allowance`` absorbs float rounding in the fitted parameters.
    """
    a_ = as_alpha(alpha).value
    if a_ < 0:
        if not isinstance(params, PowerParams):
            raise DomainError("alpha < 0 needs power params")
        h = H1(params.a, params.b)
        report = BoundaryReport(h, f0_value, f1_value)
        if f0_value is not None:
            report.checks["f0"] = _check(abs(f0_value), POWER_CONSTANT * epsilon, allowance)
        if f1_value is not None:
            report.checks["f1"] = _check(abs(f1_value - (params.a - params.b)),
                                         POWER_CONSTANT * epsilon, allowance)
        return report
    if not isinstance(params, LogParams):
        raise DomainError("alpha = 0 needs log params")
    if f0_value is None or f1_value is None:
        raise DomainError("closed-domain mode at alpha = 0 needs both f(0) and f(1)")
    return BoundaryReport(H2(float(f0_value), float(f1_value), params.c), f0_value, f1_value)


# --- certificate ---------------------------------------------------------

@dataclass
class StabilityCertificate:
    alpha: float
    epsilon: ResidualEstimate
    params: ApproximantParams
    sup_deviation: float
    deviation_argmax: float
    bound_constant: float
    bound_value: float
    satisfied: bool
    status: str
    theorem_constant: float
    rounding_allowance: float = 0.0
    boundary: Optional[BoundaryReport] = None
    notes: list = field(default_factory=list)


def _status(satisfied: bool, eps: ResidualEstimate) -> str:
    if satisfied:
        return SATISFIED
    # a grid estimate may undershoot the true sup, so a miss proves nothing;
    # a supplied or noise-derived eps is a claimed bound, and the miss refutes it
    return INCONCLUSIVE if eps.provenance == ESTIMATED else VIOLATED


def certify(spec: FunctionSpec, alpha, grid: DomainGrid, epsilon: ResidualEstimate, *,
            closed_domain: bool = False, f0_value=None, f1_value=None,
            u_grid=None) -> StabilityCertificate:
    """Fit the exact solution to ``spec`` and compare the deviation with K(alpha)*eps."""
    al = as_alpha(alpha)
    if len(grid) == 0:
        raise DomainError("empty grid")
    if not closed_domain and (f0_value is not None or f1_value is not None):
        raise DomainError("endpoint values are only accepted in closed-domain mode")
    if u_grid is None:
        u_grid = default_u_grid(grid.margin)
    params = fit_params(spec, al, u_grid)
    xs = grid.coordinates()
    fx = eval_array(spec, al, xs)
    dev = np.abs(fx - eval_approximant_array(params, al, xs))
    i = int(np.argmax(dev))
    sup_dev = float(dev[i])
    eps = epsilon.value
    K = bound_constant(al)
    bound = K * eps
    # the fit itself rounds, so an exact solution with eps = 0 still deviates by a few ulps
    allowance = ROUNDING_ULPS * 2.0**-52 * max(1.0, float(np.max(np.abs(fx))))
    satisfied = bool(sup_dev <= bound + allowance)
    notes = []
    if al.is_zero:
        notes.append(LOG_FAMILY_NOTE)
    if epsilon.provenance == ESTIMATED:
        notes.append("epsilon estimated on a grid; it may underestimate the true supremum")

    boundary = None
    if closed_domain:
        boundary = extend_boundary(params, al, f0_value, f1_value, eps, allowance)
        if al.is_zero:
            # only the zero logarithm is bounded, so the fitted slope must be tiny
            ln_max = float(np.max(np.abs(np.log(np.asarray(u_grid, dtype=float)))))
            boundary.checks["rigidity"] = _check(abs(params.lam),
                                                 RIGIDITY_CONSTANT * eps / ln_max, allowance)
            inner = float(np.max(np.abs(fx - params.c)))
            boundary.checks["interior"] = _check(inner, LOG_CONSTANT * eps, allowance)
        satisfied = satisfied and boundary.passed
    return StabilityCertificate(
        alpha=al.value, epsilon=epsilon, params=params, sup_deviation=sup_dev,
        deviation_argmax=float(xs[i]), bound_constant=K, bound_value=bound,
        satisfied=satisfied, status=_status(satisfied, epsilon),
        theorem_constant=theorem_constant(al), rounding_allowance=allowance,
        boundary=boundary, notes=notes)
