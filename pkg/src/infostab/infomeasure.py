"""Entropies of degree alpha and stability of recursive, 3-semisymmetric measure families."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence, Union

import numpy as np

from .approximant import (LOG_CONSTANT, POWER_CONSTANT, ROUNDING_ULPS, PowerParams,
                          default_u_grid, fit_log_params, fit_power_params, power_fit_points)
from .domain import (DomainError, ProbabilityVector, as_alpha, as_prob_vector,
                     simplex_sample, structured_simplex_points)
from .equation import Pointwise

PARTIAL_SUM_NOTE = ("bound uses partial sums (p1+...+pk)^alpha from the induction step, "
                    "not the printed sum of p_i^alpha")


@dataclass(frozen=True)
class PowerFamily:
    """J_n = c H^alpha_n + d (p1^alpha - 1), alpha < 0."""
    c: float
    d: float

    kind = "power"


@dataclass(frozen=True)
class LogFamily:
    """J_n = c H^0_n + lam ln p1, alpha = 0."""
    c: float
    lam: float

    kind = "log"


FamilyParams = Union[PowerFamily, LogFamily]


class MeasureFamily:
    """A sequence I_2, ..., I_max_n of functions on the open simplices.

    ``evaluator(p)`` receives a tuple of floats of any supported length.
    """

    def __init__(self, max_n: int, evaluator: Callable[[tuple], float],
                 metadata: Optional[dict] = None):
        if max_n < 2:
            raise DomainError(f"max_n must be >= 2, got {max_n}")
        self.max_n = int(max_n)
        self._evaluator = evaluator
        self.metadata = dict(metadata or {})

    def supports(self, n: int) -> bool:
        return 2 <= n <= self.max_n

    def __call__(self, p) -> float:
        p = tuple(float(v) for v in p)
        if not self.supports(len(p)):
            raise DomainError(f"family defined for n in 2..{self.max_n}, got n={len(p)}")
        return float(self._evaluator(p))


class TabulatedFamily(MeasureFamily):
    """Family known only at listed vectors; lookups are exact on the float tuple."""

    def __init__(self, alpha: float, entries: Mapping[tuple, float], metadata=None):
        self.alpha = float(alpha)
        self.table = {tuple(float(v) for v in p): float(val) for p, val in entries.items()}
        ns = {len(p) for p in self.table}
        if not ns or min(ns) < 2:
            raise DomainError("family table needs entries with n >= 2")
        super().__init__(max(ns), self._lookup, metadata)

    def _lookup(self, p):
        try:
            return self.table[p]
        except KeyError:
            raise DomainError(f"family table has no entry for n={len(p)}, p={list(p)}") from None

    def vectors(self, n: int) -> list[ProbabilityVector]:
        return [ProbabilityVector(p) for p in self.table if len(p) == n]


def _norm(alpha: float) -> float:
    return 1.0 / (2.0**(1.0 - alpha) - 1.0)


def entropy_degree_alpha(p, alpha) -> float:
    """(2^(1-alpha) - 1)^-1 (sum p_i^alpha - 1)."""
    a = as_alpha(alpha).value
    q = as_prob_vector(p).as_array()
    if a == 0.0:
        # p^0 = 1 exactly; keep H^0_n = n - 1 free of rounding
        return float(len(q) - 1)
    return _norm(a) * (float(np.sum(q**a)) - 1.0)


def _check_variant(params, a: float):
    if a < 0 and not isinstance(params, PowerFamily):
        raise DomainError("alpha < 0 needs PowerFamily params")
    if a == 0 and not isinstance(params, LogFamily):
        raise DomainError("alpha = 0 needs LogFamily params")


def canonical_family_eval(params: FamilyParams, alpha, p) -> float:
    a = as_alpha(alpha).value
    _check_variant(params, a)
    q = as_prob_vector(p)
    return _canonical(params, a, q.p)


def _canonical(params, a: float, p: tuple) -> float:
    h = float(len(p) - 1) if a == 0.0 else _norm(a) * (math.fsum(v**a for v in p) - 1.0)
    if a == 0.0:
        return params.c * h + params.lam * math.log(p[0])
    return params.c * h + params.d * (p[0]**a - 1.0)


def merge_first(p: Sequence[float]) -> tuple:
    """(p1+p2, p3, ..., pn)."""
    return (p[0] + p[1],) + tuple(p[2:])


def split_pair(p: Sequence[float]) -> tuple:
    """(p1/(p1+p2), p2/(p1+p2))."""
    s = p[0] + p[1]
    return (p[0] / s, p[1] / s)


def swap_last(p: Sequence[float]) -> tuple:
    """(p1, p3, p2) for n = 3."""
    return (p[0], p[2], p[1])


def bridge_pair(x: float) -> tuple:
    """The argument (1-x, x) of I_2 for f(x) = I_2(1-x, x)."""
    return (1.0 - x, x)


def recursivity_terms(family: MeasureFamily, alpha, p) -> float:
    """Signed residual I_n(p) - I_{n-1}(merge) - (p1+p2)^alpha I_2(split) at one vector."""
    a = as_alpha(alpha).value
    p = tuple(p)
    return (family(p) - family(merge_first(p))) - (p[0] + p[1])**a * family(split_pair(p))


def recursivity_residual(family: MeasureFamily, alpha, n: int,
                         samples: Sequence) -> float:
    """Max |recursivity residual| over samples; this is eps_{n-1}."""
    if n < 3 or not (family.supports(n) and family.supports(n - 1)):
        raise DomainError(f"recursivity at n={n} needs I_n and I_(n-1); family max_n={family.max_n}")
    worst = 0.0
    for p in samples:
        p = as_prob_vector(p)
        if len(p) != n:
            raise DomainError(f"sample of length {len(p)} given for n={n}")
        worst = max(worst, abs(recursivity_terms(family, alpha, p.p)))
    return worst


def semisymmetry_residual(family: MeasureFamily, samples: Sequence) -> float:
    """Max |I_3(p1,p2,p3) - I_3(p1,p3,p2)| over samples; this is eps_1."""
    if not family.supports(3):
        raise DomainError("semisymmetry needs I_3")
    worst = 0.0
    for p in samples:
        p = as_prob_vector(p)
        if len(p) != 3:
            raise DomainError("semisymmetry samples must have length 3")
        worst = max(worst, abs(family(p.p) - family(swap_last(p.p))))
    return worst


def family_bound(alpha, n: int, p, eps: Sequence[float]) -> float:
    """Deviation bound for |I_n - J_n| at p.

    ``eps`` is ``[eps_1, ..., eps_{n-1}]``, and always carries eps_2 (so it has
    two entries when n = 2): the base case depends on 2*eps_2 + eps_1.
    """
    a = as_alpha(alpha).value
    p = tuple(as_prob_vector(p).p)
    if len(p) != n:
        raise DomainError(f"p has length {len(p)} but n={n}")
    eps = [float(e) for e in eps]
    need = max(n - 1, 2)
    if len(eps) != need:
        raise DomainError(f"need {need} epsilons (eps_1..eps_{need}) for n={n}, got {len(eps)}")
    if any(not e >= 0 for e in eps):
        raise DomainError("epsilons must be >= 0")
    e1, e2 = eps[0], eps[1]
    base = 2.0 * e2 + e1
    tail = math.fsum(eps[1:n - 1])  # eps_2 .. eps_{n-1}; empty when n = 2
    if a == 0.0:
        return tail + LOG_CONSTANT * (n - 1) * base
    partial = np.cumsum(p)
    weights = math.fsum(float(partial[k - 1])**a for k in range(2, n))
    return tail + POWER_CONSTANT * base * (1.0 + weights)


def bridge_function(family: MeasureFamily) -> Pointwise:
    """f(x) = I_2(1-x, x) as a candidate solution of the two-variable equation."""
    return Pointwise(lambda x: family(bridge_pair(x)), label="I2(1-x, x)")


def family_from_approximant(params, alpha) -> FamilyParams:
    a = as_alpha(alpha).value
    if isinstance(params, PowerParams):
        return PowerFamily((2.0**(1.0 - a) - 1.0) * params.a, params.b - params.a)
    return LogFamily(params.c, params.lam)


def fit_family_params(family: MeasureFamily, alpha, u_grid=None) -> FamilyParams:
    al = as_alpha(alpha)
    if not family.supports(2):
        raise DomainError("family must define I_2")
    f = bridge_function(family)
    if al.is_zero:
        return family_from_approximant(fit_log_params(f, u_grid), al)
    return family_from_approximant(fit_power_params(f, al), al)


@dataclass
class Deviation:
    n: int
    p: tuple
    deviation: float
    bound: float
    allowance: float = 0.0    # float rounding in I_n and J_n at p

    @property
    def passed(self) -> bool:
        return bool(self.deviation <= self.bound + self.allowance)


@dataclass
class FamilyCertificate:
    alpha: float
    max_n: int
    epsilons: list            # [eps_1, ..., eps_{N-1}]
    epsilon_provenance: str
    params: FamilyParams
    deviations: list          # Deviation records
    satisfied: bool
    status: str
    notes: list = field(default_factory=list)

    @property
    def violations(self) -> list:
        return [d for d in self.deviations if not d.passed]

    def per_n(self) -> dict:
        out = {}
        for d in self.deviations:
            row = out.setdefault(d.n, {"max_deviation": 0.0, "min_slack": math.inf,
                                       "samples": 0, "violations": 0})
            row["max_deviation"] = max(row["max_deviation"], d.deviation)
            row["min_slack"] = min(row["min_slack"], d.bound - d.deviation)
            row["samples"] += 1
            row["violations"] += int(not d.passed)
        return out


def family_samples(n: int, count: int, seed: int, margin: float = 1e-2) -> list:
    """Seeded samples plus structured near-uniform and near-boundary vectors."""
    return structured_simplex_points(n, margin) + simplex_sample(n, count, seed + n, margin)


def fit_points(alpha, u_grid=None) -> np.ndarray:
    """The x at which fitting reads f(x) = I_2(1-x, x), computed as the fitters do."""
    a = as_alpha(alpha).value
    if a == 0.0:
        u = default_u_grid() if u_grid is None else np.asarray(u_grid, dtype=float)
        u = u[u != 1.0]
        s = 1.0 + u
        return np.concatenate([1.0 / s, u / s, [0.5]])
    return power_fit_points()[0]


def certify_family(family: MeasureFamily, alpha, N: int, samples_per_n: int = 50,
                   seed: int = 0, *, margin: float = 1e-2,
                   epsilons: Optional[Sequence[float]] = None,
                   samples: Optional[Mapping[int, Sequence]] = None,
                   u_grid=None, epsilon_provenance: str = "supplied") -> FamilyCertificate:
    """Measure the residuals, fit the family parameters from I_2, check every sample.

    ``epsilons`` (eps_1..eps_{N-1}, at least eps_1, eps_2) replaces the sampled
    residuals, e.g. by analytic noise bounds. ``samples`` maps n to the vectors
    used for that n; tabulated families default to their own table.
    ``epsilon_provenance`` labels supplied epsilons, e.g. "derived-from-noise-bound".
    """
    from .approximant import INCONCLUSIVE, SATISFIED, VIOLATED

    al = as_alpha(alpha)
    a = al.value
    n_eps = max(N - 1, 2)
    top = N if epsilons is not None else max(N, 3)
    if N < 2 or not all(family.supports(n) for n in range(2, top + 1)):
        raise DomainError(f"family does not support n = 2..{top} (max_n={family.max_n})")

    def vectors(n):
        if samples is not None and n in samples:
            return [as_prob_vector(p) for p in samples[n]]
        if isinstance(family, TabulatedFamily):
            return family.vectors(n)
        return family_samples(n, samples_per_n, seed, margin)

    pts = {n: vectors(n) for n in range(2, top + 1)}
    if epsilons is not None:
        eps = [float(e) for e in epsilons]
        if len(eps) < n_eps:
            raise DomainError(f"need eps_1..eps_{n_eps}, got {len(eps)} values")
        provenance = epsilon_provenance
    else:
        eps = [semisymmetry_residual(family, pts[3])]
        eps += [recursivity_residual(family, a, n, pts[n]) for n in range(3, top + 1)]
        provenance = "estimated-on-samples"
    eps = eps[:n_eps]
    params = fit_family_params(family, al, u_grid)

    devs = []
    for n in range(2, N + 1):
        e = eps[:max(n - 1, 2)]
        for p in pts[n]:
            val = family(p.p)
            dev = abs(val - _canonical(params, a, p.p))
            slack = ROUNDING_ULPS * 2.0**-52 * max(1.0, abs(val))
            devs.append(Deviation(n, p.p, dev, family_bound(a, n, p, e), slack))
    satisfied = all(d.passed for d in devs)
    if satisfied:
        status = SATISFIED
    else:
        # sampled residuals may undershoot the sup over the simplex
        status = INCONCLUSIVE if provenance == "estimated-on-samples" else VIOLATED
    if al.is_zero:
        notes = ["logarithmic part restricted to the measurable family lam*ln(p1)"]
    else:
        notes = [PARTIAL_SUM_NOTE]
    return FamilyCertificate(a, N, eps, provenance, params, devs, satisfied, status, notes)
