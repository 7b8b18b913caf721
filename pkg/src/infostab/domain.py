"""Domains of the equation: the open triangle, the open simplex, and grids over them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

DEFAULT_MARGIN = 1e-3
DEFAULT_RESOLUTION = 200
PROB_SUM_TOL = 1e-12


class DomainError(ValueError):
    """Raised for arguments outside the admissible domain."""


@dataclass(frozen=True)
class Alpha:
    """Nonpositive exponent of the parametric equation."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if not np.isfinite(v) or v > 0:
            raise DomainError(f"alpha must be <= 0, got {self.value!r}")
        object.__setattr__(self, "value", v)

    def __float__(self):
        return self.value

    @property
    def is_zero(self) -> bool:
        return self.value == 0.0


def as_alpha(alpha) -> Alpha:
    return alpha if isinstance(alpha, Alpha) else Alpha(alpha)


@dataclass(frozen=True)
class DomainGrid:
    """Uniform lattice over the triangle shrunk by ``margin`` on every side.

    Points satisfy ``x >= margin``, ``y >= margin`` and ``x + y <= 1 - margin``.
    """

    margin: float
    resolution: int
    x: np.ndarray = field(repr=False, compare=False)
    y: np.ndarray = field(repr=False, compare=False)

    def __len__(self):
        return len(self.x)

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.y.tolist()))

    def coordinates(self) -> np.ndarray:
        """Sorted distinct coordinate values together with their midpoints."""
        xs = np.unique(np.concatenate([self.x, self.y]))
        mids = 0.5 * (xs[1:] + xs[:-1])
        return np.unique(np.concatenate([xs, mids]))


def make_interior_grid(margin: float = DEFAULT_MARGIN,
                       resolution: int = DEFAULT_RESOLUTION) -> DomainGrid:
    if not (0.0 < margin < 0.5):
        raise DomainError(f"margin out of range ]0, 1/2[: {margin!r}")
    if int(resolution) != resolution or resolution < 2:
        raise DomainError(f"resolution must be an integer >= 2: {resolution!r}")
    m = int(resolution)
    # shrunk triangle has legs of length 1 - 3*margin
    side = 1.0 - 3.0 * margin
    if side <= 0:
        raise DomainError(f"margin out of range ]0, 1/3[ for a nonempty grid: {margin!r}")
    i, j = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
    keep = (i + j) <= m
    i, j = i[keep], j[keep]
    x = margin + side * (i / m)
    y = margin + side * (j / m)
    upper = 1.0 - margin
    over = x + y > upper
    while np.any(over):
        # pull in the larger coordinate; it sits far above the margin
        big_x = over & (x >= y)
        big_y = over & (x < y)
        x[big_x] = np.nextafter(x[big_x], 0.0)
        y[big_y] = np.nextafter(y[big_y], 0.0)
        over = x + y > upper
    x.setflags(write=False)
    y.setflags(write=False)
    return DomainGrid(float(margin), m, x, y)


@dataclass(frozen=True)
class ProbabilityVector:
    """A point of the open probability simplex."""

    p: tuple[float, ...]

    def __len__(self):
        return len(self.p)

    def __iter__(self):
        return iter(self.p)

    def __getitem__(self, k):
        return self.p[k]

    def as_array(self) -> np.ndarray:
        return np.asarray(self.p, dtype=float)


def validate_prob_vector(raw: Iterable[float]) -> ProbabilityVector:
    p = tuple(float(v) for v in raw)
    if len(p) < 2:
        raise DomainError(f"probability vector needs n >= 2 components, got {len(p)}")
    if any(not np.isfinite(v) or v <= 0.0 for v in p):
        raise DomainError(f"components must be > 0 (open simplex): {p}")
    if abs(np.sum(p) - 1.0) > PROB_SUM_TOL:
        raise DomainError(f"components sum to {np.sum(p)!r}, not 1")
    return ProbabilityVector(p)


def simplex_sample(n: int, count: int, seed: int,
                   margin: float = 1e-2) -> list[ProbabilityVector]:
    """Seeded uniform samples from the simplex with every component >= margin.

    Uses the affine map ``margin + (1 - n*margin) * q`` with ``q`` Dirichlet(1)
    so the law is uniform on the shrunk simplex. The last component absorbs the
    rounding so each vector sums to 1 within ``PROB_SUM_TOL``.
    """
    if n < 2:
        raise DomainError(f"n must be >= 2, got {n}")
    if count < 0:
        raise DomainError(f"count must be >= 0, got {count}")
    if margin < 0 or n * margin >= 1.0:
        raise DomainError(f"infeasible margin {margin!r} for n={n}")
    rng = np.random.default_rng(seed)
    q = rng.dirichlet(np.ones(n), size=count)
    scale = 1.0 - n * margin
    out = []
    for row in q:
        p = margin + scale * row
        p[-1] = 1.0 - float(np.sum(p[:-1]))
        if p[-1] < margin:
            # rounding pushed the tail under the margin; steal from the largest
            k = int(np.argmax(p[:-1]))
            p[k] -= margin - p[-1]
            p[-1] = margin
        out.append(validate_prob_vector(p))
    return out


def structured_simplex_points(n: int, margin: float) -> list[ProbabilityVector]:
    """Uniform vector plus near-boundary vectors pinned at ``margin``."""
    if n * margin >= 1.0:
        raise DomainError(f"infeasible margin {margin!r} for n={n}")
    pts = [np.full(n, 1.0 / n)]
    for k in range(n):
        # one heavy coordinate, the rest at the margin
        p = np.full(n, margin)
        p[k] = 1.0 - (n - 1) * margin
        pts.append(p)
    # first two at the margin, rest shared: drives (p1+p2)^alpha and p1^alpha up
    if n > 2:
        p = np.empty(n)
        p[:2] = margin
        p[2:] = (1.0 - 2 * margin) / (n - 2)
        pts.append(p)
    out = []
    for p in pts:
        p = p.copy()
        p[-1] = 1.0 - float(np.sum(p[:-1]))
        out.append(validate_prob_vector(p))
    return out


def as_prob_vector(p: Sequence[float] | ProbabilityVector) -> ProbabilityVector:
    return p if isinstance(p, ProbabilityVector) else validate_prob_vector(p)
