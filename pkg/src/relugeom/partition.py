"""Sector partition induced by a dual frame.

Expanding a point in the dual basis, the signs of the coefficients select
two disjoint index sets (positive and negative).  Each pair of disjoint
subsets of {1..d} names one sector; the 3^d sectors partition the domain.
The subset partial order on pairs gives closures and boundaries of
sectors without any further geometry.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb

import numpy as np

from .core import DualFrame
from .errors import DimensionMismatch, EnumerationLimit
from .tolerances import DEFAULT_REL, MAX_ENUM_DIM


def _mask_of(indices, d: int) -> int:
    mask = 0
    for i in indices:
        i = int(i)
        if not 1 <= i <= d:
            raise ValueError(f"index {i} outside 1..{d}")
        mask |= 1 << (i - 1)
    return mask


def _indices_of(mask: int) -> tuple[int, ...]:
    out = []
    i = 1
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


@dataclass(frozen=True)
class SectorIndex:
    """A pairing of disjoint 1-based index subsets identifying one sector.

    Stored as bitmasks over {1..d}; bit (i-1) stands for index i.
    """

    d: int
    plus_mask: int
    minus_mask: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("sector dimension must be at least 1")
        full = (1 << self.d) - 1
        if not 0 <= self.plus_mask <= full or not 0 <= self.minus_mask <= full:
            raise ValueError("index mask outside 1..d")
        if self.plus_mask & self.minus_mask:
            raise ValueError("plus and minus index sets must be disjoint")

    @classmethod
    def of(cls, d: int, plus=(), minus=()) -> "SectorIndex":
        return cls(d, _mask_of(plus, d), _mask_of(minus, d))

    @property
    def plus(self) -> tuple[int, ...]:
        return _indices_of(self.plus_mask)

    @property
    def minus(self) -> tuple[int, ...]:
        return _indices_of(self.minus_mask)

    @property
    def support_mask(self) -> int:
        return self.plus_mask | self.minus_mask

    def dimension(self) -> int:
        return self.support_mask.bit_count()

    def to_json(self) -> dict:
        return {"plus": list(self.plus), "minus": list(self.minus)}

    @classmethod
    def from_json(cls, d: int, obj: dict) -> "SectorIndex":
        return cls.of(d, obj.get("plus", ()), obj.get("minus", ()))

    def __repr__(self):
        return f"SectorIndex(d={self.d}, plus={set(self.plus) or '{}'}, minus={set(self.minus) or '{}'})"


@dataclass(frozen=True, eq=False)
class DualCoordinates:
    """Expansion coefficients of a point in a frame's dual basis."""

    lambdas: np.ndarray
    frame: DualFrame

    def reconstruct(self) -> np.ndarray:
        """Resum apex + sum_i lambda_i a_i*.

        For contracting frames this returns the row-span projection of the
        expanded point, since the coefficients carry no complement part.
        """
        return self.frame.apex + self.lambdas @ self.frame.duals


def expand(frame: DualFrame, x) -> DualCoordinates:
    """Expansion coefficients of ``x`` in the dual basis.

    Duality makes the row functionals the coordinate functionals: the
    coefficient vector is exactly the affine image ``A x + b``, so no
    linear solve is needed here.
    """
    return DualCoordinates(lambdas=frame.source(x), frame=frame)


def classify(frame: DualFrame, x, zero_tol: float | None = None) -> SectorIndex:
    """Sector of the point ``x``.

    Coefficients within ``zero_tol`` of zero are assigned to neither index
    set, which places the point in the closed-form lower-dimensional
    sector.  The default band is relative to the largest coefficient.
    """
    lam = expand(frame, x).lambdas
    if lam.ndim != 1:
        raise DimensionMismatch("classify expects a single point")
    if zero_tol is None:
        zero_tol = DEFAULT_REL * (1.0 + float(np.max(np.abs(lam), initial=0.0)))
    plus_mask = 0
    minus_mask = 0
    for i, value in enumerate(lam):
        if value > zero_tol:
            plus_mask |= 1 << i
        elif value < -zero_tol:
            minus_mask |= 1 << i
    return SectorIndex(frame.d_out, plus_mask, minus_mask)


def near_zero_coefficients(frame: DualFrame, x, zero_tol: float | None = None) -> tuple[int, ...]:
    """1-based indices whose expansion coefficient sits inside the zero band.

    Nonempty output means the point is numerically on a sector boundary.
    """
    lam = expand(frame, x).lambdas
    if zero_tol is None:
        zero_tol = DEFAULT_REL * (1.0 + float(np.max(np.abs(lam), initial=0.0)))
    return tuple(i + 1 for i, value in enumerate(lam) if abs(value) <= zero_tol)


def _graded_key(sector: SectorIndex):
    return (sector.dimension(), sector.plus_mask, sector.minus_mask)


def enumerate_sectors(d: int, dim_filter: int | None = None) -> list[SectorIndex]:
    """All sector pairings for index dimension ``d``.

    Without a filter the list has 3^d entries; with ``dim_filter=k`` it has
    C(d, k) * 2^k entries of dimension k.  Output order is graded
    lexicographic by (dimension, plus mask, minus mask) and is part of the
    contract.
    """
    if d < 1:
        raise ValueError("dimension must be at least 1")
    if d > MAX_ENUM_DIM:
        raise EnumerationLimit(f"refusing to enumerate 3^{d} sectors (limit d={MAX_ENUM_DIM})")
    out: list[SectorIndex] = []
    if dim_filter is not None:
        if not 0 <= dim_filter <= d:
            raise ValueError(f"dimension filter {dim_filter} outside 0..{d}")
        for support in itertools.combinations(range(1, d + 1), dim_filter):
            support_mask = _mask_of(support, d)
            sub = support_mask
            while True:
                out.append(SectorIndex(d, sub, support_mask & ~sub))
                if sub == 0:
                    break
                sub = (sub - 1) & support_mask
        out.sort(key=_graded_key)
        return out
    full = (1 << d) - 1
    for plus_mask in range(full + 1):
        rest = full & ~plus_mask
        sub = rest
        while True:
            out.append(SectorIndex(d, plus_mask, sub))
            if sub == 0:
                break
            sub = (sub - 1) & rest
    out.sort(key=_graded_key)
    return out


def sector_counts(d: int) -> dict[int, int]:
    """Number of sectors of each dimension k: C(d, k) * 2^k."""
    if d < 1:
        raise ValueError("dimension must be at least 1")
    return {k: comb(d, k) * 2**k for k in range(d + 1)}


def leq(a: SectorIndex, b: SectorIndex) -> bool:
    """Partial order: both index sets of ``a`` are contained in those of ``b``.

    Sectors below ``b`` make up the closure of ``b``'s sector.
    """
    if a.d != b.d:
        raise DimensionMismatch(f"sectors have different dimensions {a.d} and {b.d}")
    return (a.plus_mask & ~b.plus_mask) == 0 and (a.minus_mask & ~b.minus_mask) == 0


def closure_members(s: SectorIndex) -> list[SectorIndex]:
    """All sectors below ``s``, i.e. the pieces of its topological closure."""
    out = []
    plus_sub = s.plus_mask
    while True:
        minus_sub = s.minus_mask
        while True:
            out.append(SectorIndex(s.d, plus_sub, minus_sub))
            if minus_sub == 0:
                break
            minus_sub = (minus_sub - 1) & s.minus_mask
        if plus_sub == 0:
            break
        plus_sub = (plus_sub - 1) & s.plus_mask
    out.sort(key=_graded_key)
    return out


def boundary_members(s: SectorIndex) -> list[SectorIndex]:
    """Closure members strictly below ``s``."""
    return [m for m in closure_members(s) if m != s]


def sample_sector(
    frame: DualFrame,
    sector: SectorIndex,
    n: int,
    rng: np.random.Generator,
    scale: float = 1.0,
    floor: float = 0.1,
) -> np.ndarray:
    """Points in the (relative) interior of a sector.

    Coefficients are drawn bounded away from zero so the samples classify
    stably: |coefficient| >= floor * scale on the support.
    """
    if sector.d != frame.d_out:
        raise DimensionMismatch(
            f"sector indexes {sector.d} hyperplanes, frame has {frame.d_out}"
        )
    lam = np.zeros((n, frame.d_out))
    for i in sector.plus:
        lam[:, i - 1] = floor * scale + rng.exponential(scale, size=n)
    for i in sector.minus:
        lam[:, i - 1] = -(floor * scale + rng.exponential(scale, size=n))
    return frame.apex + lam @ frame.duals
