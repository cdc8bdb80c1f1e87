"""ReLU layer evaluation, cone projection, and exact preimages.

The layer T(x) = relu(A x + b) factors through the polyhedral cone with
apex at the frame's apex point: first project onto the cone by zeroing
the negative dual-expansion coefficients, then apply the affine map.
Running the factorization backwards gives closed-form preimages: the
preimage of a codomain point y is an affine base point swept by the dual
vectors of y's zero components, with nonnegative coefficients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AffineMap, DualFrame, build_dual_frame
from .errors import DimensionMismatch, EnumerationLimit
from .partition import SectorIndex, _graded_key
from .tolerances import MAX_ENUM_DIM, RCOND_MIN, ZERO_COMPONENT_TOL, scaled


@dataclass(frozen=True, eq=False)
class ReluLayer:
    """A ReLU layer together with the dual frame of its affine part."""

    affine: AffineMap
    frame: DualFrame

    def __post_init__(self):
        if self.frame.source is not self.affine and (
            self.frame.source.matrix.shape != self.affine.matrix.shape
            or not np.array_equal(self.frame.source.matrix, self.affine.matrix)
            or not np.array_equal(self.frame.source.offset, self.affine.offset)
        ):
            raise ValueError("frame was not built from this affine map")

    @classmethod
    def build(cls, matrix, offset=None, rcond_min: float = RCOND_MIN) -> "ReluLayer":
        matrix = np.asarray(matrix, dtype=float)
        if offset is None:
            offset = np.zeros(matrix.shape[0])
        affine = AffineMap(matrix, offset)
        return cls(affine, build_dual_frame(affine, rcond_min=rcond_min))

    @classmethod
    def canonical(cls, d: int) -> "ReluLayer":
        """The layer with identity matrix and zero offset."""
        return cls.build(np.eye(d))

    @property
    def d_in(self) -> int:
        return self.affine.d_in

    @property
    def d_out(self) -> int:
        return self.affine.d_out

    def __call__(self, x) -> np.ndarray:
        return evaluate(self, x)


def evaluate(layer: ReluLayer, x) -> np.ndarray:
    """T(x) = componentwise max(A x + b, 0)."""
    return np.maximum(layer.affine(x), 0.0)


def project_with_frame(frame: DualFrame, x) -> np.ndarray:
    """Cone projection defined by a dual frame.

    Expands in the dual basis, zeroes the negative coefficients, and
    resums.  Output lies in the closed cone spanned by the dual vectors
    at the apex; points already inside are fixed, the all-negative sector
    collapses to the apex.  For contracting frames the complement part is
    dropped as well, so the output lies in the row span.
    """
    lam = frame.source(x)
    return frame.apex + np.maximum(lam, 0.0) @ frame.duals


def project_to_cone(layer: ReluLayer, x) -> np.ndarray:
    return project_with_frame(layer.frame, x)


def decompose_check(layer: ReluLayer, x) -> float:
    """Max-norm residual of the factorization T = (affine) o (cone projection).

    The contract is that this stays below tolerance for every input; it is
    the working check that the projection construction is consistent with
    the layer.
    """
    lhs = evaluate(layer, x)
    rhs = layer.affine(project_to_cone(layer, x))
    return float(np.max(np.abs(lhs - rhs), initial=0.0))


def image_of_sector(layer: ReluLayer, s: SectorIndex) -> SectorIndex:
    """Codomain sector hit by a domain sector: the minus set is forgotten."""
    if s.d != layer.d_out:
        raise DimensionMismatch(
            f"sector indexes {s.d} hyperplanes, layer has {layer.d_out}"
        )
    return SectorIndex(s.d, s.plus_mask, 0)


@dataclass(frozen=True, eq=False)
class PreimageSet:
    """Symbolic description of the full preimage of a codomain point.

    The set is ``base - sum_{i in generator_indices} c_i a_i*`` over
    coefficients c_i >= 0, plus, for contracting layers, arbitrary shifts
    along ``free_subspace`` (the directions the layer ignores).  It is
    never materialized; use :func:`membership_oracle` or :meth:`sample`.
    """

    layer: ReluLayer
    target: np.ndarray
    base: np.ndarray
    generator_indices: tuple[int, ...]
    source_sector: SectorIndex
    free_subspace: np.ndarray | None = None

    @property
    def generators(self) -> np.ndarray:
        """Sweep directions, one row per generator: -a_i*."""
        idx = [i - 1 for i in self.generator_indices]
        return -self.layer.frame.duals[idx]

    def dimension(self) -> int:
        extra = 0 if self.free_subspace is None else self.free_subspace.shape[0]
        return len(self.generator_indices) + extra

    def sample(self, n: int, radius: float = 1.0, rng: np.random.Generator | None = None) -> np.ndarray:
        """Points of the set; coefficients are Exponential(1) scaled by radius."""
        if rng is None:
            rng = np.random.default_rng(0)
        points = np.tile(self.base, (n, 1))
        if self.generator_indices:
            coeffs = rng.exponential(radius, size=(n, len(self.generator_indices)))
            points = points + coeffs @ self.generators
        if self.free_subspace is not None and self.free_subspace.size:
            shifts = rng.normal(0.0, radius, size=(n, self.free_subspace.shape[0]))
            points = points + shifts @ self.free_subspace
        return points


def preimage_of_point(
    layer: ReluLayer, y, zero_tol: float = ZERO_COMPONENT_TOL
) -> PreimageSet | None:
    """Complete preimage of a codomain point, or None when it is empty.

    Empty exactly when some component of y is negative beyond the zero
    band.  Otherwise the base point maps to y under the affine part and
    one sweep generator is added per zero component of y, so the set's
    dimension is the codimension of y's codomain sector (plus the
    complement dimension for contracting layers).
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (layer.d_out,):
        raise DimensionMismatch(
            f"target has shape {y.shape}, layer codomain dimension is {layer.d_out}"
        )
    if np.any(y < -zero_tol):
        return None
    y = np.where(y < 0.0, 0.0, y)
    plus = tuple(i + 1 for i in range(layer.d_out) if y[i] > zero_tol)
    zeros = tuple(i + 1 for i in range(layer.d_out) if y[i] <= zero_tol)
    frame = layer.frame
    base = frame.apex + y @ frame.duals
    return PreimageSet(
        layer=layer,
        target=y,
        base=base,
        generator_indices=zeros,
        source_sector=SectorIndex.of(layer.d_out, plus),
        free_subspace=frame.complement_basis,
    )


def preimage_of_sector(layer: ReluLayer, j) -> list[SectorIndex]:
    """Domain sectors whose union is the preimage of codomain sector (J, {}).

    Returns the 2^(d-|J|) pairings (J, K) over subsets K of the complement,
    in graded lexicographic order.
    """
    d = layer.d_out
    if d > MAX_ENUM_DIM:
        raise EnumerationLimit(f"refusing 2^{d} subsets (limit d={MAX_ENUM_DIM})")
    j_mask = 0
    for i in j:
        i = int(i)
        if not 1 <= i <= d:
            raise ValueError(f"index {i} outside 1..{d}")
        j_mask |= 1 << (i - 1)
    rest = ((1 << d) - 1) & ~j_mask
    out = []
    sub = rest
    while True:
        out.append(SectorIndex(d, j_mask, sub))
        if sub == 0:
            break
        sub = (sub - 1) & rest
    out.sort(key=_graded_key)
    return out


def membership_mask(layer: ReluLayer, pre: PreimageSet, points, tol: float | None = None) -> np.ndarray:
    """Vectorized membership test for a batch of points.

    Solves for the parametric coefficients: r = A(x - base) must vanish on
    the positive components of the target and be <= 0 (coefficient >= 0)
    on the zero components.  Any complement part is unconstrained because
    the layer ignores it.
    """
    points = np.asarray(points, dtype=float)
    if tol is None:
        tol = scaled(1e-9, float(np.max(np.abs(pre.target), initial=0.0)))
    r = layer.affine(points) - pre.target
    zeros = [i - 1 for i in pre.generator_indices]
    plus = [i for i in range(layer.d_out) if (i + 1) not in pre.generator_indices]
    ok = np.ones(r.shape[:-1], dtype=bool)
    if zeros:
        ok &= np.all(r[..., zeros] <= tol, axis=-1)
    if plus:
        ok &= np.all(np.abs(r[..., plus]) <= tol, axis=-1)
    return ok


def membership_oracle(layer: ReluLayer, pre: PreimageSet, x, tol: float | None = None) -> bool:
    """True when ``x`` admits the parametric form of the preimage set."""
    x = np.asarray(x, dtype=float)
    if x.shape != (layer.d_in,):
        raise DimensionMismatch(
            f"point has shape {x.shape}, layer domain dimension is {layer.d_in}"
        )
    return bool(membership_mask(layer, pre, x, tol=tol))
