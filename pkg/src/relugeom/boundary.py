"""Exact decision boundaries of shallow ReLU networks.

A scalar readout L(y) = w . y + c applied after a ReLU layer has a
piecewise linear zero set.  Pulling the kernel hyperplane of L back
through the layer turns the boundary into one linear piece per index
subset J whose intersection values are not all negative; the piece for J
is a simplex-constrained patch swept by the dual vectors outside J.

The intersection values t_i = -c / w_i (after normalizing c < 0) say
where the kernel crosses each dual line.  Their sign pattern fixes
everything combinatorial: the number of pieces is 2^d - 2^m with m the
number of negative values, the surface is convex exactly when m = 0, and
sorting t produces an invertible affine change of variables onto the
canonical boundary with the same m.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AffineMap
from .errors import (
    AllNegative,
    DegenerateBias,
    DegenerateDirection,
    DimensionMismatch,
    EmptyPiece,
    EnumerationLimit,
    InvalidM,
    RankDeficient,
)
from .layer import ReluLayer, evaluate
from .partition import _indices_of
from .tolerances import DEGENERATE_DIRECTION_REL, MAX_ENUM_DIM, RCOND_MIN, scaled


@dataclass(frozen=True, eq=False)
class OutputLayer:
    """Scalar affine readout y -> weights . y + bias."""

    weights: np.ndarray
    bias: float

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1:
            raise DimensionMismatch(f"weights must be a vector, got shape {w.shape}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    def __call__(self, y) -> np.ndarray | float:
        y = np.asarray(y, dtype=float)
        if y.shape[-1:] != (self.d,):
            raise DimensionMismatch(
                f"point has dimension {y.shape[-1] if y.ndim else 0}, readout expects {self.d}"
            )
        out = y @ self.weights + self.bias
        return float(out) if out.ndim == 0 else out


def normalize_output_layer(layer: OutputLayer) -> OutputLayer:
    """Flip signs if needed so the bias is negative; the zero set is unchanged."""
    if layer.bias == 0.0:
        raise DegenerateBias("zero bias: the kernel hyperplane passes through the origin")
    if layer.bias > 0.0:
        return OutputLayer(-layer.weights, -layer.bias)
    return layer


@dataclass(frozen=True, eq=False)
class PulledBackHyperplane:
    """Kernel of the readout pulled back through an affine map.

    A point satisfies normal . x + offset = 0 exactly when its affine
    image lies on the readout's kernel.
    """

    normal: np.ndarray
    offset: float

    def __call__(self, x) -> np.ndarray | float:
        out = np.asarray(x, dtype=float) @ self.normal + self.offset
        return float(out) if out.ndim == 0 else out


def pull_back_hyperplane(affine: AffineMap, layer: OutputLayer) -> PulledBackHyperplane:
    if layer.d != affine.d_out:
        raise DimensionMismatch(
            f"readout expects dimension {layer.d}, affine map outputs {affine.d_out}"
        )
    return PulledBackHyperplane(
        normal=affine.matrix.T @ layer.weights,
        offset=float(layer.weights @ affine.offset + layer.bias),
    )


@dataclass(frozen=True, eq=False)
class IntersectionValues:
    """Where the pulled-back hyperplane crosses each dual line.

    ``t[i-1]`` is the parameter with apex + t_i a_i* on the hyperplane;
    entries flagged degenerate (vanishing weight) are NaN.  ``m`` counts
    the negative values among the non-degenerate ones.
    """

    t: np.ndarray
    m: int
    degenerate: tuple[int, ...]

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        t.setflags(write=False)
        object.__setattr__(self, "t", t)

    @property
    def d(self) -> int:
        return self.t.shape[0]


def intersection_values(
    layer: OutputLayer, degenerate_rel: float = DEGENERATE_DIRECTION_REL
) -> IntersectionValues:
    """Intersection values t_i = -bias / weights_i of a normalized readout.

    Raises AllNegative when every non-degenerate value is negative, in
    which case the boundary is empty.  Near-zero weights are flagged as
    degenerate directions instead of producing huge values.
    """
    norm = normalize_output_layer(layer)
    w = norm.weights
    scale = float(np.max(np.abs(w), initial=0.0))
    degenerate = tuple(i + 1 for i in range(norm.d) if abs(w[i]) <= degenerate_rel * scale)
    t = np.full(norm.d, np.nan)
    live = [i for i in range(norm.d) if (i + 1) not in degenerate]
    for i in live:
        t[i] = -norm.bias / w[i]
    if live and all(t[i] < 0.0 for i in live):
        raise AllNegative("all intersection values negative: the boundary is empty")
    m = sum(1 for i in live if t[i] < 0.0)
    return IntersectionValues(t=t, m=m, degenerate=degenerate)


@dataclass(frozen=True, eq=False)
class BoundaryPiece:
    """One linear piece of the boundary, in parametric form.

    Points are apex + sum_{j in indices} alpha_j a_j* - sum_{i outside}
    lambda_i a_i* with alpha_j > 0 constrained by sum_j alpha_j / t_j = 1
    and lambda_i >= 0.  The piece is bounded in the simplex directions
    exactly when all its t_j are positive; the recession directions make
    it unbounded whenever the index set is proper.
    """

    indices: tuple[int, ...]
    t: np.ndarray
    recession_indices: tuple[int, ...]
    bounded: bool
    apex: np.ndarray
    duals: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        t.setflags(write=False)
        object.__setattr__(self, "t", t)

    @property
    def is_empty(self) -> bool:
        return len(self.indices) == 0 or not np.any(self.t > 0.0)

    @property
    def recession_generators(self) -> np.ndarray:
        idx = [i - 1 for i in self.recession_indices]
        return -self.duals[idx]

    def label(self) -> str:
        return "-".join(str(i) for i in self.indices)


@dataclass(frozen=True, eq=False)
class CanonicalReduction:
    """Affine change of variables onto the canonical boundary with the same m.

    ``sigma`` sorts the intersection values ascending (stable in the
    original index), ``scale`` holds their magnitudes, and ``to_actual``
    maps the canonical boundary onto the actual one, sending the canonical
    piece for J to the actual piece for sigma(J).
    """

    m: int
    sigma: tuple[int, ...]
    scale: np.ndarray
    to_actual: AffineMap

    def map_indices(self, indices) -> tuple[int, ...]:
        return tuple(sorted(self.sigma[i - 1] for i in indices))


@dataclass(frozen=True, eq=False)
class DecisionBoundary:
    """Complete piecewise-linear boundary of a shallow network."""

    d: int
    pieces: tuple[BoundaryPiece, ...]
    values: IntersectionValues
    m: int
    piece_count: int
    curvature: str
    canonical: CanonicalReduction


def _subsets_graded(d: int):
    masks = sorted(range(1 << d), key=lambda m: (m.bit_count(), m))
    return masks


def enumerate_pieces(layer: ReluLayer, output: OutputLayer) -> DecisionBoundary:
    """Enumerate every linear piece of the boundary of output o layer.

    One piece per index subset J whose intersection values are not all
    negative; the count always comes out to 2^d - 2^m.  Degenerate
    directions (readout weight ~ 0) are rejected, since then the
    hyperplane is parallel to a dual line and the piece structure is not
    well posed.
    """
    d = layer.d_out
    if output.d != d:
        raise DimensionMismatch(
            f"readout expects dimension {output.d}, layer outputs {d}"
        )
    if d > MAX_ENUM_DIM:
        raise EnumerationLimit(f"refusing 2^{d} subsets (limit d={MAX_ENUM_DIM})")
    norm = normalize_output_layer(output)
    values = intersection_values(norm)
    if values.degenerate:
        raise DegenerateDirection(
            f"readout weight vanishes at indices {values.degenerate}; "
            "the hyperplane is parallel to the corresponding dual lines"
        )
    t = values.t
    frame = layer.frame
    full = (1 << d) - 1
    pieces = []
    for mask in _subsets_graded(d):
        indices = _indices_of(mask)
        if not indices:
            continue
        tj = t[[i - 1 for i in indices]]
        if np.all(tj < 0.0):
            continue
        pieces.append(
            BoundaryPiece(
                indices=indices,
                t=tj,
                recession_indices=_indices_of(full & ~mask),
                bounded=bool(np.all(tj > 0.0)),
                apex=frame.apex,
                duals=frame.duals,
            )
        )
    expected = 2**d - 2**values.m
    if len(pieces) != expected:
        raise AssertionError(
            f"piece enumeration produced {len(pieces)} pieces, expected {expected}"
        )
    curvature = "convex" if values.m == 0 else "saddle"
    reduction = canonical_reduction(layer, norm)
    return DecisionBoundary(
        d=d,
        pieces=tuple(pieces),
        values=values,
        m=values.m,
        piece_count=len(pieces),
        curvature=curvature,
        canonical=reduction,
    )


def sample_piece(
    piece: BoundaryPiece, n: int, radius: float = 1.0, rng: np.random.Generator | None = None
) -> np.ndarray:
    """Random points of a boundary piece.

    The simplex constraint is sampled by a Dirichlet draw on the
    positive-value coordinates, budgeted to absorb whatever the negative
    coordinates contribute; recession coefficients are uniform in
    [0, radius].
    """
    if piece.is_empty:
        raise EmptyPiece(f"piece {piece.indices} has no points")
    if rng is None:
        rng = np.random.default_rng(0)
    t = piece.t
    pos = np.flatnonzero(t > 0.0)
    neg = np.flatnonzero(t < 0.0)
    alphas = np.zeros((n, len(piece.indices)))
    budget = np.ones(n)
    if neg.size:
        alphas[:, neg] = rng.exponential(radius * float(np.max(np.abs(t[neg]))), size=(n, neg.size))
        budget = 1.0 - alphas[:, neg] @ (1.0 / t[neg])
    weights = rng.gamma(1.0, size=(n, pos.size))
    weights /= weights.sum(axis=1, keepdims=True)
    alphas[:, pos] = weights * budget[:, None] * t[pos]
    points = piece.apex + alphas @ piece.duals[[i - 1 for i in piece.indices]]
    if piece.recession_indices:
        lam = rng.uniform(0.0, radius, size=(n, len(piece.recession_indices)))
        points = points + lam @ piece.recession_generators
    return points


def piece_count_oracle(layer: ReluLayer, output: OutputLayer, tol_rel: float = 1e-7) -> int:
    """Count boundary pieces by constructing a witness point on each candidate.

    For every index subset with a positive intersection value, builds an
    explicit solution of the simplex constraint, verifies that the witness
    really lies on the zero level of the network and carries the claimed
    activation pattern, and counts it.  No piece-count formula is used, so
    agreement with :func:`enumerate_pieces` is a genuine cross-check.
    """
    d = layer.d_out
    if d > 8:
        raise ValueError("witness enumeration is intended for d <= 8")
    norm = normalize_output_layer(output)
    values = intersection_values(norm)
    if values.degenerate:
        raise DegenerateDirection(
            f"readout weight vanishes at indices {values.degenerate}"
        )
    t = values.t
    frame = layer.frame
    tol = scaled(tol_rel, abs(norm.bias))
    count = 0
    for mask in range(1, 1 << d):
        indices = _indices_of(mask)
        idx0 = [i - 1 for i in indices]
        tj = t[idx0]
        pos = np.flatnonzero(tj > 0.0)
        if pos.size == 0:
            continue
        # Witness: tiny equal coefficients everywhere except one positive
        # coordinate that absorbs the slack in the simplex constraint.
        lead = pos[0]
        inv_sum_pos = float(np.sum(1.0 / tj[pos[1:]])) if pos.size > 1 else 0.0
        # eps * inv_sum_pos < 1/2 keeps the lead coefficient positive.
        eps = 0.5 / (inv_sum_pos + 1.0)
        alpha = np.full(len(indices), eps)
        alpha[lead] = tj[lead] * (1.0 - float(np.sum(alpha / tj)) + alpha[lead] / tj[lead])
        if alpha[lead] <= 0.0 or abs(float(np.sum(alpha / tj)) - 1.0) > 1e-9:
            continue
        x = frame.apex + alpha @ frame.duals[idx0]
        level = float(norm.weights @ evaluate(layer, x) + norm.bias)
        rho = layer.affine(x)
        pattern_tol = scaled(1e-9, float(np.max(np.abs(rho))))
        pattern = tuple(i + 1 for i in range(d) if rho[i] > pattern_tol)
        if abs(level) <= tol and pattern == indices:
            count += 1
    return count


def sample_boundary_patterns(
    layer: ReluLayer,
    output: OutputLayer,
    rng: np.random.Generator,
    n_segments: int = 4000,
    radius_mult: float = 3.0,
    bisections: int = 80,
) -> set[tuple[int, ...]]:
    """Activation patterns of boundary points found by segment bisection.

    Draws random segments around the apex, keeps those whose endpoints
    evaluate with opposite signs, and bisects to the zero level.  Each
    located point is labeled by its set of positive row functionals; on a
    piece's relative interior that label is the piece's index set, so the
    returned pattern set is a sampled census of the pieces.  Points too
    close to a pattern change are discarded as ambiguous.
    """
    norm = normalize_output_layer(output)
    values = intersection_values(norm)
    t = values.t
    frame = layer.frame
    d = layer.d_in
    reach = float(np.nanmax(np.abs(t))) * float(np.max(np.linalg.norm(frame.duals, axis=1)))
    radius = radius_mult * max(reach, 1.0)

    def level(points):
        return np.maximum(layer.affine(points), 0.0) @ norm.weights + norm.bias

    lo = rng.uniform(-radius, radius, size=(n_segments, d)) + frame.apex
    hi = rng.uniform(-radius, radius, size=(n_segments, d)) + frame.apex
    f_lo, f_hi = level(lo), level(hi)
    crossing = (f_lo * f_hi) < 0.0
    lo, hi, f_lo = lo[crossing], hi[crossing], f_lo[crossing]
    for _ in range(bisections):
        mid = 0.5 * (lo + hi)
        f_mid = level(mid)
        toward_hi = (f_lo * f_mid) > 0.0
        lo = np.where(toward_hi[:, None], mid, lo)
        f_lo = np.where(toward_hi, f_mid, f_lo)
        hi = np.where(toward_hi[:, None], hi, mid)
    points = 0.5 * (lo + hi)
    patterns: set[tuple[int, ...]] = set()
    if points.size == 0:
        return patterns
    rho = layer.affine(points)
    band = scaled(1e-6, float(np.max(np.abs(rho), initial=0.0)))
    for row in rho:
        if np.any(np.abs(row) <= band):
            continue
        patterns.add(tuple(i + 1 for i in range(d) if row[i] > 0.0))
    return patterns


def canonical_boundary(d: int, m: int) -> DecisionBoundary:
    """Boundary of the canonical network for class index m.

    Identity layer, readout with bias -1 and weights -1 on the first m
    coordinates and +1 on the rest, so the intersection values follow the
    canonical sign pattern exactly.
    """
    if not 0 <= m <= d - 1:
        raise InvalidM(f"canonical class index {m} outside 0..{d - 1}")
    weights = np.ones(d)
    weights[:m] = -1.0
    return enumerate_pieces(ReluLayer.canonical(d), OutputLayer(weights, -1.0))


def canonical_reduction(layer: ReluLayer, output: OutputLayer) -> CanonicalReduction:
    """Build the affine map carrying the canonical boundary onto this one.

    The matrix sends the i:th basis vector to |t_sigma(i)| a*_sigma(i)
    where sigma sorts the intersection values ascending; the offset is the
    cone apex.  Ties in t are broken by original index (stable sort).
    """
    norm = normalize_output_layer(output)
    values = intersection_values(norm)
    if values.degenerate:
        raise DegenerateDirection(
            f"readout weight vanishes at indices {values.degenerate}"
        )
    t = values.t
    d = values.d
    order = np.argsort(t, kind="stable")
    sigma = tuple(int(i) + 1 for i in order)
    q = np.zeros((d, d))
    for col, row in enumerate(order):
        q[row, col] = 1.0
    diag = np.abs(t)
    matrix = np.linalg.solve(layer.affine.matrix, diag[:, None] * q)
    singulars = np.linalg.svd(matrix, compute_uv=False)
    if singulars[-1] / singulars[0] < RCOND_MIN:
        raise RankDeficient("canonical change of variables is numerically singular")
    return CanonicalReduction(
        m=values.m,
        sigma=sigma,
        scale=diag,
        to_actual=AffineMap(matrix, layer.frame.apex),
    )


def equivalence_check(b1: DecisionBoundary, b2: DecisionBoundary) -> bool:
    """Whether an invertible affine map carries one boundary onto the other.

    Boundaries reduce to the canonical representative with the same m, and
    different m cannot be related affinely because the piece counts
    differ, so equality of m decides.
    """
    if b1.d != b2.d:
        raise DimensionMismatch(f"boundaries live in dimensions {b1.d} and {b2.d}")
    return b1.m == b2.m
