"""Multi-layer ReLU networks: composition, rewriting, and boundary recursion.

Because each layer factors into a cone projection followed by its affine
part, a whole network factors into the chain of cone projections of the
*composed* affine maps followed by a single composed readout.  The
boundary of the network at level k (the zero set of the suffix starting
at layer k) pulls back one level at a time: intersect with the closed
nonnegative orthant, then take layer preimages.  Exact piece enumeration
across layers is not attempted; levels are represented by verified
samples with their fiber provenance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .boundary import OutputLayer, enumerate_pieces, sample_piece
from .core import AffineMap, DualFrame, build_dual_frame
from .errors import DimensionMismatch, EmptyIntersection, RankDeficient
from .layer import ReluLayer, evaluate, preimage_of_point, project_with_frame


@dataclass(frozen=True, eq=False)
class ReluNetwork:
    """Stack of ReLU layers with a scalar affine readout."""

    layers: tuple[ReluLayer, ...]
    output: OutputLayer

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise DimensionMismatch("network needs at least one layer")
        for k in range(1, len(layers)):
            if layers[k].d_in != layers[k - 1].d_out:
                raise DimensionMismatch(
                    f"layer {k + 1} expects dimension {layers[k].d_in}, "
                    f"layer {k} outputs {layers[k - 1].d_out}"
                )
        if self.output.d != layers[-1].d_out:
            raise DimensionMismatch(
                f"readout expects dimension {self.output.d}, "
                f"last layer outputs {layers[-1].d_out}"
            )
        object.__setattr__(self, "layers", layers)

    @classmethod
    def from_arrays(cls, matrices, offsets, weights, bias) -> "ReluNetwork":
        layers = tuple(ReluLayer.build(m, b) for m, b in zip(matrices, offsets))
        return cls(layers, OutputLayer(np.asarray(weights, dtype=float), bias))

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def d_in(self) -> int:
        return self.layers[0].d_in

    def __call__(self, x):
        return evaluate_network(self, x)


def evaluate_network(net: ReluNetwork, x) -> float | np.ndarray:
    """Full forward pass: readout of the composed layer chain."""
    h = np.asarray(x, dtype=float)
    for layer in net.layers:
        h = evaluate(layer, h)
    return net.output(h)


def evaluate_tail(net: ReluNetwork, level: int, x) -> float | np.ndarray:
    """Value of the suffix network starting at layer ``level`` (1-based).

    Level 1 is the full network; level k sees points in the domain of
    layer k.  Points of the level-k boundary are exactly the zeros.
    """
    if not 1 <= level <= net.depth:
        raise ValueError(f"level {level} outside 1..{net.depth}")
    h = np.asarray(x, dtype=float)
    for layer in net.layers[level - 1 :]:
        h = evaluate(layer, h)
    return net.output(h)


@dataclass(frozen=True, eq=False)
class ComposedAffine:
    """Prefix compositions of the layer affine maps, with their frames.

    ``maps[k-1]`` is the composition of the first k affine parts; its
    frame defines the k:th cone projection of the rewritten network.
    ``final_affine`` is the readout composed with the last map, a scalar
    affine function on the input space.
    """

    maps: tuple[AffineMap, ...]
    frames: tuple[DualFrame, ...]
    final_affine: OutputLayer


def canonical_structure(net: ReluNetwork) -> ComposedAffine:
    """Rewrite the network as cone projections plus one affine readout.

    Each composed affine map must admit a dual frame; failure reports the
    depth at which the composition loses rank.
    """
    maps: list[AffineMap] = []
    frames: list[DualFrame] = []
    matrix = net.layers[0].affine.matrix
    offset = net.layers[0].affine.offset
    for k, layer in enumerate(net.layers, start=1):
        if k > 1:
            matrix = layer.affine.matrix @ maps[-1].matrix
            offset = layer.affine.matrix @ maps[-1].offset + layer.affine.offset
        composed = AffineMap(matrix, offset)
        try:
            frames.append(build_dual_frame(composed))
        except RankDeficient as exc:
            raise RankDeficient(f"composed affine map at depth {k}: {exc}") from exc
        maps.append(composed)
    last = maps[-1]
    final = OutputLayer(
        last.matrix.T @ net.output.weights,
        float(net.output.weights @ last.offset + net.output.bias),
    )
    return ComposedAffine(maps=tuple(maps), frames=tuple(frames), final_affine=final)


def evaluate_canonical(structure: ComposedAffine, x) -> float | np.ndarray:
    """Evaluate the rewritten network: projections then the composed readout."""
    h = np.asarray(x, dtype=float)
    for frame in structure.frames:
        h = project_with_frame(frame, h)
    return structure.final_affine(h)


@dataclass(frozen=True)
class FiberRecord:
    """Provenance of one pulled-back sample point."""

    parent: int
    fiber: int
    coefficients: tuple[float, ...]


@dataclass(frozen=True, eq=False)
class BoundarySampleSet:
    """Verified sample points of the boundary at one level."""

    level: int
    points: np.ndarray
    residuals: np.ndarray
    provenance: tuple[FiberRecord, ...]

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        res = np.asarray(self.residuals, dtype=float)
        pts.setflags(write=False)
        res.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "residuals", res)

    def __len__(self) -> int:
        return self.points.shape[0]


def sample_shallow_boundary(
    layer: ReluLayer,
    output: OutputLayer,
    level: int,
    samples_per_piece: int,
    radius: float,
    rng: np.random.Generator,
) -> BoundarySampleSet:
    """Seed sample set from the exact piece enumeration of a shallow stage."""
    bd = enumerate_pieces(layer, output)
    points = []
    records = []
    for p_idx, piece in enumerate(bd.pieces):
        pts = sample_piece(piece, samples_per_piece, radius=radius, rng=rng)
        points.append(pts)
        records.extend(FiberRecord(p_idx, f, ()) for f in range(samples_per_piece))
    stacked = np.vstack(points)
    norm_out = (
        output if output.bias < 0 else OutputLayer(-output.weights, -output.bias)
    )
    residuals = np.abs(np.maximum(layer.affine(stacked), 0.0) @ norm_out.weights + norm_out.bias)
    return BoundarySampleSet(
        level=level, points=stacked, residuals=residuals, provenance=tuple(records)
    )


def pull_back_boundary(
    net: ReluNetwork,
    k: int,
    samples: BoundarySampleSet,
    rng: np.random.Generator,
    max_fibers: int = 16,
    fiber_scale: float = 1.0,
    tol: float = 1e-7,
    orthant_tol: float = 1e-9,
) -> BoundarySampleSet:
    """Pull level-(k+1) boundary samples back through layer k.

    Keeps the samples inside the closed nonnegative orthant (the rest have
    empty preimages), maps each through the layer's point preimage, and
    emits fiber samples; every emitted point is verified against the
    level-k zero condition.  The fiber budget per point is
    min(max_fibers, 4^z) with z the number of zero components.
    """
    if samples.level != k + 1:
        raise ValueError(f"expected samples at level {k + 1}, got {samples.level}")
    if not 1 <= k < net.depth + 1:
        raise ValueError(f"level {k} outside 1..{net.depth}")
    layer = net.layers[k - 1]
    if samples.points.shape[1] != layer.d_out:
        raise DimensionMismatch(
            f"samples have dimension {samples.points.shape[1]}, "
            f"layer {k} outputs {layer.d_out}"
        )
    inside = np.flatnonzero(np.min(samples.points, axis=1) >= -orthant_tol)
    if inside.size == 0:
        raise EmptyIntersection(
            f"no level-{k + 1} samples inside the nonnegative orthant"
        )
    out_points = []
    out_records = []
    for parent in inside:
        y = np.where(samples.points[parent] < 0.0, 0.0, samples.points[parent])
        pre = preimage_of_point(layer, y)
        z = len(pre.generator_indices)
        free = 0 if pre.free_subspace is None else pre.free_subspace.shape[0]
        n_fibers = min(max_fibers, 4 ** (z + free))
        fiber_points = [pre.base]
        fiber_coeffs = [()]
        if n_fibers > 1:
            coeffs = rng.exponential(fiber_scale, size=(n_fibers - 1, z))
            extra = coeffs @ pre.generators
            if free:
                shifts = rng.normal(0.0, fiber_scale, size=(n_fibers - 1, free))
                extra = extra + shifts @ pre.free_subspace
                coeffs = np.hstack([coeffs, shifts])
            fiber_points.extend(pre.base + extra)
            fiber_coeffs.extend(tuple(row) for row in coeffs)
        for fiber_id, (x, coeff) in enumerate(zip(fiber_points, fiber_coeffs)):
            out_points.append(x)
            out_records.append(FiberRecord(int(parent), fiber_id, coeff))
    stacked = np.asarray(out_points)
    residuals = np.abs(np.asarray(evaluate_tail(net, k, stacked)))
    keep = residuals <= tol
    return BoundarySampleSet(
        level=k,
        points=stacked[keep],
        residuals=residuals[keep],
        provenance=tuple(r for r, ok in zip(out_records, keep) if ok),
    )


def trace_boundary(
    net: ReluNetwork,
    samples_per_piece: int = 50,
    radius: float = 2.0,
    rng: np.random.Generator | None = None,
    max_fibers: int = 16,
    fiber_scale: float = 1.0,
    tol: float = 1e-7,
) -> dict[int, BoundarySampleSet]:
    """Run the boundary recursion from the last level down to the input.

    Level N is seeded from the exact shallow enumeration of the last layer
    plus readout; every earlier level is produced by pull-back.  Returns
    one verified sample set per level, keyed by level.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    n = net.depth
    levels: dict[int, BoundarySampleSet] = {}
    current = sample_shallow_boundary(
        net.layers[-1], net.output, n, samples_per_piece, radius, rng
    )
    levels[n] = current
    for k in range(n - 1, 0, -1):
        current = pull_back_boundary(
            net, k, current, rng, max_fibers=max_fibers, fiber_scale=fiber_scale, tol=tol
        )
        levels[k] = current
    return levels


@dataclass(frozen=True)
class MixingReport:
    """Measured surrogate for the class non-mixing condition at one layer.

    Exact-set disjointness of the projected classes is not testable from
    finite samples, so the report carries the minimum pairwise distance
    between the projected sets and the threshold used for the verdict.
    """

    min_distance: float
    threshold: float
    mixed: bool
    n_first: int
    n_second: int


def mixing_check(
    prefix, x_first, x_second, next_layer: ReluLayer, threshold: float = 1e-9
) -> MixingReport:
    """Check whether the next layer's cone projection merges the two classes.

    Pushes both point sets through the prefix layers, applies the next
    layer's projection, and reports the minimum pairwise distance.  A
    verdict of mixed at some threshold stays mixed at every larger one.
    """
    a = np.atleast_2d(np.asarray(x_first, dtype=float))
    b = np.atleast_2d(np.asarray(x_second, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ValueError("class point sets must be nonempty")
    for layer in prefix:
        a = evaluate(layer, a)
        b = evaluate(layer, b)
    a = project_with_frame(next_layer.frame, a)
    b = project_with_frame(next_layer.frame, b)
    diffs = a[:, None, :] - b[None, :, :]
    min_distance = float(np.sqrt(np.min(np.sum(diffs * diffs, axis=-1))))
    return MixingReport(
        min_distance=min_distance,
        threshold=threshold,
        mixed=min_distance <= threshold,
        n_first=a.shape[0],
        n_second=b.shape[0],
    )
