"""Discrete generating curves in the (r, z) half-plane.

A polygonal curve with nodes at the uniform reference grid rho_j = j/J
represents the generating curve of an axisymmetric surface: open curves
attach to the rotation axis at both ends (genus-0 surface of revolution),
periodic curves stay off the axis (genus-1).  All per-element and
per-vertex geometric quantities used by the evolution schemes are
computed here.

Sign conventions: the normal is the negated clockwise quarter-turn of
the tangent, nu = -(tau_2, -tau_1) = (-tau_2, tau_1).  The built-in
shapes traverse their profiles clockwise in the (r, z) plane so that nu
points out of the enclosed region; a unit circle then carries in-plane
curvature -1.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class DegenerateMeshError(RuntimeError):
    """A segment of the polygonal curve has (numerically) zero length."""


class Topology(enum.Enum):
    OPEN = "open"
    PERIODIC = "periodic"


class CurveCheck(enum.Enum):
    """Outcome of a validity check; returned, never raised."""

    OK = "ok"
    PINCH_OFF = "pinch_off"
    DEGENERATE = "degenerate"


@dataclass(frozen=True)
class Thresholds:
    """Breakdown thresholds for the evolution loop."""

    r_min: float
    len_min: float

    @staticmethod
    def from_initial_curve(curve: "PolygonalCurve") -> "Thresholds":
        r = curve.nodes[:, 0]
        lengths = curve.segment_lengths()
        return Thresholds(r_min=1e-3 * float(r.max()),
                          len_min=1e-8 * float(lengths.mean()))


@dataclass(frozen=True)
class PolygonalCurve:
    """Nodes of the discrete generating curve on the uniform grid.

    Open curves store J+1 nodes for J elements; periodic curves store J
    nodes, the last element wrapping back to node 0.  Nodes are held in
    a read-only (N, 2) array of (r, z) pairs.
    """

    topology: Topology
    nodes: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(np.asarray(self.nodes, dtype=float))
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ValueError("nodes must be an (N, 2) array of (r, z) pairs")
        if arr.shape[0] < 3:
            raise ValueError(f"need at least 3 nodes, got {arr.shape[0]}")
        arr.flags.writeable = False
        object.__setattr__(self, "nodes", arr)

    @property
    def is_periodic(self) -> bool:
        return self.topology is Topology.PERIODIC

    @property
    def node_count(self) -> int:
        return self.nodes.shape[0]

    @property
    def element_count(self) -> int:
        return self.node_count if self.is_periodic else self.node_count - 1

    @property
    def grid_spacing(self) -> float:
        return 1.0 / self.element_count

    def node_positions(self) -> np.ndarray:
        """rho_j values of the stored nodes."""
        return np.arange(self.node_count) / self.element_count

    def endpoints(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-element start and end node coordinates, (J, 2) each."""
        if self.is_periodic:
            return self.nodes, np.roll(self.nodes, -1, axis=0)
        return self.nodes[:-1], self.nodes[1:]

    def segment_vectors(self) -> np.ndarray:
        p, q = self.endpoints()
        return q - p

    def segment_lengths(self) -> np.ndarray:
        return np.linalg.norm(self.segment_vectors(), axis=1)

    def with_nodes(self, nodes: np.ndarray) -> "PolygonalCurve":
        return PolygonalCurve(self.topology, nodes)

    def reversed(self) -> "PolygonalCurve":
        return PolygonalCurve(self.topology, self.nodes[::-1].copy())


@dataclass(frozen=True)
class ElementFrames:
    """Piecewise-constant geometry of the curve: unit tangent and normal
    plus segment length for each element."""

    tangent: np.ndarray
    normal: np.ndarray
    length: np.ndarray


@dataclass(frozen=True)
class VertexNormals:
    """Length-weighted vertex normals.

    ``omega`` carries the weighted average of the two adjacent element
    normals at interior nodes (the single adjacent normal at open
    boundary nodes); ``omega_partial`` additionally zeroes the radial
    component at open boundary nodes.
    """

    omega: np.ndarray
    omega_partial: np.ndarray


@dataclass(frozen=True)
class ShapeStats:
    center: tuple[float, float]
    mean_radius: float
    deviation: float
    mesh_ratio: float


# --- shape specifications ------------------------------------------------

@dataclass(frozen=True)
class Semicircle:
    """Half circle of the given radius, attached to the axis at both poles."""

    radius: float
    kind: str = field(default="semicircle", init=False)
    topology: Topology = field(default=Topology.OPEN, init=False)


@dataclass(frozen=True)
class Disc:
    """Flat disc profile: a rounded rectangle lying along the r axis,
    total diameter ``width`` and thickness ``height``."""

    width: float
    height: float
    kind: str = field(default="disc", init=False)
    topology: Topology = field(default=Topology.OPEN, init=False)


@dataclass(frozen=True)
class RoundedCylinder:
    """Upright cylinder of diameter ``width`` and total height ``height``
    with hemispherical caps."""

    width: float
    height: float
    kind: str = field(default="rounded_cylinder", init=False)
    topology: Topology = field(default=Topology.OPEN, init=False)


@dataclass(frozen=True)
class Stadium:
    """Closed cigar profile of total length x height, straight sides along
    the r direction, centered at ``center`` away from the axis."""

    length: float
    height: float
    center: tuple[float, float]
    kind: str = field(default="stadium", init=False)
    topology: Topology = field(default=Topology.PERIODIC, init=False)


@dataclass(frozen=True)
class TorusCircle:
    """Circle of radius ``minor_radius`` centered ``major_radius`` off the
    axis; generates a torus."""

    major_radius: float
    minor_radius: float
    kind: str = field(default="torus_circle", init=False)
    topology: Topology = field(default=Topology.PERIODIC, init=False)


ShapeSpec = Semicircle | Disc | RoundedCylinder | Stadium | TorusCircle


def build_curve(shape: ShapeSpec, J: int, eps: float = 0.0) -> PolygonalCurve:
    """Sample a built-in profile at the uniform reference grid.

    ``eps`` perturbs the angular parameterization of Semicircle and
    TorusCircle (nodes stay on the exact circle but become nonuniformly
    distributed); it must vanish for the piecewise profiles, which are
    sampled uniformly in arclength.
    """
    if J < 4:
        raise ValueError(f"J must be at least 4, got {J}")
    if isinstance(shape, (Semicircle, TorusCircle)):
        if abs(eps) >= 1.0:
            raise ValueError("eps must satisfy |eps| < 1 for an injective parameterization")
    elif eps != 0.0:
        raise ValueError(f"eps is not supported for shape kind {shape.kind!r}")

    if isinstance(shape, Semicircle):
        if shape.radius <= 0:
            raise ValueError("radius must be positive")
        rho = np.arange(J + 1) / J
        ang = (0.5 - rho) * np.pi
        ang = ang + eps * np.cos(ang)
        nodes = shape.radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)
        nodes[0] = (0.0, shape.radius)
        nodes[-1] = (0.0, -shape.radius)
        curve = PolygonalCurve(Topology.OPEN, nodes)
    elif isinstance(shape, TorusCircle):
        if shape.minor_radius <= 0 or shape.major_radius <= shape.minor_radius:
            raise ValueError("need major_radius > minor_radius > 0")
        rho = np.arange(J) / J
        ang = (0.25 - rho) * 2.0 * np.pi
        ang = ang + eps * np.cos(ang)
        nodes = np.stack(
            [shape.major_radius + shape.minor_radius * np.cos(ang),
             shape.minor_radius * np.sin(ang)],
            axis=1,
        )
        curve = PolygonalCurve(Topology.PERIODIC, nodes)
    elif isinstance(shape, Disc):
        cap = 0.5 * shape.height
        reach = 0.5 * shape.width - cap
        if shape.height <= 0 or reach <= 0:
            raise ValueError("disc needs width > height > 0")
        pieces = [
            _line((0.0, cap), (reach, cap)),
            _arc((reach, 0.0), cap, 0.5 * np.pi, -0.5 * np.pi),
            _line((reach, -cap), (0.0, -cap)),
        ]
        nodes = _sample_path(pieces, J, closed=False)
        nodes[0, 0] = 0.0
        nodes[-1, 0] = 0.0
        curve = PolygonalCurve(Topology.OPEN, nodes)
    elif isinstance(shape, RoundedCylinder):
        cap = 0.5 * shape.width
        half_side = 0.5 * shape.height - cap
        if shape.width <= 0 or half_side <= 0:
            raise ValueError("rounded cylinder needs height > width > 0")
        pieces = [
            _arc((0.0, half_side), cap, 0.5 * np.pi, 0.0),
            _line((cap, half_side), (cap, -half_side)),
            _arc((0.0, -half_side), cap, 0.0, -0.5 * np.pi),
        ]
        nodes = _sample_path(pieces, J, closed=False)
        nodes[0, 0] = 0.0
        nodes[-1, 0] = 0.0
        curve = PolygonalCurve(Topology.OPEN, nodes)
    elif isinstance(shape, Stadium):
        cap = 0.5 * shape.height
        half_side = 0.5 * (shape.length - shape.height)
        cr, cz = shape.center
        if shape.height <= 0 or half_side <= 0:
            raise ValueError("stadium needs length > height > 0")
        if cr - 0.5 * shape.length <= 0:
            raise ValueError("stadium must lie strictly off the rotation axis")
        pieces = [
            _line((cr - half_side, cz + cap), (cr + half_side, cz + cap)),
            _arc((cr + half_side, cz), cap, 0.5 * np.pi, -0.5 * np.pi),
            _line((cr + half_side, cz - cap), (cr - half_side, cz - cap)),
            _arc((cr - half_side, cz), cap, -0.5 * np.pi, -1.5 * np.pi),
        ]
        nodes = _sample_path(pieces, J, closed=True)
        curve = PolygonalCurve(Topology.PERIODIC, nodes)
    else:
        raise TypeError(f"unknown shape spec: {shape!r}")

    curve = ensure_clockwise(curve)
    _check_built_curve(curve)
    return curve


def _line(p0, p1):
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    length = float(np.linalg.norm(p1 - p0))

    def ev(u):
        return p0 + u * (p1 - p0)

    return length, ev


def _arc(center, radius, ang0, ang1):
    center = np.asarray(center, dtype=float)
    length = float(radius * abs(ang1 - ang0))

    def ev(u):
        a = ang0 + u * (ang1 - ang0)
        return center + radius * np.array([np.cos(a), np.sin(a)])

    return length, ev


def _sample_path(pieces, J, closed):
    lengths = np.array([ln for ln, _ in pieces])
    cum = np.concatenate([[0.0], np.cumsum(lengths)])
    total = cum[-1]
    count = J if closed else J + 1
    s = np.arange(count) * (total / J)
    nodes = np.empty((count, 2))
    for k, sk in enumerate(s):
        i = min(np.searchsorted(cum, sk, side="right") - 1, len(pieces) - 1)
        u = (sk - cum[i]) / lengths[i]
        nodes[k] = pieces[i][1](min(u, 1.0))
    if not closed:
        nodes[-1] = pieces[-1][1](1.0)
    return nodes


def signed_area(curve: PolygonalCurve) -> float:
    """Shoelace area of the node loop; negative for clockwise traversal.

    For open curves the closing chord runs along the axis and contributes
    nothing, so the plain node loop is used for both topologies.
    """
    x = curve.nodes[:, 0]
    y = curve.nodes[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def ensure_clockwise(curve: PolygonalCurve) -> PolygonalCurve:
    """Flip the node order if the curve runs counter-clockwise, so that
    the element normals point out of the enclosed region."""
    if signed_area(curve) > 0.0:
        return curve.reversed()
    return curve


def _check_built_curve(curve: PolygonalCurve) -> None:
    r = curve.nodes[:, 0]
    if curve.is_periodic:
        if np.any(r <= 0.0):
            raise ValueError("periodic curve must stay strictly off the axis")
    else:
        if r[0] != 0.0 or r[-1] != 0.0:
            raise ValueError("open curve must attach to the axis at both ends")
        if np.any(r[1:-1] <= 0.0):
            raise ValueError("open curve interior must stay strictly off the axis")
    if np.any(curve.segment_lengths() <= 0.0):
        raise DegenerateMeshError("curve has a zero-length segment")


# --- per-element and per-vertex quantities --------------------------------

def element_frames(curve: PolygonalCurve) -> ElementFrames:
    """Unit tangent, unit normal and length of every element."""
    vec = curve.segment_vectors()
    length = np.linalg.norm(vec, axis=1)
    if np.any(length == 0.0):
        raise DegenerateMeshError("curve has a zero-length segment")
    tangent = vec / length[:, None]
    normal = np.stack([-tangent[:, 1], tangent[:, 0]], axis=1)
    return ElementFrames(tangent=tangent, normal=normal, length=length)


def vertex_normals(curve: PolygonalCurve,
                   frames: ElementFrames | None = None) -> VertexNormals:
    """Vertex normals reproducing the mass-lumped normal inner product.

    At interior nodes omega is the length-weighted average of the two
    adjacent element normals, which never exceeds unit length and reaches
    it exactly when the segments are parallel.  Open boundary nodes copy
    the single adjacent element normal.
    """
    if frames is None:
        frames = element_frames(curve)
    weighted = frames.normal * frames.length[:, None]
    n = curve.node_count
    omega = np.zeros((n, 2))
    if curve.is_periodic:
        sum_len = frames.length + np.roll(frames.length, 1)
        omega = (weighted + np.roll(weighted, 1, axis=0)) / sum_len[:, None]
        omega_partial = omega
    else:
        sum_len = np.zeros(n)
        sum_len[:-1] += frames.length
        sum_len[1:] += frames.length
        acc = np.zeros((n, 2))
        acc[:-1] += weighted
        acc[1:] += weighted
        omega = acc / sum_len[:, None]
        omega_partial = omega.copy()
        omega_partial[0, 0] = 0.0
        omega_partial[-1, 0] = 0.0
    return VertexNormals(omega=omega, omega_partial=omega_partial)


def mesh_ratio(curve: PolygonalCurve) -> float:
    """Longest over shortest segment length; 1 for an equidistributed curve."""
    lengths = curve.segment_lengths()
    shortest = lengths.min()
    if shortest == 0.0:
        raise DegenerateMeshError("curve has a zero-length segment")
    return float(lengths.max() / shortest)


def shape_stats(curve: PolygonalCurve) -> ShapeStats:
    """Mean center, mean radius and radial deviation of the node cloud."""
    center = curve.nodes.mean(axis=0)
    dist = np.linalg.norm(curve.nodes - center, axis=1)
    return ShapeStats(
        center=(float(center[0]), float(center[1])),
        mean_radius=float(dist.mean()),
        deviation=float(dist.max() / dist.min()),
        mesh_ratio=mesh_ratio(curve),
    )


def validate_state(curve: PolygonalCurve, thresholds: Thresholds) -> CurveCheck:
    """Check the curve against breakdown thresholds.

    Pinch-off means a node (interior node for open curves) dropped below
    the radial threshold; a degenerate mesh means a segment collapsed.
    """
    r = curve.nodes[:, 0]
    radial = r if curve.is_periodic else r[1:-1]
    if np.any(radial < thresholds.r_min):
        return CurveCheck.PINCH_OFF
    if np.any(curve.segment_lengths() < thresholds.len_min):
        return CurveCheck.DEGENERATE
    return CurveCheck.OK
