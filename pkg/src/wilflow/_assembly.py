"""Vectorized element assembly into bordered band systems.

Internal plumbing shared by the initial-data projection and the time
stepping schemes.  Unknowns are interleaved per node so the nearest
neighbour coupling of piecewise-linear elements yields a constant small
bandwidth; on periodic curves the wrap-around element lands in the
corner blocks.
"""

from __future__ import annotations

import numpy as np

from .quadrature import GAUSS2, GAUSS3, QuadratureRule
from .solver import BorderedBandMatrix


class _RuleTables:
    """Shape-function samples and weight products of one Gauss rule."""

    def __init__(self, rule: QuadratureRule):
        t = rule.locations
        w = rule.weights
        self.t = t
        self.w = w
        self.shape = (1.0 - t, t)
        self.w_shape = tuple(w * n for n in self.shape)
        self.w_shape_shape = tuple(
            tuple(w * self.shape[a] * self.shape[b] for b in range(2))
            for a in range(2)
        )


TABLES_G2 = _RuleTables(GAUSS2)
TABLES_G3 = _RuleTables(GAUSS3)

# Sign of the shape-function derivative at the element ends (times h).
SIGNS = np.array([-1.0, 1.0])
STIFF_PATTERN = np.array([[1.0, -1.0], [-1.0, 1.0]])


def gauss_values(up: np.ndarray, uq: np.ndarray, tables: _RuleTables) -> np.ndarray:
    """Values of a per-element linear field at the rule points, (J, G)."""
    return np.multiply.outer(up, tables.shape[0]) + np.multiply.outer(uq, tables.shape[1])


def mass_local(factor: np.ndarray, scale: np.ndarray, tables: _RuleTables) -> np.ndarray:
    """Local 2x2 matrices of scale * integral(factor * N_a * N_b), (J, 2, 2)."""
    nelem = factor.shape[0]
    loc = np.empty((nelem, 2, 2))
    for a in range(2):
        for b in range(2):
            loc[:, a, b] = scale * (factor @ tables.w_shape_shape[a][b])
    return loc


def load_local(factor: np.ndarray, scale: np.ndarray, tables: _RuleTables) -> np.ndarray:
    """Local load vectors of scale * integral(factor * N_a), (J, 2)."""
    nelem = factor.shape[0]
    vec = np.empty((nelem, 2))
    for a in range(2):
        vec[:, a] = scale * (factor @ tables.w_shape[a])
    return vec


class BlockAssembler:
    """Assembles interleaved per-node fields into a BorderedBandMatrix."""

    def __init__(self, node_count: int, nfields: int, periodic: bool):
        self.nnodes = node_count
        self.nf = nfields
        self.periodic = periodic
        self.nelem = node_count if periodic else node_count - 1
        bw = 2 * nfields - 1
        corner = nfields if periodic else 0
        self.system = BorderedBandMatrix(node_count * nfields, bw, corner)

    def add_element_pair(self, fr: int, fc: int, loc: np.ndarray) -> None:
        """Scatter local matrices loc[e, a, b] coupling the row field fr at
        node e+a with the column field fc at node e+b."""
        nf = self.nf
        ab = self.system.ab
        bw = self.system.bw
        nslice = self.nelem - 1 if self.periodic else self.nelem
        for a in range(2):
            for b in range(2):
                d = (fr - fc) + nf * (a - b)
                col0 = fc + nf * b
                ab[bw + d, col0:col0 + nf * nslice:nf] += loc[:nslice, a, b]
        if self.periodic:
            e = self.nelem - 1
            ab[bw + fr - fc, fc + nf * e] += loc[e, 0, 0]
            self.system.bottom_left[fr, fc] += loc[e, 0, 1]
            self.system.top_right[fr, fc] += loc[e, 1, 0]
            ab[bw + fr - fc, fc] += loc[e, 1, 1]

    def add_node_diag(self, fr: int, fc: int, values: np.ndarray) -> None:
        self.system.ab[self.system.bw + fr - fc, fc::self.nf] += values

    def add_rhs_element(self, fr: int, vec: np.ndarray) -> None:
        nf = self.nf
        rhs = self.system.rhs
        nslice = self.nelem - 1 if self.periodic else self.nelem
        for a in range(2):
            start = fr + nf * a
            rhs[start:start + nf * nslice:nf] += vec[:nslice, a]
        if self.periodic:
            e = self.nelem - 1
            rhs[fr + nf * e] += vec[e, 0]
            rhs[fr] += vec[e, 1]

    def add_rhs_node(self, fr: int, values: np.ndarray) -> None:
        self.system.rhs[fr::self.nf] += values

    def apply_unit_constraint(self, dof: int) -> None:
        """Pin one scalar unknown to zero (row and column cleared, unit pivot)."""
        ab = self.system.ab
        bw = self.system.bw
        n = self.system.n
        ab[:, dof] = 0.0
        for off in range(-bw, bw + 1):
            j = dof + off
            if 0 <= j < n:
                ab[bw - off, j] = 0.0
        ab[bw, dof] = 1.0
        self.system.rhs[dof] = 0.0


class CurveGeometry:
    """Per-step cache of the element and vertex quantities of one curve."""

    def __init__(self, curve):
        from .geometry import DegenerateMeshError

        self.curve = curve
        self.periodic = curve.is_periodic
        self.nnodes = curve.node_count
        self.nelem = curve.element_count
        p, q = curve.endpoints()
        vec = q - p
        length = np.linalg.norm(vec, axis=1)
        if np.any(length == 0.0):
            raise DegenerateMeshError("curve has a zero-length segment")
        self.length = length
        self.tau = vec / length[:, None]
        self.nu = np.stack([-self.tau[:, 1], self.tau[:, 0]], axis=1)
        self.r_p = p[:, 0]
        self.r_q = q[:, 0]
        weighted = self.nu * length[:, None]
        if self.periodic:
            self.weighted_normal = 0.5 * (weighted + np.roll(weighted, 1, axis=0))
        else:
            acc = np.zeros((self.nnodes, 2))
            acc[:-1] += weighted
            acc[1:] += weighted
            self.weighted_normal = 0.5 * acc

    def elem_ends(self, nodal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.periodic:
            return nodal, np.roll(nodal, -1, axis=0)
        return nodal[:-1], nodal[1:]

    def accumulate_loads(self, vec: np.ndarray) -> np.ndarray:
        """Sum per-element load pairs vec[e, a] into nodal values."""
        out = np.zeros(self.nnodes)
        if self.periodic:
            out += vec[:, 0]
            out += np.roll(vec[:, 1], 1)
        else:
            out[:-1] += vec[:, 0]
            out[1:] += vec[:, 1]
        return out


def solve_position_curvature(geom: CurveGeometry, rhs_c: np.ndarray):
    """Solve the coupled position/curvature block on a reference geometry.

    Rows per node: the two components of the lumped curvature equation
    (with the radial component dropped at open boundary nodes, where the
    position is pinned to the axis) plus the lumped normal-motion row
    whose right-hand side ``rhs_c`` the caller provides.  Returns the new
    node coordinates, the nodal curvature and the solver residual.
    """
    asm = BlockAssembler(geom.nnodes, 3, geom.periodic)
    stiff = STIFF_PATTERN[None, :, :] / geom.length[:, None, None]
    asm.add_element_pair(0, 0, stiff)
    asm.add_element_pair(1, 1, stiff)
    wnorm = geom.weighted_normal
    asm.add_node_diag(0, 2, wnorm[:, 0])
    asm.add_node_diag(1, 2, wnorm[:, 1])
    asm.add_node_diag(2, 0, wnorm[:, 0])
    asm.add_node_diag(2, 1, wnorm[:, 1])
    asm.add_rhs_node(2, rhs_c)
    if not geom.periodic:
        asm.apply_unit_constraint(0)
        asm.apply_unit_constraint(3 * (geom.nnodes - 1))
    x, residual = asm.system.solve()
    nodes = np.stack([x[0::3], x[1::3]], axis=1)
    if not geom.periodic:
        nodes[0, 0] = 0.0
        nodes[-1, 0] = 0.0
    return nodes, x[2::3], residual
