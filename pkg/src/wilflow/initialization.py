"""Discrete initial data for the evolution schemes.

The initial shape is sampled nodally; a zero-normal-velocity projection
then shifts the nodes tangentially so that the discrete in-plane
curvature is consistent with the lumped curvature equation used by the
schemes.  The initial mean curvature combines that in-plane curvature
with the azimuthal curvature read off the vertex normals.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._assembly import TABLES_G3, CurveGeometry, gauss_values, solve_position_curvature
from .geometry import PolygonalCurve, VertexNormals, vertex_normals
from .solver import ExactSingularError


class InitializationError(RuntimeError):
    """The projection system could not be solved."""


@dataclass(frozen=True)
class InitialData:
    """Initial curve with nodal in-plane and mean curvature."""

    curve: PolygonalCurve
    inplane_curv: np.ndarray
    mean_curv: np.ndarray


def zero_velocity_projection(start: PolygonalCurve) -> tuple[PolygonalCurve, np.ndarray]:
    """Project a nodal curve onto curvature-consistent initial data.

    Solves the coupled linear system that moves each node only within
    the plane orthogonal to its vertex normal (zero normal velocity)
    while the nodal curvature satisfies the lumped curvature equation on
    the shifted curve.  Open boundary nodes stay pinned on the axis.
    Returns the shifted curve and the nodal in-plane curvature.
    """
    geom = CurveGeometry(start)
    rhs_c = np.einsum("ij,ij->i", geom.weighted_normal, start.nodes)
    try:
        nodes, kappa, residual = solve_position_curvature(geom, rhs_c)
    except ExactSingularError as exc:
        raise InitializationError(
            f"projection system is singular (degenerate vertex normals?): {exc}"
        ) from exc
    if residual > 1e-10:
        raise InitializationError(f"projection solve residual too large: {residual:g}")
    return start.with_nodes(nodes), kappa


def initial_mean_curvature(curve: PolygonalCurve, inplane_curv: np.ndarray,
                           normals: VertexNormals) -> np.ndarray:
    """Nodal mean curvature from in-plane curvature and vertex normals.

    At interior nodes the azimuthal contribution is -omega_r / r; at the
    poles of an open curve both principal curvatures coincide, so the
    mean curvature is twice the in-plane one.
    """
    r = curve.nodes[:, 0]
    omega_r = normals.omega[:, 0]
    mean = np.empty_like(inplane_curv)
    if curve.is_periodic:
        mean[:] = inplane_curv - omega_r / r
    else:
        mean[1:-1] = inplane_curv[1:-1] - omega_r[1:-1] / r[1:-1]
        mean[0] = 2.0 * inplane_curv[0]
        mean[-1] = 2.0 * inplane_curv[-1]
    return mean


def initial_data(start: PolygonalCurve) -> InitialData:
    """Full initial-data pipeline from a nodally sampled shape."""
    curve, kappa = zero_velocity_projection(start)
    normals = vertex_normals(curve)
    mean = initial_mean_curvature(curve, kappa, normals)
    return InitialData(curve=curve, inplane_curv=kappa, mean_curv=mean)


def bending_energy(curve: PolygonalCurve, mean_curv: np.ndarray, kbar: float) -> float:
    """Bending energy of the axisymmetric surface generated by the curve.

    pi times the integral of r (mean curvature - kbar)^2 over the curve;
    the cubic integrand per element is integrated exactly.
    """
    geom = CurveGeometry(curve)
    r_gp = gauss_values(geom.r_p, geom.r_q, TABLES_G3)
    vk_p, vk_q = geom.elem_ends(mean_curv)
    dev_gp = gauss_values(vk_p - kbar, vk_q - kbar, TABLES_G3)
    per_elem = (r_gp * dev_gp * dev_gp) @ TABLES_G3.w
    return float(np.pi * np.dot(geom.length, per_elem))


def flow_dissipation(curve: PolygonalCurve, velocity: np.ndarray, dt: float) -> float:
    """Weighted squared normal velocity entering the energy inequality."""
    geom = CurveGeometry(curve)
    r_gp = gauss_values(geom.r_p, geom.r_q, TABLES_G3)
    v_p, v_q = geom.elem_ends(velocity)
    v_gp = gauss_values(v_p, v_q, TABLES_G3)
    per_elem = (r_gp * v_gp * v_gp) @ TABLES_G3.w
    return float(2.0 * np.pi * dt * np.dot(geom.length, per_elem))
