"""Exact solutions, error norms and convergence studies.

A sphere evolving under the flow has an exactly known radius history,
obtained from an implicit algebraic relation; the circle generating the
energy-minimizing torus is stationary.  Errors of a run against these
references, the area of the symmetric difference between a polygon and
a circle, and the convergence-order tables are computed here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import RunConfig
from .geometry import PolygonalCurve, Semicircle, TorusCircle
from .schemes import RunOutput, run_simulation

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class SphereExact:
    """Parameters of the exactly solvable expanding/shrinking sphere."""

    kbar: float
    r0: float


@dataclass(frozen=True)
class ErrorTriple:
    """Sup-over-time errors of one run: positions, mean curvature, energy."""

    x_err: float
    varkappa_err: float
    energy_err: float


def sphere_radius(t: float, params: SphereExact) -> float:
    """Radius at time t of a sphere evolving under the flow.

    For kbar = 0 every sphere is stationary.  Otherwise the shifted
    radius z = r + 2/kbar satisfies an implicit relation that is solved
    by a bisection-safeguarded Newton iteration, bracketing z between
    its initial and fixed-point values; the residual of the returned
    root is below 1e-13.
    """
    if t < 0:
        raise ValueError("time must be nonnegative")
    kb = params.kbar
    if kb == 0.0 or t == 0.0:
        return params.r0
    z0 = params.r0 + 2.0 / kb
    if z0 == 0.0:
        return params.r0  # started at the stationary radius -2/kbar

    def residual(z):
        return (0.5 * (z * z - z0 * z0) - (4.0 / kb) * (z - z0)
                + (4.0 / kb ** 2) * math.log(z / z0) + kb * kb * t)

    def derivative(z):
        return z - 4.0 / kb + 4.0 / (kb * kb * z)

    # z moves monotonically from z0 toward the fixed point z = 0 without
    # reaching it; residual(z0) = kbar^2 t > 0 and the residual drops to
    # -inf at the logarithmic singularity, so halving toward zero brackets
    # the unique root.
    inner = z0
    for _ in range(2000):
        inner *= 0.5
        if residual(inner) < 0.0:
            break
    else:
        raise ValueError("no bracket for the radius relation (invalid parameters)")
    pos, neg = z0, inner  # residual(pos) > 0 > residual(neg)
    z = 0.5 * (pos + neg)
    for _ in range(200):
        f = residual(z)
        if abs(f) <= 1e-13:
            break
        if f > 0.0:
            pos = z
        else:
            neg = z
        df = derivative(z)
        z_newton = z - f / df if df != 0.0 else math.inf
        lo, hi = min(pos, neg), max(pos, neg)
        z = z_newton if lo < z_newton < hi else 0.5 * (pos + neg)
    return z - 2.0 / kb


def sphere_mean_curvature(t: float, params: SphereExact) -> float:
    return -2.0 / sphere_radius(t, params)


def sphere_energy(t: float, params: SphereExact) -> float:
    """Exact bending energy of the evolving sphere."""
    r = sphere_radius(t, params)
    dev = -2.0 / r - params.kbar
    return 2.0 * math.pi * r * r * dev * dev


def sphere_errors(run: RunOutput, exact: SphereExact) -> ErrorTriple:
    """Sup-norm errors of a sphere run against the exact radius history.

    Uses the per-step trajectory (node positions and nodal mean
    curvature) together with the recorded scheme energy; the supremum
    runs over all steps after the initial one.
    """
    if run.trajectory is None:
        raise ValueError("run was not recorded with a trajectory")
    x_err = 0.0
    vk_err = 0.0
    e_err = 0.0
    energies = run.diagnostics.energy
    for m, sample in enumerate(run.trajectory):
        if m == 0:
            continue
        r_exact = sphere_radius(sample.time, exact)
        radii = np.linalg.norm(sample.nodes, axis=1)
        x_err = max(x_err, float(np.abs(radii - r_exact).max()))
        vk_err = max(vk_err, float(np.abs(sample.mean_curv + 2.0 / r_exact).max()))
        e_err = max(e_err, abs(energies[m] - sphere_energy(sample.time, exact)))
    return ErrorTriple(x_err=x_err, varkappa_err=vk_err, energy_err=e_err)


def torus_position_error(run: RunOutput, center=(SQRT2, 0.0), radius: float = 1.0) -> float:
    """Sup over steps and nodes of the radial deviation from the
    stationary circle generating the energy-minimizing torus."""
    if run.trajectory is None:
        raise ValueError("run was not recorded with a trajectory")
    c = np.asarray(center)
    worst = 0.0
    for m, sample in enumerate(run.trajectory):
        if m == 0:
            continue
        dist = np.linalg.norm(sample.nodes - c, axis=1)
        worst = max(worst, float(np.abs(dist - radius).max()))
    return worst


def manifold_distance(poly: PolygonalCurve, center, radius: float) -> float:
    """Area of the symmetric difference between the region enclosed by a
    closed polygon and a disk.

    The polygon must be star-shaped about the disk center (every ray
    from the center crosses it exactly once).  Each edge is split at its
    intersections with the circle, and the enclosed-area difference is
    integrated arc by arc in closed form, so the result is exact up to
    the root tolerance of the edge/circle intersections.
    """
    if not poly.is_periodic:
        raise ValueError("manifold distance needs a closed (periodic) polygon")
    if radius <= 0:
        raise ValueError("radius must be positive")
    c = np.asarray(center, dtype=float)
    pts = poly.nodes - c
    cross = pts[:, 0] * np.roll(pts[:, 1], -1) - np.roll(pts[:, 0], -1) * pts[:, 1]
    if np.all(cross < 0):
        pts = pts[::-1]
        cross = -cross
    elif not np.all(cross > 0):
        raise ValueError("polygon is not star-shaped about the given center")
    angles = np.arctan2(pts[:, 1], pts[:, 0])
    turns = np.diff(np.concatenate([angles, angles[:1]]))
    turns = np.mod(turns, 2.0 * np.pi)
    if abs(turns.sum() - 2.0 * np.pi) > 1e-9:
        raise ValueError("polygon does not wind exactly once about the center")

    r2 = radius * radius
    total = 0.0
    n = len(pts)
    for i in range(n):
        a = pts[i]
        b = pts[(i + 1) % n]
        d = b - a
        # |a + s d|^2 = r^2 as a quadratic in s
        qa = d @ d
        qb = 2.0 * (a @ d)
        qc = a @ a - r2
        splits = [0.0, 1.0]
        disc = qb * qb - 4.0 * qa * qc
        if disc > 0.0:
            sq = math.sqrt(disc)
            for root in ((-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)):
                if 1e-13 < root < 1.0 - 1e-13:
                    splits.append(root)
        splits.sort()
        for s0, s1 in zip(splits[:-1], splits[1:]):
            p0 = a + s0 * d
            p1 = a + s1 * d
            tri = 0.5 * (p0[0] * p1[1] - p1[0] * p0[1])
            dtheta = math.atan2(p0[0] * p1[1] - p1[0] * p0[1], p0 @ p1)
            total += abs(tri - 0.5 * r2 * dtheta)
    return total


def eoc(errors, h) -> list[float]:
    """Experimental orders of convergence of an error sequence.

    Entry k compares levels k-1 and k; a zero error yields NaN (exact).
    """
    if len(errors) != len(h) or len(errors) < 2:
        raise ValueError("need matching sequences of length at least 2")
    if any(e < 0 for e in errors):
        raise ValueError("errors must be nonnegative")
    if any(h2 >= h1 for h1, h2 in zip(h[:-1], h[1:])):
        raise ValueError("h must be strictly decreasing")
    orders = []
    for k in range(1, len(errors)):
        if errors[k] == 0.0 or errors[k - 1] == 0.0:
            orders.append(math.nan)
        else:
            orders.append(math.log(errors[k - 1] / errors[k]) / math.log(h[k - 1] / h[k]))
    return orders


# --- convergence studies ---------------------------------------------------

STUDY_KINDS = ("sphere-linear", "sphere-nonlinear", "torus")

BASE_J = 32
BASE_DT = 0.04
STUDY_T = 1.0
STUDY_EPS = 0.1


@dataclass(frozen=True)
class ConvergenceRow:
    level: int
    h: float
    dt: float
    errors: tuple[float, float, float]
    max_residual: float = 0.0
    max_picard: int = 0


@dataclass(frozen=True)
class ConvergenceTable:
    """Rows of a refinement study plus the labels of its error columns."""

    kind: str
    columns: tuple[str, str, str]
    rows: tuple[ConvergenceRow, ...]

    def error_matrix(self) -> np.ndarray:
        return np.array([row.errors for row in self.rows])

    def eoc_matrix(self) -> np.ndarray:
        """EOC per column; first row is NaN (no coarser level)."""
        errs = self.error_matrix()
        hs = [row.h for row in self.rows]
        out = np.full_like(errs, np.nan)
        if len(self.rows) >= 2:
            for col in range(errs.shape[1]):
                out[1:, col] = eoc(list(errs[:, col]), hs)
        return out


def study_config(kind: str, level: int) -> RunConfig:
    """Run configuration of one refinement level (h, dt) = (h0/2^k, dt0/4^k)."""
    if kind not in STUDY_KINDS:
        raise ValueError(f"unknown study kind {kind!r}")
    J = BASE_J * 2 ** level
    dt = BASE_DT / 4 ** level
    if kind == "torus":
        shape = TorusCircle(major_radius=SQRT2, minor_radius=1.0)
        kbar = 0.0
        scheme = "linear"
    else:
        shape = Semicircle(radius=1.0)
        kbar = -1.0
        scheme = "nonlinear" if kind == "sphere-nonlinear" else "linear"
    return RunConfig(shape=shape, kbar=kbar, J=J, dt=dt, T=STUDY_T, scheme=scheme,
                     eps=STUDY_EPS, record_trajectory=True)


def study_level(kind: str, level: int) -> ConvergenceRow:
    config = study_config(kind, level)
    run = run_simulation(config)
    if run.termination != "completed":
        raise RuntimeError(f"{kind} level {level} stopped early: {run.termination}")
    if kind == "torus":
        x_err = torus_position_error(run)
        md = manifold_distance(run.final_state.curve, (SQRT2, 0.0), 1.0)
        exact_energy = 4.0 * math.pi ** 2
        e_err = float(np.abs(run.diagnostics.energy[1:] - exact_energy).max())
        errors = (x_err, md, e_err)
    else:
        triple = sphere_errors(run, SphereExact(kbar=config.kbar, r0=1.0))
        errors = (triple.x_err, triple.varkappa_err, triple.energy_err)
    return ConvergenceRow(
        level=level, h=1.0 / config.J, dt=config.dt, errors=errors,
        max_residual=float(run.diagnostics.residual.max()),
        max_picard=int(run.diagnostics.picard_iters.max()),
    )


def convergence_study(kind: str, levels: int, max_workers: int | None = None) -> ConvergenceTable:
    """Run a refinement study and collect its error table.

    Levels are independent and may run concurrently; ``max_workers``
    caps the parallelism (1 disables it).
    """
    if kind not in STUDY_KINDS:
        raise ValueError(f"unknown study kind {kind!r}")
    if not 1 <= levels <= 5:
        raise ValueError("levels must be between 1 and 5 (desk scale)")
    columns = (("x_inf", "md", "energy_inf") if kind == "torus"
               else ("x_inf", "varkappa_inf", "energy_inf"))
    if max_workers is None or max_workers > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=max_workers or levels) as pool:
            rows = list(pool.map(lambda k: study_level(kind, k), range(levels)))
    else:
        rows = [study_level(kind, k) for k in range(levels)]
    return ConvergenceTable(kind=kind, columns=columns, rows=tuple(rows))
