"""Time stepping for axisymmetric Willmore flow with spontaneous curvature.

Two unconditionally energy-stable fully discrete schemes evolve the
generating curve.  Both first solve a linear block for the normal
velocity and the new mean curvature, then a second block for the new
node positions and in-plane curvature; the second block's mass lumping
induces the tangential motion that equidistributes the mesh.

The linear scheme weights the old mean curvature by the square root of
the metric ratio between the two previous curves, which makes a single
linear solve per step unconditionally stable.  The nonlinear scheme
keeps the new-time geometric factors and is solved by Picard sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._assembly import (
    SIGNS,
    STIFF_PATTERN,
    TABLES_G2,
    TABLES_G3,
    BlockAssembler,
    CurveGeometry,
    gauss_values,
    load_local,
    mass_local,
    solve_position_curvature,
)
from .geometry import (
    CurveCheck,
    PolygonalCurve,
    Thresholds,
    build_curve,
    mesh_ratio,
    shape_stats,
    validate_state,
)
from .initialization import InitialData, bending_energy, flow_dissipation, initial_data
from .solver import ExactSingularError


class WellPosednessViolation(RuntimeError):
    """A scheme block was singular; the vertex normals degenerate
    (vanishing, axis-aligned at a pole, or globally one-dimensional)."""


class PicardDivergence(RuntimeError):
    """The Picard sweeps for the nonlinear scheme did not converge."""


class DegenerateStepError(RuntimeError):
    """The step produced non-evaluable geometry (nonpositive metric ratio)."""


@dataclass(frozen=True)
class SchemeState:
    """Everything one step needs: the two most recent curves, the nodal
    mean and in-plane curvature, and the clock."""

    curve: PolygonalCurve
    curve_prev: PolygonalCurve
    mean_curv: np.ndarray
    inplane_curv: np.ndarray
    time: float
    step_index: int

    def __post_init__(self):
        if (self.curve.topology is not self.curve_prev.topology
                or self.curve.node_count != self.curve_prev.node_count):
            raise ValueError("current and previous curves must share the mesh")
        n = self.curve.node_count
        if len(self.mean_curv) != n or len(self.inplane_curv) != n:
            raise ValueError("nodal field size does not match the curve")


@dataclass(frozen=True)
class StepReport:
    """Per-step diagnostics.

    ``energy_linear`` pairs the new mean curvature with the old curve,
    ``energy_nonlinear`` with the new curve; each scheme's stability
    inequality telescopes over its own pairing.  The velocity-gradient
    and radial-rate maxima are monitoring quantities only.
    """

    velocity: np.ndarray
    energy_linear: float
    energy_nonlinear: float
    dissipation: float
    picard_iters: int
    residuals: tuple[float, float]
    velocity_gradient_max: float
    velocity_radial_rate_max: float


def initial_state(data: InitialData, time: float = 0.0) -> SchemeState:
    """State at step zero; the previous curve duplicates the current one
    so the first metric ratio is identically one."""
    return SchemeState(
        curve=data.curve,
        curve_prev=data.curve,
        mean_curv=np.asarray(data.mean_curv, dtype=float),
        inplane_curv=np.asarray(data.inplane_curv, dtype=float),
        time=time,
        step_index=0,
    )


def sqrt_metric_ratio(curve: PolygonalCurve, curve_prev: PolygonalCurve,
                      tables=TABLES_G2) -> np.ndarray:
    """Square root of the ratio of weighted metric factors r |X_rho|
    between the previous and the current curve, evaluated at the
    quadrature points of each element (shape (J, G))."""
    geom = CurveGeometry(curve)
    geom_prev = CurveGeometry(curve_prev)
    r_cur = gauss_values(geom.r_p, geom.r_q, tables) * geom.length[:, None]
    r_prev = gauss_values(geom_prev.r_p, geom_prev.r_q, tables) * geom_prev.length[:, None]
    ratio = r_prev / r_cur
    if not np.all(ratio > 0.0):
        raise DegenerateStepError("nonpositive metric ratio between consecutive curves")
    return np.sqrt(ratio)


# --- first block: normal velocity and mean curvature ----------------------

def _common_block1(geom: CurveGeometry, inplane_curv: np.ndarray,
                   mean_curv: np.ndarray, kbar: float):
    """Assemble the parts shared by both schemes; returns the assembler
    plus the Gauss-point data reused by the scheme-specific terms."""
    asm = BlockAssembler(geom.nnodes, 2, geom.periodic)
    length = geom.length
    nu_r = geom.nu[:, 0]
    r_gp = gauss_values(geom.r_p, geom.r_q, TABLES_G3)
    kap_p, kap_q = geom.elem_ends(inplane_curv)
    kap_gp = gauss_values(kap_p, kap_q, TABLES_G3)
    vk_p, vk_q = geom.elem_ends(mean_curv)
    vk_gp = gauss_values(vk_p, vk_q, TABLES_G3)
    quad_gp = r_gp * (vk_gp + kbar) * vk_gp

    stiff = (0.5 * (geom.r_p + geom.r_q) / length)[:, None, None] * STIFF_PATTERN
    zeta_loc = mass_local(kap_gp, 2.0 * length * nu_r, TABLES_G3)
    quad_loc = mass_local(quad_gp, 0.5 * length, TABLES_G3)

    asm.add_element_pair(0, 0, mass_local(r_gp, length, TABLES_G3))
    asm.add_element_pair(0, 1, -stiff + zeta_loc + quad_loc)
    asm.add_rhs_element(0, kbar * (
        load_local(kap_gp, 2.0 * length * nu_r, TABLES_G3)
        + load_local(quad_gp, 0.5 * length, TABLES_G3)))

    asm.add_element_pair(1, 0, stiff - zeta_loc - quad_loc)
    return asm, r_gp, vk_gp


def _add_convective(asm: BlockAssembler, geom: CurveGeometry,
                    displacement: np.ndarray, dt: float, kbar: float) -> None:
    """Antisymmetrized transport of the mean-curvature deviation by the
    tangential velocity; the parameterization measure cancels."""
    d_p, d_q = geom.elem_ends(displacement)
    c_p = np.einsum("ij,ij->i", d_p, geom.tau) / dt
    c_q = np.einsum("ij,ij->i", d_q, geom.tau) / dt
    rc_gp = gauss_values(geom.r_p, geom.r_q, TABLES_G3) * gauss_values(c_p, c_q, TABLES_G3)
    moments = np.stack([rc_gp @ TABLES_G3.w_shape[a] for a in range(2)], axis=1)
    nelem = geom.nelem
    loc = np.empty((nelem, 2, 2))
    for a in range(2):
        for b in range(2):
            loc[:, a, b] = 0.5 * (SIGNS[a] * moments[:, b] - SIGNS[b] * moments[:, a])
    asm.add_element_pair(1, 1, loc)
    total = rc_gp @ TABLES_G3.w
    asm.add_rhs_element(1, 0.5 * kbar * np.multiply.outer(total, SIGNS))


def _solve_block1(asm: BlockAssembler) -> tuple[np.ndarray, np.ndarray, float]:
    try:
        x, residual = asm.system.solve()
    except ExactSingularError as exc:
        raise WellPosednessViolation(
            "velocity/mean-curvature block is singular; the discrete "
            f"well-posedness conditions on the vertex normals fail ({exc})"
        ) from exc
    return x[0::2], x[1::2], residual


def _velocity_curvature_linear(geom: CurveGeometry, state: SchemeState,
                               kbar: float, dt: float):
    asm, r_gp, _ = _common_block1(geom, state.inplane_curv, state.mean_curv, kbar)
    sqrt_ratio = sqrt_metric_ratio(state.curve, state.curve_prev)
    r_gp2 = gauss_values(geom.r_p, geom.r_q, TABLES_G2)
    vk_p, vk_q = geom.elem_ends(state.mean_curv)
    vk_gp2 = gauss_values(vk_p, vk_q, TABLES_G2)
    scale = geom.length / dt
    asm.add_element_pair(1, 1, mass_local(r_gp2, scale, TABLES_G2))
    asm.add_rhs_element(1, load_local(
        r_gp2 * (kbar + (vk_gp2 - kbar) * sqrt_ratio), scale, TABLES_G2))
    _add_convective(asm, geom, state.curve.nodes - state.curve_prev.nodes, dt, kbar)
    return _solve_block1(asm)


def _velocity_curvature_picard(geom: CurveGeometry, state: SchemeState,
                               lagged_nodes: np.ndarray, kbar: float, dt: float):
    asm, r_gp, vk_gp = _common_block1(geom, state.inplane_curv, state.mean_curv, kbar)
    scale = geom.length / dt
    asm.add_element_pair(1, 1, mass_local(r_gp, scale, TABLES_G3))
    asm.add_rhs_element(1, load_local(r_gp * vk_gp, scale, TABLES_G3))

    delta = lagged_nodes - state.curve.nodes
    d_p, d_q = geom.elem_ends(delta)
    lag_p, lag_q = geom.elem_ends(lagged_nodes)
    lag_vec = lag_q - lag_p
    lag_len = np.linalg.norm(lag_vec, axis=1)
    # radial stretching rate of the lagged update
    dr_gp = gauss_values(d_p[:, 0], d_q[:, 0], TABLES_G3)
    scale2 = 0.5 * lag_len / dt
    asm.add_element_pair(1, 1, mass_local(dr_gp, scale2, TABLES_G3))
    asm.add_rhs_element(1, kbar * load_local(dr_gp, scale2, TABLES_G3))
    # metric stretching rate of the lagged update
    beta = 0.5 * np.einsum("ij,ij->i", d_q - d_p, lag_vec) / (geom.length * dt)
    asm.add_element_pair(1, 1, mass_local(r_gp, beta, TABLES_G3))
    asm.add_rhs_element(1, kbar * load_local(r_gp, beta, TABLES_G3))

    _add_convective(asm, geom, delta, dt, kbar)
    return _solve_block1(asm)


# --- second block: positions and in-plane curvature -----------------------

def _advance_positions(geom: CurveGeometry, anchor_nodes: np.ndarray,
                       velocity: np.ndarray, dt: float):
    v_p, v_q = geom.elem_ends(velocity)
    v_gp = gauss_values(v_p, v_q, TABLES_G3)
    loads = load_local(v_gp, dt * geom.length, TABLES_G3)
    rhs_c = (np.einsum("ij,ij->i", geom.weighted_normal, anchor_nodes)
             + geom.accumulate_loads(loads))
    try:
        return solve_position_curvature(geom, rhs_c)
    except ExactSingularError as exc:
        raise WellPosednessViolation(
            "position/curvature block is singular; the discrete "
            f"well-posedness conditions on the vertex normals fail ({exc})"
        ) from exc


def _monitor_velocity(geom: CurveGeometry, new_nodes: np.ndarray,
                      old_nodes: np.ndarray, dt: float,
                      periodic: bool) -> tuple[float, float]:
    vel = (new_nodes - old_nodes) / dt
    v_p, v_q = geom.elem_ends(vel)
    grad = np.linalg.norm(v_q - v_p, axis=1) / geom.length
    r = old_nodes[:, 0]
    if periodic:
        rate = np.abs(vel[:, 0]) / r
    else:
        rate = np.abs(vel[1:-1, 0]) / r[1:-1]
    return float(grad.max()), float(rate.max(initial=0.0))


def _advanced_state(state: SchemeState, nodes: np.ndarray, mean_curv: np.ndarray,
                    inplane_curv: np.ndarray, dt: float) -> SchemeState:
    return SchemeState(
        curve=state.curve.with_nodes(nodes),
        curve_prev=state.curve,
        mean_curv=mean_curv,
        inplane_curv=inplane_curv,
        time=state.time + dt,
        step_index=state.step_index + 1,
    )


def step_linear(state: SchemeState, kbar: float, dt: float) -> tuple[SchemeState, StepReport]:
    """One step of the linear scheme: two decoupled banded solves."""
    geom = CurveGeometry(state.curve)
    velocity, mean_new, res1 = _velocity_curvature_linear(geom, state, kbar, dt)
    nodes_new, inplane_new, res2 = _advance_positions(geom, state.curve.nodes, velocity, dt)
    new_state = _advanced_state(state, nodes_new, mean_new, inplane_new, dt)
    grad_max, rate_max = _monitor_velocity(geom, nodes_new, state.curve.nodes, dt,
                                           state.curve.is_periodic)
    report = StepReport(
        velocity=velocity,
        energy_linear=bending_energy(state.curve, mean_new, kbar),
        energy_nonlinear=bending_energy(new_state.curve, mean_new, kbar),
        dissipation=flow_dissipation(state.curve, velocity, dt),
        picard_iters=0,
        residuals=(res1, res2),
        velocity_gradient_max=grad_max,
        velocity_radial_rate_max=rate_max,
    )
    return new_state, report


def step_nonlinear(state: SchemeState, kbar: float, dt: float,
                   tol: float = 1e-10, max_iters: int = 100) -> tuple[SchemeState, StepReport]:
    """One step of the nonlinear scheme via Picard sweeps.

    Every new-time geometric factor is lagged to the previous sweep; the
    sweep stops once the nodal positions and mean curvature change by at
    most ``tol`` in the maximum norm.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    geom = CurveGeometry(state.curve)
    lagged_nodes = state.curve.nodes
    lagged_mean = state.mean_curv
    velocity = np.zeros(state.curve.node_count)
    mean_new = lagged_mean
    nodes_new = lagged_nodes
    inplane_new = state.inplane_curv
    res1_max = 0.0
    res2_max = 0.0
    iters = 0
    converged = False
    for _ in range(max_iters):
        iters += 1
        velocity, mean_new, res1 = _velocity_curvature_picard(
            geom, state, lagged_nodes, kbar, dt)
        nodes_new, inplane_new, res2 = _advance_positions(
            geom, state.curve.nodes, velocity, dt)
        res1_max = max(res1_max, res1)
        res2_max = max(res2_max, res2)
        delta = max(
            float(np.linalg.norm(nodes_new - lagged_nodes, axis=1).max()),
            float(np.abs(mean_new - lagged_mean).max()),
        )
        lagged_nodes = nodes_new
        lagged_mean = mean_new
        if not np.isfinite(delta):
            raise PicardDivergence(f"sweep diverged after {iters} iterations")
        if delta <= tol:
            converged = True
            break
    if not converged:
        raise PicardDivergence(
            f"no convergence within {max_iters} sweeps (last update {delta:.3e})")
    new_state = _advanced_state(state, nodes_new, mean_new, inplane_new, dt)
    grad_max, rate_max = _monitor_velocity(geom, nodes_new, state.curve.nodes, dt,
                                           state.curve.is_periodic)
    report = StepReport(
        velocity=velocity,
        energy_linear=bending_energy(state.curve, mean_new, kbar),
        energy_nonlinear=bending_energy(new_state.curve, mean_new, kbar),
        dissipation=flow_dissipation(state.curve, velocity, dt),
        picard_iters=iters,
        residuals=(res1_max, res2_max),
        velocity_gradient_max=grad_max,
        velocity_radial_rate_max=rate_max,
    )
    return new_state, report


# --- simulation loop -------------------------------------------------------

@dataclass
class Snapshot:
    time: float
    curve: PolygonalCurve
    mean_curv: np.ndarray
    inplane_curv: np.ndarray
    velocity: np.ndarray


@dataclass
class TrajectorySample:
    time: float
    nodes: np.ndarray
    mean_curv: np.ndarray


@dataclass
class DiagnosticsSeries:
    """Per-step scalars; the energy column is the scheme energy whose
    telescoping the stability estimate guarantees."""

    step: np.ndarray
    t: np.ndarray
    energy: np.ndarray
    dissipation: np.ndarray
    mesh_ratio: np.ndarray
    min_r: np.ndarray
    max_V: np.ndarray
    picard_iters: np.ndarray
    residual: np.ndarray


@dataclass
class RunOutput:
    config: object
    diagnostics: DiagnosticsSeries
    snapshots: list[Snapshot]
    termination: str
    termination_time: float
    final_stats: object
    final_state: SchemeState
    trajectory: list[TrajectorySample] | None


def _min_radius(curve: PolygonalCurve) -> float:
    r = curve.nodes[:, 0]
    return float(r.min() if curve.is_periodic else r[1:-1].min())


def run_simulation(config) -> RunOutput:
    """Build initial data and march the configured scheme to the final
    time, stopping early on pinch-off, mesh degeneracy or solver failure."""
    start = build_curve(config.shape, config.J, config.eps)
    data = initial_data(start)
    state = initial_state(data)
    kbar = config.kbar
    dt = config.dt
    nsteps = int(round(config.T / dt))
    thresholds = config.thresholds
    if thresholds is None:
        thresholds = Thresholds.from_initial_curve(data.curve)

    snapshot_steps = {}
    for ts in config.snapshot_times:
        snapshot_steps.setdefault(int(round(ts / dt)), ts)

    rows = {name: [] for name in ("step", "t", "energy", "dissipation", "mesh_ratio",
                                  "min_r", "max_V", "picard_iters", "residual")}

    def record(step, t, energy, dissipation, ratio, min_r, max_v, picard, residual):
        rows["step"].append(step)
        rows["t"].append(t)
        rows["energy"].append(energy)
        rows["dissipation"].append(dissipation)
        rows["mesh_ratio"].append(ratio)
        rows["min_r"].append(min_r)
        rows["max_V"].append(max_v)
        rows["picard_iters"].append(picard)
        rows["residual"].append(residual)

    energy0 = bending_energy(state.curve, state.mean_curv, kbar)
    record(0, 0.0, energy0, 0.0, mesh_ratio(state.curve), _min_radius(state.curve),
           0.0, 0, 0.0)

    snapshots = []
    zero_vel = np.zeros(state.curve.node_count)
    if 0 in snapshot_steps:
        snapshots.append(Snapshot(0.0, state.curve, state.mean_curv.copy(),
                                  state.inplane_curv.copy(), zero_vel))

    trajectory = None
    if config.record_trajectory:
        trajectory = [TrajectorySample(0.0, state.curve.nodes, state.mean_curv.copy())]

    termination = "completed"
    termination_time = nsteps * dt

    check = validate_state(state.curve, thresholds)
    if check is not CurveCheck.OK:
        termination = check.value
        termination_time = 0.0
        nsteps = 0

    for m in range(nsteps):
        try:
            if config.scheme == "linear":
                state, report = step_linear(state, kbar, dt)
            else:
                state, report = step_nonlinear(state, kbar, dt,
                                               tol=config.picard_tol,
                                               max_iters=config.picard_max)
        except PicardDivergence:
            termination = "picard_divergence"
            termination_time = state.time
            break
        except WellPosednessViolation:
            termination = "well_posedness_violation"
            termination_time = state.time
            break
        except DegenerateStepError:
            termination = "degenerate"
            termination_time = state.time
            break

        energy = (report.energy_linear if config.scheme == "linear"
                  else report.energy_nonlinear)
        record(m + 1, state.time, energy, report.dissipation,
               mesh_ratio(state.curve), _min_radius(state.curve),
               float(np.abs(report.velocity).max()), report.picard_iters,
               max(report.residuals))
        if m + 1 in snapshot_steps:
            snapshots.append(Snapshot(state.time, state.curve, state.mean_curv.copy(),
                                      state.inplane_curv.copy(), report.velocity.copy()))
        if trajectory is not None:
            trajectory.append(TrajectorySample(state.time, state.curve.nodes,
                                               state.mean_curv.copy()))

        check = validate_state(state.curve, thresholds)
        if check is not CurveCheck.OK:
            termination = check.value
            termination_time = state.time
            break

    diagnostics = DiagnosticsSeries(**{k: np.asarray(v) for k, v in rows.items()})
    return RunOutput(
        config=config,
        diagnostics=diagnostics,
        snapshots=snapshots,
        termination=termination,
        termination_time=termination_time,
        final_stats=shape_stats(state.curve),
        final_state=state,
        trajectory=trajectory,
    )
