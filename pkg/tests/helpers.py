"""Shared test utilities: random valid states and stability checking."""

import numpy as np

import wilflow as wf
from wilflow.geometry import PolygonalCurve, Topology
from wilflow.initialization import bending_energy


def random_scheme_state(rng, periodic):
    """A random valid state: jittered circle/semicircle with a distinct
    previous curve and arbitrary nodal curvature data."""
    J = int(rng.integers(8, 20))
    if periodic:
        center_r = rng.uniform(2.0, 4.0)
        radius = rng.uniform(0.4, 1.2)
        ang = (0.25 - np.arange(J) / J) * 2 * np.pi
        ang += rng.uniform(-0.2, 0.2, J) * (2 * np.pi / J)
        rad = radius * (1.0 + 0.15 * rng.uniform(-1, 1, J))
        nodes = np.stack([center_r + rad * np.cos(ang), rad * np.sin(ang)], axis=1)
        curve = PolygonalCurve(Topology.PERIODIC, nodes)
    else:
        ang = (0.5 - np.arange(J + 1) / J) * np.pi
        ang[1:-1] += rng.uniform(-0.2, 0.2, J - 1) * (np.pi / J)
        rad = 1.0 + 0.15 * rng.uniform(-1, 1, J + 1)
        nodes = np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=1)
        nodes[0] = (0.0, rad[0])
        nodes[-1] = (0.0, -rad[-1])
        curve = PolygonalCurve(Topology.OPEN, nodes)
    scale = np.abs(curve.nodes).max()
    prev_nodes = curve.nodes + 0.02 * scale * rng.standard_normal(curve.nodes.shape)
    if not periodic:
        prev_nodes[0, 0] = 0.0
        prev_nodes[-1, 0] = 0.0
    else:
        prev_nodes[:, 0] = np.maximum(prev_nodes[:, 0], 0.1)
    prev = PolygonalCurve(curve.topology, prev_nodes)
    n = curve.node_count
    return wf.SchemeState(
        curve=curve,
        curve_prev=prev,
        mean_curv=1.5 * rng.standard_normal(n),
        inplane_curv=1.5 * rng.standard_normal(n),
        time=0.0,
        step_index=1,
    )


def stability_slack(state, kbar, dt, scheme, picard_max=200):
    """Run one step and return (new_state, inequality slack).

    The slack is E_prev - (E_new + dissipation) for the pairing of the
    given scheme; the stability estimate guarantees it is nonnegative up
    to roundoff.
    """
    if scheme == "linear":
        energy_prev = bending_energy(state.curve_prev, state.mean_curv, kbar)
        new_state, report = wf.step_linear(state, kbar, dt)
        lhs = report.energy_linear + report.dissipation
    else:
        energy_prev = bending_energy(state.curve, state.mean_curv, kbar)
        new_state, report = wf.step_nonlinear(state, kbar, dt, max_iters=picard_max)
        lhs = report.energy_nonlinear + report.dissipation
    return new_state, energy_prev - lhs, energy_prev


def evolve_checking_stability(state, kbar, dt, scheme, steps, thresholds=None):
    """Evolve up to ``steps`` steps, asserting the energy inequality at
    each accepted step; stops early if the state becomes invalid."""
    if thresholds is None:
        thresholds = wf.Thresholds(r_min=1e-9, len_min=1e-12)
    taken = 0
    for _ in range(steps):
        if wf.validate_state(state.curve, thresholds) is not wf.CurveCheck.OK:
            break
        try:
            state, slack, energy_prev = stability_slack(state, kbar, dt, scheme)
        except wf.schemes.DegenerateStepError:
            break
        assert slack >= -1e-9 * max(1.0, energy_prev), (
            f"stability violated: slack={slack:.3e} at step {taken} "
            f"(scheme={scheme}, dt={dt})")
        taken += 1
    return taken
