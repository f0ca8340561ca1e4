"""Writers for run artifacts: diagnostics CSV, curve snapshots, meta JSON,
convergence tables and revolved surface meshes."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .analysis import ConvergenceTable
from .geometry import PolygonalCurve, Topology
from .schemes import RunOutput, Snapshot

FLOAT_FMT = "%.17g"


def _fmt(value: float) -> str:
    return FLOAT_FMT % value


def write_diagnostics_csv(run: RunOutput, path: Path) -> None:
    d = run.diagnostics
    lines = ["step,t,energy,mesh_ratio,min_r,max_V,picard_iters,residual"]
    for i in range(len(d.step)):
        lines.append(",".join([
            str(int(d.step[i])), _fmt(d.t[i]), _fmt(d.energy[i]),
            _fmt(d.mesh_ratio[i]), _fmt(d.min_r[i]), _fmt(d.max_V[i]),
            str(int(d.picard_iters[i])), _fmt(d.residual[i]),
        ]))
    path.write_text("\n".join(lines) + "\n")


def _time_tag(t: float) -> str:
    tag = ("%g" % t).replace("-", "m")
    return tag.replace(".", "p")


def write_snapshot_csv(snap: Snapshot, path: Path) -> None:
    curve = snap.curve
    rho = curve.node_positions()
    lines = ["j,rho,r,z,varkappa,kappa,V"]
    for j in range(curve.node_count):
        lines.append(",".join([
            str(j), _fmt(rho[j]), _fmt(curve.nodes[j, 0]), _fmt(curve.nodes[j, 1]),
            _fmt(snap.mean_curv[j]), _fmt(snap.inplane_curv[j]), _fmt(snap.velocity[j]),
        ]))
    path.write_text("\n".join(lines) + "\n")


def write_meta_json(run: RunOutput, path: Path) -> None:
    stats = run.final_stats
    meta = {
        "config": run.config.to_dict(),
        "termination": run.termination,
        "termination_time": run.termination_time,
        "final_stats": {
            "center": list(stats.center),
            "mean_radius": stats.mean_radius,
            "deviation": stats.deviation,
            "mesh_ratio": stats.mesh_ratio,
        },
    }
    path.write_text(json.dumps(meta, indent=1) + "\n")


def write_run_outputs(run: RunOutput, out_dir: Path, export_obj: bool = False) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    write_diagnostics_csv(run, out_dir / "diagnostics.csv")
    for snap in run.snapshots:
        tag = _time_tag(snap.time)
        write_snapshot_csv(snap, out_dir / f"curve_t{tag}.csv")
        if export_obj:
            export_surface_obj(snap.curve, run.config.obj_azimuthal_segments,
                               out_dir / f"surface_t{tag}.obj")
    write_meta_json(run, out_dir / "meta.json")


def read_snapshot_curve(path: Path) -> PolygonalCurve:
    """Rebuild a curve from a snapshot CSV; the topology is inferred from
    the last rho value (1 for open curves, 1 - h for periodic ones)."""
    rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    rho = rows[:, 1]
    nodes = rows[:, 2:4]
    h = rho[1] - rho[0]
    topology = Topology.OPEN if rho[-1] > 1.0 - 0.5 * h else Topology.PERIODIC
    return PolygonalCurve(topology, nodes)


# --- surface export --------------------------------------------------------

def export_surface_obj(curve: PolygonalCurve, segments: int, path: Path) -> None:
    """Revolve the generating curve about the axis into a triangle/quad
    mesh in OBJ format.

    The profile's (r, z) plane revolves to (r cos a, z, r sin a).  Axis
    nodes of open curves become pole vertices with triangle fans, so the
    mesh is watertight: genus 0 for open curves, genus 1 for periodic.
    """
    if segments < 3:
        raise ValueError("need at least 3 azimuthal segments")
    ang = 2.0 * np.pi * np.arange(segments) / segments
    cos_a, sin_a = np.cos(ang), np.sin(ang)

    verts: list[tuple[float, float, float]] = []
    faces: list[tuple[int, ...]] = []

    def ring(r, z):
        base = len(verts) + 1  # OBJ indices are 1-based
        for k in range(segments):
            verts.append((r * cos_a[k], z, r * sin_a[k]))
        return base

    def quad_band(ring_a, ring_b):
        for k in range(segments):
            k1 = (k + 1) % segments
            faces.append((ring_a + k, ring_a + k1, ring_b + k1, ring_b + k))

    if curve.is_periodic:
        rings = [ring(r, z) for r, z in curve.nodes]
        for i in range(len(rings)):
            quad_band(rings[i], rings[(i + 1) % len(rings)])
    else:
        interior = curve.nodes[1:-1]
        rings = [ring(r, z) for r, z in interior]
        verts.append((0.0, curve.nodes[0, 1], 0.0))
        pole_top = len(verts)
        verts.append((0.0, curve.nodes[-1, 1], 0.0))
        pole_bottom = len(verts)
        for k in range(segments):
            k1 = (k + 1) % segments
            faces.append((pole_top, rings[0] + k1, rings[0] + k))
        for i in range(len(rings) - 1):
            quad_band(rings[i], rings[i + 1])
        last = rings[-1]
        for k in range(segments):
            k1 = (k + 1) % segments
            faces.append((pole_bottom, last + k, last + k1))

    lines = [f"v {_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in verts]
    lines += ["f " + " ".join(str(i) for i in face) for face in faces]
    path.write_text("\n".join(lines) + "\n")


# --- convergence tables ----------------------------------------------------

def table_csv_lines(table: ConvergenceTable) -> list[str]:
    cols = table.columns
    header = ["level", "J", "h", "dt"]
    for name in cols:
        header += [name, f"eoc_{name}"]
    lines = [",".join(header)]
    eocs = table.eoc_matrix()
    for i, row in enumerate(table.rows):
        cells = [str(row.level), str(int(round(1.0 / row.h))), _fmt(row.h), _fmt(row.dt)]
        for c in range(3):
            cells.append(_fmt(row.errors[c]))
            cells.append("" if math.isnan(eocs[i, c]) else _fmt(eocs[i, c]))
        lines.append(",".join(cells))
    return lines


def table_text_lines(table: ConvergenceTable) -> list[str]:
    cols = table.columns
    header = ["(h, dt)"]
    for name in cols:
        header += [name, "EOC"]
    rows_txt = [header]
    eocs = table.eoc_matrix()
    for i, row in enumerate(table.rows):
        cells = [f"(1/{int(round(1.0 / row.h))}, {row.dt:g})"]
        for c in range(3):
            cells.append(f"{row.errors[c]:.2e}")
            cells.append("--" if math.isnan(eocs[i, c]) else f"{eocs[i, c]:.2f}")
        rows_txt.append(cells)
    widths = [max(len(r[c]) for r in rows_txt) for c in range(len(header))]
    return ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip()
            for r in rows_txt]


def write_table(table: ConvergenceTable, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "table.csv").write_text("\n".join(table_csv_lines(table)) + "\n")
    (out_dir / "table.txt").write_text("\n".join(table_text_lines(table)) + "\n")
