"""Run configuration: validation and JSON round-tripping."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .geometry import (
    Disc,
    RoundedCylinder,
    Semicircle,
    ShapeSpec,
    Stadium,
    Thresholds,
    Topology,
    TorusCircle,
)


class ConfigError(ValueError):
    """A configuration file failed validation; ``field`` names the culprit."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field_name = field_name


_SHAPE_FIELDS = {
    "semicircle": (Semicircle, ("radius",)),
    "disc": (Disc, ("width", "height")),
    "rounded_cylinder": (RoundedCylinder, ("width", "height")),
    "stadium": (Stadium, ("length", "height", "center")),
    "torus_circle": (TorusCircle, ("major_radius", "minor_radius")),
}


def shape_from_dict(data: dict) -> ShapeSpec:
    if not isinstance(data, dict) or "kind" not in data:
        raise ConfigError("shape", "must be an object with a 'kind' entry")
    kind = data["kind"]
    if kind not in _SHAPE_FIELDS:
        raise ConfigError("shape.kind", f"unknown shape kind {kind!r}")
    cls, fields = _SHAPE_FIELDS[kind]
    kwargs = {}
    for name in fields:
        if name not in data:
            raise ConfigError(f"shape.{name}", f"required for kind {kind!r}")
        value = data[name]
        if name == "center":
            value = (float(value[0]), float(value[1]))
        else:
            value = float(value)
        kwargs[name] = value
    extras = set(data) - set(fields) - {"kind"}
    if extras:
        raise ConfigError(f"shape.{sorted(extras)[0]}", f"unknown entry for kind {kind!r}")
    return cls(**kwargs)


def shape_to_dict(shape: ShapeSpec) -> dict:
    cls, fields = _SHAPE_FIELDS[shape.kind]
    out = {"kind": shape.kind}
    for name in fields:
        value = getattr(shape, name)
        out[name] = list(value) if name == "center" else value
    return out


@dataclass
class RunConfig:
    """Full description of one simulation run."""

    shape: ShapeSpec
    kbar: float
    J: int
    dt: float
    T: float
    scheme: str = "linear"
    eps: float = 0.0
    picard_tol: float = 1e-10
    picard_max: int = 100
    snapshot_times: tuple[float, ...] = ()
    output_dir: str = "."
    thresholds: Thresholds | None = None
    obj_azimuthal_segments: int = 64
    record_trajectory: bool = False

    @property
    def topology(self) -> Topology:
        return self.shape.topology

    def validate(self) -> None:
        if self.J < 4:
            raise ConfigError("J", f"must be at least 4, got {self.J}")
        if self.dt <= 0:
            raise ConfigError("dt", f"must be positive, got {self.dt}")
        if self.T <= 0:
            raise ConfigError("T", f"must be positive, got {self.T}")
        if self.scheme not in ("linear", "nonlinear"):
            raise ConfigError("scheme", f"must be 'linear' or 'nonlinear', got {self.scheme!r}")
        if self.picard_tol <= 0:
            raise ConfigError("picard_tol", "must be positive")
        if self.picard_max < 1:
            raise ConfigError("picard_max", "must be at least 1")
        if self.obj_azimuthal_segments < 3:
            raise ConfigError("obj_azimuthal_segments", "must be at least 3")
        for ts in self.snapshot_times:
            if ts < 0 or ts > self.T + 1e-12:
                raise ConfigError("snapshot_times", f"time {ts} outside [0, T]")
        if abs(self.eps) >= 1.0:
            raise ConfigError("eps", "must satisfy |eps| < 1")

    def to_dict(self) -> dict:
        out = {
            "topology": self.topology.value,
            "shape": shape_to_dict(self.shape),
            "eps": self.eps,
            "kbar": self.kbar,
            "J": self.J,
            "dt": self.dt,
            "T": self.T,
            "scheme": self.scheme,
            "picard_tol": self.picard_tol,
            "picard_max": self.picard_max,
            "snapshot_times": list(self.snapshot_times),
            "output_dir": self.output_dir,
            "obj_azimuthal_segments": self.obj_azimuthal_segments,
        }
        if self.thresholds is not None:
            out["thresholds"] = {"r_min": self.thresholds.r_min,
                                 "len_min": self.thresholds.len_min}
        return out

    @staticmethod
    def from_dict(data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "configuration must be a JSON object")
        required = ("shape", "kbar", "J", "dt", "T")
        for name in required:
            if name not in data:
                raise ConfigError(name, "missing required entry")
        shape = shape_from_dict(data["shape"])
        thresholds = None
        if "thresholds" in data and data["thresholds"] is not None:
            th = data["thresholds"]
            for name in ("r_min", "len_min"):
                if name not in th:
                    raise ConfigError(f"thresholds.{name}", "missing required entry")
            thresholds = Thresholds(r_min=float(th["r_min"]), len_min=float(th["len_min"]))
        if "topology" in data:
            declared = str(data["topology"])
            if declared != shape.topology.value:
                raise ConfigError(
                    "topology",
                    f"{declared!r} contradicts shape kind {shape.kind!r} "
                    f"({shape.topology.value})")
        try:
            config = RunConfig(
                shape=shape,
                kbar=float(data["kbar"]),
                J=int(data["J"]),
                dt=float(data["dt"]),
                T=float(data["T"]),
                scheme=str(data.get("scheme", "linear")),
                eps=float(data.get("eps", 0.0)),
                picard_tol=float(data.get("picard_tol", 1e-10)),
                picard_max=int(data.get("picard_max", 100)),
                snapshot_times=tuple(float(t) for t in data.get("snapshot_times", ())),
                output_dir=str(data.get("output_dir", ".")),
                thresholds=thresholds,
                obj_azimuthal_segments=int(data.get("obj_azimuthal_segments", 64)),
            )
        except (TypeError, ValueError) as exc:
            raise ConfigError("<root>", f"malformed entry: {exc}") from exc
        config.validate()
        return config

    @staticmethod
    def from_file(path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError("<file>", f"no such file: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}")
        return RunConfig.from_dict(data)
