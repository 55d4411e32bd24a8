"""Full problem description and its JSON form.

Schema (exact keys):

    {"d", "m", "q", "A", "kernel", "L", "K", "C", "D", "r",
     "x0", "phi", "u", "f", "notes"}

with measures as {"r", "atoms": [{"theta", "M"}], "density": [{"a", "b",
"coeffs"}]} (coeffs lists the matrix coefficients of theta^0..theta^3),
trajectories as {"start", "step", "samples"} (samples row-major, one vector
per node), matrices row-major, and the kernel as a list of
{"c", "m", "sigma", "omega", "phase"} terms.  K, C, D, u, f, kernel, notes
are optional; m and q default to 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import SpecError
from .kernels import Kernel
from .measures import DelayMeasure, measure_from_json
from .trajectories import Trajectory

__all__ = ["SystemSpec", "load_spec", "spec_from_dict"]

_TOP_KEYS = {"d", "m", "q", "A", "kernel", "L", "K", "C", "D", "r", "x0", "phi", "u", "f", "notes"}


@dataclass
class SystemSpec:
    """State/input/output delay system data: matrices, kernel, measures, signals."""

    state_dim: int
    A: np.ndarray
    kernel: Kernel
    L: DelayMeasure
    r: float
    x0: np.ndarray
    phi: Trajectory
    input_dim: int = 0
    output_dim: int = 0
    K: DelayMeasure | None = None
    C: DelayMeasure | None = None
    D: DelayMeasure | None = None
    u: Trajectory | None = None
    f: Trajectory | None = None
    notes: str = ""

    def __post_init__(self):
        d, m, q = self.state_dim, self.input_dim, self.output_dim
        if d < 1:
            raise SpecError("d: state dimension must be >= 1")
        if m < 0 or q < 0:
            raise SpecError("m, q: dimensions must be nonnegative")
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        if self.A.shape != (d, d):
            raise SpecError(f"A: expected shape ({d}, {d}), got {self.A.shape}")
        if self.r <= 0:
            raise SpecError("r: delay horizon must be positive")
        self.x0 = np.atleast_1d(np.asarray(self.x0, dtype=float))
        if self.x0.shape != (d,):
            raise SpecError(f"x0: expected length {d}")
        for name, mu, shape in (
            ("L", self.L, (d, d)),
            ("K", self.K, (d, m)),
            ("C", self.C, (q, d)),
            ("D", self.D, (q, m)),
        ):
            if mu is None:
                continue
            if abs(mu.horizon - self.r) > 1e-9 * max(1.0, self.r):
                raise SpecError(f"{name}: measure horizon {mu.horizon} != system r {self.r}")
            if (mu.out_dim, mu.in_dim) != shape:
                raise SpecError(
                    f"{name}: expected a {shape[0]}x{shape[1]} measure, got {mu.out_dim}x{mu.in_dim}"
                )
        if (self.K is not None or self.D is not None) and m < 1:
            raise SpecError("m: input delay operators given but input dimension is 0")
        if (self.C is not None or self.D is not None) and q < 1:
            raise SpecError("q: output operators given but output dimension is 0")
        if self.phi.dim != d:
            raise SpecError(f"phi: expected dimension {d}, got {self.phi.dim}")
        if not self.phi.covers(-self.r, 0.0):
            raise SpecError(f"phi: must cover [-r, 0] = [{-self.r}, 0]")
        if self.u is not None:
            if m >= 1 and self.u.dim != m:
                raise SpecError(f"u: expected dimension {m}, got {self.u.dim}")
            if not self.u.covers(-self.r, 0.0):
                raise SpecError("u: must cover at least [-r, 0] (the initial input history)")
        if self.f is not None and self.f.dim != d:
            raise SpecError(f"f: expected dimension {d}, got {self.f.dim}")

    @property
    def history_jump(self) -> float:
        """|x0 - phi(0)|; the initial data are allowed to disagree at t = 0."""
        return float(np.linalg.norm(self.x0 - self.phi.eval(0.0)))


def _traj_from_json(obj, where: str, dim: int | None = None) -> Trajectory:
    if not isinstance(obj, dict):
        raise SpecError(f"{where}: expected an object with start/step/samples")
    for key in ("start", "step", "samples"):
        if key not in obj:
            raise SpecError(f"{where}: missing key {key!r}")
    try:
        traj = Trajectory(float(obj["start"]), float(obj["step"]), np.asarray(obj["samples"], dtype=float))
    except ValueError as exc:
        raise SpecError(f"{where}: {exc}") from None
    if dim is not None and traj.dim != dim:
        raise SpecError(f"{where}: expected dimension {dim}, got {traj.dim}")
    return traj


def spec_from_dict(data: dict) -> SystemSpec:
    if not isinstance(data, dict):
        raise SpecError("top level: expected a JSON object")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise SpecError(f"unknown keys: {sorted(unknown)}")
    for key in ("d", "A", "L", "r", "x0", "phi"):
        if key not in data:
            raise SpecError(f"missing required key {key!r}")
    d = int(data["d"])
    m = int(data.get("m", 0))
    q = int(data.get("q", 0))
    r = float(data["r"])
    try:
        kernel = Kernel.from_json(data.get("kernel", []))
    except ValueError as exc:
        raise SpecError(str(exc)) from None

    def measure(key, shape):
        if key not in data or data[key] is None:
            return None
        try:
            return measure_from_json(data[key], key, expected_r=r, shape=shape)
        except ValueError as exc:
            raise SpecError(str(exc)) from None

    L = measure("L", (d, d))
    if L is None:
        raise SpecError("L: must be present (use empty atoms/density for the zero operator)")
    phi = _traj_from_json(data["phi"], "phi", dim=None)
    u = _traj_from_json(data["u"], "u") if data.get("u") is not None else None
    f = _traj_from_json(data["f"], "f") if data.get("f") is not None else None
    try:
        return SystemSpec(
            state_dim=d,
            input_dim=m,
            output_dim=q,
            A=np.asarray(data["A"], dtype=float),
            kernel=kernel,
            L=L,
            K=measure("K", (d, m)),
            C=measure("C", (q, d)),
            D=measure("D", (q, m)),
            r=r,
            x0=np.asarray(data["x0"], dtype=float),
            phi=phi,
            u=u,
            f=f,
            notes=str(data.get("notes", "")),
        )
    except SpecError:
        raise
    except ValueError as exc:
        raise SpecError(str(exc)) from None


def load_spec(path) -> SystemSpec:
    """Read and fully validate a JSON system description."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise SpecError(f"spec file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return spec_from_dict(data)
