"""CSV emission and re-reading for solver, spectrum, and resolvent results.

Floats are written with repr (shortest round-trip decimal), so identical runs
produce byte-identical files and re-reading loses nothing.
"""

from __future__ import annotations

import numpy as np

from .resolvent import ResolventFamily
from .solver import SolveReport
from .spectral import SpectrumReport
from .trajectories import Trajectory

__all__ = [
    "write_solution_csv",
    "read_solution_csv",
    "write_roots_csv",
    "write_resolvent_csv",
]


def _fmt(v: float) -> str:
    return repr(float(v))


def write_solution_csv(report: SolveReport, fh) -> None:
    """Rows t, x[0..d), y[0..q); the y cells stay empty on the history rows t < 0."""
    x = report.x
    y = report.y
    d = x.dim
    q = y.dim if y is not None else 0
    header = ["t"] + [f"x{i}" for i in range(d)] + [f"y{i}" for i in range(q)]
    fh.write(",".join(header) + "\n")
    times = x.times
    samples = x.samples
    for k in range(x.size):
        t = times[k]
        row = [_fmt(t)] + [_fmt(v) for v in samples[k]]
        if q:
            if t < -1e-9 * x.step:
                row += [""] * q
            else:
                row += [_fmt(v) for v in y.eval(max(t, 0.0))]
        fh.write(",".join(row) + "\n")


def read_solution_csv(fh):
    """Inverse of write_solution_csv: (x trajectory, y trajectory or None)."""
    header = fh.readline().strip().split(",")
    d = sum(1 for name in header if name.startswith("x"))
    q = sum(1 for name in header if name.startswith("y"))
    times, xs, ys = [], [], []
    for line in fh:
        parts = line.rstrip("\n").split(",")
        if len(parts) != 1 + d + q:
            raise ValueError(f"malformed trace row: {line!r}")
        times.append(float(parts[0]))
        xs.append([float(v) for v in parts[1 : 1 + d]])
        ycells = parts[1 + d :]
        if q and all(c != "" for c in ycells):
            ys.append([float(v) for v in ycells])
    times = np.asarray(times)
    step = float(np.median(np.diff(times))) if len(times) > 1 else 1.0
    x = Trajectory(times[0], step, np.asarray(xs))
    y = None
    if q and ys:
        y = Trajectory(0.0, step, np.asarray(ys))
    return x, y


def write_roots_csv(report: SpectrumReport, fh) -> None:
    fh.write("re,im,abs_det,newton_iters\n")
    for rec in report.roots:
        fh.write(
            ",".join([_fmt(rec.lam.real), _fmt(rec.lam.imag), _fmt(rec.abs_det), str(rec.newton_iters)])
            + "\n"
        )


def write_resolvent_csv(fam: ResolventFamily, fh) -> None:
    d = fam.dim
    header = ["t"] + [f"R[{i}][{j}]" for i in range(d) for j in range(d)]
    fh.write(",".join(header) + "\n")
    times = fam.times
    for k in range(fam.count):
        row = [_fmt(times[k])] + [_fmt(v) for v in fam.mats[k].ravel()]
        fh.write(",".join(row) + "\n")
