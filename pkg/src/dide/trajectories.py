"""Grid-sampled vector trajectories and sliding history windows.

A Trajectory holds samples of a vector function on a uniform time grid and
evaluates between nodes by linear interpolation (exact at the nodes).  A
HistorySegment is the window view theta -> x(t + theta) on [-r, 0] used by the
delay operators; it can read a separate source for times before zero so that
an initial-value jump x(0) != phi(0) is honored instead of smeared.
"""

from __future__ import annotations

import numpy as np

__all__ = ["Trajectory", "HistorySegment"]

_NODE_TOL = 1e-9  # node-snap tolerance, in units of the grid step


class Trajectory:
    """Uniformly sampled vector function on [start, start + (n-1)*step]."""

    __slots__ = ("start", "step", "_data", "_n")

    def __init__(self, start: float, step: float, samples):
        if step <= 0:
            raise ValueError("step must be positive")
        data = np.asarray(samples, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ValueError("samples must be a nonempty list of equal-length vectors")
        if not np.all(np.isfinite(data)):
            raise ValueError("samples must be finite")
        self.start = float(start)
        self.step = float(step)
        self._data = np.array(data, dtype=float)
        self._n = data.shape[0]

    @classmethod
    def constant(cls, start: float, step: float, count: int, value) -> "Trajectory":
        row = np.atleast_1d(np.asarray(value, dtype=float))
        return cls(start, step, np.tile(row, (count, 1)))

    @classmethod
    def from_function(cls, start: float, step: float, count: int, fn) -> "Trajectory":
        """Sample fn at the count grid nodes start + k*step."""
        rows = [np.atleast_1d(np.asarray(fn(start + k * step), dtype=float)) for k in range(count)]
        return cls(start, step, np.array(rows))

    @property
    def samples(self) -> np.ndarray:
        return self._data[: self._n]

    @property
    def size(self) -> int:
        return self._n

    @property
    def dim(self) -> int:
        return self._data.shape[1]

    @property
    def end(self) -> float:
        return self.start + (self._n - 1) * self.step

    @property
    def times(self) -> np.ndarray:
        return self.start + self.step * np.arange(self._n)

    def covers(self, a: float, b: float) -> bool:
        tol = self.step * _NODE_TOL
        return self.start - tol <= a and b <= self.end + tol

    def node_index(self, t: float) -> int:
        """Index of the grid node at time t; rejects off-grid times."""
        pos = (t - self.start) / self.step
        k = int(round(pos))
        if abs(pos - k) > _NODE_TOL or not 0 <= k < self._n:
            raise ValueError(f"time {t} is not a grid node of the trajectory")
        return k

    def append(self, vec) -> None:
        row = np.atleast_1d(np.asarray(vec, dtype=float))
        if row.shape != (self.dim,):
            raise ValueError(f"appended sample must have dimension {self.dim}")
        if self._n == self._data.shape[0]:
            grown = np.empty((max(8, 2 * self._n), self.dim))
            grown[: self._n] = self._data[: self._n]
            self._data = grown
        self._data[self._n] = row
        self._n += 1

    def replace_last(self, vec) -> None:
        row = np.atleast_1d(np.asarray(vec, dtype=float))
        if row.shape != (self.dim,):
            raise ValueError(f"sample must have dimension {self.dim}")
        self._data[self._n - 1] = row

    def eval(self, t):
        """Piecewise-linear value at time(s) t; bit-exact at grid nodes."""
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        pos = (ts - self.start) / self.step
        n = self._n
        if pos.size:
            lo, hi = pos.min(), pos.max()
            if lo < -_NODE_TOL or hi > (n - 1) + _NODE_TOL:
                bad = ts[np.argmin(pos)] if lo < -_NODE_TOL else ts[np.argmax(pos)]
                raise ValueError(
                    f"time {bad} outside covered interval [{self.start}, {self.end}]"
                )
        data = self._data
        near = np.rint(pos)
        exact = np.abs(pos - near) <= _NODE_TOL
        if n >= 2:
            k = np.clip(np.floor(pos).astype(int), 0, n - 2)
            w = (pos - k)[:, None]
            vals = (1.0 - w) * data[k] + w * data[k + 1]
        else:
            vals = np.repeat(data[:1], len(ts), axis=0)
        ki = np.clip(near.astype(int), 0, n - 1)
        vals = np.where(exact[:, None], data[ki], vals)
        return vals[0] if scalar else vals

    __call__ = eval

    def window(self, a: float, b: float) -> "Trajectory":
        """Copy of the sub-trajectory on the grid-aligned interval [a, b]."""
        i0, i1 = self.node_index(a), self.node_index(b)
        if i1 < i0:
            raise ValueError("window bounds out of order")
        return Trajectory(self.start + i0 * self.step, self.step, self.samples[i0 : i1 + 1].copy())

    def lp_norm(self, p: float, a: float, b: float) -> float:
        """Trapezoidal L^p norm (int_a^b |x(t)|_2^p dt)^(1/p) on the grid."""
        if p < 1:
            raise ValueError("p must be >= 1")
        tol = self.step * _NODE_TOL
        if not self.covers(a, b):
            raise ValueError(f"[{a}, {b}] not within covered interval")
        if b - a <= tol:
            return 0.0
        k0 = int(np.ceil((a - self.start) / self.step - _NODE_TOL))
        k1 = int(np.floor((b - self.start) / self.step + _NODE_TOL))
        inner = self.start + self.step * np.arange(k0, k1 + 1)
        pts = np.concatenate(([a], inner, [b]))
        pts = pts[np.concatenate(([True], np.diff(pts) > tol))]
        if pts[-1] < b - tol:
            pts = np.concatenate((pts, [b]))
        vals = self.eval(pts)
        g = np.sum(vals * vals, axis=1) ** (p / 2.0)
        integral = float(np.sum(0.5 * (g[1:] + g[:-1]) * np.diff(pts)))
        return integral ** (1.0 / p)

    def history(self, t: float, horizon: float, pre: "Trajectory | None" = None) -> "HistorySegment":
        return HistorySegment(self, t, horizon, pre=pre)

    def __repr__(self):
        return (
            f"Trajectory(start={self.start}, step={self.step}, "
            f"n={self._n}, dim={self.dim})"
        )


class HistorySegment:
    """Window view theta -> x(anchor + theta) for theta in [-horizon, 0].

    When ``pre`` is given, absolute times before 0 are read from it instead of
    the main trajectory; this keeps an initial jump at t = 0 sharp.
    """

    __slots__ = ("traj", "anchor", "horizon", "pre")

    def __init__(self, traj: Trajectory, anchor: float, horizon: float, pre: Trajectory | None = None):
        if horizon <= 0:
            raise ValueError("horizon must be positive")
        self.traj = traj
        self.anchor = float(anchor)
        self.horizon = float(horizon)
        self.pre = pre
        lo = self.anchor - self.horizon
        if pre is None:
            if not traj.covers(lo, self.anchor):
                raise ValueError(
                    f"trajectory covers [{traj.start}, {traj.end}], "
                    f"history at t={anchor} needs [{lo}, {anchor}]"
                )
        else:
            if pre.dim != traj.dim:
                raise ValueError("pre-history dimension mismatch")
            if lo < 0 and not pre.covers(lo, min(0.0, self.anchor)):
                raise ValueError("pre-history does not cover the pre-zero part of the window")
            if self.anchor > 0 and not traj.covers(0.0, self.anchor):
                raise ValueError("trajectory does not cover [0, anchor]")

    @property
    def dim(self) -> int:
        return self.traj.dim

    @property
    def step(self) -> float:
        return self.traj.step

    def __call__(self, theta):
        scalar = np.ndim(theta) == 0
        th = np.atleast_1d(np.asarray(theta, dtype=float))
        tol = self.traj.step * _NODE_TOL
        if th.size and (th.min() < -self.horizon - tol or th.max() > tol):
            raise ValueError("theta outside [-horizon, 0]")
        taus = self.anchor + th
        if self.pre is None:
            vals = self.traj.eval(taus)
        else:
            vals = np.empty((len(taus), self.dim))
            neg = taus < 0
            if np.any(neg):
                vals[neg] = self.pre.eval(taus[neg])
            if np.any(~neg):
                vals[~neg] = self.traj.eval(taus[~neg])
        return vals[0] if scalar else vals

    def cell_edges(self) -> np.ndarray:
        """Breakpoints of the window's piecewise-linear structure in theta.

        Grid nodes of the underlying source(s) mapped into (-horizon, 0), plus
        the endpoints and, for jump-aware windows, the offset of time zero.
        """
        lo, hi = -self.horizon, 0.0
        cands = [np.array([lo, hi])]
        sources = (self.traj,) if self.pre is None else (self.traj, self.pre)
        for tr in sources:
            k0 = int(np.ceil((self.anchor + lo - tr.start) / tr.step + _NODE_TOL))
            k1 = int(np.floor((self.anchor + hi - tr.start) / tr.step - _NODE_TOL))
            k0, k1 = max(k0, 0), min(k1, tr.size - 1)
            if k1 >= k0:
                cands.append(tr.start + tr.step * np.arange(k0, k1 + 1) - self.anchor)
        if self.pre is not None and lo < -self.anchor < hi:
            cands.append(np.array([-self.anchor]))
        edges = np.sort(np.concatenate(cands))
        keep = np.concatenate(([True], np.diff(edges) > self.traj.step * 1e-9))
        return edges[keep]
