"""Executable checks for the translation structure behind the delay operators.

The left shift semigroup S(t) translates a window on [-r, 0] and truncates
with zeros (nilpotent past r); the control map Phi_t fills a window from a
signal on [0, t]; their composition with a delay measure gives the
input-output map F u (t) = L Phi_t u.  These are exact case splits on the
grid, so the semigroup law and the splice identity

    Phi_{t+s} u = S(t) Phi_s (u|[0,s]) + Phi_t u(. + s)

hold to roundoff, and the variation bound |F u|_p <= |mu|([-tau, 0]) |u|_p
can be tested on randomized draws.

Convention at the seam: a shifted window vanishes where t + theta >= 0 (the
boundary node included, matching a domain with zero trace at 0), while the
control window includes its left seam value u(0) at theta = -t.  Phi_0 is the
zero window.  These choices make the splice identity exact on grid nodes.
"""

from __future__ import annotations

import numpy as np

from .measures import DelayMeasure
from .trajectories import HistorySegment, Trajectory

__all__ = [
    "shift_apply",
    "control_map",
    "input_output_map",
    "admissibility_check",
    "composition_check",
]


def _grid_multiple(t: float, step: float, name: str) -> int:
    k = t / step
    ki = int(round(k))
    if ki < 0 or abs(k - ki) > 1e-9 * max(1.0, abs(k)):
        raise ValueError(f"{name}={t} must be a nonnegative multiple of the grid step {step}")
    return ki


def _check_window(state: Trajectory) -> float:
    """The state must cover exactly [-r, 0]; returns r."""
    if abs(state.end) > 1e-9 * state.step:
        raise ValueError("window must end at time 0")
    return -state.start


def shift_apply(state: Trajectory, t: float) -> Trajectory:
    """Left shift: value phi(t + theta) where t + theta < 0, zero from the seam on."""
    _check_window(state)
    k = _grid_multiple(t, state.step, "t")
    n = state.size
    out = np.zeros_like(state.samples)
    if k == 0:
        out[:] = state.samples
    elif k < n - 1:
        out[: n - 1 - k] = state.samples[k : n - 1]
    return Trajectory(state.start, state.step, out)


def control_map(u: Trajectory, t: float, horizon: float) -> Trajectory:
    """Window theta -> u(t + theta) on [-min(t, r), 0], zero further back."""
    k = _grid_multiple(t, u.step, "t")
    if not u.covers(0.0, t):
        raise ValueError(f"control signal covers [{u.start}, {u.end}], needs [0, {t}]")
    n = int(round(horizon / u.step)) + 1
    if abs(horizon - (n - 1) * u.step) > 1e-9 * u.step:
        raise ValueError(f"horizon {horizon} must be a multiple of the grid step {u.step}")
    base = u.node_index(0.0)
    out = np.zeros((n, u.dim))
    if k > 0:
        fill = min(k, n - 1)  # nodes theta = -fill*h .. 0 receive u(t + theta)
        times_idx = base + k - np.arange(fill, -1, -1)
        out[n - 1 - fill :] = u.samples[times_idx]
    return Trajectory(-horizon, u.step, out)


def input_output_map(mu: DelayMeasure, u: Trajectory, tau: float) -> Trajectory:
    """(F u)(t) = mu applied to the control window of u at t, on the grid of [0, tau]."""
    kmax = _grid_multiple(tau, u.step, "tau")
    rows = np.empty((kmax + 1, mu.out_dim))
    for k in range(kmax + 1):
        window = control_map(u, k * u.step, mu.horizon)
        seg = HistorySegment(window, 0.0, mu.horizon)
        rows[k] = mu.apply(seg)
    return Trajectory(0.0, u.step, rows)


def admissibility_check(mu: DelayMeasure, u: Trajectory, tau: float, p: float):
    """(lhs, rhs) of the variation bound |F u|_{L^p[0,tau]} <= |mu|([-tau,0]) |u|_{L^p[0,tau]}."""
    if not 1.0 < p < np.inf:
        raise ValueError("p must lie in (1, inf)")
    lhs = input_output_map(mu, u, tau).lp_norm(p, 0.0, tau)
    rhs = mu.total_variation(min(tau, mu.horizon)) * u.lp_norm(p, 0.0, tau)
    return lhs, rhs


def composition_check(u: Trajectory, t: float, s: float, horizon: float) -> float:
    """Sup-norm defect of the splice identity over the window grid; zero up to roundoff."""
    h = u.step
    if abs(u.start) > 1e-9 * h:
        raise ValueError("control signal must start at time 0")
    kt = _grid_multiple(t, h, "t")
    ks = _grid_multiple(s, h, "s")
    if not u.covers(0.0, (kt + ks) * h):
        raise ValueError(f"control signal must cover [0, {t + s}]")
    whole = control_map(u, (kt + ks) * h, horizon)
    u_front = u.window(0.0, ks * h)
    shifted_front = shift_apply(control_map(u_front, ks * h, horizon), kt * h)
    u_tail = Trajectory(0.0, h, u.samples[ks:].copy())
    tail = control_map(u_tail, kt * h, horizon)
    defect = whole.samples - shifted_front.samples - tail.samples
    return float(np.max(np.abs(defect))) if defect.size else 0.0
