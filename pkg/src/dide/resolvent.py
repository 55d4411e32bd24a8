"""Resolvent family of the memory-perturbed linear system x' = A x + (a * A x).

R(t) is computed on a uniform grid from the second-kind integral equation

    R(t) = I + int_0^t ktilde(t - s) A R(s) ds,      ktilde(t) = 1 + int_0^t a,

whose Laplace transform is H(lambda) = (lambda - (1 + a_hat(lambda)) A)^{-1}.
The marching scheme is product trapezoid with an implicit diagonal solve:
one constant d x d system per step, globally second order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .kernels import Kernel
from .trajectories import Trajectory

__all__ = [
    "ResolventFamily",
    "compute_resolvent",
    "resolvent_residual",
    "commutation_defect",
    "upsilon_apply",
]


@dataclass
class ResolventFamily:
    """Grid of matrices R(t_k), t_k = k*step, for the pair (A, kernel)."""

    step: float
    mats: np.ndarray  # (n+1, d, d)
    state_matrix: np.ndarray
    kernel: Kernel
    ktilde: np.ndarray = field(repr=False)  # integrated-kernel values on the grid

    @property
    def count(self) -> int:
        return self.mats.shape[0]

    @property
    def dim(self) -> int:
        return self.mats.shape[1]

    @property
    def horizon(self) -> float:
        return self.step * (self.count - 1)

    @property
    def times(self) -> np.ndarray:
        return self.step * np.arange(self.count)

    def at_node(self, k: int) -> np.ndarray:
        return self.mats[k]


def compute_resolvent(A, kernel: Kernel, step: float, horizon: float) -> ResolventFamily:
    """March the product-trapezoid discretization of the resolvent equation.

    Solves (I - (h/2) A) R_n = I + h * sum_{m<n} w_m ktilde(t_n - t_m) A R_m
    with w_0 = 1/2 and interior weights 1; R_0 = I exactly.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    d = A.shape[0]
    if A.shape != (d, d):
        raise ValueError("A must be square")
    if step <= 0 or horizon < step:
        raise ValueError("need step > 0 and horizon >= step")
    n = int(round(horizon / step))
    h = float(step)

    kt = kernel.integrated(h * np.arange(n + 1))
    eye = np.eye(d)
    lhs = eye - 0.5 * h * A  # ktilde(0) = 1
    try:
        np.linalg.solve(lhs, eye)
    except np.linalg.LinAlgError:
        raise NumericalError(f"step matrix I - (h/2) A singular at h={h}") from None

    R = np.empty((n + 1, d, d))
    AR = np.empty((n + 1, d, d))
    R[0] = eye
    AR[0] = A
    with np.errstate(over="ignore", invalid="ignore"):  # blow-ups abort explicitly below
        for k in range(1, n + 1):
            wk = kt[1 : k + 1][::-1].copy()  # ktilde(t_k - t_m), m = 0 .. k-1
            wk[0] *= 0.5
            conv = np.einsum("m,mij->ij", wk, AR[:k])
            R[k] = np.linalg.solve(lhs, eye + h * conv)
            if not np.all(np.isfinite(R[k])):
                raise NumericalError(f"resolvent marching produced non-finite entries at t={k * h}")
            AR[k] = A @ R[k]
    return ResolventFamily(step=h, mats=R, state_matrix=A.copy(), kernel=kernel, ktilde=kt)


def resolvent_residual(fam: ResolventFamily) -> float:
    """Max defect of the discrete resolvent equation over the grid.

    Uses the same quadrature as the marching, now with the full trapezoid
    (endpoint m = n included at weight 1/2); a freshly computed family is
    at roundoff, a perturbed one is not.
    """
    R = fam.mats
    A = fam.state_matrix
    kt = fam.ktilde
    h = fam.step
    eye = np.eye(fam.dim)
    AR = np.matmul(A, R)
    worst = float(np.linalg.norm(R[0] - eye, 2))
    for k in range(1, fam.count):
        wk = kt[: k + 1][::-1].copy()
        wk[0] *= 0.5
        wk[-1] *= 0.5
        conv = np.einsum("m,mij->ij", wk, AR[: k + 1])
        defect = R[k] - eye - h * conv
        worst = max(worst, float(np.linalg.norm(defect, 2)))
    return worst


def commutation_defect(fam: ResolventFamily) -> float:
    """max_k |A R(t_k) - R(t_k) A|_2; the marching keeps it at roundoff."""
    A = fam.state_matrix
    diff = np.matmul(A, fam.mats) - np.matmul(fam.mats, A)
    if fam.dim == 1:
        return float(np.max(np.abs(diff)))
    return float(np.linalg.svd(diff, compute_uv=False)[:, 0].max())


def upsilon_apply(fam: ResolventFamily, forcing: Trajectory) -> Trajectory:
    """Convolution t -> int_0^t R(t-s) f(s) ds by trapezoid on the shared grid."""
    if abs(forcing.step - fam.step) > 1e-9 * fam.step:
        raise ValueError(f"forcing grid step {forcing.step} != resolvent step {fam.step}")
    if abs(forcing.start) > 1e-9 * fam.step:
        raise ValueError("forcing must start at t = 0")
    if forcing.dim != fam.dim:
        raise ValueError(f"forcing dimension {forcing.dim} != state dimension {fam.dim}")
    n = min(fam.count, forcing.size) - 1
    h = fam.step
    F = forcing.samples[: n + 1]
    R = fam.mats
    out = np.zeros((n + 1, fam.dim))
    for k in range(1, n + 1):
        Fw = F[: k + 1].copy()
        Fw[0] *= 0.5
        Fw[k] *= 0.5
        out[k] = h * np.einsum("mij,mj->i", R[k::-1][: k + 1], Fw)
    return Trajectory(0.0, h, out)
