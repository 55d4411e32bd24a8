"""Characteristic function Delta(lambda) = lambda I - (1 + a_hat(lambda)) A - L e_lambda.

Zeros of det Delta are the characteristic roots of the delay system; they are
located by a three-phase scan (lattice evaluation, per-cell winding numbers by
the argument principle, Newton polish) and reported with their certification
data.  det Delta is analytic away from the kernel poles, so cell windings are
exact root counts wherever the contour stays clear of poles.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .kernels import Kernel
from .measures import DelayMeasure

__all__ = [
    "CharacteristicFunction",
    "SingularFreePartError",
    "RootRecord",
    "SpectrumReport",
    "find_roots",
    "spectral_abscissa",
]

_POLE_MARGIN = 1e-6
# Interior lattice lines sit at an irrational fraction of the cell so that
# axis-aligned roots (real roots, purely imaginary roots) do not land on a
# winding contour.
_LINE_OFFSET = 0.6180339887498949


class SingularFreePartError(NumericalError):
    """lambda I - (1 + a_hat(lambda)) A is singular; the factored form does not exist."""


@dataclass(frozen=True)
class CharacteristicFunction:
    """Holds (A, kernel, L) and evaluates Delta, det Delta, and the factored form."""

    state_matrix: np.ndarray
    kernel: Kernel
    delay: DelayMeasure | None = None

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.state_matrix, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise ValueError("state matrix must be square")
        object.__setattr__(self, "state_matrix", A)
        if self.delay is not None and (self.delay.out_dim, self.delay.in_dim) != A.shape:
            raise ValueError("delay measure must be d x d")

    @classmethod
    def from_system(cls, spec) -> "CharacteristicFunction":
        return cls(spec.A, spec.kernel, spec.L)

    @property
    def dim(self) -> int:
        return self.state_matrix.shape[0]

    @property
    def poles(self) -> tuple:
        return self.kernel.poles

    def matrix_many(self, lams) -> np.ndarray:
        lams = np.atleast_1d(np.asarray(lams, dtype=complex))
        ahat = self.kernel.laplace(lams)
        ahat = np.atleast_1d(np.asarray(ahat, dtype=complex))
        d = self.dim
        out = lams[:, None, None] * np.eye(d) - (1.0 + ahat)[:, None, None] * self.state_matrix
        if self.delay is not None and not self.delay.is_zero:
            out -= self.delay.exp_moment_many(lams)
        return out

    def matrix(self, lam) -> np.ndarray:
        return self.matrix_many([lam])[0]

    def det_many(self, lams) -> np.ndarray:
        return np.linalg.det(self.matrix_many(lams))

    def det(self, lam) -> complex:
        return complex(self.det_many([lam])[0])

    def factored_det(self, lam) -> tuple:
        """(det(I - L e_lam H(lam)), det(lam I - (1 + a_hat) A)); product = det Delta."""
        lam = complex(lam)
        ahat = self.kernel.laplace(lam)
        free = lam * np.eye(self.dim) - (1.0 + ahat) * self.state_matrix
        det_free = complex(np.linalg.det(free))
        if self.delay is None or self.delay.is_zero:
            return (1.0 + 0.0j), det_free
        moment = self.delay.exp_moment(lam)
        try:
            # L e_lam H(lam) = solve(free^T, moment^T)^T without forming the inverse
            prod = np.linalg.solve(free.T, moment.T).T
        except np.linalg.LinAlgError:
            raise SingularFreePartError(
                f"lambda I - (1 + a_hat) A is singular at lambda={lam}"
            ) from None
        if not np.all(np.isfinite(prod)):
            raise SingularFreePartError(
                f"lambda I - (1 + a_hat) A is numerically singular at lambda={lam}"
            )
        return complex(np.linalg.det(np.eye(self.dim) - prod)), det_free


@dataclass(frozen=True)
class RootRecord:
    lam: complex
    abs_det: float
    newton_iters: int
    winding: int


@dataclass
class SpectrumReport:
    rect: tuple
    grid: int
    roots: list
    windings: np.ndarray
    warnings: list = field(default_factory=list)

    @property
    def abscissa(self) -> float | None:
        """Max real part over the found roots, or None if the region is root-free."""
        if not self.roots:
            return None
        return max(rec.lam.real for rec in self.roots)


def _grid_lines(a: float, b: float, cells: int) -> np.ndarray:
    w = (b - a) / cells
    inner = a + w * (np.arange(cells - 1) + _LINE_OFFSET)
    return np.concatenate(([a], inner, [b]))


def _clear_poles(lines: np.ndarray, pole_coords, span: float, warnings: list, axis: str) -> np.ndarray:
    """Shift any contour line that sits within the pole margin; the winding
    path must stay clear of the poles of det Delta."""
    lines = lines.copy()
    if not pole_coords:
        return lines
    shift = max(10 * _POLE_MARGIN, 1e-4 * span)
    for i, val in enumerate(lines):
        for pc in pole_coords:
            if abs(val - pc) < _POLE_MARGIN:
                direction = -1.0 if i == len(lines) - 1 else 1.0  # outer lines move inward
                lines[i] = val + direction * shift
                warnings.append(
                    f"{axis}-contour line at {val} adjusted by {direction * shift:+.2e} "
                    f"to clear a kernel pole"
                )
    return lines


def _boundary(x0, x1, y0, y1, per_edge: int) -> np.ndarray:
    t = np.arange(per_edge) / per_edge
    return np.concatenate(
        [
            (x0 + (x1 - x0) * t) + 1j * y0,
            x1 + 1j * (y0 + (y1 - y0) * t),
            (x1 - (x1 - x0) * t) + 1j * y1,
            x0 + 1j * (y1 - (y1 - y0) * t),
        ]
    )


def _winding_of(dets: np.ndarray):
    """(winding estimate as float, max phase jump); dets samples a closed path."""
    ratios = np.roll(dets, -1) / dets
    jumps = np.angle(ratios)
    return float(jumps.sum() / (2.0 * np.pi)), float(np.abs(jumps).max())


def _newton(cf: CharacteristicFunction, z0: complex, tol: float, max_iter: int = 50):
    """Newton on det Delta with central-difference derivative."""
    from .kernels import KernelPoleError

    d = cf.dim
    z = complex(z0)
    try:
        fz = cf.det(z)
        for it in range(1, max_iter + 1):
            scale = max(1.0, abs(z) ** d)
            if abs(fz) <= tol * scale:
                return z, abs(fz), it, True
            dz = 1e-6 * (1.0 + abs(z))
            fp, fm = cf.det_many([z + dz, z - dz])
            deriv = (fp - fm) / (2.0 * dz)
            if deriv == 0 or not np.isfinite(deriv):
                break
            z = z - fz / deriv
            if not np.isfinite(z):
                break
            fz = cf.det(z)
        return z, abs(fz), max_iter, False
    except KernelPoleError:
        return z, np.inf, max_iter, False


def find_roots(cf: CharacteristicFunction, rect, grid: int, tol: float) -> SpectrumReport:
    """Scan a rectangle for characteristic roots with winding certification.

    rect is (re_min, re_max, im_min, im_max).  Phase 1 evaluates det Delta on
    the lattice; phase 2 computes per-cell boundary windings (32 samples per
    edge, refined up to 4x where the phase jumps exceed pi/2); phase 3 runs
    Newton in every cell with positive winding.  Troublesome cells (unstable
    windings, enclosed poles, non-convergent Newton) are reported in the
    warnings, never dropped silently.  The caller should keep the rectangle at
    least 1e-6 away from the kernel poles; contour lines that violate the
    margin are shifted and noted.
    """
    re0, re1, im0, im1 = (float(v) for v in rect)
    if not (re0 < re1 and im0 < im1):
        raise ValueError("empty search rectangle")
    if grid < 8:
        raise ValueError("grid must be >= 8 cells per side")
    if tol <= 0:
        raise ValueError("tol must be positive")

    tol = min(float(tol), 1e-8)  # reported roots always satisfy |det| <= 1e-8 * scale
    warnings: list = []
    poles = cf.poles
    near = [
        p
        for p in poles
        if re0 - 1.0 <= p.real <= re1 + 1.0 and im0 - 1.0 <= p.imag <= im1 + 1.0
    ]
    for p in near:
        if re0 + _POLE_MARGIN < p.real < re1 - _POLE_MARGIN and im0 + _POLE_MARGIN < p.imag < im1 - _POLE_MARGIN:
            warnings.append(
                f"kernel pole {p} lies inside the search region; windings near it are not root counts"
            )
    xs = _clear_poles(_grid_lines(re0, re1, grid), [p.real for p in near], re1 - re0, warnings, "re")
    ys = _clear_poles(_grid_lines(im0, im1, grid), [p.imag for p in near], im1 - im0, warnings, "im")

    # phase 1: lattice values (scale diagnostics; also catches blow-ups early)
    lattice = cf.det_many((xs[None, :] + 1j * ys[:, None]).ravel()).reshape(len(ys), len(xs))
    if not np.all(np.isfinite(lattice)):
        warnings.append("non-finite det values on the lattice (pole proximity)")

    # phase 2: boundary windings, batched over all cells at 32 samples/edge
    per_edge = 32
    cells = [(i, j) for j in range(grid) for i in range(grid)]
    bnd = np.concatenate(
        [_boundary(xs[i], xs[i + 1], ys[j], ys[j + 1], per_edge) for (i, j) in cells]
    )
    dets = cf.det_many(bnd).reshape(len(cells), 4 * per_edge)

    windings = np.zeros((grid, grid), dtype=int)
    unstable = []
    for idx, (i, j) in enumerate(cells):
        row = dets[idx]
        if np.any(row == 0) or not np.all(np.isfinite(row)):
            warnings.append(f"det vanishes or blows up on the boundary of cell ({i}, {j})")
            unstable.append((i, j))
            continue
        est, jump = _winding_of(row)
        refine = per_edge
        while jump > np.pi / 2 and refine < 4 * per_edge:
            refine *= 2
            fine = cf.det_many(_boundary(xs[i], xs[i + 1], ys[j], ys[j + 1], refine))
            if np.any(fine == 0) or not np.all(np.isfinite(fine)):
                jump = np.inf
                break
            est, jump = _winding_of(fine)
        w = int(np.rint(est))
        if jump > np.pi / 2 or abs(est - w) > 0.25:
            warnings.append(
                f"unstable winding in cell ({i}, {j}) (estimate {est:.3f}); possible boundary root"
            )
            unstable.append((i, j))
        windings[j, i] = w

    # phase 3: Newton in cells with positive winding, plus unstable cells
    candidates = []
    for j in range(grid):
        for i in range(grid):
            w = windings[j, i]
            if w > 0 or (i, j) in unstable:
                candidates.append((i, j, w))
            if w < 0:
                warnings.append(
                    f"negative winding {w} in cell ({i}, {j}): an enclosed pole, not a root"
                )
            if w > 1:
                warnings.append(
                    f"winding {w} in cell ({i}, {j}): multiple roots; Newton reports one"
                )

    found = []
    span = max(re1 - re0, im1 - im0)
    for i, j, w in candidates:
        center = complex(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]))
        lam, absdet, iters, ok = _newton(cf, center, tol)
        if not ok:
            if w > 0:
                warnings.append(
                    f"Newton did not converge in cell ({i}, {j}) with winding {w} "
                    f"(last |det|={absdet:.3e} at {lam})"
                )
            continue
        inside = re0 - 1e-9 * span <= lam.real <= re1 + 1e-9 * span and (
            im0 - 1e-9 * span <= lam.imag <= im1 + 1e-9 * span
        )
        if not inside:
            warnings.append(f"root {lam} converged outside the search rectangle; dropped")
            continue
        found.append(RootRecord(lam=lam, abs_det=absdet, newton_iters=iters, winding=w))

    found.sort(key=lambda rec: (rec.lam.real, rec.lam.imag))
    deduped: list = []
    for rec in found:
        dup = next((r for r in deduped if abs(r.lam - rec.lam) < 1e-6), None)
        if dup is None:
            deduped.append(rec)
        elif rec.abs_det < dup.abs_det:
            deduped[deduped.index(dup)] = RootRecord(rec.lam, rec.abs_det, rec.newton_iters, max(rec.winding, dup.winding))

    for rec in deduped:
        if rec.lam.real <= 0:
            warnings.append(
                f"root {rec.lam} lies outside the open right half-plane, where the "
                f"characteristic criterion needs extra resolvent conditions"
            )
            break

    return SpectrumReport(rect=(re0, re1, im0, im1), grid=grid, roots=deduped, windings=windings, warnings=warnings)


def spectral_abscissa(cf: CharacteristicFunction, re_bounds, im_max: float, grid: int, tol: float):
    """Max real part of the roots in [re_bounds] x [-im_max, im_max], or None.

    Real data gives a conjugate-symmetric root set, so only the upper half is
    scanned; the lower edge dips slightly below the axis to keep real roots in
    cell interiors.
    """
    re0, re1 = (float(v) for v in re_bounds)
    if im_max <= 0:
        raise ValueError("im_max must be positive")
    pad = 0.5 * im_max / grid
    report = find_roots(cf, (re0, re1, -pad, float(im_max)), grid, tol)
    return report.abscissa
