"""End-to-end verification suite: oracle and property checks over all modules.

Each criterion is a self-contained function returning a CheckResult; run_all
prints one pass/fail line per criterion.  The oracles here stay independent
of the code paths they check: closed forms derived by hand, a scaling-and-
squaring matrix exponential, hand method-of-steps values, a classical-delay
characteristic evaluation that bypasses the kernel machinery, and randomized
draws with fixed seeds.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .kernels import Kernel, KernelTerm
from .matfuncs import expm
from .measures import DelayMeasure, DensityPiece
from .resolvent import compute_resolvent
from .shift import admissibility_check, composition_check
from .solver import solve_direct, solve_mild, cross_validate
from .spectral import CharacteristicFunction, find_roots, spectral_abscissa
from .system import SystemSpec
from .trajectories import HistorySegment, Trajectory

__all__ = ["CheckResult", "run_all", "CRITERIA", "stress_system", "fit_envelope_rate"]


@dataclass
class CheckResult:
    index: int
    name: str
    passed: bool
    detail: str
    elapsed: float


def _timed(fn):
    def wrapper() -> CheckResult:
        t0 = time.perf_counter()
        result = fn()
        result.elapsed = time.perf_counter() - t0
        return result

    return wrapper


def fit_envelope_rate(times, norms, t0: float, t1: float, windows: int = 12):
    """Exponential rate of the envelope of |values| on [t0, t1].

    Window maxima dodge the zero crossings of oscillatory decay; a straight
    least-squares line through their logs gives (rate, amplitude).
    """
    times = np.asarray(times)
    norms = np.asarray(norms)
    mask = (times >= t0) & (times <= t1)
    ts, vs = times[mask], norms[mask]
    edges = np.linspace(t0, t1, windows + 1)
    pts, logs = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        sel = (ts >= a) & (ts <= b)
        if not np.any(sel):
            continue
        i = int(np.argmax(vs[sel]))
        pts.append(ts[sel][i])
        logs.append(math.log(max(vs[sel][i], 1e-300)))
    coeffs, *_ = np.linalg.lstsq(np.vstack([pts, np.ones(len(pts))]).T, np.asarray(logs), rcond=None)
    return float(coeffs[0]), math.exp(coeffs[1])


def _exp_kernel(coeff: float, rate: float) -> Kernel:
    return Kernel((KernelTerm(coeff, 0, rate),))


def stress_system(sample_step: float, horizon: float = 5.0) -> SystemSpec:
    """d=2 system mixing memory kernel, atomic + distributed state delay,
    an input delay, and smooth forcing; used for two-scheme cross-validation."""
    n_hist = int(round(1.0 / sample_step)) + 1
    n_full = int(round((horizon + 1.0) / sample_step)) + 1
    n_fwd = int(round(horizon / sample_step)) + 1
    phi = Trajectory.from_function(-1.0, sample_step, n_hist, lambda th: [math.cos(th), 0.3 - 0.2 * th])
    u = Trajectory.from_function(
        -1.0, sample_step, n_full, lambda t: [math.sin(1.2 * t) * math.exp(-0.1 * t)]
    )
    f = Trajectory.from_function(0.0, sample_step, n_fwd, lambda t: [math.sin(t), math.cos(2.0 * t)])
    L = DelayMeasure(
        1.0,
        atoms=[(-0.5, [[0.2, -0.1], [0.0, 0.3]])],
        density=[
            DensityPiece(
                -1.0,
                -0.25,
                [[[0.1, 0.0], [0.05, -0.1]], [[0.0, 0.02], [-0.04, 0.1]]],
            )
        ],
    )
    K = DelayMeasure(1.0, atoms=[(-0.3, [[0.5], [-0.2]])])
    return SystemSpec(
        state_dim=2,
        input_dim=1,
        A=np.array([[-1.0, 0.4], [-0.3, -1.5]]),
        kernel=_exp_kernel(1.0, -2.0),
        L=L,
        K=K,
        r=1.0,
        x0=np.array([1.0, 0.3]),
        phi=phi,
        u=u,
        f=f,
        notes="cross-validation stress system",
    )


def _steps_benchmark() -> SystemSpec:
    """x'(t) = x(t-1), phi = 1: hand method of steps gives x(1)=2, x(2)=3.5."""
    return SystemSpec(
        state_dim=1,
        A=np.array([[0.0]]),
        kernel=Kernel.zero(),
        L=DelayMeasure(1.0, atoms=[(-1.0, [[1.0]])]),
        r=1.0,
        x0=np.array([1.0]),
        phi=Trajectory.constant(-1.0, 1.0, 2, [1.0]),
    )


def c01_resolvent_closed_form() -> CheckResult:
    """R(t) for A=-1, a=e^{-t} equals e^{-t} cos t (partial-fraction oracle)."""
    t0 = time.perf_counter()
    A = np.array([[-1.0]])
    kern = _exp_kernel(1.0, -1.0)

    def max_err(h):
        fam = compute_resolvent(A, kern, h, 5.0)
        ts = fam.times
        exact = np.exp(-ts) * np.cos(ts)
        return float(np.max(np.abs(fam.mats[:, 0, 0] - exact)))

    err1 = max_err(1e-3)
    err2 = max_err(5e-4)
    ratio = err1 / err2
    elapsed = time.perf_counter() - t0
    ok = err1 <= 1e-4 and 3.5 <= ratio <= 4.5 and elapsed <= 5.0
    return CheckResult(
        1,
        "resolvent closed form e^{-t} cos t",
        ok,
        f"max_err={err1:.2e} (tol 1e-4), halving ratio={ratio:.2f} in [3.5, 4.5], {elapsed:.1f}s <= 5s",
        0.0,
    )


def c02_semigroup_reduction() -> CheckResult:
    """With no kernel the family must match the matrix exponential to 1e-6."""
    rng = np.random.default_rng(20250809)
    worst = 0.0
    norm_max = 0.0
    for _ in range(10):
        G = rng.standard_normal((3, 3))
        A = G / np.linalg.norm(G, 2) - np.eye(3)  # |A|_2 <= 2, decaying spectrum
        norm_max = max(norm_max, float(np.linalg.norm(A, 2)))
        fam = compute_resolvent(A, Kernel.zero(), 1e-3, 2.0)
        Eh = expm(1e-3 * A)
        oracle = np.empty_like(fam.mats)
        oracle[0] = np.eye(3)
        for k in range(1, fam.count):
            oracle[k] = Eh @ oracle[k - 1]
        diff = fam.mats - oracle
        worst = max(worst, float(np.linalg.svd(diff, compute_uv=False)[:, 0].max()))
    ok = worst <= 1e-6 and norm_max <= 2.0
    return CheckResult(
        2,
        "semigroup reduction vs expm oracle",
        ok,
        f"max |R - expm|_2 = {worst:.2e} (tol 1e-6) over 10 draws, max |A|_2 = {norm_max:.2f} <= 2",
        0.0,
    )


def c03_method_of_steps() -> CheckResult:
    """x' = x(t-1): both schemes hit the hand values x(1)=2, x(2)=3.5."""
    spec = _steps_benchmark()
    errs = []
    for solve in (solve_mild, solve_direct):
        rep = solve(spec, 1e-3, 2.0)
        errs.append(abs(float(rep.x.eval(1.0)[0]) - 2.0))
        errs.append(abs(float(rep.x.eval(2.0)[0]) - 3.5))
    worst = max(errs)
    return CheckResult(
        3,
        "method-of-steps benchmark (both schemes)",
        worst <= 1e-5,
        f"max |x - oracle| = {worst:.2e} (tol 1e-5) at t=1, 2",
        0.0,
    )


def c04_two_scheme_agreement() -> CheckResult:
    t0 = time.perf_counter()
    spec = stress_system(1e-3, horizon=5.0)
    gap = cross_validate(spec, 1e-3, 5.0)
    elapsed = time.perf_counter() - t0
    ok = gap <= 1e-3 and elapsed <= 30.0
    return CheckResult(
        4,
        "two-scheme agreement on stress system",
        ok,
        f"scaled gap={gap:.2e} (tol 1e-3), {elapsed:.1f}s <= 30s",
        0.0,
    )


def c05_characteristic_root() -> CheckResult:
    """Pure delay -(pi/2) x(t-1): the critical root sits exactly at i pi/2."""
    cf = CharacteristicFunction(
        np.array([[0.0]]),
        Kernel.zero(),
        DelayMeasure(1.0, atoms=[(-1.0, [[-math.pi / 2]])]),
    )
    report = find_roots(cf, (-1.0, 1.0, 0.0, 2.0), 32, 1e-10)
    target = 1j * math.pi / 2
    if len(report.roots) != 1:
        return CheckResult(5, "critical delay root at i pi/2", False, f"found {len(report.roots)} roots, expected 1", 0.0)
    rec = report.roots[0]
    err = abs(rec.lam - target)
    ok = err <= 1e-8 and rec.winding == 1
    return CheckResult(
        5,
        "critical delay root at i pi/2",
        ok,
        f"|root - i pi/2| = {err:.2e} (tol 1e-8), winding = {rec.winding}",
        0.0,
    )


def _random_system(rng) -> CharacteristicFunction:
    d = int(rng.integers(1, 4))
    G = rng.standard_normal((d, d))
    A = G / max(np.linalg.norm(G, 2), 1e-9) - 0.5 * np.eye(d)
    terms = []
    for _ in range(int(rng.integers(1, 3))):
        omega = float(rng.uniform(0.0, 3.0))
        phase = "cos" if omega == 0.0 or rng.random() < 0.5 else "sin"
        terms.append(
            KernelTerm(
                coeff=float(rng.uniform(-2.0, 2.0)),
                power=int(rng.integers(0, 3)),
                rate=float(rng.uniform(-5.0, -0.5)),
                freq=omega,
                phase=phase,
            )
        )
    atoms = [(float(rng.uniform(-1.0, -0.05)), rng.normal(scale=0.5, size=(d, d)))]
    density = []
    if rng.random() < 0.7:
        lo, hi = sorted(rng.uniform(-1.0, 0.0, size=2))
        if hi - lo > 0.05:
            deg = int(rng.integers(0, 3))
            density.append(DensityPiece(lo, hi, rng.normal(scale=0.4, size=(deg + 1, d, d))))
    L = DelayMeasure(1.0, atoms=atoms, density=density)
    return CharacteristicFunction(A, Kernel(tuple(terms)), L)


def c06_factorization_identity() -> CheckResult:
    """det Delta = det(I - L e_lam H) * det(lam I - (1+a_hat) A) off singular sets."""
    rng = np.random.default_rng(61)
    worst = 0.0
    for _ in range(5):
        cf = _random_system(rng)
        checked = 0
        while checked < 20:
            lam = complex(rng.uniform(-0.3, 2.0), rng.uniform(-3.0, 3.0))
            f1, f2 = cf.factored_det(lam)
            if abs(f2) < 1e-8 * max(1.0, abs(lam) ** cf.dim):
                continue
            cd = cf.det(lam)
            worst = max(worst, abs(cd - f1 * f2) / (1.0 + abs(cd)))
            checked += 1
    return CheckResult(
        6,
        "factorization identity (100 samples)",
        worst <= 1e-10,
        f"max scaled defect = {worst:.2e} (tol 1e-10)",
        0.0,
    )


def c07_admissibility_bound() -> CheckResult:
    """Variation bound on the input-output map over randomized draws."""
    rng = np.random.default_rng(7)
    h = 1.0 / 64.0
    violations = 0
    tightest = np.inf
    for _ in range(100):
        out_dim = int(rng.integers(1, 3))
        in_dim = int(rng.integers(1, 3))
        atoms = []
        for j in sorted(set(rng.integers(1, 65, size=int(rng.integers(0, 3))))):
            atoms.append((-float(j) * h, rng.normal(scale=0.8, size=(out_dim, in_dim))))
        density = []
        if rng.random() < 0.8:
            lo, hi = sorted(rng.uniform(-1.0, -0.5, size=2))
            if hi - lo > 0.05:
                density.append(DensityPiece(lo, hi, rng.normal(scale=0.6, size=(2, out_dim, in_dim))))
        if rng.random() < 0.5:
            lo, hi = sorted(rng.uniform(-0.45, 0.0, size=2))
            if hi - lo > 0.05:
                density.append(DensityPiece(lo, hi, rng.normal(scale=0.6, size=(3, out_dim, in_dim))))
        if not atoms and not density:
            atoms = [(-0.5, rng.normal(scale=0.8, size=(out_dim, in_dim)))]
        mu = DelayMeasure(1.0, atoms=atoms, density=density)
        n_u = 128
        samples = rng.normal(size=(n_u + 1, in_dim))
        samples[0] = 0.0  # continuous window seam
        u = Trajectory(0.0, h, samples)
        tau = h * int(rng.integers(16, 129))
        p = float(rng.uniform(1.1, 4.0))
        lhs, rhs = admissibility_check(mu, u, tau, p)
        if lhs > rhs * (1.0 + 1e-8):
            violations += 1
        if rhs > 0:
            tightest = min(tightest, rhs / max(lhs, 1e-300))
    return CheckResult(
        7,
        "admissibility inequality (100 draws)",
        violations == 0,
        f"violations = {violations}, tightest rhs/lhs ratio = {tightest:.3f}",
        0.0,
    )


def c08_composition_identity() -> CheckResult:
    rng = np.random.default_rng(8)
    h = 1.0 / 32.0
    worst = 0.0
    for i in range(100):
        kt = int(rng.integers(0, 65))
        ks = int(rng.integers(0, 65))
        if i == 0:
            ks = 0
        if i == 1:
            kt = 40  # t > r exercises nilpotency of the shift
        dim = int(rng.integers(1, 3))
        u = Trajectory(0.0, h, rng.normal(size=(kt + ks + 1, dim)))
        worst = max(worst, composition_check(u, kt * h, ks * h, 1.0))
    return CheckResult(
        8,
        "control-map splice identity (100 draws)",
        worst <= 1e-12,
        f"max grid defect = {worst:.2e} (tol 1e-12)",
        0.0,
    )


def c09_yosida_convergence() -> CheckResult:
    """Smoothed action converges to the plain one; errors fall monotonically in s."""
    h = 1.0 / 200.0
    n = 201
    cases = []
    mu1 = DelayMeasure(1.0, atoms=[(-1.0, [[1.0]])])
    seg_traj1 = Trajectory.from_function(-1.0, h, n, lambda th: [math.cos(th)])
    cases.append((mu1, seg_traj1))
    mu2 = DelayMeasure(
        1.0,
        atoms=[(-0.5, [[0.3, 0.1], [0.0, 0.2]])],
        density=[DensityPiece(-1.0, 0.0, [[[0.2, 0.0], [0.0, 0.2]], [[0.1, 0.0], [0.05, 0.0]]])],
    )
    seg_traj2 = Trajectory.from_function(-1.0, h, n, lambda th: [math.cos(th), math.exp(th)])
    cases.append((mu2, seg_traj2))
    ok = True
    details = []
    for mu, traj in cases:
        seg = HistorySegment(traj, 0.0, 1.0)
        exact = mu.apply(seg)
        errs = [float(np.linalg.norm(mu.yosida(seg, s) - exact)) for s in (10.0, 100.0, 1000.0, 10000.0)]
        monotone = all(a >= b for a, b in zip(errs, errs[1:]))
        bound = errs[-1] <= 1e-3 * (1.0 + float(np.linalg.norm(exact)))
        ok = ok and monotone and bound
        details.append(f"errors {errs[0]:.1e}->{errs[-1]:.1e}")
    return CheckResult(
        9,
        "smoothed-action convergence in s",
        ok,
        "; ".join(details) + " (monotone, final <= 1e-3 scale)",
        0.0,
    )


def _polish(f, z0: complex, steps: int = 60):
    z = complex(z0)
    for _ in range(steps):
        fz = f(z)
        dz = 1e-7 * (1.0 + abs(z))
        deriv = (f(z + dz) - f(z - dz)) / (2.0 * dz)
        if deriv == 0:
            break
        delta = fz / deriv
        z = z - delta
        if abs(delta) < 1e-13 * (1.0 + abs(z)):
            break
    return z


def c10_degenerate_consistency() -> CheckResult:
    """No kernel -> classical delay roots; no delay -> memory-only roots."""
    # (a) a = 0: polish each found root on det(lam I - A - L e_lam) built
    #     without any kernel machinery
    A = np.array([[-0.2]])
    L = DelayMeasure(1.0, atoms=[(-1.0, [[-0.8]])])
    cf = CharacteristicFunction(A, Kernel.zero(), L)
    rep = find_roots(cf, (-2.0, 1.0, 0.0, 9.0), 32, 1e-11)

    def classical(lam: complex) -> complex:
        return complex(np.linalg.det(lam * np.eye(1) - A - L.exp_moment(lam)))

    ok_a = len(rep.roots) >= 1
    worst_a = 0.0
    for rec in rep.roots:
        worst_a = max(worst_a, abs(rec.lam - _polish(classical, rec.lam)))
    ok_a = ok_a and worst_a <= 1e-9

    # (b) L = 0: every root satisfies det(lam I - (1 + a_hat) A) = 0
    A2 = np.array([[-1.0, 0.5], [0.0, -2.0]])
    kern = _exp_kernel(0.8, -1.5)
    cf2 = CharacteristicFunction(A2, kern, None)
    rep2 = find_roots(cf2, (-4.0, 0.5, 0.0, 3.0), 32, 1e-11)
    worst_b = 0.0
    for rec in rep2.roots:
        ahat = kern.laplace(rec.lam)
        free = rec.lam * np.eye(2) - (1.0 + ahat) * A2
        worst_b = max(worst_b, abs(complex(np.linalg.det(free))))
    ok_b = len(rep2.roots) >= 1 and worst_b <= 1e-10
    return CheckResult(
        10,
        "degenerate-case root consistency",
        ok_a and ok_b,
        f"classical-path match {worst_a:.1e} <= 1e-9 over {len(rep.roots)} roots; "
        f"memory-only |det| {worst_b:.1e} <= 1e-10 over {len(rep2.roots)} roots",
        0.0,
    )


def c11_stability_coupling() -> CheckResult:
    """The simulated free solution decays no slower than the spectral abscissa says."""
    A = np.array([[-1.0]])
    kern = _exp_kernel(0.5, -2.0)
    L = DelayMeasure(1.0, atoms=[(-1.0, [[0.3]])])
    cf = CharacteristicFunction(A, kern, L)
    alpha = spectral_abscissa(cf, (-3.0, 0.5), 20.0, 40, 1e-10)
    if alpha is None or alpha > -0.2:
        return CheckResult(11, "solver-spectrum stability coupling", False, f"abscissa {alpha} not <= -0.2", 0.0)
    spec = SystemSpec(
        state_dim=1,
        A=A,
        kernel=kern,
        L=L,
        r=1.0,
        x0=np.array([1.0]),
        phi=Trajectory.constant(-1.0, 0.5, 3, [1.0]),
    )
    rep = solve_mild(spec, 2e-3, 20.0)
    norms = np.linalg.norm(rep.x.samples, axis=1)
    rate, _ = fit_envelope_rate(rep.x.times, norms, 5.0, 20.0)
    ok = rate <= alpha + 0.1
    return CheckResult(
        11,
        "solver-spectrum stability coupling",
        ok,
        f"abscissa={alpha:.4f}, fitted decay rate={rate:.4f} <= {alpha + 0.1:.4f}",
        0.0,
    )


CRITERIA = [
    c01_resolvent_closed_form,
    c02_semigroup_reduction,
    c03_method_of_steps,
    c04_two_scheme_agreement,
    c05_characteristic_root,
    c06_factorization_identity,
    c07_admissibility_bound,
    c08_composition_identity,
    c09_yosida_convergence,
    c10_degenerate_consistency,
    c11_stability_coupling,
]


def run_all(stream=None) -> bool:
    """Run every criterion, print one line each, return overall success."""
    import sys

    stream = stream or sys.stdout
    all_ok = True
    total = 0.0
    for fn in CRITERIA:
        result = _timed(fn)()
        total += result.elapsed
        all_ok = all_ok and result.passed
        status = "PASS" if result.passed else "FAIL"
        stream.write(f"[{result.index:2d}/11] {result.name:<44} {status}  {result.detail} ({result.elapsed:.1f}s)\n")
    stream.write(("all criteria passed" if all_ok else "FAILURES above") + f" in {total:.1f}s\n")
    return all_ok
