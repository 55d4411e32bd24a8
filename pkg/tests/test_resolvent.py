import math

import numpy as np
import pytest

from dide import (
    Kernel,
    KernelTerm,
    NumericalError,
    Trajectory,
    commutation_defect,
    compute_resolvent,
    resolvent_residual,
    upsilon_apply,
)
from dide.matfuncs import expm
from dide.verify import fit_envelope_rate

EXP_KERNEL = Kernel((KernelTerm(1.0, 0, -1.0),))


class TestComputeResolvent:
    def test_r0_is_identity(self):
        fam = compute_resolvent(np.array([[0.5, -1.0], [0.3, -2.0]]), EXP_KERNEL, 0.01, 0.5)
        assert np.array_equal(fam.mats[0], np.eye(2))

    def test_semigroup_case_scalar(self):
        fam = compute_resolvent([[-1.0]], Kernel.zero(), 1e-3, 1.0)
        assert abs(fam.mats[-1, 0, 0] - math.exp(-1)) < 1e-6

    def test_closed_form_with_memory(self):
        # partial fractions: R_hat = (s+1)/((s+1)^2+1), so R(t) = e^{-t} cos t
        fam = compute_resolvent([[-1.0]], EXP_KERNEL, 1e-3, 4.0)
        ts = fam.times
        err = np.max(np.abs(fam.mats[:, 0, 0] - np.exp(-ts) * np.cos(ts)))
        assert err < 1e-4
        k_pi = int(round(math.pi / 1e-3))
        assert abs(fam.mats[k_pi, 0, 0] - (-math.exp(-math.pi))) < 1e-4

    def test_order_two_convergence(self):
        def err(h):
            fam = compute_resolvent([[-1.0]], EXP_KERNEL, h, 3.0)
            ts = fam.times
            return np.max(np.abs(fam.mats[:, 0, 0] - np.exp(-ts) * np.cos(ts)))

        ratio = err(4e-3) / err(2e-3)
        assert 3.5 <= ratio <= 4.5

    def test_singular_step_matrix(self):
        # I - (h/2) A singular for A = [[2]] at h = 1
        with pytest.raises(NumericalError, match="singular"):
            compute_resolvent([[2.0]], Kernel.zero(), 1.0, 2.0)

    def test_bad_grid(self):
        with pytest.raises(ValueError):
            compute_resolvent([[1.0]], Kernel.zero(), 0.0, 1.0)
        with pytest.raises(ValueError):
            compute_resolvent([[1.0]], Kernel.zero(), 0.5, 0.1)


class TestResidual:
    def test_fresh_family_at_roundoff(self):
        fam = compute_resolvent([[-1.0]], EXP_KERNEL, 1e-3, 1.0)
        assert resolvent_residual(fam) <= 1e-12

    def test_perturbation_detected(self):
        fam = compute_resolvent([[-1.0]], EXP_KERNEL, 1e-3, 1.0)
        fam.mats[500] += 1e-3
        assert resolvent_residual(fam) >= 1e-4

    def test_expm_values_leave_truncation_residual(self):
        # exact semigroup values satisfy the discrete equation only to O(h^2)
        A = np.array([[-1.0, 0.5], [0.0, -0.5]])

        def residual_at(h):
            fam = compute_resolvent(A, Kernel.zero(), h, 1.0)
            Eh = expm(h * A)
            cur = np.eye(2)
            for k in range(fam.count):
                fam.mats[k] = cur
                cur = Eh @ cur
            return resolvent_residual(fam)

        r1, r2 = residual_at(0.02), residual_at(0.01)
        assert 1e-12 < r2 < 1e-3
        assert 3.4 <= r1 / r2 <= 4.6


class TestCommutation:
    def test_scalar_exact(self):
        fam = compute_resolvent([[-1.0]], EXP_KERNEL, 0.01, 1.0)
        assert commutation_defect(fam) == 0.0

    def test_diagonal(self):
        fam = compute_resolvent(np.diag([-1.0, -2.0, -0.5]), EXP_KERNEL, 0.01, 1.0)
        assert commutation_defect(fam) <= 1e-12

    def test_random_matrix(self):
        rng = np.random.default_rng(7)
        A = rng.standard_normal((3, 3))
        A /= np.linalg.norm(A, 2)
        fam = compute_resolvent(A, EXP_KERNEL, 0.01, 2.0)
        assert commutation_defect(fam) <= 1e-10


class TestUpsilon:
    def test_zero_forcing(self):
        fam = compute_resolvent([[-1.0]], Kernel.zero(), 0.01, 1.0)
        out = upsilon_apply(fam, Trajectory.constant(0.0, 0.01, 101, [0.0]))
        assert np.all(out.samples == 0.0)

    def test_plain_integration(self):
        # A = 0, a = 0: R = I, so the convolution is int_0^t c ds = t c
        fam = compute_resolvent([[0.0]], Kernel.zero(), 0.01, 1.0)
        out = upsilon_apply(fam, Trajectory.constant(0.0, 0.01, 101, [2.0]))
        assert np.allclose(out.samples[:, 0], 2.0 * out.times, atol=1e-13)

    def test_exponential_relaxation(self):
        fam = compute_resolvent([[-1.0]], Kernel.zero(), 1e-3, 2.0)
        out = upsilon_apply(fam, Trajectory.constant(0.0, 1e-3, 2001, [1.0]))
        err = np.max(np.abs(out.samples[:, 0] - (1.0 - np.exp(-out.times))))
        assert err < 1e-6

    def test_grid_mismatch_rejected(self):
        fam = compute_resolvent([[-1.0]], Kernel.zero(), 0.01, 1.0)
        with pytest.raises(ValueError, match="step"):
            upsilon_apply(fam, Trajectory.constant(0.0, 0.02, 11, [1.0]))


class TestLaplaceConsistency:
    def test_transform_matches_free_resolvent(self):
        # trapezoidal Laplace transform of R at lam = 1 vs (lam - (1+a_hat) A)^{-1}
        A = np.array([[-1.0, 0.3], [0.0, -2.0]])
        kern = Kernel((KernelTerm(0.5, 0, -2.0),))
        h, T = 5e-3, 25.0
        fam = compute_resolvent(A, kern, h, T)
        lam = 1.0
        weights = np.exp(-lam * fam.times)
        weights[0] *= 0.5
        weights[-1] *= 0.5
        transform = h * np.einsum("k,kij->ij", weights, fam.mats)
        H = np.linalg.inv(lam * np.eye(2) - (1.0 + kern.laplace(lam)) * A)
        assert np.max(np.abs(transform - H)) < 1e-4

    def test_exponential_boundedness(self):
        A = np.array([[-1.0, 0.3], [0.0, -2.0]])
        kern = Kernel((KernelTerm(0.5, 0, -2.0),))
        fam = compute_resolvent(A, kern, 5e-3, 20.0)
        norms = np.linalg.norm(fam.mats, axis=(1, 2))
        rate, _ = fit_envelope_rate(fam.times, norms, 1.0, 20.0)
        assert rate < 0.0
