import math

import numpy as np
import pytest

from dide import (
    CharacteristicFunction,
    DelayMeasure,
    Kernel,
    KernelPoleError,
    KernelTerm,
    SingularFreePartError,
    find_roots,
    spectral_abscissa,
)
from dide.verify import _random_system

EXP_KERNEL = Kernel((KernelTerm(1.0, 0, -1.0),))


class TestCharMatrix:
    def test_atom_at_zero_argument(self):
        cf = CharacteristicFunction([[0.0]], Kernel.zero(), DelayMeasure(1.0, atoms=[(-1.0, [[3.0]])]))
        assert cf.matrix(0.0)[0, 0] == pytest.approx(-3.0)

    def test_classical_resolvent_case(self):
        A = np.array([[1.0, 2.0], [0.0, -1.0]])
        cf = CharacteristicFunction(A, Kernel.zero(), None)
        lam = 0.7 + 0.2j
        assert np.allclose(cf.matrix(lam), lam * np.eye(2) - A)

    def test_critical_cancellation(self):
        cf = CharacteristicFunction(
            [[0.0]], Kernel.zero(), DelayMeasure(1.0, atoms=[(-1.0, [[-math.pi / 2]])])
        )
        assert abs(cf.det(1j * math.pi / 2)) <= 1e-14

    def test_pole_rejected(self):
        cf = CharacteristicFunction([[-1.0]], EXP_KERNEL, None)
        with pytest.raises(KernelPoleError):
            cf.det(-1.0)

    def test_eigenvalue_root(self):
        A = np.diag([-1.0, -2.0])
        cf = CharacteristicFunction(A, Kernel.zero(), None)
        assert abs(cf.det(-1.0)) <= 1e-12


class TestFactoredDet:
    def test_no_delay_first_factor_is_one(self):
        cf = CharacteristicFunction([[-1.0]], EXP_KERNEL, None)
        f1, f2 = cf.factored_det(0.5)
        assert f1 == 1.0
        assert f2 == pytest.approx(cf.det(0.5))

    def test_product_identity_random(self):
        rng = np.random.default_rng(33)
        for _ in range(3):
            cf = _random_system(rng)
            for _ in range(10):
                lam = complex(rng.uniform(-0.3, 2.0), rng.uniform(-3.0, 3.0))
                f1, f2 = cf.factored_det(lam)
                if abs(f2) < 1e-8:
                    continue
                cd = cf.det(lam)
                assert abs(cd - f1 * f2) / (1.0 + abs(cd)) <= 1e-10

    def test_scalar_memory_example(self):
        cf = CharacteristicFunction([[-1.0]], EXP_KERNEL, DelayMeasure(1.0, atoms=[(-1.0, [[0.1]])]))
        f1, f2 = cf.factored_det(1.0)
        assert f1 * f2 == pytest.approx(cf.det(1.0), rel=1e-12)

    def test_singular_free_part_distinct_error(self):
        # at lam = 1 the free part 1 - 1 = 0 for A = [[1]] and no kernel
        cf = CharacteristicFunction([[1.0]], Kernel.zero(), DelayMeasure(1.0, atoms=[(-1.0, [[0.5]])]))
        with pytest.raises(SingularFreePartError):
            cf.factored_det(1.0)

    def test_conjugate_symmetry(self):
        rng = np.random.default_rng(34)
        cf = _random_system(rng)
        for lam in (0.4 + 1.3j, -0.1 + 2.2j, 1.5 - 0.8j):
            assert abs(cf.det(np.conj(lam)) - np.conj(cf.det(lam))) <= 1e-12


class TestFindRoots:
    def test_critical_root_certified(self):
        cf = CharacteristicFunction(
            [[0.0]], Kernel.zero(), DelayMeasure(1.0, atoms=[(-1.0, [[-math.pi / 2]])])
        )
        rep = find_roots(cf, (-1.0, 1.0, 0.0, 2.0), 32, 1e-10)
        assert len(rep.roots) == 1
        rec = rep.roots[0]
        assert abs(rec.lam - 1j * math.pi / 2) <= 1e-8
        assert rec.winding == 1
        assert rec.abs_det <= 1e-8 * max(1.0, abs(rec.lam))

    def test_eigenvalues_found_exactly(self):
        cf = CharacteristicFunction(np.diag([-1.0, -2.0]), Kernel.zero(), None)
        rep = find_roots(cf, (-3.0, 0.5, -1.0, 1.0), 16, 1e-10)
        lams = sorted(rec.lam.real for rec in rep.roots)
        assert len(lams) == 2
        assert abs(lams[0] + 2.0) <= 1e-8 and abs(lams[1] + 1.0) <= 1e-8

    def test_memory_root_with_pole_on_boundary(self):
        # det has a removable 1/(lam+1) structure; the true zero is -1 + i
        cf = CharacteristicFunction([[-1.0]], EXP_KERNEL, None)
        rep = find_roots(cf, (-2.0, 0.0, 0.0, 2.0), 32, 1e-10)
        assert len(rep.roots) == 1
        assert abs(rep.roots[0].lam - (-1.0 + 1.0j)) <= 1e-8
        assert any("pole" in w for w in rep.warnings)

    def test_empty_region(self):
        cf = CharacteristicFunction(np.diag([-1.0, -2.0]), Kernel.zero(), None)
        rep = find_roots(cf, (1.0, 2.0, 0.5, 1.5), 8, 1e-10)
        assert rep.roots == []
        assert rep.abscissa is None

    def test_determinism(self):
        cf = CharacteristicFunction(
            [[0.0]], Kernel.zero(), DelayMeasure(1.0, atoms=[(-1.0, [[-2.0]])])
        )
        r1 = find_roots(cf, (-2.0, 1.0, 0.0, 8.0), 24, 1e-10)
        r2 = find_roots(cf, (-2.0, 1.0, 0.0, 8.0), 24, 1e-10)
        assert [rec.lam for rec in r1.roots] == [rec.lam for rec in r2.roots]
        assert np.array_equal(r1.windings, r2.windings)

    def test_validation(self):
        cf = CharacteristicFunction([[-1.0]], Kernel.zero(), None)
        with pytest.raises(ValueError, match="grid"):
            find_roots(cf, (-1.0, 1.0, 0.0, 1.0), 4, 1e-10)
        with pytest.raises(ValueError, match="empty"):
            find_roots(cf, (1.0, -1.0, 0.0, 1.0), 16, 1e-10)


class TestSpectralAbscissa:
    def test_stable_pure_delay(self):
        # |b| r = 0.5 < pi/2, so x' = -x(t - 0.5) is exponentially stable
        cf = CharacteristicFunction(
            [[0.0]], Kernel.zero(), DelayMeasure(0.5, atoms=[(-0.5, [[-1.0]])])
        )
        alpha = spectral_abscissa(cf, (-5.0, 1.0), 20.0, 40, 1e-10)
        assert alpha is not None and alpha < 0.0

    def test_critical_delay(self):
        cf = CharacteristicFunction(
            [[0.0]], Kernel.zero(), DelayMeasure(1.0, atoms=[(-1.0, [[-math.pi / 2]])])
        )
        alpha = spectral_abscissa(cf, (-5.0, 1.0), 20.0, 48, 1e-10)
        assert abs(alpha) <= 1e-8

    def test_classical_case_matches_eigenvalues(self):
        cf = CharacteristicFunction(np.diag([-1.0, -2.0]), Kernel.zero(), None)
        alpha = spectral_abscissa(cf, (-3.0, 0.5), 2.0, 16, 1e-10)
        assert alpha == pytest.approx(-1.0, abs=1e-8)
