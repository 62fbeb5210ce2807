import numpy as np
import pytest

from qkge.errors import LengthMismatchError, ZeroNormError
from qkge import quaternion as qt
from qkge.quaternion import IDENTITY, Quaternion, QuaternionVector


def random_quaternion(rng, scale=10.0):
    return Quaternion(*(rng.uniform(-scale, scale) for _ in range(4)))


class TestScalarAlgebra:
    def test_basis_products(self):
        i = Quaternion(0, 1, 0, 0)
        j = Quaternion(0, 0, 1, 0)
        k = Quaternion(0, 0, 0, 1)
        assert qt.hamilton(i, j) == k
        assert qt.hamilton(j, i) == Quaternion(0, 0, 0, -1)
        assert qt.hamilton(j, k) == i
        assert qt.hamilton(k, i) == j
        assert qt.hamilton(i, i) == Quaternion(-1, 0, 0, 0)

    def test_hand_product(self):
        got = qt.hamilton(Quaternion(1, 2, 3, 4), Quaternion(5, 6, 7, 8))
        assert got == Quaternion(-60, 12, 30, 24)

    def test_identity_is_neutral(self, rng):
        q = random_quaternion(rng)
        assert qt.hamilton(q, IDENTITY) == q
        assert qt.hamilton(IDENTITY, q) == q

    def test_conjugate_involution(self, rng):
        q = random_quaternion(rng)
        assert qt.conjugate(qt.conjugate(q)) == q

    def test_times_own_conjugate_is_real(self, rng):
        q = random_quaternion(rng)
        prod = qt.hamilton(q, qt.conjugate(q))
        np.testing.assert_allclose(prod.a, q.norm() ** 2, rtol=1e-12)
        np.testing.assert_allclose([prod.b, prod.c, prod.d], 0.0, atol=1e-9)

    def test_norm_multiplicative(self, rng):
        q1, q2 = random_quaternion(rng), random_quaternion(rng)
        np.testing.assert_allclose(
            qt.hamilton(q1, q2).norm(), q1.norm() * q2.norm(), rtol=1e-12
        )

    def test_add_sub(self):
        q1 = Quaternion(1, 2, 3, 4)
        q2 = Quaternion(5, 6, 7, 8)
        assert qt.add(q1, q2) == Quaternion(6, 8, 10, 12)
        assert qt.sub(q2, q1) == Quaternion(4, 4, 4, 4)

    def test_normalize_unit(self):
        n = qt.normalize(Quaternion(3, 4, 0, 0))
        assert n == Quaternion(0.6, 0.8, 0, 0)
        np.testing.assert_allclose(n.norm(), 1.0, rtol=1e-15)

    def test_normalize_idempotent(self, rng):
        q = random_quaternion(rng)
        once = qt.normalize(q)
        twice = qt.normalize(once)
        np.testing.assert_allclose(
            [twice.a, twice.b, twice.c, twice.d],
            [once.a, once.b, once.c, once.d], atol=1e-12,
        )

    def test_normalize_zero_raises(self):
        with pytest.raises(ZeroNormError):
            qt.normalize(Quaternion(0, 0, 0, 0))

    def test_normalize_below_default_eps_raises(self):
        with pytest.raises(ZeroNormError):
            qt.normalize(Quaternion(1e-8, 0, 0, 0))


class TestPartsKernels:
    """The array kernels must agree with the scalar reference ops."""

    def sample_parts(self, rng, n=500):
        return tuple(rng.uniform(-10, 10, size=n) for _ in range(4))

    def test_hamilton_matches_scalar(self, rng):
        p = self.sample_parts(rng, 50)
        q = self.sample_parts(rng, 50)
        out = qt.hamilton_parts(p, q)
        for i in range(50):
            qi = qt.hamilton(Quaternion(*(x[i] for x in p)),
                             Quaternion(*(x[i] for x in q)))
            np.testing.assert_allclose(
                [out[0][i], out[1][i], out[2][i], out[3][i]],
                [qi.a, qi.b, qi.c, qi.d], rtol=1e-12,
            )

    def test_conjugate_and_inner(self, rng):
        p = self.sample_parts(rng)
        c = qt.conjugate_parts(p)
        np.testing.assert_array_equal(c[0], p[0])
        np.testing.assert_array_equal(c[1], -p[1])
        real = qt.inner_parts(p, p)
        np.testing.assert_allclose(real, qt.norm_sq_parts(p), rtol=1e-12)

    def test_norm_parts_matches_naive(self, rng):
        p = self.sample_parts(rng)
        np.testing.assert_allclose(
            qt.norm_parts(p), np.sqrt(qt.norm_sq_parts(p)), rtol=1e-12
        )

    def test_norm_parts_far_below_normal_range(self):
        p = tuple(np.array([s]) for s in (1e-180, -2e-180, 0.0, 1e-190))
        n = qt.norm_parts(p)
        assert n[0] > 0
        np.testing.assert_allclose(n[0] / 1e-180, np.sqrt(5.0), rtol=1e-10)

    def test_normalize_parts_unit_and_eps(self):
        tiny = tuple(np.array([s]) for s in (3e-200, 4e-200, 0.0, 0.0))
        with pytest.raises(ZeroNormError):
            qt.normalize_parts(tiny)  # default eps rejects
        a, b, c, d = qt.normalize_parts(tiny, eps=0.0)
        np.testing.assert_allclose([a[0], b[0]], [0.6, 0.8], rtol=1e-12)
        with pytest.raises(ZeroNormError):
            qt.normalize_parts(tuple(np.zeros(2) for _ in range(4)), eps=0.0)


class TestQuaternionVector:
    def test_construction_and_access(self, rng):
        arrs = [rng.normal(size=5) for _ in range(4)]
        v = QuaternionVector(*arrs)
        assert len(v) == 5
        assert v[2] == Quaternion(*(float(a[2]) for a in arrs))

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            QuaternionVector(np.zeros(3), np.zeros(3), np.zeros(3), np.zeros(4))

    def test_full(self):
        v = QuaternionVector.full(4, Quaternion(1, 0, 0, 0))
        assert all(v[i] == IDENTITY for i in range(4))

    def test_hamilton_vec_matches_scalar_loop(self, rng):
        u = QuaternionVector(*(rng.normal(size=6) for _ in range(4)))
        v = QuaternionVector(*(rng.normal(size=6) for _ in range(4)))
        w = qt.hamilton_vec(u, v)
        for i in range(6):
            expect = qt.hamilton(u[i], v[i])
            got = w[i]
            np.testing.assert_allclose(
                [got.a, got.b, got.c, got.d],
                [expect.a, expect.b, expect.c, expect.d], rtol=1e-12,
            )

    def test_inner_vec_matches_scalar_sum(self, rng):
        u = QuaternionVector(*(rng.normal(size=6) for _ in range(4)))
        v = QuaternionVector(*(rng.normal(size=6) for _ in range(4)))
        expect = sum(qt.inner(u[i], v[i]) for i in range(6))
        np.testing.assert_allclose(qt.inner_vec(u, v), expect, rtol=1e-12)

    def test_vec_length_mismatch_ops(self, rng):
        u = QuaternionVector(*(rng.normal(size=3) for _ in range(4)))
        v = QuaternionVector(*(rng.normal(size=5) for _ in range(4)))
        with pytest.raises(LengthMismatchError):
            qt.hamilton_vec(u, v)
        with pytest.raises(LengthMismatchError):
            qt.inner_vec(u, v)

    def test_normalize_vec_unit_norms(self, rng):
        v = QuaternionVector(*(rng.normal(size=8) for _ in range(4)))
        n = qt.normalize_vec(v)
        np.testing.assert_allclose(n.norms(), np.ones(8), rtol=1e-12)
