"""Exact batched quaternion arithmetic.

A quaternion ``a + b*i + c*j + d*k`` is kept as its four real coefficients.
Vectors of quaternions use a component-of-quaternion layout: four parallel
real arrays ``a, b, c, d`` of equal length, so that batched products over a
whole embedding (or a whole parameter table) vectorize in numpy.

All reference arithmetic is float64. Every public operation is a pure
function and safe to call concurrently.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatchError, ZeroNormError

# Squared-norm floor below which normalization refuses to divide.
DEFAULT_NORM_EPS = 1e-12

# A "parts" value is a 4-tuple (a, b, c, d) of broadcast-compatible float
# arrays (or scalars). These kernels are the hot path shared by the scalar
# API below and by the model's table-level scoring code.


def hamilton_parts(p, q):
    """Hamilton product of two quaternion parts tuples, componentwise.

    (a1 + b1 i + c1 j + d1 k)(a2 + b2 i + c2 j + d2 k) =
        (a1 a2 - b1 b2 - c1 c2 - d1 d2)
      + (a1 b2 + b1 a2 + c1 d2 - d1 c2) i
      + (a1 c2 - b1 d2 + c1 a2 + d1 b2) j
      + (a1 d2 + b1 c2 - c1 b2 + d1 a2) k
    """
    a1, b1, c1, d1 = p
    a2, b2, c2, d2 = q
    return (
        a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
        a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
        a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
        a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
    )


def conjugate_parts(p):
    """Conjugate: flip the sign of the three imaginary components."""
    a, b, c, d = p
    return (a, -b, -c, -d)


def inner_parts(p, q):
    """Componentwise real inner product a1*a2 + b1*b2 + c1*c2 + d1*d2."""
    a1, b1, c1, d1 = p
    a2, b2, c2, d2 = q
    return a1 * a2 + b1 * b2 + c1 * c2 + d1 * d2


def norm_sq_parts(p):
    """Componentwise squared Euclidean norm."""
    a, b, c, d = p
    return a * a + b * b + c * c + d * d


def norm_parts(p):
    """Componentwise Euclidean norm, rescaled against under/overflow.

    Squaring happens after division by the largest component magnitude, so
    quaternions far below sqrt(smallest normal float) still yield exact
    positive norms instead of underflowing to zero.
    """
    a, b, c, d = p
    m = np.maximum(np.maximum(np.abs(a), np.abs(b)),
                   np.maximum(np.abs(c), np.abs(d)))
    safe = np.where(m > 0.0, m, 1.0)
    ra, rb, rc, rd = a / safe, b / safe, c / safe, d / safe
    return m * np.sqrt(ra * ra + rb * rb + rc * rc + rd * rd)


def check_norms(norms, eps=DEFAULT_NORM_EPS):
    """Raise ZeroNormError where a squared norm would fall below ``eps``.

    With eps=0 only exactly-zero quaternions are rejected; vanishingly
    small but nonzero rows stay normalizable thanks to the rescaled norm.
    """
    bad = (norms == 0.0) if eps == 0.0 else (norms < math.sqrt(eps))
    if np.any(bad):
        raise ZeroNormError(
            f"cannot normalize quaternion with squared norm below "
            f"{eps if eps > 0.0 else 'the smallest positive float'}"
        )


def normalize_parts(p, eps=DEFAULT_NORM_EPS):
    """Divide each quaternion by its Euclidean norm.

    Raises ZeroNormError if any squared norm falls below ``eps``.
    """
    n = norm_parts(p)
    check_norms(n, eps)
    a, b, c, d = p
    return (a / n, b / n, c / n, d / n)


@dataclass(frozen=True)
class Quaternion:
    """One hypercomplex number ``a + b*i + c*j + d*k``."""

    a: float
    b: float
    c: float
    d: float

    def norm(self) -> float:
        return math.sqrt(self.a**2 + self.b**2 + self.c**2 + self.d**2)


#: Multiplicative identity, 1 + 0i + 0j + 0k.
IDENTITY = Quaternion(1.0, 0.0, 0.0, 0.0)


def hamilton(q1: Quaternion, q2: Quaternion) -> Quaternion:
    """Hamilton product q1 ⊗ q2 (non-commutative)."""
    return Quaternion(
        q1.a * q2.a - q1.b * q2.b - q1.c * q2.c - q1.d * q2.d,
        q1.a * q2.b + q1.b * q2.a + q1.c * q2.d - q1.d * q2.c,
        q1.a * q2.c - q1.b * q2.d + q1.c * q2.a + q1.d * q2.b,
        q1.a * q2.d + q1.b * q2.c - q1.c * q2.b + q1.d * q2.a,
    )


def conjugate(q: Quaternion) -> Quaternion:
    return Quaternion(q.a, -q.b, -q.c, -q.d)


def normalize(q: Quaternion, eps: float = DEFAULT_NORM_EPS) -> Quaternion:
    """Unit quaternion q / |q|; ZeroNormError if |q|^2 < eps."""
    nsq = q.a**2 + q.b**2 + q.c**2 + q.d**2
    if nsq < eps:
        raise ZeroNormError(f"cannot normalize quaternion with squared norm {nsq!r}")
    n = math.sqrt(nsq)
    return Quaternion(q.a / n, q.b / n, q.c / n, q.d / n)


def inner(q1: Quaternion, q2: Quaternion) -> float:
    return q1.a * q2.a + q1.b * q2.b + q1.c * q2.c + q1.d * q2.d


def add(q1: Quaternion, q2: Quaternion) -> Quaternion:
    return Quaternion(q1.a + q2.a, q1.b + q2.b, q1.c + q2.c, q1.d + q2.d)


def sub(q1: Quaternion, q2: Quaternion) -> Quaternion:
    return Quaternion(q1.a - q2.a, q1.b - q2.b, q1.c - q2.c, q1.d - q2.d)


class QuaternionVector:
    """A length-k array of quaternions: four parallel float64 arrays.

    This is the embedding of one entity or relation. Component arrays are
    stored as given (no copy when already float64 1-d), so a vector can be
    a zero-copy view into a parameter table.
    """

    __slots__ = ("a", "b", "c", "d")

    def __init__(self, a, b, c, d):
        self.a = np.asarray(a, dtype=np.float64)
        self.b = np.asarray(b, dtype=np.float64)
        self.c = np.asarray(c, dtype=np.float64)
        self.d = np.asarray(d, dtype=np.float64)
        if not (self.a.ndim == self.b.ndim == self.c.ndim == self.d.ndim == 1):
            raise ValueError("quaternion vector components must be 1-d arrays")
        if not (len(self.a) == len(self.b) == len(self.c) == len(self.d)):
            raise LengthMismatchError("component arrays differ in length")
        if len(self.a) < 1:
            raise ValueError("quaternion vector must have length k >= 1")

    def __len__(self) -> int:
        return len(self.a)

    def parts(self):
        return (self.a, self.b, self.c, self.d)

    def __getitem__(self, i: int) -> Quaternion:
        return Quaternion(float(self.a[i]), float(self.b[i]), float(self.c[i]), float(self.d[i]))

    def copy(self) -> "QuaternionVector":
        return QuaternionVector(self.a.copy(), self.b.copy(), self.c.copy(), self.d.copy())

    def norms(self) -> np.ndarray:
        """Per-component Euclidean norms, shape (k,)."""
        return np.sqrt(norm_sq_parts(self.parts()))

    @classmethod
    def full(cls, k: int, q: Quaternion) -> "QuaternionVector":
        """Vector of length k with every component equal to ``q``."""
        return cls(
            np.full(k, q.a), np.full(k, q.b), np.full(k, q.c), np.full(k, q.d)
        )


def _check_lengths(u: QuaternionVector, v: QuaternionVector):
    if len(u) != len(v):
        raise LengthMismatchError(f"vector lengths differ: {len(u)} vs {len(v)}")


def hamilton_vec(u: QuaternionVector, v: QuaternionVector) -> QuaternionVector:
    """Elementwise Hamilton product of two equal-length vectors."""
    _check_lengths(u, v)
    return QuaternionVector(*hamilton_parts(u.parts(), v.parts()))


def normalize_vec(v: QuaternionVector, eps: float = DEFAULT_NORM_EPS) -> QuaternionVector:
    """Normalize every component to unit norm; ZeroNormError on degenerate ones."""
    return QuaternionVector(*normalize_parts(v.parts(), eps))


def inner_vec(u: QuaternionVector, v: QuaternionVector) -> float:
    """Scalar inner product: sum over all k components of the 4-part products."""
    _check_lengths(u, v)
    return float(
        np.dot(u.a, v.a) + np.dot(u.b, v.b) + np.dot(u.c, v.c) + np.dot(u.d, v.d)
    )
