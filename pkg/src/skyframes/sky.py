"""The sky as CP^1: samples, homogeneous line-bundle values, size fields.

A sky point is a nonzero covector xi in C^2* taken projectively.  A size
field is a real (1,1)-homogeneous function on C^2*; the image of the
vector -> field transform is always polynomial with a Hermitian 2x2
coefficient matrix, so that representation is primary.  Sampled values
over a SkySample are kept for fields that arise from curved-frame images
and have no polynomial form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import spinor
from .errors import (
    BadCountError,
    NonPolynomialError,
    UnsupportedSignatureError,
    ZeroSpinorError,
)

#: Bidegrees of homogeneity with a supported evaluation rule.
SUPPORTED_SIGNATURES = {(1, 0), (0, 1), (1, 1), (2, 0)}

_GOLDEN = (1.0 + np.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class SkySample:
    """A finite set of unit covector representatives of sky points."""

    xi: np.ndarray  # (n, 2) complex, unit rows
    scheme: str = "fibonacci"
    seed: int | None = None

    @property
    def n(self) -> int:
        return self.xi.shape[0]

    def directions(self) -> np.ndarray:
        """Unit vectors on S^2: spatial parts of the sampled null directions."""
        return spinor.direction_for_cospinor(self.xi)

    def __iter__(self):
        return iter(self.xi)


def sample_sky(n, scheme="fibonacci", seed=None):
    """Draw n distinct unit covectors; fibonacci is quasi-uniform on S^2."""
    if n < 4:
        raise BadCountError(f"need at least 4 sky samples, got {n}")
    if scheme == "fibonacci":
        i = np.arange(n)
        theta = 2.0 * np.pi * i / _GOLDEN
        cos_phi = 1.0 - 2.0 * (i + 0.5) / n
        sin_phi = np.sqrt(np.maximum(0.0, 1.0 - cos_phi**2))
        d = np.stack(
            [np.cos(theta) * sin_phi, np.sin(theta) * sin_phi, cos_phi], axis=-1
        )
        xi = spinor.cospinor_for_direction(d)
    elif scheme == "random":
        rng = np.random.default_rng(seed)
        z = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
        while np.any(np.linalg.norm(z, axis=-1) < 1e-6):  # pragma: no cover
            z = rng.normal(size=(n, 2)) + 1j * rng.normal(size=(n, 2))
        xi = z
    else:
        raise ValueError(f"unknown sampling scheme {scheme!r}")
    xi = xi / np.linalg.norm(xi, axis=-1, keepdims=True)
    return SkySample(xi=xi, scheme=scheme, seed=seed)


def eval_homogeneous(coeffs, signature, xi):
    """Value at xi of a section with the given homogeneity bidegree.

    Coefficient conventions: (1,0) takes a spinor acting as the linear
    functional xi_A w^A; (0,1) the conjugate-linear counterpart; (1,1) a
    Hermitian matrix contracted as xi H xi^dagger; (2,0) a pair of spinors
    (rows of a 2x2 array) whose two linear factors are multiplied.
    """
    signature = tuple(signature)
    if signature not in SUPPORTED_SIGNATURES:
        raise UnsupportedSignatureError(f"bidegree {signature} not supported")
    xi = np.asarray(xi, dtype=complex)
    coeffs = np.asarray(coeffs, dtype=complex)
    if signature == (1, 0):
        return xi @ coeffs
    if signature == (0, 1):
        return np.conj(xi) @ coeffs
    if signature == (1, 1):
        return np.einsum("...a,ab,...b->...", xi, coeffs, np.conj(xi))
    return (xi @ coeffs[0]) * (xi @ coeffs[1])


def _contract(matrix, xi):
    """xi H xi^dagger for unit or non-unit xi rows (..., 2)."""
    return np.einsum("...a,ab,...b->...", xi, matrix, np.conj(xi))


@dataclass(frozen=True)
class SizeField:
    """A real (1,1)-homogeneous function on C^2*.

    Polynomial fields carry a Hermitian coefficient matrix; purely sampled
    fields carry values over a SkySample instead and support no algebra.
    """

    matrix: np.ndarray | None = None
    sample: SkySample | None = None
    values: np.ndarray | None = None

    def __post_init__(self):
        if self.matrix is not None:
            m = spinor.check_hermitian(self.matrix)
            object.__setattr__(self, "matrix", np.asarray(m, dtype=complex))
        elif self.values is None or self.sample is None:
            raise NonPolynomialError("need a coefficient matrix or sampled values")

    @property
    def is_polynomial(self) -> bool:
        return self.matrix is not None

    def __call__(self, xi):
        if not self.is_polynomial:
            raise NonPolynomialError("sampled field supports no pointwise eval")
        return _contract(self.matrix, np.asarray(xi, dtype=complex)).real

    def eval_many(self, xis):
        if self.is_polynomial:
            return self(xis)
        return np.asarray(self.values, dtype=float)

    def _other_matrix(self, other):
        if not (self.is_polynomial and other.is_polynomial):
            raise NonPolynomialError("field algebra needs polynomial operands")
        return other.matrix

    def __add__(self, other):
        return SizeField(matrix=self.matrix + self._other_matrix(other))

    def __sub__(self, other):
        return SizeField(matrix=self.matrix - self._other_matrix(other))

    def __mul__(self, scalar):
        if not self.is_polynomial:
            raise NonPolynomialError("field algebra needs polynomial operands")
        return SizeField(matrix=self.matrix * float(scalar))

    __rmul__ = __mul__


def celestial_transform(v):
    """The 4-vector as a signed size field: xi -> xi_A v^{AA'} conj(xi)_{A'}."""
    return SizeField(matrix=spinor.pauli_transform(v))


def celestial_eval(v, xi):
    """Direct evaluation of the transform of v (..., 4) at xi (..., 2)."""
    return np.einsum(
        "...a,...ab,...b->...",
        np.asarray(xi, dtype=complex),
        spinor.pauli_transform(v),
        np.conj(xi),
    ).real


def modulus_squared(zeta):
    """Fiberwise squared modulus, the section of sizes |zeta|^2."""
    return np.abs(np.asarray(zeta)) ** 2


def hermitian_eigenvalues(h):
    """Closed-form eigenvalues of Hermitian 2x2 matrices, ascending."""
    h = np.asarray(h, dtype=complex)
    tr = (h[..., 0, 0] + h[..., 1, 1]).real
    det = (h[..., 0, 0] * h[..., 1, 1] - h[..., 0, 1] * h[..., 1, 0]).real
    disc = np.sqrt(np.maximum(tr**2 - 4.0 * det, 0.0))
    return np.stack([(tr - disc) / 2.0, (tr + disc) / 2.0], axis=-1)


def dominates(a: SizeField, b: SizeField, tol=1e-12) -> bool:
    """Pointwise a >= b on the sky, via positive semidefiniteness.

    The tolerance is applied to the smallest eigenvalue of the difference
    matrix, scaled by its largest entry; the boundary counts as dominated.
    """
    if not (a.is_polynomial and b.is_polynomial):
        raise NonPolynomialError("dominates needs polynomial fields")
    d = a.matrix - b.matrix
    scale = max(float(np.abs(d).max()), 1.0)
    return bool(hermitian_eigenvalues(d)[..., 0] >= -tol * scale)


def unit_cospinor(xi):
    """Normalise a covector representative; reject (numerically) zero ones."""
    xi = np.asarray(xi, dtype=complex)
    nrm = np.linalg.norm(xi, axis=-1)
    if np.any(nrm < 1e-150):
        raise ZeroSpinorError("sky point needs a nonzero covector")
    return xi / nrm[..., None]
