"""Twistors: incidence with events, nullity, contraction, contact form.

A twistor is a pair (omega, pi) of two-component complex vectors, taken
projectively when comparing; pi != 0 marks the affine part.  The
contraction sends a twistor to a complex (1,1)-homogeneous value over the
sky point of pi, real exactly on null twistors.  The matched covector for
comparisons with size fields is the componentwise conjugate of pi.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NotNullError, ZeroPiError
from .sky import celestial_eval
from .spinor import pauli_transform


@dataclass(frozen=True)
class Twistor:
    omega: np.ndarray  # (2,) complex
    pi: np.ndarray  # (2,) complex

    def __post_init__(self):
        object.__setattr__(self, "omega", np.asarray(self.omega, dtype=complex))
        object.__setattr__(self, "pi", np.asarray(self.pi, dtype=complex))

    @property
    def scale(self) -> float:
        return max(
            float(np.linalg.norm(self.pi) * np.linalg.norm(self.omega)), 1e-300
        )


def _require_pi(pi):
    pi = np.asarray(pi, dtype=complex)
    if np.linalg.norm(pi) < 1e-150:
        raise ZeroPiError("affine twistor operations need pi != 0")
    return pi


def incidence(x, pi) -> Twistor:
    """Twistor lying on the lifted sky of x: omega = i (matrix of x) pi."""
    pi = _require_pi(pi)
    return Twistor(omega=1j * pauli_transform(np.asarray(x, float)) @ pi, pi=pi)


def null_constraint(z: Twistor) -> float:
    """conj(pi) . omega + conj of it; zero exactly on null twistors."""
    return float(2.0 * np.real(np.conj(z.pi) @ z.omega))


def is_null(z: Twistor, tol: float = 1e-10) -> bool:
    return abs(null_constraint(z)) <= tol * z.scale


@dataclass(frozen=True)
class TwistorContraction:
    """Value of the contraction at the representative pi of its sky point."""

    pi: np.ndarray
    value: complex

    @property
    def xi(self) -> np.ndarray:
        """Matched covector on the un-conjugated sky: componentwise conjugate."""
        return np.conj(self.pi)

    def is_real(self, tol: float = 1e-12) -> bool:
        scale = max(abs(self.value), float(np.linalg.norm(self.pi)) ** 2, 1e-300)
        return abs(self.value.imag) <= tol * scale


def contraction(z: Twistor) -> TwistorContraction:
    """The complex size -i conj(pi) . omega over the sky point of pi."""
    _require_pi(z.pi)
    return TwistorContraction(pi=z.pi, value=complex(-1j * (np.conj(z.pi) @ z.omega)))


def contact_form(z: Twistor, d_omega, d_pi, tol: float = 1e-10) -> complex:
    """-i (conj(pi) . d_omega + conj(omega) . d_pi) on a null affine twistor.

    Real-valued when (d_omega, d_pi) preserves the null constraint.
    """
    _require_pi(z.pi)
    if not is_null(z, tol):
        raise NotNullError("contact form lives on the null hypersurface")
    d_omega = np.asarray(d_omega, dtype=complex)
    d_pi = np.asarray(d_pi, dtype=complex)
    return complex(-1j * (np.conj(z.pi) @ d_omega + np.conj(z.omega) @ d_pi))


def project_to_constraint(z: Twistor, d_omega, d_pi):
    """Remove the component of a tangent that violates the null constraint.

    The constraint gradient with respect to the real inner product on C^4
    is (pi, omega); the projection subtracts its multiple.
    """
    d_omega = np.asarray(d_omega, dtype=complex)
    d_pi = np.asarray(d_pi, dtype=complex)
    grad_o, grad_p = z.pi, z.omega
    norm2 = float(np.linalg.norm(grad_o) ** 2 + np.linalg.norm(grad_p) ** 2)
    if norm2 == 0.0:
        return d_omega, d_pi
    dn = 2.0 * np.real(np.conj(grad_o) @ d_omega + np.conj(grad_p) @ d_pi)
    lam = dn / (2.0 * norm2)
    return d_omega - lam * grad_o, d_pi - lam * grad_p


def twistor_for_sky_point(x, xi) -> Twistor:
    """Incidence twistor of the event x at the sky point P(xi)."""
    return incidence(x, np.conj(np.asarray(xi, dtype=complex)))


def contraction_matches_transform(x, pi) -> float:
    """Residual of contraction(incidence(x, pi)) against the size field of x."""
    z = incidence(x, pi)
    tau = contraction(z)
    lhs = tau.value
    rhs = celestial_eval(np.asarray(x, float), tau.xi)
    scale = max(abs(lhs), abs(rhs), 1e-300)
    return abs(lhs - rhs) / scale
