"""The translation-invariant conformal frame of flat space.

The target 3-manifold is the total space of the signed bundle of sizes,
trivialised as (sky point, real height); the image of the sky of an event
x is the graph of the (1,1)-homogeneous field of x.  Level sets of the
frame map are the null hyperplanes of flat space, and the pointwise order
of graphs reproduces the causal order.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import sky as skymod
from . import spinor
from .sky import SkySample, celestial_eval, celestial_transform, dominates


@dataclass(frozen=True)
class GraphSkyImage:
    """Sky image of an event as a graph of heights over a sky sample."""

    event: np.ndarray  # (4,)
    sample: SkySample
    heights: np.ndarray  # (n,) real

    def to_json_dict(self):
        return {
            "event": [float(c) for c in self.event],
            "samples": [
                {
                    "xi": [x.real, x.imag, y.real, y.imag],
                    "height": float(h),
                }
                for (x, y), h in zip(self.sample.xi, self.heights)
            ],
        }


def sky_image_minkowski(x, sample: SkySample) -> GraphSkyImage:
    """Heights of the graph image: the field of x at each unit sample point."""
    x = np.asarray(x, dtype=float)
    return GraphSkyImage(event=x, sample=sample, heights=celestial_eval(x, sample.xi))


@dataclass(frozen=True)
class NullHyperplane:
    """Level set { y : field-of-y at xi equals chi } for a fixed sky point."""

    xi: np.ndarray  # (2,) complex, nonzero
    chi: float


def hyperplane_through(x, xi) -> NullHyperplane:
    """The null hyperplane through event x with normal direction P(xi)."""
    xi = skymod.unit_cospinor(xi)
    return NullHyperplane(xi=xi, chi=float(celestial_eval(x, xi)))


def hyperplane_contains(h: NullHyperplane, y, tol=1e-10) -> bool:
    y = np.asarray(y, dtype=float)
    scale = max(float(np.abs(y).max(initial=0.0)), abs(h.chi), 1.0)
    return bool(abs(float(celestial_eval(y, h.xi)) - h.chi) <= tol * scale)


class CausalOrder(enum.Enum):
    EQUAL = "equal"
    Y_PAST_OF_X = "y_past_of_x"
    X_PAST_OF_Y = "x_past_of_y"
    SPACELIKE = "spacelike"


def causal_compare(x, y) -> CausalOrder:
    """Order two events by pointwise comparison of their size-field graphs."""
    sx, sy = celestial_transform(x), celestial_transform(y)
    x_over_y = dominates(sx, sy)
    y_over_x = dominates(sy, sx)
    if x_over_y and y_over_x:
        return CausalOrder.EQUAL
    if x_over_y:
        return CausalOrder.Y_PAST_OF_X
    if y_over_x:
        return CausalOrder.X_PAST_OF_Y
    return CausalOrder.SPACELIKE


_CODES = {
    CausalOrder.EQUAL: 0,
    CausalOrder.Y_PAST_OF_X: 1,
    CausalOrder.X_PAST_OF_Y: 2,
    CausalOrder.SPACELIKE: 3,
}


def causal_compare_batch(xs, ys, tol=1e-12):
    """Vectorised causal_compare; returns integer codes (0=equal, 1=y past,
    2=x past, 3=spacelike) using the same eigenvalue tolerance."""
    d = spinor.pauli_transform(np.asarray(xs, float) - np.asarray(ys, float))
    scale = np.maximum(np.abs(d).reshape(d.shape[:-2] + (4,)).max(axis=-1), 1.0)
    lo = skymod.hermitian_eigenvalues(d)[..., 0]
    hi = skymod.hermitian_eigenvalues(-d)[..., 0]
    x_over = lo >= -tol * scale
    y_over = hi >= -tol * scale
    return np.select(
        [x_over & y_over, x_over, y_over],
        [0, 1, 2],
        default=3,
    )


def interval_compare_batch(xs, ys):
    """Classical interval criterion, same codes; the independent oracle."""
    d = np.asarray(xs, float) - np.asarray(ys, float)
    dt = d[..., 0]
    dr = np.linalg.norm(d[..., 1:], axis=-1)
    equal = (dt == 0.0) & (dr == 0.0)
    y_past = (dt >= dr) & ~equal
    x_past = (-dt >= dr) & ~equal
    return np.select([equal, y_past, x_past], [0, 1, 2], default=3)


def interval_compare(x, y) -> CausalOrder:
    code = int(interval_compare_batch(np.asarray(x, float), np.asarray(y, float)))
    for order, c in _CODES.items():
        if c == code:
            return order
    raise AssertionError  # pragma: no cover


class GraphFrame:
    """Verifier adapter for the graph frame; everything is exact linear algebra.

    The normal line at a sample is trivialised by the vertical (fiber)
    direction of the height bundle, so pushed-forward probe values come out
    as plain reals with no finite differencing.
    """

    kind = "graph"

    def theta(self, x, xi, direction):
        """Contact-form value on the horizontal probe, at the unit covector."""
        return float(celestial_eval(np.asarray(direction, float), xi))

    def normal_coeff_of_family(self, x, xi, direction, h=None):
        """Derivative of the image along the event family is purely vertical."""
        return float(celestial_eval(np.asarray(direction, float), xi))

    def normal_coeff_of_vertical(self, x, xi, k):
        """Vertical pushforwards land in the image tangent plane."""
        return 0.0

    def image_gradient(self, x, xi):
        """Gradient of the height over the two real sky chart directions."""
        xi = skymod.unit_cospinor(xi)
        delta = _orthogonal_unit(xi)
        hmat = spinor.pauli_transform(np.asarray(x, float))
        val = np.einsum("a,ab,b->", delta, hmat, np.conj(xi))
        return np.array([2.0 * val.real, -2.0 * val.imag])


def _orthogonal_unit(xi):
    """Unit covector orthogonal to xi under the Hermitian inner product."""
    return np.stack([-np.conj(xi[..., 1]), np.conj(xi[..., 0])], axis=-1)
