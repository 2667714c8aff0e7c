"""Diagonal Lorentzian metrics and null-geodesic integration.

Supported metric kinds: flat space, spatially flat expanding cosmologies
(scale factor of cosmic time, power-law shortcut a(t) = t^p), and
user-supplied diagonal metrics with coefficient functions of the chart
point.  Signature is (+, -, -, -) and the coordinate time direction is
future.  Null geodesics are integrated with a classical 4th-order
one-step scheme; after every accepted step the time component of the
velocity is rescaled to put it back on the null cone, which preserves the
spatial direction and dumps the drift into the affine parameter.

The spinor <-> direction dictionary at a curved point uses the fixed
orthonormal tetrad aligned with the coordinate axes (well-defined for
diagonal metrics); derived quantities are checked elsewhere to be
independent of that choice.
"""

from __future__ import annotations

import ast
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate as _sciint

from .errors import (
    ConstraintLostError,
    DivergentIntegralError,
    IntegratorFailureError,
    OutOfDomainError,
)
from .sky import SkySample

#: Nullity tolerance for geodesic states, relative to the squared velocity scale.
GEODESIC_NULL_TOL = 1e-8

#: Pre-renormalisation drift beyond which a trajectory is abandoned.
CONSTRAINT_LOST_TOL = 1e-4

_TINY_T = 1e-30  # floor for transient scale-factor evaluations while bracketing


def _default_bounds(t_open_zero):
    lo = 0.0 if t_open_zero else -math.inf
    return np.array([[lo, math.inf]] + [[-math.inf, math.inf]] * 3)


@dataclass(frozen=True)
class MetricSpec:
    """A diagonal metric on a chart, plus domain bounds (4, 2)."""

    kind: str
    exponent: float | None = None
    scale_factor_fn: Callable | None = None
    scale_factor_dot_fn: Callable | None = None
    coeff_fns: tuple | None = None
    coeff_sources: tuple | None = None
    bounds: np.ndarray = field(default_factory=lambda: _default_bounds(False))

    # -- constructors -----------------------------------------------------

    @staticmethod
    def minkowski(bounds=None):
        b = _default_bounds(False) if bounds is None else np.asarray(bounds, float)
        return MetricSpec(kind="minkowski", bounds=b)

    @staticmethod
    def flrw(p=None, a=None, a_dot=None, bounds=None):
        """Spatially flat cosmology ds^2 = dt^2 - a(t)^2 dx.dx, t > 0."""
        if (p is None) == (a is None):
            raise ValueError("give exactly one of the exponent p or a callable a")
        b = _default_bounds(True) if bounds is None else np.asarray(bounds, float)
        return MetricSpec(
            kind="flrw",
            exponent=None if p is None else float(p),
            scale_factor_fn=a,
            scale_factor_dot_fn=a_dot,
            bounds=b,
        )

    @staticmethod
    def custom_diagonal(coeffs, bounds=None, sources=None):
        """Four coefficient functions of the chart point, signature checked
        on a coarse grid over (a clipped box of) the declared bounds."""
        b = _default_bounds(False) if bounds is None else np.asarray(bounds, float)
        m = MetricSpec(
            kind="custom",
            coeff_fns=tuple(coeffs),
            coeff_sources=None if sources is None else tuple(sources),
            bounds=b,
        )
        m._check_signature()
        return m

    # -- evaluation --------------------------------------------------------

    def scale_factor(self, t):
        t = np.maximum(np.asarray(t, dtype=float), _TINY_T)
        if self.exponent is not None:
            return t**self.exponent
        return self.scale_factor_fn(t)

    def scale_factor_dot(self, t):
        t = np.maximum(np.asarray(t, dtype=float), _TINY_T)
        if self.exponent is not None:
            p = self.exponent
            return p * t ** (p - 1.0) if p != 0.0 else np.zeros_like(t)
        if self.scale_factor_dot_fn is not None:
            return self.scale_factor_dot_fn(t)
        h = 1e-7 * np.maximum(1.0, np.abs(t))
        return (self.scale_factor_fn(t + h) - self.scale_factor_fn(t - h)) / (2 * h)

    def metric_diag(self, x):
        """Diagonal metric coefficients at chart points x (..., 4)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "minkowski":
            out = np.empty(x.shape, dtype=float)
            out[..., 0] = 1.0
            out[..., 1:] = -1.0
            return out
        if self.kind == "flrw":
            a2 = self.scale_factor(x[..., 0]) ** 2
            out = np.empty(x.shape, dtype=float)
            out[..., 0] = 1.0
            out[..., 1] = out[..., 2] = out[..., 3] = 1.0
            out[..., 1:] *= -a2[..., None]
            return out
        return np.stack([f(x) * np.ones(x.shape[:-1]) for f in self.coeff_fns], axis=-1)

    def norm(self, x, v):
        """g(v, v) at x; broadcasts over leading axes."""
        g = self.metric_diag(x)
        return np.sum(g * np.asarray(v, dtype=float) ** 2, axis=-1)

    def tetrad_diag(self, x):
        """Norms of the coordinate axes: (sqrt(g00), sqrt(-gii))."""
        g = self.metric_diag(x)
        return np.sqrt(np.abs(g))

    def in_domain(self, x):
        """Strict interior test; NaN coordinates count as outside."""
        x = np.asarray(x, dtype=float)
        lo, hi = self.bounds[:, 0], self.bounds[:, 1]
        inside = (x > lo) & (x < hi)
        return np.all(inside, axis=-1)

    # -- differential structure --------------------------------------------

    def _metric_partials(self, x):
        """d g_aa / d x^b as (..., 4 [b], 4 [a]); analytic where possible."""
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (4, 4), dtype=float)
        if self.kind == "minkowski":
            return out
        if self.kind == "flrw":
            t = x[..., 0]
            out[..., 0, 1:] = (-2.0 * self.scale_factor(t) * self.scale_factor_dot(t))[
                ..., None
            ]
            return out
        for b in range(4):
            h = 1e-5 * np.maximum(1.0, np.abs(x[..., b]))
            xp, xm = x.copy(), x.copy()
            xp[..., b] += h
            xm[..., b] -= h
            out[..., b, :] = (self.metric_diag(xp) - self.metric_diag(xm)) / (
                2.0 * h[..., None]
            )
        return out

    def geodesic_acceleration(self, x, v):
        """-Gamma^a_{bc} v^b v^c for the diagonal metric; vectorised."""
        if self.kind == "minkowski":
            return np.zeros_like(np.asarray(v, dtype=float))
        v = np.asarray(v, dtype=float)
        if self.kind == "flrw":
            t = np.asarray(x, dtype=float)[..., 0]
            a = self.scale_factor(t)
            ad = self.scale_factor_dot(t)
            acc = np.empty_like(v)
            acc[..., 0] = -a * ad * np.sum(v[..., 1:] ** 2, axis=-1)
            acc[..., 1:] = (-2.0 * ad / a * v[..., 0])[..., None] * v[..., 1:]
            return acc
        g = self.metric_diag(x)
        dg = self._metric_partials(x)  # (..., b, a)
        v_dot_grad = np.einsum("...b,...ba->...a", v, dg)
        grad_quad = np.einsum("...ab,...b->...a", dg, v**2)
        return -(2.0 * v * v_dot_grad - grad_quad) / (2.0 * g)

    def _check_signature(self):
        box = np.clip(self.bounds, -2.0, 2.0)
        lo = box[:, 0] + 1e-3 * (box[:, 1] - box[:, 0])
        hi = box[:, 1] - 1e-3 * (box[:, 1] - box[:, 0])
        axes = [np.linspace(lo[k], hi[k], 3) for k in range(4)]
        grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 4)
        g = self.metric_diag(grid)
        if np.any(g[:, 0] <= 0.0) or np.any(g[:, 1:] >= 0.0):
            raise ValueError("coefficients do not have signature (+,-,-,-) on the grid")


def christoffel(m: MetricSpec, x):
    """Connection coefficients Gamma^a_{bc} at a single chart point (4,4,4)."""
    x = np.asarray(x, dtype=float)
    if not m.in_domain(x):
        raise OutOfDomainError(f"point {x.tolist()} outside the chart domain")
    g = m.metric_diag(x)
    dg = m._metric_partials(x)  # (b, a)
    gamma = np.zeros((4, 4, 4))
    for a in range(4):
        for b in range(4):
            for c in range(4):
                val = 0.0
                if a == b:
                    val += dg[c, a]
                if a == c:
                    val += dg[b, a]
                if b == c:
                    val -= dg[a, b]
                gamma[a, b, c] = val / (2.0 * g[a])
    return gamma


@dataclass(frozen=True)
class NullGeodesicState:
    """Chart point, future-directed null velocity, affine parameter."""

    x: np.ndarray
    v: np.ndarray
    lam: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))


def validate_state(m: MetricSpec, s: NullGeodesicState, tol=GEODESIC_NULL_TOL):
    if not m.in_domain(s.x):
        raise OutOfDomainError(f"state at {s.x.tolist()} outside the domain")
    scale2 = max(float(np.abs(s.v).max()), 1.0) ** 2
    if abs(float(m.norm(s.x, s.v))) > tol * scale2:
        raise ConstraintLostError("initial velocity is not null")
    if s.v[0] <= 0.0:
        raise ConstraintLostError("initial velocity is not future-directed")


@dataclass(frozen=True)
class Trajectory:
    states: tuple
    boundary_hit: bool = False

    def __iter__(self):
        return iter(self.states)

    def __len__(self):
        return len(self.states)


def _rk4_step(m: MetricSpec, x, v, h):
    """One classical step for dx = v, dv = acceleration; h may be (...,1)."""
    k1x = v
    k1v = m.geodesic_acceleration(x, v)
    k2x = v + 0.5 * h * k1v
    k2v = m.geodesic_acceleration(x + 0.5 * h * k1x, k2x)
    k3x = v + 0.5 * h * k2v
    k3v = m.geodesic_acceleration(x + 0.5 * h * k2x, k3x)
    k4x = v + h * k3v
    k4v = m.geodesic_acceleration(x + h * k3x, k4x)
    xn = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    vn = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
    return xn, vn


def _renormalise(m: MetricSpec, x, v, time_sign=1.0):
    """Rescale the time component so g(v, v) = 0, keeping spatial parts."""
    g = m.metric_diag(x)
    rad = -np.sum(g[..., 1:] * v[..., 1:] ** 2, axis=-1) / g[..., 0]
    out = v.copy()
    out[..., 0] = time_sign * np.sqrt(np.maximum(rad, 0.0))
    return out


def integrate_null_geodesic(m: MetricSpec, s0: NullGeodesicState, lam_end, step):
    """Integrate to the affine parameter lam_end (either sign of direction).

    Stops early on the domain boundary (bisected to 1e-12 in the crossing
    coordinate fraction) with the boundary flag set.  States keep the
    future-directed velocity; negative lam_end runs into the past.
    """
    if step <= 0.0:
        raise ValueError("step must be positive")
    validate_state(m, s0)
    span = float(lam_end) - s0.lam
    if span == 0.0:
        return Trajectory(states=(s0,))
    sgn = math.copysign(1.0, span)
    n_full = int(abs(span) // step)
    sizes = [sgn * step] * n_full
    rest = span - sgn * step * n_full
    if abs(rest) > 1e-15 * max(1.0, abs(span)):
        sizes.append(rest)

    states = [s0]
    x, v, lam = s0.x.copy(), s0.v.copy(), s0.lam
    scale2 = max(float(np.abs(v).max()), 1.0) ** 2
    for h in sizes:
        xn, vn = _rk4_step(m, x, v, h)
        if not m.in_domain(xn):
            frac = _bisect_domain_exit(m, x, v, h)
            if frac <= 0.0:
                return Trajectory(states=tuple(states), boundary_hit=True)
            xn, vn = _rk4_step(m, x, v, frac * h)
            vn = _check_and_renormalise(m, xn, vn, scale2)
            lam += frac * h
            states.append(NullGeodesicState(x=xn, v=vn, lam=lam))
            return Trajectory(states=tuple(states), boundary_hit=True)
        vn = _check_and_renormalise(m, xn, vn, scale2)
        x, v = xn, vn
        lam += h
        states.append(NullGeodesicState(x=x, v=v, lam=lam))
    return Trajectory(states=tuple(states))


def _check_and_renormalise(m, x, v, scale2):
    drift = abs(float(m.norm(x, v)))
    if drift > CONSTRAINT_LOST_TOL * scale2:
        raise ConstraintLostError(f"null constraint drifted to {drift:.3e}")
    return _renormalise(m, v=v, x=x, time_sign=1.0)


def _bisect_domain_exit(m, x, v, h):
    """Largest fraction of the step that stays inside the domain."""
    lo, hi = 0.0, 1.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        xn, _ = _rk4_step(m, x, v, mid * h)
        if m.in_domain(xn):
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# Batched tracing of past-directed rays to a coordinate-time level.


@dataclass(frozen=True)
class TraceResult:
    x: np.ndarray  # (B, 4) end points
    u: np.ndarray  # (B, 4) past-directed tangents at the end points
    lam: np.ndarray  # (B,) affine length along the past-directed tangent
    ok: np.ndarray  # (B,) bool
    lost: np.ndarray  # (B,) bool, True where the null constraint drifted away


def trace_past_to_time(m: MetricSpec, x0, v0, t_target, step, max_steps=200_000):
    """March past-directed null rays from (x0, v0-future) down to t = t_target.

    Vectorised over rays.  Each ray takes fixed affine steps, capped near
    the target; a step that crosses the level is redone by bisection on
    its fraction until the time coordinate matches to 1e-12 (relative).
    Rays that leave the spatial domain come back marked not ok.
    """
    x = np.array(x0, dtype=float, copy=True)
    u = -np.array(v0, dtype=float, copy=True)  # past-directed tangent
    if x.ndim == 1:
        raise ValueError("trace_past_to_time is batched; pass (B, 4) arrays")
    nrays = x.shape[0]
    lam = np.zeros(nrays)
    ok = np.ones(nrays, dtype=bool)
    lost = np.zeros(nrays, dtype=bool)
    t_tol = 1e-12 * max(1.0, float(np.abs(x[:, 0]).max()))
    if np.any(x[:, 0] < t_target - t_tol):
        raise OutOfDomainError("some start events lie below the target level")

    done = np.abs(x[:, 0] - t_target) <= t_tol
    for _ in range(max_steps):
        active = ok & ~done
        if not np.any(active):
            break
        gap = x[:, 0] - t_target
        dtdl = np.maximum(np.abs(u[:, 0]), 1e-300)
        # Near a vanishing scale factor the ODE is stiff; cap the per-step
        # time change at a 5% fraction of the local time scale so the
        # one-step error stays far below the arrival tolerances.
        h_cap = np.minimum(1.25 * gap, 0.05 * np.abs(x[:, 0])) / dtdl
        h = np.where(active, np.minimum(step, h_cap), 0.0)
        xn, un = _rk4_step(m, x, u, h[:, None])
        crossed = active & (xn[:, 0] < t_target - t_tol)
        if np.any(crossed):
            frac = _bisect_time_level(m, x, u, h, t_target, crossed)
            hc = np.where(crossed, frac * h, h)
            xn, un = _rk4_step(m, x, u, hc[:, None])
            h = hc
        drift = np.abs(np.sum(m.metric_diag(xn) * un**2, axis=-1))
        scale2 = np.maximum(np.abs(un).max(axis=-1), 1.0) ** 2
        lost |= active & (drift > CONSTRAINT_LOST_TOL * scale2)
        ok &= ~lost
        un = _renormalise(m, xn, un, time_sign=-1.0)
        # Accept only active rays; freeze the rest.
        upd = active & ok
        x[upd] = xn[upd]
        u[upd] = un[upd]
        lam[upd] += h[upd]
        spatial_ok = np.all(
            (x[:, 1:] > m.bounds[1:, 0]) & (x[:, 1:] < m.bounds[1:, 1]), axis=-1
        )
        ok &= spatial_ok
        done = done | (np.abs(x[:, 0] - t_target) <= t_tol)
    else:
        raise IntegratorFailureError("ray marching exceeded the step budget")
    return TraceResult(x=x, u=u, lam=lam, ok=ok & done, lost=lost)


def _bisect_time_level(m, x, u, h, t_target, mask):
    """Per-ray fraction of the step landing on the time level (monotone)."""
    lo = np.zeros(x.shape[0])
    hi = np.ones(x.shape[0])
    for _ in range(60):
        mid = np.where(mask, 0.5 * (lo + hi), 0.0)
        xn, _ = _rk4_step(m, x, u, (mid * h)[:, None])
        above = xn[:, 0] >= t_target
        lo = np.where(mask & above, mid, lo)
        hi = np.where(mask & ~above, mid, hi)
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Conformal chart utilities.


def conformal_time(m: MetricSpec, t):
    """eta(t): integral of 1/a from the initial singularity to cosmic time t.

    Closed form for power-law scale factors (p < 1); adaptive quadrature
    with relative error below 1e-10 otherwise.
    """
    if m.kind == "minkowski":
        return float(t)
    if m.kind != "flrw":
        raise ValueError("conformal time needs an expanding-cosmology metric")
    t = float(t)
    if t <= 0.0:
        raise OutOfDomainError("conformal time is defined for t > 0")
    if m.exponent is not None:
        p = m.exponent
        if p >= 1.0:
            raise DivergentIntegralError(f"integral of t^-{p} diverges at 0")
        return t ** (1.0 - p) / (1.0 - p)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", _sciint.IntegrationWarning)
        val, err = _sciint.quad(
            lambda s: 1.0 / float(m.scale_factor(s)), 0.0, t, limit=500, epsrel=1e-12
        )
    if not math.isfinite(val) or err > 1e-10 * max(abs(val), 1.0):
        raise DivergentIntegralError("quadrature did not converge")
    return float(val)


def future_null_directions(m: MetricSpec, x, sample: SkySample, rotation=None):
    """One future null velocity per sky sample, time component scaled to 1.

    The covector -> direction map goes through the coordinate-axis tetrad;
    an optional rotation (3, 3) re-aims the spatial tetrad legs.
    """
    x = np.asarray(x, dtype=float)
    if not m.in_domain(x):
        raise OutOfDomainError(f"point {x.tolist()} outside the chart domain")
    d = sample.directions()
    if rotation is not None:
        d = d @ np.asarray(rotation, float).T
    tet = m.tetrad_diag(x)
    v = np.empty((sample.n, 4))
    v[:, 0] = 1.0
    v[:, 1:] = d * (tet[0] / tet[1:])
    return v


def flrw_closed_form_ray(m: MetricSpec, s0: NullGeodesicState, lam):
    """Exact power-law ray state at affine parameter lam (oracle quality)."""
    if m.kind != "flrw" or m.exponent is None:
        raise ValueError("closed form needs a power-law scale factor")
    p = m.exponent
    t0 = float(s0.x[0])
    a0 = t0**p
    cmag = a0 * float(s0.v[0])
    uhat = s0.v[1:] / np.linalg.norm(s0.v[1:])
    tp = t0 ** (1.0 + p) + (1.0 + p) * cmag * (lam - s0.lam)
    if tp <= 0.0:
        raise OutOfDomainError("closed-form ray leaves t > 0")
    t = tp ** (1.0 / (1.0 + p))
    eta0 = t0 ** (1.0 - p) / (1.0 - p)
    eta1 = t ** (1.0 - p) / (1.0 - p)
    xs = s0.x[1:] + (eta1 - eta0) * uhat
    v = np.empty(4)
    v[0] = cmag / t**p
    v[1:] = (cmag / t ** (2.0 * p)) * uhat
    return NullGeodesicState(x=np.concatenate([[t], xs]), v=v, lam=lam)


# ---------------------------------------------------------------------------
# Configuration: restricted arithmetic expressions and metric assembly.

_ALLOWED_NODES = (
    ast.Expression,
    ast.BinOp,
    ast.UnaryOp,
    ast.Add,
    ast.Sub,
    ast.Mult,
    ast.Div,
    ast.Pow,
    ast.USub,
    ast.UAdd,
    ast.Constant,
    ast.Name,
    ast.Load,
)

_EXPR_NAMES = ("t", "x", "y", "z")


def compile_expression(src: str):
    """Compile an arithmetic expression of t, x, y, z into a chart-point fn.

    Grammar: numbers, the four names, +, -, *, /, ** and unary minus.
    """
    tree = ast.parse(src, mode="eval")
    for node in ast.walk(tree):
        if not isinstance(node, _ALLOWED_NODES):
            raise ValueError(f"disallowed syntax in metric expression: {src!r}")
        if isinstance(node, ast.Name) and node.id not in _EXPR_NAMES:
            raise ValueError(f"unknown name {node.id!r} in metric expression")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ValueError("only numeric constants are allowed")
    code = compile(tree, "<metric-expression>", "eval")

    def fn(xpt):
        xpt = np.asarray(xpt, dtype=float)
        env = {name: xpt[..., k] for k, name in enumerate(_EXPR_NAMES)}
        return eval(code, {"__builtins__": {}}, env)  # noqa: S307 - AST-filtered

    return fn


def metric_from_config(cfg: dict) -> MetricSpec:
    """Build a MetricSpec from a plain mapping (the file/CLI schema)."""
    kind = cfg.get("kind", "minkowski")
    bounds = cfg.get("bounds")
    if bounds is not None:
        bounds = np.array(
            [[-math.inf if lo is None else lo, math.inf if hi is None else hi]
             for lo, hi in bounds],
            dtype=float,
        )
    if kind == "minkowski":
        return MetricSpec.minkowski(bounds=bounds)
    if kind == "flrw":
        if "p" in cfg and cfg["p"] is not None:
            return MetricSpec.flrw(p=float(cfg["p"]), bounds=bounds)
        if "a_expr" in cfg and cfg["a_expr"] is not None:
            fn = compile_expression(cfg["a_expr"])
            a = lambda t: fn(np.stack([t, t * 0, t * 0, t * 0], axis=-1))
            return MetricSpec.flrw(a=a, bounds=bounds)
        raise ValueError("flrw metric needs 'p' or 'a_expr'")
    if kind == "custom":
        sources = cfg.get("coeffs")
        if not sources or len(sources) != 4:
            raise ValueError("custom metric needs four coefficient expressions")
        fns = tuple(compile_expression(s) for s in sources)
        return MetricSpec.custom_diagonal(fns, bounds=bounds, sources=tuple(sources))
    raise ValueError(f"unknown metric kind {kind!r}")
