"""Conformal reference frames built by projecting skies along null geodesics.

The target 3-manifold M is a constant-time slice of the chart or, for
expanding cosmologies, the initial conformal boundary at cosmic time zero
(comoving coordinates).  Each sky point of an event is carried to M by
the past-directed null geodesic it represents; regularity of the image is
the numerical rank of the map's Jacobian in the two sky parameters.

Two tracers are available: a conformal-chart closed form (flat space and
spatially flat cosmologies project onto straight comoving lines) and the
general numerical integrator.  Near the t = 0 boundary the chart velocity
blows up, so the numerical tracer marches down to a small cutoff time and
closes the remaining gap along the (conserved) comoving direction with
the conformal-time integral; the cutoff error is far below the stated
image tolerances.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import quad as _quad

from . import manifold as mf
from . import sky as skymod
from . import spinor
from .errors import (
    DegenerateTangentPlaneError,
    NoIntersectionError,
    OutOfDomainError,
)
from .sky import SkySample
from .spinor import PAULI_FACTOR


@dataclass(frozen=True)
class CauchySurface:
    t0: float
    kind: str = field(default="cauchy", init=False)

    def to_json_dict(self):
        return {"kind": "cauchy", "t0": self.t0}


@dataclass(frozen=True)
class Singularity:
    kind: str = field(default="singularity", init=False)

    def to_json_dict(self):
        return {"kind": "singularity"}


@dataclass(frozen=True)
class FrameSpec:
    """A metric, a target surface and the projection/differencing settings."""

    metric: mf.MetricSpec
    target: CauchySurface | Singularity
    step: float = 1e-3
    tracer: str = "auto"  # auto | closed_form | numeric
    sky_fd_step: float = 1e-5
    event_fd_step: float = 1e-4
    rank_tol: float = 1e-7
    singularity_cutoff: float = 1e-9
    tetrad_rotation: np.ndarray | None = None

    def __post_init__(self):
        if self.target.kind == "singularity":
            if self.metric.kind != "flrw":
                raise ValueError("singularity target needs an flrw metric")
            if self.singularity_cutoff <= 0.0:
                raise ValueError("singularity cutoff must be positive")
            # eta(0+) must be finite for the boundary to be reachable.
            mf.conformal_time(self.metric, 1.0)
        elif self.metric.kind == "flrw" and self.target.t0 <= 0.0:
            raise ValueError("cauchy slice of an flrw chart needs t0 > 0")
        if self.tracer not in ("auto", "closed_form", "numeric"):
            raise ValueError(f"unknown tracer {self.tracer!r}")
        if self.tracer == "closed_form" and self.metric.kind == "custom":
            raise ValueError("closed-form tracing needs a conformally flat chart")

    def resolved_tracer(self) -> str:
        if self.tracer != "auto":
            return self.tracer
        return "numeric" if self.metric.kind == "custom" else "closed_form"

    @property
    def target_time(self) -> float:
        if self.target.kind == "singularity":
            return 0.0
        return self.target.t0


@dataclass(frozen=True)
class ProjectedPoint:
    m_point: np.ndarray  # (3,)
    rank: int
    lam: float
    status: str = "ok"


@dataclass(frozen=True)
class SkyImage:
    """Sampled image of a sky in M, kept in full including singular samples."""

    event: np.ndarray
    target: CauchySurface | Singularity
    sample: SkySample
    m_points: np.ndarray  # (n, 3)
    ranks: np.ndarray  # (n,) int
    lams: np.ndarray  # (n,)
    status: tuple  # (n,) of str

    @property
    def regular_mask(self):
        return (self.ranks == 2) & (np.array(self.status) == "ok")

    @property
    def ok_mask(self):
        return np.array(self.status) == "ok"

    def to_json_dict(self):
        return {
            "event": [float(c) for c in self.event],
            "target": self.target.to_json_dict(),
            "samples": [
                {
                    "xi": [z.real, z.imag, w.real, w.imag],
                    "m_point": [float(c) for c in m],
                    "rank": int(r),
                    "lambda": float(l),
                    "status": s,
                }
                for (z, w), m, r, l, s in zip(
                    self.sample.xi, self.m_points, self.ranks, self.lams, self.status
                )
            ],
        }

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["m1", "m2", "m3"])
            for m, s in zip(self.m_points, self.status):
                if s == "ok":
                    writer.writerow([repr(float(c)) for c in m])


def _directions(f: FrameSpec, xis):
    d = spinor.direction_for_cospinor(np.asarray(xis, dtype=complex))
    if f.tetrad_rotation is not None:
        d = d @ np.asarray(f.tetrad_rotation, float).T
    return d


def _eta_of_times(f: FrameSpec, times):
    m = f.metric
    if m.kind == "minkowski":
        return np.asarray(times, float).copy()
    if m.exponent is not None:
        p = m.exponent
        return np.asarray(times, float) ** (1.0 - p) / (1.0 - p)
    return np.array([mf.conformal_time(m, float(t)) for t in np.atleast_1d(times)])


def _lam_closed_form(f: FrameSpec, times, t_target):
    """Affine length of the past ray from t down to t_target, v0(start) = 1."""
    m = f.metric
    times = np.asarray(times, float)
    if m.kind == "minkowski":
        return times - t_target
    if m.exponent is not None:
        p = m.exponent
        num = times ** (1.0 + p) - t_target ** (1.0 + p)
        return num / ((1.0 + p) * m.scale_factor(times))
    vals = []
    for t in np.atleast_1d(times):
        integral, _ = _quad(lambda s: float(m.scale_factor(s)), t_target, float(t))
        vals.append(integral / float(m.scale_factor(t)))
    return np.asarray(vals)


def project_batch(f: FrameSpec, events, xis):
    """Project rays (one event + sky point each) onto the target surface.

    events: (B, 4), xis: (B, 2).  Returns (m_points (B, 3), lams (B,),
    ok (B,) bool, lost (B,) bool); lost marks rays abandoned for constraint
    drift.  Raises OutOfDomainError when an event leaves the chart; rays
    whose event lies below the target come back not ok.
    """
    events = np.asarray(events, dtype=float)
    xis = np.asarray(xis, dtype=complex)
    if events.ndim != 2:
        raise ValueError("project_batch expects (B, 4) events")
    if not np.all(f.metric.in_domain(events)):
        raise OutOfDomainError("an event lies outside the chart domain")
    t = events[:, 0]
    t_target = f.target_time
    t_tol = 1e-12 * max(1.0, float(np.abs(t).max()))
    on_surface = np.abs(t - t_target) <= t_tol
    below = t < t_target - t_tol

    if f.resolved_tracer() == "closed_form":
        eta = _eta_of_times(f, t)
        eta_target = 0.0 if f.target.kind == "singularity" else float(
            _eta_of_times(f, np.array([f.target.t0]))[0]
        )
        gap = eta - eta_target
        m_points = events[:, 1:] - gap[:, None] * _directions(f, xis)
        lams = _lam_closed_form(f, t, t_target)
        ok = ~below
        lost = np.zeros(events.shape[0], dtype=bool)
    else:
        m_points = np.empty((events.shape[0], 3))
        lams = np.zeros(events.shape[0])
        ok = ~below
        lost = np.zeros(events.shape[0], dtype=bool)
        march = ok & ~on_surface
        if np.any(march):
            v0 = _tetrad_null_vectors(f, events[march], xis[march])
            stop_t = (
                max(f.singularity_cutoff, 0.0)
                if f.target.kind == "singularity"
                else t_target
            )
            res = mf.trace_past_to_time(
                f.metric, events[march], v0, stop_t, f.step
            )
            pts = res.x[:, 1:]
            lam_m = res.lam.copy()
            if f.target.kind == "singularity":
                pts, lam_m = _close_singularity_gap(f, res, lam_m)
            m_points[march] = pts
            lams[march] = lam_m
            ok[march] &= res.ok
            lost[march] = res.lost
    m_points[on_surface] = events[on_surface, 1:]
    lams[on_surface] = 0.0
    m_points[~ok] = np.nan
    return m_points, lams, ok, lost


def _tetrad_null_vectors(f: FrameSpec, events, xis):
    """Future null velocities (v0 = 1) for per-ray events and sky points."""
    d = _directions(f, xis)
    tet = f.metric.tetrad_diag(events)
    v = np.empty_like(events)
    v[:, 0] = 1.0
    v[:, 1:] = d * (tet[:, :1] / tet[:, 1:])
    return v


def _close_singularity_gap(f: FrameSpec, res: mf.TraceResult, lam):
    """Continue from the cutoff time to eta = 0 along the comoving direction.

    The comoving direction of a ray is conserved in a spatially flat
    cosmology, so the remaining displacement is exactly the leftover
    conformal time times that direction.
    """
    m = f.metric
    t_cut = res.x[:, 0]
    eta_cut = _eta_of_times(f, t_cut)
    d_hat = res.u[:, 1:] / np.linalg.norm(res.u[:, 1:], axis=-1, keepdims=True)
    pts = res.x[:, 1:] + eta_cut[:, None] * d_hat
    if m.exponent is not None:
        p = m.exponent
        cmag = m.scale_factor(t_cut) * np.abs(res.u[:, 0])
        lam = lam + t_cut ** (1.0 + p) / ((1.0 + p) * np.maximum(cmag, 1e-300))
    return pts, lam


def _svd_rank(jac, tol):
    sv = np.linalg.svd(jac, compute_uv=False)
    return int(np.sum(sv > tol * max(1.0, float(sv.max(initial=0.0)))))


def _sky_stencil(f: FrameSpec, xi):
    """Four perturbed unit covectors around xi for the two chart directions."""
    xi = skymod.unit_cospinor(xi)
    delta = np.stack([-np.conj(xi[..., 1]), np.conj(xi[..., 0])], axis=-1)
    h = f.sky_fd_step
    raw = np.stack(
        [xi + h * delta, xi - h * delta, xi + 1j * h * delta, xi - 1j * h * delta]
    )
    return raw / np.linalg.norm(raw, axis=-1, keepdims=True)


def sky_jacobian(f: FrameSpec, x, xi):
    """Central-difference Jacobian of the M-point in the sky parameters (3, 2)."""
    x = np.asarray(x, dtype=float)
    stencil = _sky_stencil(f, xi)
    events = np.tile(x, (4, 1))
    pts, _, ok, _ = project_batch(f, events, stencil)
    if not np.all(ok):
        raise NoIntersectionError("stencil ray misses the target surface")
    h = f.sky_fd_step
    col1 = (pts[0] - pts[1]) / (2.0 * h)
    col2 = (pts[2] - pts[3]) / (2.0 * h)
    return np.stack([col1, col2], axis=-1)


def project_event(f: FrameSpec, x, xi):
    """Project one sky point of one event; returns the M-point, the numerical
    rank of the sky Jacobian there, and the affine arrival parameter."""
    x = np.asarray(x, dtype=float)
    xi = skymod.unit_cospinor(xi)
    pts, lams, ok, _ = project_batch(f, x[None, :], xi[None, :])
    if not ok[0]:
        raise NoIntersectionError("event lies below the target surface")
    jac = sky_jacobian(f, x, xi)
    rank = _svd_rank(jac, f.rank_tol)
    return ProjectedPoint(m_point=pts[0], rank=rank, lam=float(lams[0]))


def sky_image(f: FrameSpec, x, sample: SkySample, with_rank=True) -> SkyImage:
    """Project every sample of the sky of x, keeping singular samples flagged."""
    x = np.asarray(x, dtype=float)
    n = sample.n
    events = np.tile(x, (n, 1))
    pts, lams, ok, lost = project_batch(f, events, sample.xi)
    ranks = np.zeros(n, dtype=int)
    if with_rank:
        stencils = np.concatenate([_sky_stencil(f, xi) for xi in sample.xi])
        sev = np.repeat(events, 4, axis=0)
        spts, _, sok, _ = project_batch(f, sev, stencils)
        h = f.sky_fd_step
        for k in range(n):
            if not (ok[k] and np.all(sok[4 * k : 4 * k + 4])):
                continue
            blk = spts[4 * k : 4 * k + 4]
            jac = np.stack(
                [(blk[0] - blk[1]) / (2 * h), (blk[2] - blk[3]) / (2 * h)], axis=-1
            )
            ranks[k] = _svd_rank(jac, f.rank_tol)
    status = tuple(
        "ok" if good else ("integrator_failure" if bad else "no_intersection")
        for good, bad in zip(ok, lost)
    )
    if not np.any(ok):
        raise NoIntersectionError("every sky sample failed to reach the target")
    return SkyImage(
        event=x,
        target=f.target,
        sample=sample,
        m_points=pts,
        ranks=ranks,
        lams=lams,
        status=status,
    )


def normal_frame(f: FrameSpec, x, xi):
    """Oriented unit normal of the image surface at (x, xi).

    Orientation: the side reached by moving the event to the future is
    positive, fixed by auditing against the time-axis family derivative.
    """
    jac = sky_jacobian(f, x, xi)
    if _svd_rank(jac, f.rank_tol) < 2:
        raise DegenerateTangentPlaneError("image tangent plane is degenerate")
    u, _, _ = np.linalg.svd(jac)
    n_hat = u[:, 2]
    dj0 = _family_displacement(f, x, xi, np.array([1.0, 0.0, 0.0, 0.0]))
    if float(n_hat @ dj0) < 0.0:
        n_hat = -n_hat
    return n_hat


def _family_displacement(f: FrameSpec, x, xi, direction, h=None):
    """Central difference of the M-point along the event family at fixed xi."""
    x = np.asarray(x, dtype=float)
    direction = np.asarray(direction, dtype=float)
    if h is None:
        h = f.event_fd_step * max(1.0, float(np.abs(x).max()))
    events = np.stack([x + h * direction, x - h * direction])
    xis = np.tile(skymod.unit_cospinor(xi), (2, 1))
    pts, _, ok, _ = project_batch(f, events, xis)
    if not np.all(ok):
        raise NoIntersectionError("family stencil misses the target surface")
    return (pts[0] - pts[1]) / (2.0 * h)


def normal_project(f: FrameSpec, x, xi, w):
    """Coefficient of a tangent vector of M in the oriented normal frame."""
    n_hat = normal_frame(f, x, xi)
    return float(n_hat @ np.asarray(w, dtype=float))


def sky_image_derivative(f: FrameSpec, x, xi, direction, h=None):
    """Normal component of the image-point derivative along an event family."""
    n_hat = normal_frame(f, x, xi)
    return float(n_hat @ _family_displacement(f, x, xi, direction, h))


def theta_value(f: FrameSpec, x, xi, direction):
    """Contact-form value on a horizontal probe, at the unit representative.

    Evaluates the (1,1)-homogeneous field of the probe's orthonormal-frame
    components at the sky point, honouring the frame's tetrad rotation.
    """
    x = np.asarray(x, dtype=float)
    w = np.asarray(direction, dtype=float)
    tet = f.metric.tetrad_diag(x)
    w_tet = tet * w
    d = _directions(f, skymod.unit_cospinor(xi)[None, :])[0]
    return float(PAULI_FACTOR * (w_tet[0] - d @ w_tet[1:]))


class GeodesicFrame:
    """Verifier adapter around a FrameSpec (finite-difference quantities)."""

    kind = "geodesic"

    def __init__(self, spec: FrameSpec):
        self.spec = spec

    def theta(self, x, xi, direction):
        return theta_value(self.spec, x, xi, direction)

    def normal_coeff_of_family(self, x, xi, direction, h=None):
        return sky_image_derivative(self.spec, x, xi, direction, h)

    def normal_coeff_of_vertical(self, x, xi, k):
        f = self.spec
        n_hat = normal_frame(f, x, xi)
        stencil = _sky_stencil(f, xi)
        pair = stencil[2 * k : 2 * k + 2]
        pts, _, ok, _ = project_batch(f, np.tile(np.asarray(x, float), (2, 1)), pair)
        if not np.all(ok):
            raise NoIntersectionError("vertical stencil misses the target")
        push = (pts[0] - pts[1]) / (2.0 * f.sky_fd_step)
        return float(n_hat @ push)

    def with_rotation(self, rotation):
        return GeodesicFrame(replace(self.spec, tetrad_rotation=rotation))
