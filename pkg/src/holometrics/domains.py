"""Domain specifications in C^d.

A domain is described symbolically (ball, polydisk, ellipsoid, planar domain
given by a Riemann map, convex body with a gauge oracle, product, holomorphic
image) and supports three primitive queries used everywhere else:

* membership of a point in the open domain,
* distance to the boundary within a complex line ``z + C*v``,
* reproducible interior sampling by rejection from a bounding box.

All specs are immutable; every operation is a pure function of its inputs.
Points are numpy arrays of shape ``(d,)`` with complex entries; batches are
``(n, d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import SamplingFailureError, UnsupportedOperationError

#: absolute tolerance for the line-exit bisection
EXIT_TOL = 1e-10

#: number of coarse phases scanned when minimizing the line exit time
PHASE_COUNT = 64


# ---------------------------------------------------------------------------
# holomorphic maps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HoloMap:
    """A holomorphic map C^d -> C^d with Jacobian and optional inverse.

    ``forward`` and ``inverse`` take/return arrays of shape ``(..., d)``;
    ``jacobian`` returns ``(..., d, d)``. ``dlogdet`` (optional) evaluates
    the holomorphic derivative of log det F' as a covector ``(..., d)``.
    """

    dimension: int
    forward: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray]
    inverse: Optional[Callable[[np.ndarray], np.ndarray]] = None
    dlogdet: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    def __call__(self, z):
        return self.forward(np.asarray(z, dtype=complex))

    def jacobian_fd(self, z, step=1e-6):
        """Central-difference Jacobian, used to cross-check ``jacobian``."""
        z = np.asarray(z, dtype=complex)
        d = self.dimension
        J = np.zeros((d, d), dtype=complex)
        for k in range(d):
            e = np.zeros(d, dtype=complex)
            e[k] = step
            J[:, k] = (self.forward(z + e) - self.forward(z - e)) / (2 * step)
        return J


def identity_map(d: int) -> HoloMap:
    return HoloMap(
        dimension=d,
        forward=lambda z: np.asarray(z, dtype=complex),
        jacobian=lambda z: np.broadcast_to(
            np.eye(d, dtype=complex), np.shape(z)[:-1] + (d, d)
        ).copy(),
        inverse=lambda z: np.asarray(z, dtype=complex),
        dlogdet=lambda z: np.zeros(np.shape(z), dtype=complex),
        name="identity",
    )


def affine_holo_map(linear: np.ndarray, translation: np.ndarray) -> HoloMap:
    """z -> b + L z as a :class:`HoloMap` (L invertible)."""
    L = np.asarray(linear, dtype=complex)
    b = np.asarray(translation, dtype=complex)
    d = L.shape[0]
    Linv = np.linalg.inv(L)

    def fwd(z):
        return np.asarray(z, dtype=complex) @ L.T + b

    def inv(w):
        return (np.asarray(w, dtype=complex) - b) @ Linv.T

    return HoloMap(
        dimension=d,
        forward=fwd,
        jacobian=lambda z: np.broadcast_to(L, np.shape(z)[:-1] + (d, d)).copy(),
        inverse=inv,
        dlogdet=lambda z: np.zeros(np.shape(z), dtype=complex),
        name="affine",
    )


# ---------------------------------------------------------------------------
# domain variants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Ball:
    dimension: int
    radius: float = 1.0
    center: tuple = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.dimension < 1 or self.radius <= 0:
            raise ValueError("ball needs positive dimension and radius")
        c = self.center
        if c is None:
            c = (0j,) * self.dimension
        object.__setattr__(self, "center", tuple(complex(x) for x in c))
        if len(self.center) != self.dimension:
            raise ValueError("center dimension mismatch")

    @property
    def center_array(self):
        return np.array(self.center, dtype=complex)


@dataclass(frozen=True)
class Polydisk:
    radii: tuple

    def __post_init__(self):
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        if not self.radii or any(r <= 0 for r in self.radii):
            raise ValueError("polydisk needs positive per-factor radii")

    @property
    def dimension(self):
        return len(self.radii)


@dataclass(frozen=True)
class Ellipsoid:
    """{ z : sum_j w_j |z_j|^2 < 1 } with positive weights w_j."""

    weights: tuple

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if not self.weights or any(w <= 0 for w in self.weights):
            raise ValueError("ellipsoid weights must be positive")

    @property
    def dimension(self):
        return len(self.weights)


@dataclass(frozen=True)
class PlanarRiemann:
    """Planar domain f(D) given by a univalent finite power series f on the disk.

    ``coefficients[k]`` is the coefficient of zeta^k (k = 0 is an offset).
    Univalence is the caller's responsibility; ``sum_k k |c_k| <= |c_1|`` is a
    convenient sufficient condition.
    """

    coefficients: tuple
    boundary_nodes: int = 4096

    def __post_init__(self):
        object.__setattr__(
            self, "coefficients", tuple(complex(c) for c in self.coefficients)
        )
        if len(self.coefficients) < 2:
            raise ValueError("need at least a degree-1 series")

    @property
    def dimension(self):
        return 1

    def map_values(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        out = np.zeros_like(zeta)
        for c in reversed(self.coefficients):
            out = out * zeta + c
        return out

    def map_derivative(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        out = np.zeros_like(zeta)
        for k in range(len(self.coefficients) - 1, 0, -1):
            out = out * zeta + k * self.coefficients[k]
        return out

    def map_second_derivative(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        out = np.zeros_like(zeta)
        for k in range(len(self.coefficients) - 1, 1, -1):
            out = out * zeta + k * (k - 1) * self.coefficients[k]
        return out

    def boundary_curve(self):
        th = 2 * np.pi * np.arange(self.boundary_nodes) / self.boundary_nodes
        return self.map_values(np.exp(1j * th))

    def invert(self, z, tol=1e-13, maxiter=60):
        """Newton inversion f(zeta) = z for a single interior point z."""
        z = complex(z)
        # coarse seed on a polar grid
        rr = np.linspace(0.0, 0.999, 40)
        tt = np.exp(2j * np.pi * np.arange(64) / 64)
        grid = (rr[:, None] * tt[None, :]).ravel()
        seed = grid[np.argmin(np.abs(self.map_values(grid) - z))]
        zeta = seed
        for _ in range(maxiter):
            f = complex(self.map_values(zeta)) - z
            fp = complex(self.map_derivative(zeta))
            stepv = f / fp
            zeta = zeta - stepv
            if abs(zeta) > 1.0:
                zeta = zeta / abs(zeta) * 0.999999
            if abs(stepv) < tol:
                break
        return zeta


@dataclass(frozen=True)
class ConvexBody:
    """Bounded convex domain containing 0, described by a gauge oracle.

    ``support`` maps a unit direction u in C^d (flattened to R^{2d} internally)
    to the boundary parameter R(u) > 0 with R(u) u on the boundary.
    """

    dimension: int
    support: Callable[[np.ndarray], float]
    bounding_radius: Optional[float] = None
    name: str = "convex_body"

    def __hash__(self):
        return hash((self.dimension, self.name, id(self.support)))


@dataclass(frozen=True)
class Product:
    left: object
    right: object

    @property
    def dimension(self):
        return dimension(self.left) + dimension(self.right)


@dataclass(frozen=True)
class Image:
    """Holomorphic image F(base). The map must carry an inverse for membership."""

    base: object
    holo_map: HoloMap

    @property
    def dimension(self):
        return dimension(self.base)


DomainSpec = object  # union of the variants above; kept loose on purpose


def dimension(spec) -> int:
    return spec.dimension


def disk(radius: float = 1.0) -> Polydisk:
    """The one-dimensional polydisk, i.e. a disk centered at 0."""
    return Polydisk((radius,))


# ---------------------------------------------------------------------------
# membership
# ---------------------------------------------------------------------------

def margin(spec, pts: np.ndarray) -> np.ndarray:
    """Vectorized signed gauge-like margin: negative inside, positive outside.

    For Ball/Polydisk/Ellipsoid/ConvexBody this is gauge(z) - 1; for products
    the max of factor margins; for images the margin of the preimage; for
    planar Riemann domains a winding-number indicator (-1 inside / +1 outside).
    """
    pts = np.asarray(pts, dtype=complex)
    if pts.ndim == 1:
        pts = pts[None, :]
    if isinstance(spec, Ball):
        return np.linalg.norm(pts - spec.center_array, axis=-1) / spec.radius - 1.0
    if isinstance(spec, Polydisk):
        radii = np.array(spec.radii)
        return np.max(np.abs(pts) / radii, axis=-1) - 1.0
    if isinstance(spec, Ellipsoid):
        w = np.array(spec.weights)
        return np.sqrt(np.sum(w * np.abs(pts) ** 2, axis=-1)) - 1.0
    if isinstance(spec, ConvexBody):
        out = np.empty(len(pts))
        for i, z in enumerate(pts):
            nz = np.linalg.norm(z)
            if nz == 0:
                out[i] = -1.0
            else:
                out[i] = nz / spec.support(z / nz) - 1.0
        return out
    if isinstance(spec, Product):
        dl = dimension(spec.left)
        return np.maximum(
            margin(spec.left, pts[:, :dl]), margin(spec.right, pts[:, dl:])
        )
    if isinstance(spec, Image):
        if spec.holo_map.inverse is None:
            raise UnsupportedOperationError(
                "image spec without inverse map cannot test membership"
            )
        return margin(spec.base, spec.holo_map.inverse(pts))
    if isinstance(spec, PlanarRiemann):
        return np.where(_winding_inside(spec, pts[:, 0]), -1.0, 1.0)
    raise UnsupportedOperationError(f"margin: unknown spec {type(spec)!r}")


def _winding_inside(spec: PlanarRiemann, z: np.ndarray) -> np.ndarray:
    curve = spec.boundary_curve()
    w = curve[None, :] - np.asarray(z, dtype=complex)[:, None]
    ang = np.angle(np.roll(w, -1, axis=1) / w)
    winding = np.abs(ang.sum(axis=1)) / (2 * np.pi)
    return winding > 0.5


def contains(spec, z) -> bool:
    """Membership in the open domain."""
    z = np.asarray(z, dtype=complex)
    if not np.all(np.isfinite(z.view(float))):
        raise ValueError("point must be finite")
    return bool(margin(spec, z[None, :])[0] < 0)


def project_inside(spec, pts: np.ndarray, shrink: float = 1e-9) -> np.ndarray:
    """Gauge-radial retraction of points into the closed domain (convex variants).

    Used by the extremal-disk optimizer; exact metric projection for balls and
    polydisks, a valid retraction for the other convex variants.
    """
    pts = np.asarray(pts, dtype=complex)
    if isinstance(spec, Ball):
        y = pts - spec.center_array
        n = np.linalg.norm(y, axis=-1, keepdims=True) / spec.radius
        f = np.minimum(1.0, (1 - shrink) / np.maximum(n, 1e-300))
        return spec.center_array + y * f
    if isinstance(spec, Polydisk):
        radii = np.array(spec.radii)
        a = np.abs(pts) / radii
        f = np.minimum(1.0, (1 - shrink) / np.maximum(a, 1e-300))
        return pts * f
    if isinstance(spec, Ellipsoid):
        w = np.array(spec.weights)
        g = np.sqrt(np.sum(w * np.abs(pts) ** 2, axis=-1, keepdims=True))
        f = np.minimum(1.0, (1 - shrink) / np.maximum(g, 1e-300))
        return pts * f
    if isinstance(spec, ConvexBody):
        out = pts.copy()
        m = margin(spec, pts)
        bad = m > 0
        out[bad] = pts[bad] / (1 + m[bad, None]) * (1 - shrink)
        return out
    if isinstance(spec, Product):
        dl = dimension(spec.left)
        out = pts.copy()
        out[..., :dl] = project_inside(spec.left, pts[..., :dl], shrink)
        out[..., dl:] = project_inside(spec.right, pts[..., dl:], shrink)
        return out
    raise UnsupportedOperationError(
        f"project_inside requires a convex variant, got {type(spec)!r}"
    )


def is_convex(spec) -> bool:
    if isinstance(spec, (Ball, Polydisk, Ellipsoid, ConvexBody)):
        return True
    if isinstance(spec, Product):
        return is_convex(spec.left) and is_convex(spec.right)
    return False


# ---------------------------------------------------------------------------
# line boundary distance
# ---------------------------------------------------------------------------

def _canonical_direction(v: np.ndarray) -> np.ndarray:
    """Unit vector with a pinned phase, so delta(z; c v) == delta(z; v) exactly."""
    v = np.asarray(v, dtype=complex)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise ValueError("direction must be nonzero")
    u = v / nv
    k = int(np.argmax(np.abs(u) > 1e-14))
    phase = u[k] / abs(u[k])
    return u / phase


def _exit_time(spec, z, u, theta: float, t_max: float = 1e6) -> float:
    """First exit parameter t > 0 along z + t e^{i theta} u (bisection)."""
    direction = np.exp(1j * theta) * u
    hi = 1.0
    while margin(spec, (z + hi * direction)[None, :])[0] < 0:
        hi *= 2.0
        if hi > t_max:
            return math.inf
    lo = 0.0 if hi == 1.0 else hi / 2.0
    while hi - lo > EXIT_TOL:
        mid = 0.5 * (lo + hi)
        if margin(spec, (z + mid * direction)[None, :])[0] < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _golden_min(f, a, b, tol=1e-12, maxiter=120):
    invphi = (math.sqrt(5) - 1) / 2
    c = b - invphi * (b - a)
    d_ = a + invphi * (b - a)
    fc, fd = f(c), f(d_)
    for _ in range(maxiter):
        if b - a < tol:
            break
        if fc < fd:
            b, d_, fd = d_, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d_, fd
            d_ = a + invphi * (b - a)
            fd = f(d_)
    x = 0.5 * (a + b)
    return x, f(x)


def _analytic_line_distance(spec, z, u):
    """Exact delta for the variants with closed-form complex-line slices."""
    if isinstance(spec, Ball):
        y = z - spec.center_array
        b = np.vdot(u, y)  # <y, u>
        rho = math.sqrt(max(spec.radius**2 - np.vdot(y, y).real + abs(b) ** 2, 0.0))
        return rho - abs(b)
    if isinstance(spec, Polydisk):
        best = math.inf
        for zj, uj, rj in zip(z, u, spec.radii):
            if abs(uj) > 1e-15:
                best = min(best, (rj - abs(zj)) / abs(uj))
        return best
    if isinstance(spec, Ellipsoid):
        w = np.array(spec.weights)
        a = float(np.sum(w * np.abs(u) ** 2))
        beta = np.sum(w * u * np.conj(z))
        c = float(np.sum(w * np.abs(z) ** 2))
        disc = max((1 - c) / a + abs(beta) ** 2 / a**2, 0.0)
        return math.sqrt(disc) - abs(beta) / a
    if isinstance(spec, Product):
        dl = dimension(spec.left)
        ts = []
        vl, vr = u[:dl], u[dl:]
        if np.linalg.norm(vl) > 1e-15:
            ts.append(line_boundary_distance(spec.left, z[:dl], vl) / np.linalg.norm(vl))
        if np.linalg.norm(vr) > 1e-15:
            ts.append(line_boundary_distance(spec.right, z[dl:], vr) / np.linalg.norm(vr))
        return min(ts) if ts else math.inf
    return None


def line_boundary_distance(spec, z, v) -> float:
    """delta_Omega(z; v): distance from z to the boundary within z + C*v.

    Computed as ||v|| times the minimum over phases of the ray exit time;
    64 coarse phases followed by golden-section refinement. Analytic slice
    formulas are used for balls, polydisks, ellipsoids, and products.
    Returns +inf when the domain is unbounded along the line.
    """
    z = np.asarray(z, dtype=complex)
    if not contains(spec, z):
        raise ValueError("line_boundary_distance requires an interior base point")
    nv = np.linalg.norm(np.asarray(v, dtype=complex))
    u = _canonical_direction(v)
    exact = _analytic_line_distance(spec, z, u)
    if exact is not None:
        return nv * exact

    thetas = 2 * np.pi * np.arange(PHASE_COUNT) / PHASE_COUNT
    times = np.array([_exit_time(spec, z, u, th) for th in thetas])
    if not np.all(np.isfinite(times)):
        return math.inf
    k = int(np.argmin(times))
    span = 2 * np.pi / PHASE_COUNT
    _, tmin = _golden_min(
        lambda th: _exit_time(spec, z, u, th), thetas[k] - span, thetas[k] + span
    )
    return nv * min(float(np.min(times)), tmin)


def slice_nearest_boundary(spec, z, u):
    """(delta, boundary point) of the complex-line slice through z along unit u."""
    z = np.asarray(z, dtype=complex)
    u = _canonical_direction(u)
    if isinstance(spec, Ball):
        y = z - spec.center_array
        b = np.vdot(u, y)
        rho = math.sqrt(max(spec.radius**2 - np.vdot(y, y).real + abs(b) ** 2, 0.0))
        # slice = {w : |w + b| < rho}; nearest boundary point to w=0
        c = -b
        w_star = c - rho * c / abs(c) if abs(c) > 1e-15 else rho + 0j
        return rho - abs(b), z + w_star * u
    if isinstance(spec, Polydisk):
        ts = [
            (rj - abs(zj)) / abs(uj) if abs(uj) > 1e-15 else math.inf
            for zj, uj, rj in zip(z, u, spec.radii)
        ]
        j = int(np.argmin(ts))
        # exit phase: move z_j radially outward
        zj, uj = z[j], u[j]
        phase = (zj / abs(zj)) / (uj / abs(uj)) if abs(zj) > 1e-15 else 1 / (uj / abs(uj))
        phase /= abs(phase)
        return ts[j], z + ts[j] * phase * u
    if isinstance(spec, Ellipsoid):
        w = np.array(spec.weights)
        a = float(np.sum(w * np.abs(u) ** 2))
        beta = complex(np.sum(w * u * np.conj(z)))
        cc = float(np.sum(w * np.abs(z) ** 2))
        rho = math.sqrt(max((1 - cc) / a + abs(beta) ** 2 / a**2, 0.0))
        cen = -np.conj(beta) / a
        w_star = cen - rho * cen / abs(cen) if abs(cen) > 1e-15 else rho + 0j
        return rho - abs(cen), z + w_star * u
    # generic: phase scan
    thetas = 2 * np.pi * np.arange(PHASE_COUNT) / PHASE_COUNT
    times = np.array([_exit_time(spec, z, u, th) for th in thetas])
    k = int(np.argmin(times))
    span = 2 * np.pi / PHASE_COUNT
    th_star, tmin = _golden_min(
        lambda th: _exit_time(spec, z, u, th), thetas[k] - span, thetas[k] + span
    )
    if times[k] < tmin:
        th_star, tmin = thetas[k], times[k]
    return tmin, z + tmin * np.exp(1j * th_star) * u


def boundary_normal(spec, b):
    """Outward real normal direction of the supporting hyperplane at boundary b."""
    b = np.asarray(b, dtype=complex)
    if isinstance(spec, Ball):
        return (b - spec.center_array) / spec.radius
    if isinstance(spec, Ellipsoid):
        w = np.array(spec.weights)
        n = w * b
        return n / np.linalg.norm(n)
    if isinstance(spec, Polydisk):
        radii = np.array(spec.radii)
        j = int(np.argmax(np.abs(b) / radii))
        n = np.zeros(len(b), dtype=complex)
        n[j] = b[j] / abs(b[j])
        return n
    if isinstance(spec, ConvexBody):
        # finite-difference gradient of the gauge, symmetrized to a direction
        eps = 1e-6
        g0 = margin(spec, b[None, :])[0]
        grad = np.zeros(len(b), dtype=complex)
        for k in range(len(b)):
            e = np.zeros(len(b), dtype=complex)
            e[k] = eps
            gx = margin(spec, (b + e)[None, :])[0] - margin(spec, (b - e)[None, :])[0]
            gy = margin(spec, (b + 1j * e)[None, :])[0] - margin(spec, (b - 1j * e)[None, :])[0]
            grad[k] = (gx + 1j * gy) / (2 * eps)
        del g0
        return grad / np.linalg.norm(grad)
    if isinstance(spec, Product):
        dl = dimension(spec.left)
        ml = margin(spec.left, b[None, :dl])[0]
        mr = margin(spec.right, b[None, dl:])[0]
        n = np.zeros(len(b), dtype=complex)
        if ml >= mr:
            n[:dl] = boundary_normal(spec.left, b[:dl])
        else:
            n[dl:] = boundary_normal(spec.right, b[dl:])
        return n
    raise UnsupportedOperationError(f"boundary_normal: {type(spec)!r}")


def euclidean_boundary_distance(spec, z) -> float:
    """Euclidean distance from an interior point to the boundary."""
    z = np.asarray(z, dtype=complex)
    if isinstance(spec, Ball):
        return spec.radius - float(np.linalg.norm(z - spec.center_array))
    if isinstance(spec, Polydisk):
        return min(r - abs(zj) for zj, r in zip(z, spec.radii))
    if isinstance(spec, Product):
        dl = dimension(spec.left)
        return min(
            euclidean_boundary_distance(spec.left, z[:dl]),
            euclidean_boundary_distance(spec.right, z[dl:]),
        )
    if isinstance(spec, PlanarRiemann):
        curve = spec.boundary_curve()
        dist = np.abs(curve - z[0])
        k = int(np.argmin(dist))
        n = len(curve)

        def f(th):
            return abs(complex(spec.map_values(np.exp(1j * th))) - z[0])

        th0 = 2 * np.pi * k / n
        span = 2 * np.pi / n
        _, refined = _golden_min(f, th0 - span, th0 + span)
        return min(float(dist[k]), refined)
    if isinstance(spec, Ellipsoid):
        # min over directions of the line distance; the slice formula along the
        # gradient direction is not exact, so do a small direction search
        d = spec.dimension
        if d == 1:
            return line_boundary_distance(spec, z, np.ones(1, dtype=complex))
        best = math.inf
        rng = np.random.default_rng(0)
        dirs = rng.normal(size=(128, 2 * d))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        for x in dirs:
            u = x[:d] + 1j * x[d:]
            best = min(best, line_boundary_distance(spec, z, u))
        return best
    # generic fallback: min line distance over sampled directions
    d = dimension(spec)
    best = math.inf
    rng = np.random.default_rng(0)
    dirs = rng.normal(size=(64, 2 * d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    for x in dirs:
        u = x[:d] + 1j * x[d:]
        best = min(best, line_boundary_distance(spec, z, u))
    return best


# ---------------------------------------------------------------------------
# bounding boxes and sampling
# ---------------------------------------------------------------------------

def bounding_box(spec) -> np.ndarray:
    """Per-real-coordinate box [lo, hi] of shape (2d, 2) containing the domain.

    Real coordinates are ordered (Re z_1, ..., Re z_d, Im z_1, ..., Im z_d).
    """
    d = dimension(spec)
    if isinstance(spec, Ball):
        c = spec.center_array
        lo = np.concatenate([c.real - spec.radius, c.imag - spec.radius])
        hi = np.concatenate([c.real + spec.radius, c.imag + spec.radius])
        return np.stack([lo, hi], axis=1)
    if isinstance(spec, Polydisk):
        r = np.array(spec.radii)
        r2 = np.concatenate([r, r])
        return np.stack([-r2, r2], axis=1)
    if isinstance(spec, Ellipsoid):
        r = 1.0 / np.sqrt(np.array(spec.weights))
        r2 = np.concatenate([r, r])
        return np.stack([-r2, r2], axis=1)
    if isinstance(spec, PlanarRiemann):
        curve = spec.boundary_curve()
        lo = np.array([curve.real.min(), curve.imag.min()])
        hi = np.array([curve.real.max(), curve.imag.max()])
        return np.stack([lo, hi], axis=1)
    if isinstance(spec, ConvexBody):
        if spec.bounding_radius is not None:
            r = spec.bounding_radius
        else:
            rng = np.random.default_rng(0)
            dirs = rng.normal(size=(512, 2 * d))
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            r = 1.1 * max(
                spec.support(x[:d] + 1j * x[d:]) for x in dirs
            )
        lo = -r * np.ones(2 * d)
        return np.stack([lo, -lo], axis=1)
    if isinstance(spec, Product):
        bl = bounding_box(spec.left)
        br = bounding_box(spec.right)
        dl = dimension(spec.left)
        dr = dimension(spec.right)
        out = np.zeros((2 * d, 2))
        out[:dl] = bl[:dl]
        out[dl:dl + dr] = br[:dr]
        out[d:d + dl] = bl[dl:]
        out[d + dl:] = br[dr:]
        return out
    if isinstance(spec, Image):
        # push a boundary-heavy sample of the base through the map, inflate 10%
        base_pts = sample_interior(spec.base, 512, seed=0)
        scaled = _near_boundary_sample(spec.base, 512, seed=1)
        pts = np.vstack([base_pts, scaled])
        img = spec.holo_map.forward(pts)
        re, im = img.real, img.imag
        lo = np.concatenate([re.min(axis=0), im.min(axis=0)])
        hi = np.concatenate([re.max(axis=0), im.max(axis=0)])
        mid = 0.5 * (lo + hi)
        half = 0.55 * (hi - lo) + 1e-9  # 10% inflation
        return np.stack([mid - half, mid + half], axis=1)
    raise UnsupportedOperationError(f"bounding_box: {type(spec)!r}")


def _near_boundary_sample(spec, n, seed):
    pts = sample_interior(spec, n, seed=seed)
    out = np.empty_like(pts)
    for i, z in enumerate(pts):
        nz = np.linalg.norm(z)
        if nz < 1e-12:
            out[i] = z
            continue
        t = _exit_time(spec, np.zeros_like(z), z / nz, 0.0)
        out[i] = (0.995 * t) * z / nz
    return out


def sample_interior(spec, n: int, seed: int) -> np.ndarray:
    """n reproducible interior points, rejection-sampled from the bounding box."""
    d = dimension(spec)
    if n == 0:
        return np.zeros((0, d), dtype=complex)
    box = bounding_box(spec)
    rng = np.random.default_rng(seed)
    out = []
    attempts = 0
    accepted = 0
    batch = max(256, 2 * n)
    while accepted < n:
        u = rng.uniform(box[:, 0], box[:, 1], size=(batch, 2 * d))
        pts = u[:, :d] + 1j * u[:, d:]
        good = margin(spec, pts) < 0
        sel = pts[good]
        out.append(sel)
        accepted += len(sel)
        attempts += batch
        if attempts > 4096 and accepted / attempts < 1e-6:
            raise SamplingFailureError(
                f"acceptance rate {accepted}/{attempts} below 1e-6",
                attempts=attempts,
                accepted=accepted,
            )
    return np.vstack(out)[:n]


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def _c2pair(c):
    return [float(np.real(c)), float(np.imag(c))]


def _pair2c(p):
    return complex(p[0], p[1])


#: named holomorphic maps available to JSON image specs
_MAP_REGISTRY: dict = {}


def register_map(name: str, factory: Callable[..., HoloMap]):
    _MAP_REGISTRY[name] = factory


def spec_to_json_dict(spec) -> dict:
    if isinstance(spec, Ball):
        return {
            "variant": "ball",
            "dimension": spec.dimension,
            "radius": spec.radius,
            "center": [_c2pair(c) for c in spec.center],
        }
    if isinstance(spec, Polydisk):
        return {"variant": "polydisk", "radii": list(spec.radii)}
    if isinstance(spec, Ellipsoid):
        return {"variant": "ellipsoid", "weights": list(spec.weights)}
    if isinstance(spec, PlanarRiemann):
        return {
            "variant": "planar_riemann",
            "coefficients": [_c2pair(c) for c in spec.coefficients],
        }
    if isinstance(spec, Product):
        return {
            "variant": "product",
            "left": spec_to_json_dict(spec.left),
            "right": spec_to_json_dict(spec.right),
        }
    if isinstance(spec, Image):
        if not spec.holo_map.name or spec.holo_map.name not in _MAP_REGISTRY:
            raise UnsupportedOperationError(
                "only image specs built from registered named maps serialize"
            )
        return {
            "variant": "image",
            "base": spec_to_json_dict(spec.base),
            "map": {"name": spec.holo_map.name},
        }
    raise UnsupportedOperationError(f"cannot serialize {type(spec)!r}")


def spec_from_json_dict(doc: dict):
    variant = doc.get("variant")
    if variant == "ball":
        return Ball(
            dimension=int(doc["dimension"]),
            radius=float(doc.get("radius", 1.0)),
            center=tuple(_pair2c(p) for p in doc["center"]) if "center" in doc else None,
        )
    if variant == "polydisk":
        return Polydisk(tuple(doc["radii"]))
    if variant == "ellipsoid":
        return Ellipsoid(tuple(doc["weights"]))
    if variant == "planar_riemann":
        return PlanarRiemann(tuple(_pair2c(p) for p in doc["coefficients"]))
    if variant == "product":
        return Product(
            spec_from_json_dict(doc["left"]), spec_from_json_dict(doc["right"])
        )
    if variant == "image":
        name = doc["map"]["name"]
        if name not in _MAP_REGISTRY:
            raise UnsupportedOperationError(f"unknown registered map {name!r}")
        holo_map = _MAP_REGISTRY[name]()
        return Image(spec_from_json_dict(doc["base"]), holo_map)
    raise UnsupportedOperationError(f"unknown domain variant {variant!r}")


# ---------------------------------------------------------------------------
# the punctured-bidisk covering image domain
# ---------------------------------------------------------------------------

def punctured_cover_psi(z):
    """The covering map D -> D - {0}, psi(z) = exp(-(1+z)/(1-z))."""
    z = np.asarray(z, dtype=complex)
    return np.exp(-(1 + z) / (1 - z))


def punctured_cover_psi_prime(z):
    z = np.asarray(z, dtype=complex)
    return punctured_cover_psi(z) * (-2.0 / (1 - z) ** 2)


def punctured_cover_map() -> HoloMap:
    """F(z1, z2) = (psi(z2) z1, z2) on the bidisk; biholomorphism onto its image."""

    def fwd(z):
        z = np.asarray(z, dtype=complex)
        out = z.copy()
        out[..., 0] = punctured_cover_psi(z[..., 1]) * z[..., 0]
        return out

    def inv(w):
        w = np.asarray(w, dtype=complex)
        out = w.copy()
        out[..., 0] = w[..., 0] / punctured_cover_psi(w[..., 1])
        return out

    def jac(z):
        z = np.asarray(z, dtype=complex)
        shape = z.shape[:-1]
        J = np.zeros(shape + (2, 2), dtype=complex)
        psi = punctured_cover_psi(z[..., 1])
        J[..., 0, 0] = psi
        J[..., 0, 1] = punctured_cover_psi_prime(z[..., 1]) * z[..., 0]
        J[..., 1, 1] = 1.0
        return J

    def dld(z):
        # det F' = psi(z2); d log det = (0, psi'/psi) = (0, -2/(1-z2)^2)
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        out[..., 1] = -2.0 / (1 - z[..., 1]) ** 2
        return out

    return HoloMap(
        dimension=2, forward=fwd, jacobian=jac, inverse=inv, dlogdet=dld,
        name="punctured_cover",
    )


register_map("punctured_cover", punctured_cover_map)


def punctured_bidisk_image() -> Image:
    """The bounded image of the bidisk under the covering-map shear."""
    return Image(Polydisk((1.0, 1.0)), punctured_cover_map())
