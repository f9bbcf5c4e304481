"""Bergman kernels: closed forms on model domains, numerical fits elsewhere.

The numerical route builds an orthonormal polynomial basis by Cholesky
factorization of the monomial Gram matrix (quasi-random low-discrepancy
quadrature, tensor Gauss on product domains) and evaluates the truncated
kernel K_N(z, w) = sum_k phi_k(z) conj(phi_k(w)) with exact term-by-term
derivatives.

Every kernel source exposes

* ``value(z, w)``            pair evaluation,
* ``pair_derivative``        mixed holomorphic/antiholomorphic derivatives,
* ``log_diag(z)``            (log K, gradient of log K, complex Hessian) on
                             the diagonal, exact for closed forms,
* ``line_taylor(z, v, n)``   Taylor coefficients of K(z + a v, z + b v) in
                             (a, conj(b)) up to order n, used by curvature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from . import domains
from .domains import (
    Ball,
    Ellipsoid,
    HoloMap,
    Image,
    PlanarRiemann,
    Polydisk,
    Product,
)
from .errors import (
    DegenerateMapError,
    IllConditionedBasisError,
    UnsupportedOperationError,
)


class KernelNormalization(Enum):
    """Kernel scaling convention.

    LEBESGUE is the standard L^2 normalization (disk kernel 1/(pi (1-z conj(w))^2));
    PAPER rescales by pi^d so the unit-disk kernel at the origin equals 1.
    """

    LEBESGUE = "lebesgue"
    PAPER = "paper"


def normalization_factor(norm: KernelNormalization, d: int) -> float:
    return math.pi**d if norm is KernelNormalization.PAPER else 1.0


# ---------------------------------------------------------------------------
# multi-index helpers
# ---------------------------------------------------------------------------

def multi_indices(d: int, degree: int):
    """All multi-indices of length d with total degree <= degree (lex order)."""
    out = []

    def rec(prefix, left):
        if left == 0:
            out.append(tuple(prefix))
            return
        budget = degree - sum(prefix)
        for k in range(budget + 1):
            rec(prefix + [k], left - 1)

    rec([], d)
    return [a for a in out if sum(a) <= degree]


def monomial_matrix(pts: np.ndarray, alphas, dorders=None) -> np.ndarray:
    """(N, n_basis) values of (derivatives of) monomials at pts.

    ``dorders`` is a per-variable derivative order tuple; term-by-term
    differentiation with falling factorials.
    """
    pts = np.asarray(pts, dtype=complex)
    n, d = pts.shape
    out = np.empty((n, len(alphas)), dtype=complex)
    if dorders is None:
        dorders = (0,) * d
    for j, a in enumerate(alphas):
        col = np.ones(n, dtype=complex)
        dead = False
        for k, (ak, dk) in enumerate(zip(a, dorders)):
            if dk > ak:
                dead = True
                break
            fac = 1.0
            for i in range(dk):
                fac *= ak - i
            if ak - dk > 0:
                col = col * (fac * pts[:, k] ** (ak - dk))
            else:
                col = col * fac
        out[:, j] = 0.0 if dead else col
    return out


# ---------------------------------------------------------------------------
# quadrature nodes
# ---------------------------------------------------------------------------

def _sobol(n, dim, seed):
    m = max(1, math.ceil(math.log2(max(n, 2))))
    eng = qmc.Sobol(dim, scramble=True, seed=seed)
    pts = eng.random_base2(m)
    return pts[:n]


def _disk_nodes(n, radius, seed):
    u = _sobol(n, 2, seed)
    zeta = radius * np.sqrt(u[:, 0]) * np.exp(2j * np.pi * u[:, 1])
    w = np.full(n, math.pi * radius**2 / n)
    return zeta[:, None], w


def _ball_nodes(n, d, radius, center, seed):
    u = _sobol(n, 2 * d + 1, seed)
    g = ndtri(np.clip(u[:, : 2 * d], 1e-12, 1 - 1e-12))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * u[:, 2 * d] ** (1.0 / (2 * d))
    x = g * r[:, None]
    z = x[:, :d] + 1j * x[:, d:] + center
    vol = math.pi**d * radius ** (2 * d) / math.factorial(d)
    return z, np.full(n, vol / n)


def _disk_tensor_nodes(degree, radius):
    """Exact quadrature on a disk for monomials z^a conj(z)^b, a, b <= degree."""
    n_r = degree // 2 + 2
    n_t = 2 * degree + 4
    x, wx = np.polynomial.legendre.leggauss(n_r)
    u = 0.5 * (x + 1) * radius**2  # u = rho^2 on [0, r^2]
    wu = 0.5 * radius**2 * wx
    th = 2 * np.pi * np.arange(n_t) / n_t
    zeta = np.sqrt(u)[:, None] * np.exp(1j * th)[None, :]
    w = (wu[:, None] * (np.pi / n_t) * np.ones(n_t)[None, :])
    return zeta.ravel()[:, None], w.ravel()


def quadrature_nodes(spec, n, seed, degree=None):
    """(points (N, d), weights (N,)) with sum w_i f(z_i) ~ integral over spec."""
    if isinstance(spec, Polydisk):
        if spec.dimension == 1:
            return _disk_nodes(n, spec.radii[0], seed)
        parts = [_disk_tensor_nodes(degree if degree is not None else 16, r)
                 for r in spec.radii]
        pts = parts[0][0]
        w = parts[0][1]
        for p2, w2 in parts[1:]:
            n1, n2 = len(pts), len(p2)
            pts = np.hstack([
                np.repeat(pts, n2, axis=0),
                np.tile(p2, (n1, 1)),
            ])
            w = (w[:, None] * w2[None, :]).ravel()
        return pts, w
    if isinstance(spec, Ball):
        if spec.dimension == 1:
            c = spec.center_array
            pts, w = _disk_nodes(n, spec.radius, seed)
            return pts + c, w
        return _ball_nodes(n, spec.dimension, spec.radius, spec.center_array, seed)
    if isinstance(spec, Ellipsoid):
        d = spec.dimension
        z, w = _ball_nodes(n, d, 1.0, np.zeros(d, dtype=complex), seed)
        scale = 1.0 / np.sqrt(np.array(spec.weights))
        return z * scale, w * np.prod(scale**2)
    if isinstance(spec, PlanarRiemann):
        zeta, w = _disk_nodes(n, 1.0, seed)
        fp = spec.map_derivative(zeta[:, 0])
        return spec.map_values(zeta[:, 0])[:, None], w * np.abs(fp) ** 2
    if isinstance(spec, Image):
        if spec.holo_map.inverse is None:
            raise UnsupportedOperationError("image fit requires an inverse map")
        pts, w = quadrature_nodes(spec.base, n, seed, degree=degree)
        J = spec.holo_map.jacobian(pts)
        det = np.linalg.det(J)
        return spec.holo_map.forward(pts), w * np.abs(det) ** 2
    if isinstance(spec, Product):
        dl = domains.dimension(spec.left)
        nl = max(64, int(math.sqrt(n)))
        pl, wl = quadrature_nodes(spec.left, nl, seed, degree=degree)
        pr, wr = quadrature_nodes(spec.right, nl, seed + 1, degree=degree)
        n1, n2 = len(pl), len(pr)
        pts = np.hstack([np.repeat(pl, n2, axis=0), np.tile(pr, (n1, 1))])
        w = (wl[:, None] * wr[None, :]).ravel()
        del dl
        return pts, w
    # generic bounded spec: QMC rejection from the bounding box
    box = domains.bounding_box(spec)
    d = domains.dimension(spec)
    u = _sobol(n, 2 * d, seed)
    u = box[:, 0] + u * (box[:, 1] - box[:, 0])
    pts = u[:, :d] + 1j * u[:, d:]
    inside = domains.margin(spec, pts) < 0
    boxvol = float(np.prod(box[:, 1] - box[:, 0]))
    return pts[inside], np.full(int(inside.sum()), boxvol / n)


# ---------------------------------------------------------------------------
# spectral (Cauchy/FFT) differentiation helpers
# ---------------------------------------------------------------------------

def _line_taylor_fft(value_fn, z, v, order, rho, nodes=16):
    """Taylor coefficients c[a, b] of the line-restricted kernel via FFT.

    ``value_fn(zs, ws)`` must accept (N, d) arrays. Returns an
    (order+1, order+1) array with K(z + s v, z + t v) = sum c[a,b] s^a conj(t)^b.
    """
    d = len(z)
    th = 2 * np.pi * np.arange(nodes) / nodes
    ring = rho * np.exp(1j * th)
    Z = (z[None, None, :] + ring[:, None, None] * v[None, None, :])
    Z = np.broadcast_to(Z, (nodes, nodes, d)).reshape(-1, d)
    W = (z[None, None, :] + ring[None, :, None] * v[None, None, :])
    W = np.broadcast_to(W, (nodes, nodes, d)).reshape(-1, d)
    vals = value_fn(Z, W).reshape(nodes, nodes)
    # vals[p, q] = sum c_ab rho^{a+b} e^{i a th_p} e^{-i b th_q}
    F = np.fft.fft(vals, axis=0) / nodes     # pairs with e^{+i a th_p}
    F = np.fft.ifft(F, axis=1)               # pairs with e^{-i b th_q}
    c = np.empty((order + 1, order + 1), dtype=complex)
    for a in range(order + 1):
        for b in range(order + 1):
            c[a, b] = F[a, b] / rho ** (a + b)
    return c


def _series_log2d(c, order):
    """log of a 2-variable power series, truncated at (order, order)."""
    c0 = c[0, 0]
    e = c[: order + 1, : order + 1] / c0
    e = e.copy()
    e[0, 0] = 0.0
    acc = np.zeros_like(e)
    power = np.zeros_like(e)
    power[0, 0] = 1.0
    sign = 1.0
    for k in range(1, 2 * order + 1):
        power = _conv2_trunc(power, e, order)
        acc = acc + sign * power / k
        sign = -sign
    acc[0, 0] += np.log(c0)
    return acc


def _conv2_trunc(a, b, order):
    n = order + 1
    out = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            if a[i, j] == 0:
                continue
            out[i:, j:] += a[i, j] * b[: n - i, : n - j]
    return out


# ---------------------------------------------------------------------------
# closed-form kernels
# ---------------------------------------------------------------------------

_CLOSED_VARIANTS = (Ball, Polydisk, PlanarRiemann, Product, Image)


def _supports_closed_form(spec) -> bool:
    if isinstance(spec, (Ball, PlanarRiemann)):
        return True
    if isinstance(spec, Polydisk):
        return True
    if isinstance(spec, Product):
        return _supports_closed_form(spec.left) and _supports_closed_form(spec.right)
    if isinstance(spec, Image):
        return spec.holo_map.inverse is not None and _supports_closed_form(spec.base)
    return False


@dataclass(frozen=True)
class ClosedFormKernel:
    """Exact Bergman kernel on a model domain (or image of one)."""

    spec: object
    normalization: KernelNormalization = KernelNormalization.LEBESGUE

    def __post_init__(self):
        if not _supports_closed_form(self.spec):
            raise UnsupportedOperationError(
                f"no closed-form kernel for {type(self.spec)!r}"
            )

    @property
    def dimension(self):
        return domains.dimension(self.spec)

    # -- pair values --------------------------------------------------------

    def value(self, z, w):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        single = z.ndim == 1
        if single:
            z, w = z[None, :], w[None, :]
        out = _closed_value(self.spec, z, w)
        out = out * normalization_factor(self.normalization, self.dimension)
        return out[0] if single else out

    def diag_value(self, z):
        v = self.value(z, z)
        return float(np.real(v)) if np.isscalar(v) or v.ndim == 0 else v.real

    # -- diagonal log derivatives -------------------------------------------

    def log_diag(self, z):
        """(log K(z,z), grad in z, complex Hessian) with exact formulas."""
        z = np.asarray(z, dtype=complex)
        logk, p, H = _closed_log_diag(self.spec, z)
        logk += math.log(normalization_factor(self.normalization, self.dimension))
        return logk, p, H

    # -- generic derivatives --------------------------------------------------

    def pair_derivative(self, z, w, a, b):
        """d^|a|/dz^a d^|b|/d conj(w)^b of K at the pair (z, w)."""
        a = tuple(int(x) for x in a)
        b = tuple(int(x) for x in b)
        if max(sum(a), sum(b)) > 2:
            raise UnsupportedOperationError("derivative orders above 2 per slot")
        return _closed_pair_derivative(self, np.asarray(z, complex),
                                       np.asarray(w, complex), a, b)

    def line_taylor(self, z, v, order):
        z = np.asarray(z, dtype=complex)
        v = np.asarray(v, dtype=complex)
        gap = domains.line_boundary_distance(self.spec, z, v)
        rho = 0.25 * gap / np.linalg.norm(v)
        return _line_taylor_fft(lambda Z, W: self.value(Z, W), z, v, order, rho)


def _closed_value(spec, z, w):
    if isinstance(spec, Ball):
        d = spec.dimension
        y = (z - spec.center_array) / spec.radius
        x = (w - spec.center_array) / spec.radius
        ip = np.sum(y * np.conj(x), axis=-1)
        return (
            math.factorial(d)
            / math.pi**d
            / spec.radius ** (2 * d)
            * (1 - ip) ** (-(d + 1))
        )
    if isinstance(spec, Polydisk):
        out = np.ones(z.shape[0], dtype=complex)
        for j, r in enumerate(spec.radii):
            out = out * (r**2 / (math.pi * (r**2 - z[:, j] * np.conj(w[:, j])) ** 2))
        return out
    if isinstance(spec, PlanarRiemann):
        zeta = np.array([spec.invert(x) for x in z[:, 0]])
        xi = np.array([spec.invert(x) for x in w[:, 0]])
        disk = 1.0 / (math.pi * (1 - zeta * np.conj(xi)) ** 2)
        return disk / (spec.map_derivative(zeta) * np.conj(spec.map_derivative(xi)))
    if isinstance(spec, Product):
        dl = domains.dimension(spec.left)
        return _closed_value(spec.left, z[:, :dl], w[:, :dl]) * _closed_value(
            spec.right, z[:, dl:], w[:, dl:]
        )
    if isinstance(spec, Image):
        zb = spec.holo_map.inverse(z)
        wb = spec.holo_map.inverse(w)
        det_z = np.linalg.det(spec.holo_map.jacobian(zb))
        det_w = np.linalg.det(spec.holo_map.jacobian(wb))
        if np.any(np.abs(det_z) < 1e-14) or np.any(np.abs(det_w) < 1e-14):
            raise DegenerateMapError("singular Jacobian in kernel transform")
        return _closed_value(spec.base, zb, wb) / (det_z * np.conj(det_w))
    raise UnsupportedOperationError(f"closed form: {type(spec)!r}")


def _closed_log_diag(spec, z):
    if isinstance(spec, Ball):
        d = spec.dimension
        y = z - spec.center_array
        s = spec.radius**2 - float(np.vdot(y, y).real)
        # K(z,z) = d!/(pi^d r^{2d}) (s / r^2)^{-(d+1)} = (d!/pi^d) r^2 s^{-(d+1)}
        logk = (
            math.log(math.factorial(d) / math.pi**d)
            + 2 * math.log(spec.radius)
            - (d + 1) * math.log(s)
        )
        p = (d + 1) * np.conj(y) / s
        H = (d + 1) * (s * np.eye(d) + np.outer(np.conj(y), y)) / s**2
        return logk, p, H
    if isinstance(spec, Polydisk):
        d = spec.dimension
        p = np.zeros(d, dtype=complex)
        H = np.zeros((d, d), dtype=complex)
        logk = 0.0
        for j, r in enumerate(spec.radii):
            s = r**2 - abs(z[j]) ** 2
            logk += math.log(r**2 / math.pi) - 2 * math.log(s)
            p[j] = 2 * np.conj(z[j]) / s
            H[j, j] = 2 * r**2 / s**2
        return logk, p, H
    if isinstance(spec, PlanarRiemann):
        zeta = spec.invert(z[0])
        fp = complex(spec.map_derivative(zeta))
        fpp = complex(spec.map_second_derivative(zeta))
        s = 1 - abs(zeta) ** 2
        logk = -math.log(math.pi) - 2 * math.log(s) - 2 * math.log(abs(fp))
        p = np.array([(2 * np.conj(zeta) / s - fpp / fp) / fp])
        H = np.array([[2 / s**2 / abs(fp) ** 2]])
        return logk, p, H
    if isinstance(spec, Product):
        dl = domains.dimension(spec.left)
        l1, p1, H1 = _closed_log_diag(spec.left, z[:dl])
        l2, p2, H2 = _closed_log_diag(spec.right, z[dl:])
        d = len(z)
        p = np.concatenate([p1, p2])
        H = np.zeros((d, d), dtype=complex)
        H[:dl, :dl] = H1
        H[dl:, dl:] = H2
        return l1 + l2, p, H
    if isinstance(spec, Image):
        zb = spec.holo_map.inverse(np.asarray(z)[None, :])[0]
        J = spec.holo_map.jacobian(zb[None, :])[0]
        det = complex(np.linalg.det(J))
        if abs(det) < 1e-14:
            raise DegenerateMapError("singular Jacobian in log_diag transform")
        lb, pb, Hb = _closed_log_diag(spec.base, zb)
        if spec.holo_map.dlogdet is not None:
            dld = spec.holo_map.dlogdet(zb[None, :])[0]
        else:
            dld = _fd_dlogdet(spec.holo_map, zb)
        Jinv = np.linalg.inv(J)
        p = (pb - dld) @ Jinv
        H = Jinv.conj().T @ Hb @ Jinv
        logk = lb - 2 * math.log(abs(det))
        return logk, p, H
    raise UnsupportedOperationError(f"log_diag: {type(spec)!r}")


def _fd_dlogdet(holo_map: HoloMap, z, step=1e-6):
    d = holo_map.dimension

    def f(x):
        return np.log(np.linalg.det(holo_map.jacobian(x[None, :])[0]))

    out = np.zeros(d, dtype=complex)
    for k in range(d):
        e = np.zeros(d, dtype=complex)
        e[k] = step
        out[k] = (f(z + e) - f(z - e)) / (2 * step)
    return out


def _closed_pair_derivative(kern: ClosedFormKernel, z, w, a, b):
    """Spectral (Cauchy-FFT) mixed derivative; exponentially accurate."""
    d = kern.dimension
    active = [("z", k) for k in range(d) if a[k] > 0] + [
        ("w", k) for k in range(d) if b[k] > 0
    ]
    if not active:
        return complex(kern.value(z, w))
    # per-variable circle radius: a fraction of the axis exit time
    rhos = {}
    for side, k in active:
        base = z if side == "z" else w
        e = np.zeros(d, dtype=complex)
        e[k] = 1.0
        gap = domains.line_boundary_distance(kern.spec, base, e)
        rhos[(side, k)] = 0.2 * gap
    nodes = 12
    th = np.exp(2j * np.pi * np.arange(nodes) / nodes)
    orders = [a[k] if side == "z" else b[k] for side, k in active]
    grids = np.meshgrid(*([np.arange(nodes)] * len(active)), indexing="ij")
    Z = np.broadcast_to(z, grids[0].shape + (d,)).copy()
    W = np.broadcast_to(w, grids[0].shape + (d,)).copy()
    for i, (side, k) in enumerate(active):
        ring = rhos[(side, k)] * th[grids[i]]
        if side == "z":
            Z[..., k] = Z[..., k] + ring
        else:
            # K is a power series in conj(w_k); conj(W_k) moves on the ring
            W[..., k] = W[..., k] + np.conj(ring)
    vals = kern.value(Z.reshape(-1, d), W.reshape(-1, d)).reshape(grids[0].shape)
    # in each active angle vals carries e^{+i order th}; fft/N extracts it
    coef = vals
    for i in range(len(active)):
        coef = np.fft.fft(coef, axis=i) / nodes
    c = coef[tuple(orders)]
    for i, (side, k) in enumerate(active):
        c = c / rhos[(side, k)] ** orders[i]
        c = c * math.factorial(orders[i])
    return complex(c)


# ---------------------------------------------------------------------------
# numerical kernel model
# ---------------------------------------------------------------------------

@dataclass
class KernelModel:
    """Truncated orthonormal-expansion kernel K_N(z,w) = phi(z) . conj(phi(w)).

    ``coeff`` is the inverse Cholesky factor of the monomial Gram matrix, so
    phi(z) = coeff @ monomials(z). Immutable after fitting.
    """

    alphas: tuple
    coeff: np.ndarray
    dimension: int
    normalization: KernelNormalization = KernelNormalization.LEBESGUE
    metadata: dict = field(default_factory=dict)

    def _phi(self, pts, dorders=None):
        M = monomial_matrix(pts, self.alphas, dorders)
        return M @ self.coeff.T

    def value(self, z, w):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        single = z.ndim == 1
        if single:
            z, w = z[None, :], w[None, :]
        out = np.sum(self._phi(z) * np.conj(self._phi(w)), axis=1)
        return out[0] if single else out

    def diag_value(self, z):
        return float(np.real(self.value(z, z)))

    def pair_derivative(self, z, w, a, b):
        z = np.asarray(z, dtype=complex)[None, :]
        w = np.asarray(w, dtype=complex)[None, :]
        pa = self._phi(z, tuple(a))
        pb = self._phi(w, tuple(b))
        return complex(np.sum(pa * np.conj(pb)))

    def log_diag(self, z):
        z = np.asarray(z, dtype=complex)
        d = self.dimension
        K = self.pair_derivative(z, z, (0,) * d, (0,) * d).real
        p = np.zeros(d, dtype=complex)
        H = np.zeros((d, d), dtype=complex)
        Ki = np.zeros(d, dtype=complex)
        for i in range(d):
            ei = tuple(1 if k == i else 0 for k in range(d))
            Ki[i] = self.pair_derivative(z, z, ei, (0,) * d)
        for i in range(d):
            ei = tuple(1 if k == i else 0 for k in range(d))
            p[i] = Ki[i] / K
            for j in range(d):
                ej = tuple(1 if k == j else 0 for k in range(d))
                Kij = self.pair_derivative(z, z, ei, ej)
                H[i, j] = (K * Kij - Ki[i] * np.conj(Ki[j])) / K**2
        return math.log(K), p, 0.5 * (H + H.conj().T)

    def line_taylor(self, z, v, order):
        """Exact Taylor coefficients of the line-restricted kernel."""
        z = np.asarray(z, dtype=complex)
        v = np.asarray(v, dtype=complex)
        nb = len(self.alphas)
        psi = np.zeros((nb, order + 1), dtype=complex)
        for j, alpha in enumerate(self.alphas):
            coeffs = np.zeros(order + 1, dtype=complex)
            coeffs[0] = 1.0
            deg = 0
            for k, ak in enumerate(alpha):
                for _ in range(ak):
                    # multiply by (z_k + t v_k), truncated at `order`
                    shifted = np.zeros_like(coeffs)
                    shifted[1:] = coeffs[:-1] * v[k]
                    coeffs = coeffs * z[k] + shifted
                    deg += 1
            psi[j] = coeffs
        phi = self.coeff @ psi  # (nb, order+1) line-series of each phi_k
        return np.einsum("ka,kb->ab", phi, np.conj(phi))

    # -- serialization -------------------------------------------------------

    def to_json_dict(self):
        c = self.coeff
        return {
            "schema": "kernel-model/v1",
            "dimension": self.dimension,
            "normalization": self.normalization.value,
            "alphas": [list(a) for a in self.alphas],
            "coeff": [[[float(x.real), float(x.imag)] for x in row] for row in c],
            "metadata": {
                k: (float(v) if isinstance(v, (int, float, np.floating)) else v)
                for k, v in self.metadata.items()
            },
        }

    @classmethod
    def from_json_dict(cls, doc):
        if doc.get("schema") != "kernel-model/v1":
            raise ValueError("unknown kernel model schema")
        coeff = np.array(
            [[complex(p[0], p[1]) for p in row] for row in doc["coeff"]],
            dtype=complex,
        )
        return cls(
            alphas=tuple(tuple(a) for a in doc["alphas"]),
            coeff=coeff,
            dimension=int(doc["dimension"]),
            normalization=KernelNormalization(doc["normalization"]),
            metadata=dict(doc.get("metadata", {})),
        )


def fit_kernel_numeric(
    spec,
    degree: int,
    nodes: int,
    seed: int,
    normalization: KernelNormalization = KernelNormalization.LEBESGUE,
) -> KernelModel:
    """Fit a truncated orthonormal-expansion kernel on a bounded spec.

    Assembles the monomial Gram matrix with the per-variant quadrature rule,
    Cholesky-factorizes with a jitter ladder, and returns the model together
    with the estimated Gram condition number.
    """
    d = domains.dimension(spec)
    alphas = multi_indices(d, degree)
    pts, w = quadrature_nodes(spec, nodes, seed, degree=degree)
    if len(pts) < 10 * len(alphas):
        raise ValueError(
            f"need at least {10 * len(alphas)} nodes for {len(alphas)} basis "
            f"functions, got {len(pts)}"
        )
    nb = len(alphas)
    G = np.zeros((nb, nb), dtype=complex)  # G[a, b] = <m_a, m_b> = int m_a conj(m_b)
    chunk = max(1, 2_000_000 // max(nb, 1))
    for i in range(0, len(pts), chunk):
        M = monomial_matrix(pts[i : i + chunk], alphas)
        G += (M * w[i : i + chunk, None]).T @ M.conj()
    G = 0.5 * (G + G.conj().T)
    cond = float(np.linalg.cond(G))
    scale = float(np.mean(np.abs(np.diag(G))))
    L = None
    for jitter in [0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6]:
        try:
            L = np.linalg.cholesky(G + jitter * scale * np.eye(nb))
            break
        except np.linalg.LinAlgError:
            continue
    if L is None:
        raise IllConditionedBasisError(
            f"Gram Cholesky failed after jitter ladder (cond ~ {cond:.3e}); "
            "lower the degree"
        )
    coeff = np.linalg.inv(L) * math.sqrt(normalization_factor(normalization, d))
    return KernelModel(
        alphas=tuple(alphas),
        coeff=coeff,
        dimension=d,
        normalization=normalization,
        metadata={
            "nodes": len(pts),
            "requested_nodes": nodes,
            "seed": seed,
            "degree": degree,
            "gram_condition": cond,
        },
    )


# ---------------------------------------------------------------------------
# kernel transformation rule
# ---------------------------------------------------------------------------

def kernel_transform(base_value, holo_map: HoloMap, z, w):
    """Push a kernel through a biholomorphism.

    Returns B_image(F(z), F(w)) from base values via
    B_base(z, w) = B_image(F(z), F(w)) det F'(z) conj(det F'(w)).
    """
    z = np.asarray(z, dtype=complex)
    w = np.asarray(w, dtype=complex)
    single = z.ndim == 1
    if single:
        z, w = z[None, :], w[None, :]
    det_z = np.linalg.det(holo_map.jacobian(z))
    det_w = np.linalg.det(holo_map.jacobian(w))
    if np.any(np.abs(det_z) < 1e-14) or np.any(np.abs(det_w) < 1e-14):
        raise DegenerateMapError("singular Jacobian in kernel_transform")
    vals = base_value(z, w) / (det_z * np.conj(det_w))
    return vals[0] if single else vals


@dataclass(frozen=True)
class TransformedKernel:
    """Kernel of F(base domain), evaluated at image-side points."""

    base: object  # a kernel source on the base domain
    holo_map: HoloMap

    @property
    def dimension(self):
        return self.base.dimension

    def value(self, z, w):
        z = np.asarray(z, dtype=complex)
        w = np.asarray(w, dtype=complex)
        single = z.ndim == 1
        if single:
            z, w = z[None, :], w[None, :]
        zb = self.holo_map.inverse(z)
        wb = self.holo_map.inverse(w)
        out = kernel_transform(self.base.value, self.holo_map, zb, wb)
        return out[0] if single else out

    def diag_value(self, z):
        return float(np.real(self.value(z, z)))

    def log_diag(self, z):
        z = np.asarray(z, dtype=complex)
        zb = self.holo_map.inverse(z[None, :])[0]
        J = self.holo_map.jacobian(zb[None, :])[0]
        det = complex(np.linalg.det(J))
        if abs(det) < 1e-14:
            raise DegenerateMapError("singular Jacobian")
        lb, pb, Hb = self.base.log_diag(zb)
        if self.holo_map.dlogdet is not None:
            dld = self.holo_map.dlogdet(zb[None, :])[0]
        else:
            dld = _fd_dlogdet(self.holo_map, zb)
        Jinv = np.linalg.inv(J)
        return lb - 2 * math.log(abs(det)), (pb - dld) @ Jinv, Jinv.conj().T @ Hb @ Jinv

    def line_taylor(self, z, v, order):
        base_spec = getattr(self.base, "spec", None)
        if base_spec is not None:
            img = Image(base_spec, self.holo_map)
            rho = 0.25 * domains.line_boundary_distance(
                img, np.asarray(z, complex), v
            ) / np.linalg.norm(v)
        else:
            rho = 0.05
        return _line_taylor_fft(
            lambda Z, W: self.value(Z, W), np.asarray(z, complex),
            np.asarray(v, complex), order, rho,
        )


def kernel_closed_form(
    spec, z, w, normalization: KernelNormalization = KernelNormalization.LEBESGUE
):
    """Closed-form kernel value; unsupported variants raise."""
    return ClosedFormKernel(spec, normalization).value(z, w)


def closed_form_source(spec, normalization=KernelNormalization.LEBESGUE):
    return ClosedFormKernel(spec, normalization)
