"""Bipolar geometry of two disks and the Moebius map to concentric circles.

All closed forms work in a fixed frame: both centres on the real axis with
``c1 < 0 < c2`` and the map ``T(z) = beta/z + 1`` sending the boundary of
disk ``j`` onto the circle ``|zeta| = R_j``.  ``Frame`` converts arbitrary
user placements into that frame and back.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, GeometryError, PoleError


class _PointAtInfinity:
    """Sentinel for the point at infinity of the Riemann sphere."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"

    def __reduce__(self):
        return (_PointAtInfinity, ())


INFINITY = _PointAtInfinity()


class Zone(enum.IntEnum):
    INCLUSION1 = 1
    ANNULUS = 0
    INCLUSION2 = 2

    @property
    def tag(self) -> str:
        return {1: "inclusion1", 0: "annulus", 2: "inclusion2"}[int(self)]


@dataclass(frozen=True)
class DiskPair:
    r1: float
    r2: float
    eps: float
    c1: float
    c2: float
    beta: float
    R1: float
    R2: float
    rho: float
    r_star: float
    p1: complex
    p2: complex

    @property
    def gap(self) -> tuple[float, float]:
        """Real-axis end points of the gap (right edge of D1, left edge of D2)."""
        return self.c1 + self.r1, self.c2 - self.r2

    def center(self, side: int) -> float:
        return self.c1 if side == 1 else self.c2

    def radius(self, side: int) -> float:
        return self.r1 if side == 1 else self.r2

    def Rj(self, side: int) -> float:
        return self.R1 if side == 1 else self.R2


def derive_geometry(r1: float, r2: float, eps: float) -> DiskPair:
    r1, r2, eps = float(r1), float(r2), float(eps)
    if not (r1 > 0 and r2 > 0 and eps > 0):
        raise DomainError(f"radii and separation must be positive, got {(r1, r2, eps)}")
    d = r1 + r2 + eps
    beta = math.sqrt(eps) * math.sqrt((2 * r1 + eps) * (2 * r2 + eps) * (2 * r1 + 2 * r2 + eps)) / d
    c1 = (r2 * r2 - r1 * r1 - d * d) / (2 * d) - beta / 2
    c2 = c1 + d
    R1 = math.sqrt(1 + beta / c1)
    R2 = math.sqrt(1 + beta / c2)
    r_star = math.sqrt(2 * (r1 + r2) / (r1 * r2))
    return DiskPair(r1=r1, r2=r2, eps=eps, c1=c1, c2=c2, beta=beta, R1=R1, R2=R2,
                    rho=R1 / R2, r_star=r_star, p1=complex(-beta, 0.0), p2=0j)


# ---------------------------------------------------------------------------
# Moebius map and its inverse


def forward_map(g: DiskPair, z):
    """``T(z) = beta/z + 1``; raises ``PoleError`` at ``z = 0``."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise PoleError("T has a pole at z = 0 (maps to the point at infinity)")
    out = g.beta / z + 1
    return out[()] if out.ndim == 0 else out


def inverse_map(g: DiskPair, zeta):
    """``T^{-1}(zeta) = beta/(zeta - 1)``; raises ``PoleError`` at ``zeta = 1``."""
    zeta = np.asarray(zeta, dtype=complex)
    if np.any(zeta == 1):
        raise PoleError("T^{-1} has a pole at zeta = 1 (image of infinity)")
    out = g.beta / (zeta - 1)
    return out[()] if out.ndim == 0 else out


def forward_map_ext(g: DiskPair, z):
    """Scalar ``T`` on the Riemann sphere, using the ``INFINITY`` sentinel."""
    if z is INFINITY:
        return 1 + 0j
    if z == 0:
        return INFINITY
    return complex(forward_map(g, z))


def inverse_map_ext(g: DiskPair, zeta):
    if zeta is INFINITY:
        return 0j
    if zeta == 1:
        return INFINITY
    return complex(inverse_map(g, zeta))


def classify_zone(g: DiskPair, zeta) -> Zone:
    """Zone of a point of the concentric picture (closed on the inner side)."""
    if zeta is INFINITY:
        return Zone.INCLUSION2
    a = abs(zeta)
    if a <= g.R1:
        return Zone.INCLUSION1
    if a <= g.R2:
        return Zone.ANNULUS
    return Zone.INCLUSION2


def zone_codes(g: DiskPair, zeta) -> np.ndarray:
    """Vectorised ``classify_zone`` returning integer ``Zone`` codes."""
    a = np.abs(np.asarray(zeta, dtype=complex))
    out = np.full(a.shape, int(Zone.INCLUSION2), dtype=int)
    out[a <= g.R2] = int(Zone.ANNULUS)
    out[a <= g.R1] = int(Zone.INCLUSION1)
    return out


def physical_zone_codes(g: DiskPair, z) -> np.ndarray:
    """Zone codes of physical points, classified through ``T`` (``z = 0`` lies in D2)."""
    z = np.asarray(z, dtype=complex)
    out = np.full(z.shape, int(Zone.INCLUSION2), dtype=int)
    nz = z != 0
    out[nz] = zone_codes(g, g.beta / z[nz] + 1)
    return out


# ---------------------------------------------------------------------------
# Singular function and auxiliary maps


def singular_function_q1(g: DiskPair, z):
    """``q1(z) = (ln|z - p1| - ln|z - p2|) / 2pi``, constant on each circle."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == g.p1) or np.any(z == g.p2):
        raise PoleError("q1 is singular at the fixed points p1, p2")
    out = (np.log(np.abs(z - g.p1)) - np.log(np.abs(z - g.p2))) / (2 * np.pi)
    return out[()] if out.ndim == 0 else out


def singular_function_q1_grad(g: DiskPair, z):
    """Gradient of ``q1`` as a complex number ``dq/dx + i dq/dy``."""
    z = np.asarray(z, dtype=complex)
    # grad ln|z - p| = 1/conj(z - p)
    out = (1 / np.conj(z - g.p1) - 1 / np.conj(z - g.p2)) / (2 * np.pi)
    return out[()] if out.ndim == 0 else out


def _in_closed_disk(g: DiskPair, side: int, z, rtol=1e-12):
    c, r = g.center(side), g.radius(side)
    return np.abs(np.asarray(z) - c) <= r * (1 + rtol)


def _contraction_factor(g: DiskPair, side: int, l: int, t: float) -> float:
    if l < 0 or int(l) != l:
        raise DomainError("l must be a non-negative integer")
    if side == 1:
        if not (g.rho ** 2 * (1 - 1e-14) <= t <= 1 + 1e-14):
            raise DomainError("t must lie in [rho^2, 1]")
        return t * g.rho ** (2 * l)
    if side == 2:
        if not (g.rho * (1 - 1e-14) <= t <= 1 + 1e-14):
            raise DomainError("t must lie in [rho, 1] for side 2")
        return t * g.rho ** (-2 * l - 1)
    raise DomainError("side must be 1 or 2")


def contraction_map(g: DiskPair, side: int, l: int, t: float, z):
    """``T^{-1}(s T(z))`` with ``s = t rho^{2l}`` (side 1) or ``t rho^{-2l-1}`` (side 2)."""
    z = np.asarray(z, dtype=complex)
    if not np.all(_in_closed_disk(g, side, z)):
        raise DomainError(f"z must lie in the closed disk D{side}")
    s = _contraction_factor(g, side, l, t)
    out = g.beta * z / (g.beta * s - (1 - s) * z)
    return out[()] if out.ndim == 0 else out


def contraction_map_derivative(g: DiskPair, side: int, l: int, t: float, z, m: int = 1):
    """m-th complex derivative of ``contraction_map``."""
    z = np.asarray(z, dtype=complex)
    s = _contraction_factor(g, side, l, t)
    b = g.beta
    out = math.factorial(m) * b * b * s * (1 - s) ** (m - 1) / (b * s - (1 - s) * z) ** (m + 1)
    return out[()] if out.ndim == 0 else out


def reflection_map_G(g: DiskPair, z):
    """``T^{-1}(R1^2 / conj(T(z)))``: the inversion in the circle bounding D1.

    The map is anti-analytic; its closed form is written in ``conj(z)``.
    """
    z = np.asarray(z, dtype=complex)
    if np.any(np.abs(z - g.c1) < g.r1 * (1 - 1e-12)):
        raise DomainError("z must lie outside the open disk D1")
    zb = np.conj(z)
    den = (g.R1 ** 2 - 1) * zb - g.beta
    if np.any(den == 0):
        raise PoleError("pole of the reflection map")
    out = g.beta * (g.beta + zb) / den
    return out[()] if out.ndim == 0 else out


def reflection_map_G_derivative(g: DiskPair, z, n: int = 1):
    """n-th derivative of ``G`` with respect to ``conj(z)``."""
    zb = np.conj(np.asarray(z, dtype=complex))
    a = g.R1 ** 2 - 1
    out = -math.factorial(n) * g.beta ** 2 * g.R1 ** 2 * a ** (n - 1) / (g.beta - a * zb) ** (n + 1)
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# Rigid-motion adapter


@dataclass(frozen=True)
class Frame:
    """Rigid motion taking user coordinates to the canonical frame.

    ``to_frame(w) = (w - a) * exp(-i phi) + c1`` where ``a`` is the user
    centre of the first disk and ``phi`` the direction to the second one.
    """

    geometry: DiskPair
    anchor: complex
    rotation: complex = field(default=1 + 0j)

    @classmethod
    def from_disks(cls, center1, r1, center2, r2) -> "Frame":
        center1, center2 = complex(center1), complex(center2)
        dist = abs(center2 - center1)
        eps = dist - r1 - r2
        if eps <= 0:
            raise GeometryError("disks overlap or touch")
        g = derive_geometry(r1, r2, eps)
        return cls(geometry=g, anchor=center1, rotation=(center2 - center1) / dist)

    def to_frame(self, w):
        return (np.asarray(w, dtype=complex) - self.anchor) / self.rotation + self.geometry.c1

    def from_frame(self, z):
        return (np.asarray(z, dtype=complex) - self.geometry.c1) * self.rotation + self.anchor

    def vector_from_frame(self, v):
        """Rotate a vector given as complex number ``vx + i vy`` back to user axes."""
        return np.asarray(v, dtype=complex) * self.rotation

    def hessian_from_frame(self, hxx, hxy, hyy):
        c, s = self.rotation.real, self.rotation.imag
        Q = np.array([[c, -s], [s, c]])
        H = np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)
        out = Q @ H @ Q.T
        return out[..., 0, 0], out[..., 0, 1], out[..., 1, 1]
