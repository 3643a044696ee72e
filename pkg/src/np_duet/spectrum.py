"""Closed-form Neumann-Poincare spectrum on two circles.

Eigenfunctions live on the concentric pair ``|zeta| = R1, R2`` and are pulled
back to the two disks through the Moebius map.  The image of the second disk
is the exterior ``|zeta| > R2``, whose boundary normal points toward the
origin; with that orientation the transfer commutes with the NP operators and
mode ``(n, parity)`` has eigenvalue ``-parity * rho**|n| / 2`` on both sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateContrastError, DomainError, PoleError, ResonanceError
from .geometry import DiskPair

RESONANCE_GUARD = 1e-12


def _parity_sign(parity) -> int:
    if parity in (1, "+", "plus"):
        return 1
    if parity in (-1, "-", "minus"):
        return -1
    raise DomainError(f"parity must be '+' or '-', got {parity!r}")


@dataclass(frozen=True)
class SpectralMode:
    n: int
    parity: int
    rho: float

    def __post_init__(self):
        if self.n == 0:
            raise DomainError("n = 0 is not a spectral mode")
        object.__setattr__(self, "parity", _parity_sign(self.parity))

    @property
    def eigenvalue_twodisks(self) -> float:
        return -self.parity * 0.5 * self.rho ** abs(self.n)

    @property
    def eigenvalue_concentric(self) -> float:
        return self.eigenvalue_twodisks

    @property
    def eigenvalue(self) -> float:
        return self.eigenvalue_twodisks


def parse_conductivity(k) -> float:
    """Accept numbers and the literals ``"inf"``/``"0"``."""
    if isinstance(k, str):
        s = k.strip().lower()
        if s in ("inf", "infinity", "+inf", "∞"):
            return math.inf
        k = float(s)
    k = float(k)
    if math.isnan(k) or k < 0:
        raise DomainError(f"conductivity must be a non-negative real or inf, got {k}")
    return k


def lambda_from_k(k) -> float:
    """``lambda = (k + 1) / (2 (k - 1))`` with the limits at 0 and infinity."""
    k = parse_conductivity(k)
    if math.isinf(k):
        return 0.5
    if k == 1:
        raise DegenerateContrastError("k = 1 means no inclusion")
    return (k + 1) / (2 * (k - 1))


def eigenfunction_concentric(g: DiskPair, n: int, parity, theta):
    """Values of ``f^{n,parity}`` at angle ``theta`` on the inner and outer circle."""
    if n == 0:
        raise DomainError("n must be nonzero")
    s = _parity_sign(parity)
    e = np.exp(1j * n * np.asarray(theta, dtype=float))
    return e / g.R1, s * e / g.R2


def single_layer_mode(g: DiskPair, n: int, parity, zeta):
    """Single layer potential of ``f^{n,parity}`` on the concentric circles."""
    if n == 0:
        raise DomainError("n must be nonzero")
    s = _parity_sign(parity)
    zeta = np.asarray(zeta, dtype=complex)
    m = abs(n)
    R1, R2 = g.R1, g.R2
    a = np.abs(zeta)
    out = np.empty(zeta.shape, dtype=complex)
    inner = a <= R1
    mid = (a > R1) & (a <= R2)
    outer = a > R2
    z = zeta[inner]
    out[inner] = -(R1 ** -m + s * R2 ** -m) * z ** m / (2 * m)
    z = zeta[mid]
    out[mid] = -((R1 / np.conj(z)) ** m + s * (z / R2) ** m) / (2 * m)
    z = zeta[outer]
    out[outer] = -(R1 ** m + s * R2 ** m) * np.conj(z) ** (-m) / (2 * m)
    if n < 0:
        out = np.conj(out)
    return out[()] if out.ndim == 0 else out


def push_density(g: DiskPair, value, z):
    """Forward transform ``(U phi)(T z) = |z|^2 / beta * phi(z)``."""
    z = np.asarray(z, dtype=complex)
    return np.abs(z) ** 2 / g.beta * np.asarray(value)


def pullback_density(g: DiskPair, fstar_value, z):
    """Inverse transform: ``phi(z) = beta / |z|^2 * phi*(T z)``."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise PoleError("pullback undefined at z = 0")
    out = g.beta / np.abs(z) ** 2 * np.asarray(fstar_value)
    return out[()] if np.ndim(out) == 0 else out


def eigenfunction_twodisks(g: DiskPair, n: int, parity, z, side: int):
    """Pulled-back eigenfunction ``phi^{n,parity}`` at points ``z`` of circle ``side``."""
    z = np.asarray(z, dtype=complex)
    zeta = g.beta / z + 1
    f1, f2 = eigenfunction_concentric(g, n, parity, np.angle(zeta))
    return pullback_density(g, f1 if side == 1 else f2, z)


def mode_norm(g_or_rho, n: int, parity) -> float:
    """Squared norm ``2 pi / |n| * (1 +- rho**|n|)`` in the single-layer inner product."""
    if n == 0:
        raise DomainError("n must be nonzero")
    rho = g_or_rho.rho if isinstance(g_or_rho, DiskPair) else float(g_or_rho)
    s = _parity_sign(parity)
    m = abs(n)
    return 2 * math.pi / m * (1 + s * rho ** m)


@dataclass(frozen=True)
class ModeCoefficients:
    """Per-mode data and solved densities for ``n = 1..N`` (index ``n - 1``)."""

    N: int
    lambda1: float
    lambda2: float
    rho: float
    C_plus: np.ndarray
    C_minus: np.ndarray
    a_plus: np.ndarray
    a_minus: np.ndarray

    @property
    def n(self) -> np.ndarray:
        return np.arange(1, self.N + 1)

    def residual(self) -> float:
        """Max relative residual of the two-by-two mode system."""
        rn = self.rho ** self.n
        l1, l2 = self.lambda1, self.lambda2
        lhs1 = (l1 + rn / 2) * self.a_plus + (l1 - rn / 2) * self.a_minus
        lhs2 = (l2 + rn / 2) * self.a_plus - (l2 - rn / 2) * self.a_minus
        r1 = lhs1 - (self.C_plus + self.C_minus)
        r2 = lhs2 - (self.C_plus - self.C_minus)
        scale = max(np.max(np.abs(self.C_plus), initial=0), np.max(np.abs(self.C_minus), initial=0), 1e-300)
        return float(max(np.max(np.abs(r1), initial=0), np.max(np.abs(r2), initial=0)) / scale)


def mode_denominators(lambda1: float, lambda2: float, rho: float, N: int) -> np.ndarray:
    n = np.arange(1, N + 1)
    den = 4 * lambda1 * lambda2 - rho ** (2 * n)
    if np.any(np.abs(den) <= RESONANCE_GUARD):
        raise ResonanceError()
    return den


def solve_modes(lambda1: float, lambda2: float, rho: float, C_plus, C_minus) -> ModeCoefficients:
    """Solve ``(Lambda - K*) phi = eta`` mode by mode.

    ``C_plus[n-1]``, ``C_minus[n-1]`` are the coefficients of the data on the
    eigenfunctions of order ``n``; the result holds the coefficients of the
    solution on the same eigenfunctions.
    """
    C_plus = np.atleast_1d(np.asarray(C_plus, dtype=complex))
    C_minus = np.atleast_1d(np.asarray(C_minus, dtype=complex))
    if C_plus.shape != C_minus.shape:
        raise DomainError("C_plus and C_minus must have equal length")
    N = C_plus.size
    den = mode_denominators(lambda1, lambda2, rho, N)
    rn = rho ** np.arange(1, N + 1)
    lp, lm = lambda1 + lambda2, lambda1 - lambda2
    # Cramer's rule on the two-by-two system checked by ModeCoefficients.residual
    a_plus = 2 * ((lp - rn) * C_plus - lm * C_minus) / den
    a_minus = 2 * (-lm * C_plus + (lp + rn) * C_minus) / den
    return ModeCoefficients(N=N, lambda1=float(lambda1), lambda2=float(lambda2), rho=float(rho),
                            C_plus=C_plus, C_minus=C_minus, a_plus=a_plus, a_minus=a_minus)
