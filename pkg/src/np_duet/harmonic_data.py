"""Sources, their Newtonian potentials, and the analytic data fed to the solver.

A source is either a harmonic background ``H = Re sum_m b_m z**m`` or a
divergence source ``f = div g`` made of pieces with disk-shaped support.  The
solver needs, for each disk, an analytic ``chi_j`` with ``Re chi_j`` matching
the normal flux of the background on the circle; this module turns those into
Taylor/Laurent coefficients in the concentric picture and into mode data.

All coordinates are in the canonical frame of ``geometry.DiskPair``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import (AccuracyError, CompatibilityError, ConfigurationError, DomainError,
                     GeometryError, TruncationError)
from .geometry import DiskPair
from .series import power_sums
from .spectrum import parse_conductivity

TWO_PI = 2 * np.pi
MAX_DEGREE = 32


# ---------------------------------------------------------------------------
# Harmonic polynomials


def parse_harmonic_polynomial(text: str, max_degree: int = MAX_DEGREE) -> np.ndarray:
    """Parse a polynomial in ``x, y`` into ``b`` with ``H = Re sum_m b[m] z**m``.

    ``b[0]`` is the (real) constant.  Non-harmonic input is rejected.
    """
    import sympy as sp

    x, y, z = sp.symbols("x y z")
    src = str(text).replace("^", "**")
    try:
        expr = sp.sympify(src, locals={"x": x, "y": y}, rational=True)
    except (sp.SympifyError, SyntaxError, TypeError) as exc:
        raise ConfigurationError(f"cannot parse harmonic polynomial {text!r}") from exc
    if not expr.free_symbols <= {x, y}:
        raise ConfigurationError(f"only x and y may appear, got {sorted(map(str, expr.free_symbols))}")
    try:
        poly = sp.Poly(sp.expand(expr), x, y)
    except sp.PolynomialError as exc:
        raise ConfigurationError(f"{text!r} is not a polynomial") from exc
    if poly.total_degree() > max_degree:
        raise ConfigurationError(f"degree {poly.total_degree()} exceeds the cap {max_degree}")
    if sp.expand(sp.diff(expr, x, 2) + sp.diff(expr, y, 2)) != 0:
        raise ConfigurationError(f"{text!r} is not harmonic")
    h0 = expr.subs({x: 0, y: 0})
    # analytic completion f with Re f = H - H(0), f(0) = 0
    f = sp.expand(2 * (expr.subs({x: z / 2, y: -sp.I * z / 2}, simultaneous=True) - h0))
    deg = max(poly.total_degree(), 0)
    b = np.zeros(deg + 1, dtype=complex)
    b[0] = complex(h0)
    fp = sp.Poly(f, z) if f != 0 else None
    if fp is not None:
        for (m,), c in fp.terms():
            b[m] = complex(c)
    return b


@dataclass(frozen=True)
class PolynomialBackground:
    """``H = Re sum_m b_m z**m``."""

    coefficients: np.ndarray

    def evaluate(self, z, order: int = 0):
        z = np.asarray(z, dtype=complex)
        b = np.asarray(self.coefficients, dtype=complex)
        P = power_sums(b[1:], z, order)
        val = b[0].real + P[0].real
        if order == 0:
            return val, None, None
        grad = np.conj(P[1])
        if order == 1:
            return val, grad, None
        W2 = P[2]
        return val, grad, (W2.real, -W2.imag, -W2.real)

    def completion(self, side=None):
        """Analytic ``chi`` with ``Re chi = H - H(0)`` (same on both disks)."""
        b = np.asarray(self.coefficients, dtype=complex)
        return lambda z: power_sums(b[1:], z)[0]


@dataclass(frozen=True)
class ClosedFormBackground:
    """User-supplied ``F`` with optional gradient and Hessian callables.

    ``value(z)`` returns reals; ``grad(z)`` returns ``F_x + i F_y``;
    ``hess(z)`` returns ``(F_xx, F_xy, F_yy)``.
    """

    value: Callable
    grad: Callable | None = None
    hess: Callable | None = None

    def evaluate(self, z, order: int = 0):
        z = np.asarray(z, dtype=complex)
        v = np.asarray(self.value(z), dtype=float)
        if order == 0:
            return v, None, None
        if self.grad is None:
            raise ConfigurationError("closed-form background lacks a gradient")
        gr = np.asarray(self.grad(z), dtype=complex)
        if order == 1:
            return v, gr, None
        if self.hess is None:
            raise ConfigurationError("closed-form background lacks a Hessian")
        return v, gr, tuple(np.asarray(h, dtype=float) for h in self.hess(z))


# ---------------------------------------------------------------------------
# Divergence sources


@dataclass(frozen=True)
class SourcePiece:
    """One compactly supported piece of ``f``.

    Exactly one of ``f`` (density, callable on complex points) or ``g``
    (vector field returned as ``g_x + i g_y``) is given.  ``f`` vanishes
    outside the disk ``|y - center| <= radius``.
    """

    center: complex
    radius: float
    f: Callable | None = None
    g: Callable | None = None

    def __post_init__(self):
        if (self.f is None) == (self.g is None):
            raise ConfigurationError("a source piece needs exactly one of f or g")
        if not self.radius > 0:
            raise ConfigurationError("support radius must be positive")
        object.__setattr__(self, "center", complex(self.center))


def indicator_piece(center, radius, amplitude=1.0) -> SourcePiece:
    """``f = amplitude`` on the disk ``B(center, radius)``."""
    c = complex(center)
    return SourcePiece(c, float(radius), f=lambda y: np.full(np.shape(y), float(amplitude)))


@dataclass(frozen=True)
class SourceSpec:
    variant: str
    coefficients: np.ndarray | None = None
    pieces: tuple = ()
    closed_form: ClosedFormBackground | None = None
    text: str | None = None

    def __post_init__(self):
        if self.variant not in ("harmonic_background", "divergence_source"):
            raise ConfigurationError(f"unknown source variant {self.variant!r}")
        if self.variant == "harmonic_background":
            if self.coefficients is None:
                raise ConfigurationError("harmonic background needs coefficients")
            b = np.asarray(self.coefficients, dtype=complex)
            if b.size - 1 > MAX_DEGREE:
                raise ConfigurationError("harmonic polynomial degree exceeds the cap")
            object.__setattr__(self, "coefficients", b)
        elif not self.pieces:
            raise ConfigurationError("divergence source needs at least one piece")

    @classmethod
    def harmonic(cls, coefficients) -> "SourceSpec":
        return cls("harmonic_background", coefficients=coefficients)

    @classmethod
    def from_polynomial(cls, text: str) -> "SourceSpec":
        return cls("harmonic_background", coefficients=parse_harmonic_polynomial(text), text=text)

    @classmethod
    def divergence(cls, pieces: Sequence[SourcePiece], closed_form=None) -> "SourceSpec":
        return cls("divergence_source", pieces=tuple(pieces), closed_form=closed_form)


def piece_region(g: DiskPair, piece: SourcePiece) -> int:
    """0 for the exterior, j for a piece supported in the closed disk ``D_j``."""
    for side in (1, 2):
        d = abs(piece.center - g.center(side))
        if d + piece.radius <= g.radius(side) * (1 + 1e-14):
            return side
    for side in (1, 2):
        if abs(piece.center - g.center(side)) < piece.radius + g.radius(side):
            raise GeometryError("source support crosses an inclusion boundary")
    return 0


def region_weight(region: int, k1, k2) -> float:
    if region == 0:
        return 1.0
    k = parse_conductivity(k1 if region == 1 else k2)
    if math.isinf(k):
        return 0.0
    if k == 0:
        raise DomainError("a source inside an inclusion with k = 0 is not admissible")
    return 1.0 / k


# --- quadrature on a disk -------------------------------------------------


def _disk_rule(nr: int, nt: int):
    """Gauss-Legendre in the radius (with the Jacobian) times trapezoid in angle, unit disk."""
    s, ws = np.polynomial.legendre.leggauss(nr)
    r = (s + 1) / 2
    wr = ws / 2 * r
    t = TWO_PI * np.arange(nt) / nt
    pts = (r[:, None] * np.exp(1j * t[None, :])).ravel()
    wts = (wr[:, None] * np.full(nt, TWO_PI / nt)[None, :]).ravel()
    return pts, wts


def disk_integral(func, center, radius, tol=1e-12, max_level=7) -> float:
    """``int_B func`` over ``B(center, radius)`` with a doubling refinement."""
    prev = None
    nr, nt = 16, 32
    for _ in range(max_level):
        p, w = _disk_rule(nr, nt)
        val = float(np.sum(np.real(func(center + radius * p)) * w) * radius ** 2)
        if prev is not None and abs(val - prev) <= tol * max(1.0, abs(val)):
            return val
        prev = val
        nr, nt = 2 * nr, 2 * nt
    raise AccuracyError("disk quadrature did not converge")


def _piece_fvalues(piece: SourcePiece, y):
    return np.asarray(piece.f(y), dtype=float)


def _outside_kernel_sums(piece: SourcePiece, x, pts, wts, order: int):
    """Sums over quadrature nodes for targets outside the support.

    Returns ``(val, W1, W2)`` with ``val = int K f`` and the complex
    derivatives of its analytic extension.
    """
    out_v = np.zeros(x.shape)
    out_1 = np.zeros(x.shape, dtype=complex)
    out_2 = np.zeros(x.shape, dtype=complex)
    if piece.f is not None:
        q = _piece_fvalues(piece, pts) * wts
    else:
        q = np.asarray(piece.g(pts), dtype=complex) * wts
    step = max(1, (1 << 21) // max(pts.size, 1))
    for lo in range(0, x.size, step):
        sl = slice(lo, lo + step)
        d = x[sl, None] - pts[None, :]
        if piece.f is not None:
            out_v[sl] = np.log(np.abs(d)) @ q
            if order >= 1:
                out_1[sl] = (1 / d) @ q
            if order >= 2:
                out_2[sl] = -(1 / d ** 2) @ q
        else:
            # (x - y).g / |x - y|^2 = Re(g / (x - y))
            inv = 1 / d
            out_v[sl] = np.real(inv @ q)
            if order >= 1:
                out_1[sl] = -(inv ** 2) @ q
            if order >= 2:
                out_2[sl] = 2 * (inv ** 3) @ q
    return out_v, out_1, out_2


def _inside_value_grad(piece: SourcePiece, x0: complex, nr: int, nt: int):
    """Value and gradient of ``int ln|x-y| f`` (or the g-form) at a point inside the support."""
    c, a = piece.center, piece.radius
    phi = TWO_PI * (np.arange(nt) + 0.5) / nt
    e = np.exp(1j * phi)
    # distance from x0 to the support boundary along direction e
    p = x0 - c
    pe = np.real(p * np.conj(e))
    L = -pe + np.sqrt(pe ** 2 + a * a - abs(p) ** 2)
    s, ws = np.polynomial.legendre.leggauss(nr)
    s = (s + 1) / 2
    ws = ws / 2
    # r = L s^2 clusters nodes at the target
    r = L[:, None] * s[None, :] ** 2
    dr = 2 * L[:, None] * s[None, :] * ws[None, :] * (TWO_PI / nt)
    y = x0 + r * e[:, None]
    if piece.f is not None:
        fv = _piece_fvalues(piece, y)
        val = np.sum(np.log(np.where(r > 0, r, 1.0)) * r * fv * dr)
        # grad ln|x - y| = 1/conj(x - y) = -e/r
        grad = np.sum(-e[:, None] * fv * dr)
        return float(val), complex(grad)
    gv = np.asarray(piece.g(y), dtype=complex)
    # Re(g/(x-y)) r dr = Re(-g conj(e)) dr
    val = np.sum(np.real(-gv * np.conj(e)[:, None]) * dr)
    return float(val), None


class NewtonianPotential:
    """Weighted logarithmic potential of a divergence source.

    ``F = sum_pieces w_piece/(2 pi) int ln|x-y| f(y) dy`` with the region
    weight ``1`` outside the inclusions and ``1/k_j`` inside ``D_j``.
    """

    def __init__(self, g: DiskPair, k1, k2, src: SourceSpec, tol: float = 1e-12, max_level: int = 6):
        if src.variant != "divergence_source":
            raise ConfigurationError("Newtonian potential needs a divergence source")
        self.geometry = g
        self.k1, self.k2 = parse_conductivity(k1), parse_conductivity(k2)
        self.src = src
        self.tol = tol
        self.max_level = max_level
        self.regions = [piece_region(g, p) for p in src.pieces]
        self.weights = [region_weight(r, self.k1, self.k2) for r in self.regions]

    def _piece_outside(self, piece, x, order):
        nr, nt = 24, 64
        prev = None
        for _ in range(self.max_level):
            pts, wts = _disk_rule(nr, nt)
            res = _outside_kernel_sums(piece, x, piece.center + piece.radius * pts,
                                       wts * piece.radius ** 2, order)
            if prev is not None:
                err = max(np.max(np.abs(a - b), initial=0.0) for a, b in zip(res[:order + 1], prev))
                scale = max(max(np.max(np.abs(a), initial=0.0) for a in res[:order + 1]), 1.0)
                if err <= self.tol * scale:
                    return res
            prev = res
            nr, nt = 2 * nr, 2 * nt
        raise AccuracyError("Newtonian potential quadrature did not converge near the support")

    def _piece_inside(self, piece, x, order):
        if order >= 2:
            raise AccuracyError("Hessian of the Newtonian potential inside a source support "
                                "is not available")
        vals = np.zeros(x.shape)
        grads = np.zeros(x.shape, dtype=complex)
        for i, x0 in enumerate(x):
            prev = None
            nr, nt = 24, 64
            for _ in range(self.max_level):
                v, gr = _inside_value_grad(piece, complex(x0), nr, nt)
                if gr is None and order >= 1:
                    raise AccuracyError("gradient of a g-piece potential inside its support "
                                        "is not available")
                cur = (v, gr if gr is not None else 0.0)
                if prev is not None and abs(cur[0] - prev[0]) + abs(cur[1] - prev[1]) <= \
                        self.tol * max(1.0, abs(cur[0])):
                    break
                prev = cur
                nr, nt = 2 * nr, 2 * nt
            else:
                raise AccuracyError("inside-support quadrature did not converge")
            vals[i], grads[i] = cur
        return vals, np.conj(grads), np.zeros(x.shape, dtype=complex)

    def evaluate(self, z, order: int = 0):
        """``(F, grad F as F_x + i F_y, Hessian triple)`` up to ``order``."""
        z = np.asarray(z, dtype=complex)
        shape = z.shape
        x = z.ravel()
        val = np.zeros(x.shape)
        W1 = np.zeros(x.shape, dtype=complex)
        W2 = np.zeros(x.shape, dtype=complex)
        for piece, w in zip(self.src.pieces, self.weights):
            if w == 0:
                continue
            inside = np.abs(x - piece.center) < piece.radius * (1 + 1e-9)
            if np.any(~inside):
                v, a1, a2 = self._piece_outside(piece, x[~inside], order)
                val[~inside] += w * v / TWO_PI
                W1[~inside] += w * a1 / TWO_PI
                W2[~inside] += w * a2 / TWO_PI
            if np.any(inside):
                # W1 here carries conj(grad) so that conj(W1) is the gradient below
                v, gconj, _ = self._piece_inside(piece, x[inside], order)
                val[inside] += w * v / TWO_PI
                W1[inside] += w * gconj / TWO_PI
        val = val.reshape(shape)
        if order == 0:
            return val, None, None
        grad = np.conj(W1).reshape(shape)
        if order == 1:
            return val, grad, None
        W2 = W2.reshape(shape)
        return val, grad, (W2.real, -W2.imag, -W2.real)

    def region_integral(self, side: int) -> float:
        """``int_{D_side} f`` (g-pieces inside a disk contribute zero flux)."""
        total = 0.0
        for piece, reg in zip(self.src.pieces, self.regions):
            if reg == side and piece.f is not None:
                total += disk_integral(piece.f, piece.center, piece.radius)
        return total


def newtonian_potential(src: SourceSpec, k1, k2, x, g: DiskPair, order: int = 0):
    """Weighted Newtonian potential at ``x``; closed forms bypass quadrature."""
    if src.variant != "divergence_source":
        raise ConfigurationError("Newtonian potential needs a divergence source")
    if src.closed_form is not None:
        res = src.closed_form.evaluate(x, order)
    else:
        res = NewtonianPotential(g, k1, k2, src).evaluate(x, order)
    return res[0] if order == 0 else res


# ---------------------------------------------------------------------------
# Fourier data on circles


def circle_points(center, radius, M: int):
    theta = TWO_PI * np.arange(M) / M
    return theta, complex(center) + radius * np.exp(1j * theta)


def neumann_disk_solve(center, radius, flux_coeffs, tol: float = 1e-10):
    """Trace coefficients of the harmonic ``H`` in a disk with the given normal flux.

    ``flux_coeffs`` are Fourier coefficients in ``numpy.fft`` order
    (``np.fft.fft(samples) / M``).  Mode ``m`` maps to ``radius/|m|`` times
    itself; the constant mode of the result is zero.
    """
    c = np.asarray(flux_coeffs, dtype=complex)
    M = c.size
    scale = max(float(np.max(np.abs(c), initial=0.0)), 1.0)
    if abs(c[0]) > tol * scale:
        raise CompatibilityError(f"flux has nonzero mean {c[0].real:.3e} on the circle")
    m = np.abs(np.fft.fftfreq(M, 1.0 / M))
    out = np.zeros_like(c)
    nz = m > 0
    out[nz] = radius / m[nz] * c[nz]
    return out


def completion_from_trace(trace_coeffs) -> np.ndarray:
    """Power-series coefficients ``p_m`` (m >= 1) of the analytic completion.

    For a real trace ``sum_m t_m e^{i m theta}`` the harmonic extension is
    ``Re sum_{m>=1} 2 t_m w**m`` with ``w = (z - c)/r``.
    """
    t = np.asarray(trace_coeffs, dtype=complex)
    M = t.size
    return 2 * t[1:M // 2]


@dataclass(frozen=True)
class DiskCompletion:
    """Analytic ``chi(z) = sum_{m>=1} p_m ((z - c)/r)**m``."""

    center: complex
    radius: float
    p: np.ndarray

    def __call__(self, z):
        w = (np.asarray(z, dtype=complex) - self.center) / self.radius
        return power_sums(self.p, w)[0]


def flux_fourier(grad_eval, g: DiskPair, side: int, M: int):
    """Fourier coefficients of the outward normal flux from a gradient evaluator."""
    theta, pts = circle_points(g.center(side), g.radius(side), M)
    nu = np.exp(1j * theta)
    gr = grad_eval(pts)
    flux = np.real(gr * np.conj(nu))
    return np.fft.fft(flux) / M


def disk_completion_from_gradient(grad_eval, g: DiskPair, side: int, tol: float = 1e-13,
                                  M0: int = 256, M_cap: int = 1 << 14,
                                  compat_tol: float = 1e-10) -> DiskCompletion:
    """Neumann-solve the flux of ``grad_eval`` on circle ``side``, refining the sampling."""
    M = M0
    while True:
        c = flux_fourier(grad_eval, g, side, M)
        mag = np.abs(c[:M // 2])
        top = max(float(mag.max()), 1e-300)
        if float(np.max(mag[M // 4:])) <= tol * top or M >= M_cap:
            break
        M *= 2
    tr = neumann_disk_solve(g.center(side), g.radius(side), c, tol=compat_tol)
    p = completion_from_trace(tr)
    keep = np.nonzero(np.abs(p) > 1e-17 * max(np.max(np.abs(p), initial=0.0), 1e-300))[0]
    p = p[:keep[-1] + 1] if keep.size else p[:1]
    return DiskCompletion(complex(g.center(side)), g.radius(side), p)


# ---------------------------------------------------------------------------
# Coefficients in the concentric picture


@dataclass(frozen=True)
class HarmonicPair:
    """Taylor data of ``h_1`` at 0 and Laurent data of ``h_2`` at infinity.

    Stored scaled: ``b1[m-1] = a1_m R1**m`` and ``b2[m-1] = a2_m R2**-m``,
    the Fourier coefficients of ``h_j`` on the circle ``|zeta| = R_j``.
    """

    geometry: DiskPair
    b1: np.ndarray
    b2: np.ndarray
    tail: float = 0.0
    samples: int = 0
    constants: tuple = (0j, 0j)

    @property
    def N(self) -> int:
        return self.b1.size

    @property
    def m(self) -> np.ndarray:
        return np.arange(1, self.N + 1)

    @property
    def a1(self) -> np.ndarray:
        return self.b1 * self.geometry.R1 ** (-self.m.astype(float))

    @property
    def a2(self) -> np.ndarray:
        return self.b2 * self.geometry.R2 ** self.m.astype(float)

    @classmethod
    def from_coefficients(cls, g: DiskPair, a1, a2) -> "HarmonicPair":
        a1 = np.asarray(a1, dtype=complex)
        a2 = np.asarray(a2, dtype=complex)
        N = max(a1.size, a2.size)
        a1 = np.pad(a1, (0, N - a1.size))
        a2 = np.pad(a2, (0, N - a2.size))
        m = np.arange(1, N + 1, dtype=float)
        return cls(g, a1 * g.R1 ** m, a2 * g.R2 ** (-m))

    def h1(self, zeta):
        return power_sums(self.b1, np.asarray(zeta) / self.geometry.R1)[0]

    def h2(self, zeta):
        return power_sums(self.b2, self.geometry.R2 / np.asarray(zeta, dtype=complex))[0]

    def __add__(self, other: "HarmonicPair") -> "HarmonicPair":
        N = max(self.N, other.N)
        pad = lambda v: np.pad(v, (0, N - v.size))
        return HarmonicPair(self.geometry, pad(self.b1) + pad(other.b1),
                            pad(self.b2) + pad(other.b2), max(self.tail, other.tail))

    def scaled(self, s: complex) -> "HarmonicPair":
        return HarmonicPair(self.geometry, s * self.b1, s * self.b2, self.tail)


NOISE_FACTOR = 16


def _sample_h(g: DiskPair, chi, side: int, K: int, radius_factor: float):
    tau = TWO_PI * np.arange(K) / K
    if side == 1:
        zeta = radius_factor * g.R1 * np.exp(1j * tau)
    else:
        zeta = g.R2 / radius_factor * np.exp(1j * tau)
    return chi(g.beta / (zeta - 1))


def pullback_coefficients(g: DiskPair, chi1, chi2, N: int | None = None, tol: float = 1e-15,
                          radius_factor: float = 1.0, n_start: int = 256,
                          n_cap: int = 1 << 18) -> HarmonicPair:
    """Coefficients of ``h_j = chi_j o T^{-1}`` by FFT on circles around 0.

    ``h_1`` is sampled on ``|zeta| = f R1`` and ``h_2`` on ``|zeta| = R2/f``
    with ``f = radius_factor <= 1``.  With ``N`` given the sample count is
    ``2N`` and no refinement happens; otherwise the count doubles from
    ``n_start`` until the upper half of the spectrum falls below ``tol``
    relative to its peak, and the series is trimmed where the tail does.
    """
    if not 0 < radius_factor <= 1:
        raise DomainError("radius_factor must lie in (0, 1]")
    K = 2 * (N + 1) if N else n_start
    while True:
        s1 = _sample_h(g, chi1, 1, K, radius_factor)
        s2 = _sample_h(g, chi2, 2, K, radius_factor)
        c1 = np.fft.fft(s1) / K
        c2 = np.fft.fft(s2) / K
        half = K // 2
        m = np.arange(1, half)
        # undo the sampling radius: c_m = b_m f**m
        b1 = c1[1:half] * radius_factor ** (-m.astype(float))
        b2 = c2[K - 1:half:-1] * radius_factor ** (-m.astype(float))
        mag = np.maximum(np.abs(c1[1:half]), np.abs(c2[K - 1:half:-1]))
        peak = max(float(mag.max()), float(abs(c1[0])), float(abs(c2[0])), 1e-300)
        tail = float(mag[half // 2:].max()) / peak
        # the FFT cannot resolve coefficients below roundoff in the samples
        floor = NOISE_FACTOR * np.finfo(float).eps * max(np.abs(s1).max(), np.abs(s2).max()) / peak
        if N or tail <= max(tol, floor) or peak <= 1e-300:
            break
        if K >= n_cap:
            raise TruncationError(f"coefficients not resolved with {K} samples (tail {tail:.2e})",
                                  suggested_n=2 * K)
        K *= 2
    if not N:
        big = np.nonzero(mag > max(tol, floor) * peak)[0]
        cut = int(big[-1]) + 1 if big.size else 1
        b1, b2 = b1[:cut], b2[:cut]
    return HarmonicPair(g, b1, b2, tail=tail, samples=K, constants=(c1[0], c2[0]))


def mode_data(g: DiskPair, hp: HarmonicPair):
    """``C_{n,+-} = 2 pi (a1_n R1**n +- conj(a2_n) R2**-n)`` for ``n = 1..N``."""
    return TWO_PI * (hp.b1 + np.conj(hp.b2)), TWO_PI * (hp.b1 - np.conj(hp.b2))


def harmonic_pair_for_polynomial(g: DiskPair, coefficients, **kw) -> HarmonicPair:
    bg = PolynomialBackground(np.asarray(coefficients, dtype=complex))
    chi = bg.completion()
    return pullback_coefficients(g, chi, chi, **kw)


# ---------------------------------------------------------------------------
# Single layer potential of a Fourier density on one circle


@dataclass(frozen=True)
class DiskLayer:
    """Single layer of ``mu = mu_0 + 2 Re sum_{m>=1} mu_m e^{i m theta}`` on a circle."""

    center: complex
    radius: float
    mu0: float
    mu: np.ndarray

    @classmethod
    def from_samples(cls, center, radius, samples) -> "DiskLayer":
        samples = np.asarray(samples, dtype=float)
        M = samples.size
        c = np.fft.fft(samples) / M
        return cls(complex(center), float(radius), float(c[0].real), c[1:M // 2].copy())

    def evaluate(self, z, order: int = 0, inside=None):
        """Value, gradient and Hessian; ``inside`` overrides the side chosen on the circle."""
        z = np.asarray(z, dtype=complex)
        r = self.radius
        m = np.arange(1, self.mu.size + 1)
        w = (z - self.center) / r
        inside = np.abs(w) <= 1 if inside is None else np.asarray(inside, dtype=bool)
        val = np.zeros(z.shape)
        W1 = np.zeros(z.shape, dtype=complex)
        W2 = np.zeros(z.shape, dtype=complex)
        if np.any(inside):
            coef = -(r / m) * self.mu
            P = power_sums(coef, w[inside], order)
            val[inside] = self.mu0 * r * np.log(r) + P[0].real
            if order >= 1:
                W1[inside] = P[1] / r
            if order >= 2:
                W2[inside] = P[2] / r ** 2
        out = ~inside
        if np.any(out):
            wo = w[out]
            x = 1 / wo
            coef = -(r / m) * np.conj(self.mu)
            P = power_sums(coef, x, order)
            zc = z[out] - self.center
            val[out] = self.mu0 * r * np.log(np.abs(zc)) + P[0].real
            if order >= 1:
                # d/dz of G(x), x = r/(z - c): dx/dz = -x/(z - c)
                W1[out] = self.mu0 * r / zc - P[1] * x / zc
            if order >= 2:
                W2[out] = (-self.mu0 * r / zc ** 2 + P[2] * x ** 2 / zc ** 2
                           + 2 * P[1] * x / zc ** 2)
        if order == 0:
            return val, None, None
        grad = np.conj(W1)
        if order == 1:
            return val, grad, None
        return val, grad, (W2.real, -W2.imag, -W2.real)


# ---------------------------------------------------------------------------
# Correctors for sources with nonzero inclusion integrals


BUMP_DELTA = 0.05


def _bump(s):
    """``exp(-1/(1-s^2))`` and its first two derivatives in ``s``."""
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1
    q = np.where(inside, 1 - s * s, 1.0)
    phi = np.where(inside, np.exp(-1 / q), 0.0)
    d1 = phi * (-2 * s / q ** 2)
    d2 = phi * (6 * s ** 4 - 2) / q ** 4
    return phi, np.where(inside, d1, 0.0), np.where(inside, d2, 0.0)


def _smoothstep(t):
    """Quintic smoothstep ``S`` on [0, 1] with two derivatives."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    S = t ** 3 * (10 - 15 * t + 6 * t * t)
    S1 = 30 * t * t * (1 - t) ** 2
    S2 = 60 * t * (1 - t) * (1 - 2 * t)
    return S, S1, S2


class Corrector:
    """The compactly supported ``V_j`` with ``div(sigma grad V_j) = div v_j``.

    ``V_j = Theta(theta) R(r) U(r, theta)`` about the centre of ``D_j``, with
    the angular bump on the side facing away from the other disk, normalised
    so that ``int_{D_j} div v_j = 1``.  Values are computed in a local frame
    ``y = s (x - c_j)`` with ``s = -1`` for side 1 and ``+1`` for side 2.
    """

    def __init__(self, g: DiskPair, side: int, k, delta: float = BUMP_DELTA):
        if side not in (1, 2):
            raise DomainError("side must be 1 or 2")
        self.geometry = g
        self.side = side
        self.k = parse_conductivity(k)
        self.center = complex(g.center(side))
        self.r = g.radius(side)
        self.orient = -1.0 if side == 1 else 1.0
        self.L = np.pi / 2 - delta
        self.width = min(g.eps, self.r) / 2
        if self.k == 1:
            raise DomainError("k = 1 means no inclusion")
        inv_k = 0.0 if math.isinf(self.k) else (math.inf if self.k == 0 else 1 / self.k)
        self.inv_k = inv_k
        if math.isinf(inv_k):
            self.A_out = math.inf
            self.B_out = math.inf
        else:
            # U_out = (A r - B / r) cos(theta)
            self.A_out = (1 + inv_k) / 2
            self.B_out = (1 - inv_k) * self.r ** 2 / 2
        integral, _ = integrate.quad(lambda s: float(_bump(s)[0]) * math.cos(self.L * s), -1, 1,
                                     epsabs=1e-14, epsrel=1e-12, limit=200)
        self.c = 1 / (self.r * self.L * integral)
        # support check: radial support ends before the other disk
        other = 2 if side == 1 else 1
        if abs(self.center - g.center(other)) < self.r + self.width + g.radius(other):
            raise GeometryError("corrector support reaches the other inclusion")

    # angular factor g(theta) = Theta(theta) cos(theta) in local coordinates
    def _angular(self, th):
        phi, p1, p2 = _bump(th / self.L)
        c = self.c
        T0, T1, T2 = c * phi, c * p1 / self.L, c * p2 / self.L ** 2
        co, si = np.cos(th), np.sin(th)
        g0 = T0 * co
        g1 = T1 * co - T0 * si
        g2 = T2 * co - 2 * T1 * si - T0 * co
        return g0, g1, g2

    def _radial(self, r):
        """``rho(r) = R(r) A(r)`` with two derivatives (outside part)."""
        S, S1, S2 = _smoothstep((r - self.r) / self.width)
        R = 1 - S
        R1 = -S1 / self.width
        R2 = -S2 / self.width ** 2
        A = self.A_out * r - self.B_out / r
        A1 = self.A_out + self.B_out / r ** 2
        A2 = -2 * self.B_out / r ** 3
        return R * A, R1 * A + R * A1, R2 * A + 2 * R1 * A1 + R * A2

    def theta_function(self, theta):
        """``Theta`` as a function of the polar angle about the disk centre."""
        th = np.angle(self.orient * np.exp(1j * np.asarray(theta, dtype=float)))
        return self.orient * self.c * _bump(th / self.L)[0]

    def _local(self, z):
        y = self.orient * (np.asarray(z, dtype=complex) - self.center)
        return y, np.abs(y), np.angle(y)

    def inside(self, z):
        return np.abs(np.asarray(z, dtype=complex) - self.center) <= self.r

    def evaluate(self, z, order: int = 0, inside=None):
        """``(V, grad V as V_x + i V_y, Hessian triple)`` up to ``order``."""
        y, r, th = self._local(z)
        if self.k == 0:
            raise DomainError("V is undefined for k = 0")
        g0, g1, g2 = self._angular(th)
        inside = self.inside(z) if inside is None else np.asarray(inside, dtype=bool)
        rr = np.where(r > 0, r, 1.0)
        rho0, rho1, rho2 = self._radial(np.where(inside, self.r, rr))
        rho0 = np.where(inside, rr * self.inv_k, rho0)
        rho1 = np.where(inside, self.inv_k, rho1)
        rho2 = np.where(inside, 0.0, rho2)
        val = rho0 * g0
        if order == 0:
            return val, None, None
        Vr, Vt = rho1 * g0, rho0 * g1
        e = np.exp(1j * th)
        grad_local = (Vr + 1j * Vt / rr) * e
        grad = self.orient * grad_local
        if order == 1:
            return val, grad, None
        Vrr, Vrt, Vtt = rho2 * g0, rho1 * g1, rho0 * g2
        a = Vrr
        b = Vrt / rr - Vt / rr ** 2
        d = Vr / rr + Vtt / rr ** 2
        co, si = np.cos(th), np.sin(th)
        hxx = a * co * co - 2 * b * co * si + d * si * si
        hxy = (a - d) * co * si + b * (co * co - si * si)
        hyy = a * si * si + 2 * b * co * si + d * co * co
        return val, grad, (hxx, hxy, hyy)

    def flux_field(self, z):
        """``v = sigma grad V`` as ``v_x + i v_y`` (finite for ``k = inf``)."""
        y, r, th = self._local(z)
        g0, g1, _ = self._angular(th)
        inside = r <= self.r
        rr = np.where(r > 0, r, 1.0)
        rho0, rho1, _ = self._radial(np.where(inside, self.r, rr))
        # inside: k grad(r g / k) = grad(r g)
        rho0 = np.where(inside, rr, rho0)
        rho1 = np.where(inside, 1.0, rho1)
        v_local = (rho1 * g0 + 1j * rho0 * g1 / rr) * np.exp(1j * th)
        return self.orient * v_local

    def divergence(self, z):
        """``div v`` pointwise (interior and exterior parts)."""
        y, r, th = self._local(z)
        g0, _, g2 = self._angular(th)
        inside = r <= self.r
        rr = np.where(r > 0, r, 1.0)
        rho0, rho1, rho2 = self._radial(np.where(inside, self.r, rr))
        out = (rho2 + rho1 / rr) * g0 + rho0 * g2 / rr ** 2
        return np.where(inside, (g0 + g2) / rr, out)

    @property
    def jump_factor(self) -> float:
        """``(k - 1)/k``, the strength of the layer in ``N[div v] = V - jump S[Theta cos]``."""
        if math.isinf(self.k):
            return 1.0
        return 1 - self.inv_k

    def layer(self, M: int = 4096) -> DiskLayer:
        """Single layer of ``Theta(theta) cos(theta)`` on the circle of ``D_j``."""
        theta = TWO_PI * np.arange(M) / M
        dens = self.theta_function(theta) * np.cos(theta)
        return DiskLayer.from_samples(self.center, self.r, dens)

    def newtonian_of_divergence(self, z, order: int = 0, layer: DiskLayer | None = None):
        """Weighted Newtonian potential of ``div v_j``: ``V_j - ((k-1)/k) S[Theta cos]``."""
        layer = layer or self.layer()
        # one side decision for both terms so that their derivative jumps cancel on the circle
        inside = self.inside(z)
        V = self.evaluate(z, order, inside)
        S = layer.evaluate(z, order, inside)
        jf = self.jump_factor
        val = V[0] - jf * S[0]
        if order == 0:
            return val, None, None
        grad = V[1] - jf * S[1]
        if order == 1:
            return val, grad, None
        return val, grad, tuple(a - jf * b for a, b in zip(V[2], S[2]))


def corrector_field(g: DiskPair, side: int, k, x):
    """``(V_side(x), v_side(x))`` with ``v`` returned as ``v_x + i v_y``."""
    cor = Corrector(g, side, k)
    val = cor.evaluate(x)[0]
    return val, cor.flux_field(x)


@dataclass
class Decomposition:
    """Result of ``source_decompose``: weights, correctors and the residual potential."""

    geometry: DiskPair
    k1: float
    k2: float
    w1: float
    w2: float
    source: SourceSpec
    potential: object
    quadrature: NewtonianPotential
    correctors: dict = field(default_factory=dict)
    layers: dict = field(default_factory=dict)

    def residual_potential(self, z, order: int = 0):
        """``F_0 = F - sum_j w_j N[div v_j]`` and derivatives."""
        res = list(self.potential.evaluate(z, order))
        for side, w in ((1, self.w1), (2, self.w2)):
            if w == 0:
                continue
            N = self.correctors[side].newtonian_of_divergence(z, order, self.layers[side])
            res[0] = res[0] - w * N[0]
            if order >= 1:
                res[1] = res[1] - w * N[1]
            if order >= 2:
                res[2] = tuple(a - w * b for a, b in zip(res[2], N[2]))
        return tuple(res)

    def residual_divergence(self, z, f_total: Callable):
        """``f_0 = f - w_1 div v_1 - w_2 div v_2`` given a callable for ``f``."""
        out = np.asarray(f_total(z), dtype=float)
        for side, w in ((1, self.w1), (2, self.w2)):
            if w:
                out = out - w * self.correctors[side].divergence(z)
        return out

    def residual_integrals(self) -> tuple[float, float]:
        """``int_{D_j} f_0`` by quadrature of the pieces and of ``div v_j`` separately."""
        out = []
        for side, w in ((1, self.w1), (2, self.w2)):
            val = self.quadrature.region_integral(side)
            if w:
                val -= w * divergence_integral(self.correctors[side])
            out.append(val)
        return tuple(out)


def divergence_integral(cor: Corrector, n_r: int = 64, n_t: int = 2048) -> float:
    """``int_{D_j} div v_j`` by a tensor Gauss (radius) times trapezoid (angle) rule."""
    s, ws = np.polynomial.legendre.leggauss(n_r)
    r = (s + 1) / 2 * cor.r
    wr = ws / 2 * cor.r * r
    th = TWO_PI * np.arange(n_t) / n_t
    z = cor.center + r[:, None] * np.exp(1j * th[None, :])
    vals = cor.divergence(z)
    return float(np.sum(vals * wr[:, None]) * TWO_PI / n_t)


def source_decompose(g: DiskPair, k1, k2, src: SourceSpec, potential=None) -> Decomposition:
    """Split off ``w_j = int_{D_j} f`` with the correctors so the residual has zero inclusion integrals."""
    if src.variant != "divergence_source":
        raise ConfigurationError("decomposition needs a divergence source")
    k1, k2 = parse_conductivity(k1), parse_conductivity(k2)
    if potential is None:
        potential = src.closed_form if src.closed_form is not None else NewtonianPotential(g, k1, k2, src)
    quad = potential if isinstance(potential, NewtonianPotential) else NewtonianPotential(g, k1, k2, src)
    w1 = quad.region_integral(1)
    w2 = quad.region_integral(2)
    dec = Decomposition(g, k1, k2, w1, w2, src, potential, quad)
    for side, w, k in ((1, w1, k1), (2, w2, k2)):
        if w != 0:
            if k == 0:
                raise DomainError(f"nonzero source integral in D{side} with k = 0")
            cor = Corrector(g, side, k)
            dec.correctors[side] = cor
            dec.layers[side] = cor.layer()
    return dec
