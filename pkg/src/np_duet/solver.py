"""Spectral solution of the two-disk transmission problem.

The correction to the background is ``Re V(T z)`` where, zone by zone, ``V``
is a sum of power series in ``zeta/R_j`` or ``R_j/zeta`` (anti-analytic pieces
are folded into analytic ones by conjugating coefficients, which leaves the
real part unchanged).  Derivatives in ``z`` follow from the chain rule
through ``T`` and Wirtinger calculus.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError, EvaluationError
from .geometry import DiskPair, Zone, physical_zone_codes
from .harmonic_data import (Decomposition, HarmonicPair, PolynomialBackground, SourceSpec,
                            disk_completion_from_gradient, flux_fourier, mode_data,
                            pullback_coefficients, source_decompose)
from .series import power_sums
from .spectrum import (ModeCoefficients, lambda_from_k, mode_denominators, parse_conductivity,
                       solve_modes)

EIGHT_PI = 8 * np.pi


# ---------------------------------------------------------------------------
# The series w_1, w_2 and the zone functions A_1, A_2


def series_w(hp: HarmonicPair, lambda_product: float, rho: float, zeta, side: int,
             derivative: int = 0):
    """``w_1 = sum a1_n zeta^n / (P - rho^2n)`` or ``w_2 = sum a2_n zeta^-n / (P - rho^2n)``.

    ``P = 4 lambda1 lambda2``.  With ``derivative=1`` the complex derivative is
    returned instead.
    """
    g = hp.geometry
    zeta = np.asarray(zeta, dtype=complex)
    N = hp.N
    den = lambda_product - rho ** (2 * np.arange(1, N + 1, dtype=float))
    if np.any(np.abs(den) <= 1e-12):
        from .errors import ResonanceError
        raise ResonanceError()
    if side == 1:
        if np.any(np.abs(zeta) > g.R1 * (1 + 1e-12)):
            raise DomainError("w_1 needs |zeta| <= R1")
        P = power_sums(hp.b1 / den, zeta / g.R1, derivative)
        out = P[0] if derivative == 0 else P[1] / g.R1
    elif side == 2:
        if np.any(np.abs(zeta) < g.R2 * (1 - 1e-12)):
            raise DomainError("w_2 needs |zeta| >= R2")
        x = g.R2 / zeta
        P = power_sums(hp.b2 / den, x, derivative)
        out = P[0] if derivative == 0 else -P[1] * x / zeta
    else:
        raise DomainError("side must be 1 or 2")
    return out[()] if out.ndim == 0 else out


def series_w_functional(hp: HarmonicPair, lambda_product: float, rho: float, zeta, side: int,
                        h=None, constant=None, tol: float = 1e-17, max_terms: int = 1_000_000):
    """The same ``w_j`` summed as ``sum_l h_j(rho^{+-2l} zeta) / P^(l+1)``.

    ``h`` replaces ``h_j`` by any function with the same non-constant part;
    its constant term (``h(0)`` for side 1, ``constant`` or 0 for side 2) is
    removed because only modes ``n >= 1`` enter ``w_j``.
    """
    zeta = np.asarray(zeta, dtype=complex)
    # the l-th term of mode n carries (rho^2n / P)^l, so |P| > rho^2 suffices
    if abs(lambda_product) <= rho ** 2:
        raise DomainError("functional form needs |4 lambda1 lambda2| > rho^2")
    if h is None:
        h = hp.h1 if side == 1 else hp.h2
        constant = 0j
    elif constant is None:
        constant = complex(np.ravel(h(np.zeros(1, dtype=complex)))[0]) if side == 1 else 0j
    acc = np.zeros(zeta.shape, dtype=complex)
    for l in range(max_terms):
        arg = zeta * rho ** (2 * l) if side == 1 else zeta * rho ** (-2 * l)
        term = (h(arg) - constant) / lambda_product ** (l + 1)
        acc = acc + term
        if np.max(np.abs(term), initial=0.0) <= tol * max(np.max(np.abs(acc), initial=0.0), 1e-300):
            break
    return acc[()] if acc.ndim == 0 else acc


def potential_A(g: DiskPair, lambda1: float, lambda2: float, hp: HarmonicPair, zeta,
                derivative: bool = False):
    """Zone formulas for ``A_1 + A_2`` split into analytic and anti-analytic parts.

    Returns ``(P, Q)`` with ``P`` analytic in ``zeta``, ``Q`` a function of
    ``conj(zeta)``, and the correction equal to ``Re(P + Q)``.  With
    ``derivative`` the pair ``(dP/dzeta, dQ/dconj(zeta))`` is returned.
    """
    zeta = complex(zeta)
    P4 = 4 * lambda1 * lambda2
    rho, R1, R2 = g.rho, g.R1, g.R2
    zb = np.conj(zeta)

    def w1(x):
        return complex(series_w(hp, P4, rho, x, 1, int(derivative)))

    def w2(x):
        return complex(series_w(hp, P4, rho, x, 2, int(derivative)))

    d = derivative
    # value or derivative of each building block; the factor is the inner derivative
    def a1(alpha):  # w1(alpha zeta), analytic
        return alpha * w1(alpha * zeta) if d else w1(alpha * zeta)

    def b1(alpha):  # w1(alpha / conj(zeta)), anti-analytic
        return -alpha / zb ** 2 * w1(alpha / zb) if d else w1(alpha / zb)

    def a2(alpha):  # conj(w2(alpha / conj(zeta))), analytic
        return np.conj(-alpha / zb ** 2 * w2(alpha / zb)) if d else np.conj(w2(alpha / zb))

    def b2(alpha):  # conj(w2(zeta / alpha)), anti-analytic
        return np.conj(w2(zeta / alpha) / alpha) if d else np.conj(w2(zeta / alpha))

    r = abs(zeta)
    if r <= R1:
        P = -(2 * lambda2 * a1(1.0) - a1(rho ** 2)) - (2 * lambda1 - 1) * a2(R2 ** 2)
        Q = 0j
    elif r <= R2:
        P = a1(rho ** 2) - 2 * lambda1 * a2(R2 ** 2)
        Q = -2 * lambda2 * b1(R1 ** 2) + b2(rho ** 2)
    else:
        P = 0j
        Q = -(2 * lambda2 - 1) * b1(R1 ** 2) - 2 * lambda1 * b2(1.0) + b2(rho ** 2)
    return complex(P), complex(Q)


# ---------------------------------------------------------------------------
# Field solution


@dataclass(frozen=True)
class ZoneTerm:
    """``coef[n-1] x**n`` with ``x = zeta/R`` (kind +1) or ``R/zeta`` (kind -1)."""

    coef: np.ndarray
    kind: int
    R: float


def zone_terms(g: DiskPair, modes: ModeCoefficients) -> dict:
    s = (modes.a_plus + modes.a_minus) / EIGHT_PI
    d = (modes.a_plus - modes.a_minus) / EIGHT_PI
    return {
        Zone.INCLUSION1: (ZoneTerm(-s, 1, g.R1), ZoneTerm(-d, 1, g.R2)),
        Zone.ANNULUS: (ZoneTerm(-np.conj(s), -1, g.R1), ZoneTerm(-d, 1, g.R2)),
        Zone.INCLUSION2: (ZoneTerm(-np.conj(s), -1, g.R1), ZoneTerm(-np.conj(d), -1, g.R2)),
    }


def _term_eval(g: DiskPair, term: ZoneTerm, z, order: int):
    """Value and z-derivatives of ``sum coef x^n`` with ``x`` a Moebius function of ``z``."""
    b = g.beta
    if term.kind == 1:
        x = (b + z) / (term.R * z)
        x1 = -b / (term.R * z ** 2)
        x2 = 2 * b / (term.R * z ** 3)
    else:
        x = term.R * z / (b + z)
        x1 = term.R * b / (b + z) ** 2
        x2 = -2 * term.R * b / (b + z) ** 3
    P = power_sums(term.coef, x, order)
    W = P[0]
    W1 = P[1] * x1 if order >= 1 else None
    W2 = P[2] * x1 ** 2 + P[1] * x2 if order >= 2 else None
    return W, W1, W2


@dataclass(frozen=True)
class FieldValues:
    zone: np.ndarray
    u: np.ndarray
    ux: np.ndarray | None = None
    uy: np.ndarray | None = None
    uxx: np.ndarray | None = None
    uxy: np.ndarray | None = None
    uyy: np.ndarray | None = None

    @property
    def grad(self):
        return self.ux + 1j * self.uy


@dataclass
class FieldSolution:
    geometry: DiskPair
    k1: float
    k2: float
    lambda1: float
    lambda2: float
    harmonic_pair: HarmonicPair
    modes: ModeCoefficients
    background: object
    terms: dict
    constant: float
    layers: list = field(default_factory=list)
    decomposition: Decomposition | None = None

    def correction(self, z, order: int = 0):
        """``Re W(T z)`` with ``W`` the zone-wise analytic aggregate; returns ``(W, W_z, W_zz)``."""
        z = np.asarray(z, dtype=complex)
        codes = physical_zone_codes(self.geometry, z)
        W = np.zeros(z.shape, dtype=complex)
        W1 = np.zeros(z.shape, dtype=complex)
        W2 = np.zeros(z.shape, dtype=complex)
        for zone, terms in self.terms.items():
            mask = codes == int(zone)
            if not np.any(mask):
                continue
            zz = z[mask]
            for term in terms:
                a, b, c = _term_eval(self.geometry, term, zz, order)
                W[mask] += a
                if order >= 1:
                    W1[mask] += b
                if order >= 2:
                    W2[mask] += c
        return codes, W, W1, W2

    def evaluate(self, x, order: int = 0) -> FieldValues:
        z = np.asarray(x, dtype=complex)
        if np.any(np.abs(z) < 1e-12 * self.geometry.beta):
            raise EvaluationError("evaluation point at the pole of the Moebius map")
        codes, W, W1, W2 = self.correction(z, order)
        bv, bg, bh = self.background.evaluate(z, order)
        u = bv + W.real + self.constant
        ux = uy = uxx = uxy = uyy = None
        if order >= 1:
            grad = bg + np.conj(W1)
        if order >= 2:
            hxx = bh[0] + W2.real
            hxy = bh[1] - W2.imag
            hyy = bh[2] - W2.real
        for wgt, layer in self.layers:
            lv = layer.evaluate(z, order)
            u = u + wgt * lv[0]
            if order >= 1:
                grad = grad + wgt * lv[1]
            if order >= 2:
                hxx, hxy, hyy = hxx + wgt * lv[2][0], hxy + wgt * lv[2][1], hyy + wgt * lv[2][2]
        if order >= 1:
            ux, uy = grad.real, grad.imag
        if order >= 2:
            uxx, uxy, uyy = hxx, hxy, hyy
        return FieldValues(codes, u, ux, uy, uxx, uxy, uyy)

    def background_value(self, x):
        return self.background.evaluate(np.asarray(x, dtype=complex), 0)[0]


def evaluate(sol: FieldSolution, x, order: int = 0) -> FieldValues:
    return sol.evaluate(x, order)


def _far_field_constant(sol_terms, g: DiskPair, anchor, layers=()) -> float:
    """Constant making ``u - background`` vanish at the anchor.

    ``inf`` uses the exact limit ``zeta = 1`` of the correction; layer terms,
    which may grow logarithmically, keep their natural normalisation there.
    A finite anchor zeroes the correction plus the layers at that point.
    """
    if isinstance(anchor, str):
        anchor = math.inf if anchor.strip().lower() in ("inf", "infinity") else complex(anchor)
    if anchor is None or (isinstance(anchor, (int, float)) and math.isinf(anchor)):
        W = 0j
        for term in sol_terms[Zone.ANNULUS]:
            x = term.R if term.kind == -1 else 1 / term.R
            W += power_sums(term.coef, np.array([x]))[0][0]
        return -W.real
    z = np.array([complex(anchor)])
    if physical_zone_codes(g, z)[0] != int(Zone.ANNULUS):
        raise ConfigurationError("the anchor must lie outside both inclusions")
    val = sum(_term_eval(g, t, z, 0)[0][0] for t in sol_terms[Zone.ANNULUS]).real
    for wgt, layer in layers:
        val += wgt * float(layer.evaluate(z, 0)[0][0])
    return -val


def _check_zero_mean_flux(background, g: DiskPair, tol: float = 1e-10):
    for side in (1, 2):
        c = flux_fourier(lambda p: background.evaluate(p, 1)[1], g, side, 256)
        scale = max(float(np.max(np.abs(c))), 1.0)
        if abs(c[0]) > tol * scale:
            from .errors import CompatibilityError
            raise CompatibilityError(f"background flux has nonzero mean on circle {side}")


def solve_field(g: DiskPair, k1, k2, src: SourceSpec, nmax: int = 256, tol: float = 1e-15,
                n_cap: int = 1 << 18, anchor=math.inf, N: int | None = None) -> FieldSolution:
    """Spectral solution for a harmonic background or a divergence source.

    ``nmax`` is the starting sample count of the auto-escalating coefficient
    extraction; ``N`` fixes the truncation instead.  ``anchor`` sets the
    additive constant: ``inf`` makes ``u - background`` vanish at infinity,
    a finite complex value makes the correction vanish there.
    """
    k1, k2 = parse_conductivity(k1), parse_conductivity(k2)
    lam1, lam2 = lambda_from_k(k1), lambda_from_k(k2)
    layers = []
    dec = None
    if src.variant == "harmonic_background":
        background = PolynomialBackground(src.coefficients)
        _check_zero_mean_flux(background, g)
        chi = background.completion()
        hp = pullback_coefficients(g, chi, chi, N=N, tol=tol, n_start=nmax, n_cap=n_cap)
    else:
        dec = source_decompose(g, k1, k2, src)
        background = dec.potential
        grad0 = lambda p: dec.residual_potential(p, 1)[1]
        chi1 = disk_completion_from_gradient(grad0, g, 1)
        chi2 = disk_completion_from_gradient(grad0, g, 2)
        hp = pullback_coefficients(g, chi1, chi2, N=N, tol=tol, n_start=nmax, n_cap=n_cap)
        for side, w in ((1, dec.w1), (2, dec.w2)):
            if w:
                layers.append((w * dec.correctors[side].jump_factor, dec.layers[side]))
    Cp, Cm = mode_data(g, hp)
    mode_denominators(lam1, lam2, g.rho, hp.N)
    modes = solve_modes(lam1, lam2, g.rho, Cp, Cm)
    terms = zone_terms(g, modes)
    const = _far_field_constant(terms, g, anchor, layers)
    return FieldSolution(geometry=g, k1=k1, k2=k2, lambda1=lam1, lambda2=lam2, harmonic_pair=hp,
                         modes=modes, background=background, terms=terms, constant=const,
                         layers=layers, decomposition=dec)


def solve_harmonic(g: DiskPair, k1, k2, text_or_coefficients, **kw) -> FieldSolution:
    """Convenience wrapper: ``H`` given as a polynomial string or coefficient list."""
    if isinstance(text_or_coefficients, str):
        src = SourceSpec.from_polynomial(text_or_coefficients)
    else:
        src = SourceSpec.harmonic(text_or_coefficients)
    return solve_field(g, k1, k2, src, **kw)


def dzeta_V(sol: FieldSolution, zeta) -> complex:
    """``d/dzeta`` of the analytic part of ``A_1 + A_2`` at ``zeta``."""
    return potential_A(sol.geometry, sol.lambda1, sol.lambda2, sol.harmonic_pair, zeta,
                       derivative=True)[0]
