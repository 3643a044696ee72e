"""Nystrom discretisation of the two-circle boundary integral system.

The oracle knows nothing about the closed-form spectrum.  It discretises the
kernels directly: the trapezoid rule for smooth kernels and a product
quadrature built from the Fourier symbol of ``ln|2 sin(t/2)|`` for the
logarithmic self-interaction.

Nodes are equispaced in a parameter ``tau`` on each circle.  With the default
``"graded"`` parametrisation, ``tau`` is the polar angle of the image of the
node under the Moebius map, which clusters nodes in the gap; ``"uniform"``
uses the plain polar angle about the centre.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .errors import CompatibilityError, DomainError, NumericalError
from .geometry import DiskPair

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class CircleBoundary:
    """Nodes on one circle: positions, unit normals, speed ``|dz/dtau|``."""

    center: complex
    radius: float
    orientation: int  # +1: normal points away from the centre
    tau: np.ndarray
    points: np.ndarray
    speed: np.ndarray

    @property
    def normals(self) -> np.ndarray:
        return self.orientation * (self.points - self.center) / self.radius

    @property
    def weights(self) -> np.ndarray:
        return TWO_PI / self.tau.size * self.speed

    @property
    def polar_angle(self) -> np.ndarray:
        return np.angle(self.points - self.center)


def uniform_circle(center, radius, n, orientation=1) -> CircleBoundary:
    tau = TWO_PI * np.arange(n) / n
    pts = complex(center) + radius * np.exp(1j * tau)
    return CircleBoundary(complex(center), float(radius), orientation, tau, pts, np.full(n, float(radius)))


def graded_circle(g: DiskPair, side: int, n: int) -> CircleBoundary:
    """Nodes ``T^{-1}(R_j exp(i tau))`` with the exact speed of that parametrisation."""
    tau = TWO_PI * np.arange(n) / n
    R = g.Rj(side)
    zeta = R * np.exp(1j * tau)
    pts = g.beta / (zeta - 1)
    speed = g.beta * R / np.abs(zeta - 1) ** 2
    return CircleBoundary(complex(g.center(side)), g.radius(side), 1, tau, pts, speed)


def _log_symbol_matrix(n: int) -> np.ndarray:
    """Weights ``P[i, j]`` with ``sum_j P[i, j] psi(t_j) = int ln|2 sin((t_i - s)/2)| psi(s) ds``.

    Exact for trigonometric polynomials of degree below ``n/2``.
    """
    t = TWO_PI * np.arange(n) / n
    diff = t[:, None] - t[None, :]
    m = np.arange(1, n // 2)
    # sum_m cos(m d)/m built via the first row (the matrix is circulant)
    row = -(TWO_PI / n) * (np.cos(np.outer(t, m)) @ (1.0 / m) + np.cos(n * t / 2) / n)
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    del diff
    return row[idx]


def _assemble_blocks(circles: list[CircleBoundary]):
    """Return kernel matrices ``A`` (normal-derivative kernel) and ``G`` (log kernel)."""
    x = np.concatenate([c.points for c in circles])
    nu = np.concatenate([c.normals for c in circles])
    tot = x.size
    A = np.empty((tot, tot))
    G = np.empty((tot, tot))
    offs = np.cumsum([0] + [c.tau.size for c in circles])
    for a, ca in enumerate(circles):
        ia = slice(offs[a], offs[a + 1])
        for b, cb in enumerate(circles):
            ib = slice(offs[b], offs[b + 1])
            d = x[ia, None] - x[None, ib]
            if a == b:
                # (x - y).nu_x / |x - y|^2 = 1/(2r) on a circle, diagonal included
                A[ia, ib] = ca.orientation / (2 * ca.radius) / TWO_PI
                n = ca.tau.size
                dt = ca.tau[:, None] - ca.tau[None, :]
                two_sin = np.abs(2 * np.sin(dt / 2))
                np.fill_diagonal(two_sin, 1.0)
                absd = np.abs(d)
                np.fill_diagonal(absd, 1.0)
                smooth = np.log(absd / two_sin)
                np.fill_diagonal(smooth, np.log(ca.speed))
                P = _log_symbol_matrix(n)
                # G is defined so that S = G @ diag(w); fold the product weights in
                G[ia, ib] = (P / (TWO_PI / n) + smooth) / TWO_PI
            else:
                A[ia, ib] = np.real(d * np.conj(nu[ia, None])) / np.abs(d) ** 2 / TWO_PI
                G[ia, ib] = np.log(np.abs(d)) / TWO_PI
    return A, G


@dataclass
class NystromSystem:
    geometry: DiskPair | None
    circles: list[CircleBoundary]
    K_matrix: np.ndarray
    S_matrix: np.ndarray
    A_kernel: np.ndarray
    G_kernel: np.ndarray
    parametrization: str = "graded"
    _lu: dict = field(default_factory=dict, repr=False)

    @property
    def nodes_per_circle(self) -> int:
        return self.circles[0].tau.size

    @property
    def nodes(self) -> np.ndarray:
        return np.concatenate([c.points for c in self.circles])

    @property
    def normals(self) -> np.ndarray:
        return np.concatenate([c.normals for c in self.circles])

    @property
    def weights(self) -> np.ndarray:
        return np.concatenate([c.weights for c in self.circles])

    def slices(self):
        n = self.nodes_per_circle
        return [slice(i * n, (i + 1) * n) for i in range(len(self.circles))]

    def Lambda(self, lambda1, lambda2) -> np.ndarray:
        n = self.nodes_per_circle
        return np.concatenate([np.full(n, lambda1), np.full(n, lambda2)])

    @property
    def DL_matrix(self) -> np.ndarray:
        """Double-layer operator (the L2 adjoint of ``K``) at the same nodes."""
        return self.A_kernel.T * self.weights[None, :]


def assemble_circles(circles: list[CircleBoundary], geometry=None, parametrization="custom") -> NystromSystem:
    A, G = _assemble_blocks(circles)
    w = np.concatenate([c.weights for c in circles])
    return NystromSystem(geometry=geometry, circles=circles, K_matrix=A * w[None, :],
                         S_matrix=G * w[None, :], A_kernel=A, G_kernel=G,
                         parametrization=parametrization)


def assemble(g: DiskPair, N: int, parametrization: str = "graded") -> NystromSystem:
    if N < 16 or N % 2:
        raise DomainError("N must be even and at least 16")
    if parametrization == "graded":
        circles = [graded_circle(g, 1, N), graded_circle(g, 2, N)]
    elif parametrization == "uniform":
        circles = [uniform_circle(g.c1, g.r1, N), uniform_circle(g.c2, g.r2, N)]
    else:
        raise DomainError(f"unknown parametrization {parametrization!r}")
    return assemble_circles(circles, geometry=g, parametrization=parametrization)


def assemble_concentric(g: DiskPair, N: int) -> NystromSystem:
    """System on ``|zeta| = R1, R2``; the outer circle bounds the exterior inclusion."""
    circles = [uniform_circle(0, g.R1, N, 1), uniform_circle(0, g.R2, N, -1)]
    return assemble_circles(circles, geometry=g, parametrization="concentric")


def symmetrization_residual(sys: NystromSystem) -> float:
    """Spectral norm of ``S K* - K S`` (``K`` realised as the quadrature transpose)."""
    S, Ks, K = sys.S_matrix, sys.K_matrix, sys.DL_matrix
    return float(np.linalg.norm(S @ Ks - K @ S, 2))


def single_layer_inner(sys: NystromSystem, phi, psi) -> complex:
    """``<phi, psi> = -(phi, S[psi])`` by the trapezoid rule (conjugate-linear in ``psi``)."""
    phi = np.asarray(phi)
    return complex(-np.sum(sys.weights * phi * np.conj(sys.S_matrix @ np.asarray(psi))))


def mobius_push(sys: NystromSystem, phi) -> tuple[NystromSystem, np.ndarray]:
    """Concentric system and ``U phi = |z|^2 / beta * phi(z)`` at the image nodes.

    Needs the graded parametrisation, whose node ``k`` on circle ``j`` maps to
    node ``k`` of the concentric circle ``|zeta| = R_j``.
    """
    if sys.parametrization != "graded" or sys.geometry is None:
        raise DomainError("the Moebius transfer needs a graded two-disk system")
    g = sys.geometry
    star = assemble_concentric(g, sys.nodes_per_circle)
    return star, np.abs(sys.nodes) ** 2 / g.beta * np.asarray(phi)


def unitarity_defect(sys: NystromSystem, phi, psi) -> float:
    """``|<U phi, U psi>_* - <phi, psi>|`` for mean-zero densities."""
    star, phs = mobius_push(sys, phi)
    _, pss = mobius_push(sys, psi)
    return abs(single_layer_inner(star, phs, pss) - single_layer_inner(sys, phi, psi))


def intertwining_residual(sys: NystromSystem, phi) -> float:
    """Relative max-norm of ``K*_{D*} U phi - U K*_D phi``.

    ``D*`` is the image of the two disks, so its outer boundary carries the
    normal pointing toward the origin; with that orientation ``U`` commutes
    with the NP operators.
    """
    star, phs = mobius_push(sys, phi)
    _, kphs = mobius_push(sys, sys.K_matrix @ np.asarray(phi))
    r = star.K_matrix @ phs - kphs
    return float(np.max(np.abs(r)) / max(np.max(np.abs(phs)), 1e-300))


def circle_means(sys: NystromSystem, values) -> np.ndarray:
    """Integrals of ``values`` over each circle."""
    v = np.asarray(values)
    w = sys.weights
    return np.array([np.sum(v[s] * w[s]) for s in sys.slices()])


def project_mean_zero(sys: NystromSystem, values) -> np.ndarray:
    v = np.array(values, dtype=np.result_type(values, float), copy=True)
    w = sys.weights
    for s in sys.slices():
        v[s] -= np.sum(v[s] * w[s]) / np.sum(w[s])
    return v


def oracle_solve(sys: NystromSystem, eta, lambda1: float, lambda2: float, mode: str = "deflate",
                 mean_tol: float = 1e-6) -> np.ndarray:
    """Dense solve of ``(Lambda - K*) phi = eta``.

    ``mode="deflate"`` requires data whose circle integrals vanish up to
    ``mean_tol`` (relative, per unit length) and returns the
    zero-mean solution; the rank-two per-circle mean term added to the matrix
    removes the half-eigenspace without changing that solution.
    ``mode="full"`` solves on the whole space, which needs ``lambda_j != 1/2``.
    """
    eta = np.asarray(eta)
    w = sys.weights
    n = sys.nodes_per_circle
    lams = (lambda1, lambda2)
    M = np.diag(sys.Lambda(lambda1, lambda2)) - sys.K_matrix
    if mode == "deflate":
        scale = max(float(np.max(np.abs(eta), initial=0.0)), 1.0)
        means = circle_means(sys, eta)
        if np.any(np.abs(means) > mean_tol * scale * np.array([c.radius for c in sys.circles]) * TWO_PI):
            raise CompatibilityError(f"data have nonzero circle integrals {means}")
        # remove the quadrature residual of the mean before solving
        eta = project_mean_zero(sys, eta)
        for j, s in enumerate(sys.slices()):
            c = 1.0 if lams[j] >= 0 else -1.0
            M[s, s] += c * w[None, s] / np.sum(w[s])
    elif mode == "full":
        if any(abs(l - 0.5) < 1e-14 for l in lams):
            raise DomainError("full solve needs finite conductivities (lambda != 1/2)")
    else:
        raise DomainError(f"unknown mode {mode!r}")
    try:
        phi = linalg.solve(M, eta)
    except linalg.LinAlgError as exc:  # pragma: no cover - dense LU on a regular matrix
        raise NumericalError(str(exc)) from exc
    if mode == "deflate":
        phi = project_mean_zero(sys, phi)
    return phi


def _fourier_interpolant(circle: CircleBoundary, values, tau_eval):
    n = circle.tau.size
    c = np.fft.fft(values) / n
    k = np.fft.fftfreq(n, 1.0 / n)
    half = n // 2
    c = c.copy()
    # split the Nyquist mode symmetrically
    c_nyq = c[half] / 2
    k = np.append(k, half).astype(float)
    k[half] = -half
    c = np.append(c, c_nyq)
    c[half] = c_nyq
    tau_eval = np.asarray(tau_eval, dtype=float)
    out = np.empty(tau_eval.shape, dtype=complex)
    step = max(1, (1 << 21) // k.size)
    for lo in range(0, tau_eval.size, step):
        out[lo:lo + step] = np.exp(1j * np.outer(tau_eval[lo:lo + step], k)) @ c
    return out


def resample_uniform(sys: NystromSystem, phi, M: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """Trigonometric interpolation of the density onto ``M`` equispaced polar angles per circle."""
    out = []
    g = sys.geometry
    for j, (circ, s) in enumerate(zip(sys.circles, sys.slices())):
        theta = TWO_PI * np.arange(M) / M
        pts = circ.center + circ.radius * np.exp(1j * theta)
        if sys.parametrization == "graded":
            tau_eval = np.angle(g.beta / pts + 1) % TWO_PI
        else:
            tau_eval = theta
        vals = _fourier_interpolant(circ, phi[s], tau_eval)
        if np.isrealobj(phi):
            vals = vals.real
        out.append((pts, vals))
    return out


def oracle_field(sys: NystromSystem, phi, background, x, M: int = 8192, return_grad: bool = False):
    """``background(x) + S[phi](x)`` by the trapezoid rule on a refined equispaced grid.

    ``background`` maps a complex array of points to real values (or to a
    tuple ``(value, grad)`` when ``return_grad`` is set).  Points closer than a
    few fine-grid spacings to a circle trigger a warning.
    """
    x = np.atleast_1d(np.asarray(x, dtype=complex))
    for circ in sys.circles:
        dist = np.abs(np.abs(x - circ.center) - circ.radius)
        h = TWO_PI * circ.radius / M
        if np.any(dist < 4 * h):
            est = float(np.exp(-M * np.min(dist) / circ.radius))
            warnings.warn(f"oracle_field: target within {np.min(dist):.3g} of a circle; "
                          f"estimated quadrature error ~{est:.1e}", RuntimeWarning, stacklevel=2)
    val = np.zeros(x.shape)
    grad = np.zeros(x.shape, dtype=complex)
    for (pts, dens), circ in zip(resample_uniform(sys, phi, M), sys.circles):
        wq = TWO_PI * circ.radius / M * dens
        step = max(1, (1 << 21) // M)
        for lo in range(0, x.size, step):
            xs = x[lo:lo + step]
            d = xs[:, None] - pts[None, :]
            val[lo:lo + step] += np.log(np.abs(d)) @ wq / TWO_PI
            if return_grad:
                grad[lo:lo + step] += (1 / np.conj(d)) @ wq / TWO_PI
    if background is None:
        bg, bgg = 0.0, 0.0
    elif return_grad:
        bg, bgg = background(x)
    else:
        bg = background(x)
    if return_grad:
        return val + bg, grad + bgg
    return val + bg


def oracle_spectrum(sys: NystromSystem, count: int | None = None, tol: float = 1e-9):
    """Eigenvalues of ``K*`` grouped into ``(value, multiplicity)`` clusters.

    Sorted by decreasing ``|value|``; ``count`` limits the number of clusters.
    """
    ev = linalg.eigvals(sys.K_matrix)
    ev = np.real_if_close(ev, tol=1e6)
    ev = np.sort(np.real(ev))[::-1]
    clusters: list[list[float]] = []
    for v in ev:
        if clusters and abs(v - clusters[-1][-1]) <= tol:
            clusters[-1].append(v)
        else:
            clusters.append([v])
    out = [(float(np.mean(c)), len(c)) for c in clusters]
    out.sort(key=lambda t: -abs(t[0]))
    return out if count is None else out[:count]


def raw_eigenvalues(sys: NystromSystem) -> np.ndarray:
    return np.sort(np.real(linalg.eigvals(sys.K_matrix)))
