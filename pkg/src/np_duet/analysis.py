"""Gap maxima of derivatives, eps-sweeps, exponent fits and bound ratios."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DomainError, NPDuetError
from .geometry import DiskPair, derive_geometry, inverse_map
from .harmonic_data import SourceSpec
from .solver import FieldSolution, solve_field
from .spectrum import lambda_from_k, parse_conductivity

SEGMENT_POINTS = 101
CIRCLE_POINTS = 64


@dataclass
class SweepRecord:
    eps: float
    rho: float
    lambda1: float
    lambda2: float
    order: int
    gap_max: float
    bound_value: float
    r_star: float = math.nan
    norms: dict = field(default_factory=dict)
    N: int = 0
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def gap_probes(g: DiskPair) -> tuple[np.ndarray, np.ndarray]:
    """Segment between the closest boundary points and the pullback of ``|zeta| = 1``.

    The segment is inset by ``1e-3 eps`` at both ends.  The circle angles are
    offset by half a step because ``zeta = 1`` is the point at infinity.
    """
    a, b = g.c1 + g.r1, g.c2 - g.r2
    inset = 1e-3 * g.eps
    seg = np.linspace(a + inset, b - inset, SEGMENT_POINTS).astype(complex)
    theta = 2 * np.pi * (np.arange(CIRCLE_POINTS) + 0.5) / CIRCLE_POINTS
    circ = np.asarray(inverse_map(g, np.exp(1j * theta)), dtype=complex)
    return seg, circ


def derivative_norm(values, order: int) -> np.ndarray:
    """Frobenius norm of the gradient (order 1) or Hessian (order 2)."""
    if order == 1:
        return np.hypot(values.ux, values.uy)
    if order == 2:
        return np.sqrt(values.uxx ** 2 + 2 * values.uxy ** 2 + values.uyy ** 2)
    raise DomainError("order must be 1 or 2")


def gap_scan(sol: FieldSolution, order: int = 1, return_parts: bool = False):
    """Maximum of ``|grad^order u|`` over the gap probe set."""
    seg, circ = gap_probes(sol.geometry)
    vals = sol.evaluate(np.concatenate([seg, circ]), order)
    nrm = derivative_norm(vals, order)
    seg_max, circ_max = float(nrm[:seg.size].max()), float(nrm[seg.size:].max())
    out = max(seg_max, circ_max)
    if return_parts:
        return out, {"segment": seg_max, "circle": circ_max}
    return out


def regime(k1, k2) -> str:
    """``same`` or ``opposite`` from the sign of ``(k1 - 1)(k2 - 1)``."""
    s = []
    for k in (k1, k2):
        k = parse_conductivity(k)
        if k == 1:
            raise ConfigurationError("k = 1 has no regime")
        s.append(1 if k > 1 else -1)
    return "same" if s[0] == s[1] else "opposite"


def bound_value(lambda1: float, lambda2: float, r_star: float, eps: float, n: int) -> float:
    """Right-hand side of the derivative estimates without the data norm and constant."""
    if n < 1:
        raise DomainError("derivative order must be at least 1")
    p = 4 * lambda1 * lambda2
    if p > 0:
        return (p - 1 + r_star * math.sqrt(eps)) ** (-n)
    return (abs(p) - 1 + r_star * math.sqrt(eps)) ** (-n + 1)


def _record(r1, r2, k1, k2, src, eps, order, solve_kw) -> SweepRecord:
    lam1, lam2 = lambda_from_k(k1), lambda_from_k(k2)
    try:
        g = derive_geometry(r1, r2, eps)
    except NPDuetError as exc:
        return SweepRecord(eps, math.nan, lam1, lam2, order, math.nan, math.nan, error=str(exc))
    bv = bound_value(lam1, lam2, g.r_star, eps, order)
    try:
        sol = solve_field(g, k1, k2, src, **solve_kw)
        norms = {}
        for m in (1, 2):
            gm, parts = gap_scan(sol, m, return_parts=True)
            norms[f"gap_max_{m}"] = gm
            norms[f"segment_max_{m}"] = parts["segment"]
            norms[f"circle_max_{m}"] = parts["circle"]
    except NPDuetError as exc:
        return SweepRecord(eps, g.rho, lam1, lam2, order, math.nan, bv, g.r_star,
                           error=f"{type(exc).__name__}: {exc}")
    return SweepRecord(eps, g.rho, lam1, lam2, order, norms[f"gap_max_{order}"], bv, g.r_star,
                       norms, sol.harmonic_pair.N)


def sweep(template, k1, k2, src: SourceSpec | str, eps_list, order: int = 1,
          workers: int = 1, **solve_kw) -> list[SweepRecord]:
    """One record per eps, in the order given; failures are recorded, not raised.

    ``template`` is a ``DiskPair`` or a pair ``(r1, r2)``.  Records carry the
    gap maxima of both derivative orders in ``norms``.
    """
    if isinstance(template, DiskPair):
        r1, r2 = template.r1, template.r2
    else:
        r1, r2 = template
    if isinstance(src, str):
        src = SourceSpec.from_polynomial(src)
    eps_list = [float(e) for e in eps_list]
    if order not in (1, 2):
        raise DomainError("order must be 1 or 2")
    job = lambda e: _record(r1, r2, k1, k2, src, e, order, solve_kw)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(job, eps_list))
    return [job(e) for e in eps_list]


def _values(records, name: str) -> np.ndarray:
    out = []
    for r in records:
        out.append(r.gap_max if name == "gap_max" else r.norms.get(name, math.nan))
    return np.asarray(out, dtype=float)


def fit_exponent(records, field: str = "gap_max") -> tuple[float, float]:
    """Least-squares slope of ``ln(value)`` against ``ln(eps)`` and its ``r^2``."""
    recs = [r for r in records if r.ok]
    if len(recs) < 3:
        raise DomainError("an exponent fit needs at least three successful records")
    y = _values(recs, field)
    if not np.all(np.isfinite(y)) or np.any(y <= 0):
        raise DomainError(f"field {field!r} must be positive for a log-log fit")
    x = np.log([r.eps for r in recs])
    ly = np.log(y)
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = ly - A @ np.array([slope, icpt])
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), r2


def bound_ratio(records, n: int) -> list[float]:
    """``gap_max(order n) / bound_value(n)`` for each successful record."""
    recs = [r for r in records if r.ok]
    signs = {np.sign(4 * r.lambda1 * r.lambda2) for r in recs}
    if len(signs) > 1:
        raise ConfigurationError("records mix the same-sign and opposite-sign regimes")
    out = []
    for r in recs:
        key = f"gap_max_{n}"
        val = r.gap_max if r.order == n else r.norms.get(key)
        if val is None:
            raise ConfigurationError(f"records carry no gap maximum of order {n}")
        out.append(val / bound_value(r.lambda1, r.lambda2, r.r_star, r.eps, n))
    return out
