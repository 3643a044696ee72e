"""Evaluation of truncated power series ``sum_{n>=1} c_n x**n`` and derivatives."""

from __future__ import annotations

import numpy as np

BATCH_ENTRIES = 1 << 21


def power_sums(coef, x, order: int = 0):
    """Return ``(P, P', P'')`` up to ``order`` for ``P(x) = sum_{n=1}^N coef[n-1] x**n``.

    Powers are formed as ``exp(k log x)`` in batches of points and reduced with
    numpy's pairwise summation in ascending ``n``.  ``x = 0`` is allowed.
    """
    coef = np.asarray(coef, dtype=complex)
    x = np.asarray(x, dtype=complex)
    shape = x.shape
    xf = x.ravel()
    N = coef.size
    out = [np.zeros(xf.shape, dtype=complex) for _ in range(order + 1)]
    if N == 0 or xf.size == 0:
        return tuple(o.reshape(shape) for o in out)
    n = np.arange(1, N + 1, dtype=float)
    weights = [coef, coef * n, coef * n * (n - 1)]
    zero = xf == 0
    logx = np.log(np.where(zero, 1.0, xf))
    step = max(1, BATCH_ENTRIES // N)
    for lo in range(0, xf.size, step):
        sl = slice(lo, lo + step)
        lx = logx[sl, None]
        # x**(n-1) for n = 1..N; the power x**0 = 1 covers x = 0
        pw = np.exp((n - 1)[None, :] * lx)
        pw[zero[sl], 1:] = 0.0
        pw[zero[sl], 0] = 1.0
        xs = xf[sl]
        out[0][sl] = xs * (pw * weights[0]).sum(axis=1)
        if order >= 1:
            out[1][sl] = (pw * weights[1]).sum(axis=1)
        if order >= 2:
            # x**(n-2) = x**(n-1) / x, written without division for x = 0
            w2 = weights[2][1:]
            out[2][sl] = (pw[:, :-1] * w2).sum(axis=1) if N > 1 else 0.0
    return tuple(o.reshape(shape) for o in out)


def wirtinger_to_real(Wz, Wzz=None):
    """Gradient and Hessian of ``Re W`` from the complex derivatives of analytic ``W``.

    Returns the gradient as ``u_x + i u_y`` and, when ``Wzz`` is given, the
    triple ``(u_xx, u_xy, u_yy)``.
    """
    grad = np.conj(Wz)
    if Wzz is None:
        return grad
    return grad, (Wzz.real, -Wzz.imag, -Wzz.real)
