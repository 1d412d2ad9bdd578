"""Pure numpy implementations of the hot kernels.

Signatures match the compiled ``_kernels`` module exactly.
"""
import numpy as np


def charge_sums(x, Z, Q, z0):
    """Return ``sum Q_k log((x-Z_k)/(x-z0))`` and ``sum Q_k (1/(x-Z_k) - 1/(x-z0))``."""
    x = np.ascontiguousarray(x, dtype=complex)
    dz = x[:, None] - Z[None, :]
    d0 = (x - z0)[:, None]
    slog = np.log(dz / d0) @ Q
    sinv = (1.0 / dz - 1.0 / d0) @ Q
    return slog, sinv


def horner(c, x):
    """Evaluate ``sum_j c_j x^j`` for complex coefficients at every ``x``."""
    x = np.ascontiguousarray(x, dtype=complex)
    out = np.zeros_like(x)
    for cj in c[::-1]:
        out = out * x + cj
    return out


def conj_correlate(u, a, jlo, jhi):
    """``c_j = sum_m u[m + j + M] * conj(a[m + N])`` for ``j = jlo .. jhi``.

    ``u`` is indexed ``-M .. M`` and ``a`` is indexed ``-N .. N``; entries of
    ``u`` outside its range count as zero.
    """
    M = (len(u) - 1) // 2
    N = (len(a) - 1) // 2
    pad = max(0, N + max(abs(jlo), abs(jhi)) - M)
    if pad:
        u = np.concatenate([np.zeros(pad, complex), u, np.zeros(pad, complex)])
        M += pad
    full = np.correlate(u, a, mode="valid")
    # full[k] pairs u[n + k] with a[n]; shift j sits at k = j + M - N
    return full[jlo + M - N: jhi + M - N + 1]
