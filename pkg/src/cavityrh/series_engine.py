"""Kernel expansions, ring Fourier coefficients and cavity loading terms.

The mixed-boundary kernel is ``X(zeta) = (zeta - t1)^p (zeta - t2)^conj(p)``
with ``p = -1/2 - i lam`` and ``lam = ln(kappa) / 2 pi``. Its Taylor series
inside the unit circle has coefficients ``alpha_k`` and its expansion at
infinity ``sum beta_k zeta^-k`` starts with ``beta_1 = 1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .annulus_map import CompositeMap
from .csm_map import MappingError
from .geometry import MaterialParams


@dataclass(frozen=True)
class AnnulusCoeffs:
    kappa: float
    lam: float
    t1: complex
    t2: complex
    alpha_k: np.ndarray
    beta_k: np.ndarray
    c_k: np.ndarray


def binomial_series(p: complex, n: int) -> np.ndarray:
    """``c_k = binom(p, k)`` for ``k = 0..n`` by the running ratio."""
    c = np.empty(n + 1, dtype=complex)
    c[0] = 1.0
    for k in range(1, n + 1):
        c[k] = c[k - 1] * (p - k + 1) / k
    return c


def kernel_coeffs(kappa: float, theta1: float, theta2: float, M: int) -> AnnulusCoeffs:
    """Expansion coefficients of the kernel for ``k = 0..M``.

    ``theta1`` must lie in ``(-pi, 0)`` and ``theta2`` in ``(0, pi)`` so that
    the principal powers of ``t1`` and ``t2`` give the branch continuous
    across the free arc.
    """
    if not kappa > 1:
        raise ValueError("kappa must exceed 1")
    if M < 8:
        raise ValueError("truncation M must be at least 8")
    if not (-np.pi < theta1 < 0 < theta2 < np.pi):
        raise ValueError("joint angles must satisfy -pi < theta1 < 0 < theta2 < pi")
    lam = np.log(kappa) / (2 * np.pi)
    p = -0.5 - 1j * lam
    pc = np.conj(p)
    t1, t2 = np.exp(1j * theta1), np.exp(1j * theta2)
    c = binomial_series(p, M)
    cc = np.conj(c)
    k = np.arange(M + 1)
    # (zeta - t)^p = (-t)^p sum c_l (-zeta/t)^l; on the branch continuous
    # across the free arc the two (-1) powers combine to -1
    inner = np.convolve(c * (-1 / t1) ** k, cc * (-1 / t2) ** k)[:M + 1]
    alpha_k = -(t1 ** p) * (t2 ** pc) * inner
    outer = np.convolve(c * (-t1) ** k, cc * (-t2) ** k)[:M]
    beta_k = np.zeros(M + 1, dtype=complex)
    beta_k[1:] = outer
    return AnnulusCoeffs(kappa, lam, t1, t2, alpha_k, beta_k, c)


def _fourier(values: np.ndarray, M: int) -> np.ndarray:
    """Coefficients ``k = -M..M`` of uniformly sampled values."""
    P = len(values)
    F = np.fft.fft(values) / P
    return F[np.arange(-M, M + 1) % P]


def sample_circle(M: int) -> np.ndarray:
    P = 4 * M + 1
    return np.exp(2j * np.pi * np.arange(P) / P)


def ring_target(cmap: CompositeMap, rho: float, sig) -> np.ndarray:
    """``(z(rho sigma) - z(sigma / rho)) / conj(z'(rho sigma))``."""
    zs = rho * np.asarray(sig)
    return (cmap.z_of_zeta(zs) - cmap.z_of_zeta(np.asarray(sig) / rho)) * np.conj(cmap.inv_dz_dzeta(zs))


def ring_expand(cmap: CompositeMap, rho: float, M: int, P: int | None = None) -> np.ndarray:
    """Fourier coefficients ``f_k(rho)``, ``k = -M..M``, sampled at ``P >= 4M+1`` angles."""
    if not (cmap.alpha * (1 - 1e-12) <= rho < 1):
        raise ValueError(f"ring radius {rho} outside [alpha, 1)")
    P = 4 * M + 1 if P is None else P
    if P < 4 * M + 1:
        raise ValueError("need at least 4M+1 samples")
    sig = np.exp(2j * np.pi * np.arange(P) / P)
    F = ring_target(cmap, rho, sig)
    if not np.all(np.isfinite(F)):
        raise MappingError("singular map derivative on the sampled ring")
    return _fourier(F, M)


def eval_fourier(coef: np.ndarray, sig) -> np.ndarray:
    M = (len(coef) - 1) // 2
    k = np.arange(-M, M + 1)
    return np.exp(1j * np.outer(np.angle(sig), k)) @ coef


@dataclass(frozen=True)
class CavityRhs:
    g_k: np.ndarray  # k = -M..M
    I_k: np.ndarray  # k = 1..M
    J_k: np.ndarray  # k = 1..M
    K0: complex

    def g(self, k: int) -> complex:
        M = (len(self.g_k) - 1) // 2
        return self.g_k[k + M] if abs(k) <= M else 0j


def cavity_load(cmap: CompositeMap, k0: float, sig) -> np.ndarray:
    """``y (k0 i dy/dsigma + dx/dsigma)`` on the inner circle ``zeta = alpha sigma``."""
    al = cmap.alpha
    zs = al * sig
    z = cmap.z_of_zeta(zs)
    dz = cmap.dz_dzeta(zs)
    s2 = sig ** -2
    dx = 0.5 * al * (dz - np.conj(dz) * s2)
    idy = 0.5 * al * (dz + np.conj(dz) * s2)
    return z.imag * (k0 * idy + dx)


def cavity_rhs(cmap: CompositeMap, mat: MaterialParams, M: int) -> CavityRhs:
    sig = sample_circle(M)
    g = _fourier(cavity_load(cmap, mat.k0, sig), M)
    gam = mat.gamma
    k = np.arange(1, M + 1)
    gneg = np.append(g[M - k[:-1] - 1], 0.0)  # g_{-k-1}; g_{-M-1} is truncated
    I = gam * gneg / k
    J = -gam * g[M + k - 1] / k
    K0 = -gam * g[M - 1]
    return CavityRhs(g, I, J, complex(K0))
