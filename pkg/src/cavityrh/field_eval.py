"""Stress and displacement fields from solved potential coefficients.

Fields on a ring ``|zeta| = rho`` are trigonometric series in
``sigma = exp(i theta)`` truncated to ``|k| <= N0``. With filtering on, the
coefficient of every ``sigma^k`` (convolution terms included) is scaled by
the Lanczos factor ``sinc(k / N0)``.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import kernels
from .annulus_map import CompositeMap
from .geometry import MaterialParams
from .rh_solver import SolverState
from .series_engine import ring_expand


def lanczos_weights(N0: int) -> np.ndarray:
    """``L_k = sin(k pi / N0) / (k pi / N0)`` for ``k = -N0..N0``, ``L_0 = 1``."""
    if N0 < 1:
        raise ValueError("N0 must be positive")
    return np.sinc(np.arange(-N0, N0 + 1) / N0)


def _shifted(arr: np.ndarray, shift: int) -> np.ndarray:
    """``out[k] = arr[k + shift]`` over the same index range, zero outside."""
    out = np.zeros_like(arr)
    n = len(arr)
    if shift >= 0:
        out[:n - shift] = arr[shift:]
    else:
        out[-shift:] = arr[:n + shift]
    return out


def rigid_constant(state: SolverState, weights: Optional[np.ndarray] = None) -> complex:
    """Constant that pins the displacement to zero at ``zeta = 1``."""
    N0 = state.N0
    k = np.arange(-N0, N0 + 1)
    nz = k != 0
    terms = state.kappa * _shifted(state.A, -1) + _shifted(state.B, -1)
    terms = terms[nz] / k[nz]
    if weights is not None:
        terms = terms * weights[nz]
    return complex(-terms.sum())


@dataclass
class RingCoefficients:
    """Coefficients of ``sigma^k`` for the three ring series."""

    rho: float
    traction: np.ndarray  # (sigma_rho + i tau) * z'
    trace: np.ndarray     # (sigma_rho + sigma_theta) * z' / 4 before Re
    disp: np.ndarray      # 2G (u + i v) less constant and log terms
    const: complex


def ring_coefficients(state: SolverState, rho: float, f_rho: Optional[np.ndarray],
                      weights: Optional[np.ndarray] = None) -> RingCoefficients:
    N0 = state.N0
    A, B, kap = state.A, state.B, state.kappa
    k = np.arange(-N0, N0 + 1)
    rk = rho ** k.astype(float)
    trac = A * rk - B * rho ** (-k - 2.0)
    disp = np.zeros(2 * N0 + 1, dtype=complex)
    nz = k != 0
    disp[nz] = (kap * _shifted(A, -1)[nz] * rk[nz] + _shifted(B, -1)[nz] / rk[nz]) / k[nz]
    if f_rho is not None:
        c1 = kernels.conj_correlate(f_rho, A * rho ** (k - 1.0), -N0 + 1, N0 + 1)
        trac = trac + (k + 1) * c1
        c2 = kernels.conj_correlate(f_rho, A * rk, -N0, N0)
        disp = disp - c2
    trace = A * rk
    C0 = rigid_constant(state, weights)
    const = C0 + (kap * state.A_m1 - state.B_m1) * np.log(rho)
    if weights is not None:
        trac, trace, disp = trac * weights, trace * weights, disp * weights
    return RingCoefficients(rho, trac, trace, disp, const)


def eval_series(coef: np.ndarray, sig: np.ndarray) -> np.ndarray:
    """``sum_{k=-N..N} c_k sigma^k`` for ``|sigma| = 1``."""
    N = (len(coef) - 1) // 2
    sig = np.asarray(sig, dtype=complex)
    return sig ** (-N) * kernels.horner(coef, sig)


@dataclass
class FieldSample:
    """Fields at a set of annulus points; excavation parts unless ``total``."""

    zeta: np.ndarray
    z: np.ndarray
    sigma_rho: np.ndarray
    sigma_theta: np.ndarray
    tau_rhotheta: np.ndarray
    sigma_x: np.ndarray
    sigma_y: np.ndarray
    tau_xy: np.ndarray
    u: np.ndarray
    v: np.ndarray
    filtered: bool
    total: bool = False

    @property
    def rho(self) -> np.ndarray:
        return np.abs(self.zeta)

    @property
    def theta(self) -> np.ndarray:
        return np.mod(np.angle(self.zeta), 2 * np.pi)


def _rotation(zeta: np.ndarray, idz: np.ndarray) -> np.ndarray:
    """``exp(-2i phi)`` with ``phi = arg(zeta z')``; 1 where undefined."""
    num = np.conj(zeta) * idz
    den = zeta * np.conj(idz)
    out = np.ones_like(zeta)
    ok = np.abs(den) > 0
    out[ok] = num[ok] / den[ok]
    return out


def ring_fields(state: SolverState, cmap: CompositeMap, rho: float, theta, mat: MaterialParams,
                filter: bool = True, M: int = 360, f_rho: Optional[np.ndarray] = None) -> FieldSample:
    """Excavation fields on ``|zeta| = rho`` at polar angles ``theta``.

    ``theta = 0`` on ``rho = 1`` is the image of infinity; stresses there
    take their limiting value and the physical coordinate is NaN.
    """
    al = cmap.alpha
    if not (al * (1 - 1e-12) <= rho <= 1.0):
        raise ValueError(f"ring radius {rho} outside [alpha, 1]")
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    sig = np.exp(1j * theta)
    zeta = rho * sig
    if rho < 1.0 and f_rho is None:
        f_rho = ring_expand(cmap, rho, M)
    weights = lanczos_weights(state.N0) if filter else None
    rc = ring_coefficients(state, rho, f_rho if rho < 1.0 else None, weights)

    idz = cmap.inv_dz_dzeta(zeta)
    srt = idz * eval_series(rc.traction, sig)
    tr = 4.0 * np.real(idz * eval_series(rc.trace, sig))
    disp = (eval_series(rc.disp, sig) + rc.const) / (2.0 * mat.shear_modulus)

    inf = zeta == 1
    z = np.full(zeta.shape, np.nan + 1j * np.nan)
    if (~inf).any():
        z[~inf] = cmap.z_of_zeta(zeta[~inf])
    sr, trt = srt.real, srt.imag
    st = tr - sr
    rot = _rotation(zeta, idz)
    dev = (st - sr + 2j * trt) * rot  # sigma_y - sigma_x + 2i tau_xy
    sx = 0.5 * (tr - dev.real)
    sy = 0.5 * (tr + dev.real)
    txy = 0.5 * dev.imag
    return FieldSample(zeta, z, sr, st, trt, sx, sy, txy, disp.real, disp.imag, filter)


def initial_curvilinear(zeta: np.ndarray, z: np.ndarray, idz: np.ndarray, mat: MaterialParams):
    """Geostatic stress resolved on the ``(rho, theta)`` frame at each point."""
    y = np.where(np.isfinite(z), z.imag, 0.0)
    sx, sy = mat.k0 * mat.gamma * y, mat.gamma * y
    dev = (sy - sx) / _rotation(zeta, idz)  # sigma_theta - sigma_rho + 2i tau
    tr = sx + sy
    sr = 0.5 * (tr - dev.real)
    return sr, tr - sr, 0.5 * dev.imag


def add_initial(fs: FieldSample, cmap: CompositeMap, mat: MaterialParams) -> FieldSample:
    """Total fields: excavation parts plus the geostatic state."""
    if fs.total:
        return fs
    idz = cmap.inv_dz_dzeta(fs.zeta)
    sr0, st0, t0 = initial_curvilinear(fs.zeta, fs.z, idz, mat)
    y = np.where(np.isfinite(fs.z), fs.z.imag, 0.0)
    return replace(fs, sigma_rho=fs.sigma_rho + sr0, sigma_theta=fs.sigma_theta + st0,
                   tau_rhotheta=fs.tau_rhotheta + t0,
                   sigma_x=fs.sigma_x + mat.k0 * mat.gamma * y,
                   sigma_y=fs.sigma_y + mat.gamma * y, total=True)


def physical_fields(state: SolverState, cmap: CompositeMap, points, mat: MaterialParams,
                    filter: bool = True, M: int = 360, total: bool = True,
                    annulus: bool = False) -> FieldSample:
    """Fields at physical points (or annulus points when ``annulus``).

    Physical points are pulled back by Newton inversion of the composite
    map; each distinct ring radius gets its own ring expansion.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    zeta = pts if annulus else cmap.invert(pts)
    rho = np.abs(zeta)
    if np.any(rho < cmap.alpha * (1 - 1e-9)) or np.any(rho > 1 + 1e-12):
        raise ValueError("point outside the simulated geomaterial")
    rho = np.clip(rho, cmap.alpha, 1.0)
    out = None
    for r in np.unique(rho):
        sel = rho == r
        fs = ring_fields(state, cmap, float(r), np.angle(zeta[sel]), mat, filter, M)
        if out is None:
            out = FieldSample(*[np.empty(len(pts), dtype=getattr(fs, n).dtype) for n in
                                ("zeta", "z", "sigma_rho", "sigma_theta", "tau_rhotheta",
                                 "sigma_x", "sigma_y", "tau_xy", "u", "v")], filter)
        for n in ("zeta", "z", "sigma_rho", "sigma_theta", "tau_rhotheta",
                  "sigma_x", "sigma_y", "tau_xy", "u", "v"):
            getattr(out, n)[sel] = getattr(fs, n)
    if not annulus:
        out.z = pts
    return add_initial(out, cmap, mat) if total else out
