"""Möbius map between the mapped half-plane and a concentric annulus.

Composed with the CSM map it carries the geomaterial onto the annulus
``alpha <= |zeta| <= 1``: the cavity wall goes to ``|zeta| = alpha`` and the
ground surface (after snapping) to ``|zeta| = 1`` with infinity at ``zeta = 1``.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .csm_map import CsmBackwardMap, CsmForwardMap, MappingError, fit_backward, solve_forward
from .geometry import CavitySpec, GeometryError

log = logging.getLogger(__name__)

H_MIN = 1.0 + 1e-6
VALIDITY_WARN = 0.05
VALIDITY_ERROR = 0.2


class SimulationQualityWarning(UserWarning):
    """The mapped ground surface departs noticeably from the unit circle."""


@dataclass(frozen=True)
class VerruijtMap:
    """``w(zeta) = -ia (1+zeta)/(1-zeta) + ih`` with unit cavity radius."""

    h: float
    a: float
    alpha: float
    r: float = 1.0

    def w_of_zeta(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        if np.any(zeta == 1):
            raise MappingError("zeta = 1 is the image of infinity")
        return -1j * self.a * (1 + zeta) / (1 - zeta) + 1j * self.h

    def zeta_of_w(self, w):
        w = np.asarray(w, dtype=complex)
        den = w - 1j * self.h - 1j * self.a
        if np.any(np.abs(den) <= 1e-14 * (self.h + self.a)):
            raise MappingError("w = ih + ia is the pole of the inverse")
        return (w - 1j * self.h + 1j * self.a) / den

    def dw_dzeta(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        return -2j * self.a / (1 - zeta) ** 2

    def u_of_zeta(self, zeta):
        """``1 / w(zeta)``, regular at ``zeta = 1``."""
        zeta = np.asarray(zeta, dtype=complex)
        return (1 - zeta) / (-1j * self.a * (1 + zeta) + 1j * self.h * (1 - zeta))


def build_verruijt(h: float) -> VerruijtMap:
    if not h >= H_MIN:
        raise GeometryError(f"surface offset h = {h} must exceed 1: cavity too close to the surface")
    alpha = 1.0 / (h + np.sqrt(h * h - 1.0))
    a = h * (1 - alpha ** 2) / (1 + alpha ** 2)
    return VerruijtMap(h, a, alpha)


@dataclass(frozen=True)
class CompositeMap:
    spec: CavitySpec
    fwd: CsmForwardMap
    bwd: CsmBackwardMap
    ver: VerruijtMap
    theta1: float
    theta2: float
    validity_metric: float
    h_left: float

    @property
    def alpha(self) -> float:
        return self.ver.alpha

    @property
    def t1(self) -> complex:
        return np.exp(1j * self.theta1)

    @property
    def t2(self) -> complex:
        return np.exp(1j * self.theta2)

    def z_of_zeta(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        if np.any(zeta == 1):
            raise MappingError("zeta = 1 maps to infinity")
        return self.bwd.eval_u(self.ver.u_of_zeta(zeta))

    def inv_dz_dzeta(self, zeta):
        """``1 / z'(zeta)``; vanishes at ``zeta = 1``."""
        zeta = np.asarray(zeta, dtype=complex)
        u = self.ver.u_of_zeta(zeta)
        return (1 - zeta) ** 2 / (-2j * self.ver.a * self.bwd.deriv_u(u))

    def dz_dzeta(self, zeta):
        zeta = np.asarray(zeta, dtype=complex)
        if np.any(zeta == 1):
            raise MappingError("zeta = 1 maps to infinity")
        return 1.0 / self.inv_dz_dzeta(zeta)

    def zeta_of_z(self, z):
        """Forward composite image through the charge map."""
        return self.ver.zeta_of_w(self.fwd(z))

    def invert(self, z, tol: float = 1e-10, max_iter: int = 50):
        """Solve ``z_of_zeta(zeta) = z`` by damped Newton from the forward image."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        zeta = np.atleast_1d(self.zeta_of_z(z)).astype(complex)
        scale = np.maximum(1.0, np.abs(z))
        res = self.z_of_zeta(zeta) - z
        for _ in range(max_iter):
            done = np.abs(res) <= tol * scale
            if done.all():
                break
            step = res * self.inv_dz_dzeta(zeta)
            lam = np.ones(len(z))
            active = ~done
            for _ in range(30):
                trial = np.where(active, zeta - lam * step, zeta)
                new = self.z_of_zeta(trial) - z
                worse = active & (np.abs(new) > np.abs(res))
                if not worse.any():
                    break
                lam = np.where(worse, lam / 2, lam)
            zeta, res = trial, new
        else:
            if np.any(np.abs(res) > tol * scale):
                raise MappingError("inverse map did not converge")
        rho = np.abs(zeta)
        if np.any(rho < self.alpha * (1 - 1e-9)) or np.any(rho > 1 + 1e-9):
            raise MappingError("point lies outside the simulated geomaterial")
        return zeta


def surface_deviation(fwd: CsmForwardMap, ver: VerruijtMap, spec: CavitySpec, n: int = 2001):
    """Max ``||zeta(w(x))| - 1|`` over free-surface samples between the joints."""
    xs = np.linspace(spec.T1.real, spec.T2.real, n) + 0j
    return float(np.abs(np.abs(ver.zeta_of_w(fwd(xs))) - 1).max())


def compose(spec: CavitySpec, k2: float = 1.2) -> CompositeMap:
    """Build both mapping steps and snap the joints onto the unit circle."""
    fwd = solve_forward(spec, k2)
    bwd = fit_backward(fwd, spec)
    wT1, wT2 = fwd(spec.T1), fwd(spec.T2)
    ver = build_verruijt(wT2.imag)
    metric = surface_deviation(fwd, ver, spec)
    log.info("surface deviation %.3e, Im w(T1) = %.6f, Im w(T2) = %.6f", metric, wT1.imag, wT2.imag)
    if metric > VALIDITY_ERROR:
        raise GeometryError(f"mapped surface deviates {metric:.3f} from the unit circle: "
                            "cavity too shallow for the annulus simulation")
    if metric > VALIDITY_WARN:
        warnings.warn(f"mapped surface deviates {metric:.3f} from the unit circle",
                      SimulationQualityWarning, stacklevel=2)
    th1 = float(np.angle(ver.zeta_of_w(wT1)))
    th2 = float(np.angle(ver.zeta_of_w(wT2)))
    if not (-np.pi < th1 < 0 < th2 < np.pi):
        raise GeometryError("joint images must straddle zeta = 1 with T1 below and T2 above")
    return CompositeMap(spec, fwd, bwd, ver, th1, th2, metric, float(wT1.imag))


def diagnostics(cmap: CompositeMap) -> dict:
    return {
        "h": cmap.ver.h,
        "a": cmap.ver.a,
        "alpha": cmap.alpha,
        "theta1": cmap.theta1,
        "theta2": cmap.theta2,
        "im_w_T1": cmap.h_left,
        "im_w_T2": cmap.ver.h,
        "validity_metric": cmap.validity_metric,
    }
