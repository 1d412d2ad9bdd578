"""Exterior conformal map of the cavity onto the exterior of the unit circle.

The forward direction uses logarithmic charges placed just inside the
cavity wall; the backward direction is a Laurent-type series fitted to
the images of the collocation points.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .geometry import CavitySpec, GeometryError, point_in_polygon

log = logging.getLogger(__name__)

COND_WARN = 1e10


class MappingError(RuntimeError):
    """Singular or invalid mapping system."""


class ConditionWarning(UserWarning):
    pass


def _check_condition(cond: float, what: str) -> None:
    log.info("%s condition estimate %.3e", what, cond)
    if not np.isfinite(cond):
        raise MappingError(f"{what} is singular (condition estimate {cond})")
    if cond > COND_WARN:
        warnings.warn(f"{what} is ill-conditioned (condition estimate {cond:.3e})",
                      ConditionWarning, stacklevel=3)


@dataclass(frozen=True)
class CsmForwardMap:
    """``w = (z - zc) exp(Gamma + sum Q_k log((z - Z_k)/(z - z0)))``."""

    gamma: float
    charge_points: np.ndarray
    charges: np.ndarray
    zc: complex
    z0: complex
    cond: float = float("nan")

    def _sums(self, z):
        z = np.asarray(z, dtype=complex)
        flat = np.atleast_1d(z).ravel()
        if np.any(np.isin(flat, self.charge_points)) or np.any(flat == self.z0):
            raise MappingError("evaluation point coincides with a charge point or the anchor")
        slog, sinv = kernels.charge_sums(flat, self.charge_points, self.charges, self.z0)
        return z, flat, slog, sinv

    def __call__(self, z):
        z, flat, slog, _ = self._sums(z)
        w = (flat - self.zc) * np.exp(self.gamma + slog)
        return w.reshape(z.shape) if z.ndim else complex(w[0])

    def deriv(self, z):
        """Analytic ``dw/dz``."""
        z, flat, slog, sinv = self._sums(z)
        w = (flat - self.zc) * np.exp(self.gamma + slog)
        dw = w * (1.0 / (flat - self.zc) + sinv)
        return dw.reshape(z.shape) if z.ndim else complex(dw[0])


@dataclass(frozen=True)
class CsmBackwardMap:
    """``z = sum_{k=-1}^{n-2} q_k w^-k``, stored with ``q[0] = q_{-1}``."""

    q: np.ndarray
    cond: float = float("nan")

    @property
    def order(self) -> np.ndarray:
        return np.arange(-1, len(self.q) - 1)

    def eval_u(self, u):
        """Series in ``u = 1/w``: ``q_{-1}/u + sum_{k>=0} q_k u^k``."""
        u = np.asarray(u, dtype=complex)
        flat = np.atleast_1d(u).ravel()
        if np.any(flat == 0):
            raise MappingError("backward series is singular at w = infinity")
        z = self.q[0] / flat + kernels.horner(self.q[1:], flat)
        return z.reshape(u.shape) if u.ndim else complex(z[0])

    def deriv_u(self, u):
        """``dz/dw`` written in ``u = 1/w``; finite at ``u = 0`` where it equals ``q_{-1}``."""
        u = np.asarray(u, dtype=complex)
        flat = np.atleast_1d(u).ravel()
        # -k q_k w^(-k-1) = -k q_k u^(k+1)
        coef = -self.order * self.q
        d = kernels.horner(coef, flat)
        return d.reshape(u.shape) if u.ndim else complex(d[0])

    def __call__(self, w):
        w = np.asarray(w, dtype=complex)
        if np.any(w == 0):
            raise MappingError("backward series is singular at w = 0")
        return self.eval_u(1.0 / w)

    def deriv(self, w):
        w = np.asarray(w, dtype=complex)
        if np.any(w == 0):
            raise MappingError("backward series is singular at w = 0")
        return self.deriv_u(1.0 / w)


def charge_points(points: np.ndarray, k2: float) -> np.ndarray:
    """Offset each collocation point by ``k2 h_k`` along the inward normal.

    ``h_k`` is the mean of the two adjacent edge lengths and neighbours wrap
    cyclically. For a clockwise trace ``arg(z_{k+1} - z_{k-1}) - pi/2`` points
    into the cavity.
    """
    nxt, prv = np.roll(points, -1), np.roll(points, 1)
    h = 0.5 * (np.abs(nxt - points) + np.abs(points - prv))
    theta = np.angle(nxt - prv) - np.pi / 2
    return points + k2 * h * np.exp(1j * theta)


def solve_forward(spec: CavitySpec, k2: float) -> CsmForwardMap:
    """Solve the collocation system for the charges and the Robin constant."""
    pts = spec.points
    n = len(pts)
    if n < 16:
        raise GeometryError("need at least 16 collocation points")
    if not k2 > 0:
        raise GeometryError("assignment factor must be positive")
    Z = charge_points(pts, k2)
    outside = [k for k, zk in enumerate(Z) if not point_in_polygon(zk, pts)]
    if outside:
        warnings.warn(f"{len(outside)} charge points fall outside the cavity trace",
                      UserWarning, stacklevel=2)
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = np.log(np.abs(pts[:, None] - Z[None, :]))
    A[:n, n] = 1.0
    A[n, :n] = 1.0
    rhs = np.zeros(n + 1)
    rhs[:n] = -np.log(np.abs(pts - spec.zc))
    cond = float(np.linalg.cond(A))
    _check_condition(cond, "charge system")
    sol = np.linalg.solve(A, rhs)
    return CsmForwardMap(float(sol[n]), Z, sol[:n], spec.zc, spec.zc, cond)


def fit_backward(fmap: CsmForwardMap, spec: CavitySpec) -> CsmBackwardMap:
    """Interpolate the inverse series through the collocation images."""
    pts = spec.points
    n = len(pts)
    w = fmap(pts)
    ks = np.arange(-1, n - 1)
    V = w[:, None] ** (-ks[None, :])
    cond = float(np.linalg.cond(V))
    _check_condition(cond, "backward interpolation system")
    # SVD with the default cutoff: exact for well-conditioned nodes, and the
    # minimum-norm interpolant when collocation images cluster on the circle
    q = np.linalg.lstsq(V, pts, rcond=None)[0]
    if q[0] == 0:
        raise MappingError("leading backward coefficient vanished")
    return CsmBackwardMap(q, cond)


def roundtrip_error(fmap: CsmForwardMap, bmap: CsmBackwardMap, z) -> np.ndarray:
    return np.abs(bmap(fmap(z)) - np.asarray(z))


def diagnostics(fmap: CsmForwardMap, bmap: CsmBackwardMap, spec: CavitySpec) -> dict:
    rt = roundtrip_error(fmap, bmap, spec.points)
    return {
        "Gamma": fmap.gamma,
        "Q": fmap.charges.tolist(),
        "Z": [[z.real, z.imag] for z in fmap.charge_points],
        "q": [[c.real, c.imag] for c in bmap.q],
        "sum_Q": float(fmap.charges.sum()),
        "collocation_modulus_error": float(np.abs(np.abs(fmap(spec.points)) - 1).max()),
        "roundtrip_max_err": float(rt.max()),
        "condition_estimates": {"charge_system": fmap.cond, "backward_system": bmap.cond},
    }
