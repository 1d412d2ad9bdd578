"""Iterative solution of the truncated mixed-boundary coefficient systems.

Unknowns are ``d_n``, ``|n| <= N0``. The potentials' coefficients follow as
``A_k = sum alpha_{k-m} d_m`` and ``B_k = sum beta_{n-k} d_n``. Both linear
systems are upper triangular Toeplitz, depend only on the kernel, and are
factorized once per solve; every iteration only refreshes right-hand sides.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np
from scipy.linalg import lu_factor, lu_solve, toeplitz

from . import kernels
from .series_engine import AnnulusCoeffs, CavityRhs

log = logging.getLogger(__name__)

# instrumentation: total LU factorizations performed in this process
FACTORIZATIONS = 0


class SolverError(RuntimeError):
    """Raised when the iteration diverges or the systems are singular."""

    def __init__(self, msg, state=None):
        super().__init__(msg)
        self.state = state


@dataclass(frozen=True)
class SolverConfig:
    N0: int = 80
    M: int = 360
    eps: float = 1e-16
    rel_eps: float = 1e-14
    max_iters: int = 100
    x0: float = 1.0
    divergence_reps: int = 5

    def __post_init__(self):
        if self.N0 < 4:
            raise ValueError("N0 must be at least 4")
        if 2 * self.N0 + 1 > self.M:
            raise ValueError(f"need 2*N0+1 <= M, got N0={self.N0}, M={self.M}")
        if not self.eps > 0:
            raise ValueError("eps must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not self.x0 > 0:
            raise ValueError("x0 must be positive")


@dataclass
class Systems:
    N0: int
    neg_matrix: np.ndarray
    pos_matrix: np.ndarray
    neg_lu: tuple
    pos_lu: tuple
    A_op: np.ndarray
    B_op: np.ndarray
    cond_neg: float
    cond_pos: float
    factorizations: int = 2

    def solve(self, rhs_neg: np.ndarray, rhs_pos: np.ndarray) -> np.ndarray:
        """Return ``d_n`` for ``n = -N0..N0``."""
        N0 = self.N0
        d = np.empty(2 * N0 + 1, dtype=complex)
        d[N0 - 1::-1] = lu_solve(self.neg_lu, rhs_neg)  # d_{-1} .. d_{-N0}
        d[N0:] = lu_solve(self.pos_lu, rhs_pos)
        return d

    def potentials(self, d: np.ndarray):
        return self.A_op @ d, self.B_op @ d


def _factor(mat: np.ndarray):
    global FACTORIZATIONS
    FACTORIZATIONS += 1
    return lu_factor(mat, check_finite=True)


def assemble_systems(coeffs: AnnulusCoeffs, cfg: SolverConfig) -> Systems:
    """Build and factorize the two triangular systems.

    The negative system has rows for ``A_{-1} .. A_{-N0}`` over ``d_{-1} ..
    d_{-N0}`` with entries ``alpha_{n-r-1}``; the positive system has rows for
    ``B_{-1} .. B_{N0-1}`` over ``d_0 .. d_N0`` with entries ``beta_{n-r+1}``.
    """
    N0 = cfg.N0
    al, be = coeffs.alpha_k, coeffs.beta_k
    if len(al) < 2 * N0 + 2:
        raise ValueError("kernel coefficients are truncated below 2*N0+1")
    zero_n = np.zeros(N0, dtype=complex)
    neg = toeplitz(np.r_[al[0], zero_n[1:]], al[:N0])
    pos = toeplitz(np.r_[be[1], np.zeros(N0, complex)], be[1:N0 + 2])
    cond_neg = float(np.linalg.cond(neg))
    cond_pos = float(np.linalg.cond(pos))
    log.info("system condition estimates: %.3e (negative), %.3e (positive)", cond_neg, cond_pos)
    if not (np.isfinite(cond_neg) and np.isfinite(cond_pos)):
        raise SolverError("singular coefficient system")
    L = 2 * N0 + 1
    A_op = toeplitz(al[:L], np.r_[al[0], np.zeros(L - 1, complex)])
    B_op = toeplitz(np.r_[be[0], np.zeros(L - 1, complex)], be[:L])
    return Systems(N0, neg, pos, _factor(neg), _factor(pos), A_op, B_op, cond_neg, cond_pos)


@dataclass
class SolverState:
    d: np.ndarray
    A: np.ndarray
    B: np.ndarray
    K0: complex
    kappa: float
    iterations: int
    residual_history: List[float]
    stop_reason: str
    cond_neg: float = float("nan")
    cond_pos: float = float("nan")
    config: dict = field(default_factory=dict)

    @property
    def N0(self) -> int:
        return (len(self.d) - 1) // 2

    def coef(self, arr: np.ndarray, k: int) -> complex:
        N0 = self.N0
        return arr[k + N0] if abs(k) <= N0 else 0j

    @property
    def A_m1(self) -> complex:
        return self.A[self.N0 - 1]

    @property
    def B_m1(self) -> complex:
        return self.B[self.N0 - 1]

    @property
    def converged(self) -> bool:
        return self.stop_reason in ("tolerance", "relative")

    def report(self) -> dict:
        return {
            "iterations": self.iterations,
            "stop_reason": self.stop_reason,
            "residual_history": [float(r) for r in self.residual_history],
            "condition_estimates": {"negative": self.cond_neg, "positive": self.cond_pos},
            "A_-1": [self.A_m1.real, self.A_m1.imag],
            "B_-1": [self.B_m1.real, self.B_m1.imag],
            "K0": [self.K0.real, self.K0.imag],
            "config": self.config,
        }


def _first_rhs(rhs: CavityRhs, alpha: float, kappa: float, N0: int):
    k = np.arange(1, N0 + 1)
    ak = alpha ** k
    tA = np.empty(N0, dtype=complex)
    tA[0] = rhs.K0 / (1 + kappa)
    tA[1:] = -(k * ak * rhs.I_k[:N0])[:-1]
    tB = np.empty(N0 + 1, dtype=complex)
    tB[0] = -kappa * rhs.K0 / (1 + kappa)
    tB[1:] = -k * ak * rhs.J_k[:N0]
    return tA, tB


def _next_rhs(A, B, u, alpha, N0):
    k = np.arange(1, N0 + 1)
    a2k = alpha ** (2 * k)
    c = kernels.conj_correlate(u, A, -N0, N0)  # c_j, j = -N0..N0
    tA = np.zeros(N0, dtype=complex)
    kk = k[:-1]
    tA[1:] = a2k[:-1] * B[N0 - kk - 1] + kk * a2k[:-1] * c[N0 - kk]
    tB = np.zeros(N0 + 1, dtype=complex)
    tB[1:] = a2k * A[N0 + k - 1] + k * c[N0 + k]
    return tA, tB


def iterate(systems: Systems, rhs: CavityRhs, f_alpha: np.ndarray, alpha: float,
            kappa: float, cfg: SolverConfig) -> SolverState:
    """Accumulate ``d = sum_q d^(q)`` until the correction is negligible.

    ``f_alpha`` holds the ring coefficients on ``|zeta| = alpha`` for
    ``k = -M..M``. Only ``|l| <= 2 N0`` of them enter the convolutions.
    """
    N0 = cfg.N0
    M = (len(f_alpha) - 1) // 2
    L = 2 * N0
    if M < L:
        raise ValueError("ring expansion truncated below 2*N0")
    l = np.arange(-L, L + 1)
    with np.errstate(over="raise"):
        u = alpha ** l.astype(float) * f_alpha[M - L:M + L + 1]

    dq = systems.solve(*_first_rhs(rhs, alpha, kappa, N0))
    d = dq.copy()
    hist = [float(np.abs(dq).max())]
    first = hist[0]
    stop = None
    rising = 0
    if first <= cfg.eps:
        stop = "tolerance"
    q = 0
    while stop is None:
        if q >= cfg.max_iters:
            stop = "cap"
            break
        A, B = systems.potentials(dq)
        dq = systems.solve(*_next_rhs(A, B, u, alpha, N0))
        d += dq
        q += 1
        r = float(np.abs(dq).max())
        rising = rising + 1 if r > hist[-1] else 0
        hist.append(r)
        if not np.isfinite(r) or rising >= cfg.divergence_reps:
            A, B = systems.potentials(d)
            state = SolverState(d, A, B, rhs.K0, kappa, q, hist, "diverged",
                                systems.cond_neg, systems.cond_pos, _cfg_echo(cfg))
            raise SolverError(f"iteration diverged after {q} passes", state)
        if r <= cfg.eps:
            stop = "tolerance"
        elif r <= cfg.rel_eps * first:
            stop = "relative"
    A, B = systems.potentials(d)
    log.info("iteration stopped after %d passes (%s), last correction %.3e", q, stop, hist[-1])
    return SolverState(d, A, B, rhs.K0, kappa, q, hist, stop,
                       systems.cond_neg, systems.cond_pos, _cfg_echo(cfg))


def _cfg_echo(cfg: SolverConfig) -> dict:
    return {"N0": cfg.N0, "M": cfg.M, "eps": cfg.eps, "rel_eps": cfg.rel_eps,
            "max_iters": cfg.max_iters, "x0": cfg.x0}


def check_equilibrium(state: SolverState, W: float, gamma: float, kappa: float) -> dict:
    """Relative residuals of the resultant and single-valuedness conditions."""
    ref = -1j * W * gamma
    Am1, Bm1 = state.A_m1, state.B_m1

    def rel(x, y):
        s = abs(y)
        return float(abs(x - y) / s) if s > 0 else float(abs(x - y))

    return {
        "A_-1": rel(Am1, ref / (1 + kappa)),
        "B_-1": rel(Bm1, -kappa * ref / (1 + kappa)),
        "A_-1 - B_-1": rel(Am1 - Bm1, ref),
        "single_valuedness": float(abs(kappa * Am1 + Bm1) / abs(Am1)) if Am1 != 0 else float(abs(Bm1)),
        "K0": rel(state.K0, ref),
    }
