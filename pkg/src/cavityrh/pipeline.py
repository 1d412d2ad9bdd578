"""End-to-end solve and boundary residual diagnostics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .annulus_map import CompositeMap, compose
from .field_eval import FieldSample, initial_curvilinear, ring_fields
from .geometry import CavitySpec, MaterialParams, area_and_resultant
from .rh_solver import (SolverConfig, SolverState, Systems, assemble_systems,
                        check_equilibrium, iterate)
from .series_engine import AnnulusCoeffs, CavityRhs, cavity_rhs, kernel_coeffs, ring_expand

JOINT_EXCLUSION_DEG = 5.0


@dataclass
class Solution:
    spec: CavitySpec
    mat: MaterialParams
    cfg: SolverConfig
    cmap: CompositeMap
    coeffs: AnnulusCoeffs
    systems: Systems
    rhs: CavityRhs
    f_alpha: np.ndarray
    state: SolverState
    W: float

    @property
    def alpha(self) -> float:
        return self.cmap.alpha

    def ring(self, rho: float, theta, filter: bool = True) -> FieldSample:
        f = self.f_alpha if rho == self.alpha else None
        return ring_fields(self.state, self.cmap, rho, theta, self.mat, filter, self.cfg.M, f)

    def cavity(self, theta, filter: bool = True) -> FieldSample:
        return self.ring(self.alpha, theta, filter)

    def surface(self, theta, filter: bool = True) -> FieldSample:
        return self.ring(1.0, theta, filter)

    def equilibrium(self) -> dict:
        return check_equilibrium(self.state, self.W, self.mat.gamma, self.mat.kappa)

    def arcs(self):
        """Angular ranges of the free arc and the constrained arc on ``|zeta| = 1``."""
        th1, th2 = self.cmap.theta1, self.cmap.theta2
        return (th2, th1 + 2 * np.pi), (th1, th2)

    def residuals(self, filter: bool = True, n: int = 721,
                  exclusion_deg: float = JOINT_EXCLUSION_DEG) -> dict:
        """Boundary-condition residuals on the surface arcs and the cavity.

        Each arc loses ``min(exclusion_deg, arc / 4)`` at both joints, so
        very short constrained arcs keep their central half.
        """
        mat = self.mat
        H = self.spec.depth
        out = {}
        free, cons = self.arcs()
        kept = {}
        for name, (lo, hi) in (("free", free), ("constrained", cons)):
            cut = min(np.radians(exclusion_deg), 0.25 * (hi - lo))
            kept[name] = (lo + cut, hi - cut, float(np.degrees(cut)))
        lo, hi, cut = kept["free"]
        fs = self.surface(np.linspace(lo, hi, n), filter)
        out["free_traction_max"] = float(np.hypot(fs.sigma_rho, fs.tau_rhotheta).max())
        out["free_traction_limit"] = 0.05 * mat.gamma * H
        out["free_exclusion_deg"] = cut
        lo, hi, cut = kept["constrained"]
        th = np.linspace(lo, hi, n)
        th = th[th != 0.0]
        fs = self.surface(th, filter)
        out["constrained_displacement_max"] = float(np.hypot(fs.u, fs.v).max())
        out["constrained_displacement_limit"] = 0.05 * mat.gamma * H * H / (2 * mat.shear_modulus)
        out["constrained_exclusion_deg"] = cut
        th = (np.arange(n) + 0.5) * 2 * np.pi / n
        fs = self.cavity(th, filter)
        idz = self.cmap.inv_dz_dzeta(fs.zeta)
        sr0, _, t0 = initial_curvilinear(fs.zeta, fs.z, idz, mat)
        target = -(sr0 + 1j * t0)
        got = fs.sigma_rho + 1j * fs.tau_rhotheta
        nrm = np.linalg.norm(target)
        out["cavity_traction_rel_l2"] = float(np.linalg.norm(got - target) / nrm) if nrm > 0 \
            else float(np.linalg.norm(got))
        far = self.surface(np.array([0.0]), filter)
        out["far_field_traction"] = float(np.hypot(far.sigma_rho, far.tau_rhotheta)[0])
        out["far_field_displacement"] = float(np.hypot(far.u, far.v)[0] * 2 * mat.shear_modulus)
        out["filtered"] = filter
        return out


def solve(spec: CavitySpec, mat: MaterialParams, cfg: SolverConfig, k2: float = 1.2,
          cmap: Optional[CompositeMap] = None) -> Solution:
    """Map, expand, assemble and iterate for one cavity and material."""
    if cmap is None:
        cmap = compose(spec, k2)
    W, _ = area_and_resultant(spec, mat.gamma)
    coeffs = kernel_coeffs(mat.kappa, cmap.theta1, cmap.theta2, cfg.M)
    systems = assemble_systems(coeffs, cfg)
    rhs = cavity_rhs(cmap, mat, cfg.M)
    f_alpha = ring_expand(cmap, cmap.alpha, cfg.M)
    state = iterate(systems, rhs, f_alpha, cmap.alpha, mat.kappa, cfg)
    return Solution(spec, mat, cfg, cmap, coeffs, systems, rhs, f_alpha, state, W)
