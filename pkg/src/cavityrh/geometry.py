"""Cavity boundaries, geostatic initial stress and excavation loads.

Units are metres, kPa and kN/m throughout. Ground surface is the line
``y = 0`` and the geomaterial occupies ``y <= 0``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np


class GeometryError(ValueError):
    """Raised for invalid cavity definitions or material constants."""


PRESET_DEPTHS = {"case1": 10.0, "case2": 8.0, "case3": 6.0, "case4": 5.2}
# joint offsets of the composite-ellipse presets are scaled by the case1 depth
PRESET_LENGTH_SCALE = 10.0

# analytic presets are densified to this many samples for the area datum
_DENSE_SAMPLES = 2 ** 15


@dataclass(frozen=True)
class MaterialParams:
    """Elastic and gravitational constants.

    Parameters
    ----------
    E : float
        Elastic modulus in MPa.
    nu : float
        Poisson ratio.
    gamma : float
        Unit weight in kPa/m; the vertical geostatic stress is ``gamma * y``.
    k0 : float
        Lateral stress coefficient.
    plane_mode : str
        ``"plane_strain"`` or ``"plane_stress"``.
    """

    E: float = 20.0
    nu: float = 0.3
    gamma: float = 20.0
    k0: float = 0.8
    plane_mode: str = "plane_strain"

    def __post_init__(self):
        if not self.E > 0:
            raise GeometryError(f"E must be positive, got {self.E}")
        if not 0.0 <= self.nu < 0.5:
            raise GeometryError(f"nu must lie in [0, 0.5), got {self.nu}")
        if self.gamma < 0:
            raise GeometryError(f"gamma must be non-negative, got {self.gamma}")
        if not self.k0 > 0:
            raise GeometryError(f"k0 must be positive, got {self.k0}")
        if self.plane_mode not in ("plane_strain", "plane_stress"):
            raise GeometryError(f"unknown plane_mode {self.plane_mode!r}")

    @property
    def kappa(self) -> float:
        if self.plane_mode == "plane_strain":
            return 3.0 - 4.0 * self.nu
        return (3.0 - self.nu) / (1.0 - self.nu)

    @property
    def shear_modulus(self) -> float:
        """Shear modulus in kPa."""
        return self.E * 1e3 / (2.0 * (1.0 + self.nu))

    @property
    def lam(self) -> float:
        """Exponent parameter ``ln(kappa) / 2 pi`` of the mixed-boundary kernel."""
        return np.log(self.kappa) / (2.0 * np.pi)

    def scaled(self, factor: float) -> "MaterialParams":
        return MaterialParams(self.E, self.nu, self.gamma * factor, self.k0, self.plane_mode)


@dataclass(frozen=True)
class StressTriple:
    sx: float
    sy: float
    txy: float


@dataclass
class CavitySpec:
    """Clockwise collocation points of a cavity plus surface joints.

    Attributes
    ----------
    points : ndarray of complex
        Boundary samples ``z_i`` traced clockwise.
    zc : complex
        Interior reference point used as the mapping centre.
    T1, T2 : complex
        Left and right joints on the ground surface separating the free
        segment from the constrained far field.
    trace : ndarray of complex, optional
        Dense boundary used for the area datum. Defaults to ``points``.
    length_scale : float, optional
        Length that converts the normalised half-width ``x0`` into joint
        positions. Defaults to the centre depth.
    """

    points: np.ndarray
    zc: complex
    T1: complex
    T2: complex
    label: str = ""
    trace: Optional[np.ndarray] = field(default=None, repr=False)
    length_scale: Optional[float] = None

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=complex)
        self.zc = complex(self.zc)
        self.T1 = complex(self.T1)
        self.T2 = complex(self.T2)
        if self.trace is not None:
            self.trace = np.asarray(self.trace, dtype=complex)
        validate(self)

    @property
    def depth(self) -> float:
        return -self.zc.imag

    @property
    def size(self) -> float:
        """Largest distance from the centre to a collocation point."""
        return float(np.abs(self.points - self.zc).max())

    def area_trace(self) -> np.ndarray:
        return self.points if self.trace is None else self.trace

    @property
    def scale(self) -> float:
        return self.depth if self.length_scale is None else self.length_scale

    def with_joints(self, x0: float) -> "CavitySpec":
        """Copy with joints moved to ``Re T = -/+ x0 * scale``."""
        L = self.scale
        return CavitySpec(self.points, self.zc, -x0 * L, x0 * L, self.label, self.trace,
                          self.length_scale)


def signed_area(pts: np.ndarray) -> float:
    """Shoelace area; negative for clockwise traces."""
    x, y = pts.real, pts.imag
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _orient(a, b, c):
    return np.sign(((b - a).conjugate() * (c - a)).imag)


def _is_simple(pts: np.ndarray) -> bool:
    """No two non-adjacent edges properly cross."""
    n = len(pts)
    p, q = pts, np.roll(pts, -1)
    for i in range(n - 2):
        j = np.arange(i + 2, n if i > 0 else n - 1)
        if not len(j):
            continue
        a = _orient(p[i], q[i], p[j]) * _orient(p[i], q[i], q[j])
        b = _orient(p[j], q[j], p[i]) * _orient(p[j], q[j], q[i])
        if np.any((a < 0) & (b < 0)):
            return False
    return True


def point_in_polygon(pt: complex, pts: np.ndarray) -> bool:
    """Even-odd ray casting test."""
    x, y = pt.real, pt.imag
    xs, ys = pts.real, pts.imag
    xs2, ys2 = np.roll(xs, -1), np.roll(ys, -1)
    cond = (ys > y) != (ys2 > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = xs + (y - ys) * (xs2 - xs) / (ys2 - ys)
    return bool(np.count_nonzero(cond & (x < xint)) % 2)


def validate(spec: CavitySpec) -> None:
    pts = spec.points
    if len(pts) < 3:
        raise GeometryError("cavity trace needs at least three points")
    if not np.all(np.isfinite(pts)):
        raise GeometryError("cavity points must be finite")
    if np.any(pts.imag >= 0):
        raise GeometryError("cavity points must lie strictly below the ground surface")
    area = signed_area(pts)
    if abs(area) < 1e-12:
        raise GeometryError("cavity trace has zero area")
    if area > 0:
        raise GeometryError("cavity trace must be clockwise (negative signed area)")
    if not _is_simple(pts):
        raise GeometryError("cavity trace self-intersects")
    if not point_in_polygon(spec.zc, pts):
        raise GeometryError("centre zc must lie inside the cavity trace")
    if spec.T1.imag != 0 or spec.T2.imag != 0:
        raise GeometryError("joint points must lie on the ground surface")
    if not (spec.T1.real < pts.real.min() and spec.T2.real > pts.real.max()):
        raise GeometryError("joints must lie left and right of the cavity")


def initial_stress(point, mat: MaterialParams):
    """Geostatic stress ``(k0 gamma y, gamma y, 0)``; vectorised over points."""
    y = np.imag(point)
    if np.any(np.asarray(y) > 0):
        raise GeometryError("initial stress is undefined above the ground surface")
    sy = mat.gamma * y
    if np.ndim(y) == 0:
        return StressTriple(float(mat.k0 * sy), float(sy), 0.0)
    return mat.k0 * sy, sy, np.zeros_like(sy)


def cavity_traction(point, unit_tangent, mat: MaterialParams):
    """Traction ``-X0 - i Y0`` removed from the cavity wall.

    The tangent points along the clockwise trace, so the outward normal
    of the geomaterial has components ``(dy/dS, -dx/dS)``.
    """
    t = np.asarray(unit_tangent, dtype=complex)
    mag = np.abs(t)
    if np.any(mag == 0):
        raise GeometryError("zero tangent vector")
    t = t / mag
    y = np.imag(point)
    out = -mat.k0 * mat.gamma * y * t.imag + 1j * mat.gamma * y * t.real
    return complex(out) if np.ndim(out) == 0 else out


def boundary_tangents(pts: np.ndarray) -> np.ndarray:
    """Unit tangents of a closed trace by symmetric differences."""
    d = np.roll(pts, -1) - np.roll(pts, 1)
    return d / np.abs(d)


def area_and_resultant(spec: CavitySpec, gamma: float):
    """Area datum ``W = area / 2 pi`` and upward resultant ``2 pi W gamma``."""
    pts = spec.area_trace()
    area = abs(signed_area(pts))
    if area < 1e-12 or len(pts) < 3:
        raise GeometryError("degenerate cavity trace")
    W = area / (2.0 * np.pi)
    return W, 2.0 * np.pi * W * gamma


def densify(pts: np.ndarray, factor: int) -> np.ndarray:
    """Insert ``factor - 1`` equally spaced points on every polygon edge."""
    nxt = np.roll(pts, -1)
    s = np.arange(factor) / factor
    return (pts[:, None] + (nxt - pts)[:, None] * s[None, :]).ravel()


def _composite_ellipse_curve(t, H, right, left, b):
    # t in [0, 2pi): t = pi/2 is the crown, descending clockwise
    c, s = np.cos(t), np.sin(t)
    return np.where(c >= 0, right * c, left * c) + 1j * (b * s - H)


def composite_ellipse(H: float, N: int = 30, x0: float = 1.0, right: float = 6.0,
                      left: float = 4.0, b: float = 5.0, label: str = "",
                      length_scale: Optional[float] = None) -> CavitySpec:
    """Two half-ellipses joined at the crown and invert.

    The right half has semi-axes ``(right, b)`` and the left ``(left, b)``;
    the centre sits at depth ``H``. ``2N`` points start at the crown and run
    clockwise. Joints sit at ``-/+ x0 * length_scale`` (default ``H``).
    """
    if N < 8:
        raise GeometryError("need N >= 8 points per half")
    if not H > 0:
        raise GeometryError("depth must be positive")
    i = np.arange(N)
    t_right = np.pi / 2 - i * np.pi / N
    t_left = -np.pi / 2 - i * np.pi / N
    pts = np.concatenate([
        right * np.cos(t_right) + 1j * (b * np.sin(t_right) - H),
        left * np.cos(t_left) + 1j * (b * np.sin(t_left) - H),
    ])
    t = np.pi / 2 - 2 * np.pi * np.arange(_DENSE_SAMPLES) / _DENSE_SAMPLES
    trace = _composite_ellipse_curve(t, H, right, left, b)
    L = H if length_scale is None else length_scale
    return CavitySpec(pts, -1j * H, -x0 * L, x0 * L, label or f"composite-ellipse H={H}", trace,
                      length_scale)


def axisymmetric(a: float, alpha: float, b: Sequence[float] = (), N: int = 30,
                 x0: float = 1.0, label: str = "") -> CavitySpec:
    """Symmetric cavity traced by a Laurent-type annulus map at ``|zeta| = alpha``.

    The map is ``z = -ia (1+zeta)/(1-zeta) + i sum b_k (zeta^k - zeta^-k)``.
    Samples are reversed so the trace is clockwise; the centre is the
    midpoint of crown and invert.
    """
    if N < 8:
        raise GeometryError("need N >= 8 points per half")
    if not (0 < alpha < 1) or not a > 0:
        raise GeometryError("need a > 0 and 0 < alpha < 1")
    b = np.asarray(b, dtype=float)

    def curve(sig):
        zeta = alpha * sig
        z = -1j * a * (1 + zeta) / (1 - zeta)
        for k, bk in enumerate(b, start=1):
            z = z + 1j * bk * (zeta ** k - zeta ** (-k))
        return z

    sig = np.exp(1j * np.arange(2 * N) * np.pi / N)
    pts = curve(sig)[::-1]
    pts = np.roll(pts, 1)  # keep sigma = 1 first
    crown, invert = curve(np.array([-1.0 + 0j]))[0], curve(np.array([1.0 + 0j]))[0]
    zc = 0.5 * (crown + invert)
    zc = complex(0.0, zc.imag)
    H = -zc.imag
    trace = curve(np.exp(-2j * np.pi * np.arange(_DENSE_SAMPLES) / _DENSE_SAMPLES))
    return CavitySpec(pts, zc, -x0 * H, x0 * H, label or "axisymmetric", trace)


def verruijt_circle(h: float, N: int = 30, x0: float = 1.0) -> CavitySpec:
    """Unit circle centred at depth ``h`` built through :func:`axisymmetric`."""
    if not h > 1:
        raise GeometryError("circle must not touch the surface (h > 1)")
    alpha = 1.0 / (h + np.sqrt(h * h - 1.0))
    a = h * (1 - alpha ** 2) / (1 + alpha ** 2)
    return axisymmetric(a, alpha, (), N, x0, label=f"circle h={h}")


def from_points(points, zc=None, x0: float = 1.0, label: str = "explicit") -> CavitySpec:
    """Cavity from an explicit point list; counter-clockwise input is reversed."""
    pts = np.asarray(points, dtype=complex)
    if len(pts) < 3:
        raise GeometryError("cavity trace needs at least three points")
    if signed_area(pts) > 0:
        pts = pts[::-1]
    if zc is None:
        # area centroid of the polygon
        x, y = pts.real, pts.imag
        cr = x * np.roll(y, -1) - np.roll(x, -1) * y
        A = 0.5 * cr.sum()
        if abs(A) < 1e-14:
            raise GeometryError("cavity trace has zero area")
        cx = ((x + np.roll(x, -1)) * cr).sum() / (6 * A)
        cy = ((y + np.roll(y, -1)) * cr).sum() / (6 * A)
        zc = complex(cx, cy)
    H = -complex(zc).imag
    if not H > 0:
        raise GeometryError("cavity centre must lie below the surface")
    return CavitySpec(pts, zc, -x0 * H, x0 * H, label)


def load_csv(path, x0: float = 1.0, zc=None) -> CavitySpec:
    """Read a two-column ``x, y`` CSV; a non-numeric first row is a header."""
    path = Path(path)
    rows = []
    with path.open() as fh:
        for ln, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            parts = [p.strip() for p in line.replace(";", ",").split(",")]
            try:
                x, y = float(parts[0]), float(parts[1])
            except (ValueError, IndexError):
                if ln == 0:
                    continue
                raise GeometryError(f"{path}:{ln + 1}: expected two numeric columns")
            rows.append(complex(x, y))
    return from_points(np.array(rows), zc=zc, x0=x0, label=path.name)


def build_case_boundary(case, x0: float = 1.0, N: int = 30, **kw) -> CavitySpec:
    """Dispatch a preset name, parameter dict or explicit point list.

    ``case`` may be ``"case1"`` .. ``"case4"``, ``"axisymmetric"`` (with ``a``,
    ``alpha`` and optional ``b`` keywords), ``"circle"`` (with ``h``), a
    mapping with a ``"kind"`` key, or an array of complex points.
    """
    if isinstance(case, str):
        key = case.lower()
        if key in PRESET_DEPTHS:
            return composite_ellipse(PRESET_DEPTHS[key], N=N, x0=x0, label=key,
                                     length_scale=PRESET_LENGTH_SCALE)
        if key == "axisymmetric":
            return axisymmetric(kw["a"], kw["alpha"], kw.get("b", ()), N=N, x0=x0, label=key)
        if key == "circle":
            return verruijt_circle(kw.get("h", 4.0), N=N, x0=x0)
        raise GeometryError(f"unknown preset {case!r}")
    if isinstance(case, dict):
        kind = case.get("kind")
        params = {k: v for k, v in case.items() if k != "kind"}
        if kind == "composite-ellipse":
            return composite_ellipse(x0=x0, **params)
        if kind == "axisymmetric":
            return axisymmetric(x0=x0, **params)
        raise GeometryError(f"unknown geometry kind {kind!r}")
    return from_points(case, x0=x0, **kw)
