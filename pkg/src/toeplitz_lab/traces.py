"""Trace asymptotics tr f(T_n(a)) and the constants G_f, E_f.

E_f is computed in integrated-by-parts form,

    E_f = -(1/2 pi i) oint f'(lam) log E(a - lam) d lam,

on a circle enclosing the spectrum, with the trapezoid rule in the angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy import linalg
from scipy.spatial import ConvexHull, QhullError

from .determinants import log_regularized_det, _product_defect
from .errors import DomainError, NumericalInstabilityError, SingularSymbolError
from .factorization import log_coefficients
from .operators import toeplitz_matrix
from .symbols import (FourierSymbol, default_grid, inverse, next_pow2, sample_grid, tilde,
                      winding_number)

EF_TOL = 1e-6
MAX_POLY_DEGREE = 32


@dataclass(frozen=True)
class AnalyticFunctionSpec:
    """f(z): a polynomial (ascending coefficients), exp(scale z), or a log with a cut ray.

    For ``log`` the cut is the ray {r e^{i cut_angle}: r >= 0}; the default
    angle pi gives the principal branch.
    """

    kind: Literal["polynomial", "exp", "log"]
    coeffs: tuple = ()
    scale: complex = 1.0
    cut_angle: float = math.pi

    def __post_init__(self):
        if self.kind not in ("polynomial", "exp", "log"):
            raise DomainError(f"unknown function kind {self.kind!r}")
        if self.kind == "polynomial":
            if not self.coeffs:
                raise DomainError("polynomial needs coefficients")
            if len(self.coeffs) - 1 > MAX_POLY_DEGREE:
                raise DomainError(f"polynomial degree above {MAX_POLY_DEGREE}")

    @classmethod
    def polynomial(cls, coeffs) -> "AnalyticFunctionSpec":
        return cls("polynomial", tuple(coeffs))

    @classmethod
    def power(cls, p: int) -> "AnalyticFunctionSpec":
        return cls("polynomial", tuple([0] * p + [1]))

    @classmethod
    def exp(cls, scale: complex = 1.0) -> "AnalyticFunctionSpec":
        return cls("exp", scale=scale)

    @classmethod
    def log(cls, cut_angle: float = math.pi) -> "AnalyticFunctionSpec":
        return cls("log", cut_angle=cut_angle)

    @classmethod
    def from_record(cls, rec: dict) -> "AnalyticFunctionSpec":
        kind = rec["kind"]
        if kind == "polynomial":
            return cls.polynomial([complex(*c) if isinstance(c, (list, tuple)) else c
                                   for c in rec["coeffs"]])
        if kind == "exp":
            return cls.exp(rec.get("scale", 1.0))
        if kind == "log":
            return cls.log(rec.get("cut_angle", math.pi))
        raise DomainError(f"unknown function kind {kind!r}")

    def to_record(self) -> dict:
        if self.kind == "polynomial":
            return {"kind": "polynomial", "coeffs": [_num(c) for c in self.coeffs]}
        if self.kind == "exp":
            return {"kind": "exp", "scale": _num(self.scale)}
        return {"kind": "log", "cut_angle": self.cut_angle}

    @property
    def degree(self) -> int | None:
        return len(self.coeffs) - 1 if self.kind == "polynomial" else None

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "polynomial":
            return np.polyval(np.asarray(self.coeffs[::-1], dtype=complex), z)
        if self.kind == "exp":
            return np.exp(self.scale * z)
        rot = self.cut_angle - math.pi
        return np.log(z * np.exp(-1j * rot)) + 1j * rot

    def derivative(self, z):
        z = np.asarray(z, dtype=complex)
        if self.kind == "polynomial":
            d = np.polyder(np.asarray(self.coeffs[::-1], dtype=complex)) if len(self.coeffs) > 1 else [0]
            return np.polyval(d, z)
        if self.kind == "exp":
            return self.scale * np.exp(self.scale * z)
        return 1.0 / z

    def cut_distance(self, z: complex) -> float:
        """Distance from z to the branch cut (inf when f is entire)."""
        if self.kind != "log":
            return math.inf
        d = np.exp(1j * self.cut_angle)
        proj = (np.conj(d) * z).real
        return abs(z) if proj <= 0 else abs(z - proj * d)


def _num(c):
    c = complex(c)
    return c.real if c.imag == 0 else [c.real, c.imag]


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------

@dataclass
class SpectrumHull:
    points: np.ndarray
    vertices: np.ndarray
    center: complex
    radius: float

    @property
    def diameter(self) -> float:
        v = self.vertices
        return float(np.abs(v[:, None] - v[None, :]).max()) if v.size else 0.0

    def contains(self, z: complex, tol: float = 1e-12) -> bool:
        v = self.vertices
        if len(v) < 3:
            return self.distance(z) <= tol
        # counter-clockwise polygon: inside if left of every edge
        e = np.roll(v, -1) - v
        cross = (np.conj(e) * (z - v)).imag
        return bool(np.all(cross >= -tol))

    def distance(self, z: complex) -> float:
        """Euclidean distance from z to the (inflated) hull; 0 inside."""
        v = self.vertices
        if len(v) >= 3 and self.contains(z):
            return 0.0
        if len(v) == 1:
            return float(abs(z - v[0]))
        a, b = v, np.roll(v, -1)
        if len(v) == 2:
            a, b = v[:1], v[1:]
        ab = b - a
        t = np.clip(((z - a) * np.conj(ab)).real / np.maximum(np.abs(ab) ** 2, 1e-300), 0, 1)
        return float(np.abs(z - (a + t * ab)).min())


def spectrum_hull(a: FourierSymbol, M: int = 64, grid: int = 1024, inflate: float = 0.1) -> SpectrumHull:
    """Convex hull of sp T_M(a), sp T_M(a~) and the pointwise eigenvalues of a, inflated by 10%."""
    pts = [linalg.eigvals(toeplitz_matrix(a, M - 1)), linalg.eigvals(toeplitz_matrix(tilde(a), M - 1)),
           np.linalg.eigvals(sample_grid(a, grid)).ravel()]
    pts = np.concatenate(pts)
    # merge numerically identical points
    pts = np.unique(np.round(pts, 12))
    xy = np.column_stack([pts.real, pts.imag])
    try:
        hull = ConvexHull(xy)
        verts = pts[hull.vertices]
    except (QhullError, ValueError):
        # collinear or single point: keep the two extremes along the principal direction
        if len(pts) == 1 or np.ptp(np.abs(pts - pts[0])) == 0:
            verts = pts[:1]
        else:
            d = pts - pts.mean()
            u = d[np.argmax(np.abs(d))] / np.abs(d).max()
            s = (d * np.conj(u)).real
            verts = pts[[np.argmin(s), np.argmax(s)]]
    c = complex(verts.mean())
    verts = c + (1 + inflate) * (verts - c)
    r = float(np.abs(verts - c).max()) if len(verts) else 0.0
    return SpectrumHull(pts, verts, c, r)


# ---------------------------------------------------------------------------
# traces
# ---------------------------------------------------------------------------

@dataclass
class TraceValue:
    value: complex
    exact: object = None
    difference: float | None = None


def _is_integral(x) -> bool:
    x = complex(x)
    return x.imag == 0 and float(x.real).is_integer()


def polynomial_trace_exact(a: FourierSymbol, coeffs, n: int):
    """sum_p coeffs[p] tr T_n(a)^p, in integer arithmetic when every input is an integer."""
    T = toeplitz_matrix(a, n)
    integral = all(_is_integral(x) for x in np.ravel(T)) and all(_is_integral(c) for c in coeffs)
    if integral:
        Ti = np.vectorize(lambda x: int(round(complex(x).real)), otypes=[object])(T)
        P = np.identity(T.shape[0], dtype=object) * 1
        total = 0
        for p, c in enumerate(coeffs):
            if p:
                P = P.dot(Ti)
            ci = int(round(complex(c).real))
            if ci:
                total += ci * int(sum(P[i, i] for i in range(T.shape[0])))
        return total
    P = np.eye(T.shape[0], dtype=complex)
    total = 0j
    for p, c in enumerate(coeffs):
        if p:
            P = P @ T
        total += complex(c) * np.trace(P)
    return total


def trace_f(a: FourierSymbol, f: AnalyticFunctionSpec, n: int) -> TraceValue:
    """tr f(T_n(a)) from the eigenvalues; polynomials also get the exact power-trace value."""
    T = toeplitz_matrix(a, n)
    try:
        lam = linalg.eigvals(T)
    except linalg.LinAlgError as exc:
        raise NumericalInstabilityError(f"eigenvalue solver failed: {exc}") from exc
    val = complex(np.sum(f(lam)))
    if f.kind == "polynomial":
        ex = polynomial_trace_exact(a, f.coeffs, n)
        return TraceValue(val, ex, float(abs(val - complex(ex))))
    return TraceValue(val)


def _matrix_function_contour(A: np.ndarray, f: AnalyticFunctionSpec, nodes: int = 256) -> np.ndarray:
    lam = np.linalg.eigvals(A)
    c = lam.mean()
    r = 2 * max(np.abs(lam - c).max(), 1e-3) + 1e-3
    phi = 2 * np.pi * np.arange(nodes) / nodes
    z = c + r * np.exp(1j * phi)
    eye = np.eye(A.shape[0])
    out = np.zeros_like(A, dtype=complex)
    for zj, ph in zip(z, phi):
        out += f(zj) * np.linalg.solve(zj * eye - A, eye) * r * np.exp(1j * ph)
    return out / nodes


def gf_constant(a: FourierSymbol, f: AnalyticFunctionSpec, M: int = 1024, cond_max: float = 1e8) -> complex:
    """(1/2 pi) int tr f(a(e^{i theta})) d theta by the trapezoid rule on M >= 1024 nodes."""
    M = max(M, 1024, next_pow2(4 * (2 * a.band + 1) * max(f.degree or 1, 1)))
    vals = sample_grid(a, M)
    if a.is_scalar:
        return complex(np.mean(f(vals[:, 0, 0])))
    total = 0j
    for A in vals:
        lam, V = np.linalg.eig(A)
        if np.linalg.cond(V) > cond_max:
            total += np.trace(_matrix_function_contour(A, f))
        else:
            total += np.sum(f(lam))
    return complex(total / M)


# ---------------------------------------------------------------------------
# E_f on a circular contour
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ContourSpec:
    center: complex
    radius: float
    nodes: int = 256
    margin: float | None = None

    def __post_init__(self):
        if self.nodes < 64 or self.nodes & (self.nodes - 1):
            raise DomainError("contour node count must be a power of two >= 64")
        if self.radius <= 0:
            raise DomainError("contour radius must be positive")

    @classmethod
    def from_record(cls, rec: dict) -> "ContourSpec":
        c = rec["center"]
        c = complex(c[0], c[1]) if isinstance(c, (list, tuple)) else complex(c)
        return cls(c, float(rec["radius"]), int(rec.get("nodes", 256)), rec.get("margin"))

    def to_record(self) -> dict:
        return {"center": _num(self.center), "radius": self.radius, "nodes": self.nodes,
                "margin": self.margin}

    def points(self, nodes: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        J = nodes or self.nodes
        phi = 2 * np.pi * np.arange(J) / J
        return self.center + self.radius * np.exp(1j * phi), phi


# default clearance as a fraction of the hull diameter
MARGIN_FRACTION = 0.01


def check_contour(contour: ContourSpec, hull: SpectrumHull, f: AnalyticFunctionSpec) -> float:
    """Raise unless the circle encloses the hull with clearance and f is analytic on the disk.

    Returns the clearance actually used.
    """
    margin = contour.margin if contour.margin is not None else MARGIN_FRACTION * max(hull.diameter, 1e-3)
    z, _ = contour.points()
    dist = min(hull.distance(complex(x)) for x in z)
    if dist < margin:
        raise DomainError(f"contour passes within {dist:.3g} of the spectral hull (margin {margin:.3g})")
    if np.abs(hull.vertices - contour.center).max() >= contour.radius:
        raise DomainError("contour does not enclose the spectral hull")
    if f.cut_distance(contour.center) <= contour.radius:
        raise DomainError("branch cut of f meets the contour disk")
    return margin


def _node_log_E(sym: FourierSymbol, M: int, check: bool) -> complex:
    """log det_1 T(s)T(s^{-1}) for one contour node."""
    if sym.is_scalar:
        if check and winding_number(sym) != 0:
            raise SingularSymbolError("nonzero winding at a contour node")
        s, G = log_coefficients(sym, max(4096, default_grid(sym.band, minimum=4096)))
        k = np.arange(1, G // 2)
        return complex(np.sum(k * s[k] * s[-k]))
    if check and winding_number(sym) != 0:
        raise SingularSymbolError("det of the node symbol winds around 0")
    inv = inverse(sym, max(4 * sym.band, 64))
    return log_regularized_det(_product_defect(sym, inv, M), 1, "trace")


@dataclass
class EfResult:
    value: complex
    nodes: int
    change: float
    history: list[tuple[int, complex]] = field(default_factory=list)


def ef_constant(a: FourierSymbol, f: AnalyticFunctionSpec, contour: ContourSpec, M: int = 256,
                tol: float = EF_TOL, max_nodes: int = 1 << 14, check: bool = True,
                hull: SpectrumHull | None = None) -> EfResult:
    """E_f by the trapezoid rule; nodes double until the value moves by less than ``tol``."""
    if check:
        check_contour(contour, hull or spectrum_hull(a), f)
    N = a.block_size
    eye = FourierSymbol.constant(np.eye(N))
    cache: dict[int, complex] = {}

    def L(j_num, J):
        # reuse nodes shared with the coarser rule
        key = (j_num * (max_nodes // J))
        if key not in cache:
            lam = contour.center + contour.radius * np.exp(2j * np.pi * j_num / J)
            cache[key] = _node_log_E(a - eye.scale(lam), M, check)
        return cache[key]

    def rule(J):
        z, phi = contour.points(J)
        Ls = np.array([L(j, J) for j in range(J)])
        if N > 1:
            Ls = Ls.real + 1j * np.unwrap(Ls.imag)
        return complex(-(contour.radius / J) * np.sum(f.derivative(z) * Ls * np.exp(1j * phi)))

    J = contour.nodes
    hist = [(J, rule(J))]
    while True:
        if 2 * J > max_nodes:
            raise NumericalInstabilityError(f"E_f did not settle within {max_nodes} nodes")
        J *= 2
        hist.append((J, rule(J)))
        change = abs(hist[-1][1] - hist[-2][1])
        if change < tol:
            return EfResult(hist[-1][1], J, float(change), hist)
