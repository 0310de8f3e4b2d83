"""Bounded test domains, boundary sampling, and maximal-vanishing sets.

Domains are rectangles, disks, smooth star-shaped regions (2-D), and
half-space boxes (a slab of depth R against the plane <x, n> = 0, used to
truncate half-space model problems).  classify_gamma locates the sets where
the field vanishes to maximal order in the closure and on the boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from .field_core import DEFAULT_KAPPA_MAX, DEFAULT_TOL, vanishing_order
from .poly import PolyMatrixField, multi_indices

__all__ = [
    "Rectangle",
    "Disk",
    "SmoothStar",
    "HalfSpaceBox",
    "BoundarySample",
    "GammaReport",
    "inside",
    "bounding_box",
    "boundary_sample",
    "classify_gamma",
]

_GEOM_TOL = 1e-12


@dataclass(frozen=True)
class Rectangle:
    center: tuple
    sides: tuple

    def __post_init__(self):
        if len(self.center) != len(self.sides):
            raise ValueError("center/sides length mismatch")
        if any(s <= 0 for s in self.sides):
            raise ValueError("sides must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "sides", tuple(float(s) for s in self.sides))

    @property
    def dim(self):
        return len(self.center)


@dataclass(frozen=True)
class Disk:
    center: tuple
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self):
        return len(self.center)


@dataclass(frozen=True)
class SmoothStar:
    """Star-shaped 2-D domain with radius rho(t) = base + sum_k (a_k cos kt + b_k sin kt)."""

    center: tuple
    base_radius: float
    cos_coeffs: tuple = ()
    sin_coeffs: tuple = ()

    def __post_init__(self):
        if len(self.center) != 2:
            raise ValueError("SmoothStar is 2-D only")
        slack = self.base_radius - sum(abs(a) for a in self.cos_coeffs) \
            - sum(abs(b) for b in self.sin_coeffs)
        if slack <= 0:
            raise ValueError("radius function not bounded away from zero")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        object.__setattr__(self, "base_radius", float(self.base_radius))
        object.__setattr__(self, "cos_coeffs", tuple(float(a) for a in self.cos_coeffs))
        object.__setattr__(self, "sin_coeffs", tuple(float(b) for b in self.sin_coeffs))

    @property
    def dim(self):
        return 2

    def radius_at(self, theta):
        theta = np.asarray(theta, dtype=float)
        rho = np.full_like(theta, self.base_radius, dtype=float)
        for k, a in enumerate(self.cos_coeffs, start=1):
            rho += a * np.cos(k * theta)
        for k, b in enumerate(self.sin_coeffs, start=1):
            rho += b * np.sin(k * theta)
        return rho

    def radius_deriv(self, theta):
        theta = np.asarray(theta, dtype=float)
        d = np.zeros_like(theta, dtype=float)
        for k, a in enumerate(self.cos_coeffs, start=1):
            d += -a * k * np.sin(k * theta)
        for k, b in enumerate(self.sin_coeffs, start=1):
            d += b * k * np.cos(k * theta)
        return d


@dataclass(frozen=True)
class HalfSpaceBox:
    """Slab {0 < -<x, n> < extent} with lateral half-width `extent` across n.

    The face <x, n> = 0 is the true boundary; the remaining faces are
    artificial truncation.
    """

    normal: tuple
    extent: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise ValueError("normal must be unit length")
        if self.extent <= 0:
            raise ValueError("extent must be positive")
        object.__setattr__(self, "normal", tuple(float(v) for v in n))
        object.__setattr__(self, "extent", float(self.extent))

    @property
    def dim(self):
        return len(self.normal)

    def frame(self) -> np.ndarray:
        """Orthonormal basis rows: d-1 lateral directions, then -normal (depth)."""
        n = np.asarray(self.normal, dtype=float)
        d = len(n)
        target = np.zeros(d)
        target[-1] = -1.0
        if np.allclose(n, target):
            H = np.eye(d)
        else:
            v = n - target
            v /= np.linalg.norm(v)
            H = np.eye(d) - 2.0 * np.outer(v, v)  # Householder: H @ n = target
        # rows of H map coordinates: Hx has last component -<x, n>
        return H


Domain = Rectangle | Disk | SmoothStar | HalfSpaceBox


@dataclass(frozen=True)
class BoundarySample:
    points: np.ndarray
    normals: np.ndarray
    weights: np.ndarray


@dataclass
class GammaReport:
    """Maximal-vanishing structure of a field on a domain.

    gamma1 holds interior points attaining kappa_star, gamma2 boundary
    points attaining kappa_star, gamma0 boundary points attaining kappa_0;
    boundary entries carry outward unit normals.
    """

    kappa_star: int
    kappa_0: int
    gamma1: list  # (point, kappa)
    gamma2: list  # (point, kappa, normal)
    gamma0: list  # (point, kappa, normal)
    diagnostics: dict = field(default_factory=dict)


# ----------------------------------------------------------------------
# membership and sampling
# ----------------------------------------------------------------------

def bounding_box(domain: Domain):
    if isinstance(domain, Rectangle):
        c = np.asarray(domain.center)
        s = np.asarray(domain.sides)
        return c - s / 2, c + s / 2
    if isinstance(domain, Disk):
        c = np.asarray(domain.center)
        r = domain.radius
        return c - r, c + r
    if isinstance(domain, SmoothStar):
        c = np.asarray(domain.center)
        r = domain.base_radius + sum(abs(a) for a in domain.cos_coeffs) \
            + sum(abs(b) for b in domain.sin_coeffs)
        return c - r, c + r
    if isinstance(domain, HalfSpaceBox):
        F = domain.frame()
        R = domain.extent
        corners = []
        for signs in np.ndindex(*(2,) * domain.dim):
            coords = np.array([(-R if s == 0 else R) for s in signs[:-1]]
                              + [0.0 if signs[-1] == 0 else R], dtype=float)
            corners.append(F.T @ coords)
        corners = np.array(corners)
        return corners.min(axis=0), corners.max(axis=0)
    raise TypeError(f"unknown domain {domain!r}")


def inside_mask(domain: Domain, points) -> np.ndarray:
    """Vectorized open-domain membership."""
    P = np.asarray(points, dtype=float).reshape(-1, domain.dim)
    if isinstance(domain, Rectangle):
        c = np.asarray(domain.center)
        s = np.asarray(domain.sides)
        return np.all(np.abs(P - c) < s / 2, axis=1)
    if isinstance(domain, Disk):
        c = np.asarray(domain.center)
        return np.einsum("ij,ij->i", P - c, P - c) < domain.radius ** 2
    if isinstance(domain, SmoothStar):
        c = np.asarray(domain.center)
        rel = P - c
        r = np.linalg.norm(rel, axis=1)
        theta = np.arctan2(rel[:, 1], rel[:, 0])
        return r < domain.radius_at(theta)
    if isinstance(domain, HalfSpaceBox):
        F = domain.frame()
        Y = P @ F.T
        depth_ok = (Y[:, -1] > 0) & (Y[:, -1] < domain.extent)
        lateral_ok = np.all(np.abs(Y[:, :-1]) < domain.extent, axis=1)
        return depth_ok & lateral_ok
    raise TypeError(f"unknown domain {domain!r}")


def inside(domain: Domain, x) -> bool:
    return bool(inside_mask(domain, np.asarray(x, dtype=float)[None, :])[0])


def boundary_sample(domain: Domain, count: int) -> BoundarySample:
    """Quasi-uniform boundary points with outward normals and quadrature weights.

    For rectangles the corners are excluded; for half-space boxes only the
    true face <x, n> = 0 is sampled (the remaining faces are artificial).
    """
    if count < 8:
        raise ValueError("count must be >= 8")
    if isinstance(domain, Rectangle):
        if domain.dim != 2:
            return _box_face_sample(domain, count)
        c = np.asarray(domain.center)
        sx, sy = domain.sides
        per = 2 * (sx + sy)
        pts, nrm, wts = [], [], []
        for axis, sign in ((0, 1), (0, -1), (1, 1), (1, -1)):
            length = sy if axis == 0 else sx
            n_side = max(2, round(count * length / per))
            ts = (np.arange(n_side) + 0.5) / n_side * length - length / 2
            for t in ts:
                p = c.copy().astype(float)
                p[axis] += sign * domain.sides[axis] / 2
                p[1 - axis] += t
                pts.append(p)
                e = np.zeros(2)
                e[axis] = sign
                nrm.append(e)
                wts.append(length / n_side)
        return BoundarySample(np.array(pts), np.array(nrm), np.array(wts))
    if isinstance(domain, Disk):
        c = np.asarray(domain.center)
        ang = 2 * np.pi * np.arange(count) / count
        nrm = np.stack([np.cos(ang), np.sin(ang)], axis=1)
        pts = c + domain.radius * nrm
        wts = np.full(count, 2 * np.pi * domain.radius / count)
        return BoundarySample(pts, nrm, wts)
    if isinstance(domain, SmoothStar):
        c = np.asarray(domain.center)
        ang = 2 * np.pi * np.arange(count) / count
        rho = domain.radius_at(ang)
        drho = domain.radius_deriv(ang)
        cos, sin = np.cos(ang), np.sin(ang)
        pts = c + rho[:, None] * np.stack([cos, sin], axis=1)
        # gamma'(t) = drho*(cos,sin) + rho*(-sin,cos); outward normal is the
        # clockwise rotation of the tangent
        tx = drho * cos - rho * sin
        ty = drho * sin + rho * cos
        speed = np.hypot(tx, ty)
        nrm = np.stack([ty, -tx], axis=1) / speed[:, None]
        wts = speed * (2 * np.pi / count)
        return BoundarySample(pts, nrm, wts)
    if isinstance(domain, HalfSpaceBox):
        F = domain.frame()
        R = domain.extent
        d = domain.dim
        per_axis = max(2, int(round(count ** (1.0 / (d - 1)))))
        axes = [(np.arange(per_axis) + 0.5) / per_axis * 2 * R - R] * (d - 1)
        mesh = np.meshgrid(*axes, indexing="ij") if d > 1 else []
        lat = np.stack([m.ravel() for m in mesh], axis=1) if d > 1 else np.zeros((1, 0))
        Y = np.concatenate([lat, np.zeros((lat.shape[0], 1))], axis=1)
        pts = Y @ F
        n = np.asarray(domain.normal)
        nrm = np.tile(n, (pts.shape[0], 1))
        wts = np.full(pts.shape[0], (2 * R / per_axis) ** (d - 1))
        return BoundarySample(pts, nrm, wts)
    raise TypeError(f"unknown domain {domain!r}")


def _box_face_sample(domain: Rectangle, count: int) -> BoundarySample:
    """Face sampling for d >= 3 boxes."""
    c = np.asarray(domain.center)
    s = np.asarray(domain.sides)
    d = domain.dim
    areas = [float(np.prod(np.delete(s, ax))) for ax in range(d)]
    total = 2 * sum(areas)
    pts, nrm, wts = [], [], []
    for ax in range(d):
        others = [i for i in range(d) if i != ax]
        n_face = max(4, round(count * areas[ax] / total))
        per = max(2, int(round(n_face ** (1.0 / (d - 1)))))
        axes = [(np.arange(per) + 0.5) / per * s[i] - s[i] / 2 for i in others]
        mesh = np.meshgrid(*axes, indexing="ij")
        lat = np.stack([m.ravel() for m in mesh], axis=1)
        w = areas[ax] / lat.shape[0]
        for sign in (1, -1):
            for row in lat:
                p = c.copy().astype(float)
                p[ax] += sign * s[ax] / 2
                for i, v in zip(others, row):
                    p[i] += v
                e = np.zeros(d)
                e[ax] = sign
                pts.append(p)
                nrm.append(e)
                wts.append(w)
    return BoundarySample(np.array(pts), np.array(nrm), np.array(wts))


def distance_to_boundary(domain: Domain, x) -> float:
    x = np.asarray(x, dtype=float)
    if isinstance(domain, Rectangle):
        c = np.asarray(domain.center)
        s = np.asarray(domain.sides)
        return float(np.min(s / 2 - np.abs(x - c)))
    if isinstance(domain, Disk):
        return float(domain.radius - np.linalg.norm(x - np.asarray(domain.center)))
    if isinstance(domain, SmoothStar):
        bs = boundary_sample(domain, 1024)
        return float(np.min(np.linalg.norm(bs.points - x, axis=1)))
    if isinstance(domain, HalfSpaceBox):
        F = domain.frame()
        y = F @ x
        vals = [domain.extent - abs(v) for v in y[:-1]]
        vals += [y[-1], domain.extent - y[-1]]
        return float(min(vals))
    raise TypeError(f"unknown domain {domain!r}")


# ----------------------------------------------------------------------
# maximal-vanishing sets
# ----------------------------------------------------------------------

def _sub_order_energy(B: PolyMatrixField, order: int):
    """Callable giving sum over |alpha| <= order-1 of |d^alpha B(x)|_F^2."""
    polys = []
    for k in range(order):
        for alpha in multi_indices(B.dim, k):
            for _, p in B.upper_entries():
                dp = p.deriv(alpha)
                if not dp.is_zero():
                    polys.append(dp)

    def f(pts):
        pts = np.asarray(pts, dtype=float)
        single = pts.ndim == 1
        P = pts.reshape(-1, B.dim)
        acc = np.zeros(P.shape[0])
        for p in polys:
            acc += 2.0 * p.eval(P) ** 2
        return float(acc[0]) if single else acc

    return f, polys


def _refine_interior(B, domain, seeds, order, tol, scale):
    """Polish near-vanishing interior seeds onto the zero set of all
    derivatives of order < `order`; returns confirmed points."""
    f, polys = _sub_order_energy(B, order)
    if not polys:
        return []
    grads = [[p.diff(i) for i in range(B.dim)] for p in polys]
    found = []
    for x0 in seeds:
        def fun(x):
            return f(x)

        def jac(x):
            g = np.zeros(B.dim)
            for p, gp in zip(polys, grads):
                v = p.eval(x)
                g += 4.0 * v * np.array([gi.eval(x) for gi in gp])
            return g

        res = optimize.minimize(fun, np.asarray(x0, dtype=float), jac=jac,
                                method="BFGS", options={"gtol": 1e-14, "maxiter": 200})
        x = res.x
        if res.fun <= (tol * scale) ** 2 and inside(domain, x):
            found.append(x)
    return found


def _refine_boundary(B, domain, order, tol, scale, count):
    """Locate boundary points where all derivatives of order < `order` vanish.

    2-D only: minimizes the sub-order derivative energy along the boundary
    parametrization near sampled local minima.
    """
    if domain.dim != 2 or isinstance(domain, HalfSpaceBox):
        return []
    f, polys = _sub_order_energy(B, order)
    if not polys:
        return []
    param = _boundary_param(domain)
    ts = np.linspace(0.0, 1.0, count, endpoint=False)
    vals = f(param(ts))
    found = []
    thresh = (tol * scale) ** 2
    for i in range(count):
        prev, nxt = vals[i - 1], vals[(i + 1) % count]
        if vals[i] <= prev and vals[i] <= nxt:
            lo, hi = ts[i] - 1.0 / count, ts[i] + 1.0 / count
            res = optimize.minimize_scalar(lambda t: f(param(np.array([t % 1.0]))[0]),
                                           bounds=(lo, hi), method="bounded",
                                           options={"xatol": 1e-14})
            if res.fun <= thresh:
                found.append(param(np.array([res.x % 1.0]))[0])
    return found


def _boundary_param(domain):
    """Map t in [0,1) to boundary points (2-D bounded domains)."""
    if isinstance(domain, Disk):
        c = np.asarray(domain.center)

        def param(ts):
            ang = 2 * np.pi * np.asarray(ts)
            return c + domain.radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)

        return param
    if isinstance(domain, SmoothStar):
        c = np.asarray(domain.center)

        def param(ts):
            ang = 2 * np.pi * np.asarray(ts)
            rho = domain.radius_at(ang)
            return c + rho[:, None] * np.stack([np.cos(ang), np.sin(ang)], axis=1)

        return param
    if isinstance(domain, Rectangle):
        c = np.asarray(domain.center)
        sx, sy = domain.sides
        per = 2 * (sx + sy)

        def param(ts):
            out = []
            for t in np.asarray(ts):
                u = (t % 1.0) * per
                if u < sx:
                    p = (c[0] - sx / 2 + u, c[1] - sy / 2)
                elif u < sx + sy:
                    p = (c[0] + sx / 2, c[1] - sy / 2 + (u - sx))
                elif u < 2 * sx + sy:
                    p = (c[0] + sx / 2 - (u - sx - sy), c[1] + sy / 2)
                else:
                    p = (c[0] - sx / 2, c[1] + sy / 2 - (u - 2 * sx - sy))
                out.append(p)
            return np.array(out)

        return param
    raise TypeError(f"no boundary parametrization for {domain!r}")


def _outward_normal(domain, x):
    x = np.asarray(x, dtype=float)
    if isinstance(domain, Disk):
        v = x - np.asarray(domain.center)
        return v / np.linalg.norm(v)
    if isinstance(domain, Rectangle):
        c = np.asarray(domain.center)
        s = np.asarray(domain.sides)
        gaps = s / 2 - np.abs(x - c)
        ax = int(np.argmin(gaps))
        e = np.zeros(domain.dim)
        e[ax] = math.copysign(1.0, (x - c)[ax]) if (x - c)[ax] != 0 else 1.0
        return e
    if isinstance(domain, SmoothStar):
        bs = boundary_sample(domain, 2048)
        i = int(np.argmin(np.linalg.norm(bs.points - x, axis=1)))
        return bs.normals[i]
    if isinstance(domain, HalfSpaceBox):
        return np.asarray(domain.normal)
    raise TypeError(f"unknown domain {domain!r}")


def classify_gamma(B: PolyMatrixField, domain: Domain, interior_step: float,
                   boundary_count: int = 256, tol: float = DEFAULT_TOL,
                   kappa_max: int = DEFAULT_KAPPA_MAX) -> GammaReport:
    """Vanishing orders on an interior lattice and a boundary sample.

    kappa_star is the maximum order over the sampled closure, kappa_0 over
    the boundary; near-maximal candidates are refined by local minimization
    of the sub-maximal derivative energy so isolated high-order points are
    not missed by the lattice.  Raises if any sampled order exceeds
    kappa_max.
    """
    lo, hi = bounding_box(domain)
    axes = [np.arange(lo[i], hi[i] + interior_step / 2, interior_step)
            for i in range(domain.dim)]
    mesh = np.meshgrid(*axes, indexing="ij")
    lattice = np.stack([m.ravel() for m in mesh], axis=1)
    interior_pts = lattice[inside_mask(domain, lattice)]

    def kappa_of(x):
        k = vanishing_order(B, x, tol=tol, kappa_max=kappa_max)
        if k is None:
            raise ValueError(f"vanishing order exceeds cap {kappa_max} at {tuple(x)}")
        return k

    scale = _derivative_scale(B, np.vstack([interior_pts, boundary_sample(domain, boundary_count).points])
                              if interior_pts.size else boundary_sample(domain, boundary_count).points,
                              kappa_max)

    interior_k = np.array([kappa_of(x) for x in interior_pts], dtype=int) \
        if interior_pts.size else np.zeros(0, dtype=int)
    bs = boundary_sample(domain, boundary_count)
    boundary_k = np.array([kappa_of(x) for x in bs.points], dtype=int)

    k_int = int(interior_k.max()) if interior_k.size else -1
    extra_interior = []
    # hunt for interior points of order higher than the lattice shows
    level = max(k_int, 0) + 1
    while level <= min(kappa_max, max(B.degree, 0)):
        f, _ = _sub_order_energy(B, level)
        if interior_pts.size:
            energies = f(interior_pts)
            order = np.argsort(energies)[: min(8, len(energies))]
            seeds = interior_pts[order]
        else:
            seeds = []
        found = _refine_interior(B, domain, seeds, level, tol, scale)
        if not found:
            break
        ks = [kappa_of(x) for x in found]
        extra_interior.extend(zip(found, ks))
        k_int = max(k_int, max(ks))
        level = k_int + 1

    k_bnd = int(boundary_k.max()) if boundary_k.size else -1
    extra_boundary = []
    level = max(k_bnd, 0) + 1
    while level <= min(kappa_max, max(B.degree, 0)):
        found = _refine_boundary(B, domain, level, tol, scale, boundary_count)
        found = [x for x in found if kappa_of(x) >= level]
        if not found:
            break
        ks = [kappa_of(x) for x in found]
        extra_boundary.extend(zip(found, ks))
        k_bnd = max(k_bnd, max(ks))
        level = k_bnd + 1

    kappa_star = max(k_int, k_bnd)
    kappa_0 = k_bnd

    gamma1 = [(tuple(map(float, x)), int(k)) for x, k in zip(interior_pts, interior_k)
              if k == kappa_star]
    gamma1 += [(tuple(map(float, x)), int(k)) for x, k in extra_interior if k == kappa_star]
    gamma1 = _dedupe_points(gamma1, interior_step / 2)

    def boundary_set(target):
        out = [(tuple(map(float, x)), int(k), tuple(map(float, n))) for x, k, n
               in zip(bs.points, boundary_k, bs.normals) if k == target]
        out += [(tuple(map(float, x)), int(k), tuple(map(float, _outward_normal(domain, x))))
                for x, k in extra_boundary if k == target]
        mean_w = float(np.mean(bs.weights))
        return _dedupe_points(out, mean_w / 2)

    gamma2 = boundary_set(kappa_star)
    gamma0 = boundary_set(kappa_0)

    diagnostics = {}
    if gamma1 and gamma2:
        ratios = []
        g2pts = np.array([g[0] for g in gamma2])
        for p, _ in gamma1:
            db = distance_to_boundary(domain, p)
            dg = float(np.min(np.linalg.norm(g2pts - np.asarray(p), axis=1)))
            if dg > 0:
                ratios.append(db / dg)
        if ratios:
            diagnostics["gamma1_boundary_distance_ratio_min"] = min(ratios)

    return GammaReport(kappa_star=kappa_star, kappa_0=kappa_0, gamma1=gamma1,
                       gamma2=gamma2, gamma0=gamma0, diagnostics=diagnostics)


def _derivative_scale(B, pts, kappa_max):
    from .poly import derivative_norms

    best = 0.0
    sample = pts[:: max(1, len(pts) // 64)]
    for x in sample:
        norms = derivative_norms(B, x, min(kappa_max, max(B.degree, 0)))
        best = max(best, max((v for vals in norms for v in vals), default=0.0))
    return best + 1e-300


def _dedupe_points(entries, min_dist):
    kept = []
    for e in entries:
        p = np.asarray(e[0])
        if all(np.linalg.norm(p - np.asarray(k[0])) > min_dist for k in kept):
            kept.append(e)
    return kept
