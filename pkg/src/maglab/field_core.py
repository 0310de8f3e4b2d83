"""Pointwise analysis of polynomial magnetic fields.

Provides the vanishing order kappa(x) of a field B, the cube-based scale
function m(x, B) together with its derivative-sum surrogate m~(x, B), the
leading Taylor model (P_y, A_y) of B at a point, the translation-invariant
subspace of a homogeneous field, and the transverse nondegeneracy and
boundary-alignment scalars derived from it.

Matrix magnitudes |.| are Frobenius norms throughout.  Coefficient
magnitudes used for model normalization are spectral norms, which makes
B_12 = x_1 already normalized in 2-D.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from .poly import (
    Polynomial,
    PolyMatrixField,
    PolyVectorField,
    curl,
    derivative_norms,
    multi_indices,
)

__all__ = [
    "ModelData",
    "vanishing_order",
    "m_tilde",
    "m_exact",
    "m_profile",
    "m_tilde_profile",
    "taylor_model",
    "invariant_subspace",
    "sigma",
    "tau",
    "normalize_model",
    "ZeroFieldError",
]

DEFAULT_TOL = 1e-8
DEFAULT_KAPPA_MAX = 8
SVD_NULL_RTOL = 1e-10


class ZeroFieldError(ValueError):
    """Raised when an operation needs a not-identically-zero field."""


@dataclass(frozen=True)
class ModelData:
    """Leading local model of a field at a base point.

    P is the lowest-order (homogeneous, degree kappa) part of B around y,
    A_model a homogeneous potential of degree kappa+1 with curl A_model = P,
    V_basis an orthonormal basis (rows) of the translation-invariant
    subspace of P, sigma the transverse nondegeneracy of P (None when the
    field does not vanish at y or P is translation-invariant in no
    direction short of everything), and normalization the accumulated
    rescaling factor (1.0 for a raw model).
    """

    y: tuple
    kappa: int
    P: PolyMatrixField
    A_model: PolyVectorField
    V_basis: np.ndarray
    sigma: float | None
    normalization: float = 1.0


# ----------------------------------------------------------------------
# vanishing order and the m functions
# ----------------------------------------------------------------------

def vanishing_order(B: PolyMatrixField, x, tol: float = DEFAULT_TOL,
                    kappa_max: int = DEFAULT_KAPPA_MAX):
    """Smallest k such that some |alpha| = k derivative of B at x is nonzero.

    Nonzero is judged against tol times the largest derivative norm of any
    order up to kappa_max (plus a machine floor).  Returns None when every
    order up to kappa_max vanishes; raises ZeroFieldError for a field that
    is identically zero as a polynomial.
    """
    if not 0.0 < tol < 1.0:
        raise ValueError("tol must lie in (0, 1)")
    if kappa_max < 0:
        raise ValueError("kappa_max must be >= 0")
    if B.is_zero():
        raise ZeroFieldError("field is identically zero")
    norms = derivative_norms(B, x, min(kappa_max, max(B.degree, 0)))
    scale = max((v for vals in norms for v in vals), default=0.0) + 1e-300
    for k, vals in enumerate(norms):
        if any(v > tol * scale for v in vals):
            return k
    return None


def m_tilde(B: PolyMatrixField, x) -> float:
    """Sum over derivative orders of |d^alpha B(x)|_F^(1/(|alpha|+2))."""
    deg = max(B.degree, 0)
    norms = derivative_norms(B, x, deg)
    total = 0.0
    for k, vals in enumerate(norms):
        for v in vals:
            if v > 0.0:
                total += v ** (1.0 / (k + 2))
    return total


def _cube_offsets(dim: int, samples: int) -> np.ndarray:
    axes = [np.linspace(-0.5, 0.5, samples)] * dim
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _cube_max(B: PolyMatrixField, center, r: float, samples: int = 33,
              polish: bool = True) -> float:
    """max over the closed cube of side r centered at `center` of |B|_F.

    Tensor sampling followed by projected gradient ascent on |B|_F^2 from
    the best sample.
    """
    c = np.asarray(center, dtype=float)
    offs = _cube_offsets(B.dim, samples)
    pts = c[None, :] + r * offs
    f2 = B.frob2()
    vals = f2.eval(pts)
    best_i = int(np.argmax(vals))
    best_x, best_v = pts[best_i], vals[best_i]
    if polish:
        grads = [f2.diff(i) for i in range(B.dim)]
        lo, hi = c - r / 2, c + r / 2
        x = best_x.copy()
        v = best_v
        step = r / max(samples - 1, 1)
        for _ in range(30):
            g = np.array([gp.eval(x) for gp in grads])
            gn = np.linalg.norm(g)
            if gn == 0.0:
                break
            trial = np.clip(x + step * g / gn, lo, hi)
            tv = f2.eval(trial)
            if tv > v:
                x, v = trial, tv
            else:
                step *= 0.5
                if step < 1e-12 * r:
                    break
        best_v = max(best_v, v)
    return math.sqrt(max(best_v, 0.0))


def m_exact(B: PolyMatrixField, x, samples: int = 33, rtol: float = 1e-12) -> float:
    """1 / r* where r* is the largest cube side with max_{Q(x,r)} |B| <= 1/r^2.

    Found by bisection on r; r -> r^2 * max_{Q(x,r)} |B| is nondecreasing.
    """
    if B.is_zero():
        raise ZeroFieldError("m undefined for the zero field")
    x = np.asarray(x, dtype=float)

    def g(r: float) -> float:
        return r * r * _cube_max(B, x, r, samples=samples)

    lo, hi = 1.0, 1.0
    for _ in range(200):
        if g(lo) < 1.0:
            break
        lo *= 0.5
    for _ in range(200):
        if g(hi) > 1.0:
            break
        hi *= 2.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if g(mid) <= 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= rtol * hi:
            break
    return 1.0 / (0.5 * (lo + hi))


def m_profile(B: PolyMatrixField, points, samples: int = 9, iters: int = 50,
              chunk: int = 20000) -> np.ndarray:
    """m(x, B) on a batch of points, vectorized.

    Same cube definition as m_exact; the per-cube maximum uses a coarser
    tensor sample (no polish), which is plenty for weight maps.  Large
    batches are processed in chunks to bound peak memory.
    """
    if B.is_zero():
        raise ZeroFieldError("m undefined for the zero field")
    pts = np.asarray(points, dtype=float).reshape(-1, B.dim)
    if pts.shape[0] > chunk:
        parts = [m_profile(B, pts[i:i + chunk], samples=samples, iters=iters, chunk=chunk)
                 for i in range(0, pts.shape[0], chunk)]
        return np.concatenate(parts)
    n = pts.shape[0]
    offs = _cube_offsets(B.dim, samples)
    f2 = B.frob2()

    def gvals(r: np.ndarray) -> np.ndarray:
        batch = pts[:, None, :] + r[:, None, None] * offs[None, :, :]
        vals = f2.eval(batch.reshape(-1, B.dim)).reshape(n, -1)
        return r * r * np.sqrt(np.maximum(vals.max(axis=1), 0.0))

    # bracket from the derivative-sum surrogate, then expand where needed
    mt = m_tilde_profile(B, pts)
    lo = 0.02 / np.maximum(mt, 1e-12)
    hi = 50.0 / np.maximum(mt, 1e-12)
    for _ in range(60):
        bad = gvals(lo) >= 1.0
        if not bad.any():
            break
        lo[bad] *= 0.5
    for _ in range(60):
        bad = gvals(hi) <= 1.0
        if not bad.any():
            break
        hi[bad] *= 2.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = gvals(mid) <= 1.0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 2.0 / (lo + hi)


def m_tilde_profile(B: PolyMatrixField, points) -> np.ndarray:
    """m~(x, B) on a batch of points."""
    pts = np.asarray(points, dtype=float).reshape(-1, B.dim)
    deg = max(B.degree, 0)
    total = np.zeros(pts.shape[0])
    for k in range(deg + 1):
        for alpha in multi_indices(B.dim, k):
            sq = np.zeros(pts.shape[0])
            for (j, l), p in B.upper_entries():
                dp = p.deriv(alpha)
                if dp.is_zero():
                    continue
                sq += 2.0 * dp.eval(pts) ** 2
            nz = sq > 0.0
            total[nz] += np.sqrt(sq[nz]) ** (1.0 / (k + 2))
    return total


# ----------------------------------------------------------------------
# Taylor models and their invariant structure
# ----------------------------------------------------------------------

def taylor_model(B: PolyMatrixField, y, kappa: int | None = None,
                 tol: float = DEFAULT_TOL, kappa_max: int = DEFAULT_KAPPA_MAX) -> ModelData:
    """Leading homogeneous model (P_y, A_y) of B at y.

    P_y is the degree-kappa Taylor part of B(. + y) at 0 (all lower orders
    vanish by the definition of kappa).  A_y is assembled term-wise: a
    monomial c x^alpha in P_lj contributes c x_l x^alpha / (|alpha| + 2)
    to component j, which yields curl A_y = P_y exactly.
    """
    y = np.asarray(y, dtype=float)
    if kappa is None:
        kappa = vanishing_order(B, y, tol=tol, kappa_max=kappa_max)
        if kappa is None:
            raise ZeroFieldError("field vanishes beyond kappa_max at this point")
    d = B.dim
    upper = {}
    for (j, l), p in B.upper_entries():
        terms = {}
        for alpha in multi_indices(d, kappa):
            fact = 1.0
            for a in alpha:
                fact *= math.factorial(a)
            c = p.deriv(alpha).eval(y) / fact
            if c != 0.0:
                terms[alpha] = c
        upper[(j, l)] = Polynomial(d, terms)
    P = PolyMatrixField.from_upper(d, upper)

    comps = [Polynomial.zero(d) for _ in range(d)]
    for l in range(d):
        for j in range(d):
            entry = P.entry(l, j)
            for alpha, c in entry.terms.items():
                new = list(alpha)
                new[l] += 1
                comps[j] = comps[j] + Polynomial.monomial(d, new, c / (sum(alpha) + 2))
    A_model = PolyVectorField(tuple(comps))

    V = invariant_subspace(P, kappa=kappa)
    sig = None
    if kappa >= 1 and V.shape[0] < d:
        sig = _sigma_from_gradients(_pair_gradients(B, y, kappa))
    return ModelData(y=tuple(y.tolist()), kappa=kappa, P=P, A_model=A_model,
                     V_basis=V, sigma=sig, normalization=1.0)


def invariant_subspace(P: PolyMatrixField, kappa: int | None = None) -> np.ndarray:
    """Orthonormal basis (rows) of {z : P(x + z) = P(x) for all x}.

    For a homogeneous field of degree kappa this is the common null space
    of the gradients of all order kappa-1 derivatives of the entries.
    """
    d = P.dim
    if kappa is None:
        kappa = max(P.degree, 0)
    if kappa == 0:
        return np.eye(d)
    rows = []
    for alpha in multi_indices(d, kappa - 1):
        for (j, l), p in P.upper_entries():
            dp = p.deriv(alpha)
            rows.append([dp.diff(i).eval(np.zeros(d)) for i in range(d)])
    G = np.asarray(rows, dtype=float)
    if not G.any():
        return np.eye(d)
    u, s, vt = np.linalg.svd(G)
    rank = int(np.sum(s > SVD_NULL_RTOL * s[0]))
    return vt[rank:].copy()


def _pair_gradients(B: PolyMatrixField, y, kappa: int) -> np.ndarray:
    """Rows grad d^alpha B_jl(y) over |alpha| = kappa-1 and j < l."""
    y = np.asarray(y, dtype=float)
    rows = []
    for alpha in multi_indices(B.dim, kappa - 1):
        for (j, l), p in B.upper_entries():
            dp = p.deriv(alpha)
            rows.append([dp.diff(i).eval(y) for i in range(B.dim)])
    return np.asarray(rows, dtype=float)


def _sigma_from_gradients(G: np.ndarray, n_samples: int = 4096) -> float:
    """min over unit z in (null G)^perp of sum_i |<z, G_i>|.

    Explicit in codimension one; otherwise dense sphere sampling in the
    orthogonal complement followed by a simplex polish.
    """
    u, s, vt = np.linalg.svd(G)
    rank = int(np.sum(s > SVD_NULL_RTOL * s[0])) if s.size else 0
    if rank == 0:
        return 0.0
    W = vt[:rank]  # orthonormal rows spanning V^perp
    H = G @ W.T    # objective reduces to sum_i |<c, H_i>| on the unit sphere of R^rank
    if rank == 1:
        return float(np.abs(H[:, 0]).sum())

    def f(c):
        c = np.asarray(c, dtype=float)
        nc = np.linalg.norm(c)
        if nc == 0.0:
            return np.inf
        return float(np.abs(H @ (c / nc)).sum())

    if rank == 2:
        angles = np.linspace(0.0, np.pi, n_samples, endpoint=False)
        cand = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    else:
        rng = np.random.default_rng(0x5EED)
        cand = rng.standard_normal((2 * n_samples, rank))
        cand /= np.linalg.norm(cand, axis=1, keepdims=True)
    vals = np.abs(cand @ H.T).sum(axis=1)
    c0 = cand[int(np.argmin(vals))]
    res = optimize.minimize(f, c0, method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 2000})
    return float(min(vals.min(), res.fun))


def sigma(B: PolyMatrixField, y, tol: float = DEFAULT_TOL,
          kappa_max: int = DEFAULT_KAPPA_MAX) -> float:
    """Transverse nondegeneracy of the leading model of B at y.

    min over unit z orthogonal to the invariant subspace of
    sum_{|alpha| = kappa-1} sum_{j<l} |<z, grad d^alpha B_jl(y)>|.
    Each unordered pair (j, l) is counted once.
    """
    kappa = vanishing_order(B, y, tol=tol, kappa_max=kappa_max)
    if kappa is None:
        raise ZeroFieldError("field vanishes beyond kappa_max at this point")
    if kappa == 0:
        raise ValueError("sigma undefined for a non-vanishing field (kappa = 0)")
    return _sigma_from_gradients(_pair_gradients(B, y, kappa))


def tau(V_basis: np.ndarray, n) -> float:
    """Norm of the orthogonal projection of the unit vector n onto span(V_basis)."""
    n = np.asarray(n, dtype=float)
    V = np.asarray(V_basis, dtype=float)
    if V.size == 0:
        return 0.0
    return float(np.linalg.norm(V @ n))


def _coeff_norm(mat: np.ndarray) -> float:
    return float(np.linalg.svd(mat, compute_uv=False)[0])


def normalize_model(md: ModelData) -> ModelData:
    """Rescale so the spectral norms of the degree-kappa coefficients sum to 1.

    The applied factor is recorded in `normalization`; eigenvalues of the
    normalized model map back through lambda(c A) = c^(2/(kappa+2)) scaling
    of lambda(A) for whole-space and half-space models.
    """
    coeffs: dict = {}
    d = md.P.dim
    for (j, l), p in md.P.upper_entries():
        for alpha, c in p.terms.items():
            m = coeffs.setdefault(alpha, np.zeros((d, d)))
            m[j, l] = c
            m[l, j] = -c
    total = sum(_coeff_norm(m) for m in coeffs.values())
    if total == 0.0:
        raise ZeroFieldError("cannot normalize the zero model")
    inv = 1.0 / total
    sig = md.sigma * inv if md.sigma is not None else None
    return replace(md, P=md.P.scale(inv), A_model=md.A_model.scale(inv),
                   sigma=sig, normalization=md.normalization * total)


def model_scaling_exponent(kappa: int) -> float:
    """Eigenvalue scaling power: lambda(c A_hom) = c^(2/(kappa+2)) lambda(A_hom)."""
    return 2.0 / (kappa + 2)
