"""Ground-state energies of homogeneous polynomial models on R^d and half-spaces.

Whole-space and half-space energies are obtained by solving on growing
truncation boxes and removing the leading 1/R^2 window error by least
squares.  Closed forms for constant fields (half the trace of |B|) and a
one-dimensional reduction of the 2-D linear-field model serve as
independent oracles.  theta_coefficients assembles the asymptotic
prefactors: the minimum of whole-space model energies over the interior
maximal-vanishing set against half-space energies over its boundary part.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import discretize as dz
from .field_core import taylor_model
from .geometry import GammaReport, HalfSpaceBox, Rectangle
from .poly import PolyMatrixField, PolyVectorField

log = logging.getLogger(__name__)

__all__ = [
    "ModelProblemSpec",
    "TruncationResult",
    "ThetaCoefficients",
    "lambda_whole_space",
    "lambda_half_space",
    "tr_plus",
    "montgomery_reduced",
    "theta_coefficients",
    "ModelKnobs",
]

@dataclass(frozen=True)
class ModelProblemSpec:
    """One homogeneous model problem.

    A_hom must be homogeneous of degree kappa+1; the half-space setting
    carries the outward normal of the boundary hyperplane.  nodes_across
    fixes the number of grid nodes across the truncation box (so h = 2R /
    nodes_across, the default matching h = R/128).
    """

    A_hom: PolyVectorField
    kappa: int
    setting: str = "whole_space"            # or "half_space"
    normal: tuple | None = None
    bc: str = "dirichlet"                   # dirichlet | neumann | dtn
    R_list: tuple = (4.0, 6.0, 8.0)         # half-space runs default to (6, 8, 12)
    nodes_across: int = 256
    tol: float = 1e-8
    seed: int = dz.DEFAULT_SEED

    def __post_init__(self):
        if self.setting not in ("whole_space", "half_space"):
            raise ValueError(f"unknown setting {self.setting!r}")
        if self.setting == "whole_space" and self.bc != "dirichlet":
            raise ValueError("whole-space models force the dirichlet condition")
        if self.setting == "half_space" and self.normal is None:
            raise ValueError("half-space models need a normal")
        if len(self.R_list) < 3:
            raise ValueError("need at least three truncation radii")
        if list(self.R_list) != sorted(self.R_list):
            raise ValueError("R_list must be increasing")
        _check_homogeneous(self.A_hom, self.kappa + 1)


def _check_homogeneous(A: PolyVectorField, degree: int):
    for p in A.components:
        for exps in p.terms:
            if sum(exps) != degree:
                raise ValueError(f"potential not homogeneous of degree {degree}")


@dataclass
class TruncationResult:
    lam_inf: float
    error_bar: float
    C_fit: float
    rows: list                   # (R, h, lam, residual)
    bc: str
    setting: str

    def truncation_rate(self):
        """Log-log slope of lam(R) - lam_inf; nan if any difference <= 0."""
        R = np.array([r[0] for r in self.rows])
        lam = np.array([r[2] for r in self.rows])
        diffs = lam - self.lam_inf
        if (diffs <= 0).any():
            return float("nan")
        return float(np.polyfit(np.log(R), np.log(diffs), 1)[0])


@dataclass
class ThetaCoefficients:
    theta_D: float | None
    theta_N: float | None
    theta_DN: float | None
    argmin: dict = field(default_factory=dict)
    branches: list = field(default_factory=list)   # (y, branch, bc, value, error_bar)


# ----------------------------------------------------------------------
# truncated model solves
# ----------------------------------------------------------------------

def _solve_on_box(spec: ModelProblemSpec, R: float):
    h = 2.0 * R / spec.nodes_across
    if spec.setting == "whole_space":
        domain = Rectangle(center=(0.0,) * spec.A_hom.dim, sides=(2.0 * R,) * spec.A_hom.dim)
        bc = "dirichlet"
        grid = dz.build_grid(domain, h)
        fs = dz.assemble(grid, spec.A_hom, 1.0, bc)
        res = dz.ground_state(fs, tol=spec.tol, seed=spec.seed)
    else:
        frame = HalfSpaceBox(normal=spec.normal, extent=R).frame()
        A_rot = spec.A_hom.rotate(frame.T)
        target = (0.0,) * (spec.A_hom.dim - 1) + (-1.0,)
        domain = HalfSpaceBox(normal=target, extent=R)
        grid = dz.build_grid(domain, h)
        bc = {"dirichlet": "dirichlet", "neumann": "mixed", "dtn": "dtn"}[spec.bc]
        fs = dz.assemble(grid, A_rot, 1.0, bc)
        if spec.bc == "dtn":
            res = dz.dtn_ground_state(fs, tol=spec.tol, seed=spec.seed)
        else:
            res = dz.ground_state(fs, tol=spec.tol, seed=spec.seed)
    return res, h


def _extrapolate(rows):
    """Fit lam(R) = lam_inf + C / R^2 by least squares."""
    R = np.array([r[0] for r in rows])
    lam = np.array([r[2] for r in rows])
    X = np.stack([np.ones_like(R), R ** -2.0], axis=1)
    coef, res_, *_ = np.linalg.lstsq(X, lam, rcond=None)
    lam_inf, C = float(coef[0]), float(coef[1])
    resid = lam - X @ coef
    dof = max(len(rows) - 2, 1)
    # intercept standard error from the fit residuals
    cov = np.linalg.inv(X.T @ X) * float(resid @ resid) / dof
    err = math.sqrt(max(cov[0, 0], 0.0)) + float(np.abs(resid).max())
    return lam_inf, C, err


def _run_truncation(spec: ModelProblemSpec) -> TruncationResult:
    rows = []
    for R in spec.R_list:
        res, h = _solve_on_box(spec, float(R))
        rows.append((float(R), h, res.lam, res.residual))
        log.info("model setting=%s bc=%s R=%g h=%g lam=%.8g residual=%.2e",
                 spec.setting, spec.bc, R, h, res.lam, res.residual)
    lams = [r[2] for r in rows]
    slack = 10.0 * max(r[3] for r in rows) + 1e-9 * max(abs(v) for v in lams)
    for a, b in zip(lams, lams[1:]):
        if b > a + slack:
            raise RuntimeError(
                f"truncation inconsistent: lam increased from {a:.8g} to {b:.8g} with R")
    lam_inf, C, err = _extrapolate(rows)
    return TruncationResult(lam_inf=lam_inf, error_bar=err, C_fit=C, rows=rows,
                            bc=spec.bc, setting=spec.setting)


def lambda_whole_space(spec: ModelProblemSpec) -> TruncationResult:
    """Whole-space ground energy via Dirichlet boxes and 1/R^2 extrapolation."""
    if spec.setting != "whole_space":
        raise ValueError("spec is not a whole-space problem")
    return _run_truncation(spec)


def lambda_half_space(spec: ModelProblemSpec) -> TruncationResult:
    """Half-space ground energy: rotate the potential so the boundary is the
    coordinate face, solve on depth-R slabs with artificial Dirichlet
    truncation, extrapolate the 1/R^2 window error."""
    if spec.setting != "half_space":
        raise ValueError("spec is not a half-space problem")
    return _run_truncation(spec)


# ----------------------------------------------------------------------
# oracles
# ----------------------------------------------------------------------

def tr_plus(B_const) -> float:
    """Half the trace of (B* B)^(1/2) for a constant antisymmetric matrix."""
    B = np.asarray(B_const, dtype=float)
    if B.shape[0] != B.shape[1] or not np.allclose(B, -B.T, atol=1e-12):
        raise ValueError("expected a constant antisymmetric matrix")
    return 0.5 * float(np.linalg.svd(B, compute_uv=False).sum())


def montgomery_reduced(b: float, half_width: float = 12.0, n_points: int = 4001,
                       xi_max: float = 4.0) -> float:
    """Ground energy of the 2-D model with B_12 = b x_1 on the whole plane.

    Fourier reduction in the invariant direction leaves the family
    -d^2/dt^2 + (b t^2 / 2 - xi)^2; the minimum over xi is located by
    golden-section search over finite-difference eigenvalues.  By scaling,
    the answer is b^(2/3) times the b = 1 value.
    """
    if b <= 0:
        raise ValueError("b must be positive")
    # reduce to b = 1 exactly, then scale back
    t = np.linspace(-half_width, half_width, n_points)
    dt = t[1] - t[0]
    off = np.full(n_points - 1, -1.0 / dt ** 2)

    def mu(xi: float) -> float:
        diag = 2.0 / dt ** 2 + (0.5 * t * t - xi) ** 2
        vals = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))[0]
        return float(vals[0])

    gr = (math.sqrt(5.0) - 1.0) / 2.0
    lo, hi = 0.0, xi_max
    c = hi - gr * (hi - lo)
    d = lo + gr * (hi - lo)
    fc, fd = mu(c), mu(d)
    for _ in range(60):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - gr * (hi - lo)
            fc = mu(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + gr * (hi - lo)
            fd = mu(d)
    xi_star = 0.5 * (lo + hi)
    if xi_star < 1e-3 or xi_star > xi_max - 1e-3:
        raise RuntimeError("frequency minimizer hit the search boundary; enlarge xi_max")
    val = mu(xi_star)
    # eigenfunction must be negligible at the interval ends
    diag = 2.0 / dt ** 2 + (0.5 * t * t - xi_star) ** 2
    w, v = eigh_tridiagonal(diag, off, select="i", select_range=(0, 0))
    edge = max(abs(v[0, 0]), abs(v[-1, 0])) / np.abs(v[:, 0]).max()
    if edge > 1e-8:
        raise RuntimeError("interval too small for the reduced problem")
    return float(b ** (2.0 / 3.0) * val)


# ----------------------------------------------------------------------
# asymptotic prefactors
# ----------------------------------------------------------------------

HALF_SPACE_R_LIST = (6.0, 8.0, 12.0)   # the 1/R^2 regime starts later than in free space


@dataclass(frozen=True)
class ModelKnobs:
    R_list: tuple = (4.0, 6.0, 8.0)
    half_space_R_list: tuple = HALF_SPACE_R_LIST
    nodes_across: int = 256
    max_interior_points: int = 4
    max_boundary_points: int = 4
    dedupe_decimals: int = 9
    tol: float = 1e-8
    seed: int = dz.DEFAULT_SEED


def _model_key(A: PolyVectorField, bc: str, setting: str, decimals: int):
    items = []
    for i, p in enumerate(A.components):
        for exps, c in sorted(p.terms.items()):
            items.append((i, exps, round(c, decimals)))
    return (setting, bc, tuple(items))


def _subsample(entries, limit):
    if len(entries) <= limit:
        return list(entries)
    idx = np.linspace(0, len(entries) - 1, limit).round().astype(int)
    return [entries[i] for i in sorted(set(idx.tolist()))]


def theta_coefficients(B: PolyMatrixField, gamma: GammaReport,
                       knobs: ModelKnobs = ModelKnobs(),
                       want=("D", "N", "DN")) -> ThetaCoefficients:
    """Asymptotic prefactors from local model problems.

    Interior maximal-vanishing points contribute whole-space energies of
    their Taylor models; boundary points contribute half-space energies
    with the outward normal.  Identical models (same rotated potential)
    are solved once.
    """
    cache: dict = {}
    branches = []

    def solve_cached(spec: ModelProblemSpec, y, branch):
        key = _model_key(spec.A_hom, spec.bc, spec.setting, knobs.dedupe_decimals)
        if spec.setting == "half_space":
            key = key + (tuple(np.round(spec.normal, knobs.dedupe_decimals)),)
        if key not in cache:
            runner = lambda_whole_space if spec.setting == "whole_space" else lambda_half_space
            cache[key] = runner(spec)
        out = cache[key]
        branches.append((tuple(y), branch, spec.bc, out.lam_inf, out.error_bar))
        return out

    interior = _subsample(gamma.gamma1, knobs.max_interior_points)
    boundary = _subsample(gamma.gamma2, knobs.max_boundary_points)
    bnd_dn = _subsample(gamma.gamma0, knobs.max_boundary_points)

    def model_at(y):
        return taylor_model(B, np.asarray(y, dtype=float))

    whole_vals = []
    for y, _k in interior:
        md = model_at(y)
        spec = ModelProblemSpec(A_hom=md.A_model, kappa=md.kappa,
                                setting="whole_space", bc="dirichlet",
                                R_list=knobs.R_list, nodes_across=knobs.nodes_across,
                                tol=knobs.tol, seed=knobs.seed)
        whole_vals.append(solve_cached(spec, y, "interior").lam_inf)

    half_vals = {"dirichlet": [], "neumann": []}
    for y, _k, n in boundary:
        md = model_at(y)
        for bc in ("dirichlet", "neumann"):
            if ("D" not in want and bc == "dirichlet") or ("N" not in want and bc == "neumann"):
                continue
            spec = ModelProblemSpec(A_hom=md.A_model, kappa=md.kappa,
                                    setting="half_space", normal=tuple(n), bc=bc,
                                    R_list=knobs.half_space_R_list,
                                    nodes_across=knobs.nodes_across,
                                    tol=knobs.tol, seed=knobs.seed)
            half_vals[bc].append(solve_cached(spec, y, "boundary").lam_inf)

    dn_vals = []
    if "DN" in want:
        for y, _k, n in bnd_dn:
            md = model_at(y)
            spec = ModelProblemSpec(A_hom=md.A_model, kappa=md.kappa,
                                    setting="half_space", normal=tuple(n), bc="dtn",
                                    R_list=knobs.half_space_R_list,
                                    nodes_across=knobs.nodes_across,
                                    tol=knobs.tol, seed=knobs.seed)
            dn_vals.append(solve_cached(spec, y, "boundary").lam_inf)

    argmin = {}

    def combine(interior_vals, bnd_vals, label):
        cands = []
        if interior_vals:
            cands.append(("interior", min(interior_vals)))
        if bnd_vals:
            cands.append(("boundary", min(bnd_vals)))
        if not cands:
            return None
        branch, val = min(cands, key=lambda t: t[1])
        argmin[label] = branch
        return val

    theta_D = combine(whole_vals, half_vals["dirichlet"], "D") if "D" in want else None
    theta_N = combine(whole_vals, half_vals["neumann"], "N") if "N" in want else None
    theta_DN = combine([], dn_vals, "DN") if "DN" in want else None
    if "D" in want and theta_D is None:
        raise ValueError("no maximal-vanishing points available for the Dirichlet prefactor")
    if "DN" in want and theta_DN is None and not gamma.gamma0:
        raise ValueError("no boundary maximal-vanishing points for the DtN prefactor")
    return ThetaCoefficients(theta_D=theta_D, theta_N=theta_N, theta_DN=theta_DN,
                             argmin=argmin, branches=branches)
