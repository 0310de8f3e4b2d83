"""Exact multivariate polynomial arithmetic for magnetic potentials and fields.

A potential A: R^d -> R^d is a vector of polynomials; the field B = curl A is
the antisymmetric matrix with entries B_jk = dA_k/dx_j - dA_j/dx_k.  All
calculus here (differentiation, line/ray integration, linear changes of
variables) is done term-wise on monomials, so results are exact up to float
round-off.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Polynomial",
    "PolyVectorField",
    "PolyMatrixField",
    "curl",
    "gradient",
    "multi_indices",
]


def multi_indices(dim: int, order: int):
    """All exponent tuples alpha with |alpha| = order, lexicographic."""
    if dim == 1:
        yield (order,)
        return
    for head in range(order, -1, -1):
        for tail in multi_indices(dim - 1, order - head):
            yield (head,) + tail


@dataclass(frozen=True)
class Polynomial:
    """Real polynomial in `dim` variables, stored as {exponents: coeff}.

    Zero-coefficient terms are never stored; the zero polynomial has an
    empty term map.
    """

    dim: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {}
        for exps, c in self.terms.items():
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.dim or any(e < 0 for e in exps):
                raise ValueError(f"bad exponent tuple {exps} for dim {self.dim}")
            c = float(c)
            if c != 0.0:
                cleaned[exps] = cleaned.get(exps, 0.0) + c
        object.__setattr__(self, "terms", {e: c for e, c in cleaned.items() if c != 0.0})

    # -- constructors -------------------------------------------------

    @staticmethod
    def zero(dim: int) -> "Polynomial":
        return Polynomial(dim, {})

    @staticmethod
    def constant(dim: int, value: float) -> "Polynomial":
        return Polynomial(dim, {(0,) * dim: value})

    @staticmethod
    def monomial(dim: int, exponents, coeff: float = 1.0) -> "Polynomial":
        return Polynomial(dim, {tuple(exponents): coeff})

    @staticmethod
    def variable(dim: int, axis: int) -> "Polynomial":
        exps = [0] * dim
        exps[axis] = 1
        return Polynomial(dim, {tuple(exps): 1.0})

    # -- basic queries -------------------------------------------------

    @property
    def degree(self) -> int:
        """Max |alpha| over stored terms; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(e) for e in self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    # -- algebra --------------------------------------------------------

    def _check_dim(self, other: "Polynomial"):
        if self.dim != other.dim:
            raise ValueError("dimension mismatch")

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._check_dim(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            out[e] = out.get(e, 0.0) + c
        return Polynomial(self.dim, out)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __neg__(self) -> "Polynomial":
        return Polynomial(self.dim, {e: -c for e, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return self.scale(float(other))
        self._check_dim(other)
        out: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return Polynomial(self.dim, out)

    __rmul__ = __mul__

    def scale(self, factor: float) -> "Polynomial":
        return Polynomial(self.dim, {e: factor * c for e, c in self.terms.items()})

    # -- calculus --------------------------------------------------------

    def diff(self, axis: int) -> "Polynomial":
        out = {}
        for exps, c in self.terms.items():
            e = exps[axis]
            if e == 0:
                continue
            new = list(exps)
            new[axis] = e - 1
            key = tuple(new)
            out[key] = out.get(key, 0.0) + c * e
        return Polynomial(self.dim, out)

    def deriv(self, alpha) -> "Polynomial":
        """Partial derivative d^alpha for a multi-index alpha."""
        p = self
        for axis, k in enumerate(alpha):
            for _ in range(int(k)):
                p = p.diff(axis)
                if p.is_zero():
                    return p
        return p

    # -- evaluation -------------------------------------------------------

    def __call__(self, points):
        return self.eval(points)

    def eval(self, points):
        """Evaluate at one point (shape (d,)) or many (shape (N, d))."""
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        P = pts.reshape(-1, self.dim)
        out = np.zeros(P.shape[0])
        for exps, c in self.terms.items():
            t = np.full(P.shape[0], c)
            for i, e in enumerate(exps):
                if e == 1:
                    t *= P[:, i]
                elif e > 1:
                    t *= P[:, i] ** e
            out += t
        return float(out[0]) if single else out

    # -- changes of variables ----------------------------------------------

    def compose_linear(self, mat) -> "Polynomial":
        """p(M x): substitute x_i -> sum_j M[i, j] x_j, expanded exactly."""
        M = np.asarray(mat, dtype=float)
        if M.shape != (self.dim, self.dim):
            raise ValueError("matrix shape mismatch")
        rows = [
            Polynomial(self.dim, {tuple(int(j == k) for k in range(self.dim)): M[i, j]
                                  for j in range(self.dim) if M[i, j] != 0.0})
            for i in range(self.dim)
        ]
        out = Polynomial.zero(self.dim)
        for exps, c in self.terms.items():
            t = Polynomial.constant(self.dim, c)
            for i, e in enumerate(exps):
                for _ in range(e):
                    t = t * rows[i]
            out = out + t
        return out

    def shift(self, y) -> "Polynomial":
        """p(x + y), expanded exactly via the binomial theorem."""
        y = np.asarray(y, dtype=float)
        out = Polynomial.zero(self.dim)
        for exps, c in self.terms.items():
            t = Polynomial.constant(self.dim, c)
            for i, e in enumerate(exps):
                xi = Polynomial(self.dim, {
                    tuple(int(i == k) for k in range(self.dim)): 1.0,
                    (0,) * self.dim: y[i],
                })
                for _ in range(e):
                    t = t * xi
            out = out + t
        return out

    def __repr__(self):
        if not self.terms:
            return "Polynomial(0)"
        bits = []
        for exps in sorted(self.terms, key=lambda e: (sum(e), e)):
            mono = "*".join(f"x{i}^{e}" for i, e in enumerate(exps) if e) or "1"
            bits.append(f"{self.terms[exps]:+g}*{mono}")
        return "Polynomial(" + " ".join(bits) + ")"


@dataclass(frozen=True)
class PolyVectorField:
    """Vector of polynomials sharing one ambient dimension (a potential A)."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("empty vector field")
        d = comps[0].dim
        if any(p.dim != d for p in comps):
            raise ValueError("components disagree on dimension")
        if len(comps) != d:
            raise ValueError("need one component per dimension")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return self.components[0].dim

    @property
    def degree(self) -> int:
        return max(p.degree for p in self.components)

    def eval(self, points):
        pts = np.asarray(points, dtype=float)
        single = pts.ndim == 1
        P = pts.reshape(-1, self.dim)
        out = np.stack([p.eval(P) for p in self.components], axis=1)
        return out[0] if single else out

    def scale(self, factor: float) -> "PolyVectorField":
        return PolyVectorField(tuple(p.scale(factor) for p in self.components))

    def __add__(self, other: "PolyVectorField") -> "PolyVectorField":
        return PolyVectorField(tuple(a + b for a, b in zip(self.components, other.components)))

    def shift(self, y) -> "PolyVectorField":
        return PolyVectorField(tuple(p.shift(y) for p in self.components))

    def rotate(self, mat) -> "PolyVectorField":
        """Pull-back under the orthogonal change of variables x = M y.

        Returns A' with A'_i(y) = sum_k M[k, i] * A_k(M y), so that
        (D + A')^2 on the rotated domain is unitarily equivalent to
        (D + A)^2 on the original one.
        """
        M = np.asarray(mat, dtype=float)
        moved = [p.compose_linear(M) for p in self.components]
        comps = []
        for i in range(self.dim):
            acc = Polynomial.zero(self.dim)
            for k in range(self.dim):
                if M[k, i] != 0.0:
                    acc = acc + moved[k].scale(M[k, i])
            comps.append(acc)
        return PolyVectorField(tuple(comps))


@dataclass(frozen=True)
class PolyMatrixField:
    """Antisymmetric matrix of polynomials (a magnetic field B)."""

    entries: tuple  # tuple of tuples, d x d

    def __post_init__(self):
        rows = tuple(tuple(row) for row in self.entries)
        d = len(rows)
        if any(len(row) != d for row in rows):
            raise ValueError("entries must be square")
        for j in range(d):
            for k in range(d):
                if rows[j][k].dim != d:
                    raise ValueError("entry dimension mismatch")
                anti = rows[j][k] + rows[k][j]
                if not anti.is_zero():
                    raise ValueError("entries are not exactly antisymmetric")
        object.__setattr__(self, "entries", rows)

    @staticmethod
    def from_upper(dim: int, upper: dict) -> "PolyMatrixField":
        """Build from {(j, k): Polynomial} with j < k; lower triangle is -upper."""
        zero = Polynomial.zero(dim)
        rows = [[zero for _ in range(dim)] for _ in range(dim)]
        for (j, k), p in upper.items():
            if not (0 <= j < k < dim):
                raise ValueError(f"bad index pair {(j, k)}")
            rows[j][k] = p
            rows[k][j] = -p
        return PolyMatrixField(tuple(tuple(r) for r in rows))

    @property
    def dim(self) -> int:
        return len(self.entries)

    @property
    def degree(self) -> int:
        return max(p.degree for row in self.entries for p in row)

    def is_zero(self) -> bool:
        return all(p.is_zero() for row in self.entries for p in row)

    def entry(self, j: int, k: int) -> Polynomial:
        return self.entries[j][k]

    def upper_entries(self):
        d = self.dim
        for j in range(d):
            for k in range(j + 1, d):
                yield (j, k), self.entries[j][k]

    def scale(self, factor: float) -> "PolyMatrixField":
        return PolyMatrixField(tuple(tuple(p.scale(factor) for p in row) for row in self.entries))

    def deriv(self, alpha) -> "PolyMatrixField":
        return PolyMatrixField(tuple(tuple(p.deriv(alpha) for p in row) for row in self.entries))

    def deriv_coeff_matrix(self, alpha, point) -> np.ndarray:
        """The constant matrix d^alpha B evaluated at `point`."""
        x = np.asarray(point, dtype=float)
        d = self.dim
        out = np.zeros((d, d))
        for (j, k), p in self.upper_entries():
            v = p.deriv(alpha).eval(x)
            out[j, k] = v
            out[k, j] = -v
        return out

    def frob2(self) -> Polynomial:
        """The polynomial |B(x)|_F^2 = 2 * sum_{j<k} B_jk(x)^2."""
        acc = Polynomial.zero(self.dim)
        for _, p in self.upper_entries():
            acc = acc + (p * p).scale(2.0)
        return acc

    def frobenius(self, points):
        """Frobenius norm |B(x)|_F at one or many points."""
        vals = self.frob2().eval(points)
        return math.sqrt(vals) if np.isscalar(vals) else np.sqrt(np.maximum(vals, 0.0))


def gradient(p: Polynomial) -> PolyVectorField:
    return PolyVectorField(tuple(p.diff(i) for i in range(p.dim)))


def curl(A: PolyVectorField) -> PolyMatrixField:
    """B_jk = dA_k/dx_j - dA_j/dx_k, computed term-wise."""
    d = A.dim
    upper = {}
    for j in range(d):
        for k in range(j + 1, d):
            upper[(j, k)] = A.components[k].diff(j) - A.components[j].diff(k)
    return PolyMatrixField.from_upper(d, upper)


def derivative_norms(B: PolyMatrixField, point, max_order: int):
    """Frobenius norms of d^alpha B(point), grouped by |alpha| = 0..max_order.

    Returns a list of lists: norms[k] holds |d^alpha B(point)|_F for every
    multi-index with |alpha| = k.
    """
    out = []
    for k in range(max_order + 1):
        vals = []
        for alpha in multi_indices(B.dim, k):
            m = B.deriv_coeff_matrix(alpha, point)
            vals.append(float(np.linalg.norm(m)))
        out.append(vals)
    return out
