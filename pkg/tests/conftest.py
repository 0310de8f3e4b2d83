import numpy as np
import pytest

from maglab.poly import Polynomial, PolyMatrixField, PolyVectorField

X1 = Polynomial.variable(2, 0)
X2 = Polynomial.variable(2, 1)
ZERO = Polynomial.zero(2)


@pytest.fixture(scope="session")
def constant_potential():
    """Symmetric gauge for B_12 = 1."""
    return PolyVectorField((X2.scale(-0.5), X1.scale(0.5)))


@pytest.fixture(scope="session")
def montgomery_potential():
    """A = (0, x1^2/2), B_12 = x1."""
    return PolyVectorField((ZERO, Polynomial.monomial(2, (2, 0), 0.5)))


@pytest.fixture(scope="session")
def kappa2_potential():
    """A = (0, x1^3/3), B_12 = x1^2."""
    return PolyVectorField((ZERO, Polynomial.monomial(2, (3, 0), 1.0 / 3.0)))


@pytest.fixture(scope="session")
def montgomery_field():
    return PolyMatrixField.from_upper(2, {(0, 1): X1})


def random_potential(rng, dim=2, degree=3, scale=1.0):
    comps = []
    for _ in range(dim):
        terms = {}
        for _ in range(4):
            exps = tuple(int(rng.integers(0, degree + 1)) for _ in range(dim))
            if sum(exps) > degree:
                continue
            terms[exps] = terms.get(exps, 0.0) + scale * float(rng.standard_normal())
        comps.append(Polynomial(dim, terms))
    return PolyVectorField(tuple(comps))
