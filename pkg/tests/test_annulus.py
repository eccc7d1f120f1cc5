from __future__ import annotations

import cmath
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from skeinslide.annulus import (
    AnnularElement,
    annular_closure,
    annular_components,
    eigen_check,
    fold_index,
    fusion_reduce,
    fusion_times_x,
    omega,
    phi,
    spin_split,
    to_phi,
    to_x,
    verify_slide_identities,
)
from skeinslide.coeff import LaurentPoly, RatFunc, qint
from skeinslide.tl import TLElement, basis, identity_matching, jones_wenzl


def o_annular(m) -> tuple[int, int]:
    """Walk each loop, +1 for every closing strand run downwards, -1 upwards."""
    n = len(m) // 2
    seen = set()
    ess = triv = 0
    for s in range(2 * n):
        if s in seen:
            continue
        wind, p = 0, s
        while True:
            seen.add(p)
            p = m[p]
            seen.add(p)
            # leave through the closing strand attached to p
            if p >= n:
                wind += 1
                p -= n
            else:
                wind -= 1
                p += n
            if p == s:
                break
        if wind:
            assert abs(wind) == 1
            ess += 1
        else:
            triv += 1
    return ess, triv


@pytest.mark.parametrize("n", range(1, 6))
def test_annular_components_match_winding_oracle(n):
    for m in basis(n):
        assert annular_components(m) == o_annular(m)


def test_identity_closes_to_x_power():
    assert annular_components(identity_matching(3)) == (3, 0)


def cheb(k: int, x: float) -> float:
    a, b = 0.0, 1.0
    for _ in range(k):
        a, b = b, x * b - a
    return b


@pytest.mark.parametrize("k", range(0, 7))
def test_phi_is_chebyshev(k):
    # phi_k(2 cos t) = sin((k+1)t) / sin t
    p = phi(k)
    for t in (0.3, 1.1, 2.0):
        x = 2 * math.cos(t)
        val = sum(p.coeff(e).num.coeff(0) * x ** e for e in range(k + 1))
        assert abs(val - math.sin((k + 1) * t) / math.sin(t)) < 1e-9
        assert abs(cheb(k, x) - val) < 1e-9


@pytest.mark.parametrize("k", range(0, 7))
def test_closure_of_projector_is_phi(k):
    assert annular_closure(jones_wenzl(k)) == phi(k)


def test_phi_x_round_trip():
    v = omega(4)
    assert to_phi(to_x(v)) == v


def test_omega_coefficients():
    w = omega(2)
    assert {k: w.coeff(k) for k in range(3)} == {0: RatFunc(1), 1: RatFunc(qint(2)), 2: RatFunc(qint(3))}
    even, odd = spin_split(3)
    assert set(even.coeffs) == {0, 2} and set(odd.coeffs) == {1, 3}


def test_fold_index_pattern():
    N = 3
    assert fold_index(3, N) == (0, 0)
    assert fold_index(4, N) == (-1, 2)
    assert fold_index(5, N) == (-1, 1)
    assert fold_index(7, N) == (0, 0)
    assert fold_index(8, N) == (1, 0)


@pytest.mark.parametrize("N", [2, 3])
def test_slide_identities(N):
    checks = verify_slide_identities(N)
    assert all(c.passed for c in checks), [c for c in checks if not c.passed]


@pytest.mark.parametrize("N", range(2, 9))
def test_omega_is_eigenvector(N):
    assert eigen_check(N).passed


def test_slide_identities_only_for_two_and_three():
    with pytest.raises(ValueError):
        verify_slide_identities(4)


def test_omega_not_eigenvector_without_quotient():
    w = to_x(omega(2))
    assert AnnularElement.X() * w != w.scale(RatFunc(qint(2)))


# Numeric oracle: at q0 = exp(i pi / (N+1)) the level-N quotient is the ring of
# functions on X_j = 2 cos(j pi / (N+1)), j = 1..N.

def ev_poly(p, z: complex) -> complex:
    return sum(complex(float(c)) * z ** i for i, c in enumerate(p.coeffs()))


def ev_laurent(p: LaurentPoly, z: complex) -> complex:
    return sum(c * z ** e for e, c in p.terms.items())


def ev_rat(c: RatFunc, z: complex) -> complex:
    return ev_laurent(c.num, z) / ev_laurent(c.den, z)


coeff_st = st.dictionaries(st.integers(-3, 3), st.integers(-4, 4), max_size=3)
elem_st = st.dictionaries(st.integers(0, 7), coeff_st.map(LaurentPoly), max_size=4)


@settings(max_examples=40, deadline=None)
@given(elem_st, st.integers(2, 6))
def test_fusion_reduce_is_evaluation(terms, N):
    x = AnnularElement({e: RatFunc(c) for e, c in terms.items() if not c.is_zero()})
    q0 = cmath.exp(1j * math.pi / (N + 1))
    red = fusion_reduce(x, N)
    for j in range(1, N + 1):
        X = 2 * math.cos(j * math.pi / (N + 1))
        direct = sum(ev_rat(x.coeff(e), q0) * X ** e for e in x.coeffs)
        via = sum(ev_poly(c, q0) * cheb(k, X) for k, c in enumerate(red.coeffs))
        assert abs(direct - via) < 1e-6


@pytest.mark.parametrize("N", range(2, 7))
def test_times_x_matches_product(N):
    x = AnnularElement({0: RatFunc(LaurentPoly({1: 1})), 3: RatFunc(2)})
    assert fusion_times_x(fusion_reduce(x, N)) == fusion_reduce(AnnularElement.X() * x, N)


def test_closure_counts_trivial_loops():
    e = TLElement.e(1, 2)
    assert annular_closure(e) == AnnularElement({0: RatFunc(qint(2))})
