from __future__ import annotations

import pytest

from skeinslide.cob import Cob, Obj
from skeinslide.kom import (
    P2,
    P3,
    P3_PRINTED_SIGNS,
    Complex,
    Mat,
    PeriodicComplex,
    close_complex,
    d_squared_failures,
    decat_check,
    euler_char,
    p3_sign_report,
    projector_complex,
    simplify,
    tensor,
    trace_complex,
    turnback_check,
    validate,
)
from skeinslide.tl import generator_matching, identity_matching


def o_series(num: dict[int, int], den: dict[int, int], cut: int) -> dict[int, int]:
    """num/den in increasing powers of q, plain integer long division."""
    d0 = min(den)
    dn = {e - d0: c for e, c in den.items()}
    assert dn[0] in (1, -1)
    out: dict[int, int] = {}
    rest = {e - d0: c for e, c in num.items()}
    while rest:
        e = min(rest)
        if e >= cut:
            break
        c = rest[e] * dn[0]
        out[e] = c
        for k, v in dn.items():
            rest[e + k] = rest.get(e + k, 0) - c * v
        rest = {k: v for k, v in rest.items() if v}
    return {e: c for e, c in out.items() if c and e < cut}


def test_series_oracle_sanity():
    # -q / (1 + q^2)
    assert o_series({1: -1}, {0: 1, 2: 1}, 8) == {1: -1, 3: 1, 5: -1, 7: 1}


@pytest.mark.parametrize("c", [P2(), P3()], ids=["P2", "P3"])
def test_projectors_validate(c):
    checks = validate(c)
    assert all(ch.passed for ch in checks), [ch for ch in checks if not ch.passed]


def test_printed_p3_signs_fail_the_gate():
    bad = d_squared_failures(P3(signs=P3_PRINTED_SIGNS).unroll(8))
    assert bad
    report = {c.name: c for c in p3_sign_report()}
    assert not report["printed signs give d^2 = 0"].passed
    assert not report["some summand conjugation repairs the printed signs"].passed
    assert "(-1, -1)" in report["A sign choices passing the gate"].detail


def test_unroll_is_periodic():
    u = P3().unroll(14)
    for k in range(2, 10):
        assert [o.shifted(6) for o in u.level(k)] == u.level(k + 4)


@pytest.mark.parametrize("n,i", [(2, 1), (3, 1), (3, 2)])
def test_turnbacks_contractible(n, i):
    assert turnback_check(n, i, hmax=12).passed


def test_projector_is_not_contractible():
    # the identity summand survives simplification
    red = simplify(projector_complex(2), 12)
    assert [(k, str(o)) for k, o in red.summands() if k == 0]


def test_euler_characteristic_p2_matches_oracle():
    e = euler_char(P2(), 8)
    assert e[identity_matching(2)].as_dict() == {0: 1}
    assert e[generator_matching(1, 2)].as_dict() == o_series({1: -1}, {0: 1, 2: 1}, 8)


def test_euler_characteristic_p3_matches_oracle():
    cut = 20
    e = euler_char(P3(), cut)
    den = {-2: 1, 0: 1, 2: 1}  # [3]
    two_over_three = o_series({-1: -1, 1: -1}, den, cut)  # -[2]/[3]
    one_over_three = o_series({0: 1}, den, cut)
    m1, m2 = generator_matching(1, 3), generator_matching(2, 3)
    assert e[m1].as_dict() == two_over_three and e[m2].as_dict() == two_over_three
    others = [m for m in e if m not in (m1, m2, identity_matching(3))]
    assert len(others) == 2
    for m in others:
        assert e[m].as_dict() == one_over_three


@pytest.mark.parametrize("n", [2, 3])
def test_decat_check(n):
    assert decat_check(n, 20).passed


def test_simplify_preserves_euler_characteristic():
    c = close_complex(P2().unroll(10), [1])
    before = euler_char(c, 8)
    after = euler_char(simplify(c, 10), 8)
    assert {m: s.as_dict() for m, s in before.items() if s.as_dict()} == \
        {m: s.as_dict() for m, s in after.items() if s.as_dict()}


def test_trace_p2_starts_with_two_copies_of_z():
    summands = trace_complex(P2(), hmax=12)
    assert summands[:2] == [(0, -2), (0, 0)]


def test_cone_of_identity_is_contractible():
    o = Obj.tl(identity_matching(2))
    c = Complex(0, [[o], [o]], [Mat([o], [o], {(0, 0): Cob.identity(o)})])
    assert not simplify(c, 5).summands()


def test_d_squared_detects_bad_complex():
    a = Obj.tl(identity_matching(1))
    idm = Mat([a], [a], {(0, 0): Cob.identity(a)})
    c = Complex(0, [[a], [a], [a]], [idm, idm])
    assert d_squared_failures(c)


def test_json_round_trip():
    u = P3().unroll(8)
    assert Complex.from_json(u.to_json()).to_json() == u.to_json()
    p = P2()
    assert PeriodicComplex.from_json(p.to_json()).unroll(9).to_json() == p.unroll(9).to_json()


def test_projector_complex_range():
    with pytest.raises(ValueError):
        projector_complex(4)


@pytest.mark.parametrize("n", [2, 3])
def test_projector_squares_to_itself_objectwise(n):
    # reduced forms of P_n (x) P_n and P_n agree summand by summand in the window
    p = projector_complex(n)
    a = simplify(tensor(p, p, 10), 10)
    b = simplify(p, 10)
    assert [(k, str(o)) for k, o in a.summands() if k < 9] == [(k, str(o)) for k, o in b.summands() if k < 9]


def test_flipped_term_in_p2_is_located():
    # turning x - y into x + y on d_2 breaks both composites through it
    u = P2().unroll(8)
    diffs = list(u.diffs)
    (ij, f), = diffs[2].entries.items()
    (k0, v0), *rest = sorted(f.terms.items())
    diffs[2] = Mat(diffs[2].src, diffs[2].tgt, {ij: Cob(f.src, f.tgt, {k0: -v0, **dict(rest)})})
    assert d_squared_failures(Complex(u.start, u.levels, diffs)) == [(1, 2), (2, 3)]
