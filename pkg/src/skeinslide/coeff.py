"""Exact coefficient arithmetic.

Everything here is immutable.  Laurent polynomials are stored as
``q**val * poly(q)`` with ``poly`` an integer polynomial whose constant term is
nonzero, which makes equality and hashing structural.  The heavy lifting
(multiplication, exact division, gcd) is delegated to FLINT.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import flint

_Z = flint.fmpz_poly


def _strip(poly: flint.fmpz_poly, val: int) -> tuple[flint.fmpz_poly, int]:
    """Move powers of q from ``poly`` into ``val``."""
    if poly.is_zero():
        return poly, 0
    coeffs = poly.coeffs()
    k = 0
    while coeffs[k] == 0:
        k += 1
    if k:
        poly = _Z(coeffs[k:])
    return poly, val + k


class LaurentPoly:
    """An element of Z[q, q^-1]."""

    __slots__ = ("_poly", "_val", "_hash")

    def __init__(self, terms: Mapping[int, int] | None = None):
        terms = {e: int(c) for e, c in (terms or {}).items() if c}
        if not terms:
            self._poly, self._val = _Z(), 0
        else:
            lo, hi = min(terms), max(terms)
            self._poly = _Z([terms.get(e, 0) for e in range(lo, hi + 1)])
            self._val = lo
        self._hash = None

    @classmethod
    def _raw(cls, poly: flint.fmpz_poly, val: int = 0) -> "LaurentPoly":
        out = cls.__new__(cls)
        out._poly, out._val = _strip(poly, val)
        out._hash = None
        return out

    @classmethod
    def monomial(cls, exp: int, coeff: int = 1) -> "LaurentPoly":
        return cls._raw(_Z([coeff]), exp) if coeff else cls()

    @classmethod
    def const(cls, c: int) -> "LaurentPoly":
        return cls.monomial(0, c)

    # -- structure -----------------------------------------------------------
    @property
    def terms(self) -> dict[int, int]:
        """Exponent -> coefficient map with zero coefficients removed."""
        return {self._val + i: int(c) for i, c in enumerate(self._poly.coeffs()) if c != 0}

    def items(self) -> list[tuple[int, int]]:
        return sorted(self.terms.items())

    def is_zero(self) -> bool:
        return self._poly.is_zero()

    @property
    def valuation(self) -> int:
        if self.is_zero():
            raise ValueError("zero polynomial has no valuation")
        return self._val

    @property
    def degree(self) -> int:
        if self.is_zero():
            raise ValueError("zero polynomial has no degree")
        return self._val + self._poly.degree()

    def coeff(self, exp: int) -> int:
        i = exp - self._val
        if self.is_zero() or i < 0 or i > self._poly.degree():
            return 0
        return int(self._poly.coeffs()[i])

    def as_poly(self) -> tuple[flint.fmpz_poly, int]:
        """Return ``(poly, val)`` with ``self == q**val * poly``."""
        return self._poly, self._val

    # -- arithmetic ----------------------------------------------------------
    @staticmethod
    def _coerce(other) -> "LaurentPoly":
        if isinstance(other, LaurentPoly):
            return other
        if isinstance(other, int):
            return LaurentPoly.const(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        v = min(self._val, other._val)
        a = self._poly.left_shift(self._val - v)
        b = other._poly.left_shift(other._val - v)
        return LaurentPoly._raw(a + b, v)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPoly._raw(-self._poly, self._val)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return LaurentPoly._raw(self._poly * other._poly, self._val + other._val)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            if len(self.terms) != 1 or abs(next(iter(self.terms.values()))) != 1:
                raise ValueError("only units can be inverted in Z[q, q^-1]")
            (e, c), = self.terms.items()
            return LaurentPoly.monomial(-e * -k, c ** (-k))
        return LaurentPoly._raw(self._poly ** k, self._val * k)

    def shift(self, k: int) -> "LaurentPoly":
        """Multiply by ``q**k``."""
        return LaurentPoly._raw(self._poly, self._val + k) if not self.is_zero() else self

    def subs_neg(self) -> "LaurentPoly":
        """q -> -q."""
        return LaurentPoly({e: c * (-1) ** (e % 2) for e, c in self.terms.items()})

    def subs_pow(self, k: int) -> "LaurentPoly":
        """q -> q**k for k >= 1."""
        return LaurentPoly({e * k: c for e, c in self.terms.items()})

    def bar(self) -> "LaurentPoly":
        """q -> q^-1."""
        return LaurentPoly({-e: c for e, c in self.terms.items()})

    def divexact(self, other: "LaurentPoly") -> "LaurentPoly":
        """Exact division; raises ``ArithmeticError`` when ``other`` does not divide."""
        try:
            quo = self._poly / other._poly
        except Exception as exc:  # flint raises DomainError
            raise ArithmeticError(f"{other} does not divide {self}") from exc
        return LaurentPoly._raw(quo, self._val - other._val)

    # -- comparisons ---------------------------------------------------------
    def __eq__(self, other):
        if isinstance(other, int):
            other = LaurentPoly.const(other)
        if not isinstance(other, LaurentPoly):
            return NotImplemented
        return self._val == other._val and self._poly == other._poly

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._val, tuple(int(c) for c in self._poly.coeffs())))
        return self._hash

    def __bool__(self):
        return not self.is_zero()

    def __repr__(self):
        return f"LaurentPoly({self.terms})"

    def __str__(self):
        return format_laurent(self.terms)


Q = LaurentPoly.monomial(1)
ONE = LaurentPoly.const(1)
ZERO = LaurentPoly()


def format_laurent(terms: Mapping[int, int], var: str = "q") -> str:
    if not terms:
        return "0"
    out = []
    for e in sorted(terms):
        c = terms[e]
        if e == 0:
            mono = str(abs(c))
        else:
            mono = var if e == 1 else f"{var}^{e}"
            if abs(c) != 1:
                mono = f"{abs(c)}*{mono}"
        out.append(("-" if c < 0 else "+", mono))
    s = ("-" if out[0][0] == "-" else "") + out[0][1]
    for sign, mono in out[1:]:
        s += f" {sign} {mono}"
    return s


def qint(n: int) -> LaurentPoly:
    """Quantum integer [n] = q^(n-1) + q^(n-3) + ... + q^(1-n)."""
    if n < 0:
        raise ValueError("qint expects n >= 0")
    return LaurentPoly({n - 1 - 2 * j: 1 for j in range(n)})


def qfactorial(n: int) -> LaurentPoly:
    out = ONE
    for k in range(1, n + 1):
        out = out * qint(k)
    return out


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % d for d in range(2, int(p ** 0.5) + 1))


def cyclotomic(p: int) -> LaurentPoly:
    """The p-th cyclotomic polynomial for prime p."""
    if not is_prime(p):
        raise ValueError(f"cyclotomic expects a prime, got {p}")
    return LaurentPoly({e: 1 for e in range(p)})


def cyclotomic_any(m: int) -> LaurentPoly:
    """Phi_m(q) for arbitrary m >= 1."""
    return LaurentPoly._raw(_Z.cyclotomic(m), 0)


# ---------------------------------------------------------------------------
# Rational functions
# ---------------------------------------------------------------------------

class RatFunc:
    """An element of Q(q) stored as num/den in lowest terms.

    ``den`` is an integer polynomial with nonzero constant term and positive
    leading coefficient; ``num`` is a Laurent polynomial.  With gcd(num, den)
    cancelled in Z[q] the representation is unique, so ``==`` is structural.
    """

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num, den=None):
        num = LaurentPoly._coerce(num)
        den = ONE if den is None else LaurentPoly._coerce(den)
        if den.is_zero():
            raise ZeroDivisionError("RatFunc with zero denominator")
        n_poly, n_val = num.as_poly()
        d_poly, d_val = den.as_poly()
        val = n_val - d_val
        if n_poly.is_zero():
            self.num, self.den = ZERO, ONE
        else:
            g = n_poly.gcd(d_poly)
            if not g.is_one():
                n_poly = n_poly / g
                d_poly = d_poly / g
            if d_poly.leading_coefficient() < 0:
                n_poly, d_poly = -n_poly, -d_poly
            self.num = LaurentPoly._raw(n_poly, val)
            self.den = LaurentPoly._raw(d_poly, 0)
        self._hash = None

    @classmethod
    def _trusted(cls, num: LaurentPoly, den: LaurentPoly) -> "RatFunc":
        out = cls.__new__(cls)
        out.num, out.den, out._hash = num, den, None
        return out

    @staticmethod
    def _coerce(other):
        if isinstance(other, RatFunc):
            return other
        if isinstance(other, (int, LaurentPoly)):
            return RatFunc._trusted(LaurentPoly._coerce(other), ONE) if not (
                isinstance(other, LaurentPoly) and other.is_zero()) else RatFunc._trusted(ZERO, ONE)
        return NotImplemented

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_laurent(self) -> bool:
        return self.den == ONE

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.den == other.den:
            return RatFunc(self.num + other.num, self.den)
        return RatFunc(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RatFunc._trusted(-self.num, self.den)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if self.is_zero() or other.is_zero():
            return RatFunc._trusted(ZERO, ONE)
        return RatFunc(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def inverse(self) -> "RatFunc":
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        return RatFunc(self.den, self.num)

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self._coerce(other) * self.inverse()

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        return RatFunc(self.num ** k, self.den ** k)

    def __eq__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    def __bool__(self):
        return not self.is_zero()

    def __repr__(self):
        return f"RatFunc({self.num!r}, {self.den!r})"

    def __str__(self):
        if self.den == ONE:
            return str(self.num)
        return f"({self.num})/({self.den})"


def ratfunc(x) -> RatFunc:
    out = RatFunc._coerce(x)
    if out is NotImplemented:
        raise TypeError(f"cannot interpret {x!r} as a rational function")
    return out


# ---------------------------------------------------------------------------
# Truncated Laurent series in positive powers of q
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TruncSeries:
    """A Laurent series known exactly for exponents below ``cutoff``."""

    cutoff: int
    terms: tuple[tuple[int, int], ...] = field(default=())

    @classmethod
    def make(cls, terms: Mapping[int, int] | Iterable[tuple[int, int]], cutoff: int) -> "TruncSeries":
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[int, int] = {}
        for e, c in items:
            if e < cutoff:
                acc[e] = acc.get(e, 0) + c
        return cls(cutoff, tuple(sorted((e, c) for e, c in acc.items() if c)))

    @classmethod
    def from_laurent(cls, p: LaurentPoly, cutoff: int) -> "TruncSeries":
        return cls.make(p.terms, cutoff)

    @property
    def low(self) -> int | None:
        return self.terms[0][0] if self.terms else None

    def as_dict(self) -> dict[int, int]:
        return dict(self.terms)

    def coeff(self, e: int) -> int:
        return self.as_dict().get(e, 0)

    def __add__(self, other: "TruncSeries") -> "TruncSeries":
        cut = min(self.cutoff, other.cutoff)
        return TruncSeries.make(list(self.terms) + list(other.terms), cut)

    def __neg__(self):
        return TruncSeries(self.cutoff, tuple((e, -c) for e, c in self.terms))

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other: "TruncSeries") -> "TruncSeries":
        if not self.terms or not other.terms:
            cut = min(self.cutoff, other.cutoff)
            return TruncSeries(cut, ())
        # a series with valuation v known below c is only known below c + (other valuation)
        cut = min(self.cutoff + other.low, other.cutoff + self.low)
        acc: dict[int, int] = {}
        for e1, c1 in self.terms:
            for e2, c2 in other.terms:
                e = e1 + e2
                if e < cut:
                    acc[e] = acc.get(e, 0) + c1 * c2
        return TruncSeries.make(acc, cut)

    def scale(self, c: int) -> "TruncSeries":
        return TruncSeries.make({e: c * v for e, v in self.terms}, self.cutoff)

    def shift(self, k: int) -> "TruncSeries":
        return TruncSeries(self.cutoff + k, tuple((e + k, c) for e, c in self.terms))

    def truncate(self, cutoff: int) -> "TruncSeries":
        return TruncSeries.make(self.terms, min(cutoff, self.cutoff))

    def agrees_with(self, other: "TruncSeries", cutoff: int | None = None) -> bool:
        cut = min(self.cutoff, other.cutoff) if cutoff is None else cutoff
        return self.truncate(cut).terms == other.truncate(cut).terms

    def __str__(self):
        return f"{format_laurent(dict(self.terms))} + O(q^{self.cutoff})"


def s_series(k: int, cutoff: int) -> TruncSeries:
    """Expansion of 1/[k] in positive powers of q, exact below ``cutoff``."""
    if k < 1:
        raise ValueError("s_series expects k >= 1")
    acc: dict[int, int] = {}
    i = 0
    while (2 * i + 1) * k - 1 < cutoff:
        lo = (2 * i + 1) * k - 1
        acc[lo] = acc.get(lo, 0) + 1
        acc[lo + 2] = acc.get(lo + 2, 0) - 1
        i += 1
    return TruncSeries.make(acc, cutoff)


def ratfunc_to_series(x: RatFunc, cutoff: int) -> TruncSeries:
    """Expand num/den in positive powers of q through q^(cutoff-1).

    The lowest coefficient of the denominator must be +-1 so that the
    expansion has integer coefficients.
    """
    x = ratfunc(x)
    if x.is_zero():
        return TruncSeries(cutoff, ())
    d_poly, d_val = x.den.as_poly()
    d = [int(c) for c in d_poly.coeffs()]
    if abs(d[0]) != 1:
        raise ValueError(f"denominator {x.den} does not have unit lowest coefficient")
    num = x.num.shift(-d_val)
    # inverse of d as a power series, exact below (cutoff - valuation(num))
    length = cutoff - num.valuation
    if length <= 0:
        return TruncSeries(cutoff, ())
    inv = [0] * length
    for j in range(length):
        s = 1 if j == 0 else 0
        for i in range(1, min(j, len(d) - 1) + 1):
            s -= d[i] * inv[j - i]
        inv[j] = s * d[0]
    acc: dict[int, int] = {}
    for e, c in num.terms.items():
        for j, v in enumerate(inv):
            if v and e + j < cutoff:
                acc[e + j] = acc.get(e + j, 0) + c * v
    return TruncSeries.make(acc, cutoff)


# ---------------------------------------------------------------------------
# The cyclotomic ring K^p = Z[q, q^-1] / (phi_p(q^2))
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CycloElem:
    """Element of Z[q, q^-1]/(phi_p(q^2)) with a canonical polynomial representative."""

    p: int
    rep: LaurentPoly

    @staticmethod
    def modulus(p: int) -> LaurentPoly:
        return cyclotomic(p).subs_pow(2)

    @classmethod
    def reduce(cls, p: int, f: LaurentPoly) -> "CycloElem":
        if p % 2 == 0 or not is_prime(p):
            raise ValueError("K^p is defined here for odd primes p")
        m_poly, _ = cls.modulus(p).as_poly()
        poly, val = f.as_poly()
        if poly.is_zero():
            return cls(p, ZERO)
        if val < 0:
            # q * h(q) = m(q) - 1 with m(0) = 1, so q^-1 = -h(q) modulo m
            h = _Z(m_poly.coeffs()[1:])
            qinv = (-h) % m_poly
            poly = (poly * (qinv ** (-val))) % m_poly
        else:
            poly = poly.left_shift(val) % m_poly
        return cls(p, LaurentPoly._raw(poly, 0))

    def __add__(self, other: "CycloElem") -> "CycloElem":
        return CycloElem.reduce(self.p, self.rep + other.rep)

    def __mul__(self, other: "CycloElem") -> "CycloElem":
        return CycloElem.reduce(self.p, self.rep * other.rep)

    def is_zero(self) -> bool:
        return self.rep.is_zero()


# ---------------------------------------------------------------------------
# Bridge between killing the projector and evaluating at a root of unity
# ---------------------------------------------------------------------------

@dataclass
class Check:
    """Outcome of a single named identity check."""

    name: str
    passed: bool
    detail: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


class IdentityError(AssertionError):
    pass


def verify_root_bridge(p: int, samples: Iterable[LaurentPoly] | None = None,
                       strict: bool = False) -> list[Check]:
    """Check q^(p-1)[p] = phi_p(q^2) = phi_p(q) phi_p(-q) and that <[p]> dies in K^p.

    The factorisation identity is only sign-exact for odd p; for p = 2 it is
    reported as skipped.  With ``strict`` the first failure raises
    :class:`IdentityError` carrying the nonzero difference.
    """
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    checks = []
    phi = cyclotomic(p)
    lhs = qint(p).shift(p - 1)
    diff = lhs - phi.subs_pow(2)
    checks.append(Check("q^(p-1)[p] = phi_p(q^2)", diff.is_zero(),
                        f"{lhs} vs {phi.subs_pow(2)}; difference {diff}"))
    if p == 2:
        checks.append(Check("phi_p(q^2) = phi_p(q)phi_p(-q)", True,
                            "skipped for p = 2: product equals -phi_2(q^2)"))
    else:
        prod = phi * phi.subs_neg()
        diff = phi.subs_pow(2) - prod
        checks.append(Check("phi_p(q^2) = phi_p(q)phi_p(-q)", diff.is_zero(),
                            f"difference {diff}"))
        if samples is None:
            samples = [Q + 7, ONE, Q.shift(-3) - LaurentPoly.const(5), Q ** 4 * 3 - Q.shift(-1)]
        for g in samples:
            img = CycloElem.reduce(p, qint(p) * g)
            checks.append(Check(f"[{p}]*({g}) = 0 in K^{p}", img.is_zero(),
                                f"image {img.rep}"))
    if strict:
        for c in checks:
            if not c.passed:
                raise IdentityError(f"{c.name}: {c.detail}")
    return checks
