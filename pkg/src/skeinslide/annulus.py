"""The skein module of the annulus and its fusion quotients.

Elements are polynomials in X, the essential circle, or combinations of the
Chebyshev elements phi_k (the annular closure of p_k).  Disjoint circles in
the annulus nest, so multiplication is polynomial multiplication in X.

Quotienting by the ideal of p_N kills phi_N, and then X phi_N = phi_{N+1} +
phi_{N-1} gives phi_{N+m} = -phi_{N-m}.  The closed evaluation of p_N is
[N+1], so scalars are read modulo [N+1].  Since [k] is already a unit for
k <= N, this is the same as reading them modulo Phi_{N+1}(q^2), the one
cyclotomic factor of q^N [N+1] that is not a factor of some [k] with k <= N.
We do the scalar arithmetic in Q[q]/(Phi_{N+1}(q^2)).
"""

from __future__ import annotations

import functools
from typing import Mapping

import flint

from .coeff import Check, LaurentPoly, RatFunc, cyclotomic_any, qint, ratfunc
from .tl import Matching, TLElement, strands


class _Combination:
    """Finitely supported map from non-negative integers to RatFunc."""

    __slots__ = ("coeffs",)
    label = "?"

    def __init__(self, coeffs: Mapping[int, object] | None = None):
        clean = {}
        for k, c in (coeffs or {}).items():
            if k < 0:
                raise ValueError("indices are non-negative")
            c = ratfunc(c)
            if not c.is_zero():
                clean[k] = c
        self.coeffs: dict[int, RatFunc] = clean

    def __add__(self, other):
        self._same(other)
        out = dict(self.coeffs)
        for k, c in other.coeffs.items():
            out[k] = out[k] + c if k in out else c
        return type(self)(out)

    def __neg__(self):
        return type(self)({k: -c for k, c in self.coeffs.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c):
        c = ratfunc(c)
        return type(self)({k: c * v for k, v in self.coeffs.items()})

    def coeff(self, k: int) -> RatFunc:
        return self.coeffs.get(k, RatFunc(0))

    def is_zero(self) -> bool:
        return not self.coeffs

    def degree(self) -> int:
        return max(self.coeffs, default=-1)

    def _same(self, other):
        if type(other) is not type(self):
            raise TypeError(f"cannot combine {type(self).__name__} and {type(other).__name__}")

    def __eq__(self, other):
        if type(other) is not type(self):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash((type(self).__name__, frozenset(self.coeffs.items())))

    def __repr__(self):
        body = " + ".join(f"({c}){self.label}{k}" for k, c in sorted(self.coeffs.items()))
        return f"{type(self).__name__}({body or '0'})"

    def to_dict(self) -> dict[str, str]:
        return {str(k): str(c) for k, c in sorted(self.coeffs.items())}


class AnnularElement(_Combination):
    """sum_k c_k X^k."""

    label = "X^"

    @classmethod
    def X(cls, power: int = 1) -> "AnnularElement":
        return cls({power: 1})

    def __mul__(self, other):
        if not isinstance(other, AnnularElement):
            return self.scale(other)
        out: dict[int, RatFunc] = {}
        for a, ca in self.coeffs.items():
            for b, cb in other.coeffs.items():
                out[a + b] = out[a + b] + ca * cb if a + b in out else ca * cb
        return AnnularElement(out)

    def __rmul__(self, other):
        return self.scale(other)


class PhiElement(_Combination):
    """sum_k c_k phi_k."""

    label = "phi_"

    @classmethod
    def basis(cls, k: int) -> "PhiElement":
        return cls({k: 1})

    def __mul__(self, other):
        if isinstance(other, PhiElement):
            return to_phi(to_x(self) * to_x(other))
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def times_x(self) -> "PhiElement":
        """X phi_k = phi_{k+1} + phi_{k-1}."""
        out: dict[int, RatFunc] = {}
        for k, c in self.coeffs.items():
            for j in (k + 1, k - 1):
                if j >= 0:
                    out[j] = out[j] + c if j in out else c
        return PhiElement(out)


@functools.lru_cache(maxsize=None)
def phi(k: int) -> AnnularElement:
    """phi_k in the X basis via phi_{k+1} = X phi_k - phi_{k-1}."""
    if k < 0:
        raise ValueError("k must be non-negative")
    prev, cur = AnnularElement(), AnnularElement({0: 1})
    for _ in range(k):
        prev, cur = cur, AnnularElement.X() * cur - prev
    return cur


def to_x(v: PhiElement) -> AnnularElement:
    out = AnnularElement()
    for k, c in v.coeffs.items():
        out = out + phi(k).scale(c)
    return out


def to_phi(v: AnnularElement) -> PhiElement:
    """Triangular change of basis, peeling off the top X-degree."""
    out: dict[int, RatFunc] = {}
    rest = v
    while not rest.is_zero():
        d = rest.degree()
        c = rest.coeff(d)
        out[d] = c
        rest = rest - phi(d).scale(c)
    return PhiElement(out)


# ---------------------------------------------------------------------------
# Closing TL diagrams around the core
# ---------------------------------------------------------------------------

def annular_components(m: Matching) -> tuple[int, int]:
    """(essential, trivial) loop counts after joining top j to bottom j around the core.

    A simple closed curve winds 0 or 1 times around the core, so it is
    essential exactly when it runs along an odd number of closing strands.
    """
    n = strands(m)
    seen = [False] * (2 * n)
    ess = triv = 0
    for s in range(2 * n):
        if seen[s]:
            continue
        crossings, p = 0, s
        while True:
            seen[p] = True
            p = m[p]
            seen[p] = True
            p = p + n if p < n else p - n
            crossings += 1
            if p == s:
                break
        if crossings % 2:
            ess += 1
        else:
            triv += 1
    return ess, triv


def annular_closure(x: TLElement) -> AnnularElement:
    two = RatFunc(qint(2))
    out: dict[int, RatFunc] = {}
    for m, c in x.terms.items():
        ess, triv = annular_components(m)
        v = c * two ** triv
        out[ess] = out[ess] + v if ess in out else v
    return AnnularElement(out)


def omega(N: int) -> PhiElement:
    """The magic element sum_{k<=N} [k+1] phi_k."""
    if N < 0:
        raise ValueError("N must be non-negative")
    return PhiElement({k: qint(k + 1) for k in range(N + 1)})


def spin_split(N: int) -> tuple[PhiElement, PhiElement]:
    w = omega(N)
    even = PhiElement({k: c for k, c in w.coeffs.items() if k % 2 == 0})
    odd = PhiElement({k: c for k, c in w.coeffs.items() if k % 2 == 1})
    return even, odd


# ---------------------------------------------------------------------------
# Fusion quotient
# ---------------------------------------------------------------------------

def fold_index(k: int, N: int) -> tuple[int, int]:
    """phi_k = sign * phi_j modulo phi_N, with j < N (sign 0 means phi_k vanishes).

    phi_{N+m} = -phi_{N-m} and phi_{-1-m} = -phi_{m-1} make the pattern
    periodic of period 2(N+1).
    """
    r = k % (2 * N + 2)
    if r == N or r == 2 * N + 1:
        return 0, 0
    if r < N:
        return 1, r
    return -1, 2 * N - r


def reduce_indices(x: PhiElement, N: int) -> PhiElement:
    """Rewrite with phi_N = 0 but leave the scalars in Q(q)."""
    out: dict[int, RatFunc] = {}
    for k, c in x.coeffs.items():
        sign, j = fold_index(k, N)
        if sign:
            v = c if sign > 0 else -c
            out[j] = out[j] + v if j in out else v
    return PhiElement(out)


class FusionScalars:
    """Q[q]/(Phi_{N+1}(q^2)), the scalars of the level-N fusion quotient."""

    def __init__(self, N: int):
        if N < 1:
            raise ValueError("N must be at least 1")
        self.N = N
        poly, _ = cyclotomic_any(N + 1).subs_pow(2).as_poly()
        self.modulus = flint.fmpq_poly(poly)
        self._qinv = self.inverse(flint.fmpq_poly([0, 1]))

    def inverse(self, a: flint.fmpq_poly) -> flint.fmpq_poly:
        g, s, _ = (a % self.modulus).xgcd(self.modulus)
        if g.degree() != 0:
            raise ZeroDivisionError(f"{a} is not invertible modulo {self.modulus}")
        return (s / g) % self.modulus

    def _laurent(self, p: LaurentPoly) -> flint.fmpq_poly:
        poly, val = p.as_poly()
        out = flint.fmpq_poly(poly) % self.modulus
        if val > 0:
            out = out * flint.fmpq_poly([0, 1]) ** val % self.modulus
        elif val < 0:
            out = out * self._qinv ** (-val) % self.modulus
        return out

    def reduce(self, c) -> flint.fmpq_poly:
        c = ratfunc(c)
        if c.is_zero():
            return flint.fmpq_poly([])
        num = self._laurent(c.num)
        den = self._laurent(c.den)
        return num * self.inverse(den) % self.modulus


@functools.lru_cache(maxsize=None)
def fusion_scalars(N: int) -> FusionScalars:
    return FusionScalars(N)


def _poly_key(p: flint.fmpq_poly) -> tuple[str, ...]:
    return tuple(str(c) for c in p.coeffs())


class FusionElement:
    """A vector over phi_0..phi_{N-1} with scalars in Q[q]/(Phi_{N+1}(q^2))."""

    __slots__ = ("N", "coeffs")

    def __init__(self, N: int, coeffs):
        if len(coeffs) != N:
            raise ValueError("a level-N fusion element has N coordinates")
        self.N = N
        self.coeffs: tuple[flint.fmpq_poly, ...] = tuple(coeffs)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def __add__(self, other):
        self._same(other)
        m = fusion_scalars(self.N).modulus
        return FusionElement(self.N, [(a + b) % m for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other):
        self._same(other)
        m = fusion_scalars(self.N).modulus
        return FusionElement(self.N, [(a - b) % m for a, b in zip(self.coeffs, other.coeffs)])

    def _same(self, other):
        if not isinstance(other, FusionElement) or other.N != self.N:
            raise ValueError("fusion elements at different levels")

    def __eq__(self, other):
        if not isinstance(other, FusionElement):
            return NotImplemented
        return self.N == other.N and self.key() == other.key()

    def __hash__(self):
        return hash((self.N, self.key()))

    def key(self):
        return tuple(_poly_key(c) for c in self.coeffs)

    def to_dict(self) -> dict[str, str]:
        return {f"phi_{k}": _fmt(c) for k, c in enumerate(self.coeffs) if not c.is_zero()}

    def __repr__(self):
        return f"FusionElement(N={self.N}, {self.to_dict()})"


def _fmt(p: flint.fmpq_poly) -> str:
    terms = [(i, c) for i, c in enumerate(p.coeffs()) if c != 0]
    if not terms:
        return "0"
    parts = []
    for i, c in terms:
        mono = "" if i == 0 else ("q" if i == 1 else f"q^{i}")
        if not mono:
            parts.append(str(c))
        elif c == 1:
            parts.append(mono)
        elif c == -1:
            parts.append("-" + mono)
        else:
            parts.append(f"{c}*{mono}")
    return " + ".join(parts).replace("+ -", "- ")


def fusion_reduce(x: PhiElement | AnnularElement, N: int) -> FusionElement:
    if isinstance(x, AnnularElement):
        x = to_phi(x)
    ring = fusion_scalars(N)
    folded = reduce_indices(x, N)
    return FusionElement(N, [ring.reduce(folded.coeff(k)) for k in range(N)])


def fusion_times_x(v: FusionElement) -> FusionElement:
    N = v.N
    ring = fusion_scalars(N)
    out = [flint.fmpq_poly([]) for _ in range(N)]
    for k, c in enumerate(v.coeffs):
        for j in (k + 1, k - 1):
            if j < 0:
                continue
            sign, i = fold_index(j, N)
            if sign:
                out[i] = (out[i] + sign * c) % ring.modulus
    return FusionElement(N, out)


def fusion_scale(v: FusionElement, c) -> FusionElement:
    ring = fusion_scalars(v.N)
    s = ring.reduce(c)
    return FusionElement(v.N, [a * s % ring.modulus for a in v.coeffs])


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

def _compare(name: str, lhs: FusionElement, rhs: FusionElement) -> Check:
    ok = lhs == rhs
    return Check(name, ok, "" if ok else f"lhs={lhs.to_dict()} rhs={rhs.to_dict()}")


def verify_slide_identities(N: int) -> list[Check]:
    X = AnnularElement.X()
    two = qint(2)
    if N == 2:
        w = X + AnnularElement({0: two})
        w2 = omega(2)
        return [
            _compare("X*omega = omega_2", fusion_reduce(X * w, 2), fusion_reduce(w2, 2)),
            _compare("omega_2 = [2]*omega", fusion_reduce(w2, 2), fusion_reduce(w.scale(two), 2)),
        ]
    if N == 3:
        w = X * X + X.scale(two)
        w3 = omega(3)
        # X omega_3 with phi_3 = 0 but scalars untouched
        lhs = reduce_indices(reduce_indices(w3, 3).times_x(), 3)
        rhs = reduce_indices(to_phi((X * X).scale(two) + X.scale(qint(3) + 1)), 3)
        sq = qint(3) + 1 == two * two
        return [
            Check("X*omega_3 = ([3]+1)X + [2]X^2", lhs == rhs, "" if lhs == rhs else f"{lhs} vs {rhs}"),
            Check("[3]+1 = [2]^2", sq, ""),
            _compare("X*omega_3 = [2]*omega", fusion_reduce(to_x(w3) * X, 3),
                     fusion_reduce(w.scale(two), 3)),
            _compare("omega_3 = omega", fusion_reduce(w3, 3), fusion_reduce(w, 3)),
        ]
    raise ValueError("slide identities are stated for N = 2 and N = 3")


def eigen_check(N: int) -> Check:
    """X omega_N = [2] omega_N in the level-N fusion quotient."""
    w = fusion_reduce(omega(N), N)
    return _compare(f"X*omega_{N} = [2]*omega_{N} (level {N})", fusion_times_x(w),
                    fusion_scale(w, qint(2)))
