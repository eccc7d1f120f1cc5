"""The Temperley-Lieb algebra TL_n over Q(q).

A basis diagram of TL_n is a crossingless matching of 2n points.  We store it
as a tuple ``pair`` of length 2n where bottom points are 0..n-1 (left to right)
and top points are n..2n-1 (left to right); ``pair[i]`` is the partner of i.
Reading the bottom left to right and then the top right to left walks once
around the disk, and the matching is crossingless exactly when that word is a
balanced bracket sequence.

Products stack diagrams: ``x * y`` places x on top of y.  Closed loops are
removed at the cost of a factor [2].
"""

from __future__ import annotations

import functools
import threading
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterator, Mapping, Sequence

import flint

from .coeff import Check, LaurentPoly, RatFunc, qint, ratfunc

Matching = tuple[int, ...]


# ---------------------------------------------------------------------------
# Matchings
# ---------------------------------------------------------------------------

def strands(m: Matching) -> int:
    return len(m) // 2


def circular_position(i: int, n: int) -> int:
    return i if i < n else 3 * n - 1 - i


def to_parens(m: Matching) -> str:
    """Balanced-bracket encoding of a matching read around the disk."""
    n = strands(m)
    order = list(range(n)) + list(range(2 * n - 1, n - 1, -1))
    pos = {p: k for k, p in enumerate(order)}
    return "".join("(" if pos[p] < pos[m[p]] else ")" for p in order)


def from_parens(word: str) -> Matching:
    n2 = len(word)
    n = n2 // 2
    order = list(range(n)) + list(range(n2 - 1, n - 1, -1))
    out = [-1] * n2
    stack = []
    for k, ch in enumerate(word):
        if ch == "(":
            stack.append(order[k])
        else:
            a, b = stack.pop(), order[k]
            out[a], out[b] = b, a
    if stack or len(word) % 2:
        raise ValueError(f"unbalanced word {word!r}")
    return tuple(out)


def is_crossingless(m: Sequence[int]) -> bool:
    n2 = len(m)
    if n2 % 2 or any(not (0 <= m[i] < n2) or m[i] == i or m[m[i]] != i for i in range(n2)):
        return False
    n = n2 // 2
    pos = [circular_position(i, n) for i in range(n2)]
    arcs = sorted((min(pos[i], pos[m[i]]), max(pos[i], pos[m[i]])) for i in range(n2) if i < m[i])
    for a, b in arcs:
        for c, d in arcs:
            if a < c < b < d:
                return False
    return True


def _balanced(n: int) -> Iterator[str]:
    if n == 0:
        yield ""
        return
    for k in range(n):
        for inner in _balanced(k):
            for rest in _balanced(n - 1 - k):
                yield "(" + inner + ")" + rest


@functools.lru_cache(maxsize=None)
def basis(n: int) -> tuple[Matching, ...]:
    """All crossingless matchings of TL_n, in a fixed order."""
    return tuple(sorted(from_parens(w) for w in _balanced(n)))


def identity_matching(n: int) -> Matching:
    return tuple(list(range(n, 2 * n)) + list(range(n)))


def generator_matching(i: int, n: int) -> Matching:
    """The turnback e_i (1 <= i < n) joining strands i and i+1."""
    if not 1 <= i < n:
        raise ValueError(f"e_{i} does not exist in TL_{n}")
    m = list(identity_matching(n))
    a, b = i - 1, i
    m[a], m[b] = b, a
    m[n + a], m[n + b] = n + b, n + a
    return tuple(m)


def through_strands(m: Matching) -> int:
    n = strands(m)
    return sum(1 for i in range(n) if m[i] >= n)


def compose_matchings(upper: Matching, lower: Matching) -> tuple[Matching, int]:
    """Stack ``upper`` on ``lower``; return the resulting matching and loop count."""
    n = strands(upper)
    if strands(lower) != n:
        raise ValueError("strand-count mismatch")
    res = [-1] * (2 * n)
    seen = [False] * n
    for start in range(2 * n):
        if res[start] >= 0:
            continue
        in_lower, p = start < n, start
        while True:
            if in_lower:
                t = lower[p]
                if t < n:
                    end = t
                    break
                seen[t - n] = True
                in_lower, p = False, t - n
            else:
                t = upper[p]
                if t >= n:
                    end = t
                    break
                seen[t] = True
                in_lower, p = True, n + t
        res[start], res[end] = end, start
    loops = 0
    for j in range(n):
        if seen[j]:
            continue
        loops += 1
        k = j
        while True:
            seen[k] = True
            k = lower[n + k] - n
            seen[k] = True
            k = upper[k]
            if k == j:
                break
    return tuple(res), loops


def reflect_matching(m: Matching) -> Matching:
    """Mirror left-right."""
    n = strands(m)

    def r(i):
        return n - 1 - i if i < n else 3 * n - 1 - i

    out = [0] * (2 * n)
    for i in range(2 * n):
        out[r(i)] = r(m[i])
    return tuple(out)


def flip_matching(m: Matching) -> Matching:
    """Mirror top-bottom."""
    n = strands(m)

    def f(i):
        return i + n if i < n else i - n

    out = [0] * (2 * n)
    for i in range(2 * n):
        out[f(i)] = f(m[i])
    return tuple(out)


def tensor_matchings(a: Matching, b: Matching) -> Matching:
    """Place ``b`` to the right of ``a``."""
    na, nb = strands(a), strands(b)
    n = na + nb

    def ia(i):
        return i if i < na else n + (i - na)

    def ib(i):
        return na + i if i < nb else n + na + (i - nb)

    out = [0] * (2 * n)
    for i in range(2 * na):
        out[ia(i)] = ia(a[i])
    for i in range(2 * nb):
        out[ib(i)] = ib(b[i])
    return tuple(out)


# half diagrams: tuple over n points, partner index or -1 for a defect

def halves(m: Matching) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Split into (top half, bottom half)."""
    n = strands(m)
    top = tuple(m[n + j] - n if m[n + j] >= n else -1 for j in range(n))
    bot = tuple(m[j] if m[j] < n else -1 for j in range(n))
    return top, bot


def join_halves(top: Sequence[int], bot: Sequence[int]) -> Matching:
    n = len(top)
    out = [-1] * (2 * n)
    for j in range(n):
        if bot[j] >= 0:
            out[j] = bot[j]
        if top[j] >= 0:
            out[n + j] = n + top[j]
    dt = [j for j in range(n) if top[j] < 0]
    db = [j for j in range(n) if bot[j] < 0]
    if len(dt) != len(db):
        raise ValueError("defect counts differ")
    for a, b in zip(dt, db):
        out[n + a], out[b] = b, n + a
    return tuple(out)


@functools.lru_cache(maxsize=None)
def _middle(bot_upper: tuple[int, ...], top_lower: tuple[int, ...]):
    """Glue the bottom half of an upper diagram to the top half of a lower one.

    Returns (loops, upper defect pairs, lower defect pairs); defects are
    referred to by their index among the defects of their half.
    """
    n = len(bot_upper)
    da = {p: k for k, p in enumerate(j for j in range(n) if bot_upper[j] < 0)}
    db = {p: k for k, p in enumerate(j for j in range(n) if top_lower[j] < 0)}
    seen = [False] * n
    a_pairs, b_pairs = [], []

    def walk(p, going_down):
        while True:
            seen[p] = True
            half = top_lower if going_down else bot_upper
            t = half[p]
            if t < 0:
                return ("b" if going_down else "a"), p
            seen[t] = True
            p, going_down = t, not going_down

    for p in da:
        if seen[p]:
            continue
        seen[p] = True
        kind, q = walk(p, True)
        if kind == "a":
            a_pairs.append((da[p], da[q]))
    for p in db:
        if seen[p]:
            continue
        seen[p] = True
        kind, q = walk(p, False)
        if kind == "b":
            b_pairs.append((db[p], db[q]))
    loops = 0
    for j in range(n):
        if not seen[j]:
            loops += 1
            k, down = j, True
            while True:
                seen[k] = True
                k = (top_lower if down else bot_upper)[k]
                seen[k] = True
                down = not down
                if k == j and down:
                    break
    return loops, tuple(a_pairs), tuple(b_pairs)


@functools.lru_cache(maxsize=None)
def _cap_defects(half: tuple[int, ...], pairs: tuple[tuple[int, int], ...]) -> tuple[int, ...]:
    if not pairs:
        return half
    defects = [j for j in range(len(half)) if half[j] < 0]
    out = list(half)
    for i, k in pairs:
        a, b = defects[i], defects[k]
        out[a], out[b] = b, a
    return tuple(out)


# ---------------------------------------------------------------------------
# Elements
# ---------------------------------------------------------------------------

class TLElement:
    """A Q(q)-linear combination of TL_n basis diagrams."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[Matching, object] | None = None):
        self.n = n
        clean = {}
        for m, c in (terms or {}).items():
            if len(m) != 2 * n:
                raise ValueError(f"matching {m} does not have {n} strands")
            c = ratfunc(c)
            if not c.is_zero():
                clean[m] = c
        self.terms: dict[Matching, RatFunc] = clean

    @classmethod
    def diagram(cls, m: Matching, coeff=1) -> "TLElement":
        return cls(strands(m), {m: coeff})

    @classmethod
    def identity(cls, n: int) -> "TLElement":
        return cls.diagram(identity_matching(n))

    @classmethod
    def e(cls, i: int, n: int) -> "TLElement":
        return cls.diagram(generator_matching(i, n))

    def is_zero(self) -> bool:
        return not self.terms

    def coeff(self, m: Matching) -> RatFunc:
        return self.terms.get(m, RatFunc(0))

    def __add__(self, other: "TLElement") -> "TLElement":
        _check_same(self, other)
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out[m] + c if m in out else c
        return TLElement(self.n, out)

    def __neg__(self):
        return TLElement(self.n, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def scale(self, c) -> "TLElement":
        c = ratfunc(c)
        return TLElement(self.n, {m: c * v for m, v in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, TLElement):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __eq__(self, other):
        if not isinstance(other, TLElement):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def __repr__(self):
        body = " + ".join(f"({c})*{to_parens(m)}" for m, c in sorted(self.terms.items()))
        return f"TLElement[{self.n}]({body or '0'})"

    def map_diagrams(self, fn) -> "TLElement":
        out: dict[Matching, RatFunc] = {}
        for m, c in self.terms.items():
            k = fn(m)
            out[k] = out[k] + c if k in out else c
        return TLElement(strands(next(iter(out))) if out else self.n, out)


def _check_same(a: TLElement, b: TLElement):
    if a.n != b.n:
        raise ValueError(f"strand-count mismatch: {a.n} vs {b.n}")


def _lcm(a: flint.fmpz_poly, b: flint.fmpz_poly) -> flint.fmpz_poly:
    g = a.gcd(b)
    out = (a / g) * b
    return -out if out.leading_coefficient() < 0 else out


def _over_common_denominator(x: TLElement):
    """Write x = q^val / den * sum_m P_m m with integer polynomials P_m."""
    den = flint.fmpz_poly([1])
    for c in x.terms.values():
        d_poly, _ = c.den.as_poly()
        if d_poly != den:
            den = _lcm(den, d_poly)
    nums = {}
    for m, c in x.terms.items():
        d_poly, _ = c.den.as_poly()
        nums[m] = c.num * LaurentPoly._raw(den / d_poly, 0)
    val = min(p.as_poly()[1] for p in nums.values())
    polys = {m: p.as_poly()[0].left_shift(p.as_poly()[1] - val) for m, p in nums.items()}
    return den, val, polys


def multiply(x: TLElement, y: TLElement) -> TLElement:
    """Stack x on top of y."""
    _check_same(x, y)
    n = x.n
    if x.is_zero() or y.is_zero():
        return TLElement(n)
    dx, vx, px = _over_common_denominator(x)
    dy, vy, py = _over_common_denominator(y)

    ups: dict[tuple, list] = defaultdict(list)
    for m, p in px.items():
        top, bot = halves(m)
        ups[bot].append((top, p))
    lows: dict[tuple, list] = defaultdict(list)
    for m, p in py.items():
        top, bot = halves(m)
        lows[top].append((bot, p))

    max_loops = n
    # q^(L-l) (1+q^2)^l = q^L [2]^l
    weights = [flint.fmpz_poly([1, 0, 1]) ** l * flint.fmpz_poly([0, 1]) ** (max_loops - l)
               for l in range(max_loops + 1)]
    acc: dict[tuple, flint.fmpz_poly] = {}
    for bot_u, ulist in ups.items():
        for top_l, llist in lows.items():
            loops, apairs, bpairs = _middle(bot_u, top_l)
            w = weights[loops]
            left = [(_cap_defects(t, apairs), p * w) for t, p in ulist]
            right = [(_cap_defects(b, bpairs), p) for b, p in llist]
            for t_new, pu in left:
                for b_new, pl in right:
                    key = (t_new, b_new)
                    prod = pu * pl
                    if key in acc:
                        acc[key] += prod
                    else:
                        acc[key] = prod
    den = LaurentPoly._raw(dx * dy, 0)
    shift = vx + vy - max_loops
    out = {}
    for (t, b), poly in acc.items():
        if poly.is_zero():
            continue
        out[join_halves(t, b)] = RatFunc(LaurentPoly._raw(poly, shift), den)
    return TLElement(n, out)


def multiply_naive(x: TLElement, y: TLElement) -> TLElement:
    """Reference product, diagram by diagram; used as an oracle in tests."""
    _check_same(x, y)
    out: dict[Matching, RatFunc] = {}
    two = RatFunc(qint(2))
    for a, ca in x.terms.items():
        for b, cb in y.terms.items():
            m, loops = compose_matchings(a, b)
            c = ca * cb * two ** loops
            out[m] = out[m] + c if m in out else c
    return TLElement(x.n, out)


def tensor(x: TLElement, y: TLElement) -> TLElement:
    """Horizontal juxtaposition, y to the right of x."""
    out = {}
    for a, ca in x.terms.items():
        for b, cb in y.terms.items():
            out[tensor_matchings(a, b)] = ca * cb
    return TLElement(x.n + y.n, out)


def reflect(x: TLElement) -> TLElement:
    return TLElement(x.n, {reflect_matching(m): c for m, c in x.terms.items()})


def flip(x: TLElement) -> TLElement:
    return TLElement(x.n, {flip_matching(m): c for m, c in x.terms.items()})


# ---------------------------------------------------------------------------
# Jones-Wenzl projectors
# ---------------------------------------------------------------------------

_jw_cache: dict[int, TLElement] = {}
_jw_lock = threading.Lock()


def jones_wenzl(n: int) -> TLElement:
    """p_n via the Wenzl recursion p_n = P - [n-1]/[n] P e_{n-1} P, P = p_{n-1} (x) 1."""
    if n < 0:
        raise ValueError("n must be non-negative")
    if n == 0:
        return TLElement(0, {(): 1})
    with _jw_lock:
        if n in _jw_cache:
            return _jw_cache[n]
    if n == 1:
        p = TLElement.identity(1)
    else:
        prev = tensor(jones_wenzl(n - 1), TLElement.identity(1))
        e = TLElement.e(n - 1, n)
        kappa = RatFunc(qint(n - 1), qint(n))
        p = prev - (prev * e * prev).scale(kappa)
    with _jw_lock:
        _jw_cache.setdefault(n, p)
        return _jw_cache[n]


def markov_trace(x: TLElement) -> RatFunc:
    """Close every strand in the plane; each loop is worth [2]."""
    total = RatFunc(0)
    two = qint(2)
    for m, c in x.terms.items():
        total = total + c * RatFunc(two ** closure_loops(m))
    return total


def closure_loops(m: Matching) -> int:
    """Number of loops in the plat closure joining top j to bottom j."""
    n = strands(m)
    seen = [False] * (2 * n)
    loops = 0
    for s in range(2 * n):
        if seen[s]:
            continue
        loops += 1
        p = s
        while True:
            seen[p] = True
            p = m[p]
            seen[p] = True
            p = p + n if p < n else p - n
            if p == s:
                break
    return loops


def partial_close(x: TLElement) -> TLElement:
    """Join the rightmost top point to the rightmost bottom point."""
    if x.n < 1:
        raise ValueError("nothing to close")
    n = x.n
    out: dict[Matching, RatFunc] = {}
    two = RatFunc(qint(2))
    for m, c in x.terms.items():
        r, loop = _close_last(m)
        coef = c * two if loop else c
        out[r] = out[r] + coef if r in out else coef
    return TLElement(n - 1, out)


def _close_last(m: Matching) -> tuple[Matching, bool]:
    n = strands(m)
    b, t = n - 1, 2 * n - 1
    if m[b] == t:
        loop = True
        rest = {i: m[i] for i in range(2 * n) if i not in (b, t)}
    else:
        loop = False
        rest = {i: m[i] for i in range(2 * n) if i not in (b, t)}
        x, y = m[b], m[t]
        rest[x], rest[y] = y, x

    def relabel(i):
        return i if i < n - 1 else i - 1

    out = [0] * (2 * n - 2)
    for i, j in rest.items():
        out[relabel(i)] = relabel(j)
    return tuple(out), loop


def turnback_annihilation(n: int) -> list[Check]:
    """e_i p_n = p_n e_i = 0 for every turnback and p_n p_n = p_n."""
    p = jones_wenzl(n)
    checks = []
    for i in range(1, n):
        e = TLElement.e(i, n)
        left, right = e * p, p * e
        checks.append(Check(f"e_{i} p_{n} = 0", left.is_zero(), "" if left.is_zero() else repr(left)))
        checks.append(Check(f"p_{n} e_{i} = 0", right.is_zero(), "" if right.is_zero() else repr(right)))
    sq = p * p
    diff = sq - p
    checks.append(Check(f"p_{n}^2 = p_{n}", diff.is_zero(), "" if diff.is_zero() else repr(diff)))
    return checks


# ---------------------------------------------------------------------------
# Cell modules and the ideal generated by p_N
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def half_diagrams(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    """Crossingless half diagrams on n points with k defects (k = n mod 2)."""
    if k < 0 or k > n or (n - k) % 2:
        return ()
    out = set()
    for m in basis(n):
        top, bot = halves(m)
        if sum(1 for v in bot if v < 0) == k:
            out.add(bot)
    return tuple(sorted(out))


@dataclass(frozen=True)
class CellVector:
    n: int
    k: int
    terms: tuple[tuple[tuple[int, ...], RatFunc], ...] = ()

    @classmethod
    def make(cls, n: int, k: int, terms: Mapping[tuple[int, ...], object]) -> "CellVector":
        items = []
        for h, c in terms.items():
            c = ratfunc(c)
            if not c.is_zero():
                items.append((h, c))
        return cls(n, k, tuple(sorted(items, key=lambda t: t[0])))

    def as_dict(self) -> dict:
        return dict(self.terms)

    def is_zero(self) -> bool:
        return not self.terms


def cell_action(x: TLElement, v: CellVector) -> CellVector:
    """Act by x on the cell module V_{n,k}; defect-reducing diagrams act by zero."""
    if x.n != v.n:
        raise ValueError("strand-count mismatch")
    two = RatFunc(qint(2))
    out: dict[tuple[int, ...], RatFunc] = {}
    for m, c in x.terms.items():
        top, bot = halves(m)
        for h, ch in v.terms:
            loops, apairs, bpairs = _middle(bot, h)
            if bpairs:
                continue
            new = _cap_defects(top, apairs)
            coef = c * ch * two ** loops
            out[new] = out[new] + coef if new in out else coef
    return CellVector.make(v.n, v.k, out)


def acts_as_zero(x: TLElement, k: int) -> bool:
    for h in half_diagrams(x.n, k):
        if not cell_action(x, CellVector.make(x.n, k, {h: 1})).is_zero():
            return False
    return True


def in_projector_ideal(x: TLElement, N: int) -> bool:
    """Generic-q membership of x in the two-sided ideal generated by p_N.

    At generic q TL_n is semisimple and the ideal is the sum of the blocks of
    cell modules with at least N through strands, so x lies in it exactly when
    it kills every V_{n,k} with k < N.
    """
    if x.n < N:
        raise ValueError("membership queries need n >= N")
    return all(acts_as_zero(x, k) for k in range(x.n % 2, N, 2))


def cupcap_matching(n: int) -> Matching:
    """n even: adjacent points paired on top and on bottom, no through strands."""
    if n % 2:
        raise ValueError("cup-cap pairs need an even strand count")
    m = [0] * (2 * n)
    for j in range(0, n, 2):
        m[j], m[j + 1] = j + 1, j
        m[n + j], m[n + j + 1] = n + j + 1, n + j
    return tuple(m)


def embed_projector(N: int, n: int) -> TLElement:
    """The generator of the ideal of p_N inside TL_n.

    Every gluing x p_N y with x: N -> n and y: n -> N rectangular diagrams
    factors through p_N next to cup-cap pairs, so this element generates the
    ideal as a two-sided ideal of TL_n.  When n - N is odd no such gluing
    exists and we use p_{N+1}, which generates the same kernel.
    """
    if n < N:
        raise ValueError("need n >= N")
    if (n - N) % 2:
        N += 1
    out = jones_wenzl(N)
    if n > N:
        out = tensor(out, TLElement.diagram(cupcap_matching(n - N)))
    return out
