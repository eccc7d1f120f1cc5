"""Chain complexes over the cobordism category.

Complexes are cohomological: d_k maps degree k to degree k+1.  An eventually
periodic complex stores a finite head and one period block; degrees past the
head repeat the block with every q-shift raised by ``delta`` per period.  All
homotopy-level work happens on finite unrollings, so every claim is exact only
inside the unrolled window.
"""

from __future__ import annotations

import itertools
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .coeff import Check, LaurentPoly, TruncSeries, qint, ratfunc_to_series
from .cob import (
    Cob,
    Obj,
    compose,
    deloop,
    glue_morphisms,
    glue_objects,
    stack_spec,
    total_degree,
)
from .tl import Matching, compose_matchings, generator_matching, identity_matching, jones_wenzl


# ---------------------------------------------------------------------------
# Matrices of cobordisms
# ---------------------------------------------------------------------------

class Mat:
    """entries[(i, j)]: src[j] -> tgt[i]; zero entries are omitted."""

    __slots__ = ("src", "tgt", "entries")

    def __init__(self, src: Sequence[Obj], tgt: Sequence[Obj], entries: Mapping[tuple[int, int], Cob] | None = None):
        self.src, self.tgt = tuple(src), tuple(tgt)
        clean = {}
        for (i, j), f in (entries or {}).items():
            if f.is_zero():
                continue
            if f.src != self.src[j] or f.tgt != self.tgt[i]:
                raise ValueError(f"entry ({i},{j}) has the wrong objects")
            clean[(i, j)] = f
        self.entries: dict[tuple[int, int], Cob] = clean

    def get(self, i: int, j: int) -> Cob:
        f = self.entries.get((i, j))
        return f if f is not None else Cob.zero(self.src[j], self.tgt[i])

    def is_zero(self) -> bool:
        return not self.entries

    def __matmul__(self, other: "Mat") -> "Mat":
        """self after other."""
        if other.tgt != self.src:
            raise ValueError("matrix objects do not match")
        by_row = defaultdict(list)
        for (i, j), f in self.entries.items():
            by_row[j].append((i, f))
        out: dict[tuple[int, int], Cob] = {}
        for (j, k), g in sorted(other.entries.items()):
            for i, f in by_row.get(j, ()):
                h = compose(f, g)
                out[(i, k)] = out[(i, k)] + h if (i, k) in out else h
        return Mat(other.src, self.tgt, out)

    def __add__(self, other: "Mat") -> "Mat":
        out = dict(self.entries)
        for k, f in other.entries.items():
            out[k] = out[k] + f if k in out else f
        return Mat(self.src, self.tgt, out)

    def __neg__(self) -> "Mat":
        return Mat(self.src, self.tgt, {k: -f for k, f in self.entries.items()})

    def shifted(self, k: int) -> "Mat":
        src = [o.shifted(k) for o in self.src]
        tgt = [o.shifted(k) for o in self.tgt]
        return Mat(src, tgt, {(i, j): f.with_objects(src[j], tgt[i]) for (i, j), f in self.entries.items()})

    def conjugated(self, src_signs: Sequence[int], tgt_signs: Sequence[int]) -> "Mat":
        return Mat(self.src, self.tgt, {(i, j): f.scale(tgt_signs[i] * src_signs[j])
                                        for (i, j), f in self.entries.items()})

    def __eq__(self, other):
        if not isinstance(other, Mat):
            return NotImplemented
        return self.src == other.src and self.tgt == other.tgt and self.entries == other.entries

    def to_json(self):
        return [[i, j, f.to_json()] for (i, j), f in sorted(self.entries.items())]

    @classmethod
    def from_json(cls, src, tgt, data) -> "Mat":
        return cls(src, tgt, {(i, j): Cob.from_json(f) for i, j, f in data})


# ---------------------------------------------------------------------------
# Finite complexes
# ---------------------------------------------------------------------------

@dataclass
class Complex:
    """levels[k] sits in homological degree start + k; diffs[k]: levels[k] -> levels[k+1]."""

    start: int
    levels: list[list[Obj]]
    diffs: list[Mat]

    def __post_init__(self):
        if len(self.diffs) != max(len(self.levels) - 1, 0):
            raise ValueError("need one differential between consecutive levels")

    @property
    def end(self) -> int:
        return self.start + len(self.levels) - 1

    def level(self, k: int) -> list[Obj]:
        i = k - self.start
        return self.levels[i] if 0 <= i < len(self.levels) else []

    def diff(self, k: int) -> Mat:
        i = k - self.start
        if 0 <= i < len(self.diffs):
            return self.diffs[i]
        return Mat(self.level(k), self.level(k + 1))

    def summands(self) -> list[tuple[int, Obj]]:
        return [(self.start + k, o) for k, lv in enumerate(self.levels) for o in lv]

    def copy(self) -> "Complex":
        return Complex(self.start, [list(lv) for lv in self.levels], list(self.diffs))

    def shifted(self, q: int = 0, h: int = 0) -> "Complex":
        """Raise q-shifts by q and move every level up h homological degrees."""
        levels = [[o.shifted(q) for o in lv] for lv in self.levels]
        return Complex(self.start + h, levels, [d.shifted(q) for d in self.diffs])

    def trimmed(self) -> "Complex":
        """Drop empty levels at both ends."""
        lo, hi = 0, len(self.levels)
        while lo < hi and not self.levels[lo]:
            lo += 1
        while hi > lo and not self.levels[hi - 1]:
            hi -= 1
        if lo == hi:
            return Complex(self.start, [], [])
        return Complex(self.start + lo, self.levels[lo:hi], self.diffs[lo:hi - 1])

    def to_json(self):
        return {
            "start": self.start,
            "levels": [[o.to_json() for o in lv] for lv in self.levels],
            "diffs": [d.to_json() for d in self.diffs],
        }

    @classmethod
    def from_json(cls, data) -> "Complex":
        levels = [[Obj.from_json(o) for o in lv] for lv in data["levels"]]
        diffs = [Mat.from_json(levels[k], levels[k + 1], d) for k, d in enumerate(data["diffs"])]
        return cls(data["start"], levels, diffs)


def d_squared_failures(c: Complex) -> list[tuple[int, int]]:
    """Degrees (k, k+1) where d_{k+1} d_k is nonzero."""
    bad = []
    for k in range(len(c.diffs) - 1):
        if not (c.diffs[k + 1] @ c.diffs[k]).is_zero():
            bad.append((c.start + k, c.start + k + 1))
    return bad


# ---------------------------------------------------------------------------
# Eventually periodic complexes
# ---------------------------------------------------------------------------

@dataclass
class PeriodicComplex:
    """head levels 0..h-1, then the period block repeated with q-shift delta.

    head_diffs[k] maps head level k to the next level (the last one lands in
    the first period level).  period_diffs[r] maps period level r to r+1, the
    last one wrapping to period level 0 of the next period.
    """

    head: list[list[Obj]]
    head_diffs: list[Mat]
    period: list[list[Obj]] = field(default_factory=list)
    period_diffs: list[Mat] = field(default_factory=list)
    delta: int = 0
    start: int = 0
    name: str = ""

    @property
    def is_bounded(self) -> bool:
        return not self.period

    def level(self, k: int) -> list[Obj]:
        i = k - self.start
        if i < 0:
            return []
        if i < len(self.head):
            return self.head[i]
        if not self.period:
            return []
        p, r = divmod(i - len(self.head), len(self.period))
        return [o.shifted(p * self.delta) for o in self.period[r]]

    def diff(self, k: int) -> Mat:
        i = k - self.start
        if 0 <= i < len(self.head_diffs):
            return self.head_diffs[i]
        if i >= len(self.head) and self.period:
            p, r = divmod(i - len(self.head), len(self.period))
            return self.period_diffs[r].shifted(p * self.delta)
        return Mat(self.level(k), self.level(k + 1))

    def unroll(self, hmax: int) -> Complex:
        """Levels start..hmax inclusive (or fewer for a bounded complex)."""
        top = hmax if self.period else min(hmax, self.start + len(self.head) - 1)
        if top < self.start:
            return Complex(self.start, [], [])
        levels = [self.level(k) for k in range(self.start, top + 1)]
        diffs = [self.diff(k) for k in range(self.start, top)]
        return Complex(self.start, levels, diffs)

    def with_diff(self, k: int, mat: Mat) -> "PeriodicComplex":
        """Copy with the differential at degree k replaced (head or period slot)."""
        i = k - self.start
        out = PeriodicComplex(list(self.head), list(self.head_diffs), list(self.period),
                              list(self.period_diffs), self.delta, self.start, self.name)
        if i < len(self.head_diffs):
            out.head_diffs[i] = mat
        else:
            p, r = divmod(i - len(self.head), len(self.period))
            out.period_diffs[r] = mat.shifted(-p * self.delta)
        return out

    def to_json(self):
        return {
            "name": self.name,
            "start": self.start,
            "delta": self.delta,
            "head": [[o.to_json() for o in lv] for lv in self.head],
            "period": [[o.to_json() for o in lv] for lv in self.period],
            "head_diffs": [d.to_json() for d in self.head_diffs],
            "period_diffs": [d.to_json() for d in self.period_diffs],
        }

    @classmethod
    def from_json(cls, data) -> "PeriodicComplex":
        head = [[Obj.from_json(o) for o in lv] for lv in data["head"]]
        period = [[Obj.from_json(o) for o in lv] for lv in data["period"]]
        delta = data["delta"]
        seq = head + period
        hd = []
        for k, d in enumerate(data["head_diffs"]):
            hd.append(Mat.from_json(seq[k], seq[k + 1], d))
        pd = []
        for r, d in enumerate(data["period_diffs"]):
            tgt = period[r + 1] if r + 1 < len(period) else [o.shifted(delta) for o in period[0]]
            pd.append(Mat.from_json(period[r], tgt, d))
        return cls(head, hd, period, pd, delta, data["start"], data.get("name", ""))


def bounded(levels: Sequence[Sequence[Obj]], diffs: Sequence[Mat], start: int = 0, name: str = "") -> PeriodicComplex:
    return PeriodicComplex([list(lv) for lv in levels], list(diffs), start=start, name=name)


def single(obj: Obj, name: str = "") -> PeriodicComplex:
    return bounded([[obj]], [], name=name)


# ---------------------------------------------------------------------------
# The projector complexes
# ---------------------------------------------------------------------------

def _top_cup(m: Matching) -> int:
    n = len(m) // 2
    return next(n + j for j in range(n) if m[n + j] >= n)


def _bottom_cap(m: Matching) -> int:
    n = len(m) // 2
    return next(j for j in range(n) if m[j] < n)


def dot_up(obj: Obj, coeff: int = 1) -> Cob:
    """Dot on the sheet of the top turnback."""
    return Cob.dotted_sheet(obj, _top_cup(obj.arcs), coeff)


def dot_down(obj: Obj, coeff: int = 1) -> Cob:
    """Dot on the sheet of the bottom turnback."""
    return Cob.dotted_sheet(obj, _bottom_cap(obj.arcs), coeff)


def _shifted_map(f: Cob, src_shift: int, tgt_shift: int) -> Cob:
    return f.with_objects(f.src.with_shift(src_shift), f.tgt.with_shift(tgt_shift))


def P2() -> PeriodicComplex:
    """id -> q e1 -> q^3 e1 -> q^5 e1 -> ..., saddle then tops - bots, tops + bots."""
    one = Obj.tl(identity_matching(2))
    e1 = generator_matching(1, 2)
    o1, o3, o5 = (Obj.tl(e1, s) for s in (1, 3, 5))
    saddle = Cob.saddle(one, o1)
    tb = dot_up(o1) - dot_down(o1)
    d_odd = _shifted_map(tb, 1, 3)
    d_even = _shifted_map(dot_up(o3) + dot_down(o3), 3, 5)
    return PeriodicComplex(
        head=[[one]],
        head_diffs=[Mat([one], [o1], {(0, 0): saddle})],
        period=[[o1], [o3]],
        period_diffs=[Mat([o1], [o3], {(0, 0): d_odd}), Mat([o3], [o5], {(0, 0): d_even})],
        delta=4,
        name="P2",
    )


def _p3_objects():
    e1 = generator_matching(1, 3)
    e2 = generator_matching(2, 3)
    e12 = compose_matchings(e1, e2)[0]
    e21 = compose_matchings(e2, e1)[0]
    return e1, e2, e12, e21


# Signs as printed; E is printed with its summands in the order (e2, e1).
P3_PRINTED_SIGNS = {
    "A": (-1, 1),
    "B": ((1, -1), (-1, 1)),
    "C": ((1, 1), (1, 1)),
    "D": ((1, -1), (-1, 1)),
    "E": ((1, 1), (1, 1)),
}

# Both composites id -> e_i -> e1e2 are the same disk, so B A = 0 forces the
# two saddles of A to carry equal signs.  We keep the first printed sign.
P3_SIGNS = dict(P3_PRINTED_SIGNS, A=(-1, -1))


def _disk_entry(src: Obj, tgt: Obj, sign: int) -> Cob:
    """The dot-free disk cobordism; every off-diagonal entry of P3 is of this form."""
    return Cob.disks(src, tgt, (), sign)


def _updown(src: Obj, tgt: Obj, sign: int) -> Cob:
    f = dot_up(src.with_shift(0)) + dot_down(src.with_shift(0))
    return _shifted_map(f, src.shift, tgt.shift).scale(sign)


def _mat2(src, tgt, signs, diag_dots: bool) -> Mat:
    entries = {}
    for i in range(2):
        for j in range(2):
            s = signs[i][j]
            if i == j and diag_dots:
                entries[(i, j)] = _updown(src[j], tgt[i], s)
            else:
                entries[(i, j)] = _disk_entry(src[j], tgt[i], s)
    return Mat(src, tgt, entries)


def P3(signs: Mapping[str, object] | None = None, conj: Sequence[Sequence[int]] | None = None) -> PeriodicComplex:
    """The minimal 4-periodic complex for the third projector.

    ``conj`` optionally conjugates the summands of the six non-identity levels
    of the first unrolling (degrees 1..5 and the wrap to 6 shares degree 2's
    signs), a change of basis that keeps every entry's shape.
    """
    signs = dict(P3_SIGNS, **(signs or {}))
    e1, e2, e12, e21 = _p3_objects()
    one = Obj.tl(identity_matching(3))
    L1 = [Obj.tl(e1, 1), Obj.tl(e2, 1)]
    L2 = [Obj.tl(e12, 2), Obj.tl(e21, 2)]
    L3 = [Obj.tl(e12, 4), Obj.tl(e21, 4)]
    L4 = [Obj.tl(e1, 5), Obj.tl(e2, 5)]
    L5 = [Obj.tl(e1, 7), Obj.tl(e2, 7)]
    L6 = [o.shifted(6) for o in L2]
    a0, a1 = signs["A"]
    A = Mat([one], L1, {(0, 0): Cob.saddle(one, L1[0], a0), (1, 0): Cob.saddle(one, L1[1], a1)})
    B1 = _mat2(L1, L2, signs["B"], False)
    C = _mat2(L2, L3, signs["C"], True)
    D = _mat2(L3, L4, signs["D"], False)
    es = signs["E"]
    # printed in the order (e2, e1): swap both rows and columns
    E = _mat2(L4, L5, ((es[1][1], es[1][0]), (es[0][1], es[0][0])), True)
    B5 = _mat2(L5, L6, signs["B"], False)
    mats = [B1, C, D, E, B5]
    if conj is not None:
        s = [list(c) for c in conj]  # s[k] for degrees 1..5; degree 6 reuses degree 2
        s.append(s[1])
        mats = [m.conjugated(s[k], s[k + 1]) for k, m in enumerate(mats)]
        A = A.conjugated([1], s[0])
    return PeriodicComplex(
        head=[[one], L1],
        head_diffs=[A, mats[0]],
        period=[L2, L3, L4, L5],
        period_diffs=mats[1:],
        delta=6,
        name="P3",
    )


def projector_complex(n: int) -> PeriodicComplex:
    if n == 1:
        return single(Obj.tl(identity_matching(1)), "P1")
    if n == 2:
        return P2()
    if n == 3:
        return P3()
    raise ValueError("explicit projector complexes exist for n <= 3")


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate(c: PeriodicComplex, positively_graded: bool = True) -> list[Check]:
    """d^2 = 0 through the head, the seam and a full period wrap; degree-0 entries; axiom 2."""
    span = len(c.head) + 2 * max(len(c.period), 1) + 1
    u = c.unroll(c.start + span)
    checks = []
    bad = d_squared_failures(u)
    checks.append(Check("d^2 = 0", not bad, "" if not bad else f"first failure at {bad[0]}; all {bad}"))
    wrong = []
    for k, d in enumerate(u.diffs):
        for (i, j), f in sorted(d.entries.items()):
            if total_degree(f) != 0:
                wrong.append((u.start + k, i, j))
    checks.append(Check("differentials have degree 0", not wrong, str(wrong[:5])))
    if positively_graded:
        neg = [(k, o.shift) for k, o in u.summands() if k > 0 and o.shift <= 0]
        checks.append(Check("positive q-shifts after degree 0", not neg, str(neg[:5])))
    n = u.levels[0][0].n if u.levels and u.levels[0] else 0
    ident = Obj.tl(identity_matching(n))
    hits = [(k, o) for k, o in u.summands() if o.with_shift(0) == ident]
    ok = len(hits) == 1 and hits[0][0] == 0 and hits[0][1].shift == 0
    checks.append(Check("identity appears once, in degree 0", ok, str([(k, str(o)) for k, o in hits])))
    return checks


def is_valid(c: PeriodicComplex) -> bool:
    return all(ch.passed for ch in validate(c))


def p3_sign_report() -> list[Check]:
    """How the printed signs fare under the d^2 = 0 gate, and what repairs them.

    Conjugating summands by +-1 is a change of basis and leaves d^2 unchanged,
    so a failure of the printed signs cannot be conjugated away; the search
    below confirms this for the degree 1..5 summands and then lists the sign
    choices for A that do pass.
    """
    printed = P3(signs=P3_PRINTED_SIGNS)
    checks = [Check("printed signs give d^2 = 0", validate(printed)[0].passed, validate(printed)[0].detail)]
    rescued = []
    for bits in itertools.product((1, -1), repeat=10):
        conj = [bits[2 * k:2 * k + 2] for k in range(5)]
        if validate(P3(signs=P3_PRINTED_SIGNS, conj=conj))[0].passed:
            rescued.append(conj)
    checks.append(Check("some summand conjugation repairs the printed signs", bool(rescued), ""))
    good = [a for a in itertools.product((1, -1), repeat=2)
            if validate(P3(signs={"A": a}))[0].passed]
    checks.append(Check("A sign choices passing the gate", bool(good), str(good)))
    return checks


# ---------------------------------------------------------------------------
# Stacking and closing
# ---------------------------------------------------------------------------

def glue_complexes(pieces: Sequence[Complex], joins, outmap) -> Complex:
    """Total complex of a planar composition of finite complexes (Koszul signs)."""
    if not pieces:
        raise ValueError("nothing to glue")
    starts = [p.start for p in pieces]
    ends = [p.end for p in pieces]
    lo, hi = sum(starts), sum(ends)
    index: dict[int, list[tuple[tuple[int, ...], Obj]]] = defaultdict(list)
    ranges = [range(len(p.levels)) for p in pieces]
    for combo in itertools.product(*[[(k, i) for k in r for i in range(len(p.levels[k]))]
                                     for r, p in zip(ranges, pieces)]):
        deg = sum(p.start + k for p, (k, _) in zip(pieces, combo))
        objs = [p.levels[k][i] for p, (k, i) in zip(pieces, combo)]
        index[deg].append((combo, glue_objects(objs, joins, outmap).obj))
    for deg in index:
        index[deg].sort(key=lambda t: t[0])
    levels = [[o for _, o in index.get(d, [])] for d in range(lo, hi + 1)]
    pos = {d: {combo: i for i, (combo, _) in enumerate(index.get(d, []))} for d in range(lo, hi + 1)}
    diffs = []
    for d in range(lo, hi):
        entries = {}
        for j, (combo, _) in enumerate(index.get(d, [])):
            sign = 1
            for t, p in enumerate(pieces):
                k, i = combo[t]
                if k < len(p.diffs):
                    col = p.diffs[k]
                    for (r, cc), f in col.entries.items():
                        if cc != i:
                            continue
                        new = list(combo)
                        new[t] = (k + 1, r)
                        new = tuple(new)
                        maps = []
                        for u, q in enumerate(pieces):
                            if u == t:
                                maps.append(f)
                            else:
                                ku, iu = combo[u]
                                maps.append(Cob.identity(q.levels[ku][iu]))
                        g = glue_morphisms(maps, joins, outmap).scale(sign)
                        key = (pos[d + 1][new], j)
                        entries[key] = entries[key] + g if key in entries else g
                sign *= -1 if (p.start + k) % 2 else 1
        diffs.append(Mat(levels[d - lo], levels[d + 1 - lo], entries))
    return Complex(lo, levels, diffs).trimmed() if levels else Complex(lo, [], [])


def stack_complexes(upper: Complex, lower: Complex) -> Complex:
    joins, outmap = stack_spec(upper.levels[0][0].n if upper.levels[0] else lower.levels[0][0].n)
    return glue_complexes([upper, lower], joins, outmap)


def tensor(a: PeriodicComplex, b: PeriodicComplex, hmax: int) -> Complex:
    """Vertical stacking a over b, unrolled through homological degree hmax."""
    for c in (a, b):
        if c.period and c.delta <= 0:
            raise ValueError("tail-nonpositive complexes give degreewise infinite sums")
    return truncate(stack_complexes(a.unroll(hmax), b.unroll(hmax)), hmax)


def truncate(c: Complex, hmax: int) -> Complex:
    keep = max(0, min(len(c.levels), hmax - c.start + 1))
    return Complex(c.start, c.levels[:keep], c.diffs[:max(keep - 1, 0)])


def closing_object(n: int, closed: Sequence[int], parity: Mapping[int, int] | None = None) -> Obj:
    """Arcs joining bottom j to top j for each closed strand j, in local labels.

    Local points: 2t (bottom of the t-th closed strand) and 2t+1 (its top).
    """
    parity = parity or {}
    npts = 2 * len(closed)
    arcs, par = [0] * npts, [0] * npts
    for t, j in enumerate(closed):
        arcs[2 * t], arcs[2 * t + 1] = 2 * t + 1, 2 * t
        par[2 * t] = par[2 * t + 1] = parity.get(j, 0)
    return Obj(npts, tuple(arcs), tuple(par))


def closure_spec(n: int, closed: Sequence[int]):
    """Joins/outmap for closing the listed strands of a TL_n-shaped piece 0 with piece 1."""
    closed = list(closed)
    joins = []
    for t, j in enumerate(closed):
        joins.append(((0, j), (1, 2 * t)))
        joins.append(((0, n + j), (1, 2 * t + 1)))
    rest = [j for j in range(n) if j not in closed]
    r = len(rest)
    outmap = {(0, j): k for k, j in enumerate(rest)}
    outmap.update({(0, n + j): r + k for k, j in enumerate(rest)})
    return joins, outmap


def close_complex(c: Complex, closed: Sequence[int], parity: Mapping[int, int] | None = None) -> Complex:
    n = next(o.n for lv in c.levels for o in lv)
    cl = closing_object(n, closed, parity)
    joins, outmap = closure_spec(n, closed)
    return glue_complexes([c, Complex(0, [[cl]], [])], joins, outmap)


# ---------------------------------------------------------------------------
# Simplification
# ---------------------------------------------------------------------------

def deloop_level(c: Complex, k: int, i: int, circle: int | None = None) -> Complex:
    """Replace object i of level k (a trivial circle inside) by its two delooped copies."""
    c = c.copy()
    idx = k - c.start
    obj = c.levels[idx][i]
    (lo, hi), (f0, f1), (b0, b1) = deloop(obj, circle)
    new_level = c.levels[idx][:i] + [lo, hi] + c.levels[idx][i + 1:]

    def remap(j):
        return j if j < i else j + 1

    if idx > 0:
        old = c.diffs[idx - 1]
        entries = {}
        for (r, col), f in old.entries.items():
            if r == i:
                entries[(i, col)] = compose(f0, f)
                entries[(i + 1, col)] = compose(f1, f)
            else:
                entries[(remap(r), col)] = f
        c.diffs[idx - 1] = Mat(old.src, new_level, entries)
    if idx < len(c.diffs):
        old = c.diffs[idx]
        entries = {}
        for (r, col), f in old.entries.items():
            if col == i:
                entries[(r, i)] = compose(f, b0)
                entries[(r, i + 1)] = compose(f, b1)
            else:
                entries[(r, remap(col))] = f
        c.diffs[idx] = Mat(new_level, old.tgt, entries)
    c.levels[idx] = new_level
    return c


def deloop_all(c: Complex) -> Complex:
    for k in range(c.start, c.end + 1):
        while True:
            lv = c.level(k)
            hit = next((i for i, o in enumerate(lv) if o.trivial_circles()), None)
            if hit is None:
                break
            c = deloop_level(c, k, hit)
    return c


def eliminate(c: Complex, k: int, i: int, j: int) -> Complex:
    """Gaussian elimination of the unit entry d_k[i, j]: level k obj j -> level k+1 obj i."""
    idx = k - c.start
    d = c.diffs[idx]
    phi = d.get(i, j)
    sign = phi.unit_sign()
    if not sign:
        raise ValueError("entry is not a unit")
    src_keep = [x for x in range(len(d.src)) if x != j]
    tgt_keep = [x for x in range(len(d.tgt)) if x != i]
    col_j = {r: f for (r, cc), f in d.entries.items() if cc == j and r != i}
    row_i = {cc: f for (r, cc), f in d.entries.items() if r == i and cc != j}
    entries = {}
    for (r, cc), f in d.entries.items():
        if r != i and cc != j:
            entries[(r, cc)] = f
    for r, gamma in col_j.items():
        for cc, beta in row_i.items():
            # phi^-1 = sign * id
            corr = compose(gamma, beta).scale(sign)
            entries[(r, cc)] = entries[(r, cc)] - corr if (r, cc) in entries else -corr
    new_src = [d.src[x] for x in src_keep]
    new_tgt = [d.tgt[x] for x in tgt_keep]
    srcpos = {x: n for n, x in enumerate(src_keep)}
    tgtpos = {x: n for n, x in enumerate(tgt_keep)}
    new_d = Mat(new_src, new_tgt, {(tgtpos[r], srcpos[cc]): f for (r, cc), f in entries.items()})
    out = c.copy()
    out.levels[idx] = new_src
    out.levels[idx + 1] = new_tgt
    out.diffs[idx] = new_d
    if idx > 0:
        prev = out.diffs[idx - 1]
        out.diffs[idx - 1] = Mat(prev.src, new_src, {(srcpos[r], cc): f for (r, cc), f in prev.entries.items()
                                                     if r != j})
    if idx + 1 < len(out.diffs):
        nxt = out.diffs[idx + 1]
        out.diffs[idx + 1] = Mat(new_tgt, nxt.tgt, {(r, tgtpos[cc]): f for (r, cc), f in nxt.entries.items()
                                                    if cc != i})
    return out


def find_unit(c: Complex, k_from: int | None = None) -> tuple[int, int, int] | None:
    """First unit entry in lexicographic order of (degree, row, column)."""
    for idx, d in enumerate(c.diffs):
        k = c.start + idx
        if k_from is not None and k < k_from:
            continue
        for (i, j) in sorted(d.entries):
            if d.entries[(i, j)].unit_sign():
                return k, i, j
    return None


def gaussian_eliminate(c: Complex) -> Complex:
    k_from = None
    while True:
        hit = find_unit(c, k_from)
        if hit is None:
            return c
        k, i, j = hit
        c = eliminate(c, k, i, j)
        k_from = k - 1


def simplify(c: PeriodicComplex | Complex, hmax: int = 12) -> Complex:
    """Deloop every trivial circle, then cancel all unit entries; exact away from degree hmax."""
    if isinstance(c, PeriodicComplex):
        c = c.unroll(hmax)
    return gaussian_eliminate(deloop_all(c))


# ---------------------------------------------------------------------------
# Decategorification
# ---------------------------------------------------------------------------

def euler_char(c: PeriodicComplex | Complex, qmax: int) -> dict[Matching, TruncSeries]:
    """sum (-1)^k q^shift [object] over summands with shift < qmax; circles count [2]."""
    if isinstance(c, PeriodicComplex):
        if c.period and c.delta <= 0:
            raise ValueError("Euler characteristic needs a tail-positive complex")
        k = c.start
        summands = []
        while True:
            lv = c.level(k)
            if c.period and k >= c.start + len(c.head) and lv and min(o.shift for o in lv) >= qmax \
                    and all(min(o.shift for o in c.level(k + r)) >= qmax for r in range(len(c.period))):
                break
            if not c.period and k >= c.start + len(c.head):
                break
            summands.extend((k, o) for o in lv)
            k += 1
    else:
        summands = c.summands()
    acc: dict[Matching, dict[int, int]] = defaultdict(lambda: defaultdict(int))
    two = qint(2)
    for k, o in summands:
        w = two ** len(o.circles) * LaurentPoly.monomial(o.shift, -1 if k % 2 else 1)
        for e, v in w.terms.items():
            if e < qmax:
                acc[o.arcs][e] += v
    return {m: TruncSeries.make(t, qmax) for m, t in acc.items()}


def projector_series(n: int, qmax: int) -> dict[Matching, TruncSeries]:
    p = jones_wenzl(n)
    return {m: ratfunc_to_series(c, qmax) for m, c in p.terms.items()}


def decat_check(n: int, qmax: int = 20) -> Check:
    got = euler_char(projector_complex(n), qmax)
    want = projector_series(n, qmax)
    keys = sorted(set(got) | set(want))
    bad = [m for m in keys if not got.get(m, TruncSeries.make({}, qmax)).agrees_with(
        want.get(m, TruncSeries.make({}, qmax)), qmax)]
    return Check(f"euler_char(P{n}) = p_{n} through q^{qmax - 1}", not bad, str(bad[:3]))


def trace_complex(c: PeriodicComplex | Complex, hmax: int = 12, qmax: int = 40) -> list[tuple[int, int]]:
    """Close every strand in the disk, deloop and simplify; (degree, q-shift) summands in the window."""
    if isinstance(c, PeriodicComplex):
        c = c.unroll(hmax)
    if not c.levels or not any(c.levels):
        return []
    n = next(o.n for lv in c.levels for o in lv)
    closed = close_complex(c, list(range(n))) if n else c
    red = simplify(closed, hmax)
    out = []
    for k, o in red.summands():
        if k < hmax and o.shift < qmax:
            out.append((k, o.shift))
    return sorted(out)


def turnback_check(n: int, i: int, hmax: int = 12) -> Check:
    """simplify(e_i o P_n) has nothing below degree hmax - 1."""
    e = Obj.tl(generator_matching(i, n))
    turn = Complex(0, [[e]], [])
    c = stack_complexes(turn, projector_complex(n).unroll(hmax))
    red = simplify(c, hmax)
    low = [(k, str(o)) for k, o in red.summands() if k < hmax - 1]
    return Check(f"e_{i} P_{n} contractible below degree {hmax - 1}", not low, str(low[:4]))
