"""Batch driver: verification suites, reports, tables and the complex cache.

Usage::

    skeinslide run --suite decat -n 3 --qmax 20 --format structured
    skeinslide tables euler -n 2 --qmax 8
    skeinslide cache invalidate --cache-dir /tmp/sk

Exit status is 0 when every check passes, 1 when some check fails and 2 on
usage or internal errors.  Structured reports are canonical JSON; wall-clock
timings are only written with ``--timings`` so that plain reports can be
diffed byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import sys
import tempfile
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import click

from . import __version__
from .annulus import annular_closure, eigen_check, omega, phi, verify_slide_identities
from .coeff import Check, RatFunc, TruncSeries, qint, ratfunc, s_series, verify_root_bridge
from .kom import (
    Complex,
    P2,
    close_complex,
    decat_check,
    euler_char,
    projector_complex,
    simplify,
    stack_complexes,
    validate,
)
from .cob import Obj
from .tl import (
    basis,
    compose_matchings,
    generator_matching,
    identity_matching,
    jones_wenzl,
    markov_trace,
    turnback_annihilation,
)
from . import slide

log = logging.getLogger("skeinslide")

SCHEMA_VERSION = 1
CACHE_VERSION = 1
CACHE_ENV = "SKEINSLIDE_CACHE_DIR"
SUITES = (
    "ring-bridge",
    "tl-axioms",
    "fusion-slide",
    "projector-axioms",
    "decat",
    "trace-p2",
    "tail-equality",
    "slide-certificate",
)


class UsageError(ValueError):
    """Bad configuration; maps to exit status 2."""


@dataclass(frozen=True)
class RunConfig:
    suite: str
    N: int | None = None
    n: int | None = None
    hmax: int = 12
    qmax: int = 20
    format: str = "text"
    cache_dir: str | None = None
    prime: int | None = None

    def __post_init__(self):
        if self.suite != "all" and self.suite not in SUITES:
            raise UsageError(f"unknown suite {self.suite!r}; expected one of {', '.join(SUITES)} or all")
        if self.hmax < 1 or self.qmax < 1:
            raise UsageError("truncations hmax and qmax must be positive")
        if self.format not in ("text", "structured"):
            raise UsageError(f"unknown format {self.format!r}")
        for name in ("N", "n", "prime"):
            v = getattr(self, name)
            if v is not None and v < 1:
                raise UsageError(f"{name} must be positive")


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class Section:
    suite: str
    parameters: dict
    checks: list[Check] = field(default_factory=list)
    tables: dict[str, list[list[str]]] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "parameters": self.parameters,
            "status": "pass" if self.passed else "fail",
            "checks": [{"name": c.name, "status": "pass" if c.passed else "fail", "witness": c.detail}
                       for c in self.checks],
            "tables": self.tables,
        }


@dataclass
class Report:
    suite: str
    parameters: dict
    sections: list[Section]
    timings: dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(s.passed for s in self.sections)

    def to_dict(self, timings: bool = False) -> dict:
        out = {
            "schema": SCHEMA_VERSION,
            "artifact_version": __version__,
            "suite": self.suite,
            "parameters": self.parameters,
            "status": "pass" if self.passed else "fail",
            "sections": [s.to_dict() for s in self.sections],
        }
        if timings:
            out["timings"] = {k: round(v, 3) for k, v in sorted(self.timings.items())}
        return out

    def structured(self, timings: bool = False) -> str:
        return json.dumps(self.to_dict(timings), sort_keys=True, indent=2, ensure_ascii=True) + "\n"

    def text(self, timings: bool = False) -> str:
        lines = [f"skeinslide {__version__}  suite={self.suite}  {_fmt_params(self.parameters)}"]
        for s in self.sections:
            lines.append(f"== {s.suite} {_fmt_params(s.parameters)}: {'PASS' if s.passed else 'FAIL'}")
            for c in s.checks:
                lines.append(f"  [{'PASS' if c.passed else 'FAIL'}] {c.name}")
                if c.detail and not c.passed:
                    lines.append(f"         {c.detail}")
            for title, rows in s.tables.items():
                lines.append(f"  {title}:")
                lines.extend("    " + r for r in _align(rows).splitlines())
        if timings:
            lines.extend(f"time {k}: {v:.2f}s" for k, v in sorted(self.timings.items()))
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines) + "\n"


def _fmt_params(p: dict) -> str:
    return " ".join(f"{k}={v}" for k, v in sorted(p.items()) if v is not None)


def _align(rows: list[list[str]]) -> str:
    if not rows:
        return ""
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows)


# ---------------------------------------------------------------------------
# Cache
# ---------------------------------------------------------------------------

def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


class ComplexCache:
    """Content-addressed store for computed complexes.

    An entry lives at ``<sha256 of kind, parameters and version>.json`` and
    records the version and a digest of its payload.  Entries from another
    version miss; unreadable or tampered ones are logged, dropped and
    recomputed.  Writes go through a temporary file and an atomic rename, so
    readers never see partial files and the last writer wins.
    """

    def __init__(self, directory: str | os.PathLike, version: int = CACHE_VERSION):
        self.directory = Path(directory)
        self.version = version
        self.hits = 0
        self.misses = 0

    def key(self, kind: str, params: dict) -> str:
        return hashlib.sha256(_canonical({"kind": kind, "params": params, "version": self.version})
                              .encode()).hexdigest()

    def _path(self, kind: str, params: dict) -> Path:
        return self.directory / f"{self.key(kind, params)}.json"

    def get(self, kind: str, params: dict):
        path = self._path(kind, params)
        if not path.exists():
            self.misses += 1
            return None
        try:
            entry = json.loads(path.read_text())
            payload = entry["payload"]
            ok = (entry["version"] == self.version and entry["kind"] == kind
                  and entry["digest"] == hashlib.sha256(_canonical(payload).encode()).hexdigest())
        except (OSError, ValueError, KeyError, TypeError) as exc:
            log.warning("ignoring corrupt cache entry %s: %s", path.name, exc)
            ok = False
        else:
            if not ok:
                log.warning("ignoring corrupt cache entry %s: digest or version mismatch", path.name)
        if not ok:
            self.misses += 1
            return None
        self.hits += 1
        return payload

    def put(self, kind: str, params: dict, payload) -> str:
        entry = {"version": self.version, "kind": kind, "params": params, "payload": payload,
                 "digest": hashlib.sha256(_canonical(payload).encode()).hexdigest()}
        try:
            self.directory.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=self.directory, suffix=".tmp")
            with os.fdopen(fd, "w") as fh:
                fh.write(_canonical(entry))
            os.replace(tmp, self._path(kind, params))
        except OSError as exc:
            log.warning("cache write failed: %s", exc)
            return "error"
        return "stored"

    def invalidate(self, kind: str | None = None, params: dict | None = None) -> int:
        """Drop one entry, or every entry when no kind is given."""
        if not self.directory.exists():
            return 0
        paths = [self._path(kind, params or {})] if kind else sorted(self.directory.glob("*.json"))
        removed = 0
        for p in paths:
            try:
                p.unlink()
                removed += 1
            except FileNotFoundError:
                pass
            except OSError as exc:
                log.warning("could not remove %s: %s", p, exc)
        return removed

    def complex(self, kind: str, params: dict, compute: Callable[[], Complex]) -> Complex:
        data = self.get(kind, params)
        if data is not None:
            try:
                return Complex.from_json(data)
            except Exception as exc:  # payload passed the digest but does not decode
                log.warning("ignoring undecodable cache entry for %s: %s", kind, exc)
        c = compute()
        self.put(kind, params, c.to_json())
        return c


class _NoCache(ComplexCache):
    def __init__(self):
        super().__init__(".", CACHE_VERSION)

    def get(self, kind, params):
        return None

    def put(self, kind, params, payload):
        return "disabled"


def resolve_cache(cache_dir: str | None) -> ComplexCache:
    d = cache_dir or os.environ.get(CACHE_ENV)
    return ComplexCache(d) if d else _NoCache()


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------

def diagram_name(m) -> str:
    """Shortest word in the generators e_i for a TL basis diagram."""
    n = len(m) // 2
    ident = identity_matching(n)
    if m == ident:
        return "id"
    seen = {ident: ""}
    todo = deque([ident])
    while todo:
        cur = todo.popleft()
        for i in range(1, n):
            nxt, _ = compose_matchings(cur, generator_matching(i, n))
            if nxt not in seen:
                seen[nxt] = seen[cur] + f"e{i}"
                if nxt == m:
                    return seen[nxt]
                todo.append(nxt)
    return str(m)


def _quantum_form(c: RatFunc, n: int) -> str:
    """Write c as +-[a]/[b] with a, b <= n + 1 when possible."""
    for b in range(1, n + 2):
        for a in range(1, n + 2):
            for sign in (1, -1):
                if c == ratfunc(qint(a)) * sign / ratfunc(qint(b)):
                    s = "-" if sign < 0 else ""
                    top = "1" if a == 1 else f"[{a}]"
                    return s + top if b == 1 else f"{s}{top}/[{b}]"
    return str(c)


def _table_rows(kind: str, N: int | None, n: int | None, qmax: int) -> tuple[list[str], list[list[str]]]:
    if kind == "omega":
        N = 2 if N is None else N
        w = omega(N)
        rows = [[f"phi_{k}", "1" if k == 0 else f"[{k + 1}]", str(w.coeffs[k])]
                for k in sorted(w.coeffs)]
        return ["term", "coefficient", "expanded"], rows
    n = 2 if n is None else n
    names = {m: diagram_name(m) for m in basis(n)}
    order = sorted(names, key=lambda m: (m != identity_matching(n), len(names[m]), names[m]))
    if kind == "projector":
        p = jones_wenzl(n)
        rows = [[names[m], _quantum_form(p.coeff(m), n), str(p.coeff(m))] for m in order if m in p.terms]
        return ["diagram", "coefficient", "expanded"], rows
    if kind == "euler":
        series = euler_char(projector_complex(n), qmax)
        zero = TruncSeries.make({}, qmax)
        rows = [[names[m], str(series.get(m, zero))] for m in order if series.get(m, zero).as_dict()]
        return ["diagram", "series"], rows
    raise UsageError(f"unknown table kind {kind!r}; expected projector, omega or euler")


def print_tables(kind: str, N: int | None = None, n: int | None = None, qmax: int = 20) -> str:
    header, rows = _table_rows(kind, N, n, qmax)
    return _align([header] + rows) + "\n"


# ---------------------------------------------------------------------------
# Suites
# ---------------------------------------------------------------------------

def _ring_bridge(cfg: RunConfig, cache: ComplexCache) -> list[Section]:
    primes = [cfg.prime] if cfg.prime else [3, 5, 7, 11]
    out = []
    for p in primes:
        out.append(Section("ring-bridge", {"p": p}, verify_root_bridge(p)))
    checks = []
    cut = 64
    for k in range(1, 9):
        # [k] starts at q^(1-k), so s_series(k, cut + k - 1) gives the product through q^(cut - 1)
        prod = TruncSeries.from_laurent(qint(k), cut) * s_series(k, cut + k - 1)
        one = TruncSeries.make({0: 1}, cut)
        ok = prod.agrees_with(one, cut)
        checks.append(Check(f"[{k}] * s_series({k}) = 1 + O(q^{cut})", ok, "" if ok else str(prod)))
    out.append(Section("restricted-ring", {"kmax": 8, "qmax": cut}, checks))
    return out


def _tl_axioms(cfg: RunConfig, cache: ComplexCache) -> list[Section]:
    sizes = [cfg.n] if cfg.n else list(range(1, 9))
    out = []
    for n in sizes:
        checks = turnback_annihilation(n)
        tr = markov_trace(jones_wenzl(n))
        ok = tr == ratfunc(qint(n + 1))
        checks.append(Check(f"Tr(p_{n}) = [{n + 1}]", ok, "" if ok else str(tr)))
        out.append(Section("tl-axioms", {"n": n}, checks))
    return out


def _fusion_slide(cfg: RunConfig, cache: ComplexCache) -> list[Section]:
    closures = []
    for k in range(7):
        got, want = annular_closure(jones_wenzl(k)), phi(k)
        closures.append(Check(f"annular closure of p_{k} = phi_{k}", got == want, "" if got == want else repr(got)))
    out = [Section("annular-closure", {"kmax": 6}, closures)]
    levels = [cfg.N] if cfg.N else [2, 3]
    for N in levels:
        checks = verify_slide_identities(N) if N in (2, 3) else []
        out.append(Section("fusion-slide", {"N": N}, checks + [eigen_check(N)]))
    if not cfg.N:
        out.append(Section("eigenvector", {"Nmax": 8}, [eigen_check(N) for N in range(2, 9)]))
    return out


def _turnback_reduced(n: int, i: int, hmax: int, cache: ComplexCache) -> Complex:
    def compute():
        e = Obj.tl(generator_matching(i, n))
        c = stack_complexes(Complex(0, [[e]], []), projector_complex(n).unroll(hmax))
        return simplify(c, hmax)
    return cache.complex("turnback-reduced", {"n": n, "i": i, "hmax": hmax}, compute)


def _projector_axioms(cfg: RunConfig, cache: ComplexCache) -> list[Section]:
    sizes = [cfg.n] if cfg.n else [2, 3]
    out = []
    for n in sizes:
        checks = validate(projector_complex(n))
        for i in range(1, n):
            red = _turnback_reduced(n, i, cfg.hmax, cache)
            low = [(k, str(o)) for k, o in red.summands() if k < cfg.hmax - 1]
            checks.append(Check(f"e_{i} P_{n} contractible below degree {cfg.hmax - 1}", not low, str(low[:4])))
        out.append(Section("projector-axioms", {"n": n, "hmax": cfg.hmax}, checks))
    return out


def _decat(cfg: RunConfig, cache: ComplexCache) -> list[Section]:
    sizes = [cfg.n] if cfg.n else [2, 3]
    out = []
    for n in sizes:
        header, rows = _table_rows("euler", None, n, cfg.qmax)
        out.append(Section("decat", {"n": n, "qmax": cfg.qmax}, [decat_check(n, cfg.qmax)],
                           {"euler characteristic": [header] + rows}))
    return out


def _trace_p2(cfg: RunConfig, cache: ComplexCache) -> list[Section]:
    def compute():
        c = P2().unroll(cfg.hmax)
        return simplify(close_complex(c, [0, 1]), cfg.hmax)
    red = cache.complex("trace-reduced", {"n": 2, "hmax": cfg.hmax}, compute)
    summands = sorted((k, o.shift) for k, o in red.summands() if k < cfg.hmax)
    first = summands[:2]
    ok = first == [(0, -2), (0, 0)]
    rows = [["degree", "q-shift"]] + [[str(k), str(s)] for k, s in summands]
    return [Section("trace-p2", {"hmax": cfg.hmax},
                    [Check("tr(P2) begins q^-2 Z + q^0 Z in degree 0", ok, str(first))],
                    {"summands": rows})]


def _tail_equality(cfg: RunConfig, cache: ComplexCache) -> list[Section]:
    levels = [cfg.N] if cfg.N else [2, 3]
    out = []
    for N in levels:
        checks = slide.tail_equality_check(N, cfg.hmax) + slide.cone_identity_checks(N, cfg.hmax)
        out.append(Section("tail-equality", {"N": N, "hmax": cfg.hmax}, checks))
    return out


def _slide_certificate(cfg: RunConfig, cache: ComplexCache) -> list[Section]:
    levels = [cfg.N] if cfg.N else [2, 3]
    out = []
    for N in levels:
        cert = slide.build_slide_certificate(N, cfg.hmax)
        checks = slide.verify_certificate(cert)
        for kind in slide.MUTATIONS:
            ok = not slide.accepted(slide.verify_certificate(slide.mutate_certificate(cert, kind)))
            checks.append(Check(f"mutated certificate ({kind}) rejected", ok, ""))
        checks += slide.k0_shadow(cert)
        out.append(Section("slide-certificate", {"N": N, "hmax": cfg.hmax}, checks))
    return out


REGISTRY: dict[str, Callable[[RunConfig, ComplexCache], list[Section]]] = {
    "ring-bridge": _ring_bridge,
    "tl-axioms": _tl_axioms,
    "fusion-slide": _fusion_slide,
    "projector-axioms": _projector_axioms,
    "decat": _decat,
    "trace-p2": _trace_p2,
    "tail-equality": _tail_equality,
    "slide-certificate": _slide_certificate,
}


def run(config: RunConfig, cache: ComplexCache | None = None) -> Report:
    cache = cache if cache is not None else resolve_cache(config.cache_dir)
    names = SUITES if config.suite == "all" else (config.suite,)
    sections, timings = [], {}
    for name in names:
        t = time.perf_counter()
        sections += REGISTRY[name](config, cache)
        timings[name] = time.perf_counter() - t
    params = {"N": config.N, "n": config.n, "hmax": config.hmax, "qmax": config.qmax, "p": config.prime}
    return Report(config.suite, {k: v for k, v in params.items() if v is not None}, sections, timings)


# ---------------------------------------------------------------------------
# Command line
# ---------------------------------------------------------------------------

@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="skeinslide")
def main():
    """Verification suites for the Jones-Wenzl projector and its annular slides."""
    logging.basicConfig(format="%(levelname)s: %(message)s", level=logging.WARNING)


@main.command("run")
@click.option("--suite", "-s", required=True, type=click.Choice(SUITES + ("all",)))
@click.option("--level", "-N", "N", type=click.IntRange(min=1), default=None, help="level N")
@click.option("--strands", "-n", "n", type=click.IntRange(min=1), default=None, help="strand count n")
@click.option("--prime", "-p", type=click.IntRange(min=2), default=None, help="prime for ring-bridge")
@click.option("--hmax", type=click.IntRange(min=1), default=12, show_default=True)
@click.option("--qmax", type=click.IntRange(min=1), default=20, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["text", "structured"]), default="text", show_default=True)
@click.option("--output", "-o", type=click.Path(dir_okay=False), default=None, help="write the report here")
@click.option("--cache-dir", type=click.Path(file_okay=False), default=None,
              help=f"complex cache directory (default: ${CACHE_ENV}, else no cache)")
@click.option("--timings", is_flag=True, help="include wall-clock timings")
def run_cmd(suite, N, n, prime, hmax, qmax, fmt, output, cache_dir, timings):
    """Run a verification suite; exit 0 on pass, 1 on failure."""
    try:
        cfg = RunConfig(suite, N, n, hmax, qmax, fmt, cache_dir, prime)
        report = run(cfg)
    except UsageError as exc:
        raise click.UsageError(str(exc))
    except Exception as exc:
        log.error("internal error: %s: %s", type(exc).__name__, exc)
        sys.exit(2)
    text = report.structured(timings) if fmt == "structured" else report.text(timings)
    if output:
        Path(output).write_text(text)
    else:
        click.echo(text, nl=False)
    sys.exit(0 if report.passed else 1)


@main.command("tables")
@click.argument("kind", type=click.Choice(["projector", "omega", "euler"]))
@click.option("--level", "-N", "N", type=click.IntRange(min=0), default=None)
@click.option("--strands", "-n", "n", type=click.IntRange(min=1, max=8), default=None)
@click.option("--qmax", type=click.IntRange(min=1), default=20, show_default=True)
def tables_cmd(kind, N, n, qmax):
    """Print p_n coefficients, omega_N coefficients or Euler characteristics."""
    click.echo(print_tables(kind, N, n, qmax), nl=False)


@main.command("cache")
@click.argument("op", type=click.Choice(["invalidate", "info"]))
@click.option("--cache-dir", type=click.Path(file_okay=False), default=None)
def cache_cmd(op, cache_dir):
    """Inspect or clear the complex cache."""
    d = cache_dir or os.environ.get(CACHE_ENV)
    if not d:
        raise click.UsageError(f"no cache directory: pass --cache-dir or set {CACHE_ENV}")
    cache = ComplexCache(d)
    if op == "invalidate":
        click.echo(f"removed {cache.invalidate()} entries")
    else:
        entries = sorted(cache.directory.glob("*.json")) if cache.directory.exists() else []
        click.echo(f"{cache.directory}: {len(entries)} entries, version {cache.version}")


if __name__ == "__main__":
    main()
