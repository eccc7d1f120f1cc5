from __future__ import annotations

import json
import logging

import pytest
from click.testing import CliRunner

from skeinslide import __version__
from skeinslide.cli import (
    CACHE_ENV,
    SCHEMA_VERSION,
    ComplexCache,
    RunConfig,
    UsageError,
    main,
    print_tables,
    run,
)
from skeinslide.kom import P3, simplify


@pytest.fixture
def runner():
    return CliRunner()


def _structured(runner, *args, env=None):
    res = runner.invoke(main, ["run", "--format", "structured", *args], env=env)
    return res, (json.loads(res.output) if res.output.startswith("{") else None)


def test_ring_bridge_p3_passes(runner):
    res, doc = _structured(runner, "--suite", "ring-bridge", "-p", "3")
    assert res.exit_code == 0
    assert doc["schema"] == SCHEMA_VERSION and doc["artifact_version"] == __version__
    names = [c["name"] for s in doc["sections"] for c in s["checks"]]
    assert "q^(p-1)[p] = phi_p(q^2)" in names
    assert doc["status"] == "pass"


def test_decat_reports_table(runner):
    res, doc = _structured(runner, "--suite", "decat", "-n", "3", "--qmax", "20")
    assert res.exit_code == 0
    (section,) = doc["sections"]
    table = section["tables"]["euler characteristic"]
    assert table[0] == ["diagram", "series"]
    assert {row[0] for row in table[1:]} == {"id", "e1", "e2", "e1e2", "e2e1"}


def test_slide_certificate_n2_passes(runner):
    res = runner.invoke(main, ["run", "--suite", "slide-certificate", "-N", "2", "--hmax", "12"])
    assert res.exit_code == 0, res.output
    assert res.output.rstrip().endswith("PASS")


def test_failing_suite_exits_1(runner):
    res = runner.invoke(main, ["run", "--suite", "tail-equality", "-N", "3"])
    assert res.exit_code == 1
    assert "[FAIL] tails equal after a summand permutation" in res.output


def test_usage_errors_exit_2(runner):
    assert runner.invoke(main, ["run", "--suite", "nope"]).exit_code == 2
    assert runner.invoke(main, ["run", "--suite", "decat", "--hmax", "0"]).exit_code == 2
    assert runner.invoke(main, ["run"]).exit_code == 2
    assert runner.invoke(main, ["tables", "bogus"]).exit_code == 2


def test_internal_error_exits_2(runner):
    # projector complexes are only built for n <= 3
    res = runner.invoke(main, ["run", "--suite", "decat", "-n", "4"])
    assert res.exit_code == 2


def test_run_config_validation():
    with pytest.raises(UsageError):
        RunConfig("nope")
    with pytest.raises(UsageError):
        RunConfig("decat", qmax=0)
    with pytest.raises(UsageError):
        RunConfig("decat", format="xml")


def test_reports_are_deterministic(runner):
    args = ["--suite", "tail-equality", "-N", "2"]
    a = runner.invoke(main, ["run", "--format", "structured", *args]).output
    b = runner.invoke(main, ["run", "--format", "structured", *args]).output
    assert a == b
    assert "timings" not in json.loads(a)
    t = json.loads(runner.invoke(main, ["run", "--format", "structured", "--timings", *args]).output)
    assert set(t["timings"]) == {"tail-equality"}


def test_output_file(runner, tmp_path):
    out = tmp_path / "r.json"
    res = runner.invoke(main, ["run", "--suite", "trace-p2", "--format", "structured", "-o", str(out)])
    assert res.exit_code == 0 and res.output == ""
    assert json.loads(out.read_text())["suite"] == "trace-p2"


def test_tables_examples():
    omega = print_tables("omega", N=2).splitlines()
    assert [r.split()[:2] for r in omega[1:]] == [["phi_0", "1"], ["phi_1", "[2]"], ["phi_2", "[3]"]]
    proj = print_tables("projector", n=2).splitlines()
    assert [r.split()[:2] for r in proj[1:]] == [["id", "1"], ["e1", "-1/[2]"]]
    euler = print_tables("euler", n=2, qmax=8).splitlines()
    assert euler[1].split()[:2] == ["id", "1"]
    assert "-q + q^3 - q^5 + q^7 + O(q^8)" in euler[2]


def test_tables_command(runner):
    res = runner.invoke(main, ["tables", "projector", "-n", "3"])
    assert res.exit_code == 0
    assert "-[2]/[3]" in res.output and "1/[3]" in res.output


def test_cache_round_trip(tmp_path):
    cache = ComplexCache(tmp_path)
    c = simplify(P3(), 12)
    params = {"n": 3, "hmax": 12}
    assert cache.get("p3-reduced", params) is None
    assert cache.put("p3-reduced", params, c.to_json()) == "stored"
    again = cache.complex("p3-reduced", params, lambda: pytest.fail("should hit"))
    assert again.to_json() == c.to_json()
    assert cache.hits == 1


def test_cache_version_bump_misses(tmp_path):
    ComplexCache(tmp_path, version=1).put("k", {"a": 1}, {"x": 1})
    assert ComplexCache(tmp_path, version=2).get("k", {"a": 1}) is None
    assert ComplexCache(tmp_path, version=1).get("k", {"a": 1}) == {"x": 1}


def test_cache_corrupt_entry_recomputed(tmp_path, caplog):
    cache = ComplexCache(tmp_path)
    c = simplify(P3(), 6)
    cache.put("p3", {}, c.to_json())
    (path,) = tmp_path.glob("*.json")
    path.write_text(path.read_text()[:-20])
    calls = []

    def compute():
        calls.append(1)
        return c

    with caplog.at_level(logging.WARNING, logger="skeinslide"):
        got = cache.complex("p3", {}, compute)
    assert calls and got.to_json() == c.to_json()
    assert "corrupt cache entry" in caplog.text
    # the recomputed value was written back
    assert cache.get("p3", {}) == c.to_json()


def test_cache_tampered_payload_detected(tmp_path, caplog):
    cache = ComplexCache(tmp_path)
    cache.put("k", {}, {"x": 1})
    (path,) = tmp_path.glob("*.json")
    entry = json.loads(path.read_text())
    entry["payload"] = {"x": 2}
    path.write_text(json.dumps(entry))
    with caplog.at_level(logging.WARNING, logger="skeinslide"):
        assert cache.get("k", {}) is None
    assert "digest or version mismatch" in caplog.text


def test_cache_invalidate(tmp_path):
    cache = ComplexCache(tmp_path)
    cache.put("a", {}, 1)
    cache.put("b", {}, 2)
    assert cache.invalidate("a", {}) == 1
    assert cache.get("a", {}) is None and cache.get("b", {}) == 2
    assert cache.invalidate() == 1


def test_cache_storage_error_not_fatal(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    cache = ComplexCache(blocker / "sub")
    assert cache.put("k", {}, 1) == "error"
    assert cache.get("k", {}) is None


def test_env_var_selects_cache(runner, tmp_path):
    res = runner.invoke(main, ["run", "--suite", "trace-p2"], env={CACHE_ENV: str(tmp_path)})
    assert res.exit_code == 0
    assert len(list(tmp_path.glob("*.json"))) == 1
    res = runner.invoke(main, ["cache", "info"], env={CACHE_ENV: str(tmp_path)})
    assert "1 entries" in res.output
    res = runner.invoke(main, ["cache", "invalidate", "--cache-dir", str(tmp_path)])
    assert "removed 1 entries" in res.output


def test_cached_run_matches_uncached(tmp_path):
    cfg = RunConfig("projector-axioms", n=2, cache_dir=str(tmp_path))
    first = run(cfg).structured()
    second = run(cfg).structured()
    plain = run(RunConfig("projector-axioms", n=2)).structured()
    assert first == second == plain
