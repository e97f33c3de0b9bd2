import csv
import io
import json
import math

import pytest

from buckspec import cli
from buckspec.io import cache_key, fmt_float

ROD = ["--l", "2", "--kind", "buckling", "--domain", "interval:1"]


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(autouse=True)
def isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("BUCKSPEC_CACHE", str(tmp_path / "cache"))
    return tmp_path / "cache"


def test_solve_rod(capsys, tmp_path):
    out = tmp_path / "rod.json"
    code, _, _ = run(capsys, "solve", *ROD, "--k", "4", "--degree", "20", "--out", str(out))
    doc = json.loads(out.read_text())
    assert code == 0
    assert set(doc) == {"schema_version", "problem", "solver", "values", "convergence", "converged", "produced_by"}
    assert doc["problem"] == {"l": 2, "kind": "buckling", "domain": {"kind": "interval", "lengths": [1.0]}}
    assert set(doc["solver"]) == {"degrees", "quadrature", "mode_cutoff"}
    assert len(doc["values"]) == 4
    assert doc["values"][0] == pytest.approx(4 * math.pi**2, rel=1e-9)


def test_solve_cache_hit_identical(capsys, isolated_cache):
    _, first, _ = run(capsys, "solve", *ROD, "--k", "4")
    entries = list(isolated_cache.iterdir())
    assert len(entries) == 1 and entries[0].read_text() == first
    _, second, _ = run(capsys, "solve", *ROD, "--k", "4")
    _, fresh, _ = run(capsys, "solve", *ROD, "--k", "4", "--no-cache")
    assert first == second == fresh


def test_cache_dir_flag(capsys, tmp_path):
    run(capsys, "solve", *ROD, "--k", "2", "--cache-dir", str(tmp_path / "other"))
    assert len(list((tmp_path / "other").iterdir())) == 1


def test_cache_key_depends_on_inputs():
    from buckspec.core import DomainSpec, ProblemSpec
    p = ProblemSpec(2, "buckling", DomainSpec("interval", (1,)))
    q = ProblemSpec(3, "buckling", DomainSpec("interval", (1,)))
    assert cache_key(p, {"k": 4}) == cache_key(p, {"k": 4})
    assert len({cache_key(p, {"k": 4}), cache_key(q, {"k": 4}), cache_key(p, {"k": 5}),
                cache_key(p, {"k": 4}, version="9")}) == 4


def test_invalid_order(capsys):
    code, out, err = run(capsys, "solve", "--l", "1", "--domain", "interval:1")
    assert code == 2 and out == ""
    assert json.loads(err)["error"] == "INVALID_ORDER"


@pytest.mark.parametrize("text, kind, lengths", [
    ("interval:1", "interval", (1.0,)),
    ("rectangle:2x1", "rectangle", (2.0, 1.0)),
    ("cylinder:2pi,1", "cylinder", (2 * math.pi, 1.0)),
])
def test_parse_domain(text, kind, lengths):
    d = cli.parse_domain(text)
    assert d.kind.value == kind and d.lengths == pytest.approx(lengths, rel=1e-15)


def test_parse_axis():
    assert cli.parse_axis("8:24:4") == ["8", "12", "16", "20", "24"]
    assert cli.parse_axis("2,3") == ["2", "3"]


def _csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_verify_holds(capsys, tmp_path):
    summary = tmp_path / "s.json"
    code, out, _ = run(capsys, "verify", *ROD, "--k", "6", "--rules", "cor12,thm11", "--k-max", "5",
                       "--summary", str(summary))
    rows = _csv(out)
    assert code == 0 and len(rows) == 10
    assert list(rows[0]) == ["rule", "k", "lhs", "rhs", "slack", "holds"]
    doc = json.loads(summary.read_text())
    assert doc["all_hold"] and set(doc["rules"]) == {"cor12", "thm11"}


def test_verify_failure_exit(capsys, tmp_path):
    spec = tmp_path / "bad.json"
    spec.write_text(json.dumps({"values": [1, 6]}))
    code, out, _ = run(capsys, "verify", "--spectrum", str(spec), "--rules", "cy-euclid", "--n", "2",
                       "--k-max", "1")
    assert code == 1
    assert "false" in out


def test_verify_conjecture_never_fails_run(capsys, tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps([1.0, 2.0, 2.5]))
    code, out, _ = run(capsys, "verify", "--spectrum", str(spec), "--rules", "cy-conjecture,cor12", "--n", "2",
                       "--k-max", "2")
    summary = json.loads(out[out.index("{"):])
    assert code == 0 and summary["rules"]["cy-conjecture"]["conjecture"]


def test_verify_missing_spectrum(capsys, tmp_path):
    code, _, err = run(capsys, "verify", "--spectrum", str(tmp_path / "nope.json"), "--rules", "cor12")
    assert code == 2 and json.loads(err)["error"] == "FILE_NOT_FOUND"


def test_verify_rule_not_applicable(capsys):
    code, _, err = run(capsys, "verify", *ROD, "--rules", "thm31", "--k", "4")
    assert code == 2 and json.loads(err)["error"] == "RULE_NOT_APPLICABLE"


def test_bound_rows(capsys):
    code, out, _ = run(capsys, "bound", *ROD, "--k", "6", "--rules", "cor12,thm11", "--k-max", "5")
    rows = _csv(out)
    assert code == 0 and list(rows[0]) == ["k", "computed", "rule", "bound", "ratio", "method"]
    assert len(rows) == 10
    assert all(float(r["ratio"]) >= 1 - 1e-6 for r in rows)
    first = [r for r in rows if r["k"] == "1" and r["rule"] == "cor12"][0]
    assert float(first["bound"]) == pytest.approx(31 / 3 * 4 * math.pi**2, rel=1e-9)


def test_bound_unbounded_sentinel(capsys, tmp_path):
    spec = tmp_path / "s.json"
    spec.write_text(json.dumps([1.0, 2.0]))
    code, out, _ = run(capsys, "bound", "--spectrum", str(spec), "--rules", "thm11", "--delta-seq", "1.0",
                       "--k-max", "1")
    row = _csv(out)[0]
    assert code == 0 and row["bound"] == "inf" and row["method"] == "unbounded"


def test_bound_insufficient(capsys):
    code, _, err = run(capsys, "bound", *ROD, "--k", "3", "--rules", "cor12", "--k-max", "5")
    assert code == 2 and json.loads(err)["error"] == "INSUFFICIENT_VALUES"


def test_sweep_degree_monotone(capsys, tmp_path):
    dat = tmp_path / "conv.dat"
    code, out, _ = run(capsys, "sweep", *ROD, "--k", "1", "--axis", "degree", "--values", "8:24:4",
                       "--dat", str(dat))
    rows = _csv(out)
    vals = [float(r["value"]) for r in rows]
    assert code == 0 and len(vals) == 5
    assert all(b <= a * (1 + 1e-10) for a, b in zip(vals, vals[1:]))
    assert dat.read_text().startswith("# k=1\n")


def test_sweep_l_two_series(capsys, tmp_path):
    dat = tmp_path / "ratio.dat"
    code, out, _ = run(capsys, "sweep", "--kind", "buckling", "--domain", "interval:1", "--axis", "l",
                       "--values", "2,3", "--quantity", "ratio", "--rules", "cor12", "--k-max", "3",
                       "--dat", str(dat), "--jobs", "2")
    series = {r["series"] for r in _csv(out)}
    assert code == 0 and series == {"cor12 l=2", "cor12 l=3"}
    blocks = dat.read_text().split("\n\n\n")
    assert len(blocks) == 2


def test_sweep_no_axis(capsys):
    code, _, err = run(capsys, "sweep", *ROD, "--axis", "degree")
    assert code == 2 and json.loads(err)["error"] == "NO_AXIS"


def test_sweep_jobs_do_not_change_bytes(capsys):
    args = ["sweep", *ROD, "--k", "3", "--axis", "degree", "--values", "8,12,16", "--no-cache"]
    _, serial, _ = run(capsys, *args, "--jobs", "1")
    _, parallel, _ = run(capsys, *args, "--jobs", "3")
    assert serial == parallel


def test_float_format():
    assert fmt_float(0.1) == "0.1" and fmt_float(1 / 3) == "0.3333333333333333"
    assert fmt_float(math.inf) == "inf" and float(fmt_float(39.47841760435743)) == 39.47841760435743
