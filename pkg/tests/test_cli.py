import json
import math

import pytest

from persamp.barcode import Barcode, format_barcode
from persamp.cli import fmt, main
from persamp.gridmod import (
    GridGeometry,
    direct_sum,
    interval_module,
    module_from_dict,
    module_to_dict,
    morphism_from_dict,
    validate,
)


@pytest.fixture
def files(tmp_path):
    def write(name, obj):
        p = tmp_path / name
        if isinstance(obj, Barcode):
            p.write_text(format_barcode(obj))
        elif isinstance(obj, str):
            p.write_text(obj)
        else:
            p.write_text(json.dumps(module_to_dict(obj)))
        return str(p)
    return write


def run(capsys, argv):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out.strip(), err.strip()


def test_amp_examples(files, capsys):
    assert run(capsys, ["amp", files("b.txt", Barcode([(0, 3)])), "--spec", "p1"])[:2] == (0, "3")
    box = interval_module(GridGeometry(((0, 2, 4), (0, 3, 5))), (0, 0), (0, 0))
    assert run(capsys, ["amp", files("m.json", box), "--spec", "hilbert:1"])[:2] == (0, "6")
    g = GridGeometry(((0, 0.25), (0,)))
    M4 = direct_sum(*[interval_module(g, (0, 0), (0, None))] * 4)
    code, out, _ = run(capsys, ["amp", files("k.json", M4), "--spec", "ctau:1",
                                "--content", "lebesgue"])
    assert (code, out) == (0, "1")


def test_dist_examples(files, capsys):
    a = files("a.txt", Barcode([(0, 3)]))
    b = files("b.txt", Barcode([(4, 5)]))
    assert run(capsys, ["dist", a, b, "--metric", "bottleneck"])[:2] == (0, "1.5 exact")
    out = run(capsys, ["dist", a, b, "--metric", "path", "--spec", "trop:3", "--fold", "sum"])
    assert out[:2] == (0, "4 upper_bound")
    split = files("s.txt", Barcode([(0, 1), (1, 2)]))
    whole = files("w.txt", Barcode([(0, 2)]))
    assert run(capsys, ["dist", split, whole, "--metric", "lp", "--spec", "hilbert:1"])[:2] == \
        (0, "0 exact")


def test_require_exact(files, capsys):
    a = files("a.txt", Barcode([(0, 3)]))
    b = files("b.txt", Barcode([(4, 5)]))
    code, out, err = run(capsys, ["dist", a, b, "--metric", "path", "--spec", "trop:2",
                                  "--require-exact"])
    assert code == 3 and "error" in json.loads(err)
    code, out, _ = run(capsys, ["dist", a, b, "--metric", "path", "--spec", "p1",
                                "--require-exact"])
    assert (code, out) == (0, "4 exact")


def test_dist_json(files, capsys):
    a = files("a.txt", Barcode([(0, 3)]))
    b = files("b.txt", Barcode([(4, 5)]))
    code, out, _ = run(capsys, ["dist", a, b, "--metric", "wasserstein", "--p", "1", "--json"])
    doc = json.loads(out)
    assert code == 0 and doc["value"] == 2 and doc["exactness"] == "exact"


def test_check_exit_codes(capsys):
    code, out, _ = run(capsys, ["check", "--ids", "AXIOMS", "--samples", "100", "--seed", "7",
                                "--json"])
    doc = json.loads(out)
    assert code == 0 and doc["passed"] and doc["reports"][0]["id"] == "AXIOMS"
    code, out, _ = run(capsys, ["check", "--ids", "rank-sub,PNORM", "--samples", "5"])
    assert code == 0 and out.splitlines()[0].startswith("PASS PNORM")
    assert run(capsys, ["check", "--ids", "NOPE"])[0] == 2


def test_check_failure_emits_json(monkeypatch, capsys):
    from persamp import stability
    from persamp.stability import InequalityCase

    def bad(rng):
        return [("1 <= 0", 1.0, 0.0)], {}, False

    monkeypatch.setitem(stability.CATALOG, "BAD", InequalityCase("BAD", "", "test", bad))
    code, out, err = run(capsys, ["check", "--ids", "BAD", "--samples", "2"])
    assert code == 1 and out.startswith("FAIL BAD")
    assert len(json.loads(err)["failures"]) == 2


def test_rips_square(files, capsys):
    p = files("sq.csv", "x,y\n0,0\n1,0\n1,1\n0,1\n")
    code, out, _ = run(capsys, ["rips", p, "--maxdim", "1", "--degree", "1"])
    assert code == 0
    b, d = out.split()
    assert float(b) == 1 and abs(float(d) - math.sqrt(2)) < 1e-9
    code, out, _ = run(capsys, ["rips", p, "--maxdim", "1"])
    assert out.splitlines()[0] == "# H0"


def test_rips_bifiltration(files, capsys):
    p = files("sq.csv", "0,0,1\n1,0,1\n1,1,1\n0,1,1\n")
    code, out, _ = run(capsys, ["rips", p, "--density-col", "--radius-bps", "0,1,1.5",
                                "--density-bps", "0,2", "--degree", "1"])
    doc = json.loads(out)
    assert code == 0 and doc["dims"] == [0, 1, 0, 0, 0, 0]
    assert run(capsys, ["rips", p, "--radius-bps", "0,1"])[0] == 2


def test_gen_ses_validates(tmp_path, capsys):
    code, out, _ = run(capsys, ["gen", "--kind", "ses", "--seed", "1", "--out", str(tmp_path)])
    assert code == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["A.json", "B.json", "C.json", "incl.json", "proj.json"]
    for name in ("A.json", "B.json", "C.json"):
        assert validate(module_from_dict(json.loads((tmp_path / name).read_text()))) is None
    for name in ("incl.json", "proj.json"):
        morphism_from_dict(json.loads((tmp_path / name).read_text()))
        assert run(capsys, ["inspect", str(tmp_path / name)])[0] == 0


def test_gen_barcode_and_inspect(tmp_path, capsys):
    p = tmp_path / "g.txt"
    assert run(capsys, ["gen", "--kind", "barcode", "--seed", "3", "--out", str(p)])[0] == 0
    code, out, _ = run(capsys, ["inspect", str(p)])
    assert code == 0 and json.loads(out)["kind"] == "barcode"


def test_bad_inputs(files, capsys):
    bad = files("bad.txt", "0 1\n3 1\n")
    code, _, err = run(capsys, ["amp", bad, "--spec", "p1"])
    assert code == 1 and "bad.txt" in json.loads(err)["error"]
    good = files("g.txt", Barcode([(0, 1)]))
    assert run(capsys, ["amp", good, "--spec", "nonsense"])[0] == 2
    assert run(capsys, ["amp", str(good) + ".missing", "--spec", "p1"])[0] == 1
    with pytest.raises(SystemExit) as exc:
        main(["amp", good, "--spec", "p1", "--bogus"])
    assert exc.value.code == 2


@pytest.mark.parametrize("x", [1 / 3, math.sqrt(2), 1e-7 / 3, 12345.678901234, 2.0])
def test_output_roundtrip_at_12_digits(x):
    s = fmt(x)
    assert fmt(float(s)) == s
    assert float(s) == pytest.approx(x, rel=1e-11)
    assert fmt(math.inf) == "inf"


def test_check_json_to_file(tmp_path, capsys):
    out = tmp_path / "report.json"
    code, stdout, _ = run(capsys, ["check", "--ids", "HILB-INT", "--samples", "10",
                                   "--json", str(out)])
    doc = json.loads(out.read_text())
    assert code == 0 and stdout == "" and doc["reports"][0]["samples"] == 10
