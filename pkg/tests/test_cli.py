import csv
import json
import subprocess
import sys
from argparse import Namespace

import numpy as np
import pytest

from heavenly.cli import (
    EXIT_FAIL,
    EXIT_INPUT,
    EXIT_OK,
    InputError,
    RunConfig,
    SolutionDocument,
    load_config,
    main,
    parse_complex,
    parse_real,
)
from heavenly.families import FamilyId, HcmaDilatParams, build_solution

DILAT = ["build", "hcma-dilat", "--a", "1+0i", "--b", "0", "--mu", "0.3,0.7,1.1,1.9", "--c", "1,1,1,1"]


@pytest.fixture
def dilat_doc(tmp_path):
    out = tmp_path / "dilat.json"
    assert main(DILAT + ["--out", str(out)]) == EXIT_OK
    return out


def _report(path):
    return json.loads(path.read_text())


def test_parsers():
    assert parse_complex("1+2i") == 1 + 2j
    assert parse_complex(" -0.5i ") == -0.5j
    assert parse_real("pi/2") == pytest.approx(np.pi / 2)
    assert parse_real("3*pi/4") == pytest.approx(3 * np.pi / 4)
    assert parse_real("-pi") == pytest.approx(-np.pi)
    with pytest.raises(InputError):
        parse_complex("one")


def test_build_dilat(dilat_doc, capsys):
    doc = SolutionDocument.load(dilat_doc)
    assert doc.family is FamilyId.HCMA_DILAT and len(doc.exponents) == 4
    ref = build_solution(FamilyId.HCMA_DILAT, HcmaDilatParams(1, 0, (0.3, 0.7, 1.1, 1.9), (1, 1, 1, 1)))
    np.testing.assert_array_equal(doc.exponents, ref.exponents)
    assert doc.rederivation_error() == 0


def test_build_heaven_zero(tmp_path):
    out = tmp_path / "hz.json"
    assert main(["build", "heaven-zero", "--beta", "1,2", "--gamma", "1,1", "--c", "1,1", "--out", str(out)]) == 0
    assert len(SolutionDocument.load(out).exponents) == 2


def test_build_degenerate_phase(tmp_path, capsys):
    code = main(["build", "hcma-dilat", "--a", "1", "--mu", "pi/2", "--c", "1", "--out", str(tmp_path / "x.json")])
    assert code == EXIT_INPUT
    assert "DegenerateTerm" in capsys.readouterr().err
    assert not (tmp_path / "x.json").exists()


def test_document_round_trip(dilat_doc):
    doc = SolutionDocument.load(dilat_doc)
    again = SolutionDocument.from_json(json.loads(doc.dumps()))
    np.testing.assert_array_equal(again.exponents, doc.exponents)
    np.testing.assert_array_equal(again.amplitudes, doc.amplitudes)
    assert again.dumps() == doc.dumps() == dilat_doc.read_text()


def test_verify_exit_codes(dilat_doc, tmp_path):
    rep = tmp_path / "rep.json"
    assert main(["verify", str(dilat_doc), "--out", str(rep)]) == EXIT_OK
    assert _report(rep)["passed"] is True

    raw = json.loads(dilat_doc.read_text())
    raw["exponents"][2][2][0] += 1e-3
    raw["exponents"][2][3][0] += 1e-3
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(raw))
    assert main(["verify", str(bad), "--out", str(rep)]) == EXIT_FAIL
    assert _report(rep)["passed"] is False

    cut = tmp_path / "cut.json"
    cut.write_text(dilat_doc.read_text()[:100])
    assert main(["verify", str(cut)]) == EXIT_INPUT
    assert main(["verify", str(tmp_path / "missing.json")]) == EXIT_INPUT


def test_schema_version_checked(dilat_doc, tmp_path):
    raw = json.loads(dilat_doc.read_text())
    raw["schema_version"] = 99
    p = tmp_path / "v.json"
    p.write_text(json.dumps(raw))
    assert main(["verify", str(p)]) == EXIT_INPUT


def test_metric_and_curvature(dilat_doc, tmp_path):
    rep = tmp_path / "m.json"
    assert main(["metric", str(dilat_doc), "--points", "8", "--out", str(rep)]) == EXIT_OK
    counts = _report(rep)["signature_counts"]
    assert counts == {"UltraHyperbolic": sum(counts.values())}
    assert main(["curvature", str(dilat_doc), "--points", "3", "--out", str(rep)]) == EXIT_OK
    assert _report(rep)["max_ricci_ratio"] < 1e-4


def test_metric_skips_degenerate_points(tmp_path, capsys):
    one = tmp_path / "one.json"
    assert main(["build", "hcma-dilat", "--mu", "0.3", "--c", "1", "--out", str(one)]) == 0
    rep = tmp_path / "m.json"
    assert main(["metric", str(one), "--points", "4", "--out", str(rep)]) == EXIT_FAIL
    entries = _report(rep)["points"]
    assert len(entries) == 4 and all("DegenerateMetric" in e["skipped"] for e in entries)


def test_killing(dilat_doc, tmp_path, capsys):
    assert main(["killing", str(dilat_doc)]) == EXIT_OK
    assert "no Killing vectors guaranteed: true" in capsys.readouterr().out
    small = tmp_path / "s.json"
    main(["build", "heaven-zero", "--beta", "1,2", "--gamma", "1,1", "--c", "1,1", "--out", str(small)])
    assert main(["killing", str(small)]) == EXIT_FAIL
    assert "no Killing vectors guaranteed: false" in capsys.readouterr().out


def test_symmetry_table_literal(capsys):
    assert main(["symmetry-table"]) == EXIT_OK
    assert "64/64 cells pass" in capsys.readouterr().out


def test_symmetry_table_corrected(tmp_path, capsys):
    rep = tmp_path / "t.json"
    assert main(["symmetry-table", "--corrected", "--out", str(rep)]) == EXIT_OK
    assert _report(rep)["passed_cells"] == 64


def test_export_grid(dilat_doc, tmp_path):
    out = tmp_path / "g.csv"
    assert main(["export-grid", str(dilat_doc), "--axes", "re_p,im_p", "--fixed", "re_z2=0.1", "--out", str(out)]) == 0
    rows = list(csv.reader(out.open()))
    assert len(rows) == 1 + 64 * 64
    header = rows[0]
    assert header[:6] == ["re_p", "im_p", "re_z2", "im_z2", "value_re", "value_im"]
    # repr formatting round-trips every float
    assert all(repr(float(v)) == v for v in rows[1][:6])
    assert float(rows[1][2]) == 0.1

    again = tmp_path / "g2.csv"
    main(["export-grid", str(dilat_doc), "--axes", "re_p,im_p", "--fixed", "re_z2=0.1", "--out", str(again),
          "--workers", "3"])
    assert again.read_bytes() == out.read_bytes()


def test_export_grid_zero_potential(tmp_path):
    doc = tmp_path / "z.json"
    assert main(["build", "heaven-equal", "--out", str(doc)]) == 0
    out = tmp_path / "z.csv"
    assert main(["export-grid", str(doc), "--axes", "t,x", "--resolution", "5", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 25 and all(float(r["value_re"]) == 0 == float(r["value_im"]) for r in rows)


def test_export_grid_bad_axis(dilat_doc):
    assert main(["export-grid", str(dilat_doc), "--axes", "re_p,q"]) == EXIT_INPUT
    assert main(["export-grid", str(dilat_doc), "--axes", "re_p,im_p", "--ranges", "0:1"]) == EXIT_INPUT


def test_usage_error_exits_2():
    with pytest.raises(SystemExit) as exc:
        main(["no-such-command"])
    assert exc.value.code == 2


def _ns(**kw):
    base = {f: None for f in ("config", "seed", "points", "tol_residual", "tol_ricci", "fd_step", "box", "workers")}
    base.update(kw)
    return Namespace(**base)


def test_config_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"seed": 3, "points": 7, "tol-residual": 1e-8}))
    assert load_config(_ns(), {}) == RunConfig()
    c = load_config(_ns(config=str(cfg)), {})
    assert (c.seed, c.points, c.tol_residual) == (3, 7, 1e-8)
    c = load_config(_ns(config=str(cfg)), {"HEAVENLY_SEED": "5", "HEAVENLY_TOL_RESIDUAL": "1e-6"})
    assert (c.seed, c.points, c.tol_residual) == (5, 7, 1e-6)
    c = load_config(_ns(config=str(cfg), seed=9), {"HEAVENLY_SEED": "5"})
    assert c.seed == 9


@pytest.mark.parametrize("env", [{"HEAVENLY_SEED": "x"}, {"HEAVENLY_TOL_RICCI": "-1"}, {"HEAVENLY_BOX": "inf"}])
def test_config_rejects_bad_values(env):
    with pytest.raises(InputError):
        load_config(_ns(), env)


def test_config_rejects_unknown_key(tmp_path, dilat_doc):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"colour": 1}))
    assert main(["verify", str(dilat_doc), "--config", str(cfg)]) == EXIT_INPUT


def test_reports_deterministic(dilat_doc, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["verify", str(dilat_doc), "--seed", "4", "--out", str(a)])
    main(["verify", str(dilat_doc), "--seed", "4", "--workers", "4", "--out", str(b)])
    rep_a, rep_b = _report(a), _report(b)
    rep_a["config"].pop("workers"), rep_b["config"].pop("workers")
    assert rep_a == rep_b


def test_module_entry_point(dilat_doc):
    proc = subprocess.run([sys.executable, "-m", "heavenly", "killing", str(dilat_doc)], capture_output=True, text=True)
    assert proc.returncode == 0 and "true" in proc.stdout
