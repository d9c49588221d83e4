import json
import math

import numpy as np
import pytest
import yaml

from g2soliton import cli
from g2soliton import fields as F

TYPE_B = {
    "family": "TypeB",
    "params": {"Lambda": -3.0, "eps0": 1, "a2": 0.0},
    "variants": {"cross": "t1", "psi_equation": "transformed"},
    "slots": {"psi": "psi_B_transformed"},
    "grid": {"window": [1, 2, 1, 2], "n": 21},
}


def write_cfg(tmp_path, cfg, name="run.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(cfg, allow_unicode=True))
    return str(path)


def run(tmp_path, cfg, *args, cmd="verify"):
    out = tmp_path / "report.json"
    code = cli.main([cmd, "--config", write_cfg(tmp_path, cfg), "--out", str(out), *args])
    report = json.loads(out.read_text()) if out.exists() else None
    return code, report


def test_verify_type_b_closed_form(tmp_path):
    code, rep = run(tmp_path, TYPE_B)
    assert code == 0 and rep["status"] == 0
    assert rep["residual"]["sup"] <= 1e-9
    assert set(rep) == {"version", "family", "params", "variant", "grid", "residual", "claims", "status"}
    assert set(rep["grid"]) == {"window", "n1", "n2", "masked"}
    assert set(rep["residual"]) == {"sup", "rms", "per_component"}
    for c in rep["claims"]:
        assert set(c) == {"name", "measured", "expected", "tolerance", "pass"}


def test_verify_perturbed_fails_on_soliton_residual(tmp_path):
    code, rep = run(tmp_path, {**TYPE_B, "perturb": {"slot": "psi", "amplitude": 0.01}})
    assert code == 1 and rep["status"] == 1
    failing = [c["name"] for c in rep["claims"] if not c["pass"]]
    assert "soliton_residual" in failing


def test_verify_bad_lambda_is_usage_error(tmp_path, capsys):
    code, rep = run(tmp_path, {**TYPE_B, "params": {"Lambda": 1.0}})
    assert code == 2 and rep is None
    assert "Λ<0 required" in capsys.readouterr().err


@pytest.mark.parametrize(
    "patch",
    [
        {"bogus": 1},
        {"grid": {"window": [1, 2, 1, 2], "size": 3}},
        {"family": "TypeZ"},
        {"params": {"lambda": -3.0}},
        {"slots": {"psi": "no_such_form"}},
        {"slots": {"psi": {"closed_form": "psi_B", "grid_file": "x"}}},
        {"tolerances": {"residul": 1e-3}},
    ],
)
def test_config_errors(tmp_path, patch):
    code, _ = run(tmp_path, {**TYPE_B, **patch})
    assert code == 2


def test_variant_flag_on_family_without_variants(tmp_path):
    cfg = {"family": "CaseI", "params": {"Lambda": 0.0}, "slots": {"P": "zero"}}
    assert run(tmp_path, cfg, "--variant", "t1")[0] == 2
    assert run(tmp_path, cfg, cmd="adjudicate")[0] == 2


def test_variant_all_only_for_adjudicate(tmp_path):
    assert run(tmp_path, TYPE_B, "--variant", "all")[0] == 2


def test_variant_flag_selects_cross_term(tmp_path):
    code, rep = run(tmp_path, TYPE_B, "--variant", "t2")
    assert code == 1 and rep["variant"]["cross"] == "t2"


def test_adjudicate_type_b(tmp_path):
    code, rep = run(tmp_path, TYPE_B, cmd="adjudicate")
    assert code == 0
    assert rep["switch"] == "cross"
    assert len(rep["passing"]) == 1
    sups = {r["variant"]: r["sup"] for r in rep["variants"]}
    assert sups[rep["passing"][0]] <= 1e-8
    assert all(s > 1e-3 for v, s in sups.items() if v not in rep["passing"])


def test_adjudicate_type_a_table(tmp_path):
    cfg = {"family": "TypeA", "params": {"Lambda": -3.0, "c1": 2.0, "a2": 1.0}, "slots": {"psi": "psi_A"}, "grid": {"n": 15}}
    code, rep = run(tmp_path, cfg, cmd="adjudicate")
    assert [r["variant"] for r in rep["variants"]] == ["printed", "c_from_prime"]
    assert rep["passing"] and code == 0


def test_overrides(tmp_path):
    code, rep = run(tmp_path, TYPE_B, "--grid", "11", "--window", "1.2,1.8,1,2", "--tolerance", "1e-30")
    assert rep["grid"]["n1"] == 11 and rep["grid"]["window"][0] == 1.2
    assert code == 1  # nothing is below 1e-30


def test_report_is_deterministic(tmp_path):
    a = tmp_path / "a.json"
    b = tmp_path / "b.json"
    path = write_cfg(tmp_path, TYPE_B)
    cli.main(["verify", "--config", path, "--out", str(a)])
    cli.main(["verify", "--config", path, "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_report_to_stdout(tmp_path, capsys):
    code = cli.main(["verify", "--config", write_cfg(tmp_path, TYPE_B)])
    assert code == 0
    assert json.loads(capsys.readouterr().out)["family"] == "TypeB"


def test_solve_and_verify_grid_slot(tmp_path):
    cfg = {
        "family": "CaseI",
        "params": {"Lambda": -1.0, "c": 1.0},
        "slots": {"P": {"solve": {"data": "liouville_disc"}}},
        "grid": {"window": [-0.5, 0.5, -0.5, 0.5], "n": 33},
        "solve": {"slot": "P"},
        "tolerances": {"residual": 0.1},
    }
    out = tmp_path / "P.grid"
    code = cli.main(["solve", "--config", write_cfg(tmp_path, cfg), "--out", str(out)])
    assert code == 0
    gf = F.read_grid(out)
    assert gf.grid.n1 == 33
    cfg2 = {k: v for k, v in cfg.items() if k not in ("solve", "grid")}
    cfg2["slots"] = {"P": {"grid_file": str(out)}}
    code, rep = run(tmp_path, cfg2)
    assert code == 0 and rep["grid"]["n1"] == 33
    assert rep["residual"]["sup"] < 0.1


def test_ode_slot(tmp_path):
    cfg = {
        "family": "TypeAprime",
        "params": {"Lambda": -3.0, "c": 1.0},
        "slots": {"R": {"ode": {"R0": 1.0, "step": 1e-3}}, "S": "S_linear"},
        "grid": {"window": [0, 0.5, 0, 0.5], "n": 15},
        "tolerances": {"constraint": 1e-6},
    }
    code, rep = run(tmp_path, cfg)
    assert code == 0


def test_list_families(capsys):
    assert cli.main(["list-families", "--json"]) == 0
    tags = [f["tag"] for f in json.loads(capsys.readouterr().out)]
    assert "TypeB" in tags and "EinsteinKundu2" in tags


def test_missing_command_is_usage_error():
    assert cli.main([]) == 2


def test_dumps_uses_17_significant_digits():
    text = cli.dumps({"x": 0.1, "y": [1.0, 2], "z": math.nan, "ok": True})
    assert '"x": 0.10000000000000001' in text
    assert '"y": [1.0, 2]' in text and '"z": "NaN"' in text
    assert json.loads(text)["x"] == 0.1
    assert cli.dumps(np.float64(1 / 3)) == "0.33333333333333331"
