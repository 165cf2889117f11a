import json
import subprocess
import sys

import numpy as np
import pytest

from hessiasol.cli import ConfigError, Expr, config_hash, dumps17, main, run


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return p


def report(out):
    return json.loads((out / "report.json").read_text())


SOLVE_MA1 = {
    "domain": {"shape": "ball", "n": 1},
    "operator": {"op": "monge_ampere", "psi": 1.0},
    "h": 0.125,
    "phi": "r2",
    "exact": "r2",
    "error_tol": 5e-3,
}


def test_expr_names_and_functions():
    z = np.array([[1 + 2j, 0.5j]])
    assert Expr("x1 + y2 * 2")(z)[0] == pytest.approx(2.0)
    assert Expr("r2")(z)[0] == pytest.approx(5.25)
    assert Expr("abs(z1 - 1) ** 0.5")(z)[0] == pytest.approx(np.sqrt(2.0))
    assert Expr("exp(s)")(z, np.array([0.0]))[0] == 1.0
    assert Expr(3)(z)[0] == 3.0
    assert Expr("x1 > 0")(z)[0] == 1.0


@pytest.mark.parametrize("src", ["__import__('os')", "x1.real", "lambda: 1", "open('f')", "[1, 2]", "'a'"])
def test_expr_rejects_unsafe_syntax(src):
    with pytest.raises(ConfigError):
        Expr(src)


def test_expr_rejects_complex_values():
    with pytest.raises(ConfigError):
        Expr("z1")(np.array([[1j]]))


def test_dumps17_roundtrip():
    obj = {"b": [0.1, 1 / 3, float("nan")], "a": np.float64(2.0), "c": {"x": np.arange(2)}}
    text = dumps17(obj)
    back = json.loads(text)
    assert back["b"][1] == 1 / 3 and back["b"][2] is None
    assert list(back) == ["a", "b", "c"]
    assert config_hash({"a": 1, "b": 2}) == config_hash({"b": 2, "a": 1})


def test_solve_fixture(tmp_path):
    out = tmp_path / "out"
    code = run("solve", write(tmp_path, SOLVE_MA1), out)
    assert code == 0
    rep = report(out)
    assert rep["result"]["sup_error"] <= 5e-3
    assert rep["exit_code"] == 0 and rep["version"]
    assert (out / "solution.csv").is_file()
    trace = (out / "residual.csv").read_text().splitlines()
    assert trace[0] == "iter,residual" and len(trace) > 2


def test_solve_newton_method(tmp_path):
    out = tmp_path / "out"
    assert run("solve", write(tmp_path, {**SOLVE_MA1, "method": "newton"}), out) == 0
    rep = report(out)["result"]
    assert rep["sup_error"] <= 5e-3
    assert "method: damped Newton" in rep["solve"]["notes"]


def test_solve_reports_are_reproducible(tmp_path):
    p = write(tmp_path, SOLVE_MA1)
    run("solve", p, tmp_path / "a", seed=3)
    run("solve", p, tmp_path / "b", seed=3)
    a, b = report(tmp_path / "a"), report(tmp_path / "b")
    a.pop("timing"), b.pop("timing")
    assert a == b


def test_matrix_lemma_flags(tmp_path):
    out = tmp_path / "ml"
    assert main(["matrix-lemma", "--n", "3", "--samples", "300", "--seed", "7", "--out", str(out)]) == 0
    assert report(out)["result"]["min_gap"] >= -1e-10


def test_certify_failure_exit_2(tmp_path, capsys):
    cfg = {
        "domain": {"n": 1},
        "operator": {"op": "monge_ampere", "psi": 8.0},
        "h": 0.125,
        "field": {"expr": "0.5 * r2"},
        "mode": "subsolution",
    }
    out = tmp_path / "cert"
    assert run("certify", write(tmp_path, cfg), out) == 2
    res = report(out)["result"]["subsolution"]
    assert not res["passed"] and res["worst"]["margin"] < 0
    assert "worst" in capsys.readouterr().err


def test_certify_csv_field(tmp_path):
    from hessiasol.grid import Grid, ball, write_csv

    g = Grid(ball(1), 0.125)
    write_csv(g.sample(lambda z: np.sum(np.abs(z) ** 2, axis=-1)), tmp_path / "u.csv")
    cfg = {"domain": {"n": 1}, "operator": {"op": "monge_ampere"}, "h": 0.125, "field": {"csv": str(tmp_path / "u.csv")},
           "tol": 1e-9}
    assert run("certify", write(tmp_path, cfg), tmp_path / "o") == 0


def test_compare_and_convolve(tmp_path):
    base = {"domain": {"n": 1}, "h": 0.125}
    cmp_cfg = dict(base, sub={"expr": "r2 - 0.1"}, super={"expr": "r2"})
    assert run("compare", write(tmp_path, cmp_cfg, "c.json"), tmp_path / "c") == 0
    bad = dict(base, sub={"expr": "r2 + (r2 < 0.25)"}, super={"expr": "r2"})
    assert run("compare", write(tmp_path, bad, "b.json"), tmp_path / "b") == 2
    conv = dict(base, field={"expr": "sin(3 * x1) * y1"}, eps=0.1)
    assert run("convolve", write(tmp_path, conv, "v.json"), tmp_path / "v") == 0
    assert (tmp_path / "v" / "sup_convolution.csv").is_file()


def test_abp_and_barriers(tmp_path):
    abp = {"domain": {"n": 1}, "h": 1 / 32, "field": {"expr": "1 - r2"}, "k": 1.0}
    assert run("abp", write(tmp_path, abp, "a.json"), tmp_path / "a") == 0
    const = dict(abp, field={"expr": "1.0"})
    assert run("abp", write(tmp_path, const, "c.json"), tmp_path / "c") == 1
    bar = {"domain": {"n": 1}, "h": 1 / 16, "operator": {"op": "monge_ampere"}, "phi": "r2"}
    assert run("barriers", write(tmp_path, bar, "b.json"), tmp_path / "b") == 0
    hb = dict(bar, mode="holder", xi=[[1.0, 0.0]], alpha=0.5, phi="abs(z1 - 1)")
    assert run("barriers", write(tmp_path, hb, "h.json"), tmp_path / "h") == 0


def test_crosscheck_and_holder(tmp_path):
    cc = {"domain": {"n": 1}, "h": 0.125, "operator": {"op": "inverse_sigma", "k": 1, "psi": 1.0}, "phi": "r2"}
    assert run("crosscheck", write(tmp_path, cc, "x.json"), tmp_path / "x") == 0
    ho = {"domain": {"n": 1}, "h": 1 / 16, "field": {"expr": "r2"}, "alpha": 0.5, "pairs": 5000}
    assert run("holder", write(tmp_path, ho, "h.json"), tmp_path / "h") == 0
    jump = dict(ho, field={"expr": "x1 > 0"})
    assert run("holder", write(tmp_path, jump, "j.json"), tmp_path / "j") == 2


@pytest.mark.parametrize(
    "text, needle",
    [
        ('{"h": 0.1,', "line 1"),
        ('{"h": -1, "domain": {"n": 1}}', "field h"),
        ('{"bogus": 1}', "bogus"),
        ('{"domain": {"n": 1}, "h": 0.125, "operator": {"op": "hessian"}, "phi": "r2"}', "operator.k"),
        ('{"domain": {"n": 1}, "h": 0.125, "operator": {"op": "monge_ampere"}, "phi": "os.system(1)"}', "unsupported"),
    ],
)
def test_config_errors_exit_1(tmp_path, capsys, text, needle):
    p = tmp_path / "bad.json"
    p.write_text(text)
    assert run("solve", p, tmp_path / "o") == 1
    assert needle in capsys.readouterr().err


def test_nonconvergence_exit_3(tmp_path):
    cfg = dict(SOLVE_MA1, max_iters=5)
    out = tmp_path / "nc"
    assert run("solve", write(tmp_path, cfg), out) == 3
    assert report(out)["result"]["error"] == "ConvergenceError"


def test_console_script_help():
    res = subprocess.run([sys.executable, "-m", "hessiasol.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "matrix-lemma" in res.stdout
