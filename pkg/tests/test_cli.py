import json

import numpy as np
import pytest

from icl.cli import main


def _csv(path, header, rows):
    path.write_text(",".join(header) + "\n" + "\n".join(",".join(map(str, r)) for r in rows) + "\n")
    return str(path)


def _run(args, capsys):
    code = main(args)
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip() else None)


@pytest.fixture
def chain_csv(tmp_path):
    return _csv(tmp_path / "chain.csv", ["x", "y"], [(1, 1), (2, 0), (3, 2)])


def test_fit_chain(chain_csv, capsys):
    code, report = _run(["fit", chain_csv], capsys)
    assert code == 0 and report["schema"] == "icl/1" and report["command"] == "fit"
    res = report["result"]
    assert res["thresholds"] == [0, 1, 2]
    assert res["cdf_matrix"] == [[0.5, 1, 1], [0.5, 1, 1], [0, 0, 1]]
    levels = res["quantiles"]["levels"]
    assert 0.05 in levels and 0.95 in levels and 0.5 in levels
    k = levels.index(0.5)
    assert res["quantiles"]["lower"][k] == [0, 0, 2] and res["quantiles"]["upper"][k] == [1, 1, 2]


def test_fit_single_row(tmp_path, capsys):
    code, report = _run(["fit", _csv(tmp_path / "one.csv", ["x", "y"], [(0, 7)])], capsys)
    assert code == 0 and report["result"]["cdf_matrix"] == [[1.0]]


def test_fit_incomparable_rows(tmp_path, capsys):
    path = _csv(tmp_path / "two.csv", ["a", "b", "y"], [(0, 1, 3), (1, 0, 5)])
    code, report = _run(["fit", path], capsys)
    assert report["result"]["cdf_matrix"] == [[1, 1], [0, 1]]


def test_fit_order_sources(tmp_path, capsys):
    path = _csv(tmp_path / "d.csv", ["a", "b", "y"], [(0, 1, 1), (1, 0, 0), (2, 2, 2)])
    _, by_column = _run(["fit", path, "--order", "column:a"], capsys)
    _, by_name = _run(["fit", path, "--order", "column:0"], capsys)
    assert by_column["result"]["cdf_matrix"] == by_name["result"]["cdf_matrix"]
    edges = tmp_path / "edges.txt"
    edges.write_text("0 1\n1 2\n")
    _, by_file = _run(["fit", path, "--order", f"file:{edges}"], capsys)
    assert by_file["result"]["cdf_matrix"] == by_column["result"]["cdf_matrix"]


def test_weights_column(tmp_path, capsys):
    path = _csv(tmp_path / "w.csv", ["x", "w", "y"], [(1, 3, 1), (2, 1, 0)])
    code, report = _run(["fit", path, "--weights", "w"], capsys)
    assert code == 0 and report["result"]["weights"] == [0.75, 0.25]
    assert report["result"]["cdf_matrix"] == [[0.25, 1], [0.25, 1]]


def test_score_chain(chain_csv, tmp_path, capsys):
    fit = tmp_path / "fit.json"
    assert main(["fit", chain_csv, "--out", str(fit)]) == 0
    code, report = _run(["score", chain_csv, str(fit)], capsys)
    assert code == 0
    assert report["result"]["mean_crps"] == pytest.approx(1 / 6, abs=1e-12)
    assert report["result"]["mean_crps_quantile_form"] == pytest.approx(1 / 6, abs=1e-12)


def test_score_perfect_and_constant(tmp_path, capsys):
    data = _csv(tmp_path / "d.csv", ["x", "y"], [(0, 0), (1, 1)])
    perfect = tmp_path / "p.json"
    perfect.write_text(json.dumps({"forecasts": [{"points": [0], "cum": [1]}, {"points": [1], "cum": [1]}]}))
    assert _run(["score", data, str(perfect)], capsys)[1]["result"]["mean_crps"] == 0
    const = tmp_path / "c.json"
    const.write_text(json.dumps({"forecasts": [{"points": [0, 1], "cum": [0.5, 1]}] * 2}))
    # each observation sits at one end of a unit interval with cdf 1/2 inside
    assert _run(["score", data, str(const)], capsys)[1]["result"]["mean_crps"] == 0.25


def test_calibrate_round_trip(chain_csv, tmp_path, capsys):
    fit = tmp_path / "fit.json"
    main(["fit", chain_csv, "--out", str(fit)])
    code, report = _run(["calibrate", chain_csv, str(fit)], capsys)
    assert code == 0
    assert report["result"]["flags"] == {"auto": True, "isotonic": True, "pit_bounds": True,
                                         "quantile": True, "threshold": True}


@pytest.mark.parametrize("name,expected", [
    ("ic_without_ac", {"auto": False, "isotonic": True, "threshold": True, "quantile": True}),
    ("tcqc_without_ic", {"isotonic": False, "threshold": True, "quantile": True}),
])
def test_calibrate_fixtures(name, expected, tmp_path, capsys):
    from icl.oracle import fixture_path
    inst = json.loads(fixture_path(name).read_text())["instance"]
    data = _csv(tmp_path / "d.csv", ["g", "y"], list(zip(inst["groups"], inst["y"])))
    forecast = tmp_path / "f.json"
    forecast.write_text(json.dumps({"forecasts": inst["forecasts"]}))
    flags = _run(["calibrate", data, str(forecast)], capsys)[1]["result"]["flags"]
    assert {k: flags[k] for k in expected} == expected


def test_reports_are_deterministic(chain_csv, capsys):
    _, a = _run(["fit", chain_csv], capsys)
    _, b = _run(["fit", chain_csv], capsys)
    a.pop("timing"), b.pop("timing")
    assert a == b


def test_exit_codes(tmp_path, capsys):
    assert main(["fit", _csv(tmp_path / "a.csv", ["x", "y"], [(1, "abc")])]) == 2
    assert main(["fit", _csv(tmp_path / "b.csv", ["x", "y"], [(1, "")])]) == 3
    assert main(["fit", _csv(tmp_path / "c.csv", ["x", "z"], [(1, 2)])]) == 3
    assert main(["fit", str(tmp_path / "missing.csv")]) == 2
    ragged = tmp_path / "r.csv"
    ragged.write_text("x,y\n1,2,3\n")
    assert main(["fit", str(ragged)]) == 2
    assert main(["verify", "--suite", "nonsense"]) == 2
    assert main(["fit", _csv(tmp_path / "d.csv", ["x", "y"], [(1, 2)]), "--order", "file:/nonexistent"]) == 2
    capsys.readouterr()


@pytest.mark.parametrize("suite", ["oracle", "hierarchy", "universality", "counterexamples"])
def test_verify_suites(suite, capsys):
    code, report = _run(["verify", "--suite", suite, "--n", "5", "--count", "5", "--seed", "42"], capsys)
    assert code == 0 and report["result"]["passed"]
    assert report["result"]["checked"] == (4 if suite == "counterexamples" else 5)
    if suite != "counterexamples":
        assert all("seed" in r for r in report["result"]["instances"])


def test_seed_from_environment(monkeypatch, capsys):
    monkeypatch.setenv("ICL_SEED", "7")
    _, report = _run(["verify", "--suite", "hierarchy", "--count", "2"], capsys)
    assert report["config"]["seed"] == 7
    monkeypatch.setenv("ICL_SEED", "x")
    assert main(["verify", "--suite", "hierarchy", "--count", "2"]) == 2


def test_verify_failure_exit_code(monkeypatch, capsys):
    import icl.cli as cli
    monkeypatch.setattr(cli, "run_suite", lambda *a: [{"seed": 1, "ok": False}])
    code, report = _run(["verify", "--suite", "oracle"], capsys)
    assert code == 4 and report["result"]["failures"] == 1
