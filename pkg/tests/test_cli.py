import json
from importlib import resources

import jsonschema
import pytest

from weildescent.cli import ParseError, main, parse_expr, parse_function
from weildescent.cyclo import tower
from weildescent.schwartz import atom
from weildescent.suites import RunConfig, UsageError, plan, run_suite


def _schema():
    return json.loads(resources.files("weildescent").joinpath("report-schema.json").read_text())


def _strip_timing(report):
    for r in report["checks"]:
        r.pop("timing_ms")
    return json.dumps(report, sort_keys=True)


@pytest.mark.parametrize(
    "cfg",
    [RunConfig(p=2), RunConfig(p=9), RunConfig(cells=[[2, 1]]), RunConfig(n=0), RunConfig(suites=["nope"]), RunConfig(probes="all")],
)
def test_invalid_configs(cfg):
    with pytest.raises(UsageError):
        cfg.validate()


def test_report_is_valid_and_deterministic():
    cfg = RunConfig(p=3, suites=["measures", "cocycle", "descent"], cells=[[0, 1], [-1, 1]])
    a, b = run_suite(cfg), run_suite(cfg)
    jsonschema.validate(a, _schema())
    assert _strip_timing(a) == _strip_timing(b)
    names = [(r["name"], json.dumps(r["params"], sort_keys=True)) for r in a["checks"]]
    assert names == sorted(names)


def test_jobs_do_not_change_the_report():
    cfg = RunConfig(p=3, suites=["stone-von-neumann"], jobs=1)
    a = run_suite(cfg)
    cfg.jobs = 2
    assert _strip_timing(run_suite(cfg)) == _strip_timing(a)


def test_plan_dedupes_shared_tasks():
    tasks = plan(RunConfig(suites=["measures", "twists"]))
    keys = [(fn, json.dumps(kw, sort_keys=True)) for _, fn, kw in tasks]
    assert len(keys) == len(set(keys))


def test_failed_checks_carry_witnesses():
    from weildescent.suites import execute

    recs = execute(("measures", "lattice_volume", {"p": 3, "level": 0, "N": 0}))
    assert not recs[0]["pass"] and "exception" in recs[0]["witness"]


def test_compute_examples(capsys):
    assert main(["compute", "W(tau1)", "atom(0,0)", "--p", "3", "--format", "json"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out == atom(3, 0, 0, 2).to_json()

    assert main(["compute", "W(g(3))", "atom(0,0)", "--p", "3"]) == 0
    text = capsys.readouterr().out
    assert "j=1 k=1" in text and "sqrt(3)" in text

    assert main(["compute", "S(y(1/3),0)", "atom(0,0)", "--p", "3"]) == 0
    text = capsys.readouterr().out
    assert "x = 1: zeta_3^1" in text and "x = 2: zeta_3^2" in text


def test_parsers():
    f = parse_function("2*atom(0,1) - atom(1/3,0)", 3, 1, 2)
    tw = tower(3, 2)
    assert f == atom(3, 0, 1, 2).scale(tw.scalar(2)) + atom(3, "1/3", 0, 2).scale(tw.scalar(-1))
    with pytest.raises(ParseError) as exc:
        parse_expr("W(tau1)*Q(2)", 3, 1, 2)
    assert exc.value.pos == 8
    with pytest.raises(ParseError):
        parse_expr("W(tau1", 3, 1, 2)
    with pytest.raises(ParseError):
        parse_function("atom(0)", 3, 1, 2)


def test_usage_errors_exit_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--p", "2"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["verify", "--cell", "1,0"])
    assert exc.value.code == 2


def test_verify_exit_status_and_output_file(tmp_path):
    out = tmp_path / "r.json"
    assert main(["verify", "--suite", "measures", "--p", "3", "--format", "json", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["summary"]["failed"] == 0
    assert any(r["name"] == "character_twist_measure" for r in report["checks"])


def test_other_verbs(capsys):
    assert main(["norm-solve", "--p", "13"]) == 0
    assert "norm(u) = -1" in capsys.readouterr().out
    assert main(["decompose", "tau1*unip(1)", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out)["i"] == 1
    assert main(["describe", "transversal", "--p", "5", "--format", "json"]) == 0
    exps = json.loads(capsys.readouterr().out)["exponents"]
    assert main(["describe", "delta", "--sigma", str(exps[1]), "--p", "5", "--format", "json"]) == 0
    assert set(json.loads(capsys.readouterr().out)) == {"i", "s", "A_coeff"}
    assert main(["describe", "alpha", "--p", "3", "--format", "json"]) == 0
    assert "theta" in json.loads(capsys.readouterr().out)
