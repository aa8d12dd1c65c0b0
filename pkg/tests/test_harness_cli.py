import csv
import io
import json

import pytest

from rikit.cli import main
from rikit.harness import (SCENARIOS, RunReport, Scenario, ScenarioError, emit_plot_data,
                           emit_report, run_scenario, run_suite)

SPLICE_W = json.dumps({"pieces": [{"from": 0, "to": 1, "terms": [{"c": 1, "alpha": 0, "logk": 0}]},
                                  {"from": 1, "to": "inf", "terms": [{"c": 1, "alpha": 1, "logk": 0}]}]})
POW = lambda a: json.dumps({"pieces": [{"from": 0, "to": "inf",
                                        "terms": [{"c": 1, "alpha": a, "logk": 0}]}]})
STEP = json.dumps({"breaks": [0, 1, 2], "values": [3, 1]})


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestHarness:
    def test_unknown_id(self):
        with pytest.raises(ScenarioError):
            run_scenario(Scenario("nope"))

    def test_scenario_json_error_location(self):
        with pytest.raises(ScenarioError, match="line 1 column"):
            Scenario.from_json('{"id": ')

    def test_scenario_json(self):
        s = Scenario.from_json('{"id": "prop3", "config": {"samples": 5}}')
        assert (s.id, s.seed, s.config) == ("prop3", 42, {"samples": 5})

    @pytest.mark.parametrize("sid,seed", [("prop7_iterates", 42), ("k_sandwich", 1),
                                          ("prop3", 7), ("lemma2", 42)])
    def test_scenarios_pass(self, sid, seed):
        r = run_scenario(Scenario(sid, seed))
        assert r.passed, [e.to_json() for e in r.failures]

    def test_json_roundtrip(self):
        r = run_scenario(Scenario("prop5", 3))
        blob = emit_report(r)
        assert emit_report(RunReport.from_json(json.loads(blob))) == blob

    def test_no_timing_by_default(self):
        assert "timing_s" not in json.loads(emit_report(run_scenario(Scenario("prop11"))))
        assert "timing_s" in run_scenario(Scenario("prop11"), timing=True).to_json()

    def test_csv(self):
        rows = list(csv.reader(io.StringIO(emit_report(run_suite("prop3,lemma2"), "csv").decode())))
        assert rows[0] == ["scenario", "seed", "kind", "name", "passed", "value", "tolerance"]
        assert {r[0] for r in rows[1:]} == {"prop3", "lemma2"}

    def test_plot_data_monotone(self):
        rows = list(csv.DictReader(io.StringIO(emit_plot_data({"b": ([3, 1, 2], [1, 1, 1]),
                                                                "a": ([5, 4], [0, 0])}).decode())))
        for name in "ab":
            ts = [float(r["t"]) for r in rows if r["curve"] == name]
            assert ts == sorted(ts)

    def test_deterministic(self):
        a = emit_report(run_suite("prop6,k_sandwich", seed=5))
        b = emit_report(run_suite("prop6,k_sandwich", seed=5))
        assert a == b

    def test_seed_changes_sample(self):
        a = json.loads(emit_report(run_scenario(Scenario("k_sandwich", 1))))
        b = json.loads(emit_report(run_scenario(Scenario("k_sandwich", 2))))
        assert a["constants"] != b["constants"]

    def test_registry_covers_ids(self):
        want = {"thm1", "prop3", "prop4", "prop5", "prop6", "prop7", "prop8", "prop9", "prop10",
                "prop11", "lemma2", "lemma3", "prop7_iterates", "k_sandwich"}
        assert want <= set(SCENARIOS)


class TestCli:
    def test_amq_holds(self, capsys):
        code, out, _ = run(["check-weight", "--weight", POW(0.5), "--condition", "amq", "--q", "2",
                            "--expect", "holds"], capsys)
        d = json.loads(out)
        assert code == 0 and d["holds"] and d["constant"] == pytest.approx(3.0)

    def test_expect_mismatch_exit_1(self, capsys):
        code, *_ = run(["check-weight", "--weight", POW(1.0), "--condition", "amq", "--q", "1",
                        "--expect", "holds"], capsys)
        assert code == 1

    def test_fails_without_expect_exit_0(self, capsys):
        code, out, _ = run(["check-weight", "--weight", POW(1.0), "--condition", "amq", "--q", "1"],
                           capsys)
        assert code == 0 and json.loads(out)["holds"] is False

    def test_plot_data(self, capsys, tmp_path):
        p = tmp_path / "curve.csv"
        code, *_ = run(["check-weight", "--weight", SPLICE_W, "--condition", "amq", "--q", "3",
                        "--plot-data", str(p)], capsys)
        rows = list(csv.DictReader(p.open()))
        ts = [float(r["t"]) for r in rows]
        assert code == 0 and rows and ts == sorted(ts)

    def test_norm(self, capsys):
        code, out, _ = run(["norm", "--space", '{"type": "lp", "p": 1}', "--function", STEP], capsys)
        assert code == 0 and json.loads(out)["norm"] == pytest.approx(4.0)

    def test_op_and_params_forms(self, capsys):
        code, out, _ = run(["op", "--name", "qpn", "--params", "p=1,n=1", "--function",
                            '{"breaks": [0, 1], "values": [1]}', "--eval-at", "0.5,2"], capsys)
        assert code == 0 and json.loads(out)["values"] == pytest.approx([1.0, 0.5])

    def test_k(self, capsys):
        code, out, _ = run(["k", "--space", '{"type": "lp", "p": 1}', "--t", "1.5",
                            "--function", STEP], capsys)
        assert code == 0 and json.loads(out)["value"] == pytest.approx(3.0 + 0.5)

    def test_csv_format(self, capsys):
        code, out, _ = run(["norm", "--space", '{"type": "lp", "p": 1}', "--function", STEP,
                            "--format", "csv"], capsys)
        assert code == 0 and out.splitlines()[0] == "key,value"

    def test_membership(self, capsys):
        couple = '{"A0": {"type": "lp", "p": 2}, "A1": {"type": "lorentz_pq", "p": 2, "q": "inf"}}'
        pair = json.dumps({"X0": {"type": "lp", "p": 2}, "X1": {"type": "lorentz_pq", "p": 2, "q": "inf"}})
        code, out, _ = run(["membership", "--couple", couple, "--candidate", pair,
                            "--samples", "20", "--expect", "holds"], capsys)
        assert code == 0 and json.loads(out)["verdict"] == "bounded_on_sample"
        # Q chi_[0,a] = min(1, (a/t)^1/2) has a log-divergent L^2 norm
        code, out, _ = run(["membership", "--couple", couple, "--candidate", '{"type": "lp", "p": 2}',
                            "--samples", "20", "--expect", "fails"], capsys)
        assert code == 0 and json.loads(out)["verdict"] == "counterexample"

    def test_orlicz_indices(self, capsys):
        code, out, _ = run(["orlicz", "indices", "--phi", POW(2.0), "--T", "2"], capsys)
        assert code == 0 and json.loads(out)["p_T"] == 2.0

    def test_orlicz_lemma3(self, capsys):
        code, out, _ = run(["orlicz", "lemma3", "--phi", POW(2.0), "--weight", POW(-0.5),
                            "--B", "1", "--expect", "holds"], capsys)
        assert code == 0 and json.loads(out)["passes"]

    def test_bad_json_exit_2(self, capsys):
        code, _, err = run(["norm", "--space", '{"type": ', "--function", STEP], capsys)
        assert code == 2 and "line 1 column" in err

    def test_missing_file_exit_2(self, capsys):
        code, _, err = run(["norm", "--space", "/nonexistent.json", "--function", STEP], capsys)
        assert code == 2 and "no such file" in err

    def test_bad_argument_exit_2(self, capsys):
        assert run(["check-weight", "--weight", POW(0), "--condition", "bogus"], capsys)[0] == 2

    def test_invalid_object_exit_2(self, capsys):
        code, *_ = run(["check-weight", "--weight", POW(-1.0), "--condition", "amq", "--q", "2"],
                       capsys)
        assert code == 2

    def test_unknown_suite_exit_2(self, capsys):
        assert run(["verify", "--suite", "nope"], capsys)[0] == 2

    def test_verify_pass_and_file(self, capsys, tmp_path):
        p = tmp_path / "r.json"
        code, _, err = run(["verify", "--suite", "prop3,prop11", "--out", str(p)], capsys)
        d = json.loads(p.read_text())
        assert code == 0 and [r["scenario"] for r in d] == ["prop11", "prop3"]
        assert "PASS prop3" in err

    def test_verify_failure_exit_1(self, capsys):
        # a negative tolerance cannot be met
        code, _, err = run(["verify", "--suite", "amq", "--tol", "-1"], capsys)
        assert code == 1 and "FAIL amq" in err

    def test_jobs_identical(self, capsys):
        a = run(["verify", "--suite", "prop3,prop5,lemma2"], capsys)[1]
        b = run(["verify", "--suite", "prop3,prop5,lemma2", "--jobs", "2"], capsys)[1]
        assert a == b
