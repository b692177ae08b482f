import csv
import json
from fractions import Fraction

import pytest

from dimlab.cli import main
from dimlab.schedule import synthesize

STEADY = json.dumps({"a": [4 * i for i in range(13)], "b": [4 * i + 2 for i in range(13)]})
SHIFTABLE = json.dumps({"a": [0, 4, 9, 15], "b": [2, 7, 13, 20]})


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv)
    return code, json.loads(out)


class TestSynth:
    def test_half(self, capsys, tmp_path):
        path = tmp_path / "s.json"
        code, data = run_json(capsys, "synth", "--d", "1/2", "--blocks", "10", "--out", str(path))
        assert code == 0 and data["growth_checks_pass"]
        assert data["target_d"] == "1/2"
        saved = json.loads(path.read_text())
        s = synthesize(Fraction(1, 2), 10).base
        assert saved["a"] == list(s.a) and saved["b"] == list(s.b)

    def test_zero_decreases(self, capsys):
        code, data = run_json(capsys, "synth", "--d", "0", "--blocks", "5")
        assert code == 0
        vals = [Fraction(v) for v in data["quotients_b_over_next_a"]]
        assert vals == sorted(vals, reverse=True)

    def test_bad_d(self, capsys):
        code, _, err = run(capsys, "synth", "--d", "2")
        assert code == 2 and "[0, 1]" in err
        assert run(capsys, "synth", "--d", "one")[0] == 2

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "synth", "--d", "1/3", "--blocks", "4", "--format", "csv")
        rows = list(csv.reader(out.splitlines()))
        assert code == 0 and rows[0][0] == "kind" and len(rows) > 1


class TestDims:
    def test_steady(self, capsys, tmp_path):
        path = tmp_path / "p.csv"
        code, data = run_json(capsys, "dims", "--schedule", STEADY, "--csv", str(path))
        assert code == 0
        assert data["formula"]["d1"]["estimate"] == "1/2"
        assert data["formula"]["d2"]["estimate"] == "1/2"
        assert path.read_text().startswith("n,log2_count")

    def test_tied(self, capsys):
        code, data = run_json(capsys, "dims", "--schedule", STEADY, "--kind", "tied")
        assert code == 0 and data["formula"]["d1_tied"]["estimate"] == "3/4"

    def test_depth_cap(self, capsys):
        code, _, err = run(capsys, "dims", "--schedule", STEADY, "--n-max", "999")
        assert code == 2 and "beyond the schedule prefix" in err

    def test_schedule_file_and_bad_schedule(self, capsys, tmp_path):
        path = tmp_path / "s.json"
        path.write_text(STEADY)
        assert run(capsys, "dims", "--schedule", str(path))[0] == 0
        bad = json.dumps({"a": [0, 2], "b": [3, 5]})
        assert run(capsys, "dims", "--schedule", bad)[0] == 2


class TestCoverAndMeasure:
    def test_cover_lines(self, capsys):
        code, out, _ = run(capsys, "cover", "--schedule", '{"a":[0,4],"b":[2,6]}', "--k", "1")
        assert code == 0 and out == "0.00\n0.01\n0.10\n0.11\n"

    def test_cover_count_and_cap(self, capsys):
        code, data = run_json(capsys, "cover", "--schedule", '{"a":[0,4],"b":[2,6]}',
                              "--kind", "tied", "--count", "4")
        assert code == 0 and data["count"] == 8
        code, _, err = run(capsys, "cover", "--schedule", '{"a":[0,4],"b":[2,40]}',
                           "--k", "2", "--cap", "1024")
        assert code == 2 and "38" in err

    def test_free_at(self, capsys):
        code, data = run_json(capsys, "cover", "--kind", "free_at", "--positions", "1,2,5-6",
                              "--count", "6")
        assert code == 0 and data["log2_count"] == 4

    def test_measure(self, capsys):
        sched = '{"a":[0,4],"b":[2,6]}'
        assert run_json(capsys, "measure", "--schedule", sched, "--l", "0", "--n", "1")[1][
            "measure"] == "1/2"
        assert run_json(capsys, "measure", "--schedule", sched, "--l", "1", "--n", "3")[1][
            "measure"] == "0"
        assert run(capsys, "measure", "--schedule", sched, "--l", "9", "--n", "3")[0] == 2

    def test_holder(self, capsys, tmp_path):
        path = tmp_path / "h.csv"
        code, data = run_json(capsys, "holder", "--schedule", STEADY, "--d", "1/2",
                              "--eps", "1/8", "--n-max", "24", "--csv", str(path))
        assert code == 0 and data["pass"]
        assert len(path.read_text().splitlines()) == 25
        assert run(capsys, "holder", "--schedule", STEADY, "--d", "1/2", "--eps", "1/2")[0] == 2


class TestOrbit:
    def test_sampled_point(self, capsys, tmp_path):
        dump = tmp_path / "o.csv"
        code, data = run_json(capsys, "orbit", "--schedule", SHIFTABLE,
                              "--sample-from-measure", "--seed", "4", "--h-max", "2",
                              "--dump", str(dump))
        assert code == 0
        assert data["separation"]["passed"]
        assert data["diagnostics"]["ef_below_one"]
        assert data["seed"] == 4
        assert len(data["ip_density"]) == 2
        rows = list(csv.reader(dump.read_text().splitlines()))
        assert rows[0] == ["index", "exponents", "value", "distance_log2_bound"]
        assert len(rows) == data["terms"] + 1

    def test_half_makes_no_membership_claim(self, capsys):
        code, data = run_json(capsys, "orbit", "--schedule", SHIFTABLE, "--x", "0.1")
        assert code == 0 and "separation" in data
        code, data = run_json(capsys, "orbit", "--schedule", SHIFTABLE, "--x", "0.00000001")
        assert code == 0 and "separation" not in data and data["notices"]

    def test_ip(self, capsys):
        code, data = run_json(capsys, "orbit", "--schedule", SHIFTABLE, "--x", "0.1011",
                              "--ip")
        assert code == 0 and data["sequence"] == "ip" and data["terms"] == 2 ** 6 - 1

    def test_input_errors(self, capsys):
        assert run(capsys, "orbit", "--schedule", SHIFTABLE)[0] == 2
        assert run(capsys, "orbit", "--schedule", SHIFTABLE, "--x", "0.12")[0] == 2

    def test_seed_env_override(self, capsys, monkeypatch):
        base = ("orbit", "--schedule", SHIFTABLE, "--sample-from-measure")
        _, with_7 = run_json(capsys, *base, "--seed", "7")
        monkeypatch.setenv("DIMLAB_SEED", "7")
        _, env = run_json(capsys, *base, "--seed", "1")
        assert env == with_7


class TestIPAndReport:
    def test_generators(self, capsys):
        code, out, _ = run(capsys, "ip", "--generators", "3,5,9", "--l", "5")
        assert code == 0 and out.splitlines()[1] == "5,12"

    def test_schedule_exponents(self, capsys):
        code, out, _ = run(capsys, "ip", "--schedule", '{"a":[0,4,8],"b":[2,6,10]}',
                           "--l", "6")
        assert code == 0 and out.splitlines()[1] == "6,4 7"
        assert run(capsys, "ip", "--generators", "3,5", "--l", "4")[0] == 2

    def test_report(self, capsys):
        code, data = run_json(capsys, "report", "--schedule", SHIFTABLE, "--samples", "3")
        assert code == 0
        assert all(r["separation_pass"] and r["ef_below_one"] for r in data["samples"])
        assert "holder" in data

    def test_unknown_command(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["nope"])
        assert info.value.code == 2
