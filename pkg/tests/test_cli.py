import json
import time

import numpy as np
import pytest

from gpgof import FamilySpec, FittedParams, sample
from gpgof.cli import main, read_data


@pytest.fixture
def data_files(tmp_path):
    raw = tmp_path / "raw.txt"
    raw.write_text("0\n0\n1\n1\n3\n5 2\n7\n")
    freq = tmp_path / "freq.csv"
    freq.write_text("0,2\n1,2\n2,1\n3,1\n5,1\n7,1\n")
    return raw, freq


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


class TestReadData:
    def test_raw_and_freq_agree(self, data_files):
        raw, freq = data_files
        a, b = read_data(raw, "raw"), read_data(freq, "freq")
        assert np.array_equal(a.freq, b.freq)

    def test_small_freq_example(self, tmp_path):
        f = tmp_path / "f.csv"
        f.write_text("0,2\n1,2")
        r = tmp_path / "r.txt"
        r.write_text("0 0 1 1")
        assert np.array_equal(read_data(f, "freq").freq, read_data(r, "raw").freq)


class TestTestCommand:
    def test_text_report(self, capsys, data_files):
        code, out, _ = run(capsys, "test", "--family", "katz", "--data", data_files[0], "--bootstrap", 99)
        assert code == 0
        assert "lambda_hat" in out and "theta_hat" in out
        for name in ("s1", "s4", "s7", "ad", "cvm"):
            assert f"\n{name} " in out

    @pytest.mark.parametrize("fmt", ["text", "json", "csv"])
    def test_freq_equals_raw_byte_for_byte(self, capsys, data_files, fmt):
        raw, freq = data_files
        common = ["test", "--family", "pp", "--bootstrap", 49, "--seed", 4, "--out", fmt]
        a = run(capsys, *common, "--data", raw)
        b = run(capsys, *common, "--data", freq, "--format", "freq")
        assert a[0] == b[0] == 0
        assert a[1] == b[1]

    def test_json_output(self, capsys, data_files):
        code, out, _ = run(capsys, "test", "--family", "katz", "--data", data_files[0], "--stat", "s4",
                           "--bootstrap", 99, "--out", "json")
        doc = json.loads(out)
        assert code == 0 and list(doc["results"]) == ["s4"]
        r = doc["results"]["s4"]
        assert r["b"] == 99 and 0 < r["p_value"] <= 1
        assert r["reject"] == (r["p_value"] <= 0.05)

    def test_seeded_runs_repeat(self, capsys, data_files):
        args = ["test", "--family", "katz", "--data", data_files[0], "--bootstrap", 99, "--seed", 11, "--out", "json"]
        assert run(capsys, *args)[1] == run(capsys, *args)[1]

    def test_null_data_rarely_tiny_p_values(self, capsys, tmp_path):
        path = tmp_path / "x.txt"
        tiny = 0
        for seed in range(100):
            xs = sample(FamilySpec.katz(), FittedParams(2, 0.5), 100, seed).counts
            path.write_text("\n".join(map(str, xs)))
            _, out, _ = run(capsys, "test", "--family", "katz", "--data", path, "--bootstrap", 999,
                            "--seed", seed, "--out", "json")
            tiny += any(r["p_value"] <= 0.001 for r in json.loads(out)["results"].values())
        assert tiny <= 1

    def test_disagreement_hint(self, capsys, tmp_path):
        # a spike far out is caught by S5's wide weights but not by S4
        path = tmp_path / "x.txt"
        xs = np.concatenate([sample(FamilySpec.katz(), FittedParams(2, 0.5), 200, 1).counts, [9] * 25])
        path.write_text(" ".join(map(str, xs)))
        _, out, _ = run(capsys, "test", "--family", "katz", "--data", path, "--bootstrap", 199)
        decisions = {ln.split()[0]: ln.split()[-1] for ln in out.splitlines() if ln[:2] in ("s4", "s5")}
        assert decisions == {"s4": "accept", "s5": "reject"}
        assert "S4 and S5 disagree" in out

    def test_no_hint_when_agreeing(self, capsys, data_files):
        _, out, _ = run(capsys, "test", "--family", "katz", "--data", data_files[0], "--bootstrap", 99)
        assert "disagree" not in out

    def test_empty_file(self, capsys, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("")
        code, _, err = run(capsys, "test", "--family", "katz", "--data", path)
        assert code == 2 and "empty sample" in err

    @pytest.mark.parametrize(
        "content,fmt,needle",
        [
            ("1\n-2\n3\n", "raw", "negative"),
            ("1\n2.5\n", "raw", "non-integer"),
            ("4\n4\n4\n", "raw", "variance"),
            ("0,1\n1\n", "freq", "value,count"),
            ("0,0\n1,3\n", "freq", "count"),
        ],
    )
    def test_bad_data(self, capsys, tmp_path, content, fmt, needle):
        path = tmp_path / "bad"
        path.write_text(content)
        code, _, err = run(capsys, "test", "--family", "katz", "--data", path, "--format", fmt)
        assert code == 2 and needle in err
        assert len(err.strip().splitlines()) == 1

    def test_missing_file(self, capsys, tmp_path):
        code, _, err = run(capsys, "test", "--family", "katz", "--data", tmp_path / "nope")
        assert code == 2 and "cannot read" in err

    def test_bad_family(self, capsys, data_files):
        code, _, _ = run(capsys, "test", "--family", "nb", "--data", data_files[0])
        assert code == 2

    def test_bad_alpha(self, capsys, data_files):
        code, _, _ = run(capsys, "test", "--family", "katz", "--data", data_files[0], "--alpha", 2)
        assert code == 2


CONFIG = """[experiment]
null = katz
alternatives = katz:2,0.5
n = 60
statistics = s1, s4, cvm
replicates = {N}
bootstrap = 19
seed = 2
"""


class TestSimulateCommand:
    def test_writes_and_is_idempotent(self, capsys, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text(CONFIG.format(N=10))
        out_dir = tmp_path / "out"
        assert run(capsys, "simulate", "--config", cfg, "--out-dir", out_dir)[0] == 0
        first = {p.name: p.read_bytes() for p in out_dir.iterdir()}
        assert set(first) == {"results.csv", "results.json"}
        assert run(capsys, "simulate", "--config", cfg, "--out-dir", out_dir, "--threads", 2)[0] == 0
        assert first == {p.name: p.read_bytes() for p in out_dir.iterdir()}

    def test_threads_from_environment(self, capsys, tmp_path, monkeypatch):
        cfg = tmp_path / "c.ini"
        cfg.write_text(CONFIG.format(N=6))
        run(capsys, "simulate", "--config", cfg, "--out-dir", tmp_path / "a")
        monkeypatch.setenv("GPGOF_THREADS", "2")
        run(capsys, "simulate", "--config", cfg, "--out-dir", tmp_path / "b")
        assert (tmp_path / "a/results.json").read_bytes() == (tmp_path / "b/results.json").read_bytes()

    def test_minimal_config_is_quick(self, capsys, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text(CONFIG.format(N=10).replace("statistics = s1, s4, cvm\n", ""))
        start = time.perf_counter()
        assert run(capsys, "simulate", "--config", cfg, "--out-dir", tmp_path / "o")[0] == 0
        assert time.perf_counter() - start < 5

    def test_zero_replicates(self, capsys, tmp_path):
        cfg = tmp_path / "c.ini"
        cfg.write_text(CONFIG.format(N=0))
        code, _, err = run(capsys, "simulate", "--config", cfg, "--out-dir", tmp_path / "o")
        assert code == 2 and "replicates" in err

    def test_missing_config(self, capsys, tmp_path):
        code, _, _ = run(capsys, "simulate", "--config", tmp_path / "none.ini", "--out-dir", tmp_path)
        assert code == 2


class TestDiagnoseCommand:
    def test_pp_gets_s4(self, capsys):
        code, out, _ = run(capsys, "diagnose", "--family", "katz", "--alt", "pp:1,2", "--reps", 300)
        assert code == 0 and "recommendation: S4" in out

    def test_beta_binomial_gets_s5(self, capsys):
        code, out, _ = run(capsys, "diagnose", "--family", "katz", "--alt", "bb:6,2", "--reps", 300, "--out", "json")
        doc = json.loads(out)
        assert code == 0 and doc["recommendation"] == "s5" and len(doc["avg_abs_d"]) == 9

    def test_zero_reps(self, capsys):
        code, _, _ = run(capsys, "diagnose", "--family", "katz", "--alt", "du:2", "--reps", 0)
        assert code == 2

    def test_unknown_descriptor_prints_grammar(self, capsys):
        code, _, err = run(capsys, "diagnose", "--family", "katz", "--alt", "zipf:2")
        assert code == 2 and "name:param1,param2" in err

    def test_seeded_runs_repeat(self, capsys):
        args = ["diagnose", "--family", "pp", "--alt", "nb:2,0.5", "--n", 200, "--reps", 50, "--seed", 3]
        assert run(capsys, *args)[1] == run(capsys, *args)[1]
