import json
import subprocess
import sys

import pytest

from siegellab.cli import main, read_config_file
from siegellab.errors import ValidationError


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_integrability_json(capsys):
    code, out, _ = run_cli(capsys, "integrability", "--type", "A", "--rank", "1", "--alpha", "1", "--json")
    assert code == 0
    rec = json.loads(out)
    assert rec["payload"]["linf"] is True
    assert {"config", "version", "wall_time", "payload"} <= set(rec)


def test_integrability_text_with_witness(capsys):
    code, out, _ = run_cli(capsys, "integrability", "--type", "a", "--rank", "3", "--alpha", "2", "--full")
    assert code == 0
    assert "L2-full" in out and "s2" in out


def test_meanvalue(capsys):
    code, out, _ = run_cli(capsys, "meanvalue", "--f", "annulus:1,2", "--samples", "1e5", "--seed", "7", "--json")
    payload = json.loads(out)["payload"]
    assert code == 0 and abs(payload["z_score"]) <= 3
    assert set(payload) == {"estimate", "stderr", "predicted", "z_score"}


def test_exit_codes(capsys):
    assert run_cli(capsys, "meanvalue", "--f", "annulus:1,2")[0] == 2  # no seed
    assert run_cli(capsys, "integrability", "--type", "A", "--rank", "0", "--alpha", "1")[0] == 2
    assert run_cli(capsys, "cusp", "--seed", "1", "--samples", "abc")[0] == 2
    code, _, err = run_cli(capsys, "integrability", "--type", "E", "--rank", "8", "--alpha", "1", "--full")
    assert code == 3 and "refused" in err
    assert run_cli(capsys, "nonsense")[0] == 2


def test_csv_replay_is_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["cusp", "--delta", "0.2,0.5", "--samples", "20000", "--seed", "42", "--csv"]
    assert main(args + [str(a)]) == 0
    assert main(args + [str(b)]) == 0
    assert a.read_text().splitlines()[1:] == b.read_text().splitlines()[1:]
    first = a.read_text().splitlines()
    assert first[0].startswith("# config: ")
    assert first[1] == "delta,empirical,predicted,rel_err"
    code, out, _ = run_cli(capsys, *args, "-")
    code2, out2, _ = run_cli(capsys, *args, "-")
    assert out == out2


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# cusp run\nseed = 42\nsamples = 5000  # small\ndelta = 0.5\n")
    code, out, _ = run_cli(capsys, "cusp", "--config", str(cfg), "--delta", "0.3")
    assert code == 0
    lines = out.splitlines()
    echo = json.loads(lines[0][len("# config: "):])
    assert echo["seed"] == 42 and echo["params"]["samples"] == 5000
    assert lines[2].startswith("0.3,")
    cfg.write_text("seed = 1\nfoo = 2\n")
    code, _, err = run_cli(capsys, "cusp", "--config", str(cfg))
    assert code == 2 and "foo" in err
    cfg.write_text("just words\n")
    with pytest.raises(ValidationError):
        read_config_file(str(cfg))


def test_enumerate_csv(capsys):
    code, out, _ = run_cli(capsys, "enumerate", "--model", "2,4", "--max-height", "1.4")
    lines = out.splitlines()
    assert code == 0 and lines[1] == "hnf_rows;plucker;height"
    assert len(lines) == 2 + 6
    hnf_rows, plucker, height = lines[2].split(";")
    assert json.loads(plucker) in ([0, 0, 0, 0, 0, 1], [1, 0, 0, 0, 0, 0])
    assert float(height) == 1.0
    code, out, _ = run_cli(capsys, "enumerate", "--model", "1,2", "--max-height", "2.5", "--format", "json")
    assert len(json.loads(out)["payload"]) == 8


def test_count_and_fit(tmp_path, capsys):
    path = tmp_path / "counts.csv"
    code = main(["count", "--model", "1,2", "--t-grid", "e4:e8:5", "--ensemble", "5", "--seed", "3",
                 "--csv", str(path)])
    assert code == 0
    text = path.read_text().splitlines()
    assert text[1] == "member,lnT,N" and len(text) == 2 + 25
    capsys.readouterr()
    code, out, _ = run_cli(capsys, "count", "fit", str(path))
    fit = json.loads(out)
    assert code == 0 and fit["slope"] > 0 and len(fit["points"]) == 5
    assert run_cli(capsys, "count", "fit", str(tmp_path / "missing.csv"))[0] == 2


def test_equidist_csv(capsys):
    code, out, err = run_cli(capsys, "equidist", "--phi", "cusp:0.5", "--y-grid", "4:256:geom5", "--bases", "2",
                             "--seed", "11", "--csv")
    lines = out.splitlines()
    assert code == 0 and lines[1].startswith("y,max_error,median_error,base_0")
    assert len(lines) == 2 + 5
    assert "fitted exponent" in err


def test_regions_selftest(capsys):
    code, out, _ = run_cli(capsys, "regions", "--selftest", "--samples", "500")
    assert code == 0 and "sandwich" in out
    assert run_cli(capsys, "regions")[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "siegellab", "integrability", "--type", "G", "--rank", "2",
                           "--alpha", "1", "--json"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["payload"]["linf"] is False


def test_quick_selftest(capsys):
    code, out, _ = run_cli(capsys, "selftest", "--quick")
    assert code == 0
    assert out.count("[PASS]") == 10
