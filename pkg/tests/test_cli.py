import json
import math

import pytest

from epdkit.cli import config_hash, main, merge_config, parse_value, ArgumentError
from epdkit.grid import read_field


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, (json.loads(out) if out.strip() else None), (json.loads(err) if err.strip() else None)


def test_parse_value():
    assert parse_value("true") is True and parse_value("none") is None
    assert parse_value("3") == 3 and parse_value("[1, 2]") == [1, 2]
    assert parse_value("1,2.5") == [1, 2.5]
    assert parse_value("sqrt(2)") == pytest.approx(math.sqrt(2))
    assert parse_value("2*pi") == pytest.approx(2 * math.pi)
    assert parse_value("jzero(0.5, 2)") == pytest.approx(2 * math.pi)
    assert parse_value("gaussian") == "gaussian"
    assert parse_value("__import__('os')") == "__import__('os')"


def test_merge_and_hash():
    assert merge_config({"a": 1}, {"a": 1, "b": 2}) == {"a": 1, "b": 2}
    with pytest.raises(ArgumentError):
        merge_config({"a": 1}, {"a": 2})
    assert config_hash("x", {"a": 1, "b": 2}) == config_hash("x", {"b": 2, "a": 1})
    assert config_hash("x", {"a": 1}) != config_hash("y", {"a": 1})


def test_classify_example(capsys):
    code, out, _ = run(capsys, "classify", "n=4", "k=1", "alpha=0", "p=3", "rho=pi")
    assert code == 0
    assert (out["verdict"], out["clause"]) == ("non-injective", "Thm 2.4(ii)")


def test_zeros(capsys):
    code, out, _ = run(capsys, "zeros", "nu=0.5", "m=3")
    assert code == 0
    assert out["zeros"] == pytest.approx([math.pi, 2 * math.pi, 3 * math.pi], rel=1e-12)


def test_verify_suite(capsys):
    code, out, _ = run(capsys, "verify", "suite=classifier")
    assert code == 0 and out["passed"]


def test_argument_errors(capsys):
    code, _, err = run(capsys, "classify", "n=4", "p=3", "bogus=1")
    assert code == 2 and "bogus" in err["message"]
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "zeros", "nu")[0] == 2
    assert run(capsys, "verify", "suite=nope")[0] == 2


def test_config_file_conflict(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"nu": 1.5}))
    code, _, err = run(capsys, "zeros", "nu=0.5", "--config", str(cfg))
    assert code == 2 and "conflicts" in err["message"]
    code, out, _ = run(capsys, "zeros", "m=2", "--config", str(cfg))
    assert code == 0 and out["nu"] == 1.5


def test_inadmissible_pair_exit_code(capsys, tmp_path):
    argv = ["reconstruct", "mode=two", "n=1", "N=256", "L=50", "kind=psi", "alpha=1", "rho=pi", "rho2=2*pi"]
    code, _, err = run(capsys, *argv, "--out", str(tmp_path / "a"))
    assert code == 3 and err["error"] == "InadmissibleRadiiError"
    code, out, _ = run(capsys, *argv, "--force", "--out", str(tmp_path / "b"))
    assert code == 0
    rep = json.loads((tmp_path / "b" / "report.json").read_text())
    assert rep["diagnostics"]["forced"] and rep["errors"]["l2_rel"] > 0.1


def test_phantom_is_deterministic(capsys, tmp_path):
    args = ["phantom", "kind=gaussian", "n=2", "N=32", "L=4"]
    code_a, out_a, _ = run(capsys, *args, "--out", str(tmp_path / "a"))
    code_b, out_b, _ = run(capsys, *args, "--out", str(tmp_path / "b"))
    assert code_a == code_b == 0 and out_a["config_hash"] == out_b["config_hash"]
    for name in ("phantom.epdt", "phantom.pgm"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    man = json.loads((tmp_path / "a" / "run.json").read_text())
    assert man["config_hash"] == out_a["config_hash"] and "phantom.epdt" in man["artifacts"]
    pgm = (tmp_path / "a" / "phantom.pgm").read_bytes()
    assert pgm.startswith(b"P5") and out_a["config_hash"].encode() in pgm
    assert read_field(tmp_path / "a" / "phantom.epdt").grid.shape == (32, 32)


def test_forward_and_reconstruct_round_trip(capsys, tmp_path):
    d = tmp_path / "run"
    code, out, _ = run(capsys, "reconstruct", "mode=two", "n=2", "N=64", "L=8", "rho=1", "rho2=sqrt(2)", "--out", str(d))
    assert code == 0
    rep = json.loads((d / "report.json").read_text())
    assert rep["errors"]["l2_rel"] < 1e-3 and rep["verdict"] in ("injective", "non-injective", "unresolved", "out-of-domain")
    assert len(rep["epsilon_sweep"]) == 3 and rep["config_hash"] == out["config_hash"]
