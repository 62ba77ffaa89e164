import math

import numpy as np
import pytest

from ddebound.cli import main
from ddebound.examples import example_text


@pytest.fixture
def ex1_file(tmp_path):
    path = tmp_path / "ex1.dde"
    path.write_text(example_text("1"))
    return str(path)


@pytest.fixture
def ex2_file(tmp_path):
    path = tmp_path / "ex2.dde"
    path.write_text(example_text("2"))
    return str(path)


def _block(out):
    d = {}
    for line in out.strip().splitlines():
        key, sep, value = line.partition(" = ")
        if sep:
            d[key] = value
    return d


def test_solve_stdout_csv(ex1_file, capsys):
    assert main(["solve", ex1_file]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "t,x"
    t0, x0 = (float(v) for v in out[1].split(","))
    assert (t0, x0) == (0.0, 1.0)
    t_last = float(out[-1].split(",")[0])
    assert t_last == pytest.approx(40.0)


def test_solve_to_file(ex1_file, tmp_path, capsys):
    out_path = tmp_path / "traj.csv"
    assert main(["solve", ex1_file, "--out", str(out_path)]) == 0
    block = _block(capsys.readouterr().out)
    assert block["command"] == "solve"
    assert float(block["x_end"]) == pytest.approx(0.0, abs=1e-6)
    data = np.loadtxt(out_path, delimiter=",", skiprows=1)
    assert data.shape[1] == 2
    assert int(block["points"]) == data.shape[0]


def test_solve_step_override(ex1_file, capsys):
    assert main(["solve", ex1_file, "--step", "0.02"]) == 0
    out = capsys.readouterr().out.splitlines()
    t1 = float(out[2].split(",")[0]) - float(out[1].split(",")[0])
    assert t1 == pytest.approx(0.02)


def test_parse_failure_exit_3(tmp_path, capsys):
    bad = tmp_path / "bad.dde"
    bad.write_text(
        "[problem]\nt0 = 0\nx0 = 1\nphi = sin(\nf = 0\nt_end = 1\n"
        "[term]\nb = 1\nh = t - 1\ndelta = 1\ntau = 1\n"
    )
    assert main(["solve", str(bad)]) == 3
    err = capsys.readouterr().err
    assert "line 4" in err

    missing = tmp_path / "missing.dde"
    assert main(["solve", str(missing)]) == 3


def test_validation_failure_exit_2(tmp_path, capsys):
    f = tmp_path / "adv.dde"
    f.write_text(
        "[problem]\nt0 = 0\nx0 = 1\nphi = 0\nf = 0\nt_end = 1\n"
        "[term]\nb = 1\nh = t + 1\ndelta = 0\ntau = 1\n"
    )
    assert main(["solve", str(f)]) == 2
    assert "falls below declared delta" in capsys.readouterr().err


def test_certify_decay(ex1_file, tmp_path, capsys):
    cert_path = tmp_path / "ex1.cert"
    assert main(["certify", ex1_file, "--out", str(cert_path)]) == 0
    block = _block(capsys.readouterr().out)
    assert block["certified"] == "true"
    assert block["mode"] == "decay"
    assert float(block["rate"]) == 0.15
    assert float(block["amplification"]) == pytest.approx(3.924, abs=1e-3)
    assert float(block["contraction"]) < 1.0
    assert cert_path.exists()


def test_certify_rate_flag_overrides_file(ex1_file, capsys):
    assert main(["certify", ex1_file, "--lambda", "0.05"]) == 0
    block = _block(capsys.readouterr().out)
    assert float(block["rate"]) == 0.05

    # an infeasible requested rate is a clean failure, not a traceback
    assert main(["certify", ex1_file, "--lambda", "0.5"]) == 1
    block = _block(capsys.readouterr().out)
    assert block["certified"] == "false"


def test_certify_growth(ex2_file, capsys):
    assert main(["certify", ex2_file]) == 0
    block = _block(capsys.readouterr().out)
    assert block["mode"] == "growth"
    assert float(block["rate"]) == 0.8
    assert float(block["trivial_rate"]) == pytest.approx(2.0)
    assert float(block["crossover_vs_trivial"]) > 0.0


def test_certify_auto_mode_flag(ex1_file, capsys):
    assert main(["certify", ex1_file, "--mode", "auto"]) == 0
    block = _block(capsys.readouterr().out)
    assert block["mode"] == "auto"
    assert "classic_ok" in block
    assert float(block["critical_rate"]) == pytest.approx(0.159229, abs=5e-4)
    # auto picks 95% of the critical rate
    assert float(block["rate"]) == pytest.approx(0.95 * 0.159229, abs=5e-4)


def test_verify_roundtrip(ex1_file, tmp_path, capsys):
    cert_path = tmp_path / "ex1.cert"
    assert main(["certify", ex1_file, "--out", str(cert_path)]) == 0
    capsys.readouterr()

    env_path = tmp_path / "env.csv"
    code = main(["verify", ex1_file, "--cert", str(cert_path),
                 "--out", str(env_path)])
    assert code == 0
    block = _block(capsys.readouterr().out)
    assert block["holds"] == "true"
    assert float(block["min_margin"]) > 0.0
    data = np.loadtxt(env_path, delimiter=",", skiprows=1)
    assert data.shape[1] == 3
    # envelope column dominates |x| column everywhere
    assert np.all(data[:, 2] >= data[:, 1])


def test_verify_without_cert_certifies_in_process(ex1_file, capsys):
    assert main(["verify", ex1_file]) == 0
    block = _block(capsys.readouterr().out)
    assert block["holds"] == "true"


def test_verify_corrupted_certificate_fails(ex1_file, tmp_path, capsys):
    cert_path = tmp_path / "ex1.cert"
    main(["certify", ex1_file, "--out", str(cert_path)])
    capsys.readouterr()

    # claim a decay rate the solution cannot sustain; the envelope then
    # dives under |x| around t = 12 by far more than solver noise
    lines = []
    for line in cert_path.read_text().splitlines():
        if line.startswith("rate = "):
            line = "rate = 0.6"
        lines.append(line)
    cert_path.write_text("\n".join(lines) + "\n")

    assert main(["verify", ex1_file, "--cert", str(cert_path)]) == 1
    block = _block(capsys.readouterr().out)
    assert block["holds"] == "false"
    assert float(block["min_margin"]) < 0.0


def test_verify_cert_for_other_problem_is_mismatch(ex1_file, ex2_file, tmp_path, capsys):
    cert_path = tmp_path / "ex2.cert"
    main(["certify", ex2_file, "--out", str(cert_path)])
    capsys.readouterr()
    assert main(["verify", ex1_file, "--cert", str(cert_path)]) == 1
    assert "certificate" in capsys.readouterr().err


def test_verify_unparseable_certificate(ex1_file, tmp_path):
    cert_path = tmp_path / "junk.cert"
    cert_path.write_text("not a certificate\n")
    assert main(["verify", ex1_file, "--cert", str(cert_path)]) == 3


def test_reproduce_passes(capsys):
    for eid in ("1", "2", "2a-floor"):
        assert main(["reproduce", eid]) == 0, eid
        out = capsys.readouterr().out
        assert "[PASS]" in out
        assert "[FAIL]" not in out


def test_reproduce_rejects_unknown_id():
    with pytest.raises(SystemExit):
        main(["reproduce", "99"])
