import subprocess
import sys

import numpy as np
import pytest

from nvsense.cli import main, make_grid, parse_axis
from nvsense.config import DEFAULT_SEED, ConfigError, parse_config


def run(argv, capsys):
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    lines = text.strip().splitlines()
    return lines[0].split(","), [ln.split(",") for ln in lines[1:]]


# --- config parsing --------------------------------------------------------------------

def test_parse_sections_and_repeats():
    cfg = parse_config("""
    [system]
    B0 = 0 0 0.01   # tesla
    target = electron 0 0 1e-8
    target = 1H 0 0 2e-9
    [run]
    seed = 7
    """)
    assert cfg.get("system", "B0") == (0.0, 0.0, 0.01)
    assert len(cfg.get("system", "target")) == 2
    assert cfg.seed == 7


def test_default_seed():
    assert parse_config("").seed == DEFAULT_SEED


@pytest.mark.parametrize("text", [
    "[nope]\n", "[system]\nfoo = 1\n", "B0 = 1 2 3\n", "[system]\nB0 = 1 2\n",
    "[sequence]\nN = 3\nN = 4\n", "[system\n", "[sequence]\nN\n",
])
def test_parse_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_grid_rules():
    assert np.allclose(make_grid("log", 1, 100, 3), [1, 10, 100])
    for args in [("linear", 1, 2, 1), ("linear", 1, 1, 5), ("log", -1, 1, 5), ("cubic", 1, 2, 5)]:
        with pytest.raises(Exception):
            make_grid(*args)


def test_axis_parsing():
    ax = parse_axis(["system.B0[2]", "linear", "0.01", "0.02", "3"])
    assert ax.label == "system.B0[2]" and len(ax.values) == 3
    with pytest.raises(ConfigError):
        parse_axis(["system.nothing", "linear", "0", "1", "3"])
    with pytest.raises(ConfigError):
        parse_axis(["system.target", "linear", "0", "1", "3"])


# --- exit codes ------------------------------------------------------------------------

def test_bad_flag_is_parse_error(capsys):
    code, _, err = run(["odmr", "--bogus"], capsys)
    assert code == 2 and err.startswith("nv-sense: error[parse]:") and err.count("\n") == 1


def test_unknown_section_is_parse_error(capsys):
    code, _, err = run(["odmr", "--set", "wrong.key=1"], capsys)
    assert code == 2


def test_validation_error_codes(capsys):
    assert run(["odmr", "--set", "system.B0=0 0 nan"], capsys)[0] == 3
    assert run(["sensitivity", "--profile", "nonexistent"], capsys)[0] == 3
    code, _, err = run(["sweep", "--set", "sweep.command=odmr",
                        "--set", "sweep.axis=system.temperature linear 300 300 1"], capsys)
    assert code in (2, 3) and "error[" in err


def test_missing_config_file(capsys, tmp_path):
    assert run(["odmr", "--config", str(tmp_path / "absent.cfg")], capsys)[0] == 2


# --- commands ------------------------------------------------------------------------------

def test_deer_triplet(capsys, tmp_path):
    cfg = tmp_path / "two_spin.cfg"
    cfg.write_text("[system]\nB0 = 0 0 0.05\ntarget = electron 0 0 1e-8\n")
    code, out, _ = run(["deer", "--config", str(cfg)], capsys)
    assert code == 0
    head, body = rows(out)
    assert head == ["rf_hz", "signal"]
    rf = np.array([float(r[0]) for r in body])
    s = np.array([float(r[1]) for r in body])
    dips = [i for i in range(1, len(s) - 1) if s[i] < s[i - 1] and s[i] <= s[i + 1] and s[i] < 0.9]
    assert len(dips) == 3
    spacing = np.diff(rf[dips])
    assert spacing[0] == pytest.approx(spacing[1], rel=0.02)


def test_sensitivity_profile(capsys):
    code, out, _ = run(["sensitivity", "--profile", "paper-ambient-shallow"], capsys)
    assert code == 0
    table = {r[0]: (float(r[1]), r[2]) for r in rows(out)[1]}
    val, unit = table["eta_pol"]
    assert unit == "T/Hz^0.5" and 0.05e-6 <= val <= 0.2e-6


def test_dump_sequence(capsys, tmp_path):
    code, _, _ = run(["decohere", "--dump-sequence", "--out", str(tmp_path),
                      "--set", "scan.points=4"], capsys)
    assert code == 0
    text = (tmp_path / "decohere_sequence.txt").read_text()
    assert text.startswith("PULSE mw x 90")
    assert (tmp_path / "decohere.csv").read_bytes().endswith(b"\n")


@pytest.mark.parametrize("command", ["odmr", "filterfn", "endor", "hh", "zf-epr", "correlate",
                                     "nmr-2d", "sensitivity"])
def test_commands_have_headers(command, capsys):
    argv = [command] + (["--profile", "paper-ambient-shallow"] if command == "sensitivity" else [])
    code, out, _ = run(argv, capsys)
    assert code == 0
    head, body = rows(out)
    assert head and body and all(len(r) == len(head) for r in body)


def test_qdyne_seeded_identical(capsys):
    a = run(["qdyne", "--seed", "11", "--set", "qdyne.T_exp=0.2"], capsys)[1]
    b = run(["qdyne", "--seed", "11", "--set", "qdyne.T_exp=0.2"], capsys)[1]
    assert a == b


# --- sweep ------------------------------------------------------------------------------------

SWEEP = ["sweep", "--set", "sweep.command=qdyne", "--set", "qdyne.f_signal=20010",
         "--set", "sweep.axis=qdyne.T_exp log 0.1 1 3", "--set", "sweep.axis=qdyne.phase linear 0 1 2"]


def test_sweep_order_and_thread_independence(capsys, monkeypatch):
    monkeypatch.setenv("NV_SENSE_THREADS", "1")
    code, serial, _ = run(SWEEP, capsys)
    assert code == 0
    monkeypatch.setenv("NV_SENSE_THREADS", "4")
    parallel = run(SWEEP, capsys)[1]
    assert serial == parallel
    head, body = rows(serial)
    assert head[:2] == ["qdyne.T_exp", "qdyne.phase"]
    grid = [(float(r[0]), float(r[1])) for r in body]
    assert grid == sorted(grid) and len(grid) == 6


def test_sweep_locates_dd_dip(capsys):
    from nvsense.protocols.nmr import resonance_spacing
    tau0 = resonance_spacing(2 * np.pi * 2e6)
    lo, hi = 0.95 * tau0, 1.05 * tau0
    code, out, _ = run(["sweep", "--set", "sweep.command=nmr-dd",
                        "--set", "system.B0=0 0 0.04697", "--set", f"sweep.axis=sequence.tau linear {lo} {hi} 21"],
                       capsys)
    assert code == 0
    head, body = rows(out)
    k = head.index("signal")
    tau = np.array([float(r[0]) for r in body])
    sig = np.array([float(r[k]) for r in body])
    from nvsense.constants import DEFAULT
    wl = abs(DEFAULT.gamma_n("1H")) * 0.04697
    assert abs(tau[np.argmin(sig)] - np.pi / wl) <= tau[1] - tau[0]


def test_bad_thread_env(capsys, monkeypatch):
    monkeypatch.setenv("NV_SENSE_THREADS", "zero")
    assert run(SWEEP, capsys)[0] == 3


# --- validate ---------------------------------------------------------------------------------

def test_validate_quick_exit_zero(tmp_path):
    r = subprocess.run([sys.executable, "-m", "nvsense.cli", "validate", "--quick", "--out", str(tmp_path)],
                       capture_output=True, text=True)
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "validate.csv").read_text().startswith("check,value,reference,tolerance,status\n")
