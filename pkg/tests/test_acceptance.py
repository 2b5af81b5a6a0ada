import subprocess
import sys
import time
import warnings

import numpy as np

from nvsense import metrology as met
from nvsense import validation as val
from nvsense.constants import DEFAULT
from nvsense.protocols.nmr import SmallAngleWarning

SEED = 20240611


def timed(fn, *args):
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", SmallAngleWarning)
        out = fn(*args)
    return out, time.perf_counter() - t0


def per_call(fn, repeats=200):
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def verdict(report, number, title, checks, elapsed, limit):
    ok = all(c.passed for c in checks) and elapsed < limit
    detail = "; ".join(f"{c.name}={c.value:.4g}" for c in checks)
    report(f"{'PASS' if ok else 'FAIL'} [{number:2d}] {title}: {detail}; runtime {elapsed:.3g} s (< {limit:g} s)")
    for c in checks:
        assert c.passed, f"{c.name}: value {c.value:.6g}, reference {c.reference:.6g}, tolerance {c.tolerance:.3g}"
    assert elapsed < limit


def test_01_readout_fidelity(report):
    checks = val.check_readout_fidelity()
    t = per_call(lambda: met.readout_fidelity(met.PhotonModel.from_contrast(0.05, 0.18)))
    verdict(report, 1, "readout fidelity", checks, t, 1e-3)


def test_02_gradient_resolution(report):
    checks = val.check_gradient_resolution()
    m = met.GradientModel((0.0, 0.0, 1.2e6), 120e-9, DEFAULT.gamma_e)
    t = per_call(lambda: met.gradient_resolution(m))
    verdict(report, 2, "gradient resolution", checks, t, 1e-3)


def test_03_sensitivity_worked_example(report):
    checks = val.check_sensitivity()
    b = met.profile("paper-ambient-shallow")
    t = per_call(lambda: (met.magnetic_sensitivity(b, "pol"), met.magnetic_sensitivity(b, "fluc")))
    verdict(report, 3, "sensitivity worked example", checks, t, 1e-3)


def test_04_filter_functions(report):
    checks, t = timed(val.check_filter_functions, False)
    verdict(report, 4, "filter-function equivalence", checks, t, 10)


def test_05_decoherence(report):
    checks, t = timed(val.check_decoherence, False, SEED)
    verdict(report, 5, "decoherence oracle", checks, t, 60)


def test_06_deer(report):
    checks, t = timed(val.check_deer)
    verdict(report, 6, "DEER analytic vs oracle", checks, t, 10)


def test_07_dd_nmr(report):
    checks, t = timed(val.check_dd_nmr, False)
    verdict(report, 7, "DD-NMR resonance and depth", checks, t, 30)


def test_08_ensemble(report):
    checks, t = timed(val.check_ensemble)
    verdict(report, 8, "ensemble prefactors", checks, t, 60)


def test_09_zf_epr(report):
    checks, t = timed(val.check_zf_epr, False, SEED)
    verdict(report, 9, "zero-field EPR", checks, t, 10)


def test_10_qdyne(report):
    checks, t = timed(val.check_qdyne, False, SEED)
    verdict(report, 10, "Qdyne peak and precision slope", checks, t, 120)


def test_11_weak_measurement(report):
    checks, t = timed(val.check_weak_measurement)
    verdict(report, 11, "weak-measurement dephasing", checks, t, 60)


def test_12_relaxometry(report):
    checks, t = timed(val.check_relaxometry, False)
    verdict(report, 12, "relaxometry", checks, t, 30)


def test_13_two_d_nmr(report):
    checks, t = timed(val.check_two_d, False)
    verdict(report, 13, "2D NMR cross peaks", checks, t, 60)


def test_14_determinism(report, tmp_path):
    outputs = []
    t0 = time.perf_counter()
    for k in range(2):
        d = tmp_path / f"run{k}"
        subprocess.run([sys.executable, "-m", "nvsense.cli", "validate", "--seed", "7", "--out", str(d)],
                       capture_output=True, check=False)
        outputs.append((d / "validate.csv").read_bytes())
    same = outputs[0] == outputs[1] and len(outputs[0]) > 0
    check = val.Check("validate_csv_identical", float(same), 1.0, 0.0, same)
    verdict(report, 14, "determinism", [check], time.perf_counter() - t0, np.inf)
