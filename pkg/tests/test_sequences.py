import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nvsense.sequences import (
    DeltaFilter, build_sequence, filter_function_closed, filter_function_numeric, filter_over_w2,
    resonance_spacing,
)

T = 10e-6


def test_hahn_layout():
    s = build_sequence("hahn", T)
    assert s.dump() == ("PULSE mw x 90\nWAIT 5e-06\nPULSE mw x 180\nWAIT 5e-06\nPULSE mw x 90\n")


def test_cpmg2_layout():
    s = build_sequence("cpmg", T, 2)
    lines = s.dump().splitlines()
    assert lines[0] == "PULSE mw x 90" and lines[-1] == "PULSE mw x 90"
    assert lines[1:-1] == ["WAIT 2.5e-06", "PULSE mw y 180", "WAIT 5e-06", "PULSE mw y 180", "WAIT 2.5e-06"]


def test_duration_is_sum_of_waits():
    for kind, N in [("ramsey", 1), ("hahn", 1), ("pdd", 5), ("cpmg", 8), ("xy8", 16), ("udd", 7), ("cdd", 1)]:
        s = build_sequence(kind, T, N, level=3)
        assert s.duration == pytest.approx(T, rel=1e-12)


def test_deer_rf_synchronous():
    s = build_sequence("deer", T, 4, rf_channel="rf:all")
    els = s.elements
    for k, e in enumerate(els):
        if e.kind == "pulse" and e.channel == "mw" and np.isclose(e.angle, np.pi):
            assert els[k + 1].kind == "pulse" and els[k + 1].channel == "rf:all"


def test_xy8_phases():
    s = build_sequence("xy8", T, 8)
    axes = [ln.split()[2] for ln in s.dump().splitlines() if "180" in ln]
    assert "".join(axes).upper() == "XYXYYXYX"


def test_invalid_parities():
    with pytest.raises(ValueError):
        build_sequence("pdd", T, 2)
    with pytest.raises(ValueError):
        build_sequence("cpmg", T, 3)
    with pytest.raises(ValueError):
        build_sequence("nonsense", T)


def test_ramsey_small_omega():
    assert filter_function_closed("ramsey", np.array([0.0]), T)[0] == 0.0
    v = filter_over_w2("ramsey", np.array([1e-3, 1.0]), T)
    assert np.allclose(v, T**2 / 2, rtol=1e-6)


def test_hahn_value_at_2pi():
    assert filter_function_closed("hahn", np.array([2 * np.pi / T]), T)[0] == pytest.approx(8.0)


def test_udd1_equals_hahn():
    w = np.linspace(0, 5e7, 500)
    assert np.allclose(filter_function_closed("udd", w, T, 1), filter_function_closed("hahn", w, T))


@pytest.mark.parametrize("kind,N", [("hahn", 1), ("cpmg", 16), ("pdd", 9), ("udd", 12), ("xy8", 16)])
def test_numeric_matches_closed(kind, N):
    w = np.linspace(0, 20 * N / T, 1000)
    num = filter_function_numeric(build_sequence(kind, T, N), w)
    ref = filter_function_closed(kind, w, T, N)
    assert np.max(np.abs(num - ref)) <= 1e-8


def test_cdd_numeric_matches_closed():
    w = np.linspace(0, 4e7, 800)
    for lev in (1, 2, 3):
        s = build_sequence("cdd", T, level=lev)
        assert np.max(np.abs(filter_function_numeric(s, w) - filter_function_closed("cdd", w, T, level=lev))) <= 1e-8


def test_zero_frequency_zero_for_echo_types():
    for kind, N in [("hahn", 1), ("cpmg", 4), ("pdd", 3), ("udd", 5)]:
        assert filter_function_numeric(build_sequence(kind, T, N), np.array([0.0]))[0] == 0.0


def test_cpmg_passband_centre():
    N = 16
    # grid step pi/(2t), a quarter of the passband width
    w = np.linspace(0, 2 * np.pi * N / T, 4 * N + 1)
    g = filter_function_closed("cpmg", w, T, N)
    assert abs(w[np.argmax(g)] - np.pi * N / T) <= w[1] - w[0]


def test_cpmg_peak_scales_n_squared():
    for N in (4, 8, 16):
        a = filter_function_closed("cpmg", np.array([np.pi * N / T]), T, N)[0]
        b = filter_function_closed("cpmg", np.array([np.pi * 2 * N / T]), T, 2 * N)[0]
        assert b / a == pytest.approx(4, rel=0.05)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["ramsey", "hahn", "pdd", "cpmg", "udd"]), st.integers(1, 32),
       st.floats(0, 5e8, allow_nan=False))
def test_filter_nonnegative(kind, n, w):
    N = n if kind != "pdd" else 2 * (n // 2) + 1
    N = 2 * ((N + 1) // 2) if kind == "cpmg" else N
    assert filter_function_closed(kind, np.array([w]), T, N)[0] >= 0


def test_spin_lock_delta_filter():
    d = filter_function_closed("spin_lock", None, T, omega0=2e6)
    assert isinstance(d, DeltaFilter)
    assert d.weight == pytest.approx(2 * (2e6) ** 2 * T / np.pi)


def test_resonance_spacing():
    assert resonance_spacing(2 * np.pi * 2e6, 0.0) == pytest.approx(0.25e-6)
    assert resonance_spacing(1.0, 1.0) == pytest.approx(np.pi / 1.5)
