import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nvsense.constants import DEFAULT
from nvsense.protocols import deer, nmr, qdyne, spectroscopy, weak
from nvsense.spin_core import dipolar_coupling

TP = 2 * np.pi


# --- DEER -------------------------------------------------------------------------

def test_deer_trivial_cases():
    assert deer.deer_signal([], 4, 1e-6) == 1.0
    c = TP * 0.2e6
    assert deer.deer_signal([c], 2, np.pi / (2 * c)) == pytest.approx(0.0, abs=1e-15)


def test_deer_two_targets():
    c = [TP * 0.1e6, TP * 0.25e6]
    ref = 0.5 * (1 + np.cos(0.2 * np.pi) * np.cos(0.5 * np.pi))
    assert deer.deer_signal(c, 1, 1e-6) == pytest.approx(ref, abs=1e-15)
    assert deer.deer_oracle(c, 1, 1e-6) == pytest.approx(ref, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(-2e6, 2e6), min_size=1, max_size=3), st.integers(1, 8))
def test_deer_bounds_and_sign_symmetry(cs, N):
    s = deer.deer_signal(cs, N, 0.3e-6)
    assert 0 <= s <= 1
    assert deer.deer_signal([-c for c in cs], N, 0.3e-6) == pytest.approx(s, abs=1e-15)


def test_deer_geometry_path_matches_direct():
    r = (3e-9, 4e-9, 6e-9)
    _, h = dipolar_coupling(r, DEFAULT.gamma_nv, DEFAULT.gamma_e)
    assert deer.deer_coupling(r, manifold="dq") == pytest.approx(h, rel=1e-12)
    c = deer.deer_coupling(r, manifold="sq")
    assert deer.deer_oracle([2 * c], 4, 0.5e-6, "sq") == pytest.approx(deer.deer_signal([c], 4, 0.5e-6), abs=1e-10)


def test_deer_rf_triplet():
    rf = np.linspace(1.30e9, 1.50e9, 2001)
    c = TP * 50e3
    s = deer.deer_rf_spectrum(rf, 1.4e9, c, 8, np.pi / (c * 8), (-1, 0, 1), 42e6)
    idx = [np.argmin(np.abs(rf - f)) for f in (1.358e9, 1.4e9, 1.442e9)]
    for i in idx:
        assert s[i] < 0.7
    assert s[np.argmin(np.abs(rf - 1.38e9))] > 0.99


def test_dressed_matching():
    ok, det = deer.dressed_matching(5.0, 5.0)
    assert ok and det == 0


# --- DD-NMR -----------------------------------------------------------------------

def test_dd_trivial():
    assert nmr.dd_nmr_signal([(1e3, 0.0), (5e3, 0.0)], 32, 1e-6) == 1.0
    assert nmr.dd_nmr_signal([(0.0, TP * 1e3)], 8, 1e-6, "imag", [0.0]) == 0.5


def test_dd_example_depth():
    a = TP * 10e3
    tau = 0.25e-6
    phi = a * 32 * tau / np.pi
    assert 1 - nmr.dd_nmr_signal([(0.0, a)], 32, tau) == pytest.approx(phi**2 / 4)
    oracle = 1 - nmr.dd_nmr_oracle(TP * 2e6, [(0.0, a)], 32, tau)
    assert oracle == pytest.approx(phi**2 / 4, rel=0.05)


def test_small_angle_warning():
    with pytest.warns(nmr.SmallAngleWarning):
        nmr.dd_nmr_signal([(0.0, TP * 100e3)], 64, 1e-6)


def test_real_mode_blind_to_polarisation():
    a = [(0.0, TP * 5e3)]
    assert nmr.dd_nmr_signal(a, 16, 0.25e-6, "real", [0.9]) == nmr.dd_nmr_signal(a, 16, 0.25e-6, "real", [0.0])


def test_imag_affine_in_p():
    a = [(0.0, TP * 5e3)]
    vals = [nmr.dd_nmr_signal(a, 16, 0.25e-6, "imag", [p]) for p in (-1, 0, 0.5, 1)]
    assert np.allclose(np.diff(vals) / np.diff([-1, 0, 0.5, 1]), vals[-1] - vals[1])


def test_dd_oracle_imag_polarised():
    wl, a, N = TP * 2e6, TP * 5e3, 32
    tau = nmr.resonance_spacing(wl)
    ref = nmr.dd_nmr_signal([(0.0, a)], N, tau, "imag", [0.3])
    assert nmr.dd_nmr_oracle(wl, [(0.0, a)], N, tau, "imag", [0.3]) == pytest.approx(ref, abs=2e-3)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_projection_identity(n):
    rng = np.random.default_rng(n)
    th = rng.uniform(0, np.pi, n)
    axes = [(np.cos(p), np.sin(p), 0.0) for p in rng.uniform(0, TP, n)]
    assert nmr.controlled_rotation_oracle(th, axes) == pytest.approx(nmr.dd_projection_exact(th / 2), abs=1e-10)


# --- ENDOR ------------------------------------------------------------------------

def test_endor_trivial():
    assert nmr.endor_signal([0.0], 2, 1e-6) == 1.0
    assert nmr.endor_signal([TP * 3e3], 2, 1e-6) == nmr.endor_signal([-TP * 3e3], 2, 1e-6)


def test_endor_oracle_small_angle():
    a = TP * 5e3
    for N in (1, 2):
        tau = 4e-6
        d_o = 1 - nmr.endor_oracle(TP * 2e6, a, N, tau)
        d_a = 1 - nmr.endor_signal(a, N, tau)
        assert d_o == pytest.approx(d_a, rel=0.05)


# --- Hartmann-Hahn -----------------------------------------------------------------

def test_hh_trivial():
    assert nmr.hh_transition(TP * 50e3, 0.0, 1e-3) == 0.0
    a, th = TP * 50e3, np.pi / 3
    t = 8 * (np.pi / 2) / (a * np.sin(th))
    assert nmr.hh_transition(a, th, t, denominator=8) == pytest.approx(1.0)


def test_hh_resonance_flag():
    ok, det = nmr.hh_resonance(1.0, 1.0 + 1e-3, tol=1e-2)
    assert ok and det == pytest.approx(-1e-3)


def test_hh_oracle_frequency():
    from scipy.optimize import curve_fit
    wl, a, th = TP * 2e6, TP * 50e3, np.pi / 3
    t = np.linspace(0, 2 * TP / (a * np.sin(th) / 4), 300)
    p = nmr.hh_oracle(a, th, wl, nmr.hh_matched_drive(wl, a, th), t)
    (k,), _ = curve_fit(lambda x, k: np.sin(k * x) ** 2, t, p, p0=[a * np.sin(th) / 4])
    assert k == pytest.approx(a * np.sin(th) / 4, rel=0.05)


# --- ensemble ------------------------------------------------------------------------

def test_ensemble_trivial_and_scaling():
    s0 = nmr.SampleModel(0.0, 5e-9)
    assert nmr.ensemble_signal(s0, 32, 3e-6) == 0.0
    s = nmr.SampleModel(50e27, 5e-9)
    a = nmr.ensemble_signal(s, 32, 3e-6)
    b = nmr.ensemble_signal(nmr.SampleModel(50e27, 10e-9), 32, 3e-6)
    assert a / b == pytest.approx(8.0, rel=1e-12)


@pytest.mark.parametrize("protocol,mode,slope", [("dd", "fluc", 2), ("dd", "pol", 1),
                                                 ("endor", "fluc", 2), ("endor", "pol", 1)])
def test_ensemble_power_laws(protocol, mode, slope):
    s = nmr.SampleModel(50e27, 5e-9, 0.3, orientation="100" if protocol == "dd" else "111")
    tau = np.array([1e-6, 2e-6, 4e-6, 8e-6])
    v = [abs(nmr.ensemble_signal(s, 32, x, protocol, mode)) for x in tau]
    assert np.polyfit(np.log(tau), np.log(v), 1)[0] == pytest.approx(slope, abs=0.01)


def test_sample_validation():
    with pytest.raises(ValueError):
        nmr.SampleModel(-1.0, 5e-9)
    with pytest.raises(ValueError):
        nmr.SampleModel(1.0, 5e-9, polarization=1.5)


# --- 2D NMR ------------------------------------------------------------------------------

def _cross(J):
    t = np.arange(32) * 10e-6
    f1, f2, S, _ = nmr.two_d_nmr([TP * 10e3, TP * 23e3], J, t, t)
    return (nmr.peak_amplitude(f1, f2, S, 10e3, 23e3), nmr.peak_amplitude(f1, f2, S, 10e3, 10e3))


def test_two_d_cross_peaks_only_when_coupled():
    c_on, d_on = _cross(TP * 3e3)
    c_off, d_off = _cross(0.0)
    assert d_off > 0 and c_on > 20 * c_off


def test_two_d_zero_grid_flat():
    _, _, S, _ = nmr.two_d_nmr([TP * 1e3, TP * 2e3], 0.0, [0.0], [0.0])
    assert np.all(S == 0)


# --- ZF-EPR, ODMR, correlation ---------------------------------------------------------------

def test_zf_isotropic():
    lv = spectroscopy.zf_levels(1.0, 1.0)
    assert lv["S0"] == pytest.approx(-0.75) and lv["T0"] == pytest.approx(0.25) and lv["T+-"] == pytest.approx(0.25)


def test_zf_gap_closes():
    lv = spectroscopy.zf_levels(0.0, 3.0)
    assert lv["S0"] == lv["T0"]


def test_zf_eigs_match():
    rng = np.random.default_rng(0)
    for _ in range(50):
        a, b = rng.uniform(-1, 1, 2) * 1e8
        w = np.linalg.eigvalsh(spectroscopy.zf_hamiltonian(a, b))
        lv = spectroscopy.zf_levels(a, b)
        assert np.allclose(w, sorted([lv["S0"], lv["T0"], lv["T+-"], lv["T+-"]]), atol=1e-7)


def test_zf_rabi_is_twice_gap():
    r = spectroscopy.zf_epr(TP * 25e6, TP * 130e6)
    assert r["rabi"] == pytest.approx([2 * abs(d) for d, _ in r["transitions"]])


def test_odmr_linewidth():
    assert spectroscopy.odmr_linewidth(0.0, 1e-6, 2e-6) == pytest.approx(1 / (np.pi * 2e-6))
    assert spectroscopy.odmr_linewidth(0.0, 1e-6, 1e-6) == pytest.approx(2 * spectroscopy.odmr_linewidth(0.0, 1e-6, 2e-6))
    T1, T2 = 3e-6, 1e-6
    cross = TP / (2 * np.pi * T2 * np.sqrt(T1 / T2))
    om = 100 * cross
    ref = np.sqrt(T1 / T2) * om / np.pi
    assert spectroscopy.odmr_linewidth(om, T1, T2) == pytest.approx(ref, rel=0.01)


def test_correlation_signal():
    dt = np.linspace(0, 50e-6, 501)
    s = spectroscopy.correlation_signal(TP * 200e3, dt, 0.8)
    assert s[0] == pytest.approx(0.4)
    f, a = spectroscopy.correlation_spectrum(dt, s)
    assert abs(f[np.argmax(a)] - 200e3) <= f[1] - f[0]


# --- Qdyne -------------------------------------------------------------------------------

QD = dict(B_ac=np.pi / (2 * abs(DEFAULT.gamma_e) * 20e-6), t_s=20e-6, f_LO=20e3)


def test_qdyne_flat_at_lo():
    rec = qdyne.qdyne_record(20e3, T_exp=0.1, seed=1, **QD)
    assert rec.delta_f == 0.0 and np.ptp(rec.phases) == 0


def test_qdyne_shot_count_and_seed():
    a = qdyne.qdyne_record(20e3 + 10, T_exp=0.12345, seed=5, **QD)
    b = qdyne.qdyne_record(20e3 + 10, T_exp=0.12345, seed=5, **QD)
    assert a.n_shots == int(np.floor(0.12345 * 20e3))
    assert np.array_equal(a.counts, b.counts)


def test_qdyne_peak_phase_invariant():
    peaks = [qdyne.qdyne_simulate(20e3 + 50, T_exp=1.0, seed=3, phase=p, fit=False, **QD).f_peak
             for p in (0.0, 1.0, 2.5)]
    assert peaks[0] == peaks[1] == peaks[2] == pytest.approx(50.0)


def test_qdyne_aliasing():
    assert qdyne.aliased_frequency(20e3 + 10, 20e3) == pytest.approx(10)
    assert qdyne.aliased_frequency(20e3 - 10, 20e3) == pytest.approx(10)
    assert qdyne.aliased_frequency(3 * 20e3 + 15e3, 20e3) == pytest.approx(5e3)


def test_qdyne_bad_inputs():
    with pytest.raises(ValueError):
        qdyne.qdyne_record(1e3, QD["B_ac"], 1e-3, 20e3, 1.0)
    with pytest.raises(ValueError):
        qdyne.qdyne_record(1e3, T_exp=1e-4, **QD)


# --- weak measurement ------------------------------------------------------------------------

def test_gamma_beta_limits():
    assert weak.gamma_beta(TP * 2e3, 0.0, 50e-6) == 0.0
    a, ts, tl = TP * 2e3, 20e-6, 50e-6
    assert weak.gamma_beta(a, ts, 2 * tl) == pytest.approx(weak.gamma_beta(a, ts, tl) / 2)
    assert weak.gamma_beta(a, ts, tl) == pytest.approx(a**2 * ts**2 / (np.pi**2 * tl))


def test_weak_measurement_report():
    r = weak.weak_measurement(TP * 2e3, TP * 1e3, 20e-6, 50e-6, t_optical=1e-6, simulate=False)
    assert r["gamma_beta"] == pytest.approx(weak.gamma_beta(TP * 2e3, 20e-6, 50e-6))
    assert r["gamma_gamma"] == pytest.approx((TP * 1e3) ** 2 * 1e-12 / (2 * 50e-6))


def test_tracking_oracle_decays():
    tr = weak.tracking_oracle(TP * 2e3, 20e-6, 50e-6, n_cycles=300)
    amp = np.hypot(tr.mx, tr.my)
    assert amp[-1] < amp[0] and tr.rate > 0
