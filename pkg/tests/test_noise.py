import warnings

import numpy as np
import pytest
from scipy.integrate import quad

from nvsense import noise
from nvsense.constants import DEFAULT

TP = 2 * np.pi


def test_lorentzian_normalisation():
    B, tc = 2e-6, 1e-6
    s = noise.NoiseSpectrum([noise.Lorentzian(B, tc, 3e6)])
    f = lambda x: float(s(np.array([3e6 + x / tc]))[0]) / tc
    val = quad(f, -np.inf, 0, epsabs=0, epsrel=1e-10)[0] + quad(f, 0, np.inf, epsabs=0, epsrel=1e-10)[0]
    assert val == pytest.approx(DEFAULT.gamma_nv**2 * B**2, rel=1e-6)


def test_spectrum_nonnegative():
    s = noise.NoiseSpectrum([noise.Lorentzian(1e-6, 1e-7, 1e7), noise.White(100.0)])
    assert np.all(s(np.linspace(-1e9, 1e9, 1001)) >= 0)


def test_zero_spectrum_gives_unit_coherence():
    xi = noise.decoherence(noise.NoiseSpectrum([]), "hahn", [1e-6, 5e-6])
    assert np.all(xi == 1.0)


def test_white_ramsey_decay_rate():
    # quadrature result for white noise is exp(-S0 t/2) with the 2 sin^2 Ramsey filter
    S0 = 2e5
    t = np.linspace(1e-6, 10e-6, 5)
    xi = noise.decoherence(noise.NoiseSpectrum([noise.White(S0)]), "ramsey", t)
    assert np.allclose(xi, np.exp(-S0 * t / 2), rtol=1e-6)


def test_ou_exact_matches_quadrature():
    from nvsense.sequences import build_sequence
    B, tc = 3e-6, 1e-6
    s = noise.NoiseSpectrum([noise.Lorentzian(B, tc)])
    for kind in ("ramsey", "hahn"):
        for t in (2e-6, 8e-6):
            exact = noise.ou_chi_exact(B, tc, s.gamma, build_sequence(kind, t))
            assert noise.chi(s, kind, t) == pytest.approx(exact, rel=1e-3)


def test_ramsey_monotone():
    s = noise.NoiseSpectrum([noise.Lorentzian(3e-6, 1e-6)])
    xi = noise.decoherence(s, "ramsey", np.linspace(0.2e-6, 20e-6, 30))
    assert np.all(np.diff(xi) <= 1e-12) and np.all((xi > 0) & (xi <= 1))


def test_more_pulses_less_decay():
    s = noise.NoiseSpectrum([noise.Lorentzian(3e-6, 1e-6)])
    t = 20e-6
    chis = [noise.chi(s, "cpmg", t, N) for N in (2, 4, 8, 16)]
    assert all(b <= a * (1 + 1e-6) for a, b in zip(chis, chis[1:]))


def test_relaxometry_population():
    assert noise.relaxometry_population(0.0, 1e3, 2e3) == 1.0
    assert noise.relaxometry_population(1e9, 1e3, 2e3) == pytest.approx(1 / 3, abs=1e-15)
    g = 5e3
    ref = (2 + 2 * np.exp(-1) + 2 * np.exp(-2)) / 6
    assert noise.relaxometry_population(1 / g, g, g) == pytest.approx(ref, rel=1e-14)
    t = np.linspace(0, 1e-2, 200)
    p = noise.relaxometry_population(t, 3e2, 7e2)
    assert np.all((p >= 1 / 3) & (p <= 1))
    with pytest.raises(ValueError):
        noise.relaxometry_population(1.0, -1.0, 1.0)


def test_gamma1_zero_spectrum():
    p, m = noise.gamma1_vs_field([0.01, 0.02], noise.NoiseSpectrum([]), TP * 1e6, gamma1_int=150.0)
    assert np.all(p == 150.0) and np.all(m == 150.0)


def test_gamma1_overlap_resonant_vs_detuned():
    D = DEFAULT.D_zfs
    width = 1 / 1e-6
    on = noise.NoiseSpectrum([noise.Lorentzian(1e-6, 1e-6, D)])
    off = noise.NoiseSpectrum([noise.Lorentzian(1e-6, 1e-6, D + 10 * width)])
    p_on, _ = noise.gamma1_vs_field([0.0], on, 1e3)
    p_off, _ = noise.gamma1_vs_field([0.0], off, 1e3)
    assert p_on[0] / p_off[0] > 10


def test_crossover_field():
    B = noise.crossover_field()
    assert B == pytest.approx(DEFAULT.D_zfs / (abs(DEFAULT.gamma_nv) + abs(DEFAULT.gamma_e)))
    assert 0.05 < B < 0.052


def test_ion_linewidth_terms():
    m = noise.IonBathModel(c_ion=1e-3, d=3e-9, gamma_ion=DEFAULT.gamma_e, D_diff=2.3e-9)
    terms = noise.ion_linewidth(m)
    assert terms["f_dip"] == pytest.approx(77e6)
    assert terms["f_trans"] == pytest.approx(1.4e8, rel=0.05)


def test_ion_degenerate_flagged():
    m = noise.IonBathModel(c_ion=0.0, d=3e-9, gamma_ion=DEFAULT.gamma_e)
    with warnings.catch_warnings(record=True) as rec:
        warnings.simplefilter("always")
        s = noise.ion_psd(m)
    assert rec and not s.components


def test_surface_rms():
    m = noise.SurfaceBathModel(0.04e18, 5e-9)
    b = noise.surface_rms(m)
    assert b == pytest.approx(13e-6, rel=0.05)
    assert noise.surface_rms(noise.SurfaceBathModel(0.04e18, 10e-9)) == pytest.approx(b / 4)
    assert noise.surface_rms(noise.SurfaceBathModel(0.0, 5e-9)) == 0.0


def test_diffusion_broadening():
    r = noise.diffusion_broadening(2.3e-9, 10e-9)
    assert r == pytest.approx(1.3e7, rel=0.01)
    assert noise.diffusion_broadening(0.0, 10e-9) == 0.0
    assert noise.diffusion_broadening(2.3e-9, 20e-9) == pytest.approx(r / 4)


def test_dielectric_screening():
    assert noise.dielectric_screening(noise.DielectricModel(kappa_ext=1.0)) == pytest.approx(1.0)
    assert noise.dielectric_screening(noise.DielectricModel(kappa_ext=42.0, kappa_d=5.7)) == pytest.approx(0.140, abs=5e-4)
    assert noise.dielectric_screening(noise.DielectricModel(kappa_ext=np.inf)) == 0.0


def test_spectrum_csv_format():
    s = noise.NoiseSpectrum([noise.White(1.0)])
    text = s.to_csv([0.0, TP])
    assert text.splitlines()[0] == "omega_hz,S" and text.endswith("\n") and "\r" not in text
