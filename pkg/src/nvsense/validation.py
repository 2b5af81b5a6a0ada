"""Analytic-versus-reference checks shared by ``nv-sense validate`` and the test suite."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import metrology as met
from . import noise
from .constants import DEFAULT
from .oracle import monte_carlo_coherence
from .protocols import deer, nmr, qdyne, spectroscopy, weak
from .sequences import build_sequence, filter_function_closed, filter_function_numeric

TP = 2 * np.pi


@dataclass
class Check:
    name: str
    value: float
    reference: float
    tolerance: float
    passed: bool
    known_deviation: bool = False

    def __post_init__(self):
        self.value = float(self.value)
        self.passed = bool(self.passed)

    @property
    def status(self) -> str:
        if self.passed:
            return "pass"
        return "deviation" if self.known_deviation else "fail"


def _within_factor(value, ref, factor):
    return ref / factor <= value <= ref * factor


def check_readout_fidelity():
    F = met.readout_fidelity(met.PhotonModel.from_contrast(0.05, 0.18))
    return [Check("readout_fidelity", F, 0.040, 0.002, abs(F - 0.040) <= 0.002)]


def check_gradient_resolution():
    m = met.GradientModel((0.0, 0.0, 1.2e6), 120e-9, DEFAULT.gamma_e)
    dr = met.gradient_resolution(m)
    return [Check("gradient_resolution_m", dr, 2.5e-10, 0.02, abs(dr / 2.5e-10 - 1) <= 0.02)]


def check_sensitivity():
    b = met.profile("paper-ambient-shallow")
    pol = met.magnetic_sensitivity(b, "pol")
    fluc = met.magnetic_sensitivity(b, "fluc")
    return [Check("eta_pol_T", pol, 1e-7, 2.0, _within_factor(pol, 1e-7, 2)),
            Check("eta_fluc_T2", fluc, 4e-14, 2.0, _within_factor(fluc, 4e-14, 2), known_deviation=True)]


def check_filter_functions(quick=False):
    w = np.linspace(1e3, 2e8, 1000)
    t = 10e-6
    worst = 0.0
    Ns = (1, 3, 17, 63) if quick else (1, 3, 5, 9, 17, 33, 63)
    cases = [("ramsey", 0), ("hahn", 1)]
    for N in Ns:
        cases += [("pdd", N), ("udd", N), ("cpmg", N + 1)]
    for kind, N in cases:
        seq = build_sequence(kind, t, max(N, 1))
        num = filter_function_numeric(seq, w)
        ref = filter_function_closed(kind, w, t, max(N, 1))
        worst = max(worst, float(np.max(np.abs(num - ref))))
    return [Check("filter_function_max_dev", worst, 0.0, 1e-8, worst <= 1e-8)]


def check_decoherence(quick=False, seed=0):
    B, tc = 3e-6, 1e-6
    spec = noise.NoiseSpectrum([noise.Lorentzian(B, tc)])
    proc = spec.ou_processes()[0]
    n_t = 8 if quick else 20
    n_traj = 2000 if quick else 10_000
    out = []
    for kind in ("ramsey", "hahn"):
        tg = np.linspace(0.5e-6, 12e-6, n_t)
        xi_q = noise.decoherence(spec, kind, tg)
        xi_mc, _ = monte_carlo_coherence(lambda t: build_sequence(kind, t), tg, spec.gamma,
                                         process=proc, n_traj=n_traj, seed=seed)
        dev = float(np.max(np.abs(xi_mc.real / xi_q - 1)))
        out.append(Check(f"mc_vs_quadrature_{kind}", dev, 0.0, 0.05, dev <= 0.05))
    S0 = 2e5
    tg = np.linspace(1e-6, 10e-6, n_t)
    xi_mc, _ = monte_carlo_coherence(lambda t: build_sequence("ramsey", t), tg, spec.gamma,
                                     white_level=S0, n_traj=n_traj, seed=seed + 1, dt=1e-8)
    dev = float(np.max(np.abs(xi_mc.real / np.exp(-S0 * tg / 4) - 1)))
    out.append(Check("white_ramsey_vs_exp_S0t_over_4", dev, 0.0, 0.01, dev <= 0.01, known_deviation=True))
    return out


def check_deer():
    worst = 0.0
    cases = [[TP * 0.3e6], [TP * 0.1e6, TP * 0.25e6], [TP * 0.1e6, TP * 0.25e6, TP * 0.4e6]]
    for c in cases:
        for N, tau in ((1, 1e-6), (4, 0.4e-6), (8, 0.35e-6)):
            for manifold, scale in (("dq", 1.0), ("sq", 2.0)):
                a = deer.deer_signal(c, N, tau)
                o = deer.deer_oracle([x * scale for x in c], N, tau, manifold)
                worst = max(worst, abs(a - o))
    magic = np.arccos(1 / np.sqrt(3))
    h = deer.deer_coupling(8e-9 * np.array([np.sin(magic), 0, np.cos(magic)]))
    href = abs(deer.deer_coupling((0, 0, 8e-9)))
    return [Check("deer_oracle_max_abs_dev", worst, 0.0, 1e-6, worst <= 1e-6),
            Check("deer_magic_angle_rel", abs(h) / href, 0.0, 1e-12, abs(h) / href <= 1e-12)]


def check_dd_nmr(quick=False):
    wl, ap, N = TP * 2e6, TP * 10e3, 32
    tau0 = nmr.resonance_spacing(wl, 0.0)
    step = 0.005 * tau0
    taus = tau0 + step * np.arange(-10, 11)
    sig = [nmr.dd_nmr_oracle(wl, [(0.0, ap)], N, x) for x in taus]
    off = abs(taus[int(np.argmin(sig))] - tau0)
    out = [Check("dd_dip_offset_steps", off / step, 0.0, 1.0, off <= step * (1 + 1e-9))]
    worst = 0.0
    for a in (ap, TP * 20e3, TP * 29e3):
        if nmr.dd_rotation_angle(a, N, tau0) > nmr.SMALL_ANGLE:
            continue
        d_o = 1 - nmr.dd_nmr_oracle(wl, [(0.0, a)], N, tau0)
        d_a = 1 - nmr.dd_nmr_signal([(0.0, a)], N, tau0)
        worst = max(worst, abs(d_o / d_a - 1))
    out.append(Check("dd_small_angle_depth_rel", worst, 0.0, 0.05, worst <= 0.05))
    rng = np.random.default_rng(7)
    worst = 0.0
    for n in (1, 2, 3):
        for _ in range(3 if quick else 10):
            th = rng.uniform(0, np.pi, n)
            axes = [(np.cos(p), np.sin(p), 0.0) for p in rng.uniform(0, TP, n)]
            worst = max(worst, abs(nmr.controlled_rotation_oracle(th, axes) - nmr.dd_projection_exact(th / 2)))
    out.append(Check("dd_projection_identity", worst, 0.0, 1e-10, worst <= 1e-10))
    return out


def check_ensemble():
    out = []
    for prot, orient in (("dd", "100"), ("endor", "111")):
        for mode in ("fluc", "pol"):
            s = nmr.SampleModel(50e27, 5e-9, 0.5 if mode == "pol" else 0.0, orientation=orient)
            a = nmr.ensemble_signal(s, 32, 100e-6 / 32, prot, mode)
            b = nmr.lattice_sum(s, 32, 100e-6 / 32, prot, mode)
            out.append(Check(f"ensemble_{prot}_{mode}_rel", abs(b / a - 1), 0.0, 0.03, abs(b / a - 1) <= 0.03))
    return out


def check_zf_epr(quick=False, seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(100 if quick else 1000):
        a, b = rng.uniform(-1, 1, 2) * TP * 1e8
        w = np.linalg.eigvalsh(spectroscopy.zf_hamiltonian(a, b))
        lv = spectroscopy.zf_levels(a, b)
        ref = np.sort([lv["S0"], lv["T0"], lv["T+-"], lv["T+-"]])
        worst = max(worst, float(np.max(np.abs(w - ref)) / np.max(np.abs(w))))
    A_perp, A_par = TP * 25e6, TP * 130e6
    ref = spectroscopy.zf_peak_positions(A_perp, A_par)
    gap = float(np.min(np.diff(ref)))
    rots = spectroscopy.random_orientations(20 if quick else 100, seed)
    spread = max(float(np.max(np.abs(spectroscopy.zf_peak_positions(A_perp, A_par, rots[i]) - ref)))
                 for i in range(len(rots)))
    return [Check("zf_levels_rel", worst, 0.0, 1e-10, worst <= 1e-10),
            Check("zf_orientation_spread_rel", spread / gap, 0.0, 1e-9, spread / gap <= 1e-9)]


QDYNE = dict(f_LO=20e3, t_s=20e-6, photon=(3.0, 2.1))


def _qdyne_B(t_s):
    # peak phase of 1 rad
    return np.pi / (2 * abs(DEFAULT.gamma_e) * t_s)


def check_qdyne(quick=False, seed=0):
    f_LO, t_s = QDYNE["f_LO"], QDYNE["t_s"]
    r = qdyne.qdyne_simulate(f_LO + 10.0, _qdyne_B(t_s), t_s, f_LO, 10.0, QDYNE["photon"], seed)
    err = abs(r.f_peak - 10.0)
    Ts = np.logspace(-1, 1, 5 if quick else 9)
    _, slope = qdyne.precision_scaling(Ts, f_LO + 100.0, _qdyne_B(t_s), t_s, f_LO, QDYNE["photon"], seed)
    return [Check("qdyne_peak_error_hz", err, 0.0, 1 / (np.pi * 10), err <= 1 / (np.pi * 10)),
            Check("qdyne_precision_slope", slope, -1.5, 0.1, abs(slope + 1.5) <= 0.1)]


def check_weak_measurement():
    out = []
    for a, ts, tL in ((TP * 2e3, 20e-6, 50e-6), (TP * 4e3, 20e-6, 50e-6)):
        tr = weak.tracking_oracle(a, ts, tL, n_cycles=600)
        g = weak.gamma_beta(a, ts, tL)
        beta = weak.measurement_strength(a, ts)
        out.append(Check(f"weak_rate_ratio_beta_{beta:.2f}", tr.rate / g, 1.0, 0.1,
                         abs(tr.rate / g - 1) <= 0.1, known_deviation=True))
    return out


def relaxometry_scan(n_points=201):
    """Gamma_1 over B0 for a g = 2 target line at |gamma_e| B0, around the crossover."""
    Bc = noise.crossover_field()
    grid = np.linspace(0.9 * Bc, 1.1 * Bc, n_points)

    def spec_at(b):
        return noise.NoiseSpectrum([noise.Lorentzian(1e-6, 1e-7, abs(DEFAULT.gamma_e) * b)])

    plus, minus = noise.gamma1_vs_field(grid, spec_at, gamma2=TP * 1e6)
    return grid, plus, minus, Bc


def lower_branch(plus, minus, const=DEFAULT):
    """Gamma_1 of the transition whose frequency falls with B0 (D - |gamma_NV| B0)."""
    return plus if const.gamma_nv < 0 else minus


def check_relaxometry(quick=False):
    p0 = noise.relaxometry_population(0.0, 1e3, 2e3)
    pinf = noise.relaxometry_population(1e3, 1e3, 2e3)
    grid, plus, minus, Bc = relaxometry_scan(41 if quick else 201)
    step = grid[1] - grid[0]
    b_pk = grid[int(np.argmax(lower_branch(plus, minus)))]
    return [Check("relax_P0_t0", float(p0), 1.0, 0.0, float(p0) == 1.0),
            Check("relax_P0_inf", float(pinf), 1 / 3, 1e-15, abs(pinf - 1 / 3) <= 1e-15),
            Check("relax_peak_offset_steps", abs(b_pk - Bc) / step, 0.0, 1.0, abs(b_pk - Bc) <= step)]


def check_two_d(quick=False):
    om = (TP * 10e3, TP * 23e3)
    n = 48 if quick else 64
    t = np.arange(n) * 10e-6
    amps = []
    for J in (TP * 3e3, 0.0):
        f1, f2, S, _ = nmr.two_d_nmr(om, J, t, t)
        amps.append(max(nmr.peak_amplitude(f1, f2, S, 10e3, 23e3), nmr.peak_amplitude(f1, f2, S, 23e3, 10e3)))
    ratio = amps[0] / max(amps[1], 1e-300)
    return [Check("nmr2d_cross_ratio", ratio, 100.0, 0.0, ratio > 100)]


SUITE = [
    ("readout", lambda q, s: check_readout_fidelity()),
    ("gradient", lambda q, s: check_gradient_resolution()),
    ("sensitivity", lambda q, s: check_sensitivity()),
    ("filter", lambda q, s: check_filter_functions(q)),
    ("decoherence", lambda q, s: check_decoherence(q, s)),
    ("deer", lambda q, s: check_deer()),
    ("dd_nmr", lambda q, s: check_dd_nmr(q)),
    ("ensemble", lambda q, s: check_ensemble()),
    ("zf_epr", lambda q, s: check_zf_epr(q, s)),
    ("qdyne", lambda q, s: check_qdyne(q, s)),
    ("weak", lambda q, s: check_weak_measurement()),
    ("relaxometry", lambda q, s: check_relaxometry(q)),
    ("nmr2d", lambda q, s: check_two_d(q)),
]


def run_suite(quick: bool = False, seed: int = 0):
    results = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", nmr.SmallAngleWarning)
        for _, fn in SUITE:
            results.extend(fn(quick, seed))
    return results


def suite_csv(results) -> str:
    rows = ["check,value,reference,tolerance,status"]
    rows += [f"{r.name},{r.value:.10g},{r.reference:.10g},{r.tolerance:.10g},{r.status}" for r in results]
    return "\n".join(rows) + "\n"
