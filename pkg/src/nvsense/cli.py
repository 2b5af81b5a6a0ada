"""Command-line front end: ``nv-sense <command> [options]``.

Every command writes one CSV table (UTF-8, ``\\n`` line endings). Without
``--out`` the table goes to stdout. Exit status: 0 success, 1 validate found a
failing check, 2 parse error, 3 invalid input, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import itertools
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import metrology as met
from . import noise, validation
from .config import SCHEMA, ConfigError, RunConfig, load_config
from .constants import DEFAULT
from .noise import QuadratureError
from .protocols import deer, nmr, qdyne, spectroscopy
from .sequences import build_sequence, filter_function_closed, filter_function_numeric
from .spin_core import FieldEnvironment, SpinSystem, TargetSpin, nv_ground_hamiltonian, spin_operators

TP = 2 * np.pi
FMT = "%.10g"


class UsageError(Exception):
    """Input that parses but is physically or logically invalid (status 3)."""


@dataclass
class Table:
    columns: list
    rows: list
    scalars: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)      # name -> text written beside the CSV

    def csv(self) -> str:
        lines = [",".join(self.columns)]
        lines += [",".join(_cell(v) for v in row) for row in self.rows]
        return "\n".join(lines) + "\n"


def _cell(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return FMT % float(v)


# --- shared config helpers ---------------------------------------------------

def _grid(cfg: RunConfig, start, stop, points, spacing="linear"):
    a = cfg.get("scan", "start", start)
    b = cfg.get("scan", "stop", stop)
    n = cfg.get("scan", "points", points)
    kind = cfg.get("scan", "spacing", spacing)
    return make_grid(kind, a, b, n)


def make_grid(kind, start, stop, points):
    if points < 2:
        raise UsageError("a scan needs at least 2 points")
    if start == stop:
        raise UsageError("scan start and stop coincide")
    if kind == "linear":
        return np.linspace(start, stop, points)
    if kind == "log":
        if start <= 0 or stop <= 0:
            raise UsageError("log spacing needs positive bounds")
        return np.geomspace(start, stop, points)
    raise UsageError(f"unknown spacing {kind!r}")


def _targets(cfg: RunConfig):
    out = []
    for words in cfg.get("system", "target", []):
        if len(words) not in (4, 5):
            raise ConfigError("target = SPECIES X Y Z [SPIN]")
        try:
            pos = tuple(float(w) for w in words[1:4])
            spin = float(words[4]) if len(words) == 5 else 0.5
        except ValueError as exc:
            raise ConfigError(f"target: {exc}") from None
        out.append(TargetSpin(words[0], spin, pos))
    return out


def _environment(cfg: RunConfig, B0=(0.0, 0.0, 0.0)):
    return FieldEnvironment(B0=cfg.get("system", "B0", B0), E=cfg.get("system", "E", (0.0, 0.0, 0.0)),
                            strain=cfg.get("system", "strain", (0.0, 0.0, 0.0)),
                            temperature=cfg.get("system", "temperature", 298.0))


def _field_along_nv(cfg, default):
    return float(cfg.get("system", "B0", (0.0, 0.0, default))[2])


def _sequence_args(cfg, kind, N, t=None, tau=None):
    return (cfg.get("sequence", "kind", kind), cfg.get("sequence", "N", N),
            cfg.get("sequence", "t", t), cfg.get("sequence", "tau", tau))


def _tau_points(cfg, start, stop, points):
    """A fixed sequence.tau gives a single evaluation (the sweep building block); otherwise a scan."""
    tau = cfg.get("sequence", "tau")
    if tau is None:
        return _grid(cfg, start, stop, points)
    if tau <= 0:
        raise UsageError("sequence.tau must be positive")
    return np.array([tau])


def _dump(table: Table, seq):
    table.extra["sequence.txt"] = seq.dump()


# --- commands -----------------------------------------------------------------

def cmd_odmr(cfg: RunConfig, opts) -> Table:
    """cw-ODMR spectrum of the NV (+ nitrogen) ground state initialised in m_s = 0."""
    env = _environment(cfg, (0.0, 0.0, 5e-3))
    iso = cfg.get("system", "nitrogen", 14)
    system = SpinSystem(environment=env, nv_nitrogen_isotope=iso)
    h = nv_ground_hamiltonian(system)
    n_nuc = h.shape[0] // 3
    w, v = np.linalg.eigh(h)
    p0 = np.kron(np.diag([0.0, 1.0, 0.0]), np.eye(n_nuc))       # m_s = 0 projector
    pop = np.real(np.einsum("ij,jk,ki->i", v.conj().T, p0, v)) / n_nuc
    sx = np.kron(spin_operators(1)[0], np.eye(n_nuc))
    m = np.abs(v.conj().T @ sx @ v) ** 2
    lines = []
    for i in range(len(w)):
        for j in range(i + 1, len(w)):
            s = m[i, j] * abs(pop[i] - pop[j])
            if s > 1e-6:
                lines.append(((w[j] - w[i]) / TP, s))
    if not lines:
        raise UsageError("no allowed ODMR transitions")
    rabi = cfg.get("odmr", "rabi_hz", 100e3)
    fwhm = spectroscopy.odmr_linewidth(TP * rabi, cfg.get("odmr", "T1_eff", 1e-6), cfg.get("odmr", "T2_eff", 1e-6))
    contrast = cfg.get("odmr", "contrast", 0.2)
    f = np.array([x for x, _ in lines])
    s = np.array([y for _, y in lines])
    s = s / s.max()
    grid = _grid(cfg, f.min() - 10 * fwhm, f.max() + 10 * fwhm, 2001)
    hw = fwhm / 2
    dip = (s[None, :] * hw**2 / ((grid[:, None] - f[None, :]) ** 2 + hw**2)).sum(axis=1)
    sig = 1 - contrast * dip / max(dip.max(), 1.0)
    return Table(["freq_hz", "signal"], list(zip(grid, sig)),
                 {"n_lines": len(lines), "linewidth_hz": fwhm, "f_min_hz": grid[int(np.argmin(sig))]})


def _spectrum(cfg: RunConfig) -> noise.NoiseSpectrum:
    comps = [noise.Lorentzian(B, tc, TP * f0) for B, tc, f0 in cfg.get("noise", "lorentzian", [])]
    comps += [noise.White(x) for x in cfg.get("noise", "white", [])]
    if not comps:
        comps = [noise.Lorentzian(3e-6, 1e-6)]
    return noise.NoiseSpectrum(comps)


def cmd_decohere(cfg: RunConfig, opts) -> Table:
    """Coherence xi(t) = exp(-chi(t)) for the configured noise and sequence."""
    kind, N, _, _ = _sequence_args(cfg, "hahn", 1)
    level = cfg.get("sequence", "level", 1)
    spec = _spectrum(cfg)
    t = _grid(cfg, 0.5e-6, 50e-6, 100)
    if np.any(t <= 0):
        raise UsageError("evolution times must be positive")
    xi = noise.decoherence(spec, kind, t, N, level)
    below = np.nonzero(xi < np.exp(-1))[0]
    if len(below) and below[0] > 0:
        k = below[0]
        l0, l1 = np.log(xi[k - 1]), np.log(xi[k])
        t_e = t[k - 1] + (-1 - l0) / (l1 - l0) * (t[k] - t[k - 1])
    else:
        t_e = np.nan
    tab = Table(["t_s", "xi"], list(zip(t, xi)), {"t_1e_s": t_e, "xi_last": xi[-1]})
    if opts.dump_sequence:
        _dump(tab, build_sequence(kind, t[-1], N, level=level))
    return tab


def cmd_filterfn(cfg: RunConfig, opts) -> Table:
    kind, N, t, tau = _sequence_args(cfg, "cpmg", 8, 10e-6)
    level = cfg.get("sequence", "level", 1)
    seq = build_sequence(kind, t, N, tau=tau, level=level)
    t = seq.duration if t is None else t
    f = _grid(cfg, 0.0, 2e6, 1001)
    w = TP * f
    num = filter_function_numeric(seq, w)
    ref = filter_function_closed(kind, w, t, N, level)
    tab = Table(["f_hz", "F_closed", "F_numeric"], list(zip(f, ref, num)),
                {"f_peak_hz": f[int(np.argmax(np.where(w > 0, num / np.where(w > 0, w, 1) ** 2, 0)))],
                 "max_dev": float(np.max(np.abs(num - ref)))})
    if opts.dump_sequence:
        _dump(tab, seq)
    return tab


def cmd_deer(cfg: RunConfig, opts) -> Table:
    """DEER signal versus RF frequency for a nitroxide-like target with resolved hyperfine lines."""
    Bz = _field_along_nv(cfg, 0.05)
    f_tar = cfg.get("deer", "target_hz", abs(DEFAULT.gamma_e) * abs(Bz) / TP)
    hf = cfg.get("deer", "hyperfine_hz", 42e6)
    lines = cfg.get("deer", "lines", 3)
    if lines < 1:
        raise UsageError("deer.lines must be >= 1")
    c_hz = cfg.get("deer", "coupling_hz")
    if c_hz is None:
        tg = _targets(cfg)
        pos = tg[0].position if tg else (0.0, 0.0, 10e-9)
        coupling = deer.deer_coupling(pos, manifold="sq")
    else:
        coupling = TP * c_hz
    if coupling == 0:
        raise UsageError("target sits at the magic angle; DEER coupling vanishes")
    N = cfg.get("sequence", "N", 8)
    tau = cfg.get("sequence", "tau", np.pi / (abs(coupling) * N))
    offsets = np.arange(lines) - (lines - 1) / 2
    span = (lines + 1) / 2 * hf if lines > 1 else 10 * cfg.get("deer", "rf_rabi_hz", 2e6)
    rf = _grid(cfg, f_tar - span, f_tar + span, 1201)
    sig = deer.deer_rf_spectrum(rf, f_tar, coupling, N, tau, offsets, hf, cfg.get("deer", "rf_rabi_hz", 2e6))
    tab = Table(["rf_hz", "signal"], list(zip(rf, sig)),
                {"coupling_hz": coupling / TP, "tau_s": tau, "signal_min": sig.min(),
                 "rf_min_hz": rf[int(np.argmin(sig))]})
    if opts.dump_sequence:
        _dump(tab, deer.deer_sequence(N, tau, "sq"))
    return tab


def _nucleus(cfg, Bz_default):
    species = cfg.get("nmr", "species", "1H")
    Bz = _field_along_nv(cfg, Bz_default)
    try:
        g = DEFAULT.gamma_n(species)
    except KeyError:
        raise UsageError(f"unknown nuclear species {species!r}") from None
    wl = abs(g * Bz)
    if wl == 0:
        raise UsageError("nuclear Larmor frequency is zero; set system.B0")
    return species, wl


def cmd_nmr_dd(cfg: RunConfig, opts) -> Table:
    """DD-NMR dip of one nucleus versus pulse spacing (exact evolution)."""
    _, wl = _nucleus(cfg, 0.047)
    a_par = TP * cfg.get("nmr", "a_par_hz", 0.0)
    a_perp = TP * cfg.get("nmr", "a_perp_hz", 10e3)
    N = cfg.get("sequence", "N", 32)
    tau0 = nmr.resonance_spacing(wl, a_par)
    taus = _tau_points(cfg, 0.95 * tau0, 1.05 * tau0, 201)
    sig = np.array([nmr.dd_nmr_oracle(wl, [(a_par, a_perp)], N, x) for x in taus])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", nmr.SmallAngleWarning)
        depth = 1 - nmr.dd_nmr_signal([(a_par, a_perp)], N, tau0)
    k = int(np.argmin(sig))
    tab = Table(["tau_s", "signal"], list(zip(taus, sig)),
                {"tau_res_s": tau0, "tau_min_s": taus[k], "signal_min": sig[k], "signal": sig[0],
                 "depth_small_angle": depth, "phi_rad": float(nmr.dd_rotation_angle(a_perp, N, tau0))})
    if opts.dump_sequence:
        _dump(tab, build_sequence("cpmg", N=N, tau=tau0))
    return tab


def cmd_endor(cfg: RunConfig, opts) -> Table:
    _, wl = _nucleus(cfg, 0.047)
    a_par = TP * cfg.get("nmr", "a_par_hz", 20e3)
    if a_par == 0:
        raise UsageError("ENDOR needs a nonzero nmr.a_par_hz")
    N = cfg.get("sequence", "N", 4)
    taus = _tau_points(cfg, 0.0, 2 * np.pi / (abs(a_par) * N), 101)
    ana = [nmr.endor_signal(a_par, N, x) for x in taus]
    ora = [nmr.endor_oracle(wl, a_par, N, x) if x > 0 else 1.0 for x in taus]
    tab = Table(["tau_s", "signal_small_angle", "signal_exact"], list(zip(taus, ana, ora)),
                {"signal_min": min(ora), "tau_min_s": taus[int(np.argmin(ora))]})
    if opts.dump_sequence:
        _dump(tab, build_sequence("endor", N=N, tau=taus[-1]))
    return tab


def cmd_hh(cfg: RunConfig, opts) -> Table:
    """Hartmann-Hahn polarisation transfer at the matched drive."""
    _, wl = _nucleus(cfg, 0.047)
    a = TP * cfg.get("hh", "a_hz", 50e3)
    theta = np.deg2rad(cfg.get("hh", "theta_deg", 60.0))
    if a == 0 or np.sin(theta) == 0:
        raise UsageError("no transverse hyperfine coupling; HH transfer vanishes")
    period = 4 * np.pi / (abs(a) * abs(np.sin(theta)))
    t = _grid(cfg, 0.0, cfg.get("hh", "t_s", period), 101)
    we = nmr.hh_matched_drive(wl, a, theta)
    ana = [nmr.hh_transition(a, theta, x) for x in t]
    ora = nmr.hh_oracle(a, theta, wl, we, t)
    return Table(["t_s", "p_analytic", "p_exact"], list(zip(t, ana, ora)),
                 {"rabi_matched_hz": we / TP, "p_max": float(np.max(ora)),
                  "max_dev": float(np.max(np.abs(np.array(ana) - ora)))})


def cmd_relaxometry(cfg: RunConfig, opts) -> Table:
    """Gamma_1 of both NV transitions across a field sweep with a g = 2 target line at |gamma_e| B0."""
    Bc = noise.crossover_field()
    grid = _grid(cfg, 0.9 * Bc, 1.1 * Bc, 201)
    Bt = cfg.get("relax", "target_B", 1e-6)
    tc = cfg.get("relax", "target_tau_c", 1e-7)

    def spec_at(b):
        return noise.NoiseSpectrum([noise.Lorentzian(Bt, tc, abs(DEFAULT.gamma_e) * b)])

    plus, minus = noise.gamma1_vs_field(grid, spec_at, TP * cfg.get("relax", "gamma2_hz", 1e6),
                                        cfg.get("relax", "gamma1_int_hz", 0.0))
    t = cfg.get("relax", "t", 100e-6)
    p0 = noise.relaxometry_population(t, plus, minus)
    low = validation.lower_branch(plus, minus)
    return Table(["B0_T", "gamma1_plus", "gamma1_minus", "P0"], list(zip(grid, plus, minus, p0)),
                 {"B_cross_T": Bc, "B_peak_T": grid[int(np.argmax(low))], "gamma1_peak": float(low.max())})


def cmd_zf_epr(cfg: RunConfig, opts) -> Table:
    ap = TP * cfg.get("zfepr", "A_perp_hz", 25e6)
    al = TP * cfg.get("zfepr", "A_par_hz", 130e6)
    r = spectroscopy.zf_epr(ap, al)
    rows = [(f"level:{k}", v / TP, 0.0) for k, v in r["levels"].items()]
    rows += [("transition", d / TP, s) for d, s in r["transitions"]]
    rows += [("rabi", x / TP, 0.0) for x in r["rabi"]]
    sc = {f"transition_{i}_hz": d / TP for i, (d, _) in enumerate(r["transitions"])}
    return Table(["item", "freq_hz", "strength"], rows, {"n_transitions": len(r["transitions"]), **sc})


def cmd_correlate(cfg: RunConfig, opts) -> Table:
    f = cfg.get("correlate", "f_hz", 500e3)
    amp = cfg.get("correlate", "amplitude", 1.0)
    dt = _grid(cfg, 0.0, 40 / max(abs(f), 1.0), 401)
    sig = spectroscopy.correlation_signal(TP * f, dt, amp)
    if len(dt) > 2 and np.allclose(np.diff(dt), dt[1] - dt[0]):
        fr, a = spectroscopy.correlation_spectrum(dt, sig)
        f_pk = fr[int(np.argmax(a))]
    else:
        f_pk = np.nan
    tab = Table(["delta_t_s", "signal"], list(zip(dt, sig)), {"f_peak_hz": f_pk})
    if opts.dump_sequence:
        N, tau = cfg.get("sequence", "N", 8), cfg.get("sequence", "tau", 1 / (2 * max(abs(f), 1.0)))
        _dump(tab, build_sequence("correlation", N=N, tau=tau, delta_t=dt[-1]))
    return tab


def cmd_qdyne(cfg: RunConfig, opts) -> Table:
    """Synthetic Qdyne record: one-sided spectrum of the photon counts."""
    f_LO = cfg.get("qdyne", "f_LO", validation.QDYNE["f_LO"])
    t_s = cfg.get("qdyne", "t_s", validation.QDYNE["t_s"])
    f_sig = cfg.get("qdyne", "f_signal", f_LO + 10.0)
    B_ac = cfg.get("qdyne", "B_ac", validation._qdyne_B(t_s))
    T = cfg.get("qdyne", "T_exp", 10.0)
    photon = (cfg.get("qdyne", "n0", 3.0), cfg.get("qdyne", "n1", 2.1))
    try:
        met.PhotonModel(*photon)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    r = qdyne.qdyne_simulate(f_sig, B_ac, t_s, f_LO, T, photon, cfg.seed, cfg.get("qdyne", "phase", 0.0))
    return Table(["freq_hz", "amplitude"], list(zip(r.freqs, r.spectrum)),
                 {"delta_f_hz": r.record.delta_f, "f_peak_hz": r.f_peak, "f_fit_hz": r.f_fit,
                  "f_err_hz": r.f_err, "n_shots": r.record.n_shots})


def cmd_nmr_2d(cfg: RunConfig, opts) -> Table:
    offs = cfg.get("nmr2d", "offset_hz", []) or [10e3, 23e3]
    if len(offs) != 2:
        raise UsageError("nmr2d needs exactly two offset_hz entries")
    J = TP * cfg.get("nmr2d", "J_hz", 3e3)
    n = cfg.get("nmr2d", "points", 64)
    dwell = cfg.get("nmr2d", "dwell", 10e-6)
    if n < 2 or dwell <= 0:
        raise UsageError("nmr2d needs points >= 2 and a positive dwell")
    t = np.arange(n) * dwell
    f1, f2, S, _ = nmr.two_d_nmr([TP * o for o in offs], J, t, t)
    rows = [(a, b, S[i, j]) for i, a in enumerate(f1) for j, b in enumerate(f2)]
    cross = max(nmr.peak_amplitude(f1, f2, S, offs[0], offs[1]), nmr.peak_amplitude(f1, f2, S, offs[1], offs[0]))
    diag = max(nmr.peak_amplitude(f1, f2, S, o, o) for o in offs)
    return Table(["f1_hz", "f2_hz", "amplitude"], rows, {"cross_peak": cross, "diagonal_peak": diag})


def _budget(cfg: RunConfig, profile_name):
    keys = ("T_accu", "T_ini", "T_read", "xi", "F_read", "F_ini", "d", "P")
    given = {k: cfg.get("budget", k) for k in keys if cfg.get("budget", k) is not None}
    if cfg.get("budget", "target") is not None:
        try:
            given["gamma_tar"] = DEFAULT.gamma_n(cfg.get("budget", "target"))
        except KeyError:
            raise UsageError(f"unknown target species {cfg.get('budget', 'target')!r}") from None
    n0, n1 = cfg.get("budget", "n0"), cfg.get("budget", "n1")
    if (n0 is None) != (n1 is None):
        raise UsageError("budget.n0 and budget.n1 go together")
    if n0 is not None and "F_read" not in given:
        given["F_read"] = met.readout_fidelity_counts(n0, n1)
    if profile_name:
        try:
            return met.profile(profile_name, **given)
        except KeyError:
            raise UsageError(f"unknown profile {profile_name!r}; known: {', '.join(met.PROFILES)}") from None
    if "T_accu" not in given:
        raise UsageError("sensitivity needs --profile or budget.T_accu")
    return met.SensitivityBudget(**given)


def cmd_sensitivity(cfg: RunConfig, opts) -> Table:
    rows = met.sensitivity_report(_budget(cfg, opts.profile))
    return Table(["quantity", "value", "unit"], rows, {name: v for name, v, _ in rows})


COMMANDS = {
    "odmr": cmd_odmr,
    "decohere": cmd_decohere,
    "filterfn": cmd_filterfn,
    "deer": cmd_deer,
    "nmr-dd": cmd_nmr_dd,
    "endor": cmd_endor,
    "hh": cmd_hh,
    "relaxometry": cmd_relaxometry,
    "zf-epr": cmd_zf_epr,
    "correlate": cmd_correlate,
    "qdyne": cmd_qdyne,
    "nmr-2d": cmd_nmr_2d,
    "sensitivity": cmd_sensitivity,
}


# --- sweep ------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepAxis:
    section: str
    key: str
    index: int | None
    values: np.ndarray

    @property
    def label(self) -> str:
        return f"{self.section}.{self.key}" + ("" if self.index is None else f"[{self.index}]")


def parse_axis(words) -> SweepAxis:
    if len(words) != 5:
        raise ConfigError("sweep axis = SECTION.KEY[i] linear|log START STOP POINTS")
    path, spacing, a, b, n = words
    try:
        start, stop, points = float(a), float(b), int(n)
    except ValueError as exc:
        raise ConfigError(f"sweep axis: {exc}") from None
    if "." not in path:
        raise ConfigError(f"sweep path {path!r} needs SECTION.KEY")
    section, key = path.split(".", 1)
    index = None
    if key.endswith("]") and "[" in key:
        key, idx = key[:-1].split("[", 1)
        try:
            index = int(idx)
        except ValueError:
            raise ConfigError(f"bad index in {path!r}") from None
    if section not in SCHEMA or key not in SCHEMA[section]:
        raise ConfigError(f"unknown sweep parameter {path!r}")
    if SCHEMA[section][key][1]:
        raise ConfigError(f"repeated key {path!r} cannot be swept")
    return SweepAxis(section, key, index, make_grid(spacing, start, stop, points))


def _apply(cfg: RunConfig, axis: SweepAxis, value: float):
    raw = repr(float(value))
    if axis.index is None:
        cfg.set(axis.section, axis.key, raw)
        return
    cur = list(cfg.get(axis.section, axis.key, (0.0, 0.0, 0.0)))
    if not 0 <= axis.index < len(cur):
        raise UsageError(f"index out of range in {axis.label}")
    cur[axis.index] = float(value)
    cfg.set(axis.section, axis.key, " ".join(repr(x) for x in cur))


def _threads() -> int:
    raw = os.environ.get("NV_SENSE_THREADS")
    if raw is None:
        return min(4, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise UsageError("NV_SENSE_THREADS must be an integer") from None
    if n < 1:
        raise UsageError("NV_SENSE_THREADS must be >= 1")
    return n


def cmd_sweep(cfg: RunConfig, opts) -> Table:
    inner = cfg.get("sweep", "command")
    if inner not in COMMANDS:
        raise UsageError(f"sweep.command must be one of: {', '.join(COMMANDS)}")
    axes = [parse_axis(w) for w in cfg.get("sweep", "axis", [])]
    if not 1 <= len(axes) <= 2:
        raise UsageError("a sweep needs one or two axes")
    points = list(itertools.product(*[a.values for a in axes]))
    sub = argparse.Namespace(**{**vars(opts), "dump_sequence": False})

    def run(pt):
        c = cfg.copy()
        for ax, v in zip(axes, pt):
            _apply(c, ax, v)
        return COMMANDS[inner](c, sub).scalars

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        results = list(pool.map(run, points))      # map keeps grid order
    names = list(results[0])
    rows = [list(pt) + [r.get(n, np.nan) for n in names] for pt, r in zip(points, results)]
    return Table([a.label for a in axes] + names, rows)


# --- validate --------------------------------------------------------------------

def cmd_validate(cfg: RunConfig, opts) -> Table:
    res = validation.run_suite(quick=opts.quick, seed=cfg.seed)
    for r in res:
        tag = {"pass": "PASS", "fail": "FAIL", "deviation": "FAIL (documented deviation)"}[r.status]
        print(f"{tag} {r.name} value={r.value:.6g}", file=sys.stderr)
    tab = Table(["check", "value", "reference", "tolerance", "status"],
                [(r.name, r.value, r.reference, r.tolerance, r.status) for r in res])
    tab.scalars["failures"] = sum(r.status == "fail" for r in res)
    return tab


ALL = list(COMMANDS) + ["sweep", "validate"]


# --- entry point --------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("parse", message, 2)


def _fail(kind: str, message: str, status: int):
    msg = " ".join(str(message).split())
    print(f"nv-sense: error[{kind}]: {msg}", file=sys.stderr)
    raise SystemExit(status)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nv-sense", description="NV-centre sensing simulations and calculators.")
    p.add_argument("--version", action="version", version=f"nv-sense {__version__}")
    p.add_argument("command", choices=ALL)
    p.add_argument("--config", metavar="PATH")
    p.add_argument("--profile", metavar="NAME")
    p.add_argument("--out", metavar="DIR")
    p.add_argument("--seed", type=int)
    p.add_argument("--dump-sequence", action="store_true")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override one config entry")
    return p


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    for item in args.set:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        path, value = item.split("=", 1)
        section, key = path.strip().split(".", 1)
        cfg.set(section, key, value.strip())
    if args.seed is not None:
        cfg.set("run", "seed", str(args.seed))
    return cfg


def _emit(cfg: RunConfig, args, table: Table):
    out = args.out or cfg.get("output", "dir")
    prefix = cfg.get("output", "prefix", "")
    if out is None:
        sys.stdout.write(table.csv())
        for text in table.extra.values():
            sys.stderr.write(text)
        return
    os.makedirs(out, exist_ok=True)
    files = {f"{prefix}{args.command}.csv": table.csv()}
    files.update({f"{prefix}{args.command}_{k}": v for k, v in table.extra.items()})
    for name, text in files.items():
        with open(os.path.join(out, name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = cmd_sweep if args.command == "sweep" else cmd_validate if args.command == "validate" \
        else COMMANDS[args.command]
    try:
        cfg = _load(args)
        table = handler(cfg, args)
        _emit(cfg, args, table)
    except ConfigError as exc:
        _fail("parse", exc, 2)
    except (QuadratureError, np.linalg.LinAlgError, FloatingPointError, OverflowError) as exc:
        _fail("numerical", exc, 4)
    except RuntimeError as exc:                # scipy fit/solver non-convergence
        _fail("numerical", exc, 4)
    except (UsageError, ValueError, KeyError) as exc:
        _fail("validation", exc.args[0] if exc.args else exc, 3)
    except OSError as exc:
        _fail("validation", f"{exc.filename}: {exc.strerror}", 3)
    if args.command == "validate" and table.scalars["failures"]:
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
