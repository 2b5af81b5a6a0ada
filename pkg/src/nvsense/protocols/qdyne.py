"""Quantum heterodyne (Qdyne) records: synthesis, spectrum and frequency fit."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import curve_fit

from ..constants import DEFAULT

CHUNK = 1 << 16


@dataclass
class QdyneRecord:
    f_LO: float
    t_L: float
    phases: np.ndarray
    counts: np.ndarray
    T_exp: float
    seed: int
    delta_f: float

    @property
    def n_shots(self) -> int:
        return len(self.counts)


@dataclass
class QdyneResult:
    record: QdyneRecord
    freqs: np.ndarray
    spectrum: np.ndarray
    f_peak: float
    f_fit: float
    f_err: float


def aliased_frequency(f_signal: float, f_LO: float) -> float:
    """Beat frequency folded into [0, f_LO/2]."""
    r = np.mod(f_signal, f_LO)
    return float(min(r, f_LO - r))


def qdyne_phases(f_signal, B_ac, t_s, f_LO, n_shots, phase=0.0, const=DEFAULT):
    """Phi_n = (2 |gamma_e| B_ac t_s / pi) cos(2 pi f_signal n t_L + phase)."""
    n = np.arange(n_shots)
    amp = 2 * abs(const.gamma_e) * B_ac * t_s / np.pi
    # reduce f_signal modulo f_LO first to keep the argument small
    return amp * np.cos(2 * np.pi * np.mod(f_signal, f_LO) / f_LO * n + phase)


def qdyne_record(f_signal: float, B_ac: float, t_s: float, f_LO: float, T_exp: float,
                 photon=(3.0, 2.1), seed: int = 0, phase: float = 0.0, const=DEFAULT) -> QdyneRecord:
    """Synthetic photon-count record.

    Each shot lands in the bright state with p = (1 - sin Phi_n)/2 and then
    emits Poisson(n0) photons, otherwise Poisson(n1). ``photon`` is an
    (n0, n1) pair or any object with ``n0``/``n1``.
    """
    n0, n1 = (photon.n0, photon.n1) if hasattr(photon, "n0") else photon
    t_L = 1 / f_LO
    if t_s > t_L:
        raise ValueError("t_s must not exceed the sampling period")
    n_shots = int(np.floor(T_exp * f_LO + 1e-9))
    if n_shots < 4:
        raise ValueError("record too short")
    phi = qdyne_phases(f_signal, B_ac, t_s, f_LO, n_shots, phase, const)
    p = 0.5 * (1 - np.sin(phi))
    counts = np.empty(n_shots, dtype=np.int64)
    for c, start in enumerate(range(0, n_shots, CHUNK)):
        sl = slice(start, min(start + CHUNK, n_shots))
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), c]))
        bright = rng.random(sl.stop - sl.start) < p[sl]
        counts[sl] = rng.poisson(np.where(bright, n0, n1))
    return QdyneRecord(f_LO, t_L, phi, counts, float(T_exp), int(seed), aliased_frequency(f_signal, f_LO))


def qdyne_spectrum(record: QdyneRecord):
    """One-sided |FFT| of the mean-subtracted counts over [0, f_LO/2]."""
    x = record.counts - record.counts.mean()
    return np.fft.rfftfreq(record.n_shots, record.t_L), np.abs(np.fft.rfft(x))


def _fit_frequency(record: QdyneRecord, f0: float):
    t = np.arange(record.n_shots) * record.t_L
    y = record.counts.astype(float)

    def model(t, f, a, b, c):
        return a * np.cos(2 * np.pi * f * t) + b * np.sin(2 * np.pi * f * t) + c

    a0 = 2 * np.mean((y - y.mean()) * np.cos(2 * np.pi * f0 * t))
    b0 = 2 * np.mean((y - y.mean()) * np.sin(2 * np.pi * f0 * t))
    popt, pcov = curve_fit(model, t, y, p0=[f0, a0, b0, y.mean()])
    return float(popt[0]), float(np.sqrt(pcov[0, 0]))


def qdyne_simulate(f_signal: float, B_ac: float, t_s: float, f_LO: float, T_exp: float,
                   photon=(3.0, 2.1), seed: int = 0, phase: float = 0.0, fit: bool = True,
                   const=DEFAULT) -> QdyneResult:
    rec = qdyne_record(f_signal, B_ac, t_s, f_LO, T_exp, photon, seed, phase, const)
    f, s = qdyne_spectrum(rec)
    k = int(np.argmax(s[1:])) + 1 if len(s) > 1 else 0
    f_peak = float(f[k])
    f_fit, f_err = (np.nan, np.nan)
    if fit and rec.delta_f > 0:
        f_fit, f_err = _fit_frequency(rec, f_peak)
    return QdyneResult(rec, f, s, f_peak, f_fit, f_err)


def precision_scaling(T_grid, f_signal: float, B_ac: float, t_s: float, f_LO: float,
                      photon=(3.0, 2.1), seed: int = 0):
    """Fitted frequency uncertainty at each T_exp and the log-log slope."""
    errs = np.array([qdyne_simulate(f_signal, B_ac, t_s, f_LO, T, photon, seed + i).f_err
                     for i, T in enumerate(T_grid)])
    slope = np.polyfit(np.log(T_grid), np.log(errs), 1)[0]
    return errs, float(slope)
