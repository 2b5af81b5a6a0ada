"""Zero-field EPR, cw-ODMR linewidth and correlation spectroscopy."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from ..spin_core import spin_operators


@dataclass(frozen=True)
class DriveConfig:
    omega_nv: float             # rad/s
    omega_tar: float = 0.0
    detuning_nv: float = 0.0
    detuning_tar: float = 0.0


def zf_levels(A_perp: float, A_par: float) -> dict:
    return {"S0": -A_perp / 2 - A_par / 4,
            "T0": A_perp / 2 - A_par / 4,
            "T+-": A_par / 4}


def zf_hamiltonian(A_perp: float, A_par: float, rotation=None) -> np.ndarray:
    """S.A.I for an electron and spin-1/2 nucleus, tensor diag(A_perp, A_perp, A_par) rotated by ``rotation``."""
    A = np.diag([A_perp, A_perp, A_par]).astype(float)
    if rotation is not None:
        R = rotation.as_matrix() if isinstance(rotation, Rotation) else np.asarray(rotation)
        A = R @ A @ R.T
    s = spin_operators(0.5)
    return sum(A[i, j] * np.kron(s[i], s[j]) for i in range(3) for j in range(3))


def zf_transitions(h: np.ndarray, tol: float = 1e-9):
    """Electron-spin dipole transitions of ``h``: sorted (delta_omega, strength).

    Degenerate levels are grouped, so the strengths do not depend on the
    basis chosen inside a degenerate subspace.
    """
    w, v = np.linalg.eigh(h)
    scale = max(np.ptp(w), 1e-300)
    groups = []
    for k, x in enumerate(w):
        if groups and abs(x - w[groups[-1][0]]) <= tol * scale:
            groups[-1].append(k)
        else:
            groups.append([k])
    ops = [np.kron(o, np.eye(2)) for o in spin_operators(0.5)]
    out = []
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            vi, vj = v[:, groups[i]], v[:, groups[j]]
            strength = sum(np.sum(np.abs(vi.conj().T @ o @ vj) ** 2) for o in ops)
            if strength > tol:
                out.append((float(np.mean(w[groups[j]]) - np.mean(w[groups[i]])), float(strength)))
    return sorted(out)


def zf_epr(A_perp: float, A_par: float) -> dict:
    """Zero-field eigenlevels, allowed transitions and matching Rabi frequencies Omega = 2 dw."""
    lv = zf_levels(A_perp, A_par)
    trans = zf_transitions(zf_hamiltonian(A_perp, A_par))
    return {"levels": lv, "transitions": trans,
            "rabi": [2 * abs(d) for d, _ in trans]}


def random_orientations(n: int, seed: int = 0):
    return Rotation.random(n, random_state=np.random.default_rng(seed))


def zf_peak_positions(A_perp: float, A_par: float, rotation=None) -> np.ndarray:
    return np.array([d for d, _ in zf_transitions(zf_hamiltonian(A_perp, A_par, rotation))])


def odmr_linewidth(omega_e: float, T1_eff: float, T2_eff: float) -> float:
    """cw-ODMR FWHM in Hz for Rabi frequency omega_e (rad/s)."""
    return float(np.sqrt((1 / (np.pi * T2_eff)) ** 2 + 4 * T1_eff / T2_eff * (omega_e / (2 * np.pi)) ** 2))


def correlation_signal(omega, delta_t, amplitude: float = 1.0):
    """amplitude/2 cos(omega delta_t)."""
    return 0.5 * amplitude * np.cos(np.multiply(omega, delta_t))


def correlation_spectrum(delta_t, signal):
    """One-sided FFT magnitude of an evenly sampled correlation series."""
    delta_t = np.asarray(delta_t, dtype=float)
    s = np.asarray(signal, dtype=float)
    amp = np.abs(np.fft.rfft(s - s.mean()))
    return np.fft.rfftfreq(len(s), delta_t[1] - delta_t[0]), amp
