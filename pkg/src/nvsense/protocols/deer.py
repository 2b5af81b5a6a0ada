"""DEER signal and its density-matrix reference."""
from __future__ import annotations

import numpy as np

from ..constants import DEFAULT
from ..oracle import run_sequence
from ..sequences import PI, build_sequence, pulse
from ..spin_core import SpinSystem, TargetSpin, dipolar_coupling, embed, spin_operators


def deer_signal(couplings, N: int, tau: float) -> float:
    """1/2 [1 + prod cos(H_n N tau)]; couplings are the sensed phase rates (rad/s)."""
    c = np.asarray(couplings, dtype=float)
    return float(0.5 * (1 + np.prod(np.cos(c * N * tau))))


def deer_coupling(r_vec, gamma_tar: float | None = None, manifold: str = "dq",
                  axis=(0.0, 0.0, 1.0), const=DEFAULT) -> float:
    """Sensed DEER coupling from geometry.

    The secular NV-target term is H_dip S_z S_z,tar. A double-quantum NV
    superposition (m_s = +-1) accrues phase at H_dip; a single-quantum one
    (m_s = 0, +1) at H_dip/2.
    """
    g = const.gamma_e if gamma_tar is None else gamma_tar
    _, h = dipolar_coupling(r_vec, const.gamma_nv, g, axis=axis, const=const)
    if manifold == "dq":
        return h
    if manifold == "sq":
        return h / 2
    raise ValueError("manifold must be 'sq' or 'dq'")


def deer_system(dipolar, dim_cap: int | None = None):
    """System and rotating-frame Hamiltonian sum_n H_n S_z S_z,n for electron targets."""
    targets = [TargetSpin("electron", hyperfine_override=(float(h), 0.0, 0.0)) for h in dipolar]
    kw = {} if dim_cap is None else {"dim_cap": dim_cap}
    system = SpinSystem(targets=targets, **kw)
    dims = system.dims
    sz = embed(spin_operators(1)[2], 0, dims)
    h = np.zeros((system.dim,) * 2, dtype=complex)
    for k, hk in enumerate(dipolar, start=1):
        h += hk * sz @ embed(spin_operators(0.5)[2], k, dims)
    return system, h


def deer_sequence(N: int, tau: float, manifold: str = "dq"):
    if manifold == "sq":
        return build_sequence("deer", N=N, tau=tau, channel="mw")
    seq = build_sequence("deer", N=N, tau=tau, channel="mw_dq")
    # prepare |+1> before opening the double-quantum superposition
    seq.elements.insert(0, pulse("mw", "x", PI))
    return seq


def deer_oracle(dipolar, N: int, tau: float, manifold: str = "dq", readout: str = "real") -> float:
    """Exact DEER evolution for secular dipolar couplings H_dip (rad/s)."""
    system, h = deer_system(dipolar)
    return run_sequence(system, deer_sequence(N, tau, manifold), readout, hamiltonian=h)


def dressed_matching(omega_nv: float, omega_tar: float, tol: float = 0.0):
    """Hartmann-Hahn-type matching of two driven electron spins."""
    det = omega_nv - omega_tar
    return abs(det) <= tol, det


def rf_flip_probability(detuning, rabi: float):
    """Inversion probability of a nominal pi pulse (duration pi/rabi) at ``detuning`` (rad/s)."""
    w = np.hypot(rabi, detuning)
    return (rabi / w) ** 2 * np.sin(w * np.pi / (2 * rabi)) ** 2


def deer_rf_spectrum(rf_hz, f_target_hz: float, coupling: float, N: int, tau: float,
                     line_offsets_hz=(-1.0, 0.0, 1.0), hyperfine_hz: float = 0.0,
                     rabi_hz: float = 2e6, weights=None):
    """DEER signal versus RF frequency for a target with resolved hyperfine lines.

    Each line (centre f_target + m*hyperfine for m in ``line_offsets_hz``)
    carries a population weight; a target on that line is inverted by the RF
    pulses with probability p(rf) and then contributes cos(coupling N tau),
    otherwise 1.
    """
    rf = np.asarray(rf_hz, dtype=float)
    m = np.asarray(line_offsets_hz, dtype=float)
    w = np.full(len(m), 1 / len(m)) if weights is None else np.asarray(weights, dtype=float)
    c = np.cos(coupling * N * tau)
    acc = np.zeros_like(rf)
    for mk, wk in zip(m, w):
        p = rf_flip_probability(2 * np.pi * (rf - f_target_hz - mk * hyperfine_hz), 2 * np.pi * rabi_hz)
        acc += wk * (1 - p + p * c)
    return 0.5 * (1 + acc)
