"""Brute-force reference engine: exact evolution of small spin systems.

States are either state vectors (1-D arrays) or density matrices (2-D).
Pulses are ideal and instantaneous.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import signal as sps

from .spin_core import (DimensionError, SpinSystem, assert_hermitian, embed,
                        spin_operators)

# NV basis index of each m_s level
NV_INDEX = {+1: 0, 0: 1, -1: 2}

# channel -> (level a, level b) on the NV, the first being the "pole" state
NV_CHANNELS = {
    "mw": (0, +1),
    "mw-": (0, -1),
    "mw_dq": (+1, -1),
}


def is_density(state: np.ndarray) -> bool:
    return state.ndim == 2


def to_density(state: np.ndarray) -> np.ndarray:
    return state if is_density(state) else np.outer(state, state.conj())


def unitary(hamiltonian: np.ndarray, duration: float) -> np.ndarray:
    """exp(-i H t) via Hermitian eigendecomposition."""
    assert_hermitian(hamiltonian)
    if duration < 0:
        raise ValueError("duration must be nonnegative")
    w, v = np.linalg.eigh(hamiltonian)
    return (v * np.exp(-1j * w * duration)) @ v.conj().T


def apply_unitary(state: np.ndarray, u: np.ndarray) -> np.ndarray:
    if is_density(state):
        return u @ state @ u.conj().T
    return u @ state


def propagate(state: np.ndarray, hamiltonian: np.ndarray, duration: float) -> np.ndarray:
    return apply_unitary(state, unitary(hamiltonian, duration))


def rotation(op_x: np.ndarray, op_y: np.ndarray, axis_deg: float, angle: float) -> np.ndarray:
    """exp(-i angle (cos(a) X + sin(a) Y)) for spin operators X, Y."""
    a = np.deg2rad(axis_deg)
    gen = np.cos(a) * op_x + np.sin(a) * op_y
    return unitary(gen, angle)


def _two_level_ops(dim: int, i: int, j: int):
    """Pseudo spin-1/2 operators on levels i (up) and j (down) of a dim-level space."""
    x = np.zeros((dim, dim), dtype=complex)
    y = np.zeros_like(x)
    x[i, j] = x[j, i] = 0.5
    y[i, j], y[j, i] = -0.5j, 0.5j
    return x, y


def pulse_unitary(system_dims, channel: str, axis_deg: float, angle: float) -> np.ndarray:
    """Unitary of an ideal pulse on ``channel``.

    NV channels: ``mw`` (0 <-> +1), ``mw-`` (0 <-> -1), ``mw_dq`` (+1 <-> -1).
    Target channels: ``rf:<k>`` for target k (0-based); ``rf:all`` rotates
    every target.
    """
    dims = list(system_dims)
    if channel in NV_CHANNELS:
        a, b = NV_CHANNELS[channel]
        x, y = _two_level_ops(3, NV_INDEX[a], NV_INDEX[b])
        return embed(rotation(x, y, axis_deg, angle), 0, dims)
    if channel.startswith("rf:"):
        key = channel[3:]
        idx = range(1, len(dims)) if key == "all" else [int(key) + 1]
        u = np.eye(int(np.prod(dims)), dtype=complex)
        for k in idx:
            if not 1 <= k < len(dims):
                raise ValueError(f"unknown channel {channel!r}")
            s = (dims[k] - 1) / 2
            sx, sy, _ = spin_operators(s)
            u = embed(rotation(sx, sy, axis_deg, angle), k, dims) @ u
        return u
    raise ValueError(f"unknown channel {channel!r}")


def apply_pulse(state: np.ndarray, channel: str, axis_deg: float, angle: float,
                dims=(3,)) -> np.ndarray:
    return apply_unitary(state, pulse_unitary(dims, channel, axis_deg, angle))


def nv_initial_state(dims, nuclear_rho: Optional[np.ndarray] = None) -> np.ndarray:
    """NV in |0>, targets maximally mixed unless ``nuclear_rho`` is given."""
    nv = np.zeros((3, 3), dtype=complex)
    nv[NV_INDEX[0], NV_INDEX[0]] = 1.0
    rest = int(np.prod(dims[1:], dtype=int))
    if nuclear_rho is None:
        nuclear_rho = np.eye(rest) / rest
    return np.kron(nv, nuclear_rho)


def nv_reduced(rho: np.ndarray, dims) -> np.ndarray:
    rest = int(np.prod(dims[1:], dtype=int))
    r = rho.reshape(3, rest, 3, rest)
    return np.einsum("ikjk->ij", r)


def _pole_and_partner(channel: str):
    a, b = NV_CHANNELS[channel]
    return NV_INDEX[a], NV_INDEX[b]


def _bloch(rho2: np.ndarray) -> np.ndarray:
    """Bloch vector of a 2x2 block ordered (pole, partner); +z is the pole."""
    return np.array([2 * rho2[0, 1].real, -2 * rho2[0, 1].imag, (rho2[0, 0] - rho2[1, 1]).real])


def run_sequence(system: SpinSystem, sequence, readout: str = "real",
                 hamiltonian: Optional[np.ndarray] = None,
                 initial: Optional[np.ndarray] = None,
                 time_dependent: Optional[Callable[[float], np.ndarray]] = None) -> float:
    """Evolve ``sequence`` exactly and return p_real or p_img.

    The sequence's last pulse on its sensing channel is the readout pulse and
    is replaced: the readout rotation is chosen from the ideal (pulse-only)
    trajectory so that p = (1 + Re xi)/2 or (1 + Im xi)/2 with
    xi = e^{-i phi} and phi = int y(t) (E_partner - E_pole) dt, the
    toggling-frame phase with y = +1 on the first free segment. The result
    therefore does not depend on the pi-pulse parity.

    ``hamiltonian`` defaults to a zero matrix (pure pulse action) when not
    supplied; pass the rotating-frame Hamiltonian of the protocol.
    """
    if readout not in ("real", "imag"):
        raise ValueError("readout must be 'real' or 'imag'")
    dims = system.dims
    dim = int(np.prod(dims))
    if dim > system.dim_cap:
        raise DimensionError("dimension cap exceeded")
    h = np.zeros((dim, dim), dtype=complex) if hamiltonian is None else hamiltonian
    if h.shape != (dim, dim):
        raise ValueError("Hamiltonian dimension does not match system")
    channel = sequence.sensing_channel
    body = sequence.body_elements()

    rho = nv_initial_state(dims) if initial is None else to_density(initial)
    ideal = nv_initial_state([3])
    t_now = 0.0
    n_flip = 0
    opened = False
    cache = {}
    for el in body:
        if el.kind == "pulse":
            key = (el.channel, el.axis, el.angle)
            if key not in cache:
                cache[key] = pulse_unitary(dims, *key)
            rho = apply_unitary(rho, cache[key])
            if el.channel in NV_CHANNELS:
                ideal = apply_unitary(ideal, pulse_unitary([3], *key))
            if el.channel == channel and np.isclose(el.angle, np.pi):
                n_flip += opened
            opened = opened or el.channel == channel
        else:
            if el.duration < 0:
                raise ValueError("negative wait")
            if time_dependent is None:
                rho = propagate(rho, h, el.duration)
            else:
                rho = propagate(rho, h + time_dependent(t_now + el.duration / 2), el.duration)
            t_now += el.duration

    i, j = _pole_and_partner(channel)
    red = nv_reduced(rho, dims)
    red_ideal = ideal
    blk = red[np.ix_([i, j], [i, j])]
    blk_ideal = red_ideal[np.ix_([i, j], [i, j])]
    v_ideal = _bloch(blk_ideal)
    v = _bloch(blk)
    pop = blk[0, 0].real + blk[1, 1].real
    # the ideal vector lies on the equator; define xi relative to it
    e_re = v_ideal / np.linalg.norm(v_ideal)
    # rotating the partner phase by -phi turns the vector by -phi about +z
    e_im = np.cross([0.0, 0.0, 1.0], e_re)
    # each pi on the sensing channel swaps pole and partner, reversing the phase sign
    comp = v @ (e_re if readout == "real" else (-1) ** n_flip * e_im)
    # population left outside the two levels counts as partner (dark) population
    return float(0.5 * (pop + comp))


@dataclass
class OUProcess:
    """Ornstein-Uhlenbeck field offset (tesla) with correlation time tau_c."""

    variance: float
    tau_c: float

    def sample(self, rng: np.random.Generator, n_steps: int, dt: float) -> np.ndarray:
        rho = np.exp(-dt / self.tau_c)
        sig = np.sqrt(self.variance)
        eps = rng.standard_normal(n_steps)
        eps[0] /= np.sqrt(1 - rho**2)     # stationary start
        x = sps.lfilter([sig * np.sqrt(1 - rho**2)], [1.0, -rho], eps)
        return x


@dataclass
class NoiseTrajectory:
    samples: np.ndarray
    dt: float
    tau_c: float
    variance: float
    seed: int


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), int(index)]))


def sample_trajectory(process: OUProcess, n_steps: int, dt: float, seed: int, index: int) -> NoiseTrajectory:
    x = process.sample(trajectory_rng(seed, index), n_steps, dt)
    return NoiseTrajectory(x, dt, process.tau_c, process.variance, seed)


def _segment_integral(cum: np.ndarray, dt: float, times: np.ndarray) -> np.ndarray:
    """Interpolate cumulative integrals (n_traj x n_steps+1) at ``times``."""
    pos = times / dt
    k = np.clip(np.floor(pos).astype(int), 0, cum.shape[1] - 2)
    frac = pos - k
    return cum[:, k] * (1 - frac) + cum[:, k + 1] * frac


def monte_carlo_coherence(sequence_factory, t_grid, gamma: float, process: Optional[OUProcess] = None,
                          white_level: float = 0.0, n_traj: int = 10_000, seed: int = 0,
                          dt: Optional[float] = None, chunk: int = 2000):
    """Monte Carlo estimate of xi(t) = <exp(-i phi)> under stochastic B_z noise.

    ``sequence_factory(t)`` returns a PulseSequence of total duration t built
    from pi pulses; its toggling function weights the frequency offset
    gamma*B(s). ``process`` is an OU field process (tesla) and ``white_level``
    a white frequency-noise level S0 (rad^2/s). Each trajectory draws from its
    own generator seeded by (seed, index).

    Returns (xi, stderr) arrays over ``t_grid``.
    """
    if n_traj < 100:
        raise ValueError("n_traj must be >= 100")
    t_grid = np.asarray(t_grid, dtype=float)
    t_max = t_grid.max()
    if dt is None:
        dt = process.tau_c / 20 if process is not None else t_max / 2000
    if process is not None and dt > process.tau_c / 20 * (1 + 1e-12):
        raise ValueError("dt must be <= tau_c/20")
    n_steps = int(np.ceil(t_max / dt)) + 1
    segments = [sequence_factory(t).toggling_segments() for t in t_grid]

    sums = np.zeros(len(t_grid), dtype=complex)
    sq = np.zeros(len(t_grid))
    for start in range(0, n_traj, chunk):
        idx = range(start, min(n_traj, start + chunk))
        rows = []
        for i in idx:
            rng = trajectory_rng(seed, i)
            w = np.zeros(n_steps)
            if process is not None and process.variance > 0:
                w += gamma * process.sample(rng, n_steps, dt)
            if white_level > 0:
                w += rng.standard_normal(n_steps) * np.sqrt(white_level / dt)
            rows.append(w)
        omega = np.array(rows)
        cum = np.concatenate([np.zeros((omega.shape[0], 1)), np.cumsum(omega, axis=1) * dt], axis=1)
        for g, segs in enumerate(segments):
            phi = np.zeros(omega.shape[0])
            for a, b, sgn in segs:
                ends = _segment_integral(cum, dt, np.array([a, b]))
                phi += sgn * (ends[:, 1] - ends[:, 0])
            z = np.exp(-1j * phi)
            sums[g] += z.sum()
            sq[g] += (np.abs(z) ** 2).sum()
    mean = sums / n_traj
    var = np.maximum(sq / n_traj - np.abs(mean) ** 2, 0.0)
    return mean, np.sqrt(var / n_traj)
