"""Pulse-sequence constructors and filter functions.

Filter functions follow F(w) = (w^2/2) |int_0^t y(s) e^{iws} ds|^2 with y the
+-1 toggling function, so chi = (1/pi) int S F / w^2 dw.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

PI = np.pi
HALF = PI / 2
AXES = {"x": 0.0, "y": 90.0, "-x": 180.0, "-y": 270.0}
XY8_PATTERN = ("x", "y", "x", "y", "y", "x", "y", "x")

KINDS = ("ramsey", "hahn", "pdd", "cpmg", "xy8", "cdd", "udd", "spin_lock",
         "deer", "endor", "correlation", "qdyne_block")


@dataclass(frozen=True)
class Element:
    kind: str                   # "pulse" | "wait"
    channel: str = ""
    axis: float = 0.0           # phase in degrees
    angle: float = 0.0          # rotation angle in rad
    duration: float = 0.0


def pulse(channel: str, axis, angle: float) -> Element:
    ax = AXES[axis] if isinstance(axis, str) else float(axis)
    return Element("pulse", channel=channel, axis=ax, angle=float(angle))


def wait(duration: float) -> Element:
    if not duration >= 0:
        raise ValueError("durations must be nonnegative")
    return Element("wait", duration=float(duration))


@dataclass
class PulseSequence:
    elements: list
    kind: str
    N: int = 0
    tau: float = 0.0
    sensing_channel: str = "mw"
    meta: dict = field(default_factory=dict)

    @property
    def duration(self) -> float:
        return float(sum(e.duration for e in self.elements if e.kind == "wait"))

    def body_elements(self) -> list:
        """Elements without the trailing readout pi/2 on the sensing channel."""
        els = list(self.elements)
        if els and els[-1].kind == "pulse" and els[-1].channel == self.sensing_channel \
                and np.isclose(els[-1].angle, HALF):
            els = els[:-1]
        return els

    def switching_times(self) -> np.ndarray:
        """Times of the intermediate pi pulses on the sensing channel."""
        body = self.body_elements()
        t, out, started = 0.0, [], False
        for el in body:
            if el.kind == "wait":
                t += el.duration
                continue
            if el.channel != self.sensing_channel:
                continue
            if not started:
                if not np.isclose(el.angle, HALF):
                    raise ValueError("sequence must open with a pi/2 pulse")
                started = True
                continue
            if not np.isclose(el.angle, PI):
                raise ValueError("toggling function needs pi pulses only")
            out.append(t)
        return np.array(out)

    def toggling_segments(self):
        """List of (start, stop, sign) covering [0, t]."""
        if self.kind == "spin_lock":
            raise ValueError("spin-lock has no toggling function")
        edges = np.concatenate([[0.0], self.switching_times(), [self.duration]])
        return [(edges[k], edges[k + 1], (-1) ** k) for k in range(len(edges) - 1)]

    def dump(self) -> str:
        lines = []
        inv = {v: k for k, v in AXES.items()}
        for el in self.elements:
            if el.kind == "wait":
                lines.append(f"WAIT {el.duration:.12g}")
            else:
                ax = inv.get(el.axis % 360.0, f"{el.axis:g}")
                lines.append(f"PULSE {el.channel} {ax} {np.rad2deg(el.angle):.6g}")
        return "\n".join(lines) + "\n"


def _require(cond: bool, msg: str):
    if not cond:
        raise ValueError(msg)


def _pi_train(times, t, channel, axes, extra_channel: Optional[str] = None):
    """Waits and pi pulses at ``times`` inside [0, t]."""
    els, last = [], 0.0
    for k, tj in enumerate(times):
        els.append(wait(tj - last))
        els.append(pulse(channel, axes[k % len(axes)], PI))
        if extra_channel is not None:
            els.append(pulse(extra_channel, "x", PI))
        last = tj
    els.append(wait(t - last))
    return els


def cpmg_times(N: int, t: float) -> np.ndarray:
    return t * (2 * np.arange(1, N + 1) - 1) / (2 * N)


def udd_times(N: int, t: float) -> np.ndarray:
    j = np.arange(1, N + 1)
    return t * np.sin(PI * j / (2 * N + 2)) ** 2


def cdd_times(level: int, t: float) -> np.ndarray:
    """Pulse times of CDD_l = CDD_{l-1} pi CDD_{l-1} pi, CDD_0 = free evolution."""
    if level == 0:
        return np.array([])
    inner = cdd_times(level - 1, t / 2)
    return np.concatenate([inner, [t / 2], inner + t / 2, [t]])


def build_sequence(kind: str, t: Optional[float] = None, N: int = 1, *, tau: Optional[float] = None,
                   level: int = 1, channel: str = "mw", rf_channel: str = "rf:all",
                   delta_t: float = 0.0) -> PulseSequence:
    """Construct a canonical sequence.

    ``t`` is the total free-evolution time. DD-type kinds accept either ``t``
    or the spacing ``tau`` (t = N tau). ``level`` is the CDD recursion depth.
    """
    _require(kind in KINDS, f"unknown sequence kind {kind!r}")
    if t is None and tau is not None:
        t = N * tau
    _require(t is not None and t > 0, "total duration must be positive")
    _require(N >= 1, "N must be >= 1")
    open_, close = pulse(channel, "x", HALF), pulse(channel, "x", HALF)

    if kind == "ramsey":
        els, N = [wait(t)], 0
    elif kind == "hahn":
        els, N = _pi_train([t / 2], t, channel, ["x"]), 1
    elif kind == "pdd":
        _require(N % 2 == 1, "PDD requires odd N")
        els = _pi_train(t * np.arange(1, N + 1) / (N + 1), t, channel, ["x"])
    elif kind == "cpmg":
        _require(N % 2 == 0, "CPMG requires even N")
        els = _pi_train(cpmg_times(N, t), t, channel, ["y"])
    elif kind == "xy8":
        _require(N % 8 == 0, "XY8 requires N a multiple of 8")
        els = _pi_train(cpmg_times(N, t), t, channel, XY8_PATTERN)
    elif kind == "cdd":
        _require(level >= 1, "CDD level must be >= 1")
        times = cdd_times(level, t)
        els = _pi_train(times[:-1], t, channel, ["x"]) + [pulse(channel, "x", PI)]
        N = len(times)
    elif kind == "udd":
        els = _pi_train(udd_times(N, t), t, channel, ["y"])
    elif kind == "spin_lock":
        els, N = [wait(t)], 0
        close = pulse(channel, "-x", HALF)
    elif kind in ("deer", "endor", "qdyne_block"):
        extra = None if kind == "qdyne_block" else rf_channel
        els = _pi_train(cpmg_times(N, t), t, channel, ["y"], extra_channel=extra)
    elif kind == "correlation":
        _require(delta_t >= 0, "delta_t must be nonnegative")
        half = _pi_train(cpmg_times(N, t), t, channel, ["y"])
        els = half + [pulse(channel, "x", HALF), wait(delta_t), pulse(channel, "x", HALF)] + half
    seq = PulseSequence([open_] + els + [close], kind=kind, N=N,
                        tau=t / N if N else t, sensing_channel=channel)
    if kind == "cdd":
        seq.meta["level"] = level
    if kind == "correlation":
        seq.meta["delta_t"] = delta_t
    return seq


def resonance_spacing(omega_L: float, a_par: float = 0.0) -> float:
    """DD pulse spacing tau = pi/(omega_L + a_par/2) resonant with a nucleus."""
    return PI / (omega_L + a_par / 2)


def _udd_closed(w, t, N):
    k = np.arange(-N - 1, N + 1)
    ph = np.exp(1j * np.multiply.outer(w * t / 2, np.cos(PI * k / (N + 1))))
    return 0.5 * np.abs((ph * (-1.0) ** k).sum(axis=-1)) ** 2


@dataclass(frozen=True)
class DeltaFilter:
    """F(w) = weight * delta(w - center); weight = 2 w0^2 t / pi."""

    center: float
    weight: float


def _sin_even_over_cos(n: int, x):
    """sin(n x)/cos(x) for even n, expanded as a finite sine sum so the removable poles stay exact."""
    out = np.zeros_like(x)
    for j in range(n // 2):
        out += (-1) ** j * np.sin((n - 1 - 2 * j) * x)
    return 2 * out


def filter_function_closed(kind: str, w, t: float, N: int = 1, level: int = 1, omega0: float = 0.0):
    """Closed-form filter function F_t(w).

    ``spin_lock`` and ``t1`` return a :class:`DeltaFilter` descriptor.
    """
    w = np.asarray(w, dtype=float)
    if kind in ("spin_lock", "t1"):
        return DeltaFilter(omega0, 2 * omega0**2 * t / PI)
    if kind == "ramsey":
        return 2 * np.sin(w * t / 2) ** 2
    if kind == "hahn":
        return 8 * np.sin(w * t / 4) ** 4
    if kind == "pdd":
        _require(N % 2 == 1, "PDD requires odd N")
        x = w * t / (2 * N + 2)
        return 2 * np.sin(x) ** 2 * _sin_even_over_cos(N + 1, x) ** 2
    if kind in ("cpmg", "xy8"):
        _require(N % 2 == 0, "CPMG requires even N")
        y = w * t / (2 * N)
        return 8 * np.sin(y / 2) ** 4 * _sin_even_over_cos(N, y) ** 2
    if kind == "cdd":
        out = 2.0 ** (2 * level + 1) * np.sin(w * t / 2 ** (level + 1)) ** 2
        for k in range(1, level + 1):
            out = out * np.sin(w * t / 2 ** (k + 1)) ** 2
        return out
    if kind == "udd":
        return _udd_closed(w, t, N)
    raise ValueError(f"no closed form for {kind!r}")


def filter_function_numeric(sequence: PulseSequence, w) -> np.ndarray:
    """(w^2/2)|int y e^{iws}|^2 evaluated exactly segment by segment."""
    w = np.asarray(w, dtype=float)
    acc = np.zeros(w.shape, dtype=complex)
    for a, b, s in sequence.toggling_segments():
        acc += s * (np.exp(1j * w * b) - np.exp(1j * w * a))
    return 0.5 * np.abs(acc) ** 2


def filter_over_w2(kind: str, w, t: float, N: int = 1, level: int = 1) -> np.ndarray:
    """F/w^2 with the w -> 0 limit handled by a short series."""
    w = np.asarray(w, dtype=float)
    out = np.empty_like(w)
    small = np.abs(w) * t < 1e-3
    out[~small] = filter_function_closed(kind, w[~small], t, N, level) / w[~small] ** 2
    if np.any(small):
        out[small] = 0.0
        if kind == "ramsey":
            x = w[small] * t
            out[small] = t**2 / 2 * (1 - x**2 / 12)
    return out
