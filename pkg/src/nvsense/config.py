"""Line-oriented run configuration.

    [section]
    key = value          # comment
    key = value          # repeated keys accumulate

Frequencies are given in Hz, durations in s and fields in T.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

DEFAULT_SEED = 20240611


class ConfigError(ValueError):
    """Malformed configuration text (parse-level failure)."""


def _floats(n):
    def conv(v):
        parts = v.split()
        if len(parts) != n:
            raise ValueError(f"expected {n} numbers, got {v!r}")
        return tuple(float(p) for p in parts)
    return conv


def _words(v):
    return tuple(v.split())


def _opt_int(v):
    return None if v.lower() in ("none", "") else int(v)


# section -> key -> (converter, repeatable)
SCHEMA = {
    "run": {"seed": (int, False), "threads": (int, False)},
    "system": {"B0": (_floats(3), False), "temperature": (float, False), "E": (_floats(3), False),
               "strain": (_floats(3), False), "nitrogen": (_opt_int, False), "target": (_words, True)},
    "sequence": {"kind": (str, False), "N": (int, False), "tau": (float, False), "t": (float, False),
                 "level": (int, False), "delta_t": (float, False)},
    "scan": {"start": (float, False), "stop": (float, False), "points": (int, False),
             "spacing": (str, False)},
    "noise": {"lorentzian": (_floats(3), True), "white": (float, True)},
    "sample": {"density": (float, False), "depth": (float, False), "polarization": (float, False),
               "species": (str, False), "orientation": (str, False), "N": (int, False),
               "tau": (float, False)},
    "budget": {"T_accu": (float, False), "T_ini": (float, False), "T_read": (float, False),
               "xi": (float, False), "F_read": (float, False), "F_ini": (float, False),
               "d": (float, False), "target": (str, False), "P": (float, False),
               "n0": (float, False), "n1": (float, False)},
    "odmr": {"rabi_hz": (float, False), "T1_eff": (float, False), "T2_eff": (float, False),
             "contrast": (float, False)},
    "deer": {"target_hz": (float, False), "hyperfine_hz": (float, False), "rf_rabi_hz": (float, False),
             "coupling_hz": (float, False), "lines": (int, False)},
    "nmr": {"species": (str, False), "a_par_hz": (float, False), "a_perp_hz": (float, False)},
    "hh": {"a_hz": (float, False), "theta_deg": (float, False), "t_s": (float, False)},
    "relax": {"gamma2_hz": (float, False), "gamma1_int_hz": (float, False), "target_B": (float, False),
              "target_tau_c": (float, False), "t": (float, False)},
    "zfepr": {"A_perp_hz": (float, False), "A_par_hz": (float, False)},
    "correlate": {"f_hz": (float, False), "amplitude": (float, False)},
    "qdyne": {"f_signal": (float, False), "B_ac": (float, False), "t_s": (float, False),
              "f_LO": (float, False), "T_exp": (float, False), "n0": (float, False),
              "n1": (float, False), "phase": (float, False)},
    "nmr2d": {"offset_hz": (float, True), "J_hz": (float, False), "dwell": (float, False),
              "points": (int, False)},
    "output": {"dir": (str, False), "prefix": (str, False)},
    "sweep": {"command": (str, False), "axis": (_words, True)},
}


@dataclass
class RunConfig:
    sections: dict = field(default_factory=dict)

    def get(self, section: str, key: str, default=None):
        sec = self.sections.get(section, {})
        if key not in sec:
            return default
        _, rep = SCHEMA[section][key]
        return list(sec[key]) if rep else sec[key]

    def set(self, section: str, key: str, raw: str):
        """Override an entry from its text form; repeated keys get one more value."""
        conv = _lookup(section, key)
        try:
            val = conv(raw)
        except ValueError as exc:
            raise ConfigError(f"{section}.{key}: {exc}") from None
        sec = self.sections.setdefault(section, {})
        if SCHEMA[section][key][1]:
            sec.setdefault(key, []).append(val)
        else:
            sec[key] = val

    def copy(self) -> "RunConfig":
        return RunConfig(copy.deepcopy(self.sections))

    @property
    def seed(self) -> int:
        return int(self.get("run", "seed", DEFAULT_SEED)) & (2**64 - 1)


def _lookup(section, key):
    if section not in SCHEMA:
        raise ConfigError(f"unknown section [{section}]")
    if key not in SCHEMA[section]:
        raise ConfigError(f"unknown key {key!r} in [{section}]")
    return SCHEMA[section][key][0]


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig()
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"line {lineno}: malformed section header")
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"line {lineno}: unknown section [{section}]")
            cfg.sections.setdefault(section, {})
            continue
        if section is None:
            raise ConfigError(f"line {lineno}: entry outside a section")
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (p.strip() for p in line.split("=", 1))
        if key not in SCHEMA[section]:
            raise ConfigError(f"line {lineno}: unknown key {key!r} in [{section}]")
        conv, rep = SCHEMA[section][key]
        try:
            val = conv(value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: {key}: {exc}") from None
        sec = cfg.sections[section]
        if rep:
            sec.setdefault(key, []).append(val)
        elif key in sec:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        else:
            sec[key] = val
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
