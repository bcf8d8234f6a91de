"""Experiment configuration: typed sections stored as INI text.

Grammar: ``[section]`` headers followed by ``key = value`` lines. Values are
integers, floats (written with ``repr`` so they round-trip exactly),
``true``/``false``, ``none``, bare strings, or comma-separated lists of those.
Unknown keys are rejected so typos fail loudly.
"""
from __future__ import annotations

import configparser
import copy
import io

SOLVERS = ("ddp", "rddp", "rddp-fixed", "zeroth")

# every section with its defaults; experiment descriptors override these
DEFAULTS = {
    "experiment": {
        "name": "",
        "solver": "rddp",
        "horizon": 100,
        "dt": 0.01,
        "seed": 0,
        "threshold": 0.1,
        "initial_state": None,
    },
    "model": {},
    "cost": {
        "w_p": 1.0,
        "w_u": 0.0,
        "target": [0.0],
        "u_ref": None,
    },
    "noise": {
        "eps": 1.0,
        "samples": 4,
        "distribution": "gaussian",
        "estimator": "first",
    },
    "schedule": {
        "alpha0": 1e-2,
        "eps_target": None,
        "alpha_target": None,
        "rho": 2.0,
        "gamma": 2.0,
        "stall_budget": 50,
    },
    "solver": {
        "max_iterations": 100,
        "tol": 1e-6,
        "reg_init": 1e-9,
        "reg_min": 1e-9,
        "reg_max": 1e6,
        "reg_increase": 10.0,
        "reg_decrease": 2.0,
        "accept_ratio": 1e-4,
        "norm": "weighted",
    },
    "zeroth": {
        "eps": 0.3,
        "samples": 16,
        "step_size": 100.0,
        "iterations": 300,
    },
    "composite": {
        "samples": None,
        "solvers": None,
    },
}


def format_value(v):
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        # a trailing comma keeps one-element lists lists on the way back
        return ", ".join(format_value(x) for x in v) + ("," if len(v) < 2 else "")
    return str(v)


def _scalar(text):
    t = text.strip()
    low = t.lower()
    if low == "none":
        return None
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        return t


def parse_value(text, default=None):
    """Parse ``text``; a comma or a list-valued default gives a list."""
    if isinstance(default, (list, tuple)) or ("," in text):
        parts = [p for p in text.split(",") if p.strip()]
        return [_scalar(p) for p in parts]
    v = _scalar(text)
    if isinstance(default, float) and isinstance(v, int) and not isinstance(v, bool):
        return float(v)
    return v


class ExperimentConfig:
    """Nested ``{section: {key: value}}`` mapping with defaults filled in."""

    def __init__(self, sections=None):
        self.sections = copy.deepcopy(DEFAULTS)
        for name, values in (sections or {}).items():
            self.update(name, values)

    def update(self, section, values):
        if section not in self.sections:
            raise ValueError(f"unknown config section [{section}]")
        known = DEFAULTS[section]
        for key, value in values.items():
            if known and key not in known:
                raise ValueError(f"unknown key {key!r} in section [{section}]")
            default = self.sections[section].get(key)
            if isinstance(default, float) and isinstance(value, int) and not isinstance(value, bool):
                value = float(value)
            self.sections[section][key] = value
        return self

    def __getitem__(self, section):
        return self.sections[section]

    @property
    def name(self):
        return self.sections["experiment"]["name"]

    @property
    def solver(self):
        return self.sections["experiment"]["solver"]

    def copy(self):
        return ExperimentConfig(copy.deepcopy(self.sections))

    def validate(self):
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}; choose from {', '.join(SOLVERS)}")
        return self

    def to_ini(self):
        out = io.StringIO()
        for section, values in self.sections.items():
            out.write(f"[{section}]\n")
            for key in sorted(values) if section == "model" else values:
                out.write(f"{key} = {format_value(values[key])}\n")
            out.write("\n")
        return out.getvalue()

    @classmethod
    def from_ini(cls, text):
        cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        cp.optionxform = str
        cp.read_string(text)
        cfg = cls()
        for section in cp.sections():
            if section not in DEFAULTS:
                raise ValueError(f"unknown config section [{section}]")
            values = {}
            for key, raw in cp.items(section):
                values[key] = parse_value(raw, cfg.sections[section].get(key))
            cfg.update(section, values)
        return cfg

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_ini(fh.read())

    def __eq__(self, other):
        return isinstance(other, ExperimentConfig) and self.sections == other.sections

    def __repr__(self):
        return f"ExperimentConfig({self.name!r}, solver={self.solver!r})"
