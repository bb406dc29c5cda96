"""Run configuration: INI config files merged with command-line flags.

The config file is flat key = value text with sections; every option is also
a flag, and flags win.  Example::

    [chart]
    defining_vector = KS3      ; or 0,0,1 or [0, 0, 1]
    alpha = auto               ; auto = 2a from the initial state

    [run]
    mu = 1.0
    format = csv

    [integrator]
    step = 0.00157
    scheme = rk4
    max_steps = 10000000

    [frame]
    omega = 0.25
    axis = 0,0,1
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass

import numpy as np

from .canon import CartesianState
from .dynamics import NO_PERTURBATION, Perturbation
from .errors import UnboundOrbit
from .ksmap import NAMED_CHARTS, KSChart
from .propagator import IntegratorConfig
from .rotframe import RotatingFrameModified, RotatingFrameRaw, RotatingFrameSpec

_SECTION_KEYS = {
    "chart": ("defining_vector", "alpha"),
    "run": ("mu", "format", "rep"),
    "integrator": ("step", "scheme", "max_steps"),
    "frame": ("omega", "axis"),
}


def load_config(path: str) -> dict[str, str]:
    """Flatten an INI file to {key: raw string}; unknown keys are rejected."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    with open(path) as fh:
        parser.read_file(fh)
    flat: dict[str, str] = {}
    for section in parser.sections():
        if section not in _SECTION_KEYS:
            raise ValueError(f"unknown config section [{section}]")
        for key, value in parser.items(section):
            if key not in _SECTION_KEYS[section]:
                raise ValueError(f"unknown config key {key!r} in section [{section}]")
            flat[key] = value.strip()
    return flat


def parse_defining_vector(text: str) -> np.ndarray:
    """Parse "KS1"/"KS3" or a comma-separated 3-vector (brackets optional)."""
    name = text.strip()
    if name.upper() in NAMED_CHARTS:
        return NAMED_CHARTS[name.upper()].copy()
    parts = name.strip("[]() ").replace(",", " ").split()
    if len(parts) != 3:
        raise ValueError(f"cannot parse defining vector from {text!r}")
    return np.array([float(p) for p in parts])


def resolve_alpha(alpha_text: str, initial: CartesianState | None) -> float:
    """Resolve the chart scale; "auto" means the major axis 2a of the initial orbit."""
    text = alpha_text.strip().lower()
    if text != "auto":
        return float(alpha_text)
    if initial is None:
        raise ValueError("alpha = auto requires an initial state")
    energy = 0.5 * float(initial.X @ initial.X) - initial.mu / initial.r
    if not energy < 0.0:
        raise UnboundOrbit(f"alpha = auto requires a bound orbit, got energy {energy!r}")
    return initial.mu / (-energy)  # 2a


def resolve_chart(vector_text: str, alpha_text: str, initial: CartesianState | None = None) -> KSChart:
    return KSChart(parse_defining_vector(vector_text), resolve_alpha(alpha_text, initial))


def resolve_perturbation(name: str, spec: RotatingFrameSpec | None) -> Perturbation:
    """Perturbation registry for config selection by name."""
    if name == "none":
        return NO_PERTURBATION
    if name == "rotating_frame":
        if spec is None:
            raise ValueError("rotating_frame perturbation requires a frame spec")
        return RotatingFrameModified(spec)
    if name == "rotating_frame_raw":
        if spec is None:
            raise ValueError("rotating_frame_raw perturbation requires a frame spec")
        return RotatingFrameRaw(spec)
    raise ValueError(f"unknown perturbation {name!r}")


@dataclass
class RunConfig:
    """Resolved options shared by the CLI subcommands."""

    defining_vector: str = "KS3"
    alpha: str = "1.0"
    mu: float = 1.0
    #: None means: sniff input format, write csv.
    format: str | None = None
    rep: str = "sks"
    step: float = 0.01
    scheme: str = "rk4"
    max_steps: int = 10_000_000
    omega: float = 0.0
    axis: str | None = None
    jobs: int = 1

    @property
    def out_format(self) -> str:
        return self.format or "csv"

    def chart(self, initial: CartesianState | None = None) -> KSChart:
        return resolve_chart(self.defining_vector, self.alpha, initial)

    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig(step=self.step, scheme=self.scheme, max_steps=self.max_steps)

    def frame(self, chart: KSChart) -> RotatingFrameSpec:
        c = parse_defining_vector(self.axis) if self.axis else chart.c
        return RotatingFrameSpec(self.omega, c)


_CONVERTERS = {
    "mu": float,
    "step": float,
    "omega": float,
    "max_steps": int,
    "jobs": int,
}


def build_run_config(file_options: dict[str, str], flag_options: dict[str, object]) -> RunConfig:
    """Merge defaults < config file < flags into a RunConfig."""
    cfg = RunConfig()
    for source in (file_options, {k: v for k, v in flag_options.items() if v is not None}):
        for key, value in source.items():
            if not hasattr(cfg, key):
                raise ValueError(f"unknown option {key!r}")
            conv = _CONVERTERS.get(key)
            setattr(cfg, key, conv(value) if conv and isinstance(value, str) else value)
    return cfg
