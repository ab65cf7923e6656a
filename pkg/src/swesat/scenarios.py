"""Experiment definitions: boundary-driven pulses and a manufactured solution.

Boundary data are given in transmissive form,

    g1 = (h + sqrt(H/g) u) / 2,    g2 = (h - sqrt(H/g) u) / 2,

and converted to characteristic data by :mod:`swesat.sat`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError
from .model import FlowConfig, RegimeKind, classify_regime


def _zero(t):
    return 0.0


@dataclass(frozen=True)
class Scenario:
    name: str
    cfg: FlowConfig
    domain_length: float
    initial: Callable[[np.ndarray], tuple]
    g1: Callable[[float], float] = _zero
    g2: Callable[[float], float] = _zero
    forcing: Optional[Callable[[np.ndarray, float], tuple]] = None
    exact: Optional[Callable[[np.ndarray, float], tuple]] = None
    meta: dict = field(default_factory=dict)

    def initial_state(self, grid) -> np.ndarray:
        h, u = self.initial(grid.x)
        n = grid.n_nodes
        return np.concatenate([np.broadcast_to(h, n), np.broadcast_to(u, n)]).astype(float)

    def exact_state(self, grid, t: float) -> np.ndarray:
        if self.exact is None:
            raise ConfigurationError(f"scenario {self.name!r} has no exact solution")
        h, u = self.exact(grid.x, t)
        return np.concatenate([h, u])


def smooth_pulse(t):
    """``sin(pi t)**4`` on ``[0, 1]``, zero elsewhere."""
    t = np.asarray(t, dtype=float)
    out = np.where((t >= 0) & (t <= 1), np.sin(np.pi * t) ** 4, 0.0)
    return out if out.ndim else float(out)


def step_pulse(t):
    """Indicator of ``(0, 1]``."""
    t = np.asarray(t, dtype=float)
    out = np.where((t > 0) & (t <= 1), 1.0, 0.0)
    return out if out.ndim else float(out)


def pulse_speed(cfg: FlowConfig) -> float:
    return cfg.U + cfg.celerity


def _pulse_scenario(name: str, cfg: FlowConfig, profile) -> Scenario:
    if not cfg.U > 0:
        raise ConfigurationError(f"{name} needs U > 0 so that x = 0 is the inflow boundary, got U={cfg.U}")
    speed = pulse_speed(cfg)
    r = math.sqrt(cfg.H / cfg.g)

    def initial(x):
        return np.zeros_like(x), np.zeros_like(x)

    def exact(x, t):
        h = np.broadcast_to(profile(t - np.asarray(x) / speed), np.shape(x)).astype(float)
        return h, h / r

    return Scenario(
        name=name,
        cfg=cfg,
        domain_length=5.0 * speed,
        initial=initial,
        g1=profile,
        g2=_zero,
        exact=exact,
        meta={"x_scale": speed},
    )


def smooth_pulse_scenario(cfg: FlowConfig) -> Scenario:
    return _pulse_scenario("smooth-pulse", cfg, smooth_pulse)


def step_pulse_scenario(cfg: FlowConfig) -> Scenario:
    return _pulse_scenario("step-pulse", cfg, step_pulse)


def mms_solution(x, t):
    x = np.asarray(x, dtype=float)
    h = np.cos(2 * np.pi * t) * np.sin(6 * np.pi * x)
    u = np.sin(2 * np.pi * t) * np.cos(4 * np.pi * x)
    return h, u


def mms_forcing(cfg: FlowConfig):
    """Forcing ``(h_t + U h_x + H u_x, u_t + g h_x + U u_x)`` of the manufactured solution."""
    g, H, U = cfg.g, cfg.H, cfg.U
    pi = np.pi

    def forcing(x, t):
        x = np.asarray(x, dtype=float)
        s2, c2 = np.sin(2 * pi * t), np.cos(2 * pi * t)
        s6, c6 = np.sin(6 * pi * x), np.cos(6 * pi * x)
        s4, c4 = np.sin(4 * pi * x), np.cos(4 * pi * x)
        fh = -2 * pi * s2 * s6 + 6 * pi * U * c2 * c6 - 4 * pi * H * s2 * s4
        fu = 2 * pi * c2 * c4 + 6 * pi * g * c2 * c6 - 4 * pi * U * s2 * s4
        return fh, fu

    return forcing


def mms_scenario(cfg: FlowConfig) -> Scenario:
    """Manufactured solution ``h = cos(2 pi t) sin(6 pi x)``, ``u = sin(2 pi t) cos(4 pi x)`` on [0, 1]."""
    L = 1.0
    r = math.sqrt(cfg.H / cfg.g)
    regime = classify_regime(cfg)
    supercritical = regime.kind is RegimeKind.SUPERCRITICAL
    # where each transmissive condition is imposed
    x_g1 = L if (supercritical and cfg.U < 0) else 0.0
    x_g2 = 0.0 if (supercritical and cfg.U > 0) else L

    def g1(t):
        h, u = mms_solution(x_g1, t)
        return 0.5 * (float(h) + r * float(u))

    def g2(t):
        h, u = mms_solution(x_g2, t)
        return 0.5 * (float(h) - r * float(u))

    return Scenario(
        name="mms",
        cfg=cfg,
        domain_length=L,
        initial=lambda x: mms_solution(x, 0.0),
        g1=g1,
        g2=g2,
        forcing=mms_forcing(cfg),
        exact=mms_solution,
        meta={"x_scale": 1.0},
    )


def random_scenario(cfg: FlowConfig, seed: int = 0, amplitude: float = 1.0, L: float = 1.0) -> Scenario:
    """Random initial data and homogeneous boundary data (energy decay checks)."""

    def initial(x):
        rng = np.random.default_rng(seed)
        n = len(x)
        return amplitude * rng.standard_normal(n), amplitude * rng.standard_normal(n)

    return Scenario(
        name="zero-random",
        cfg=cfg,
        domain_length=L,
        initial=initial,
        meta={"x_scale": 1.0, "seed": seed, "amplitude": amplitude},
    )


SCENARIOS = {
    "smooth-pulse": smooth_pulse_scenario,
    "step-pulse": step_pulse_scenario,
    "mms": mms_scenario,
    "zero-random": random_scenario,
}


def make_scenario(name: str, cfg: FlowConfig, **kwargs) -> Scenario:
    try:
        factory = SCENARIOS[name]
    except KeyError:
        raise ConfigurationError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None
    return factory(cfg, **kwargs)
