"""Semi-discrete SBP-SAT system and classical RK4 time stepping.

The state is stored component-major, ``q = [h_0, ..., h_N, u_0, ..., u_N]``,
and evolves by

    (I x P) dq/dt = -(M x Q) q + s alpha (I x A) q + SAT(q, t)  (+ P F)

with ``F`` an optional nodal forcing.  The dissipation scale ``s`` defaults
to 1, the convention under which ``alpha = 0.05`` gives the reference
convergence table; ``s = 1/2`` is the textbook local Lax-Friedrichs split.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DivergenceError, ShapeError
from .model import FlowConfig, SpectralData, spectral_data
from .sat import BoundaryData, PenaltySet, _add_sat, validate_penalties
from .sbp import Grid, SbpOperators, build_operators

logger = logging.getLogger(__name__)

Forcing = Callable[[np.ndarray, float], tuple]
RhsFunction = Callable[[float, np.ndarray], np.ndarray]

DISSIPATION_SCALE = 1.0


@dataclass(frozen=True)
class State:
    data: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 1 or data.size % 2:
            raise ShapeError(f"state must be a flat vector of even length, got shape {data.shape}")
        object.__setattr__(self, "data", data)

    @classmethod
    def from_fields(cls, h, u, t: float = 0.0) -> State:
        return cls(np.concatenate([np.asarray(h, float), np.asarray(u, float)]), t)

    @property
    def n_nodes(self) -> int:
        return self.data.size // 2

    @property
    def h(self) -> np.ndarray:
        return self.data[: self.n_nodes]

    @property
    def u(self) -> np.ndarray:
        return self.data[self.n_nodes :]


@dataclass(frozen=True)
class RunParams:
    cr: float = 0.25
    t_final: float = 0.1
    alpha: float = 0.0
    record_energy: bool = True
    record_interval: int = 1
    snapshots: tuple[float, ...] = ()
    dissipation_scale: float = DISSIPATION_SCALE

    def __post_init__(self):
        if not (0 < self.cr <= 1):
            raise ConfigurationError(f"cr must lie in (0, 1], got {self.cr!r}")
        if not (self.t_final >= 0 and math.isfinite(self.t_final)):
            raise ConfigurationError(f"t_final must be >= 0, got {self.t_final!r}")
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise ConfigurationError(f"alpha must be >= 0, got {self.alpha!r}")
        if self.record_interval < 1:
            raise ConfigurationError("record_interval must be >= 1")
        snaps = tuple(sorted(float(s) for s in self.snapshots))
        if any(s < 0 or s > self.t_final for s in snaps):
            raise ConfigurationError(f"snapshot times must lie in [0, t_final], got {snaps}")
        object.__setattr__(self, "snapshots", snaps)


class SemiDiscretization:
    """Right-hand side of the SBP-SAT system for one flow configuration.

    Penalties are checked for stability and boundary-condition count unless
    ``validate=False`` (used to demonstrate what an unstable choice does).
    Instances are immutable after construction and may be shared between
    threads.
    """

    def __init__(
        self,
        sd: SpectralData,
        ops: SbpOperators,
        pen: PenaltySet,
        data: Optional[BoundaryData] = None,
        forcing: Optional[Forcing] = None,
        dissipation_scale: float = DISSIPATION_SCALE,
        validate: bool = True,
    ):
        if not dissipation_scale >= 0:
            raise ConfigurationError(f"dissipation scale must be >= 0, got {dissipation_scale!r}")
        if validate:
            validate_penalties(pen, sd)
        elif pen.regime != sd.regime:
            raise ConfigurationError(f"penalties built for {pen.regime}, flow is {sd.regime}")
        self.sd = sd
        self.ops = ops
        self.pen = pen
        self.data = data if data is not None else BoundaryData.zero()
        self.forcing = forcing
        self.cfg = sd.cfg
        self.n = ops.n
        self._M = sd.cfg.M
        self.dissipation_scale = dissipation_scale
        self._diss = dissipation_scale * ops.alpha

    def _split(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape != (2 * self.n,):
            raise ShapeError(f"expected state of length {2 * self.n}, got shape {q.shape}")
        return q.reshape(2, self.n)

    def __call__(self, t: float, q) -> np.ndarray:
        q2 = self._split(q)
        ops = self.ops
        Qq = ops.apply_Q(q2)
        out = -(self._M @ Qq)
        if self._diss:
            out += self._diss * ops.apply_A(q2)
        _add_sat(out, q2, t, self.sd, self.pen, self.data)
        out *= ops.Pinv
        if self.forcing is not None:
            fh, fu = self.forcing(ops.grid.x, t)
            out[0] += fh
            out[1] += fu
        return out.reshape(-1)

    def energy(self, q) -> float:
        return discrete_energy(q, self.sd.W, self.ops.P)

    def energy_rate(self, q, t: float = 0.0) -> float:
        """``q^T (W x P) dq/dt``, half the time derivative of the discrete energy."""
        q2 = self._split(q)
        r2 = self(t, q).reshape(2, self.n)
        g, H = self.cfg.g, self.cfg.H
        P = self.ops.P
        return float(g * np.dot(P * q2[0], r2[0]) + H * np.dot(P * q2[1], r2[1]))


def rhs(state, sd: SpectralData, ops: SbpOperators, pen: PenaltySet, data: Optional[BoundaryData] = None,
        forcing: Optional[Forcing] = None, dissipation_scale: float = DISSIPATION_SCALE) -> np.ndarray:
    """Time derivative of ``state`` (a :class:`State` or flat vector at ``t = 0``)."""
    if isinstance(state, State):
        q, t = state.data, state.t
    else:
        q, t = state, 0.0
    return SemiDiscretization(sd, ops, pen, data, forcing, dissipation_scale)(t, q)


def discrete_energy(q, W, P) -> float:
    """``q^T (W x P) q`` for a component-major state."""
    q = np.asarray(q.data if isinstance(q, State) else q, dtype=float)
    P = np.asarray(P, dtype=float)
    if P.ndim == 2:
        P = np.diag(P)
    q2 = q.reshape(2, -1)
    W = np.asarray(W, dtype=float)
    return float(W[0, 0] * np.dot(P, q2[0] ** 2) + W[1, 1] * np.dot(P, q2[1] ** 2))


def cfl_dt(grid: Grid, cfg: FlowConfig, cr: float = 0.25) -> float:
    if not (0 < cr <= 1):
        raise ConfigurationError(f"cr must lie in (0, 1], got {cr!r}")
    return cr * grid.min_width / cfg.max_speed


def rk4_step(state: State, dt: float, f: RhsFunction, step: int | None = None) -> State:
    """One classical Runge-Kutta step; ``f(t, q)`` is sampled at stage times."""
    if not dt > 0:
        raise ConfigurationError(f"time step must be positive, got {dt!r}")
    q, t = state.data, state.t
    k1 = f(t, q)
    _check_finite(k1, step, t)
    k2 = f(t + 0.5 * dt, q + (0.5 * dt) * k1)
    _check_finite(k2, step, t)
    k3 = f(t + 0.5 * dt, q + (0.5 * dt) * k2)
    _check_finite(k3, step, t)
    k4 = f(t + dt, q + dt * k3)
    _check_finite(k4, step, t)
    q_new = q + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    _check_finite(q_new, step, t)
    return State(q_new, t + dt)


def _check_finite(v: np.ndarray, step, t):
    if not np.isfinite(v).all():
        where = f" at step {step}" if step is not None else ""
        raise DivergenceError(f"non-finite values{where} (t = {t:.6g})", step=step, time=t)


@dataclass
class RunResult:
    state: State
    grid: Grid
    snapshots: dict[float, State] = field(default_factory=dict)
    energy_t: np.ndarray = field(default_factory=lambda: np.empty(0))
    energy: np.ndarray = field(default_factory=lambda: np.empty(0))
    steps: int = 0
    dt: float = 0.0


def integrate(
    system: SemiDiscretization,
    q0,
    params: RunParams,
    dt: float | None = None,
) -> RunResult:
    """Integrate ``system`` from ``t = 0`` to ``params.t_final``.

    The step is the fixed CFL step; the step before each snapshot time (and
    before ``t_final``) is shortened so those times are hit exactly.
    """
    grid = system.ops.grid
    if dt is None:
        dt = cfl_dt(grid, system.cfg, params.cr)
    state = State(np.array(q0, dtype=float), 0.0)
    system._split(state.data)

    targets = sorted(set(params.snapshots) | {params.t_final})
    snapshots: dict[float, State] = {}
    e_t, e_v = [], []
    if params.record_energy:
        e_t.append(0.0)
        e_v.append(system.energy(state.data))

    step = 0
    for target in targets:
        while target - state.t > 1e-12 * max(1.0, target):
            h = min(dt, target - state.t)
            if target - (state.t + h) <= 1e-12 * max(1.0, target):
                h = target - state.t
            step += 1
            state = rk4_step(state, h, system, step)
            if abs(state.t - target) <= 1e-12 * max(1.0, target):
                state = State(state.data, target)
            if params.record_energy and (step % params.record_interval == 0 or state.t == params.t_final):
                e_t.append(state.t)
                e_v.append(system.energy(state.data))
        if target in params.snapshots:
            snapshots[target] = state

    logger.debug("integrated %d steps to t=%g (dt=%g)", step, state.t, dt)
    return RunResult(
        state=state,
        grid=grid,
        snapshots=snapshots,
        energy_t=np.array(e_t),
        energy=np.array(e_v),
        steps=step,
        dt=dt,
    )


def build_system(scenario, grid: Grid, cfg: FlowConfig, alpha: float = 0.0, penalties: dict | None = None,
                 gamma: tuple[float, float] | None = None,
                 dissipation_scale: float = DISSIPATION_SCALE) -> SemiDiscretization:
    """Semi-discretization of ``scenario`` with transmissive SATs."""
    from .model import RegimeKind, reflection_coefficients
    from .sat import boundary_data_from_physical, default_penalties

    sd = spectral_data(cfg)
    if sd.regime.kind is RegimeKind.SUBCRITICAL and gamma is None:
        gamma = reflection_coefficients(cfg)
    pen = default_penalties(sd, gamma, **(penalties or {}))
    data = boundary_data_from_physical(cfg, scenario.g1, scenario.g2)
    return SemiDiscretization(sd, build_operators(grid, alpha), pen, data, scenario.forcing, dissipation_scale)


def run(scenario, grid: Grid, cfg: FlowConfig, params: RunParams, penalties: dict | None = None,
        gamma: tuple[float, float] | None = None) -> RunResult:
    """Run ``scenario`` on ``grid`` up to ``params.t_final``."""
    system = build_system(scenario, grid, cfg, params.alpha, penalties, gamma, params.dissipation_scale)
    q0 = scenario.initial_state(grid)
    try:
        return integrate(system, q0, params)
    except DivergenceError as exc:
        raise DivergenceError(
            f"{scenario.name}: {exc} [N={grid.N}, alpha={params.alpha}, U={cfg.U}]",
            step=exc.step,
            time=exc.time,
        ) from exc


def run_many(jobs: Sequence[Callable[[], RunResult]], workers: int | None = None) -> list:
    """Evaluate independent run closures, in parallel when ``workers > 1``."""
    import os
    from concurrent.futures import ThreadPoolExecutor

    if workers is None:
        workers = int(os.environ.get("SWWE_THREADS", "0") or 0) or (os.cpu_count() or 1)
    workers = max(1, min(workers, len(jobs) or 1))
    if workers == 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda job: job(), jobs))
