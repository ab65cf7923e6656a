"""Error norms, convergence tables and oscillation diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError, DivergenceError
from .model import FlowConfig
from .sbp import Grid, build_grid
from .solver import RunParams, State, run, run_many


@dataclass(frozen=True)
class ConvergenceRow:
    N: int
    h_error: float
    u_error: float
    h_rate: Optional[float] = None
    u_rate: Optional[float] = None


NORMS = ("volume", "uniform")


def l2_error(numeric, exact, grid: Grid, t: float, norm: str = "volume") -> tuple[float, float]:
    """Nodal L2 errors of ``h`` and ``u`` against ``exact(x, t)``.

    ``norm="volume"`` weights node ``i`` by its control volume ``|I_i|`` (the
    energy norm).  ``norm="uniform"`` weights every node, ends included, by
    ``L/N``; this is the norm used by the reference convergence table.
    """
    q = numeric.data if isinstance(numeric, State) else np.asarray(numeric, dtype=float)
    q2 = q.reshape(2, -1)
    h_ex, u_ex = exact(grid.x, t)
    if norm == "volume":
        P = grid.volumes
    elif norm == "uniform":
        P = np.full(grid.n_nodes, grid.length / grid.N)
    else:
        raise ConfigurationError(f"unknown norm {norm!r}; choose from {NORMS}")
    eh = math.sqrt(float(np.dot(P, (q2[0] - h_ex) ** 2)))
    eu = math.sqrt(float(np.dot(P, (q2[1] - u_ex) ** 2)))
    return eh, eu


def _rate(coarse: float, fine: float, ratio: float) -> Optional[float]:
    if coarse <= 0 or fine <= 0:
        return None
    return math.log(coarse / fine) / math.log(ratio)


def convergence_rates(Ns: Sequence[int], errors: Sequence[tuple[float, float]]) -> list[ConvergenceRow]:
    """Attach observed orders ``log(e_coarse/e_fine) / log(N_fine/N_coarse)``.

    Rates are left as ``None`` where an error vanishes.
    """
    rows = []
    for i, (N, (eh, eu)) in enumerate(zip(Ns, errors)):
        if i == 0:
            rows.append(ConvergenceRow(N, eh, eu))
            continue
        ratio = N / Ns[i - 1]
        peh, peu = errors[i - 1]
        rows.append(ConvergenceRow(N, eh, eu, _rate(peh, eh, ratio), _rate(peu, eu, ratio)))
    return rows


def convergence_table(
    scenario,
    cfg: FlowConfig,
    params: RunParams,
    resolutions: Sequence[int],
    workers: int | None = None,
    norm: str = "volume",
    penalties: dict | None = None,
    gamma: tuple[float, float] | None = None,
) -> list[ConvergenceRow]:
    """Errors at ``params.t_final`` over a sequence of uniform grids."""
    Ns = [int(N) for N in resolutions]
    if len(Ns) < 1:
        raise ConfigurationError("need at least one resolution")
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ConfigurationError(f"resolutions must be strictly increasing, got {Ns}")
    if norm not in NORMS:
        raise ConfigurationError(f"unknown norm {norm!r}; choose from {NORMS}")
    if scenario.exact is None:
        raise ConfigurationError(f"scenario {scenario.name!r} has no exact solution to measure against")

    def job(N):
        def go():
            grid = build_grid(N, scenario.domain_length)
            res = run(scenario, grid, cfg, replace(params, record_energy=False, snapshots=()), penalties, gamma)
            return l2_error(res.state, scenario.exact, grid, res.state.t, norm)
        return go

    try:
        errors = run_many([job(N) for N in Ns], workers)
    except DivergenceError as exc:
        raise DivergenceError(f"convergence table aborted: {exc}", exc.step, exc.time) from exc
    return convergence_rates(Ns, errors)


def total_variation(v) -> float:
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise ValueError("total variation needs a vector of length >= 2")
    return float(np.abs(np.diff(v)).sum())
