"""Invariant suites behind ``swesat verify``.

Each check returns a :class:`CheckResult`; none of them raise on failure.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigurationError
from .model import Direction, FlowConfig, Regime, RegimeKind, reflection_coefficients, spectral_data
from .sat import (
    BoundaryCountError,
    PenaltySet,
    assemble_sat,
    boundary_data_from_physical,
    default_penalties,
    required_conditions,
    validate_penalties,
)
from .sbp import build_grid, build_operators, sbp_boundary_matrix
from .scenarios import mms_scenario
from .solver import DISSIPATION_SCALE, SemiDiscretization


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    value: float | None = None
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def check_sbp_identity(sizes=(4, 64, 2048)) -> CheckResult:
    worst = 0.0
    for N in sizes:
        Q = build_operators(build_grid(N)).dense()["Q"]
        worst = max(worst, float(np.abs(Q + Q.T - sbp_boundary_matrix(N + 1)).max()))
    return CheckResult("sbp_identity", worst == 0.0, f"max |Q + Q^T - B| over N in {list(sizes)}", worst)


def check_spectral(n_samples: int = 1000, seed: int = 0) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_orth = 0.0
    worst_diag = 0.0
    for _ in range(n_samples):
        g, H = rng.uniform(0.1, 100.0, size=2)
        U = rng.uniform(-3.0, 3.0) * np.sqrt(g * H)
        sd = spectral_data(FlowConfig(g, H, U))
        S = sd.S
        worst_orth = max(worst_orth, float(np.abs(S.T @ S - np.eye(2)).max()))
        Mt = sd.Mtilde
        D = S.T @ Mt @ S - g * H * np.diag(sd.lambdas)
        worst_diag = max(worst_diag, float(np.abs(D).max() / np.abs(Mt).sum(axis=1).max()))
    ok = worst_orth <= 1e-12 and worst_diag <= 1e-9
    return CheckResult(
        "eigen_orthonormality",
        ok,
        f"max |S^T S - I| = {worst_orth:.2e}, max relative |S^T M S - gH diag| = {worst_diag:.2e}",
        max(worst_orth, worst_diag),
    )


def _penalties(cfg: FlowConfig, gamma=None, overrides=None, validate=True) -> PenaltySet:
    sd = spectral_data(cfg)
    if sd.regime.kind is RegimeKind.SUBCRITICAL and gamma is None:
        gamma = reflection_coefficients(cfg)
    return default_penalties(sd, gamma, validate=validate, **(overrides or {}))


def check_energy_rate(cfg: FlowConfig, alpha: float = 0.0, N: int = 64, n_states: int = 1000, seed: int = 0,
                      gamma=None, overrides=None, dissipation_scale: float = DISSIPATION_SCALE) -> list[CheckResult]:
    """Admissibility of the penalties, then the semi-discrete energy rate for ``b = 0``."""
    results = []
    try:
        pen = _penalties(cfg, gamma, overrides)
        results.append(CheckResult("penalty_admissibility", True, f"{spectral_data(cfg).regime}: {pen.as_dict()}"))
    except ConfigurationError as exc:
        results.append(CheckResult("penalty_admissibility", False, str(exc)))
        try:
            pen = _penalties(cfg, gamma, overrides, validate=False)
        except ConfigurationError:
            return results

    sd = spectral_data(cfg)
    ops = build_operators(build_grid(N), alpha)
    system = SemiDiscretization(sd, ops, pen, dissipation_scale=dissipation_scale, validate=False)
    rng = np.random.default_rng(seed)
    worst = -np.inf
    for _ in range(n_states):
        q = rng.standard_normal(2 * ops.n)
        worst = max(worst, system.energy_rate(q) / system.energy(q))
    results.append(
        CheckResult(
            "energy_rate",
            bool(worst <= 1e-10),
            f"max q^T(W x P) rhs(q) / |q|^2_WP over {n_states} states = {worst:.3e}",
            float(worst),
        )
    )
    return results


def check_sat_consistency(cfg: FlowConfig, N: int = 64, times=(0.0, 0.037, 0.1)) -> CheckResult:
    """SAT vanishes on states that satisfy the boundary conditions."""
    sc = mms_scenario(cfg)
    sd = spectral_data(cfg)
    pen = _penalties(cfg)
    data = boundary_data_from_physical(cfg, sc.g1, sc.g2)
    grid = build_grid(N)
    worst = 0.0
    for t in times:
        q = sc.exact_state(grid, t)
        sat = assemble_sat(q, t, sd, pen, data)
        worst = max(worst, float(np.linalg.norm(sat) / np.linalg.norm(q)))
    return CheckResult("sat_consistency", worst <= 1e-12, f"max |SAT| / |q| on exact states = {worst:.2e}", worst)


ALL_REGIMES = [Regime(k, d) for k in RegimeKind for d in (Direction.POSITIVE, Direction.NEGATIVE)]


def _config_for(regime: Regime, g: float = 9.8, H: float = 1.0) -> FlowConfig:
    r = {RegimeKind.SUBCRITICAL: 0.5, RegimeKind.CRITICAL: 1.0, RegimeKind.SUPERCRITICAL: 2.0}[regime.kind]
    return FlowConfig.from_froude(r * regime.direction.value, g, H)


def check_boundary_count() -> CheckResult:
    """Default penalties impose the required number of conditions per end; other placements are refused."""
    failures = []
    slots = ("tau01", "tau02", "tauN1", "tauN2")
    for regime in ALL_REGIMES:
        cfg = _config_for(regime)
        sd = spectral_data(cfg)
        base = _penalties(cfg)
        want = required_conditions(regime)
        try:
            validate_penalties(base, sd)
        except ConfigurationError as exc:
            failures.append(f"{regime}: default rejected ({exc})")
        # every on/off pattern of the four penalty slots
        for mask in range(16):
            on = {s: bool(mask >> i & 1) for i, s in enumerate(slots)}
            values = {s: (getattr(base, s) if getattr(base, s) != 0 else 10.0) if on[s] else 0.0 for s in slots}
            pen = PenaltySet(**{**base.__dict__, **values})
            left = int(on["tau01"]) + int(on["tau02"])
            right = int(on["tauN1"]) + int(on["tauN2"])
            if regime.kind is RegimeKind.SUBCRITICAL:
                left, right = min(left, 1), min(right, 1)
            try:
                validate_penalties(pen, sd)
                accepted = True
            except BoundaryCountError:
                accepted = False
            except ConfigurationError:
                accepted = None  # right count, inadmissible values
            if (left, right) != want and accepted is not False:
                failures.append(f"{regime}: pattern {left, right} accepted")
    return CheckResult("boundary_count", not failures, "; ".join(failures) or "required placement enforced for 6 cases")


def run_all(cfg: FlowConfig, alpha: float = 0.0, gamma=None, overrides=None,
            dissipation_scale: float = DISSIPATION_SCALE) -> list[CheckResult]:
    results = [check_sbp_identity(), check_spectral(), check_boundary_count()]
    results += check_energy_rate(cfg, alpha, gamma=gamma, overrides=overrides, dissipation_scale=dissipation_scale)
    results.append(check_sat_consistency(cfg))
    return results
