"""Weak boundary treatment: penalty parameters and SAT assembly.

The boundary conditions are imposed on the characteristic variables
``w = S^T q`` at the end nodes.  In the sub-critical regime one coupled
condition is imposed at each end,

    x = 0:  w1 - gamma0 w2 = b1        x = L:  w2 - gamma1 w1 = b2,

while critical and super-critical flow impose conditions at the inflow end
only (one and two of them respectively).  For each end node ``k`` the penalty
term added to ``P dq/dt`` is

    SAT_k = -1/2 (W^-1 S W) [H tau_k1 r_k1, g tau_k2 r_k2]^T
          = -gH/2 W^-1 S [tau_k1 r_k1, tau_k2 r_k2]^T

where ``r_k1, r_k2`` are the boundary residuals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np

from .errors import AdmissibilityError, ConfigurationError
from .model import (
    Direction,
    FlowConfig,
    Regime,
    RegimeKind,
    SpectralData,
    check_reflection_admissible,
    inflow_outflow_scalings,
    reflection_coefficients,
    spectral_data,
)

TimeFunction = Callable[[float], float]


class BoundaryCountError(ConfigurationError):
    """Penalties impose a number or location of conditions the regime does not allow."""


def _zero(t: float) -> float:
    return 0.0


@dataclass(frozen=True)
class BoundaryData:
    """Characteristic boundary data ``b1(t)``, ``b2(t)``."""

    b1: TimeFunction = _zero
    b2: TimeFunction = _zero
    provenance: str = "direct"

    @classmethod
    def zero(cls) -> BoundaryData:
        return cls(provenance="zero")


@dataclass(frozen=True)
class PenaltySet:
    regime: Regime
    tau01: float = 0.0
    tau02: float = 0.0
    tauN1: float = 0.0
    tauN2: float = 0.0
    gamma0: float = 0.0
    gamma1: float = 0.0

    def as_dict(self) -> dict:
        names = ("tau01", "tau02", "tauN1", "tauN2", "gamma0", "gamma1")
        return {name: float(getattr(self, name)) for name in names}


def required_conditions(regime: Regime) -> tuple[int, int]:
    """Number of boundary conditions at ``(x=0, x=L)`` for the regime."""
    kind = regime.kind
    if kind is RegimeKind.SUBCRITICAL:
        return (1, 1)
    n_in = 1 if kind is RegimeKind.CRITICAL else 2
    if regime.direction is Direction.POSITIVE:
        return (n_in, 0)
    return (0, n_in)


def imposed_conditions(pen: PenaltySet) -> tuple[int, int]:
    """Number of boundary conditions a penalty set actually imposes at each end."""
    if pen.regime.kind is RegimeKind.SUBCRITICAL:
        # one coupled residual per end, whatever the split of its two penalties
        left = int(pen.tau01 != 0 or pen.tau02 != 0)
        right = int(pen.tauN1 != 0 or pen.tauN2 != 0)
        return (left, right)
    left = int(pen.tau01 != 0) + int(pen.tau02 != 0)
    right = int(pen.tauN1 != 0) + int(pen.tauN2 != 0)
    return (left, right)


def _close(a: float, b: float, scale: float, rtol: float = 1e-12) -> bool:
    return abs(a - b) <= rtol * max(scale, 1.0)


def validate_penalties(pen: PenaltySet, sd: SpectralData) -> None:
    """Raise unless ``pen`` is a stable choice for ``sd``."""
    if pen.regime != sd.regime:
        raise ConfigurationError(f"penalties built for {pen.regime}, flow is {sd.regime}")

    want = required_conditions(sd.regime)
    got = imposed_conditions(pen)
    if got != want:
        raise BoundaryCountError(
            f"{sd.regime}: penalties impose {got[0]} condition(s) at x=0 and {got[1]} at x=L, "
            f"regime requires {want[0]} and {want[1]}"
        )

    lam1, lam2 = sd.lambda1, sd.lambda2
    scale = max(abs(lam1), abs(lam2))
    kind = sd.regime.kind
    positive = sd.regime.direction is Direction.POSITIVE
    if kind is RegimeKind.SUBCRITICAL:
        check_reflection_admissible(sd, pen.gamma0, pen.gamma1)
        expected = {
            "tau01": lam1,
            "tau02": pen.gamma0 * lam1,
            "tauN2": -lam2,
            "tauN1": -pen.gamma1 * lam2,
        }
        for name, value in expected.items():
            if not _close(getattr(pen, name), value, scale):
                raise AdmissibilityError(f"{name} = {getattr(pen, name)!r}, stability requires {value!r}")
    elif kind is RegimeKind.SUPERCRITICAL:
        if positive:
            bounds = {"tau01": lam1, "tau02": lam2}
        else:
            bounds = {"tauN1": -lam1, "tauN2": -lam2}
        for name, lo in bounds.items():
            if getattr(pen, name) < lo - 1e-12 * scale:
                raise AdmissibilityError(f"{name} = {getattr(pen, name)!r} below stability bound {lo!r}")
    else:
        if positive:
            name, lo = "tau01", lam1
        else:
            name, lo = "tauN2", -lam2
        if getattr(pen, name) < lo - 1e-12 * scale:
            raise AdmissibilityError(f"{name} = {getattr(pen, name)!r} below stability bound {lo!r}")


def default_penalties(sd: SpectralData, gamma: tuple[float, float] | None = None, *, validate: bool = True,
                      **overrides) -> PenaltySet:
    """Minimal stable penalties for the regime of ``sd``.

    Sub-critical flow needs the reflection coefficients ``gamma = (gamma0,
    gamma1)`` and uses the equalities ``tau01 = lambda1``, ``tau02 = gamma0
    lambda1``, ``tauN2 = -lambda2``, ``tauN1 = -gamma1 lambda2``.  Otherwise
    each inequality bound is met with equality; ``overrides`` replaces single
    penalties (still validated unless ``validate=False``).
    """
    regime = sd.regime
    lam1, lam2 = sd.lambda1, sd.lambda2
    if regime.kind is RegimeKind.SUBCRITICAL:
        if gamma is None:
            raise ConfigurationError("sub-critical penalties need reflection coefficients")
        g0, g1 = gamma
        pen = PenaltySet(regime, tau01=lam1, tau02=g0 * lam1, tauN1=-g1 * lam2, tauN2=-lam2, gamma0=g0, gamma1=g1)
    else:
        if gamma is not None:
            raise ConfigurationError(f"reflection coefficients are meaningless for {regime}")
        positive = regime.direction is Direction.POSITIVE
        if regime.kind is RegimeKind.SUPERCRITICAL:
            pen = (PenaltySet(regime, tau01=lam1, tau02=lam2) if positive
                   else PenaltySet(regime, tauN1=-lam1, tauN2=-lam2))
        else:
            pen = PenaltySet(regime, tau01=lam1) if positive else PenaltySet(regime, tauN2=-lam2)
    if overrides:
        pen = replace(pen, **overrides)
    if validate:
        validate_penalties(pen, sd)
    return pen


def boundary_data_from_physical(cfg: FlowConfig, g1: TimeFunction, g2: TimeFunction) -> BoundaryData:
    """Map transmissive data to characteristic data ``b1, b2``.

    ``g1`` prescribes ``(h + r u)/2`` and ``g2`` prescribes ``(h - r u)/2``
    with ``r = sqrt(H/g)``.  Sub-critical flow takes ``g1`` at x = 0 and
    ``g2`` at x = L; critical flow takes the incoming one at the inflow end;
    super-critical flow takes both at the inflow end, which fixes ``q`` there
    and hence ``b = S^T q``.
    """
    sd = spectral_data(cfg)
    regime = sd.regime
    if regime.kind is RegimeKind.SUPERCRITICAL:
        r = math.sqrt(cfg.H / cfg.g)
        (s11, s21), (s12, s22) = sd.S[:, 0], sd.S[:, 1]

        def b1(t):
            a, b = g1(t), g2(t)
            return s11 * (a + b) + s21 * (a - b) / r

        def b2(t):
            a, b = g1(t), g2(t)
            return s12 * (a + b) + s22 * (a - b) / r

        return BoundaryData(b1, b2, provenance="physical")

    kappa0, kappa1 = inflow_outflow_scalings(cfg)
    if regime.kind is RegimeKind.CRITICAL:
        if regime.direction is Direction.POSITIVE:
            return BoundaryData(lambda t: 2.0 * kappa0 * g1(t), _zero, provenance="physical")
        return BoundaryData(_zero, lambda t: 2.0 * kappa1 * g2(t), provenance="physical")
    return BoundaryData(
        lambda t: 2.0 * kappa0 * g1(t),
        lambda t: 2.0 * kappa1 * g2(t),
        provenance="physical",
    )


def transmissive_setup(cfg: FlowConfig, g1: TimeFunction = _zero, g2: TimeFunction = _zero):
    """Spectral data, default penalties and boundary data for transmissive conditions."""
    sd = spectral_data(cfg)
    gamma = reflection_coefficients(cfg) if sd.regime.kind is RegimeKind.SUBCRITICAL else None
    pen = default_penalties(sd, gamma)
    return sd, pen, boundary_data_from_physical(cfg, g1, g2)


def boundary_residuals(q2: np.ndarray, t: float, sd: SpectralData, pen: PenaltySet, data: BoundaryData):
    """Residual pairs ``(r_01, r_02)`` and ``(r_N1, r_N2)``; ``q2`` has shape ``(2, n)``."""
    S = sd.S
    w0 = S.T @ q2[:, 0]
    wN = S.T @ q2[:, -1]
    b1 = data.b1(t)
    b2 = data.b2(t)
    if pen.regime.kind is RegimeKind.SUBCRITICAL:
        r0 = w0[0] - pen.gamma0 * w0[1] - b1
        rN = wN[1] - pen.gamma1 * wN[0] - b2
        return (r0, r0), (rN, rN)
    if pen.regime.direction is Direction.POSITIVE:
        return (w0[0] - b1, w0[1] - b2), (0.0, 0.0)
    return (0.0, 0.0), (wN[0] - b1, wN[1] - b2)


def assemble_sat(q, t: float, sd: SpectralData, pen: PenaltySet, data: BoundaryData) -> np.ndarray:
    """SAT vector for the component-major state ``q = [h_0..h_N, u_0..u_N]``.

    Only the four entries at the two boundary nodes are nonzero.
    """
    if pen.regime != sd.regime:
        raise ConfigurationError(f"penalties built for {pen.regime}, flow is {sd.regime}")
    q = np.asarray(q, dtype=float)
    q2 = q.reshape(2, -1)
    out = np.zeros_like(q2)
    _add_sat(out, q2, t, sd, pen, data)
    return out.reshape(q.shape)


def _add_sat(out2: np.ndarray, q2: np.ndarray, t: float, sd: SpectralData, pen: PenaltySet, data: BoundaryData):
    (r01, r02), (rN1, rN2) = boundary_residuals(q2, t, sd, pen, data)
    cfg = sd.cfg
    # -gH/2 W^-1 S v  ==  -1/2 [H S[0] . v, g S[1] . v]
    S = sd.S
    for k, v1, v2 in ((0, pen.tau01 * r01, pen.tau02 * r02), (-1, pen.tauN1 * rN1, pen.tauN2 * rN2)):
        if v1 == 0.0 and v2 == 0.0:
            continue
        out2[0, k] -= 0.5 * cfg.H * (S[0, 0] * v1 + S[0, 1] * v2)
        out2[1, k] -= 0.5 * cfg.g * (S[1, 0] * v1 + S[1, 1] * v2)
