"""Continuous algebra of the linearized 1D shallow water system.

The perturbation equations

    h_t + U h_x + H u_x = 0
    u_t + g h_x + U u_x = 0

are written as ``q_t + M q_x = 0`` with ``M = [[U, H], [g, U]]``.  The diagonal
symmetrizer ``W = diag(g, H)`` makes ``WM`` symmetric, and ``W`` weights the
mechanical energy.  Everything here is closed-form 2x2 algebra.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError, ConfigurationError, RegimeError

#: relative tolerance on ``|U**2 - gH| / gH`` below which flow is critical
CRITICAL_RTOL = 1.0e-12


class RegimeKind(enum.Enum):
    SUBCRITICAL = "sub"
    CRITICAL = "critical"
    SUPERCRITICAL = "super"


class Direction(enum.Enum):
    POSITIVE = 1
    NEGATIVE = -1
    ZERO = 0


@dataclass(frozen=True)
class Regime:
    kind: RegimeKind
    direction: Direction

    @property
    def inflow_at_left(self) -> bool:
        """True when x = 0 is the inflow boundary (U >= 0)."""
        return self.direction is not Direction.NEGATIVE

    def __str__(self) -> str:
        sign = {Direction.POSITIVE: "+", Direction.NEGATIVE: "-", Direction.ZERO: "0"}
        return f"{self.kind.value}{sign[self.direction]}"


@dataclass(frozen=True)
class FlowConfig:
    """Linearization state: gravity ``g``, mean depth ``H``, mean velocity ``U``."""

    g: float = 9.8
    H: float = 1.0
    U: float = 0.0

    def __post_init__(self):
        for name in ("g", "H", "U"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")
        if self.g <= 0:
            raise ConfigurationError("g must be positive")
        if self.H <= 0:
            raise ConfigurationError("H must be positive")

    @classmethod
    def from_froude(cls, r: float, g: float = 9.8, H: float = 1.0) -> FlowConfig:
        """Flow with ``U = r * sqrt(gH)``."""
        return cls(g=g, H=H, U=r * math.sqrt(g * H))

    @property
    def gH(self) -> float:
        return self.g * self.H

    @property
    def celerity(self) -> float:
        """Gravity wave speed ``sqrt(gH)``."""
        return math.sqrt(self.g * self.H)

    @property
    def froude_sq(self) -> float:
        return self.U**2 / self.gH

    @property
    def max_speed(self) -> float:
        return abs(self.U) + self.celerity

    @property
    def M(self) -> np.ndarray:
        return np.array([[self.U, self.H], [self.g, self.U]])

    @property
    def W(self) -> np.ndarray:
        return np.diag([self.g, self.H])


def classify_regime(cfg: FlowConfig, tol: float = CRITICAL_RTOL) -> Regime:
    gap = cfg.gH - cfg.U**2
    if abs(gap) <= tol * cfg.gH:
        kind = RegimeKind.CRITICAL
    elif gap > 0:
        kind = RegimeKind.SUBCRITICAL
    else:
        kind = RegimeKind.SUPERCRITICAL

    if cfg.U > 0:
        direction = Direction.POSITIVE
    elif cfg.U < 0:
        direction = Direction.NEGATIVE
    else:
        direction = Direction.ZERO
    return Regime(kind, direction)


@dataclass(frozen=True)
class SpectralData:
    """Eigen-decomposition ``WM = gH * S diag(lambda1, lambda2) S^T``.

    ``lambda1 >= lambda2`` are the eigenvalues of ``WM`` scaled by ``1/(gH)``.
    Column ``i`` of ``S`` is ``(lambda_i - U/g, 1) / n_i`` with normalizers
    ``n_1 = c`` and ``n_2 = d``.
    """

    cfg: FlowConfig
    regime: Regime
    lambda1: float
    lambda2: float
    S: np.ndarray
    c: float
    d: float

    @property
    def W(self) -> np.ndarray:
        return self.cfg.W

    @property
    def Mtilde(self) -> np.ndarray:
        g, H, U = self.cfg.g, self.cfg.H, self.cfg.U
        return np.array([[g * U, g * H], [g * H, H * U]])

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([self.lambda1, self.lambda2])


def spectral_data(cfg: FlowConfig, tol: float = CRITICAL_RTOL) -> SpectralData:
    regime = classify_regime(cfg, tol)
    g, H, U = cfg.g, cfg.H, cfg.U
    gH = cfg.gH

    # eigenvalues mu of WM: mu^2 - tr mu + det = 0
    tr = U * (g + H)
    det = 0.0 if regime.kind is RegimeKind.CRITICAL else gH * (U * U - gH)
    disc = tr * tr - 4.0 * det
    if not disc >= 0.0:
        raise ConfigurationError(f"negative discriminant {disc!r} for {cfg}")
    root = math.sqrt(disc)
    # avoid cancellation: form the large root first, the small one from det
    if tr >= 0:
        mu1 = 0.5 * (tr + root)
        mu2 = det / mu1
    else:
        mu2 = 0.5 * (tr - root)
        mu1 = det / mu2
    lam1, lam2 = mu1 / gH, mu2 / gH

    # eigenvector slopes satisfy a1 * a2 = -1; take the better-conditioned one
    a1 = lam1 - U / g
    a2 = lam2 - U / g
    if abs(a1) >= abs(a2):
        a2 = -1.0 / a1
    else:
        a1 = -1.0 / a2
    c = math.hypot(a1, 1.0)
    d = math.hypot(a2, 1.0)
    S = np.array([[a1 / c, a2 / d], [1.0 / c, 1.0 / d]])
    S.setflags(write=False)
    return SpectralData(cfg, regime, lam1, lam2, S, c, d)


def to_characteristic(q, sd: SpectralData) -> np.ndarray:
    """Characteristic variables ``w = S^T q``; ``q`` has shape ``(2, ...)``."""
    q = np.asarray(q, dtype=float)
    return np.tensordot(sd.S.T, q, axes=1)


def from_characteristic(w, sd: SpectralData) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return np.tensordot(sd.S, w, axes=1)


def _characteristic_coefficients(sd: SpectralData) -> tuple[np.ndarray, np.ndarray]:
    """Rows giving ``w1`` and ``w2`` as combinations ``(h-coef, u-coef)``."""
    return sd.S[:, 0], sd.S[:, 1]


def reflection_coefficients(cfg: FlowConfig) -> tuple[float, float]:
    """Reflection coefficients of the transmissive sub-critical conditions.

    ``gamma0`` makes ``w1 - gamma0 * w2`` proportional to ``h + sqrt(H/g) u``
    and ``gamma1`` makes ``w2 - gamma1 * w1`` proportional to
    ``h - sqrt(H/g) u``.  Both are checked against the admissibility bounds
    ``gamma0**2 <= -lambda2/lambda1`` and ``gamma1**2 <= -lambda1/lambda2``.
    """
    sd = spectral_data(cfg)
    if sd.regime.kind is not RegimeKind.SUBCRITICAL:
        raise RegimeError(f"reflection coefficients need sub-critical flow, got {sd.regime}")
    r = math.sqrt(cfg.H / cfg.g)
    (h1, u1), (h2, u2) = _characteristic_coefficients(sd)
    # (u1 - g0 u2) = r (h1 - g0 h2)
    gamma0 = (u1 - r * h1) / (u2 - r * h2)
    # (u2 - g1 u1) = -r (h2 - g1 h1)
    gamma1 = (u2 + r * h2) / (u1 + r * h1)
    check_reflection_admissible(sd, gamma0, gamma1)
    return gamma0, gamma1


def check_reflection_admissible(sd: SpectralData, gamma0: float, gamma1: float, rtol: float = 1e-12):
    lam1, lam2 = sd.lambda1, sd.lambda2
    if sd.regime.kind is not RegimeKind.SUBCRITICAL:
        raise RegimeError(f"reflection coefficients only apply to sub-critical flow, got {sd.regime}")
    bound0 = -lam2 / lam1
    bound1 = -lam1 / lam2
    if gamma0**2 > bound0 * (1 + rtol):
        raise AdmissibilityError(f"gamma0**2 = {gamma0**2:.6g} exceeds bound {bound0:.6g}")
    if gamma1**2 > bound1 * (1 + rtol):
        raise AdmissibilityError(f"gamma1**2 = {gamma1**2:.6g} exceeds bound {bound1:.6g}")


def alternative_reflection_coefficients(cfg: FlowConfig) -> tuple[float, float]:
    """The alternative closed form with a ``sqrt(g/H)`` factor.

    Kept for diagnostics only; it is not admissible in general (at ``U = 0``
    it gives ``gamma0 ~ 1.94`` for g = 9.8, H = 1).
    """
    sd = spectral_data(cfg)
    s = math.sqrt(cfg.g / cfg.H)
    a1 = sd.lambda1 - cfg.U / cfg.g
    a2 = sd.lambda2 - cfg.U / cfg.g
    gamma0 = -((s * a2 - 1) / sd.d) / ((s * a1 - 1) / sd.c)
    gamma1 = -((s * a2 + 1) / sd.d) / ((s * a1 + 1) / sd.c)
    return gamma0, gamma1


def inflow_outflow_scalings(cfg: FlowConfig) -> tuple[float, float]:
    """Scalings ``kappa0, kappa1`` turning transmissive data into characteristic data.

    Sub-critical: ``w1 - gamma0 w2 = kappa0 (h + r u)`` and
    ``w2 - gamma1 w1 = kappa1 (h - r u)`` with ``r = sqrt(H/g)``, so the
    boundary data are ``b1 = 2 kappa0 g1`` and ``b2 = 2 kappa1 g2``.

    Critical: the single inflow characteristic is itself proportional to the
    incoming Riemann variable.  For ``U > 0``, ``w1 = kappa0 (h + r u)``; for
    ``U < 0``, ``w2 = kappa1 (h - r u)``.  The unused scaling is ``nan``.

    Super-critical inflow is determined by both physical conditions and is
    handled by :func:`swesat.sat.boundary_data_from_physical`.
    """
    sd = spectral_data(cfg)
    (h1, u1), (h2, u2) = _characteristic_coefficients(sd)
    kind = sd.regime.kind
    if kind is RegimeKind.SUBCRITICAL:
        gamma0, gamma1 = reflection_coefficients(cfg)
        kappa0 = h1 - gamma0 * h2
        kappa1 = h2 - gamma1 * h1
    elif kind is RegimeKind.CRITICAL:
        if sd.regime.direction is Direction.POSITIVE:
            kappa0, kappa1 = h1, math.nan
        else:
            kappa0, kappa1 = math.nan, h2
    else:
        raise RegimeError("super-critical inflow data has no scalar scaling")
    tiny = 1e-14
    for k in (kappa0, kappa1):
        if not math.isnan(k) and abs(k) < tiny:
            raise ConfigurationError(f"degenerate boundary scaling {k!r} for {cfg}")
    return kappa0, kappa1
