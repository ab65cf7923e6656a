"""Vertex-centred finite volume grid and its summation-by-parts operators.

Nodes ``x_0 = 0 < x_1 < ... < x_N = L`` carry control cells of width
``|I_0| = dx_1/2``, ``|I_i| = (dx_i + dx_{i+1})/2`` and ``|I_N| = dx_N/2``.
With the centred flux the cell balance becomes ``P q' + Q (flux) = 0`` where

    Q = 1/2 * tridiag(-1, 0, 1)  with corner rows (-1/2, 1/2) and (-1/2, 1/2)
    A = tridiag(1, -2, 1)        with corner rows (-1, 1) and (1, -1)

so that ``Q + Q^T = diag(-1, 0, ..., 0, 1)``.  The operators are applied as
stencils; :meth:`SbpOperators.dense` is there for test oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridError, ShapeError


@dataclass(frozen=True)
class Grid:
    x: np.ndarray
    widths: np.ndarray
    volumes: np.ndarray

    @property
    def N(self) -> int:
        return len(self.widths)

    @property
    def n_nodes(self) -> int:
        return len(self.x)

    @property
    def length(self) -> float:
        return float(self.x[-1] - self.x[0])

    @property
    def min_width(self) -> float:
        return float(self.widths.min())


def build_grid(N: int, L: float = 1.0, widths=None) -> Grid:
    """Grid of ``N`` intervals (``N + 1`` nodes) on ``[0, L]``.

    ``widths`` gives explicit interval lengths; they must be positive and
    sum to ``L``.  Without it the spacing is uniform.
    """
    if int(N) != N or N < 2:
        raise GridError(f"need at least 2 intervals, got N={N!r}")
    N = int(N)
    if not (L > 0 and math.isfinite(L)):
        raise GridError(f"domain length must be positive, got {L!r}")

    if widths is None:
        x = L * np.arange(N + 1) / N
        x[-1] = L
        dx = np.diff(x)
    else:
        dx = np.asarray(widths, dtype=float)
        if dx.shape != (N,):
            raise GridError(f"expected {N} widths, got shape {dx.shape}")
        if np.any(~np.isfinite(dx)) or np.any(dx <= 0):
            raise GridError("cell widths must be positive")
        if abs(dx.sum() - L) > 1e-12 * L:
            raise GridError(f"widths sum to {dx.sum()!r}, expected {L!r}")
        x = np.concatenate([[0.0], np.cumsum(dx)])

    vol = np.empty(N + 1)
    vol[0] = dx[0] / 2
    vol[-1] = dx[-1] / 2
    vol[1:-1] = (dx[:-1] + dx[1:]) / 2

    for a in (x, dx, vol):
        a.setflags(write=False)
    return Grid(x=x, widths=dx, volumes=vol)


@dataclass(frozen=True)
class SbpOperators:
    grid: Grid
    alpha: float = 0.0
    _pinv: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not (self.alpha >= 0 and math.isfinite(self.alpha)):
            raise GridError(f"dissipation strength must be >= 0, got {self.alpha!r}")
        pinv = 1.0 / self.grid.volumes
        pinv.setflags(write=False)
        object.__setattr__(self, "_pinv", pinv)

    @property
    def n(self) -> int:
        return self.grid.n_nodes

    @property
    def P(self) -> np.ndarray:
        """Diagonal of the norm matrix."""
        return self.grid.volumes

    @property
    def Pinv(self) -> np.ndarray:
        return self._pinv

    def _check(self, v):
        v = np.asarray(v, dtype=float)
        if v.ndim == 0 or v.shape[-1] != self.n:
            raise ShapeError(f"expected trailing dimension {self.n}, got shape {v.shape}")
        return v

    # stencils act on the last axis so a (2, n) state applies blockwise

    def apply_Q(self, v) -> np.ndarray:
        v = self._check(v)
        out = np.empty_like(v)
        out[..., 1:-1] = 0.5 * (v[..., 2:] - v[..., :-2])
        out[..., 0] = 0.5 * (v[..., 1] - v[..., 0])
        out[..., -1] = 0.5 * (v[..., -1] - v[..., -2])
        return out

    def apply_A(self, v) -> np.ndarray:
        v = self._check(v)
        out = np.empty_like(v)
        out[..., 1:-1] = v[..., 2:] - 2.0 * v[..., 1:-1] + v[..., :-2]
        out[..., 0] = v[..., 1] - v[..., 0]
        out[..., -1] = v[..., -2] - v[..., -1]
        return out

    def apply_P(self, v) -> np.ndarray:
        return self.P * self._check(v)

    def apply_Dx(self, v) -> np.ndarray:
        """First derivative ``P^{-1} Q v``."""
        return self.Pinv * self.apply_Q(v)

    def apply(self, which: str, v) -> np.ndarray:
        try:
            fn = {"Dx": self.apply_Dx, "Q": self.apply_Q, "A": self.apply_A, "P": self.apply_P}[which]
        except KeyError:
            raise ValueError(f"unknown operator {which!r}") from None
        return fn(v)

    def dense(self) -> dict[str, np.ndarray]:
        """Materialized ``P``, ``Q``, ``A`` (for small test problems)."""
        n = self.n
        Q = 0.5 * (np.eye(n, k=1) - np.eye(n, k=-1))
        Q[0, 0] = -0.5
        Q[-1, -1] = 0.5
        A = np.eye(n, k=1) + np.eye(n, k=-1) - 2.0 * np.eye(n)
        A[0, 0] = -1.0
        A[-1, -1] = -1.0
        return {"P": np.diag(self.P), "Q": Q, "A": A}


def build_operators(grid: Grid, alpha: float = 0.0) -> SbpOperators:
    return SbpOperators(grid, float(alpha))


def sbp_boundary_matrix(n: int) -> np.ndarray:
    B = np.zeros((n, n))
    B[0, 0] = -1.0
    B[-1, -1] = 1.0
    return B
