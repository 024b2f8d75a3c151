"""Explicit time integration of the two-patch Cauchy problem and of the
stationary solution by time marching."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kernels
from .errors import BoundExceeded, CflViolation, NotConverged, PositivityLost
from .grid import Field, InterfaceGrid, closure_value, flux_mismatch
from .params import PatchParams

log = logging.getLogger(__name__)

DIRICHLET = "dirichlet"
NEUMANN = "neumann-zero"


@dataclass(frozen=True)
class Boundary:
    """Boundary policy; a Dirichlet value may be a constant or a function of t."""

    kind: str = NEUMANN
    value: float | Callable[[float], float] = 0.0

    def __post_init__(self):
        if self.kind not in (DIRICHLET, NEUMANN):
            raise ValueError(f"unknown boundary kind {self.kind!r}")

    @property
    def time_dependent(self) -> bool:
        return self.kind == DIRICHLET and callable(self.value)

    def value_at(self, t: float) -> float:
        if self.kind == NEUMANN:
            return 0.0
        return float(self.value(t)) if callable(self.value) else float(self.value)

    @property
    def code(self) -> int:
        return kernels.DIRICHLET if self.kind == DIRICHLET else kernels.NEUMANN

    def to_dict(self) -> dict:
        value = "<function>" if callable(self.value) else self.value
        return {"kind": self.kind, "value": value}


def dirichlet(value) -> Boundary:
    return Boundary(DIRICHLET, value)


def neumann() -> Boundary:
    return Boundary(NEUMANN, 0.0)


def max_stable_dt(grid: InterfaceGrid, p: PatchParams, cfl_safety: float = 1.0) -> float:
    return cfl_safety * grid.h**2 / (2.0 * max(p.d1, p.d2))


@dataclass
class SolverConfig:
    """Time-integration settings.

    With ``dt=None`` the step is the largest value not above
    ``cfl_safety*h**2/(2*max(d1, d2))`` that divides ``snapshot_interval``
    evenly, so snapshot times of runs started at different integer times
    coincide.
    """

    t_start: float
    t_end: float
    dt: float | None = None
    cfl_safety: float = 0.4
    snapshot_interval: float | None = None
    boundary_left: Boundary = field(default_factory=neumann)
    boundary_right: Boundary = field(default_factory=neumann)

    def __post_init__(self):
        if not 0 < self.cfl_safety <= 1:
            raise ValueError("cfl_safety must lie in (0, 1]")
        if not self.t_end > self.t_start:
            raise ValueError("need t_end > t_start")

    def schedule(self, grid: InterfaceGrid, p: PatchParams) -> tuple[float, int, int]:
        """Return ``(dt, stride, n_snapshots)``; snapshots are every ``stride`` steps."""
        limit = max_stable_dt(grid, p, self.cfl_safety)
        total = self.t_end - self.t_start
        interval = self.snapshot_interval or total
        n_int = round(total / interval)
        if n_int < 1 or abs(n_int * interval - total) > 1e-9 * max(1.0, abs(total)):
            raise ValueError("t_end - t_start must be a multiple of snapshot_interval")
        if self.dt is None:
            stride = math.ceil(interval / limit * (1 - 1e-12))
            dt = interval / stride
        else:
            if self.dt > limit * (1 + 1e-12):
                raise CflViolation(f"dt={self.dt:g} exceeds the stability bound {limit:g}")
            stride = round(interval / self.dt)
            if abs(stride * self.dt - interval) > 1e-9 * interval:
                raise ValueError("snapshot_interval must be a multiple of dt")
            dt = self.dt
        return dt, stride, n_int + 1

    def to_dict(self) -> dict:
        return {
            "t_start": self.t_start,
            "t_end": self.t_end,
            "dt": self.dt,
            "cfl_safety": self.cfl_safety,
            "snapshot_interval": self.snapshot_interval,
            "boundary_left": self.boundary_left.to_dict(),
            "boundary_right": self.boundary_right.to_dict(),
        }


@dataclass
class Trajectory:
    grid: InterfaceGrid
    times: np.ndarray
    values: np.ndarray  # (n_snapshots, n_nodes)
    config: SolverConfig
    dt: float

    def __len__(self) -> int:
        return len(self.times)

    def field(self, i: int) -> Field:
        return Field(self.grid, self.values[i])

    def index_of(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.times - t)))
        if abs(self.times[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise KeyError(f"no snapshot at t={t}")
        return i

    def snapshots(self):
        for t, v in zip(self.times, self.values):
            yield float(t), Field(self.grid, v)


def _coefs(p: PatchParams) -> tuple[np.ndarray, np.ndarray]:
    return p.reaction_left.coef_array, p.reaction_right.coef_array


def _apply_nodes(v: np.ndarray, grid: InterfaceGrid, sigma: float, left: Boundary,
                 right: Boundary, t: float) -> None:
    v[0] = left.value_at(t) if left.kind == DIRICHLET else (4.0 * v[1] - v[2]) / 3.0
    v[-1] = right.value_at(t) if right.kind == DIRICHLET else (4.0 * v[-2] - v[-3]) / 3.0
    v[grid.index_zero] = closure_value(v, grid.index_zero, sigma)


def _advance(v: np.ndarray, nsteps: int, dt: float, t: float, grid: InterfaceGrid,
             p: PatchParams, left: Boundary, right: Boundary, backend=None) -> None:
    cl, cr = _coefs(p)
    common = (dt, grid.h, p.d1, p.d2, p.sigma, grid.index_zero, cl, cr)
    if left.time_dependent or right.time_dependent:
        # boundary data change every step: one kernel call per step
        for k in range(nsteps):
            tk = t + (k + 1) * dt
            kernels.advance(v, 1, *common, left.code, left.value_at(tk), right.code,
                            right.value_at(tk), backend=backend)
    elif nsteps:
        kernels.advance(v, nsteps, *common, left.code, left.value_at(t), right.code,
                        right.value_at(t), backend=backend)


def step(u: Field, p: PatchParams, dt: float, boundary_left: Boundary | None = None,
         boundary_right: Boundary | None = None, t: float = 0.0,
         cfl_safety: float = 1.0) -> Field:
    """One Heun step; node 0 and the boundary nodes are reset after each stage."""
    if dt > max_stable_dt(u.grid, p, cfl_safety) * (1 + 1e-12):
        raise CflViolation(f"dt={dt:g} exceeds the stability bound")
    left = boundary_left or neumann()
    right = boundary_right or neumann()
    v = np.ascontiguousarray(u.values, dtype=float).copy()
    _advance(v, 1, dt, t, u.grid, p, left, right)
    return Field(u.grid, v)


def _check_bounds(v: np.ndarray, t: float, scale: float, upper: float) -> None:
    if not np.all(np.isfinite(v)):
        raise PositivityLost(f"non-finite values at t={t:g}")
    low = float(v.min())
    if low < -1e-8 * scale:
        raise PositivityLost(f"min u = {low:.3e} at t={t:g}")
    high = float(v.max())
    if high > upper + 1e-8 * scale:
        raise BoundExceeded(f"max u = {high:.6g} > {upper:.6g} at t={t:g}")


def solve_cauchy(u0: Field, p: PatchParams, cfg: SolverConfig, backend=None) -> Trajectory:
    """Integrate from ``cfg.t_start`` to ``cfg.t_end``, storing every snapshot.

    The initial datum is first projected onto the boundary policy and the
    interface closure.  Bounds ``0 <= u <= max(K1, K2, max u0)`` are asserted
    at every snapshot, never enforced.
    """
    grid = u0.grid
    if np.any(u0.values < 0) or not np.all(np.isfinite(u0.values)):
        raise ValueError("initial datum must be finite and nonnegative")
    dt, stride, n_snap = cfg.schedule(grid, p)
    left, right = cfg.boundary_left, cfg.boundary_right
    scale = p.scale
    upper = max(p.K1, p.K2, float(u0.values.max()))
    v = np.ascontiguousarray(u0.values, dtype=float).copy()
    _apply_nodes(v, grid, p.sigma, left, right, cfg.t_start)
    # the closure and zero-flux formulas extrapolate, so rough data can leave [0, upper]
    _check_bounds(v, cfg.t_start, scale, upper)
    interval = stride * dt
    times = cfg.t_start + interval * np.arange(n_snap)
    times[-1] = cfg.t_end
    out = np.empty((n_snap, grid.size))
    out[0] = v
    for k in range(1, n_snap):
        _advance(v, stride, dt, float(times[k - 1]), grid, p, left, right, backend)
        _check_bounds(v, float(times[k]), scale, upper)
        out[k] = v
    return Trajectory(grid, times, out, cfg, dt)


@dataclass
class StationaryProfile:
    field: Field
    residual: float
    march_time: float

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    @property
    def x(self) -> np.ndarray:
        return self.field.x

    def __call__(self, x):
        """Linear interpolation, constant beyond the grid ends."""
        return np.interp(x, self.field.x, self.field.values)


def solve_stationary(p: PatchParams, grid: InterfaceGrid, tol: float = 1e-9,
                     t_max: float = 2000.0, cfl_safety: float = 0.4,
                     check_interval: float = 1.0, backend=None) -> StationaryProfile:
    """March from ``min(K1, K2)`` with zero-flux ends until ``sup|u_t| < tol``."""
    dt = max_stable_dt(grid, p, cfl_safety)
    chunk = max(1, math.ceil(check_interval / dt))
    left = right = neumann()
    v = np.full(grid.size, min(p.K1, p.K2))
    t = 0.0
    while True:
        prev = v.copy()
        _advance(v, 1, dt, t, grid, p, left, right, backend)
        t += dt
        rate = float(np.max(np.abs(v - prev))) / dt
        if rate < tol:
            break
        if t >= t_max:
            raise NotConverged(f"sup|u_t| = {rate:.3e} > tol = {tol:.1e} at t_max = {t_max:g}")
        n = min(chunk, max(1, math.ceil((t_max - t) / dt)))
        _advance(v, n, dt, t, grid, p, left, right, backend)
        t += n * dt
    _check_bounds(v, t, p.scale, max(p.K1, p.K2))
    V = Field(grid, v)
    log.debug("stationary: residual %.3e after t=%.1f, flux mismatch %.1e", rate, t,
              flux_mismatch(V, p.sigma))
    return StationaryProfile(V, rate, t)
