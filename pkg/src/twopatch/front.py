"""Entire solution by the backward-initial-time limit, and the measurements
made on it: front position, past and future speeds, leading-edge decay and
distance to the travelling-wave and stationary profiles."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .bounds import EnvelopePair, eval_sub
from .errors import (BoundaryGuardViolation, InsufficientSamples, LevelNotCrossed,
                     NotConverged, WindowEmpty)
from .evolve import SolverConfig, StationaryProfile, Trajectory, dirichlet, solve_cauchy
from .grid import Field, InterfaceGrid
from .params import DispersionData, PatchParams
from .wave import WaveProfile

log = logging.getLogger(__name__)

RIGHT_GUARD = 20.0
MONOTONE_SLACK = 1e-10


@dataclass
class EntireSolution:
    """Last run of the schedule, with the run-to-run comparison history.

    ``settled_from`` is the start of the window on which the last two runs
    were compared; snapshots before it still carry the initial-time transient.
    """

    trajectory: Trajectory
    schedule: list[int]
    sup_differences: list[float]
    min_differences: list[float]
    settled_from: float
    converged: bool
    tol_entire: float

    @property
    def monotone(self) -> bool:
        scale = float(np.max(self.trajectory.values))
        return all(m >= -MONOTONE_SLACK * scale for m in self.min_differences)

    def settled_indices(self) -> np.ndarray:
        return np.nonzero(self.trajectory.times >= self.settled_from - 1e-9)[0]


def check_guards(p: PatchParams, grid: InterfaceGrid, disp: DispersionData,
                 env: EnvelopePair, schedule, t_end: float) -> None:
    """Reject schedules and domains the truncated problem cannot represent."""
    T = env.T
    bad = [n for n in schedule if not n > T]
    if bad:
        raise ValueError(f"schedule entries {bad} do not exceed T = {T:.6g}")
    if list(schedule) != sorted(set(schedule)):
        raise ValueError("schedule must be strictly increasing")
    margin = disp.lambda2 * (grid.x_right - disp.c2 * t_end)
    if margin < RIGHT_GUARD:
        raise BoundaryGuardViolation(
            f"lambda2*(x_right - c2*t_end) = {margin:.3g} < {RIGHT_GUARD}; widen the grid to the right")
    n_max = max(schedule)
    lag = grid.x_left - (-disp.c1 * n_max - env.aux.x0)
    depth = -env.phi1.left_rate * lag
    if depth < RIGHT_GUARD:
        raise BoundaryGuardViolation(
            f"initial front at t=-{n_max} sits too close to x_left (rate*distance = {depth:.3g})")


def front_config(grid: InterfaceGrid, V: StationaryProfile, t_start: float, t_end: float,
                 snapshot_interval: float, cfl_safety: float = 0.4, dt=None) -> SolverConfig:
    return SolverConfig(
        t_start=t_start, t_end=t_end, dt=dt, cfl_safety=cfl_safety,
        snapshot_interval=snapshot_interval,
        boundary_left=dirichlet(float(V.values[0])),
        boundary_right=dirichlet(0.0),
    )


def _run(p, grid, env, base: SolverConfig, n: int) -> Trajectory:
    u0 = Field(grid, eval_sub(env, -float(n), grid.x))
    return solve_cauchy(u0, p, replace(base, t_start=-float(n)))


def _compare(newer: Trajectory, older: Trajectory, t_from: float) -> tuple[float, float]:
    keys_old = {round(t, 9): i for i, t in enumerate(older.times) if t >= t_from - 1e-9}
    diffs_max, diffs_min = 0.0, math.inf
    for j, t in enumerate(newer.times):
        i = keys_old.get(round(t, 9))
        if i is None:
            continue
        d = newer.values[j] - older.values[i]
        diffs_max = max(diffs_max, float(np.abs(d).max()))
        diffs_min = min(diffs_min, float(d.min()))
    if diffs_min == math.inf:
        raise ValueError("runs share no snapshot times")
    return diffs_max, diffs_min


def construct_entire(p: PatchParams, grid: InterfaceGrid, base: SolverConfig, env: EnvelopePair,
                     schedule, tol_entire: float = 1e-6, parallel: int = 1,
                     strict: bool = True) -> EntireSolution:
    """Solve from ``t = -n`` with the subsolution as datum for each n in the schedule.

    Successive runs are compared on ``[-n_prev + 2, t_end]``; the loop stops at
    the first difference below ``tol_entire``.  With ``strict`` an exhausted
    schedule raises :class:`NotConverged`; otherwise the last run is returned
    with ``converged=False``.
    """
    schedule = [int(n) for n in schedule]
    if not schedule:
        raise ValueError("empty schedule")
    bad = [n for n in schedule if not n > env.T]
    if bad:
        raise ValueError(f"schedule entries {bad} do not exceed T = {env.T:.6g}")
    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            runs = iter(list(pool.map(lambda n: _run(p, grid, env, base, n), schedule)))
    else:
        runs = (_run(p, grid, env, base, n) for n in schedule)
    sups: list[float] = []
    mins: list[float] = []
    prev, prev_n = None, None
    used: list[int] = []
    converged = False
    settled = base.t_start
    for n, traj in zip(schedule, runs):
        used.append(n)
        if prev is not None:
            settled = -prev_n + 2.0
            s, m = _compare(traj, prev, settled)
            sups.append(s)
            mins.append(m)
            log.info("n=%d vs n=%d: sup diff %.3e, min diff %.3e", n, prev_n, s, m)
            if s < tol_entire:
                converged = True
                prev = traj
                break
        else:
            settled = -n + 2.0
        prev, prev_n = traj, n
    result = EntireSolution(prev, used, sups, mins, settled, converged, tol_entire)
    if strict and not converged:
        err = NotConverged(f"schedule {used} exhausted; sup differences {sups}")
        err.result = result
        raise err
    return result


@dataclass
class FrontTrack:
    theta: float
    times: np.ndarray
    positions: np.ndarray
    note: str = "rightmost node with u >= theta, linear interpolation to the next node"

    def rows(self):
        return zip(self.times, self.positions)


def level_position(x: np.ndarray, u: np.ndarray, theta: float) -> float:
    above = np.nonzero(u >= theta)[0]
    if above.size == 0:
        raise LevelNotCrossed(f"u < {theta:g} everywhere")
    j = int(above[-1])
    if j == u.size - 1:
        raise LevelNotCrossed(f"u >= {theta:g} up to the right boundary")
    return float(x[j] + (u[j] - theta) / (u[j] - u[j + 1]) * (x[j + 1] - x[j]))


def track_front(traj: Trajectory, theta: float | None = None, p: PatchParams | None = None) -> FrontTrack:
    if theta is None:
        if p is None:
            raise ValueError("give theta or the parameters to derive it")
        theta = 0.5 * min(p.K1, p.K2)
    x = traj.grid.x
    pos = np.array([level_position(x, v, theta) for v in traj.values])
    return FrontTrack(theta, traj.times.copy(), pos)


@dataclass
class SpeedFit:
    slope: float
    intercept: float
    rms: float
    n: int
    window: tuple[float, float]

    def to_dict(self) -> dict:
        return asdict(self)


def estimate_speed(track: FrontTrack, t_window: tuple[float, float]) -> SpeedFit:
    lo, hi = t_window
    mask = (track.times >= lo - 1e-9) & (track.times <= hi + 1e-9)
    n = int(mask.sum())
    if n < 10:
        raise InsufficientSamples(f"{n} samples in window [{lo:g}, {hi:g}]")
    t, X = track.times[mask], track.positions[mask]
    slope, icept = np.polyfit(t, X, 1)
    rms = float(np.sqrt(np.mean((X - (slope * t + icept)) ** 2)))
    return SpeedFit(float(slope), float(icept), rms, n, (float(lo), float(hi)))


@dataclass
class DecayFit:
    rate: float
    prefactor: float
    n: int
    x_range: tuple[float, float]

    def to_dict(self) -> dict:
        return asdict(self)


def estimate_decay(u: Field, t: float, lam: float, c: float, K: float,
                   x_window: tuple[float, float] | None = None) -> DecayFit:
    """Fit ``log u`` ahead of ``x = c t`` where ``u/K`` lies in ``[1e-8, 1e-2]``.

    ``prefactor`` is ``exp(mean(log u + lam*(x - c t)))``, the amplitude
    relative to ``exp(-lam*(x - c t))``.
    """
    x, v = u.x, u.values
    mask = (x > c * t) & (v >= 1e-8 * K) & (v <= 1e-2 * K)
    if x_window is not None:
        mask &= (x >= x_window[0]) & (x <= x_window[1])
    n = int(mask.sum())
    if n < 2:
        raise WindowEmpty("no nodes with 1e-8*K <= u <= 1e-2*K ahead of c*t")
    xs, ys = x[mask], np.log(v[mask])
    slope, _ = np.polyfit(xs, ys, 1)
    pref = float(np.exp(np.mean(ys + lam * (xs - c * t))))
    return DecayFit(-float(slope), pref, n, (float(xs[0]), float(xs[-1])))


@dataclass
class ProfileLimitsReport:
    times: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    behind: np.ndarray
    early: list[tuple[float, float]]
    late: list[tuple[float, float]]
    behind_at_end: float
    nonuniform_at_end: float
    settled_from: float

    def rows(self):
        return zip(self.times, self.e1, self.e2, self.behind)

    def summary(self) -> dict:
        return {
            "e1_earliest": [list(r) for r in self.early],
            "e2_latest": [list(r) for r in self.late],
            "behind_front_error_at_end": self.behind_at_end,
            "sup_all_x_abs_u_minus_phi2_at_end": self.nonuniform_at_end,
            "settled_from": self.settled_from,
        }


BEHIND_OFFSET = 40.0
AHEAD_OFFSET = 30.0


def behind_error(x, u, V, c2, t) -> float:
    mask = x <= c2 * t - BEHIND_OFFSET
    if not mask.any():
        return math.nan
    return float(np.max(np.abs(u[mask] - V[mask])))


def compare_profiles(entire: EntireSolution, phi1: WaveProfile, phi2: WaveProfile,
                     V: StationaryProfile, disp: DispersionData) -> ProfileLimitsReport:
    """Distances to the past front ``phi1``, the future front ``phi2`` and to V."""
    traj = entire.trajectory
    x = traj.grid.x
    Vx = V(x)
    idx = entire.settled_indices()
    times = traj.times[idx]
    e1 = np.empty(idx.size)
    e2 = np.empty(idx.size)
    beh = np.empty(idx.size)
    for k, i in enumerate(idx):
        t, u = float(traj.times[i]), traj.values[i]
        e1[k] = np.max(np.abs(u - phi1(x - disp.c1 * t)))
        ahead = x >= disp.c2 * t - AHEAD_OFFSET
        e2[k] = np.max(np.abs(u[ahead] - phi2(x[ahead] - disp.c2 * t))) if ahead.any() else math.nan
        beh[k] = behind_error(x, u, Vx, disp.c2, t)
    t_end = float(traj.times[-1])
    u_end = traj.values[-1]
    nonuni = float(np.max(np.abs(u_end - phi2(x - disp.c2 * t_end))))
    early = [(float(times[k]), float(e1[k])) for k in range(min(2, idx.size))]
    late = [(float(times[k]), float(e2[k])) for k in range(max(0, idx.size - 2), idx.size)]
    return ProfileLimitsReport(times, e1, e2, beh, early, late, float(beh[-1]), nonuni,
                               entire.settled_from)


def speed_windows(entire: EntireSolution, env: EnvelopePair, report: ProfileLimitsReport,
                  t_end: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """Past window ``[-n + 5, -T]``; future window ``[max(T2, 10), t_end]`` with T2 the first
    time the behind-front error drops below 0.05."""
    n = entire.schedule[-1]
    past = (-n + 5.0, -env.T)
    ok = np.nonzero(report.behind < 0.05)[0]
    T2 = float(report.times[ok[0]]) if ok.size else t_end
    return past, (max(T2, 10.0), t_end)
