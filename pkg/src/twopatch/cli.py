"""Batch front-end: JSON run configurations, subcommands and artifact emission.

Exit codes: 0 ok, 1 usage or configuration error, 2 inadmissible parameters,
3 numerical failure.
"""
from __future__ import annotations

import argparse
import itertools
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import build_envelopes, check_ordering, envelope_rows, residual_sign_check
from .errors import (BoundaryGuardViolation, CflViolation, InadmissibleParameters,
                     MisalignedInterface, NotConverged, TwoPatchError)
from .evolve import solve_stationary
from .front import (check_guards, compare_profiles, construct_entire, estimate_decay,
                    estimate_speed, front_config, speed_windows, track_front)
from .grid import build_grid
from .io import write_csv, write_json, write_manifest
from .params import PatchParams, check_admissible, compute_dispersion, derive_aux_constants
from .reaction import LOGISTIC, logistic
from .wave import compute_profile, profile_residual

log = logging.getLogger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_INADMISSIBLE, EXIT_NUMERICAL = 0, 1, 2, 3
THETA_FRACTIONS = (0.3, 0.5, 0.7)
SWEEP_PARAMETERS = ("d1", "d2", "sigma", "mu1", "mu2", "K1", "K2")


class ConfigError(ValueError):
    """Malformed or inconsistent configuration file."""


def _from_section(cls, data, name):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"section {name!r} must be an object")
    known = {f.name for f in fields(cls)}
    extra = sorted(set(data) - known)
    if extra:
        raise ConfigError(f"unknown keys in {name!r}: {', '.join(extra)}")
    try:
        return cls(**data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"section {name!r}: {exc}") from exc


@dataclass(frozen=True)
class GridSpec:
    x_left: float = -150.0
    x_right: float = 150.0
    h: float = 0.05


@dataclass(frozen=True)
class SolverSettings:
    cfl_safety: float = 0.4
    snapshot_interval: float = 0.1
    stationary_tol: float = 1e-10
    stationary_t_max: float = 2000.0


@dataclass(frozen=True)
class WaveSettings:
    xi_min: float = -60.0
    xi_max: float = 120.0
    h: float = 0.005


@dataclass(frozen=True)
class FrontSettings:
    schedule: tuple = (20, 25, 30)
    t_end: float = 30.0
    tol_entire: float = 1e-6
    theta: float | None = None
    export_every: float = 10.0

    def __post_init__(self):
        object.__setattr__(self, "schedule", tuple(int(n) for n in self.schedule))


@dataclass(frozen=True)
class SweepAxis:
    parameter: str
    start: float
    stop: float
    num: int

    def __post_init__(self):
        if self.parameter not in SWEEP_PARAMETERS:
            raise ValueError(f"parameter must be one of {', '.join(SWEEP_PARAMETERS)}")
        if int(self.num) != self.num or self.num < 0:
            raise ValueError("num must be a nonnegative integer")
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ValueError("sweep bounds must be finite")

    def values(self) -> list[float]:
        n = int(self.num)
        if n == 0:
            return []
        if n == 1:
            return [float(self.start)]
        return [self.start + (self.stop - self.start) * k / (n - 1) for k in range(n)]


@dataclass(frozen=True)
class RunConfig:
    """Everything a subcommand needs; round-trips exactly through JSON."""

    params: PatchParams
    grid: GridSpec = field(default_factory=GridSpec)
    solver: SolverSettings = field(default_factory=SolverSettings)
    wave: WaveSettings = field(default_factory=WaveSettings)
    front: FrontSettings = field(default_factory=FrontSettings)
    sweep: tuple = ()
    output: str = "twopatch-out"

    def to_dict(self) -> dict:
        front = asdict(self.front)
        front["schedule"] = list(self.front.schedule)
        return {
            "model": self.params.to_dict(),
            "grid": asdict(self.grid),
            "solver": asdict(self.solver),
            "wave": asdict(self.wave),
            "front": front,
            "sweep": [asdict(a) for a in self.sweep],
            "output": self.output,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a JSON object")
        known = {"model", "grid", "solver", "wave", "front", "sweep", "output"}
        extra = sorted(set(data) - known)
        if extra:
            raise ConfigError(f"unknown top-level keys: {', '.join(extra)}")
        if "model" not in data:
            raise ConfigError("missing section 'model'")
        try:
            params = PatchParams.from_dict(data["model"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"section 'model': {exc!r}") from exc
        axes = data.get("sweep", [])
        if isinstance(axes, dict):
            axes = [axes]
        if not isinstance(axes, list):
            raise ConfigError("'sweep' must be an object or a list of objects")
        return cls(
            params=params,
            grid=_from_section(GridSpec, data.get("grid"), "grid"),
            solver=_from_section(SolverSettings, data.get("solver"), "solver"),
            wave=_from_section(WaveSettings, data.get("wave"), "wave"),
            front=_from_section(FrontSettings, data.get("front"), "front"),
            sweep=tuple(_from_section(SweepAxis, a, "sweep") for a in axes),
            output=str(data.get("output", "twopatch-out")),
        )


def load_config(path: str | Path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return RunConfig.from_dict(data)


def with_value(p: PatchParams, name: str, value: float) -> PatchParams:
    """Copy of ``p`` with one scalar replaced; logistic C follows mu and K."""
    if name in ("d1", "d2", "sigma"):
        return replace(p, **{name: float(value)})
    side = "reaction_left" if name.endswith("1") else "reaction_right"
    spec = getattr(p, side)
    key = "mu" if name.startswith("mu") else "K"
    if spec.kind == LOGISTIC:
        mu = value if key == "mu" else spec.mu
        K = value if key == "K" else spec.K
        new = logistic(mu, K, omega=spec.omega)
    else:
        raise ConfigError(f"sweeping {name} needs a logistic reaction")
    return replace(p, **{side: new})


# ---------------------------------------------------------------- commands

def _grid(cfg: RunConfig):
    g = cfg.grid
    return build_grid(g.x_left, g.x_right, g.h)


def _stationary(cfg: RunConfig, grid):
    s = cfg.solver
    return solve_stationary(cfg.params, grid, tol=s.stationary_tol, t_max=s.stationary_t_max,
                            cfl_safety=s.cfl_safety)


def _profiles(cfg: RunConfig, disp):
    w, p = cfg.wave, cfg.params
    phi1 = compute_profile(p.reaction_left, p.d1, disp.c1, w.xi_min, w.xi_max, w.h, patch="left")
    phi2 = compute_profile(p.reaction_right, p.d2, disp.c2, w.xi_min, w.xi_max, w.h, patch="right")
    return phi1, phi2


def cmd_validate(cfg: RunConfig, out: Path) -> int:
    p = cfg.params
    adm = check_admissible(p)
    left, right = p.kpp_reports()
    report = {"admissibility": adm.to_dict(), "kpp_left": left.to_dict(),
              "kpp_right": right.to_dict()}
    if adm.ok:
        report["dispersion"] = compute_dispersion(p).to_dict()
    files = [write_json(out / "validate.json", report)]
    write_manifest(out, "validate", cfg.to_dict(), files)
    print(f"branch: {adm.branch}")
    for k, v in adm.margins.items():
        print(f"margin {k}: {v:.17g}")
    for r in adm.reasons:
        print(f"inadmissible: {r}")
    for name, rep in (("left", left), ("right", right)):
        for f in rep.failures:
            print(f"KPP ({name}) fails: {f}")
    if adm.ok:
        d = report["dispersion"]
        print(f"lambda1 = {d['lambda1']:.17g}  lambda2 = {d['lambda2']:.17g}")
        print(f"c1 = {d['c1']:.17g}  c2 = {d['c2']:.17g}  q = {d['q']:.17g}")
    ok = adm.ok and left.ok and right.ok
    return EXIT_OK if ok else EXIT_INADMISSIBLE


def cmd_speeds(cfg: RunConfig, out: Path) -> int:
    disp = compute_dispersion(cfg.params)
    aux = derive_aux_constants(cfg.params, disp)
    data = {"dispersion": disp.to_dict(), "aux": aux.to_dict()}
    files = [write_json(out / "constants.json", data)]
    write_manifest(out, "speeds", cfg.to_dict(), files)
    print(f"c1 = {disp.c1:.17g}  c2 = {disp.c2:.17g}  T = {aux.T:.17g}")
    return EXIT_OK


def cmd_wave(cfg: RunConfig, out: Path) -> int:
    p = cfg.params
    disp = compute_dispersion(p)
    phi1, phi2 = _profiles(cfg, disp)
    files, summary = [], {}
    for name, w, spec, d in (("left", phi1, p.reaction_left, p.d1),
                             ("right", phi2, p.reaction_right, p.d2)):
        files.append(write_csv(out / f"wave_{name}.csv", ["xi", "phi"], w.rows()))
        summary[name] = {"c": w.c, "lambda": w.lam, "tail": asdict(w.tail),
                         "shift_applied": w.shift_applied,
                         "residual": profile_residual(w, spec, d)}
    files.append(write_json(out / "wave.json", summary))
    write_manifest(out, "wave", cfg.to_dict(), files)
    for name, s in summary.items():
        print(f"{name}: tail rate {s['tail']['rate']:.10g} (exact {s['lambda']:.10g}), "
              f"residual {s['residual']:.3e}")
    return EXIT_OK


def cmd_stationary(cfg: RunConfig, out: Path) -> int:
    grid = _grid(cfg)
    V = _stationary(cfg, grid)
    files = [write_csv(out / "stationary.csv", ["x", "V"], zip(V.x, V.values))]
    v = V.values
    info = {"residual": V.residual, "march_time": V.march_time, "V_left": v[0],
            "V_right": v[-1], "strictly_monotone": bool(np.all(np.diff(v) > 0)
                                                        or np.all(np.diff(v) < 0)),
            "grid": grid.to_dict()}
    files.append(write_json(out / "stationary.json", info))
    write_manifest(out, "stationary", cfg.to_dict(), files)
    print(f"V(x_left) = {v[0]:.12g}  V(x_right) = {v[-1]:.12g}  residual {V.residual:.3e}")
    return EXIT_OK


def cmd_bounds_check(cfg: RunConfig, out: Path) -> int:
    p = cfg.params
    disp = compute_dispersion(p)
    aux = derive_aux_constants(p, disp)
    grid = _grid(cfg)
    V = _stationary(cfg, grid)
    phi1, _ = _profiles(cfg, disp)
    env = build_envelopes(p, disp, aux, V, phi1)
    files, checks, ok = [], [], True
    for k, factor in enumerate((1.0, 1.5, 2.0)):
        t = -factor * env.T
        order = check_ordering(env, t, grid)
        resid = residual_sign_check(env, t, grid)
        ok = ok and order.ok and resid.ok
        checks.append({"t": t, "ordering": order.to_dict(), "residuals": resid.to_dict()})
        files.append(write_csv(out / f"envelopes_{k}.csv", ["x", "sub", "super", "V"],
                               envelope_rows(env, t, grid.x)))
        print(f"t = {t:.6g}: ordering {'ok' if order.ok else 'FAIL'}, "
              f"residual signs {'ok' if resid.ok else 'FAIL'}")
    files.append(write_json(out / "bounds.json", {"T": env.T, "t_doublings": env.t_doublings,
                                                  "aux": env.aux.to_dict(), "checks": checks}))
    write_manifest(out, "bounds-check", cfg.to_dict(), files)
    return EXIT_OK if ok else EXIT_NUMERICAL


@dataclass
class FrontResult:
    entire: object
    speeds: dict
    track: object
    report: object
    converged: bool
    envelopes: object = None


def run_front(cfg: RunConfig, parallel: int = 1) -> FrontResult:
    """Full pipeline: constants, V, both fronts, entire solution, fits."""
    p, fs = cfg.params, cfg.front
    disp = compute_dispersion(p)
    aux = derive_aux_constants(p, disp)
    bad = [n for n in fs.schedule if not n > aux.T]
    if bad or not fs.schedule:
        raise ValueError(f"schedule entries {bad or '[]'} do not exceed T = {aux.T:.6g}")
    grid = _grid(cfg)
    V = _stationary(cfg, grid)
    phi1, phi2 = _profiles(cfg, disp)
    env = build_envelopes(p, disp, aux, V, phi1)
    check_guards(p, grid, disp, env, fs.schedule, fs.t_end)
    base = front_config(grid, V, -float(fs.schedule[0]), fs.t_end,
                        cfg.solver.snapshot_interval, cfg.solver.cfl_safety)
    entire = construct_entire(p, grid, base, env, fs.schedule, fs.tol_entire,
                              parallel=parallel, strict=False)
    theta = fs.theta if fs.theta is not None else 0.5 * min(p.K1, p.K2)
    track = track_front(entire.trajectory, theta)
    report = compare_profiles(entire, phi1, phi2, V, disp)
    past, future = speed_windows(entire, env, report, fs.t_end)
    fit_past = estimate_speed(track, past)
    fit_future = estimate_speed(track, future)
    decay = estimate_decay(entire.trajectory.field(-1), fs.t_end, disp.lambda2, disp.c2, p.K2)
    robust = {}
    for frac in THETA_FRACTIONS:
        tr = track_front(entire.trajectory, frac * min(p.K1, p.K2))
        robust[f"{frac:g}"] = {"c1_hat": estimate_speed(tr, past).slope,
                               "c2_hat": estimate_speed(tr, future).slope}
    rel = lambda a, b: (a - b) / b  # noqa: E731
    speeds = {
        "closed_form": {"c1": disp.c1, "c2": disp.c2, "lambda1": disp.lambda1,
                        "lambda2": disp.lambda2, "q": disp.q, "T": env.T},
        "measured": {"c1_hat": fit_past.slope, "c2_hat": fit_future.slope,
                     "lambda2_hat": decay.rate, "decay_prefactor": decay.prefactor},
        "relative_error": {"c1_hat": rel(fit_past.slope, disp.c1),
                           "c2_hat": rel(fit_future.slope, disp.c2),
                           "lambda2_hat": rel(decay.rate, disp.lambda2),
                           "decay_prefactor": decay.prefactor - 1.0},
        "fits": {"past": fit_past.to_dict(), "future": fit_future.to_dict(),
                 "decay": decay.to_dict()},
        "theta": theta,
        "theta_robustness": robust,
        "entire": {"schedule": entire.schedule, "sup_differences": entire.sup_differences,
                   "min_differences": entire.min_differences,
                   "converged": entire.converged, "monotone": entire.monotone,
                   "tol_entire": entire.tol_entire},
        "profiles": report.summary(),
    }
    return FrontResult(entire, speeds, track, report, entire.converged, env)


def cmd_front(cfg: RunConfig, out: Path, parallel: int = 1) -> int:
    res = run_front(cfg, parallel)
    traj = res.entire.trajectory
    files = [
        write_json(out / "speeds.json", res.speeds),
        write_csv(out / "front_track.csv", ["t", "X_theta"], res.track.rows()),
        write_csv(out / "profile_errors.csv", ["t", "e1", "e2", "behind"], res.report.rows()),
    ]
    exported = []
    every = cfg.front.export_every
    for i, t in enumerate(traj.times):
        k = (t - traj.times[0]) / every
        if abs(k - round(k)) < 1e-9 or i == len(traj.times) - 1:
            name = f"snapshot_{len(exported):03d}.csv"
            files.append(write_csv(out / "snapshots" / name, ["x", "u"],
                                   zip(traj.grid.x, traj.values[i])))
            exported.append({"file": f"snapshots/{name}", "t": float(t)})
    write_manifest(out, "front", cfg.to_dict(), files,
                   {"snapshots": exported, "grid": traj.grid.to_dict(), "dt": traj.dt})
    s = res.speeds
    print(f"c1_hat = {s['measured']['c1_hat']:.8g} (c1 = {s['closed_form']['c1']:.8g})")
    print(f"c2_hat = {s['measured']['c2_hat']:.8g} (c2 = {s['closed_form']['c2']:.8g})")
    print(f"lambda2_hat = {s['measured']['lambda2_hat']:.8g} "
          f"(lambda2 = {s['closed_form']['lambda2']:.8g})")
    if not res.converged:
        print(f"entire-solution limit not reached: sup differences "
              f"{res.entire.sup_differences} (tol {res.entire.tol_entire:g})", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


SWEEP_HEADER = ["d1", "d2", "sigma", "mu1", "mu2", "K1", "K2",
                "lambda1", "lambda2", "c1", "c2", "admissible"]


def _sweep_row(p: PatchParams) -> list:
    row = [p.d1, p.d2, p.sigma, p.mu1, p.mu2, p.K1, p.K2]
    if check_admissible(p).ok:
        d = compute_dispersion(p)
        return row + [d.lambda1, d.lambda2, d.c1, d.c2, True]
    return row + ["", "", "", "", False]


def sweep_rows(cfg: RunConfig, parallel: int = 1) -> list[list]:
    axes = cfg.sweep
    points = itertools.product(*(a.values() for a in axes)) if axes else iter(())
    params = []
    for combo in points:
        p = cfg.params
        for a, v in zip(axes, combo):
            p = with_value(p, a.parameter, v)
        params.append(p)
    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            return list(pool.map(_sweep_row, params))
    return [_sweep_row(p) for p in params]


def cmd_sweep(cfg: RunConfig, out: Path, parallel: int = 1) -> int:
    if not cfg.sweep:
        raise ConfigError("sweep needs at least one axis in section 'sweep'")
    rows = sweep_rows(cfg, parallel)
    files = [write_csv(out / "sweep.csv", SWEEP_HEADER, rows)]
    write_manifest(out, "sweep", cfg.to_dict(), files)
    n_ok = sum(1 for r in rows if r[-1])
    print(f"{len(rows)} rows, {n_ok} admissible")
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "speeds": cmd_speeds,
    "wave": cmd_wave,
    "stationary": cmd_stationary,
    "bounds-check": cmd_bounds_check,
    "front": cmd_front,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="twopatch", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"twopatch {__version__}")
    ap.add_argument("command", choices=list(COMMANDS))
    ap.add_argument("config", help="JSON run configuration")
    ap.add_argument("--out", help="output directory (default: the config's 'output')")
    ap.add_argument("--parallel", type=int, default=1, help="worker threads")
    ap.add_argument("--h", type=float, dest="h", help="override the grid spacing")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.h is not None:
            cfg = replace(cfg, grid=replace(cfg.grid, h=args.h))
        if args.parallel < 1:
            raise ConfigError("--parallel must be at least 1")
        out = Path(args.out if args.out else cfg.output)
        fn = COMMANDS[args.command]
        if args.command in ("front", "sweep"):
            return fn(cfg, out, args.parallel)
        return fn(cfg, out)
    except InadmissibleParameters as exc:
        print(f"inadmissible: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    except (ConfigError, BoundaryGuardViolation, MisalignedInterface, CflViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotConverged as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except TwoPatchError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
