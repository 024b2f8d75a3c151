"""Travelling-wave profiles of the homogeneous KPP equation in one patch.

A profile is obtained by shooting from the saddle ``(K, 0)`` along its
unstable direction and integrating rightward; for supercritical speeds the
origin is a stable node reached along the slow rate, so no bisection is
needed.  The profile is then translated so that ``phi(xi) ~ exp(-lambda*xi)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from . import kernels
from .errors import DomainTooShort, SubcriticalSpeed, TailFitFailed
from .reaction import ReactionSpec, eval_f, eval_f_prime

SEED_OFFSET = 1e-8
TAIL_WINDOW = (1e-6, 1e-3)
SUBSTEPS = 4


def decay_rate(d: float, mu: float, c: float) -> float:
    """Smaller root of ``d*l**2 - c*l + mu = 0``."""
    disc = c * c - 4.0 * d * mu
    if disc < 0:
        raise SubcriticalSpeed(f"c={c:g} is below the minimal speed {2 * math.sqrt(d * mu):g}")
    return (c - math.sqrt(disc)) / (2.0 * d)


@dataclass
class TailFit:
    rate: float
    r2: float
    amplitude: float
    n_points: int


def fit_tail(xi: np.ndarray, phi: np.ndarray, K: float, lam: float,
             fast: float | None = None) -> TailFit:
    """Log-linear fit of the leading edge where ``phi/K`` lies in the tail window.

    ``rate`` is the free least-squares slope.  ``amplitude`` is the limit of
    ``phi*exp(lam*xi)``, extrapolated with correction terms for the nonlinear
    bias (``exp(-lam*xi)``) and the fast linear mode (``exp(-(fast-lam)*xi)``)
    inside the window.  ``fast`` is the larger dispersion root; omit it to
    drop that term.
    """
    lo, hi = TAIL_WINDOW
    mask = (phi >= lo * K) & (phi <= hi * K)
    n = int(mask.sum())
    if n < 10:
        raise TailFitFailed(f"only {n} samples inside the tail window")
    x, y = xi[mask], np.log(phi[mask])
    slope, icept = np.polyfit(x, y, 1)
    resid = y - (slope * x + icept)
    r2 = 1.0 - float(resid @ resid) / float(((y - y.mean()) ** 2).sum())
    if r2 < 0.999:
        raise TailFitFailed(f"tail fit R^2 = {r2:.6f} < 0.999")
    e = np.exp(-lam * x)
    scaled = phi[mask] / e
    cols = [np.ones_like(e), e]
    if fast is not None and fast - lam > 1e-3 * lam and abs(fast - 2 * lam) > 1e-3 * lam:
        cols.append(np.exp(-(fast - lam) * (x - x[0])))
    coef, *_ = np.linalg.lstsq(np.column_stack(cols), scaled, rcond=None)
    return TailFit(-float(slope), r2, float(coef[0]), n)


@dataclass
class WaveProfile:
    patch: str
    c: float
    lam: float
    xi_grid: np.ndarray
    values: np.ndarray
    shift_applied: float
    K: float
    d: float
    left_rate: float
    tail: TailFit
    _interp: PchipInterpolator = field(init=False, repr=False)

    def __post_init__(self):
        self._interp = PchipInterpolator(self.xi_grid, self.values, extrapolate=False)

    @property
    def h(self) -> float:
        return float(self.xi_grid[1] - self.xi_grid[0])

    def __call__(self, xi):
        """Monotone cubic interpolation, with the asymptotic tails outside the grid."""
        xi = np.asarray(xi, dtype=float)
        out = np.asarray(self._interp(xi), dtype=float)
        x0, x1 = self.xi_grid[0], self.xi_grid[-1]
        left = xi < x0
        if np.any(left):
            out[left] = self.K - (self.K - self.values[0]) * np.exp(self.left_rate * (xi[left] - x0))
        right = xi > x1
        if np.any(right):
            out[right] = self.values[-1] * np.exp(-self.lam * (xi[right] - x1))
        return out if out.ndim else float(out)

    def rows(self):
        return zip(self.xi_grid, self.values)


def _unstable_rate(spec: ReactionSpec, d: float, c: float) -> float:
    fk = eval_f_prime(spec, spec.K)
    return (-c + math.sqrt(c * c - 4.0 * d * fk)) / (2.0 * d)


def _shoot(spec, d, c, a, seed_xi, xi_grid, h, backend=None) -> np.ndarray:
    """Profile samples on ``xi_grid`` for the trajectory leaving the saddle at ``seed_xi``."""
    K = spec.K
    delta = SEED_OFFSET * K
    out = np.empty_like(xi_grid)
    j0 = int(np.searchsorted(xi_grid, seed_xi, side="left"))
    out[:j0] = K - delta * np.exp(a * (xi_grid[:j0] - seed_xi))
    if j0 == len(xi_grid):
        return out
    coef = spec.coef_array
    phi, psi = K - delta, -a * delta
    hs = h / SUBSTEPS
    gap = xi_grid[j0] - seed_xi
    n_pre = int(gap // hs)
    frac = gap - n_pre * hs
    if frac > 1e-12 * hs:
        first, psi = kernels.rk4_wave(phi, psi, frac, 1, 1, c, d, coef, backend=backend)
        phi = float(first[-1])
    if n_pre:
        pre, psi = kernels.rk4_wave(phi, psi, hs, n_pre, n_pre, c, d, coef, backend=backend)
        phi = float(pre[-1])
    n = len(xi_grid) - 1 - j0
    vals, _ = kernels.rk4_wave(phi, psi, hs, n * SUBSTEPS, SUBSTEPS, c, d, coef, backend=backend)
    out[j0:] = vals
    return out


def compute_profile(spec: ReactionSpec, d: float, c: float, xi_min: float = -40.0,
                    xi_max: float = 60.0, h: float = 0.005, patch: str = "left",
                    backend=None) -> WaveProfile:
    """Normalised front of ``d*phi'' + c*phi' + f(phi) = 0`` sampled on ``[xi_min, xi_max]``."""
    if c * c <= 4.0 * d * spec.mu:
        raise SubcriticalSpeed(f"compute_profile needs c > {2 * math.sqrt(d * spec.mu):g}")
    lam = decay_rate(d, spec.mu, c)
    if not xi_min < 0 < xi_max:
        raise ValueError("need xi_min < 0 < xi_max")
    if h > 0.01 / lam * (1 + 1e-12):
        raise ValueError(f"h={h:g} too coarse; need h <= 0.01/lambda = {0.01 / lam:g}")
    n = round((xi_max - xi_min) / h)
    xi = xi_min + h * np.arange(n + 1)
    a = _unstable_rate(spec, d, c)
    raw = _shoot(spec, d, c, a, xi_min, xi, h, backend)
    if not raw[-1] < TAIL_WINDOW[0] * spec.K:
        raise DomainTooShort(f"profile is still {raw[-1]:.2e} at xi_max={xi_max:g}")
    fast = c / d - lam
    fit = fit_tail(xi, raw, spec.K, lam, fast)
    shift = math.log(fit.amplitude) / lam
    values = _shoot(spec, d, c, a, xi_min - shift, xi, h, backend)
    final_fit = fit_tail(xi, values, spec.K, lam, fast)
    return WaveProfile(patch, c, lam, xi, values, shift, spec.K, d, a, final_fit)


def profile_residual(w: WaveProfile, spec: ReactionSpec, d: float) -> float:
    """Sup over interior samples of ``|d*phi'' + c*phi' + f(phi)|`` by centred differences."""
    v = np.asarray(w.values, dtype=float)
    if v.size < 5:
        raise ValueError("need at least 5 samples")
    h = float(w.xi_grid[1] - w.xi_grid[0])
    second = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (h * h)
    first = (v[2:] - v[:-2]) / (2.0 * h)
    return float(np.max(np.abs(d * second + w.c * first + eval_f(spec, v[1:-1]))))
