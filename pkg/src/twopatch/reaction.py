"""Per-patch KPP reaction terms.

Every reaction is stored as a polynomial ``f(s) = sum_k a_k s**k``; the
logistic law is the degree-two special case.  Keeping one representation
lets the compiled time stepper evaluate any reaction with Horner's rule.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LOGISTIC = "logistic"
CUSTOM_POLYNOMIAL = "custom-polynomial"


@dataclass(frozen=True)
class ReactionSpec:
    """A KPP reaction ``f`` on one patch.

    Attributes
    ----------
    kind : str
        ``"logistic"`` or ``"custom-polynomial"``.
    mu : float
        Linearisation slope ``f'(0)``.
    K : float
        Carrying capacity (positive zero of ``f``).
    C, omega : float
        Constants of the lower bound ``f(s) >= mu*s - C*s**(1+omega)`` on ``[0, K]``.
    coefficients : tuple of float
        Polynomial coefficients in increasing degree.
    """

    kind: str
    mu: float
    K: float
    C: float
    omega: float
    coefficients: tuple = field(default=())

    def __post_init__(self):
        if self.kind not in (LOGISTIC, CUSTOM_POLYNOMIAL):
            raise ValueError(f"unknown reaction kind {self.kind!r}")
        if not (self.mu > 0 and self.K > 0):
            raise ValueError("reaction needs mu > 0 and K > 0")
        if self.C < 0 or self.omega <= 0:
            raise ValueError("reaction needs C >= 0 and omega > 0")
        if self.kind == LOGISTIC:
            object.__setattr__(
                self, "coefficients", (0.0, float(self.mu), -float(self.mu) / self.K)
            )
        elif len(self.coefficients) < 2:
            raise ValueError("custom polynomial needs at least two coefficients")
        else:
            object.__setattr__(
                self, "coefficients", tuple(float(a) for a in self.coefficients)
            )

    @property
    def coef_array(self) -> np.ndarray:
        return np.asarray(self.coefficients, dtype=float)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "mu": self.mu, "K": self.K, "C": self.C, "omega": self.omega}
        if self.kind == CUSTOM_POLYNOMIAL:
            out["coefficients"] = list(self.coefficients)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ReactionSpec":
        kind = data.get("kind", LOGISTIC)
        if kind == LOGISTIC:
            return logistic(data["mu"], data["K"], C=data.get("C"), omega=data.get("omega", 1.0))
        return polynomial(data["coefficients"], data["K"], data["C"], data["omega"])


def logistic(mu: float, K: float, C: float | None = None, omega: float = 1.0) -> ReactionSpec:
    """``mu*s*(1 - s/K)``; by default ``C = mu/K`` and ``omega = 1`` (tight)."""
    if C is None:
        C = mu / K
    return ReactionSpec(LOGISTIC, float(mu), float(K), float(C), float(omega))


def polynomial(coefficients, K: float, C: float, omega: float) -> ReactionSpec:
    coefficients = tuple(float(a) for a in coefficients)
    return ReactionSpec(
        CUSTOM_POLYNOMIAL, coefficients[1], float(K), float(C), float(omega), coefficients
    )


def eval_f(spec: ReactionSpec, s):
    """Reaction rate at density ``s`` (scalar or array)."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    for a in reversed(spec.coefficients):
        out = out * s + a
    return out if out.ndim else float(out)


def eval_f_prime(spec: ReactionSpec, s):
    s = np.asarray(s, dtype=float)
    coefs = spec.coefficients
    out = np.zeros_like(s)
    for k in range(len(coefs) - 1, 0, -1):
        out = out * s + k * coefs[k]
    return out if out.ndim else float(out)


@dataclass
class KppReport:
    ok: bool
    failures: list[str]
    first_violation: dict[str, float]
    worst_violation: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "failures": list(self.failures),
            "first_violation": dict(self.first_violation),
            "worst_violation": dict(self.worst_violation),
        }


def verify_kpp(spec: ReactionSpec, n_samples: int = 10_001) -> KppReport:
    """Sample-based check of the KPP hypotheses and the ``C, omega`` lower bound.

    The conditions are checked on a uniform grid over ``[0, 2K]``.  Equalities
    and the lower bound are tested with an absolute slack of ``1e-12*mu*K`` so
    that tight bounds (logistic with ``C = mu/K``) are not failed by rounding.
    """
    if n_samples < 100:
        raise ValueError("verify_kpp needs at least 100 samples")
    mu, K = spec.mu, spec.K
    slack = 1e-12 * mu * K
    # K itself is a sample, so no rounded neighbour of K counts as interior
    half = (n_samples + 1) // 2
    s = np.concatenate([np.linspace(0.0, K, half), np.linspace(K, 2.0 * K, n_samples - half + 1)[1:]])
    f = eval_f(spec, s)
    failures: list[str] = []
    first: dict[str, float] = {}
    worst: dict[str, float] = {}

    def record(name, mask, excess):
        if np.any(mask):
            failures.append(name)
            first[name] = float(s[np.argmax(mask)])
            worst[name] = float(s[np.argmax(np.where(mask, excess, -np.inf))])

    if abs(eval_f(spec, 0.0)) > slack:
        failures.append("f(0) = 0")
    if abs(eval_f(spec, K)) > slack:
        failures.append("f(K) = 0")
    inside = (s > 0) & (s < K)
    record("f(s) > 0 on (0,K)", inside & (f <= 0), -f)
    record("f(s) <= mu*s on (0,K)", inside & (f > mu * s + slack), f - mu * s)
    if eval_f_prime(spec, K) >= 0:
        failures.append("f'(K) < 0")
    above = s > K
    record("f(s) < 0 on (K,2K]", above & (f >= 0), f)
    lower = mu * s - spec.C * s ** (1.0 + spec.omega)
    record("f(s) >= mu*s - C*s^(1+omega) on [0,K]", (s <= K) & (f < lower - slack), lower - f)
    return KppReport(not failures, failures, first, worst)
