"""Model parameters, the admissibility test, and closed-form front constants."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import InadmissibleParameters, NonconvergentAmplitude
from .reaction import ReactionSpec, verify_kpp


@dataclass(frozen=True)
class PatchParams:
    """Diffusivities, interface flux ratio and one reaction per patch."""

    d1: float
    d2: float
    sigma: float
    reaction_left: ReactionSpec
    reaction_right: ReactionSpec

    def __post_init__(self):
        if not (self.d1 > 0 and self.d2 > 0 and self.sigma > 0):
            raise ValueError("need d1 > 0, d2 > 0 and sigma > 0")

    @property
    def mu1(self) -> float:
        return self.reaction_left.mu

    @property
    def mu2(self) -> float:
        return self.reaction_right.mu

    @property
    def K1(self) -> float:
        return self.reaction_left.K

    @property
    def K2(self) -> float:
        return self.reaction_right.K

    @property
    def scale(self) -> float:
        return max(self.K1, self.K2)

    def kpp_reports(self, n_samples: int = 10_001):
        return verify_kpp(self.reaction_left, n_samples), verify_kpp(self.reaction_right, n_samples)

    def swapped(self) -> "PatchParams":
        """The mirror-image problem, with the patches exchanged."""
        return PatchParams(self.d2, self.d1, 1.0 / self.sigma, self.reaction_right, self.reaction_left)

    def to_dict(self) -> dict:
        return {
            "d1": self.d1,
            "d2": self.d2,
            "sigma": self.sigma,
            "reaction_left": self.reaction_left.to_dict(),
            "reaction_right": self.reaction_right.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PatchParams":
        return cls(
            float(data["d1"]),
            float(data["d2"]),
            float(data["sigma"]),
            ReactionSpec.from_dict(data["reaction_left"]),
            ReactionSpec.from_dict(data["reaction_right"]),
        )


@dataclass
class AdmissibilityReport:
    ok: bool
    reasons: list[str]
    branch: str
    margins: dict[str, float]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class DispersionData:
    lambda1: float
    lambda2: float
    c1: float
    c2: float
    cstar1: float
    cstar2: float
    q: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class AuxConstants:
    """Constants of the sub/supersolution construction.

    ``theta1``, ``theta2`` are the damped discriminants, ``varsigma`` the
    margin ``1 - m*exp(-sigma*epsilon*c1*T)``.
    """

    epsilon: float
    theta1: float
    theta2: float
    m: float
    varsigma: float
    T: float
    x0: float

    def to_dict(self) -> dict:
        return asdict(self)


def check_admissible(p: PatchParams) -> AdmissibilityReport:
    """Test the two-sided growth-rate condition; violations are reported, not raised."""
    mu1, mu2 = p.mu1, p.mu2
    a = p.d1 * p.sigma**2
    reasons: list[str] = []
    margins: dict[str, float] = {}
    if p.d2 == a:
        return AdmissibilityReport(False, ["d2 = d1σ² (degenerate denominator)"], "degenerate", {})
    if p.d2 < a:
        branch = "d2 < d1σ²: μ1 < μ2 < μ1(2 − d2/(d1σ²))"
        upper = mu1 * (2.0 - p.d2 / a)
        margins = {"lower": mu2 - mu1, "upper": upper - mu2}
        if not mu1 < mu2:
            reasons.append("μ2 ≤ μ1")
        if not mu2 < upper:
            reasons.append("μ2 ≥ μ1(2−d2/(d1σ²))")
    else:
        branch = "d2 > d1σ²: μ2 < μ1 < μ2(2 − d1σ²/d2)"
        upper = mu2 * (2.0 - a / p.d2)
        margins = {"lower": mu1 - mu2, "upper": upper - mu1}
        if not mu2 < mu1:
            reasons.append("μ1 ≤ μ2")
        if not mu1 < upper:
            reasons.append("μ1 ≥ μ2(2−d1σ²/d2)")
    return AdmissibilityReport(not reasons, reasons, branch, margins)


def _require_admissible(p: PatchParams) -> None:
    report = check_admissible(p)
    if not report.ok:
        raise InadmissibleParameters("; ".join(report.reasons))


def compute_dispersion(p: PatchParams) -> DispersionData:
    _require_admissible(p)
    lambda2 = math.sqrt((p.mu2 - p.mu1) / (p.d1 * p.sigma**2 - p.d2))
    lambda1 = p.sigma * lambda2
    c2 = p.d2 * lambda2 + p.mu2 / lambda2
    c1 = c2 / p.sigma
    return DispersionData(
        lambda1=lambda1,
        lambda2=lambda2,
        c1=c1,
        c2=c2,
        cstar1=2.0 * math.sqrt(p.d1 * p.mu1),
        cstar2=2.0 * math.sqrt(p.d2 * p.mu2),
        q=c1 * lambda1,
    )


def exp_difference_peak(lam: float, extra: float, m: float) -> float:
    """Maximum over x of ``exp(-lam*x) - m*exp(-(lam+extra)*x)`` for m >= 1."""
    x_star = math.log(m * (lam + extra) / lam) / extra
    return extra / (lam + extra) * math.exp(-lam * x_star)


def derive_aux_constants(p: PatchParams, disp: DispersionData | None = None) -> AuxConstants:
    """Pick one admissible set of envelope constants.

    epsilon is half the smallest of its four upper bounds, m is twice its
    lower bound (then doubled until the exponential bump stays below
    min(K1, K2)), and T, x0 are chosen so that varsigma = 1/2 > exp(-lambda1*x0) = 1/4.
    """
    _require_admissible(p)
    if disp is None:
        disp = compute_dispersion(p)
    sig = p.sigma
    lam1, lam2, c1, c2 = disp.lambda1, disp.lambda2, disp.c1, disp.c2
    om1, om2 = p.reaction_left.omega, p.reaction_right.omega
    C1, C2 = p.reaction_left.C, p.reaction_right.C
    disc1 = math.sqrt(c1 * c1 - 4.0 * p.d1 * p.mu1)
    disc2 = math.sqrt(c2 * c2 - 4.0 * p.d2 * p.mu2)
    eps = 0.5 * min(om1 * lam1 / sig, om2 * lam2, disc1 / (2.0 * p.d1 * sig), disc2 / (2.0 * p.d2))
    theta1 = disc1 - p.d1 * sig * eps
    theta2 = disc2 - p.d2 * eps
    m = 2.0 * max(C1 / (sig * eps * theta1), C2 / (eps * theta2), 1.0)
    floor = min(p.K1, p.K2)
    for _ in range(64):
        peak = max(exp_difference_peak(lam1, sig * eps, m), exp_difference_peak(lam2, eps, m))
        if peak < floor:
            break
        m *= 2.0
    else:
        raise NonconvergentAmplitude(f"bump height stays above {floor} after 64 doublings")
    T = math.log(2.0 * m) / (sig * eps * c1)
    varsigma = 1.0 - m * math.exp(-sig * eps * c1 * T)
    x0 = 2.0 * math.log(2.0) / lam1
    return AuxConstants(eps, theta1, theta2, m, varsigma, T, x0)
