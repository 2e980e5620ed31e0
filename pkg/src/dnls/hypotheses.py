"""Machine-checkable predicates for the standing assumptions on the damping
and potential (control of the trapping, decay of Lap a, decay of the trapping
part, criticality classification), plus explicit constructors for the
existential constants Lambda, eta, c0.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from dnls import weights
from dnls.grid import Grid
from dnls.profiles import EvaluatedProfile, ProfileSpec, trapping_part

A_FLOOR_REL = 1e-10  # quotient a^{-(s3+1)/(s2+1)} is ill-conditioned near {a = 0}
VANISH_REL = 1e-12


@dataclass
class ControlResult:
    holds: bool
    c0: float
    worst_point: tuple[float, ...]
    worst_ratio: float


@dataclass
class DecayResult:
    holds: bool
    required_rate: float
    metadata_rate: float
    numerical_only: bool = False


@dataclass
class HypothesisReport:
    control: ControlResult
    delta_a_decay: DecayResult
    trapping_decay: DecayResult | None  # None means not required (s2 == s3)
    pair_a: str
    pair_V: str
    lam: float
    eta: float
    caveats: list[str] = field(default_factory=list)

    @property
    def all_hold(self) -> bool:
        return (
            self.control.holds
            and self.delta_a_decay.holds
            and (self.trapping_decay is None or self.trapping_decay.holds)
        )

    def to_json(self) -> str:
        doc = {
            "control_holds": self.control.holds,
            "c0": self.control.c0,
            "eta": self.eta,
            "lambda": self.lam,
            "pair_a": self.pair_a,
            "pair_V": self.pair_V,
            "delta_a_decay": self.delta_a_decay.holds,
            "trapping_decay": (
                "not-required" if self.trapping_decay is None else self.trapping_decay.holds
            ),
            "caveats": self.caveats,
        }
        return json.dumps(doc, indent=2)


def _worst_location(grid: Grid, flat_index: int) -> tuple[float, ...]:
    idx = np.unravel_index(flat_index, grid.shape)
    return tuple(float(grid.x1[i]) for i in idx)


def check_control(
    a: EvaluatedProfile, V: EvaluatedProfile, sigma2: float, sigma3: float
) -> ControlResult:
    """Verify the control condition: the trapping density of V is dominated by
    c0 a^{(s3+1)/(s2+1)} where a is active, and vanishes where a does."""
    trap = trapping_part(V)
    avals = a.value
    floor = A_FLOOR_REL * a.sup
    active = avals > floor
    expo = (sigma3 + 1.0) / (sigma2 + 1.0)

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(active, trap / np.where(active, avals**expo, 1.0), 0.0)
    c0 = float(ratio.max()) if active.any() else 0.0

    vanish_tol = VANISH_REL * V.sup
    dead_trap = np.where(active, 0.0, trap)
    holds = bool(dead_trap.max() <= vanish_tol)
    if holds:
        worst_flat = int(np.argmax(ratio))
        worst_ratio = c0
    else:
        worst_flat = int(np.argmax(dead_trap))
        worst_ratio = float(dead_trap.max())
        c0 = math.inf
    return ControlResult(
        holds=holds,
        c0=c0,
        worst_point=_worst_location(a.grid, worst_flat),
        worst_ratio=worst_ratio,
    )


def _dyadic_shell_sups(grid: Grid, density: np.ndarray, rate: float) -> list[float]:
    """Sups of density * <x>^rate over dyadic radial shells [2^j, 2^{j+1})."""
    r = np.sqrt(grid.r2)
    weighted = density * weights.bracket(grid.r2) ** rate
    sups = [float(weighted[r < 1.0].max()) if (r < 1.0).any() else 0.0]
    radius = 1.0
    while radius < grid.L * math.sqrt(grid.d):
        shell = (r >= radius) & (r < 2.0 * radius)
        if shell.any():
            sups.append(float(weighted[shell].max()))
        radius *= 2.0
    return sups


def _sampled_rate_ok(grid: Grid, density: np.ndarray, rate: float) -> bool:
    """True when density * <x>^rate does not keep growing toward the boundary."""
    scale = float(np.abs(density).max())
    if scale == 0.0:
        return True
    sups = _dyadic_shell_sups(grid, np.abs(density), rate)
    if len(sups) < 2:
        return True
    return sups[-1] <= 1.05 * max(sups[:-1]) + 1e-12 * scale


def check_delta_a_decay(a: EvaluatedProfile, sigma1: float, sigma2: float) -> DecayResult:
    """Decay of Lap a: rate 7(s2+1) when s2 < s1, rate 1 when s2 = s1."""
    if sigma2 > sigma1:
        raise ValueError("requires sigma2 <= sigma1")
    required = 1.0 if sigma2 == sigma1 else 7.0 * (sigma2 + 1.0)
    meta = a.spec.lap_decay_rate
    sampled = _sampled_rate_ok(a.grid, a.lap, required)
    if meta == math.inf or meta >= required:
        return DecayResult(holds=sampled, required_rate=required, metadata_rate=meta)
    return DecayResult(holds=False, required_rate=required, metadata_rate=meta)


def check_trapping_decay(
    V: EvaluatedProfile, sigma1: float, sigma2: float, sigma3: float
) -> DecayResult | None:
    """Decay of the trapping part of V; not required when s2 = s3.

    Metadata rate: the trapping density V_- + (grad V . x)_+ inherits at least
    the decay rate of V itself (the radial term loses one power to |x| but
    gains one from the gradient).
    """
    if sigma2 == sigma3:
        return None
    if sigma3 < sigma2:
        required = 7.0 * (sigma3 + 1.0)
    else:
        required = (sigma3 + 1.0) / (sigma1 + 1.0)
    trap = trapping_part(V)
    if float(trap.max()) <= VANISH_REL * max(V.sup, 1.0):
        return DecayResult(holds=True, required_rate=required, metadata_rate=math.inf)
    meta = V.spec.decay_rate
    sampled = _sampled_rate_ok(V.grid, trap, required)
    if meta >= required:
        return DecayResult(holds=sampled, required_rate=required, metadata_rate=meta)
    # metadata inconclusive for composite potentials: fall back on sampling
    return DecayResult(
        holds=sampled, required_rate=required, metadata_rate=meta, numerical_only=True
    )


def classify_pair(psi: ProfileSpec, sigma: float) -> str:
    """Classify a coefficient/exponent pair as intercritical, critical or
    neither.  Below the 2/3 threshold, intercriticality requires the
    coefficient (and its gradient) to lie in L^{6/(4-5s)}(R^3); for the
    library profiles <x>^{-m} membership holds iff m > (4-5s)/2."""
    if not 0 < sigma < 2:
        raise ValueError(f"exponent must lie in (0,2), got {sigma}")
    if sigma > 2.0 / 3.0:
        return "intercritical"
    if sigma == 2.0 / 3.0:
        return "critical"
    threshold = (4.0 - 5.0 * sigma) / 2.0
    if psi.decay_rate > threshold:
        return "intercritical"
    return "neither"


def compute_lambda(V_sup: float, sigma1: float, sigma3: float) -> float:
    """Smallest Lambda >= 0 with

        V_sup x^{2 s3 + 2} <= Lambda x^2 + x^{2 s1 + 2}/(2 s1 + 2)  for x >= 0,

    i.e. Lambda = max(0, sup_{x>0} [V_sup x^{2 s3} - x^{2 s1}/(2 s1 + 2)]),
    from the closed-form stationary point refined by bounded search."""
    if V_sup < 0:
        raise ValueError("V_sup must be nonnegative")
    if not (0 < sigma3 < sigma1 < 2 + 1e-12):
        raise ValueError("requires 0 < sigma3 < sigma1 <= 2")
    if V_sup == 0.0:
        return 0.0

    def g(x: float) -> float:
        return V_sup * x ** (2 * sigma3) - x ** (2 * sigma1) / (2 * sigma1 + 2)

    # g'(x) = 0  <=>  x^{2(s1-s3)} = V_sup s3 (2 s1 + 2) / s1
    x_star = (V_sup * sigma3 * (2 * sigma1 + 2) / sigma1) ** (1.0 / (2 * (sigma1 - sigma3)))
    res = minimize_scalar(lambda x: -g(x), bounds=(x_star / 4, x_star * 4), method="bounded",
                          options={"xatol": 1e-12})
    lam = max(0.0, g(x_star), -float(res.fun))
    audit_lambda(lam, V_sup, sigma1, sigma3)
    return lam


def audit_lambda(lam: float, V_sup: float, sigma1: float, sigma3: float,
                 n: int = 10_000) -> None:
    """Re-verify the Lambda inequality on a dense log-spaced audit grid."""
    x = np.logspace(-8, 8, n)
    lhs = V_sup * x ** (2 * sigma3 + 2)
    rhs = lam * x**2 + x ** (2 * sigma1 + 2) / (2 * sigma1 + 2)
    slack = 1e-10 * np.maximum(lhs, 1.0)
    if not np.all(lhs <= rhs + slack):
        worst = float(np.max(lhs - rhs))
        raise AssertionError(f"Lambda audit failed: max violation {worst:.3e}")


def compute_eta(a: EvaluatedProfile, sigma1: float, sigma2: float) -> float:
    """Weight for the modified energy-virial, chosen so that the Lap-a term of
    the energy law is absorbed by the sign-definite virial terms:

        (1/(2 s2 + 2)) |Lap a| y^{s2+1}
            <= (eta/4) [ (-Lap^2 chi) y + (Lap chi) y^{s1+1} ]   for all y >= 0.

    Splits |Lap a| y^{s2+1} by weighted AM-GM with theta = s2/s1, whose
    exponents 1/(s2+1) and (s1+1)/(s2+1) are then compared to the chi stack.
    Floor of 1 keeps the weight nondegenerate when Lap a vanishes.
    """
    grid = a.grid
    lap_abs = np.abs(a.lap)
    if float(lap_abs.max()) == 0.0:
        return 1.0
    if grid.d != 3:
        raise ValueError("modified energy-virial weight requires d = 3 (chi stack sign)")
    theta = sigma2 / sigma1
    neg_bilap = weights.neg_bilap_chi(grid.r2, grid.d)
    lap_chi = weights.lap_chi(grid.r2, grid.d)

    ratio1 = lap_abs ** (1.0 / (sigma2 + 1.0)) / neg_bilap
    ratio2 = lap_abs ** ((sigma1 + 1.0) / (sigma2 + 1.0)) / lap_chi
    for ratio, which in ((ratio1, "|Lap a|^{1/(s2+1)} <x>^7"),
                         (ratio2, "|Lap a|^{(s1+1)/(s2+1)} <x>")):
        if not _sampled_rate_ok(grid, ratio, 0.0):
            raise ValueError(
                f"decay assumption on Lap a violated numerically: {which} still growing "
                "at the outermost dyadic shell"
            )
    K1 = float(ratio1.max())
    K2 = float(ratio2.max())
    eta = max(
        1.0,
        (4.0 / (2.0 * sigma2 + 2.0))
        * max((1.0 - theta) * K1, theta * K2 * (sigma1 + 1.0) / sigma1),
    )
    return eta


def audit_eta(
    a: EvaluatedProfile,
    eta: float,
    sigma1: float,
    sigma2: float,
    y_values: np.ndarray | None = None,
) -> bool:
    """Pointwise audit of the eta inequality at every grid point for a range
    of field intensities y = |u|^2."""
    grid = a.grid
    if y_values is None:
        y_values = np.logspace(-6, 3, 50)
    lap_abs = np.abs(a.lap).ravel()
    neg_bilap = np.asarray(weights.neg_bilap_chi(grid.r2, grid.d)).ravel()
    lap_chi = np.asarray(weights.lap_chi(grid.r2, grid.d)).ravel()
    y = np.asarray(y_values)[:, None]
    lhs = lap_abs[None, :] * y ** (sigma2 + 1.0) / (2.0 * sigma2 + 2.0)
    rhs = (eta / 4.0) * (neg_bilap[None, :] * y + lap_chi[None, :] * y ** (sigma1 + 1.0))
    return bool(np.all(lhs <= rhs * (1.0 + 1e-12) + 1e-300))


def build_report(
    a: EvaluatedProfile,
    V: EvaluatedProfile,
    sigma1: float,
    sigma2: float,
    sigma3: float,
) -> HypothesisReport:
    """Run every checker and constructor on an evaluated (a, V) pair."""
    caveats: list[str] = []
    control = check_control(a, V, sigma2, sigma3)
    decay_a = check_delta_a_decay(a, sigma1, sigma2)
    decay_v = check_trapping_decay(V, sigma1, sigma2, sigma3)
    if decay_v is not None and decay_v.numerical_only:
        caveats.append("trapping decay checked by sampled dyadic ratios only")
    caveats.append(f"decay certified only up to the box radius L = {a.grid.L:g}")
    lam = compute_lambda(V.sup, sigma1, sigma3) if V.sup > 0 else 0.0
    try:
        eta = compute_eta(a, sigma1, sigma2)
    except ValueError as exc:
        eta = 1.0
        caveats.append(f"eta fell back to floor: {exc}")
    return HypothesisReport(
        control=control,
        delta_a_decay=decay_a,
        trapping_decay=decay_v,
        pair_a=classify_pair(a.spec, sigma2),
        pair_V=classify_pair(V.spec, sigma3),
        lam=lam,
        eta=eta,
        caveats=caveats,
    )
