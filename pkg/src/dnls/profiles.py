"""Damping and potential profiles with analytic value/gradient/Laplacian
stacks and decay metadata.

Primitives:
    zero
    constant  c
    gaussian  A exp(-|x - x0|^2 / w^2)
    plateau   A on |x| <= r1, quintic-smoothstep down to 0 at |x| = r2
    polydecay A <x>^{-m}
    flat      1 - plateau(A, r1, r2)   (asymptotically flat damping)
    sum       up to 8 primitives

Gradients and Laplacians are closed forms; nothing is finite-differenced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from dnls.grid import Grid

KINDS = ("zero", "constant", "gaussian", "plateau", "polydecay", "flat", "sum")


@dataclass(frozen=True)
class ProfileSpec:
    kind: str
    amplitude: float = 1.0
    center: tuple[float, ...] = ()
    width: float = 1.0
    r1: float = 1.0
    r2: float = 2.0
    rate: float = 1.0
    sign: float = 1.0
    parts: tuple["ProfileSpec", ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown profile kind {self.kind!r}; expected one of {KINDS}")
        if self.sign not in (1.0, -1.0):
            raise ValueError("sign must be +1 or -1")
        if self.kind == "gaussian" and not self.width > 0:
            raise ValueError("gaussian width must be positive")
        if self.kind in ("plateau", "flat"):
            if not (0 < self.r1 < self.r2):
                raise ValueError("plateau requires 0 < r1 < r2")
        if self.kind == "polydecay" and not self.rate > 0:
            raise ValueError("polydecay rate must be positive")
        if self.kind == "sum":
            if not 1 <= len(self.parts) <= 8:
                raise ValueError("sum takes between 1 and 8 primitives")

    @property
    def decay_rate(self) -> float:
        """Largest m with |profile| <~ <x>^{-m}; inf for compact support."""
        if self.kind in ("zero", "gaussian", "plateau"):
            return math.inf
        if self.kind == "constant":
            return math.inf if self.amplitude == 0 else 0.0
        if self.kind == "polydecay":
            return self.rate
        if self.kind == "flat":
            return 0.0
        return min(p.decay_rate for p in self.parts)

    @property
    def lap_decay_rate(self) -> float:
        """Decay rate of the Laplacian (two differentiations cost 2 for
        polynomial tails; compact and Gaussian stay super-polynomial)."""
        if self.kind in ("zero", "constant", "gaussian", "plateau", "flat"):
            return math.inf
        if self.kind == "polydecay":
            return self.rate + 2.0
        return min(p.lap_decay_rate for p in self.parts)

    @property
    def one_minus_compact(self) -> bool:
        """True when 1 - profile is compactly supported (flat damping with
        unit amplitude, or the constant 1)."""
        if self.kind == "flat" and self.sign == 1.0 and self.amplitude == 1.0:
            return True
        if self.kind == "constant" and self.sign * self.amplitude == 1.0:
            return True
        return False


def zero() -> ProfileSpec:
    return ProfileSpec(kind="zero")


def constant(c: float) -> ProfileSpec:
    return ProfileSpec(kind="constant", amplitude=abs(c), sign=1.0 if c >= 0 else -1.0)


def gaussian(amplitude: float, width: float, center: tuple[float, ...] = ()) -> ProfileSpec:
    return ProfileSpec(kind="gaussian", amplitude=amplitude, width=width, center=tuple(center))


def plateau(amplitude: float, r1: float, r2: float) -> ProfileSpec:
    return ProfileSpec(kind="plateau", amplitude=amplitude, r1=r1, r2=r2)


def polydecay(amplitude: float, rate: float) -> ProfileSpec:
    return ProfileSpec(kind="polydecay", amplitude=amplitude, rate=rate)


def flat(r1: float, r2: float, amplitude: float = 1.0) -> ProfileSpec:
    return ProfileSpec(kind="flat", amplitude=amplitude, r1=r1, r2=r2)


def profile_sum(*parts: ProfileSpec) -> ProfileSpec:
    return ProfileSpec(kind="sum", parts=tuple(parts))


def negate(spec: ProfileSpec) -> ProfileSpec:
    return ProfileSpec(
        kind=spec.kind, amplitude=spec.amplitude, center=spec.center, width=spec.width,
        r1=spec.r1, r2=spec.r2, rate=spec.rate, sign=-spec.sign, parts=spec.parts,
    )


def _smoothstep(s):
    """Quintic C^2 smoothstep 6 s^5 - 15 s^4 + 10 s^3 and derivatives."""
    S = s**3 * (6.0 * s**2 - 15.0 * s + 10.0)
    dS = 30.0 * s**2 * (s - 1.0) ** 2
    d2S = 60.0 * s * (2.0 * s - 1.0) * (s - 1.0)
    return S, dS, d2S


def _radial_assemble(fr, dfr, d2fr, coords, r2, d):
    """Lift radial value/df/d2f to grid gradient and Laplacian.

    grad = f'(r) x/r and Lap = f'' + (d-1) f'/r; at r = 0 the profile is
    smooth with f'(0) = 0, where Lap = d f''(0)."""
    r = np.sqrt(r2)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(r > 0, dfr / np.where(r > 0, r, 1.0), d2fr)
    grad = [ratio * c for c in coords]
    lap = d2fr + (d - 1) * ratio
    return grad, lap


def _eval_primitive(spec: ProfileSpec, coords, r2, d):
    A = spec.amplitude
    if spec.kind == "zero":
        z = np.zeros_like(r2)
        return z, [z.copy() for _ in range(d)], z.copy()
    if spec.kind == "constant":
        z = np.zeros_like(r2)
        return np.full_like(r2, A), [z.copy() for _ in range(d)], z.copy()
    if spec.kind == "gaussian":
        center = spec.center if spec.center else (0.0,) * d
        if len(center) != d:
            raise ValueError(f"gaussian center has {len(center)} components, grid is {d}D")
        w2 = spec.width**2
        shifted = [c - c0 for c, c0 in zip(coords, center)]
        q = sum(s**2 for s in shifted) / w2
        val = A * np.exp(-q)
        grad = [-2.0 * s / w2 * val for s in shifted]
        lap = (2.0 * val / w2) * (2.0 * q - d)
        return val, grad, lap
    if spec.kind == "polydecay":
        m = spec.rate
        u = 1.0 + r2
        val = A * u ** (-m / 2.0)
        grad = [-m * A * c * u ** (-m / 2.0 - 1.0) for c in coords]
        lap = -m * A * (d * u ** (-m / 2.0 - 1.0) - (m + 2.0) * r2 * u ** (-m / 2.0 - 2.0))
        return val, grad, lap
    if spec.kind in ("plateau", "flat"):
        r = np.sqrt(r2)
        width = spec.r2 - spec.r1
        s = np.clip((r - spec.r1) / width, 0.0, 1.0)
        S, dS, d2S = _smoothstep(s)
        inside = (r > spec.r1) & (r < spec.r2)
        fr = A * (1.0 - S)
        dfr = np.where(inside, -A * dS / width, 0.0)
        d2fr = np.where(inside, -A * d2S / width**2, 0.0)
        grad, lap = _radial_assemble(fr, dfr, d2fr, coords, r2, d)
        if spec.kind == "flat":
            return 1.0 - fr, [-g for g in grad], -lap
        return fr, grad, lap
    raise AssertionError(spec.kind)


@dataclass
class EvaluatedProfile:
    """Closed-form samples of a profile and its derivative stack on a grid."""

    grid: Grid
    spec: ProfileSpec
    value: np.ndarray
    grad: list[np.ndarray]
    lap: np.ndarray
    sup: float = dc_field(init=False)

    def __post_init__(self):
        self.sup = float(np.max(np.abs(self.value)))


def evaluate(spec: ProfileSpec, grid: Grid, nonnegative: bool = False) -> EvaluatedProfile:
    """Fill value/gradient/Laplacian sample arrays from the closed forms.

    With nonnegative=True (damping profiles), any negative sample is a
    configuration error: the damping coefficient must satisfy a >= 0.
    """
    coords = grid.coords()
    r2 = grid.r2
    parts = spec.parts if spec.kind == "sum" else (spec,)
    value = np.zeros(grid.shape)
    grad = [np.zeros(grid.shape) for _ in range(grid.d)]
    lap = np.zeros(grid.shape)
    for part in parts:
        v, g, l = _eval_primitive(part, coords, r2, grid.d)
        value += part.sign * np.broadcast_to(v, grid.shape)
        for axis in range(grid.d):
            grad[axis] += part.sign * np.broadcast_to(g[axis], grid.shape)
        lap += part.sign * np.broadcast_to(l, grid.shape)
    if nonnegative and value.min() < 0:
        raise ValueError(
            f"damping must be nonnegative; minimum sample is {value.min():.3e}"
        )
    return EvaluatedProfile(grid=grid, spec=spec, value=value, grad=grad, lap=lap)


def trapping_part(V: EvaluatedProfile) -> np.ndarray:
    """Pointwise trapping density V_- + (grad V . x)_+ on the grid."""
    radial = np.zeros(V.grid.shape)
    for c, g in zip(V.grid.coords(), V.grad):
        radial = radial + c * g
    return np.maximum(-V.value, 0.0) + np.maximum(radial, 0.0)


def spec_from_dict(data: dict, what: str = "profile") -> ProfileSpec:
    """Build a ProfileSpec from a config table."""
    if not isinstance(data, dict):
        raise ValueError(f"{what} must be a table, got {type(data).__name__}")
    d = dict(data)
    kind = d.pop("kind", None)
    if kind is None:
        raise ValueError(f"{what} is missing 'kind'")
    if kind == "sum":
        parts = d.pop("parts", None)
        if parts is None:
            raise ValueError(f"{what} of kind 'sum' needs a 'parts' list")
        sign = float(d.pop("sign", 1.0))
        _reject_unknown(d, what, ("kind", "parts", "sign"))
        return ProfileSpec(
            kind="sum",
            sign=sign,
            parts=tuple(spec_from_dict(p, f"{what}.parts[{i}]") for i, p in enumerate(parts)),
        )
    allowed = {
        "zero": (),
        "constant": ("amplitude",),
        "gaussian": ("amplitude", "width", "center"),
        "plateau": ("amplitude", "r1", "r2"),
        "polydecay": ("amplitude", "rate"),
        "flat": ("amplitude", "r1", "r2"),
    }
    if kind not in allowed:
        raise ValueError(f"unknown profile kind {kind!r} in {what}; expected one of {KINDS}")
    kwargs = {}
    for key in allowed[kind]:
        if key in d:
            val = d.pop(key)
            kwargs[key] = tuple(val) if key == "center" else float(val)
    sign = float(d.pop("sign", 1.0))
    _reject_unknown(d, what, ("kind", "sign") + allowed[kind])
    return ProfileSpec(kind=kind, sign=sign, **kwargs)


def _reject_unknown(leftover: dict, what: str, allowed: tuple) -> None:
    if leftover:
        key = sorted(leftover)[0]
        raise ValueError(f"unknown key {key!r} in {what}; allowed keys: {sorted(set(allowed))}")
