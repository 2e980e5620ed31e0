"""Closed-form derivative stacks for the Morawetz weights.

The virial weight is chi(x) = <x> = sqrt(1 + |x|^2) and the interaction
kernel weight is rho(x) = |x|.  All modules that need <x>-weights draw from
here (single source of truth).

For chi = <x> in dimension d:

    grad chi       = x / <x>
    Lap chi        = (d-1)/<x> + 1/<x>^3
    Lap^2 chi      = -(d-1)[(d-3)/<x>^3 + 3/<x>^5] - 3[(d-5)/<x>^5 + 5/<x>^7]
    D^2 chi xi.xi  = |xi|^2/<x> - (x.xi)^2/<x>^3  >=  |xi|^2/<x>^3

In d = 3 this reduces to Lap chi = 2/<x> + 1/<x>^3 and -Lap^2 chi = 15/<x>^7.
"""

from __future__ import annotations

import numpy as np


def bracket(r2: np.ndarray | float) -> np.ndarray | float:
    """<x> = sqrt(1 + |x|^2), from |x|^2."""
    return np.sqrt(1.0 + r2)


def lap_chi(r2, d: int):
    b = bracket(r2)
    return (d - 1) / b + 1.0 / b**3


def bilap_chi(r2, d: int):
    """Lap^2 <x>; equals -15/<x>^7 for d = 3."""
    b = bracket(r2)
    return -(d - 1) * ((d - 3) / b**3 + 3.0 / b**5) - 3.0 * ((d - 5) / b**5 + 5.0 / b**7)


def neg_bilap_chi(r2, d: int):
    return -bilap_chi(r2, d)


def d2_chi_quadform(x: np.ndarray, xi: np.ndarray):
    """D^2 chi xi . xi at points x (shape (..., d)) for vectors xi."""
    r2 = np.sum(x**2, axis=-1)
    b = bracket(r2)
    return np.sum(xi**2, axis=-1) / b - np.sum(x * xi, axis=-1) ** 2 / b**3


def grad_chi_components(coords: list[np.ndarray], r2: np.ndarray) -> list[np.ndarray]:
    """grad chi = x/<x> as broadcastable per-axis arrays."""
    b = bracket(r2)
    return [c / b for c in coords]


def grad_rho(x: np.ndarray) -> np.ndarray:
    """grad rho = x/|x| at points x (shape (..., d)); 0 at the origin."""
    r = np.sqrt(np.sum(x**2, axis=-1, keepdims=True))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(r > 0, x / r, 0.0)
    return out


def lap_rho(x: np.ndarray, d: int = 3) -> np.ndarray:
    """Lap rho = (d-1)/|x| away from the origin (2/|x| in d = 3)."""
    r = np.sqrt(np.sum(x**2, axis=-1))
    with np.errstate(divide="ignore"):
        return np.where(r > 0, (d - 1) / r, 0.0)
