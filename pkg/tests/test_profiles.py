"""Profile stacks: closed-form gradients/Laplacians against finite
differences, decay metadata, config parsing."""

import math

import numpy as np
import pytest

from dnls import profiles
from dnls.grid import Grid


def fd_lap(spec, x, h):
    """Second-order central-difference Laplacian of a profile at points x."""
    d = x.shape[-1]
    grid = None
    total = np.zeros(x.shape[:-1])
    for axis in range(d):
        e = np.zeros(d)
        e[axis] = h
        total = total + (_value_at(spec, x + e) - 2.0 * _value_at(spec, x)
                         + _value_at(spec, x - e)) / h**2
    return total


def _value_at(spec, pts):
    """Evaluate a profile at arbitrary points (not grid-bound)."""
    d = pts.shape[-1]
    coords = [pts[..., i] for i in range(d)]
    r2 = sum(c**2 for c in coords)
    parts = spec.parts if spec.kind == "sum" else (spec,)
    out = np.zeros(pts.shape[:-1])
    for p in parts:
        v, _, _ = profiles._eval_primitive(p, coords, r2, d)
        out = out + p.sign * v
    return out


@pytest.mark.parametrize("spec", [
    profiles.gaussian(1.3, 1.7, (0.4, -0.2, 0.1)),
    profiles.polydecay(0.8, 3.0),
    profiles.plateau(1.0, 1.5, 3.0),
    profiles.flat(2.0, 4.0),
])
def test_laplacian_matches_finite_difference(spec):
    rng = np.random.default_rng(5)
    pts = rng.uniform(-4, 4, size=(200, 3))
    grid = Grid(d=3, N=16, L=4.0)
    errs = []
    for h in (1e-2, 5e-3):
        coords = [pts[:, i] for i in range(3)]
        r2 = sum(c**2 for c in coords)
        parts = spec.parts if spec.kind == "sum" else (spec,)
        lap = np.zeros(len(pts))
        for p in parts:
            _, _, l = profiles._eval_primitive(p, coords, r2, 3)
            lap = lap + p.sign * l
        errs.append(np.abs(fd_lap(spec, pts, h) - lap).max())
    # central differences are O(h^2): halving h divides the error by ~4
    assert errs[1] < errs[0] / 2.5
    assert errs[0] < 5e-2


@pytest.mark.parametrize("spec", [
    profiles.gaussian(1.0, 2.0),
    profiles.polydecay(1.0, 2.0),
    profiles.plateau(1.0, 1.0, 2.5),
])
def test_gradient_matches_finite_difference(spec):
    grid = Grid(d=2, N=32, L=4.0)
    ev = profiles.evaluate(spec, grid)
    h = 1e-6
    for axis in range(2):
        pts = np.stack(np.broadcast_arrays(*grid.coords()), axis=-1).reshape(-1, 2)
        e = np.zeros(2)
        e[axis] = h
        fd = (_value_at(spec, pts + e) - _value_at(spec, pts - e)) / (2 * h)
        assert np.abs(fd.reshape(grid.shape) - ev.grad[axis]).max() < 1e-8


def test_polydecay_laplacian_at_origin():
    # Lap <x>^{-1} at the origin in d = 3 equals -3
    grid = Grid(d=3, N=16, L=4.0)
    ev = profiles.evaluate(profiles.polydecay(1.0, 1.0), grid)
    origin = np.unravel_index(int(np.argmin(grid.r2)), grid.shape)
    assert abs(ev.lap[origin] + 3.0) < 1e-12


def test_plateau_shape():
    grid = Grid(d=1, N=256, L=8.0)
    ev = profiles.evaluate(profiles.plateau(2.0, 2.0, 4.0), grid)
    x = np.abs(grid.x1)
    assert np.all(ev.value[x <= 2.0] == 2.0)
    assert np.all(ev.value[x >= 4.0] == 0.0)
    inside = (x > 2.0) & (x < 4.0)
    assert np.all((ev.value[inside] > 0) & (ev.value[inside] < 2.0))


def test_flat_is_one_minus_plateau():
    grid = Grid(d=2, N=32, L=6.0)
    f = profiles.evaluate(profiles.flat(1.0, 3.0), grid)
    p = profiles.evaluate(profiles.plateau(1.0, 1.0, 3.0), grid)
    assert np.abs(f.value + p.value - 1.0).max() < 1e-14
    assert np.abs(f.lap + p.lap).max() < 1e-14


def test_sum_additivity():
    grid = Grid(d=1, N=64, L=8.0)
    s1 = profiles.gaussian(1.0, 2.0)
    s2 = profiles.negate(profiles.polydecay(0.5, 2.0))
    total = profiles.evaluate(profiles.profile_sum(s1, s2), grid)
    a = profiles.evaluate(s1, grid)
    b = profiles.evaluate(s2, grid)
    assert np.abs(total.value - (a.value + b.value)).max() < 1e-14
    assert np.abs(total.lap - (a.lap + b.lap)).max() < 1e-14


def test_nonnegative_guard():
    grid = Grid(d=1, N=32, L=4.0)
    with pytest.raises(ValueError, match="nonnegative"):
        profiles.evaluate(profiles.negate(profiles.gaussian(1.0, 1.0)), grid,
                          nonnegative=True)
    profiles.evaluate(profiles.gaussian(1.0, 1.0), grid, nonnegative=True)


def test_decay_metadata():
    assert profiles.gaussian(1.0, 1.0).decay_rate == math.inf
    assert profiles.plateau(1.0, 1.0, 2.0).decay_rate == math.inf
    assert profiles.polydecay(1.0, 4.0).decay_rate == 4.0
    assert profiles.polydecay(1.0, 4.0).lap_decay_rate == 6.0
    assert profiles.flat(1.0, 2.0).decay_rate == 0.0
    assert profiles.flat(1.0, 2.0).lap_decay_rate == math.inf
    mixed = profiles.profile_sum(profiles.gaussian(1.0, 1.0), profiles.polydecay(1.0, 2.0))
    assert mixed.decay_rate == 2.0


def test_one_minus_compact():
    assert profiles.flat(1.0, 2.0).one_minus_compact
    assert profiles.constant(1.0).one_minus_compact
    assert not profiles.flat(1.0, 2.0, amplitude=0.5).one_minus_compact
    assert not profiles.gaussian(1.0, 1.0).one_minus_compact


def test_trapping_part():
    grid = Grid(d=1, N=128, L=8.0)
    # repulsive V = <x>^{-2}: V >= 0 and x V' <= 0, trapping part vanishes
    rep = profiles.evaluate(profiles.polydecay(1.0, 2.0), grid)
    assert profiles.trapping_part(rep).max() == 0.0
    # attractive well: both the negative part and the radial part contribute
    well = profiles.evaluate(profiles.negate(profiles.gaussian(1.0, 2.0)), grid)
    trap = profiles.trapping_part(well)
    assert trap.max() > 1.0  # -V contributes 1 at the origin, gradient more off-center


def test_spec_from_dict():
    spec = profiles.spec_from_dict({"kind": "gaussian", "amplitude": 2.0, "width": 1.5})
    assert spec.kind == "gaussian" and spec.amplitude == 2.0
    with pytest.raises(ValueError, match="kind"):
        profiles.spec_from_dict({"amplitude": 1.0})
    with pytest.raises(ValueError, match="unknown key"):
        profiles.spec_from_dict({"kind": "gaussian", "radius": 1.0})
    with pytest.raises(ValueError, match="unknown profile kind"):
        profiles.spec_from_dict({"kind": "bump"})
    nested = profiles.spec_from_dict({
        "kind": "sum",
        "parts": [{"kind": "constant", "amplitude": 1.0},
                  {"kind": "gaussian", "amplitude": 0.5, "width": 1.0, "sign": -1.0}],
    })
    assert nested.kind == "sum" and len(nested.parts) == 2


def test_profile_spec_validation():
    with pytest.raises(ValueError):
        profiles.ProfileSpec(kind="bump")
    with pytest.raises(ValueError):
        profiles.plateau(1.0, 3.0, 2.0)
    with pytest.raises(ValueError):
        profiles.gaussian(1.0, -1.0)
    with pytest.raises(ValueError):
        profiles.polydecay(1.0, 0.0)
