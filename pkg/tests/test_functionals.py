"""Snapshot functionals and accumulator integrands against closed forms and
direct-sum oracles."""

import itertools

import numpy as np
import pytest

from dnls import functionals, profiles
from dnls.evolution import ProblemSpec, SimState
from dnls.functionals import (
    DiagnosticsContext,
    Recorder,
    _quad,
    _shell_mask,
    compute_interaction_B,
    compute_record,
    corrected_weight,
    highfreq_fraction,
    modulus_gradient_sq,
    momentum_density,
    step_integrands,
)
from dnls.grid import ComplexField, Grid, field_from_function, gradient


def make_ctx(grid, sigma=(1.0, 1.0, 0.5), a_spec=None, V_spec=None,
             lam=0.0, eta=1.0, interaction_b=False):
    a = profiles.evaluate(a_spec or profiles.constant(1.0), grid, nonnegative=True)
    V = profiles.evaluate(V_spec or profiles.zero(), grid)
    spec = ProblemSpec(sigma1=sigma[0], sigma2=sigma[1], sigma3=sigma[2], a=a, V=V)
    return DiagnosticsContext(spec, lam=lam, eta=eta, interaction_b=interaction_b)


# Building a d = 3 DiagnosticsContext folds weight spectra from a 256^3
# oversampled grid, which dominates the runtime of this module; share one
# context per grid across tests.
@pytest.fixture(scope="module")
def ctx3():
    return make_ctx(Grid(d=3, N=32, L=8.0), lam=0.05)


@pytest.fixture(scope="module")
def ctx3_b():
    return make_ctx(Grid(d=3, N=16, L=4.0), interaction_b=True)


def gaussian_3d(grid):
    return field_from_function(
        grid, lambda x, y, z: np.exp(-(x**2 + y**2 + z**2) / 2.0))


def test_gaussian_functional_closed_forms(ctx3):
    ctx = ctx3
    grid = ctx.grid
    u = gaussian_3d(grid)
    rec = compute_record(u, 0.0, ctx)
    pi32 = np.pi**1.5
    # ||u||_2^2 = pi^{3/2}; ||grad u||_2^2 = (3/2) pi^{3/2};
    # (1/4)||u||_4^4 = (1/4)(pi/2)^{3/2}   for sigma1 = 1
    assert rec.mass == pytest.approx(pi32, rel=1e-12)
    assert rec.energy_kinetic == pytest.approx(0.75 * pi32, rel=1e-12)
    # |u|^4 = e^{-2 r^2} is the least band-limited density here; its aliasing
    # error at h = 0.5 sits near 1e-8
    assert rec.energy_defocusing == pytest.approx(0.25 * (np.pi / 2.0) ** 1.5, rel=1e-7)
    assert rec.energy_potential == 0.0
    assert rec.energy == pytest.approx(rec.energy_kinetic + rec.energy_defocusing, rel=1e-14)
    assert rec.energy_plus == pytest.approx(rec.energy + 0.05 * rec.mass, rel=1e-14)
    assert rec.grad_l2 == pytest.approx(np.sqrt(1.5 * pi32), rel=1e-12)


def test_morawetz_vanishes_for_real_fields(ctx3):
    u = gaussian_3d(ctx3.grid)
    rec = compute_record(u, 0.0, ctx3)
    assert abs(rec.morawetz) < 1e-14
    # with I = 0 the modified energy collapses onto E_+
    assert rec.modified_energy == pytest.approx(rec.energy_plus, rel=1e-12)


def test_momentum_density_plane_wave():
    grid = Grid(d=1, N=64, L=np.pi)
    k = 3.0  # mode 3 on L = pi
    u = field_from_function(grid, lambda x: np.exp(1j * k * x))
    grads = [g.values for g in gradient(u)]
    mom = momentum_density(u.values, grads)
    assert np.abs(mom[0] - k).max() < 1e-12


def test_modulus_gradient_closed_form():
    grid = Grid(d=1, N=256, L=12.0)
    # u = e^{i x} e^{-x^2/2}: |grad|u||^2 = x^2 e^{-x^2}, phase must drop out
    u = field_from_function(grid, lambda x: np.exp(1j * x - x**2 / 2.0))
    grads = [g.values for g in gradient(u)]
    got = modulus_gradient_sq(u.values, grads)
    exact = grid.x1**2 * np.exp(-grid.x1**2)
    assert np.abs(got - exact).max() < 1e-9


def test_shell_mask_constant_field():
    for d in (1, 2, 3):
        grid = Grid(d=d, N=16, L=2.0)
        mask = _shell_mask(grid)
        # outer 1/8 of indices on each side -> complement is (3/4)^d of cells
        assert mask.sum() == grid.N**d - (3 * grid.N // 4) ** d
    grid = Grid(d=2, N=16, L=2.0)
    u = ComplexField(grid, np.ones(grid.shape, dtype=complex))
    ctx = make_ctx(grid)
    rec = compute_record(u, 0.0, ctx)
    assert rec.shell_mass == pytest.approx((1.0 - 0.75**2) * rec.mass, rel=1e-12)


def test_interaction_b_bound_random_fields(ctx3_b):
    ctx = ctx3_b
    grid = ctx.grid
    rng = np.random.default_rng(21)
    for _ in range(100):
        u = ComplexField(grid, rng.normal(size=grid.shape)
                         + 1j * rng.normal(size=grid.shape))
        rec = compute_record(u, 0.0, ctx)
        bound = rec.mass**1.5 * rec.grad_l2
        assert abs(rec.interaction_b) <= bound * (1.0 + 1e-9)


def test_interaction_b_matches_direct_sum(ctx3_b):
    ctx = ctx3_b
    grid = ctx.grid
    rng = np.random.default_rng(5)
    u = ComplexField(grid, rng.normal(size=grid.shape) + 1j * rng.normal(size=grid.shape))
    fft_val = compute_interaction_B(u, ctx)

    # independent oracle: circular convolution as an explicit shift sum with
    # displacements wrapped to [-L, L)
    grads = [g.values for g in gradient(u)]
    mom = momentum_density(u.values, grads)
    rho = np.abs(u.values) ** 2
    disp1 = grid.h * np.arange(grid.N)
    disp1 = np.where(disp1 < grid.L, disp1, disp1 - 2.0 * grid.L)
    conv = [np.zeros(grid.shape) for _ in range(3)]
    for shift in itertools.product(range(grid.N), repeat=3):
        z = np.array([disp1[s] for s in shift])
        r = np.linalg.norm(z)
        if r == 0:
            continue
        rolled = np.roll(rho, shift, axis=(0, 1, 2))
        for axis in range(3):
            conv[axis] += (z[axis] / r) * rolled
    direct = sum(_quad(m * c * grid.cell_volume, grid)
                 for m, c in zip(mom, conv))
    assert fft_val == pytest.approx(direct, rel=1e-12)


def test_corrected_weight_exact_for_band_limited():
    # a weight already resolved on the coarse grid is returned unchanged
    grid = Grid(d=1, N=64, L=8.0)
    sampler = lambda g: np.cos(np.pi * g.x1 / g.L)
    got = corrected_weight(grid, sampler)
    assert np.abs(got - sampler(grid)).max() < 1e-12


def test_corrected_weight_fixes_rectangle_rule():
    # 1/<x>^7 is sharply peaked: plain sampling misquadratures it against a
    # resolved density, corrected samples reproduce the fine-grid integral
    grid = Grid(d=1, N=32, L=16.0)
    fine = Grid(d=1, N=4096, L=16.0)
    w = lambda g: 1.0 / (1.0 + g.r2) ** 3.5
    dens = lambda g: np.exp(-g.r2 / 8.0)  # band-limited on the coarse grid
    exact = float(np.sum(w(fine) * dens(fine))) * fine.cell_volume
    plain = float(np.sum(w(grid) * dens(grid))) * grid.cell_volume
    corrected = float(np.sum(corrected_weight(grid, w) * dens(grid))) * grid.cell_volume
    assert abs(corrected - exact) < 1e-10 * abs(exact)
    assert abs(corrected - exact) < 1e-4 * abs(plain - exact)


def test_highfreq_fraction():
    grid = Grid(d=1, N=128, L=12.0)
    smooth = field_from_function(grid, lambda x: np.exp(-x**2 / 2.0))
    assert highfreq_fraction(smooth) < 1e-10
    rng = np.random.default_rng(3)
    noise = ComplexField(grid, rng.normal(size=grid.shape)
                         + 1j * rng.normal(size=grid.shape))
    assert highfreq_fraction(noise) > 0.1


def test_step_integrands_closed_forms():
    grid = Grid(d=1, N=256, L=12.0)
    ctx = make_ctx(grid, sigma=(1.0, 1.0, 0.5), a_spec=profiles.constant(2.0))
    u = field_from_function(grid, lambda x: np.exp(-x**2 / 2.0))
    vals = step_integrands(u, ctx)
    # int a |u|^4 = 2 sqrt(pi/2); int |u|^4 = sqrt(pi/2)
    assert vals["diss_mass"] == pytest.approx(2.0 * np.sqrt(np.pi / 2.0), rel=1e-12)
    assert vals["l4"] == pytest.approx(np.sqrt(np.pi / 2.0), rel=1e-12)
    assert vals["l2s2"] == pytest.approx(np.sqrt(np.pi / 2.0), rel=1e-12)
    # a constant => Lap a = 0 contribution
    assert vals["e_lapa"] == 0.0
    # int a |u|^{2 s1 + 2 s2 + 2} = 2 ||u||_6^6 = 2 sqrt(pi/3)
    assert vals["e_defoc"] == pytest.approx(2.0 * np.sqrt(np.pi / 3.0), rel=1e-12)
    assert vals["led"] > 0 and vals["a_int"] > 0


def test_recorder_requires_initial_checkpoint():
    grid = Grid(d=1, N=32, L=4.0)
    ctx = make_ctx(grid)
    rec = Recorder(ctx, dt=0.1)
    u = field_from_function(grid, lambda x: np.exp(-x**2))
    spec = ctx.spec
    state = SimState(t=0.1, u=u, step=1, spec=spec)
    with pytest.raises(RuntimeError):
        rec.per_step(state)


def test_recorder_snapshot_capture():
    grid = Grid(d=1, N=32, L=4.0)
    ctx = make_ctx(grid)
    rec = Recorder(ctx, dt=0.1, snapshot_times=[0.0, 0.2])
    u = field_from_function(grid, lambda x: np.exp(-x**2))
    spec = ctx.spec
    rec.at_checkpoint(SimState(t=0.0, u=u, step=0, spec=spec))
    rec.per_step(SimState(t=0.1, u=u, step=1, spec=spec))
    rec.per_step(SimState(t=0.2, u=u, step=2, spec=spec))
    assert sorted(rec.series.snapshots) == [0.0, 0.2]
    assert len(rec.series.records) == 1  # only the checkpoint took a record
