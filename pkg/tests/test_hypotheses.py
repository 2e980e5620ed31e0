"""Structural hypothesis checkers and constructed constants (c0, Lambda, eta)."""

import json
import math

import numpy as np
import pytest

from dnls import hypotheses, profiles
from dnls.grid import Grid

GRID = Grid(d=3, N=48, L=12.0)


def _eval(spec, nonnegative=False):
    return profiles.evaluate(spec, GRID, nonnegative=nonnegative)


# ---------------------------------------------------------------- control

def test_control_repulsive_potential_holds_with_zero_c0():
    # V = <x>^{-2} is repulsive: V >= 0 and x.grad V <= 0, so the trapping
    # density vanishes identically and any damping controls it.
    a = _eval(profiles.gaussian(1.0, 2.0), nonnegative=True)
    V = _eval(profiles.polydecay(1.0, 2.0))
    res = hypotheses.check_control(a, V, 0.8, 0.8)
    assert res.holds and res.c0 == 0.0


def test_control_plateau_over_truncated_well_holds():
    a = _eval(profiles.plateau(1.0, 4.0, 6.0), nonnegative=True)
    V = _eval(profiles.negate(profiles.gaussian(0.3, 1.0)))
    res = hypotheses.check_control(a, V, 0.8, 0.8)
    assert res.holds
    assert 0.0 < res.c0 < math.inf


def test_control_fails_without_damping():
    a = _eval(profiles.zero(), nonnegative=True)
    V = _eval(profiles.negate(profiles.gaussian(0.5, 2.0)))
    res = hypotheses.check_control(a, V, 0.8, 0.8)
    assert not res.holds
    assert res.c0 == math.inf
    assert res.worst_ratio > 0


def test_control_c0_scales_linearly_in_potential():
    a = _eval(profiles.constant(1.0), nonnegative=True)
    V1 = _eval(profiles.negate(profiles.gaussian(0.5, 2.0)))
    V2 = _eval(profiles.negate(profiles.gaussian(1.0, 2.0)))
    c1 = hypotheses.check_control(a, V1, 0.8, 0.8).c0
    c2 = hypotheses.check_control(a, V2, 0.8, 0.8).c0
    assert abs(c2 - 2.0 * c1) < 1e-10 * c1


# ------------------------------------------------------------ decay checks

def test_delta_a_decay_schwartz_profiles_hold():
    for spec in (profiles.gaussian(1.0, 1.0), profiles.constant(1.0),
                 profiles.plateau(1.0, 2.0, 4.0)):
        a = _eval(spec, nonnegative=True)
        res = hypotheses.check_delta_a_decay(a, 1.0, 0.8)
        assert res.holds
        assert res.required_rate == pytest.approx(7.0 * 1.8)


def test_delta_a_decay_slow_polynomial_fails():
    # <x>^{-4} has Lap a ~ <x>^{-6}; the requirement at s2 = 0.5 is rate 10.5
    a = _eval(profiles.polydecay(1.0, 4.0), nonnegative=True)
    res = hypotheses.check_delta_a_decay(a, 1.0, 0.5)
    assert not res.holds
    assert res.required_rate == pytest.approx(10.5)
    assert res.metadata_rate == pytest.approx(6.0)


def test_delta_a_decay_equal_exponents_relaxed_rate():
    a = _eval(profiles.polydecay(1.0, 4.0), nonnegative=True)
    res = hypotheses.check_delta_a_decay(a, 1.0, 1.0)
    assert res.holds and res.required_rate == 1.0


def test_delta_a_decay_rejects_sigma2_above_sigma1():
    a = _eval(profiles.constant(1.0), nonnegative=True)
    with pytest.raises(ValueError):
        hypotheses.check_delta_a_decay(a, 0.5, 1.0)


def test_trapping_decay_not_required_when_exponents_match():
    V = _eval(profiles.negate(profiles.gaussian(0.5, 2.0)))
    assert hypotheses.check_trapping_decay(V, 1.0, 0.8, 0.8) is None


def test_trapping_decay_gaussian_well_holds():
    V = _eval(profiles.negate(profiles.gaussian(0.5, 2.0)))
    res = hypotheses.check_trapping_decay(V, 1.0, 0.8, 0.5)
    assert res.holds and res.required_rate == pytest.approx(10.5)


def test_trapping_decay_slow_well_fails():
    V = _eval(profiles.negate(profiles.polydecay(1.0, 1.0)))
    res = hypotheses.check_trapping_decay(V, 1.0, 0.8, 0.5)
    assert not res.holds
    assert res.numerical_only  # metadata inconclusive, settled by sampling


def test_trapping_decay_sigma3_above_sigma2():
    V = _eval(profiles.negate(profiles.gaussian(0.5, 2.0)))
    res = hypotheses.check_trapping_decay(V, 1.0, 0.5, 0.8)
    assert res.holds
    assert res.required_rate == pytest.approx(1.8 / 2.0)


# ---------------------------------------------------------- classification

def test_classify_pair():
    g = profiles.gaussian(1.0, 1.0)
    assert hypotheses.classify_pair(g, 0.8) == "intercritical"
    assert hypotheses.classify_pair(g, 2.0 / 3.0) == "critical"
    # below threshold the decay rate decides: <x>^{-1} beats (4-5*0.5)/2 = 0.75
    assert hypotheses.classify_pair(profiles.polydecay(1.0, 1.0), 0.5) == "intercritical"
    assert hypotheses.classify_pair(profiles.flat(1.0, 2.0), 0.5) == "neither"
    with pytest.raises(ValueError):
        hypotheses.classify_pair(g, 2.0)


# ------------------------------------------------------------------ Lambda

def test_lambda_closed_form():
    # sup_x [x^4 - x^6/6] at x^2 = 3 gives 3 - 27/18 = 1.5
    assert hypotheses.compute_lambda(1.0, 2.0, 1.0) == pytest.approx(1.5, rel=1e-12)


def test_lambda_matches_grid_search():
    V_sup, s1, s3 = 0.7, 1.0, 0.5
    lam = hypotheses.compute_lambda(V_sup, s1, s3)
    x = np.linspace(1e-8, 100.0, 2_000_001)
    brute = np.max(V_sup * x ** (2 * s3) - x ** (2 * s1) / (2 * s1 + 2))
    assert lam == pytest.approx(brute, rel=1e-3)
    hypotheses.audit_lambda(lam, V_sup, s1, s3)


def test_lambda_zero_potential():
    assert hypotheses.compute_lambda(0.0, 1.0, 0.5) == 0.0


def test_lambda_audit_catches_undershoot():
    with pytest.raises(AssertionError, match="audit"):
        hypotheses.audit_lambda(0.1, 1.0, 2.0, 1.0)


def test_lambda_validates_exponents():
    with pytest.raises(ValueError):
        hypotheses.compute_lambda(1.0, 0.5, 0.8)
    with pytest.raises(ValueError):
        hypotheses.compute_lambda(-1.0, 1.0, 0.5)


# --------------------------------------------------------------------- eta

def test_eta_floor_for_constant_damping():
    a = _eval(profiles.constant(2.0), nonnegative=True)
    assert hypotheses.compute_eta(a, 1.0, 1.0) == 1.0


def test_eta_gaussian_passes_audit():
    a = _eval(profiles.gaussian(1.0, 2.0), nonnegative=True)
    eta = hypotheses.compute_eta(a, 1.0, 1.0)
    assert eta >= 1.0
    assert hypotheses.audit_eta(a, eta, 1.0, 1.0)
    # undersized weight fails the pointwise audit
    assert not hypotheses.audit_eta(a, eta / 100.0, 1.0, 1.0)


def test_eta_scales_with_amplitude():
    small = _eval(profiles.gaussian(1.0, 2.0), nonnegative=True)
    big = _eval(profiles.gaussian(10.0, 2.0), nonnegative=True)
    e_small = hypotheses.compute_eta(small, 1.0, 1.0)
    e_big = hypotheses.compute_eta(big, 1.0, 1.0)
    assert e_big == pytest.approx(10.0 * e_small, rel=1e-12)


def test_eta_requires_d3():
    g1 = Grid(d=1, N=64, L=12.0)
    a = profiles.evaluate(profiles.gaussian(1.0, 2.0), g1, nonnegative=True)
    with pytest.raises(ValueError, match="d = 3"):
        hypotheses.compute_eta(a, 1.0, 1.0)


# ------------------------------------------------------------------ report

def test_build_report_all_hold():
    a = _eval(profiles.plateau(1.0, 4.0, 6.0), nonnegative=True)
    V = _eval(profiles.negate(profiles.gaussian(0.3, 1.0)))
    rep = hypotheses.build_report(a, V, 1.0, 0.8, 0.8)
    assert rep.all_hold
    assert rep.trapping_decay is None
    assert rep.pair_a == "intercritical" and rep.pair_V == "intercritical"
    assert rep.lam > 0 and rep.eta >= 1.0
    doc = json.loads(rep.to_json())
    assert doc["control_holds"] is True
    assert doc["trapping_decay"] == "not-required"
    assert any("box radius" in c for c in rep.caveats)


def test_build_report_failing_control():
    a = _eval(profiles.zero(), nonnegative=True)
    V = _eval(profiles.negate(profiles.gaussian(0.5, 2.0)))
    rep = hypotheses.build_report(a, V, 1.0, 0.8, 0.8)
    assert not rep.all_hold
    assert json.loads(rep.to_json())["control_holds"] is False
