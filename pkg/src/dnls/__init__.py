"""Pseudospectral simulator and diagnostics for the defocusing nonlinear
Schrodinger equation with spatially dependent nonlinear damping and a
nonlinear potential:

    i u_t + Lap u + i a(x) |u|^{2 s2} u = |u|^{2 s1} u + V(x) |u|^{2 s3} u

on a periodic box standing in for R^d.  The package provides the spectral
core (grids, fields, exact free propagator), a library of damping/potential
profiles with analytic derivative stacks, machine-checkable hypothesis
predicates, a Strang-splitting integrator with an exact pointwise
damped-nonlinear flow, functional and identity diagnostics (mass, energy,
Morawetz/virial, interaction functional), scattering diagnosis via
free-propagator pull-back, and a config-driven CLI runner.
"""

from dnls.grid import (
    Grid,
    ComplexField,
    gradient,
    laplacian,
    free_propagate,
    lp_norm,
    h1_norm,
    save_field,
    load_field,
)
from dnls.profiles import ProfileSpec, EvaluatedProfile, evaluate, trapping_part
from dnls.evolution import ProblemSpec, SimState, nonlinear_flow_pointwise, strang_step, evolve

__version__ = "0.1.0"

__all__ = [
    "Grid",
    "ComplexField",
    "gradient",
    "laplacian",
    "free_propagate",
    "lp_norm",
    "h1_norm",
    "save_field",
    "load_field",
    "ProfileSpec",
    "EvaluatedProfile",
    "evaluate",
    "trapping_part",
    "ProblemSpec",
    "SimState",
    "nonlinear_flow_pointwise",
    "strang_step",
    "evolve",
]
