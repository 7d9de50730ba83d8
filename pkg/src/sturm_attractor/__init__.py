"""Sturm attractors of scalar 1-D parabolic equations u_t = F~(x, u, u_x, u_xx).

Equilibria come from a shooting method; Morse indices, zero numbers and the
Fusco-Rocha permutation are read from the shooting curve and cross-checked
against independent oracles; the heteroclinic connection graph follows from
adjacency and blocking; a method-of-lines simulator checks the result.
"""
from __future__ import annotations

from ._backend import BACKEND
from .connectome import (
    Blocking,
    ConnectionGraph,
    adjacent,
    blocked,
    build_connection_graph,
    is_between,
    transitive_closure,
    validate_dot,
)
from .errors import *  # noqa: F401,F403
from .invariants import (
    SturmData,
    build_sturm_data,
    cycle_notation,
    fusco_rocha_permutation,
    linearization_eigenpairs,
    morse_from_angle,
    morse_index,
    spectral_morse_oracle,
    zero_number,
    zero_number_profiles,
    zero_number_shooting,
)
from .pdesim import (
    ProbeReport,
    SimOptions,
    SimState,
    Trajectory,
    discrete_equilibrium,
    dropping_lemma_trials,
    evolve,
    heteroclinic_probe,
    zero_number_series,
)
from .problem import (
    ParabolicityGrid,
    ProblemSpec,
    build_family,
    builtin_chafee_infante,
    check_parabolicity,
    odd_cubic,
    polynomial,
)
from .shooting import (
    DEFAULT_OPTIONS,
    Equilibrium,
    ShootingCurve,
    ShootOptions,
    SturmWarning,
    equilibria,
    find_equilibria,
    integrate_shoot,
    scan_curve,
)

__version__ = "0.1.0"
