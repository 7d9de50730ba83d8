from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sturm_attractor import (
    BlowUpError,
    DomainViolationError,
    InvalidParameterError,
    SimOptions,
    SturmWarning,
    UnresolvedProbeError,
    builtin_chafee_infante,
    discrete_equilibrium,
    dropping_lemma_trials,
    evolve,
    heteroclinic_probe,
    polynomial,
    zero_number_series,
)
from sturm_attractor.pdesim import (
    bifurcation_warning,
    discrete_derivatives,
    is_nonincreasing,
    random_initial_condition,
    sim_grid,
)


def test_discrete_derivatives_second_order():
    for m in (65, 129):
        x = sim_grid(m)
        p, q = discrete_derivatives(np.cos(2 * x), x[1] - x[0])
        err = np.max(np.abs(q + 4 * np.cos(2 * x)))
        assert err < 40 * (x[1] - x[0]) ** 2
        assert abs(p[0]) < 1e-12 and abs(p[-1]) < 1e-12


def test_equilibrium_is_stationary():
    spec = builtin_chafee_infante(2.0)
    traj = evolve(spec, np.ones(65), 1.0, SimOptions(snap_dt=0.5))
    np.testing.assert_allclose(traj.final, 1.0, atol=1e-14)
    assert traj.times.tolist() == [0.0, 0.5, 1.0]
    assert traj.steps > 0


def test_heat_equation_decay_rate():
    # F0 = 0: u_t = u_xx, cos(x) decays like exp(-t)
    spec = polynomial((0.0,), form="semilinear")
    x = sim_grid(257)
    traj = evolve(spec, np.cos(x), 1.0, SimOptions(snap_dt=1.0))
    ratio = traj.final[0] / 1.0
    assert ratio == pytest.approx(math.exp(-1.0), rel=1e-4)


def test_log_and_semilinear_agree_near_rest():
    # ln(1 + s) = s + O(s^2): small perturbations of a stable state evolve alike
    x = sim_grid(65)
    u0 = 1.0 + 1e-4 * np.cos(x)
    a = evolve(builtin_chafee_infante(2.0, "semilinear"), u0, 0.5)
    b = evolve(builtin_chafee_infante(2.0), u0, 0.5)
    assert np.max(np.abs(a.final - b.final)) < 1e-7


def test_domain_violation_at_start():
    spec = builtin_chafee_infante(2.0)
    x = sim_grid(65)
    with pytest.raises(DomainViolationError) as ei:
        evolve(spec, 3.0 * np.cos(4 * x), 1.0)
    assert ei.value.t == 0.0


def test_blow_up_detected():
    spec = polynomial((0.0, 0.0, 0.0, -1.0), form="semilinear")  # u_t = u_xx + u^3
    with pytest.raises(BlowUpError):
        evolve(spec, np.full(33, 3.0), 1.0)


def test_needs_evolution_form():
    from sturm_attractor import ProblemSpec

    with pytest.raises(InvalidParameterError):
        evolve(ProblemSpec("eq-only", {}, lambda x, u, p: u), np.zeros(9), 1.0)


def test_generic_callable_path_matches_kernel():
    kern = builtin_chafee_infante(2.0, "semilinear")
    from sturm_attractor import ProblemSpec

    plain = ProblemSpec(
        "ci-callable",
        {"lambda": 2.0},
        lambda x, u, p: -2.0 * u * (1 - u * u),
        ftilde=lambda x, u, p, q: q + 2.0 * u * (1 - u * u),
    )
    x = sim_grid(33)
    u0 = 0.3 + 0.2 * np.cos(x)
    a = evolve(kern, u0, 0.2).final
    b = evolve(plain, u0, 0.2).final
    assert np.max(np.abs(a - b)) < 1e-6  # step sizes differ through the estimated F~_q


def test_zero_number_series_conventions():
    spec = builtin_chafee_infante(2.0, "semilinear")
    x = sim_grid(65)
    u0 = 0.3 * np.cos(x)
    t1 = evolve(spec, u0, 1.0)
    same = zero_number_series(t1, t1)
    assert {z for _, z in same} == {-1}
    t2 = evolve(spec, u0 + 0.01, 1.0)
    ser = zero_number_series(t1, t2)
    assert ser[0][1] == 0 and is_nonincreasing(ser)
    short = evolve(spec, u0, 0.5)
    with pytest.raises(InvalidParameterError):
        zero_number_series(t1, short)
    with pytest.raises(InvalidParameterError):
        zero_number_series(t1, evolve(spec, 0.3 * np.cos(sim_grid(33)), 1.0))


@settings(max_examples=6, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_dropping_lemma_random_pairs(seed):
    spec = builtin_chafee_infante(5.0, "semilinear")
    x = sim_grid(65)
    rng = np.random.default_rng(seed)
    a, b = (random_initial_condition(spec, x, rng) for _ in range(2))
    series = zero_number_series(evolve(spec, a, 2.0), evolve(spec, b, 2.0))
    assert is_nonincreasing(series)


def test_dropping_lemma_trials_small():
    rep = dropping_lemma_trials(builtin_chafee_infante(2.0), n_pairs=3, t_end=1.0, m=65, pool=3)
    assert rep.ok and len(rep.series) == 3
    with pytest.raises(InvalidParameterError):
        dropping_lemma_trials(builtin_chafee_infante(2.0), n_pairs=4, pool=3)


def test_random_initial_condition_is_valid():
    spec = builtin_chafee_infante(5.0)
    x = sim_grid(129)
    rng = np.random.default_rng(3)
    for _ in range(5):
        u = random_initial_condition(spec, x, rng)
        p, q = discrete_derivatives(u, x[1] - x[0])
        assert np.all(spec.valid(x, u, p, q))


def test_discrete_equilibrium_residual(ci):
    spec, _, eqs, _, _ = ci(2.0)
    for e in eqs:
        u = discrete_equilibrium(spec, e, 129)
        x = sim_grid(129)
        p, q = discrete_derivatives(u, x[1] - x[0])
        assert np.max(np.abs(q - spec.F0(x, u, p))) < 1e-8
        assert np.max(np.abs(u - e.values(x))) < 1e-3  # O(dx^2) discretization offset


def test_probe_lambda_half(ci):
    spec, _, eqs, _, g = ci(0.5, "semilinear")
    disc = {e.id: discrete_equilibrium(spec, e, 129) for e in eqs}
    targets = set()
    for sign in (1, -1):
        rep = heteroclinic_probe(spec, eqs[1], 0, sign, 1e-2, eqs, m=129, discrete=disc)
        targets.add(rep.target)
        assert rep.target in g.successors(2)
        assert rep.final_distance < 1e-4
        assert rep.z_final == 0
        assert set(rep.to_dict()["min_distance"]) == {"e1", "e2", "e3"}
    assert targets == {1, 3}


def test_probe_argument_checks(ci):
    spec, _, eqs, _, _ = ci(2.0)
    with pytest.raises(InvalidParameterError):
        heteroclinic_probe(spec, eqs[0], 0, 1, 1e-2, eqs, m=33)  # stable source
    with pytest.raises(InvalidParameterError):
        heteroclinic_probe(spec, eqs[2], 2, 1, 1e-2, eqs, m=33)  # k >= i
    with pytest.raises(InvalidParameterError):
        heteroclinic_probe(spec, eqs[2], 0, 0, 1e-2, eqs, m=33)


def test_probe_unresolved_reports_nearest(ci):
    spec, _, eqs, _, _ = ci(2.0, "semilinear")
    with pytest.raises(UnresolvedProbeError) as ei:
        heteroclinic_probe(spec, eqs[2], 0, 1, 1e-2, eqs, m=65, t_max=0.5)
    assert ei.value.nearest == 3
    assert ei.value.distance > 1e-4


def test_bifurcation_warning():
    assert bifurcation_warning(builtin_chafee_infante(1.02)) is not None
    assert bifurcation_warning(builtin_chafee_infante(4.04)) is not None
    assert bifurcation_warning(builtin_chafee_infante(2.0)) is None
    near = builtin_chafee_infante(0.97, "semilinear")
    from sturm_attractor import build_sturm_data, equilibria

    curve, eqs = equilibria(near)
    build_sturm_data(near, curve, eqs)
    with pytest.warns(SturmWarning, match="bifurcation"):
        try:
            heteroclinic_probe(near, eqs[1], 0, 1, 1e-2, eqs, m=65, t_max=0.25)
        except UnresolvedProbeError:
            pass


def test_grid_refinement_keeps_targets(ci):
    spec, _, eqs, _, _ = ci(2.0, "semilinear")
    out = {}
    for m in (129, 257):
        out[m] = [heteroclinic_probe(spec, eqs[2], 1, s, 1e-2, eqs, m=m).target for s in (1, -1)]
    assert out[129] == out[257] == [4, 2]


def test_probe_trajectory_zero_number_matches_table(ci):
    spec, _, eqs, data, _ = ci(2.0, "semilinear")
    rep = heteroclinic_probe(spec, eqs[2], 1, 1, 1e-2, eqs, m=129)
    assert rep.z_final == data.z(3, rep.target) == 1
