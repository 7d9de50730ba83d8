from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sturm_attractor import (
    SturmData,
    builtin_chafee_infante,
    cycle_notation,
    equilibria,
    fusco_rocha_permutation,
    linearization_eigenpairs,
    morse_from_angle,
    spectral_morse_oracle,
    zero_number,
    zero_number_profiles,
    zero_number_shooting,
)
from sturm_attractor.invariants import ANGLE_GUARD, count_sign_changes, profile_grid

ZMAT_LAMBDA2 = [
    [-1, 0, 0, 0, 0],
    [0, -1, 1, 1, 0],
    [0, 1, -1, 1, 0],
    [0, 1, 1, -1, 0],
    [0, 0, 0, 0, -1],
]
RCOUNTS_LAMBDA2 = [
    [0, 0, 0, 0, 0],
    [0, 0, 0, 0, -1],
    [0, 0, 0, 0, -1],
    [0, 0, 0, 0, -1],
    [0, 1, 1, 1, 0],
]
ZMAT_LAMBDA5 = [
    [-1, 0, 0, 0, 0, 0, 0],
    [0, -1, 1, 1, 1, 1, 0],
    [0, 1, -1, 2, 2, 1, 0],
    [0, 1, 2, -1, 2, 1, 0],
    [0, 1, 2, 2, -1, 1, 0],
    [0, 1, 1, 1, 1, -1, 0],
    [0, 0, 0, 0, 0, 0, -1],
]
RCOUNTS_LAMBDA5 = [
    [0, 0, 0, 0, 0, 0, 0],
    [0, 0, 0, 0, 0, 0, -1],
    [0, 0, 0, 0, 0, -1, -2],
    [0, 0, 0, 0, 0, -1, -2],
    [0, 0, 0, 0, 0, -1, -2],
    [0, 0, 1, 1, 1, 0, -1],
    [0, 1, 2, 2, 2, 1, 0],
]


# -- Morse index from the angle -----------------------------------------------------


@pytest.mark.parametrize(
    "theta,expected", [(-1.1, 0), (0.1, 1), (2.0, 1), (3.5, 2), (4.5195, 2), (7.4, 3)]
)
def test_morse_from_angle(theta, expected):
    assert morse_from_angle(theta) == expected


def test_morse_from_angle_guard_band_and_corruption():
    from sturm_attractor import IndeterminateAngleError, IntegrationCorruptionError

    with pytest.raises(IndeterminateAngleError):
        morse_from_angle(math.pi + ANGLE_GUARD / 2)
    # the curve starts horizontal and turns clockwise, so theta never drops below -pi/2
    with pytest.raises(IntegrationCorruptionError):
        morse_from_angle(-3.0)


# -- zero numbers --------------------------------------------------------------------


def test_zero_number_basics():
    x = profile_grid(2049)
    assert zero_number(np.cos(3 * x)) == 3
    assert zero_number(np.ones_like(x)) == 0
    assert zero_number(np.zeros_like(x)) == -1
    # touching zero without crossing is not a sign change
    assert zero_number(np.cos(x) ** 2) == 0
    assert count_sign_changes(np.array([1.0, 0.0, -1.0, 0.0, 1.0]), 0.5) == 2


@given(k=st.integers(0, 12), c=st.floats(0.01, 100.0), s=st.sampled_from([1.0, -1.0]))
def test_zero_number_scale_and_sign_invariant(k, c, s):
    x = profile_grid(2049)
    w = np.cos(k * x)
    assert zero_number(s * c * w) == zero_number(w) == k


@settings(max_examples=50)
@given(coeffs=st.lists(st.floats(-1.0, 1.0), min_size=1, max_size=6))
def test_zero_number_bounded_by_highest_mode(coeffs):
    # a cosine polynomial of degree n has at most n sign changes on [0, pi]
    x = profile_grid(2049)
    w = sum(c * np.cos(k * x) for k, c in enumerate(coeffs))
    z = zero_number(w)
    nz = [k for k, c in enumerate(coeffs) if abs(c) > 0]
    if z >= 0 and nz:
        assert z <= max(nz)


# -- permutation -----------------------------------------------------------------------


def test_cycle_notation():
    assert cycle_notation((1, 2, 3)) == "id"
    assert cycle_notation((1, 4, 3, 2, 5)) == "(2 4)"
    assert cycle_notation((2, 3, 1)) == "(1 2 3)"


def test_permutations(ci):
    assert ci(0.5)[3].sigma == (1, 2, 3)
    assert ci(2.0)[3].sigma == (1, 4, 3, 2, 5)
    assert ci(5.0)[3].sigma == (1, 6, 3, 4, 5, 2, 7)
    _, _, eqs, _, _ = ci(2.0)
    assert fusco_rocha_permutation(eqs) == (1, 4, 3, 2, 5)


# -- Sturm data ------------------------------------------------------------------------


@pytest.mark.parametrize(
    "lam,morse,zmat,rc",
    [
        (0.5, (0, 1, 0), [[-1, 0, 0], [0, -1, 0], [0, 0, -1]], [[0, 0, 0], [0, 0, -1], [0, 1, 0]]),
        (2.0, (0, 1, 2, 1, 0), ZMAT_LAMBDA2, RCOUNTS_LAMBDA2),
        (5.0, (0, 1, 2, 3, 2, 1, 0), ZMAT_LAMBDA5, RCOUNTS_LAMBDA5),
    ],
)
def test_sturm_data_frozen(ci, lam, morse, zmat, rc):
    _, _, eqs, data, _ = ci(lam)
    assert data.morse == morse
    assert data.spectral_counts == morse
    assert data.zmat.tolist() == zmat
    assert data.rcounts.tolist() == rc
    assert all(tag["agree"] for tag in data.method_tags.values())
    assert data.check_invariants() == []
    assert [e.morse for e in eqs] == list(morse)


def test_zero_number_two_ways_agree_pairwise(ci):
    _, curve, eqs, _, _ = ci(2.0)
    for j in range(1, 6):
        for k in range(j + 1, 6):
            z, _ = zero_number_shooting(curve, eqs, j, k)
            assert z == zero_number_profiles(eqs[j - 1], eqs[k - 1])


def test_zero_number_shooting_argument_checks(ci):
    from sturm_attractor import InvalidParameterError

    _, curve, eqs, _, _ = ci(2.0)
    with pytest.raises(InvalidParameterError):
        zero_number_shooting(curve, eqs, 3, 2)


def test_sturm_json_round_trip_is_exact(ci):
    data = ci(5.0)[3]
    text = data.to_json()
    back = SturmData.from_json(text)
    assert back == data
    assert back.to_json() == text
    doc = json.loads(text)
    assert doc["zmat"][0][0] is None
    assert doc["sigma_cycles"] == "(2 6)"


def test_check_invariants_flags_bad_data(ci):
    data = SturmData.from_dict(ci(2.0)[3].to_dict())
    data.zmat[1, 2] = 5
    data.morse = (0, 1, 2, 2, 0)
    problems = data.check_invariants()
    assert any("symmetric" in p for p in problems)
    assert any("differ by one" in p for p in problems)


# -- spectral oracle -------------------------------------------------------------------


@pytest.mark.parametrize("lam,count", [(0.5, 1), (2.0, 2), (5.0, 3), (9.5, 4)])
def test_spectral_count_at_trivial_state(lam, count):
    # linearization at u = 0 is psi'' + lam psi with Neumann: eigenvalues lam - k^2
    spec = builtin_chafee_infante(lam)
    curve, eqs = equilibria(spec)
    trivial = min(eqs, key=lambda e: abs(e.a))
    n, nearest = spectral_morse_oracle(spec, trivial)
    assert n == count
    x, vals, vecs = linearization_eigenpairs(spec, trivial)
    assert vals[0] == pytest.approx(lam, abs=1e-3)
    assert vals[1] == pytest.approx(lam - 1.0, abs=1e-3)
    for k in range(4):
        v = vecs[:, k]
        assert np.max(np.abs(v)) == pytest.approx(1.0)
        assert v[0] > 0
        assert zero_number(v) == k
