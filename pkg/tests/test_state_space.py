import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cyclescope.state_space import (
    EXPECTED_SIGNS, SETTINGS, SocialState, bivector, check_simplex, cross3, enumerate_lattice,
    get_setting, l_from_bivector, lattice_csv, lattice_size, project,
)
from conftest import fractions
from table_fixture import TABLE3, bivector_means


def test_settings_table():
    labels = {k: s.label for k, s in SETTINGS.items()}
    assert labels == {1: "R-P-S;D", 2: "P-S-D;R", 3: "S-D-R;P", 4: "D-R-P;S"}
    signs = {k: "".join(EXPECTED_SIGNS[(k, c)] for c in "xyz") for k in SETTINGS}
    assert signs == {1: "+++", 2: "00+", 3: "0-0", 4: "+00"}
    with pytest.raises(ValueError):
        get_setting(5)


@pytest.mark.parametrize("N, count", [(1, 4), (2, 10), (12, 455)])
def test_lattice_examples(N, count):
    assert len(enumerate_lattice(N)) == count == lattice_size(N)


def test_lattice_n2_matches_explicit_enumeration(frozen):
    got = sorted(list(s) for s in enumerate_lattice(2))
    assert got == frozen["lattice_n2"]


def test_lattice_formula_and_order():
    for N in range(1, 21):
        states = enumerate_lattice(N)
        assert len(states) == len(set(states)) == (N + 1) * (N + 2) * (N + 3) // 6
        assert all(s.N == N and min(s) >= 0 for s in states)
        keys = [tuple(s[:3]) for s in states]
        assert keys == sorted(keys)


@pytest.mark.parametrize("N", [0, -3, 2.5])
def test_lattice_domain(N):
    with pytest.raises(ValueError):
        enumerate_lattice(N)


def test_lattice_csv():
    lines = lattice_csv(2).splitlines()
    assert lines[0] == "n_R,n_P,n_S,n_D"
    assert lines[1] == "0,0,0,2" and len(lines) == 11


def test_project_examples():
    np.testing.assert_array_equal(project([0, 0, 0, 1], 1), [0, 0, 0])
    np.testing.assert_allclose(project(SocialState(6, 2, 3, 1).fractions(), 1),
                               [0.5, 1 / 6, 0.25], atol=1e-15)
    for k in SETTINGS:
        np.testing.assert_array_equal(project([0.25] * 4, k), [0.25] * 3)
    with pytest.raises(ValueError):
        project([0.5, 0.5, 0.5, 0], 1)
    with pytest.raises(ValueError):
        check_simplex([1, 0, 0])


def test_bivector_pure_transition(frozen):
    q = [0.25] * 4
    np.testing.assert_allclose(bivector([1, 0, 0, 0], [0, 1, 0, 0], q),
                               fractions(frozen["bivector_R_to_P"]), atol=1e-15)


def test_bivector_antisymmetry():
    rng = np.random.default_rng(1)
    a, b, o = rng.dirichlet(np.ones(4), size=3)
    np.testing.assert_array_equal(bivector(a, a, o), np.zeros(6))
    np.testing.assert_array_equal(bivector(b, a, o), -bivector(a, b, o))


def test_l_from_bivector_reference_rows():
    B = bivector_means(0)
    for k in (2, 3, 4):
        np.testing.assert_allclose(l_from_bivector(B, k), TABLE3[(k, 0)], atol=1e-12)


def test_cross_representation_exact():
    """l_from_bivector equals the direct cross product bit for bit."""
    rng = np.random.default_rng(2024)
    n = 10_000
    frm, to, o = (rng.dirichlet(np.ones(4), size=n) for _ in range(3))
    B = bivector(frm, to, o)
    for k, s in SETTINGS.items():
        axes = list(s.axes)
        direct = cross3((frm - o)[:, axes], (to - o)[:, axes])
        assert np.array_equal(l_from_bivector(B, k), direct)


def test_off_plane_relations_on_fixture():
    for game in range(4):
        L = {k: np.round(l_from_bivector(bivector_means(game), k), 1) for k in SETTINGS}
        assert L[2][2] == L[1][0] and L[3][1] == -L[1][1] and L[4][0] == L[1][2]
        assert L[3][0] == L[4][2] and L[2][0] == L[3][2] and L[4][1] == -L[2][1]


@given(st.lists(st.integers(0, 12), min_size=4, max_size=4).filter(lambda c: sum(c) > 0),
       st.integers(1, 4))
@settings(max_examples=200, deadline=None)
def test_project_stays_in_tetrahedron(counts, k):
    p = project(SocialState(*counts).fractions(), k)
    assert p.min() >= 0 and p.sum() <= 1 + 1e-12
