import numpy as np
import pytest
from numpy.testing import assert_allclose

from arlib.errors import CharacteristicPoint, LeftChart
from arlib.geometry.disintegration import closed_form_jet
from arlib.geometry.hamiltonian import (
    TOL,
    PhaseState,
    exp_from_surface,
    exp_from_surface_many,
    ham_rhs,
    hamiltonian_flow,
    hamiltonian_value,
    initial_covector,
)


def test_hamiltonian_value(grushin, r4):
    assert hamiltonian_value(grushin, PhaseState(2.0, [0.0], 0.0, [1.0])) == pytest.approx(2.0)
    assert hamiltonian_value(grushin, PhaseState(0.3, [0.1], 1.0, [0.0])) == pytest.approx(0.5)
    assert hamiltonian_value(r4, PhaseState(0.0, [0.0, 0.0, 0.0], 0.0, [0.0, 0.0, 1.0])) == 0.0


def test_ham_rhs(grushin, flat):
    assert_allclose(ham_rhs(grushin, PhaseState(0.5, [0.0], 0.0, [2.0])), [0.0, 0.5, -2.0, 0.0], atol=1e-15)
    assert_allclose(ham_rhs(flat, PhaseState(0.0, [0.0], 0.0, [1.0])), [0.0, 1.0, 0.0, 0.0])


def test_initial_covector(grushin, flat):
    st = initial_covector(grushin, [0.5, 0.0])
    assert st.px == 0.0
    assert_allclose(st.pz, [2.0])
    assert hamiltonian_value(grushin, st) == pytest.approx(0.5)
    assert_allclose(initial_covector(flat, [0.3, 0.0]).pz, [1.0])

    with pytest.raises(CharacteristicPoint):
        initial_covector(grushin, [0.0, 0.0])
    with pytest.raises(ValueError):
        initial_covector(grushin, [0.5, 0.1])
    with pytest.raises(ValueError):
        initial_covector(grushin, [0.5, 0.0, 0.0])


def test_flat_arc_is_a_line(flat):
    arc = exp_from_surface(flat, [0.0, 0.0], 0.3)
    assert_allclose(arc(0.3).point, [0.0, 0.3], atol=1e-9)
    assert_allclose(arc(-0.3).point, [0.0, -0.3], atol=1e-9)


def test_grushin_arc_matches_closed_form(grushin):
    x0 = 0.5
    arc = exp_from_surface(grushin, [x0, 0.0], 0.2)
    for s in np.linspace(-0.2, 0.2, 9):
        u = s / x0
        expected = [x0 * np.cos(u), x0 * s / 2 + x0**2 * np.sin(2 * u) / 4]
        assert_allclose(arc(s).point, expected, atol=1e-8)


def test_arc_at_zero_is_exact(r4):
    q = np.array([0.3, 0.1, -0.2, 0.0])
    arc = exp_from_surface(r4, q, 0.1)
    st = arc(0.0)
    assert np.array_equal(st.point, q)
    assert np.array_equal(st.covector, initial_covector(r4, q).covector)
    assert arc.nodes[0] < 0 < arc.nodes[-1]
    assert arc.nfev > 0
    with pytest.raises(ValueError):
        arc(0.2)


@pytest.mark.parametrize("name, q", [("grushin", [0.5, 0.0]), ("r4", [0.3, 0.1, -0.2, 0.0])])
def test_energy_is_conserved(name, q, request):
    s = request.getfixturevalue(name)
    arc = exp_from_surface(s, q, 0.2)
    assert arc.energy_error(np.linspace(-0.2, 0.2, 21)) <= 10 * TOL


def test_time_reversal(r4):
    st0 = initial_covector(r4, [0.3, 0.1, -0.2, 0.0])
    st1 = hamiltonian_flow(r4, st0, 0.2)
    st2 = hamiltonian_flow(r4, st1, -0.2)
    assert_allclose(st2.to_array(), st0.to_array(), atol=100 * TOL)
    assert hamiltonian_flow(r4, st0, 0.0) is st0


def test_initial_velocity_is_grad_delta(r4, rng):
    for z in rng.uniform(-0.3, 0.3, size=(5, 2)):
        q = np.array([0.3, *z, 0.0])
        velocity = ham_rhs(r4, initial_covector(r4, q))[: r4.dim]
        assert_allclose(velocity, closed_form_jet(r4, q).grad_delta, atol=1e-10)


def test_leaving_the_chart(flat):
    with pytest.raises(LeftChart):
        exp_from_surface(flat, [0.5, 0.0], 2.0)


def test_zero_length_arc(grushin):
    arc = exp_from_surface(grushin, [0.5, 0.0], 0.0)
    assert_allclose(arc(0.0).point, [0.5, 0.0])
    with pytest.raises(ValueError):
        exp_from_surface(grushin, [0.5, 0.0], -1.0)


def test_many_arcs_keep_order(grushin):
    qs = [[x, 0.0] for x in (0.2, 0.3, 0.4)]
    arcs = exp_from_surface_many(grushin, qs, 0.05, threads=2)
    assert [a.base[0] for a in arcs] == [0.2, 0.3, 0.4]


def test_error_shrinks_with_tolerance(grushin):
    x0, s_end = 0.5, 0.5
    u = s_end / x0
    exact = [x0 * np.cos(u), x0 * s_end / 2 + x0**2 * np.sin(2 * u) / 4, -np.sin(u), 1 / x0]
    st0 = initial_covector(grushin, [x0, 0.0])
    tols = np.array([1e-5, 1e-6, 1e-7, 1e-8, 1e-9])
    errors = [np.max(np.abs(hamiltonian_flow(grushin, st0, s_end, tol).to_array() - exact)) for tol in tols]
    slope, _ = np.polyfit(np.log(tols), np.log(errors), 1)
    assert 0.5 <= slope <= 1.5
