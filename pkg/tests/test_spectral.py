import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from qreduce.comparator import ComparatorSpec
from qreduce.grid import GridSpec
from qreduce.hamiltonian import HamiltonianSpec, PhasePoint, PotentialModel
from qreduce.packets import packet, sample_on_grid
from qreduce.spectral import (FiniteEvolution, GridHamiltonian, average_stay,
                              classify_quantum, dephased_matrix,
                              ergodic_average, finite_evolution,
                              recurrence_time, transit_time)

FREE = HamiltonianSpec(mass=1.0, potential=PotentialModel.polynomial([0.0]))
HARMONIC = HamiltonianSpec(mass=1.0, potential=PotentialModel.polynomial([0, 0, 0.5]))
FREE_GRID = GridSpec(1, 16384, 2000.0)
THREE_LEVEL = np.diag([0.0, 1.0, np.sqrt(2.0)])


def random_hermitian(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (a + a.conj().T) / 2.0


def random_unit(rng, d):
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def test_finite_evolution_groups_degenerate_levels():
    evo = finite_evolution(np.diag([0.0, 1.0, 1.0 + 1e-13, 2.0]))
    assert [len(g) for g in evo.groups] == [1, 2, 1]
    assert evo.projector_completeness() < 1e-10
    assert np.allclose(evo.group_values, [0.0, 1.0, 2.0], atol=1e-12)


def test_finite_evolution_rejects_non_hermitian():
    with pytest.raises(ValueError):
        finite_evolution(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_evolve_is_unitary_and_periodic():
    evo = finite_evolution(np.diag([0.0, 1.0]))
    psi = np.array([1.0, 1.0]) / np.sqrt(2.0)
    moved = evo.evolve(psi, 0.7)
    assert abs(np.linalg.norm(moved) - 1.0) < 1e-12
    back = evo.evolve(psi, 2.0 * np.pi)
    assert np.linalg.norm(back - psi) < 1e-12


def test_dephased_matrix_drops_cross_terms_only():
    evo = finite_evolution(np.diag([0.0, 1.0]))
    psi = np.array([1.0, 1.0]) / np.sqrt(2.0)
    rho = dephased_matrix(evo, psi)
    assert np.allclose(rho, np.diag([0.5, 0.5]), atol=1e-14)
    assert abs(np.trace(rho) - 1.0) < 1e-14


def test_ergodic_eigenvector_is_exact():
    evo = finite_evolution(np.diag([0.0, 1.0, 2.0]))
    psi = np.array([0.0, 1.0, 0.0], dtype=complex)
    out = ergodic_average(evo, psi, np.outer(psi, psi.conj()), horizons=10.0)
    assert out["predicted"] == pytest.approx(1.0, abs=1e-12)
    assert out["measured"][10.0] == pytest.approx(1.0, abs=1e-9)


def test_ergodic_two_level_cross_terms_average_out():
    evo = finite_evolution(np.diag([0.0, 1.0]))
    psi = np.array([1.0, 1.0]) / np.sqrt(2.0)
    out = ergodic_average(evo, psi, np.diag([1.0, 0.0]), horizons=50.0)
    assert out["predicted"] == pytest.approx(0.5, abs=1e-12)
    assert out["measured"][50.0] == pytest.approx(0.5, abs=1e-9)


def test_ergodic_quadrature_matches_sinc_oracle():
    # f(t) = cos t for the flip operator, so the symmetric average over
    # [-T, T] is sin(T)/T.
    evo = finite_evolution(np.diag([0.0, 1.0]))
    psi = np.array([1.0, 1.0]) / np.sqrt(2.0)
    flip = np.array([[0.0, 1.0], [1.0, 0.0]])
    out = ergodic_average(evo, psi, flip, horizons=[10.0, 25.0])
    assert out["predicted"] == pytest.approx(0.0, abs=1e-12)
    assert out["measured"][10.0] == pytest.approx(np.sin(10.0) / 10.0, abs=1e-6)
    assert out["measured"][25.0] == pytest.approx(np.sin(25.0) / 25.0, abs=1e-6)


def test_ergodic_random_matrices_converge():
    for seed in range(3):
        rng = np.random.default_rng(seed)
        evo = finite_evolution(random_hermitian(rng, 8))
        psi = random_unit(rng, 8)
        F = random_hermitian(rng, 8)
        out = ergodic_average(evo, psi, F, horizons=1e4)
        assert abs(out["measured"][1e4] - out["predicted"]) < 1e-3


def test_ergodic_convergence_slope():
    rng = np.random.default_rng(7)
    evo = finite_evolution(random_hermitian(rng, 8))
    psi = random_unit(rng, 8)
    F = random_hermitian(rng, 8)
    base = np.geomspace(1e2, 1e4, 7)
    phases = np.concatenate([base, 1.07 * base, 1.15 * base])
    out = ergodic_average(evo, psi, F, horizons=phases)
    # Envelope over nearby phases smooths the sinc zero crossings.
    devs = np.array([max(abs(out["measured"][t] - out["predicted"]),
                         abs(out["measured"][1.07 * t] - out["predicted"]),
                         abs(out["measured"][1.15 * t] - out["predicted"]))
                     for t in base])
    slope = np.polyfit(np.log(base), np.log(devs), 1)[0]
    assert -1.2 < slope < -0.8


def test_ergodic_rejects_bad_inputs():
    evo = finite_evolution(np.diag([0.0, 1.0]))
    with pytest.raises(ValueError):
        ergodic_average(evo, np.array([1.0, 1.0]), np.eye(2), horizons=1.0)
    psi = np.array([1.0, 0.0], dtype=complex)
    with pytest.raises(ValueError):
        ergodic_average(evo, psi, np.array([[0.0, 1.0], [0.0, 0.0]]),
                        horizons=1.0)
    with pytest.raises(ValueError):
        ergodic_average(evo, psi, np.eye(2), horizons=-2.0)


def test_average_stay_on_eigenvectors():
    evo = finite_evolution(THREE_LEVEL)
    own = np.array([1.0, 0.0, 0.0], dtype=complex)
    other = np.array([0.0, 1.0, 0.0], dtype=complex)
    proj = np.diag([1.0, 0.0, 0.0])
    stay = average_stay(evo, own, proj, T=50.0)
    assert stay["value"] == pytest.approx(1.0, abs=1e-9)
    assert stay["prediction"] == pytest.approx(1.0, abs=1e-12)
    assert "bound" in stay["note"]
    off = average_stay(evo, other, proj, T=50.0)
    assert off["value"] == pytest.approx(0.0, abs=1e-12)
    assert off["prediction"] == pytest.approx(0.0, abs=1e-12)


def test_transit_time_linear_growth_flags_divergent():
    evo = finite_evolution(THREE_LEVEL)
    own = np.array([1.0, 0.0, 0.0], dtype=complex)
    out = transit_time(evo, own, np.diag([1.0, 0.0, 0.0]), T=100.0)
    assert out["divergent"]
    assert out["value"] == pytest.approx(200.0, rel=1e-9)
    orthogonal = np.array([0.0, 0.0, 1.0], dtype=complex)
    silent = transit_time(evo, orthogonal, np.diag([1.0, 0.0, 0.0]), T=100.0)
    assert silent["value"] == 0.0
    assert not silent["divergent"]


def test_stay_equals_transit_over_horizon():
    evo = finite_evolution(np.diag([0.0, 0.3]))
    psi = np.array([1.0, 1.0]) / np.sqrt(2.0)
    omega = np.outer(psi, psi.conj())
    T = 37.0
    mu = average_stay(evo, psi, omega, T)["value"]
    tau = transit_time(evo, psi, omega, T)["value"]
    assert mu == pytest.approx(tau / (2.0 * T), abs=0.0)


def test_free_packet_stay_decreases_and_transit_converges():
    psi = sample_on_grid(packet(PhasePoint(0.0, 4.0), 1.0), FREE_GRID)
    handle = GridHamiltonian(FREE, FREE_GRID, dt=0.25)
    comp = ComparatorSpec(s=0.5, N=64)
    mus = [average_stay(handle, psi, comp, T)["value"] for T in (10.0, 40.0)]
    out = transit_time(handle, psi, comp, T=160.0)
    mus.append(out["value"] / 320.0)
    assert mus[0] > mus[1] > mus[2]
    assert not out["divergent"]
    assert out["trailing_increment"] < 1e-4


def test_recurrence_two_level_finds_the_period():
    evo = finite_evolution(np.diag([0.0, 1.0]))
    psi = np.array([1.0, 1.0]) / np.sqrt(2.0)
    found = recurrence_time(evo, psi, eps=1e-3, T_min=1.0)
    step = (2.0 * np.pi) / 64.0
    assert abs(found - 2.0 * np.pi) <= step
    assert np.linalg.norm(evo.evolve(psi, found) - psi) < 1e-3


def test_recurrence_three_level_incommensurate():
    evo = finite_evolution(THREE_LEVEL)
    psi = np.ones(3) / np.sqrt(3.0)
    found = recurrence_time(evo, psi, eps=0.1, T_min=1.0, T_max=1e5)
    assert found is not None and 1.0 <= found < 1e5
    assert np.linalg.norm(evo.evolve(psi, found) - psi) < 0.1


def test_recurrence_trivial_and_not_found_cases():
    evo = finite_evolution(np.diag([0.0, 1.0]))
    psi = np.array([1.0, 1.0]) / np.sqrt(2.0)
    assert recurrence_time(evo, psi, eps=2.0, T_min=3.0) == 3.0
    assert recurrence_time(evo, psi, eps=1e-3, T_min=1.0, T_max=2.0) is None
    with pytest.raises(ValueError):
        recurrence_time(GridHamiltonian(FREE, FREE_GRID), psi, eps=0.1)


def test_classify_oscillator_ground_state_pp_like():
    grid = GridSpec(1, 1024, 20.0)
    psi = sample_on_grid(packet(PhasePoint(0.0, 0.0), 1.0), grid)
    handle = GridHamiltonian(HARMONIC, grid, dt=0.25)
    out = classify_quantum(handle, psi, ComparatorSpec(s=1.0), horizons=40.0)
    assert out["label"] == "pp-like"
    assert out["mu"][-1] == pytest.approx(1.0, abs=1e-3)


def test_classify_free_packet_ac_like():
    psi = sample_on_grid(packet(PhasePoint(0.0, 4.0), 1.0), FREE_GRID)
    handle = GridHamiltonian(FREE, FREE_GRID, dt=0.25)
    out = classify_quantum(handle, psi, ComparatorSpec(s=0.5, N=64),
                           horizons=[10.0, 40.0, 160.0])
    assert out["label"] == "ac-like"
    assert out["trailing_increment"] < 1e-4


def test_classify_doublet_label_depends_on_horizon():
    # Tunneling doublet model: mu(T) = (1 + sin(dT)/(dT)) / 2 around the
    # one-well state, still draining at T=10 but settled by T=1e4.
    delta = 0.3
    evo = finite_evolution(np.diag([0.0, delta]))
    psi = np.array([1.0, 1.0]) / np.sqrt(2.0)
    omega = np.outer(psi, psi.conj())
    short = classify_quantum(evo, psi, omega, horizons=10.0)
    assert short["label"] == "exceptional-candidate"
    oracle = 0.5 * (1.0 + np.sin(delta * 10.0) / (delta * 10.0))
    assert short["mu"][-1] == pytest.approx(oracle, abs=1e-6)
    long = classify_quantum(evo, psi, omega, horizons=1e4)
    assert long["label"] == "pp-like"
    assert long["mu"][-1] == pytest.approx(0.5, abs=1e-3)
    assert long["thresholds"]["pp_floor"] == 1e-2


def test_classification_time_reversal_agrees():
    # Unitary groups capture nothing: the labels must match under t -> -t.
    delta = 0.3
    psi = np.array([1.0, 1.0]) / np.sqrt(2.0)
    omega = np.outer(psi, psi.conj())
    for horizon in (10.0, 1e4):
        fwd = classify_quantum(finite_evolution(np.diag([0.0, delta])),
                               psi, omega, horizons=horizon)
        bwd = classify_quantum(finite_evolution(np.diag([0.0, -delta])),
                               psi, omega, horizons=horizon)
        assert fwd["label"] == bwd["label"]


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0), min_size=6, max_size=6))
def test_bound_states_form_a_linear_manifold(raw):
    # Any superposition of eigenvectors of a finite evolution stays
    # bound: the pp-like label is closed under linear combination.
    w = np.array(raw[:3]) + 1j * np.array(raw[3:])
    assume(np.linalg.norm(w) > 1e-3)
    psi = w / np.linalg.norm(w)
    evo = finite_evolution(THREE_LEVEL)
    omega = np.outer(psi, psi.conj())
    out = classify_quantum(evo, psi, omega, horizons=2000.0)
    assert out["label"] == "pp-like"
