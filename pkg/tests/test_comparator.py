import numpy as np
import pytest

from qreduce.comparator import (ComparatorSpec, apply_comparator,
                                coherent_coefficients, coherent_label,
                                coherent_matrix_elements,
                                coherent_resolution_check, comparator_scalars,
                                hermite_coefficients, hermite_functions,
                                within_magnitude)
from qreduce.errors import BasisResidualError, OverflowGuardError
from qreduce.grid import GridSpec, GridWavefunction, weyl_displace
from qreduce.hamiltonian import PhasePoint
from qreduce.packets import packet, sample_on_grid

GRID = GridSpec(n=1, N=1024, L=20.0)
S_VALUES = [0.25, np.log(2.0), 1.0, 2.0]


def hermite_state(n, grid=GRID):
    return GridWavefunction(grid, hermite_functions(grid.x, n)[n])


def coherent_state(xi, pi, grid=GRID):
    return weyl_displace(hermite_state(0, grid), np.array([xi, pi]))


def test_spec_validation():
    with pytest.raises(ValueError):
        ComparatorSpec(s=0.0)
    with pytest.raises(ValueError):
        ComparatorSpec(s=-1.0)
    with pytest.raises(ValueError):
        ComparatorSpec(s=1.0, N=8)


def test_log2_closed_numbers():
    spec = ComparatorSpec(s=np.log(2.0))
    assert abs(spec.sigma - 0.5) < 1e-15
    assert abs(spec.lam - 1.0) < 1e-15
    # Eigenvalues halve with each excitation.
    assert abs(spec.eigenvalues[0] - 0.5) < 1e-15
    assert abs(spec.eigenvalues[3] - 0.0625) < 1e-15


@pytest.mark.parametrize("s", S_VALUES)
def test_truncation_tail_negligible(s):
    assert ComparatorSpec(s=s).truncation_tail <= 1e-12


@pytest.mark.parametrize("s", S_VALUES)
def test_scalars_norm_and_trace(s):
    spec = ComparatorSpec(s=s)
    out = comparator_scalars(spec)
    assert abs(out["norm"] - spec.sigma) < 1e-15
    assert abs(out["trace"] - 1.0) < 1e-13
    out2 = comparator_scalars(spec, dimension=2)
    assert abs(out2["norm"] - spec.sigma ** 2) < 1e-15
    assert abs(out2["trace"] - 1.0) < 1e-13


@pytest.mark.parametrize("s", S_VALUES)
def test_position_norm_within_closed_bound(s):
    out = comparator_scalars(ComparatorSpec(s=s))
    assert out["aOmega_sq_measured"] <= out["aOmega_bound"] + 1e-10
    assert out["aOmega_sq_measured"] > 0.0


def test_bound_value_at_s_one():
    out = comparator_scalars(ComparatorSpec(s=1.0))
    assert abs(out["aOmega_bound"] - (1.0 - np.exp(-1.0)) ** 2) < 1e-15


@pytest.mark.parametrize("n", [0, 3, 10])
def test_eigenfunctions_scale_exactly(n):
    spec = ComparatorSpec(s=np.log(2.0))
    psi = hermite_state(n)
    out = apply_comparator(spec, psi)
    lam = spec.sigma * np.exp(-spec.s * n)
    expected = GridWavefunction(GRID, lam * psi.amp)
    assert out.distance(expected) < 1e-9


def test_normalized_comparator_fixes_ground_state():
    spec = ComparatorSpec(s=1.0)
    psi = hermite_state(0)
    out = apply_comparator(spec, psi, normalized=True)
    assert out.distance(psi) < 1e-10


def test_quadratic_form_strictly_between_zero_and_one():
    spec = ComparatorSpec(s=0.5)
    basis = hermite_functions(GRID.x, spec.N)
    rng = np.random.default_rng(11)
    for _ in range(100):
        c = rng.normal(size=spec.N + 1) + 1j * rng.normal(size=spec.N + 1)
        c /= np.linalg.norm(c)
        psi = GridWavefunction(GRID, c @ basis)
        val = psi.inner(apply_comparator(spec, psi)).real
        assert 0.0 < val < 1.0


@pytest.mark.parametrize("s", S_VALUES)
@pytest.mark.parametrize("alpha", [(0.0, 0.0), (1.0, 0.0), (0.0, 2.0),
                                   (2.0, 2.0), (3.0, -3.0)])
def test_coherent_diagonal_matches_closed_form(s, alpha):
    spec = ComparatorSpec(s=s)
    out = coherent_matrix_elements(spec, alpha)
    assert abs(out["diag_measured"] - out["diag"]) < 1e-8
    assert out["one_minus_measured"] <= out["one_minus_bound"] + 1e-8


def test_coherent_examples_at_log2():
    spec = ComparatorSpec(s=np.log(2.0))
    at_origin = coherent_matrix_elements(spec, (0.0, 0.0))
    assert abs(at_origin["diag"] - 0.5) < 1e-15
    assert abs(at_origin["inv_norm_sq"] - 4.0) < 1e-12
    # |alpha|^2 = 2 at displacement (2, 0); lambda_{2s} = 3.
    displaced = coherent_matrix_elements(spec, (2.0, 0.0))
    assert abs(coherent_label((2.0, 0.0))) ** 2 == pytest.approx(2.0)
    assert abs(displaced["diag"] - 0.5 * np.exp(-1.0)) < 1e-15
    assert abs(displaced["diag"] - 0.18394) < 1e-5
    assert abs(displaced["inv_norm_sq"] - 4.0 * np.exp(6.0)) < 1e-9
    assert displaced["inv_norm_sq_measured"] == pytest.approx(
        displaced["inv_norm_sq"], rel=1e-8)


def test_one_minus_bound_needs_the_square_root():
    # The norm of (1 - comparator) applied to an off-center coherent state
    # genuinely exceeds 1 - sigma e^{-sigma |z|^2}; only the square root
    # of that expression is a valid bound.
    out = coherent_matrix_elements(ComparatorSpec(s=1.0), (1.0, 0.0))
    sigma = ComparatorSpec(s=1.0).sigma
    unrooted = 1.0 - sigma * np.exp(-sigma * 0.5)
    assert out["one_minus_measured"] > unrooted
    assert out["one_minus_measured"] <= np.sqrt(unrooted) + 1e-12


def test_inverse_norm_overflow_guard():
    spec = ComparatorSpec(s=2.0)
    with pytest.raises(OverflowGuardError):
        coherent_matrix_elements(spec, (30.0, 0.0))


def test_grid_diagonal_matches_closed_form():
    spec = ComparatorSpec(s=1.0)
    psi = coherent_state(1.2, -0.7)
    val = psi.inner(apply_comparator(spec, psi)).real
    z_sq = abs(coherent_label((1.2, -0.7))) ** 2
    assert abs(val - spec.sigma * np.exp(-spec.sigma * z_sq)) < 1e-8


def test_projection_residual_raises():
    spec = ComparatorSpec(s=1.0, N=16)
    psi = coherent_state(6.0, 0.0)
    with pytest.raises(BasisResidualError):
        apply_comparator(spec, psi)


def test_within_magnitude_ground_state():
    spec = ComparatorSpec(s=1.0)
    out = within_magnitude(spec, 1.0, hermite_state(0))
    assert out["member"] and not out["divergent"]
    assert abs(out["inv_norm"] - 1.0) < 1e-8


def test_within_magnitude_coherent():
    spec = ComparatorSpec(s=np.log(2.0))
    psi = coherent_state(2.0, 0.0)
    # Normalized inverse norm is e^{lambda_{2s} |z|^2 / 2} = e^3.
    out = within_magnitude(spec, 25.0, psi)
    assert not out["divergent"]
    assert out["inv_norm"] == pytest.approx(np.exp(3.0), rel=1e-6)
    assert out["member"]
    assert not within_magnitude(spec, 10.0, psi)["member"]


def test_within_magnitude_squeezed_divergence():
    spec = ComparatorSpec(s=1.0)
    origin = PhasePoint(0.0, 0.0)
    narrow = sample_on_grid(packet(origin, 10.0), GRID)
    mild = sample_on_grid(packet(origin, 1.1), GRID)
    vac = within_magnitude(spec, 1e6, hermite_state(0))
    squeezed = within_magnitude(spec, 1e6, narrow)
    assert squeezed["divergent"] and not squeezed["member"]
    assert squeezed["inv_norm"] > vac["inv_norm"]
    assert not within_magnitude(spec, 1e6, mild)["divergent"]


@pytest.mark.parametrize("s", [np.log(2.0), 1.0])
@pytest.mark.parametrize("k", [0, 1])
def test_coherent_resolution_spot_check(s, k):
    out = coherent_resolution_check(ComparatorSpec(s=s), k)
    assert out["error"] < 1e-4


def test_off_center_comparator_fixes_its_own_coherent_state():
    center = PhasePoint(2.0, 0.5)
    spec = ComparatorSpec(s=1.0, center=center)
    psi = coherent_state(2.0, 0.5)
    out = apply_comparator(spec, psi)
    expected = GridWavefunction(GRID, spec.sigma * psi.amp)
    assert out.distance(expected) < 1e-7


def test_hermite_orthonormality_by_quadrature():
    h = hermite_functions(GRID.x, 40)
    gram = h @ h.T * GRID.dx
    assert np.max(np.abs(gram - np.eye(41))) < 1e-10


def test_basis_rejects_coarse_grid():
    spec = ComparatorSpec(s=1.0)
    psi = hermite_state(0, GridSpec(n=1, N=64, L=6.0))
    with pytest.raises(ValueError):
        apply_comparator(spec, psi)


def test_two_dimensional_tensor_comparator():
    grid2 = GridSpec(n=2, N=128, L=10.0)
    spec = ComparatorSpec(s=np.log(2.0), N=32)
    h0 = hermite_functions(grid2.x, 0)[0]
    vac = GridWavefunction(grid2, np.outer(h0, h0))
    out = apply_comparator(spec, vac)
    expected = GridWavefunction(grid2, spec.sigma ** 2 * vac.amp)
    assert out.distance(expected) < 1e-9
    member = within_magnitude(spec, 1.0 + 1e-9, vac)
    assert member["member"]
    assert abs(member["inv_norm"] - 1.0) < 1e-8


def test_coefficients_of_displaced_vacuum_match_formula():
    spec = ComparatorSpec(s=1.0)
    psi = coherent_state(1.0, 1.0)
    coeffs, residual = hermite_coefficients(spec, psi)
    assert residual < 1e-10
    predicted = np.abs(coherent_coefficients((1.0, 1.0), spec.N))
    assert np.max(np.abs(np.abs(coeffs) - predicted)) < 1e-10
