"""Finite-horizon spectral classification of quantum evolutions.

Eigenstructure, time averages and transit times decide whether a state
behaves as bound (pure-point-like), escaping (absolutely-continuous-like)
or neither at the horizons probed.  A finite-dimensional or grid
evolution always has pure point spectrum, so every label is an explicit
finite-horizon proxy, never an assertion about the true spectral type.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from .comparator import ComparatorSpec, _basis, hermite_coefficients
from .grid import GridSpec, GridWavefunction, propagate
from .hamiltonian import HamiltonianSpec

MAX_DIM = 4096
HERMITIAN_TOL = 1e-12
DEGENERACY_TOL = 1e-10
UNIT_TOL = 1e-8
QUAD_DT = 0.02
TAIL_INCREMENT_TOL = 1e-4
PP_FLOOR = 1e-2
PP_DRIFT_TOL = 0.05


@dataclass(eq=False)
class FiniteEvolution:
    """Eigendecomposition of a Hermitian matrix driving U_t = e^{-iHt}.

    Eigenvalues are grouped into degenerate clusters at a relative
    tolerance, because the dephased density matrix entering the ergodic
    formula depends on the eigenspace partition, and near-degeneracy
    would otherwise destabilize it.

    Attributes
    ----------
    matrix : ndarray
        The Hermitian generator.
    eigenvalues : ndarray
        Sorted eigenvalues from the dense decomposition.
    vectors : ndarray
        Orthonormal eigenvectors as columns, aligned with eigenvalues.
    groups : list of ndarray
        Index arrays of the degenerate clusters.
    group_values : ndarray
        One representative eigenvalue per cluster.
    """

    matrix: np.ndarray
    eigenvalues: np.ndarray
    vectors: np.ndarray
    groups: list
    group_values: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def projector_completeness(self) -> float:
        """Norm defect of sum_n P_n = 1 (unitarity of the eigenbasis)."""
        v = self.vectors
        return float(np.linalg.norm(v @ v.conj().T - np.eye(self.dim), 2))

    def evolve(self, psi: np.ndarray, t: float) -> np.ndarray:
        c = self.vectors.conj().T @ np.asarray(psi, dtype=complex)
        return self.vectors @ (np.exp(-1j * self.eigenvalues * t) * c)


def _check_hermitian(name: str, m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be a square matrix")
    scale = max(1.0, float(np.abs(m).max()))
    if np.abs(m - m.conj().T).max() > HERMITIAN_TOL * scale:
        raise ValueError(f"{name} must be Hermitian")
    return m


def finite_evolution(H, tol: float = DEGENERACY_TOL) -> FiniteEvolution:
    """Decompose a Hermitian matrix and cluster degenerate eigenvalues.

    Consecutive eigenvalues closer than ``tol`` relative to the spectral
    spread are merged into one cluster.
    """
    H = _check_hermitian("H", H)
    if H.shape[0] > MAX_DIM:
        raise ValueError(f"matrix dimension exceeds {MAX_DIM}")
    a, v = np.linalg.eigh(H)
    scale = max(1.0, float(a[-1] - a[0]))
    groups = []
    start = 0
    for i in range(1, a.size + 1):
        if i == a.size or a[i] - a[i - 1] > tol * scale:
            groups.append(np.arange(start, i))
            start = i
    reps = np.array([float(np.mean(a[idx])) for idx in groups])
    return FiniteEvolution(matrix=H, eigenvalues=a, vectors=v,
                           groups=groups, group_values=reps)


@dataclass(frozen=True)
class GridHamiltonian:
    """Grid evolution handle for the stay/transit diagnostics."""

    spec: HamiltonianSpec
    grid: GridSpec
    dt: float = 0.25


def _unit_coefficients(evo: FiniteEvolution, psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (evo.dim,):
        raise ValueError("state dimension does not match the evolution")
    if abs(np.linalg.norm(psi) - 1.0) > UNIT_TOL:
        raise ValueError("psi must be a unit vector")
    return evo.vectors.conj().T @ psi


def dephased_matrix(evo: FiniteEvolution, psi) -> np.ndarray:
    """Density matrix sum_n P_n |psi><psi| P_n in the original basis."""
    c = _unit_coefficients(evo, psi)
    rho_eig = np.zeros((evo.dim, evo.dim), dtype=complex)
    for idx in evo.groups:
        block = c[idx]
        rho_eig[np.ix_(idx, idx)] = np.outer(block, block.conj())
    return evo.vectors @ rho_eig @ evo.vectors.conj().T


def _signal_weights(evo: FiniteEvolution, c: np.ndarray, F: np.ndarray):
    # f(t) = <U_t psi, F U_t psi> = sum_jk W_jk e^{i(a_j - a_k) t}
    # with W_jk = conj(c_j) F_jk c_k in the eigenbasis.
    F_eig = evo.vectors.conj().T @ F @ evo.vectors
    W = np.outer(c.conj(), c) * F_eig
    return W, F_eig


def _dephased_value(evo: FiniteEvolution, c: np.ndarray,
                    F_eig: np.ndarray) -> float:
    total = 0.0
    for idx in evo.groups:
        block = c[idx]
        total += float(np.real(block.conj() @ F_eig[np.ix_(idx, idx)] @ block))
    return total


def _signal_on_times(W: np.ndarray, a: np.ndarray, times: np.ndarray,
                     chunk: int = 65536) -> np.ndarray:
    out = np.empty(times.size)
    for lo in range(0, times.size, chunk):
        ts = times[lo:lo + chunk]
        u = np.exp(-1j * np.outer(a, ts))
        out[lo:lo + chunk] = np.real(np.sum(u.conj() * (W @ u), axis=0))
    return out


def _quad_times(T: float, quad_dt: float, omega_max: float) -> np.ndarray:
    # Keep at least eight quadrature points per fastest oscillation.
    dt = min(quad_dt, (2.0 * np.pi / omega_max) / 8.0) if omega_max > 0 \
        else quad_dt
    steps = max(2, int(np.ceil(T / dt)))
    return np.linspace(0.0, T, steps + 1)


def _horizon_indices(times: np.ndarray, horizons: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(times, horizons)
    idx = np.clip(idx, 1, times.size - 1)
    left_closer = np.abs(times[idx - 1] - horizons) < \
        np.abs(times[idx] - horizons)
    return idx - left_closer.astype(int)


def ergodic_average(evo: FiniteEvolution, psi, F, horizons,
                    quad_dt: float = QUAD_DT) -> dict:
    """Long-time average of <U_t psi, F U_t psi> versus its prediction.

    The prediction Tr[F rho] dephases psi over the eigenspace partition;
    the measured value is the symmetric time average (1/2T) int_{-T}^{T}
    by Simpson quadrature.  The integrand is even in t for any Hermitian
    F, so only [0, T] is integrated.  Convergence is O(1/T) when the
    eigenvalue differences are nondegenerate.

    Returns
    -------
    dict with "predicted" and "measured", the latter keyed by horizon.
    """
    F = _check_hermitian("F", F)
    c = _unit_coefficients(evo, psi)
    W, F_eig = _signal_weights(evo, c, F)
    predicted = _dephased_value(evo, c, F_eig)
    hs = np.atleast_1d(np.asarray(horizons, dtype=float))
    if np.any(hs <= 0):
        raise ValueError("horizons must be positive")
    hs = np.sort(hs)
    a = evo.eigenvalues
    times = _quad_times(float(hs[-1]), quad_dt, float(a[-1] - a[0]))
    signal = _signal_on_times(W, a, times)
    cum = cumulative_simpson(signal, x=times, initial=0.0)
    idx = _horizon_indices(times, hs)
    measured = {float(h): float(cum[i] / times[i]) for h, i in zip(hs, idx)}
    return {"predicted": predicted, "measured": measured}


def _finite_stay_curve(evo: FiniteEvolution, psi, Omega, T: float,
                       quad_dt: float):
    Omega = _check_hermitian("Omega", Omega)
    c = _unit_coefficients(evo, psi)
    W, O_eig = _signal_weights(evo, c, Omega)
    a = evo.eigenvalues
    times = _quad_times(T, quad_dt, float(a[-1] - a[0]))
    signal = _signal_on_times(W, a, times)
    # tau(T') = int_{-T'}^{T'} = 2 int_0^{T'} by evenness of the signal.
    tau = 2.0 * cumulative_simpson(signal, x=times, initial=0.0)
    prediction = _dephased_value(evo, c, O_eig)
    return times, tau, prediction


def _comparator_expectation(comp: ComparatorSpec, basis: np.ndarray,
                            decay: np.ndarray, psi: GridWavefunction) -> float:
    if comp.center is not None:
        coeffs, _ = hermite_coefficients(comp, psi)
    elif psi.grid.n == 1:
        coeffs = basis @ psi.amp * psi.grid.dx
    else:
        coeffs = basis @ psi.amp @ basis.T * psi.grid.cell
    return float(np.sum(decay * np.abs(coeffs) ** 2))


def _grid_stay_curve(handle: GridHamiltonian, psi: GridWavefunction,
                     comp: ComparatorSpec, T: float):
    if not isinstance(comp, ComparatorSpec):
        raise ValueError("grid evolutions take a ComparatorSpec as Omega")
    if not psi.is_unit:
        raise ValueError("psi must be a unit vector")
    basis = _basis(psi.grid, comp.N)
    n_vals = np.exp(-comp.s * np.arange(comp.N + 1))
    decay = n_vals if psi.grid.n == 1 else np.outer(n_vals, n_vals)
    steps = max(2, int(np.ceil(T / handle.dt)))
    dt = T / steps
    curves = []
    # Backward time from a real Hamiltonian is forward time from the
    # conjugate state; the comparator kernel is real, so its expectation
    # in the conjugate state needs no further adjustment.
    for state in (psi, GridWavefunction(psi.grid, np.conj(psi.amp))):
        values = [_comparator_expectation(comp, basis, decay, state)]

        def observer(t, snapshot):
            values.append(_comparator_expectation(comp, basis, decay, snapshot))

        propagate(handle.spec, state, T, dt, observer=observer)
        curves.append(np.asarray(values))
    times = np.linspace(0.0, T, steps + 1)
    both = curves[0] + curves[1]
    tau = cumulative_simpson(both, x=times, initial=0.0)
    return times, tau, None


def _stay_curve(evo, psi, Omega, T: float, quad_dt: float):
    if isinstance(evo, FiniteEvolution):
        return _finite_stay_curve(evo, psi, Omega, T, quad_dt)
    if isinstance(evo, GridHamiltonian):
        return _grid_stay_curve(evo, psi, Omega, T)
    raise ValueError("evo must be a FiniteEvolution or GridHamiltonian")


def average_stay(evo, psi, Omega, T: float, quad_dt: float = QUAD_DT) -> dict:
    """Mean presence (1/2T) int_{-T}^{T} <U_t psi, Omega U_t psi> dt.

    For finite-dimensional evolutions the ergodic prediction Tr[Omega
    rho] always applies, every vector being bound there; the note in the
    result says so explicitly.  Grid evolutions report the finite-T
    value only, with the comparator as the region operator.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    times, tau, prediction = _stay_curve(evo, psi, Omega, T, quad_dt)
    value = float(tau[-1] / (2.0 * times[-1]))
    note = ("finite-dimensional evolution: every vector is bound and the "
            "ergodic prediction applies" if prediction is not None
            else "grid evolution: finite-horizon value only")
    return {"value": value, "prediction": prediction, "T": float(times[-1]),
            "note": note}


def transit_time(evo, psi, Omega, T: float, quad_dt: float = QUAD_DT,
                 increment_tol: float = TAIL_INCREMENT_TOL) -> dict:
    """Total presence int_{-T}^{T} <U_t psi, Omega U_t psi> dt at horizon.

    The value is flagged divergent when the trailing half of the horizon
    still adds more than ``increment_tol``: the integral is then still
    growing at T and certifies no finite transit time.
    """
    if T <= 0:
        raise ValueError("T must be positive")
    times, tau, _ = _stay_curve(evo, psi, Omega, T, quad_dt)
    half = _horizon_indices(times, np.array([times[-1] / 2.0]))[0]
    increment = float(tau[-1] - tau[half])
    return {"value": float(tau[-1]), "divergent": bool(increment > increment_tol),
            "trailing_increment": increment, "T": float(times[-1])}


def recurrence_time(evo: FiniteEvolution, psi, eps: float, T_min: float = 0.0,
                    T_max: float = 1e5, base_step: float = None,
                    refine: int = 256):
    """First T in [T_min, T_max] with ||U_T psi - psi|| < eps.

    In a finite dimension the distance is an almost-periodic closed form
    over the eigenvalue clusters, so the search scans a coarse grid and
    refines every window the Lipschitz bound cannot exclude.  Returns
    the time found, or None within the horizon.  For eps >= 2 the
    diameter bound ||U_t psi - psi|| <= 2 makes T_min itself the answer.
    """
    if not isinstance(evo, FiniteEvolution):
        raise ValueError("recurrence needs a finite-dimensional evolution")
    if eps <= 0:
        raise ValueError("eps must be positive")
    c = _unit_coefficients(evo, psi)
    if eps >= 2.0:
        return float(T_min)
    weights = np.array([float(np.sum(np.abs(c[idx]) ** 2))
                        for idx in evo.groups])
    freqs = evo.group_values
    keep = weights > 1e-18
    weights, freqs = weights[keep], freqs[keep]

    def dist(ts):
        phase = 1.0 - np.cos(np.outer(freqs, ts))
        return np.sqrt(np.maximum(2.0 * weights @ phase, 0.0))

    omega_max = float(np.max(np.abs(freqs))) if freqs.size else 0.0
    if omega_max == 0.0:
        return float(T_min)
    step = base_step or (2.0 * np.pi / omega_max) / 64.0
    lipschitz = float(np.sqrt(weights @ freqs ** 2))
    promote = eps + step * lipschitz
    chunk = 100000
    t = max(float(T_min), 0.0)
    while t <= T_max:
        ts = t + step * np.arange(chunk)
        ts = ts[ts <= T_max + step]
        if ts.size == 0:
            break
        d = dist(ts)
        for j in np.nonzero(d <= promote)[0]:
            lo = max(float(T_min), ts[j] - step)
            fine = np.linspace(lo, ts[j] + step, 2 * refine + 1)
            fine = fine[(fine >= T_min) & (fine <= T_max)]
            hits = np.nonzero(dist(fine) < eps)[0]
            if hits.size:
                return float(fine[hits[0]])
        t = float(ts[-1]) + step
    return None


def classify_quantum(evo, psi, Omega, horizons,
                     increment_tol: float = TAIL_INCREMENT_TOL,
                     pp_floor: float = PP_FLOOR,
                     drift_tol: float = PP_DRIFT_TOL,
                     quad_dt: float = QUAD_DT) -> dict:
    """Finite-horizon bound/escape label from stay and transit curves.

    A scalar horizon is expanded to the ladder [T/4, T/2, T].  The label
    is "ac-like" when the transit time has converged (trailing half of
    the longest horizon adds less than ``increment_tol``), else
    "pp-like" when the average stay is above ``pp_floor`` and stable
    between the last two horizons, else "exceptional-candidate".  All
    labels are finite-horizon proxies: a finite model has pure point
    spectrum, and an exceptional-candidate is a horizon artifact rather
    than a singular-continuous assertion.
    """
    hs = np.atleast_1d(np.asarray(horizons, dtype=float))
    if hs.size == 1:
        hs = hs[0] * np.array([0.25, 0.5, 1.0])
    if np.any(hs <= 0) or hs.size < 2:
        raise ValueError("need positive horizons, at least two after "
                         "ladder expansion")
    hs = np.sort(hs)
    times, tau_curve, _ = _stay_curve(evo, psi, Omega, float(hs[-1]), quad_dt)
    idx = _horizon_indices(times, hs)
    taus = tau_curve[idx]
    mus = taus / (2.0 * times[idx])
    half = _horizon_indices(times, np.array([times[-1] / 2.0]))[0]
    trailing = float(tau_curve[-1] - tau_curve[half])
    stable = abs(mus[-1] - mus[-2]) <= drift_tol * max(mus[-1], pp_floor)
    if trailing < increment_tol:
        label = "ac-like"
    elif mus[-1] >= pp_floor and stable:
        label = "pp-like"
    else:
        label = "exceptional-candidate"
    return {"label": label,
            "horizons": hs.tolist(),
            "mu": mus.tolist(),
            "tau": taus.tolist(),
            "trailing_increment": trailing,
            "thresholds": {"increment_tol": increment_tol,
                           "pp_floor": pp_floor, "drift_tol": drift_tol},
            "note": "finite-horizon proxy labels; the underlying model "
                    "has pure point spectrum"}
