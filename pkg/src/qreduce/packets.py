"""Gaussian coherent packets and their metaplectic time evolution.

A packet is U(alpha) Gamma^M: a Gaussian of complex symmetric width
matrix M displaced to the phase-space point alpha.  Its width evolves
through the linear (A, B) system driven by the Hamiltonian Hessian along
a classical trajectory; M = B^{-1}A solves the corresponding Riccati
equation but can blow up at caustics, while A and B stay finite, so the
linear system is what gets integrated.  The module also accumulates the
scalar phase X(t) and assembles the approximating propagator
W(t,0) = X U(alpha(t)) Z(t,0) U(alpha(0))*, which is exact for
Hamiltonians of degree at most two.

Phase conventions: the square root of det B is taken with branch
continuity (nearest-angle unwrapping along the run), which carries the
zero-point phase; X multiplies the amplitude by exp(-i X_phase) with
X_phase(t) = int_0^t [h(alpha) - <h'(alpha), alpha>/2] ds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_simpson

from .classical import ClassicalTrajectory, _hermite
from .errors import CausticError, NumericalError
from .grid import GridSpec, GridWavefunction
from .hamiltonian import HamiltonianSpec, PhasePoint, eval_h, gradient_h, hessian_h

SYMMETRY_TOL = 1e-10
FACTOR_TOL = 1e-10
CAUSTIC_TOL = 1e-12


def _as_matrix(value, n: int) -> np.ndarray:
    out = np.atleast_2d(np.asarray(value, dtype=complex))
    if out.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} matrix")
    return out


@dataclass(eq=False)
class GaussianPacket:
    """A displaced Gaussian U(alpha) Gamma^M with bookkeeping for its phase.

    The amplitude prefactor is pi^{-n/4} norm_prefactor (det B)^{-1/2}
    e^{-i phase}, where the square root uses the continuously tracked
    detB_angle and norm_prefactor = det(Re M(0))^{1/4} keeps the packet
    unit norm for any admissible initial width.
    """

    alpha: PhasePoint
    M: np.ndarray
    A: np.ndarray
    B: np.ndarray
    phase: float = 0.0
    norm_prefactor: float = 1.0
    detB_angle: float = None

    def __post_init__(self):
        n = self.alpha.n
        self.M = _as_matrix(self.M, n)
        self.A = _as_matrix(self.A, n)
        self.B = _as_matrix(self.B, n)
        if np.max(np.abs(self.M - self.M.T)) > SYMMETRY_TOL:
            raise ValueError("width matrix must be symmetric")
        if np.any(np.linalg.eigvalsh(self.M.real) <= 0):
            raise ValueError("Re M must be positive definite")
        if np.max(np.abs(self.B @ self.M - self.A)) > FACTOR_TOL * max(
                1.0, float(np.max(np.abs(self.A)))):
            raise ValueError("factors must satisfy M = B^(-1) A")
        if self.detB_angle is None:
            self.detB_angle = float(np.angle(np.linalg.det(self.B)))

    @property
    def n(self) -> int:
        return self.alpha.n

    @property
    def norm_factor(self) -> float:
        """Magnitude prefactor pi^{-n/4} |det B|^{-1/2}."""
        return float(np.pi ** (-self.n / 4.0)
                     / np.sqrt(abs(np.linalg.det(self.B))))

    @property
    def amplitude_factor(self) -> complex:
        """Full complex prefactor, branch-continuous in det B."""
        return (self.norm_prefactor * self.norm_factor
                * np.exp(-1j * (0.5 * self.detB_angle + self.phase)))

    @property
    def closed_norm(self) -> float:
        """L2 norm from the closed form; 1 for evolution-consistent factors."""
        det_re = float(np.linalg.det(self.M.real))
        det_b = abs(np.linalg.det(self.B))
        return float(self.norm_prefactor / np.sqrt(det_b) / det_re ** 0.25)

    @property
    def center(self) -> np.ndarray:
        """Expectation of a = (q, p): exactly the displacement."""
        return self.alpha.vector


def vacuum(n: int = 1) -> GaussianPacket:
    """The unit-width packet Gamma(x) = pi^{-n/4} exp(-<x,x>/2) at the origin."""
    eye = np.eye(n, dtype=complex)
    return GaussianPacket(alpha=PhasePoint(np.zeros(n), np.zeros(n)),
                          M=eye, A=eye.copy(), B=eye.copy())


def packet(alpha, M) -> GaussianPacket:
    """The packet U(alpha) Gamma^M with factors A = M, B = identity."""
    if not isinstance(alpha, PhasePoint):
        alpha = PhasePoint.from_vector(alpha)
    M = _as_matrix(M, alpha.n)
    prefactor = float(np.linalg.det(M.real)) ** 0.25
    return GaussianPacket(alpha=alpha, M=M, A=M.copy(),
                          B=np.eye(alpha.n, dtype=complex),
                          norm_prefactor=prefactor)


def sample_on_grid(pkt: GaussianPacket, grid: GridSpec) -> GridWavefunction:
    """Evaluate the packet's closed form on a grid.

    The displacement follows (U(alpha)psi)(x) = e^{i pi.xi/2}
    e^{i pi.(x-xi)} psi(x-xi), matching the grid Weyl operator, so
    sampled packets and grid displacements compose consistently.
    """
    if grid.n != pkt.n:
        raise ValueError("grid and packet dimensions differ")
    xi, pi_m = pkt.alpha.xi, pkt.alpha.pi
    if grid.n == 1:
        u = grid.x - xi[0]
        quad = np.exp(-0.5 * pkt.M[0, 0] * u * u)
        plane = np.exp(1j * (pi_m[0] * u + 0.5 * pi_m[0] * xi[0]))
    else:
        u = grid.x_mesh - xi
        quad = np.exp(-0.5 * np.einsum("...i,ij,...j->...", u, pkt.M, u))
        plane = np.exp(1j * (u @ pi_m + 0.5 * float(pi_m @ xi)))
    return GridWavefunction(grid, pkt.amplitude_factor * quad * plane)


@dataclass(eq=False)
class MetaplecticSeries:
    """(A, B, M) along a classical trajectory, with branch-tracked det B."""

    times: np.ndarray
    A: np.ndarray
    B: np.ndarray
    M: np.ndarray
    detB_angle: np.ndarray

    def __len__(self) -> int:
        return len(self.times)


def _hessian_blocks(spec, state):
    n = state.size // 2
    H = hessian_h(spec, PhasePoint.from_vector(state))
    return H[:n, :n], H[:n, n:], H[n:, n:]


def evolve_AB(spec: HamiltonianSpec, traj: ClassicalTrajectory,
              A0=None, B0=None) -> MetaplecticSeries:
    """Integrate the linear width system along a trajectory.

    The equations are A' = i B hxx - A hxp and B' = B hxp^T + i A hpp
    with the Hessian blocks of h evaluated at alpha(t); a fourth-order
    one-step scheme is used at the trajectory's own step, with midpoint
    states from the cubic Hermite interpolant.  M = B^{-1} A is recovered
    at every sample.

    Raises
    ------
    CausticError
        If det B (which never vanishes for normalizable initial widths)
        crosses zero for the supplied raw factors.
    NumericalError
        If M loses symmetry or Re M positivity along the run, for initial
        widths that had Re M positive definite.
    """
    n = traj.n
    A = np.eye(n, dtype=complex) if A0 is None else _as_matrix(A0, n)
    B = np.eye(n, dtype=complex) if B0 is None else _as_matrix(B0, n)
    if abs(np.linalg.det(B)) < CAUSTIC_TOL:
        raise CausticError(0.0)
    dt = traj.dt
    mids = _hermite(traj.states[:-1], traj.states[1:], traj.derivatives[:-1],
                    traj.derivatives[1:], dt, 0.5)
    separable = spec.vector_potential is None and spec.potential.ndim == 1
    if separable and n == 1:
        A_series, B_series = _evolve_scalar(spec, traj, mids, complex(A[0, 0]),
                                            complex(B[0, 0]))
    else:
        A_series, B_series = _evolve_matrix(spec, traj, mids, A, B)
    return _assemble_series(traj, A_series, B_series)


def _evolve_scalar(spec, traj, mids, a, b):
    # 1D separable fast path: only V''(xi) drives the system.
    pot = spec.potential
    vxx0 = np.asarray(pot.derivative(traj.xi[:, 0], 2), dtype=float)
    vxx_mid = np.asarray(pot.derivative(mids[:, 0], 2), dtype=float)
    inv_m = 1j / spec.mass
    dt = traj.dt
    steps = len(traj.times) - 1
    A_series = np.empty((steps + 1, 1, 1), dtype=complex)
    B_series = np.empty_like(A_series)
    A_series[0, 0, 0], B_series[0, 0, 0] = a, b
    for k in range(steps):
        h0 = 1j * vxx0[k]
        hm = 1j * vxx_mid[k]
        h1 = 1j * vxx0[k + 1]
        da1 = b * h0
        db1 = a * inv_m
        da2 = (b + 0.5 * dt * db1) * hm
        db2 = (a + 0.5 * dt * da1) * inv_m
        da3 = (b + 0.5 * dt * db2) * hm
        db3 = (a + 0.5 * dt * da2) * inv_m
        da4 = (b + dt * db3) * h1
        db4 = (a + dt * da3) * inv_m
        a = a + (dt / 6.0) * (da1 + 2 * da2 + 2 * da3 + da4)
        b = b + (dt / 6.0) * (db1 + 2 * db2 + 2 * db3 + db4)
        A_series[k + 1, 0, 0], B_series[k + 1, 0, 0] = a, b
    return A_series, B_series


def _evolve_matrix(spec, traj, mids, A, B):
    dt = traj.dt
    steps = len(traj.times) - 1
    n = A.shape[0]
    A_series = np.empty((steps + 1, n, n), dtype=complex)
    B_series = np.empty_like(A_series)
    A_series[0], B_series[0] = A, B

    def rhs(state, A, B):
        hxx, hxp, hpp = _hessian_blocks(spec, state)
        return 1j * B @ hxx - A @ hxp, B @ hxp.T + 1j * A @ hpp

    for k in range(steps):
        s0, s_mid, s1 = traj.states[k], mids[k], traj.states[k + 1]
        dA1, dB1 = rhs(s0, A, B)
        dA2, dB2 = rhs(s_mid, A + 0.5 * dt * dA1, B + 0.5 * dt * dB1)
        dA3, dB3 = rhs(s_mid, A + 0.5 * dt * dA2, B + 0.5 * dt * dB2)
        dA4, dB4 = rhs(s1, A + dt * dA3, B + dt * dB3)
        A = A + (dt / 6.0) * (dA1 + 2 * dA2 + 2 * dA3 + dA4)
        B = B + (dt / 6.0) * (dB1 + 2 * dB2 + 2 * dB3 + dB4)
        A_series[k + 1], B_series[k + 1] = A, B
    return A_series, B_series


def _assemble_series(traj, A_series, B_series) -> MetaplecticSeries:
    """Recover M, track the det B branch and enforce width invariants."""
    times = traj.times
    dets = np.linalg.det(B_series)
    small = np.nonzero(np.abs(dets) < CAUSTIC_TOL)[0]
    if small.size:
        raise CausticError(float(times[small[0]]))
    raw = np.angle(dets)
    jumps = np.diff(raw)
    jumps -= 2.0 * np.pi * np.round(jumps / (2.0 * np.pi))
    fast = np.nonzero(np.abs(jumps) > 0.5 * np.pi)[0]
    if fast.size:
        # det B cannot rotate this fast in one step unless it passed
        # near zero between samples.
        raise CausticError(float(times[fast[0] + 1]))
    angles = raw[0] + np.concatenate([[0.0], np.cumsum(jumps)])
    M_series = np.linalg.solve(B_series, A_series)
    asym = np.max(np.abs(M_series - np.swapaxes(M_series, 1, 2)), axis=(1, 2))
    bad = np.nonzero(asym > 1e-8)[0]
    if bad.size:
        raise NumericalError(
            f"width matrix lost symmetry at t = {times[bad[0]]:.6g}")
    M_series = 0.5 * (M_series + np.swapaxes(M_series, 1, 2))
    if np.all(np.linalg.eigvalsh(M_series[0].real) > 0):
        re_eigs = np.linalg.eigvalsh(M_series.real)
        bad = np.nonzero(np.any(re_eigs <= 0, axis=1))[0]
        if bad.size:
            raise NumericalError(
                f"Re M lost positivity at t = {times[bad[0]]:.6g}")
    return MetaplecticSeries(times=times.copy(), A=A_series, B=B_series,
                             M=M_series, detB_angle=angles)


def phase_X(spec: HamiltonianSpec, traj: ClassicalTrajectory) -> np.ndarray:
    """Accumulated scalar phase X_phase(t_k) along the trajectory samples.

    X_phase(t) = int_0^t [h(alpha(s)) - <h^(1)(alpha(s)), alpha(s)>/2] ds,
    and the propagator factor is X = exp(-i X_phase).  For h homogeneous
    of degree two the integrand cancels identically, which is what makes
    the packet propagator exact there.
    """
    pot = spec.potential
    if spec.vector_potential is None and pot.ndim == 1:
        xi = traj.xi[:, 0]
        integrand = pot.value(xi) - 0.5 * pot.derivative(xi, 1) * xi
    else:
        integrand = np.empty(len(traj.times))
        for k in range(len(traj.times)):
            point = traj.point(k)
            grad = gradient_h(spec, point)
            integrand[k] = eval_h(spec, point) - 0.5 * float(
                grad @ point.vector)
    return cumulative_simpson(np.asarray(integrand, dtype=float),
                              dx=traj.dt, initial=0.0)


@dataclass(eq=False)
class ApproxPropagatorState:
    """One sample of the approximating propagator applied to a packet."""

    time: float
    packet: GaussianPacket
    classical_point: PhasePoint
    X_phase: float


@dataclass(eq=False)
class PacketFlow:
    """W(t,0) applied to a fixed initial packet, sampled along a trajectory."""

    spec: HamiltonianSpec
    traj: ClassicalTrajectory
    base: GaussianPacket
    series: MetaplecticSeries
    X: np.ndarray
    branch_offset: float

    @property
    def times(self) -> np.ndarray:
        return self.traj.times

    def packet_at(self, k: int) -> GaussianPacket:
        return GaussianPacket(
            alpha=self.traj.point(k), M=self.series.M[k], A=self.series.A[k],
            B=self.series.B[k], phase=self.base.phase + float(self.X[k]),
            norm_prefactor=self.base.norm_prefactor,
            detB_angle=float(self.series.detB_angle[k]) + self.branch_offset)

    def state_at(self, k: int) -> ApproxPropagatorState:
        return ApproxPropagatorState(
            time=float(self.times[k]), packet=self.packet_at(k),
            classical_point=self.traj.point(k), X_phase=float(self.X[k]))

    def to_csv(self, path) -> None:
        """Columns t, xi.., pi.., Re/Im of M entries, phase."""
        n = self.traj.n
        cols = [self.times, self.traj.xi, self.traj.pi]
        names = ["t"] + [f"xi{i}" for i in range(n)] + [f"pi{i}" for i in range(n)]
        flat = self.series.M.reshape(len(self.times), n * n)
        for ij in range(n * n):
            cols.extend([flat[:, ij].real, flat[:, ij].imag])
            names.extend([f"re_m{ij}", f"im_m{ij}"])
        cols.append(self.base.phase + self.X)
        names.append("phase")
        data = np.column_stack(cols)
        np.savetxt(path, data, delimiter=",", header=",".join(names),
                   comments="")


def approximate_flow(spec: HamiltonianSpec, traj: ClassicalTrajectory,
                     psi0_packet: GaussianPacket) -> PacketFlow:
    """Evolve a packet with the approximating propagator along a trajectory.

    The input must be the packet U(alpha(0)) Gamma^{M0} centered on the
    trajectory's start; then W(t,0) applied to it is
    exp(-i X_phase(t)) U(alpha(t)) Gamma^{M(t)} with no leftover Weyl
    cocycle, which is what packet_at assembles.
    """
    start = traj.point(0)
    if np.max(np.abs(psi0_packet.alpha.vector - start.vector)) > 1e-9:
        raise ValueError("packet must be centered at the trajectory start")
    series = evolve_AB(spec, traj, psi0_packet.A, psi0_packet.B)
    X = phase_X(spec, traj)
    offset = psi0_packet.detB_angle - float(series.detB_angle[0])
    return PacketFlow(spec=spec, traj=traj, base=psi0_packet, series=series,
                      X=X, branch_offset=offset)


def apply_W(spec: HamiltonianSpec, traj: ClassicalTrajectory,
            psi0_packet: GaussianPacket, t: float) -> GaussianPacket:
    """The approximating propagator at a single sample time t = k dt."""
    k = int(round(t / traj.dt))
    if not 0 <= k < len(traj.times) or abs(traj.times[k] - t) > 1e-9:
        raise ValueError("t must be one of the trajectory sample times")
    return approximate_flow(spec, traj, psi0_packet).packet_at(k)
