"""Hamiltonian functions h(alpha), their derivatives and Taylor remainders.

The package works in internal units with hbar = 1; any handling of
physical magnitudes lives in :mod:`qreduce.scaling`.  A Hamiltonian is
h(xi, pi) = pi^2 / 2m + V(xi) with an optional classical-side vector
potential, in which case h = (pi - A(xi))^2 / 2m + V(xi) and the spec is
flagged classical-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial
from scipy.interpolate import CubicSpline

from .errors import PotentialDomainError

MAX_POLY_DEGREE = 8
MAX_POLY_DEGREE_2D = 4


class PotentialModel:
    """A potential V with analytic derivatives.

    Two kinds are supported.  Polynomial potentials (degree <= 8 in one
    dimension, total degree <= 4 in two) carry exact derivatives of all
    orders via coefficient shift-and-scale.  Tabulated potentials are
    cubic-spline interpolants and expose derivatives of order <= 2 only;
    asking for order 3 raises, as differentiating interpolation noise
    twice is already generous.
    """

    def __init__(self, kind, *, coeffs=None, coeff_matrix=None, spline=None,
                 knots=None, values=None):
        self.kind = kind
        self.coeffs = coeffs
        self.coeff_matrix = coeff_matrix
        self._spline = spline
        self.knots = knots
        self.values = values

    # -- constructors -------------------------------------------------

    @classmethod
    def polynomial(cls, coeffs) -> "PotentialModel":
        """1D polynomial V(x) = sum_k coeffs[k] x^k."""
        coeffs = np.atleast_1d(np.asarray(coeffs, dtype=float))
        if coeffs.ndim != 1:
            raise ValueError("1D polynomial needs a flat coefficient list")
        if len(coeffs) - 1 > MAX_POLY_DEGREE:
            raise ValueError(f"polynomial degree capped at {MAX_POLY_DEGREE}")
        return cls("polynomial", coeffs=coeffs)

    @classmethod
    def polynomial2d(cls, coeff_matrix) -> "PotentialModel":
        """2D polynomial V(x, y) = sum_{ij} C[i, j] x^i y^j, total degree <= 4."""
        C = np.asarray(coeff_matrix, dtype=float)
        if C.ndim != 2:
            raise ValueError("2D polynomial needs a coefficient matrix")
        for i in range(C.shape[0]):
            for j in range(C.shape[1]):
                if C[i, j] != 0.0 and i + j > MAX_POLY_DEGREE_2D:
                    raise ValueError(
                        f"2D total degree capped at {MAX_POLY_DEGREE_2D}")
        return cls("polynomial", coeff_matrix=C)

    @classmethod
    def tabulated(cls, x, v) -> "PotentialModel":
        """Cubic interpolant through samples (x, v); 1D only."""
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        if x.ndim != 1 or x.shape != v.shape:
            raise ValueError("tabulated potential needs matching 1D arrays")
        spline = CubicSpline(x, v, extrapolate=False)
        return cls("tabulated", spline=spline, knots=x, values=v)

    # -- queries ------------------------------------------------------

    @property
    def is_polynomial(self) -> bool:
        return self.kind == "polynomial"

    @property
    def ndim(self) -> int:
        return 2 if self.coeff_matrix is not None else 1

    def value(self, x):
        """Evaluate V at x (scalar or array; 2D takes (..., 2) stacks)."""
        if self.coeff_matrix is not None:
            x = np.asarray(x, dtype=float)
            return np.polynomial.polynomial.polyval2d(
                x[..., 0], x[..., 1], self.coeff_matrix)
        if self.is_polynomial:
            return Polynomial(self.coeffs)(np.asarray(x, dtype=float))
        return self._eval_spline(x, order=0)

    def derivative(self, x, order=1):
        """Evaluate d^order V / dx^order at x (1D potentials)."""
        if self.coeff_matrix is not None:
            raise ValueError("use gradient/hessian for 2D potentials")
        if order < 1:
            raise ValueError("derivative order must be >= 1")
        if self.is_polynomial:
            return Polynomial(self.coeffs).deriv(order)(np.asarray(x, dtype=float))
        if order > 2:
            raise PotentialDomainError(
                "tabulated potentials expose derivative order <= 2 only")
        return self._eval_spline(x, order=order)

    def gradient(self, xi):
        """Gradient of V as an (n,) vector at a single point xi."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        if self.coeff_matrix is not None:
            C = self.coeff_matrix
            dx = np.polynomial.polynomial.polyval2d(
                xi[0], xi[1], np.polynomial.polynomial.polyder(C, axis=0))
            dy = np.polynomial.polynomial.polyval2d(
                xi[0], xi[1], np.polynomial.polynomial.polyder(C, axis=1))
            return np.array([dx, dy])
        return np.array([self.derivative(xi[0], order=1)])

    def hessian(self, xi):
        """Hessian of V as an (n, n) matrix at a single point xi."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        if self.coeff_matrix is not None:
            C = self.coeff_matrix
            pd = np.polynomial.polynomial.polyder
            dxx = np.polynomial.polynomial.polyval2d(xi[0], xi[1], pd(pd(C, axis=0), axis=0))
            dxy = np.polynomial.polynomial.polyval2d(xi[0], xi[1], pd(pd(C, axis=0), axis=1))
            dyy = np.polynomial.polynomial.polyval2d(xi[0], xi[1], pd(pd(C, axis=1), axis=1))
            return np.array([[dxx, dxy], [dxy, dyy]])
        return np.array([[self.derivative(xi[0], order=2)]])

    def shifted_coeffs(self, center):
        """Coefficients of u -> V(center + u) for 1D polynomials.

        The shift is exact coefficient arithmetic (composition with the
        affine polynomial center + u), never finite differencing.
        """
        if not self.is_polynomial or self.coeff_matrix is not None:
            raise PotentialDomainError(
                "coefficient shift requires a 1D polynomial potential")
        shifted = Polynomial(self.coeffs)(Polynomial([float(center), 1.0]))
        return shifted.coef

    def remainder_coeffs(self, center):
        """Coefficients of the cubic-and-higher Taylor remainder about center.

        r(u) = V(center + u) - V(center) - V'(center) u - V''(center) u^2 / 2,
        returned as polynomial coefficients in u (the first three vanish).
        """
        coef = self.shifted_coeffs(center).copy()
        coef[:3] = 0.0
        return coef

    def _eval_spline(self, x, order):
        x = np.asarray(x, dtype=float)
        out = self._spline(x, nu=order)
        if np.any(np.isnan(out)):
            raise PotentialDomainError(
                "tabulated potential evaluated outside its knot range")
        return out


@dataclass(frozen=True)
class PhasePoint:
    """A classical state alpha = (xi, pi) of position and momentum."""

    xi: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "xi", np.atleast_1d(np.asarray(self.xi, dtype=float)))
        object.__setattr__(self, "pi", np.atleast_1d(np.asarray(self.pi, dtype=float)))
        if self.xi.shape != self.pi.shape:
            raise ValueError("xi and pi must have the same dimension")
        if not (np.all(np.isfinite(self.xi)) and np.all(np.isfinite(self.pi))):
            raise ValueError("phase point entries must be finite")

    @property
    def n(self) -> int:
        return self.xi.size

    @property
    def vector(self) -> np.ndarray:
        """The stacked 2n-vector (xi, pi)."""
        return np.concatenate([self.xi, self.pi])

    @property
    def s_norm(self) -> float:
        """Phase-space norm ||alpha||_S = sqrt(xi^2 + pi^2)."""
        return float(np.sqrt(np.sum(self.xi ** 2) + np.sum(self.pi ** 2)))

    @classmethod
    def from_vector(cls, vec) -> "PhasePoint":
        vec = np.asarray(vec, dtype=float)
        n = vec.size // 2
        return cls(vec[:n], vec[n:])

    def __add__(self, other):
        return PhasePoint(self.xi + other.xi, self.pi + other.pi)

    def __sub__(self, other):
        return PhasePoint(self.xi - other.xi, self.pi - other.pi)


@dataclass(frozen=True)
class HamiltonianSpec:
    """Mass, dimension and potential defining h = pi^2/2m + V(xi)."""

    mass: float
    potential: PotentialModel
    dimension: int = 1
    vector_potential: tuple = None

    def __post_init__(self):
        if self.mass <= 0:
            raise ValueError("mass must be positive")
        if self.dimension not in (1, 2):
            raise ValueError("dimension must be 1 or 2")
        if self.potential.ndim != self.dimension:
            raise ValueError("potential dimension does not match spec")
        if self.vector_potential is not None and self.dimension != 1:
            raise ValueError("vector potential supported in 1D only")

    @property
    def classical_only(self) -> bool:
        """True when the spec cannot be used for quantum propagation."""
        return self.vector_potential is not None

    def kinetic_momentum(self, alpha: PhasePoint) -> np.ndarray:
        """pi - A(xi); equals pi when no vector potential is present."""
        if self.vector_potential is None:
            return alpha.pi
        a_val = np.array([A.value(alpha.xi[0]) for A in self.vector_potential])
        return alpha.pi - a_val


def eval_h(spec: HamiltonianSpec, alpha: PhasePoint) -> float:
    """Total energy h(alpha) = (pi - A)^2 / 2m + V(xi)."""
    kin = spec.kinetic_momentum(alpha)
    pot = spec.potential
    v = pot.value(alpha.xi if pot.ndim == 2 else alpha.xi[0])
    return float(np.sum(kin ** 2) / (2.0 * spec.mass) + v)


def gradient_h(spec: HamiltonianSpec, alpha: PhasePoint) -> np.ndarray:
    """Exact gradient (d_xi h, d_pi h) stacked as a 2n-vector."""
    kin = spec.kinetic_momentum(alpha)
    d_pi = kin / spec.mass
    d_xi = spec.potential.gradient(alpha.xi)
    if spec.vector_potential is not None:
        a_prime = np.array([A.derivative(alpha.xi[0], 1)
                            for A in spec.vector_potential])
        d_xi = d_xi - a_prime * kin / spec.mass
    return np.concatenate([np.atleast_1d(d_xi), d_pi])


def hessian_h(spec: HamiltonianSpec, alpha: PhasePoint) -> np.ndarray:
    """Exact Hessian as the 2n x 2n block matrix [[d2_xixi, d2_xipi],
    [d2_pixi, d2_pipi]]."""
    n = alpha.n
    H = np.zeros((2 * n, 2 * n))
    V_xx = spec.potential.hessian(alpha.xi)
    H[:n, :n] = V_xx
    H[n:, n:] = np.eye(n) / spec.mass
    if spec.vector_potential is not None:
        A = spec.vector_potential[0]
        a1 = A.derivative(alpha.xi[0], 1)
        a2 = A.derivative(alpha.xi[0], 2)
        kin = spec.kinetic_momentum(alpha)[0]
        m = spec.mass
        H[0, 0] += (a1 ** 2 - a2 * kin) / m
        H[0, 1] = H[1, 0] = -a1 / m
    return H


def taylor_remainder_V(spec: HamiltonianSpec, xi_center, x):
    """Pointwise cubic-and-higher Taylor remainder of V about xi_center.

    r(x) = V(xi_center + x) - V(xi_center) - V'(xi_center).x
           - x.V''(xi_center).x / 2

    Parameters
    ----------
    xi_center : position about which V is expanded, shape (n,) or scalar.
    x : displacement(s); scalar, (n,), or an array of displacements whose
        last axis has length n (1D accepts plain arrays).

    Returns
    -------
    The remainder, identically zero for quadratic V, with the same leading
    shape as x.
    """
    pot = spec.potential
    xi_center = np.atleast_1d(np.asarray(xi_center, dtype=float))
    if pot.ndim == 2:
        x = np.asarray(x, dtype=float)
        grad = pot.gradient(xi_center)
        hess = pot.hessian(xi_center)
        lin = x @ grad
        quad = 0.5 * np.einsum("...i,ij,...j->...", x, hess, x)
        return (pot.value(xi_center + x) - pot.value(xi_center)
                - lin - quad)
    x = np.asarray(x, dtype=float)
    c = xi_center[0]
    v0 = pot.value(c)
    v1 = pot.derivative(c, 1)
    v2 = pot.derivative(c, 2)
    return pot.value(c + x) - v0 - v1 * x - 0.5 * v2 * x * x
