"""Anelastic constraint: pressure operator, pressure solve, and data correction."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla
import sympy as sp

from .basis import analyze_function, differentiate, make_basis, multiply_project, project
from .density import density_spectrum, eval_density
from .galerkin import assemble_operators, resolve_profile


class PressureSolveError(RuntimeError):
    """The weighted pressure operator lost definiteness or is too ill-conditioned."""

    def __init__(self, message, condition=np.inf):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


@dataclass(frozen=True, eq=False)
class PressureOperator:
    """Matrix of ``b -> div P_m(rho grad b)`` on mean-zero cosine modes.

    The matrix is expressed in orthonormal vector coordinates and is
    Hermitian negative definite whenever ``inf rho > 0``.
    """

    basis: object
    profile: object
    matrix: np.ndarray
    factor: tuple
    eigenvalue_range: tuple

    @property
    def condition(self):
        lo, hi = self.eigenvalue_range
        return hi / lo

    @property
    def min_eigenvalue(self):
        """Smallest eigenvalue of ``-A``."""
        return self.eigenvalue_range[0]

    def solve(self, rhs):
        """Solve ``A b = rhs`` for pressure vectors (batched along leading axes)."""
        rhs = np.asarray(rhs, dtype=complex)
        sol = sla.cho_solve(self.factor, -rhs.T)
        return sol.T


def _pressure_matrix(basis, rho):
    units = basis.from_vector(np.eye(basis.n_pressure), "cos", pressure=True)
    fx = multiply_project(rho, differentiate(units, "x"), basis.m, "exact")
    fz = multiply_project(rho, differentiate(units, "z"), basis.m, "exact")
    cols = differentiate(fx, "x") + differentiate(fz, "z")
    return basis.to_vector(cols, pressure=True).T


@lru_cache(maxsize=32)
def _assemble(m, profile):
    basis = make_basis(m)
    rho = density_spectrum(profile)
    mat = _pressure_matrix(basis, rho)
    if np.max(np.abs(mat.imag), initial=0.0) <= 1e-14 * np.max(np.abs(mat), initial=1.0):
        mat = np.ascontiguousarray(mat.real)
    neg = -(mat + mat.conj().T) / 2
    eigs = np.linalg.eigvalsh(neg) if neg.size else np.array([1.0])
    lo, hi = float(eigs[0]), float(eigs[-1])
    cond = hi / lo if lo > 0 else np.inf
    if lo <= 0:
        raise PressureSolveError("pressure operator is not negative definite", cond)
    try:
        factor = sla.cho_factor(neg, lower=True)
    except np.linalg.LinAlgError as exc:
        raise PressureSolveError(f"Cholesky factorisation failed: {exc}", cond) from exc
    mat.flags.writeable = False
    return PressureOperator(basis, profile, mat, factor, (lo, hi))


def assemble_pressure_operator(basis, density):
    """Assemble and factor the pressure operator column by column."""
    return _assemble(basis.m, resolve_profile(density, basis.m))


def pressure_rhs(ops, a, forcing=None):
    """Right-hand side ``div(Lap u - N(u) + F)`` in pressure-vector coordinates."""
    f = ops.lap * a - ops.transport(a)
    if forcing is not None:
        f = f + forcing
    return ops.div(f)


def solve_pressure(op, v, w, density=None, forcing=None):
    """Pressure field keeping the constraint stationary for the state ``(v, w)``.

    ``forcing`` is an optional velocity vector added to the momentum
    right-hand side.
    """
    ops = assemble_operators(op.basis.m, op.profile)
    a = ops.vector(v, w)
    b = op.solve(pressure_rhs(ops, a, forcing))
    return ops.pressure_field(b)


def divergence_residual(v, w, density):
    """L2 norm over the physical cell of ``dx P_m(rho v) + dz P_m(rho w)``."""
    m = v.m
    profile = resolve_profile(density, m)
    rho = density_spectrum(profile)
    div = differentiate(multiply_project(rho, v, m), "x") + differentiate(multiply_project(rho, w, m), "z")
    coeffs = div.coeffs
    total = np.sum(np.abs(coeffs) ** 2 * div.basis.norm_weights("cos"))
    return float(np.sqrt(total / 2.0))


class Corrected(NamedTuple):
    v: object
    w: object
    correction_norm: float


def correct_initial_data(v_raw, w_raw, basis, density):
    """Project raw data onto the discrete constraint: ``P_m u - grad Q``.

    ``Q`` solves ``div P_m(rho grad Q) = div P_m(rho P_m u)``; the returned
    ``correction_norm`` is ``||grad Q||`` over the physical cell.
    """
    m = basis.m
    ops = assemble_operators(m, density)
    op = assemble_pressure_operator(basis, density)
    a = ops.vector(project(v_raw, m), project(w_raw, m))
    q = op.solve(ops.div(ops.mass(a)))
    gq = ops.grad(q)
    v, w = ops.fields(a - gq)
    return Corrected(v, w, float(np.sqrt(np.real(np.vdot(gq, gq)) / 2.0)))


# -- manufactured constraint-satisfying fields ------------------------------

X, Z, T = sp.symbols("x z t", real=True)


def parse_expression(expr):
    """Sympy expression in ``x``, ``z`` (and optionally ``t``) from text or sympy input."""
    if isinstance(expr, sp.Basic):
        return expr
    return sp.sympify(expr, locals={"x": X, "z": Z, "t": T, "pi": sp.pi})


def anelastic_stream_field(psi, density, m, t=0.0, nx=None):
    """Velocity ``(rho^-1 dz psi, -rho^-1 dx psi)`` of a stream function on the physical cell.

    ``psi`` is a sympy expression (or text) in ``x``, ``z`` and optionally
    ``t``; it is given on z in (0, 1) and extended with the symmetry of the
    velocity components (v even, w odd). The continuous field satisfies
    ``div(rho u) = 0`` exactly; coefficients are computed by quadrature.
    """
    psi = parse_expression(psi).subs(T, t)
    dz = sp.lambdify((X, Z), sp.diff(psi, Z), "numpy")
    dx = sp.lambdify((X, Z), sp.diff(psi, X), "numpy")

    def v(x, z):
        return dz(x, z) / eval_density(density, z) + 0 * x

    def w(x, z):
        return -dx(x, z) / eval_density(density, z) + 0 * x

    scale = density.eps
    return (
        analyze_function(v, "cos", m, nx, scale),
        analyze_function(w, "sin", m, nx, scale),
    )
