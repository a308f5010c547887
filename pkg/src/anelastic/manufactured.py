"""Manufactured solutions: forcing for a prescribed exact field, and refinement studies.

The exact field lives on the physical cell z in (0, 1) and is extended with
the symmetry of each component. Its forcing is

    F = rho (u_t + u . grad u + grad p) - Lap u,

where the first part is integrated against the basis by graded quadrature
and ``-Lap u`` is taken in the weak (distributional) sense on the torus,
i.e. ``pi^2 |k|^2`` times the coefficients of ``u``. The weak form is what
the Galerkin system sees, so any jump of ``dz v`` across z = 0 or z = +-1
in the extension enters the forcing consistently.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import sympy as sp

from .basis import analyze_function, make_basis, project
from .constraint import T, X, Z, correct_initial_data, parse_expression
from .density import DensityProfile
from .dynamics import SimState, build_system, run
from .quadrature import graded_rule

REFERENCE_ORDER = 64


@dataclass(frozen=True, eq=False)
class Manufactured:
    """Exact field ``(v, w, p)`` and its forcing for one density profile."""

    density: DensityProfile
    v_expr: sp.Expr
    w_expr: sp.Expr
    p_expr: sp.Expr

    def __post_init__(self):
        if self.density.delta != 0:
            raise ValueError("manufactured solutions need the unsmoothed density (delta = 0)")

    @property
    def rho_expr(self):
        d = self.density
        return (Z + sp.Float(d.eps)) ** sp.Float(d.alpha) if d.alpha else sp.Integer(1)

    def _lambdify(self, expr):
        f = sp.lambdify((T, X, Z), expr, "numpy")
        return lambda t, x, z: np.asarray(f(t, x, z), dtype=float) + 0.0 * x * z

    @property
    def _compiled(self):
        cache = self.__dict__.get("_fns")
        if cache is None:
            v, w, p, rho = self.v_expr, self.w_expr, self.p_expr, self.rho_expr
            fx = rho * (sp.diff(v, T) + v * sp.diff(v, X) + w * sp.diff(v, Z) + sp.diff(p, X))
            fz = rho * (sp.diff(w, T) + v * sp.diff(w, X) + w * sp.diff(w, Z) + sp.diff(p, Z))
            cache = tuple(self._lambdify(e) for e in (v, w, fx, fz))
            object.__setattr__(self, "_fns", cache)
        return cache

    @property
    def is_steady(self):
        return sp.diff(self.v_expr, T) == 0 and sp.diff(self.w_expr, T) == 0

    def exact_fields(self, t, m):
        """Coefficients of order ``m`` of the exact velocity at time ``t``."""
        fv, fw, _, _ = self._compiled
        scale = self.density.eps
        return (
            analyze_function(lambda x, z: fv(t, x, z), "cos", m, scale=scale),
            analyze_function(lambda x, z: fw(t, x, z), "sin", m, scale=scale),
        )

    def forcing_vector(self, ops, t):
        """Galerkin forcing at time ``t`` as a velocity vector of ``ops``."""
        _, _, fx, fz = self._compiled
        m, scale = ops.m, self.density.eps
        gx = analyze_function(lambda x, z: fx(t, x, z), "cos", m, scale=scale)
        gz = analyze_function(lambda x, z: fz(t, x, z), "sin", m, scale=scale)
        v, w = self.exact_fields(t, m)
        return ops.vector(gx, gz) - ops.lap * ops.vector(v, w)

    def forcing(self, ops):
        """Callable ``t -> forcing vector`` (memoised per time)."""

        @lru_cache(maxsize=8)
        def at(t):
            out = self.forcing_vector(ops, t)
            out.flags.writeable = False
            return out

        return at

    def exact_norm_sq(self, t):
        """``||u(t)||^2`` on the physical cell by direct quadrature."""
        fv, fw, _, _ = self._compiled
        zq, wq = graded_rule(self.density.eps)
        nx = 4 * REFERENCE_ORDER
        x = 2.0 * np.arange(nx) / nx
        vals = fv(t, x[:, None], zq[None, :]) ** 2 + fw(t, x[:, None], zq[None, :]) ** 2
        return 2.0 * float(np.mean(vals, axis=0) @ wq)

    def error(self, v, w, t, reference=REFERENCE_ORDER):
        """``||u_m - u(t)||`` on the physical cell, including the truncation tail."""
        m = v.m
        big = max(reference, m)
        ve, we = self.exact_fields(t, big)
        basis = make_basis(big)
        tot = 0.0
        tail = 0.0
        for num, ex in ((v, ve), (w, we)):
            wts = basis.norm_weights(num.parity) / 2.0
            diff = project(num, big).coeffs - ex.coeffs
            tot += float(np.sum(np.abs(diff) ** 2 * wts))
            tail += float(np.sum(np.abs(ex.coeffs) ** 2 * wts))
        # quadrature norm minus what order `big` captures; clipped at round-off
        tot += max(self.exact_norm_sq(t) - tail, 0.0)
        return float(np.sqrt(tot))


def manufactured_forcing(psi, density, pressure="0"):
    """Manufactured solution with ``u = (rho^-1 dz psi, -rho^-1 dx psi)``.

    ``psi`` and ``pressure`` are sympy expressions (or text) in ``t``, ``x``
    and ``z``; the returned object supplies the forcing and the exact field.
    """
    psi = parse_expression(psi)
    d = density
    rho = (Z + sp.Float(d.eps)) ** sp.Float(d.alpha) if d.alpha else sp.Integer(1)
    v = sp.diff(psi, Z) / rho
    w = -sp.diff(psi, X) / rho
    return Manufactured(density, v, w, parse_expression(pressure))


def manufactured_shear(profile, density):
    """Manufactured x-independent flow ``v = profile(t, z)``, ``w = 0``, ``p = 0``."""
    return Manufactured(density, parse_expression(profile), sp.Integer(0), sp.Integer(0))


@dataclass(frozen=True)
class RefinementRow:
    m: int
    error: float
    divergence: float
    aborted: bool


def solve_manufactured(case, m, T, dt, scheme="imex", theta=0.5):
    """Run order ``m`` from the corrected exact data and return ``(result, error at T)``."""
    system = build_system(m, case.density, scheme, dt, theta)
    system = system.with_settings(forcing=case.forcing(system.ops))
    v0, w0 = case.exact_fields(0.0, m)
    fixed = correct_initial_data(v0, w0, system.basis, system.density)
    state = SimState(0.0, system.ops.vector(fixed.v, fixed.w))
    result = run(system, state, T, cadence=max(1.0 / T, 1.0) if T > 0 else 1.0)
    v, w = system.ops.fields(result.final.a)
    return result, case.error(v, w, result.final.t)


def refinement_study(case, ms, T, dt, scheme="imex", theta=0.5):
    """Terminal errors against the exact field for each order in ``ms``."""
    rows = []
    for m in ms:
        result, err = solve_manufactured(case, m, T, dt, scheme, theta)
        rows.append(RefinementRow(int(m), err, float(result.series["div_residual"][-1]), result.aborted))
    return rows


__all__ = [
    "Manufactured",
    "RefinementRow",
    "manufactured_forcing",
    "manufactured_shear",
    "refinement_study",
    "solve_manufactured",
]
