"""The Galerkin ODE system: mass matrix, momentum right-hand side, integrators, runs.

States are velocity vectors in orthonormal coordinates (cosine block for
``v`` followed by the sine block for ``w``; see :mod:`anelastic.galerkin`).
The pressure is eliminated: every right-hand-side evaluation solves the
pressure system that keeps ``d/dt div P_m(rho u)`` zero.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, NamedTuple, Optional

import numpy as np
import scipy.linalg as sla

from .basis import to_grid
from .constraint import PressureOperator, assemble_pressure_operator
from .density import density_bounds
from .galerkin import GalerkinOperators, assemble_operators, block_operator, resolve_profile

log = logging.getLogger(__name__)

SCHEMES = ("imex", "rk4")
EXPLICIT_SAFETY = 0.5
CFL_SAFETY = 0.5


class MassFactorizationError(RuntimeError):
    """The Galerkin mass matrix is not positive definite."""


class StepSizeError(ValueError):
    """The requested step violates the scheme's stability guard."""


class NumericalInstability(RuntimeError):
    """Non-finite values or runaway growth during time stepping."""


@dataclass(frozen=True, eq=False)
class MassOperator:
    """Factored Galerkin matrix of ``u -> P_m(rho u)`` (block diagonal in parity)."""

    matrix_cos: np.ndarray
    matrix_sin: np.ndarray
    factor_cos: tuple
    factor_sin: tuple
    n_cos: int

    def apply(self, a):
        v, w = a[..., : self.n_cos], a[..., self.n_cos:]
        return np.concatenate([v @ self.matrix_cos.T, w @ self.matrix_sin.T], axis=-1)

    def solve(self, f):
        f = np.asarray(f, dtype=complex)
        v, w = f[..., : self.n_cos], f[..., self.n_cos:]
        sv = sla.cho_solve(self.factor_cos, v.T).T
        sw = sla.cho_solve(self.factor_sin, w.T).T if w.shape[-1] else w
        return np.concatenate([sv, sw], axis=-1)

    def dense(self):
        return sla.block_diag(self.matrix_cos, self.matrix_sin)


def _real_if_close(mat):
    if np.max(np.abs(mat.imag), initial=0.0) <= 1e-14 * np.max(np.abs(mat), initial=1.0):
        return np.ascontiguousarray(mat.real)
    return mat


def _cho(mat, label):
    if mat.size == 0:
        return (mat, True)
    try:
        return sla.cho_factor(mat, lower=True)
    except np.linalg.LinAlgError as exc:
        raise MassFactorizationError(f"{label} mass block is not positive definite: {exc}") from exc


def assemble_mass(basis, density):
    """Factored mass operator for order ``basis.m``."""
    ops = assemble_operators(basis.m, density)
    mc = _real_if_close(ops.mass_cos)
    ms = _real_if_close(ops.mass_sin)
    return MassOperator(mc, ms, _cho(mc, "cosine"), _cho(ms, "sine"), basis.n_cos)


@dataclass(frozen=True)
class SimState:
    """Time, velocity vector and the pressure vector of the last evaluation."""

    t: float
    a: np.ndarray
    b: Optional[np.ndarray] = None


class Evaluation(NamedTuple):
    du: np.ndarray
    b: np.ndarray
    transport: np.ndarray
    forcing: Optional[np.ndarray]


@dataclass(frozen=True, eq=False)
class GalerkinSystem:
    """Discrete system of order ``m`` with its integrator settings.

    ``forcing`` maps time to a velocity vector that is added to the
    momentum right-hand side (``None`` for unforced runs).
    """

    ops: GalerkinOperators
    mass: MassOperator
    pressure_op: PressureOperator
    scheme: str = "imex"
    dt: float = 1e-3
    theta: float = 0.5
    forcing: Optional[Callable[[float], np.ndarray]] = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def basis(self):
        return self.ops.basis

    @property
    def density(self):
        return self.ops.profile

    @property
    def m(self):
        return self.ops.m

    def forcing_at(self, t):
        return None if self.forcing is None else np.asarray(self.forcing(t), dtype=complex)

    def with_settings(self, **kw):
        return replace(self, _cache={}, **kw)

    # -- linear part ----------------------------------------------------

    def project_rhs(self, f):
        """``M^-1 Pi f`` and the pressure ``A^-1 div f`` for momentum vectors ``f``."""
        b = self.pressure_op.solve(self.ops.div(f))
        return self.mass.solve(f) - self.ops.grad(b), b

    @cached_property
    def projector(self):
        """``f -> M^-1 Pi f`` as a k1-block-diagonal matrix."""
        return block_operator(lambda f: self.project_rhs(f)[0], self.m)

    @cached_property
    def linear_matrix(self):
        """``a -> M^-1 Pi Lap a`` as a k1-block-diagonal matrix."""
        lap = self.ops.lap[self.projector.perm]
        return self.projector.with_blocks(self.projector.blocks * lap[:, None, :])

    def implicit_matrices(self, dt):
        """``(H^-1, H^-1 (I + dt (1 - theta) L))`` with ``H = I - dt theta L``, cached per step size.

        ``H`` has spectrum in ``[1, inf)`` (``L`` is dissipative), so the
        explicit inverse is well conditioned.
        """
        key = float(dt)
        if key not in self._cache:
            lin = self.linear_matrix
            eye = np.eye(lin.blocks.shape[-1])
            hinv = np.linalg.inv(eye - dt * self.theta * lin.blocks)
            expl = hinv @ (eye + dt * (1.0 - self.theta) * lin.blocks)
            self._cache[key] = (lin.with_blocks(hinv), lin.with_blocks(expl))
        return self._cache[key]

    def stable_dt(self, a=None):
        """Largest step allowed by the guard of the configured scheme."""
        if self.scheme == "rk4":
            lo, _ = density_bounds(self.density)
            return EXPLICIT_SAFETY * lo / (np.pi ** 2 * 2 * max(self.m, 1) ** 2)
        speed = max_speed(self, a) if a is not None else 0.0
        return np.inf if speed == 0 else CFL_SAFETY / (max(self.m, 1) * speed)

    # -- reprojection -----------------------------------------------------

    def reproject(self, a):
        """Remove the gradient part violating ``div P_m(rho u) = 0``."""
        q = self.pressure_op.solve(self.ops.div(self.mass.apply(a)))
        return a - self.ops.grad(q)


def build_system(m, density, scheme="imex", dt=1e-3, theta=0.5, forcing=None):
    """Assemble the operators for order ``m`` and bundle the integrator settings."""
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    if not dt > 0:
        raise StepSizeError(f"dt must be positive, got {dt}")
    if not 0 <= theta <= 1:
        raise ValueError(f"theta must lie in [0, 1], got {theta}")
    ops = assemble_operators(m, density)
    profile = resolve_profile(density, m)
    return GalerkinSystem(
        ops=ops,
        mass=assemble_mass(ops.basis, profile),
        pressure_op=assemble_pressure_operator(ops.basis, profile),
        scheme=scheme,
        dt=float(dt),
        theta=float(theta),
        forcing=forcing,
    )


def max_speed(system, a):
    """Max of ``|u|`` on the transport grid."""
    v, w = system.ops.fields(a)
    grid = system.ops.transport_grid
    vv = to_grid(v.coeffs, "cos", grid).real
    ww = to_grid(w.coeffs, "sin", grid).real
    return float(np.sqrt(np.max(vv ** 2 + ww ** 2)))


# -- right-hand side --------------------------------------------------------


def evaluate(system, t, a):
    """Full right-hand side with its by-products (pressure, transport, forcing)."""
    ops = system.ops
    n = ops.transport(a)
    f_ext = system.forcing_at(t)
    f = ops.lap * a - n
    if f_ext is not None:
        f = f + f_ext
    du, b = system.project_rhs(f)
    return Evaluation(du, b, n, f_ext)


def rhs(system, state):
    """Time derivative ``M^-1 (Lap u - N - P_m(rho grad p) + F)`` of the velocity vector."""
    return evaluate(system, state.t, state.a).du


def _derivative(system, t, a, linear=True):
    n = system.ops.transport(a)
    f_ext = system.forcing_at(t)
    g = -n if f_ext is None else f_ext - n
    if linear:
        g = g + system.ops.lap * a
    return system.projector @ g, n, f_ext


def _nonlinear(system, t, a):
    return _derivative(system, t, a, linear=False)


class Increments(NamedTuple):
    """Torus integrals over one step of ``|grad u|^2``, ``Re(u . N)`` and ``Re(u . F)``."""

    dissipation: float
    defect: float
    work: float


def _dot(x, y):
    return float(np.real(np.vdot(x, y)))


def _rk4(system, t, a, dt):
    ops = system.ops
    ks, inc = [], []
    stages = ((0.0, None), (0.5, 0), (0.5, 1), (1.0, 2))
    for c, prev in stages:
        s = a if prev is None else a + c * dt * ks[prev]
        du, tr, f_ext = _derivative(system, t + c * dt, s)
        ks.append(du)
        work = 0.0 if f_ext is None else _dot(s, f_ext)
        inc.append((ops.dissipation(s), _dot(s, tr), work))
    wts = np.array([1.0, 2.0, 2.0, 1.0]) * dt / 6.0
    a_new = a + (wts[0] * ks[0] + wts[1] * ks[1] + wts[2] * ks[2] + wts[3] * ks[3])
    totals = wts @ np.array(inc)
    return a_new, Increments(*map(float, totals))


def _imex(system, t, a, dt):
    """Crank-Nicolson (theta) on the viscous term, Heun on the rest."""
    ops, th = system.ops, system.theta
    hinv, expl = system.implicit_matrices(dt)
    base = expl @ a
    n0, tr0, f0 = _nonlinear(system, t, a)
    pred = base + dt * (hinv @ n0)
    n1, tr1, f1 = _nonlinear(system, t + dt, pred)
    a_new = base + (0.5 * dt) * (hinv @ (n0 + n1))
    # exact discrete energy balance of the scheme
    mid = 0.5 * (a + a_new)
    weighted = th * a_new + (1.0 - th) * a
    tr = 0.5 * (tr0 + tr1)
    work = 0.0
    if f0 is not None:
        work = dt * _dot(mid, 0.5 * (f0 + f1))
    return a_new, Increments(dt * ops.dissipation(mid, weighted), dt * _dot(mid, tr), work)


def _advance(system, t, a, dt):
    if system.scheme == "rk4":
        return _rk4(system, t, a, dt)
    return _imex(system, t, a, dt)


def check_step(system, dt, a=None):
    limit = system.stable_dt(a)
    if dt > limit * (1 + 1e-12):
        raise StepSizeError(f"dt={dt:g} exceeds the {system.scheme} stability guard {limit:.4g}")


def step(system, state, dt=None):
    """Advance one step of size ``dt`` (default: the system step)."""
    dt = system.dt if dt is None else float(dt)
    if not dt > 0:
        raise StepSizeError(f"dt must be positive, got {dt}")
    a_new, _ = _advance(system, state.t, state.a, dt)
    return SimState(state.t + dt, a_new)


# -- runs -----------------------------------------------------------------


@dataclass
class RunResult:
    """Sampled states and diagnostics of a run; ``error`` is set on abort."""

    states: list
    series: object
    reprojections: list
    error: Optional[str] = None
    steps: int = 0

    @property
    def aborted(self):
        return self.error is not None

    @property
    def final(self):
        return self.states[-1]


def step_schedule(T, dt):
    """Step sizes covering ``[0, T]``: uniform ``dt`` and a shorter last step if needed."""
    if T < 0:
        raise ValueError("T must be non-negative")
    n = int(np.ceil(T / dt - 1e-9))
    if n == 0:
        return np.zeros(0)
    steps = np.full(n, dt)
    last = T - (n - 1) * dt
    if abs(last - dt) > 1e-12 * dt:
        steps[-1] = last
    return steps


def run(system, initial, T, cadence=10.0, reproject_every=0, guard_factor=1e6, diagnostics=True,
        check_guard=True):
    """Integrate from ``initial`` to ``T`` and sample every ``1/cadence`` time units.

    Energy-type time integrals are accumulated every step with the scheme's
    own quadrature so that the discrete energy balance is closed. On
    non-finite values or energy above ``guard_factor * (E0 + 1)`` the run
    stops and the partial result is returned with ``error`` set.
    """
    from .diagnostics.norms import DiagnosticsSeries, sample_state

    dt = system.dt
    a = np.asarray(initial.a, dtype=complex)
    t0 = float(initial.t)
    if check_guard:
        check_step(system, dt, a)
    steps = step_schedule(T, dt)
    per_sample = max(1, int(round(1.0 / (cadence * dt)))) if cadence > 0 else max(len(steps), 1)
    series = DiagnosticsSeries()
    acc = np.zeros(3)
    e0 = _dot(a, system.mass.apply(a))
    cap = guard_factor * (e0 + 1.0)

    def record(t, a):
        ev = evaluate(system, t, a)
        state = SimState(t, a, ev.b)
        if diagnostics:
            series.append(sample_state(system, state, ev, acc))
        else:
            series.append_time(t)
        return state

    states = [record(t0, a)]
    reprojections = []
    t = t0
    for i, h in enumerate(steps, start=1):
        a, inc = _advance(system, t, a, h)
        t = t0 + (T if i == len(steps) else i * dt)
        acc += inc
        energy = _dot(a, system.mass.apply(a))
        if not (np.all(np.isfinite(a)) and np.isfinite(energy)) or energy > cap:
            msg = f"instability at t={t:.6g}: energy {energy:.3e} exceeds guard {cap:.3e}"
            log.warning(msg)
            return RunResult(states, series, reprojections, msg, i)
        if reproject_every and i % reproject_every == 0:
            before = system.ops.div(system.mass.apply(a))
            a = system.reproject(a)
            reprojections.append((t, float(np.linalg.norm(before))))
            log.info("reprojected at t=%.6g (divergence %.3e)", t, reprojections[-1][1])
        if i % per_sample == 0 or i == len(steps):
            if check_guard and system.scheme == "imex":
                limit = system.stable_dt(a)
                if dt > limit * (1 + 1e-12):
                    msg = f"CFL guard fired at t={t:.6g}: dt={dt:g} > {limit:.4g}"
                    states.append(record(t, a))
                    return RunResult(states, series, reprojections, msg, i)
            states.append(record(t, a))
    return RunResult(states, series, reprojections, None, len(steps))
