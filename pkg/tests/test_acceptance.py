"""Acceptance criteria, one test each.

Every test records a ``criterion N [name]: PASS/FAIL (details)`` line that
is printed immediately and again in the terminal summary, then asserts the
criterion at its stated tolerance.
"""
import time

import numpy as np
import pytest

from anelastic.basis import make_basis, multiply_project
from anelastic.constraint import PressureSolveError, assemble_pressure_operator, correct_initial_data
from anelastic.density import DensityProfile
from anelastic.diagnostics.experiments import (
    epsilon_sweep,
    global2d_check,
    m_sweep,
    perturbation_scaling,
    stability_experiment,
)
from anelastic.diagnostics.hardy import hardy_check, hardy_sweep
from anelastic.dynamics import SimState, build_system, run
from anelastic.initial import initial_state, random_fields, shear_fields
from anelastic.manufactured import manufactured_forcing, refinement_study

from conftest import ACCEPTANCE_LINES, random_field
from oracles import incompressible_rk4, leray_projection

UNIT = DensityProfile(0, 1.0)
VAR = DensityProfile(2, 0.5)


def record(number, name, ok, details):
    line = f"criterion {number} [{name}]: {'PASS' if ok else 'FAIL'} ({details})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def _max_abs(a):
    return float(np.max(np.abs(a)))


def test_constraint_preservation():
    t0 = time.perf_counter()
    system = build_system(8, VAR, "imex", 1e-3)
    res = run(system, initial_state(system, "random").state, 1.0)
    elapsed = time.perf_counter() - t0
    div = res.series["div_residual"]
    ok = div[0] <= 1e-10 and np.max(div) <= 1e-6 and elapsed <= 60 and not res.aborted
    assert record(1, "constraint preservation", ok,
                  f"residual(0)={div[0]:.2e}, max={np.max(div):.2e}, runtime={elapsed:.1f}s")


@pytest.mark.slow
def test_discrete_energy_law():
    system = build_system(8, VAR)
    v, w = shear_fields(8)
    res = run(system, SimState(0.0, system.ops.vector(v, w)), 0.5)
    law = float(np.max(res.series["energy_law_residual"]))
    defect = float(np.max(np.abs(res.series["defect"])))
    sweep = m_sweep(VAR, [8, 16], 2.5e-5, 0.5, decay=3.0)
    r8, r16 = sweep.identity_residual[8], sweep.identity_residual[16]
    ok = law <= 1e-8 and defect <= 1e-14 and r16 <= r8 / 2
    assert record(2, "discrete energy law", ok,
                  f"shear per-step law={law:.2e}, defect={defect:.1e}; identity residual m=8 {r8:.2e}, "
                  f"m=16 {r16:.2e}, shrink {r8 / r16:.1f}x")


def test_shear_decay_oracle():
    t0 = time.perf_counter()
    system = build_system(8, UNIT, "imex", 1e-4)
    v, w = shear_fields(8)
    res = run(system, SimState(0.0, system.ops.vector(v, w)), 0.5, cadence=1000.0, diagnostics=False)
    elapsed = time.perf_counter() - t0
    err = 0.0
    for s in res.states:
        amp = system.ops.fields(s.a)[0].coeffs[8, 1].real
        err = max(err, abs(amp - np.exp(-np.pi ** 2 * s.t)))
    ok = err <= 1e-6 and elapsed <= 60 and len(res.states) == 501
    assert record(3, "shear decay oracle", ok, f"max amplitude error={err:.2e}, runtime={elapsed:.1f}s")


def test_nonlinear_oracle():
    rng = np.random.default_rng(4)
    parities = ["cos", "sin"]
    worst = 0.0
    for i in range(100):
        p, q = parities[i % 2], parities[(i // 2) % 2]
        f, g = random_field(8, p, rng), random_field(8, q, rng)
        exact = multiply_project(f, g, 8, "exact").coeffs
        oracle = multiply_project(f, g, 8, "oracle").coeffs
        worst = max(worst, _max_abs(exact - oracle) / _max_abs(oracle))
    assert record(4, "nonlinear oracle", worst <= 1e-12, f"max relative difference over 100 pairs={worst:.2e}")


def test_constant_density_reduction():
    m = 8
    v, w = random_fields(m, seed=3)
    fixed = correct_initial_data(v, w, make_basis(m), UNIT)
    pv, pw = leray_projection(v, w)
    proj = max(_max_abs(fixed.v.coeffs - pv.coeffs), _max_abs(fixed.w.coeffs - pw.coeffs))

    dt, T = 2.5e-4, 0.1
    system = build_system(m, UNIT, "rk4", dt)
    res = run(system, SimState(0.0, system.ops.vector(pv, pw)), T, diagnostics=False)
    sv, sw = system.ops.fields(res.final.a)
    ov, ow = incompressible_rk4(pv, pw, T, dt)
    traj = max(_max_abs(sv.coeffs - ov.coeffs), _max_abs(sw.coeffs - ow.coeffs))
    ok = proj <= 1e-11 and traj <= 1e-9
    assert record(5, "constant-density reduction", ok, f"projection diff={proj:.2e}, T=0.1 run diff={traj:.2e}")


def test_hardy_uniformity():
    reports = hardy_sweep()
    worst = max(rep.spread(name) for rep in reports for name in rep.ratios)
    spot1 = hardy_check(lambda z: 1.0 + 0 * z, lambda z: 0 * z, 1, 0.0)
    spot2 = hardy_check(lambda z: z, lambda z: 1.0 + 0 * z, -2, 0.0)
    spots_ok = abs(spot1 - 2.0) <= 1e-10 and abs(spot2 - 1.0) <= 1e-10
    failing = [f"k={rep.k:g} f={name} spread={rep.spread(name):.2f}" for rep in reports for name in rep.ratios
               if rep.spread(name) > 2.0]
    ok = spots_ok and not failing
    details = f"spot values {spot1:.12f}, {spot2:.12f}; worst max/min spread={worst:.2f}"
    if failing:
        details += "; over bound: " + ", ".join(failing)
    assert record(6, "Hardy eps-uniformity", ok, details)


def test_pressure_operator_structure():
    rows, ok = [], True
    for alpha in (2, 3):
        for m in (4, 8):
            conds = []
            for eps in (1.0, 0.1, 0.01):
                try:
                    op = assemble_pressure_operator(make_basis(m), DensityProfile(alpha, eps))
                except PressureSolveError as exc:
                    rows.append(f"alpha={alpha} m={m} eps={eps:g}: {exc}")
                    ok = False
                    continue
                A = op.matrix
                sym = _max_abs(A - A.conj().T) / _max_abs(A)
                pd = op.min_eigenvalue > 0
                ok &= sym <= 1e-12 and pd
                conds.append(op.condition)
                rows.append(f"alpha={alpha} m={m} eps={eps:g}: sym={sym:.1e} min_eig={op.min_eigenvalue:.3e} "
                            f"cond={op.condition:.3e}")
            ok &= all(b >= a for a, b in zip(conds, conds[1:]))
    print("\n".join(rows))
    assert record(7, "pressure operator structure", ok,
                  f"{len(rows)} cases symmetric and definite, condition non-decreasing as eps decreases")


def test_manufactured_convergence():
    t0 = time.perf_counter()
    case = manufactured_forcing("exp(-t)*sin(pi*z)**2", VAR)
    rows = refinement_study(case, [4, 8], 0.5, 1e-3)
    elapsed = time.perf_counter() - t0
    drop = rows[0].error / rows[1].error
    ok = drop >= 100 and elapsed <= 120 and not any(r.aborted for r in rows)
    assert record(8, "manufactured convergence", ok,
                  f"error m=4 {rows[0].error:.3e}, m=8 {rows[1].error:.3e}, drop {drop:.2f}x, runtime={elapsed:.1f}s")


def test_stability_experiment():
    system = build_system(8, VAR)
    base = initial_state(system, "random").state.a
    direction = initial_state(system, "random", seed=1).state.a
    same = stability_experiment(system, base, base.copy(), 0.5)
    zero = bool(np.all(same.distance == 0.0))
    _, _, scaling = perturbation_scaling(system, base, direction, 1e-3, 0.5)
    other = base + 1e-3 * direction
    coarse = stability_experiment(system, base, other, 0.5)
    fine = stability_experiment(system.with_settings(dt=5e-4), base, other, 0.5)
    change = abs(fine.ratio / coarse.ratio - 1)
    ok = zero and abs(scaling / 4 - 1) <= 0.2 and change <= 0.05
    assert record(9, "stability experiment", ok,
                  f"identical data zero={zero}, delta vs delta/2 ratio={scaling:.4f}, "
                  f"Gronwall ratio change under dt halving={change:.2e}")


def test_epsilon_sweep():
    sw = epsilon_sweep(2.0, [1.0, 0.1, 0.01], 8, 1e-3, 0.5, bound=10.0)
    spreads = sw.summary()["spread"]
    dists = [d for _, _, d in sw.distances]
    ok = sw.uniform and sw.distances_decreasing and all(c.error is None for c in sw.cells)
    assert record(10, "eps-sweep uniformity", ok,
                  "spreads " + ", ".join(f"{k}={v:.2f}" for k, v in spreads.items())
                  + "; distances " + ", ".join(f"{d:.2e}" for d in dists))


def test_global_2d():
    t0 = time.perf_counter()
    system = build_system(8, VAR)
    g = global2d_check(system, initial_state(system, "random").state, 10.0)
    unit = build_system(8, UNIT)
    v, w = shear_fields(8)
    shear = global2d_check(unit, SimState(0.0, unit.ops.vector(v, w)), 1.0)
    elapsed = time.perf_counter() - t0
    rel = abs(shear.decay_rate / (2 * np.pi ** 2) - 1)
    ok = g.error is None and g.finite and rel <= 0.05 and elapsed <= 300
    assert record(11, "2D global boundedness", ok,
                  f"guard fired={g.error is not None}, sup E={np.max(g.E):.4f}, shear rate/2pi^2-1={rel:.2e}, "
                  f"runtime={elapsed:.1f}s")
