"""Command-line front end.

Exit codes: 0 when every asserted property passes, 2 for configuration
errors, 3 for numerical aborts, 4 when a property fails.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, parse_config, to_text
from .constraint import PressureSolveError, correct_initial_data
from .density import DensityProfile
from .diagnostics import experiments as exps
from .diagnostics.hardy import BUILTIN_FAMILY, HardyInputError, ProbeFunction, hardy_sweep
from .diagnostics.norms import energy_identity_residual
from .dynamics import MassFactorizationError, SimState, StepSizeError, build_system, run
from .initial import initial_state
from .io import write_csv, write_json, write_manifest, write_snapshot, write_table
from .manufactured import manufactured_forcing, manufactured_shear, refinement_study

EXIT_OK, EXIT_CONFIG, EXIT_ABORT, EXIT_PROPERTY = 0, 2, 3, 4
COMMANDS = ("run", "sweep-eps", "sweep-m", "hardy", "stability", "manufactured", "global2d")
OUTPUT_ROOT_ENV = "ANELASTIC_OUTPUT_ROOT"

log = logging.getLogger("anelastic")


class Aborted(RuntimeError):
    """A run stopped on the instability guard."""


def _density(cfg, eps=None):
    kw = cfg.density_kwargs()
    if eps is not None:
        kw["eps"] = eps
    return DensityProfile(**kw)


def _system(cfg, m=None, density=None, dt=None):
    return build_system(m or cfg.m, density or _density(cfg), cfg.scheme, dt or cfg.dt, cfg.theta)


def _manufactured_case(cfg, density):
    if cfg.forcing_profile:
        return manufactured_shear(cfg.forcing_profile, density)
    return manufactured_forcing(cfg.forcing_psi, density, cfg.forcing_pressure)


def _monotone(x):
    return bool(np.all(np.diff(x) <= 1e-12 * np.abs(x[:-1])))


# -- subcommands -------------------------------------------------------------
# each returns (summary, aborted, written file names)


def cmd_run(cfg, out):
    system = _system(cfg)
    case = None
    if cfg.forcing == "manufactured":
        case = _manufactured_case(cfg, system.density)
        system = system.with_settings(forcing=case.forcing(system.ops))
        v0, w0 = case.exact_fields(0.0, system.m)
        fixed = correct_initial_data(v0, w0, system.basis, system.density)
        init, corr = SimState(0.0, system.ops.vector(fixed.v, fixed.w)), fixed.correction_norm
    else:
        init, corr = initial_state(system, cfg.family, **cfg.family_params())
    res = run(system, init, cfg.T, cfg.cadence, cfg.reproject_every, cfg.guard_factor)
    s = res.series
    write_csv(out / "series.csv", s)
    for tag, st in (("initial", res.states[0]), ("final", res.final)):
        v, w = system.ops.fields(st.a)
        write_snapshot(out / f"snapshot_{tag}.bin", st.t, v, w, system.density)
    resid = energy_identity_residual(s)
    e0 = s["energy"][0]
    closure = np.abs(s["energy"] + s["dissipation"] + s["defect_integral"] - s["work_integral"] - e0)
    checks = {
        "completed": not res.aborted,
        "divergence": bool(np.max(s["div_residual"]) <= cfg.div_tol),
        "energy_law": bool(np.nanmax(s["energy_law_residual"]) <= cfg.law_tol),
        "energy_balance": bool(np.max(closure) <= cfg.identity_tol * max(e0, 1.0)),
    }
    if cfg.family == "shear" and case is None:
        checks["energy_decreasing"] = _monotone(s["energy"])
    summary = {
        "command": "run",
        "steps": res.steps,
        "error": res.error,
        "correction_norm": corr,
        "final_time": float(s["t"][-1]),
        "max_div_residual": float(np.max(s["div_residual"])),
        "max_energy_law_residual": float(np.nanmax(s["energy_law_residual"])),
        "energy_identity_residual": float(resid[-1]),
        "defect_integral": float(s["defect_integral"][-1]),
        "reprojections": [{"t": t, "divergence": d} for t, d in res.reprojections],
        "checks": checks,
    }
    if case is not None:
        v, w = system.ops.fields(res.final.a)
        summary["manufactured_error"] = case.error(v, w, res.final.t)
    summary["pass"] = all(checks.values())
    if res.aborted:
        summary["pass"] = False
    files = ["series.csv", "snapshot_initial.bin", "snapshot_final.bin"]
    return summary, res.aborted, files


def cmd_sweep_eps(cfg, out):
    sweep = exps.epsilon_sweep(cfg.alpha, cfg.eps_list, cfg.m, cfg.dt, cfg.T, cfg.scheme, cfg.theta, cfg.delta,
                               cfg.family, cfg.cadence, cfg.bound, **cfg.family_params())
    files = []
    header = ["eps"] + list(exps.ESTIMATE_NORMS) + ["energy", "energy_monotone", "error"]
    rows = []
    for i, c in enumerate(sweep.cells):
        rows.append([c.key] + [c.sup_norms.get(n, np.nan) for n in exps.ESTIMATE_NORMS]
                    + [c.sup_norms.get("energy", np.nan), c.energy_monotone, c.error or ""])
        if c.series is not None:
            name = f"series_eps_{i:02d}.csv"
            write_csv(out / name, c.series)
            files.append(name)
    write_table(out / "sweep.csv", header, rows)
    files.append("sweep.csv")
    summary = {"command": "sweep-eps", **sweep.summary()}
    return summary, False, files


def cmd_sweep_m(cfg, out):
    sw = exps.m_sweep(_density(cfg), list(cfg.m_list), cfg.dt, cfg.T, cfg.scheme, cfg.theta, cfg.family,
                      cfg.cadence, **cfg.family_params())
    diffs = [d for _, _, d in sw.differences]
    res = [sw.identity_residual[m] for m in sw.ms]
    checks = {
        "differences_shrink_10x": all(b * 10 <= a for a, b in zip(diffs, diffs[1:])),
        "identity_residual_halves": all(b * 2 <= a for a, b in zip(res, res[1:])),
        "completed": all(e is None for e in sw.errors.values()),
    }
    rows = [[a, b, d] for a, b, d in sw.differences]
    write_table(out / "differences.csv", ["m", "next_m", "l2_difference"], rows)
    summary = {"command": "sweep-m", **sw.summary(), "checks": checks, "pass": all(checks.values())}
    return summary, not checks["completed"], ["differences.csv"]


def cmd_hardy(cfg, out):
    family = list(BUILTIN_FAMILY) + [ProbeFunction.from_expression(e) for e in cfg.hardy_functions]
    reports = hardy_sweep(cfg.hardy_k, cfg.hardy_eps, family, cfg.hardy_bound)
    rows = []
    for rep in reports:
        for name, ratios in rep.ratios.items():
            for e, r in zip(rep.eps, ratios):
                rows.append([rep.k, name, e, r])
    write_table(out / "hardy.csv", ["k", "function", "eps", "ratio"], rows)
    summary = {
        "command": "hardy",
        "reports": [r.summary() for r in reports],
        "pass": all(r.passed for r in reports),
    }
    return summary, False, ["hardy.csv"]


def cmd_stability(cfg, out):
    system = _system(cfg)
    base = initial_state(system, cfg.family, **cfg.family_params()).state.a
    params = dict(cfg.family_params(), seed=cfg.perturbation_seed, amplitude=1.0)
    direction = initial_state(system, "random", **params).state.a
    same = exps.stability_experiment(system, base, base.copy(), cfg.T, cfg.cadence)
    full = exps.stability_experiment(system, base, base + cfg.perturbation * direction, cfg.T, cfg.cadence)
    half = exps.stability_experiment(system, base, base + 0.5 * cfg.perturbation * direction, cfg.T, cfg.cadence)
    fine = exps.stability_experiment(system.with_settings(dt=cfg.dt / 2), base, base + cfg.perturbation * direction,
                                     cfg.T, cfg.cadence)
    scaling = float(full.distance[-1] / half.distance[-1])
    dt_change = abs(fine.ratio / full.ratio - 1.0)
    write_table(out / "distance.csv", ["t", "identical", "full", "half"],
                zip(full.t, same.distance, full.distance, half.distance))
    checks = {
        "identical_zero": bool(np.all(same.distance == 0.0)),
        "scaling": abs(scaling / 4.0 - 1.0) <= cfg.scaling_tol,
        "dt_halving": dt_change <= cfg.dt_tol,
    }
    summary = {
        "command": "stability",
        "identical": same.summary(),
        "full": full.summary(),
        "half": half.summary(),
        "half_dt": fine.summary(),
        "scaling_ratio": scaling,
        "dt_halving_change": dt_change,
        "checks": checks,
        "pass": all(checks.values()),
    }
    return summary, False, ["distance.csv"]


def cmd_manufactured(cfg, out):
    case = _manufactured_case(cfg, _density(cfg))
    rows = refinement_study(case, cfg.manufactured_m, cfg.T, cfg.dt, cfg.scheme, cfg.theta)
    write_table(out / "refinement.csv", ["m", "error", "div_residual", "aborted"],
                [[r.m, r.error, r.divergence, r.aborted] for r in rows])
    drops = [a.error / b.error for a, b in zip(rows, rows[1:])]
    checks = {"error_drop": all(d >= cfg.manufactured_target for d in drops)}
    summary = {
        "command": "manufactured",
        "rows": [r.__dict__ for r in rows],
        "error_drops": drops,
        "target_drop": cfg.manufactured_target,
        "checks": checks,
        "pass": all(checks.values()),
    }
    return summary, any(r.aborted for r in rows), ["refinement.csv"]


def cmd_global2d(cfg, out):
    system = _system(cfg)
    init = initial_state(system, cfg.family, **cfg.family_params()).state
    g = exps.global2d_check(system, init, cfg.T, cfg.cadence)
    write_table(out / "energy.csv", ["t", "E", "loglog_E"], zip(g.t, g.E, g.loglog))
    checks = {"no_blowup": g.passed}
    if cfg.family == "shear" and cfg.alpha == 0 and cfg.T > 0:
        checks["shear_decay_rate"] = abs(g.decay_rate / (2 * np.pi ** 2) - 1.0) <= cfg.rate_tol
    if cfg.family == "shear" or cfg.amplitude <= 1e-3:
        checks["E_decreasing"] = _monotone(g.E - np.e)
    summary = {"command": "global2d", **g.summary(), "checks": checks, "pass": all(checks.values())}
    return summary, g.error is not None, ["energy.csv"]


HANDLERS = {
    "run": cmd_run,
    "sweep-eps": cmd_sweep_eps,
    "sweep-m": cmd_sweep_m,
    "hardy": cmd_hardy,
    "stability": cmd_stability,
    "manufactured": cmd_manufactured,
    "global2d": cmd_global2d,
}


def output_dir(cfg, command, override=None):
    """Output directory; relative paths resolve under ``$ANELASTIC_OUTPUT_ROOT`` when set."""
    path = Path(override or cfg.output)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not path.is_absolute():
        path = Path(root) / path
    return path / command


HELP = {
    "run": "single run with diagnostics series and final snapshot",
    "sweep-eps": "sup-in-time weighted norms across the eps list",
    "sweep-m": "terminal differences and identity residuals across orders",
    "hardy": "weighted inequality ratios over k, eps and probe functions",
    "stability": "distance growth between perturbed trajectories",
    "manufactured": "refinement study against a forced exact solution",
    "global2d": "long-horizon boundedness of E(t) and its decay rate",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="anelastic", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("-c", "--config", type=Path, help="config file (key = value with sections)")
        p.add_argument("-s", "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("-o", "--output", help="output directory (default: config 'output')")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        text = args.config.read_text(encoding="utf-8") if args.config else ""
        cfg = parse_config(text, args.overrides)
    except (OSError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = output_dir(cfg, args.command, args.output)
    out.mkdir(parents=True, exist_ok=True)
    try:
        summary, aborted, files = HANDLERS[args.command](cfg, out)
    except (StepSizeError, HardyInputError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PressureSolveError, MassFactorizationError, FloatingPointError) as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    write_json(out / "summary.json", summary)
    write_manifest(out, args.command, to_text(cfg), files + ["summary.json"])
    status = "PASS" if summary.get("pass") else "FAIL"
    print(f"{args.command}: {status} ({out})")
    if aborted:
        return EXIT_ABORT
    return EXIT_OK if summary.get("pass") else EXIT_PROPERTY


if __name__ == "__main__":
    sys.exit(main())


__all__ = ["COMMANDS", "main", "output_dir"]
