"""Command-line entry point: ``impurity-nls <command> [--config PATH] [--out DIR]``.

Exit codes: 0 success, 1 a study's built-in check failed, 2 invalid config,
3 numerical failure, 4 guard refusal (resolution, step size, memory).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, config, kernels
from .errors import ConfigError, GuardViolation, NumericalFailure

EXIT_OK = 0
EXIT_STUDY_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_GUARD = 4


class _Reporter:
    def __init__(self, quiet: bool):
        self.quiet = quiet

    def __call__(self, msg: str) -> None:
        if not self.quiet:
            print(msg)


def _grid_and_datum(cfg):
    from .core import Grid1D, gaussian

    grid = Grid1D(cfg["L"], cfg["M"])
    return grid, gaussian(grid, cfg["sigma"])


def _check_times(cfg, step_key: str) -> None:
    step = cfg[step_key]
    if not step > 0:
        raise ConfigError(f"{step_key} must be positive, got {step}")
    for t in cfg.get("sample_times", []):
        n = round(t / step)
        if t < 0 or t > cfg["T"] + 1e-12 or abs(n * step - t) > 1e-9 * max(1.0, t):
            raise ConfigError(f"sample time {t} must lie in [0, T] on the {step_key}={step} mesh")


# -- commands -----------------------------------------------------------------


def _simulate_hartree(cfg, out: Path, say, jobs: int) -> int:
    from .core import write_state_csv
    from .experiments import write_rows
    from .hartree import HartreeRun, check_time_step, conserved_series, evolve_hartree
    from .potentials import ScaledBump, get_profile

    grid, phi = _grid_and_datum(cfg)
    b = ScaledBump(cfg["eps"], get_profile(cfg["profile"]))
    b.check_resolved(grid)
    check_time_step(cfg["dt"], b, grid)
    run = HartreeRun(phi, b, cfg["mu"], cfg["dt"], cfg["T"], cfg["stride"])
    traj = evolve_hartree(run)
    rows = conserved_series(traj, b, cfg["mu"])
    if not np.all(np.isfinite(np.array(rows))):
        raise NumericalFailure("non-finite Hartree observables")
    write_rows(out / "conserved.csv", ["t", "l2_norm", "energy", "coupling"], rows)
    write_rows(
        out / "coupling.csv",
        ["t", "coupling"],
        list(zip(traj.step_times, traj.couplings)),
    )
    write_state_csv(out / "final_state.csv", traj.final, traj.times[-1])
    n0, e0 = rows[0][1], rows[0][2]
    say(f"hartree: T={cfg['T']} norm drift {abs(rows[-1][1] - n0) / n0:.3e}, "
        f"energy drift {abs(rows[-1][2] - e0) / abs(e0):.3e}")
    return EXIT_OK


def _simulate_delta(cfg, out: Path, say, jobs: int) -> int:
    from . import delta
    from .core import write_state_csv
    from .experiments import write_rows

    _check_times(cfg, "delta")
    grid, phi = _grid_and_datum(cfg)
    n_max = int(round(cfg["T"] / cfg["delta"]))
    traj = delta.solve_charge(phi, cfg["mu"], cfg["delta"], n_max)
    if not np.all(np.isfinite(traj.q)):
        raise NumericalFailure(f"non-finite charge (delta={cfg['delta']})")
    traj.write_csv(out / "charge.csv")
    times = [0.0] + [t for t in cfg["sample_times"] if t > 0]
    mass, kin = delta.whole_line_moments(phi, traj, times)
    energy = delta.delta_energy_series(phi, traj, times)
    write_rows(out / "energy.csv", ["t", "mass", "kinetic", "energy"], list(zip(times, mass, kin, energy)))
    for t in cfg["sample_times"]:
        write_state_csv(out / f"state_t{t:.6g}.csv", delta.reconstruct(phi, traj, t), t)
    say(f"delta: T={cfg['T']} max iterations {int(traj.iterations.max())}, "
        f"energy drift {abs(energy[-1] - energy[0]) / abs(energy[0]):.3e}")
    return EXIT_OK


def _simulate_manybody(cfg, out: Path, say, jobs: int) -> int:
    from .core import l2_norm
    from .experiments import write_rows
    from .hartree import check_time_step
    from .manybody import build_factorized, check_memory, manybody_trajectory, reduced_density
    from .potentials import ScaledBump, get_profile

    _check_times(cfg, "dt")
    check_memory(cfg["M"], cfg["N"])
    grid, phi = _grid_and_datum(cfg)
    b = ScaledBump(cfg["eps"], get_profile(cfg["profile"]))
    b.check_resolved(grid)
    check_time_step(cfg["dt"], b, grid)
    phi = phi * (1.0 / l2_norm(phi))
    psi0 = build_factorized(phi, cfg["N"])
    rows = []
    gamma = None
    for t, psi in manybody_trajectory(psi0, b, cfg["mu"], cfg["dt"], cfg["sample_times"]):
        if not np.all(np.isfinite(psi.amplitudes)):
            raise NumericalFailure(f"non-finite many-body amplitudes at t={t}")
        gamma = reduced_density(psi)
        rows.append((t, psi.norm(), psi.symmetry_residual(), gamma.trace(), gamma.eigenvalues()[0]))
    write_rows(out / "observables.csv", ["t", "norm", "symmetry_residual", "trace", "top_eigenvalue"], rows)
    gamma.write_csv(out / "gamma_final.csv")
    gamma.write_eigenvalues_csv(out / "gamma_final_eigenvalues.csv")
    say(f"manybody: N={cfg['N']} t={rows[-1][0]} norm drift {abs(rows[-1][1] - psi0.norm()):.3e}, "
        f"top eigenvalue {rows[-1][4]:.6f}")
    return EXIT_OK


def _study_eps(cfg, out: Path, say, jobs: int) -> int:
    from .experiments import EpsStudyConfig, run_eps_study

    study = EpsStudyConfig.from_dict(cfg)
    study.check_guards()
    res = run_eps_study(study, out, jobs)
    for e, d in zip(res.eps, res.sup_dist):
        say(f"eps={e:<8g} sup_t ||u - phi|| = {d:.6e}")
    if res.fit is not None:
        say(f"log-log slope {res.fit.slope:.4f} (floor {study.min_slope})")
    say(f"strictly decreasing: {res.monotone}; slope ok: {res.slope_ok}")
    return EXIT_OK if res.passed else EXIT_STUDY_FAILED


def _study_chaos(cfg, out: Path, say, jobs: int) -> int:
    from .experiments import ChaosStudyConfig, run_chaos_study

    study = ChaosStudyConfig.from_dict(cfg)
    study.check_guards()
    res = run_chaos_study(study, out, jobs)
    s = res.summary()
    for N, dh, dd in zip(s["N"], s["d_hartree"], s["d_delta"]):
        say(f"N={N} t={s['t']:g}: d_hartree={dh:.6e} d_delta={dd:.6e}")
    say(f"d_hartree strictly decreasing: {res.decreasing}; triangle inequality: {res.triangle_ok}")
    return EXIT_OK if res.passed else EXIT_STUDY_FAILED


RUNNERS = {
    "simulate-hartree": _simulate_hartree,
    "simulate-delta": _simulate_delta,
    "simulate-manybody": _simulate_manybody,
    "study-eps": _study_eps,
    "study-chaos": _study_chaos,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="impurity-nls", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in RUNNERS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="YAML file of overrides for this command")
        s.add_argument("--out", type=Path, default=None, help=f"output directory (default runs/{name})")
        s.add_argument("--jobs", type=int, default=1, help="worker processes for studies")
        s.add_argument("--quiet", action="store_true")
    s = sub.add_parser("selftest")
    s.add_argument("--quiet", action="store_true")
    return p


def dispatch(args) -> int:
    say = _Reporter(args.quiet)
    if args.command == "selftest":
        from . import selftest

        return EXIT_OK if selftest.run(say) else EXIT_STUDY_FAILED
    if args.jobs < 1:
        raise ConfigError(f"--jobs must be >= 1, got {args.jobs}")
    cfg = config.load(args.command, args.config)
    out = args.out if args.out is not None else Path("runs") / args.command
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(config.dump(args.command, cfg))
    started = time.perf_counter()
    code = RUNNERS[args.command](cfg, out, say, args.jobs)
    meta = {
        "version": __version__,
        "command": args.command,
        "kernel_backend": kernels.BACKEND_NAME,
        "jobs": args.jobs,
        "elapsed_seconds": round(time.perf_counter() - started, 3),
        "exit_code": code,
        "parameters": cfg,
    }
    (out / "metadata.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    say(f"outputs in {out}")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return dispatch(args)
    except GuardViolation as exc:
        print(f"guard refused ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_GUARD
    except NumericalFailure as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"invalid configuration ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
