"""Convergence studies comparing the three levels of dynamics.

``run_eps_study`` measures how fast the concentrated Hartree flow approaches
the point-nonlinearity flow as the bump narrows. ``run_chaos_study`` measures
the distance between the one-particle reduced density of the N-body flow and
both one-body flows, for small N.

Both studies take a parallel map over their parameter list. Each worker
rebuilds its inputs from plain numbers, writes its own CSV and returns its
rows; aggregation happens afterwards in list order, so output files do not
depend on ``jobs``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import delta as delta_solver
from .core import Grid1D, WaveFunction, gaussian, l2_norm
from .errors import ConfigError, NumericalFailure
from .hartree import check_time_step, hartree_at_times
from .manybody import (
    build_factorized,
    check_memory,
    manybody_trajectory,
    reduced_density,
    trace_distance,
)
from .potentials import ScaledBump, epsilon_of_N, get_profile

#: slack in the numerical triangle inequality
TRIANGLE_SLACK = 1e-6


def _is_multiple(t: float, step: float) -> bool:
    n = round(t / step)
    return abs(n * step - t) <= 1e-9 * max(1.0, abs(t))


def _check_commensurate(dt: float, delta: float, sample_times, T: float) -> None:
    fine, coarse = sorted((dt, delta))
    if not _is_multiple(coarse, fine):
        raise ConfigError(f"dt={dt} and delta={delta} must divide one another")
    for t in sample_times:
        if t < 0 or t > T + 1e-12:
            raise ConfigError(f"sample time {t} outside [0, T={T}]")
        if not _is_multiple(t, coarse):
            raise ConfigError(f"sample time {t} is not a multiple of dt={dt} and delta={delta}")


def _finite(name: str, values, **context) -> None:
    if not np.all(np.isfinite(values)):
        where = ", ".join(f"{k}={v}" for k, v in context.items())
        raise NumericalFailure(f"non-finite {name} ({where})")


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def write_rows(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)] + [",".join(_fmt(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def _map(func, items, jobs: int):
    if jobs <= 1 or len(items) <= 1:
        return [func(*item) for item in items]
    with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as pool:
        futures = [pool.submit(func, *item) for item in items]
        return [f.result() for f in futures]


# ---------------------------------------------------------------------------
# rate fitting


@dataclass(frozen=True)
class RateFit:
    xs: tuple[float, ...]
    ys: tuple[float, ...]
    slope: float
    intercept: float
    residual: float

    def predict(self, x):
        return np.exp(self.intercept) * np.asarray(x, dtype=float) ** self.slope


def fit_rate(xs, ys) -> RateFit:
    """Least-squares line through ``(log x, log y)``; ``residual`` is the max log misfit."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be 1-d arrays of equal length")
    if xs.size < 3:
        raise ValueError(f"need at least 3 points, got {xs.size}")
    if not (np.all(xs > 0) and np.all(ys > 0)):
        raise ValueError("rate fit needs strictly positive inputs")
    lx, ly = np.log(xs), np.log(ys)
    slope, intercept = np.polyfit(lx, ly, 1)
    if not math.isfinite(slope):
        raise ValueError("fitted slope is not finite")
    residual = float(np.max(np.abs(ly - (slope * lx + intercept))))
    return RateFit(tuple(xs), tuple(ys), float(slope), float(intercept), residual)


# ---------------------------------------------------------------------------
# eps -> 0 study


@dataclass(frozen=True)
class EpsStudyConfig:
    L: float = 20.0
    M: int = 4096
    sigma: float = 1.0
    mu: float = 1.0
    eps_list: tuple[float, ...] = (0.4, 0.2, 0.1, 0.05)
    dt: float = 2.5e-4
    delta: float = 2.5e-4
    T: float = 1.0
    sample_times: tuple[float, ...] = (0.25, 0.5, 0.75, 1.0)
    profile: str = "gaussian"
    min_slope: float = 0.25

    def __post_init__(self) -> None:
        object.__setattr__(self, "eps_list", tuple(float(e) for e in self.eps_list))
        object.__setattr__(self, "sample_times", tuple(float(t) for t in self.sample_times))
        if len(set(self.eps_list)) != len(self.eps_list):
            raise ConfigError(f"eps_list has repeated entries: {self.eps_list}")
        if list(self.eps_list) != sorted(self.eps_list, reverse=True):
            raise ConfigError(f"eps_list must be descending, got {list(self.eps_list)}")
        if self.mu < 0:
            raise ConfigError(f"mu must be nonnegative, got {self.mu}")
        if not self.T > 0:
            raise ConfigError(f"T must be positive, got {self.T}")
        _check_commensurate(self.dt, self.delta, self.sample_times, self.T)

    @classmethod
    def from_dict(cls, cfg: dict) -> EpsStudyConfig:
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in cfg.items()})

    @property
    def grid(self) -> Grid1D:
        return Grid1D(self.L, self.M)

    def check_guards(self) -> None:
        """Resolution and step guards for every eps, before any computation."""
        grid = self.grid
        profile = get_profile(self.profile)
        for eps in self.eps_list:
            b = ScaledBump(eps, profile)
            b.check_resolved(grid)
            check_time_step(self.dt, b, grid)


@dataclass
class EpsStudyResult:
    config: EpsStudyConfig
    eps: list[float]
    sup_dist: list[float]
    per_time: dict[float, list[tuple[float, float]]] = field(default_factory=dict)
    fit: RateFit | None = None

    @property
    def monotone(self) -> bool:
        return all(b < a for a, b in zip(self.sup_dist, self.sup_dist[1:]))

    @property
    def slope_ok(self) -> bool:
        return self.fit is not None and self.fit.slope >= self.config.min_slope

    @property
    def passed(self) -> bool:
        return self.monotone and self.slope_ok

    def summary(self) -> dict:
        return {
            "study": "eps",
            "eps": self.eps,
            "sup_dist": self.sup_dist,
            "sup_dist_sq": [d * d for d in self.sup_dist],
            "fit": None if self.fit is None else {
                "slope": self.fit.slope,
                "intercept": self.fit.intercept,
                "residual": self.fit.residual,
            },
            "checks": {
                "strictly_decreasing": self.monotone,
                "slope_floor": self.config.min_slope,
                "slope_ok": self.slope_ok,
            },
            "passed": self.passed,
        }


def _eps_worker(cfg: EpsStudyConfig, eps: float, targets: list[np.ndarray], out_dir):
    grid = cfg.grid
    phi = gaussian(grid, cfg.sigma)
    b = ScaledBump(eps, get_profile(cfg.profile))
    states = hartree_at_times(phi, b, cfg.mu, cfg.dt, cfg.sample_times)
    rows = []
    for t, u, target in zip(cfg.sample_times, states, targets):
        d = l2_norm(u - WaveFunction(grid, target))
        rows.append((t, d))
    _finite("eps-study distance", [r[1] for r in rows], eps=eps)
    if out_dir is not None:
        write_rows(
            Path(out_dir) / f"eps_{eps:.6g}.csv",
            ["t", "dist", "dist_sq"],
            [(t, d, d * d) for t, d in rows],
        )
    return rows


def run_eps_study(cfg: EpsStudyConfig, out_dir=None, jobs: int = 1) -> EpsStudyResult:
    """``sup_t ||u_eps,t - phi_t||`` for every eps in ``cfg.eps_list``.

    The point-nonlinearity reference is solved once and shared by all eps.
    """
    cfg.check_guards()
    grid = cfg.grid
    phi = gaussian(grid, cfg.sigma)
    n_max = int(round(cfg.T / cfg.delta))
    traj = delta_solver.solve_charge(phi, cfg.mu, cfg.delta, n_max)
    _finite("charge", traj.q, mu=cfg.mu, delta=cfg.delta)
    targets = [np.array(delta_solver.reconstruct(phi, traj, t).values) for t in cfg.sample_times]

    run_dir = None
    if out_dir is not None:
        run_dir = Path(out_dir) / "runs"
        run_dir.mkdir(parents=True, exist_ok=True)
        traj.write_csv(run_dir / "charge.csv")

    results = _map(_eps_worker, [(cfg, eps, targets, run_dir) for eps in cfg.eps_list], jobs)
    sup = [max(d for _, d in rows) for rows in results]
    res = EpsStudyResult(cfg, list(cfg.eps_list), sup)
    res.per_time = {eps: rows for eps, rows in zip(cfg.eps_list, results)}
    if len(sup) >= 3 and all(d > 0 for d in sup):
        res.fit = fit_rate(cfg.eps_list, sup)

    if out_dir is not None:
        write_rows(
            Path(out_dir) / "eps_study.csv",
            ["eps", "sup_dist", "sup_dist_sq"],
            [(e, d, d * d) for e, d in zip(res.eps, res.sup_dist)],
        )
        _write_json(Path(out_dir) / "summary.json", res.summary())
    return res


# ---------------------------------------------------------------------------
# small-N chaos study


@dataclass(frozen=True)
class ChaosStudyConfig:
    L: float = 2.0
    M: int = 32
    sigma: float = 0.5
    mu: float = 1.0
    eps_mode: str = "fixed"
    eps: float = 0.5
    N_list: tuple[int, ...] = (2, 3, 4)
    dt: float = 5e-3
    delta: float = 1e-3
    T: float = 0.5
    sample_times: tuple[float, ...] = (0.0, 0.25, 0.5)
    profile: str = "gaussian"

    def __post_init__(self) -> None:
        object.__setattr__(self, "N_list", tuple(int(n) for n in self.N_list))
        object.__setattr__(self, "sample_times", tuple(sorted(float(t) for t in self.sample_times)))
        if self.eps_mode not in ("fixed", "log"):
            raise ConfigError(f"eps_mode must be 'fixed' or 'log', got {self.eps_mode!r}")
        for N in self.N_list:
            if N < 2:
                raise ConfigError(f"N must be >= 2, got {N}")
        if len(set(self.N_list)) != len(self.N_list):
            raise ConfigError(f"N_list has repeated entries: {self.N_list}")
        if self.mu < 0:
            raise ConfigError(f"mu must be nonnegative, got {self.mu}")
        if not self.T > 0:
            raise ConfigError(f"T must be positive, got {self.T}")
        _check_commensurate(self.dt, self.delta, self.sample_times, self.T)

    @classmethod
    def from_dict(cls, cfg: dict) -> ChaosStudyConfig:
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in cfg.items()})

    @property
    def grid(self) -> Grid1D:
        return Grid1D(self.L, self.M)

    def datum(self) -> WaveFunction:
        """Gaussian datum renormalized on the (small) box; factorized states need unit norm."""
        phi = gaussian(self.grid, self.sigma)
        return phi * (1.0 / l2_norm(phi))

    def eps_for(self, N: int) -> float:
        return self.eps if self.eps_mode == "fixed" else epsilon_of_N(N)

    def check_guards(self) -> None:
        grid = self.grid
        profile = get_profile(self.profile)
        for N in self.N_list:
            check_memory(grid.M, N)
            b = ScaledBump(self.eps_for(N), profile)
            b.check_resolved(grid)
            check_time_step(self.dt, b, grid)


CHAOS_COLUMNS = [
    "N", "t", "eps", "d_hartree", "d_delta", "onebody_dist",
    "bound_surrogate", "triangle_ok", "norm_drift", "symmetry_residual",
]


@dataclass
class ChaosStudyResult:
    config: ChaosStudyConfig
    rows: list[tuple]
    delta_mass_defect: list[float]

    def column(self, name: str, t: float | None = None) -> list:
        i = CHAOS_COLUMNS.index(name)
        return [r[i] for r in self.rows if t is None or abs(r[1] - t) < 1e-12]

    @property
    def final_d_hartree(self) -> list[float]:
        return self.column("d_hartree", self.config.sample_times[-1])

    @property
    def decreasing(self) -> bool:
        d = self.final_d_hartree
        return all(b < a for a, b in zip(d, d[1:]))

    @property
    def triangle_ok(self) -> bool:
        return all(self.column("triangle_ok"))

    @property
    def passed(self) -> bool:
        return self.decreasing and self.triangle_ok

    def summary(self) -> dict:
        cfg = self.config
        t_end = cfg.sample_times[-1]
        return {
            "study": "chaos",
            "N": list(cfg.N_list),
            "t": t_end,
            "d_hartree": self.final_d_hartree,
            "d_delta": self.column("d_delta", t_end),
            "delta_mass_defect": self.delta_mass_defect,
            "checks": {
                "d_hartree_strictly_decreasing": self.decreasing,
                "triangle_inequality": self.triangle_ok,
            },
            "passed": self.passed,
        }


def _chaos_worker(cfg: ChaosStudyConfig, N: int, deltas: list[np.ndarray], out_dir):
    grid = cfg.grid
    phi = cfg.datum()
    eps = cfg.eps_for(N)
    b = ScaledBump(eps, get_profile(cfg.profile))
    hartree = hartree_at_times(phi, b, cfg.mu, cfg.dt, cfg.sample_times)
    psi0 = build_factorized(phi, N)
    norm0 = psi0.norm()
    rows = []
    for (t, psi), u, dv in zip(
        manybody_trajectory(psi0, b, cfg.mu, cfg.dt, cfg.sample_times), hartree, deltas
    ):
        if not np.all(np.isfinite(psi.amplitudes)):
            raise NumericalFailure(f"non-finite many-body amplitudes (N={N}, t={t})")
        gamma = reduced_density(psi)
        v = WaveFunction(grid, dv)
        # normalize away the O(h^2) quadrature error so trace distances apply
        u = u * (1.0 / l2_norm(u))
        d_h = trace_distance(gamma, u)
        d_d = trace_distance(gamma, v)
        one = l2_norm(u - v)
        bound = d_h + 2.0 * one
        ok = d_d <= bound + TRIANGLE_SLACK
        rows.append((N, t, eps, d_h, d_d, one, bound, ok, abs(psi.norm() - norm0), psi.symmetry_residual()))
    _finite("chaos-study distances", [r[3:7] for r in rows], N=N)
    if out_dir is not None:
        write_rows(Path(out_dir) / f"chaos_N{N}.csv", CHAOS_COLUMNS, rows)
    return rows


def run_chaos_study(cfg: ChaosStudyConfig, out_dir=None, jobs: int = 1) -> ChaosStudyResult:
    """Both legs of the triangle split, per ``N`` and sample time.

    The point-nonlinearity state is solved on the study grid and renormalized
    at each sample time; its mass defect is reported in the summary.
    """
    cfg.check_guards()
    phi = cfg.datum()
    n_max = int(round(cfg.T / cfg.delta))
    traj = delta_solver.solve_charge(phi, cfg.mu, cfg.delta, n_max)
    _finite("charge", traj.q, mu=cfg.mu, delta=cfg.delta)
    deltas, defects = [], []
    for t in cfg.sample_times:
        v = delta_solver.reconstruct(phi, traj, t)
        nv = l2_norm(v)
        defects.append(abs(nv - l2_norm(phi)))
        deltas.append(np.array(v.values) / nv)

    run_dir = None
    if out_dir is not None:
        run_dir = Path(out_dir) / "runs"
        run_dir.mkdir(parents=True, exist_ok=True)
    results = _map(_chaos_worker, [(cfg, N, deltas, run_dir) for N in cfg.N_list], jobs)
    rows = [r for rs in results for r in rs]
    res = ChaosStudyResult(cfg, rows, defects)
    if out_dir is not None:
        write_rows(Path(out_dir) / "chaos_study.csv", CHAOS_COLUMNS, rows)
        _write_json(Path(out_dir) / "summary.json", res.summary())
    return res


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def config_dict(cfg) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(cfg).items()}
