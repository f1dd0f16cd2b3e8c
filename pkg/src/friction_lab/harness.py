"""Experiments: single runs, paired Class-II/Class-I runs, epsilon sweeps and
the audits behind `flab check-identity` / `flab check-thermo`."""

from __future__ import annotations

import math
import time
from pathlib import Path
from typing import Callable, Iterator, Literal, Optional, Sequence, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, Field

from . import class1, class2, output
from .config import RunConfig, labcfg
from .diagnostics import (
    CoercivityReport,
    EntropyProduction,
    GronwallFit,
    RelEntropyReport,
    entropy_production,
    fit_gronwall,
    lift,
    relative_entropy,
    sample_coercivity,
)
from .errors import ConfigError, DomainError, LabError, StepSizeError
from .executor import Executor
from .initial import class1_initial, class2_initial, paired_initial
from .manufactured import IdentityStudy, identity_convergence, resolve_pairs
from .state import StateI, StateII
from .thermo import ConsistencyReport, StabilityReport, audit_consistency, check_stability

Model = Literal["class1", "class2"]
TIME_TOL = 1e-12


def output_times(t_end: float, interval: float) -> list[float]:
    """Snapshot times after ``t = 0``: multiples of ``interval`` and ``t_end``."""
    count = int(math.floor(t_end / interval * (1 + 1e-12)))
    times = [k * interval for k in range(1, count + 1)]
    if not times or times[-1] < t_end * (1 - TIME_TOL):
        times.append(t_end)
    times[-1] = t_end
    return times


def _clip(dt: float, t: float, target: float) -> float:
    """Land exactly on ``target`` without leaving a sliver of a step before it."""
    remaining = target - t
    if remaining <= dt * (1 + TIME_TOL):
        return remaining
    if remaining < 2 * dt:
        return 0.5 * remaining
    return dt


def march(
    t_end: float, interval: float, cfl: Callable[[], float]
) -> Iterator[tuple[float, float, bool]]:
    """Yield ``(t, dt, is_output)`` for every step; ``t`` is the time after the step."""
    t = 0.0
    for target in output_times(t_end, interval):
        while t < target:
            dt = _clip(cfl(), t, target)
            t = target if dt == target - t else t + dt
            yield t, dt, t == target


class RunResult(BaseModel):
    model: Model
    epsilon: float
    steps: int
    t_end: float
    snapshot_times: list[float]
    entropy_violations: int = Field(
        description="steps where entropy fell by more than the reported allowance"
    )
    max_entropy_deficit: float = Field(
        description="largest entropy decrease beyond the supply, relative to the allowance"
    )
    files: list[Path] = []
    runtime: float


def _make_dirs(config: RunConfig) -> Path:
    directory = config.outputs.directory
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def _write(config: RunConfig, path: Path, write: Callable[[Path], Path]) -> list[Path]:
    files = [write(path)]
    if "dat" in config.outputs.formats:
        files.append(output.to_gnuplot(path))
    if "csv" not in config.outputs.formats:
        path.unlink()
        files = files[1:]
    return files


def entropy_allowance(
    config: RunConfig, dt: float, production: EntropyProduction, entropy: float
) -> float:
    """Consistency allowance ``slack dx dt (discrete production)`` plus roundoff."""
    return (
        config.diagnostics.entropy_slack * config.grid.dx * dt * production.dissipation
        + 1e-12 * max(1.0, abs(entropy))
    )


def run_single(config: RunConfig, model: Model, write: bool = True) -> RunResult:
    """Run one model to ``t_end``, writing snapshots and the entropy budget."""
    start = time.perf_counter()
    thermo, friction, sources = config.thermo_model(), config.friction_matrix(), config.source_terms()
    grid, tc = config.grid, config.time
    solver = class2 if model == "class2" else class1
    state: Union[StateII, StateI] = (
        class2_initial(config) if model == "class2" else class1_initial(config)
    )
    logger.info(f"{model} run: ncells={grid.ncells} epsilon={friction.epsilon} t_end={tc.t_end}")

    snapshots = [(0.0, state)]
    production = entropy_production(state, grid, thermo, friction, sources, 0.0)
    budget = [(0.0, production, 0.0, 0.0)]
    violations, worst = 0, 0.0
    steps = 0
    t_prev = 0.0

    def cfl() -> float:
        if model == "class2":
            return class2.cfl_dt(
                state, grid, thermo, friction, sources, tc.cfl_number, tc.dt_max, tc.friction_cfl
            )
        return class1.cfl_dt(state, grid, thermo, friction, sources, tc.cfl_number, tc.dt_max)

    for t, dt, is_output in march(tc.t_end, tc.snapshot_interval, cfl):
        state = solver.step(state, grid, thermo, friction, sources, dt, t_prev)
        steps += 1
        previous = production
        production = entropy_production(state, grid, thermo, friction, sources, t)
        change = production.total_entropy - previous.total_entropy
        allowance = entropy_allowance(config, dt, production, production.total_entropy)
        deficit = dt * previous.supply - change
        if deficit > allowance:
            violations += 1
            logger.debug(f"t={t:.6g}: entropy fell by {deficit:.3e} > {allowance:.3e}")
        worst = max(worst, deficit / allowance)
        budget.append((t, production, change, allowance))
        if is_output:
            snapshots.append((t, state))
            logger.debug(f"{model} snapshot at t={t:.6g} after {steps} steps")
        t_prev = t

    files: list[Path] = []
    if write:
        directory = _make_dirs(config)
        files += _write(
            config,
            directory / f"{model}_snapshots.csv",
            lambda p: output.write_snapshots(p, snapshots, grid),
        )
        files += _write(
            config,
            directory / f"{model}_entropy.csv",
            lambda p: output.write_production(p, budget),
        )
    if violations:
        logger.warning(f"{model}: integrated entropy decreased beyond the allowance in {violations} steps")
    runtime = time.perf_counter() - start
    logger.info(f"{model} run finished: {steps} steps in {runtime:.2f}s")
    return RunResult(
        model=model,
        epsilon=friction.epsilon,
        steps=steps,
        t_end=tc.t_end,
        snapshot_times=[t for t, _ in snapshots],
        entropy_violations=violations,
        max_entropy_deficit=worst,
        files=files,
        runtime=runtime,
    )


class PairedResult(BaseModel):
    epsilon: float
    steps: int
    reports: list[RelEntropyReport]
    files: list[Path] = []
    runtime: float

    @property
    def H0(self) -> float:
        return self.reports[0].H

    @property
    def H_end(self) -> float:
        return self.reports[-1].H

    def series(self) -> tuple[list[float], list[float]]:
        return [r.t for r in self.reports], [r.H for r in self.reports]


def _trial_residuals(
    prev: StateI, cur: StateI, dt: float, config: RunConfig, t: float
) -> tuple[float, float]:
    """Residual norms at ``cur`` from a throwaway step of the same size as the last one."""
    thermo, friction, sources = config.thermo_model(), config.friction_matrix(), config.source_terms()
    try:
        nxt = class1.step(cur, config.grid, thermo, friction, sources, dt, t)
    except (StepSizeError, DomainError) as e:
        logger.debug(f"trial residual step at t={t:.6g} skipped: {e}")
        return math.nan, math.nan
    return class1.residuals([prev, cur, nxt], config.grid, dt).norms(config.grid)


def run_paired(
    config: RunConfig, epsilon: Optional[float] = None, write: bool = True
) -> PairedResult:
    """Run both models on a common step and report ``H`` at every output time."""
    start = time.perf_counter()
    if epsilon is not None:
        config = config.with_epsilon(epsilon)
    thermo, friction, sources = config.thermo_model(), config.friction_matrix(), config.source_terms()
    grid, tc, c = config.grid, config.time, config.diagnostics.coercivity_c
    state2, state1 = paired_initial(config)
    logger.info(
        f"paired run: epsilon={friction.epsilon} ncells={grid.ncells} "
        f"well_prepared={config.ic.well_prepared}"
    )
    reports = [
        relative_entropy(state2, lift(state1), thermo, grid, friction, sources, c, t=0.0)
    ]

    def cfl() -> float:
        return min(
            class2.cfl_dt(
                state2, grid, thermo, friction, sources, tc.cfl_number, tc.dt_max, tc.friction_cfl
            ),
            class1.cfl_dt(state1, grid, thermo, friction, sources, tc.cfl_number, tc.dt_max),
        )

    steps, t_prev = 0, 0.0
    for t, dt, is_output in march(tc.t_end, tc.snapshot_interval, cfl):
        prev1 = state1
        state2 = class2.step(state2, grid, thermo, friction, sources, dt, t_prev)
        state1 = class1.step(state1, grid, thermo, friction, sources, dt, t_prev)
        steps += 1
        if is_output:
            norms = _trial_residuals(prev1, state1, dt, config, t)
            report = relative_entropy(
                state2, lift(state1), thermo, grid, friction, sources, c, norms, t
            )
            logger.debug(f"t={t:.6g} H={report.H:.6e}")
            reports.append(report)
        t_prev = t

    files: list[Path] = []
    if write:
        directory = _make_dirs(config)
        files = _write(
            config,
            directory / f"relative_entropy_eps{friction.epsilon!r}.csv",
            lambda p: output.write_relative_entropy(p, reports),
        )
    runtime = time.perf_counter() - start
    logger.info(f"paired run epsilon={friction.epsilon}: H(t_end)={reports[-1].H:.6e}")
    return PairedResult(
        epsilon=friction.epsilon, steps=steps, reports=reports, files=files, runtime=runtime
    )


class RateFit(BaseModel):
    slope: float
    intercept: float
    residual: float = Field(description="root mean square misfit in log-log coordinates")
    slope_stderr: float = Field(description="standard error of the slope, nan for two points")


def fit_rate(points: Sequence[tuple[float, float]]) -> RateFit:
    """Least-squares line through ``(log x, log y)``."""
    if len(points) < 2:
        raise ValueError(f"a rate fit needs at least 2 points, got {len(points)}")
    x, y = np.asarray(points, dtype=float).T
    if np.any(x <= 0) or np.any(y <= 0) or not np.all(np.isfinite(y)):
        raise DomainError(f"rate fit needs positive finite values, got {list(zip(x, y))}")
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    misfit = ly - (slope * lx + intercept)
    residual = float(np.sqrt(np.mean(misfit**2)))
    stderr = math.nan
    if len(x) > 2:
        stderr = float(
            np.sqrt(np.sum(misfit**2) / (len(x) - 2) / np.sum((lx - lx.mean()) ** 2))
        )
    return RateFit(slope=float(slope), intercept=float(intercept), residual=residual, slope_stderr=stderr)


class SweepMember(BaseModel):
    epsilon: float
    status: Literal["ok", "failed"]
    error: Optional[str] = None
    H0: float = math.nan
    H_end: float = math.nan
    R_norm: float = math.nan
    Q_norm: float = math.nan
    steps: int = 0
    runtime: float = 0.0
    times: list[float] = []
    H: list[float] = []


class SweepResult(BaseModel):
    members: list[SweepMember]
    fit: Optional[RateFit] = None
    threshold: float
    passed: bool
    monotone: bool
    ill_prepared: bool
    gronwall: Optional[GronwallFit] = None
    residual_fits: dict[str, RateFit] = Field(
        default={}, description="log-log fits of the Class-I residual norms at t_end"
    )


def _run_member(payload: str) -> SweepMember:
    """Picklable sweep member: a base64 config in, a summary out."""
    config = RunConfig.from_base64(payload, substitute=False)
    eps = config.friction.epsilon
    try:
        result = run_paired(config)
    except LabError as e:
        logger.error(f"sweep member epsilon={eps} failed: {e}")
        return SweepMember(epsilon=eps, status="failed", error=f"{type(e).__name__}: {e}")
    times, H = result.series()
    last = result.reports[-1]
    return SweepMember(
        epsilon=eps,
        status="ok",
        H0=result.H0,
        H_end=result.H_end,
        R_norm=last.R_norm,
        Q_norm=last.Q_norm,
        steps=result.steps,
        runtime=result.runtime,
        times=times,
        H=H,
    )


def resolve_executor(config: RunConfig) -> Executor:
    name = config.sweep.executor or labcfg.executor.name
    workers = config.sweep.workers or labcfg.executor.workers
    return Executor.resolve_subclass(name)(workers=workers)


def _positive_fit(points: list[tuple[float, float]]) -> Optional[RateFit]:
    if len(points) < 2 or any(not (v > 0 and math.isfinite(v)) for _, v in points):
        return None
    return fit_rate(points)


SWEEP_COLUMNS = ("epsilon", "H0", "H_end", "R_norm", "Q_norm", "steps")


def run_sweep(config: RunConfig, executor: Optional[Executor] = None) -> SweepResult:
    """Paired runs over ``friction.epsilon_sweep`` and the rate of ``H(t_end)`` in epsilon.

    Raises `DomainError` after writing the summary when any member fails.
    """
    epsilons = config.friction.epsilon_sweep
    if len(epsilons) < 3:
        raise ConfigError(
            f"a sweep needs at least 3 values in friction.epsilon_sweep, got {len(epsilons)}"
        )
    executor = executor or resolve_executor(config)
    logger.info(f"sweep over epsilon={epsilons} with {type(executor).__name__}")
    payloads = [config.with_epsilon(eps).to_base64() for eps in epsilons]
    members = executor.map(_run_member, payloads)

    failed = [m for m in members if m.status == "failed"]
    ok = [m for m in members if m.status == "ok"]
    tol = config.sweep.prepared_tolerance
    ill_prepared = any(m.H0 > tol for m in ok)
    if ill_prepared:
        logger.warning("H(0) is not zero: the sweep is ill-prepared and H(t_end) need not scale with epsilon")

    fit = None
    if not failed:
        try:
            fit = fit_rate([(m.epsilon, m.H_end) for m in ok])
        except DomainError as e:
            logger.warning(f"no rate fit: {e}")
    ordered = sorted(ok, key=lambda m: m.epsilon, reverse=True)
    slack = 1 + config.sweep.monotone_slack
    monotone = all(b.H_end <= a.H_end * slack for a, b in zip(ordered, ordered[1:]))
    gronwall = fit_gronwall({m.epsilon: (m.times, m.H) for m in ok}) if ok else None
    residual_fits = {}
    for name in ("R_norm", "Q_norm"):
        rf = _positive_fit([(m.epsilon, getattr(m, name)) for m in ok])
        if rf is not None:
            residual_fits[name] = rf

    threshold = config.sweep.slope_threshold
    result = SweepResult(
        members=members,
        fit=fit,
        threshold=threshold,
        passed=fit is not None and fit.slope >= threshold,
        monotone=monotone,
        ill_prepared=ill_prepared,
        gronwall=gronwall,
        residual_fits=residual_fits,
    )
    directory = _make_dirs(config)
    (directory / "sweep.json").write_text(result.model_dump_json(indent=2), encoding="utf-8")
    output.write_csv(
        directory / "sweep.csv",
        SWEEP_COLUMNS,
        [[getattr(m, c) for c in SWEEP_COLUMNS] for m in members],
    )
    if fit is not None:
        logger.info(f"H(t_end) ~ epsilon^{fit.slope:.3f} (threshold {threshold})")
    if gronwall is not None:
        logger.info(f"Gronwall envelope: C={gronwall.C:.4g} K={gronwall.K:.4g}")
    if failed:
        status = ", ".join(f"epsilon={m.epsilon}: {m.status}" for m in members)
        raise DomainError(f"sweep members failed ({status})")
    return result


def check_identity_suite(config: RunConfig) -> list[IdentityStudy]:
    ic = config.identity
    thermo, kappa = config.thermo_model(), config.kappa_model()
    friction = config.friction_matrix(ic.epsilon)
    try:
        pairs = resolve_pairs(ic.pairs)
    except ValueError as e:
        raise ConfigError(str(e)) from e
    studies = []
    for pair in pairs:
        study = identity_convergence(
            pair,
            thermo,
            friction,
            kappa,
            ncells=ic.ncells,
            dt=ic.dt,
            levels=ic.levels,
            length=config.grid.length,
            t=ic.t,
            min_order=ic.min_order,
        )
        orders = ", ".join(f"{o:.2f}" for o in study.orders) or "exact"
        logger.info(f"identity {pair.name}: orders {orders} {'ok' if study.passed else 'FAILED'}")
        studies.append(study)
    return studies


class ThermoAudit(BaseModel):
    consistency: ConsistencyReport
    stability: StabilityReport
    coercivity: CoercivityReport

    @property
    def passed(self) -> bool:
        return self.consistency.passed and self.stability.passed and self.coercivity.passed


def check_thermo(config: RunConfig, samples: int = 1000, seed: int = 0) -> ThermoAudit:
    thermo = config.thermo_model()
    audit = ThermoAudit(
        consistency=audit_consistency(thermo, samples, seed),
        stability=check_stability(thermo, samples, seed),
        coercivity=sample_coercivity(thermo, max(samples, 10_000), seed),
    )
    logger.info(
        f"Gibbs-Duhem {audit.consistency.gibbs_duhem:.2e}, "
        f"orders mu {audit.consistency.mu_order:.2f} eta {audit.consistency.eta_order:.2f}, "
        f"coercivity {audit.coercivity.infimum:.3e}"
    )
    return audit
