"""Monte-Carlo harness: per-point evaluation, power sweeps, hybrid-controller
runs and CSV persistence.

Every drop index maps to one channel realization that is reused across power
points, modes and scenarios, so comparisons between them are paired.
"""
from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .channel import SceneConfig, Scenario, dbm_to_watts, realize_channels
from .controller import (ControllerThresholds, MeasurementReport, ReportClass, select_mode,
                         tau_from_se)
from .optimize import OptimizerOptions, optimize_active, optimize_passive, solve_fixed, split_search
from .signal import RisMode, RisState

log = logging.getLogger(__name__)

__all__ = [
    "HYBRID",
    "MODES",
    "SweepConfig",
    "SweepRow",
    "SweepResult",
    "Decision",
    "drop_seed",
    "evaluate_drop",
    "point_samples",
    "run_point",
    "run_sweep",
    "run_hybrid_sweep",
    "write_csv",
    "read_csv",
    "write_decision_log",
    "crossover_power",
    "summarize",
]

HYBRID = "Hybrid"
MODES = (RisMode.NO_RIS.value, RisMode.DORMANT.value, RisMode.PASSIVE.value,
         RisMode.ACTIVE.value, HYBRID)
CSV_HEADER = ("scenario", "mode", "total_power_dbm", "mean_se", "stderr", "drops", "seed")
DECISION_HEADER = ("index", "tx_power_dbm", "class", "tau_db", "rho_db", "mode")


def _mode_name(mode) -> str:
    name = mode.value if isinstance(mode, RisMode) else str(mode)
    if name not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {', '.join(MODES)}")
    return name


@dataclass(frozen=True)
class SweepConfig:
    """Everything a sweep needs; static powers are in watts, the grid in dBm."""

    scene: SceneConfig = field(default_factory=SceneConfig)
    power_grid: tuple[float, ...] = tuple(float(p) for p in range(30, 85, 5))
    modes: tuple[str, ...] = (RisMode.NO_RIS.value, RisMode.PASSIVE.value, RisMode.ACTIVE.value)
    scenarios: tuple[Scenario, ...] = (Scenario.STRONG_DIRECT, Scenario.WEAK_DIRECT)
    drops: int = 100
    master_seed: int = 0
    optimizer: OptimizerOptions = field(default_factory=OptimizerOptions)
    thresholds: ControllerThresholds = field(default_factory=ControllerThresholds)
    output_path: Optional[str] = None
    decision_log_path: Optional[str] = None
    passive_static_power: float = 0.0
    dormant_static_power: float = 0.0
    jobs: int = 1

    def __post_init__(self):
        grid = tuple(float(p) for p in self.power_grid)
        if not grid:
            raise ValueError("power_grid must not be empty")
        if any(not math.isfinite(p) for p in grid):
            raise ValueError("power_grid entries must be finite")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("power_grid must be strictly increasing")
        object.__setattr__(self, "power_grid", grid)
        modes = tuple(_mode_name(m) for m in self.modes)
        if not modes or len(set(modes)) != len(modes):
            raise ValueError("modes must be a non-empty list without repeats")
        object.__setattr__(self, "modes", modes)
        scenarios = tuple(Scenario(s) for s in self.scenarios)
        if not scenarios or len(set(scenarios)) != len(scenarios):
            raise ValueError("scenarios must be a non-empty list without repeats")
        object.__setattr__(self, "scenarios", scenarios)
        if isinstance(self.drops, bool) or int(self.drops) != self.drops or self.drops < 1:
            raise ValueError(f"drops must be an integer >= 1, got {self.drops!r}")
        object.__setattr__(self, "drops", int(self.drops))
        if int(self.master_seed) != self.master_seed or self.master_seed < 0:
            raise ValueError("master_seed must be a non-negative integer")
        object.__setattr__(self, "master_seed", int(self.master_seed))
        if min(self.passive_static_power, self.dormant_static_power) < 0:
            raise ValueError("static powers must be non-negative")
        if int(self.jobs) != self.jobs or self.jobs < 1:
            raise ValueError("jobs must be an integer >= 1")


@dataclass(frozen=True)
class SweepRow:
    scenario: str
    mode: str
    total_power_dbm: float
    mean_se: float
    stderr: float
    drops: int
    seed: int


@dataclass(frozen=True)
class Decision:
    """One controller decision-log record."""

    index: int
    tx_power_dbm: float
    cls: str
    tau_db: float
    rho_db: float
    mode: str


@dataclass
class SweepResult:
    rows: list[SweepRow] = field(default_factory=list)
    decisions: list[Decision] = field(default_factory=list)

    def row(self, scenario, mode, power) -> SweepRow:
        scenario = Scenario(scenario).value
        mode = _mode_name(mode)
        for r in self.rows:
            if r.scenario == scenario and r.mode == mode and r.total_power_dbm == float(power):
                return r
        raise KeyError((scenario, mode, power))

    def series(self, scenario, mode) -> list[SweepRow]:
        scenario = Scenario(scenario).value
        mode = _mode_name(mode)
        return [r for r in self.rows if r.scenario == scenario and r.mode == mode]


def drop_seed(master_seed: int, drop: int) -> int:
    """Channel seed of drop ``drop``; independent of power point and mode."""
    return int(np.random.SeedSequence([master_seed, drop]).generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class _Point:
    scene: SceneConfig
    total_power_dbm: float
    seed: int
    modes: tuple[str, ...]
    opts: OptimizerOptions
    thresholds: ControllerThresholds
    passive_static_power: float
    dormant_static_power: float


def _bs_share(total: float, static: float, mode: str) -> float:
    bs = total - static
    if not bs > 0:
        raise ValueError(f"{mode} static power {static} W leaves no BS power "
                         f"out of {total} W")
    return bs


def _evaluate(pt: _Point) -> tuple[dict[str, float], Optional[tuple]]:
    scene = pt.scene
    ch = realize_channels(scene, pt.seed)
    total = float(dbm_to_watts(pt.total_power_dbm))
    N = scene.num_ris_elements
    opts = pt.opts
    cache: dict[str, float] = {}

    def se_of(mode: str) -> float:
        if mode in cache:
            return cache[mode]
        if mode == RisMode.NO_RIS.value:
            se = solve_fixed(ch, RisState.no_ris(N), total, opts, scene.sigma2_rx).se
        elif mode == RisMode.DORMANT.value:
            bs = _bs_share(total, pt.dormant_static_power, mode)
            se = solve_fixed(ch, RisState.dormant(N), bs, opts, scene.sigma2_rx,
                             static_power=pt.dormant_static_power).se
        elif mode == RisMode.PASSIVE.value:
            bs = _bs_share(total, pt.passive_static_power, mode)
            se = optimize_passive(ch, bs, opts, sigma2_rx=scene.sigma2_rx,
                                  static_power=pt.passive_static_power).se
        elif mode == RisMode.ACTIVE.value:
            if opts.search_split:
                se = split_search(ch, total, opts, sigma2_rx=scene.sigma2_rx,
                                  sigma2_ris=scene.sigma2_ris).se
            else:
                se = optimize_active(ch, total, opts, sigma2_rx=scene.sigma2_rx,
                                     sigma2_ris=scene.sigma2_ris).se
        else:
            raise ValueError(mode)
        cache[mode] = se
        return se

    out = {}
    decision = None
    for mode in pt.modes:
        if mode == HYBRID:
            est = tau_from_se(se_of(RisMode.ACTIVE.value), se_of(RisMode.PASSIVE.value),
                              se_of(RisMode.NO_RIS.value))
            report = MeasurementReport.from_power(pt.total_power_dbm, pt.thresholds,
                                                  est.tau, est.passive_gain)
            chosen = select_mode(report, pt.thresholds)
            out[mode] = se_of(chosen.value)
            decision = (report.cls.value, est.tau, chosen.value)
        else:
            out[mode] = se_of(mode)
    return out, decision


def evaluate_drop(scene: SceneConfig, modes: Sequence, total_power_dbm: float, seed: int,
                  opts: OptimizerOptions = OptimizerOptions(),
                  thresholds: ControllerThresholds = ControllerThresholds(),
                  passive_static_power: float = 0.0,
                  dormant_static_power: float = 0.0) -> dict[str, float]:
    """Sum SE of each requested mode on the channel realization of ``seed``."""
    pt = _Point(scene, float(total_power_dbm), int(seed), tuple(_mode_name(m) for m in modes),
                opts, thresholds, passive_static_power, dormant_static_power)
    return _evaluate(pt)[0]


def _run_points(points: list[_Point], jobs: int):
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            # map keeps submission order, so the reduction is deterministic
            return list(pool.map(_evaluate, points, chunksize=max(1, len(points) // (4 * jobs))))
    return [_evaluate(p) for p in points]


def _mean_stderr(samples) -> tuple[float, float]:
    x = np.asarray(samples, dtype=float)
    if x.size == 1:
        return float(x[0]), 0.0
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def point_samples(scene: SceneConfig, mode, total_power_dbm: float, drops: int, seed: int,
                  opts: OptimizerOptions = OptimizerOptions(), *,
                  thresholds: ControllerThresholds = ControllerThresholds(),
                  passive_static_power: float = 0.0, dormant_static_power: float = 0.0,
                  jobs: int = 1) -> np.ndarray:
    """Per-drop sum SE of one mode at one total power."""
    mode = _mode_name(mode)
    points = [_Point(scene, float(total_power_dbm), drop_seed(seed, d), (mode,), opts,
                     thresholds, passive_static_power, dormant_static_power)
              for d in range(drops)]
    return np.array([out[mode] for out, _ in _run_points(points, jobs)])


def run_point(scene: SceneConfig, mode, total_power_dbm: float, drops: int, seed: int,
              opts: OptimizerOptions = OptimizerOptions(), **kwargs) -> tuple[float, float]:
    """Mean sum SE over ``drops`` channel drops and its standard error."""
    if drops < 1:
        raise ValueError("drops must be >= 1")
    return _mean_stderr(point_samples(scene, mode, total_power_dbm, drops, seed, opts, **kwargs))


def _check_writable(path) -> None:
    if path is None:
        return
    parent = os.path.dirname(os.path.abspath(path)) or "."
    if not os.path.isdir(parent) or not os.access(parent, os.W_OK):
        raise OSError(f"cannot write output file {path}: directory {parent} is not writable")
    if os.path.isdir(path):
        raise OSError(f"cannot write output file {path}: it is a directory")


def _sweep(cfg: SweepConfig) -> SweepResult:
    _check_writable(cfg.output_path)
    _check_writable(cfg.decision_log_path)
    seeds = [drop_seed(cfg.master_seed, d) for d in range(cfg.drops)]
    points = [
        _Point(replace(cfg.scene, scenario=scenario), power, seed, cfg.modes, cfg.optimizer,
               cfg.thresholds, cfg.passive_static_power, cfg.dormant_static_power)
        for scenario in cfg.scenarios
        for power in cfg.power_grid
        for seed in seeds
    ]
    log.info("evaluating %d drop/point combinations", len(points))
    outcomes = _run_points(points, cfg.jobs)

    samples: dict[tuple, list[float]] = {}
    result = SweepResult()
    for pt, (out, decision) in zip(points, outcomes):
        key = pt.scene.scenario
        for mode, se in out.items():
            samples.setdefault((key, mode, pt.total_power_dbm), []).append(se)
        if decision is not None:
            cls, tau, chosen = decision
            result.decisions.append(Decision(len(result.decisions), pt.total_power_dbm, cls, tau,
                                             cfg.thresholds.rho, chosen))
    for scenario in cfg.scenarios:
        for mode in cfg.modes:
            for power in cfg.power_grid:
                mean, err = _mean_stderr(samples[(scenario, mode, power)])
                result.rows.append(SweepRow(scenario.value, mode, power, mean, err, cfg.drops,
                                            cfg.master_seed))
    if cfg.output_path is not None:
        write_csv(result, cfg.output_path)
    if cfg.decision_log_path is not None:
        write_decision_log(result.decisions, cfg.decision_log_path)
    return result


def run_sweep(cfg: SweepConfig) -> SweepResult:
    """Scenarios x modes x power grid, rows ordered by (scenario, mode, power)."""
    return _sweep(cfg)


def run_hybrid_sweep(cfg: SweepConfig) -> SweepResult:
    """Sweep that includes the hybrid controller; ``decisions`` holds its log."""
    if HYBRID not in cfg.modes:
        raise ValueError("run_hybrid_sweep needs 'Hybrid' among the sweep modes")
    return _sweep(cfg)


def write_csv(result: SweepResult, path) -> None:
    try:
        with open(path, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for r in result.rows:
                writer.writerow([r.scenario, r.mode, repr(float(r.total_power_dbm)),
                                 repr(float(r.mean_se)), repr(float(r.stderr)), r.drops, r.seed])
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror or exc}") from exc


def read_csv(path) -> SweepResult:
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        rows = [SweepRow(s, m, float(p), float(mu), float(se), int(d), int(seed))
                for s, m, p, mu, se, d, seed in reader]
    return SweepResult(rows)


def write_decision_log(decisions: Sequence[Decision], path) -> None:
    try:
        with open(path, "w", newline="", encoding="ascii") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(DECISION_HEADER)
            for d in decisions:
                writer.writerow([d.index, repr(float(d.tx_power_dbm)), d.cls, repr(float(d.tau_db)),
                                 repr(float(d.rho_db)), d.mode])
    except OSError as exc:
        raise OSError(f"cannot write decision log to {path}: {exc.strerror or exc}") from exc


def crossover_power(result: SweepResult, scenario) -> Optional[float]:
    """Lowest grid power from which passive mean SE stays >= active mean SE.

    ``None`` when active is still ahead at the top of the grid.
    """
    passive = {r.total_power_dbm: r.mean_se for r in result.series(scenario, RisMode.PASSIVE)}
    active = {r.total_power_dbm: r.mean_se for r in result.series(scenario, RisMode.ACTIVE)}
    powers = sorted(set(passive) & set(active))
    best = None
    for p in reversed(powers):
        if passive[p] >= active[p]:
            best = p
        else:
            break
    return best


def summarize(result: SweepResult) -> str:
    lines = []
    scenarios = list(dict.fromkeys(r.scenario for r in result.rows))
    for scenario in scenarios:
        lines.append(f"[{scenario}]")
        modes = list(dict.fromkeys(r.mode for r in result.rows if r.scenario == scenario))
        powers = sorted({r.total_power_dbm for r in result.rows if r.scenario == scenario})
        lines.append("  P_tot[dBm] " + "".join(f"{m:>16}" for m in modes))
        for p in powers:
            cells = []
            for m in modes:
                r = result.row(scenario, m, p)
                cells.append(f"{r.mean_se:9.3f}+-{r.stderr:5.3f}")
            lines.append(f"  {p:10.1f} " + "".join(f"{c:>16}" for c in cells))
        if RisMode.PASSIVE.value in modes and RisMode.ACTIVE.value in modes:
            cross = crossover_power(result, scenario)
            text = "none in grid" if cross is None else f"{cross:g} dBm"
            lines.append(f"  passive >= active from: {text}")
    if result.decisions:
        counts: dict[tuple, int] = {}
        for d in result.decisions:
            counts[(d.cls, d.mode)] = counts.get((d.cls, d.mode), 0) + 1
        lines.append("[controller decisions]")
        for (cls, mode), n in sorted(counts.items()):
            lines.append(f"  {cls:>6} -> {mode:<8} {n}")
    return "\n".join(lines)
