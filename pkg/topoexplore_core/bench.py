"""
Ensaios comparativos do TopoExplore:
- suites cenários x estratégias x ensaios (run_suite) e ablações (run_ablation)
- agregação média ± desvio padrão por (cenário, estratégia)
- CSVs por ensaio, resumo e trajectórias
- gráficos SVG (trajectória a 1 ponto por segundo, cobertura ao longo do tempo)

Os tempos de cálculo dependem da máquina, por isso ficam em ficheiros à parte
(timing.csv, timing_summary.csv); os restantes CSVs são idênticos entre
execuções com a mesma configuração.
"""

from __future__ import annotations

import csv
import logging
import math
from collections import OrderedDict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .config_loader import ConfigError, SuiteConfig  # noqa: E402
from .grid_map import InvalidArgumentError  # noqa: E402
from .runner import TrialSpec, run_trials  # noqa: E402
from .sim import EpisodeResult, TrajectoryRow, read_trajectory_csv, write_trajectory_csv  # noqa: E402


log = logging.getLogger(__name__)

plt.rcParams["svg.hashsalt"] = "topoexplore"

TRIALS_CSV = "trials.csv"
SUMMARY_CSV = "summary.csv"
TIMING_CSV = "timing.csv"
TIMING_SUMMARY_CSV = "timing_summary.csv"
TRAJECTORY_DIR = "trajectories"
PLOT_DIR = "plots"

TRIAL_COLUMNS = ("scenario", "map", "strategy", "seed", "success", "reason", "time_s", "distance_m", "final_coverage")
TIMING_COLUMNS = ("scenario", "strategy", "seed", "compute_ms", "frontier_ms", "target_ms", "other_ms")

TrialKey = Tuple[str, str, int]


# ------------------------------------------------------------------------------
# Dataclasses de resultados
# ------------------------------------------------------------------------------

@dataclass(frozen=True)
class TrialRow:
    scenario: str
    map: str
    strategy: str
    seed: int
    success: bool
    reason: str
    time_s: float
    distance_m: float
    final_coverage: float
    compute_ms: float = 0.0
    frontier_ms: float = 0.0
    target_ms: float = 0.0
    other_ms: float = 0.0

    @property
    def key(self) -> TrialKey:
        return self.scenario, self.strategy, self.seed

    @classmethod
    def from_result(cls, result: EpisodeResult) -> "TrialRow":
        return cls(
            scenario=result.scenario or result.map_name,
            map=result.map_name,
            strategy=result.strategy,
            seed=result.seed,
            success=result.success,
            reason=result.end_reason,
            time_s=result.time_s,
            distance_m=result.distance_m,
            final_coverage=result.final_coverage,
            compute_ms=result.mean_compute_ms,
            frontier_ms=result.mean_frontier_ms,
            target_ms=result.mean_target_ms,
            other_ms=result.mean_other_ms,
        )


@dataclass(frozen=True)
class Stat:
    mean: float
    std: Optional[float]

    @classmethod
    def of(cls, values: Sequence[float]) -> Optional["Stat"]:
        """Média e desvio padrão amostral; sem desvio com menos de 2 amostras."""
        if not values:
            return None
        arr = np.asarray(values, dtype=float)
        std = float(np.std(arr, ddof=1)) if arr.size >= 2 else None
        return cls(mean=float(arr.mean()), std=std)

    def __str__(self) -> str:
        if self.std is None:
            return f"{self.mean:.2f}"
        return f"{self.mean:.2f} ± {self.std:.2f}"


@dataclass(frozen=True)
class ReportRow:
    scenario: str
    map: str
    strategy: str
    trials: int
    successes: int
    time_s: Optional[Stat]
    distance_m: Optional[Stat]
    compute_ms: Optional[Stat]
    frontier_ms: Optional[Stat]
    target_ms: Optional[Stat]
    other_ms: Optional[Stat]

    @property
    def success_rate(self) -> float:
        return 100.0 * self.successes / self.trials if self.trials else 0.0


@dataclass
class SuiteReport:
    rows: List[ReportRow] = field(default_factory=list)
    trials: List[TrialRow] = field(default_factory=list)
    out_dir: Optional[Path] = None
    errors: List[str] = field(default_factory=list)

    def row(self, scenario: str, strategy: str) -> ReportRow:
        for r in self.rows:
            if r.scenario == scenario and r.strategy == strategy:
                return r
        raise KeyError((scenario, strategy))

    @property
    def failed_trials(self) -> List[TrialRow]:
        return [t for t in self.trials if not t.success]


# ------------------------------------------------------------------------------
# Agregação
# ------------------------------------------------------------------------------

def aggregate(trials: Sequence[TrialRow]) -> SuiteReport:
    """
    Uma linha por (cenário, estratégia), pela ordem em que aparecem. As médias só
    usam os ensaios com sucesso; os falhados contam apenas na taxa de sucesso.
    """
    groups: "OrderedDict[Tuple[str, str], List[TrialRow]]" = OrderedDict()
    for trial in trials:
        groups.setdefault((trial.scenario, trial.strategy), []).append(trial)

    rows: List[ReportRow] = []
    for (scenario, strategy), group in groups.items():
        ok = [t for t in group if t.success]
        rows.append(
            ReportRow(
                scenario=scenario,
                map=group[0].map,
                strategy=strategy,
                trials=len(group),
                successes=len(ok),
                time_s=Stat.of([t.time_s for t in ok]),
                distance_m=Stat.of([t.distance_m for t in ok]),
                compute_ms=Stat.of([t.compute_ms for t in ok]),
                frontier_ms=Stat.of([t.frontier_ms for t in ok]),
                target_ms=Stat.of([t.target_ms for t in ok]),
                other_ms=Stat.of([t.other_ms for t in ok]),
            )
        )
    return SuiteReport(rows=rows, trials=list(trials))


# ------------------------------------------------------------------------------
# CSV
# ------------------------------------------------------------------------------

def _fmt(value: float) -> str:
    return f"{value:.6f}"


def _stat_cells(stat: Optional[Stat]) -> List[str]:
    if stat is None:
        return ["", ""]
    return [_fmt(stat.mean), "" if stat.std is None else _fmt(stat.std)]


def _parse_stat(mean: str, std: str) -> Optional[Stat]:
    if mean == "":
        return None
    return Stat(mean=float(mean), std=float(std) if std != "" else None)


def write_trials_csv(trials: Sequence[TrialRow], out_dir: Path) -> Tuple[Path, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    trials_path = out_dir / TRIALS_CSV
    timing_path = out_dir / TIMING_CSV

    with trials_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRIAL_COLUMNS)
        for t in trials:
            writer.writerow([
                t.scenario, t.map, t.strategy, t.seed, int(t.success), t.reason,
                _fmt(t.time_s), _fmt(t.distance_m), _fmt(t.final_coverage),
            ])

    with timing_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TIMING_COLUMNS)
        for t in trials:
            writer.writerow([
                t.scenario, t.strategy, t.seed,
                _fmt(t.compute_ms), _fmt(t.frontier_ms), _fmt(t.target_ms), _fmt(t.other_ms),
            ])
    return trials_path, timing_path


def load_trials_csv(path: Path | str) -> List[TrialRow]:
    """
    Lê trials.csv e, se existir ao lado, junta-lhe o timing.csv.
    """
    path = Path(path)
    if path.is_dir():
        path = path / TRIALS_CSV

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != TRIAL_COLUMNS:
            raise InvalidArgumentError(f"{path}: colunas inesperadas {reader.fieldnames}")
        trials = [
            TrialRow(
                scenario=r["scenario"],
                map=r["map"],
                strategy=r["strategy"],
                seed=int(r["seed"]),
                success=r["success"] == "1",
                reason=r["reason"],
                time_s=float(r["time_s"]),
                distance_m=float(r["distance_m"]),
                final_coverage=float(r["final_coverage"]),
            )
            for r in reader
        ]

    timing_path = path.with_name(TIMING_CSV)
    if timing_path.exists():
        with timing_path.open(newline="", encoding="utf-8") as fh:
            timing = {
                (r["scenario"], r["strategy"], int(r["seed"])): r
                for r in csv.DictReader(fh)
            }
        trials = [
            replace(
                t,
                compute_ms=float(timing[t.key]["compute_ms"]),
                frontier_ms=float(timing[t.key]["frontier_ms"]),
                target_ms=float(timing[t.key]["target_ms"]),
                other_ms=float(timing[t.key]["other_ms"]),
            )
            if t.key in timing else t
            for t in trials
        ]
    return trials


def write_summary_csv(report: SuiteReport, out_dir: Path) -> Tuple[Path, Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    summary_path = out_dir / SUMMARY_CSV
    timing_path = out_dir / TIMING_SUMMARY_CSV

    with summary_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([
            "scenario", "map", "strategy", "trials", "successes", "success_rate",
            "time_s_mean", "time_s_std", "distance_m_mean", "distance_m_std",
        ])
        for r in report.rows:
            writer.writerow([
                r.scenario, r.map, r.strategy, r.trials, r.successes, _fmt(r.success_rate),
                *_stat_cells(r.time_s), *_stat_cells(r.distance_m),
            ])

    with timing_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([
            "scenario", "strategy",
            "compute_ms_mean", "compute_ms_std", "frontier_ms_mean", "frontier_ms_std",
            "target_ms_mean", "target_ms_std", "other_ms_mean", "other_ms_std",
        ])
        for r in report.rows:
            writer.writerow([
                r.scenario, r.strategy,
                *_stat_cells(r.compute_ms), *_stat_cells(r.frontier_ms),
                *_stat_cells(r.target_ms), *_stat_cells(r.other_ms),
            ])
    return summary_path, timing_path


def load_summary_csv(path: Path | str) -> List[Tuple[str, str, int, int, Optional[Stat], Optional[Stat]]]:
    """(scenario, strategy, trials, successes, time_s, distance_m) por linha do summary.csv."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        return [
            (
                r["scenario"], r["strategy"], int(r["trials"]), int(r["successes"]),
                _parse_stat(r["time_s_mean"], r["time_s_std"]),
                _parse_stat(r["distance_m_mean"], r["distance_m_std"]),
            )
            for r in csv.DictReader(fh)
        ]


def trajectory_path(out_dir: Path, key: TrialKey) -> Path:
    scenario, strategy, seed = key
    return out_dir / TRAJECTORY_DIR / f"{scenario}__{strategy}__{seed}.csv"


# ------------------------------------------------------------------------------
# Suites e ablações
# ------------------------------------------------------------------------------

def build_specs(config: SuiteConfig, strategies: Sequence[str]) -> List[TrialSpec]:
    """Ensaios pela ordem (cenário, estratégia, seed)."""
    if config.trials < 1:
        raise ConfigError(f"trials tem de ser >= 1 (recebido {config.trials})")
    return [
        TrialSpec(scenario=scenario, strategy=strategy, seed=config.seed0 + i)
        for scenario in config.scenarios
        for strategy in strategies
        for i in range(config.trials)
    ]


def time_caps(results: Sequence[EpisodeResult], factor: float) -> Dict[str, float]:
    """
    Limite de tempo por cenário: `factor` x tempo médio dos ensaios com sucesso.
    Cenários sem nenhum sucesso ficam de fora (mantêm o max_time_s do cenário).
    """
    times: Dict[str, List[float]] = {}
    for r in results:
        if r.success and r.time_s > 0:
            times.setdefault(r.scenario or r.map_name, []).append(r.time_s)
    return {name: factor * float(np.mean(values)) for name, values in times.items()}


def _with_cap(spec: TrialSpec, caps: Mapping[str, float]) -> TrialSpec:
    cap = caps.get(spec.scenario.name)
    if cap is None:
        return spec
    params = replace(spec.scenario.params, max_time_s=cap)
    return replace(spec, scenario=replace(spec.scenario, params=params))


def _run_capped(config: SuiteConfig, strategies: Sequence[str], workers: Optional[int]) -> List[EpisodeResult]:
    """
    Corre primeiro a linha de base gulosa, fixa o limite de tempo de cada
    cenário a partir dela e só depois as restantes estratégias. Se a linha de
    base não faz parte da lista, os seus ensaios servem só para calibrar.
    """
    specs = build_specs(config, strategies)
    if config.time_cap_factor is None:
        return run_trials(specs, workers)

    baseline = config.time_cap_baseline
    reported = [s for s in specs if s.strategy == baseline]
    calibration = run_trials(reported or build_specs(config, (baseline,)), workers)
    caps = time_caps(calibration, config.time_cap_factor)
    for name, cap in caps.items():
        log.info("Limite de tempo de '%s': %.1f s (%.1f x %s)", name, cap, config.time_cap_factor, baseline)

    others = run_trials([_with_cap(s, caps) for s in specs if s.strategy != baseline], workers)
    base_iter = iter(calibration if reported else ())
    other_iter = iter(others)
    return [next(base_iter) if s.strategy == baseline else next(other_iter) for s in specs]


def _run(config: SuiteConfig, strategies: Sequence[str], out_dir: Optional[Path], workers: Optional[int]) -> SuiteReport:
    for scenario in config.scenarios:
        scenario.load_world()

    results = _run_capped(config, strategies, workers if workers is not None else config.workers)

    report = aggregate([TrialRow.from_result(r) for r in results])
    for r in results:
        report.errors.extend(f"{r.scenario}/{r.strategy}/{r.seed}: {e}" for e in r.errors)
        if not r.success:
            log.warning("Ensaio %s / %s / seed %d falhou: %s", r.scenario, r.strategy, r.seed, r.failure_reason)

    out_dir = out_dir or config.out
    if out_dir is not None:
        out_dir = Path(out_dir)
        write_trials_csv(report.trials, out_dir)
        write_summary_csv(report, out_dir)
        for r in results:
            write_trajectory_csv(r.trajectory, trajectory_path(out_dir, (r.scenario, r.strategy, r.seed)))
        report.out_dir = out_dir
        log.info("Resultados escritos em %s", out_dir)
    return report


def run_suite(config: SuiteConfig, out_dir: Optional[Path] = None, workers: Optional[int] = None) -> SuiteReport:
    return _run(config, config.strategies, out_dir, workers)


def run_ablation(config: SuiteConfig, out_dir: Optional[Path] = None, workers: Optional[int] = None) -> SuiteReport:
    """As variantes de ablação (A, A+B, A+C, A+B+C) em cada mapa da configuração."""
    return _run(config, config.variants, out_dir, workers)


# ------------------------------------------------------------------------------
# Gráficos
# ------------------------------------------------------------------------------

def second_marks(trajectory: Sequence[TrajectoryRow]) -> np.ndarray:
    """Índices das linhas da trajectória em t = 1, 2, ... s (um ponto por segundo)."""
    times = np.asarray([row[0] for row in trajectory], dtype=float)
    marks = np.arange(1, math.floor(times[-1] + 1e-9) + 1, dtype=float)
    return np.searchsorted(times, marks - 1e-9)


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_trajectory(trajectory: Sequence[TrajectoryRow], title: str, path: Path) -> Path:
    if not trajectory:
        raise InvalidArgumentError(f"Trajectória vazia: {title}")
    idx = second_marks(trajectory)
    xy = np.asarray([(row[1], row[2]) for row in trajectory], dtype=float)

    fig, ax = plt.subplots(figsize=(6, 6))
    ax.plot(xy[:, 0], xy[:, 1], color="0.8", linewidth=0.8)
    ax.scatter(xy[idx, 0], xy[idx, 1], s=6, color="tab:blue")
    ax.plot(*xy[0], marker="o", color="tab:green")
    ax.plot(*xy[-1], marker="x", color="tab:red")
    ax.set_title(title)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    return _save(fig, path)


def plot_coverage(series: Mapping[str, Sequence[TrajectoryRow]], scenario: str, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(7, 4))
    for label, trajectory in series.items():
        if not trajectory:
            raise InvalidArgumentError(f"Trajectória vazia: {scenario} / {label}")
        t = [row[0] for row in trajectory]
        c = [100.0 * row[6] for row in trajectory]
        ax.plot(t, c, label=label)
    ax.set_title(f"Cobertura - {scenario}")
    ax.set_xlabel("tempo [s]")
    ax.set_ylabel("cobertura [%]")
    ax.set_ylim(0, 100)
    ax.legend()
    return _save(fig, path)


def emit_plots(
    report: SuiteReport,
    trajectories: Mapping[TrialKey, Sequence[TrajectoryRow]],
    out_dir: Path,
) -> List[Path]:
    """
    Um SVG de trajectória por ensaio e um SVG de cobertura por cenário (uma série
    por estratégia, com a menor seed de cada uma).
    """
    if not report.rows:
        raise InvalidArgumentError("Relatório vazio: nada para desenhar")

    written: List[Path] = []
    by_scenario: Dict[str, Dict[str, Tuple[int, Sequence[TrajectoryRow]]]] = {}
    for key in sorted(trajectories):
        scenario, strategy, seed = key
        trajectory = trajectories[key]
        written.append(
            plot_trajectory(trajectory, f"{scenario} / {strategy} / seed {seed}",
                            out_dir / f"{scenario}__{strategy}__{seed}.svg")
        )
        series = by_scenario.setdefault(scenario, {})
        if strategy not in series or seed < series[strategy][0]:
            series[strategy] = (seed, trajectory)

    for scenario, series in by_scenario.items():
        ordered = {s: series[s][1] for s in sorted(series)}
        written.append(plot_coverage(ordered, scenario, out_dir / f"{scenario}__coverage.svg"))

    log.info("%d gráficos escritos em %s", len(written), out_dir)
    return written


def load_trajectories(in_dir: Path, trials: Iterable[TrialRow]) -> Dict[TrialKey, List[TrajectoryRow]]:
    out: Dict[TrialKey, List[TrajectoryRow]] = {}
    for t in trials:
        path = trajectory_path(in_dir, t.key)
        if path.exists():
            out[t.key] = read_trajectory_csv(path)
        else:
            log.warning("Trajectória em falta: %s", path)
    return out


def plot_directory(in_dir: Path | str) -> List[Path]:
    """Redesenha os gráficos de uma pasta escrita por run_suite / run_ablation."""
    in_dir = Path(in_dir)
    trials_path = in_dir / TRIALS_CSV
    if not trials_path.exists():
        raise InvalidArgumentError(f"{trials_path} não existe")
    trials = load_trials_csv(trials_path)
    report = aggregate(trials)
    return emit_plots(report, load_trajectories(in_dir, trials), in_dir / PLOT_DIR)
