"""
Simulador determinístico usado pelos ensaios:
- cinemática do robô diferencial com limites de velocidade e aceleração
- LiDAR 2D de 360 feixes por amostragem ao longo de cada feixe
- integração do varrimento no mapa de crença (em vez de SLAM)
- ciclo do episódio: controlo a 20 Hz, mapa + grafos + alvo a 1 Hz

Este módulo é independente do Django. O Django (ou o runner) passa um
cenário e recebe um EpisodeResult.
"""

from __future__ import annotations

import csv
import logging
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .config_loader import Scenario
from .grid_map import (
    CellState,
    GridDiff,
    GroundTruth,
    InvalidArgumentError,
    OccupancyGrid,
    Point,
    masked_coverage,
    observable_mask,
)
from .htg import HighGraph, build_regions, maybe_drop_trail, rebuild_edges
from .lapf import advance_path, lapf_direction, pursuit_command, to_command
from .ltg import FrontierCluster, LowGraph, build_full, detect_frontiers, update as update_ltg
from .planner import PlannerDetachedError, PlanResult, Strategy, select_target
from .robot import ControlCommand, ControlLimits, RobotState, rate_limited, wrap_angle


log = logging.getLogger(__name__)

START_JITTER = 0.1
TRAJECTORY_HEADER = ("t", "x", "y", "theta", "v", "omega", "coverage")


class CollisionError(RuntimeError):
    """O robô entrou numa célula ocupada (ou fora do mapa) da verdade-terreno."""


# ------------------------------------------------------------------------------
# Cinemática
# ------------------------------------------------------------------------------

def step_kinematics(
    state: RobotState,
    cmd: ControlCommand,
    dt: float,
    world: Optional[GroundTruth] = None,
    limits: ControlLimits = ControlLimits(),
) -> RobotState:
    """
    Integra um passo do monociclo. As velocidades aproximam-se do comando
    dentro dos limites de aceleração; a pose é integrada com as novas velocidades.
    """
    if not dt > 0:
        raise InvalidArgumentError(f"dt tem de ser positivo (recebido {dt})")

    applied = rate_limited(ControlCommand(state.v, state.omega), cmd, limits, dt)
    heading = wrap_angle(state.heading + applied.omega * dt)
    x = state.position[0] + applied.v * dt * math.cos(heading)
    y = state.position[1] + applied.v * dt * math.sin(heading)

    if world is not None:
        cell = world.grid.world_to_cell((x, y))
        if world.is_blocked(cell):
            raise CollisionError(f"Colisão em ({x:.3f}, {y:.3f}), célula {cell}")

    return RobotState(position=(x, y), heading=heading, v=applied.v, omega=applied.omega)


# ------------------------------------------------------------------------------
# Sensor
# ------------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SensorScan:
    """
    Um varrimento. `bearings` no referencial do mundo; `ranges` em (0, max_range];
    `hits` False quando não houve retorno. `clear_ranges` é a distância até onde
    o espaço livre está confirmado (inferior a `ranges` nos feixes perdidos em vidro).
    """

    origin: Point
    bearings: np.ndarray
    ranges: np.ndarray
    hits: np.ndarray
    clear_ranges: np.ndarray
    max_range: float

    def __len__(self) -> int:
        return int(self.bearings.size)


def _sample_distances(resolution: float, max_range: float) -> np.ndarray:
    n = max(1, int(math.ceil(max_range / (resolution / 4.0) - 1e-9)))
    return np.arange(1, n + 1, dtype=float) * (max_range / n)


def _beam_cells(grid: OccupancyGrid, origin: Point, bearings: np.ndarray, dists: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    px = origin[0] + np.cos(bearings)[:, None] * dists[None, :]
    py = origin[1] + np.sin(bearings)[:, None] * dists[None, :]
    cx = np.floor((px - grid.origin[0]) / grid.resolution).astype(np.int64)
    cy = np.floor((py - grid.origin[1]) / grid.resolution).astype(np.int64)
    return cx, cy


def scan(world: GroundTruth, state: RobotState, beams: int = 360, max_range: float = 8.0) -> SensorScan:
    """
    Lança `beams` feixes igualmente espaçados, amostrados a cada resolução/4.
    O alcance é a distância da primeira amostra dentro de uma célula ocupada.
    Fora do mapa não há retorno.
    """
    grid = world.grid
    dists = _sample_distances(grid.resolution, max_range)
    bearings = np.arange(beams, dtype=float) * (2.0 * math.pi / beams)
    cx, cy = _beam_cells(grid, state.position, bearings, dists)

    inside = (cx >= 0) & (cx < grid.width) & (cy >= 0) & (cy < grid.height)
    cxc = np.clip(cx, 0, grid.width - 1)
    cyc = np.clip(cy, 0, grid.height - 1)
    blocked = inside & grid.occupied_mask[cyc, cxc]

    any_block = blocked.any(axis=1)
    first = blocked.argmax(axis=1)
    rows = np.arange(beams)
    on_glass = any_block & world.transparent[cyc[rows, first], cxc[rows, first]]

    first_dist = np.where(any_block, dists[first], max_range)
    hits = any_block & ~on_glass
    ranges = np.where(hits, first_dist, max_range)

    for arr in (bearings, ranges, hits, first_dist):
        arr.flags.writeable = False
    return SensorScan(
        origin=(float(state.position[0]), float(state.position[1])),
        bearings=bearings,
        ranges=ranges,
        hits=hits,
        clear_ranges=first_dist,
        max_range=max_range,
    )


def integrate_scan(belief: OccupancyGrid, sc: SensorScan) -> Tuple[OccupancyGrid, GridDiff]:
    """
    Marca como livres as amostras antes de `clear_range` e como ocupada a célula
    do retorno. Células ocupadas nunca voltam atrás. Sem alterações, devolve a
    mesma grelha e uma diferença vazia.
    """
    dists = _sample_distances(belief.resolution, sc.max_range)
    cx, cy = _beam_cells(belief, sc.origin, sc.bearings, dists)
    inside = (cx >= 0) & (cx < belief.width) & (cy >= 0) & (cy < belief.height)

    free = inside & (dists[None, :] < sc.clear_ranges[:, None])
    free_idx = cy[free] * belief.width + cx[free]

    hit_cx = np.floor((sc.origin[0] + np.cos(sc.bearings) * sc.ranges - belief.origin[0]) / belief.resolution).astype(np.int64)
    hit_cy = np.floor((sc.origin[1] + np.sin(sc.bearings) * sc.ranges - belief.origin[1]) / belief.resolution).astype(np.int64)
    hit_ok = sc.hits & (hit_cx >= 0) & (hit_cx < belief.width) & (hit_cy >= 0) & (hit_cy < belief.height)
    hit_idx = hit_cy[hit_ok] * belief.width + hit_cx[hit_ok]

    ox, oy = belief.world_to_cell(sc.origin)
    if belief.in_bounds((ox, oy)):
        free_idx = np.append(free_idx, oy * belief.width + ox)

    current = belief.cells.reshape(-1)
    target = current.copy()
    free_idx = np.unique(free_idx)
    target[free_idx] = np.where(current[free_idx] == CellState.OCCUPIED, CellState.OCCUPIED, CellState.FREE)
    target[hit_idx] = CellState.OCCUPIED

    changed = np.flatnonzero(target != current)
    if changed.size == 0:
        return belief, GridDiff.empty()
    d = GridDiff(indices=changed, old=current[changed].copy(), new=target[changed].copy())
    return belief.with_updates(changed, target[changed]), d


# ------------------------------------------------------------------------------
# Resultado do episódio
# ------------------------------------------------------------------------------

TrajectoryRow = Tuple[float, float, float, float, float, float, float]


@dataclass
class EpisodeResult:
    map_name: str
    strategy: str
    seed: int
    scenario: str = ""
    success: bool = False
    failure_reason: Optional[str] = None
    end_reason: str = ""
    time_s: float = 0.0
    distance_m: float = 0.0
    final_coverage: float = 0.0
    compute_ms: List[float] = field(default_factory=list)
    frontier_ms: List[float] = field(default_factory=list)
    target_ms: List[float] = field(default_factory=list)
    other_ms: List[float] = field(default_factory=list)
    trajectory: List[TrajectoryRow] = field(default_factory=list)
    coverage_trace: List[Tuple[float, float]] = field(default_factory=list)
    targets: List[Point] = field(default_factory=list)
    errors: List[str] = field(default_factory=list)
    # mapa de crença no fim do episódio
    final_map: Optional[OccupancyGrid] = field(default=None, repr=False, compare=False)

    @staticmethod
    def _mean(values: Sequence[float]) -> float:
        return float(np.mean(values)) if values else 0.0

    @property
    def mean_compute_ms(self) -> float:
        return self._mean(self.compute_ms)

    @property
    def mean_frontier_ms(self) -> float:
        return self._mean(self.frontier_ms)

    @property
    def mean_target_ms(self) -> float:
        return self._mean(self.target_ms)

    @property
    def mean_other_ms(self) -> float:
        return self._mean(self.other_ms)


def write_trajectory_csv(trajectory: Sequence[TrajectoryRow], path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        for row in trajectory:
            writer.writerow([f"{value:.6f}" for value in row])
    return path


def read_trajectory_csv(path: Path | str) -> List[TrajectoryRow]:
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header) != TRAJECTORY_HEADER:
            raise InvalidArgumentError(f"{path}: cabeçalho de trajectória inválido")
        return [tuple(float(v) for v in row) for row in reader if row]


# ------------------------------------------------------------------------------
# Episódio
# ------------------------------------------------------------------------------

def _initial_state(world: GroundTruth, scenario: Scenario) -> RobotState:
    """Rumo uniforme em [-pi, pi) e desvio de até 10 cm na partida, ambos tirados da seed."""
    start_cell = world.grid.world_to_cell(scenario.start)
    if world.is_blocked(start_cell):
        raise InvalidArgumentError(f"Partida ({scenario.start[0]}, {scenario.start[1]}) não está numa célula livre")

    rng = np.random.default_rng(scenario.seed)
    heading = float(rng.uniform(-math.pi, math.pi))
    radius = float(rng.uniform(0.0, START_JITTER))
    angle = float(rng.uniform(-math.pi, math.pi))
    if scenario.start_heading is not None:
        heading = wrap_angle(scenario.start_heading)

    position = (scenario.start[0] + radius * math.cos(angle), scenario.start[1] + radius * math.sin(angle))
    if world.is_blocked(world.grid.world_to_cell(position)):
        position = (float(scenario.start[0]), float(scenario.start[1]))
    return RobotState(position=position, heading=heading)


def _still_targeted(target: Point, clusters: Sequence[FrontierCluster], radius: float) -> bool:
    return any(math.dist(c.center_position, target) <= radius for c in clusters)


def _remaining_length(position: Point, remaining: Sequence[Point]) -> float:
    """Comprimento da poligonal robô -> nós ainda por ultrapassar."""
    points = [position, *remaining]
    return sum(math.dist(a, b) for a, b in zip(points, points[1:]))


def run_episode(world: GroundTruth, strategy: Strategy, scenario: Scenario) -> EpisodeResult:
    """
    Corre um episódio completo. Colisões e o limite de tempo terminam o
    episódio como falhado; as métricas parciais ficam no resultado.
    """
    params = scenario.params
    limits = params.limits
    dt = params.dt_control
    alpha = strategy.alpha if params.alpha is None else params.alpha
    grid = world.grid

    state = _initial_state(world, scenario)
    mask = observable_mask(world, grid.world_to_cell(state.position), clearance=params.corridor_width // 2)

    result = EpisodeResult(
        map_name=world.name or scenario.map_name,
        strategy=strategy.name,
        seed=scenario.seed,
        scenario=scenario.name,
    )
    log.info(
        "Episódio %s / %s / seed %d: partida (%.2f, %.2f)",
        result.map_name, strategy.name, scenario.seed, state.position[0], state.position[1],
    )

    belief = OccupancyGrid.unknown(grid.width, grid.height, grid.resolution, grid.origin)
    ltg: Optional[LowGraph] = None
    htg = HighGraph()
    plan: Optional[PlanResult] = None
    path_points: List[Point] = []
    path_index = 0
    target: Optional[Point] = None
    suppressed: List[Point] = []
    # menor comprimento de caminho até ao alvo actual e instante em que foi atingido
    closest = math.inf
    closest_t = 0.0
    coverage = 0.0
    tick = 0
    t = 0.0

    while True:
        if tick % params.ticks_per_update == 0:
            sc = scan(world, state, params.beams, params.max_range)
            belief, d = integrate_scan(belief, sc)
            coverage = masked_coverage(belief, mask)
            result.coverage_trace.append((t, coverage))
            if tick == 0:
                result.trajectory.append((t, *state.position, state.heading, state.v, state.omega, coverage))

            t0 = time.perf_counter()
            ltg = build_full(belief, params.k, params.corridor_width) if ltg is None else update_ltg(ltg, belief, d)
            t1 = time.perf_counter()
            clusters = detect_frontiers(ltg, belief, params.d_max, params.tau)
            t2 = time.perf_counter()
            if strategy.use_htg:
                regions = build_regions(ltg, belief, clusters, params.n_max, params.d_region)
                htg = rebuild_edges(htg.with_regions(regions), belief, params.d_edge)
            t3 = time.perf_counter()

            if coverage >= scenario.coverage_threshold:
                result.success, result.end_reason = True, "coverage"
                break

            if target is not None and math.dist(state.position, target) <= ltg.d_sample:
                if _still_targeted(target, clusters, ltg.d_sample):
                    log.warning("Fronteira em (%.2f, %.2f) não resolvida ao chegar: suprimida", *target)
                    suppressed.append(target)
            elif target is not None:
                left = _remaining_length(state.position, path_points[path_index:])
                if left < closest - ltg.d_sample:
                    closest, closest_t = left, t
                elif t - closest_t > params.stall_time_s:
                    log.warning(
                        "Sem avanço até (%.2f, %.2f) em %.0f s: alvo suprimido",
                        target[0], target[1], params.stall_time_s,
                    )
                    suppressed.append(target)
                    target = None

            try:
                new_plan = select_target(
                    ltg,
                    htg if strategy.use_htg else None,
                    clusters,
                    state.position,
                    alpha,
                    belief,
                    d_edge=params.d_edge,
                    suppressed=suppressed,
                    current=target,
                    switch_margin=params.switch_margin,
                )
            except PlannerDetachedError as e:
                log.warning("Planeador desligado do grafo: %s", e)
                result.errors.append(f"t={t:.1f}s: {e}")
                if plan is None:
                    result.failure_reason = "detached"
                    break
                new_plan = plan
            t4 = time.perf_counter()

            result.frontier_ms.append((t2 - t1) * 1000.0)
            result.target_ms.append((t4 - t3) * 1000.0)
            result.other_ms.append(((t1 - t0) + (t3 - t2)) * 1000.0)
            result.compute_ms.append((t4 - t0) * 1000.0)

            if new_plan is None:
                result.success, result.end_reason = True, "complete"
                break

            if new_plan is not plan:
                plan = new_plan
                path_points = [ltg.nodes[n].position for n in plan.path]
                path_index = 0
                if target is None or math.dist(target, path_points[-1]) > ltg.d_sample:
                    result.targets.append(path_points[-1])
                    closest, closest_t = _remaining_length(state.position, path_points), t
                target = path_points[-1]

        if strategy.use_htg:
            htg = maybe_drop_trail(
                htg, state.position, t, belief, params.r_trail, params.r_edge, params.min_interval
            )

        path_index = advance_path(state.position, path_points, path_index, ltg.d_sample / 2)
        remaining = path_points[path_index:]
        if strategy.use_lapf:
            heading_ref = lapf_direction(
                belief, state.position, remaining, ltg.d_sample, params.w1, params.w2, target=target
            )
            cmd = to_command(heading_ref, state, limits, dt)
        else:
            cmd = pursuit_command(state, remaining, limits, dt, lookahead=ltg.d_sample)

        try:
            new_state = step_kinematics(state, cmd, dt, world, limits)
        except CollisionError as e:
            log.warning("Episódio %s / %s / seed %d: %s", result.map_name, strategy.name, scenario.seed, e)
            result.errors.append(str(e))
            result.failure_reason = "collision"
            break

        result.distance_m += math.dist(state.position, new_state.position)
        state = new_state
        tick += 1
        t = tick * dt
        result.trajectory.append((t, *state.position, state.heading, state.v, state.omega, coverage))

        if t > params.max_time_s:
            result.failure_reason = "timeout"
            break

    result.time_s = t
    result.final_coverage = coverage
    result.final_map = belief
    if not result.success:
        result.end_reason = result.end_reason or (result.failure_reason or "")

    log.info(
        "Episódio %s / %s / seed %d terminado (%s): %.1f s, %.2f m, cobertura %.1f%%",
        result.map_name, strategy.name, scenario.seed, result.end_reason,
        result.time_s, result.distance_m, 100.0 * coverage,
    )
    return result
