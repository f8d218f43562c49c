"""
Selecção do alvo de exploração e caminhos A* nos dois níveis de grafo.

1) Se o HTG tiver regiões inexploradas, vai para a mais barata (custo A* no HTG
   a partir do nó temporário do robô) e usa o cluster associado a essa região.
2) Caso contrário escolhe o cluster de fronteira com menor C = P - alpha * I,
   com P o comprimento do caminho no LTG e I a informação total do cluster.

Em ambos os modos o alvo que o robô já segue mantém-se enquanto continuar
válido e o melhor candidato não o bater por mais de switch_margin.

Também define as estratégias de exploração usadas pelo simulador e pelos
ensaios (método completo, linhas de base e variantes de ablação).
"""

from __future__ import annotations

import heapq
import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, Hashable, Iterable, List, Mapping, Optional, Sequence, Set, Tuple, TypeVar

import numpy as np
from scipy.sparse import csgraph, csr_matrix

from .grid_map import InvalidArgumentError, OccupancyGrid, Point, lines_of_sight_free
from .htg import DEFAULT_D_EDGE, HighGraph, NodeKey
from .ltg import FrontierCluster, LowGraph


log = logging.getLogger(__name__)

K = TypeVar("K", bound=Hashable)

ROBOT_KEY: NodeKey = ("P", 0)
DEFAULT_ALPHA = 0.1


class PlannerDetachedError(RuntimeError):
    """O robô não tem nenhum nó do LTG a menos de 2 * d_sample."""


class PlanMode(Enum):
    REGION_FIRST = "RegionFirst"
    UTILITY_FRONTIER = "UtilityFrontier"


@dataclass(frozen=True)
class PlanResult:
    target_cluster: int
    path: Tuple[int, ...]
    cost: float
    mode: PlanMode
    target_region: Optional[int] = None


# ------------------------------------------------------------------------------
# Estratégias
# ------------------------------------------------------------------------------

@dataclass(frozen=True)
class Strategy:
    """
    name     -- nome usado nos cenários e nos relatórios
    use_htg  -- prioridade às regiões inexploradas do HTG
    use_lapf -- controlo por LAPF (senão, seguidor pure-pursuit do caminho A*);
                as baselines usam o mesmo LAPF que o método completo e só
                diferem na escolha do alvo
    alpha    -- peso da informação em C = P - alpha * I
    """

    name: str
    use_htg: bool
    use_lapf: bool
    alpha: float = DEFAULT_ALPHA

    def __post_init__(self):
        if self.alpha < 0:
            raise InvalidArgumentError(f"alpha não pode ser negativo (recebido {self.alpha})")


STRATEGIES: Dict[str, Strategy] = {
    s.name: s
    for s in (
        Strategy("dualgraph", use_htg=True, use_lapf=True, alpha=DEFAULT_ALPHA),
        Strategy("nearest", use_htg=False, use_lapf=True, alpha=0.0),
        Strategy("greedy-info", use_htg=False, use_lapf=True, alpha=10.0),
        Strategy("A", use_htg=False, use_lapf=False),
        Strategy("A+B", use_htg=True, use_lapf=False),
        Strategy("A+C", use_htg=False, use_lapf=True),
        Strategy("A+B+C", use_htg=True, use_lapf=True),
    )
}

ABLATION_VARIANTS: Tuple[str, ...] = ("A", "A+B", "A+C", "A+B+C")


def parse_variant(label: str) -> Strategy:
    """
    Variante de ablação a partir das letras activas: A = LTG, B = HTG, C = LAPF.
    O LTG é obrigatório.
    """
    parts = {p.strip().upper() for p in label.split("+") if p.strip()}
    unknown = parts - {"A", "B", "C"}
    if unknown:
        raise InvalidArgumentError(f"Componente de ablação desconhecida: {', '.join(sorted(unknown))}")
    if "A" not in parts:
        raise InvalidArgumentError(f"Variante '{label}' sem LTG: o LTG é obrigatório")
    name = "+".join(sorted(parts))
    return STRATEGIES[name]


def get_strategy(name: str) -> Strategy:
    try:
        return STRATEGIES[name]
    except KeyError:
        raise InvalidArgumentError(
            f"Estratégia desconhecida '{name}' (disponíveis: {', '.join(STRATEGIES)})"
        )


# ------------------------------------------------------------------------------
# Caminhos
# ------------------------------------------------------------------------------

def astar(
    positions: Mapping[K, Point],
    adjacency: Mapping[K, Iterable[K]],
    start: K,
    goal: K,
) -> Optional[Tuple[List[K], float]]:
    """
    A* com custo euclidiano e heurística em linha recta até ao objectivo.
    Em empate de f é expandido o nó de menor id. Devolve None se não houver caminho.
    """
    for node in (start, goal):
        if node not in positions:
            raise InvalidArgumentError(f"Nó inexistente: {node}")

    goal_pos = positions[goal]
    best: Dict[K, float] = {start: 0.0}
    parent: Dict[K, Optional[K]] = {start: None}
    closed: Set[K] = set()
    heap: List[Tuple[float, K]] = [(math.dist(positions[start], goal_pos), start)]

    while heap:
        _, node = heapq.heappop(heap)
        if node in closed:
            continue
        if node == goal:
            path = [node]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            path.reverse()
            return path, best[node]
        closed.add(node)

        here = positions[node]
        for other in sorted(adjacency.get(node, ())):
            if other in closed:
                continue
            g = best[node] + math.dist(here, positions[other])
            if g < best.get(other, math.inf):
                best[other] = g
                parent[other] = node
                heapq.heappush(heap, (g + math.dist(positions[other], goal_pos), other))
    return None


def graph_costs(ltg: LowGraph, source: int) -> Dict[int, float]:
    """Custo mínimo de `source` a todos os nós alcançáveis do LTG (Dijkstra do scipy sobre o grafo em CSR)."""
    if source not in ltg.nodes:
        raise InvalidArgumentError(f"Nó inexistente: {source}")
    ids = list(ltg.adjacency)
    index = {nid: i for i, nid in enumerate(ids)}
    rows: List[int] = []
    cols: List[int] = []
    for nid, nbrs in ltg.adjacency.items():
        i = index[nid]
        rows.extend([i] * len(nbrs))
        cols.extend(index[other] for other in nbrs)

    xy = np.array([ltg.nodes[nid].position for nid in ids], dtype=float).reshape(-1, 2)
    r = np.asarray(rows, dtype=np.int64)
    c = np.asarray(cols, dtype=np.int64)
    weights = np.hypot(xy[r, 0] - xy[c, 0], xy[r, 1] - xy[c, 1])
    matrix = csr_matrix((weights, (r, c)), shape=(len(ids), len(ids)))
    dist = csgraph.dijkstra(matrix, directed=True, indices=index[source])
    reached = np.flatnonzero(np.isfinite(dist))
    return {ids[i]: float(dist[i]) for i in reached}


def path_length(positions: Mapping[K, Point], path: Sequence[K]) -> float:
    return sum(math.dist(positions[a], positions[b]) for a, b in zip(path, path[1:]))


# ------------------------------------------------------------------------------
# Selecção do alvo
# ------------------------------------------------------------------------------

def attach_robot(
    htg: HighGraph,
    robot_pose: Point,
    grid: OccupancyGrid,
    d_edge: float = DEFAULT_D_EDGE,
) -> Tuple[Dict[NodeKey, Point], Dict[NodeKey, Set[NodeKey]]]:
    """
    Vista do HTG com o nó temporário do robô ligado aos nós a no máximo d_edge
    com linha de vista livre. O HTG original não é alterado.
    """
    positions = htg.positions
    adjacency = htg.adjacency
    cells = htg.cells
    positions[ROBOT_KEY] = (float(robot_pose[0]), float(robot_pose[1]))
    adjacency[ROBOT_KEY] = set()

    robot_cell = grid.world_to_cell(robot_pose)
    if not grid.in_bounds(robot_cell):
        return positions, adjacency

    near = [
        key for key, cell in cells.items()
        if math.dist(positions[key], robot_pose) <= d_edge and grid.in_bounds(cell)
    ]
    if not near:
        return positions, adjacency
    ends = np.array([cells[key] for key in near], dtype=np.int64)
    starts = np.broadcast_to(np.asarray(robot_cell, dtype=np.int64), ends.shape)
    for key, free in zip(near, lines_of_sight_free(grid, starts, ends)):
        if free:
            adjacency[ROBOT_KEY].add(key)
            adjacency[key].add(ROBOT_KEY)
    return positions, adjacency


def _valid_clusters(
    clusters: Sequence[FrontierCluster],
    ltg: LowGraph,
    grid: OccupancyGrid,
    suppressed: Sequence[Point],
) -> Dict[int, FrontierCluster]:
    valid: Dict[int, FrontierCluster] = {}
    for cluster in clusters:
        node = ltg.nodes.get(cluster.center_node)
        if node is None or not grid.free_mask[node.cell[1], node.cell[0]]:
            continue
        if any(math.dist(cluster.center_position, p) <= ltg.d_sample for p in suppressed):
            continue
        valid[cluster.id] = cluster
    return valid


def _pick(
    options: Mapping[int, Tuple[float, int]],
    valid: Mapping[int, FrontierCluster],
    current: Optional[Point],
    radius: float,
    switch_margin: float,
) -> int:
    """
    Cluster de menor (custo, desempate). O cluster do alvo actual (centro a
    menos de `radius`) mantém-se enquanto não custar mais do que o melhor
    somado de `switch_margin`.
    """
    best = min(options, key=lambda c: options[c])
    if current is None:
        return best
    held = [c for c in options if math.dist(valid[c].center_position, current) <= radius]
    if not held:
        return best
    keep = min(held, key=lambda c: options[c])
    if keep != best and options[keep][0] <= options[best][0] + switch_margin:
        log.debug(
            "Mantém o cluster %d (%.2f) em vez do %d (%.2f)", keep, options[keep][0], best, options[best][0]
        )
        return keep
    return best


def select_target(
    ltg: LowGraph,
    htg: Optional[HighGraph],
    clusters: Sequence[FrontierCluster],
    robot_pose: Point,
    alpha: float,
    grid: OccupancyGrid,
    d_edge: float = DEFAULT_D_EDGE,
    suppressed: Sequence[Point] = (),
    current: Optional[Point] = None,
    switch_margin: float = 0.0,
) -> Optional[PlanResult]:
    """
    Alvo seguinte, ou None quando já não há clusters alcançáveis (exploração concluída).
    Com `htg` a None a prioridade às regiões fica desligada.

    `current` é o alvo que o robô já está a seguir: continua escolhido enquanto
    o seu cluster for válido, alcançável e do mesmo modo, e o melhor candidato
    não o bater por mais de `switch_margin`. Uma região inexplorada ganha sempre
    a um alvo de utilidade.
    """
    if alpha < 0:
        raise InvalidArgumentError(f"alpha não pode ser negativo (recebido {alpha})")
    if switch_margin < 0:
        raise InvalidArgumentError(f"switch_margin não pode ser negativo (recebido {switch_margin})")

    robot_node = ltg.nearest_node(robot_pose, 2 * ltg.d_sample)
    if robot_node is None:
        raise PlannerDetachedError(
            f"Nenhum nó do LTG a menos de {2 * ltg.d_sample:.2f} m de "
            f"({robot_pose[0]:.2f}, {robot_pose[1]:.2f})"
        )

    valid = _valid_clusters(clusters, ltg, grid, suppressed)
    if not valid:
        return None

    costs = graph_costs(ltg, robot_node)

    chosen: Optional[Tuple[int, PlanMode, Optional[int]]] = None

    if htg is not None and htg.unexplored_regions:
        positions, adjacency = attach_robot(htg, robot_pose, grid, d_edge)
        # cluster -> (custo, id da região)
        by_region: Dict[int, Tuple[float, int]] = {}
        for region in sorted(htg.unexplored_regions, key=lambda r: r.id):
            cluster = valid.get(region.matched_cluster)
            if cluster is None or cluster.center_node not in costs:
                continue
            found = astar(positions, adjacency, ROBOT_KEY, region.key)
            # região ainda não ligada ao HTG: custo do caminho no LTG
            cost = found[1] if found is not None else costs[cluster.center_node]
            if cluster.id not in by_region or (cost, region.id) < by_region[cluster.id]:
                by_region[cluster.id] = (cost, region.id)
        if by_region:
            cid = _pick(by_region, valid, current, ltg.d_sample, switch_margin)
            chosen = (cid, PlanMode.REGION_FIRST, by_region[cid][1])

    if chosen is None:
        by_utility: Dict[int, Tuple[float, int]] = {}
        for cid, cluster in valid.items():
            p = costs.get(cluster.center_node)
            if p is not None:
                by_utility[cid] = (p - alpha * cluster.total_info, cid)
        if not by_utility:
            log.debug("Nenhum cluster alcançável a partir do nó %d", robot_node)
            return None
        cid = _pick(by_utility, valid, current, ltg.d_sample, switch_margin)
        chosen = (cid, PlanMode.UTILITY_FRONTIER, None)

    cid, mode, region_id = chosen
    found = astar(ltg.positions, ltg.adjacency, robot_node, valid[cid].center_node)
    if found is None:
        raise AssertionError("cluster alcançável no Dijkstra sem caminho A*")
    path, cost = found

    log.debug("Alvo: cluster %d (%s), %d nós, %.2f m", cid, mode.value, len(path), cost)
    return PlanResult(
        target_cluster=cid,
        path=tuple(path),
        cost=cost,
        mode=mode,
        target_region=region_id,
    )
