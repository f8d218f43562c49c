"""
Grafo topológico de alto nível (HTG).

O LTG é erodido até sobrarem os núcleos convexos de cada zona; cada núcleo dá
um nó de região, marcado como inexplorado se vir (linha de Bresenham livre) um
cluster de fronteira próximo. Os marcadores de trilho deixados ao longo do
percurso do robô ligam as regiões ao robô.

Os nós de região são recalculados em cada actualização do mapa; os marcadores
de trilho persistem durante todo o episódio.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np
from scipy import ndimage

from .grid_map import Cell, InvalidArgumentError, OccupancyGrid, Point, line_of_sight_free, lines_of_sight_free
from .ltg import FrontierCluster, LowGraph


log = logging.getLogger(__name__)

NodeKey = Tuple[str, int]
Edge = Tuple[NodeKey, NodeKey]

FULL_DEGREE = 8

DEFAULT_N_MAX = 50
DEFAULT_D_REGION = 6.0
DEFAULT_R_TRAIL = 1.0
DEFAULT_R_EDGE = 2.5
DEFAULT_D_EDGE = 6.0
DEFAULT_MIN_INTERVAL = 2.0


# ------------------------------------------------------------------------------
# Tipos
# ------------------------------------------------------------------------------

@dataclass(frozen=True)
class RegionNode:
    id: int
    position: Point
    cell: Cell
    is_unexplored: bool
    matched_cluster: Optional[int]
    source_component_size: int

    @property
    def key(self) -> NodeKey:
        return ("R", self.id)


@dataclass(frozen=True)
class TrailNode:
    id: int
    position: Point
    cell: Cell
    created_at: float

    @property
    def key(self) -> NodeKey:
        return ("T", self.id)


def _edge(a: NodeKey, b: NodeKey) -> Edge:
    return (a, b) if a <= b else (b, a)


@dataclass(frozen=True)
class HighGraph:
    region_nodes: Tuple[RegionNode, ...] = ()
    trail_nodes: Tuple[TrailNode, ...] = ()
    edges: FrozenSet[Edge] = frozenset()
    last_drop: Optional[float] = None

    @property
    def cells(self) -> Dict[NodeKey, Cell]:
        out: Dict[NodeKey, Cell] = {r.key: r.cell for r in self.region_nodes}
        out.update({t.key: t.cell for t in self.trail_nodes})
        return out

    @property
    def positions(self) -> Dict[NodeKey, Point]:
        out: Dict[NodeKey, Point] = {r.key: r.position for r in self.region_nodes}
        out.update({t.key: t.position for t in self.trail_nodes})
        return out

    @property
    def adjacency(self) -> Dict[NodeKey, Set[NodeKey]]:
        adj: Dict[NodeKey, Set[NodeKey]] = {key: set() for key in self.positions}
        for a, b in self.edges:
            adj[a].add(b)
            adj[b].add(a)
        return adj

    @property
    def unexplored_regions(self) -> List[RegionNode]:
        return [r for r in self.region_nodes if r.is_unexplored]

    def region(self, rid: int) -> RegionNode:
        for r in self.region_nodes:
            if r.id == rid:
                return r
        raise KeyError(rid)

    def with_regions(self, regions: Sequence[RegionNode]) -> "HighGraph":
        """Troca os nós de região; as arestas que tocavam regiões antigas caem."""
        kept = frozenset(e for e in self.edges if e[0][0] == "T" and e[1][0] == "T")
        return replace(self, region_nodes=tuple(regions), edges=kept)


# ------------------------------------------------------------------------------
# Erosão
# ------------------------------------------------------------------------------

_EIGHT = np.ones((3, 3), dtype=bool)
_RING = np.array([[1, 1, 1], [1, 0, 1], [1, 1, 1]], dtype=np.int64)


def lattice_mask(graph: LowGraph) -> np.ndarray:
    """
    Máscara da malha (linha iy, coluna ix) com os nós de grau 8 do LTG.
    Dois nós de grau 8 vizinhos na malha estão sempre ligados, por isso o
    grafo que sobra é o induzido pela vizinhança-8 da máscara.
    """
    px, py = graph.phase
    k = graph.k
    shape = (max(0, -(-(graph.height - py) // k)), max(0, -(-(graph.width - px) // k)))
    mask = np.zeros(shape, dtype=bool)
    full = [node.cell for node in graph.nodes.values() if node.degree >= FULL_DEGREE]
    if full:
        cells = np.asarray(full, dtype=np.int64)
        mask[(cells[:, 1] - py) // k, (cells[:, 0] - px) // k] = True
    return mask


def full_nodes(mask: np.ndarray) -> np.ndarray:
    """Nós da máscara com os 8 vizinhos presentes."""
    degree = ndimage.convolve(mask.astype(np.int64), _RING, mode="constant", cval=0)
    return mask & (degree >= FULL_DEGREE)


def erode_once(mask: np.ndarray) -> np.ndarray:
    """
    Um ciclo de erosão: em cada componente 8-conexa com pelo menos um nó de
    grau 8, remove os nós de grau < 8. Componentes sem nós de grau 8 ficam
    intactas.
    """
    full = full_nodes(mask)
    if not full.any():
        return mask.copy()
    labels, _ = ndimage.label(mask, structure=_EIGHT)
    touched = np.isin(labels, np.unique(labels[full]))
    return mask & ~(touched & ~full)


def erode_mask(mask: np.ndarray, n_max: int = DEFAULT_N_MAX) -> Tuple[np.ndarray, int]:
    """Erode até não haver nós de grau 8 ou até n_max ciclos. Devolve (máscara, ciclos)."""
    if n_max < 1:
        raise InvalidArgumentError(f"n_max tem de ser >= 1 (recebido {n_max})")
    cycles = 0
    while cycles < n_max and full_nodes(mask).any():
        mask = erode_once(mask)
        cycles += 1
    return mask, cycles


def erode_to_regions(graph: LowGraph, n_max: int = DEFAULT_N_MAX) -> List[Set[int]]:
    """
    Retira os nós de grau < 8 do LTG e erode até não haver nós de grau 8
    (ou n_max ciclos). Devolve as componentes sobreviventes (ids do LTG),
    ordenadas pelo menor id de nó.
    """
    mask, cycles = erode_mask(lattice_mask(graph), n_max)
    labels, count = ndimage.label(mask, structure=_EIGHT)

    iy, ix = np.nonzero(labels)
    px, py = graph.phase
    ids = (py + iy * graph.k) * graph.width + (px + ix * graph.k)
    owner = labels[iy, ix]
    components = [set(ids[owner == label].tolist()) for label in range(1, count + 1)]
    components.sort(key=min)
    log.debug("Erosão: %d ciclos, %d componentes", cycles, len(components))
    return components


# ------------------------------------------------------------------------------
# Nós de região
# ------------------------------------------------------------------------------

def assess_regions(
    components: Sequence[Set[int]],
    graph: LowGraph,
    grid: OccupancyGrid,
    clusters: Sequence[FrontierCluster],
    d_region: float = DEFAULT_D_REGION,
) -> List[RegionNode]:
    """
    Um nó de região por componente, no centro geométrico dos seus nós.
    A região é inexplorada se algum cluster a menos de d_region tiver linha de
    Bresenham livre desde a célula da região; o cluster associado é o mais
    próximo desses (desempate pelo id).
    """
    regions: List[RegionNode] = []
    for rid, comp in enumerate(components):
        members = sorted(comp)
        mean = (
            sum(graph.nodes[m].position[0] for m in members) / len(members),
            sum(graph.nodes[m].position[1] for m in members) / len(members),
        )
        position = mean
        cell = grid.world_to_cell(mean)

        # componente côncava: o centro pode cair fora do espaço livre
        if not (grid.in_bounds(cell) and grid.free_mask[cell[1], cell[0]]):
            snap = min(members, key=lambda m: (math.dist(mean, graph.nodes[m].position), m))
            position = graph.nodes[snap].position
            cell = graph.nodes[snap].cell

        visible: List[Tuple[float, int]] = []
        for cluster in clusters:
            dist = math.dist(position, cluster.center_position)
            if dist > d_region:
                continue
            target = graph.nodes[cluster.center_node].cell
            if line_of_sight_free(grid, cell, target):
                visible.append((dist, cluster.id))

        matched = min(visible)[1] if visible else None
        regions.append(
            RegionNode(
                id=rid,
                position=position,
                cell=cell,
                is_unexplored=matched is not None,
                matched_cluster=matched,
                source_component_size=len(members),
            )
        )
    return regions


def build_regions(
    graph: LowGraph,
    grid: OccupancyGrid,
    clusters: Sequence[FrontierCluster],
    n_max: int = DEFAULT_N_MAX,
    d_region: float = DEFAULT_D_REGION,
) -> List[RegionNode]:
    return assess_regions(erode_to_regions(graph, n_max), graph, grid, clusters, d_region)


# ------------------------------------------------------------------------------
# Marcadores de trilho e arestas
# ------------------------------------------------------------------------------

def maybe_drop_trail(
    htg: HighGraph,
    pose: Point,
    now: float,
    grid: OccupancyGrid,
    r_trail: float = DEFAULT_R_TRAIL,
    r_edge: float = DEFAULT_R_EDGE,
    min_interval: float = DEFAULT_MIN_INTERVAL,
) -> HighGraph:
    """
    Deixa um marcador na pose do robô se já passou min_interval desde o último
    e não há nenhum a menos de r_trail. O novo marcador liga-se aos marcadores
    a no máximo r_edge com linha de vista livre.
    """
    if not r_edge > r_trail:
        raise InvalidArgumentError(f"r_edge ({r_edge}) tem de ser maior que r_trail ({r_trail})")
    if not min_interval > 0:
        raise InvalidArgumentError(f"min_interval tem de ser positivo (recebido {min_interval})")

    if htg.last_drop is not None and now - htg.last_drop < min_interval:
        return htg
    if any(math.dist(pose, t.position) < r_trail for t in htg.trail_nodes):
        return htg

    cell = grid.world_to_cell(pose)
    next_id = htg.trail_nodes[-1].id + 1 if htg.trail_nodes else 0
    node = TrailNode(id=next_id, position=(float(pose[0]), float(pose[1])), cell=cell, created_at=now)

    new_edges: Set[Edge] = set()
    if grid.in_bounds(cell):
        for other in htg.trail_nodes:
            if math.dist(node.position, other.position) > r_edge:
                continue
            if line_of_sight_free(grid, cell, other.cell):
                new_edges.add(_edge(node.key, other.key))

    log.debug("Marcador de trilho %d em (%.2f, %.2f), %d arestas", next_id, pose[0], pose[1], len(new_edges))
    return replace(
        htg,
        trail_nodes=htg.trail_nodes + (node,),
        edges=htg.edges | frozenset(new_edges),
        last_drop=now,
    )


def connect_by_sight(
    positions: Dict[NodeKey, Point],
    cells: Dict[NodeKey, Cell],
    grid: OccupancyGrid,
    d_edge: float,
) -> Set[Edge]:
    """Todos os pares a no máximo d_edge com linha de Bresenham livre (verificados em lote)."""
    keys = sorted(positions)
    if len(keys) < 2:
        return set()

    pts = np.array([positions[k] for k in keys], dtype=float)
    dist = np.hypot(pts[:, None, 0] - pts[None, :, 0], pts[:, None, 1] - pts[None, :, 1])
    ii, jj = np.nonzero(np.triu(dist <= d_edge, k=1))

    cell_arr = np.array([cells[k] for k in keys], dtype=np.int64)
    inside = (
        (cell_arr[:, 0] >= 0) & (cell_arr[:, 0] < grid.width)
        & (cell_arr[:, 1] >= 0) & (cell_arr[:, 1] < grid.height)
    )
    keep = inside[ii] & inside[jj]
    ii, jj = ii[keep], jj[keep]
    free = lines_of_sight_free(grid, cell_arr[ii], cell_arr[jj])
    return {_edge(keys[i], keys[j]) for i, j in zip(ii[free].tolist(), jj[free].tolist())}


def rebuild_edges(htg: HighGraph, grid: OccupancyGrid, d_edge: float = DEFAULT_D_EDGE) -> HighGraph:
    """Recalcula todas as arestas do HTG (regiões e marcadores da mesma forma)."""
    edges = connect_by_sight(htg.positions, htg.cells, grid, d_edge)
    return replace(htg, edges=frozenset(edges))


# ------------------------------------------------------------------------------
# Exportação
# ------------------------------------------------------------------------------

def export_graph(htg: HighGraph) -> str:
    """
    Mesmo formato do LTG com etiqueta de tipo:
    `R <id> <cx> <cy> <degree> unexplored=<0|1>`, `T ...` e `E <R|T>:<id> <R|T>:<id>`.
    """
    adj = htg.adjacency
    lines = [
        f"R {r.id} {r.cell[0]} {r.cell[1]} {len(adj[r.key])} unexplored={int(r.is_unexplored)}"
        for r in htg.region_nodes
    ]
    lines += [
        f"T {t.id} {t.cell[0]} {t.cell[1]} {len(adj[t.key])} unexplored=0"
        for t in htg.trail_nodes
    ]
    lines += [f"E {a[0]}:{a[1]} {b[0]}:{b[1]}" for a, b in sorted(htg.edges)]
    return "\n".join(lines) + "\n"
