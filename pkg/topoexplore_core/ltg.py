"""
Grafo topológico de baixo nível (LTG).

- amostragem uniforme das células livres com passo k (d_sample = k * d_grid)
- arestas entre vizinhos-8 da malha, validadas por um corredor livre
- actualização incremental a partir de uma GridDiff
- pontuação de fronteira por difusão, filtragem e agrupamento por BFS

Os ids dos nós são o índice linear da célula da malha (y * width + x), pelo que
construção completa e actualização incremental produzem exactamente os mesmos ids.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Dict, Iterable, List, Optional, Set, Tuple

import networkx as nx
import numpy as np

from .grid_map import Cell, GridDiff, InvalidArgumentError, OccupancyGrid, Point


log = logging.getLogger(__name__)

# direcções "para a frente": cada par de vizinhos é avaliado uma única vez
FORWARD_DIRECTIONS: Tuple[Cell, ...] = ((1, 0), (0, 1), (1, 1), (-1, 1))

DEFAULT_K = 6
DEFAULT_CORRIDOR_WIDTH = 7
DEFAULT_D_MAX = 5
DEFAULT_TAU = 4


# ------------------------------------------------------------------------------
# Tipos
# ------------------------------------------------------------------------------

@dataclass(slots=True)
class LowNode:
    id: int
    cell: Cell
    position: Point
    degree: int = 0
    info_value: int = 0
    is_frontier: bool = False


@dataclass(frozen=True)
class FrontierCluster:
    id: int
    members: Tuple[int, ...]
    center_node: int
    center_position: Point
    total_info: int


@dataclass(eq=False)
class LowGraph:
    """
    LTG sobre um referencial de grelha fixo. `adjacency` é simétrica;
    `nodes[i].degree == len(adjacency[i])` em todo o momento.
    """

    width: int
    height: int
    resolution: float
    origin: Point
    k: int
    w: int
    phase: Cell
    nodes: Dict[int, LowNode] = field(default_factory=dict)
    adjacency: Dict[int, Set[int]] = field(default_factory=dict)

    @property
    def d_sample(self) -> float:
        return self.k * self.resolution

    @property
    def edges(self) -> Set[Tuple[int, int]]:
        return {(u, v) for u, nbrs in self.adjacency.items() for v in nbrs if u < v}

    @property
    def positions(self) -> Dict[int, Point]:
        return {nid: node.position for nid, node in self.nodes.items()}

    def node_id(self, cell: Cell) -> int:
        return cell[1] * self.width + cell[0]

    def neighbors(self, nid: int) -> Set[int]:
        return self.adjacency[nid]

    def degree(self, nid: int) -> int:
        return len(self.adjacency[nid])

    def matches(self, grid: OccupancyGrid) -> bool:
        return (
            grid.width == self.width
            and grid.height == self.height
            and grid.resolution == self.resolution
            and grid.origin == self.origin
        )

    def copy(self) -> "LowGraph":
        return replace(
            self,
            nodes={
                nid: LowNode(n.id, n.cell, n.position, n.degree, n.info_value, n.is_frontier)
                for nid, n in self.nodes.items()
            },
            adjacency={nid: set(nbrs) for nid, nbrs in self.adjacency.items()},
        )

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        for nid, node in self.nodes.items():
            g.add_node(nid, pos=node.position)
        g.add_edges_from(self.edges)
        return g

    def nearest_node(self, point: Point, max_dist: float) -> Optional[int]:
        """
        Nó mais próximo de `point` a no máximo `max_dist` metros
        (desempate pelo id mais baixo). Só percorre a vizinhança da malha.
        """
        res = self.resolution
        step = self.k * res
        px = (point[0] - self.origin[0]) / res
        py = (point[1] - self.origin[1]) / res
        reach = int(math.ceil(max_dist / step)) + 1
        ix0 = int(math.floor((px - self.phase[0]) / self.k))
        iy0 = int(math.floor((py - self.phase[1]) / self.k))

        best: Optional[Tuple[float, int]] = None
        for iy in range(iy0 - reach, iy0 + reach + 2):
            for ix in range(ix0 - reach, ix0 + reach + 2):
                cell = (self.phase[0] + ix * self.k, self.phase[1] + iy * self.k)
                if not (0 <= cell[0] < self.width and 0 <= cell[1] < self.height):
                    continue
                nid = self.node_id(cell)
                node = self.nodes.get(nid)
                if node is None:
                    continue
                dist = math.dist(point, node.position)
                if dist <= max_dist and (best is None or (dist, nid) < best):
                    best = (dist, nid)
        return None if best is None else best[1]

    # --- mutação interna (só usada durante a construção de um novo snapshot) ---

    def _add_node(self, cell: Cell, grid: OccupancyGrid) -> None:
        nid = self.node_id(cell)
        if nid in self.nodes:
            return
        self.nodes[nid] = LowNode(id=nid, cell=cell, position=grid.cell_to_world(cell))
        self.adjacency[nid] = set()

    def _remove_node(self, nid: int) -> None:
        if nid not in self.nodes:
            return
        for other in self.adjacency.pop(nid):
            self.adjacency[other].discard(nid)
            self.nodes[other].degree -= 1
        del self.nodes[nid]

    def _set_edge(self, u: int, v: int, present: bool) -> None:
        if present:
            if v in self.adjacency[u]:
                return
            self.adjacency[u].add(v)
            self.adjacency[v].add(u)
            self.nodes[u].degree += 1
            self.nodes[v].degree += 1
        elif u in self.adjacency and v in self.adjacency[u]:
            self.adjacency[u].discard(v)
            self.adjacency[v].discard(u)
            self.nodes[u].degree -= 1
            self.nodes[v].degree -= 1


# ------------------------------------------------------------------------------
# Corredor (verificação das arestas)
# ------------------------------------------------------------------------------

@lru_cache(maxsize=64)
def corridor_offsets(direction: Cell, k: int, w: int) -> np.ndarray:
    """
    Deslocamentos (ox, oy), relativos a n1, das células do corredor entre n1 e
    n2 = n1 + k * direction: centros a distância perpendicular <= w // 2 do
    segmento, com projecção no segmento prolongado meia célula em cada ponta.

    A meia largura é floor(w / 2), não ceil(w / 2): com w ímpar o corredor tem
    exactamente w células de largura (w = 7 dá 3 células de cada lado do eixo).
    """
    dx, dy = direction
    norm = math.hypot(dx, dy)
    ux, uy = dx / norm, dy / norm
    length = k * norm
    half = w // 2
    reach = k + half + 1

    oy, ox = np.mgrid[-reach:reach + 1, -reach:reach + 1]
    along = ox * ux + oy * uy
    across = np.abs(ox * uy - oy * ux)
    keep = (along >= -0.5) & (along <= length + 0.5) & (across <= half + 1e-9)

    offsets = np.stack([ox[keep], oy[keep]], axis=1).astype(np.int64)
    offsets.flags.writeable = False
    return offsets


def _corridors_free(grid: OccupancyGrid, anchors: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    """Para cada âncora (N, 2), True se todas as células do corredor forem livres."""
    if anchors.size == 0:
        return np.zeros(0, dtype=bool)
    cx = anchors[:, 0, None] + offsets[None, :, 0]
    cy = anchors[:, 1, None] + offsets[None, :, 1]
    inside = (cx >= 0) & (cx < grid.width) & (cy >= 0) & (cy < grid.height)
    free = np.zeros(cx.shape, dtype=bool)
    free[inside] = grid.free_mask[cy[inside], cx[inside]]
    # fora do mapa bloqueia
    return free.all(axis=1)


def check_edge(grid: OccupancyGrid, n1: LowNode, n2: LowNode, w: int) -> bool:
    """True se o corredor de largura w entre dois nós vizinhos na malha estiver livre."""
    dx = n2.cell[0] - n1.cell[0]
    dy = n2.cell[1] - n1.cell[1]
    k = max(abs(dx), abs(dy))
    if k == 0 or (dx not in (0, k, -k)) or (dy not in (0, k, -k)):
        raise InvalidArgumentError(f"Nós não adjacentes na malha: {n1.cell} -> {n2.cell}")
    offsets = corridor_offsets((dx // k, dy // k), k, w)
    anchor = np.array([n1.cell], dtype=np.int64)
    return bool(_corridors_free(grid, anchor, offsets)[0])


def _refresh_edges(graph: LowGraph, grid: OccupancyGrid, anchors: np.ndarray) -> None:
    """Reavalia as 4 arestas "para a frente" de cada âncora da malha."""
    k = graph.k
    for direction in FORWARD_DIRECTIONS:
        offsets = corridor_offsets(direction, k, graph.w)
        partners = anchors + np.array(direction, dtype=np.int64) * k
        free = _corridors_free(grid, anchors, offsets)
        for (ax, ay), (bx, by), ok in zip(anchors.tolist(), partners.tolist(), free.tolist()):
            u = graph.node_id((ax, ay))
            if u not in graph.nodes:
                continue
            if not (0 <= bx < graph.width and 0 <= by < graph.height):
                continue
            v = graph.node_id((bx, by))
            if v not in graph.nodes:
                continue
            graph._set_edge(u, v, ok)


# ------------------------------------------------------------------------------
# Construção e actualização
# ------------------------------------------------------------------------------

def lattice_phase(grid: OccupancyGrid, k: int) -> Cell:
    """Fase da malha presa à origem do mundo (x = 0, y = 0 em metros)."""
    return (
        int(round(-grid.origin[0] / grid.resolution)) % k,
        int(round(-grid.origin[1] / grid.resolution)) % k,
    )


def _empty_graph(grid: OccupancyGrid, k: int, w: int) -> LowGraph:
    if k < 2:
        raise InvalidArgumentError(f"k tem de ser >= 2 (recebido {k})")
    if w < 1:
        raise InvalidArgumentError(f"Largura do corredor tem de ser >= 1 (recebida {w})")
    return LowGraph(
        width=grid.width,
        height=grid.height,
        resolution=grid.resolution,
        origin=grid.origin,
        k=k,
        w=w,
        phase=lattice_phase(grid, k),
    )


def build_full(grid: OccupancyGrid, k: int = DEFAULT_K, corridor_width_w: int = DEFAULT_CORRIDOR_WIDTH) -> LowGraph:
    """Constrói o LTG de raiz: um nó por célula livre da malha e as arestas válidas."""
    graph = _empty_graph(grid, k, corridor_width_w)
    px, py = graph.phase

    ly, lx = np.mgrid[py:grid.height:k, px:grid.width:k]
    lx, ly = lx.ravel(), ly.ravel()
    free = grid.free_mask[ly, lx]
    anchors = np.stack([lx[free], ly[free]], axis=1).astype(np.int64)

    for x, y in anchors.tolist():
        graph._add_node((x, y), grid)
    _refresh_edges(graph, grid, anchors)

    log.debug(
        "LTG construído: %d nós, %d arestas (k=%d, w=%d)",
        len(graph.nodes), len(graph.edges), k, corridor_width_w,
    )
    return graph


def _offset_span(k: int, w: int) -> Tuple[int, int, int, int]:
    spans = np.concatenate([corridor_offsets(d, k, w) for d in FORWARD_DIRECTIONS])
    return (
        int(spans[:, 0].min()), int(spans[:, 0].max()),
        int(spans[:, 1].min()), int(spans[:, 1].max()),
    )


def _lattice_candidates(c: np.ndarray, lo_off: int, hi_off: int, phase: int, k: int) -> Tuple[np.ndarray, np.ndarray]:
    """Índices de malha i tais que phase + i*k + off == c para algum off em [lo_off, hi_off]."""
    lo = -((-(c - hi_off - phase)) // k)
    hi = (c - lo_off - phase) // k
    span = (hi_off - lo_off) // k + 2
    idx = lo[:, None] + np.arange(span)[None, :]
    return idx, idx <= hi[:, None]


def _affected_anchors(graph: LowGraph, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Âncoras da malha cujo corredor (em qualquer direcção) pode conter uma das células."""
    k = graph.k
    px, py = graph.phase
    min_x, max_x, min_y, max_y = _offset_span(k, graph.w)

    ix, okx = _lattice_candidates(xs, min_x, max_x, px, k)
    iy, oky = _lattice_candidates(ys, min_y, max_y, py, k)
    ax = px + ix * k
    ay = py + iy * k
    okx &= (ax >= 0) & (ax < graph.width)
    oky &= (ay >= 0) & (ay < graph.height)

    ok = okx[:, :, None] & oky[:, None, :]
    ids = (ay[:, None, :] * graph.width + ax[:, :, None])[ok]
    ids = np.unique(ids)
    return np.stack([ids % graph.width, ids // graph.width], axis=1).astype(np.int64)


def update(graph: LowGraph, grid: OccupancyGrid, d: GridDiff) -> LowGraph:
    """
    Actualiza o LTG só na zona alterada:
    - nós criados/removidos nas células da malha que mudaram de estado
    - arestas reavaliadas para as âncoras cujo corredor toca numa célula alterada
    O resultado é igual a build_full(grid) com os mesmos k e w.
    """
    if not graph.matches(grid):
        raise InvalidArgumentError("LTG e grelha com referenciais diferentes")

    new = graph.copy()
    if not d:
        return new

    xs = d.indices % grid.width
    ys = d.indices // grid.width
    k = new.k
    px, py = new.phase

    on_lattice = ((xs - px) % k == 0) & ((ys - py) % k == 0)
    for x, y in zip(xs[on_lattice].tolist(), ys[on_lattice].tolist()):
        if grid.free_mask[y, x]:
            new._add_node((x, y), grid)
        else:
            new._remove_node(new.node_id((x, y)))

    anchors = _affected_anchors(new, xs, ys)
    _refresh_edges(new, grid, anchors)

    log.debug(
        "LTG actualizado: %d células alteradas, %d âncoras reavaliadas, %d nós",
        len(d), len(anchors), len(new.nodes),
    )
    return new


# ------------------------------------------------------------------------------
# Fronteiras
# ------------------------------------------------------------------------------

def score_frontier(grid: OccupancyGrid, node: LowNode, d_max: int) -> Tuple[int, bool]:
    """
    Difusão a partir da célula do nó: janelas (2d+1)x(2d+1) para d = 1, 2, ...
    Pára quando a janela contém uma célula ocupada ou d == d_max, e devolve o
    número de células desconhecidas dessa última janela. Fora do mapa conta
    como desconhecido.
    """
    if d_max < 1:
        raise InvalidArgumentError(f"d_max tem de ser >= 1 (recebido {d_max})")

    x, y = node.cell
    for depth in range(1, d_max + 1):
        x0, x1 = max(x - depth, 0), min(x + depth + 1, grid.width)
        y0, y1 = max(y - depth, 0), min(y + depth + 1, grid.height)
        window_area = (2 * depth + 1) ** 2
        inside = (x1 - x0) * (y1 - y0)

        unknown = int(np.count_nonzero(grid.unknown_mask[y0:y1, x0:x1])) + (window_area - inside)
        occupied = bool(grid.occupied_mask[y0:y1, x0:x1].any())
        if occupied or depth == d_max:
            return unknown, occupied

    raise AssertionError("inalcançável")


def _integral(mask: np.ndarray) -> np.ndarray:
    out = np.zeros((mask.shape[0] + 1, mask.shape[1] + 1), dtype=np.int64)
    out[1:, 1:] = mask.astype(np.int64).cumsum(axis=0).cumsum(axis=1)
    return out


def _box_sums(integral: np.ndarray, xs: np.ndarray, ys: np.ndarray, r: int) -> np.ndarray:
    x0, x1 = xs - r, xs + r + 1
    y0, y1 = ys - r, ys + r + 1
    return integral[y1, x1] - integral[y0, x1] - integral[y1, x0] + integral[y0, x0]


def score_frontiers(grid: OccupancyGrid, cells: np.ndarray, d_max: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    score_frontier para N células (N, 2) de uma vez, com somas de janela por
    imagem integral. Devolve (info, occupied) com a mesma semântica.
    """
    if d_max < 1:
        raise InvalidArgumentError(f"d_max tem de ser >= 1 (recebido {d_max})")
    cells = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
    info = np.zeros(len(cells), dtype=np.int64)
    hit = np.zeros(len(cells), dtype=bool)
    if len(cells) == 0:
        return info, hit

    # margem de d_max células: desconhecida e livre de obstáculos
    unknown = _integral(np.pad(grid.unknown_mask, d_max, constant_values=True))
    occupied = _integral(np.pad(grid.occupied_mask, d_max, constant_values=False))
    xs = cells[:, 0] + d_max
    ys = cells[:, 1] + d_max

    done = np.zeros(len(cells), dtype=bool)
    for depth in range(1, d_max + 1):
        blocked = _box_sums(occupied, xs, ys, depth) > 0
        stop = ~done & (blocked | (depth == d_max))
        info[stop] = _box_sums(unknown, xs[stop], ys[stop], depth)
        hit[stop] = blocked[stop]
        done |= stop
    return info, hit


def cluster_frontiers(graph: LowGraph, frontier_ids: Iterable[int]) -> List[FrontierCluster]:
    """Componentes conexas (BFS) do subgrafo induzido pelos nós de fronteira."""
    frontier = set(frontier_ids)
    seen: Set[int] = set()
    clusters: List[FrontierCluster] = []

    for start in sorted(frontier):
        if start in seen:
            continue
        seen.add(start)
        queue = deque([start])
        members: List[int] = []
        while queue:
            nid = queue.popleft()
            members.append(nid)
            for other in sorted(graph.adjacency[nid]):
                if other in frontier and other not in seen:
                    seen.add(other)
                    queue.append(other)

        members.sort()
        cx = sum(graph.nodes[m].position[0] for m in members) / len(members)
        cy = sum(graph.nodes[m].position[1] for m in members) / len(members)
        center = min(members, key=lambda m: (math.dist((cx, cy), graph.nodes[m].position), m))

        clusters.append(
            FrontierCluster(
                id=len(clusters),
                members=tuple(members),
                center_node=center,
                center_position=graph.nodes[center].position,
                total_info=sum(graph.nodes[m].info_value for m in members),
            )
        )
    return clusters


def detect_frontiers(
    graph: LowGraph,
    grid: OccupancyGrid,
    d_max: int = DEFAULT_D_MAX,
    threshold: int = DEFAULT_TAU,
    screen: bool = True,
) -> List[FrontierCluster]:
    """
    Anota info_value / is_frontier nos nós do grafo e devolve os clusters.
    Com `screen`, só os nós de grau < 8 são pontuados (os restantes ficam a 0).
    """
    for node in graph.nodes.values():
        node.info_value = 0
        node.is_frontier = False

    candidates = [
        nid for nid in sorted(graph.nodes)
        if not (screen and graph.nodes[nid].degree >= 8)
    ]
    cells = np.array([graph.nodes[nid].cell for nid in candidates], dtype=np.int64).reshape(-1, 2)
    info, _ = score_frontiers(grid, cells, d_max)

    frontier_ids: List[int] = []
    for nid, value in zip(candidates, info.tolist()):
        node = graph.nodes[nid]
        node.info_value = value
        if value > threshold:
            node.is_frontier = True
            frontier_ids.append(nid)

    clusters = cluster_frontiers(graph, frontier_ids)
    log.debug("%d nós de fronteira em %d clusters", len(frontier_ids), len(clusters))
    return clusters


# ------------------------------------------------------------------------------
# Exportação
# ------------------------------------------------------------------------------

def export_graph(graph: LowGraph) -> str:
    """Formato de texto: `N <id> <cx> <cy> <degree> <info>` e `E <id1> <id2>`."""
    lines = [
        f"N {nid} {node.cell[0]} {node.cell[1]} {node.degree} {node.info_value}"
        for nid, node in sorted(graph.nodes.items())
    ]
    lines += [f"E {u} {v}" for u, v in sorted(graph.edges)]
    return "\n".join(lines) + "\n"
