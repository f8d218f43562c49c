"""
Utilitários partilhados pelos testes do núcleo: grelhas pequenas a partir de
texto, mapas aleatórios e oráculos de força bruta.
"""

from __future__ import annotations

import itertools
import math
from typing import Dict, List, Sequence, Set, Tuple

import networkx as nx
import numpy as np

from topoexplore_core.grid_map import CellState, GroundTruth, OccupancyGrid, parse_map
from topoexplore_core.ltg import LowGraph


_ROW_CHARS = {".": CellState.FREE, "#": CellState.OCCUPIED, "?": CellState.UNKNOWN}


def cells_from_rows(rows: Sequence[str]) -> np.ndarray:
    """Estados a partir de filas de texto ('.', '#', '?'), primeira fila no topo."""
    height, width = len(rows), len(rows[0])
    cells = np.empty((height, width), dtype=np.int8)
    for r, row in enumerate(rows):
        if len(row) != width:
            raise ValueError(f"Fila {r} com {len(row)} colunas, esperadas {width}")
        for c, ch in enumerate(row):
            if ch not in _ROW_CHARS:
                raise ValueError(f"Fila {r}: carácter inválido '{ch}'")
            cells[height - 1 - r, c] = _ROW_CHARS[ch]
    return cells


def grid_from_rows(rows: Sequence[str], resolution: float = 0.05) -> OccupancyGrid:
    """'.' livre, '#' ocupado, '?' desconhecido; primeira fila = topo."""
    return OccupancyGrid(
        width=len(rows[0]),
        height=len(rows),
        resolution=resolution,
        cells=cells_from_rows(rows),
    )


def open_grid(width: int, height: int, state: CellState = CellState.FREE) -> OccupancyGrid:
    return OccupancyGrid(width=width, height=height, cells=np.full((height, width), state, dtype=np.int8))


def room_world(width_cells: int, height_cells: int, extra: Sequence[str] = ()) -> GroundTruth:
    """Sala rectangular fechada por paredes de 1 célula (mapa de texto)."""
    rows = ["#" * width_cells]
    rows += ["#" + "." * (width_cells - 2) + "#" for _ in range(height_cells - 2)]
    rows += ["#" * width_cells]
    return parse_map("\n".join([*extra, *rows]), name="sala")


def random_grid(rng: np.random.Generator, width: int, height: int, p_free: float = 0.7, p_occ: float = 0.1) -> OccupancyGrid:
    """Grelha aleatória com blocos, para que existam zonas livres contíguas."""
    cells = np.full((height, width), CellState.FREE, dtype=np.int8)
    for _ in range(int(width * height / 40)):
        x, y = int(rng.integers(0, width)), int(rng.integers(0, height))
        w, h = int(rng.integers(1, 6)), int(rng.integers(1, 6))
        r = rng.random()
        state = CellState.FREE if r < p_free else (CellState.OCCUPIED if r < p_free + p_occ else CellState.UNKNOWN)
        cells[y:y + h, x:x + w] = state
    return OccupancyGrid(width=width, height=height, cells=cells)


def textbook_bresenham(a: Tuple[int, int], b: Tuple[int, int]) -> List[Tuple[int, int]]:
    """Bresenham clássico com erro inteiro, só para comparar conjuntos de células."""
    x0, y0 = a
    x1, y1 = b
    dx, dy = abs(x1 - x0), -abs(y1 - y0)
    sx = 1 if x0 < x1 else -1
    sy = 1 if y0 < y1 else -1
    err = dx + dy
    out = []
    while True:
        out.append((x0, y0))
        if (x0, y0) == (x1, y1):
            return out
        e2 = 2 * err
        if e2 >= dy:
            err += dy
            x0 += sx
        if e2 <= dx:
            err += dx
            y0 += sy


def brute_corridor_free(grid: OccupancyGrid, c1: Tuple[int, int], c2: Tuple[int, int], w: int) -> bool:
    """Corredor por enumeração de todas as células do mapa (oráculo de check_edge)."""
    (x1, y1), (x2, y2) = c1, c2
    length = math.hypot(x2 - x1, y2 - y1)
    ux, uy = (x2 - x1) / length, (y2 - y1) / length
    half = w // 2
    for y in range(y1 - 20, y1 + 21):
        for x in range(x1 - 20, x1 + 21):
            ox, oy = x - x1, y - y1
            along = ox * ux + oy * uy
            across = abs(ox * uy - oy * ux)
            if -0.5 <= along <= length + 0.5 and across <= half + 1e-9:
                if not grid.in_bounds((x, y)) or not grid.free_mask[y, x]:
                    return False
    return True


def graph_signature(graph: LowGraph) -> Tuple[Dict[int, Tuple[int, int]], Set[Tuple[int, int]]]:
    return {nid: node.cell for nid, node in graph.nodes.items()}, graph.edges


def brute_erosion(g: nx.Graph, n_max: int) -> List[Set[int]]:
    """Erosão passo a passo sem atalhos: recalcula componentes e graus a cada ciclo."""
    g = g.copy()
    g.remove_nodes_from([v for v in list(g) if g.degree(v) < 8])
    for _ in range(n_max):
        removed = []
        for comp in [set(c) for c in nx.connected_components(g)]:
            sub = g.subgraph(comp)
            if any(sub.degree(v) == 8 for v in comp):
                removed.extend(v for v in comp if sub.degree(v) < 8)
        if not removed and not any(g.degree(v) == 8 for v in g):
            break
        g.remove_nodes_from(removed)
    return sorted((set(c) for c in nx.connected_components(g)), key=min)


def full_lattice(nx_: int, ny_: int) -> nx.Graph:
    """Malha nx_ x ny_ com as 8 vizinhanças, ids y * nx_ + x."""
    g = nx.Graph()
    for y, x in itertools.product(range(ny_), range(nx_)):
        g.add_node(y * nx_ + x)
        for dx, dy in ((1, 0), (0, 1), (1, 1), (-1, 1)):
            x2, y2 = x + dx, y + dy
            if 0 <= x2 < nx_ and 0 <= y2 < ny_:
                g.add_edge(y * nx_ + x, y2 * nx_ + x2)
    return g
