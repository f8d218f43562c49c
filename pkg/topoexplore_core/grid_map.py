"""
Mapa de ocupação do TopoExplore, partilhado por todos os outros módulos:
- estados das células e snapshots imutáveis da grelha (OccupancyGrid)
- cobertura (fracção de células conhecidas)
- rasterização de Bresenham e teste de linha de vista
- diferenças entre versões do mapa (GridDiff)
- leitura dos mapas de verdade-terreno em texto e contagem de células observáveis

Este módulo não depende do Django nem de nenhum outro módulo do núcleo.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import IntEnum
from functools import cached_property
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage


log = logging.getLogger(__name__)

Cell = Tuple[int, int]
Point = Tuple[float, float]

DEFAULT_RESOLUTION = 0.05

# 8-conectividade para rotulagem de componentes e dilatação
_EIGHT = np.ones((3, 3), dtype=bool)

# pares por lote em lines_of_sight_free
_LOS_CHUNK = 4096


# ------------------------------------------------------------------------------
# Erros
# ------------------------------------------------------------------------------

class InvalidArgumentError(ValueError):
    """Argumento inválido passado a uma operação do núcleo."""


class MapFileError(InvalidArgumentError):
    """Ficheiro de mapa mal formado (inclui caminho e número da linha)."""


# ------------------------------------------------------------------------------
# Tipos
# ------------------------------------------------------------------------------

class CellState(IntEnum):
    FREE = 0
    OCCUPIED = 1
    UNKNOWN = 2


@dataclass(frozen=True, eq=False)
class OccupancyGrid:
    """
    Snapshot imutável do mapa.

    `cells` é um array int8 (height, width) só de leitura: a linha y guarda as
    células (0..width-1, y). O índice linear de uma célula é y * width + x.
    Cada lote de alterações produz uma nova grelha com `version` + 1.
    """

    width: int
    height: int
    resolution: float = DEFAULT_RESOLUTION
    origin: Point = (0.0, 0.0)
    cells: Optional[np.ndarray] = None
    version: int = 0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise InvalidArgumentError(
                f"Dimensões inválidas: {self.width}x{self.height}"
            )
        if not self.resolution > 0:
            raise InvalidArgumentError(f"Resolução inválida: {self.resolution}")

        if self.cells is None:
            cells = np.full((self.height, self.width), CellState.UNKNOWN, dtype=np.int8)
        else:
            cells = np.array(self.cells, dtype=np.int8)
            if cells.size != self.width * self.height:
                raise InvalidArgumentError(
                    f"Esperadas {self.width * self.height} células, recebidas {cells.size}"
                )
            cells = cells.reshape(self.height, self.width)
            if cells.min() < CellState.FREE or cells.max() > CellState.UNKNOWN:
                raise InvalidArgumentError("Estado de célula desconhecido na grelha")

        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @classmethod
    def unknown(
        cls,
        width: int,
        height: int,
        resolution: float = DEFAULT_RESOLUTION,
        origin: Point = (0.0, 0.0),
    ) -> "OccupancyGrid":
        return cls(width=width, height=height, resolution=resolution, origin=origin)

    # --- máscaras (calculadas uma vez por snapshot) ---

    @cached_property
    def free_mask(self) -> np.ndarray:
        return self.cells == CellState.FREE

    @cached_property
    def occupied_mask(self) -> np.ndarray:
        return self.cells == CellState.OCCUPIED

    @cached_property
    def unknown_mask(self) -> np.ndarray:
        return self.cells == CellState.UNKNOWN

    # --- geometria ---

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def state(self, cell: Cell) -> CellState:
        if not self.in_bounds(cell):
            raise InvalidArgumentError(f"Célula fora do mapa: {cell}")
        return CellState(int(self.cells[cell[1], cell[0]]))

    def index(self, cell: Cell) -> int:
        return cell[1] * self.width + cell[0]

    def cell_of(self, index: int) -> Cell:
        return index % self.width, index // self.width

    def world_to_cell(self, point: Point) -> Cell:
        x = math.floor((point[0] - self.origin[0]) / self.resolution)
        y = math.floor((point[1] - self.origin[1]) / self.resolution)
        return x, y

    def cell_to_world(self, cell: Cell) -> Point:
        """Centro da célula em metros."""
        return (
            self.origin[0] + (cell[0] + 0.5) * self.resolution,
            self.origin[1] + (cell[1] + 0.5) * self.resolution,
        )

    def same_frame(self, other: "OccupancyGrid") -> bool:
        return (
            self.width == other.width
            and self.height == other.height
            and self.resolution == other.resolution
            and self.origin == other.origin
        )

    def known_count(self) -> int:
        return int(self.cells.size - np.count_nonzero(self.unknown_mask))

    def with_updates(self, indices: np.ndarray, states: np.ndarray) -> "OccupancyGrid":
        """Devolve uma nova grelha com as células `indices` nos estados `states`."""
        cells = self.cells.copy().reshape(-1)
        cells[np.asarray(indices, dtype=np.int64)] = np.asarray(states, dtype=np.int8)
        return OccupancyGrid(
            width=self.width,
            height=self.height,
            resolution=self.resolution,
            origin=self.origin,
            cells=cells,
            version=self.version + 1,
        )


@dataclass(frozen=True, eq=False)
class GridDiff:
    """
    Diferença entre duas versões do mapa (M_diff).
    Guardada em arrays paralelos; `changed` dá a vista (índice, antigo, novo).
    """

    indices: np.ndarray
    old: np.ndarray
    new: np.ndarray

    @classmethod
    def empty(cls) -> "GridDiff":
        return cls(
            indices=np.zeros(0, dtype=np.int64),
            old=np.zeros(0, dtype=np.int8),
            new=np.zeros(0, dtype=np.int8),
        )

    @property
    def changed(self) -> List[Tuple[int, CellState, CellState]]:
        return [
            (int(i), CellState(int(o)), CellState(int(n)))
            for i, o, n in zip(self.indices, self.old, self.new)
        ]

    def __len__(self) -> int:
        return int(self.indices.size)

    def __bool__(self) -> bool:
        return self.indices.size > 0


# ------------------------------------------------------------------------------
# Cobertura
# ------------------------------------------------------------------------------

def coverage(grid: OccupancyGrid, denominator: int) -> float:
    """
    Fracção de células conhecidas: (#células != Unknown) / denominator.
    """
    if denominator <= 0:
        raise InvalidArgumentError(f"Denominador de cobertura inválido: {denominator}")
    known = grid.known_count()
    if known > denominator:
        raise InvalidArgumentError(
            f"Denominador ({denominator}) menor que o número de células conhecidas ({known})"
        )
    return known / denominator


def masked_coverage(grid: OccupancyGrid, mask: np.ndarray) -> float:
    """
    Cobertura restrita a um conjunto de células (p.ex. as células observáveis
    a partir da posição inicial). O denominador é o número de células da máscara.
    """
    total = int(np.count_nonzero(mask))
    if total == 0:
        raise InvalidArgumentError("Máscara de cobertura vazia")
    known = int(np.count_nonzero(mask & ~grid.unknown_mask))
    return known / total


# ------------------------------------------------------------------------------
# Bresenham e linha de vista
# ------------------------------------------------------------------------------

def _bresenham_xy(a: Cell, b: Cell) -> Tuple[np.ndarray, np.ndarray]:
    """
    Bresenham em forma fechada: no eixo maior avança-se uma célula por passo,
    no eixo menor arredonda-se a meio para baixo. A linha é sempre traçada a
    partir do extremo lexicograficamente menor, para que (a, b) e (b, a)
    cubram exactamente as mesmas células.
    """
    flip = (b[0], b[1]) < (a[0], a[1])
    (x0, y0), (x1, y1) = (b, a) if flip else (a, b)

    dx, dy = x1 - x0, y1 - y0
    n = max(abs(dx), abs(dy))
    if n == 0:
        return np.array([x0]), np.array([y0])

    steps = np.arange(n + 1, dtype=np.int64)
    if abs(dx) >= abs(dy):
        xs = x0 + np.sign(dx) * steps
        ys = y0 + np.sign(dy) * ((2 * steps * abs(dy) + n - 1) // (2 * n))
    else:
        ys = y0 + np.sign(dy) * steps
        xs = x0 + np.sign(dx) * ((2 * steps * abs(dx) + n - 1) // (2 * n))

    if flip:
        xs, ys = xs[::-1], ys[::-1]
    return xs, ys


def bresenham_line(a: Cell, b: Cell, grid: Optional[OccupancyGrid] = None) -> List[Cell]:
    """
    Células da linha de a até b (inclusive), 8-conexas.
    Se `grid` for passado, os extremos têm de estar dentro do mapa.
    """
    if grid is not None:
        for end in (a, b):
            if not grid.in_bounds(end):
                raise InvalidArgumentError(f"Extremo fora do mapa: {end}")
    xs, ys = _bresenham_xy(a, b)
    return [(int(x), int(y)) for x, y in zip(xs, ys)]


def line_of_sight_free(grid: OccupancyGrid, a: Cell, b: Cell) -> bool:
    """True se todas as células de bresenham_line(a, b) estiverem livres."""
    for end in (a, b):
        if not grid.in_bounds(end):
            raise InvalidArgumentError(f"Extremo fora do mapa: {end}")
    xs, ys = _bresenham_xy(a, b)
    return bool(grid.free_mask[ys, xs].all())


# ------------------------------------------------------------------------------
# Diferenças entre mapas
# ------------------------------------------------------------------------------

def lines_of_sight_free(grid: OccupancyGrid, starts: np.ndarray, ends: np.ndarray) -> np.ndarray:
    """
    line_of_sight_free para N pares de uma vez: `starts` e `ends` (N, 2) em
    células. Devolve um array booleano (N,). As mesmas células de
    bresenham_line, com a linha traçada a partir do extremo menor.
    """
    a = np.asarray(starts, dtype=np.int64).reshape(-1, 2)
    b = np.asarray(ends, dtype=np.int64).reshape(-1, 2)
    if len(a) != len(b):
        raise InvalidArgumentError(f"Pares incompletos: {len(a)} inícios, {len(b)} fins")
    if len(a) == 0:
        return np.zeros(0, dtype=bool)
    if len(a) > _LOS_CHUNK:
        return np.concatenate([
            lines_of_sight_free(grid, a[i:i + _LOS_CHUNK], b[i:i + _LOS_CHUNK])
            for i in range(0, len(a), _LOS_CHUNK)
        ])
    ends_all = np.concatenate([a, b])
    inside = (ends_all[:, 0] >= 0) & (ends_all[:, 0] < grid.width) & (ends_all[:, 1] >= 0) & (ends_all[:, 1] < grid.height)
    if not inside.all():
        raise InvalidArgumentError(f"Extremo fora do mapa: {tuple(ends_all[~inside][0].tolist())}")

    flip = (b[:, 0] < a[:, 0]) | ((b[:, 0] == a[:, 0]) & (b[:, 1] < a[:, 1]))
    p0 = np.where(flip[:, None], b, a)
    p1 = np.where(flip[:, None], a, b)
    dx = p1[:, 0] - p0[:, 0]
    dy = p1[:, 1] - p0[:, 1]
    adx, ady = np.abs(dx)[:, None], np.abs(dy)[:, None]
    n = np.maximum(adx, ady)

    # passos para além do fim repetem o último ponto
    steps = np.minimum(np.arange(int(n.max()) + 1, dtype=np.int64)[None, :], n)
    nn = np.maximum(n, 1)
    x_major = adx >= ady
    sx, sy = np.sign(dx)[:, None], np.sign(dy)[:, None]
    xs = np.where(x_major, sx * steps, sx * ((2 * steps * adx + nn - 1) // (2 * nn)))
    ys = np.where(x_major, sy * ((2 * steps * ady + nn - 1) // (2 * nn)), sy * steps)
    xs = xs + p0[:, 0, None]
    ys = ys + p0[:, 1, None]
    return grid.free_mask[ys, xs].all(axis=1)


def diff(current: OccupancyGrid, previous: OccupancyGrid) -> GridDiff:
    """Lista exactamente as células cujo estado mudou de `previous` para `current`."""
    if not current.same_frame(previous):
        raise InvalidArgumentError("Grelhas com dimensões/resolução/origem diferentes")

    cur = current.cells.reshape(-1)
    prev = previous.cells.reshape(-1)
    indices = np.flatnonzero(cur != prev)
    return GridDiff(indices=indices, old=prev[indices].copy(), new=cur[indices].copy())


def apply_diff(grid: OccupancyGrid, d: GridDiff) -> OccupancyGrid:
    """Aplica uma diferença a `grid`; o estado antigo de cada célula tem de coincidir."""
    flat = grid.cells.reshape(-1)
    if d and not np.array_equal(flat[d.indices], d.old):
        raise InvalidArgumentError("A diferença não corresponde à grelha de origem")
    return grid.with_updates(d.indices, d.new)


# ------------------------------------------------------------------------------
# Mapas de verdade-terreno
# ------------------------------------------------------------------------------

_MAP_CHARS = {".": CellState.FREE, "#": CellState.OCCUPIED, "g": CellState.OCCUPIED}


@dataclass(frozen=True, eq=False)
class GroundTruth:
    """
    Mundo real da simulação. `grid` só tem células Free/Occupied; `transparent`
    marca os obstáculos de vidro ('g'), que bloqueiam o robô mas onde o sensor
    perde o retorno.
    """

    grid: OccupancyGrid
    transparent: np.ndarray
    name: str = ""

    def __post_init__(self):
        transparent = np.array(self.transparent, dtype=bool).reshape(self.grid.shape)
        transparent.flags.writeable = False
        object.__setattr__(self, "transparent", transparent)

    def is_blocked(self, cell: Cell) -> bool:
        """Células fora do mapa também bloqueiam o movimento."""
        if not self.grid.in_bounds(cell):
            return True
        return bool(self.grid.occupied_mask[cell[1], cell[0]])


def parse_map(text: str, name: str = "<texto>") -> GroundTruth:
    """
    Lê um mapa em texto: uma linha por fila, '#' ocupado, '.' livre, 'g' vidro.
    A primeira linha pode ser `resolution=<metros>`. A primeira fila de texto
    é a fila de topo (maior y).
    """
    lines = text.splitlines()
    resolution = DEFAULT_RESOLUTION
    first = 0

    if lines and lines[0].strip().startswith("resolution="):
        raw = lines[0].strip().split("=", 1)[1]
        try:
            resolution = float(raw)
        except ValueError:
            raise MapFileError(f"{name}:1: resolução inválida '{raw}'")
        if not resolution > 0:
            raise MapFileError(f"{name}:1: resolução tem de ser positiva")
        first = 1

    rows: List[Tuple[int, str]] = []
    for lineno, line in enumerate(lines[first:], start=first + 1):
        row = line.rstrip("\r\n").rstrip()
        if not row:
            continue
        rows.append((lineno, row))

    if not rows:
        raise MapFileError(f"{name}: mapa vazio")

    width = len(rows[0][1])
    states = np.empty((len(rows), width), dtype=np.int8)
    glass = np.zeros((len(rows), width), dtype=bool)

    for r, (lineno, row) in enumerate(rows):
        if len(row) != width:
            raise MapFileError(
                f"{name}:{lineno}: fila com {len(row)} colunas, esperadas {width}"
            )
        for c, ch in enumerate(row):
            state = _MAP_CHARS.get(ch)
            if state is None:
                raise MapFileError(f"{name}:{lineno}: carácter inválido '{ch}'")
            states[r, c] = state
            glass[r, c] = ch == "g"

    # primeira fila de texto = topo do mapa
    states = states[::-1]
    glass = glass[::-1]

    grid = OccupancyGrid(
        width=width, height=len(rows), resolution=resolution, cells=states
    )
    log.debug("Mapa '%s' lido: %dx%d a %.3f m", name, width, len(rows), resolution)
    return GroundTruth(grid=grid, transparent=glass, name=name)


def load_map(path: Path | str) -> GroundTruth:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise MapFileError(f"{path}: não foi possível ler o mapa ({e})")
    return parse_map(text, name=path.stem)


def _disk(radius: int) -> np.ndarray:
    r = np.arange(-radius, radius + 1)
    return (r[None, :] ** 2 + r[:, None] ** 2) <= radius * radius


def observable_mask(truth: GroundTruth, start: Cell, clearance: int = 0) -> np.ndarray:
    """
    Células que contam para a cobertura: livres ao alcance do robô a partir da
    partida, mais as ocupadas (não transparentes) adjacentes a essas.

    Com `clearance` > 0 o robô ocupa um disco desse raio (em células): as
    posições possíveis do centro são o espaço livre erodido por esse disco,
    e contam as células livres varridas pelo disco nessas posições. Passagens
    mais estreitas do que 2 * clearance + 1 células não ligam as salas.
    """
    grid = truth.grid
    if not grid.in_bounds(start) or not grid.free_mask[start[1], start[0]]:
        raise InvalidArgumentError(f"Célula de partida não é livre: {start}")
    if clearance < 0:
        raise InvalidArgumentError(f"clearance não pode ser negativa (recebido {clearance})")

    free = grid.free_mask
    if clearance == 0:
        labels, _ = ndimage.label(free, structure=_EIGHT)
        reachable = labels == labels[start[1], start[0]]
    else:
        disk = _disk(clearance)
        centres = ndimage.binary_erosion(free, structure=disk, border_value=0)
        if not centres.any():
            log.warning("Nenhuma posição com folga %d células; cobertura sem folga", clearance)
            return observable_mask(truth, start)
        labels, _ = ndimage.label(centres, structure=_EIGHT)
        sy, sx = start[1], start[0]
        if labels[sy, sx] == 0:
            # partida junto a uma parede: componente do centro mais próximo
            _, (iy, ix) = ndimage.distance_transform_edt(labels == 0, return_indices=True)
            sy, sx = int(iy[sy, sx]), int(ix[sy, sx])
        swept = ndimage.binary_dilation(labels == labels[sy, sx], structure=disk)
        reachable = swept & free
        reachable[start[1], start[0]] = True

    rim = ndimage.binary_dilation(reachable, structure=_EIGHT)
    walls = rim & grid.occupied_mask & ~truth.transparent
    return reachable | walls


def observable_cell_count(truth: GroundTruth, start: Cell, clearance: int = 0) -> int:
    return int(np.count_nonzero(observable_mask(truth, start, clearance)))
