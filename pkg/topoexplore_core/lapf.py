"""
Campo potencial artificial local (LAPF).

A direcção de movimento combina a atracção para o terceiro ponto do caminho
(p0 = robô, p1, p2 = próximos nós ainda não ultrapassados) com a repulsão das
células ocupadas à volta de cada um desses três pontos, com pesos decrescentes.
A direcção é depois convertida num comando (v, omega) do robô diferencial.

Para as variantes de ablação sem LAPF existe um seguidor pure-pursuit do
mesmo caminho, que mira no máximo d_sample à frente e abranda nas esquinas.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .grid_map import InvalidArgumentError, OccupancyGrid, Point
from .robot import ControlCommand, ControlLimits, RobotState, clamp, rate_limited, wrap_angle


log = logging.getLogger(__name__)

DEFAULT_W1 = 1.0
DEFAULT_W2 = 0.6
PURSUIT_LOOKAHEAD = 0.3
PURSUIT_TURN_IN_PLACE = 0.35
PURSUIT_CORNER_ANGLE = 0.3
PURSUIT_MIN_SPEED = 0.3

_EPS = 1e-9


@dataclass(frozen=True)
class ForceVector:
    x: float = 0.0
    y: float = 0.0

    @property
    def norm(self) -> float:
        return math.hypot(self.x, self.y)

    @property
    def is_zero(self) -> bool:
        return self.x == 0.0 and self.y == 0.0

    @classmethod
    def unit(cls, dx: float, dy: float) -> "ForceVector":
        """Vector unitário de (dx, dy), ou o vector nulo se a norma for desprezável."""
        n = math.hypot(dx, dy)
        if n < _EPS:
            return cls()
        return cls(dx / n, dy / n)


ZERO = ForceVector()


# ------------------------------------------------------------------------------
# Forças
# ------------------------------------------------------------------------------

def attraction(p0: Point, p1: Point, p2: Point) -> ForceVector:
    """Atracção de p0 para p2 (p1 não entra na força, só no caminho)."""
    return ForceVector.unit(p2[0] - p0[0], p2[1] - p0[1])


def repulsion(grid: OccupancyGrid, p_i: Point, radius: float) -> ForceVector:
    """Soma normalizada de (p_i - centro) para as células ocupadas a no máximo `radius`."""
    if not radius > 0:
        raise InvalidArgumentError(f"Raio de repulsão tem de ser positivo (recebido {radius})")

    res = grid.resolution
    reach = int(math.ceil(radius / res)) + 1
    cx, cy = grid.world_to_cell(p_i)
    x0, x1 = max(cx - reach, 0), min(cx + reach + 1, grid.width)
    y0, y1 = max(cy - reach, 0), min(cy + reach + 1, grid.height)
    if x0 >= x1 or y0 >= y1:
        return ZERO

    ys, xs = np.nonzero(grid.occupied_mask[y0:y1, x0:x1])
    if xs.size == 0:
        return ZERO
    ox = grid.origin[0] + (xs + x0 + 0.5) * res
    oy = grid.origin[1] + (ys + y0 + 0.5) * res
    dx = p_i[0] - ox
    dy = p_i[1] - oy
    near = np.hypot(dx, dy) <= radius
    return ForceVector.unit(float(dx[near].sum()), float(dy[near].sum()))


def direction(
    attr: ForceVector,
    reps: Sequence[ForceVector],
    w1: float = DEFAULT_W1,
    w2: float = DEFAULT_W2,
) -> Tuple[float, float]:
    """w1 * attr + soma de (w2 / 2^i) * reps[i]; o resultado não é renormalizado."""
    if not (w1 > 0 and w2 > 0):
        raise InvalidArgumentError(f"Pesos têm de ser positivos (w1={w1}, w2={w2})")
    x = w1 * attr.x
    y = w1 * attr.y
    for i, rep in enumerate(reps):
        x += (w2 / 2 ** i) * rep.x
        y += (w2 / 2 ** i) * rep.y
    return x, y


# ------------------------------------------------------------------------------
# Caminho dinâmico
# ------------------------------------------------------------------------------

def advance_path(robot: Point, path: Sequence[Point], index: int, reach: float) -> int:
    """
    Índice do primeiro nó do caminho ainda não ultrapassado. Um nó conta como
    ultrapassado quando o robô está a menos de `reach` dele, ou mais perto do
    nó seguinte do que o próprio nó.
    """
    while index < len(path) - 1:
        here, nxt = path[index], path[index + 1]
        if math.dist(robot, here) <= reach or math.dist(robot, nxt) < math.dist(here, nxt):
            index += 1
        else:
            break
    return index


def lapf_points(robot: Point, remaining: Sequence[Point], target: Optional[Point] = None) -> List[Point]:
    """p0 = robô, seguido dos nós por ultrapassar; completa até 3 pontos repetindo o último."""
    points: List[Point] = [robot, *remaining]
    if len(points) == 1 and target is not None:
        points.append(target)
    while len(points) < 3:
        points.append(points[-1])
    return points[:3]


def lapf_direction(
    grid: OccupancyGrid,
    robot: Point,
    remaining: Sequence[Point],
    radius: float,
    w1: float = DEFAULT_W1,
    w2: float = DEFAULT_W2,
    target: Optional[Point] = None,
) -> Tuple[float, float]:
    p0, p1, p2 = lapf_points(robot, remaining, target)
    attr = attraction(p0, p1, p2)
    if attr.is_zero and target is not None:
        attr = ForceVector.unit(target[0] - robot[0], target[1] - robot[1])
    reps = [repulsion(grid, p, radius) for p in (p0, p1, p2)]
    return direction(attr, reps, w1, w2)


# ------------------------------------------------------------------------------
# Comandos
# ------------------------------------------------------------------------------

def to_command(
    heading_ref: Tuple[float, float],
    robot: RobotState,
    limits: ControlLimits,
    dt: float,
) -> ControlCommand:
    """
    Converte a direcção (só o ângulo conta) num comando limitado em velocidade
    e aceleração. Direcção nula: pára e deixa omega decair para 0.
    """
    current = ControlCommand(robot.v, robot.omega)
    if math.hypot(*heading_ref) < _EPS:
        return rate_limited(current, ControlCommand(0.0, 0.0), limits, dt)

    error = wrap_angle(math.atan2(heading_ref[1], heading_ref[0]) - robot.heading)
    desired = ControlCommand(
        v=limits.v_max * max(0.0, math.cos(error)),
        omega=clamp(limits.k_omega * error, -limits.omega_max, limits.omega_max),
    )
    return rate_limited(current, desired, limits, dt)


def _lookahead_point(robot: Point, remaining: Sequence[Point], lookahead: float) -> Point:
    """Ponto sobre a poligonal robô -> nós por ultrapassar, a `lookahead` metros; nunca além do último nó."""
    prev = robot
    travelled = 0.0
    for point in remaining:
        seg = math.dist(prev, point)
        if travelled + seg >= lookahead and seg > 0:
            t = (lookahead - travelled) / seg
            return (prev[0] + t * (point[0] - prev[0]), prev[1] + t * (point[1] - prev[1]))
        travelled += seg
        prev = point
    return prev


def corner_turn(robot: Point, remaining: Sequence[Point]) -> Tuple[float, float]:
    """
    (ângulo de viragem no próximo nó, distância do robô a esse nó). Sem nó
    seguinte, ou com o robô em cima do nó, a viragem é 0.
    """
    if not remaining:
        return 0.0, 0.0
    node = remaining[0]
    to_node = math.dist(robot, node)
    if len(remaining) < 2 or to_node < _EPS:
        return 0.0, to_node
    after = remaining[1]
    if math.dist(node, after) < _EPS:
        return 0.0, to_node
    h_in = math.atan2(node[1] - robot[1], node[0] - robot[0])
    h_out = math.atan2(after[1] - node[1], after[0] - node[0])
    return abs(wrap_angle(h_out - h_in)), to_node


def pursuit_command(
    robot: RobotState,
    remaining: Sequence[Point],
    limits: ControlLimits,
    dt: float,
    lookahead: float = PURSUIT_LOOKAHEAD,
) -> ControlCommand:
    """
    Pure pursuit sobre o caminho A*, sem sair do corredor das arestas:

    - o ponto de mira fica sobre os segmentos entre nós, a no máximo
      `lookahead` metros (o simulador passa d_sample);
    - com erro de rumo acima de PURSUIT_TURN_IN_PLACE roda no lugar;
    - a velocidade cabe em omega_max para a curvatura do arco e baixa ao
      aproximar-se de um nó onde o caminho vira mais de PURSUIT_CORNER_ANGLE.
    """
    if lookahead <= 0:
        raise InvalidArgumentError(f"lookahead tem de ser positivo (recebido {lookahead})")
    current = ControlCommand(robot.v, robot.omega)
    goal = _lookahead_point(robot.position, remaining, lookahead)
    dist = math.dist(robot.position, goal)
    if dist < _EPS:
        return rate_limited(current, ControlCommand(0.0, 0.0), limits, dt)

    error = wrap_angle(math.atan2(goal[1] - robot.position[1], goal[0] - robot.position[0]) - robot.heading)
    if abs(error) > PURSUIT_TURN_IN_PLACE:
        desired = ControlCommand(0.0, clamp(limits.k_omega * error, -limits.omega_max, limits.omega_max))
        return rate_limited(current, desired, limits, dt)

    curvature = 2.0 * math.sin(error) / dist
    v = limits.v_max * math.cos(error)
    if abs(curvature) > _EPS:
        v = min(v, limits.omega_max / abs(curvature))
    turn, to_node = corner_turn(robot.position, remaining)
    if turn > PURSUIT_CORNER_ANGLE:
        v = min(v, limits.v_max * max(PURSUIT_MIN_SPEED, to_node / lookahead))
    desired = ControlCommand(v=v, omega=clamp(v * curvature, -limits.omega_max, limits.omega_max))
    return rate_limited(current, desired, limits, dt)


def naive_apf_direction(
    grid: OccupancyGrid,
    robot: Point,
    goal: Point,
    radius: float,
    w1: float = DEFAULT_W1,
    w2: float = DEFAULT_W2,
) -> Tuple[float, float]:
    """APF clássico: atracção directa ao objectivo final e repulsão só na posição do robô."""
    attr = ForceVector.unit(goal[0] - robot[0], goal[1] - robot[1])
    return direction(attr, [repulsion(grid, robot, radius)], w1, w2)
