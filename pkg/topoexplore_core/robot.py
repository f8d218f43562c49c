"""
Tipos do robô diferencial partilhados pelo controlador (lapf) e pelo simulador (sim).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .grid_map import InvalidArgumentError, Point


@dataclass(frozen=True)
class ControlLimits:
    """Limites do robô (velocidade, aceleração) e ganho angular do controlador."""

    v_max: float = 0.25
    omega_max: float = 1.0
    acc_max: float = 2.5
    ang_acc_max: float = 3.2
    k_omega: float = 2.0

    def __post_init__(self):
        for name in ("v_max", "omega_max", "acc_max", "ang_acc_max", "k_omega"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} tem de ser positivo")


@dataclass(frozen=True)
class RobotState:
    position: Point
    heading: float
    v: float = 0.0
    omega: float = 0.0


@dataclass(frozen=True)
class ControlCommand:
    v: float = 0.0
    omega: float = 0.0


def wrap_angle(angle: float) -> float:
    """Ângulo equivalente em (-pi, pi]."""
    return math.atan2(math.sin(angle), math.cos(angle))


def clamp(value: float, low: float, high: float) -> float:
    return max(low, min(high, value))


def approach(current: float, target: float, max_delta: float) -> float:
    """Move `current` em direcção a `target` no máximo `max_delta`."""
    return current + clamp(target - current, -max_delta, max_delta)


def rate_limited(current: ControlCommand, target: ControlCommand, limits: ControlLimits, dt: float) -> ControlCommand:
    """Aplica saturação de velocidade e de aceleração a um comando desejado."""
    if not dt > 0:
        raise InvalidArgumentError(f"dt tem de ser positivo (recebido {dt})")
    v = clamp(target.v, -limits.v_max, limits.v_max)
    omega = clamp(target.omega, -limits.omega_max, limits.omega_max)
    return ControlCommand(
        v=approach(current.v, v, limits.acc_max * dt),
        omega=approach(current.omega, omega, limits.ang_acc_max * dt),
    )
