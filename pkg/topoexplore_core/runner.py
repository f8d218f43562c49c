"""
Distribuição dos ensaios por um conjunto de processos.

Cada ensaio é independente (cenário, estratégia, seed); os resultados voltam
pela ordem de submissão, qualquer que seja a ordem em que terminam.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

from .config_loader import ConfigError, Scenario
from .logging_config import configure_logging
from .planner import get_strategy
from .sim import EpisodeResult, run_episode


log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrialSpec:
    scenario: Scenario
    strategy: str
    seed: int

    @property
    def key(self) -> Tuple[str, str, int]:
        return self.scenario.name, self.strategy, self.seed


def run_trial(spec: TrialSpec) -> EpisodeResult:
    """
    Corre um ensaio. Erros de configuração propagam-se; qualquer outro erro
    inesperado fica registado no resultado como falha.
    """
    world = spec.scenario.load_world()
    strategy = get_strategy(spec.strategy)
    scenario = replace(spec.scenario, seed=spec.seed, strategy=spec.strategy)
    try:
        return run_episode(world, strategy, scenario)
    except ConfigError:
        raise
    except Exception as e:
        log.exception("Erro inesperado no ensaio %s", spec.key)
        return EpisodeResult(
            map_name=spec.scenario.map_name,
            strategy=spec.strategy,
            seed=spec.seed,
            scenario=spec.scenario.name,
            failure_reason="error",
            end_reason="error",
            errors=[f"{type(e).__name__}: {e}"],
        )


def default_workers() -> int:
    return os.cpu_count() or 1


def worker_logging() -> Tuple[str, Optional[str]]:
    """Nível e ficheiro de log do processo actual, para repetir nos processos filhos."""
    logger = logging.getLogger("topoexplore_core")
    level = logging.getLevelName(logger.getEffectiveLevel())
    files = [h.baseFilename for h in logger.handlers if isinstance(h, logging.FileHandler)]
    return level, (files[0] if files else None)


def run_trials(specs: Sequence[TrialSpec], workers: Optional[int] = None) -> List[EpisodeResult]:
    """
    Corre os ensaios com `workers` processos (1 = no processo actual). Cada
    processo filho configura o logging com o nível e o ficheiro do pai.
    """
    if workers is not None and workers < 1:
        raise ConfigError(f"workers tem de ser >= 1 (recebido {workers})")
    workers = min(workers or default_workers(), max(len(specs), 1))

    log.info("A correr %d ensaios com %d processo(s)", len(specs), workers)
    if workers == 1:
        return [run_trial(spec) for spec in specs]

    with ProcessPoolExecutor(max_workers=workers, initializer=configure_logging, initargs=worker_logging()) as pool:
        return list(pool.map(run_trial, specs))
