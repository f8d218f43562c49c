"""
Carregamento de configuração do TopoExplore:
- parâmetros do explorador (ExplorerParams) com os valores por omissão
- ficheiros de cenário `chave=valor` (um episódio)
- ficheiros de suite em YAML (mapas x estratégias x ensaios, ablações)

Os valores dos cenários são tipados com yaml.safe_load; os erros indicam o
ficheiro e a linha.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

import yaml

from .grid_map import GroundTruth, InvalidArgumentError, MapFileError, Point, load_map
from .planner import ABLATION_VARIANTS, get_strategy, parse_variant
from .robot import ControlLimits


log = logging.getLogger(__name__)


class ConfigError(ValueError):
    """Configuração inválida (cenário, suite ou mapa referido por eles)."""


# ------------------------------------------------------------------------------
# Parâmetros
# ------------------------------------------------------------------------------

@dataclass(frozen=True)
class ExplorerParams:
    # LTG
    k: int = 6
    corridor_width: int = 7
    d_max: int = 5
    tau: int = 4
    # selecção do alvo (None: usa o alpha da estratégia)
    alpha: Optional[float] = None
    # o alvo actual só é trocado por um mais barato em mais de switch_margin;
    # sem aproximação de d_sample em stall_time_s o alvo é suprimido
    switch_margin: float = 1.0
    stall_time_s: float = 20.0
    # HTG
    n_max: int = 50
    d_region: float = 6.0
    r_trail: float = 1.0
    r_edge: float = 2.5
    d_edge: float = 6.0
    min_interval: float = 2.0
    # LAPF
    w1: float = 1.0
    w2: float = 0.6
    k_omega: float = 2.0
    # robô
    v_max: float = 0.25
    omega_max: float = 1.0
    acc_max: float = 2.5
    ang_acc_max: float = 3.2
    # simulação
    dt_control: float = 0.05
    update_period: float = 1.0
    max_range: float = 8.0
    beams: int = 360
    max_time_s: float = 1200.0

    def __post_init__(self):
        checks = [
            (self.k >= 2, "k tem de ser >= 2"),
            (self.corridor_width >= 1, "corridor_width tem de ser >= 1"),
            (self.d_max >= 1, "d_max tem de ser >= 1"),
            (self.tau >= 0, "tau não pode ser negativo"),
            (self.alpha is None or self.alpha >= 0, "alpha não pode ser negativo"),
            (self.switch_margin >= 0, "switch_margin não pode ser negativo"),
            (self.stall_time_s > 0, "stall_time_s tem de ser positivo"),
            (self.n_max >= 1, "n_max tem de ser >= 1"),
            (self.d_region > 0 and self.d_edge > 0, "d_region e d_edge têm de ser positivos"),
            (self.r_edge > self.r_trail > 0, "é preciso r_edge > r_trail > 0"),
            (self.min_interval > 0, "min_interval tem de ser positivo"),
            (self.w1 > 0 and self.w2 > 0, "w1 e w2 têm de ser positivos"),
            (0 < self.dt_control <= self.update_period, "é preciso 0 < dt_control <= update_period"),
            (self.max_range > 0 and self.beams >= 1, "sensor inválido (max_range, beams)"),
            (self.max_time_s > 0, "max_time_s tem de ser positivo"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)
        try:
            self.limits
        except InvalidArgumentError as e:
            raise ConfigError(str(e))

    @property
    def limits(self) -> ControlLimits:
        return ControlLimits(
            v_max=self.v_max,
            omega_max=self.omega_max,
            acc_max=self.acc_max,
            ang_acc_max=self.ang_acc_max,
            k_omega=self.k_omega,
        )

    @property
    def ticks_per_update(self) -> int:
        return max(1, int(round(self.update_period / self.dt_control)))

    @classmethod
    def field_names(cls) -> Tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def with_overrides(self, overrides: Mapping[str, Any]) -> "ExplorerParams":
        """Nova instância com os campos de `overrides` (valores já tipados)."""
        known = {f.name: f for f in fields(self)}
        clean: Dict[str, Any] = {}
        for key, value in overrides.items():
            if key not in known:
                raise ConfigError(f"Parâmetro desconhecido: {key}")
            default = getattr(ExplorerParams, key)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{key}: esperado um número, recebido {value!r}")
            if isinstance(default, int) and not isinstance(value, int):
                raise ConfigError(f"{key}: esperado um inteiro, recebido {value!r}")
            clean[key] = float(value) if not isinstance(default, int) else value
        return replace(self, **clean)


# ------------------------------------------------------------------------------
# Cenários
# ------------------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    name: str
    map_path: Path
    start: Point
    start_heading: Optional[float] = None
    coverage_threshold: float = 1.0
    strategy: str = "dualgraph"
    seed: int = 0
    params: ExplorerParams = field(default_factory=ExplorerParams)

    @property
    def map_name(self) -> str:
        return self.map_path.stem

    def load_world(self) -> GroundTruth:
        try:
            return load_map(self.map_path)
        except MapFileError as e:
            raise ConfigError(f"Cenário '{self.name}': {e}")


_STRING_KEYS = {"name", "map", "start", "strategy"}
_SCENARIO_KEYS = {"name", "map", "start", "coverage_threshold", "strategy", "seed"}


def _parse_start(raw: str, where: str) -> Tuple[Point, Optional[float]]:
    parts = [p.strip() for p in raw.split(",")]
    if len(parts) not in (2, 3):
        raise ConfigError(f"{where}: start tem de ser 'x,y' ou 'x,y,theta' (recebido '{raw}')")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"{where}: start com valores não numéricos ('{raw}')")
    if not all(math.isfinite(v) for v in values):
        raise ConfigError(f"{where}: start com valores não finitos ('{raw}')")
    heading = values[2] if len(values) == 3 else None
    return (values[0], values[1]), heading


def parse_scenario(text: str, source: str = "<texto>", base_dir: Optional[Path] = None) -> Scenario:
    """
    Lê um cenário `chave=valor`. Linhas vazias e comentários (`#`) são ignorados.
    Caminhos de mapa relativos são resolvidos a partir de `base_dir`.
    """
    raw: Dict[str, Tuple[int, str]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: esperado 'chave=valor', recebido '{line}'")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}:{lineno}: chave vazia")
        if key in raw:
            raise ConfigError(f"{source}:{lineno}: chave repetida '{key}'")
        raw[key] = (lineno, value)

    values: Dict[str, Any] = {}
    overrides: Dict[str, Any] = {}
    param_names = set(ExplorerParams.field_names())

    for key, (lineno, value) in raw.items():
        where = f"{source}:{lineno}"
        if key in _STRING_KEYS:
            values[key] = value
            continue
        try:
            typed = yaml.safe_load(value) if value else None
        except yaml.YAMLError as e:
            raise ConfigError(f"{where}: valor inválido para '{key}' ({e})")
        if key in _SCENARIO_KEYS:
            values[key] = typed
        elif key in param_names:
            overrides[key] = typed
        else:
            raise ConfigError(f"{where}: chave desconhecida '{key}'")

    for required in ("map", "start"):
        if required not in values:
            raise ConfigError(f"{source}: falta a chave obrigatória '{required}'")

    start_line = raw["start"][0]
    start, heading = _parse_start(values["start"], f"{source}:{start_line}")

    map_path = Path(values["map"])
    if not map_path.is_absolute() and base_dir is not None:
        map_path = base_dir / map_path

    threshold = values.get("coverage_threshold", 1.0)
    if isinstance(threshold, bool) or not isinstance(threshold, (int, float)) or not 0 < threshold <= 1:
        raise ConfigError(f"{source}: coverage_threshold tem de estar em (0, 1] (recebido {threshold!r})")

    seed = values.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError(f"{source}: seed tem de ser um inteiro >= 0 (recebido {seed!r})")

    strategy = values.get("strategy", "dualgraph")
    try:
        get_strategy(strategy)
    except InvalidArgumentError as e:
        raise ConfigError(f"{source}: {e}")

    try:
        params = ExplorerParams().with_overrides(overrides)
    except ConfigError as e:
        raise ConfigError(f"{source}: {e}")

    return Scenario(
        name=values.get("name") or Path(source).stem,
        map_path=map_path,
        start=start,
        start_heading=heading,
        coverage_threshold=float(threshold),
        strategy=strategy,
        seed=seed,
        params=params,
    )


def load_scenario(path: Path | str) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"{path}: não foi possível ler o cenário ({e})")
    scenario = parse_scenario(text, source=str(path), base_dir=path.parent)
    log.debug("Cenário '%s' lido de %s", scenario.name, path)
    return scenario


# ------------------------------------------------------------------------------
# Suites
# ------------------------------------------------------------------------------

@dataclass(frozen=True)
class SuiteConfig:
    scenarios: Tuple[Scenario, ...]
    strategies: Tuple[str, ...] = ("dualgraph", "nearest", "greedy-info")
    trials: int = 10
    seed0: int = 0
    workers: Optional[int] = None
    out: Optional[Path] = None
    variants: Tuple[str, ...] = ABLATION_VARIANTS
    # limite de tempo por cenário = factor x tempo médio da linha de base (None desliga)
    time_cap_factor: Optional[float] = 4.0
    time_cap_baseline: str = "nearest"


def _string_list(data: Mapping[str, Any], key: str, default: Tuple[str, ...], source: str) -> Tuple[str, ...]:
    value = data.get(key, list(default))
    if isinstance(value, str):
        value = [value]
    if not isinstance(value, list) or not value or not all(isinstance(v, str) for v in value):
        raise ConfigError(f"{source}: '{key}' tem de ser uma lista não vazia de nomes")
    return tuple(value)


def parse_suite(data: Any, source: str = "<yaml>", base_dir: Optional[Path] = None) -> SuiteConfig:
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: esperado um mapeamento YAML no topo")

    unknown = set(data) - {
        "scenarios", "strategies", "trials", "seed0", "workers", "out", "variants",
        "time_cap_factor", "time_cap_baseline",
    }
    if unknown:
        raise ConfigError(f"{source}: chaves desconhecidas: {', '.join(sorted(unknown))}")

    base = base_dir or Path(".")
    entries = _string_list(data, "scenarios", (), source)
    scenarios = tuple(load_scenario(p if Path(p).is_absolute() else base / p) for p in entries)
    names = [s.name for s in scenarios]
    repeated = sorted({n for n in names if names.count(n) > 1})
    if repeated:
        raise ConfigError(f"{source}: cenários com o mesmo nome: {', '.join(repeated)}")

    strategies = _string_list(data, "strategies", SuiteConfig.strategies, source)
    variants = _string_list(data, "variants", ABLATION_VARIANTS, source)
    try:
        for name in strategies:
            get_strategy(name)
        variants = tuple(parse_variant(v).name for v in variants)
    except InvalidArgumentError as e:
        raise ConfigError(f"{source}: {e}")

    trials = data.get("trials", SuiteConfig.trials)
    if isinstance(trials, bool) or not isinstance(trials, int) or trials < 1:
        raise ConfigError(f"{source}: trials tem de ser um inteiro >= 1 (recebido {trials!r})")

    seed0 = data.get("seed0", 0)
    if isinstance(seed0, bool) or not isinstance(seed0, int) or seed0 < 0:
        raise ConfigError(f"{source}: seed0 tem de ser um inteiro >= 0 (recebido {seed0!r})")

    workers = data.get("workers")
    if workers is not None and (isinstance(workers, bool) or not isinstance(workers, int) or workers < 1):
        raise ConfigError(f"{source}: workers tem de ser um inteiro >= 1 (recebido {workers!r})")

    out = data.get("out")
    if out is not None:
        out = Path(out)
        if not out.is_absolute():
            out = base / out

    factor = data.get("time_cap_factor", SuiteConfig.time_cap_factor)
    if factor is not None and (isinstance(factor, bool) or not isinstance(factor, (int, float)) or not factor > 0):
        raise ConfigError(f"{source}: time_cap_factor tem de ser positivo ou null (recebido {factor!r})")

    baseline = data.get("time_cap_baseline", SuiteConfig.time_cap_baseline)
    if not isinstance(baseline, str):
        raise ConfigError(f"{source}: time_cap_baseline tem de ser um nome de estratégia")
    try:
        get_strategy(baseline)
    except InvalidArgumentError as e:
        raise ConfigError(f"{source}: time_cap_baseline: {e}")

    return SuiteConfig(
        scenarios=scenarios,
        strategies=strategies,
        trials=trials,
        seed0=seed0,
        workers=workers,
        out=out,
        variants=variants,
        time_cap_factor=None if factor is None else float(factor),
        time_cap_baseline=baseline,
    )


def load_suite(path: Path | str) -> SuiteConfig:
    path = Path(path)
    try:
        with path.open(encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as e:
        raise ConfigError(f"{path}: não foi possível ler a suite ({e})")
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: YAML inválido ({e})")
    return parse_suite(data, source=str(path), base_dir=path.parent)
