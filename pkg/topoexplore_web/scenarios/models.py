from dataclasses import fields
from pathlib import Path

from django.core.validators import MaxValueValidator, MinValueValidator
from django.db import models

from topoexplore_core.config_loader import ExplorerParams, Scenario as CoreScenario
from topoexplore_core.planner import STRATEGIES


STRATEGY_CHOICES = [(name, name) for name in STRATEGIES]


class Scenario(models.Model):
    """
    Cenário de exploração guardado (mapa, partida, estratégia, seed).
    Normalmente importado de um ficheiro .cfg pelo comando `explore`.
    """

    name = models.CharField(
        max_length=100,
        unique=True,
        help_text="Nome do cenário (ex.: scene1, blocked_door)."
    )

    map_path = models.CharField(
        max_length=500,
        help_text="Caminho absoluto do ficheiro de mapa (.map)."
    )

    start_x = models.FloatField(help_text="Partida, x em metros.")
    start_y = models.FloatField(help_text="Partida, y em metros.")
    start_theta = models.FloatField(
        null=True,
        blank=True,
        help_text="Rumo inicial em radianos. Vazio: tirado da seed."
    )

    coverage_threshold = models.FloatField(
        default=1.0,
        validators=[MinValueValidator(0.0), MaxValueValidator(1.0)],
        help_text="Fracção de cobertura que termina o episódio com sucesso."
    )

    strategy = models.CharField(
        max_length=30,
        choices=STRATEGY_CHOICES,
        default="dualgraph",
    )

    seed = models.PositiveIntegerField(default=0)

    params = models.JSONField(
        default=dict,
        blank=True,
        help_text="Parâmetros do explorador diferentes dos valores por omissão (ex.: {\"d_region\": 4.0})."
    )

    source_file = models.CharField(
        max_length=500,
        blank=True,
        help_text="Ficheiro .cfg de onde o cenário foi importado."
    )

    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)

    class Meta:
        verbose_name = "Cenário"
        verbose_name_plural = "Cenários"
        ordering = ['name']

    def __str__(self):
        return f"{self.name} ({Path(self.map_path).stem}, {self.strategy})"

    def to_core(self) -> CoreScenario:
        """Cenário do núcleo; parâmetros inválidos levantam ConfigError."""
        return CoreScenario(
            name=self.name,
            map_path=Path(self.map_path),
            start=(self.start_x, self.start_y),
            start_heading=self.start_theta,
            coverage_threshold=self.coverage_threshold,
            strategy=self.strategy,
            seed=self.seed,
            params=ExplorerParams().with_overrides(self.params or {}),
        )

    @classmethod
    def sync_from_core(cls, scenario: CoreScenario, source_file: str = ""):
        """Cria ou actualiza o registo com o mesmo nome. Devolve (obj, created)."""
        defaults = ExplorerParams()
        overrides = {
            f.name: getattr(scenario.params, f.name)
            for f in fields(ExplorerParams)
            if getattr(scenario.params, f.name) != getattr(defaults, f.name)
        }
        return cls.objects.update_or_create(
            name=scenario.name,
            defaults={
                "map_path": str(Path(scenario.map_path).resolve()),
                "start_x": scenario.start[0],
                "start_y": scenario.start[1],
                "start_theta": scenario.start_heading,
                "coverage_threshold": scenario.coverage_threshold,
                "strategy": scenario.strategy,
                "seed": scenario.seed,
                "params": overrides,
                "source_file": source_file,
            },
        )
