from django.db import models, transaction
from django.utils import timezone

from scenarios.models import Scenario


class SuiteRun(models.Model):
    """
    Registo de uma execução de `explore suite` ou `explore ablate`.
    Guarda o estado, a pasta de resultados e um resumo dos ensaios.
    """

    KIND_CHOICES = [
        ("suite", "Suite"),
        ("ablation", "Ablação"),
    ]

    STATUS_CHOICES = [
        ("RUNNING", "Em execução"),
        ("SUCCESS", "Sucesso"),
        ("ERROR", "Erro"),
    ]

    kind = models.CharField(max_length=20, choices=KIND_CHOICES, default="suite")

    config_file = models.CharField(
        max_length=500,
        help_text="Ficheiro YAML da suite."
    )

    out_dir = models.CharField(
        max_length=500,
        blank=True,
        help_text="Pasta onde ficaram os CSVs, trajectórias e gráficos."
    )

    started_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    status = models.CharField(
        max_length=20,
        choices=STATUS_CHOICES,
        default="RUNNING"
    )

    trials_total = models.IntegerField(default=0)
    trials_succeeded = models.IntegerField(default=0)

    error_message = models.TextField(
        blank=True,
        help_text="Mensagem de erro, se a execução terminar em erro."
    )

    class Meta:
        verbose_name = "Execução de Suite"
        verbose_name_plural = "Execuções de Suites"
        ordering = ['-started_at']

    def __str__(self):
        return f"{self.get_kind_display()} {self.config_file} @ {self.started_at:%Y-%m-%d %H:%M}"

    @property
    def success_rate(self):
        return 100.0 * self.trials_succeeded / self.trials_total if self.trials_total else 0.0

    def record_report(self, report, scenarios=None):
        """
        Guarda os ensaios de um SuiteReport e fecha a execução com SUCCESS.
        `scenarios`: dicionário nome do cenário -> Scenario, para ligar cada ensaio.
        """
        from topoexplore_core.bench import trajectory_path

        scenarios = scenarios or {}
        records = []
        for t in report.trials:
            trajectory_file = ""
            if report.out_dir is not None:
                trajectory_file = str(trajectory_path(report.out_dir, t.key))
            records.append(TrialRecord(
                suite_run=self,
                scenario=scenarios.get(t.scenario),
                scenario_name=t.scenario,
                map_name=t.map,
                strategy=t.strategy,
                seed=t.seed,
                success=t.success,
                reason=t.reason,
                time_s=t.time_s,
                distance_m=t.distance_m,
                final_coverage=t.final_coverage,
                compute_ms=t.compute_ms,
                frontier_ms=t.frontier_ms,
                target_ms=t.target_ms,
                other_ms=t.other_ms,
                trajectory_file=trajectory_file,
            ))

        with transaction.atomic():
            TrialRecord.objects.bulk_create(records)
            self.trials_total = len(records)
            self.trials_succeeded = sum(1 for r in records if r.success)
            self.out_dir = str(report.out_dir or "")
            self.status = "SUCCESS"
            self.error_message = "\n".join(report.errors)
            self.finished_at = timezone.now()
            self.save()

    def mark_error(self, message):
        self.status = "ERROR"
        self.error_message = message
        self.finished_at = timezone.now()
        self.save(update_fields=["status", "error_message", "finished_at"])


class TrialRecord(models.Model):
    """
    Um ensaio (mapa, estratégia, seed) de uma execução de suite.
    """

    suite_run = models.ForeignKey(
        SuiteRun,
        on_delete=models.CASCADE,
        related_name="trials"
    )

    scenario = models.ForeignKey(
        Scenario,
        on_delete=models.SET_NULL,
        null=True,
        blank=True,
        related_name="trials"
    )

    scenario_name = models.CharField(max_length=100)
    map_name = models.CharField(max_length=100)
    strategy = models.CharField(max_length=30)
    seed = models.PositiveIntegerField()

    success = models.BooleanField(default=False)
    reason = models.CharField(
        max_length=30,
        blank=True,
        help_text="Motivo do fim: coverage, complete, collision, timeout, detached, error."
    )

    time_s = models.FloatField(default=0.0)
    distance_m = models.FloatField(default=0.0)
    final_coverage = models.FloatField(default=0.0)

    # médias por actualização, em milissegundos
    compute_ms = models.FloatField(default=0.0)
    frontier_ms = models.FloatField(default=0.0)
    target_ms = models.FloatField(default=0.0)
    other_ms = models.FloatField(default=0.0)

    trajectory_file = models.CharField(
        max_length=500,
        blank=True,
        help_text="CSV da trajectória deste ensaio."
    )

    class Meta:
        verbose_name = "Ensaio"
        verbose_name_plural = "Ensaios"
        unique_together = ('suite_run', 'scenario_name', 'strategy', 'seed')
        ordering = ['scenario_name', 'strategy', 'seed']

    def __str__(self):
        return f"{self.scenario_name} / {self.strategy} / seed {self.seed}"
