from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from benchmarks.models import SuiteRun
from scenarios.models import Scenario

# Importar núcleo
from topoexplore_core.bench import PLOT_DIR, plot_directory, run_ablation, run_suite
from topoexplore_core.config_loader import ConfigError, load_scenario, load_suite
from topoexplore_core.grid_map import InvalidArgumentError
from topoexplore_core.runner import TrialSpec, run_trial
from topoexplore_core.sim import write_trajectory_csv


EXIT_CONFIG = 2
EXIT_EPISODE = 3


class Command(BaseCommand):
    help = "Exploração 2D com grafos topológicos: episódio, suite, ablação e gráficos."

    def add_arguments(self, parser):
        sub = parser.add_subparsers(dest="action", required=True)

        run = sub.add_parser("run", help="Corre um episódio de um cenário.")
        run.add_argument("--scenario", required=True,
                         help="Ficheiro .cfg ou nome de um cenário guardado.")
        run.add_argument("--trajectory", help="CSV onde escrever a trajectória.")

        for name, text in (("suite", "Corre uma suite mapas x estratégias x ensaios."),
                           ("ablate", "Corre as variantes de ablação de uma suite.")):
            p = sub.add_parser(name, help=text)
            p.add_argument("--config", required=True, help="Ficheiro YAML da suite.")
            p.add_argument("--out", help="Pasta de resultados (sobrepõe 'out' da suite).")
            p.add_argument("--workers", type=int, help="Número de processos.")
            p.add_argument("--no-record", action="store_true",
                           help="Não guardar a execução na base de dados.")

        plot = sub.add_parser("plot", help="Desenha os gráficos de uma pasta de resultados.")
        plot.add_argument("--in", dest="in_dir", required=True, help="Pasta escrita por suite/ablate.")

    def handle(self, *args, **options):
        action = options["action"]
        try:
            if action == "run":
                self._run(options)
            elif action == "plot":
                self._plot(options)
            else:
                self._suite(options, kind="ablation" if action == "ablate" else "suite")
        except (ConfigError, InvalidArgumentError) as e:
            raise CommandError(str(e), returncode=EXIT_CONFIG)

    # ------------------------------------------------------------------------------
    # run
    # ------------------------------------------------------------------------------

    def _load_scenario(self, ref):
        if Path(ref).exists():
            return load_scenario(ref)
        try:
            return Scenario.objects.get(name=ref).to_core()
        except Scenario.DoesNotExist:
            raise ConfigError(f"Cenário '{ref}' não encontrado (nem ficheiro nem registo guardado).")

    def _run(self, options):
        scenario = self._load_scenario(options["scenario"])
        world = scenario.load_world()
        if world.is_blocked(world.grid.world_to_cell(scenario.start)):
            raise ConfigError(f"Cenário '{scenario.name}': partida numa célula ocupada ou fora do mapa.")

        self.stdout.write(self.style.NOTICE(
            f"▶ A explorar: {scenario.name} ({scenario.map_name}, {scenario.strategy}, seed {scenario.seed})"
        ))

        result = run_trial(TrialSpec(scenario=scenario, strategy=scenario.strategy, seed=scenario.seed))

        if options.get("trajectory"):
            path = write_trajectory_csv(result.trajectory, options["trajectory"])
            self.stdout.write(f"Trajectória: {path}")

        summary = (
            f"Tempo: {result.time_s:.2f} s\n"
            f"Distância: {result.distance_m:.2f} m\n"
            f"Cobertura final: {100.0 * result.final_coverage:.1f} %\n"
            f"Cálculo por decisão: {result.mean_compute_ms:.2f} ms\n"
        )
        if result.errors:
            self.stdout.write(self.style.WARNING("⚠ Erros encontrados:"))
            for err in result.errors:
                self.stdout.write(f" - {err}")

        if not result.success:
            self.stdout.write(summary)
            raise CommandError(f"Episódio falhou: {result.failure_reason}", returncode=EXIT_EPISODE)

        self.stdout.write(self.style.SUCCESS(f"✔ Exploração concluída ({result.end_reason}).\n" + summary))

    # ------------------------------------------------------------------------------
    # suite / ablate
    # ------------------------------------------------------------------------------

    def _suite(self, options, kind):
        config_path = Path(options["config"])
        config = load_suite(config_path)

        out_dir = options.get("out") or config.out or Path(settings.TOPOEXPLORE_OUTPUT_DIR) / config_path.stem
        workers = options.get("workers")
        if workers is None:
            workers = config.workers or settings.TOPOEXPLORE_WORKERS
        if workers is not None and workers < 1:
            raise ConfigError(f"--workers tem de ser >= 1 (recebido {workers})")

        suite_run = None
        scenarios = {}
        if not options.get("no_record"):
            for core in config.scenarios:
                obj, _ = Scenario.sync_from_core(core, source_file=str(config_path))
                scenarios[core.name] = obj
            suite_run = SuiteRun.objects.create(kind=kind, config_file=str(config_path), out_dir=str(out_dir))

        self.stdout.write(self.style.NOTICE(
            f"▶ A executar {'ablação' if kind == 'ablation' else 'suite'}: {config_path}"
        ))

        runner = run_ablation if kind == "ablation" else run_suite
        try:
            report = runner(config, out_dir=Path(out_dir), workers=workers)
        except Exception as e:
            if suite_run is not None:
                suite_run.mark_error(f"{type(e).__name__}: {e}")
            raise

        if suite_run is not None:
            suite_run.record_report(report, scenarios)

        lines = []
        for row in report.rows:
            lines.append(
                f"{row.scenario} / {row.strategy}: sucesso {row.success_rate:.0f} % "
                f"({row.successes}/{row.trials}), tempo {row.time_s or '-'} s, "
                f"distância {row.distance_m or '-'} m, cálculo {row.compute_ms or '-'} ms"
            )
        self.stdout.write(self.style.SUCCESS(
            f"✔ Execução concluída.\n"
            f"Ensaios: {len(report.trials)} ({len(report.failed_trials)} falhados)\n"
            f"Resultados: {report.out_dir}\n" + "\n".join(lines)
        ))

        if report.errors:
            self.stdout.write(self.style.WARNING("⚠ Erros encontrados:"))
            for err in report.errors:
                self.stdout.write(f" - {err}")

    # ------------------------------------------------------------------------------
    # plot
    # ------------------------------------------------------------------------------

    def _plot(self, options):
        in_dir = Path(options["in_dir"])
        written = plot_directory(in_dir)
        self.stdout.write(self.style.SUCCESS(f"✔ {len(written)} gráficos escritos em {in_dir / PLOT_DIR}"))
