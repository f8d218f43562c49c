import tempfile
from io import StringIO
from pathlib import Path

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase

from scenarios.models import Scenario
from topoexplore_core.bench import TRIALS_CSV, aggregate, load_trials_csv

from .models import SuiteRun, TrialRecord


ROOT = settings.ROOT_DIR
SMALL_ROOM_CFG = ROOT / "config" / "scenarios" / "small_room.cfg"
SMALL_ROOM_MAP = ROOT / "data" / "maps" / "small_room.map"


def explore(*args):
    out = StringIO()
    call_command("explore", *args, stdout=out, stderr=StringIO())
    return out.getvalue()


class ExploreCommandTestCase(TestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def write(self, name, text):
        path = self.tmp / name
        path.write_text(text, encoding="utf-8")
        return path

    def suite_file(self, strategies="[nearest]", variants="[A+B+C]", trials=1):
        return self.write("suite.yaml", (
            f"scenarios:\n  - {SMALL_ROOM_CFG}\n"
            f"strategies: {strategies}\nvariants: {variants}\n"
            f"trials: {trials}\nseed0: 0\nworkers: 1\n"
        ))


class RunCommandTests(ExploreCommandTestCase):

    def test_run_scenario_file(self):
        trajectory = self.tmp / "traj.csv"
        output = explore("run", "--scenario", str(SMALL_ROOM_CFG), "--trajectory", str(trajectory))

        self.assertIn("✔ Exploração concluída", output)
        lines = trajectory.read_text(encoding="utf-8").splitlines()
        self.assertEqual(lines[0], "t,x,y,theta,v,omega,coverage")
        self.assertGreater(len(lines), 2)

    def test_run_stored_scenario(self):
        obj = Scenario.objects.create(
            name="guardado",
            map_path=str(SMALL_ROOM_MAP),
            start_x=1.0,
            start_y=1.0,
            coverage_threshold=0.98,
            strategy="nearest",
            seed=1,
        )
        output = explore("run", "--scenario", obj.name)
        self.assertIn("guardado (small_room, nearest, seed 1)", output)

    def test_missing_scenario_is_config_error(self):
        with self.assertRaises(CommandError) as ctx:
            explore("run", "--scenario", str(self.tmp / "nao_existe.cfg"))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_bad_scenario_file_is_config_error(self):
        path = self.write("mau.cfg", f"name=mau\nmap={SMALL_ROOM_MAP}\nstart=1.0,1.0\ncor=azul\n")
        with self.assertRaises(CommandError) as ctx:
            explore("run", "--scenario", str(path))
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertIn("mau.cfg:4", str(ctx.exception))

    def test_start_on_wall_is_config_error(self):
        path = self.write("parede.cfg", f"name=parede\nmap={SMALL_ROOM_MAP}\nstart=0.02,0.02\n")
        with self.assertRaises(CommandError) as ctx:
            explore("run", "--scenario", str(path))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_episode_failure_exit_code(self):
        path = self.write("curto.cfg", (
            f"name=curto\nmap={SMALL_ROOM_MAP}\nstart=1.0,1.0\n"
            "coverage_threshold=1.0\nmax_time_s=2\n"
        ))
        with self.assertRaises(CommandError) as ctx:
            explore("run", "--scenario", str(path))
        self.assertEqual(ctx.exception.returncode, 3)
        self.assertIn("timeout", str(ctx.exception))


class SuiteCommandTests(ExploreCommandTestCase):

    def test_suite_records_run_and_trials(self):
        out_dir = self.tmp / "out"
        output = explore("suite", "--config", str(self.suite_file(trials=2)), "--out", str(out_dir))

        self.assertIn("✔ Execução concluída", output)
        self.assertTrue((out_dir / TRIALS_CSV).exists())

        run = SuiteRun.objects.get()
        self.assertEqual(run.kind, "suite")
        self.assertEqual(run.status, "SUCCESS")
        self.assertEqual(run.trials_total, 2)
        self.assertIsNotNone(run.finished_at)
        self.assertEqual(run.out_dir, str(out_dir))

        records = list(run.trials.all())
        self.assertEqual([r.seed for r in records], [0, 1])
        scenario = Scenario.objects.get(name="small_room")
        self.assertTrue(all(r.scenario_id == scenario.id for r in records))
        self.assertTrue(all(Path(r.trajectory_file).exists() for r in records))

        csv_trials = load_trials_csv(out_dir / TRIALS_CSV)
        self.assertEqual(run.trials_succeeded, aggregate(csv_trials).rows[0].successes)

    def test_two_scenarios_on_one_map_are_kept_apart(self):
        other = self.write("outra.cfg", (
            f"name=small_room_direita\nmap={SMALL_ROOM_MAP}\nstart=3.0,1.0\ncoverage_threshold=0.98\n"
        ))
        suite = self.write("duas.yaml", (
            f"scenarios:\n  - {SMALL_ROOM_CFG}\n  - {other}\n"
            f"strategies: [nearest]\ntrials: 1\nseed0: 0\nworkers: 1\n"
        ))
        out_dir = self.tmp / "out"
        explore("suite", "--config", str(suite), "--out", str(out_dir))

        records = list(SuiteRun.objects.get().trials.all())
        self.assertEqual([r.scenario_name for r in records], ["small_room", "small_room_direita"])
        self.assertEqual({r.map_name for r in records}, {"small_room"})
        self.assertEqual(len({r.trajectory_file for r in records}), 2)
        self.assertEqual({r.scenario.name for r in records}, {"small_room", "small_room_direita"})
        self.assertTrue((out_dir / "trajectories" / "small_room_direita__nearest__0.csv").exists())

    def test_no_record(self):
        explore("suite", "--config", str(self.suite_file()), "--out", str(self.tmp / "out"), "--no-record")
        self.assertFalse(SuiteRun.objects.exists())
        self.assertFalse(TrialRecord.objects.exists())
        self.assertFalse(Scenario.objects.exists())

    def test_ablate_uses_variants(self):
        explore("ablate", "--config", str(self.suite_file()), "--out", str(self.tmp / "out"))
        run = SuiteRun.objects.get()
        self.assertEqual(run.kind, "ablation")
        self.assertEqual([r.strategy for r in run.trials.all()], ["A+B+C"])

    def test_invalid_suite_is_config_error(self):
        path = self.write("mau.yaml", f"scenarios:\n  - {SMALL_ROOM_CFG}\ntrials: 0\n")
        with self.assertRaises(CommandError) as ctx:
            explore("suite", "--config", str(path), "--out", str(self.tmp / "out"))
        self.assertEqual(ctx.exception.returncode, 2)
        self.assertFalse(SuiteRun.objects.exists())

    def test_all_off_variant_is_config_error(self):
        with self.assertRaises(CommandError) as ctx:
            explore("ablate", "--config", str(self.suite_file(variants="[B+C]")))
        self.assertEqual(ctx.exception.returncode, 2)

    def test_bad_workers_is_config_error(self):
        with self.assertRaises(CommandError) as ctx:
            explore("suite", "--config", str(self.suite_file()), "--workers", "0", "--no-record")
        self.assertEqual(ctx.exception.returncode, 2)


class PlotCommandTests(ExploreCommandTestCase):

    def test_plot_after_suite(self):
        out_dir = self.tmp / "out"
        explore("suite", "--config", str(self.suite_file()), "--out", str(out_dir), "--no-record")

        output = explore("plot", "--in", str(out_dir))
        self.assertIn("2 gráficos", output)
        self.assertTrue((out_dir / "plots" / "small_room__nearest__0.svg").exists())
        self.assertTrue((out_dir / "plots" / "small_room__coverage.svg").exists())

    def test_plot_empty_dir_is_config_error(self):
        with self.assertRaises(CommandError) as ctx:
            explore("plot", "--in", str(self.tmp))
        self.assertEqual(ctx.exception.returncode, 2)


class SuiteRunModelTests(TestCase):

    def test_mark_error(self):
        run = SuiteRun.objects.create(config_file="x.yaml")
        run.mark_error("falhou")
        run.refresh_from_db()
        self.assertEqual(run.status, "ERROR")
        self.assertEqual(run.error_message, "falhou")
        self.assertEqual(run.success_rate, 0.0)
