from dataclasses import replace

from django.conf import settings
from django.test import TestCase

from topoexplore_core.config_loader import ConfigError, ExplorerParams, load_scenario

from .models import Scenario


SCENARIO_DIR = settings.ROOT_DIR / "config" / "scenarios"


class ScenarioModelTests(TestCase):

    def test_sync_creates_then_updates(self):
        core = load_scenario(SCENARIO_DIR / "small_room.cfg")

        obj, created = Scenario.sync_from_core(core, source_file="small_room.cfg")
        self.assertTrue(created)
        self.assertEqual(obj.params, {})
        self.assertEqual(obj.source_file, "small_room.cfg")

        moved = replace(core, start=(1.5, 1.0), seed=7)
        obj, created = Scenario.sync_from_core(moved)
        self.assertFalse(created)
        self.assertEqual(Scenario.objects.count(), 1)
        self.assertEqual((obj.start_x, obj.seed), (1.5, 7))

    def test_round_trip_keeps_overrides(self):
        core = load_scenario(SCENARIO_DIR / "small_room.cfg")
        core = replace(core, params=ExplorerParams(d_region=4.0, k=8), start_heading=0.5)

        obj, _ = Scenario.sync_from_core(core)
        obj.refresh_from_db()
        self.assertEqual(obj.params, {"k": 8, "d_region": 4.0})

        back = obj.to_core()
        self.assertEqual(back.params, core.params)
        self.assertEqual(back.start_heading, 0.5)
        self.assertEqual(back.map_name, "small_room")
        self.assertEqual(back.map_path.resolve(), core.map_path.resolve())

    def test_invalid_params_raise_config_error(self):
        obj = Scenario.objects.create(
            name="mau",
            map_path=str(settings.ROOT_DIR / "data" / "maps" / "small_room.map"),
            start_x=1.0,
            start_y=1.0,
            params={"cor": 3},
        )
        with self.assertRaises(ConfigError):
            obj.to_core()

        obj.params = {"k": 1}
        with self.assertRaises(ConfigError):
            obj.to_core()

    def test_str(self):
        obj = Scenario(name="s1", map_path="/tmp/scene1.map", start_x=0, start_y=0, strategy="nearest")
        self.assertEqual(str(obj), "s1 (scene1, nearest)")
