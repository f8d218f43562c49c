import logging
import os
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path

from topoexplore_core.config_loader import load_scenario
from topoexplore_core.logging_config import LOG_FORMAT, configure_logging, logging_dict
from topoexplore_core.runner import TrialSpec, run_trials, worker_logging

CONFIG_DIR = Path(__file__).resolve().parents[2] / "config"


class LoggingConfigTests(unittest.TestCase):

    def tearDown(self):
        logger = logging.getLogger("topoexplore_core")
        for handler in list(logger.handlers):
            handler.close()
            logger.removeHandler(handler)

    def test_console_only(self):
        cfg = logging_dict("debug")
        self.assertEqual(list(cfg["handlers"]), ["console"])
        self.assertEqual(cfg["loggers"]["topoexplore_core"]["level"], "DEBUG")
        self.assertEqual(cfg["formatters"]["standard"]["format"], LOG_FORMAT)

    def test_file_handler_writes_module_logs(self):
        with tempfile.TemporaryDirectory() as tmp:
            log_file = Path(tmp) / "logs" / "explore.log"
            configure_logging("INFO", log_file)

            logging.getLogger("topoexplore_core.sim").info("episódio terminado")
            logging.getLogger("topoexplore_core.sim").debug("não aparece")
            self.tearDown()

            text = log_file.read_text(encoding="utf-8")
            self.assertIn("[INFO] topoexplore_core.sim: episódio terminado", text)
            self.assertNotIn("não aparece", text)

    def test_core_modules_install_no_handlers(self):
        import topoexplore_core.sim  # noqa: F401

        self.assertEqual(logging.getLogger("topoexplore_core.sim").handlers, [])

    def test_worker_logging_repeats_parent_config(self):
        with tempfile.TemporaryDirectory() as tmp:
            log_file = Path(tmp) / "explore.log"
            configure_logging("DEBUG", log_file)
            self.assertEqual(worker_logging(), ("DEBUG", os.path.abspath(log_file)))
            self.tearDown()

    def test_worker_processes_write_to_parent_log_file(self):
        scenario = load_scenario(CONFIG_DIR / "scenarios" / "small_room.cfg")
        scenario = replace(scenario, params=replace(scenario.params, max_time_s=1.0))
        specs = [TrialSpec(scenario=scenario, strategy="nearest", seed=s) for s in (0, 1)]
        with tempfile.TemporaryDirectory() as tmp:
            log_file = Path(tmp) / "explore.log"
            configure_logging("INFO", log_file)
            results = run_trials(specs, workers=2)
            self.tearDown()

            self.assertEqual([r.failure_reason for r in results], ["timeout", "timeout"])
            text = log_file.read_text(encoding="utf-8")
            self.assertIn("Episódio small_room / nearest / seed 1 terminado", text)


if __name__ == "__main__":
    unittest.main()
