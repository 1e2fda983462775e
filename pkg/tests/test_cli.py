from __future__ import annotations

import csv
import io
import json
import tempfile
import unittest
from pathlib import Path
from typing import Any
from unittest.mock import patch

from harmonic_renorm.cli import (
    EXIT_CONFIG,
    EXIT_INCOMPATIBLE,
    EXIT_NONCONVERGENCE,
    EXIT_OK,
    ConfigInvalid,
    RunConfig,
    main,
)
from harmonic_renorm.config import Settings
from harmonic_renorm.solver import MonotonicityViolation
from harmonic_renorm.topology import parse_table_csv


class CliTestCase(unittest.TestCase):
    """Runs the CLI against a temporary directory with single-start relaxation."""

    def setUp(self) -> None:
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)
        self.settings = Settings(restarts=1)

    def tearDown(self) -> None:
        self._tmp.cleanup()

    def run_cli(self, *argv: str) -> int:
        return main(list(argv), settings=self.settings)

    def write_json(self, name: str, payload: Any) -> Path:
        path = self.tmp / name
        path.write_text(json.dumps(payload), encoding="utf-8")
        return path


class TableCommandTests(CliTestCase):
    """Tests for the table command."""

    def test_octahedral_csv(self) -> None:
        """Test that the binary octahedral table lists eight classes with γ_e at 25/144."""
        out = self.tmp / "table.csv"
        code = self.run_cli("table", "--manifold", "2O", "--format", "csv", "--out", str(out))
        self.assertEqual(code, EXIT_OK)
        rows = parse_table_csv(out.read_text(encoding="utf-8"))
        self.assertEqual(len(rows), 8)
        self.assertEqual(rows[4]["name"], "γ_e")
        self.assertAlmostEqual(rows[4]["esg_over_pi"], 25 / 144)

    def test_unknown_manifold(self) -> None:
        self.assertEqual(self.run_cli("table", "--manifold", "klein"), EXIT_CONFIG)


class ResolveCommandTests(CliTestCase):
    """Tests for the resolve command."""

    def test_compatible(self) -> None:
        out = self.tmp / "resolve.txt"
        code = self.run_cli("resolve", "--manifold", "circle", "--outer", "2", "--sing", "1,1", "--out", str(out))
        self.assertEqual(code, EXIT_OK)
        self.assertEqual(out.read_text(encoding="utf-8").splitlines()[0], "compatible")

    def test_incompatible(self) -> None:
        """Test that an incompatible resolution exits 2 and still reports the singular energy."""
        out = self.tmp / "resolve.json"
        code = self.run_cli(
            "resolve", "--manifold", "q8", "--outer", "x", "--sing", "y", "--format", "json", "--out", str(out)
        )
        self.assertEqual(code, EXIT_INCOMPATIBLE)
        payload = json.loads(out.read_text(encoding="utf-8"))
        self.assertEqual(payload["verdict"], "incompatible")
        self.assertAlmostEqual(payload["singular_energy_over_pi"], 0.25)

    def test_unknown_class(self) -> None:
        self.assertEqual(self.run_cli("resolve", "--manifold", "q8", "--outer", "q"), EXIT_CONFIG)


class EnergyCommandTests(CliTestCase):
    """Tests for the energy command."""

    def _config(self, **extra) -> dict:
        payload = {
            "target": "circle",
            "boundary_data": {"class": 1},
            "singularities": [{"x": 0.0, "y": 0.0, "class": 1}],
            "rho_schedule": [0.3, 0.2, 0.15],
            "h": 1 / 24,
            "solver": {"restarts": 1},
        }
        payload.update(extra)
        return payload

    def test_unknown_key(self) -> None:
        path = self.write_json("bad.json", self._config(colour="blue"))
        self.assertEqual(self.run_cli("energy", "--config", str(path)), EXIT_CONFIG)

    def test_unknown_solver_key(self) -> None:
        path = self.write_json("bad.json", self._config(solver={"iterations": 3}))
        self.assertEqual(self.run_cli("energy", "--config", str(path)), EXIT_CONFIG)

    def test_incompatible_charges(self) -> None:
        path = self.write_json("bad.json", self._config(singularities=[{"x": 0.0, "y": 0.0, "class": 2}]))
        self.assertEqual(self.run_cli("energy", "--config", str(path)), EXIT_INCOMPATIBLE)

    def test_non_numeric_conjugator(self) -> None:
        """Test that a conjugator that is not an integer is a configuration error."""
        singularity = {"x": 0.0, "y": 0.0, "class": 1, "conjugator": "abc"}
        path = self.write_json("bad.json", self._config(singularities=[singularity]))
        self.assertEqual(self.run_cli("energy", "--config", str(path)), EXIT_CONFIG)

    def test_non_numeric_fields(self) -> None:
        cases = {
            "phase": self._config(boundary_data={"class": 1, "phase": "north"}),
            "x": self._config(singularities=[{"x": "left", "y": 0.0, "class": 1}]),
            "h": self._config(h=[0.1]),
            "rho_schedule": self._config(rho_schedule=["small", 0.2]),
        }
        for name, payload in cases.items():
            with self.subTest(field=name):
                path = self.write_json(f"{name}.json", payload)
                self.assertEqual(self.run_cli("energy", "--config", str(path)), EXIT_CONFIG)

    def test_energy_increase_exits_as_nonconvergence(self) -> None:
        """Test that an energy increase during relaxation maps to exit code 3."""
        path = self.write_json("vortex.json", self._config())
        failure = MonotonicityViolation("Energy rose from 1 to 2 at sweep 5")
        with patch("harmonic_renorm.cli.renormalised_energy", side_effect=failure):
            self.assertEqual(self.run_cli("energy", "--config", str(path)), EXIT_NONCONVERGENCE)

    def test_csv_report_is_deterministic(self) -> None:
        path = self.write_json("vortex.json", self._config())
        first, second = self.tmp / "a.csv", self.tmp / "b.csv"
        self.assertEqual(self.run_cli("energy", "--config", str(path), "--format", "csv", "--out", str(first)), EXIT_OK)
        self.assertEqual(self.run_cli("energy", "--config", str(path), "--format", "csv", "--out", str(second)), EXIT_OK)
        text = first.read_text(encoding="utf-8")
        self.assertEqual(text, second.read_text(encoding="utf-8"))
        records = list(csv.DictReader(io.StringIO(text)))
        self.assertEqual([r["record"] for r in records[:3]], ["sample"] * 3)
        fit = next(r for r in records if r["record"] == "fit")
        self.assertLess(abs(float(fit["W"])), 0.25)


class BallsCommandTests(CliTestCase):
    """Tests for the balls command."""

    def test_csv_trace(self) -> None:
        out = self.tmp / "balls.csv"
        code = self.run_cli(
            "balls", "--balls=-1,0,0.2;1,0,0.2", "--t-max", "2", "--samples", "4",
            "--format", "csv", "--out", str(out),
        )
        self.assertEqual(code, EXIT_OK)
        records = list(csv.DictReader(io.StringIO(out.read_text(encoding="utf-8"))))
        self.assertEqual(len(records), 4 * 2 + 4 * 1)
        self.assertEqual(set(records[0]), {"t", "ballIndex", "cx", "cy", "r"})

    def test_list_config_file(self) -> None:
        """Test that a bare list of [x, y, r] triples is accepted as the balls config."""
        path = self.write_json("balls.json", [[0, 0, 1], [1.5, 0, 1]])
        out = self.tmp / "balls.csv"
        code = self.run_cli("balls", "--config", str(path), "--format", "csv", "--out", str(out))
        self.assertEqual(code, EXIT_OK)
        text = out.read_text(encoding="utf-8")
        self.assertEqual(text.splitlines()[0], "t,ballIndex,cx,cy,r")
        records = list(csv.DictReader(io.StringIO(text)))
        self.assertEqual({r["ballIndex"] for r in records}, {"0"})
        self.assertEqual(float(records[0]["t"]), 0.0)
        self.assertAlmostEqual(float(records[0]["cx"]), 0.75)
        self.assertAlmostEqual(float(records[0]["r"]), 2.0)

    def test_scalar_config_file(self) -> None:
        path = self.write_json("balls.json", 3)
        self.assertEqual(self.run_cli("balls", "--config", str(path)), EXIT_CONFIG)

    def test_config_file(self) -> None:
        """Test that the object form still carries t_max alongside the balls."""
        path = self.write_json("balls.json", {"balls": [[0, 0, 1], [0.5, 0, 1]], "t_max": 0.5})
        out = self.tmp / "balls.json.out"
        code = self.run_cli("balls", "--config", str(path), "--format", "json", "--out", str(out))
        self.assertEqual(code, EXIT_OK)
        payload = json.loads(out.read_text(encoding="utf-8"))
        self.assertEqual(payload["merge_times"], [0.0])
        self.assertAlmostEqual(payload["content_upper_bound"], 4.0)

    def test_malformed_balls(self) -> None:
        self.assertEqual(self.run_cli("balls", "--balls", "0,0"), EXIT_CONFIG)
        self.assertEqual(self.run_cli("balls", "--balls", "0,0,-1"), EXIT_CONFIG)


class SynharmonyCommandTests(CliTestCase):
    """Tests for the synharmony command."""

    def test_json_output(self) -> None:
        out = self.tmp / "syn.json"
        code = self.run_cli(
            "synharmony", "--manifold", "circle", "--class", "1", "--rotation", "0",
            "--times", "1,2", "--n-theta", "16", "--format", "json", "--out", str(out),
        )
        self.assertEqual(code, EXIT_OK)
        payload = json.loads(out.read_text(encoding="utf-8"))
        self.assertEqual([entry["T"] for entry in payload["per_time"]], [1.0, 2.0])
        self.assertLess(abs(payload["estimate"]), 1e-8)


class RunConfigTests(CliTestCase):
    def test_rejects_unknown_command(self) -> None:
        with self.assertRaises(ConfigInvalid):
            RunConfig("plot")

    def test_rejects_bad_threads(self) -> None:
        self.assertEqual(self.run_cli("table", "--manifold", "q8", "--threads", "0"), EXIT_CONFIG)


if __name__ == "__main__":
    unittest.main()
