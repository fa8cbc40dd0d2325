#!/usr/bin/env python3
"""
Command-Line Interface Test Suite
Tests configuration loading and validation, exit codes, and the artifacts
written by the fit, init-check, prune, compare and render subcommands.
"""
import csv
import io
import json
import os
import sys
import tempfile
import unittest
from unittest.mock import patch

# Import the modules to test
try:
    from ExperimentConfig import ConfigError, ConfigManager, ExperimentConfig
    from FourierLattice import FrequencyMatrix, lattice_size
    from FourierSeriesINR import (
        COMPARE_HEADER,
        EXIT_FAILURE,
        EXIT_OK,
        EXIT_USAGE,
        build_network,
        main,
        parse_arguments,
    )
    from ImageGrid import load_image
except ImportError as e:
    print(f"Error importing modules: {e}")
    sys.exit(1)


class CliTestCase(unittest.TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)
        self.out = os.path.join(self.tmp.name, "run")

    def run_cli(self, *argv):
        """Run main() quietly; returns (exit code, captured stdout)."""
        args = list(argv) + ["--log-level", "ERROR"]
        with patch("sys.stdout", new_callable=io.StringIO) as stdout:
            code = main(args)
        return code, stdout.getvalue()

    def write_config(self, doc):
        path = os.path.join(self.tmp.name, "config.json")
        with open(path, "w") as f:
            json.dump(doc, f)
        return path


class TestConfigManager(CliTestCase):
    """Test the JSON configuration layer."""

    def test_defaults(self):
        manager = ConfigManager()
        self.assertEqual(manager.get_value("training.lr"), 1e-3)
        self.assertEqual(manager.get_value("mapping.family"), "integer")
        self.assertIsNone(manager.get_value("mapping.missing"))
        self.assertEqual(manager.get_value("nothing.here", 7), 7)

    def test_file_merge(self):
        path = self.write_config({"mapping": {"N": 8}, "training": {"iterations": 10}})
        manager = ConfigManager(path)
        self.assertEqual(manager.get_value("mapping.N"), 8)
        self.assertEqual(manager.get_value("mapping.family"), "integer")
        self.assertEqual(manager.get_value("training.iterations"), 10)

    def test_unknown_keys(self):
        for doc in ({"mapping": {"bogus": 1}}, {"bogus": 1}, {"mapping": 3}):
            with self.subTest(doc=doc):
                with self.assertRaises(ConfigError):
                    ConfigManager(self.write_config(doc))

    def test_missing_and_malformed_files(self):
        with self.assertRaises(ConfigError):
            ConfigManager(os.path.join(self.tmp.name, "absent.json"))
        path = os.path.join(self.tmp.name, "broken.json")
        with open(path, "w") as f:
            f.write("{not json")
        with self.assertRaises(ConfigError):
            ConfigManager(path)

    def test_set_value(self):
        manager = ConfigManager()
        manager.set_value("network.depth", 4)
        self.assertEqual(manager.get_value("network.depth"), 4)
        with self.assertRaises(ConfigError):
            manager.set_value("network.height", 4)

    def test_validation_collects_problems(self):
        manager = ConfigManager()
        manager.set_value("mapping.N", -1)
        manager.set_value("training.iterations", 0)
        with self.assertRaises(ConfigError) as ctx:
            ExperimentConfig.from_manager(manager)
        self.assertIn("mapping.N", str(ctx.exception))
        self.assertIn("training.iterations", str(ctx.exception))

    def test_shipped_config_is_valid(self):
        root = os.path.dirname(os.path.abspath(__file__))
        config = ExperimentConfig.from_manager(ConfigManager(os.path.join(root, "config.json")))
        self.assertEqual(config.mapping.N, 16)


class TestArguments(unittest.TestCase):
    """Test argument parsing."""

    def test_subcommand_required(self):
        with patch("sys.stderr", new_callable=io.StringIO):
            with self.assertRaises(SystemExit) as ctx:
                parse_arguments([])
        self.assertEqual(ctx.exception.code, 2)

    def test_flags(self):
        args = parse_arguments(["fit", "--image", "a.png", "--image", "b.png", "--N", "8",
                                "--progressive", "--mapping", "gaussian"])
        self.assertEqual(args.image, ["a.png", "b.png"])
        self.assertEqual(args.N, 8)
        self.assertTrue(args.progressive)
        self.assertIsNone(args.depth)

    def test_unknown_mapping(self):
        with patch("sys.stderr", new_callable=io.StringIO):
            with self.assertRaises(SystemExit):
                parse_arguments(["fit", "--mapping", "wavelet"])


class TestFit(CliTestCase):
    """Test the fit subcommand."""

    def test_invalid_frequency_writes_nothing(self):
        code, _ = self.run_cli("fit", "--synthetic", "natural", "--N", "-1", "--out", self.out)
        self.assertEqual(code, EXIT_USAGE)
        self.assertFalse(os.path.exists(self.out))

    def test_unknown_config_key(self):
        path = self.write_config({"training": {"learning_rate": 0.1}})
        code, _ = self.run_cli("fit", "--config", path, "--synthetic", "natural", "--out", self.out)
        self.assertEqual(code, EXIT_USAGE)
        self.assertFalse(os.path.exists(self.out))

    def test_band_limited_fit(self):
        code, stdout = self.run_cli("fit", "--synthetic", "band_limited", "--synthetic-size", "64",
                                    "--N", "16", "--iterations", "2000", "--out", self.out)
        self.assertEqual(code, EXIT_OK)
        self.assertIn("final train PSNR", stdout)
        for name in ("metrics.csv", "weights.json", "recon.png", "period.png", "manifest.json"):
            self.assertTrue(os.path.exists(os.path.join(self.out, name)), name)

        with open(os.path.join(self.out, "manifest.json")) as f:
            manifest = json.load(f)
        self.assertGreater(manifest["final"]["train_psnr"], 60.0)
        self.assertEqual(manifest["command"], "fit")
        self.assertEqual(manifest["config"]["mapping"]["N"], 16)

        with open(os.path.join(self.out, "metrics.csv"), newline="") as f:
            rows = list(csv.reader(f))
        self.assertEqual(rows[0], ["iteration", "train_psnr", "test_psnr", "alpha"])
        self.assertEqual((rows[1][0], rows[-1][0]), ("0", "2000"))
        self.assertEqual(load_image(os.path.join(self.out, "recon.png")).height, 64)

    def test_fft_start_is_exact(self):
        code, _ = self.run_cli("fit", "--synthetic", "band_limited", "--synthetic-size", "64",
                               "--N", "16", "--iterations", "1", "--lr", "0", "--weight-init", "fft",
                               "--out", self.out)
        self.assertEqual(code, EXIT_OK)
        with open(os.path.join(self.out, "metrics.csv"), newline="") as f:
            first = list(csv.DictReader(f))[0]
        self.assertEqual(first["iteration"], "0")
        self.assertGreaterEqual(float(first["train_psnr"]), 140.0)

        with open(os.path.join(self.out, "manifest.json")) as f:
            text = f.read()
        self.assertNotIn("Infinity", text)
        self.assertLessEqual(json.loads(text)["final"]["train_psnr"], 300.0)

    def test_fft_init_rejects_odd_image(self):
        code, _ = self.run_cli("fit", "--synthetic", "band_limited", "--synthetic-size", "65",
                               "--N", "16", "--weight-init", "fft", "--out", self.out)
        self.assertEqual(code, EXIT_USAGE)
        self.assertFalse(os.path.exists(self.out))

    def test_non_numeric_learning_rate(self):
        path = self.write_config({"training": {"lr": "0.1"}})
        code, _ = self.run_cli("fit", "--config", path, "--synthetic", "natural", "--out", self.out)
        self.assertEqual(code, EXIT_USAGE)
        self.assertFalse(os.path.exists(self.out))

    def test_progressive_alpha_column(self):
        code, _ = self.run_cli("fit", "--synthetic", "natural", "--synthetic-size", "16", "--N", "4",
                               "--iterations", "100", "--progressive", "--out", self.out)
        self.assertEqual(code, EXIT_OK)
        with open(os.path.join(self.out, "metrics.csv"), newline="") as f:
            rows = list(csv.DictReader(f))
        alpha_max = 32 ** 0.5
        for row in rows:
            expected = alpha_max * min(1.0, int(row["iteration"]) / (0.75 * 100))
            self.assertAlmostEqual(float(row["alpha"]), expected, places=12)

    def test_fft_init_needs_perceptron(self):
        code, _ = self.run_cli("fit", "--synthetic", "natural", "--synthetic-size", "16", "--N", "4",
                               "--depth", "2", "--weight-init", "fft", "--out", self.out)
        self.assertEqual(code, EXIT_USAGE)

    def test_siren_and_gaussian_fit(self):
        for mapping in ("siren", "gaussian", "pe"):
            with self.subTest(mapping=mapping):
                out = os.path.join(self.out, mapping)
                code, _ = self.run_cli("fit", "--synthetic", "natural", "--synthetic-size", "16",
                                       "--N", "4", "--mapping", mapping, "--depth", "1", "--width", "8",
                                       "--iterations", "3", "--out", out)
                self.assertEqual(code, EXIT_OK)

    def test_missing_image(self):
        code, _ = self.run_cli("fit", "--image", os.path.join(self.tmp.name, "absent.png"),
                               "--out", self.out)
        self.assertEqual(code, EXIT_FAILURE)


class TestInitCheck(CliTestCase):
    """Test the init-check subcommand."""

    def test_pass_on_odd_grid(self):
        code, stdout = self.run_cli("init-check", "--synthetic", "natural", "--synthetic-size", "65",
                                    "--N", "32", "--out", self.out)
        self.assertEqual(code, EXIT_OK)
        self.assertIn("PASS", stdout)
        with open(os.path.join(self.out, "init_weights.json")) as f:
            doc = json.load(f)
        self.assertEqual(len(doc["layers"][0]["w"][0]), 2 * lattice_size(2, 32))

    def test_unreachable_threshold_fails(self):
        # exact arithmetic would give infinite PSNR; double precision cannot reach 1000 dB
        code, stdout = self.run_cli("init-check", "--synthetic", "natural", "--synthetic-size", "17",
                                    "--N", "8", "--threshold", "1000", "--out", self.out)
        self.assertEqual(code, EXIT_FAILURE)
        self.assertIn("FAIL", stdout)

    def test_gaussian_is_usage_error(self):
        code, _ = self.run_cli("init-check", "--synthetic", "natural", "--synthetic-size", "17",
                               "--mapping", "gaussian", "--out", self.out)
        self.assertEqual(code, EXIT_USAGE)

    def test_even_grid(self):
        code, _ = self.run_cli("init-check", "--synthetic", "natural", "--synthetic-size", "16",
                               "--N", "8", "--out", self.out)
        self.assertEqual(code, EXIT_USAGE)
        code, _ = self.run_cli("init-check", "--synthetic", "natural", "--synthetic-size", "16",
                               "--N", "8", "--allow-even", "--out", self.out)
        self.assertEqual(code, EXIT_OK)

    def test_frequency_above_nyquist(self):
        code, _ = self.run_cli("init-check", "--synthetic", "natural", "--synthetic-size", "17",
                               "--N", "9", "--out", self.out)
        self.assertEqual(code, EXIT_USAGE)


class TestPrune(CliTestCase):
    """Test the prune subcommand."""

    def test_outputs(self):
        code, stdout = self.run_cli("prune", "--synthetic", "band_limited", "--synthetic-size", "32",
                                    "--N", "2", "--M", "4", "--iterations", "3", "--out", self.out)
        self.assertEqual(code, EXIT_OK)
        self.assertIn("kept 13 frequencies", stdout)
        pruned = FrequencyMatrix.load_json(os.path.join(self.out, "pruned_mapping.json"))
        self.assertEqual(pruned.m, lattice_size(2, 2))
        with open(os.path.join(self.out, "mapping_std.json")) as f:
            self.assertGreater(json.load(f)["mapping_std"], 0.0)
        self.assertTrue(os.path.exists(os.path.join(self.out, "metrics.csv")))

    def test_neighbouring_sizes(self):
        code, _ = self.run_cli("prune", "--synthetic", "natural", "--synthetic-size", "16",
                               "--N", "3", "--M", "4", "--iterations", "2", "--out", self.out)
        self.assertEqual(code, EXIT_OK)

    def test_fft_source_needs_even_image(self):
        code, _ = self.run_cli("prune", "--synthetic", "band_limited", "--synthetic-size", "33",
                               "--N", "2", "--M", "4", "--prune-init", "fft", "--out", self.out)
        self.assertEqual(code, EXIT_USAGE)
        self.assertFalse(os.path.exists(self.out))
        code, _ = self.run_cli("prune", "--synthetic", "band_limited", "--synthetic-size", "32",
                               "--N", "2", "--M", "4", "--prune-init", "fft", "--iterations", "1",
                               "--out", self.out)
        self.assertEqual(code, EXIT_OK)


class TestCompare(CliTestCase):
    """Test the compare subcommand."""

    def read_table(self):
        with open(os.path.join(self.out, "compare.csv"), newline="") as f:
            return list(csv.reader(f))

    def test_table_shape(self):
        code, _ = self.run_cli("compare", "--synthetic", "natural", "--synthetic-size", "16",
                               "--synthetic-count", "2", "--Ns", "2", "--depths", "0", "2",
                               "--mappings", "integer", "pe", "gaussian", "siren",
                               "--iterations", "3", "--width", "4", "--jobs", "2", "--out", self.out)
        self.assertEqual(code, EXIT_OK)
        rows = self.read_table()
        self.assertEqual(tuple(rows[0]), COMPARE_HEADER)
        self.assertEqual(len(rows) - 1, 2 * 4)
        self.assertTrue(all(row[-1] == "ok" for row in rows[1:]))
        self.assertTrue(all(row[8] == "2" for row in rows[1:]))

    def test_seed_variation(self):
        code, _ = self.run_cli("compare", "--synthetic", "natural", "--synthetic-size", "16",
                               "--Ns", "2", "--depths", "0", "--mappings", "integer", "gaussian",
                               "--seeds", "0", "1", "--iterations", "3", "--out", self.out)
        self.assertEqual(code, EXIT_OK)
        rows = self.read_table()[1:]
        integer = [row[6] for row in rows if row[0] == "integer"]
        gaussian = [row[6] for row in rows if row[0] == "gaussian"]
        self.assertEqual(integer[0], integer[1])
        self.assertNotEqual(gaussian[0], gaussian[1])

    def test_failed_cells_are_recorded(self):
        code, _ = self.run_cli("compare", "--synthetic", "natural", "--synthetic-size", "16",
                               "--Ns", "2", "--depths", "0", "--mappings", "integer", "pruned",
                               "--M", "2", "--iterations", "2", "--out", self.out)
        self.assertEqual(code, EXIT_OK)
        status = {row[0]: row[-1] for row in self.read_table()[1:]}
        self.assertEqual(status["integer"], "ok")
        self.assertTrue(status["pruned"].startswith("failed"))

    def test_unexpected_cell_error_is_recorded(self):
        original = build_network

        def failing_for_siren(config, mapping, out_dim, **kwargs):
            if mapping is None:
                raise KeyError("siren_width")
            return original(config, mapping, out_dim, **kwargs)

        with patch("FourierSeriesINR.build_network", side_effect=failing_for_siren):
            code, _ = self.run_cli("compare", "--synthetic", "natural", "--synthetic-size", "16",
                                   "--Ns", "2", "--depths", "0", "--mappings", "integer", "siren",
                                   "--iterations", "2", "--out", self.out)
        self.assertEqual(code, EXIT_OK)
        status = {row[0]: row[-1] for row in self.read_table()[1:]}
        self.assertEqual(status["integer"], "ok")
        self.assertIn("siren_width", status["siren"])


class TestRender(CliTestCase):
    """Test the render subcommand."""

    def test_tiled_render(self):
        code, _ = self.run_cli("fit", "--synthetic", "natural", "--synthetic-size", "16", "--N", "4",
                               "--iterations", "2", "--out", self.out)
        self.assertEqual(code, EXIT_OK)
        rendered = os.path.join(self.tmp.name, "rendered")
        code, _ = self.run_cli("render", "--weights", os.path.join(self.out, "weights.json"),
                               "--render-height", "8", "--render-width", "8", "--tiles", "2",
                               "--out", rendered)
        self.assertEqual(code, EXIT_OK)
        image = load_image(os.path.join(rendered, "render_tiled.png"))
        self.assertEqual((image.height, image.width, image.channels), (16, 16, 3))

    def test_shifted_render_matches(self):
        self.run_cli("fit", "--synthetic", "natural", "--synthetic-size", "16", "--N", "4",
                     "--iterations", "2", "--out", self.out)
        shifted = os.path.join(self.tmp.name, "shifted")
        code, _ = self.run_cli("render", "--render-height", "16", "--render-width", "16",
                               "--x-offset", "3", "--y-offset", "-1", "--out", shifted,
                               "--weights", os.path.join(self.out, "weights.json"))
        self.assertEqual(code, EXIT_OK)
        original = load_image(os.path.join(self.out, "recon.png")).to_uint8()
        moved = load_image(os.path.join(shifted, "render.png")).to_uint8()
        self.assertLessEqual(abs(original.astype(int) - moved.astype(int)).max(), 1)


if __name__ == '__main__':
    unittest.main()
