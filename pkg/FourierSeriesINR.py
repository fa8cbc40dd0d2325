#!/usr/bin/env python3
"""
Fourier Series INR command-line interface.
Drives image fitting, FFT weight-initialization checks, frequency pruning,
mapping comparison grids and periodic rendering from reproducible configs.
"""
import argparse
import csv
import json
import os
import platform
import statistics
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from ExperimentConfig import ConfigError, ConfigManager, ConsoleLogger, ExperimentConfig, ILogger
from FourierLattice import (
    FrequencyMatrix,
    build_gaussian_mapping,
    build_integer_lattice,
    build_positional_encoding,
    lattice_size,
)
from FourierNetwork import (
    Activation,
    InputMode,
    NetworkParams,
    NetworkSpec,
    forward,
    init_network,
    load_weights,
    save_weights,
    set_output_weights,
)
from FourierTrainer import PSNR_CSV_CAP, Dataset, FourierTrainer, TrainConfig, full_grid, image_dataset, psnr
from FrequencyPruning import FrequencyPruner, PruneSpec, mapping_std
from ImageGrid import ImageFormatError, ImageGrid, render, render_tiled, resolve_images, save_image
from SpectralInit import coefficients_from_grid, weights_from_coefficients

__version__ = "1.0.0"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

COMPARE_HEADER = ("mapping", "activation", "N", "m", "depth", "seed",
                  "train_psnr", "test_psnr", "images", "status")


class UsageError(ConfigError):
    """Configuration is valid on its own but unusable for the requested command."""


def build_mapping(config: ExperimentConfig, dataset: Optional[Dataset], logger: ILogger,
                  family: Optional[str] = None, N: Optional[int] = None,
                  seed: Optional[int] = None) -> Optional[FrequencyMatrix]:
    """Frequency matrix for a mapping family; None for the raw-input SIREN."""
    family = family or config.mapping.family
    N = config.mapping.N if N is None else N
    seed = config.mapping.seed if seed is None else seed
    if family == "integer":
        return build_integer_lattice(2, N)
    if family == "pe":
        return build_positional_encoding(2, N)
    if family == "gaussian":
        m = config.mapping.m or lattice_size(2, N)
        return build_gaussian_mapping(2, m, config.mapping.sigma, seed)
    if family in ("pruned", "gaussian_pr"):
        if dataset is None:
            raise UsageError(f"Mapping family {family} needs training data to prune from")
        if config.prune["weight_init"] == "fft":
            spectral_grid(dataset)
        train_config = TrainConfig.from_section(config.training)
        pruned, _ = FrequencyPruner(logger).run(
            dataset, PruneSpec(N=N, M=config.prune["M"]), train_config, config.prune["weight_init"]
        )
        if family == "pruned":
            return pruned
        sigma = mapping_std(pruned)
        logger.info(f"sigma_pr = {sigma:.4f} from pr({N}, {config.prune['M']})")
        return build_gaussian_mapping(2, lattice_size(2, N), sigma, seed)
    if family == "siren":
        return None
    raise UsageError(f"Unknown mapping family {family!r}")


def build_network(config: ExperimentConfig, mapping: Optional[FrequencyMatrix], out_dim: int,
                  depth: Optional[int] = None, N: Optional[int] = None) -> NetworkParams:
    net = config.network
    depth = net.depth if depth is None else depth
    seed = config.training["seed"]
    if mapping is None:
        N = config.mapping.N if N is None else N
        if depth == 0:
            width = net.siren_width or lattice_size(2, N)
            spec = NetworkSpec.one_layer_siren(width, d=2, out_dim=out_dim, omega0=net.omega0)
        else:
            spec = NetworkSpec(out_dim=out_dim, depth=depth + 1, width=net.width,
                               activation=Activation.SINE, input_mode=InputMode.RAW, d=2,
                               first_omega0=net.omega0, hidden_omega0=net.omega0)
        return init_network(spec, seed)
    activation = Activation(net.activation) if depth > 0 else Activation.IDENTITY
    spec = NetworkSpec(out_dim=out_dim, depth=depth, width=net.width, activation=activation,
                       input_mode=InputMode.MAPPED, mapping=mapping, d=mapping.d,
                       first_omega0=net.omega0, hidden_omega0=net.omega0)
    return init_network(spec, seed)


def spectral_grid(dataset: Dataset) -> np.ndarray:
    try:
        return dataset.spectral_grid()
    except ValueError as e:
        raise UsageError(str(e)) from e


def fft_initialize(params: NetworkParams, dataset: Dataset) -> NetworkParams:
    """Install the spectral coefficients of the training pixels as perceptron weights."""
    mapping = params.mapping
    if mapping is None or mapping.family.value != "integer" or not params.is_mapped_perceptron:
        raise UsageError("FFT weight initialization needs an integer-mapped perceptron (depth 0)")
    h, w = dataset.train.shape
    if min(h, w) < 2 * mapping.N:
        raise UsageError(f"Training grid {h}x{w} is too small for FFT initialization at N={mapping.N}")
    grid = spectral_grid(dataset)
    W, b = weights_from_coefficients(coefficients_from_grid(grid, mapping.N, d=2))
    return set_output_weights(params, W, b)


@dataclass
class CellResult:
    family: str
    activation: str
    N: int
    m: int
    depth: int
    seed: int
    train_psnr: float
    test_psnr: float
    images: int
    status: str

    def row(self) -> List[Any]:
        def fmt(v: float) -> str:
            return "" if v != v else repr(min(v, PSNR_CSV_CAP))
        return [self.family, self.activation, self.N, self.m, self.depth, self.seed,
                fmt(self.train_psnr), fmt(self.test_psnr), self.images, self.status]


class ExperimentOrchestrator:
    """Orchestrates the experiment subcommands."""

    def __init__(self, config: ExperimentConfig, logger: ILogger):
        self.config = config
        self.logger = logger

    def _images(self, count: Optional[int] = None) -> List[ImageGrid]:
        return resolve_images(self.config.images, self.config.synthetic,
                              size=self.config.synthetic_size,
                              count=count or self.config.synthetic_count)

    def _prepare_out(self) -> str:
        os.makedirs(self.config.out, exist_ok=True)
        return self.config.out

    def write_manifest(self, command: str, extra: Optional[Dict[str, Any]] = None) -> str:
        """Config, seeds and versions needed to rerun this command."""
        manifest = {
            "command": command,
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "seeds": {
                "mapping": self.config.mapping.seed,
                "training": self.config.training["seed"],
            },
            "deterministic": self.config.training["deterministic"],
            "config": self.config.raw,
        }
        if extra:
            manifest.update(extra)
        path = os.path.join(self.config.out, "manifest.json")
        with open(path, "w") as f:
            json.dump(manifest, f, indent=2, sort_keys=True)
        self.logger.info(f"Wrote {path}")
        return path

    def run_fit(self) -> int:
        image = self._images(count=1)[0]
        dataset = image_dataset(image)
        train_config = TrainConfig.from_section(self.config.training)
        if train_config.progressive and self.config.mapping.family == "siren":
            raise UsageError("Progressive training needs a Fourier mapping, not the raw SIREN")

        mapping = build_mapping(self.config, dataset, self.logger)
        params = build_network(self.config, mapping, image.channels)
        if self.config.training["weight_init"] == "fft":
            params = fft_initialize(params, dataset)
        self.logger.info(
            f"Fitting {image.height}x{image.width} image: mapping={self.config.mapping.family} "
            f"m={mapping.m if mapping is not None else 0} depth={self.config.network.depth} "
            f"progressive={train_config.progressive}"
        )
        run = FourierTrainer(self.logger).train(params, dataset, train_config)

        out = self._prepare_out()
        metrics_path = os.path.join(out, "metrics.csv")
        run.write_metrics_csv(metrics_path)
        weights_path = os.path.join(out, "weights.json")
        save_weights(run.params, weights_path)
        recon_path = os.path.join(out, "recon.png")
        save_image(render(run.params, image.height, image.width), recon_path)
        written = [metrics_path, weights_path, recon_path]
        if self.config.render["periodic"]:
            period_path = os.path.join(out, "period.png")
            save_image(render(run.params, image.height, image.width, 1, 1), period_path)
            written.append(period_path)
        for path in written:
            self.logger.info(f"Wrote {path}")
        self.write_manifest("fit", {"final": {"train_psnr": min(run.final.train_psnr, PSNR_CSV_CAP),
                                              "test_psnr": min(run.final.test_psnr, PSNR_CSV_CAP)}})
        print(f"final train PSNR {run.final.train_psnr:.3f} dB, test PSNR {run.final.test_psnr:.3f} dB")
        return EXIT_OK

    def run_init_check(self) -> int:
        if self.config.mapping.family != "integer":
            raise UsageError("init-check needs the integer mapping family")
        N = self.config.mapping.N
        stride = self.config.init_check["train_stride"]
        image = self._images(count=1)[0]
        grid = ImageGrid(image.data[::stride, ::stride])
        if (grid.height % 2 == 0 or grid.width % 2 == 0) and not self.config.init_check["allow_even"]:
            raise UsageError(
                f"Training grid {grid.height}x{grid.width} has an even side; pass --allow-even"
            )
        if min(grid.height, grid.width) < 2 * N:
            raise UsageError(f"Training grid {grid.height}x{grid.width} is too small for N={N}")

        coeffs = coefficients_from_grid(grid.data, N, d=2)
        W, b = weights_from_coefficients(coeffs)
        params = init_network(NetworkSpec.mapped_perceptron(coeffs.lattice, out_dim=grid.channels),
                              self.config.training["seed"])
        params = set_output_weights(params, W, b)
        pixels = full_grid(grid)
        value = psnr(forward(params, pixels.coords), pixels.values)
        threshold = float(self.config.init_check["threshold"])
        passed = value >= threshold

        out = self._prepare_out()
        weights_path = os.path.join(out, "init_weights.json")
        with open(weights_path, "w") as f:
            json.dump(coeffs.to_weights_document(), f)
        self.logger.info(f"Wrote {weights_path}")
        self.write_manifest("init-check", {"psnr": min(value, PSNR_CSV_CAP), "threshold": threshold, "passed": passed})
        verdict = "PASS" if passed else "FAIL"
        print(f"{verdict}: iteration-0 train PSNR {value:.3f} dB (threshold {threshold:.1f} dB, m={coeffs.lattice.m})")
        return EXIT_OK if passed else EXIT_FAILURE

    def run_prune(self) -> int:
        image = self._images(count=1)[0]
        dataset = image_dataset(image)
        spec = PruneSpec(N=self.config.mapping.N, M=self.config.prune["M"])
        if self.config.prune["weight_init"] == "fft":
            spectral_grid(dataset)
        train_config = TrainConfig.from_section(self.config.training)
        pruned, run = FrequencyPruner(self.logger).run(dataset, spec, train_config,
                                                       self.config.prune["weight_init"])
        sigma = mapping_std(pruned)

        out = self._prepare_out()
        mapping_path = os.path.join(out, "pruned_mapping.json")
        pruned.save_json(mapping_path)
        std_path = os.path.join(out, "mapping_std.json")
        with open(std_path, "w") as f:
            json.dump({"N": spec.N, "M": spec.M, "m": pruned.m, "mapping_std": sigma}, f, indent=2)
        metrics_path = os.path.join(out, "metrics.csv")
        run.write_metrics_csv(metrics_path)
        for path in (mapping_path, std_path, metrics_path):
            self.logger.info(f"Wrote {path}")
        self.write_manifest("prune", {"mapping_std": sigma, "kept": pruned.m})
        print(f"pr({spec.N}, {spec.M}) kept {pruned.m} frequencies, mapping std {sigma:.4f}")
        return EXIT_OK

    def _run_cell(self, images: Sequence[ImageGrid], family: str, N: int, depth: int, seed: int) -> CellResult:
        activation = "sine" if family == "siren" else (self.config.network.activation if depth > 0 else "identity")
        train_config = TrainConfig.from_section(self.config.training)
        trainer = FourierTrainer(self.logger)
        train_scores, test_scores, m = [], [], 0
        try:
            for image in images:
                dataset = image_dataset(image)
                mapping = build_mapping(self.config, dataset, self.logger, family=family, N=N, seed=seed)
                params = build_network(self.config, mapping, image.channels, depth=depth, N=N)
                m = mapping.m if mapping is not None else params.layers[0].fan_out
                cell_config = train_config
                if family == "siren" and train_config.progressive:
                    cell_config = replace(train_config, progressive=False)
                run = trainer.train(params, dataset, cell_config)
                train_scores.append(run.final.train_psnr)
                test_scores.append(run.final.test_psnr)
        except Exception as e:
            self.logger.error(f"Cell {family} N={N} depth={depth} seed={seed} failed: {e}")
            return CellResult(family, activation, N, m, depth, seed, float("nan"), float("nan"),
                              len(train_scores), f"failed: {e}")
        return CellResult(family, activation, N, m, depth, seed,
                          statistics.fmean(train_scores), statistics.fmean(test_scores),
                          len(images), "ok")

    def run_compare(self) -> int:
        images = self._images()
        grid = self.config.compare
        cells = [(family, N, depth, seed)
                 for N in grid["Ns"] for depth in grid["depths"]
                 for family in grid["mappings"] for seed in grid["seeds"]]
        self.logger.info(f"Running {len(cells)} comparison cells over {len(images)} images")
        with ThreadPoolExecutor(max_workers=max(1, int(grid["jobs"]))) as pool:
            futures = [pool.submit(self._run_cell, images, *cell) for cell in cells]
            results = [f.result() for f in futures]

        out = self._prepare_out()
        table_path = os.path.join(out, "compare.csv")
        with open(table_path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(COMPARE_HEADER)
            for result in results:
                writer.writerow(result.row())
        self.logger.info(f"Wrote {table_path}")
        completed = sum(1 for r in results if r.status == "ok")
        self.write_manifest("compare", {"cells": len(results), "completed": completed})
        print(f"{completed}/{len(results)} comparison cells completed")
        return EXIT_OK if completed >= 1 else EXIT_FAILURE

    def run_render(self) -> int:
        settings = self.config.render
        weights_path = settings["weights"] or os.path.join(self.config.out, "weights.json")
        params = load_weights(weights_path)
        h, w = settings["height"], settings["width"]
        out = self._prepare_out()
        if settings["tiles"] > 1:
            image = render_tiled(params, h, w, settings["tiles"])
            path = os.path.join(out, "render_tiled.png")
        else:
            image = render(params, h, w, settings["x_offset"], settings["y_offset"])
            path = os.path.join(out, "render.png")
        save_image(image, path)
        self.logger.info(f"Wrote {path}")
        self.write_manifest("render", {"weights": weights_path})
        return EXIT_OK


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--config', help='Path to a JSON configuration file')
    parser.add_argument('--image', action='append', help='Input image (repeatable)')
    parser.add_argument('--synthetic', choices=['natural', 'band_limited'],
                        help='Use a generated image when no --image is given')
    parser.add_argument('--synthetic-size', type=int, help='Side length of generated images')
    parser.add_argument('--synthetic-count', type=int, help='Number of generated images')
    parser.add_argument('--mapping', choices=['integer', 'gaussian', 'pe', 'pruned', 'gaussian_pr', 'siren'],
                        help='Fourier mapping family')
    parser.add_argument('--N', type=int, help='Mapping frequency')
    parser.add_argument('--m', type=int, help='Gaussian mapping size (default |B_N|)')
    parser.add_argument('--sigma', type=float, help='Gaussian mapping standard deviation')
    parser.add_argument('--mapping-seed', type=int, help='Seed of the Gaussian mapping')
    parser.add_argument('--depth', type=int, help='Hidden layers (0 = perceptron)')
    parser.add_argument('--width', type=int, help='Hidden layer width')
    parser.add_argument('--activation', choices=['relu', 'sine'], help='Hidden activation')
    parser.add_argument('--progressive', action='store_true', default=None,
                        help='Enable coarse-to-fine frequency weighting')
    parser.add_argument('--iterations', type=int, help='Full-batch optimizer steps')
    parser.add_argument('--lr', type=float, help='Learning rate')
    parser.add_argument('--optimizer', choices=['adam', 'sgd'], help='Optimizer')
    parser.add_argument('--seed', type=int, help='Network initialization seed')
    parser.add_argument('--deterministic', action='store_true', default=None,
                        help='Require reproducible results')
    parser.add_argument('--weight-init', choices=['random', 'fft'], help='Perceptron weight initialization')
    parser.add_argument('--out', help='Output directory')
    parser.add_argument('--log-level', choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'],
                        help='Logging level (overrides config file)')


# flag attribute -> dotted config key
FLAG_KEYS = {
    "synthetic": "synthetic",
    "synthetic_size": "synthetic_size",
    "synthetic_count": "synthetic_count",
    "mapping": "mapping.family",
    "N": "mapping.N",
    "m": "mapping.m",
    "sigma": "mapping.sigma",
    "mapping_seed": "mapping.seed",
    "depth": "network.depth",
    "width": "network.width",
    "activation": "network.activation",
    "progressive": "training.progressive",
    "iterations": "training.iterations",
    "lr": "training.lr",
    "optimizer": "training.optimizer",
    "seed": "training.seed",
    "deterministic": "training.deterministic",
    "weight_init": "training.weight_init",
    "out": "out",
    "log_level": "log_level",
    "threshold": "init_check.threshold",
    "allow_even": "init_check.allow_even",
    "train_stride": "init_check.train_stride",
    "M": "prune.M",
    "prune_init": "prune.weight_init",
    "mappings": "compare.mappings",
    "depths": "compare.depths",
    "Ns": "compare.Ns",
    "seeds": "compare.seeds",
    "jobs": "compare.jobs",
    "weights": "render.weights",
    "render_height": "render.height",
    "render_width": "render.width",
    "x_offset": "render.x_offset",
    "y_offset": "render.y_offset",
    "tiles": "render.tiles",
}


def parse_arguments(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse command-line arguments."""
    parser = argparse.ArgumentParser(
        prog='fourier-inr',
        description='Fit images with Fourier-mapped perceptrons and MLPs.'
    )
    subparsers = parser.add_subparsers(dest='command', required=True)

    fit = subparsers.add_parser('fit', help='Train a network on one image')
    _add_common_arguments(fit)

    init_check = subparsers.add_parser('init-check', help='Check FFT weight initialization')
    _add_common_arguments(init_check)
    init_check.add_argument('--threshold', type=float, help='Minimum iteration-0 train PSNR in dB')
    init_check.add_argument('--allow-even', action='store_true', default=None,
                            help='Accept even training grids')
    init_check.add_argument('--train-stride', type=int, choices=[1, 2],
                            help='Pixel stride of the training grid (1 = whole image)')

    prune = subparsers.add_parser('prune', help='Run pr(N, M) frequency pruning')
    _add_common_arguments(prune)
    prune.add_argument('--M', type=int, help='Frequency of the source lattice B_M')
    prune.add_argument('--prune-init', choices=['random', 'fft'], help='Source perceptron initialization')

    compare = subparsers.add_parser('compare', help='Run a mapping x depth x N grid')
    _add_common_arguments(compare)
    compare.add_argument('--mappings', nargs='+',
                         choices=['integer', 'gaussian', 'pe', 'pruned', 'gaussian_pr', 'siren'])
    compare.add_argument('--depths', nargs='+', type=int)
    compare.add_argument('--Ns', nargs='+', type=int)
    compare.add_argument('--seeds', nargs='+', type=int)
    compare.add_argument('--M', type=int, help='Source frequency for pruned mappings')
    compare.add_argument('--jobs', type=int, help='Cells to run in parallel')

    render_cmd = subparsers.add_parser('render', help='Render saved weights, optionally shifted by periods')
    _add_common_arguments(render_cmd)
    render_cmd.add_argument('--weights', help='Weight file (default OUT/weights.json)')
    render_cmd.add_argument('--render-height', type=int)
    render_cmd.add_argument('--render-width', type=int)
    render_cmd.add_argument('--x-offset', type=float)
    render_cmd.add_argument('--y-offset', type=float)
    render_cmd.add_argument('--tiles', type=int)

    return parser.parse_args(argv)


def load_configuration(args: argparse.Namespace) -> ExperimentConfig:
    """Merge the config file and flag overrides, then validate."""
    manager = ConfigManager(args.config)
    if args.image:
        manager.set_value("images", list(args.image))
    for attr, key in FLAG_KEYS.items():
        value = getattr(args, attr, None)
        if value is not None:
            manager.set_value(key, value)
    return ExperimentConfig.from_manager(manager)


COMMANDS = {
    "fit": ExperimentOrchestrator.run_fit,
    "init-check": ExperimentOrchestrator.run_init_check,
    "prune": ExperimentOrchestrator.run_prune,
    "compare": ExperimentOrchestrator.run_compare,
    "render": ExperimentOrchestrator.run_render,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main function."""
    args = parse_arguments(argv)

    try:
        config = load_configuration(args)
    except ConfigError as e:
        print(f"Configuration error: {e}", file=sys.stderr)
        return EXIT_USAGE

    logger = ConsoleLogger(config.log_level)
    orchestrator = ExperimentOrchestrator(config, logger)
    try:
        return COMMANDS[args.command](orchestrator)
    except UsageError as e:
        logger.error(f"Usage error: {e}")
        return EXIT_USAGE
    except ImageFormatError as e:
        logger.error(f"Image error: {e}")
        return EXIT_FAILURE
    except (ValueError, ArithmeticError, OSError) as e:
        logger.error(f"{args.command} failed: {e}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
