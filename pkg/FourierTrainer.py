#!/usr/bin/env python3
"""
Full-batch training for coordinate networks.
One optimizer step per pass over every training pixel, optional
coarse-to-fine gating of the Fourier features, and PSNR tracking on the
train and test pixel sets.
"""
import csv
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ExperimentConfig import ILogger, NullLogger
from FourierEmbedding import ProgressiveState, alpha_schedule
from FourierNetwork import InputMode, NetworkParams, NumericalFailureError, backward, forward
from ImageGrid import ImageGrid, pixel_coordinates

PSNR_CSV_CAP = 300.0
METRICS_HEADER = ("iteration", "train_psnr", "test_psnr", "alpha")


class DivergenceError(NumericalFailureError):
    """Training produced a non-finite loss."""

    def __init__(self, iteration: int, message: str = ""):
        self.iteration = iteration
        super().__init__(f"Training diverged at iteration {iteration}" + (f": {message}" if message else ""))


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 2000
    learning_rate: float = 1e-3
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    progressive: bool = False
    end_fraction: float = 0.75
    seed: int = 0
    deterministic: bool = True
    log_every: int = 25

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError(f"iterations must be >= 1, got {self.iterations}")
        if not 0 < self.end_fraction <= 1:
            raise ValueError(f"end_fraction must be in (0, 1], got {self.end_fraction}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"Unknown optimizer {self.optimizer!r}")
        if self.log_every < 1:
            raise ValueError(f"log_every must be >= 1, got {self.log_every}")

    @classmethod
    def from_section(cls, section: dict) -> "TrainConfig":
        return cls(
            iterations=section["iterations"],
            learning_rate=section["lr"],
            optimizer=section["optimizer"],
            beta1=section["beta1"],
            beta2=section["beta2"],
            epsilon=section["epsilon"],
            progressive=section["progressive"],
            end_fraction=section["end_fraction"],
            seed=section["seed"],
            deterministic=section["deterministic"],
            log_every=section["log_every"],
        )


@dataclass(frozen=True)
class HistoryEntry:
    iteration: int
    train_psnr: float
    test_psnr: float
    alpha: float


@dataclass(eq=False)
class TrainRun:
    history: List[HistoryEntry]
    params: NetworkParams

    @property
    def final(self) -> HistoryEntry:
        return self.history[-1]

    def write_metrics_csv(self, path: str) -> None:
        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(METRICS_HEADER)
            for entry in self.history:
                writer.writerow([
                    entry.iteration,
                    repr(min(entry.train_psnr, PSNR_CSV_CAP)),
                    repr(min(entry.test_psnr, PSNR_CSV_CAP)),
                    repr(entry.alpha),
                ])


@dataclass(eq=False)
class PixelSet:
    """Coordinates (n, 2) and values (n, C) of a rectangular block of pixels."""

    coords: np.ndarray
    values: np.ndarray
    shape: Tuple[int, int]


@dataclass(eq=False)
class Dataset:
    train: PixelSet
    test: PixelSet
    channels: int = field(init=False)

    def __post_init__(self):
        if self.train.coords.shape[0] == 0:
            raise ValueError("Dataset has no training pixels")
        self.channels = self.train.values.shape[1]

    def spectral_grid(self) -> np.ndarray:
        """Training values as an (h, w, C) grid sampling exactly one period.

        Stride-2 pixels of an odd-sized image sit at 2j/w and overrun the
        unit square, so their DFT is not the lattice series of the image.
        """
        h, w = self.train.shape
        if not np.allclose(self.train.coords, pixel_coordinates(h, w), rtol=0.0, atol=1e-12):
            raise ValueError(
                f"Training grid {h}x{w} does not sample one period uniformly; "
                "FFT initialization needs an image with even sides"
            )
        return self.train.values.reshape(h, w, self.channels)


def psnr(pred, target) -> float:
    """-10 log10(MSE) for signals in [0, 1]; +inf when the images are identical."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"Shape mismatch: {pred.shape} vs {target.shape}")
    return psnr_from_mse(float(np.mean((pred - target) ** 2)))


def psnr_from_mse(mse: float) -> float:
    if mse <= 0.0:
        return math.inf
    return -10.0 * math.log10(mse)


def _pixel_set(image: ImageGrid, stride: int) -> PixelSet:
    coords = pixel_coordinates(image.height, image.width).reshape(image.height, image.width, 2)
    coords = coords[::stride, ::stride]
    values = image.data[::stride, ::stride]
    shape = (coords.shape[0], coords.shape[1])
    return PixelSet(coords.reshape(-1, 2), values.reshape(-1, image.channels), shape)


def split_pixels(image: ImageGrid) -> Tuple[PixelSet, PixelSet]:
    """Train on pixels with even row and even column index, test on every pixel."""
    if image.height < 2 or image.width < 2:
        raise ValueError(f"split_pixels needs at least a 2x2 image, got {image.height}x{image.width}")
    return _pixel_set(image, 2), _pixel_set(image, 1)


def full_grid(image: ImageGrid) -> PixelSet:
    return _pixel_set(image, 1)


def image_dataset(image: ImageGrid) -> Dataset:
    train, test = split_pixels(image)
    return Dataset(train=train, test=test)


class IOptimizer(ABC):
    """Interface for in-place parameter updates."""

    @abstractmethod
    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        pass


class SGDOptimizer(IOptimizer):
    def __init__(self, lr: float):
        self.lr = lr

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        for p, g in zip(params, grads):
            p -= self.lr * g


class AdamOptimizer(IOptimizer):
    """Adam with bias-corrected first and second moment estimates."""

    def __init__(self, lr: float = 1e-3, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m: List[np.ndarray] = []
        self.v: List[np.ndarray] = []
        self.t = 0

    def step(self, params: Sequence[np.ndarray], grads: Sequence[np.ndarray]) -> None:
        if not self.m:
            self.m = [np.zeros_like(p) for p in params]
            self.v = [np.zeros_like(p) for p in params]
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        step_size = self.lr / bc1
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= step_size * m / (np.sqrt(v / bc2) + self.epsilon)


def make_optimizer(config: TrainConfig) -> IOptimizer:
    if config.optimizer == "sgd":
        return SGDOptimizer(config.learning_rate)
    return AdamOptimizer(config.learning_rate, config.beta1, config.beta2, config.epsilon)


class FourierTrainer:
    """Runs the full-batch training loop and keeps the PSNR history."""

    def __init__(self, logger: Optional[ILogger] = None):
        self.logger = logger or NullLogger()

    def _evaluate(self, params: NetworkParams, pixels: PixelSet) -> float:
        return psnr(forward(params, pixels.coords), pixels.values)

    def train(self, params: NetworkParams, dataset: Dataset, config: TrainConfig) -> TrainRun:
        params = params.copy()
        state: Optional[ProgressiveState] = None
        if config.progressive:
            if params.mapping is None:
                raise ValueError("Progressive training needs a Fourier-mapped network")
            state = ProgressiveState.for_mapping(params.mapping, config.end_fraction)
            params.input_mode = InputMode.MAPPED_PROGRESSIVE
            params.progressive = state

        optimizer = make_optimizer(config)
        history: List[HistoryEntry] = []
        train = dataset.train
        total = config.iterations

        for iteration in range(total + 1):
            if state is not None:
                params.progressive = alpha_schedule(iteration, total, state)
            alpha = params.progressive.alpha if state is not None else 0.0
            try:
                loss, grads = backward(params, train.coords, train.values)
            except NumericalFailureError as e:
                raise DivergenceError(iteration, str(e)) from e
            if not math.isfinite(loss):
                raise DivergenceError(iteration)

            if iteration % config.log_every == 0 or iteration == total:
                entry = HistoryEntry(iteration, psnr_from_mse(loss),
                                     self._evaluate(params, dataset.test), alpha)
                history.append(entry)
                self.logger.info(
                    f"iter {iteration:6d}  train {entry.train_psnr:8.3f} dB  "
                    f"test {entry.test_psnr:8.3f} dB  alpha {alpha:.4f}"
                )
            if iteration == total:
                break
            optimizer.step(params.arrays(), grads.arrays())

        return TrainRun(history=history, params=params)


def train(params: NetworkParams, dataset: Dataset, config: TrainConfig,
          logger: Optional[ILogger] = None) -> TrainRun:
    return FourierTrainer(logger).train(params, dataset, config)
