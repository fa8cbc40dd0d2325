#!/usr/bin/env python3
"""
Frequency pruning pr(N, M).
Train a perceptron over the integer lattice B_M, then keep the |B_N|
frequencies whose output weights carry the most energy.
"""
import hashlib
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ExperimentConfig import ILogger, NullLogger
from FourierLattice import FrequencyMatrix, MappingFamily, build_integer_lattice, lattice_size
from FourierNetwork import NetworkParams, NetworkSpec, init_network, set_output_weights
from FourierTrainer import Dataset, TrainConfig, TrainRun, train
from SpectralInit import coefficients_from_grid, weights_from_coefficients


@dataclass(frozen=True)
class PruneSpec:
    N: int
    M: int
    importance: str = "weight_l2"

    def __post_init__(self):
        if not 0 <= self.N < self.M:
            raise ValueError(f"Pruning needs M > N >= 0, got N={self.N}, M={self.M}")
        if self.importance != "weight_l2":
            raise ValueError(f"Unknown importance measure {self.importance!r}")


def frequency_importance(params: NetworkParams) -> np.ndarray:
    """Euclidean norm of each frequency's cosine and sine weights across all outputs."""
    W = params.layers[0].weight
    m = params.mapping.m
    return np.sqrt((W[:, :m] ** 2).sum(axis=0) + (W[:, m:] ** 2).sum(axis=0))


def prune(params: NetworkParams, spec: PruneSpec) -> FrequencyMatrix:
    """Top-n rows of B_M by weight importance, ties resolved by canonical order."""
    if not params.is_mapped_perceptron:
        raise ValueError("Pruning needs a trained Fourier-mapped perceptron")
    source = params.mapping
    n = lattice_size(source.d, spec.N)
    if n > source.m:
        raise ValueError(f"Cannot keep {n} frequencies out of {source.m}")

    importance = frequency_importance(params)
    order = np.argsort(-importance, kind="stable")
    keep = np.sort(order[:n])

    digest = hashlib.sha256(np.ascontiguousarray(params.layers[0].weight).tobytes()).hexdigest()
    return FrequencyMatrix(
        rows=source.rows[keep],
        family=MappingFamily.PRUNED,
        N=spec.N,
        provenance={"source_M": spec.M, "source_weights_hash": digest},
    )


def mapping_std(B: FrequencyMatrix) -> float:
    """Sample standard deviation of all m*d entries of B."""
    if B.m < 2:
        raise ValueError(f"mapping_std needs at least two rows, got {B.m}")
    return float(np.std(B.rows, ddof=1))


class FrequencyPruner:
    """Train-then-prune pipeline for pr(N, M)."""

    def __init__(self, logger: Optional[ILogger] = None):
        self.logger = logger or NullLogger()

    def source_perceptron(self, dataset: Dataset, spec: PruneSpec, seed: int,
                          weight_init: str = "random") -> NetworkParams:
        lattice = build_integer_lattice(2, spec.M)
        params = init_network(NetworkSpec.mapped_perceptron(lattice, out_dim=dataset.channels), seed)
        if weight_init == "fft":
            W, b = weights_from_coefficients(coefficients_from_grid(dataset.spectral_grid(), spec.M, d=2))
            params = set_output_weights(params, W, b)
        return params

    def run(self, dataset: Dataset, spec: PruneSpec, config: TrainConfig,
            weight_init: str = "random") -> Tuple[FrequencyMatrix, TrainRun]:
        self.logger.info(f"Training B_{spec.M} perceptron ({lattice_size(2, spec.M)} frequencies) for pr({spec.N}, {spec.M})")
        params = self.source_perceptron(dataset, spec, config.seed, weight_init)
        run = train(params, dataset, config, logger=self.logger)
        pruned = prune(run.params, spec)
        expected = lattice_size(2, spec.N)
        if pruned.m != expected:
            raise AssertionError(f"Pruned mapping has {pruned.m} rows, expected {expected}")
        self.logger.info(f"Pruned mapping keeps |D| = {pruned.m} = lattice_size(2, {spec.N}) frequencies")
        return pruned, run
