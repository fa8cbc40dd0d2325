#!/usr/bin/env python3
"""
Fourier feature embedding.
gamma(x) = (cos(2 pi B x), sin(2 pi B x)), its progressively weighted variant
and the rewriting of a mapped perceptron as a one-hidden-layer sine network.
"""
import math
from dataclasses import dataclass, replace

import numpy as np

from FourierLattice import FrequencyMatrix, frequency_norms


class DimensionMismatchError(ValueError):
    """Coordinates, frequency matrix or weights have incompatible shapes."""


# Alias for the (..., 2m) arrays returned by embed(); cosines first.
EmbeddingOutput = np.ndarray


def _coordinates(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] != d:
        raise DimensionMismatchError(
            f"Coordinates have trailing dimension {x.shape[-1] if x.ndim else 0}, mapping expects d={d}"
        )
    return x


def embed(x, B: FrequencyMatrix) -> EmbeddingOutput:
    """Map coordinates of shape (d,) or (n, d) to features of shape (2m,) or (n, 2m)."""
    x = _coordinates(x, B.d)
    projection = x @ B.rows.T
    # cos/sin have period 1 in the projection; reducing first keeps the phase accurate
    phase = 2.0 * math.pi * np.remainder(projection, 1.0)
    return np.concatenate([np.cos(phase), np.sin(phase)], axis=-1)


@dataclass(frozen=True)
class ProgressiveState:
    """Coarse-to-fine gate: frequencies with norm z get weight w_alpha(z)."""

    alpha: float
    alpha_max: float
    end_fraction: float = 0.75

    def __post_init__(self):
        if not 0 < self.end_fraction <= 1:
            raise ValueError(f"end_fraction must be in (0, 1], got {self.end_fraction}")
        if not 0 <= self.alpha <= self.alpha_max:
            raise ValueError(f"alpha must lie in [0, {self.alpha_max}], got {self.alpha}")

    @classmethod
    def for_mapping(cls, B: FrequencyMatrix, end_fraction: float = 0.75) -> "ProgressiveState":
        norms = frequency_norms(B)
        alpha_max = float(norms.max()) if norms.size else 0.0
        return cls(alpha=0.0, alpha_max=alpha_max, end_fraction=end_fraction)


def progressive_weight(alpha, z):
    """w_alpha(z): 0 below the gate, a raised-cosine ramp over one unit, 1 above."""
    delta = np.asarray(alpha, dtype=np.float64) - np.asarray(z, dtype=np.float64)
    ramp = (1.0 - np.cos(np.clip(delta, 0.0, 1.0) * math.pi)) / 2.0
    weight = np.where(delta < 0.0, 0.0, np.where(delta > 1.0, 1.0, ramp))
    if weight.ndim == 0:
        return float(weight)
    return weight


def embed_progressive(x, B: FrequencyMatrix, state: ProgressiveState) -> EmbeddingOutput:
    """embed(x, B) with the i-th cosine and sine both scaled by w_alpha(||B_i||)."""
    weights = progressive_weight(state.alpha, frequency_norms(B))
    return embed(x, B) * np.concatenate([weights, weights])


def alpha_schedule(iteration: int, total_iterations: int, state: ProgressiveState) -> ProgressiveState:
    """Linear ramp of alpha from 0 to alpha_max, reached at end_fraction of training."""
    if total_iterations <= 0:
        raise ValueError(f"total_iterations must be positive, got {total_iterations}")
    if not 0 <= iteration <= total_iterations:
        raise ValueError(f"iteration {iteration} outside [0, {total_iterations}]")
    ramp = iteration / (state.end_fraction * total_iterations)
    return replace(state, alpha=state.alpha_max * min(1.0, ramp))


@dataclass(frozen=True, eq=False)
class SirenForm:
    """y(x) = W sin(2 pi C x + phi) + b with C = (B; B) and phi = (pi/2, ..., 0, ...)."""

    C: np.ndarray
    phi: np.ndarray
    W: np.ndarray
    b: np.ndarray

    def evaluate(self, x) -> np.ndarray:
        x = _coordinates(x, self.C.shape[1])
        turns = np.remainder(x @ self.C.T + self.phi / (2.0 * math.pi), 1.0)
        hidden = np.sin(2.0 * math.pi * turns)
        return hidden @ self.W.T + self.b


def to_siren_form(W, b, B: FrequencyMatrix) -> SirenForm:
    W = np.atleast_2d(np.asarray(W, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    if W.shape[1] != 2 * B.m:
        raise DimensionMismatchError(f"W has {W.shape[1]} columns, expected 2m={2 * B.m}")
    if b.shape != (W.shape[0],):
        raise DimensionMismatchError(f"bias has shape {b.shape}, expected ({W.shape[0]},)")
    C = np.vstack([B.rows, B.rows])
    phi = np.concatenate([np.full(B.m, math.pi / 2.0), np.zeros(B.m)])
    return SirenForm(C=C, phi=phi, W=W, b=b)
