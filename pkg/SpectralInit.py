#!/usr/bin/env python3
"""
Spectral initialization.

The FFT of a uniformly sampled grid, divided by the number of samples, gives
the complex Fourier-series coefficients c_n of the periodic extension of the
samples. Over the integer lattice these convert to the cosine/sine amplitudes

    a_0 = c_0,   a_n = 2 Re(c_n),   b_n = -2 Im(c_n),

which are exactly the output weights of an integer-mapped perceptron whose
bias is zero. Grid axis order follows images: axis 0 is the last coordinate
(rows = y) and axis d-1 the first (columns = x); sample j on an axis of
length S sits at coordinate j / S.
"""
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np

from FourierEmbedding import embed
from FourierLattice import FrequencyMatrix, MappingFamily, build_integer_lattice

WEIGHTS_FORMAT = "fourier-inr-weights"


def fft2_real(grid) -> np.ndarray:
    """Forward 2-D DFT over the first two axes, X[k] = sum_j f[j] exp(-2 pi i k.j / S)."""
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim < 2 or grid.shape[0] < 1 or grid.shape[1] < 1:
        raise ValueError(f"fft2_real needs a grid with at least two non-empty axes, got {grid.shape}")
    return np.fft.fft2(grid, axes=(0, 1))


def ifft2(spectrum) -> np.ndarray:
    """Inverse of fft2_real (complex output; take .real for real signals)."""
    return np.fft.ifft2(np.asarray(spectrum, dtype=np.complex128), axes=(0, 1))


@dataclass(frozen=True, eq=False)
class SpectralCoefficients:
    """Cosine (a) and sine (b) amplitudes indexed by the canonical lattice rows.

    a and b have shape (m,) for a single-channel grid or (m, C) otherwise.
    """

    a: np.ndarray
    b: np.ndarray
    N: int
    grid_shape: Tuple[int, ...]
    lattice: FrequencyMatrix

    @property
    def channels(self) -> int:
        return 1 if self.a.ndim == 1 else self.a.shape[1]

    def to_weights_document(self) -> Dict[str, Any]:
        """Serialize as the weight file of the equivalent mapped perceptron."""
        W, bias = weights_from_coefficients(self)
        return {
            "format": WEIGHTS_FORMAT,
            "version": 1,
            "input_mode": "mapped",
            "mapping": self.lattice.to_dict(),
            "progressive": None,
            "layers": [{"w": W.tolist(), "b": bias.tolist(), "act": "identity", "omega0": 1.0}],
            "grid_shape": list(self.grid_shape),
        }

    @classmethod
    def from_weights_document(cls, doc: Dict[str, Any]) -> "SpectralCoefficients":
        lattice = FrequencyMatrix.from_dict(doc["mapping"])
        if lattice.family != MappingFamily.INTEGER:
            raise ValueError("Spectral coefficients need an integer-lattice mapping")
        if len(doc["layers"]) != 1:
            raise ValueError("Spectral coefficients need a single-layer perceptron")
        W = np.asarray(doc["layers"][0]["w"], dtype=np.float64)
        a, b = W[:, : lattice.m].T, W[:, lattice.m:].T
        if a.shape[1] == 1:
            a, b = a[:, 0], b[:, 0]
        grid_shape = tuple(doc.get("grid_shape", ()))
        return cls(a=a, b=b, N=int(lattice.N), grid_shape=grid_shape, lattice=lattice)


def coefficients_from_grid(grid, N: int, d: Optional[int] = None) -> SpectralCoefficients:
    """Fourier-series amplitudes of a sampled grid over the integer lattice B_N.

    `grid` has d spatial axes, optionally followed by one channel axis. Every
    spatial axis needs at least 2N samples. When several lattice rows alias
    onto the same DFT bin (the Nyquist row of an even-length axis) the bin's
    coefficient is split evenly between them, which keeps reconstruction at
    the sample points exact.
    """
    grid = np.asarray(grid, dtype=np.float64)
    if d is None:
        d = grid.ndim
    if grid.ndim not in (d, d + 1):
        raise ValueError(f"Grid of shape {grid.shape} does not have {d} spatial axes")
    shape = grid.shape[:d]
    for axis, size in enumerate(shape):
        if size < 2 * N:
            raise ValueError(
                f"Grid axis {axis} has {size} samples, below the 2N={2 * N} needed for N={N}"
            )

    lattice = build_integer_lattice(d, N)
    rows = lattice.rows.astype(np.int64)
    spectrum = np.fft.fftn(grid, axes=tuple(range(d))) / float(np.prod(shape))

    # grid axis k carries lattice coordinate d-1-k
    bins = tuple(np.mod(rows[:, d - 1 - k], shape[k]) for k in range(d))
    mirrored = tuple(np.mod(-rows[:, d - 1 - k], shape[k]) for k in range(d))
    flat = np.ravel_multi_index(bins, shape)
    flat_mirrored = np.ravel_multi_index(mirrored, shape)
    size = int(np.prod(shape))
    coverage = np.bincount(flat, minlength=size) + np.bincount(flat_mirrored, minlength=size)

    c = spectrum[bins]
    share = 2.0 / coverage[flat]
    if c.ndim == 2:
        share = share[:, None]
    z = c * share

    a = z.real.copy()
    b = -z.imag
    dc = np.flatnonzero(~rows.any(axis=1))
    b[dc] = 0.0
    return SpectralCoefficients(a=a, b=b, N=int(N), grid_shape=tuple(int(s) for s in shape), lattice=lattice)


def weights_from_coefficients(coeffs: SpectralCoefficients) -> Tuple[np.ndarray, np.ndarray]:
    """Perceptron output layer (W of shape (C, 2m), zero bias) for the coefficients."""
    W = np.concatenate([coeffs.a, coeffs.b], axis=0)
    if W.ndim == 1:
        W = W[None, :]
    else:
        W = W.T
    return W.copy(), np.zeros(W.shape[0])


def synthesize(coeffs: SpectralCoefficients, x) -> np.ndarray:
    """Evaluate sum_n a_n cos(2 pi n.x) + b_n sin(2 pi n.x) directly."""
    features = embed(x, coeffs.lattice)
    m = coeffs.lattice.m
    return features[..., :m] @ coeffs.a + features[..., m:] @ coeffs.b


def series_energy(coeffs: SpectralCoefficients) -> np.ndarray:
    """Mean square of the series over one period: a_0^2 + 1/2 sum_{n != 0} (a_n^2 + b_n^2)."""
    dc = ~coeffs.lattice.rows.any(axis=1)
    a, b = coeffs.a, coeffs.b
    return (a[dc] ** 2).sum(axis=0) + 0.5 * ((a[~dc] ** 2).sum(axis=0) + (b[~dc] ** 2).sum(axis=0))
