#!/usr/bin/env python3
"""
Frequency matrices for Fourier input mappings.

Builds the mapping matrix B for the four mapping families:

- integer:    the truncated integer lattice {0..N} x {-N..N}^(d-1) minus the
              half-space H of vectors whose first nonzero entry is negative.
              A linear readout of cos/sin features over this lattice is a
              truncated d-dimensional Fourier series.
- gaussian:   i.i.d. normal frequencies with a given standard deviation.
- positional: axis-aligned powers of two 2^j * e_k with 2^j <= N.
- pruned:     a subset of an integer lattice selected by FrequencyPruning.

Rows of the integer lattice are stored in lexicographic order with axis
order (x_1, ..., x_d). Weight vectors, pruning masks and spectral
coefficients all index frequencies in this order.
"""
import enum
import json
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np


# Largest row count any lattice builder will materialize.
MAX_LATTICE_ROWS = 1 << 22


class LatticeCapacityError(OverflowError):
    """The requested lattice has more rows than the configured limit."""


class MappingFamily(str, enum.Enum):
    INTEGER = "integer"
    GAUSSIAN = "gaussian"
    POSITIONAL = "positional"
    PRUNED = "pruned"


@dataclass(frozen=True, eq=False)
class FrequencyMatrix:
    """The mapping matrix B (m rows, d columns) plus its provenance."""

    rows: np.ndarray
    family: MappingFamily
    N: Optional[int] = None
    sigma: Optional[float] = None
    seed: Optional[int] = None
    provenance: Dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.float64)
        if rows.ndim != 2:
            raise ValueError(f"Frequency rows must form a 2-D array, got shape {rows.shape}")
        if rows.shape[1] < 1:
            raise ValueError("Frequency rows must have at least one column")
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "family", MappingFamily(self.family))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FrequencyMatrix):
            return NotImplemented
        return (
            self.family == other.family
            and self.N == other.N
            and self.sigma == other.sigma
            and self.seed == other.seed
            and np.array_equal(self.rows, other.rows)
        )

    __hash__ = None  # type: ignore[assignment]

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    @property
    def is_integer_valued(self) -> bool:
        return self.family in (MappingFamily.INTEGER, MappingFamily.POSITIONAL, MappingFamily.PRUNED)

    def row_index(self) -> Dict[tuple, int]:
        """Map each row (as an int tuple) to its position in canonical order."""
        return {tuple(int(v) for v in row): i for i, row in enumerate(self.rows)}

    def to_dict(self) -> Dict[str, Any]:
        doc: Dict[str, Any] = {"family": self.family.value, "d": self.d}
        if self.N is not None:
            doc["N"] = self.N
        if self.sigma is not None:
            doc["sigma"] = self.sigma
        if self.seed is not None:
            doc["seed"] = self.seed
        if self.provenance:
            doc["provenance"] = dict(self.provenance)
        if self.is_integer_valued:
            doc["rows"] = [[int(v) for v in row] for row in self.rows]
        else:
            doc["rows"] = [[float(v) for v in row] for row in self.rows]
        return doc

    @classmethod
    def from_dict(cls, doc: Dict[str, Any]) -> "FrequencyMatrix":
        rows = np.array(doc["rows"], dtype=np.float64).reshape(-1, int(doc["d"]))
        return cls(
            rows=rows,
            family=MappingFamily(doc["family"]),
            N=doc.get("N"),
            sigma=doc.get("sigma"),
            seed=doc.get("seed"),
            provenance=dict(doc.get("provenance", {})),
        )

    def save_json(self, path: str) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)

    @classmethod
    def load_json(cls, path: str) -> "FrequencyMatrix":
        with open(path, "r") as f:
            return cls.from_dict(json.load(f))


def _check_dimension(d: int) -> None:
    if not isinstance(d, (int, np.integer)) or d < 1:
        raise ValueError(f"Input dimension d must be a positive integer, got {d!r}")


def _check_frequency(N: int) -> None:
    if not isinstance(N, (int, np.integer)) or N < 0:
        raise ValueError(f"Mapping frequency N must be a non-negative integer, got {N!r}")


def lattice_size(d: int, N: int, limit: Optional[int] = MAX_LATTICE_ROWS) -> int:
    """Row count m of the integer lattice: (N+1)(2N+1)^(d-1) - sum_l N(2N+1)^l.

    Evaluated in exact integer arithmetic; raises LatticeCapacityError when the
    result exceeds `limit` (pass None to disable the check).
    """
    _check_dimension(d)
    _check_frequency(N)
    d, N = int(d), int(N)
    side = 2 * N + 1
    m = (N + 1) * side ** (d - 1) - sum(N * side ** l for l in range(d - 1))
    if limit is not None and m > limit:
        raise LatticeCapacityError(
            f"Integer lattice for d={d}, N={N} has {m} rows, above the limit of {limit}"
        )
    return m


def build_integer_lattice(d: int, N: int, limit: Optional[int] = MAX_LATTICE_ROWS) -> FrequencyMatrix:
    """All n in {0..N} x {-N..N}^(d-1) whose first nonzero entry is positive, plus 0."""
    m = lattice_size(d, N, limit=limit)
    axes = [np.arange(0, N + 1)] + [np.arange(-N, N + 1)] * (d - 1)
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)

    nonzero = grid != 0
    first = np.argmax(nonzero, axis=1)
    leading = grid[np.arange(grid.shape[0]), first]
    keep = leading >= 0  # all-zero rows have leading == 0 (the DC term)
    rows = grid[keep]

    if rows.shape[0] != m:
        raise AssertionError(f"Lattice enumeration produced {rows.shape[0]} rows, expected {m}")
    return FrequencyMatrix(rows=rows, family=MappingFamily.INTEGER, N=int(N))


def build_gaussian_mapping(d: int, m: int, sigma: float, seed: int) -> FrequencyMatrix:
    """m rows of i.i.d. N(0, sigma^2) samples.

    Sampling uses numpy's PCG64 bit generator with the ziggurat normal
    transform, so a fixed seed reproduces the matrix bit for bit on the same
    platform.
    """
    _check_dimension(d)
    if not isinstance(m, (int, np.integer)) or m < 1:
        raise ValueError(f"Row count m must be a positive integer, got {m!r}")
    if not sigma > 0:
        raise ValueError(f"Standard deviation sigma must be > 0, got {sigma!r}")
    rng = np.random.Generator(np.random.PCG64(seed))
    rows = rng.normal(loc=0.0, scale=sigma, size=(int(m), int(d)))
    return FrequencyMatrix(rows=rows, family=MappingFamily.GAUSSIAN, sigma=float(sigma), seed=seed)


def build_positional_encoding(d: int, N: int) -> FrequencyMatrix:
    """Rows 2^j * e_k for every axis k and every j with 2^j <= N, axis-major."""
    _check_dimension(d)
    if not isinstance(N, (int, np.integer)) or N < 1:
        raise ValueError(f"Positional encoding needs N >= 1, got {N!r}")
    powers = []
    p = 1
    while p <= N:
        powers.append(p)
        p *= 2
    rows = np.zeros((d * len(powers), d))
    for k in range(d):
        for j, power in enumerate(powers):
            rows[k * len(powers) + j, k] = power
    return FrequencyMatrix(rows=rows, family=MappingFamily.POSITIONAL, N=int(N))


def frequency_norms(B: FrequencyMatrix) -> np.ndarray:
    """Euclidean norm of every row of B."""
    return np.linalg.norm(B.rows, axis=1)
