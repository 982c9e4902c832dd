"""Bijective mapping between continuous manipulator parameters and basis indices.

Each parameter gets its own qubit register; registers are packed into one
basis index with spec order = ascending bit significance (the first spec
occupies the least significant bits, matching the simulator's little-endian
amplitude layout).

Binning uses ``k = floor((z - min)/(max - min) * (2^n - 1))`` and decoding
inverts it with the same ``2^n - 1`` denominator, so the reported bin width
is ``range / (2^n - 1)``.

Out-of-range angular values wrap modulo one period (2*pi) into the modeled
arc before binning; values already inside ``[min, max]`` are binned as-is,
which keeps encode(decode(k)) = k an exact identity for every index (the
top angular bin decodes to max, one period above min).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Sequence, Tuple

import numpy as np

from .qsim import DEFAULT_QUBIT_CAP, CapacityError

TWO_PI = 2.0 * math.pi

# snap-to-boundary guard for encode(decode(k)) round trips; floating point can
# land floor() one ulp under an exact integer
_BOUNDARY_EPS = 1e-9


@dataclass(frozen=True)
class ParamSpec:
    name: str
    lo: float
    hi: float
    n_qubits: int
    angular: bool = False

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"{self.name}: min must be < max")
        if self.n_qubits < 1:
            raise ValueError(f"{self.name}: n_qubits must be >= 1")
        if self.angular and self.hi - self.lo > TWO_PI + 1e-12:
            raise ValueError(f"{self.name}: angular range exceeds one period")

    @property
    def levels(self) -> int:
        return 1 << self.n_qubits


def bin_width(spec: ParamSpec) -> float:
    """Grid resolution: (max - min) / (2^n - 1)."""
    return (spec.hi - spec.lo) / (spec.levels - 1)


@dataclass(frozen=True)
class ParamGrid:
    specs: Tuple[ParamSpec, ...]

    def __post_init__(self):
        if not self.specs:
            raise ValueError("grid needs at least one parameter")
        object.__setattr__(self, "specs", tuple(self.specs))

    @property
    def total_qubits(self) -> int:
        return sum(s.n_qubits for s in self.specs)

    @property
    def size(self) -> int:
        return 1 << self.total_qubits

    @property
    def dimension(self) -> int:
        return len(self.specs)

    @property
    def shifts(self) -> Tuple[int, ...]:
        out, acc = [], 0
        for s in self.specs:
            out.append(acc)
            acc += s.n_qubits
        return tuple(out)

    def names(self) -> Tuple[str, ...]:
        return tuple(s.name for s in self.specs)

    def check_capacity(self, cap: int = DEFAULT_QUBIT_CAP) -> None:
        if self.total_qubits > cap:
            raise CapacityError(
                f"grid needs {self.total_qubits} qubits, cap is {cap}; "
                "reduce qubits per parameter"
            )


def _wrap_angular(value: float, lo: float) -> float:
    w = math.fmod(value - lo, TWO_PI)
    if w < 0:
        w += TWO_PI
    return lo + w


def _bin_of(spec: ParamSpec, value: float) -> int:
    if not math.isfinite(value):
        raise ValueError(f"{spec.name}: non-finite value {value}")
    if spec.angular:
        if not spec.lo <= value <= spec.hi:  # exact max stays in the top bin
            value = _wrap_angular(value, spec.lo)
        if value > spec.hi + _BOUNDARY_EPS:
            raise ValueError(
                f"{spec.name}: {value} outside angular range after wrapping"
            )
    elif value < spec.lo - _BOUNDARY_EPS or value > spec.hi + _BOUNDARY_EPS:
        raise ValueError(f"{spec.name}: {value} outside [{spec.lo}, {spec.hi}]")
    t = (value - spec.lo) / (spec.hi - spec.lo) * (spec.levels - 1)
    k = math.floor(t)
    if t - k >= 1.0 - _BOUNDARY_EPS:  # snap when floor sits one ulp under an integer
        k += 1
    return min(max(k, 0), spec.levels - 1)


def pack_indices(grid: ParamGrid, ks: Sequence[int]) -> int:
    """Pack per-parameter sub-indices into one basis index."""
    if len(ks) != grid.dimension:
        raise ValueError(f"expected {grid.dimension} sub-indices, got {len(ks)}")
    out = 0
    for spec, shift, k in zip(grid.specs, grid.shifts, ks):
        if not 0 <= k < spec.levels:
            raise ValueError(f"{spec.name}: sub-index {k} out of range")
        out |= int(k) << shift
    return out


def unpack_index(grid: ParamGrid, index: int) -> Tuple[int, ...]:
    """Split a basis index into per-parameter sub-indices."""
    if not 0 <= index < grid.size:
        raise ValueError(f"index {index} out of range for grid of size {grid.size}")
    return tuple(
        (index >> shift) & (spec.levels - 1)
        for spec, shift in zip(grid.specs, grid.shifts)
    )


def encode(grid: ParamGrid, values: Sequence[float]) -> int:
    """Map a parameter vector to its basis index.

    Non-angular values are clamped at the exact bounds; out-of-range values
    raise. Angular values are wrapped into one period before binning.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.dimension,):
        raise ValueError(f"expected {grid.dimension} values, got {values.shape}")
    return pack_indices(grid, [_bin_of(s, v) for s, v in zip(grid.specs, values)])


def decode(grid: ParamGrid, index: int) -> np.ndarray:
    """Map a basis index to its parameter vector (exact inverse of encode)."""
    ks = unpack_index(grid, index)
    out = np.empty(grid.dimension)
    for i, (spec, k) in enumerate(zip(grid.specs, ks)):
        out[i] = spec.lo + k / (spec.levels - 1) * (spec.hi - spec.lo)
    return out


def decode_all(grid: ParamGrid, cap: int = DEFAULT_QUBIT_CAP) -> np.ndarray:
    """Decode every basis index at once; returns shape (2^N, dimension)."""
    grid.check_capacity(cap)
    idx = np.arange(grid.size)
    cols = []
    for spec, shift in zip(grid.specs, grid.shifts):
        k = (idx >> shift) & (spec.levels - 1)
        cols.append(spec.lo + k / (spec.levels - 1) * (spec.hi - spec.lo))
    return np.stack(cols, axis=1)


def enumerate_configurations(
    grid: ParamGrid, cap: int = DEFAULT_QUBIT_CAP
) -> Iterator[Tuple[int, np.ndarray]]:
    """Yield (index, parameter vector) for all 2^N indices in ascending order."""
    table = decode_all(grid, cap)
    for k in range(grid.size):
        yield k, table[k]
