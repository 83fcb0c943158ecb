"""Periodic pseudo-spectral engine on an origin-centred space-time box.

Axis ``k`` covers ``[-L_k, L_k)`` with ``n_k`` equispaced nodes (the origin is
a node). Frequencies are ``xi = pi * k / L`` for ``k`` in ``[-n/2, n/2)``; the
Nyquist row is zeroed in every derivative multiplier so that odd derivatives
of real fields stay real. Arrays are indexed ``[x_1, ..., x_N, t]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

from .fields import FieldSpec, OperatorSpec, check_support, evaluate
from .structure import StructureMatrix

__all__ = [
    "DEFAULT_BUDGET",
    "BudgetError",
    "GridSpec",
    "SpectralField",
    "OperatorSpec",
    "sample",
    "frac_derivative",
    "multiplier_norm",
    "derivative",
    "apply_Y",
    "apply_L",
    "l2_norm",
    "parseval_norm",
    "export_field",
    "load_field",
]

DEFAULT_BUDGET = 2**24


class BudgetError(ValueError):
    """Lattice larger than the configured point budget."""


@dataclass(frozen=True)
class GridSpec:
    """Box half-widths per variable group plus time, and points per axis.

    ``n`` is either one count for every axis or a per-axis tuple (space axes
    first, time last). Counts must be even and at least 8.
    """

    dims: tuple[int, ...]
    L: tuple[float, ...]
    Lt: float
    n: int | tuple[int, ...] = 64
    budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "L", tuple(float(x) for x in self.L))
        object.__setattr__(self, "Lt", float(self.Lt))
        if isinstance(self.n, (list, tuple)):
            object.__setattr__(self, "n", tuple(int(k) for k in self.n))
        else:
            object.__setattr__(self, "n", int(self.n))
        if len(self.L) != len(self.dims):
            raise ValueError(f"need one half-width per group ({len(self.dims)}), got {len(self.L)}")
        if min(self.L + (self.Lt,)) <= 0:
            raise ValueError("half-widths must be positive")
        counts = self.counts
        if len(counts) != sum(self.dims) + 1:
            raise ValueError(f"need {sum(self.dims) + 1} point counts, got {len(counts)}")
        for k in counts:
            if k < 8 or k % 2:
                raise ValueError(f"points per axis must be even and >= 8, got {k}")
        if self.size > self.budget:
            raise BudgetError(f"grid has {self.size} points, budget is {self.budget}")

    @classmethod
    def for_structure(cls, M: StructureMatrix, L, Lt, n=64, budget=DEFAULT_BUDGET) -> "GridSpec":
        if np.isscalar(L):
            L = (L,) * len(M.dims)
        return cls(M.dims, tuple(L), Lt, n, budget)

    def with_n(self, n) -> "GridSpec":
        return GridSpec(self.dims, self.L, self.Lt, n, self.budget)

    @property
    def n_axes(self) -> int:
        return sum(self.dims) + 1

    @property
    def counts(self) -> tuple[int, ...]:
        if isinstance(self.n, tuple):
            return self.n
        return (self.n,) * (sum(self.dims) + 1)

    @property
    def half_widths(self) -> tuple[float, ...]:
        out = []
        for L, m in zip(self.L, self.dims):
            out.extend([L] * m)
        return tuple(out) + (self.Lt,)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts

    @property
    def size(self) -> int:
        return int(np.prod(self.counts, dtype=np.int64))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(2 * L / k for L, k in zip(self.half_widths, self.counts))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def volume(self) -> float:
        return float(np.prod([2 * L for L in self.half_widths]))

    def axes(self) -> list[np.ndarray]:
        return [-L + h * np.arange(k) for L, h, k in zip(self.half_widths, self.spacing, self.counts)]

    def frequencies(self) -> list[np.ndarray]:
        """Angular frequencies in FFT order, one array per axis."""
        return [
            2 * np.pi * np.fft.fftfreq(k, d=h) for h, k in zip(self.spacing, self.counts)
        ]

    def group_axes(self, group: int) -> range:
        off = sum(self.dims[:group])
        return range(off, off + self.dims[group])

    def to_dict(self) -> dict:
        return {
            "dims": list(self.dims),
            "L": list(self.L),
            "Lt": self.Lt,
            "n": list(self.n) if isinstance(self.n, tuple) else self.n,
        }

    @classmethod
    def from_dict(cls, data: dict, budget: int = DEFAULT_BUDGET) -> "GridSpec":
        n = data.get("n", 64)
        return cls(tuple(data["dims"]), tuple(data["L"]), data["Lt"], n, budget)


def _bcast(vec: np.ndarray, axis: int, nd: int) -> np.ndarray:
    shape = [1] * nd
    shape[axis] = vec.size
    return vec.reshape(shape)


class SpectralField:
    """Complex samples on the lattice with a lazily cached FFT.

    Immutable: the arrays are flagged read-only and every operation returns
    a new field.
    """

    def __init__(self, grid: GridSpec, values: np.ndarray | None = None, coeffs: np.ndarray | None = None):
        if (values is None) == (coeffs is None):
            raise ValueError("give exactly one of values / coeffs")
        arr = values if values is not None else coeffs
        if arr.shape != grid.shape:
            raise ValueError(f"array shape {arr.shape} does not match grid {grid.shape}")
        self.grid = grid
        self._values = None if values is None else _frozen(values)
        self._coeffs = None if coeffs is None else _frozen(coeffs)

    @property
    def values(self) -> np.ndarray:
        if self._values is None:
            self._values = _frozen(np.fft.ifftn(self._coeffs))
        return self._values

    @property
    def coeffs(self) -> np.ndarray:
        if self._coeffs is None:
            self._coeffs = _frozen(np.fft.fftn(self._values))
        return self._coeffs

    @cached_property
    def power(self) -> np.ndarray:
        return np.abs(self.coeffs) ** 2

    def real_part(self) -> np.ndarray:
        return self.values.real

    def max_imag(self) -> float:
        return float(np.max(np.abs(self.values.imag), initial=0.0))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values), initial=0.0))

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.values + other.values)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return SpectralField(self.grid, self.values - other.values)

    def __mul__(self, c) -> "SpectralField":
        return SpectralField(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self * -1


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def sample(f: FieldSpec, grid: GridSpec) -> SpectralField:
    """Evaluate ``f`` on the lattice after checking the support margin."""
    if f.n_vars != grid.n_axes:
        raise ValueError(f"field has {f.n_vars} variables, grid has {grid.n_axes} axes")
    check_support(f, grid.half_widths)
    return SpectralField(grid, evaluate(f, grid.axes()).astype(complex))


def _group_symbol_sq(grid: GridSpec, group: int) -> tuple[np.ndarray, list[int]]:
    """``|xi_group|^2`` (broadcastable) and the group's axes."""
    nd = grid.n_axes
    axes = list(grid.group_axes(group))
    freqs = grid.frequencies()
    sq = 0.0
    for a in axes:
        sq = sq + _bcast(freqs[a] ** 2, a, nd)
    return np.asarray(sq), axes


def _nyquist_mask(grid: GridSpec, axes: Sequence[int]) -> np.ndarray:
    nd = grid.n_axes
    mask = np.ones((1,) * nd)
    for a in axes:
        k = grid.counts[a]
        m = np.ones(k)
        m[k // 2] = 0.0
        mask = mask * _bcast(m, a, nd)
    return mask


def _group_multiplier(grid: GridSpec, group: int, order: float) -> np.ndarray:
    sq, axes = _group_symbol_sq(grid, group)
    return sq ** (order / 2) * _nyquist_mask(grid, axes)


def frac_derivative(u: SpectralField, group: int, order: float) -> SpectralField:
    """Fourier multiplier ``|xi_group|^order`` (the grouped ``(-Delta)^{order/2}``)."""
    if order < 0:
        raise ValueError(f"negative order {order} is not supported")
    if not 0 <= group < len(u.grid.dims):
        raise IndexError(f"group {group} outside 0..{len(u.grid.dims) - 1}")
    if order == 0:
        return SpectralField(u.grid, coeffs=u.coeffs)
    return SpectralField(u.grid, coeffs=u.coeffs * _group_multiplier(u.grid, group, order))


def multiplier_norm(u: SpectralField, group: int, order) -> float:
    """``l2_norm(frac_derivative(u, group, order))`` evaluated on the spectral side.

    Marginalizes the power spectrum onto the group's axes first, so repeated
    calls with different orders are cheap.
    """
    order = float(order)
    if order < 0:
        raise ValueError(f"negative order {order} is not supported")
    grid = u.grid
    P = _marginal(u, group)
    if order == 0:
        total = float(P.sum())
    else:
        sq, axes = _marginal_symbol(grid, group)
        total = float(np.sum(P * sq**order))
    return float(np.sqrt(grid.cell_volume / grid.size * total))


def _marginal(u: SpectralField, group: int) -> np.ndarray:
    cache = u.__dict__.setdefault("_marginals", {})
    if group not in cache:
        axes = list(u.grid.group_axes(group))
        other = tuple(a for a in range(u.grid.n_axes) if a not in axes)
        cache[group] = u.power.sum(axis=other)
    return cache[group]


def _marginal_symbol(grid: GridSpec, group: int) -> tuple[np.ndarray, list[int]]:
    axes = list(grid.group_axes(group))
    freqs = grid.frequencies()
    nd = len(axes)
    sq = 0.0
    mask = np.ones((1,) * nd)
    for j, a in enumerate(axes):
        sq = sq + _bcast(freqs[a] ** 2, j, nd)
        m = np.ones(grid.counts[a])
        m[grid.counts[a] // 2] = 0.0
        mask = mask * _bcast(m, j, nd)
    return np.asarray(sq) * mask, axes


def derivative(u: SpectralField, axis: int) -> SpectralField:
    """Spectral first derivative along ``axis`` (time is the last axis)."""
    grid = u.grid
    xi = grid.frequencies()[axis].copy()
    xi[grid.counts[axis] // 2] = 0.0
    return SpectralField(grid, coeffs=u.coeffs * _bcast(1j * xi, axis, grid.n_axes))


def apply_Y(u: SpectralField, op: OperatorSpec | StructureMatrix) -> SpectralField:
    """``sum_ij b_ij x_j d_i u - d_t u`` with spectral derivatives and the
    (sawtooth) lattice coordinates."""
    M = op.structure if isinstance(op, OperatorSpec) else op
    grid = u.grid
    nd = grid.n_axes
    coords = grid.axes()
    out = -derivative(u, nd - 1).values
    rows: dict[int, list] = {}
    for i, j, b in M.entries():
        rows.setdefault(i, []).append((j, float(b)))
    for i, cols in rows.items():
        weight = sum(b * _bcast(coords[j], j, nd) for j, b in cols)
        out = out + weight * derivative(u, i).values
    return SpectralField(grid, out)


def apply_L(u: SpectralField, op: OperatorSpec) -> SpectralField:
    """``Y u - sigma * Delta_0 u``, using ``Delta_0 = -D_0^2``."""
    y = apply_Y(u, op)
    if not op.sigma:
        return y
    return y + float(op.sigma) * frac_derivative(u, 0, 2)


def l2_norm(u: SpectralField) -> float:
    """Lattice quadrature ``sqrt(sum |u|^2 * cell volume)``."""
    return float(np.sqrt(np.sum(np.abs(u.values) ** 2) * u.grid.cell_volume))


def parseval_norm(u: SpectralField) -> float:
    """Same norm computed from the Fourier coefficients."""
    g = u.grid
    return float(np.sqrt(np.sum(u.power) * g.cell_volume / g.size))


def export_field(u: SpectralField, prefix: str | Path) -> tuple[Path, Path]:
    """Debug dump: ``<prefix>.bin`` (little-endian float64, C order) plus a
    JSON sidecar with the grid. Complex fields are stored as interleaved
    real/imaginary pairs."""
    prefix = Path(prefix)
    vals = u.values
    real = u.max_imag() == 0.0
    data = vals.real if real else vals.view(np.float64).reshape(vals.shape + (2,))
    bin_path = prefix.with_suffix(".bin")
    np.ascontiguousarray(data, dtype="<f8").tofile(bin_path)
    meta = {
        "grid": u.grid.to_dict(),
        "shape": list(vals.shape),
        "layout": "real" if real else "complex-interleaved",
        "dtype": "<f8",
    }
    json_path = prefix.with_suffix(".json")
    json_path.write_text(json.dumps(meta, indent=2, sort_keys=True))
    return bin_path, json_path


def load_field(prefix: str | Path) -> SpectralField:
    prefix = Path(prefix)
    meta = json.loads(prefix.with_suffix(".json").read_text())
    grid = GridSpec.from_dict(meta["grid"])
    raw = np.fromfile(prefix.with_suffix(".bin"), dtype="<f8")
    shape = tuple(meta["shape"])
    if meta["layout"] == "real":
        vals = raw.reshape(shape).astype(complex)
    else:
        vals = raw.reshape(shape + (2,)).view(np.complex128)[..., 0]
    return SpectralField(grid, vals)
