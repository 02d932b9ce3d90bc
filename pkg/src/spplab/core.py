"""Periodic geometry, 1D grids, convolution, and the deterministic RNG contract.

Everything here is a pure function over immutable inputs and safe to call
concurrently.  Positions always live in ``[0, length)`` per axis; separation
vectors follow the half-open minimum-image convention ``[-length/2, length/2)``
so that the tie at exactly half a period is broken deterministically.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .errors import SpplabError


@dataclass(frozen=True)
class PeriodicDomain:
    """Periodic box of a given side length in one or two dimensions."""

    dimension: int = 2
    length: float = 1.0

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise SpplabError(f"dimension must be 1 or 2, got {self.dimension}")
        if not (np.isfinite(self.length) and self.length > 0):
            raise SpplabError(f"domain length must be positive, got {self.length}")


def wrap(position, domain: PeriodicDomain):
    """Map positions into ``[0, length)`` per axis, preserving the value mod length."""
    x = np.asarray(position, dtype=float)
    if not np.all(np.isfinite(x)):
        raise SpplabError("wrap: non-finite position")
    length = domain.length
    out = np.mod(x, length)
    # np.mod can round up to exactly `length` for tiny negative inputs.
    out = np.where(out >= length, out - length, out)
    return out if out.ndim else float(out)


def min_image(a, b, domain: PeriodicDomain):
    """Shortest periodic displacement a - b, each component in [-L/2, L/2)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise SpplabError("min_image: non-finite input")
    length = domain.length
    d = np.mod(a - b + 0.5 * length, length)
    d = np.where(d >= length, d - length, d)
    out = d - 0.5 * length
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class Grid1D:
    """Uniform cell-centered grid on a periodic interval of the given length."""

    n_cells: int
    length: float = 1.0

    def __post_init__(self):
        if self.n_cells < 8:
            raise SpplabError(f"n_cells must be >= 8, got {self.n_cells}")
        if not (np.isfinite(self.length) and self.length > 0):
            raise SpplabError(f"grid length must be positive, got {self.length}")

    @property
    def dx(self) -> float:
        return self.length / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def offsets(self) -> np.ndarray:
        """Signed cell-to-cell offsets i*dx wrapped into [-L/2, L/2)."""
        n = self.n_cells
        m = np.arange(n)
        m = np.where(m >= n - n // 2, m - n, m)
        return m * self.dx

    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers matching numpy's full FFT ordering."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_cells, d=self.dx)


@dataclass
class DensityField:
    """Scalar field sampled at the cell centers of a periodic 1D grid."""

    grid: Grid1D
    values: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.grid.n_cells,):
            raise SpplabError(
                f"field has {self.values.shape} values for a {self.grid.n_cells}-cell grid"
            )
        if not np.all(np.isfinite(self.values)):
            raise SpplabError("field values must be finite")

    @property
    def mass(self) -> float:
        return float(np.sum(self.values) * self.grid.dx)

    def copy(self) -> "DensityField":
        return DensityField(self.grid, self.values.copy())

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "value"])
            for x, v in zip(self.grid.centers, self.values):
                writer.writerow([repr(float(x)), repr(float(v))])

    @staticmethod
    def read_csv(path, length: float = 1.0) -> "DensityField":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        values = np.array([float(r["value"]) for r in rows])
        return DensityField(Grid1D(len(values), length), values)


def uniform_field(grid: Grid1D, value: float = 1.0) -> DensityField:
    return DensityField(grid, np.full(grid.n_cells, float(value)))


def sample_kernel(grid: Grid1D, kernel_fn) -> np.ndarray:
    """Sample a kernel at the signed cell offsets so it can enter convolutions."""
    return np.asarray(kernel_fn(grid.offsets), dtype=float)


def convolve_periodic(field: DensityField, kernel_values: np.ndarray, method: str = "spectral") -> DensityField:
    """Periodic convolution (kernel * field) approximating the integral over one period.

    ``kernel_values`` must be sampled on the same grid at the signed offsets
    (see :func:`sample_kernel`); the result carries the quadrature weight dx so
    that a kernel of unit integral preserves the field mass.  The spectral and
    direct paths implement the same discrete sum and agree to rounding.
    """
    kernel_values = np.asarray(kernel_values, dtype=float)
    if kernel_values.shape != (field.grid.n_cells,):
        raise SpplabError("kernel sampled on a different grid than the field")
    if method == "spectral":
        out = np.fft.irfft(
            np.fft.rfft(field.values) * np.fft.rfft(kernel_values), n=field.grid.n_cells
        )
    elif method == "direct":
        n = field.grid.n_cells
        out = np.empty(n)
        idx = np.arange(n)
        for i in range(n):
            out[i] = np.dot(field.values, kernel_values[np.mod(i - idx, n)])
    else:
        raise SpplabError(f"unknown convolution method {method!r}")
    return DensityField(field.grid, out * field.grid.dx)


def spectral_derivative(field: DensityField, order: int = 1) -> DensityField:
    """Fourier-space derivative of the given order; exact for band-limited fields."""
    n = field.grid.n_cells
    k = 2.0 * np.pi * np.fft.rfftfreq(n, d=field.grid.dx)
    mult = (1j * k) ** order
    if order % 2 == 0:
        mult = mult.real
    if n % 2 == 0 and order % 2 == 1:
        mult = mult.copy()
        mult[-1] = 0.0  # Nyquist mode has no well-defined odd derivative
    out = np.fft.irfft(np.fft.rfft(field.values) * mult, n=n)
    return DensityField(field.grid, out)


def second_derivative_periodic(field: DensityField) -> DensityField:
    """Central second difference with periodic wrap; exact for quadratics up to wrap."""
    n = field.grid.n_cells
    if n < 3:
        raise SpplabError("second derivative needs at least 3 cells")
    v = field.values
    out = (np.roll(v, -1) - 2.0 * v + np.roll(v, 1)) / field.grid.dx ** 2
    return DensityField(field.grid, out)


def heat_multiplier(grid: Grid1D, variance: float) -> np.ndarray:
    """rfft-space multiplier of convolution with the periodic heat kernel."""
    k = 2.0 * np.pi * np.fft.rfftfreq(grid.n_cells, d=grid.dx)
    return np.exp(-0.5 * variance * k ** 2)


def heat_smooth(field: DensityField, variance: float) -> DensityField:
    """Convolve with the periodic Gaussian (wrapped heat kernel) of the given variance."""
    if variance < 0:
        raise SpplabError("heat kernel variance must be >= 0")
    if variance == 0:
        return field.copy()
    out = np.fft.irfft(
        np.fft.rfft(field.values) * heat_multiplier(field.grid, variance), n=field.grid.n_cells
    )
    return DensityField(field.grid, out)


class RngStream:
    """Counter-based random streams keyed by (seed, step, substream).

    Each draw opens a fresh Philox generator at counter ``(step, substream, 0, 0)``,
    so the values depend only on the key and never on how much randomness other
    parts of the program consumed.  This makes parallel force loops and sweep
    cells bit-reproducible regardless of scheduling or thread count.
    """

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF

    def generator(self, step: int, substream: int = 0) -> np.random.Generator:
        bitgen = np.random.Philox(
            key=self.seed, counter=[int(step) & 0xFFFFFFFFFFFFFFFF, int(substream), 0, 0]
        )
        return np.random.Generator(bitgen)

    def normals(self, step: int, substream: int, shape) -> np.ndarray:
        return self.generator(step, substream).standard_normal(shape)

    def uniforms(self, step: int, substream: int, shape) -> np.ndarray:
        return self.generator(step, substream).random(shape)


def child_seed(master_seed: int, index: int) -> int:
    """Stable derived seed for sweep cell `index`; independent across indices."""
    ss = np.random.SeedSequence([int(master_seed), int(index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])
