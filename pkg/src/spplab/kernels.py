"""Parametric interaction potentials, their forces and Fourier coefficients.

Two families are supported:

``quadratic-compact``
    Potential proportional to ``(radius - |x|)**2`` inside a ball of the given
    radius and zero outside; the force decreases linearly and vanishes
    continuously at the support edge.  Normalised so the 1D integral of the
    potential equals ``mass`` (1D prefactor ``3C/(2r)``, 2D ``3A/(2 pi r^3)``).

``exponential-force``
    1D potential ``(C/(2r)) * exp(-|x|/r)`` whose force magnitude decays
    exponentially with decay length ``radius``; no compact support.  Its
    integral also equals ``mass``.  When sampled on a periodic domain the
    tail beyond half a period is wrapped, which perturbs values by at most
    ``O(exp(-L/(2 r)))``.

For both families a positive mass gives a repulsive particle-obstacle
interaction and a negative mass an attractive one.  The module also builds
the obstacle-induced particle-particle interaction kernel W, defined through
the convolution of the force with itself; its derivative W' is evaluated in
closed form, splitting off the Dirac contribution ``2 phi'(0+) delta`` that
the second derivative of a kernel with a kink at the origin carries.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import SpplabError

FAMILIES = ("quadratic-compact", "exponential-force")


@dataclass(frozen=True)
class KernelSpec:
    """Interaction kernel: family tag, signed mass, and radius/decay length."""

    family: str
    mass: float
    radius: float
    dimension: int = 1

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise SpplabError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if not (np.isfinite(self.radius) and self.radius > 0):
            raise SpplabError(f"kernel radius must be positive, got {self.radius}")
        if not np.isfinite(self.mass):
            raise SpplabError("kernel mass must be finite")
        if self.dimension not in (1, 2):
            raise SpplabError(f"kernel dimension must be 1 or 2, got {self.dimension}")
        if self.family == "exponential-force" and self.dimension != 1:
            raise SpplabError("exponential-force kernels are only defined in 1D")

    @property
    def prefactor(self) -> float:
        """Amplitude of the potential at the origin-side of the family formula."""
        if self.family == "quadratic-compact":
            if self.dimension == 1:
                return 1.5 * self.mass / self.radius
            return 1.5 * self.mass / (np.pi * self.radius ** 3)
        return 0.5 * self.mass / self.radius


def potential(kernel: KernelSpec, x) -> np.ndarray | float:
    """Evaluate the even potential; 1D takes signed offsets, 2D takes (..., 2) vectors."""
    if kernel.dimension == 2:
        r = np.linalg.norm(np.asarray(x, dtype=float), axis=-1)
    else:
        r = np.abs(np.asarray(x, dtype=float))
    out = _potential_radial(kernel, r)
    return out if out.ndim else float(out)


def _potential_radial(kernel: KernelSpec, r: np.ndarray) -> np.ndarray:
    if kernel.family == "quadratic-compact":
        if kernel.dimension == 1:
            inside = r < kernel.radius
            return np.where(inside, kernel.prefactor * (1.0 - r / kernel.radius) ** 2, 0.0)
        inside = r < kernel.radius
        return np.where(inside, kernel.prefactor * (kernel.radius - r) ** 2, 0.0)
    return kernel.prefactor * np.exp(-r / kernel.radius)


def force_magnitude(kernel: KernelSpec, r) -> np.ndarray | float:
    """Radial derivative d(potential)/dr evaluated at distances r >= 0."""
    r = np.asarray(r, dtype=float)
    if kernel.family == "quadratic-compact":
        # d/dr of prefactor*(radius - r)^2 (1D form differs only by the r**2 scaling)
        if kernel.dimension == 2:
            out = np.where(r < kernel.radius, -2.0 * kernel.prefactor * (kernel.radius - r), 0.0)
            return out if out.ndim else float(out)
        scale = 3.0 * kernel.mass / kernel.radius ** 2
        out = np.where(r < kernel.radius, -scale * (1.0 - r / kernel.radius), 0.0)
        return out if out.ndim else float(out)
    out = -kernel.prefactor / kernel.radius * np.exp(-r / kernel.radius)
    return out if out.ndim else float(out)


def force(kernel: KernelSpec, x) -> np.ndarray | float:
    """Gradient of the potential: odd scalar in 1D, vector field in 2D.

    The 2D gradient at the origin is set to zero (the magnitude limit exists
    but the direction does not).
    """
    if kernel.dimension == 1:
        x = np.asarray(x, dtype=float)
        out = force_magnitude(kernel, np.abs(x)) * np.sign(x)
        return out if out.ndim else float(out)
    x = np.asarray(x, dtype=float)
    r = np.linalg.norm(x, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        direction = np.where(r > 0, x / r, 0.0)
    mag = np.asarray(force_magnitude(kernel, r[..., 0]))
    return mag[..., None] * direction


def fourier_coefficient(kernel: KernelSpec, k) -> np.ndarray | float:
    """Fourier transform of the 1D kernel at angular wavenumber(s) k.

    For the quadratic-compact family the closed form
    ``6 C (u - sin u) / u**3`` with ``u = radius * k`` is used (series expansion
    near u = 0); the exponential family gives ``C / (1 + (radius k)**2)``.
    On a periodic domain of length L these equal the Fourier coefficients at
    ``k = 2 pi l`` whenever the kernel (effectively) fits inside one period.
    """
    if kernel.dimension != 1:
        raise SpplabError("fourier_coefficient is defined for 1D kernels")
    k = np.asarray(k, dtype=float)
    u = kernel.radius * k
    if kernel.family == "quadratic-compact":
        small = np.abs(u) < 1e-4
        u_safe = np.where(small, 1.0, u)
        exact = 6.0 * (u_safe - np.sin(u_safe)) / u_safe ** 3
        series = 1.0 - u ** 2 / 20.0 + u ** 4 / 840.0
        out = kernel.mass * np.where(small, series, exact)
    else:
        out = kernel.mass / (1.0 + u ** 2)
    return out if out.ndim else float(out)


def fourier_coefficient_dft(kernel: KernelSpec, modes, length: float = 1.0, n_cells: int = 4096) -> np.ndarray:
    """Fourier coefficients of the periodised kernel via a DFT of cell-centre samples.

    Serves as the numerical route for kernels that do not fit inside one
    period (it is also the test oracle for the closed forms).
    """
    modes = np.atleast_1d(np.asarray(modes, dtype=int))
    dx = length / n_cells
    centers = (np.arange(n_cells) + 0.5) * dx
    offsets = np.where(centers >= 0.5 * length, centers - length, centers)
    samples = potential(kernel, offsets)
    spectrum = np.fft.fft(samples) * dx
    out = spectrum[np.mod(modes, n_cells)]
    return out.real


def periodic_fourier_coefficient(kernel: KernelSpec, modes, length: float = 1.0) -> np.ndarray:
    """Fourier coefficients at k = 2 pi l / length for use on the periodic domain.

    Falls back to the DFT of the periodised kernel (with a warning) when the
    kernel support does not fit inside one period.
    """
    modes = np.asarray(modes, dtype=int)
    support = 2.0 * kernel.radius if kernel.family == "quadratic-compact" else 16.0 * kernel.radius
    if support >= length:
        warnings.warn(
            f"kernel support {support:g} exceeds the domain length {length:g}; "
            "using the DFT of the periodised kernel",
            stacklevel=2,
        )
        return fourier_coefficient_dft(kernel, modes, length)
    return np.asarray(fourier_coefficient(kernel, 2.0 * np.pi * modes / length))


def induced_kernel_force(kernel: KernelSpec, x) -> np.ndarray | float:
    """Derivative W' of the obstacle-induced particle interaction kernel.

    W is the self-convolution of the kernel force, so W' convolves the force
    with the second derivative of the potential.  The kink of the potential at
    the origin contributes ``2 phi'(0+) phi'(x)`` exactly; the remaining smooth
    part is available in closed form for both families.  W' is odd, invariant
    under a sign flip of the kernel mass, and positive for small x > 0
    (short-range attraction) while negative on (radius, 2 radius) for the
    compact family (longer-range repulsion).
    """
    if kernel.dimension != 1:
        raise SpplabError("induced_kernel_force is defined for 1D kernels")
    x = np.asarray(x, dtype=float)
    r = kernel.radius
    if kernel.family == "quadratic-compact":
        dphi0 = force_magnitude(kernel, 0.0)  # phi'(0+)
        smooth_height = 3.0 * kernel.mass / r ** 3  # phi'' away from kinks
        out = np.asarray(
            2.0 * dphi0 * force(kernel, x)
            + smooth_height * (potential(kernel, x + r) - potential(kernel, x - r))
        )
    else:
        c2 = kernel.mass ** 2
        out = np.asarray(
            c2 / (4.0 * r ** 5) * np.exp(-np.abs(x) / r) * (2.0 * r - np.abs(x)) * np.sign(x)
        )
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class InducedKernel:
    """Sampled obstacle-induced interaction kernel W and its derivative W'."""

    source: KernelSpec
    x: np.ndarray
    w: np.ndarray
    dw: np.ndarray


def induced_kernel(kernel: KernelSpec, n_samples: int = 2001, x_max: float | None = None) -> InducedKernel:
    """Tabulate W and W' on a symmetric grid.

    W is recovered by integrating W' inward from the right edge, where W
    vanishes (exactly at 2*radius for the compact family, up to an
    exponentially small tail otherwise).
    """
    if n_samples < 3 or n_samples % 2 == 0:
        raise SpplabError("n_samples must be an odd integer >= 3")
    if x_max is None:
        x_max = 2.0 * kernel.radius if kernel.family == "quadratic-compact" else 12.0 * kernel.radius
    x = np.linspace(-x_max, x_max, n_samples)
    dw = np.asarray(induced_kernel_force(kernel, x))
    h = x[1] - x[0]
    mid = n_samples // 2
    right = dw[mid:]
    # cumulative trapezoid from the right edge: W(x) = -int_x^{xmax} W'(u) du
    tail = np.concatenate(([0.0], np.cumsum(0.5 * (right[1:] + right[:-1]) * h)))
    w_right = tail - tail[-1]
    w = np.concatenate((w_right[:0:-1], w_right))  # even extension
    return InducedKernel(kernel, x, w, dw)


def write_kernel_csv(kernel: KernelSpec, path, n_samples: int = 2001, x_max: float | None = None) -> None:
    """Dump `x,phi,dphi,W,dW` samples for plotting."""
    table = induced_kernel(kernel, n_samples=n_samples, x_max=x_max)
    phi = np.asarray(potential(kernel, table.x))
    dphi = np.asarray(force(kernel, table.x))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "phi", "dphi", "W", "dW"])
        for row in zip(table.x, phi, dphi, table.w, table.dw):
            writer.writerow([repr(float(v)) for v in row])
