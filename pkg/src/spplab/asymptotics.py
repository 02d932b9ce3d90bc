"""Verification machinery for the stiff-spring obstacle closure.

The macroscopic obstacle density is derived by expanding the obstacle
distribution in the spring-relaxation ratio and, within each order, in the
square root of the rescaled noise.  The resulting coefficient functions are
explicit Hermite-polynomial expressions in the rescaled displacement; this
module rebuilds them, applies the Ornstein-Uhlenbeck generator symbolically,
and checks the defining equations in coefficient space.  The closure's moment
formulas (divergence form), the explicit first-order solution available for
conservative drift fields, the det-Jacobian form of the density, and a brute
force Monte-Carlo simulation of the tethered-obstacle ensemble provide
independent numerical routes to the same quantities.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import DensityField, Grid1D, RngStream
from .errors import SpplabError
from .hermite import HermiteExpansion, apply_ou_generator, unit_index
from .kernels import KernelSpec, potential
from .macro1d import MacroParams, obstacle_closure_first_order


# ---------------------------------------------------------------------------
# external velocity fields with analytic derivatives
# ---------------------------------------------------------------------------


@dataclass
class VelocityField:
    """Smooth velocity field with evaluable derivatives.

    ``grad(y, t)[a, b]`` is the derivative of component b along axis a and
    ``hessian(y, t)[a, b, c]`` the second derivative of component c along
    axes a and b.  ``potential`` is set when the field is a gradient.
    """

    dims: int
    value: Callable[[np.ndarray, float], np.ndarray]
    grad: Callable[[np.ndarray, float], np.ndarray]
    hessian: Callable[[np.ndarray, float], np.ndarray]
    time_derivative: Callable[[np.ndarray, float], np.ndarray]
    conservative: bool = False
    potential: Callable[[np.ndarray, float], float] | None = None

    def curl_residual(self, points: np.ndarray, t: float = 0.0, h: float = 1e-4) -> float:
        """Max antisymmetric part of the finite-difference Jacobian, relative
        to the Jacobian magnitude (0 iff curl-free).

        Fourth-order central differences keep the truncation error of the
        antisymmetric part below the quoted tolerance for trigonometric
        fields; normalising by the Jacobian scale makes the measure
        amplitude-independent.
        """
        worst = 0.0
        scale = 0.0
        for y in np.atleast_2d(points):
            jac = np.zeros((self.dims, self.dims))
            for a in range(self.dims):
                step = np.zeros(self.dims)
                step[a] = h
                jac[a] = (
                    -self.value(y + 2 * step, t)
                    + 8.0 * self.value(y + step, t)
                    - 8.0 * self.value(y - step, t)
                    + self.value(y - 2 * step, t)
                ) / (12.0 * h)
            worst = max(worst, float(np.max(np.abs(jac - jac.T))))
            scale = max(scale, float(np.max(np.abs(jac))))
        return worst / scale if scale > 0 else worst


def trig_velocity_field(dims: int, n_waves: int = 3, seed: int = 0, time_scale: float = 1.0) -> VelocityField:
    """Random trigonometric velocity field (generally not conservative)."""
    rng = np.random.default_rng(seed)
    amps = rng.uniform(-1.0, 1.0, size=(n_waves, dims))
    wavevecs = rng.integers(1, 4, size=(n_waves, dims)).astype(float)
    phases = rng.uniform(0.0, 2 * np.pi, size=n_waves)
    omegas = time_scale * rng.uniform(0.5, 1.5, size=n_waves)
    tphases = rng.uniform(0.0, 2 * np.pi, size=n_waves)
    two_pi = 2.0 * np.pi

    def value(y, t=0.0):
        y = np.asarray(y, dtype=float)
        out = np.zeros(dims)
        for w in range(n_waves):
            arg = two_pi * np.dot(wavevecs[w], y) + phases[w]
            out += amps[w] * np.cos(arg) * np.cos(omegas[w] * t + tphases[w])
        return out

    def grad(y, t=0.0):
        y = np.asarray(y, dtype=float)
        out = np.zeros((dims, dims))
        for w in range(n_waves):
            arg = two_pi * np.dot(wavevecs[w], y) + phases[w]
            out += -two_pi * np.outer(wavevecs[w], amps[w]) * np.sin(arg) * np.cos(
                omegas[w] * t + tphases[w]
            )
        return out

    def hessian(y, t=0.0):
        y = np.asarray(y, dtype=float)
        out = np.zeros((dims, dims, dims))
        for w in range(n_waves):
            arg = two_pi * np.dot(wavevecs[w], y) + phases[w]
            out += (
                -(two_pi ** 2)
                * np.einsum("a,b,c->abc", wavevecs[w], wavevecs[w], amps[w])
                * np.cos(arg)
                * np.cos(omegas[w] * t + tphases[w])
            )
        return out

    def time_derivative(y, t=0.0):
        y = np.asarray(y, dtype=float)
        out = np.zeros(dims)
        for w in range(n_waves):
            arg = two_pi * np.dot(wavevecs[w], y) + phases[w]
            out += -amps[w] * np.cos(arg) * omegas[w] * np.sin(omegas[w] * t + tphases[w])
        return out

    return VelocityField(dims, value, grad, hessian, time_derivative)


def constant_velocity_field(v: np.ndarray) -> VelocityField:
    v = np.asarray(v, dtype=float)
    dims = len(v)
    return VelocityField(
        dims,
        value=lambda y, t=0.0: v.copy(),
        grad=lambda y, t=0.0: np.zeros((dims, dims)),
        hessian=lambda y, t=0.0: np.zeros((dims, dims, dims)),
        time_derivative=lambda y, t=0.0: np.zeros(dims),
    )


def linear_velocity_field(matrix: np.ndarray) -> VelocityField:
    """v(y) = A^T y, i.e. v_b = sum_a A[a, b] y_a."""
    a = np.asarray(matrix, dtype=float)
    dims = a.shape[0]

    return VelocityField(
        dims,
        value=lambda y, t=0.0: np.asarray(y, dtype=float) @ a,
        grad=lambda y, t=0.0: a.copy(),
        hessian=lambda y, t=0.0: np.zeros((dims, dims, dims)),
        time_derivative=lambda y, t=0.0: np.zeros(dims),
    )


def gradient_trig_field(dims: int, n_waves: int = 3, seed: int = 0) -> VelocityField:
    """Conservative field: the gradient of a random trigonometric potential."""
    rng = np.random.default_rng(seed)
    coeffs = rng.uniform(-1.0, 1.0, size=n_waves)
    wavevecs = rng.integers(1, 4, size=(n_waves, dims)).astype(float)
    phases = rng.uniform(0.0, 2 * np.pi, size=n_waves)
    two_pi = 2.0 * np.pi

    def pot(y, t=0.0):
        y = np.asarray(y, dtype=float)
        return float(sum(coeffs[w] * np.cos(two_pi * np.dot(wavevecs[w], y) + phases[w]) for w in range(n_waves)))

    def value(y, t=0.0):
        y = np.asarray(y, dtype=float)
        out = np.zeros(dims)
        for w in range(n_waves):
            arg = two_pi * np.dot(wavevecs[w], y) + phases[w]
            out += -two_pi * coeffs[w] * wavevecs[w] * np.sin(arg)
        return out

    def grad(y, t=0.0):
        y = np.asarray(y, dtype=float)
        out = np.zeros((dims, dims))
        for w in range(n_waves):
            arg = two_pi * np.dot(wavevecs[w], y) + phases[w]
            out += -(two_pi ** 2) * coeffs[w] * np.outer(wavevecs[w], wavevecs[w]) * np.cos(arg)
        return out

    def hessian(y, t=0.0):
        y = np.asarray(y, dtype=float)
        out = np.zeros((dims, dims, dims))
        for w in range(n_waves):
            arg = two_pi * np.dot(wavevecs[w], y) + phases[w]
            out += (
                (two_pi ** 3)
                * coeffs[w]
                * np.einsum("a,b,c->abc", wavevecs[w], wavevecs[w], wavevecs[w])
                * np.sin(arg)
            )
        return out

    def time_derivative(y, t=0.0):
        return np.zeros(dims)

    return VelocityField(dims, value, grad, hessian, time_derivative, conservative=True, potential=pot)


# ---------------------------------------------------------------------------
# expansion solutions and residuals in Hermite coefficient space
# ---------------------------------------------------------------------------

EXPANSION_ORDERS = ((1, 0), (1, 1), (1, 2), (2, 0), (2, 1))


def expansion_solutions(field: VelocityField, y, t: float = 0.0) -> dict[tuple[int, int], HermiteExpansion]:
    """Closed-form perturbation solutions, keyed by (stiffness order, noise sub-order).

    All velocity derivatives are evaluated at the anchor point y.
    """
    y = np.asarray(y, dtype=float)
    n = field.dims
    v = field.value(y, t)
    dv = field.grad(y, t)
    d2v = field.hessian(y, t)
    vt = field.time_derivative(y, t)
    e = [unit_index(n, a) for a in range(n)]

    sols: dict[tuple[int, int], HermiteExpansion] = {}

    h10 = HermiteExpansion.zero(n)
    for i in range(n):
        h10.add_term(e[i], v[i])
    sols[(1, 0)] = h10

    h11 = HermiteExpansion.zero(n)
    for k in range(n):
        for j in range(n):
            idx = tuple(np.add(e[k], e[j]))
            h11.add_term(idx, 0.5 * dv[k, j])
    sols[(1, 1)] = h11

    h12 = HermiteExpansion.zero(n)
    for k in range(n):
        lap = sum(d2v[i, i, k] for i in range(n))
        h12.add_term(e[k], 0.5 * lap)
        for i in range(n):
            for j in range(n):
                idx = tuple(np.add(np.add(e[k], e[i]), e[j]))
                h12.add_term(idx, 0.5 / 3.0 * d2v[i, j, k])
    sols[(1, 2)] = h12

    h20 = HermiteExpansion.zero(n)
    for k in range(n):
        for j in range(n):
            idx = tuple(np.add(e[k], e[j]))
            h20.add_term(idx, 0.5 * v[k] * v[j])
    sols[(2, 0)] = h20

    h21 = HermiteExpansion.zero(n)
    for k in range(n):
        advect = sum(v[i] * dv[i, k] for i in range(n))
        h21.add_term(e[k], -vt[k] + advect)
        for i in range(n):
            for j in range(n):
                idx = tuple(np.add(np.add(e[k], e[i]), e[j]))
                h21.add_term(idx, 0.5 * v[i] * dv[k, j])
    sols[(2, 1)] = h21
    return sols


def expansion_rhs(
    field: VelocityField, y, t: float = 0.0, solutions: dict | None = None
) -> dict[tuple[int, int], HermiteExpansion]:
    """Right-hand sides of the order-by-order generator equations.

    Built independently of the closed-form solutions via the exact
    multiply-by-sigma and differentiate recurrences, so comparing
    ``B(solution)`` against these is a genuine check of the formulas.
    """
    y = np.asarray(y, dtype=float)
    n = field.dims
    v = field.value(y, t)
    dv = field.grad(y, t)
    d2v = field.hessian(y, t)
    vt = field.time_derivative(y, t)
    if solutions is None:
        solutions = expansion_solutions(field, y, t)
    one = HermiteExpansion.constant(n)

    def sigma_monomial(axes: tuple[int, ...]) -> HermiteExpansion:
        out = one.copy()
        for a in axes:
            out = out.mul_sigma(a)
        return out

    rhs: dict[tuple[int, int], HermiteExpansion] = {}

    # order (1,0): -v . sigma
    r = HermiteExpansion.zero(n)
    for k in range(n):
        r = r + sigma_monomial((k,)).scaled(-v[k])
    rhs[(1, 0)] = r

    # order (1,1): div(v) - sigma_k sigma_i d_k v_i
    r = one.scaled(float(np.trace(dv)))
    for k in range(n):
        for i in range(n):
            r = r + sigma_monomial((k, i)).scaled(-dv[k, i])
    rhs[(1, 1)] = r

    # order (1,2): sigma_k d_ki v_i - (1/2) sigma_k sigma_i sigma_j d_ij v_k
    r = HermiteExpansion.zero(n)
    for k in range(n):
        r = r + sigma_monomial((k,)).scaled(float(sum(d2v[k, i, i] for i in range(n))))
        for i in range(n):
            for j in range(n):
                r = r + sigma_monomial((k, i, j)).scaled(-0.5 * d2v[i, j, k])
    rhs[(1, 2)] = r

    def drift_applied(h: HermiteExpansion, coeff_of_axis) -> HermiteExpansion:
        """sum_k coeff_k * (d_sigma_k h - sigma_k h) with expansion coefficients."""
        out = HermiteExpansion.zero(n)
        for k in range(n):
            piece = h.diff_sigma(k) - h.mul_sigma(k)
            out = out + coeff_of_axis(k, piece)
        return out

    h10 = solutions[(1, 0)]
    h11 = solutions[(1, 1)]

    # order (2,0): v . (grad_sigma h10 - sigma h10)
    rhs[(2, 0)] = drift_applied(h10, lambda k, piece: piece.scaled(v[k]))

    # order (2,1): dt h10 + div(v) h10
    #              + (sigma . grad v) . (grad_sigma h10 - sigma h10)
    #              + v . (grad_sigma h11 - sigma h11)
    r = HermiteExpansion.zero(n)
    for i in range(n):
        r.add_term(unit_index(n, i), vt[i])
    r = r + h10.scaled(float(np.trace(dv)))
    for j in range(n):
        piece = h10.diff_sigma(j) - h10.mul_sigma(j)
        for k in range(n):
            r = r + piece.mul_sigma(k).scaled(dv[k, j])
    r = r + drift_applied(h11, lambda k, piece: piece.scaled(v[k]))
    rhs[(2, 1)] = r
    return rhs


def perturbation_solution_residuals(field: VelocityField, y, t: float = 0.0) -> dict[tuple[int, int], float]:
    """Coefficient-space norms of B(solution) - rhs for every expansion order."""
    sols = expansion_solutions(field, y, t)
    rhs = expansion_rhs(field, y, t, sols)
    return {
        key: (apply_ou_generator(sols[key]) - rhs[key]).coefficient_norm()
        for key in EXPANSION_ORDERS
    }


def zero_mean_defects(field: VelocityField, y, t: float = 0.0) -> dict[tuple[int, int], float]:
    """Gaussian means of the solutions; all must vanish for mass consistency."""
    sols = expansion_solutions(field, y, t)
    return {key: abs(sol.gaussian_mean()) for key, sol in sols.items()}


def parity_ok(order: tuple[int, int], expansion: HermiteExpansion) -> bool:
    """Order (r, k) solutions contain only the allowed Hermite degrees.

    First-order (r=1) coefficients carry degrees of parity opposite to k with
    degree <= k+1; second-order (r=2) carry matching parity with degree <= k+2.
    """
    r, k = order
    max_deg = k + 1 if r == 1 else k + 2
    want_parity = (k + 1) % 2 if r == 1 else k % 2
    return all(
        sum(i) <= max_deg and sum(i) % 2 == want_parity for i in expansion.coeffs
    )


# ---------------------------------------------------------------------------
# moment formulas on periodic grids (spectral differentiation)
# ---------------------------------------------------------------------------


def _spectral_axis_derivative(values: np.ndarray, axis: int, length: float) -> np.ndarray:
    n = values.shape[axis]
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=length / n)
    shape = [1] * values.ndim
    shape[axis] = n
    mult = (1j * k).reshape(shape)
    return np.real(np.fft.ifft(np.fft.fft(values, axis=axis) * mult, axis=axis))


def moment_densities_1d(
    v: np.ndarray, dv_dt: np.ndarray | None = None, length: float = 1.0, delta: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """First- and second-order obstacle density corrections for a 1D drift.

    First order: -dv/dx - (delta/2) d3v/dx3.  Second order:
    (1/2) d/dx [v dv/dx - v dv/dx] + d/dx dv_dt -- the bracket cancels
    identically in 1D but is kept for structural fidelity with the 2D form.
    """
    v = np.asarray(v, dtype=float)
    div = _spectral_axis_derivative(v, 0, length)
    rho1 = -div - 0.5 * delta * _spectral_axis_derivative(
        _spectral_axis_derivative(div, 0, length), 0, length
    )
    bracket = v * div - v * div
    rho2 = 0.5 * _spectral_axis_derivative(bracket, 0, length)
    if dv_dt is not None:
        rho2 = rho2 + _spectral_axis_derivative(np.asarray(dv_dt, dtype=float), 0, length)
    return rho1, rho2


def moment_densities_2d(
    v: np.ndarray, dv_dt: np.ndarray | None = None, length: float = 1.0, delta: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Same as :func:`moment_densities_1d` for a 2D drift ``v[c, i, j]``."""
    v = np.asarray(v, dtype=float)
    if v.ndim != 3 or v.shape[0] != 2:
        raise SpplabError("expected v with shape (2, nx, ny)")

    def dd(values, axis):
        return _spectral_axis_derivative(values, axis, length)

    div = dd(v[0], 0) + dd(v[1], 1)
    laplace_div = dd(dd(div, 0), 0) + dd(dd(div, 1), 1)
    rho1 = -div - 0.5 * delta * laplace_div

    advect = np.stack([v[0] * dd(v[c], 0) + v[1] * dd(v[c], 1) for c in range(2)])
    bracket = v * div[None, :, :] - advect
    rho2 = 0.5 * (dd(bracket[0], 0) + dd(bracket[1], 1))
    if dv_dt is not None:
        dv_dt = np.asarray(dv_dt, dtype=float)
        rho2 = rho2 + dd(dv_dt[0], 0) + dd(dv_dt[1], 1)
    return rho1, rho2


# ---------------------------------------------------------------------------
# explicit first-order solution for conservative drifts
# ---------------------------------------------------------------------------


def _gaussian(z: np.ndarray, delta: float) -> np.ndarray:
    return np.exp(-(z ** 2) / (2.0 * delta)) / np.sqrt(2.0 * np.pi * delta)


@dataclass
class IdentityCheck:
    max_residual: float
    max_mass_defect: float


def conservative_f1_profile(
    potential_fn, delta: float, y: float, x: np.ndarray
) -> np.ndarray:
    """First-order distribution for a conservative drift with potential V.

    f1(x, y) = M_delta(x - y) [V(x) - (M_delta * V)(y)] / delta, evaluated on
    the given x window; the smoothed potential at the anchor is computed by
    quadrature over the same window.
    """
    if delta <= 0:
        raise SpplabError("delta must be positive")
    x = np.asarray(x, dtype=float)
    vx = np.asarray(potential_fn(x), dtype=float)
    weights = _gaussian(y - x, delta)
    smoothed_at_y = np.trapezoid(weights * vx, x)
    return _gaussian(x - y, delta) / delta * (vx - smoothed_at_y)


def conservative_identity_residual(
    potential_fn,
    drift_fn,
    delta: float,
    n_x: int = 4096,
    n_y: int = 12,
    derivative: str = "spectral",
) -> IdentityCheck:
    """Residual of (x - y) f1 + delta * df1/dx = M_delta(x - y) v(x).

    f1 is built on a window of +-12 standard deviations around each anchor,
    where it decays below rounding, so the window can be treated as periodic
    for the spectral derivative; ``derivative="fd2"`` switches to central
    differences for convergence studies.
    """
    if delta <= 0:
        raise SpplabError("delta must be positive")
    half_width = 12.0 * np.sqrt(delta)
    worst_residual = 0.0
    worst_mass = 0.0
    for y in (np.arange(n_y) + 0.5) / n_y:
        x = y + np.linspace(-half_width, half_width, n_x, endpoint=False)
        h = x[1] - x[0]
        f1 = conservative_f1_profile(potential_fn, delta, y, x)
        if derivative == "spectral":
            k = 2.0 * np.pi * np.fft.rfftfreq(n_x, d=h)
            df1 = np.fft.irfft(np.fft.rfft(f1) * (1j * k), n=n_x)
        elif derivative == "fd2":
            df1 = (np.roll(f1, -1) - np.roll(f1, 1)) / (2.0 * h)
        else:
            raise SpplabError(f"unknown derivative scheme {derivative!r}")
        residual = (x - y) * f1 + delta * df1 - _gaussian(x - y, delta) * np.asarray(drift_fn(x))
        worst_residual = max(worst_residual, float(np.max(np.abs(residual))))
        worst_mass = max(worst_mass, abs(float(np.trapezoid(f1, x))))
    return IdentityCheck(worst_residual, worst_mass)


# ---------------------------------------------------------------------------
# det-Jacobian form of the obstacle density
# ---------------------------------------------------------------------------


def jacobian_density_1d(rho_g: DensityField, params: MacroParams) -> DensityField:
    """In 1D the volume-deformation determinant reduces exactly to the
    first-order closure, so this shares its code path (bitwise identical)."""
    return obstacle_closure_first_order(rho_g, params)


def convolve_2d(rho: np.ndarray, kernel: KernelSpec, length: float = 1.0) -> np.ndarray:
    """Periodic 2D convolution of a square field with a radial kernel."""
    if kernel.dimension != 2:
        raise SpplabError("convolve_2d needs a 2D kernel")
    n = rho.shape[0]
    if rho.shape != (n, n):
        raise SpplabError("expected a square field")
    dx = length / n
    offs = np.where(np.arange(n) >= n - n // 2, np.arange(n) - n, np.arange(n)) * dx
    xx, yy = np.meshgrid(offs, offs, indexing="ij")
    samples = np.asarray(potential(kernel, np.stack([xx, yy], axis=-1)))
    return np.real(np.fft.ifft2(np.fft.fft2(rho) * np.fft.fft2(samples))) * dx * dx


def hessian_2d(values: np.ndarray, length: float = 1.0) -> np.ndarray:
    """Spectral Hessian of a square periodic field, shape (2, 2, n, n)."""
    out = np.empty((2, 2) + values.shape)
    for a in range(2):
        for b in range(2):
            out[a, b] = _spectral_axis_derivative(
                _spectral_axis_derivative(values, a, length), b, length
            )
    return out


def jacobian_density_2d(rho_bar: np.ndarray, gamma: float, eta: float, length: float = 1.0) -> np.ndarray:
    """det(I + (gamma/eta) Hessian(rho_bar)) on a periodic 2D grid."""
    h = hessian_2d(rho_bar, length) * (gamma / eta)
    return (1.0 + h[0, 0]) * (1.0 + h[1, 1]) - h[0, 1] * h[1, 0]


def quadratic_volume_term_2d(rho_bar: np.ndarray, length: float = 1.0) -> np.ndarray:
    """Nonlinear volume-deformation term ((tr H)^2 - H:H) / 2 of a 2D field."""
    h = hessian_2d(rho_bar, length)
    trace = h[0, 0] + h[1, 1]
    frobenius = np.einsum("ab...,ab...->...", h, h)
    return 0.5 * (trace ** 2 - frobenius)


# ---------------------------------------------------------------------------
# Monte-Carlo oracle: tethered obstacles in a frozen drift
# ---------------------------------------------------------------------------


@dataclass
class OuEnsembleResult:
    grid: Grid1D
    rho_f: np.ndarray
    n_samples: int
    displacement_mean: float
    displacement_var: float


def drift_from_field(field: DensityField):
    """Periodic linear interpolant of a gridded drift, usable as a callable."""
    grid = field.grid
    xp = np.concatenate(([grid.centers[-1] - grid.length], grid.centers, [grid.centers[0] + grid.length]))
    fp = np.concatenate(([field.values[-1]], field.values, [field.values[0]]))
    return lambda x: np.interp(x, xp, fp)


def ou_ensemble_density(
    drift,
    gamma: float,
    delta: float,
    n_anchors: int,
    t_final: float,
    seed: int = 0,
    dt: float | None = None,
    burn_in: float | None = None,
    n_bins: int = 64,
    sample_stride: int | None = None,
    length: float = 1.0,
) -> OuEnsembleResult:
    """Euler-Maruyama ensemble of tethered obstacles in a frozen drift.

    Anchors are equally spaced (unit anchor density without sampling noise);
    after a burn-in of several relaxation times, positions are pooled into a
    periodic histogram normalised to domain mean one.  The relaxation time is
    gamma, so dt must resolve it.
    """
    if gamma <= 0 or delta < 0:
        raise SpplabError("gamma must be positive and delta non-negative")
    if n_bins < 8:
        raise SpplabError("n_bins must be at least 8")
    if dt is None:
        dt = gamma / 50.0
    if dt > gamma / 10.0:
        raise SpplabError(f"dt={dt:g} does not resolve the relaxation time gamma={gamma:g}")
    if burn_in is None:
        burn_in = 10.0 * gamma
    if sample_stride is None:
        sample_stride = max(1, int(round(gamma / dt)))
    if t_final <= burn_in:
        raise SpplabError("t_final must exceed the burn-in window")
    if drift is None:
        drift = lambda x: np.zeros_like(x)

    rng = RngStream(seed)
    anchors = (np.arange(n_anchors) + 0.5) * (length / n_anchors)
    positions = anchors + np.sqrt(delta) * rng.normals(step=0, substream=1, shape=n_anchors)
    noise_scale = np.sqrt(2.0 * delta * dt / gamma)

    n_steps = int(round(t_final / dt))
    burn_steps = int(round(burn_in / dt))
    counts = np.zeros(n_bins)
    n_samples = 0
    disp_sum = 0.0
    disp_sq_sum = 0.0
    edges_scale = n_bins / length
    for step in range(1, n_steps + 1):
        displacement = positions - anchors
        velocity = -displacement / gamma + drift(np.mod(positions, length))
        positions = positions + dt * velocity
        if delta > 0:
            positions = positions + noise_scale * rng.normals(step=step, substream=2, shape=n_anchors)
        if step > burn_steps and (step - burn_steps) % sample_stride == 0:
            wrapped = np.mod(positions, length)
            idx = np.minimum((wrapped * edges_scale).astype(np.int64), n_bins - 1)
            counts += np.bincount(idx, minlength=n_bins)
            n_samples += n_anchors
            d = positions - anchors
            disp_sum += float(np.sum(d))
            disp_sq_sum += float(np.sum(d * d))

    if n_samples == 0:
        raise SpplabError("no samples collected; increase t_final")
    rho = counts * n_bins / n_samples  # histogram density, domain mean one
    mean = disp_sum / n_samples
    var = disp_sq_sum / n_samples - mean ** 2
    return OuEnsembleResult(
        grid=Grid1D(n_bins, length),
        rho_f=rho,
        n_samples=n_samples,
        displacement_mean=mean,
        displacement_var=var,
    )
