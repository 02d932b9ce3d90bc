"""Linear stability of the uniform state: dispersion relation, stability
verdict, closed-form instability threshold, and predicted pattern size.

Plane-wave perturbations of the uniform density grow or decay with a complex
rate alpha(k).  Its real part is controlled by the competition between the
obstacle-mediated aggregation ``(gamma/eta) * (noise factor) * phi_k^2`` and
the self-repulsion pressure ``mu``; the imaginary part transports the
perturbation at (roughly) the self-propulsion speed.  With the second-order
closure a denominator ``1 + gamma^2 rho0 k^2 phi_k^2 / (eta zeta)`` rescales
both parts; it never changes the sign of the growth rate, only its size.

On the periodic unit domain the admissible wavenumbers are ``2 pi l`` with
integer l; the fastest-growing integer mode predicts the number of density
peaks and hence the pattern size 1/l.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import SpplabError
from .kernels import fourier_coefficient, periodic_fourier_coefficient
from .macro1d import MacroParams


@dataclass(frozen=True)
class DispersionPoint:
    k: float
    alpha_re: float
    alpha_im: float


@dataclass
class StabilityReport:
    stable: bool
    k_max: float
    max_growth: float
    l_max: int
    predicted_peaks: int
    predicted_pattern_size: float | None
    k: np.ndarray
    alpha_re: np.ndarray
    alpha_im: np.ndarray

    def to_json(self, path=None) -> str:
        payload = {
            "stable": self.stable,
            "k_max": self.k_max,
            "max_growth": self.max_growth,
            "l_max": self.l_max,
            "predicted_peaks": self.predicted_peaks,
            "predicted_pattern_size": self.predicted_pattern_size,
        }
        text = json.dumps(payload, indent=2, sort_keys=True)
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text + "\n")
        return text


def _noise_factor(k: np.ndarray, delta: float) -> np.ndarray:
    """(1 - exp(-delta k^2)) / delta, with its analytic k^2 limit at delta=0."""
    if delta == 0.0:
        return k ** 2
    return (1.0 - np.exp(-delta * k ** 2)) / delta


def _fourier_on_modes(params: MacroParams, k: np.ndarray, length: float = 1.0) -> np.ndarray:
    support = 2.0 * params.kernel.radius
    if params.kernel.family == "quadratic-compact" and support >= length:
        modes = np.round(k * length / (2.0 * np.pi)).astype(int)
        return periodic_fourier_coefficient(params.kernel, modes, length)
    return np.asarray(fourier_coefficient(params.kernel, k))


def dispersion(k, params: MacroParams, denominator_order: int | None = None) -> DispersionPoint | list[DispersionPoint]:
    """Complex growth rate alpha(k) of a plane-wave perturbation.

    ``denominator_order`` selects the closure variant: 1 keeps the plain
    first-order form (denominator one), 2 includes the memory-term denominator.
    Defaults to the closure order carried by the parameters.
    """
    if denominator_order is None:
        denominator_order = params.closure_order
    if denominator_order not in (1, 2):
        raise SpplabError("denominator_order must be 1 or 2")
    scalar = np.isscalar(k)
    k = np.atleast_1d(np.asarray(k, dtype=float))
    phi = _fourier_on_modes(params, k)
    numerator = (params.gamma / params.eta) * _noise_factor(k, params.delta) * phi ** 2 - params.mu
    if denominator_order == 2:
        denom = 1.0 + params.gamma ** 2 * params.rho0 / (params.eta * params.zeta) * k ** 2 * phi ** 2
    else:
        denom = np.ones_like(k)
    re = params.rho0 / params.zeta * k ** 2 * numerator / denom
    im = -k * params.c1 / denom
    points = [DispersionPoint(float(kk), float(r), float(i)) for kk, r, i in zip(k, re, im)]
    return points[0] if scalar else points


def default_mode_count(params: MacroParams) -> int:
    """Discrete modes to scan so the continuous maximum sits well inside."""
    return int(np.ceil(10.0 / (2.0 * params.kernel.radius)))


def discrete_modes(params: MacroParams, l_max: int | None = None, length: float = 1.0) -> np.ndarray:
    if l_max is None:
        l_max = default_mode_count(params)
    if l_max < 1:
        raise SpplabError("need at least one discrete mode")
    return 2.0 * np.pi * np.arange(1, l_max + 1) / length


def continuous_modes(params: MacroParams, k_max: float | None = None, n_points: int = 4001) -> np.ndarray:
    if k_max is None:
        k_max = 10.0 * np.pi / params.kernel.radius
    if n_points < 2:
        raise SpplabError("need at least two scan points")
    return np.linspace(0.0, k_max, n_points)[1:]


def is_linearly_stable(params: MacroParams, mode_set: np.ndarray) -> StabilityReport:
    """Verdict and growth-rate curve over the supplied admissible wavenumbers."""
    mode_set = np.asarray(mode_set, dtype=float)
    mode_set = mode_set[mode_set != 0.0]
    if mode_set.size == 0:
        raise SpplabError("empty mode set")
    points = dispersion(mode_set, params)
    re = np.array([p.alpha_re for p in points])
    im = np.array([p.alpha_im for p in points])
    idx = int(np.argmax(re))
    stable = bool(re[idx] <= 0.0)
    l_max = 0 if stable else max(1, int(round(mode_set[idx] / (2.0 * np.pi))))
    return StabilityReport(
        stable=stable,
        k_max=float(mode_set[idx]),
        max_growth=float(re[idx]),
        l_max=l_max,
        predicted_peaks=l_max,
        predicted_pattern_size=None if l_max == 0 else 1.0 / l_max,
        k=mode_set,
        alpha_re=re,
        alpha_im=im,
    )


def predicted_peak_count(params: MacroParams, l_max: int | None = None) -> int:
    """Fastest-growing integer mode of the zero-noise first-order growth rate.

    Returns 0 when every discrete mode decays; ties break toward the smaller
    mode index (larger pattern).
    """
    modes = discrete_modes(params, l_max)
    zero_noise = replace(params, delta=0.0, closure_order=1)
    points = dispersion(modes, zero_noise, denominator_order=1)
    re = np.array([p.alpha_re for p in points])
    if np.max(re) <= 0.0:
        return 0
    return int(np.argmax(re)) + 1


def critical_interaction_radius(params: MacroParams) -> float:
    """Interaction radius above which the uniform state is linearly stable.

    Closed forms per family (zero noise, first order): the growth maximum of
    ``(k phi_k)^2`` over continuous k equals ``(6C/(pi r))^2`` for the
    quadratic-compact family and ``(C/(2r))^2`` for the exponential family,
    so the threshold radius scales as 1/sqrt(mu eta / gamma).  At mu = 0 every
    nonzero mode grows and no finite threshold exists (returns inf).
    """
    if params.mu == 0.0:
        return float("inf")
    if params.gamma == 0.0:
        return 0.0
    bound = np.sqrt(params.mu * params.eta / params.gamma)
    c = abs(params.kernel.mass)
    if params.kernel.family == "quadratic-compact":
        return 6.0 * c / (np.pi * bound)
    return 0.5 * c / bound


def threshold_radius_by_bisection(
    params: MacroParams, r_lo: float = 1e-3, r_hi: float = 0.45, tol: float = 1e-5
) -> float:
    """Bisection on the continuous-spectrum verdict as a cross-check of the
    closed-form threshold."""

    def stable_at(radius: float) -> bool:
        p = replace(params, kernel=replace(params.kernel, radius=radius))
        return is_linearly_stable(p, continuous_modes(p)).stable

    if stable_at(r_lo) or not stable_at(r_hi):
        raise SpplabError("bisection bracket does not straddle the threshold")
    lo, hi = r_lo, r_hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if stable_at(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)
