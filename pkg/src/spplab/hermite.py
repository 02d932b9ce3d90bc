"""Tensor probabilists' Hermite polynomials and the Ornstein-Uhlenbeck generator.

Multi-indexed products H_i(sigma) = prod_a H_{i_a}(sigma_a) form an orthogonal
basis of the Gaussian-weighted L2 space with <H_i, H_j> = i! delta_ij.  The
generator B(h) = Laplacian_sigma h - sigma . grad_sigma h acts diagonally with
eigenvalue -|i|.  Expansions are kept as sparse coefficient maps so the
verification suite can manipulate them exactly (the recurrence factors are
integers); Gauss-Hermite quadrature and finite differences provide the
independent numerical routes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np

from .errors import SpplabError

MultiIndex = tuple[int, ...]


def multi_order(i: MultiIndex) -> int:
    return sum(i)


def multi_factorial(i: MultiIndex) -> int:
    out = 1
    for a in i:
        out *= factorial(a)
    return out


def unit_index(dims: int, axis: int) -> MultiIndex:
    e = [0] * dims
    e[axis] = 1
    return tuple(e)


def hermite_value_1d(j: int, s):
    """H_j(s) by the three-term recurrence H_{j+1} = s H_j - j H_{j-1}."""
    s = np.asarray(s, dtype=float)
    prev = np.zeros_like(s)
    cur = np.ones_like(s)
    for m in range(j):
        prev, cur = cur, s * cur - m * prev
    return cur if cur.ndim else float(cur)


def hermite_eval(i: MultiIndex, sigma) -> float | np.ndarray:
    """Tensor Hermite polynomial H_i at sigma (last axis indexes dimensions)."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.shape[-1] != len(i):
        raise SpplabError(f"sigma has {sigma.shape[-1]} components for index {i}")
    out = np.ones(sigma.shape[:-1])
    for axis, j in enumerate(i):
        if j:
            out = out * hermite_value_1d(j, sigma[..., axis])
    return out if out.ndim else float(out)


@dataclass
class HermiteExpansion:
    """Finite linear combination of tensor Hermite polynomials."""

    dims: int
    coeffs: dict[MultiIndex, float] = field(default_factory=dict)

    def __post_init__(self):
        for i in self.coeffs:
            if len(i) != self.dims or any(a < 0 for a in i):
                raise SpplabError(f"bad multi-index {i} for dims={self.dims}")
        self._prune()

    def _prune(self):
        self.coeffs = {i: c for i, c in self.coeffs.items() if c != 0.0}

    @staticmethod
    def zero(dims: int) -> "HermiteExpansion":
        return HermiteExpansion(dims, {})

    @staticmethod
    def constant(dims: int, value: float = 1.0) -> "HermiteExpansion":
        return HermiteExpansion(dims, {tuple([0] * dims): float(value)})

    def copy(self) -> "HermiteExpansion":
        return HermiteExpansion(self.dims, dict(self.coeffs))

    def add_term(self, i: MultiIndex, c: float) -> None:
        if c == 0.0:
            return
        new = self.coeffs.get(i, 0.0) + c
        if new == 0.0:
            self.coeffs.pop(i, None)
        else:
            self.coeffs[i] = new

    def __add__(self, other: "HermiteExpansion") -> "HermiteExpansion":
        out = self.copy()
        for i, c in other.coeffs.items():
            out.add_term(i, c)
        return out

    def __sub__(self, other: "HermiteExpansion") -> "HermiteExpansion":
        return self + other.scaled(-1.0)

    def scaled(self, s: float) -> "HermiteExpansion":
        return HermiteExpansion(self.dims, {i: s * c for i, c in self.coeffs.items()})

    def mul_sigma(self, axis: int) -> "HermiteExpansion":
        """Multiply by sigma_axis via s H_n = H_{n+1} + n H_{n-1}."""
        out = HermiteExpansion.zero(self.dims)
        for i, c in self.coeffs.items():
            up = list(i)
            up[axis] += 1
            out.add_term(tuple(up), c)
            if i[axis] > 0:
                down = list(i)
                down[axis] -= 1
                out.add_term(tuple(down), c * i[axis])
        return out

    def diff_sigma(self, axis: int) -> "HermiteExpansion":
        """Differentiate along sigma_axis via H_n' = n H_{n-1}."""
        out = HermiteExpansion.zero(self.dims)
        for i, c in self.coeffs.items():
            if i[axis] > 0:
                down = list(i)
                down[axis] -= 1
                out.add_term(tuple(down), c * i[axis])
        return out

    def evaluate(self, sigma) -> float | np.ndarray:
        sigma = np.asarray(sigma, dtype=float)
        out = np.zeros(sigma.shape[:-1])
        for i, c in self.coeffs.items():
            out = out + c * np.asarray(hermite_eval(i, sigma))
        return out if out.ndim else float(out)

    def inner(self, other: "HermiteExpansion") -> float:
        """Gaussian-weighted inner product, exact via <H_i, H_j> = i! delta_ij."""
        out = 0.0
        for i, c in self.coeffs.items():
            d = other.coeffs.get(i)
            if d is not None:
                out += multi_factorial(i) * c * d
        return out

    def gaussian_mean(self) -> float:
        """Integral against the unit Gaussian; the coefficient of the zero index."""
        return self.coeffs.get(tuple([0] * self.dims), 0.0)

    def coefficient_norm(self) -> float:
        if not self.coeffs:
            return 0.0
        return float(np.sqrt(sum(multi_factorial(i) * c * c for i, c in self.coeffs.items())))

    def max_order(self) -> int:
        return max((multi_order(i) for i in self.coeffs), default=0)

    def orders_present(self) -> set[int]:
        return {multi_order(i) for i in self.coeffs}


def apply_ou_generator(expansion: HermiteExpansion) -> HermiteExpansion:
    """Apply B(h) = Laplacian h - sigma . grad h: each H_i picks up -|i|."""
    return HermiteExpansion(
        expansion.dims, {i: -multi_order(i) * c for i, c in expansion.coeffs.items()}
    )


def ou_generator_pointwise(f, sigma: np.ndarray, h: float = 1e-2) -> float:
    """Finite-difference application of the generator at one point (test oracle).

    Fourth-order central stencils: exact (up to rounding) on polynomials of
    degree <= 5, so for the Hermite expansions used here the residual reflects
    only the formula being checked, not the discretisation.
    """
    sigma = np.asarray(sigma, dtype=float)
    f0 = f(sigma)
    out = 0.0
    for axis in range(len(sigma)):
        step = np.zeros_like(sigma)
        step[axis] = h
        fp1, fm1 = f(sigma + step), f(sigma - step)
        fp2, fm2 = f(sigma + 2 * step), f(sigma - 2 * step)
        second = (-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h ** 2)
        first = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h)
        out += second - sigma[axis] * first
    return out


def hermite_product(i: MultiIndex, j: MultiIndex) -> HermiteExpansion:
    """Product H_i * H_j for a first-order i and a first- or second-order j.

    Implements the two product rules
    ``H_{e_a} H_{e_b} = H_{e_a+e_b} + delta_ab``
    and
    ``H_{e_a} H_{e_b+e_c} = H_{e_a+e_b+e_c} + delta_ab H_{e_c} + delta_ac H_{e_b}``.
    Other order combinations are not supported.
    """
    if len(i) != len(j):
        raise SpplabError("multi-indices of different dimension")
    if multi_order(j) == 1 and multi_order(i) == 2:
        i, j = j, i
    if multi_order(i) != 1 or multi_order(j) not in (1, 2):
        raise SpplabError(
            f"hermite_product supports first x first/second order factors, got |i|={multi_order(i)}, |j|={multi_order(j)}"
        )
    dims = len(i)
    axis = i.index(1)
    expansion = HermiteExpansion(dims, {j: 1.0})
    return expansion.mul_sigma(axis)


def gauss_hermite_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights integrating polynomials against the standard normal."""
    nodes, weights = np.polynomial.hermite_e.hermegauss(order)
    return nodes, weights / np.sqrt(2.0 * np.pi)


def weighted_inner_product(f, g, dims: int, degree: int, order: int | None = None) -> float:
    """Gaussian-weighted inner product of two callables by tensor Gauss-Hermite.

    ``degree`` is the combined polynomial degree of f*g; the rule with
    ``order`` points per axis is exact up to degree 2*order - 1 and the call
    fails if that is not sufficient.
    """
    if order is None:
        order = degree // 2 + 1
    if degree > 2 * order - 1:
        raise SpplabError(
            f"quadrature order {order} is exact only to degree {2 * order - 1}, need {degree}"
        )
    nodes, weights = gauss_hermite_nodes(order)
    node_grids = np.meshgrid(*([nodes] * dims), indexing="ij")
    weight_grids = np.meshgrid(*([weights] * dims), indexing="ij")
    sigma = np.stack(node_grids, axis=-1).reshape(-1, dims)
    w = np.ones(len(sigma))
    for wg in weight_grids:
        w *= wg.reshape(-1)
    return float(np.sum(w * np.asarray(f(sigma)) * np.asarray(g(sigma))))
