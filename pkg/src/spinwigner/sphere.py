"""Spherical harmonics and quadrature on the unit sphere.

Conventions: theta is the polar angle from +z, phi the azimuth; harmonics
are orthonormal with the Condon-Shortley phase. Grid samples are flattened
theta-outer (row-major over ``(n_theta, n_phi)``). The sin(theta) Jacobian
lives in the quadrature weights, never in field values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

__all__ = [
    "SphereGrid",
    "SphereQuadrature",
    "paper_grid",
    "spherical_harmonic",
    "harmonic_table",
    "harmonic_index",
    "gauss_legendre",
    "product_quadrature",
    "grid_quadrature",
    "clenshaw_curtis_quadrature",
    "integrate",
]

FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True, eq=False)
class SphereGrid:
    """Tensor grid of polar angles ``theta`` and azimuths ``phi`` (radians)."""

    theta: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float)).copy()
        phi = np.atleast_1d(np.asarray(self.phi, dtype=float)).copy()
        if theta.ndim != 1 or phi.ndim != 1 or theta.size == 0 or phi.size == 0:
            raise ValueError("theta and phi must be nonempty 1-d sequences")
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(phi))):
            raise ValueError("grid angles must be finite")
        if theta[0] < 0 or theta[-1] > math.pi or np.any(np.diff(theta) <= 0):
            raise ValueError("theta nodes must be strictly increasing within [0, pi]")
        if phi[0] < 0 or phi[-1] >= 2 * math.pi or np.any(np.diff(phi) <= 0):
            raise ValueError("phi nodes must be strictly increasing within [0, 2 pi)")
        theta.setflags(write=False)
        phi.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", phi)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.theta.size, self.phi.size)

    @property
    def size(self) -> int:
        return self.theta.size * self.phi.size

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened (theta, phi) node coordinates, theta-outer."""
        th, ph = np.meshgrid(self.theta, self.phi, indexing="ij")
        return th.ravel(), ph.ravel()

    def __eq__(self, other):
        if not isinstance(other, SphereGrid):
            return NotImplemented
        return (self.shape == other.shape and np.array_equal(self.theta, other.theta)
                and np.array_equal(self.phi, other.phi))

    def __hash__(self):
        return hash((self.theta.tobytes(), self.phi.tobytes()))


def paper_grid(theta_steps: int = 60, phi_steps: int = 20) -> SphereGrid:
    """Equispaced measurement grid: theta = 0..pi inclusive, phi periodic.

    The defaults give the 61 x 20 grid (steps pi/60 and pi/10). phi stops one
    step short of 2 pi so the seam is not sampled twice.
    """
    if theta_steps < 1 or phi_steps < 1:
        raise ValueError("theta_steps and phi_steps must be >= 1")
    theta = np.linspace(0.0, np.pi, theta_steps + 1)
    phi = 2 * np.pi * np.arange(phi_steps) / phi_steps
    return SphereGrid(theta, phi)


@dataclass(frozen=True, eq=False)
class SphereQuadrature:
    """Nodes ``(theta, phi)`` with weights in steradians.

    ``grid`` is set when the nodes form a tensor grid (flattened theta-outer),
    which is what lets a ``WignerMap`` be paired with the rule.
    """

    theta: np.ndarray
    phi: np.ndarray
    weights: np.ndarray
    grid: Optional[SphereGrid] = field(default=None)

    def __post_init__(self):
        arrs = [np.asarray(a, dtype=float).ravel().copy() for a in (self.theta, self.phi, self.weights)]
        if len({a.size for a in arrs}) != 1 or arrs[0].size == 0:
            raise ValueError("theta, phi and weights must have equal nonzero length")
        if not np.all(np.isfinite(arrs[2])) or np.any(arrs[2] < 0):
            raise ValueError("quadrature weights must be finite and nonnegative")
        if self.grid is not None and self.grid.size != arrs[0].size:
            raise ValueError("grid size does not match node count")
        for name, a in zip(("theta", "phi", "weights"), arrs):
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def size(self) -> int:
        return self.weights.size

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))


def harmonic_index(k: int, q: int) -> int:
    """Flat position of (k, q) in ``harmonic_table`` output."""
    return k * k + k + q


def _legendre_normalized(kmax: int, x: np.ndarray, s: np.ndarray, q_only: Optional[int] = None):
    """Orthonormalized P_k^q(x) * sqrt((2k+1)/4pi ...) with Condon-Shortley sign.

    Returns dict (k, q) -> array for q >= 0. Standard stable recursion: sectoral
    seed along k = q, then three-term upward recursion in k.
    """
    out = {}
    pmm = np.full_like(x, 1.0 / math.sqrt(FOUR_PI))
    qs = range(kmax + 1) if q_only is None else [q_only]
    q_target = max(qs)
    for q in range(q_target + 1):
        if q > 0:
            pmm = -math.sqrt((2 * q + 1) / (2 * q)) * s * pmm
        if q not in qs:
            continue
        out[(q, q)] = pmm
        if q + 1 > kmax:
            continue
        p_prev2 = pmm
        p_prev1 = math.sqrt(2 * q + 3) * x * pmm
        out[(q + 1, q)] = p_prev1
        a_prev = math.sqrt(2 * q + 3)
        for k in range(q + 2, kmax + 1):
            a = math.sqrt((4 * k * k - 1) / (k * k - q * q))
            p = a * (x * p_prev1 - p_prev2 / a_prev)
            out[(k, q)] = p
            p_prev2, p_prev1, a_prev = p_prev1, p, a
    return out


def harmonic_table(kmax: int, theta, phi) -> np.ndarray:
    """Y_kq at every (theta, phi) pair, shape ((kmax+1)**2, n).

    Row ``harmonic_index(k, q)`` holds Y_kq. ``theta`` and ``phi`` broadcast.
    """
    if kmax < 0:
        raise ValueError("kmax must be >= 0")
    theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    theta, phi = theta.ravel(), phi.ravel()
    x, s = np.cos(theta), np.sin(theta)
    plm = _legendre_normalized(kmax, x, s)
    table = np.empty(((kmax + 1) ** 2, theta.size), dtype=complex)
    for k in range(kmax + 1):
        table[harmonic_index(k, 0)] = plm[(k, 0)]
        for q in range(1, k + 1):
            y = plm[(k, q)] * np.exp(1j * q * phi)
            table[harmonic_index(k, q)] = y
            table[harmonic_index(k, -q)] = (-1) ** q * np.conj(y)
    return table


def spherical_harmonic(k, q: int, theta, phi):
    """Orthonormal Y_kq(theta, phi) with Condon-Shortley phase.

    ``k`` may be an int or an integer-valued ``HalfInt``. Scalars in give a
    complex scalar out; arrays broadcast.
    """
    k = int(k)
    q = int(q)
    if k < 0:
        raise ValueError("k must be >= 0")
    if abs(q) > k:
        raise ValueError(f"|q| = {abs(q)} exceeds k = {k}")
    scalar = np.ndim(theta) == 0 and np.ndim(phi) == 0
    theta, phi = np.broadcast_arrays(np.asarray(theta, dtype=float), np.asarray(phi, dtype=float))
    aq = abs(q)
    plm = _legendre_normalized(k, np.cos(theta), np.sin(theta), q_only=aq)[(k, aq)]
    y = plm * np.exp(1j * aq * phi)
    if q < 0:
        y = (-1) ** aq * np.conj(y)
    return complex(y) if scalar else y


def _legendre_with_derivative(n: int, x: np.ndarray):
    p0, p1 = np.ones_like(x), x.copy()
    if n == 0:
        return p0, np.zeros_like(x)
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


def gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre nodes (ascending, in (-1, 1)) and weights.

    Roots are located by Newton iteration safeguarded with Bruns' bracket
    (k - 1/2) pi/(n + 1/2) < arccos x_k < k pi/(n + 1/2); any step leaving the
    bracket falls back to bisection.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n == 1:
        return np.array([0.0]), np.array([2.0])
    k = np.arange(1, n + 1)
    # bracket in x (descending roots as k grows)
    hi = np.cos((k - 0.5) * np.pi / (n + 0.5))
    lo = np.cos(k * np.pi / (n + 0.5))
    x = np.cos((k - 0.25) * np.pi / (n + 0.5))
    p_hi, _ = _legendre_with_derivative(n, hi)
    for _ in range(100):
        p, dp = _legendre_with_derivative(n, x)
        # shrink brackets using the sign of P_n
        same = np.sign(p) == np.sign(p_hi)
        hi = np.where(same, x, hi)
        p_hi = np.where(same, p, p_hi)
        lo = np.where(same, lo, x)
        x_new = x - p / dp
        outside = (x_new <= lo) | (x_new >= hi)
        x_new = np.where(outside, 0.5 * (lo + hi), x_new)
        dx = np.abs(x_new - x)
        x = x_new
        if np.all(dx < 1e-15):
            break
    _, dp = _legendre_with_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)
    x = x[::-1]
    w = w[::-1]
    # exact mirror symmetry
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return x, w


def product_quadrature(n_theta: int, n_phi: int) -> SphereQuadrature:
    """Gauss-Legendre in cos(theta) times the uniform periodic rule in phi.

    Exact for spherical polynomials of harmonic degree <= min(2 n_theta - 1, n_phi - 1).
    """
    if n_theta < 1 or n_phi < 1:
        raise ValueError("n_theta and n_phi must be >= 1")
    x, w = gauss_legendre(n_theta)
    theta = np.arccos(x[::-1])
    wt = w[::-1]
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    grid = SphereGrid(theta, phi)
    th, ph = grid.points()
    weights = np.repeat(wt, n_phi) * (2 * np.pi / n_phi)
    return SphereQuadrature(th, ph, weights, grid)


def _phi_weights(phi: np.ndarray) -> np.ndarray:
    # periodic trapezoid; reduces to 2 pi / n on uniform grids
    gaps = np.diff(np.concatenate([phi, [phi[0] + 2 * np.pi]]))
    return 0.5 * (gaps + np.roll(gaps, 1))


def grid_quadrature(grid: SphereGrid) -> SphereQuadrature:
    """Composite trapezoid in theta (sin Jacobian folded in), periodic rule in phi.

    Second-order accurate; meant for fields sampled on measurement grids.
    Pole nodes get zero weight.
    """
    if grid.theta.size < 2 or grid.phi.size < 2:
        raise ValueError("grid_quadrature needs at least 2 theta and 2 phi nodes")
    theta = grid.theta
    h = np.diff(theta)
    wt = np.zeros_like(theta)
    wt[:-1] += 0.5 * h
    wt[1:] += 0.5 * h
    wt *= np.sin(theta)
    wt = np.clip(wt, 0.0, None)
    th, ph = grid.points()
    weights = np.outer(wt, _phi_weights(grid.phi)).ravel()
    return SphereQuadrature(th, ph, weights, grid)


def _clenshaw_curtis_weights(n: int) -> np.ndarray:
    # weights for x_k = cos(k pi / n), k = 0..n
    theta = np.pi * np.arange(n + 1) / n
    w = np.zeros(n + 1)
    inner = np.arange(1, n)
    v = np.ones(n - 1)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n * n - 1)
        for k in range(1, n // 2):
            v -= 2 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
        v -= np.cos(n * theta[inner]) / (n * n - 1)
    else:
        w[0] = w[n] = 1.0 / (n * n)
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2 * np.cos(2 * k * theta[inner]) / (4 * k * k - 1)
    w[inner] = 2 * v / n
    return w


def clenshaw_curtis_quadrature(grid: SphereGrid) -> SphereQuadrature:
    """Clenshaw-Curtis rule on an equispaced theta grid that includes both poles.

    Equispaced theta with endpoints 0 and pi are exactly the Chebyshev
    extreme points in cos(theta), so the n_theta-node rule integrates
    polynomials in cos(theta) up to degree n_theta - 1 exactly. Combined with
    the uniform phi rule this is exact for harmonic degree
    <= min(n_theta - 1, n_phi - 1) on the very grid a measurement uses.
    """
    n = grid.theta.size - 1
    if n < 1 or grid.phi.size < 1:
        raise ValueError("Clenshaw-Curtis needs at least 2 theta nodes")
    expected = np.pi * np.arange(n + 1) / n
    if not np.allclose(grid.theta, expected, rtol=0, atol=1e-12):
        raise ValueError("Clenshaw-Curtis needs equispaced theta from 0 to pi inclusive")
    wt = _clenshaw_curtis_weights(n)
    th, ph = grid.points()
    weights = np.outer(wt, _phi_weights(grid.phi)).ravel()
    return SphereQuadrature(th, ph, weights, grid)


Field = Union[np.ndarray, Callable[[np.ndarray, np.ndarray], np.ndarray]]


def integrate(fn: Field, quad: SphereQuadrature):
    """Sum of w_i f(node_i).

    ``fn`` is either a vectorized callable ``f(theta, phi)`` or samples at
    the quadrature nodes (any shape with ``quad.size`` elements). Non-finite
    field values raise ValueError.
    """
    if callable(fn):
        values = np.asarray(fn(quad.theta, quad.phi))
        values = np.broadcast_to(values, quad.theta.shape)
    else:
        values = np.asarray(fn).ravel()
        if values.size != quad.size:
            raise ValueError(f"field has {values.size} samples, quadrature has {quad.size} nodes")
    if not np.all(np.isfinite(values)):
        raise ValueError("field contains non-finite values")
    total = np.dot(quad.weights, values)
    return complex(total) if np.iscomplexobj(total) else float(total)
