"""The spherical Wigner function of a spin-j state.

Forward map
    W(theta, phi) = sqrt(2/pi) * sum_{k<=2j} sum_q Y_kq(theta, phi) rho_kq

Single-axis reconstruction from spin-projection probabilities
    W(theta, phi) = sqrt(2/pi) * sum_m p_m(theta, phi) R_mj

Every functional constant below follows from the sqrt(2/pi) prefactor and
the orthonormality of the multipole basis, sum_{mm'} t^{jmm'}_{kq} t^{jmm'}_{k'q'}
= delta_kk' delta_qq':

* int W dOmega       = sqrt(2/pi) sqrt(4 pi) rho_00 = sqrt(8/(2j+1))
* int W1 W2 dOmega   = (2/pi) sum_kq rho1_kq conj(rho2_kq) = (2/pi) Tr(rho1 rho2)
* int n_z W dOmega   = sqrt(2/pi) sqrt(4 pi/3) rho_10, with
  rho_10 = <Jz> sqrt(3 / (j(j+1)(2j+1))), hence <J_i> = sqrt(j(j+1)(2j+1)/8) int n_i W.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from .angular import HalfInt, reconstruction_weights
from .sphere import (SphereGrid, SphereQuadrature, harmonic_index, harmonic_table,
                     integrate, paper_grid)
from .state import (DensityMatrix, MultipoleDecomposition, multipole_to_rho,
                    rho_to_multipole, uhlmann_fidelity)

__all__ = [
    "WIGNER_PREFACTOR",
    "TRACE_PRODUCT_FACTOR",
    "angular_momentum_factor",
    "normalization_target",
    "WignerMap",
    "ProbabilityGrid",
    "WignerMin",
    "wigner_from_rho",
    "wigner_evaluator",
    "wigner_point",
    "reconstruct",
    "rho_from_wigner",
    "fit_multipoles",
    "normalization",
    "trace_product",
    "wigner_purity",
    "wigner_fidelity_to_pure",
    "wigner_fidelity",
    "wigner_min",
    "wigner_max",
    "angular_momentum",
    "qubit_wigner_closed_form",
]

log = logging.getLogger(__name__)

WIGNER_PREFACTOR = math.sqrt(2.0 / math.pi)
TRACE_PRODUCT_FACTOR = math.pi / 2.0

_IMAG_TOL = 1e-9
_PURE_TOL = 1e-6


def angular_momentum_factor(j) -> float:
    j = float(HalfInt.of(j))
    return math.sqrt(j * (j + 1) * (2 * j + 1) / 8.0)


def normalization_target(j) -> float:
    j = float(HalfInt.of(j))
    return math.sqrt(8.0 / (2 * j + 1))


@dataclass(frozen=True, eq=False)
class WignerMap:
    """Real W samples on a grid, flattened theta-outer."""

    grid: SphereGrid
    values: np.ndarray
    j: HalfInt
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        v = np.asarray(self.values)
        if np.iscomplexobj(v):
            raise ValueError("Wigner map values must be real")
        v = np.array(v, dtype=float).ravel()
        if v.size != self.grid.size:
            raise ValueError(f"{v.size} values for a grid of {self.grid.size} nodes")
        if not np.all(np.isfinite(v)):
            raise ValueError("Wigner map contains non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "j", HalfInt.of(self.j))

    def as_grid(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)


@dataclass(frozen=True, eq=False)
class ProbabilityGrid:
    """Per-node projection probabilities p_m, columns ordered m = j ... -j.

    ``shots == 0`` marks exact (analytic) probabilities.
    """

    grid: SphereGrid
    probs: np.ndarray
    j: HalfInt
    shots: int = 0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        j = HalfInt.of(self.j)
        p = np.array(self.probs, dtype=float)
        d = j.twice_value + 1
        if p.shape != (self.grid.size, d):
            raise ValueError(f"probabilities must have shape ({self.grid.size}, {d}), got {p.shape}")
        if self.shots < 0:
            raise ValueError("shots must be >= 0")
        if not np.all(np.isfinite(p)):
            raise ValueError("probabilities contain non-finite values")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "j", j)


def _rho_kq(rho: DensityMatrix) -> np.ndarray:
    return rho_to_multipole(rho).coeffs


def _synthesize(coeffs: np.ndarray, kmax: int, theta, phi) -> np.ndarray:
    table = harmonic_table(kmax, theta, phi)
    w = WIGNER_PREFACTOR * (coeffs @ table)
    resid = float(np.max(np.abs(w.imag))) if w.size else 0.0
    if resid > _IMAG_TOL:
        raise ValueError(f"Wigner sum has imaginary residue {resid:.3e}; input is not Hermitian")
    return w.real


def wigner_evaluator(rho: Union[DensityMatrix, MultipoleDecomposition]) -> Callable:
    """Vectorized analytic W(theta, phi) for a known state."""
    d = rho if isinstance(rho, MultipoleDecomposition) else rho_to_multipole(rho)
    coeffs, kmax = d.coeffs, d.kmax

    def evaluate(theta, phi):
        theta = np.asarray(theta, dtype=float)
        out = _synthesize(coeffs, kmax, theta, phi)
        return out.reshape(np.broadcast(theta, np.asarray(phi)).shape)

    evaluate.j = d.j
    return evaluate


def wigner_from_rho(rho: DensityMatrix, grid: SphereGrid) -> WignerMap:
    th, ph = grid.points()
    values = _synthesize(_rho_kq(rho), rho.j.twice_value, th, ph)
    return WignerMap(grid, values, rho.j)


def _check_probs(p: np.ndarray, eps: float) -> Optional[str]:
    s = p.sum(axis=-1)
    bad_sum = np.abs(s - 1.0) > 1e-6
    bad_rng = np.any((p < -eps) | (p > 1 + eps), axis=-1)
    bad = bad_sum | bad_rng
    if np.any(bad):
        return np.flatnonzero(np.atleast_1d(bad))
    return None


def wigner_point(p, j, eps: float = 1e-9) -> float:
    """sqrt(2/pi) * sum_m p_m R_mj for one measurement axis."""
    j = HalfInt.of(j)
    p = np.asarray(p, dtype=float)
    r = reconstruction_weights(j)
    if p.shape != r.shape:
        raise ValueError(f"need {r.size} probabilities for j = {j}, got {p.size}")
    if _check_probs(p[None, :], eps) is not None:
        raise ValueError(f"invalid probability vector {p.tolist()} (sum {p.sum():.12g})")
    return float(WIGNER_PREFACTOR * p @ r)


def reconstruct(pg: ProbabilityGrid, eps: Optional[float] = None) -> WignerMap:
    """Apply the single-axis formula at every grid node.

    ``eps`` bounds how far a probability may stray outside [0, 1]; it
    defaults to 1e-9 for exact grids and to the binomial 5-sigma width
    for sampled ones.
    """
    if eps is None:
        eps = 1e-9 if pg.shots == 0 else 5.0 * math.sqrt(0.25 / pg.shots)
    bad = _check_probs(pg.probs, eps)
    if bad is not None:
        th, ph = pg.grid.points()
        i = int(bad[0])
        raise ValueError(f"invalid probabilities at node {i} (theta={th[i]:.6g}, phi={ph[i]:.6g}): "
                         f"{pg.probs[i].tolist()}")
    values = WIGNER_PREFACTOR * pg.probs @ reconstruction_weights(pg.j)
    meta = dict(pg.meta)
    meta["shots"] = pg.shots
    return WignerMap(pg.grid, values, pg.j, meta)


def _check_on_quad(w: WignerMap, quad: SphereQuadrature) -> None:
    if quad.grid is not None:
        if quad.grid != w.grid:
            raise ValueError("Wigner map grid does not match the quadrature grid")
        return
    th, ph = w.grid.points()
    if th.size != quad.size or not (np.allclose(th, quad.theta) and np.allclose(ph, quad.phi)):
        raise ValueError("Wigner map is not sampled at the quadrature nodes")


def rho_from_wigner(w: WignerMap, quad: SphereQuadrature, order_tol: Optional[float] = 1e-6) -> DensityMatrix:
    """Project W onto the harmonics and invert the multipole transform.

    rho_kq = sqrt(pi/2) int conj(Y_kq) W dOmega. With ``order_tol`` set, a
    rho_00 off by more than that from 1/sqrt(2j+1) means the rule is too
    coarse and raises. With ``order_tol=None`` the rule is treated as
    measurement-grade: the trace is reset to 1 and PSD is not enforced.
    """
    _check_on_quad(w, quad)
    kmax = w.j.twice_value
    table = harmonic_table(kmax, quad.theta, quad.phi)
    coeffs = (table.conj() * quad.weights) @ w.values / WIGNER_PREFACTOR
    target = 1.0 / math.sqrt(kmax + 1)
    dev = abs(coeffs[0] - target)
    if order_tol is not None and dev > order_tol:
        raise ValueError(f"quadrature too coarse for j = {w.j}: rho_00 off by {dev:.3e}")
    coeffs = _hermitize(coeffs, kmax)
    if order_tol is None:
        coeffs[0] = target
    return multipole_to_rho(MultipoleDecomposition(w.j, coeffs), check_psd=order_tol is not None)


def _hermitize(c: np.ndarray, kmax: int) -> np.ndarray:
    c = np.array(c, dtype=complex)
    for k in range(kmax + 1):
        c[harmonic_index(k, 0)] = c[harmonic_index(k, 0)].real
        for q in range(1, k + 1):
            a, b = harmonic_index(k, q), harmonic_index(k, -q)
            avg = 0.5 * (c[a] + (-1) ** q * np.conj(c[b]))
            c[a], c[b] = avg, (-1) ** q * np.conj(avg)
    return c


def fit_multipoles(w: WignerMap) -> MultipoleDecomposition:
    """Least-squares band-limited (k <= 2j) fit to the samples of a map.

    Exact for noiseless maps whenever the grid resolves degree 2j; for
    sampled maps it is the smooth model used to refine extrema.
    """
    kmax = w.j.twice_value
    th, ph = w.grid.points()
    a = WIGNER_PREFACTOR * harmonic_table(kmax, th, ph).T
    coeffs, *_ = np.linalg.lstsq(a, w.values.astype(complex), rcond=None)
    return MultipoleDecomposition(w.j, _hermitize(coeffs, kmax))


def normalization(w: WignerMap, quad: SphereQuadrature) -> float:
    """int W dOmega (expected sqrt(8/(2j+1)))."""
    _check_on_quad(w, quad)
    return integrate(w.values, quad)


def trace_product(w1: WignerMap, w2: WignerMap, quad: SphereQuadrature) -> float:
    """(pi/2) int W1 W2 dOmega, which equals Tr(rho1 rho2)."""
    if w1.grid != w2.grid:
        raise ValueError("Wigner maps live on different grids")
    if w1.j != w2.j:
        raise ValueError(f"Wigner maps have different spin: {w1.j} vs {w2.j}")
    _check_on_quad(w1, quad)
    val = TRACE_PRODUCT_FACTOR * integrate(w1.values * w2.values, quad)
    if not (0.0 <= val <= 1.0 + 1e-6):
        log.warning("trace product %.9g outside [0, 1]", val)
    return val


def wigner_purity(w: WignerMap, quad: SphereQuadrature) -> float:
    return trace_product(w, w, quad)


def wigner_fidelity_to_pure(w_tau: WignerMap, w_ref: WignerMap, quad: SphereQuadrature) -> float:
    """Fidelity to a pure reference as (pi/2) int W_tau W_ref dOmega.

    Only valid when the reference is pure; anything else raises.
    """
    purity = wigner_purity(w_ref, quad)
    if abs(purity - 1.0) > _PURE_TOL:
        raise ValueError(f"reference state is not pure (Wigner purity {purity:.9f})")
    return trace_product(w_tau, w_ref, quad)


def wigner_fidelity(w1: WignerMap, w2: WignerMap, quad: SphereQuadrature) -> float:
    """Fidelity for any pair: overlap integral if ``w2`` is pure, else Uhlmann."""
    if abs(wigner_purity(w2, quad) - 1.0) <= _PURE_TOL:
        return trace_product(w1, w2, quad)
    return uhlmann_fidelity(rho_from_wigner(w1, quad), rho_from_wigner(w2, quad))


@dataclass(frozen=True)
class WignerMin:
    value: float
    theta: float
    phi: float

    def __iter__(self):
        return iter((self.value, self.theta, self.phi))


def _wrap(theta: float, phi: float) -> tuple[float, float]:
    if theta < 0:
        theta, phi = -theta, phi + math.pi
    elif theta > math.pi:
        theta, phi = 2 * math.pi - theta, phi + math.pi
    return theta, phi % (2 * math.pi)


def _descend(f: Callable, theta: float, phi: float, h_theta: float, h_phi: float,
             tol: float) -> tuple[float, float, float]:
    """Coordinate descent with step halving on a scalar f(theta, phi)."""
    def ev(t, p):
        return float(f(np.array([t]), np.array([p]))[0])

    best = ev(theta, phi)
    while h_theta > 1e-9 or h_phi > 1e-9:
        improved = False
        for dt, dp in ((h_theta, 0.0), (-h_theta, 0.0), (0.0, h_phi), (0.0, -h_phi)):
            t, p = _wrap(theta + dt, phi + dp)
            v = ev(t, p)
            if v < best - tol * 1e-3:
                theta, phi, best = t, p, v
                improved = True
                break
        if not improved:
            h_theta *= 0.5
            h_phi *= 0.5
    return best, theta, phi


def _extremum(w, evaluator, tol, sign) -> WignerMin:
    if callable(w) and not isinstance(w, WignerMap):
        evaluator, grid = w, paper_grid(60, 40)
        th, ph = grid.points()
        values = np.asarray(evaluator(th, ph)).ravel()
    else:
        grid = w.grid
        th, ph = grid.points()
        values = w.values
        if evaluator is None:
            evaluator = wigner_evaluator(fit_multipoles(w))
    i = int(np.argmin(sign * values))
    h_t = float(np.min(np.diff(grid.theta))) if grid.theta.size > 1 else 0.1
    h_p = float(np.min(np.diff(grid.phi))) if grid.phi.size > 1 else 0.1

    def f(t, p):
        return sign * np.asarray(evaluator(t, p))

    best, t, p = _descend(f, float(th[i]), float(ph[i]), h_t, h_p, tol)
    return WignerMin(sign * best, t, p)


def wigner_min(w, evaluator: Optional[Callable] = None, tol: float = 1e-10) -> WignerMin:
    """Minimum of W: best grid node, then coordinate-descent refinement.

    ``w`` is a ``WignerMap`` or a vectorized evaluator. The refinement uses
    ``evaluator`` when given, otherwise the least-squares band-limited fit of
    the map (so noisy maps are refined on a smooth surface).
    """
    return _extremum(w, evaluator, tol, 1.0)


def wigner_max(w, evaluator: Optional[Callable] = None, tol: float = 1e-10) -> WignerMin:
    return _extremum(w, evaluator, tol, -1.0)


def angular_momentum(w: WignerMap, quad: SphereQuadrature) -> np.ndarray:
    """(<Jx>, <Jy>, <Jz>) from the first moments of W."""
    _check_on_quad(w, quad)
    c = angular_momentum_factor(w.j)
    st = np.sin(quad.theta)
    dirs = (st * np.cos(quad.phi), st * np.sin(quad.phi), np.cos(quad.theta))
    return np.array([c * integrate(d * w.values, quad) for d in dirs])


def qubit_wigner_closed_form(r: float, eps: float, eta: float, theta, phi):
    """Qubit W for Bloch vector r (sin eps cos eta, sin eps sin eta, cos eps).

    (1 + sqrt(3) r n.s) / (2 pi), n the Bloch direction, s the sample direction.
    """
    if r > 1 or r < 0:
        raise ValueError("Bloch length r must lie in [0, 1]")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    cosang = math.sin(eps) * np.sin(theta) * np.cos(phi - eta) + math.cos(eps) * np.cos(theta)
    out = (1.0 + math.sqrt(3.0) * r * cosang) / (2.0 * math.pi)
    return float(out) if out.ndim == 0 else out
