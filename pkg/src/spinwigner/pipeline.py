"""Analysis of reconstructed maps and the dephasing-series experiment."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .angular import HalfInt, reconstruction_weights
from .simulate import ExperimentSpec, ReadoutParams, prepare_state, run_tomography
from .sphere import SphereGrid, SphereQuadrature, clenshaw_curtis_quadrature, grid_quadrature, paper_grid
from .state import DensityMatrix, DephasingModel
from .wigner import (TRACE_PRODUCT_FACTOR, WIGNER_PREFACTOR, ProbabilityGrid, WignerMap,
                     angular_momentum, normalization, normalization_target, reconstruct,
                     wigner_fidelity_to_pure, wigner_from_rho, wigner_min, wigner_purity)

__all__ = [
    "analysis_quadrature",
    "analyze_map",
    "propagated_errors",
    "SeriesPoint",
    "dephasing_series",
    "parse_series",
]


def analysis_quadrature(grid: SphereGrid) -> SphereQuadrature:
    """Best rule available on a measurement grid.

    Equispaced theta including both poles admits Clenshaw-Curtis, which is
    exact for the band-limited W of low spin. Anything else falls back to
    the second-order trapezoid rule.
    """
    try:
        return clenshaw_curtis_quadrature(grid)
    except ValueError:
        return grid_quadrature(grid)


def analyze_map(w: WignerMap, reference: WignerMap, quad: Optional[SphereQuadrature] = None) -> dict:
    """Fidelity to a pure reference, purity, W_min, <J> and the normalization check."""
    quad = analysis_quadrature(w.grid) if quad is None else quad
    wmin = wigner_min(w)
    norm = normalization(w, quad)
    return {
        "fidelity": wigner_fidelity_to_pure(w, reference, quad),
        "purity": wigner_purity(w, quad),
        "wmin": {"value": wmin.value, "theta": wmin.theta, "phi": wmin.phi},
        "J": angular_momentum(w, quad).tolist(),
        "normalization_check": {"integral": norm, "expected": normalization_target(w.j),
                                "deviation": norm - normalization_target(w.j)},
    }


def propagated_errors(pg: ProbabilityGrid, reference: WignerMap,
                      quad: Optional[SphereQuadrature] = None) -> tuple[float, float]:
    """Standard errors of (fidelity, purity) from multinomial shot noise.

    Delta method with the per-node covariance (diag(p) - p p^T) / shots,
    evaluated at the measured probabilities.
    """
    if pg.shots == 0:
        return 0.0, 0.0
    quad = analysis_quadrature(pg.grid) if quad is None else quad
    r = WIGNER_PREFACTOR * reconstruction_weights(pg.j)
    p = pg.probs
    w = p @ r
    # Var(sum_m p_m r_m) per node under multinomial sampling
    var_node = (p @ (r * r) - (p @ r) ** 2) / pg.shots
    var_node = np.clip(var_node, 0.0, None)
    gf = TRACE_PRODUCT_FACTOR * quad.weights * reference.values
    gp = 2.0 * TRACE_PRODUCT_FACTOR * quad.weights * w
    return float(math.sqrt(np.sum(gf * gf * var_node))), float(math.sqrt(np.sum(gp * gp * var_node)))


@dataclass
class SeriesPoint:
    tau_us: float
    fidelity: float
    purity: float
    wmin: float
    fidelity_se: float = 0.0
    purity_se: float = 0.0
    probabilities: Optional[ProbabilityGrid] = field(default=None, repr=False)
    wigner: Optional[WignerMap] = field(default=None, repr=False)


def parse_series(text: str) -> np.ndarray:
    """'start:stop:step' (stop inclusive) -> array of delays."""
    try:
        start, stop, step = (float(v) for v in text.split(":"))
    except ValueError as exc:
        raise ValueError(f"bad series {text!r}; expected start:stop:step") from exc
    if step <= 0 or stop < start:
        raise ValueError(f"bad series {text!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return np.round(start + step * np.arange(n), 12)


def dephasing_series(taus: Sequence[float], t2_star: float = 2.64, shots: int = 0, seed: int = 0,
                     grid: Optional[SphereGrid] = None, readout: Optional[ReadoutParams] = None,
                     initial: Optional[DensityMatrix] = None, eps: float = math.pi / 2,
                     eta: float = math.pi / 2, workers: int = 1, keep: bool = False) -> list[SeriesPoint]:
    """Simulate, reconstruct and analyze the qubit at each delay.

    The reference is the undephased initial state's analytic map. Each delay
    uses its own RNG stream (its index in ``taus``).
    """
    grid = paper_grid() if grid is None else grid
    model = DephasingModel(t2_star)
    quad = analysis_quadrature(grid)
    base = ExperimentSpec(j=HalfInt(1), eps=eps, eta=eta, rho=initial, tau=0.0, model=model, grid=grid)
    reference = wigner_from_rho(prepare_state(base), grid)
    out = []
    for i, tau in enumerate(taus):
        spec = ExperimentSpec(j=HalfInt(1), eps=eps, eta=eta, rho=initial, tau=float(tau), model=model,
                              grid=grid, shots=shots, seed=seed, stream=i)
        pg = run_tomography(spec, readout, workers=workers)
        w = reconstruct(pg)
        fse, pse = propagated_errors(pg, reference, quad)
        out.append(SeriesPoint(float(tau), wigner_fidelity_to_pure(w, reference, quad),
                               wigner_purity(w, quad), wigner_min(w).value, fse, pse,
                               pg if keep else None, w if keep else None))
    return out
