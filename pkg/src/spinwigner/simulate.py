"""Qubit-level simulation of the Wigner tomography and Ramsey experiments.

One tomography cycle: prepare the state, let it dephase for tau, apply the
analysis rotation for grid node (theta, phi), read out in the Dicke basis.
Readout is exact (shots=0), multinomial, or a photon-counting layer with a
bright/dark calibration.

Every grid node (and every Ramsey delay) draws from its own RNG stream keyed
by (seed, stream, index), so results do not depend on evaluation order or on
how many worker threads run.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .angular import HalfInt
from .sphere import SphereGrid, paper_grid
from .state import (DensityMatrix, DephasingModel, dephase_qubit, pure_qubit,
                    rotation_unitaries, spin_coherent)
from .wigner import ProbabilityGrid

__all__ = [
    "ExperimentSpec",
    "ReadoutParams",
    "RamseyData",
    "measurement_unitaries",
    "ideal_probabilities",
    "grid_probabilities",
    "node_rng",
    "sample_probabilities",
    "photon_readout",
    "prepare_state",
    "run_tomography",
    "ramsey_signal",
    "ramsey_sequence",
    "FIELD_GAUSS",
    "CARRIER_MHZ",
]

# documentation-only constants of the modeled setup
FIELD_GAUSS = 520.0
CARRIER_MHZ = 1404.3


@dataclass(frozen=True)
class ReadoutParams:
    """Photon-counting readout. Rates are mean photons per shot.

    ``bright_rate`` belongs to |1> (m = -1/2), ``dark_rate`` to |0>. The
    defaults are a generic NV-like contrast, not measured values.
    """

    bright_rate: float = 0.03
    dark_rate: float = 0.02
    reference_shots: int = 1_000_000

    def __post_init__(self):
        if not (self.bright_rate > self.dark_rate >= 0):
            raise ValueError("need bright_rate > dark_rate >= 0")
        if self.reference_shots < 1:
            raise ValueError("reference_shots must be >= 1")


@dataclass(frozen=True)
class ExperimentSpec:
    """One tomography run. ``rho`` overrides the (eps, eta) preparation."""

    j: HalfInt = HalfInt(1)
    eps: float = math.pi / 2
    eta: float = math.pi / 2
    rho: Optional[DensityMatrix] = None
    tau: float = 0.0  # us
    model: DephasingModel = field(default_factory=DephasingModel)
    grid: SphereGrid = field(default_factory=paper_grid)
    shots: int = 0
    seed: int = 0
    stream: int = 0

    def __post_init__(self):
        object.__setattr__(self, "j", HalfInt.of(self.j))
        if self.shots < 0:
            raise ValueError("shots must be >= 0")
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if self.rho is not None and self.rho.j != self.j:
            raise ValueError("rho does not match j")


@dataclass(frozen=True, eq=False)
class RamseyData:
    taus: np.ndarray  # us
    signals: np.ndarray
    detuning_hint: float = 0.5  # MHz
    shots: int = 0
    seed: int = 0
    sigma: Optional[np.ndarray] = None

    def __post_init__(self):
        taus = np.asarray(self.taus, dtype=float).ravel()
        sig = np.asarray(self.signals, dtype=float).ravel()
        if taus.size != sig.size:
            raise ValueError("taus and signals differ in length")
        if np.any(taus < 0) or np.any(np.diff(taus) <= 0):
            raise ValueError("taus must be nonnegative and increasing")
        object.__setattr__(self, "taus", taus)
        object.__setattr__(self, "signals", sig)
        if self.sigma is not None:
            object.__setattr__(self, "sigma", np.broadcast_to(np.asarray(self.sigma, float), taus.shape).copy())


def measurement_unitaries(j, theta, phi) -> np.ndarray:
    """Frame rotations A with A|m> quantized along (theta, phi).

    A = exp[-i theta (cos phi' Jx + sin phi' Jy)] with phi' = phi + pi/2, so
    p_m = <m| A^H rho A |m>. The physical analysis pulse is A^H = U(theta, phi - pi/2).
    The +pi/2 offset is what makes the single-axis reconstruction agree with
    the harmonic forward map node by node.
    """
    return rotation_unitaries(j, theta, np.asarray(phi, dtype=float) + math.pi / 2)


def grid_probabilities(rho: DensityMatrix, theta, phi) -> np.ndarray:
    a = measurement_unitaries(rho.j, theta, phi)
    p = np.einsum("nai,ab,nbi->ni", a.conj(), np.asarray(rho), a).real
    return np.clip(p, 0.0, 1.0)


def ideal_probabilities(rho: DensityMatrix, theta: float, phi: float) -> np.ndarray:
    """Exact p_m (m = j ... -j) along (theta, phi)."""
    return grid_probabilities(rho, theta, phi)[0]


def node_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    """Independent generator for one node of one run."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(index)))))


def _multinomial(p: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    return rng.multinomial(shots, p) / shots


def sample_probabilities(rho: DensityMatrix, theta: float, phi: float, shots: int,
                         rng: np.random.Generator) -> np.ndarray:
    """Empirical frequencies of ``shots`` projective measurements."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    return _multinomial(ideal_probabilities(rho, theta, phi), shots, rng)


def photon_readout(populations, shots: int, params: ReadoutParams,
                   rng: Optional[np.random.Generator] = None) -> np.ndarray:
    """Population estimate from Poisson photon counts with a fresh calibration.

    ``populations`` is (p0, p1). shots = 0 is the infinite-shot limit and
    returns the populations unchanged.
    """
    p = np.asarray(populations, dtype=float)
    if p.shape != (2,):
        raise ValueError("photon readout models a qubit: populations must be (p0, p1)")
    if shots == 0:
        return p.copy()
    if shots < 0:
        raise ValueError("shots must be >= 0")
    if rng is None:
        raise ValueError("a random generator is required for finite shots")
    mean = shots * (p[1] * params.bright_rate + p[0] * params.dark_rate)
    counts = rng.poisson(mean)
    bright = rng.poisson(params.reference_shots * params.bright_rate) / params.reference_shots
    dark = rng.poisson(params.reference_shots * params.dark_rate) / params.reference_shots
    if bright <= dark:
        raise ValueError(f"degenerate calibration: bright {bright:.6g} <= dark {dark:.6g}")
    p1 = min(max((counts / shots - dark) / (bright - dark), 0.0), 1.0)
    return np.array([1.0 - p1, p1])


def prepare_state(spec: ExperimentSpec) -> DensityMatrix:
    """Initial state, dephased for ``spec.tau``."""
    if spec.rho is not None:
        rho = spec.rho
    elif spec.j.twice_value == 1:
        rho = pure_qubit(spec.eps, spec.eta)
    else:
        rho = spin_coherent(spec.j, spec.eps, spec.eta)
    if spec.tau > 0:
        if rho.j.twice_value != 1:
            raise ValueError("dephasing is modeled for a qubit only")
        rho = dephase_qubit(rho, spec.tau, spec.model)
    return rho


def run_tomography(spec: ExperimentSpec, readout: Optional[ReadoutParams] = None,
                   workers: int = 1) -> ProbabilityGrid:
    """Dephase, rotate and measure at every grid node."""
    rho = prepare_state(spec)
    th, ph = spec.grid.points()
    exact = grid_probabilities(rho, th, ph)
    meta = {"seed": spec.seed, "tau_us": spec.tau, "t2star_us": spec.model.t2_star}
    if spec.shots == 0:
        probs = exact / exact.sum(axis=1, keepdims=True)
        return ProbabilityGrid(spec.grid, probs, spec.j, 0, meta)
    if readout is not None and spec.j.twice_value != 1:
        raise ValueError("photon readout is modeled for a qubit only")

    def measure(i: int) -> np.ndarray:
        rng = node_rng(spec.seed, spec.stream, i)
        if readout is None:
            return _multinomial(exact[i], spec.shots, rng)
        return photon_readout(exact[i], spec.shots, readout, rng)

    idx = range(th.size)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(measure, idx, chunksize=64))
    else:
        rows = [measure(i) for i in idx]
    if readout is not None:
        meta["readout"] = f"{readout.bright_rate},{readout.dark_rate}"
    return ProbabilityGrid(spec.grid, np.array(rows), spec.j, spec.shots, meta)


def ramsey_signal(taus, detuning: float, model: DephasingModel) -> np.ndarray:
    """Population after pi/2 - tau - pi/2: (1 + exp[-(tau/T2*)^2] cos(2 pi f tau)) / 2."""
    taus = np.asarray(taus, dtype=float)
    return 0.5 * (1.0 + model.coherence(taus) * np.cos(2 * np.pi * detuning * taus))


def ramsey_sequence(taus: Sequence[float], detuning: float, model: DephasingModel,
                    shots: int = 0, seed: int = 0, noise_sigma: float = 0.0) -> RamseyData:
    """Ramsey record: exact (shots=0) or binomially sampled per delay.

    ``noise_sigma`` adds Gaussian noise of that width on top (a stand-in for
    readout noise when no shot model is wanted).
    """
    if detuning < 0:
        raise ValueError("detuning must be >= 0")
    taus = np.asarray(taus, dtype=float)
    if np.any(taus < 0):
        raise ValueError("taus must be >= 0")
    p = ramsey_signal(taus, detuning, model)
    sig = p.copy()
    sigma = None
    if shots > 0:
        sig = np.array([node_rng(seed, 1, i).binomial(shots, pi) / shots for i, pi in enumerate(p)])
        q = np.clip(sig, 1.0 / shots, 1.0 - 1.0 / shots)
        sigma = np.sqrt(q * (1 - q) / shots)
    if noise_sigma > 0:
        sig = sig + np.array([node_rng(seed, 2, i).normal(0.0, noise_sigma) for i in range(taus.size)])
        sigma = np.full(taus.size, noise_sigma) if sigma is None else np.hypot(sigma, noise_sigma)
    return RamseyData(taus, sig, detuning, shots, seed, sigma)
