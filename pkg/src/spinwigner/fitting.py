"""Damped Gauss-Newton least squares and the Ramsey fringe fit."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .simulate import RamseyData

__all__ = ["FitResult", "least_squares", "fit_ramsey", "ramsey_initial_guess", "ramsey_model", "RAMSEY_PARAMS"]

RAMSEY_PARAMS = ("amplitude", "offset", "detuning_mhz", "t2star_us")


@dataclass
class FitResult:
    params: dict
    covariance: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool
    gradient_norm: float = 0.0
    chi2_reduced: float = 0.0
    free: tuple = field(default_factory=tuple)

    @property
    def sigmas(self) -> dict:
        """1-sigma uncertainties; fixed parameters report 0."""
        out = {name: 0.0 for name in self.params}
        for i, name in enumerate(self.free):
            out[name] = float(math.sqrt(max(self.covariance[i, i], 0.0)))
        return out

    def to_json(self) -> dict:
        return {"params": {k: float(v) for k, v in self.params.items()},
                "sigmas": self.sigmas,
                "residual_norm": float(self.residual_norm),
                "converged": bool(self.converged),
                "iterations": int(self.iterations)}


def _jacobian(fun, p: np.ndarray, rel_step: float) -> np.ndarray:
    cols = []
    for i in range(p.size):
        h = rel_step * max(abs(p[i]), 1.0)
        up, dn = p.copy(), p.copy()
        up[i] += h
        dn[i] -= h
        cols.append((fun(up) - fun(dn)) / (up[i] - dn[i]))
    return np.column_stack(cols)


def least_squares(model: Callable, x, y, p0, sigma=None, names: Optional[Sequence[str]] = None,
                  fixed: Optional[Mapping[str, float]] = None, max_iter: int = 200,
                  xtol: float = 1e-14, gtol: float = 1e-10, rel_step: float = 1e-6) -> FitResult:
    """Minimize sum(((y - model(x, *p)) / sigma)^2).

    Damped Gauss-Newton: (J^T W J + lam diag(J^T W J)) dp = J^T W r, lam
    starting at 0 (plain Gauss-Newton), x10 after a rejected step and /10
    after an accepted one. Jacobians are central differences. The
    covariance is the inverse weighted normal matrix times reduced chi^2.

    ``p0`` is a sequence or a name->value mapping; ``fixed`` pins named
    parameters. Non-convergence after ``max_iter`` returns the best point
    with ``converged=False``; a singular normal matrix raises.
    """
    if isinstance(p0, Mapping):
        names = list(p0) if names is None else list(names)
        start = np.array([p0[n] for n in names], dtype=float)
    else:
        start = np.asarray(p0, dtype=float).ravel()
        names = list(names) if names is not None else [f"p{i}" for i in range(start.size)]
    if len(names) != start.size:
        raise ValueError("names and p0 differ in length")
    fixed = dict(fixed or {})
    for n in fixed:
        if n not in names:
            raise ValueError(f"unknown fixed parameter {n!r}")
    free = [i for i, n in enumerate(names) if n not in fixed]
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    sig = np.ones_like(y) if sigma is None else np.broadcast_to(np.asarray(sigma, float), y.shape)
    if np.any(sig <= 0):
        raise ValueError("sigma must be positive")
    if y.size < len(free):
        raise ValueError(f"underdetermined: {y.size} points for {len(free)} free parameters")

    base = start.copy()
    for n, v in fixed.items():
        base[names.index(n)] = v

    def full(pf):
        p = base.copy()
        p[free] = pf
        return p

    def resid(pf):
        return (y - np.asarray(model(x, *full(pf)), dtype=float).ravel()) / sig

    def model_w(pf):
        return np.asarray(model(x, *full(pf)), dtype=float).ravel() / sig

    p = start[free].copy()
    r = resid(p)
    cost = float(r @ r)
    lam = 0.0
    converged = False
    it = 0
    jac = _jacobian(model_w, p, rel_step)
    for it in range(1, max_iter + 1):
        normal = jac.T @ jac
        grad = jac.T @ r
        if not np.all(np.isfinite(normal)):
            raise ValueError("non-finite Jacobian")
        diag = np.diag(normal).copy()
        diag = np.where(diag > 0, diag, 1.0)
        accepted = False
        while True:
            try:
                step = np.linalg.solve(normal + lam * np.diag(diag), grad)
            except np.linalg.LinAlgError:
                step = None
            if step is not None and np.all(np.isfinite(step)):
                p_new = p + step
                r_new = resid(p_new)
                cost_new = float(r_new @ r_new)
                if cost_new <= cost:
                    accepted = True
                    break
            lam = 1e-3 if lam == 0.0 else lam * 10.0
            if lam > 1e16:
                break
        if not accepted:
            converged = _cosine(jac, r) < 1e-6
            break
        small_step = np.all(np.abs(step) <= xtol * (np.abs(p) + xtol))
        small_cost = cost - cost_new <= 1e-15 * max(cost, 1e-300)
        p, r, cost = p_new, r_new, cost_new
        lam = lam / 10.0
        jac = _jacobian(model_w, p, rel_step)
        g = _cosine(jac, r)
        if g < gtol or small_step or (small_cost and g < 1e-6):
            converged = True
            break

    normal = jac.T @ jac
    if np.linalg.cond(normal) > 1e15:
        raise ValueError("singular normal matrix at the optimum")
    dof = max(y.size - len(free), 1)
    chi2_red = cost / dof
    cov = np.linalg.inv(normal) * chi2_red
    cov = 0.5 * (cov + cov.T)
    params = {n: float(v) for n, v in zip(names, full(p))}
    return FitResult(params, cov, float(math.sqrt(cost)), it, converged,
                     _cosine(jac, r), chi2_red, tuple(names[i] for i in free))


def _cosine(jac: np.ndarray, r: np.ndarray) -> float:
    """Largest |cos| between the residual and a Jacobian column (0 at a stationary point)."""
    rn = float(np.linalg.norm(r))
    if rn == 0.0:
        return 0.0
    cn = np.linalg.norm(jac, axis=0)
    cn = np.where(cn > 0, cn, 1.0)
    return float(np.max(np.abs(jac.T @ r) / (cn * rn)))


def ramsey_model(tau, amplitude, offset, detuning_mhz, t2star_us):
    """offset + amplitude exp[-(tau/T2*)^2] cos(2 pi f tau)."""
    tau = np.asarray(tau, dtype=float)
    return offset + amplitude * np.exp(-(tau / t2star_us) ** 2) * np.cos(2 * np.pi * detuning_mhz * tau)


def _spectral_peak(taus: np.ndarray, y: np.ndarray) -> float:
    detrended = y - y.mean()
    if float(np.std(detrended)) < 1e-12:
        raise ValueError("flat Ramsey signal: no spectral peak to initialize the fit")
    span = taus[-1] - taus[0]
    nyquist = 0.5 * (taus.size - 1) / span
    freqs = np.linspace(0.0, nyquist, 16 * taus.size + 1)
    power = np.abs(np.exp(-2j * np.pi * np.outer(freqs, taus)) @ detrended) ** 2
    return float(freqs[int(np.argmax(power))])


def _envelope_time(taus: np.ndarray, y: np.ndarray, offset: float, amp: float, f: float) -> float:
    dev = np.abs(y - offset)
    if f > 0:
        period = 1.0 / f
        dt = float(np.median(np.diff(taus)))
        half_window = max(int(round(0.25 * period / dt)), 1)  # |cos| peaks every half period
    else:
        half_window = 1
    env = np.array([dev[max(0, i - half_window): i + half_window + 1].max() for i in range(dev.size)])
    target = abs(amp) * math.exp(-1.0)
    below = np.flatnonzero(env < target)
    if below.size == 0:
        return float(taus[-1])
    i = int(below[0])
    if i == 0:
        return float(taus[1] if taus.size > 1 else taus[0]) or 1.0
    # interpolate the crossing
    e0, e1 = env[i - 1], env[i]
    frac = (e0 - target) / (e0 - e1) if e0 != e1 else 0.0
    return float(taus[i - 1] + frac * (taus[i] - taus[i - 1]))


def _decay_guess(taus: np.ndarray, y: np.ndarray) -> dict:
    # non-oscillating record: plain Gaussian decay toward the tail value
    offset = float(y[-1])
    amp = float(y[0] - offset)
    dev = np.abs(y - offset)
    below = np.flatnonzero(dev < abs(amp) * math.exp(-1.0))
    t2 = float(taus[below[0]]) if below.size and below[0] > 0 else float(taus[-1])
    return {"amplitude": amp, "offset": offset, "detuning_mhz": 0.0, "t2star_us": t2}


def ramsey_initial_guess(data: RamseyData) -> dict:
    taus, y = data.taus, data.signals
    f = _spectral_peak(taus, y)
    # fringes average out, so the mean is a better offset than the midrange
    offset = float(np.mean(y))
    amp = float(y[0] - offset)
    if abs(amp) < 0.25 * (y.max() - y.min()):
        amp = math.copysign(0.5 * (y.max() - y.min()), amp)
    t2 = _envelope_time(taus, y, offset, amp, f)
    return {"amplitude": amp, "offset": offset, "detuning_mhz": f, "t2star_us": t2}


def fit_ramsey(data: RamseyData, init: Optional[Mapping[str, float]] = None) -> FitResult:
    """Fit offset + A exp[-(tau/T2*)^2] cos(2 pi f tau) to a Ramsey record.

    Initial values come from the spectral peak (f), a moving-max envelope
    (T2*), and the signal range (A, offset) unless ``init`` overrides them.
    A record with no resolvable oscillation is refit with f pinned at 0.
    """
    if data.taus.size < 8:
        raise ValueError("need at least 8 points for a Ramsey fit")
    guess = ramsey_initial_guess(data)
    if init:
        guess.update(init)
    sigma = data.sigma
    span = data.taus[-1] - data.taus[0]
    res = None
    if guess["detuning_mhz"] * span >= 0.5:
        try:
            res = least_squares(ramsey_model, data.taus, data.signals, guess, sigma=sigma,
                                names=RAMSEY_PARAMS)
        except ValueError:
            res = None
    if res is None or abs(res.params["detuning_mhz"]) * span < 0.1:
        guess = _decay_guess(data.taus, data.signals)
        if init:
            guess.update({k: v for k, v in init.items() if k != "detuning_mhz"})
        res = least_squares(ramsey_model, data.taus, data.signals, guess, sigma=sigma,
                            names=RAMSEY_PARAMS, fixed={"detuning_mhz": 0.0})
    res.params["t2star_us"] = abs(res.params["t2star_us"])
    res.params["detuning_mhz"] = abs(res.params["detuning_mhz"])
    return res
