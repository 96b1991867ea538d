"""Acceptance criteria 1-10, each at its stated tolerance.

Every test prints one ``[PASS]`` or ``[FAIL]`` line; the lines are repeated in
the pytest terminal summary. Run directly with ``python tests/test_acceptance.py``
for the summary alone.
"""

import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracles import racah_3j, racah_cg
from spinwigner.angular import half, clebsch_gordan, multipole_table, wigner3j
from spinwigner.cli import main
from spinwigner.fitting import fit_ramsey
from spinwigner.pipeline import dephasing_series, parse_series
from spinwigner.simulate import ProbabilityGrid, grid_probabilities, ramsey_sequence
from spinwigner.sphere import harmonic_table, paper_grid, product_quadrature
from spinwigner.state import (DephasingModel, expectation, pure_qubit, random_density_matrix,
                              spin_coherent, spin_operators)
from spinwigner.wigner import (angular_momentum, normalization, normalization_target, reconstruct,
                               rho_from_wigner, trace_product, wigner_evaluator, wigner_from_rho,
                               wigner_max, wigner_min)

T2 = 2.64
TAU_STAR = T2 * math.sqrt(math.log(math.sqrt(3)))
W_MAX_Y = (1 + math.sqrt(3)) / (2 * math.pi)
W_MIN_Y = (1 - math.sqrt(3)) / (2 * math.pi)


def report(n: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def exact_quad(j):
    d = j.twice_value + 1
    return product_quadrature(d + 1, 2 * d + 2)


def test_criterion_01_reconstruction_identity():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    err = 0.0
    grid = paper_grid()
    th, ph = grid.points()
    for tj in (1, 2, 3):
        j = half(tj)
        for _ in range(5):
            rho = random_density_matrix(j, rng)
            pg = ProbabilityGrid(grid, grid_probabilities(rho, th, ph), j)
            err = max(err, float(np.max(np.abs(reconstruct(pg).values - wigner_from_rho(rho, grid).values))))
    elapsed = time.perf_counter() - start
    report(1, err <= 1e-12 and elapsed < 1.0, f"max nodewise |dW| = {err:.2e} (tol 1e-12), {elapsed:.2f} s (< 1 s)")


def test_criterion_02_coefficient_oracle():
    worst3j = worstcg = 0.0
    count = 0
    for a in range(21):
        for b in range(21):
            for c in range(abs(a - b), min(a + b, 20) + 1, 2):
                for ma in range(-a, a + 1, 2):
                    for mb in range(-b, b + 1, 2):
                        mc = -ma - mb
                        if abs(mc) > c:
                            continue
                        count += 1
                        got = wigner3j(half(a), half(b), half(c), half(ma), half(mb), half(mc))
                        worst3j = max(worst3j, abs(got - racah_3j(a, b, c, ma, mb, mc)))
                        got = clebsch_gordan(half(a), half(ma), half(b), half(mb), half(c), half(-mc))
                        worstcg = max(worstcg, abs(got - racah_cg(a, ma, b, mb, c, -mc)))
    ortho = 0.0
    for tj in range(1, 9):
        t = multipole_table(half(tj)).reshape((tj + 1) ** 2, -1)
        ortho = max(ortho, float(np.max(np.abs(t @ t.T - np.eye(t.shape[0])))))
    ok = worst3j <= 1e-13 and worstcg <= 1e-13 and ortho <= 1e-12
    report(2, ok, f"{count} cases, max |d3j| = {worst3j:.1e}, max |dCG| = {worstcg:.1e} (tol 1e-13); "
                  f"multipole orthonormality {ortho:.1e} (tol 1e-12)")


def test_criterion_03_normalization_and_constants():
    rng = np.random.default_rng(3)
    norm_err = 0.0
    for tj in range(1, 6):
        j = half(tj)
        q = exact_quad(j)
        w = wigner_from_rho(random_density_matrix(j, rng), q.grid)
        norm_err = max(norm_err, abs(normalization(w, q) - normalization_target(j)))
    q = exact_quad(half(1))
    qubit_norm = normalization(wigner_from_rho(pure_qubit(0.7, 0.2), q.grid), q)
    tp_err = 0.0
    for i in range(100):
        j = half(1 + i % 5)
        q = exact_quad(j)
        a, b = random_density_matrix(j, rng), random_density_matrix(j, rng)
        tp = trace_product(wigner_from_rho(a, q.grid), wigner_from_rho(b, q.grid), q)
        tp_err = max(tp_err, abs(tp - float(np.trace(a.entries @ b.entries).real)))
    j_err = 0.0
    for tj in range(1, 6):
        j = half(tj)
        q = exact_quad(j)
        for rho in (random_density_matrix(j, rng), spin_coherent(j, 0.0, 0.0)):
            ref = [expectation(rho, op) for op in spin_operators(j)]
            j_err = max(j_err, float(np.max(np.abs(angular_momentum(wigner_from_rho(rho, q.grid), q) - ref))))
        jz = angular_momentum(wigner_from_rho(spin_coherent(j, 0.0, 0.0), q.grid), q)[2]
        j_err = max(j_err, abs(jz - float(j)))
    ok = norm_err <= 1e-10 and abs(qubit_norm - 2.0) <= 1e-10 and tp_err <= 1e-10 and j_err <= 1e-10
    report(3, ok, f"norm err {norm_err:.1e}, qubit integral {qubit_norm:.15f}, trace-product err {tp_err:.1e} "
                  f"(100 pairs), <J> err {j_err:.1e} (tol 1e-10)")


def test_criterion_04_round_trip():
    rng = np.random.default_rng(4)
    worst = 0.0
    for tj in range(1, 6):
        j = half(tj)
        q = product_quadrature(tj + 2, 2 * tj + 4)
        for _ in range(20):
            rho = random_density_matrix(j, rng)
            back = rho_from_wigner(wigner_from_rho(rho, q.grid), q)
            worst = max(worst, float(np.linalg.norm(back.entries - rho.entries)))
    report(4, worst < 1e-10, f"max Frobenius error {worst:.1e} over j = 1/2..5/2 (tol 1e-10)")


def test_criterion_05_dephasing_curves():
    taus = parse_series("0:4.8:0.3")
    exact = dephasing_series(taus, T2)
    f_err = max(abs(p.fidelity - (0.5 + 0.5 * math.exp(-(p.tau_us / T2) ** 2))) for p in exact)
    p_err = max(abs(p.purity - (0.5 + 0.5 * math.exp(-2 * (p.tau_us / T2) ** 2))) for p in exact)
    start = time.perf_counter()
    sampled = dephasing_series(taus, T2, shots=10**6, seed=1)
    elapsed = time.perf_counter() - start
    z = 0.0
    for p in sampled:
        x = (p.tau_us / T2) ** 2
        z = max(z, abs(p.fidelity - (0.5 + 0.5 * math.exp(-x))) / p.fidelity_se,
                abs(p.purity - (0.5 + 0.5 * math.exp(-2 * x))) / p.purity_se)
    se = max(max(p.fidelity_se, p.purity_se) for p in sampled)
    ok = f_err <= 1e-9 and p_err <= 1e-9 and z <= 5 and elapsed < 10
    report(5, ok, f"exact |dF| = {f_err:.1e}, |dP| = {p_err:.1e} (tol 1e-9); sampled max deviation "
                  f"{z:.2f} SE (tol 5, SE <= {se:.1e}); {elapsed:.2f} s (< 10 s)")


def _bisect(f, lo, hi, tol=1e-12):
    flo = f(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_criterion_06_negativity_threshold():
    tau_exact = _bisect(lambda t: dephasing_series([t], T2)[0].wmin, 1.5, 2.5)
    purity_exact = dephasing_series([tau_exact], T2)[0].purity
    taus = np.round(np.arange(1.80, 2.1001, 0.02), 12)
    pts = dephasing_series(taus, T2, shots=10**6, seed=6)
    wmin = np.array([p.wmin for p in pts])
    pur = np.array([p.purity for p in pts])
    # sign change bracket, then linear interpolation of W_min and purity
    i = int(np.flatnonzero((wmin[:-1] < 0) & (wmin[1:] >= 0))[0])
    frac = -wmin[i] / (wmin[i + 1] - wmin[i])
    tau_sampled = taus[i] + frac * (taus[i + 1] - taus[i])
    purity_sampled = pur[i] + frac * (pur[i + 1] - pur[i])
    ok = (abs(tau_exact - 1.956) <= 0.01 and abs(purity_exact - 2 / 3) <= 1e-6
          and abs(tau_sampled - 1.956) <= 0.01 and abs(purity_sampled - 2 / 3) <= 0.01)
    report(6, ok, f"exact crossing {tau_exact:.6f} us (closed form {TAU_STAR:.6f}), purity {purity_exact:.9f}; "
                  f"1e6-shot crossing {tau_sampled:.4f} us, purity {purity_sampled:.4f}")


def test_criterion_07_ramsey_fit():
    taus = np.linspace(0.0, 6.0, 48)
    start = time.perf_counter()
    good = within = 0
    sigmas = []
    for seed in range(100):
        data = ramsey_sequence(taus, 0.5, DephasingModel(T2), noise_sigma=0.01, seed=seed)
        fit = fit_ramsey(data)
        s = fit.sigmas["t2star_us"]
        sigmas.append(s)
        near = abs(fit.params["t2star_us"] - T2) <= 0.1
        within += near
        good += near and 0.03 <= s <= 0.12
    elapsed = time.perf_counter() - start
    ok = good >= 90 and elapsed < 5
    report(7, ok, f"{good}/100 seeds pass both parts (need 90); T2* within 0.1 us in {within}/100; "
                  f"reported sigma mean {np.mean(sigmas):.4f} us, range [{min(sigmas):.4f}, {max(sigmas):.4f}] "
                  f"vs band [0.03, 0.12]; {elapsed:.2f} s")


def test_criterion_08_quadrature_exactness():
    worst = 0.0
    for n in range(1, 13):
        q = product_quadrature(n, 2 * n)
        y = harmonic_table(n - 1, q.theta, q.phi)
        g = (y * q.weights) @ y.conj().T
        worst = max(worst, float(np.max(np.abs(g - np.eye(n * n)))))
    report(8, worst <= 1e-12, f"max |Gram - I| = {worst:.1e} for n <= 12 (tol 1e-12)")


def test_criterion_09_determinism(tmp_path, capsys):
    argv = ["simulate", "--shots", "1000000", "--seed", "1", "--tau-us", "2.4"]
    outs = []
    for threads in ("1", "1", "4"):
        path = tmp_path / f"run{len(outs)}.csv"
        assert main(argv + ["--threads", threads, "--out", str(path)]) == 0
        outs.append(path.read_bytes())
    proc = subprocess.run([sys.executable, "-m", "spinwigner.cli", *argv, "--threads", "2"],
                          capture_output=True, check=True)
    outs.append(proc.stdout)
    errs = set()
    for _ in range(2):
        assert main(["simulate", "--readout", "0.01,0.05"]) == 2
        errs.add(capsys.readouterr().err)
    ok = len(set(outs)) == 1 and len(errs) == 1
    report(9, ok, f"{len(outs)} simulate runs (threads 1, 1, 4, 2 via subprocess) byte-identical: "
                  f"{len(set(outs)) == 1}; error text stable: {len(errs) == 1}")


def test_criterion_10_extrema():
    rho = pure_qubit(math.pi / 2, math.pi / 2)
    w = wigner_from_rho(rho, paper_grid())
    ev = wigner_evaluator(rho)
    hi, lo = wigner_max(w, ev), wigner_min(w, ev)
    n = np.array([math.sin(hi.theta) * math.cos(hi.phi), math.sin(hi.theta) * math.sin(hi.phi), math.cos(hi.theta)])
    angle = math.acos(min(1.0, float(n @ [0.0, 1.0, 0.0])))
    ok = abs(hi.value - W_MAX_Y) <= 1e-10 and abs(lo.value - W_MIN_Y) <= 1e-10 and angle < 1e-6
    report(10, ok, f"max {hi.value:.10f} (expected {W_MAX_Y:.10f}), min {lo.value:.10f} "
                   f"(expected {W_MIN_Y:.10f}); max direction off the Bloch vector by {angle:.1e} rad")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
