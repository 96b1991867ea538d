"""``spinwigner`` command-line front end.

Exit codes: 0 success, 1 compute or data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io
from .angular import HalfInt
from .fitting import fit_ramsey, ramsey_model
from .pipeline import analysis_quadrature, analyze_map, dephasing_series, parse_series
from .simulate import ExperimentSpec, ReadoutParams, RamseyData, ramsey_sequence, run_tomography
from .sphere import SphereGrid, paper_grid
from .state import DensityMatrix, DephasingModel, maximally_mixed, pure_qubit, spin_coherent
from .wigner import WignerMap, reconstruct, wigner_from_rho

__all__ = ["main", "build_parser", "StateSpec", "parse_state"]

COMMANDS = ("forward", "simulate", "reconstruct", "analyze", "ramsey", "pipeline")
DEFAULT_SHOTS = 1_000_000
RAMSEY_SPAN_US = 6.0
RAMSEY_POINTS = 48


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class StateSpec:
    """Named preparation: a coherent state along (eps, eta) or the mixed state."""

    label: str
    eps: float = 0.0
    eta: float = 0.0
    mixed: bool = False

    def density_matrix(self, j: HalfInt) -> DensityMatrix:
        if self.mixed:
            return maximally_mixed(j)
        if j.twice_value == 1:
            return pure_qubit(self.eps, self.eta)
        return spin_coherent(j, self.eps, self.eta)


def parse_state(text: str) -> StateSpec:
    named = {"y": (math.pi / 2, math.pi / 2), "x": (math.pi / 2, 0.0), "z": (0.0, 0.0)}
    if text in named:
        return StateSpec(text, *named[text])
    if text == "mixed":
        return StateSpec(text, mixed=True)
    if text.startswith("custom:"):
        try:
            eps, eta = (float(v) for v in text[len("custom:"):].split(","))
        except ValueError:
            raise UsageError(f"bad --state {text!r}; expected custom:eps,eta in radians") from None
        if not (math.isfinite(eps) and math.isfinite(eta)):
            raise UsageError(f"bad --state {text!r}; angles must be finite")
        return StateSpec(text, eps, eta)
    raise UsageError(f"bad --state {text!r}; choose y, x, z, mixed or custom:eps,eta")


def _series(text: str) -> np.ndarray:
    try:
        return parse_series(text)
    except ValueError as exc:
        raise UsageError(f"--tau-series: {exc}") from None


def _readout(text: Optional[str]) -> Optional[ReadoutParams]:
    if text is None:
        return None
    try:
        bright, dark = (float(v) for v in text.split(","))
        return ReadoutParams(bright, dark)
    except ValueError as exc:
        raise UsageError(f"bad --readout {text!r}: {exc}") from None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spinwigner",
                                description="Spherical Wigner-function tomography for spin systems.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--j", type=int, default=1, help="spin as a twice-value (1 = spin 1/2)")
    p.add_argument("--state", help="y | x | z | mixed | custom:eps,eta")
    p.add_argument("--t2star-us", type=float, default=2.64)
    p.add_argument("--tau-us", type=float, default=0.0)
    p.add_argument("--tau-series", help="start:stop:step in us, stop inclusive")
    p.add_argument("--shots", type=int, help=f"0 = exact; default {DEFAULT_SHOTS} (ramsey: 0)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--theta-steps", type=int, default=60)
    p.add_argument("--phi-steps", type=int, default=20)
    p.add_argument("--grid", choices=["paper"], default="paper", help="grid family (only 'paper')")
    p.add_argument("--readout", help="bright,dark mean photons per shot")
    p.add_argument("--reference", help="state spec or density-matrix JSON for analyze")
    p.add_argument("--detuning-mhz", type=float, default=0.5)
    p.add_argument("--noise-sigma", type=float, default=0.01)
    p.add_argument("--in", dest="inputs", nargs="+", metavar="PATH")
    p.add_argument("--out", metavar="PATH")
    p.add_argument("--format", choices=["csv", "json"], default="csv")
    p.add_argument("--threads", type=int, default=1)
    return p


def _grid(args) -> SphereGrid:
    if args.theta_steps < 1 or args.phi_steps < 1:
        raise UsageError("--theta-steps and --phi-steps must be >= 1")
    return paper_grid(args.theta_steps, args.phi_steps)


def _spin(args) -> HalfInt:
    if args.j < 1:
        raise UsageError("--j must be a positive twice-value")
    return HalfInt(args.j)


def _shots(args, default: int) -> int:
    shots = default if args.shots is None else args.shots
    if shots < 0:
        raise UsageError("--shots must be >= 0")
    return shots


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        io.atomic_write(out, text)


def _map_text(w: WignerMap, fmt: str) -> str:
    if fmt == "json":
        th, ph = w.grid.points()
        return io.write_json({"j_twice": w.j.twice_value, "meta": w.meta, "theta_rad": th,
                              "phi_rad": ph, "w": w.values})
    return io.wigner_map_to_csv(w)


def _one_input(args) -> str:
    if not args.inputs or len(args.inputs) != 1:
        raise UsageError(f"{args.command} needs exactly one --in PATH")
    return args.inputs[0]


def cmd_forward(args) -> int:
    if args.state is None:
        raise UsageError("forward requires --state")
    spec = parse_state(args.state)
    rho = spec.density_matrix(_spin(args))
    w = wigner_from_rho(rho, _grid(args))
    w = WignerMap(w.grid, w.values, w.j, {"state": spec.label})
    _emit(_map_text(w, args.format), args.out)
    return 0


def _experiment(args, tau: float, shots: int, stream: int = 0) -> ExperimentSpec:
    spec = parse_state(args.state or "y")
    j = _spin(args)
    rho = spec.density_matrix(j) if (spec.mixed or j.twice_value != 1) else None
    if args.t2star_us <= 0:
        raise UsageError("--t2star-us must be > 0")
    if tau < 0:
        raise UsageError("--tau-us must be >= 0")
    return ExperimentSpec(j=j, eps=spec.eps, eta=spec.eta, rho=rho, tau=tau,
                          model=DephasingModel(args.t2star_us), grid=_grid(args),
                          shots=shots, seed=args.seed, stream=stream)


def cmd_simulate(args) -> int:
    readout = _readout(args.readout)
    spec = _experiment(args, args.tau_us, _shots(args, DEFAULT_SHOTS))
    pg = run_tomography(spec, readout, workers=max(args.threads, 1))
    _emit(io.probability_grid_to_csv(pg), args.out)
    return 0


def cmd_reconstruct(args) -> int:
    pg = io.probability_grid_from_csv(Path(_one_input(args)))
    _emit(_map_text(reconstruct(pg), args.format), args.out)
    return 0


def _reference(args, w: WignerMap) -> WignerMap:
    ref = args.reference or "y"
    if ref.endswith(".json"):
        rho = io.density_matrix_from_json(Path(ref))
        if rho.j != w.j:
            raise ValueError(f"reference spin {rho.j} does not match map spin {w.j}")
        return wigner_from_rho(rho, w.grid)
    if ref.endswith(".csv"):
        r = io.wigner_map_from_csv(Path(ref))
        if r.grid != w.grid:
            raise ValueError("reference map grid does not match the input grid")
        return r
    return wigner_from_rho(parse_state(ref).density_matrix(w.j), w.grid)


def _series_csv(rows: list[tuple]) -> str:
    lines = ["tau_us,fidelity,purity,wmin"]
    lines += [",".join(io.fmt(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> int:
    if not args.inputs:
        raise UsageError("analyze needs --in PATH [PATH ...]")
    if len(args.inputs) > 1 and args.out is None:
        raise UsageError("analyze with several inputs needs --out DIR")
    results, series = [], []
    for path in args.inputs:
        w = io.wigner_map_from_csv(Path(path))
        res = analyze_map(w, _reference(args, w))
        res["input"] = Path(path).name
        results.append(res)
        if "tau_us" in w.meta:
            series.append((float(w.meta["tau_us"]), res["fidelity"], res["purity"], res["wmin"]["value"]))
    if len(args.inputs) == 1:
        _emit(io.write_json(results[0]), args.out)
        return 0
    out = Path(args.out)
    for path, res in zip(args.inputs, results):
        io.write_json(res, out / f"{Path(path).stem}.analysis.json")
    if len(series) == len(results):
        io.atomic_write(out / "series.csv", _series_csv(sorted(series)))
    return 0


def _ramsey_data(args) -> RamseyData:
    if args.inputs:
        return io.ramsey_from_csv(Path(_one_input(args)))
    if args.tau_series:
        taus = _series(args.tau_series)
    else:
        taus = np.linspace(0.0, RAMSEY_SPAN_US, RAMSEY_POINTS)
    if args.noise_sigma < 0:
        raise UsageError("--noise-sigma must be >= 0")
    return ramsey_sequence(taus, args.detuning_mhz, DephasingModel(args.t2star_us),
                           shots=_shots(args, 0), seed=args.seed, noise_sigma=args.noise_sigma)


def cmd_ramsey(args) -> int:
    data = _ramsey_data(args)
    fit = fit_ramsey(data)
    fine = np.linspace(data.taus[0], data.taus[-1], 601)
    curve = ramsey_model(fine, *(fit.params[k] for k in ("amplitude", "offset", "detuning_mhz", "t2star_us")))
    curve_text = "tau_us,model\n" + "".join(f"{io.fmt(t)},{io.fmt(v)}\n" for t, v in zip(fine, curve))
    if args.out is None:
        sys.stdout.write(io.write_json(fit.to_json()))
        return 0
    out = Path(args.out)
    io.write_json(fit.to_json(), out)
    io.atomic_write(out.with_name(out.stem + ".curve.csv"), curve_text)
    if not args.inputs:
        io.ramsey_to_csv(data, out.with_name(out.stem + ".data.csv"))
    return 0


def cmd_pipeline(args) -> int:
    if args.out is None:
        raise UsageError("pipeline needs --out DIR")
    taus = _series(args.tau_series or "0:4.8:0.3")
    spec = parse_state(args.state or "y")
    if spec.mixed:
        raise UsageError("pipeline needs a pure initial state")
    if _spin(args).twice_value != 1:
        raise UsageError("pipeline models the dephasing qubit: --j must be 1")
    if args.t2star_us <= 0:
        raise UsageError("--t2star-us must be > 0")
    shots = _shots(args, DEFAULT_SHOTS)
    grid = _grid(args)
    points = dephasing_series(taus, args.t2star_us, shots, args.seed, grid, _readout(args.readout),
                              eps=spec.eps, eta=spec.eta, workers=max(args.threads, 1), keep=True)
    out = Path(args.out)
    quad = analysis_quadrature(grid)
    reference = wigner_from_rho(pure_qubit(spec.eps, spec.eta), grid)
    rows, entries = [], []
    for pt in points:
        tag = f"tau_{pt.tau_us:.3f}us"
        io.probability_grid_to_csv(pt.probabilities, out / f"probabilities_{tag}.csv")
        io.wigner_map_to_csv(pt.wigner, out / f"wigner_{tag}.csv")
        res = analyze_map(pt.wigner, reference, quad)
        res["fidelity_se"], res["purity_se"] = pt.fidelity_se, pt.purity_se
        io.write_json(res, out / f"analysis_{tag}.json")
        rows.append((pt.tau_us, pt.fidelity, pt.purity, pt.wmin))
        entries.append({"tau_us": pt.tau_us, "fidelity": pt.fidelity, "purity": pt.purity,
                        "wmin": pt.wmin, "fidelity_se": pt.fidelity_se, "purity_se": pt.purity_se})
    io.atomic_write(out / "series.csv", _series_csv(rows))
    summary = {"state": spec.label, "t2star_us": args.t2star_us, "shots": shots, "seed": args.seed,
               "theta_steps": args.theta_steps, "phi_steps": args.phi_steps, "series": entries}
    io.write_json(summary, out / "summary.json")
    return 0


HANDLERS = {"forward": cmd_forward, "simulate": cmd_simulate, "reconstruct": cmd_reconstruct,
            "analyze": cmd_analyze, "ramsey": cmd_ramsey, "pipeline": cmd_pipeline}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return HANDLERS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"spinwigner: error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"spinwigner: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
