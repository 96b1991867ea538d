"""CSV/JSON readers and writers for maps, probability grids, Ramsey records and fits.

CSV files carry metadata as leading ``# key=value`` lines. Floats are
written with 17 significant digits so a write/read cycle is lossless.
Angles are radians (``_rad``), times microseconds (``_us``), frequencies MHz.
"""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .angular import HalfInt
from .simulate import RamseyData
from .sphere import SphereGrid
from .state import DensityMatrix
from .wigner import ProbabilityGrid, WignerMap

__all__ = [
    "fmt",
    "atomic_write",
    "wigner_map_to_csv",
    "wigner_map_from_csv",
    "probability_grid_to_csv",
    "probability_grid_from_csv",
    "ramsey_to_csv",
    "ramsey_from_csv",
    "write_json",
    "read_json",
    "density_matrix_to_json",
    "density_matrix_from_json",
    "m_label",
]

PathLike = Union[str, os.PathLike]


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def atomic_write(path: PathLike, text: str) -> None:
    """Write ``text`` to a temp file beside ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _meta_lines(meta: dict) -> list[str]:
    out = []
    for k, v in meta.items():
        if isinstance(v, float):
            v = fmt(v)
        out.append(f"# {k}={v}")
    return out


def _split_meta(text: str):
    meta, rows = {}, []
    for lineno, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s:
            continue
        if s.startswith("#"):
            body = s[1:].strip()
            if "=" in body:
                k, v = body.split("=", 1)
                meta[k.strip()] = v.strip()
            continue
        rows.append((lineno, s))
    return meta, rows


def _parse_table(rows, expected_header: list[str]):
    if not rows:
        raise ValueError("no header row")
    lineno, header = rows[0]
    cols = [c.strip() for c in header.split(",")]
    if cols != expected_header:
        raise ValueError(f"line {lineno}: expected columns {','.join(expected_header)}, got {header}")
    data = np.empty((len(rows) - 1, len(cols)))
    for i, (lineno, s) in enumerate(rows[1:]):
        parts = s.split(",")
        if len(parts) != len(cols):
            raise ValueError(f"line {lineno}: expected {len(cols)} fields, got {len(parts)}")
        try:
            data[i] = [float(p) for p in parts]
        except ValueError:
            raise ValueError(f"line {lineno}: non-numeric field in {s!r}") from None
        if not np.all(np.isfinite(data[i])):
            raise ValueError(f"line {lineno}: non-finite value")
    return data


def _grid_from_columns(theta: np.ndarray, phi: np.ndarray) -> SphereGrid:
    th_nodes = list(dict.fromkeys(theta.tolist()))
    ph_nodes = list(dict.fromkeys(phi.tolist()))
    grid = SphereGrid(np.array(th_nodes), np.array(ph_nodes))
    gt, gp = grid.points()
    if gt.size != theta.size or not (np.array_equal(gt, theta) and np.array_equal(gp, phi)):
        raise ValueError("rows do not form a theta-outer tensor grid")
    return grid


def m_label(twice_m: int) -> str:
    if twice_m % 2 == 0:
        return f"p_{twice_m // 2:+d}" if twice_m else "p_0"
    return f"p_{twice_m:+d}/2"


def _p_columns(j: HalfInt) -> list[str]:
    tj = j.twice_value
    return [m_label(tm) for tm in range(tj, -tj - 1, -2)]


def wigner_map_to_csv(w: WignerMap, path: Optional[PathLike] = None) -> str:
    th, ph = w.grid.points()
    lines = _meta_lines({"j_twice": w.j.twice_value, **w.meta})
    lines.append("theta_rad,phi_rad,w")
    lines += [f"{fmt(a)},{fmt(b)},{fmt(c)}" for a, b, c in zip(th, ph, w.values)]
    text = "\n".join(lines) + "\n"
    if path is not None:
        atomic_write(path, text)
    return text


def _read(source) -> str:
    # multi-line strings are file contents, anything else a path
    if isinstance(source, str) and "\n" in source:
        return source
    return Path(source).read_text()


def _coerce(v: str):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    return v


def wigner_map_from_csv(source) -> WignerMap:
    """Read a map from a path or from CSV text."""
    meta, rows = _split_meta(_read(source))
    data = _parse_table(rows, ["theta_rad", "phi_rad", "w"])
    if "j_twice" not in meta:
        raise ValueError("missing '# j_twice=' header")
    j = HalfInt(int(meta.pop("j_twice")))
    grid = _grid_from_columns(data[:, 0], data[:, 1])
    return WignerMap(grid, data[:, 2], j, {k: _coerce(v) for k, v in meta.items()})


def probability_grid_to_csv(pg: ProbabilityGrid, path: Optional[PathLike] = None) -> str:
    th, ph = pg.grid.points()
    lines = _meta_lines({"j_twice": pg.j.twice_value, "shots": pg.shots, **pg.meta})
    lines.append(",".join(["theta_rad", "phi_rad"] + _p_columns(pg.j)))
    for a, b, row in zip(th, ph, pg.probs):
        lines.append(",".join([fmt(a), fmt(b)] + [fmt(v) for v in row]))
    text = "\n".join(lines) + "\n"
    if path is not None:
        atomic_write(path, text)
    return text


def probability_grid_from_csv(source) -> ProbabilityGrid:
    meta, rows = _split_meta(_read(source))
    if "j_twice" not in meta or "shots" not in meta:
        raise ValueError("missing '# j_twice=' or '# shots=' header")
    j = HalfInt(int(meta.pop("j_twice")))
    shots = int(meta.pop("shots"))
    data = _parse_table(rows, ["theta_rad", "phi_rad"] + _p_columns(j))
    grid = _grid_from_columns(data[:, 0], data[:, 1])
    return ProbabilityGrid(grid, data[:, 2:], j, shots, {k: _coerce(v) for k, v in meta.items()})


def ramsey_to_csv(data: RamseyData, path: Optional[PathLike] = None) -> str:
    lines = _meta_lines({"detuning_mhz": float(data.detuning_hint), "shots": data.shots, "seed": data.seed})
    has_sigma = data.sigma is not None
    lines.append("tau_us,signal,sigma" if has_sigma else "tau_us,signal")
    for i, (t, s) in enumerate(zip(data.taus, data.signals)):
        row = [fmt(t), fmt(s)] + ([fmt(data.sigma[i])] if has_sigma else [])
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    if path is not None:
        atomic_write(path, text)
    return text


def ramsey_from_csv(source) -> RamseyData:
    meta, rows = _split_meta(_read(source))
    header = rows[0][1].replace(" ", "") if rows else ""
    cols = ["tau_us", "signal", "sigma"] if header == "tau_us,signal,sigma" else ["tau_us", "signal"]
    data = _parse_table(rows, cols)
    return RamseyData(data[:, 0], data[:, 1], float(meta.get("detuning_mhz", 0.5)),
                      int(meta.get("shots", 0)), int(meta.get("seed", 0)),
                      data[:, 2] if data.shape[1] == 3 else None)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def write_json(obj, path: Optional[PathLike] = None) -> str:
    text = json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"
    if path is not None:
        atomic_write(path, text)
    return text


def read_json(path: PathLike):
    return json.loads(Path(path).read_text())


def density_matrix_to_json(rho: DensityMatrix, path: Optional[PathLike] = None) -> str:
    return write_json(rho.to_json(), path)


def density_matrix_from_json(source, check_psd: bool = True) -> DensityMatrix:
    obj = source if isinstance(source, dict) else json.loads(_read(source))
    return DensityMatrix.from_json(obj, check_psd=check_psd)
