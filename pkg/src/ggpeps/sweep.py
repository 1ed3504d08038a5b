"""Run configurations, (y, z) grids, CSV output and heatmaps for the command line."""
from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass

import numpy as np

from ggpeps.lattice import TorusLattice, ZN
from ggpeps.montecarlo import McConfig, exact_enumerate, run_chain
from ggpeps.observables import observables_by_name
from ggpeps.weight import VertexTensorParams, assemble

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("y", "z", "observable", "mean_re", "mean_im", "stderr", "n_samples", "acceptance_rate")
SPIKE_FACTOR = 5.0


class ConfigError(ValueError):
    """Invalid run configuration."""


@dataclass(frozen=True)
class Grid:
    y_min: float
    y_max: float
    y_steps: int
    z_min: float
    z_max: float
    z_steps: int

    def __post_init__(self) -> None:
        if self.y_steps < 1 or self.z_steps < 1:
            raise ConfigError("grid steps must be >= 1")

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y_min, self.y_max, self.y_steps)

    @property
    def zs(self) -> np.ndarray:
        return np.linspace(self.z_min, self.z_max, self.z_steps)

    def points(self) -> list[tuple[float, float]]:
        """Row-major over y then z; the list position is the point index."""
        return [(float(y), float(z)) for y in self.ys for z in self.zs]


@dataclass(frozen=True)
class RunSpec:
    lattice: str = "4x4"
    group_order: int = 3
    y: float = 1.0
    z: float = 1.0
    grid: Grid | None = None
    seed: int | None = None
    burn: int = 200
    sweeps: int = 2000
    bin: int = 50
    measure_every: int = 1
    observables: tuple[str, ...] = ("W11", "WL")
    out: str | None = None
    heatmap: str | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        try:
            self.torus()
            ZN(self.group_order)
            observables_by_name(self.torus(), self.observables)
            if self.seed is not None:
                self.mc_config(0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def torus(self) -> TorusLattice:
        return TorusLattice.parse(self.lattice)

    def mc_config(self, _point_index: int) -> McConfig:
        if self.seed is None:
            raise ConfigError("a seed is required (--seed); runs never draw hidden entropy")
        return McConfig(self.seed, self.burn, self.sweeps, self.bin, self.measure_every)

    def points(self) -> list[tuple[float, float]]:
        return self.grid.points() if self.grid else [(self.y, self.z)]


def load_spec(config_path: str | None, overrides: dict) -> RunSpec:
    """Merge a JSON config file with command-line overrides (overrides win)."""
    data: dict = {}
    if config_path:
        try:
            with open(config_path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {config_path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    data.update({k: v for k, v in overrides.items() if v is not None})
    grid = data.pop("grid", None)
    if isinstance(grid, dict):
        try:
            grid = Grid(**grid)
        except TypeError as exc:
            raise ConfigError(f"bad grid: {exc}") from None
    if "observables" in data:
        obs = data["observables"]
        data["observables"] = tuple(obs.split(",") if isinstance(obs, str) else obs)
    known = {f for f in RunSpec.__dataclass_fields__}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        return RunSpec(grid=grid, **data)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def run_point(spec: RunSpec, point_index: int, exact: bool = False) -> list[dict]:
    """CSV rows for one (y, z) point; the chain index is the point index."""
    y, z = spec.points()[point_index]
    lattice = spec.torus()
    assembly = assemble(lattice, VertexTensorParams(y, z), ZN(spec.group_order))
    observables = observables_by_name(lattice, spec.observables)
    if exact:
        values = exact_enumerate(assembly, observables)
        n_states = spec.group_order ** lattice.n_links
        return [_row(y, z, o.name, v, 0.0, n_states, float("nan")) for o, v in zip(observables, values)]
    estimates = run_chain(assembly, spec.mc_config(point_index), observables, chain_index=point_index)
    return [_row(y, z, e.name, e.mean, e.stderr, e.n_samples, e.acceptance_rate) for e in estimates]


def _row(y, z, name, mean, stderr, n_samples, rate) -> dict:
    return {"y": y, "z": z, "observable": name, "mean_re": mean.real, "mean_im": mean.imag,
            "stderr": stderr, "n_samples": n_samples, "acceptance_rate": rate}


def format_rows(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, CSV_COLUMNS, lineterminator="\n")
    for row in rows:
        writer.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in row.items()})
    return buf.getvalue()


def csv_header() -> str:
    return ",".join(CSV_COLUMNS) + "\n"


def execute(spec: RunSpec, stream, exact: bool = False) -> list[dict]:
    """Evaluate every point and write rows to ``stream`` in point order.

    Points run on a process pool when ``spec.workers > 1``; finished points are
    flushed as soon as all earlier points are written, so the file is always a
    valid prefix of the final output and independent of the worker count.
    """
    stream.write(csv_header())
    stream.flush()
    n_points = len(spec.points())
    results: dict[int, list[dict]] = {}
    all_rows: list[dict] = []
    next_index = 0

    def drain():
        nonlocal next_index
        while next_index in results:
            rows = results.pop(next_index)
            stream.write(format_rows(rows))
            stream.flush()
            all_rows.extend(rows)
            next_index += 1

    if spec.workers == 1 or n_points == 1:
        for i in range(n_points):
            results[i] = run_point(spec, i, exact)
            drain()
        return all_rows
    with ProcessPoolExecutor(max_workers=spec.workers) as pool:
        futures = {pool.submit(run_point, spec, i, exact): i for i in range(n_points)}
        for fut in as_completed(futures):
            results[futures[fut]] = fut.result()
            drain()
    return all_rows


def detect_spikes(values, factor: float = SPIKE_FACTOR) -> list[int]:
    """Indices ``i`` where the step ``values[i] -> values[i+1]`` is abrupt.

    A step is abrupt when ``|diff| > factor * median(|diff|)`` along the scan.
    """
    diffs = np.abs(np.diff(np.asarray(values, dtype=float)))
    if len(diffs) == 0:
        return []
    threshold = factor * np.median(diffs)
    return [int(i) for i in np.nonzero((diffs > threshold) & (diffs > 0))[0]]


def scan_metadata(spec: RunSpec, rows: list[dict], factor: float = SPIKE_FACTOR) -> dict:
    """Spike detection along each one-dimensional scan direction of the grid."""
    meta = {"spike_rule": f"|d mean_re| > {factor} * median |d mean_re|", "spike_factor": factor,
            "spec": {k: v for k, v in asdict(spec).items() if k not in ("out", "heatmap")}, "spikes": {}}
    for name in spec.observables:
        sel = [r for r in rows if r["observable"] == name]
        ys = sorted({r["y"] for r in sel})
        zs = sorted({r["z"] for r in sel})
        table = {(r["y"], r["z"]): r["mean_re"] for r in sel}
        found = {}
        if len(zs) > 1:
            for y in ys:
                idx = detect_spikes([table[y, z] for z in zs], factor)
                found[f"y={y!r}"] = [[zs[i], zs[i + 1]] for i in idx]
        if len(ys) > 1:
            for z in zs:
                idx = detect_spikes([table[y, z] for y in ys], factor)
                found[f"z={z!r}"] = [[ys[i], ys[i + 1]] for i in idx]
        meta["spikes"][name] = found
    return meta


def write_heatmap(path: str, rows: list[dict], observables, levels: int = 10) -> None:
    """Vector-graphics heatmap of ``mean_re`` per observable with a discrete colour scale."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from matplotlib.colors import BoundaryNorm

    matplotlib.rcParams["svg.hashsalt"] = "ggpeps"
    fig, axes = plt.subplots(1, len(observables), figsize=(4.5 * len(observables), 4), squeeze=False)
    for ax, name in zip(axes[0], observables):
        sel = [r for r in rows if r["observable"] == name]
        ys = sorted({r["y"] for r in sel})
        zs = sorted({r["z"] for r in sel})
        grid = np.full((len(ys), len(zs)), np.nan)
        for r in sel:
            grid[ys.index(r["y"]), zs.index(r["z"])] = r["mean_re"]
        lo, hi = np.nanmin(grid), np.nanmax(grid)
        if hi <= lo:
            hi = lo + 1e-12
        cmap = plt.get_cmap("viridis", levels)
        norm = BoundaryNorm(np.linspace(lo, hi, levels + 1), cmap.N)
        extent = [zs[0], zs[-1], ys[0], ys[-1]]
        img = ax.imshow(grid, origin="lower", aspect="auto", cmap=cmap, norm=norm, extent=extent,
                        interpolation="nearest")
        ax.set_xlabel("z")
        ax.set_ylabel("y")
        ax.set_title(f"Re <{name}>")
        fig.colorbar(img, ax=ax)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get("GGPEPS_WORKERS", "1")))
    except ValueError:
        raise ConfigError("GGPEPS_WORKERS must be an integer") from None

