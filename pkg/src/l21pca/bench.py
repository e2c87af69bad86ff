"""Reconstruction-error benchmark: corrupt a dataset, fit every method across a
grid of target dimensions and record one ``ResultRow`` per cell.

Config files are YAML::

    dataset:
      synthetic: {d: 64, n: 100, rank: 5, noise: 0.01}   # or path: faces/
      image_shape: [8, 8]        # needed for occlusion of non-image data
    protocol:
      kind: occlusion            # or outlier
      fractions: [0.1, 0.2, 0.3]
      pool: palms/               # outlier only; synthetic noise images if absent
      fill: 0.0                  # occlusion only
    methods: [classic, l1, r1, l21]
    dims: [21, 25, 29]           # or {start: 21, stop: 69, step: 4}
    solver: {tolerance: 1.0e-9, max_iterations: 200}
    seed: 0
    output: results/

Relative paths are resolved against the config file's directory.
"""

import csv
import logging
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .corruption import inject_outliers, occlude, synthesize_lowrank_dataset, to_unit_range
from .framework import SolverConfig
from .io import Dataset, load_dataset, matrix_from_images
from .metrics import DEFAULT_DIMS, ErrorCurve, recon_error_occlusion, recon_error_outlier
from .pca import METHODS, SOLVERS, center

log = logging.getLogger(__name__)

CSV_HEADER = ("dataset", "method", "protocol", "fraction", "m", "error", "objective",
              "iterations", "wall_ms", "seed")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    dataset: dict
    protocol: str
    fractions: tuple
    methods: tuple
    dims: tuple
    solver: SolverConfig = field(default_factory=SolverConfig)
    seed: int = 0
    output: Path = Path("results")
    pool: Path = None
    fill: float = 0.0
    base_dir: Path = Path(".")

    def validate(self):
        if self.protocol not in ("occlusion", "outlier"):
            raise ConfigError(f"protocol must be 'occlusion' or 'outlier', got {self.protocol!r}")
        if not self.methods:
            raise ConfigError("no methods selected")
        unknown = set(self.methods) - set(METHODS)
        if unknown:
            raise ConfigError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
        if not self.fractions:
            raise ConfigError("no corruption fractions given")
        for f in self.fractions:
            if not 0 < f <= 1:
                raise ConfigError(f"fraction {f} outside (0, 1]")
        if not self.dims:
            raise ConfigError("empty dimension grid")
        if "synthetic" not in self.dataset and "path" not in self.dataset:
            raise ConfigError("dataset needs either 'synthetic' or 'path'")
        if "path" in self.dataset and not self.resolve(self.dataset["path"]).exists():
            raise ConfigError(f"dataset path {self.dataset['path']} does not exist")
        if self.pool is not None and not self.resolve(self.pool).exists():
            raise ConfigError(f"outlier pool {self.pool} does not exist")
        return self

    def resolve(self, path):
        path = Path(path)
        return path if path.is_absolute() else self.base_dir / path


def _dims_from(grid):
    if grid is None:
        return DEFAULT_DIMS
    if isinstance(grid, dict):
        return tuple(range(int(grid["start"]), int(grid["stop"]) + 1, int(grid.get("step", 1))))
    return tuple(int(m) for m in grid)


def load_config(path, seed=None, output=None):
    """Read a YAML experiment config; ``seed``/``output`` override file values."""
    path = Path(path)
    raw = yaml.safe_load(path.read_text()) or {}
    protocol = raw.get("protocol") or {}
    solver = raw.get("solver") or {}
    config = ExperimentConfig(
        dataset=dict(raw.get("dataset") or {}),
        protocol=protocol.get("kind", "occlusion"),
        fractions=tuple(float(f) for f in protocol.get("fractions", (0.1, 0.2, 0.3))),
        methods=tuple(raw.get("methods", METHODS)),
        dims=_dims_from(raw.get("dims")),
        solver=SolverConfig(tolerance=float(solver.get("tolerance", 1e-9)),
                            max_iterations=int(solver.get("max_iterations", 200))),
        seed=int(raw.get("seed", 0) if seed is None else seed),
        output=Path(output if output is not None else raw.get("output", "results")),
        pool=protocol.get("pool"),
        fill=float(protocol.get("fill", 0.0)),
        base_dir=path.parent,
    )
    return config.validate()


@dataclass
class ResultRow:
    dataset: str
    method: str
    protocol: str
    fraction: float
    m: int
    error: float
    objective: float
    iterations: int
    wall_ms: float
    seed: int
    failure: str = None  # not written to the results CSV

    @property
    def failed(self):
        return self.failure is not None


def _square_shape(d):
    side = math.isqrt(d)
    if side * side != d:
        raise ConfigError(f"cannot infer an image shape for dimension {d}; set dataset.image_shape")
    return (side, side)


def build_dataset(config):
    """Materialize the configured dataset as images in ``[0, 1]``."""
    source = config.dataset
    if "synthetic" in source:
        s = source["synthetic"]
        x = synthesize_lowrank_dataset(int(s["d"]), int(s["n"]), int(s["rank"]),
                                       float(s.get("noise", 0.0)), int(s.get("seed", config.seed)))
        dataset = Dataset(x=to_unit_range(x), name=source.get("name", "synthetic"))
    else:
        dataset = load_dataset(config.resolve(source["path"]), source.get("format"))
        if "name" in source:
            dataset.name = source["name"]
    if source.get("image_shape"):
        dataset.image_shape = tuple(int(v) for v in source["image_shape"])
    elif dataset.image_shape is None:
        dataset.image_shape = _square_shape(dataset.x.shape[0])
    return dataset


def synthetic_pool(shape, size, seed):
    """Uniform-noise images: unstructured outliers for synthetic runs."""
    return np.random.default_rng(seed).uniform(0.0, 1.0, (size, *shape))


def _load_pool(config, shape, seed):
    if config.pool is None:
        return synthetic_pool(shape, 32, seed)
    pool = load_dataset(config.resolve(config.pool))
    if pool.image_shape is None:
        pool.image_shape = _square_shape(pool.x.shape[0])
    return pool.images


def corruption_seed(seed, fraction_index):
    return int(np.random.SeedSequence([seed, fraction_index]).generate_state(1)[0])


def _cell(job):
    (fraction, method, m, x_raw, x_train, mean, reference, protocol, solver, name, seed) = job
    start = time.perf_counter()
    try:
        result = SOLVERS[method](x_train, m, solver)
        if protocol == "occlusion":
            error = recon_error_occlusion(reference, x_raw, result.w, mean)
        else:
            error = recon_error_outlier(reference, result.w, mean)
        wall = (time.perf_counter() - start) * 1e3
        return ResultRow(name, method, protocol, fraction, m, error, result.objective,
                         result.trace.iterations, wall, seed)
    except Exception as exc:  # a failed cell must not stop the grid
        wall = (time.perf_counter() - start) * 1e3
        log.warning("cell %s/%s/m=%d failed: %s", method, fraction, m, exc)
        return ResultRow(name, method, protocol, fraction, m, math.nan, math.nan, 0, wall, seed,
                         failure=f"{type(exc).__name__}: {exc}")


def worker_count():
    value = os.environ.get("BENCH_THREADS")
    if not value:
        return 1
    try:
        return max(1, int(value))
    except ValueError:
        raise ConfigError(f"BENCH_THREADS must be an integer, got {value!r}") from None


def run_experiment(config, threads=None):
    """Run the full (fraction, method, m) grid and return rows in that order."""
    config.validate()
    dataset = build_dataset(config)
    d = dataset.x.shape[0]
    bad = [m for m in config.dims if not 1 <= m <= d]
    if bad:
        raise ConfigError(f"dims {bad} outside [1, {d}]")
    images = dataset.images
    jobs = []
    for fi, fraction in enumerate(config.fractions):
        cseed = corruption_seed(config.seed, fi)
        if config.protocol == "occlusion":
            corrupted, _ = occlude(images, fraction, cseed, fill=config.fill)
        else:
            pool = _load_pool(config, dataset.image_shape, cseed)
            corrupted, _ = inject_outliers(images, pool, fraction, cseed)
        # errors are measured on the pristine samples only, in the training-mean frame
        x_raw = matrix_from_images(corrupted)
        x_train, mean = center(x_raw)
        solver = replace(config.solver, seed=cseed)
        for method in config.methods:
            for m in config.dims:
                jobs.append((fraction, method, m, x_raw, x_train, mean, dataset.x, config.protocol,
                             solver, dataset.name, config.seed))
    threads = threads or worker_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_cell, jobs))
    else:
        rows = [_cell(job) for job in jobs]
    # map() keeps submission order, which is already (fraction, method, m)
    return rows


def _fmt(value):
    if isinstance(value, float):
        return "nan" if math.isnan(value) else format(value, ".12g")
    return str(value)


def emit_csv(rows, path):
    if not rows:
        raise ValueError("no rows to write")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([_fmt(getattr(row, name)) for name in CSV_HEADER])
    return Path(path)


def read_csv(path):
    types = {f.name: f.type for f in fields(ResultRow)}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [ResultRow(**{k: types[k](v) for k, v in rec.items()}) for rec in reader]


def error_curves(rows):
    """Group successful rows into one ``ErrorCurve`` per (protocol, fraction, method)."""
    groups = {}
    for row in rows:
        if not row.failed:
            groups.setdefault((row.protocol, row.fraction, row.method), []).append(row)
    curves = {}
    for key, members in groups.items():
        members.sort(key=lambda r: r.m)
        curves[key] = ErrorCurve(dims=[r.m for r in members], errors=[r.error for r in members],
                                 method=key[2], protocol=key[0])
    return curves


def write_outputs(rows, outdir):
    """Write ``results.csv``, one CSV per (protocol, fraction) figure, and failures."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = [emit_csv(rows, outdir / "results.csv")]
    for protocol, fraction in dict.fromkeys((r.protocol, r.fraction) for r in rows):
        subset = [r for r in rows if r.protocol == protocol and r.fraction == fraction]
        pct = format(fraction * 100, "g")
        written.append(emit_csv(subset, outdir / f"figure_{protocol}_{pct}pct.csv"))
    failed = [r for r in rows if r.failed]
    if failed:
        path = outdir / "failures.txt"
        path.write_text("".join(f"{r.method},{_fmt(r.fraction)},{r.m}: {r.failure}\n" for r in failed))
        written.append(path)
    return written
