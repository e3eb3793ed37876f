"""End-to-end pipeline runs, ratio sweeps, and scaling probes.

A run builds the kNN graph, optionally coarsens it, embeds the (reduced)
Laplacian, clusters the embedding rows with k-means, and lifts cluster
membership back to the original samples. Three modes are available:
``coarsened`` (the full pipeline), ``standard_sc`` (no reduction), and
``kmeans_raw`` (k-means directly on the features, the sanity baseline).
"""

from __future__ import annotations

import dataclasses
import json
import time
import warnings
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from . import dataio
from .cluster import ClusterResult, kmeans, lift_membership
from .coarsen import CoarseningHierarchy, CoarsenParams, build_hierarchy, save_hierarchy_json
from .dataio import Dataset
from .errors import ConfigError
from .evalmetrics import accuracy
from .graph import LaplacianMatrix, SimilarityGraph, build_knn_graph, laplacian
from .spectral import bottom_eigs, embed_rows

__all__ = [
    "RunConfig",
    "EvalReport",
    "load_dataset",
    "run_pipeline",
    "bench_sweep",
    "bench_rows_to_csv",
    "scaling_probe",
    "report_to_json",
]

_MODES = ("coarsened", "standard_sc", "kmeans_raw")
_FORMATS = ("csv", "libsvm", "idx", "moons", "circles")

BENCH_COLUMNS = ("ratio", "acc", "coarse_nodes", "t_graph", "t_coarsen",
                 "t_eigen", "t_kmeans", "t_lift")


@dataclass
class RunConfig:
    """Everything one pipeline run needs; mirrors the CLI flags."""

    # data source
    data_format: str = "moons"
    data_path: Optional[str] = None
    labels_path: Optional[str] = None  # idx companion file
    label_column: Union[int, str, None] = None  # csv label selector
    n_synthetic: int = 1000
    noise: float = 0.05
    radius_ratio: float = 0.5
    normalize: bool = False

    # clustering task
    k_clusters: int = 2
    mode: str = "coarsened"

    # kNN graph
    k_neighbors: int = 10
    weighting: str = "gaussian"
    sigma: Union[float, str] = "auto"

    # coarsening
    target_ratio: float = 50.0
    n_vectors: int = 8
    sweeps: int = 4
    threshold: float = 0.5
    max_agg_size: int = 8
    max_levels: int = 30
    symmetric_sweeps: bool = False

    # spectral embedding
    include_trivial: bool = False
    row_normalize: bool = False
    dense_limit: int = 4000
    eig_mode: str = "auto"  # auto picks lanczos above dense_limit

    # k-means
    restarts: int = 10
    max_iters: int = 100

    # run control
    seed: int = 42
    repeats: int = 1
    output: Optional[str] = None  # JSON report destination
    hierarchy_out: Optional[str] = None  # JSON hierarchy dump (first repeat)

    def validate(self) -> None:
        if self.mode not in _MODES:
            raise ConfigError(f"mode must be one of {_MODES}, got {self.mode!r}")
        if self.data_format not in _FORMATS:
            raise ConfigError(f"data format must be one of {_FORMATS}, got {self.data_format!r}")
        if self.data_format in ("csv", "libsvm", "idx") and not self.data_path:
            raise ConfigError(f"data_path is required for format {self.data_format!r}")
        if self.k_clusters < 1:
            raise ConfigError(f"k_clusters must be >= 1, got {self.k_clusters}")
        if self.k_neighbors < 1:
            raise ConfigError(f"k_neighbors must be >= 1, got {self.k_neighbors}")
        if self.weighting not in ("gaussian", "binary"):
            raise ConfigError(f"weighting must be gaussian or binary, got {self.weighting!r}")
        if self.sigma != "auto":
            if float(self.sigma) <= 0:
                raise ConfigError(f"sigma must be positive or 'auto', got {self.sigma}")
        if self.target_ratio < 1:
            raise ConfigError(f"target_ratio must be >= 1, got {self.target_ratio}")
        if self.eig_mode not in ("auto", "dense", "lanczos"):
            raise ConfigError(f"eig_mode must be auto, dense, or lanczos, got {self.eig_mode!r}")
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")
        if self.n_synthetic < 4:
            raise ConfigError(f"n_synthetic must be >= 4, got {self.n_synthetic}")
        if self.noise < 0:
            raise ConfigError(f"noise must be >= 0, got {self.noise}")
        if self.dense_limit < 1:
            raise ConfigError(f"dense_limit must be >= 1, got {self.dense_limit}")
        # range checks shared with the stage functions
        self.coarsen_params().validate()
        if self.restarts < 1 or self.max_iters < 1:
            raise ConfigError("restarts and max_iters must be >= 1")

    def coarsen_params(self, seed: Optional[int] = None) -> CoarsenParams:
        return CoarsenParams(
            n_vectors=self.n_vectors,
            sweeps=self.sweeps,
            threshold=self.threshold,
            max_agg_size=self.max_agg_size,
            max_levels=self.max_levels,
            seed=self.seed if seed is None else seed,
            symmetric_sweeps=self.symmetric_sweeps,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass
class EvalReport:
    """Accuracy, timings, and reduction statistics for one configuration."""

    mode: str
    dataset: str
    n_samples: int
    n_features: int
    k_clusters: int
    repeats: int
    acc: Optional[float]  # mean over repeats when labels exist
    acc_std: Optional[float]
    acc_runs: list
    stage_seconds: dict  # graph / coarsen / eigen / kmeans / lift, mean over repeats
    level_sizes: list  # [n_nodes, n_edges] finest to coarsest
    final_p: int
    reached_target: bool
    config: dict
    warnings: list = field(default_factory=list)


def report_to_json(report: EvalReport) -> str:
    return json.dumps(dataclasses.asdict(report), sort_keys=True, indent=2) + "\n"


def load_dataset(cfg: RunConfig) -> Dataset:
    """Materialize the configured data source."""
    fmt = cfg.data_format
    if fmt == "moons":
        ds = dataio.make_two_moons(cfg.n_synthetic, cfg.noise, cfg.seed)
    elif fmt == "circles":
        ds = dataio.make_two_circles(cfg.n_synthetic, cfg.radius_ratio, cfg.noise, cfg.seed)
    elif fmt == "csv":
        ds = dataio.load_csv(cfg.data_path, cfg.label_column)
    elif fmt == "libsvm":
        ds = dataio.load_libsvm(cfg.data_path)
    elif fmt == "idx":
        ds = dataio.load_idx(cfg.data_path, cfg.labels_path)
    else:  # pragma: no cover - validate() rejects this earlier
        raise ConfigError(f"unknown data format {fmt!r}")
    if cfg.normalize:
        ds = dataio.minmax_scale(ds)
    return ds


def _resolve_eig_method(cfg: RunConfig, dimension: int) -> str:
    if cfg.eig_mode == "auto":
        return "dense" if dimension <= cfg.dense_limit else "lanczos"
    return cfg.eig_mode


class _StageClock:
    """Accumulates per-stage wall time over repeats."""

    def __init__(self):
        self.totals = {k: 0.0 for k in ("graph", "coarsen", "eigen", "kmeans", "lift")}

    def add(self, stage: str, seconds: float) -> None:
        self.totals[stage] += seconds

    def mean(self, repeats: int) -> dict:
        return {k: v / repeats for k, v in self.totals.items()}


def _identity_hierarchy(lap: LaplacianMatrix) -> CoarseningHierarchy:
    n = lap.n_nodes
    return CoarseningHierarchy(
        levels=(),
        coarsest=lap,
        correspondence=np.arange(n, dtype=np.int64),
        reached_target=True,
    )


@contextmanager
def _stage(name: str):
    """Attach the failing stage's name to propagated exceptions."""
    try:
        yield
    except Exception as exc:
        prefix = f"{name} stage"
        if exc.args and isinstance(exc.args[0], str) and not exc.args[0].startswith(prefix):
            exc.args = (f"{prefix}: {exc.args[0]}",) + exc.args[1:]
        raise


def run_pipeline(cfg: RunConfig, dataset: Optional[Dataset] = None,
                 graph: Optional[SimilarityGraph] = None,
                 shared_graph_seconds: float = 0.0):
    """Execute the configured pipeline; returns (ClusterResult, EvalReport).

    ``dataset`` and ``graph`` allow sweeps to reuse already-built inputs;
    ``shared_graph_seconds`` is then echoed as the graph-stage time. With
    ``repeats`` > 1 every repeat r reruns the seeded stages with seed + r
    and the report carries mean and standard deviation of the accuracy;
    the returned labels come from the first repeat.
    """
    cfg.validate()
    ds = dataset if dataset is not None else load_dataset(cfg)
    if cfg.k_clusters > ds.n_samples:
        raise ConfigError(f"k_clusters={cfg.k_clusters} exceeds sample count {ds.n_samples}")

    clock = _StageClock()
    warnings_list: list = []
    acc_runs: list = []
    first_result: Optional[ClusterResult] = None
    level_sizes: list = []
    final_p = ds.n_samples
    reached = True

    if cfg.mode == "kmeans_raw":
        for rep in range(cfg.repeats):
            t0 = time.perf_counter()
            with _stage("kmeans"):
                km = kmeans(ds.features, cfg.k_clusters, cfg.restarts, cfg.max_iters,
                            seed=cfg.seed + rep)
            clock.add("kmeans", time.perf_counter() - t0)
            result = ClusterResult(km.assignment, km.assignment, cfg.k_clusters)
            if rep == 0:
                first_result = result
            if ds.labels is not None:
                acc_runs.append(accuracy(ds.labels, result.labels).acc)
        level_sizes = [[ds.n_samples, 0]]
    else:
        if graph is None:
            t0 = time.perf_counter()
            with _stage("graph"):
                graph = build_knn_graph(ds, cfg.k_neighbors, cfg.weighting, cfg.sigma)
            clock.add("graph", (time.perf_counter() - t0))
            clock.totals["graph"] *= cfg.repeats  # built once, reported per repeat
        else:
            clock.totals["graph"] = shared_graph_seconds * cfg.repeats
        lap = laplacian(graph)

        cached_embedding = None
        for rep in range(cfg.repeats):
            if cfg.mode == "coarsened":
                t0 = time.perf_counter()
                with _stage("coarsen"):
                    hierarchy = build_hierarchy(lap, cfg.target_ratio,
                                                cfg.coarsen_params(seed=cfg.seed + rep))
                clock.add("coarsen", time.perf_counter() - t0)
                if hierarchy.warning and hierarchy.warning not in warnings_list:
                    warnings_list.append(hierarchy.warning)
            else:
                hierarchy = _identity_hierarchy(lap)

            reduced = hierarchy.coarsest
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                t0 = time.perf_counter()
                with _stage("eigen"):
                    if hierarchy.n_levels == 0 and cached_embedding is not None:
                        embedding = cached_embedding  # identity hierarchy is seed-free
                    else:
                        embedding = bottom_eigs(
                            reduced, cfg.k_clusters,
                            skip_zero=not cfg.include_trivial,
                            dense_limit=cfg.dense_limit,
                            method=_resolve_eig_method(cfg, reduced.n_nodes),
                            seed=cfg.seed,
                        )
                        if hierarchy.n_levels == 0:
                            cached_embedding = embedding
                    clock.add("eigen", time.perf_counter() - t0)
                    points = embed_rows(embedding, cfg.row_normalize)
            for w in caught:
                msg = str(w.message)
                if msg not in warnings_list:
                    warnings_list.append(msg)
            t0 = time.perf_counter()
            with _stage("kmeans"):
                km = kmeans(points, cfg.k_clusters, cfg.restarts, cfg.max_iters,
                            seed=cfg.seed + rep)
            clock.add("kmeans", time.perf_counter() - t0)

            t0 = time.perf_counter()
            with _stage("lift"):
                result = lift_membership(km.assignment, hierarchy)
            clock.add("lift", time.perf_counter() - t0)

            if rep == 0:
                first_result = result
                level_sizes = [list(pair) for pair in hierarchy.level_sizes()]
                final_p = hierarchy.coarse_count
                reached = hierarchy.reached_target
                if cfg.hierarchy_out:
                    save_hierarchy_json(hierarchy, cfg.hierarchy_out)
            if ds.labels is not None:
                acc_runs.append(accuracy(ds.labels, result.labels).acc)

    assert first_result is not None
    acc_mean = float(np.mean(acc_runs)) if acc_runs else None
    acc_std = float(np.std(acc_runs)) if acc_runs else None
    report = EvalReport(
        mode=cfg.mode,
        dataset=ds.name,
        n_samples=ds.n_samples,
        n_features=ds.n_features,
        k_clusters=cfg.k_clusters,
        repeats=cfg.repeats,
        acc=acc_mean,
        acc_std=acc_std,
        acc_runs=[float(a) for a in acc_runs],
        stage_seconds=clock.mean(cfg.repeats),
        level_sizes=level_sizes,
        final_p=final_p,
        reached_target=reached,
        config=cfg.to_dict(),
        warnings=warnings_list,
    )
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(report_to_json(report))
    return first_result, report


def bench_sweep(cfg: RunConfig, ratios) -> list:
    """One pipeline run per reduction ratio over a shared kNN graph.

    Returns one dict per ratio with the benchmark columns; failures are
    recorded in an ``error`` field and the sweep continues.
    """
    ratios = list(ratios)
    if not ratios:
        raise ConfigError("ratios must be non-empty")
    for r in ratios:
        if r < 1:
            raise ConfigError(f"every ratio must be >= 1, got {r}")
    cfg.validate()

    ds = load_dataset(cfg)
    t0 = time.perf_counter()
    graph = build_knn_graph(ds, cfg.k_neighbors, cfg.weighting, cfg.sigma)
    t_graph = time.perf_counter() - t0

    rows = []
    for ratio in ratios:
        run_cfg = dataclasses.replace(cfg, target_ratio=float(ratio), mode="coarsened",
                                      output=None, hierarchy_out=None)
        row = {"ratio": float(ratio)}
        try:
            _, report = run_pipeline(run_cfg, dataset=ds, graph=graph,
                                     shared_graph_seconds=t_graph)
            row.update(
                acc=report.acc,
                coarse_nodes=report.final_p,
                t_graph=report.stage_seconds["graph"],
                t_coarsen=report.stage_seconds["coarsen"],
                t_eigen=report.stage_seconds["eigen"],
                t_kmeans=report.stage_seconds["kmeans"],
                t_lift=report.stage_seconds["lift"],
            )
        except Exception as exc:  # record and continue the sweep
            row["error"] = f"{type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def bench_rows_to_csv(rows) -> str:
    """Render sweep rows as CSV; an error column appears only when needed."""
    columns = list(BENCH_COLUMNS)
    if any("error" in row for row in rows):
        columns.append("error")
    lines = [",".join(columns)]
    for row in rows:
        cells = []
        for col in columns:
            val = row.get(col)
            if val is None:
                cells.append("")
            elif isinstance(val, float):
                cells.append(format(val, ".6f"))
            else:
                cells.append(str(val))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def scaling_probe(sizes, generator: str, cfg: RunConfig,
                  timing_repeats: int = 1) -> list:
    """Coarsening wall time per dataset size, plus consecutive time ratios.

    Sizes must be strictly increasing. Graph construction runs outside the
    timed region, the kernels are warmed on a small instance first so JIT
    compilation never lands in a measurement, and with ``timing_repeats``
    above 1 the minimum over repeated identical builds is reported (the
    seeded build is deterministic, so repeats only average out OS noise).
    """
    sizes = list(sizes)
    if not sizes:
        raise ConfigError("sizes must be non-empty")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ConfigError(f"sizes must be strictly increasing, got {sizes}")
    if generator not in ("moons", "circles"):
        raise ConfigError(f"generator must be moons or circles, got {generator!r}")
    if timing_repeats < 1:
        raise ConfigError(f"timing_repeats must be >= 1, got {timing_repeats}")
    cfg.validate()

    def _make(n: int) -> Dataset:
        if generator == "moons":
            return dataio.make_two_moons(n, cfg.noise, cfg.seed)
        return dataio.make_two_circles(n, cfg.radius_ratio, cfg.noise, cfg.seed)

    # Warm the JIT-compiled kernels on a tiny instance.
    warm = _make(max(64, min(256, sizes[0])))
    warm_lap = laplacian(build_knn_graph(warm, min(cfg.k_neighbors, warm.n_samples - 1),
                                         cfg.weighting, cfg.sigma))
    build_hierarchy(warm_lap, 2.0, cfg.coarsen_params())

    rows = []
    prev_time = None
    for n in sizes:
        ds = _make(n)
        lap = laplacian(build_knn_graph(ds, cfg.k_neighbors, cfg.weighting, cfg.sigma))
        elapsed = None
        hierarchy = None
        for _ in range(timing_repeats):
            t0 = time.perf_counter()
            hierarchy = build_hierarchy(lap, cfg.target_ratio, cfg.coarsen_params())
            run = time.perf_counter() - t0
            elapsed = run if elapsed is None else min(elapsed, run)
        rows.append({
            "n": n,
            "coarsen_seconds": elapsed,
            "ratio_vs_prev": (elapsed / prev_time) if prev_time else None,
            "coarse_nodes": hierarchy.coarse_count,
        })
        prev_time = elapsed
    return rows
