"""Command-line interface.

Subcommands: ``cluster`` (one pipeline run), ``bench`` (ratio sweep over a
shared graph), ``scale`` (coarsening-time probe over growing synthetic
data), ``eval`` (accuracy between two label files), and ``gen`` (synthetic
datasets to CSV). Exit codes: 0 success, 2 configuration error, 3 data
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .dataio import make_two_circles, make_two_moons, save_csv
from .errors import ConfigError, DataError
from .evalmetrics import accuracy
from .pipeline import (
    RunConfig,
    bench_rows_to_csv,
    bench_sweep,
    report_to_json,
    run_pipeline,
    scaling_probe,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    """Flags mirroring RunConfig; unset flags fall back to config-file/defaults."""
    p.add_argument("--config", metavar="JSON", help="JSON config file merged under explicit flags")
    p.add_argument("--data", dest="data_path", help="input dataset path")
    p.add_argument("--format", dest="data_format",
                   choices=["csv", "libsvm", "idx", "moons", "circles"],
                   help="dataset format or synthetic generator")
    p.add_argument("--labels-path", help="IDX label file accompanying --data")
    p.add_argument("--label-column", help="CSV label column (index, name, or 'last')")
    p.add_argument("--n", dest="n_synthetic", type=int, help="synthetic sample count")
    p.add_argument("--noise", type=float, help="synthetic noise std")
    p.add_argument("--radius-ratio", type=float, help="inner/outer radius for circles")
    p.add_argument("--normalize", action="store_true", default=None,
                   help="min-max scale features to [0,1]")
    p.add_argument("--k", dest="k_clusters", type=int, help="number of clusters")
    p.add_argument("--mode", choices=["coarsened", "standard_sc", "kmeans_raw"])
    p.add_argument("--knn", dest="k_neighbors", type=int, help="neighbors per node")
    p.add_argument("--weighting", choices=["gaussian", "binary"])
    p.add_argument("--sigma", help="gaussian kernel width or 'auto'")
    p.add_argument("--ratio", dest="target_ratio", type=float, help="node reduction ratio")
    p.add_argument("--test-vectors", dest="n_vectors", type=int,
                   help="smoothed vector count")
    p.add_argument("--sweeps", type=int, help="Gauss-Seidel sweeps per level")
    p.add_argument("--theta", dest="threshold", type=float, help="affinity cutoff")
    p.add_argument("--max-agg-size", type=int, help="aggregate size cap")
    p.add_argument("--max-levels", type=int)
    p.add_argument("--symmetric-sweeps", action="store_true", default=None,
                   help="append a reverse Gauss-Seidel pass to every sweep")
    p.add_argument("--include-trivial", action="store_true", default=None,
                   help="keep zero-eigenvalue eigenvectors in the embedding")
    p.add_argument("--row-normalize", action="store_true", default=None,
                   help="scale embedding rows to unit norm")
    p.add_argument("--dense-limit", type=int, help="largest dimension for the dense eigensolver")
    p.add_argument("--eig-mode", choices=["auto", "dense", "lanczos"])
    p.add_argument("--restarts", type=int, help="k-means restarts")
    p.add_argument("--max-iters", type=int, help="k-means iteration cap")
    p.add_argument("--seed", type=int, help="base RNG seed (default 42)")
    p.add_argument("--repeats", type=int, help="repeat runs; report mean/std ACC")
    p.add_argument("--out", dest="output", help="output path (JSON report / CSV)")
    p.add_argument("--hierarchy-out", help="dump the coarsening hierarchy as JSON")


def _build_config(args: argparse.Namespace) -> RunConfig:
    base = RunConfig().to_dict()
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise DataError(f"config file not found: {path}")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from None
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        unknown = set(loaded) - set(base)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        base.update(loaded)
    for key in base:
        val = getattr(args, key, None)
        if val is not None:
            base[key] = val
    if base.get("label_column") is not None:
        lc = base["label_column"]
        if isinstance(lc, str) and lc != "last":
            try:
                base["label_column"] = int(lc)
            except ValueError:
                pass  # header name
    if base.get("sigma") not in (None, "auto"):
        try:
            base["sigma"] = float(base["sigma"])
        except (TypeError, ValueError):
            raise ConfigError(f"sigma must be a number or 'auto', got {base['sigma']!r}") from None
    cfg = RunConfig.from_dict(base)
    cfg.validate()
    return cfg


def _cmd_cluster(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    result, report = run_pipeline(cfg)  # writes cfg.output itself when set
    text = report_to_json(report)
    if args.labels_out:
        Path(args.labels_out).write_text(
            "\n".join(str(int(v)) for v in result.labels) + "\n"
        )
    sys.stdout.write(text)
    return EXIT_OK


def _cmd_bench(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    try:
        ratios = [float(tok) for tok in args.ratios.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse ratios {args.ratios!r}") from None
    rows = bench_sweep(cfg, ratios)
    csv_text = bench_rows_to_csv(rows)
    if cfg.output:
        Path(cfg.output).write_text(csv_text)
    sys.stdout.write(csv_text)
    return EXIT_OK


def _cmd_scale(args: argparse.Namespace) -> int:
    cfg = _build_config(args)
    try:
        sizes = [int(tok) for tok in args.sizes.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse sizes {args.sizes!r}") from None
    rows = scaling_probe(sizes, args.generator, cfg)
    lines = ["n,coarsen_seconds,ratio_vs_prev,coarse_nodes"]
    for row in rows:
        ratio = "" if row["ratio_vs_prev"] is None else format(row["ratio_vs_prev"], ".3f")
        lines.append(f"{row['n']},{row['coarsen_seconds']:.6f},{ratio},{row['coarse_nodes']}")
    text = "\n".join(lines) + "\n"
    if cfg.output:
        Path(cfg.output).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def _read_label_file(path: str) -> np.ndarray:
    p = Path(path)
    if not p.exists():
        raise DataError(f"label file not found: {p}")
    values = []
    for lineno, line in enumerate(p.read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            values.append(int(line))
        except ValueError:
            raise DataError(f"non-integer label {line!r} at {p}:{lineno}") from None
    if not values:
        raise DataError(f"no labels in {p}")
    return np.asarray(values, dtype=np.int64)


def _cmd_eval(args: argparse.Namespace) -> int:
    truth = _read_label_file(args.truth)
    pred = _read_label_file(args.predicted)
    if truth.shape != pred.shape:
        raise DataError(f"label counts differ: {truth.size} vs {pred.size}")
    report = accuracy(truth, pred)
    payload = json.dumps(
        {"acc": report.acc, "mapping": list(report.mapping), "n": int(truth.size)},
        sort_keys=True, indent=2,
    ) + "\n"
    if args.output:
        Path(args.output).write_text(payload)
    sys.stdout.write(payload)
    return EXIT_OK


def _cmd_gen(args: argparse.Namespace) -> int:
    if args.generator == "moons":
        ds = make_two_moons(args.n, args.noise, args.seed)
    else:
        ds = make_two_circles(args.n, args.radius_ratio, args.noise, args.seed)
    save_csv(ds, args.out, include_labels=not args.no_labels)
    sys.stdout.write(f"wrote {ds.n_samples} samples to {args.out}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specagg",
        description="Spectral clustering with spectrum-preserving node aggregation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_cluster = sub.add_parser("cluster", help="run the clustering pipeline once")
    _add_config_flags(p_cluster)
    p_cluster.add_argument("--labels-out", help="write predicted labels, one per line")
    p_cluster.set_defaults(func=_cmd_cluster)

    p_bench = sub.add_parser("bench", help="sweep reduction ratios over one graph")
    _add_config_flags(p_bench)
    p_bench.add_argument("--ratios", required=True, help="comma-separated ratios, e.g. 5,10,50")
    p_bench.set_defaults(func=_cmd_bench)

    p_scale = sub.add_parser("scale", help="probe coarsening time against dataset size")
    _add_config_flags(p_scale)
    p_scale.add_argument("--sizes", required=True, help="comma-separated increasing sizes")
    p_scale.add_argument("--generator", choices=["moons", "circles"], default="moons")
    p_scale.set_defaults(func=_cmd_scale)

    p_eval = sub.add_parser("eval", help="accuracy between two label files")
    p_eval.add_argument("--truth", required=True)
    p_eval.add_argument("--predicted", required=True)
    p_eval.add_argument("--out", dest="output")
    p_eval.set_defaults(func=_cmd_eval)

    p_gen = sub.add_parser("gen", help="write a synthetic dataset as CSV")
    p_gen.add_argument("generator", choices=["moons", "circles"])
    p_gen.add_argument("--n", type=int, default=1000)
    p_gen.add_argument("--noise", type=float, default=0.05)
    p_gen.add_argument("--radius-ratio", type=float, default=0.5)
    p_gen.add_argument("--seed", type=int, default=42)
    p_gen.add_argument("--no-labels", action="store_true")
    p_gen.add_argument("--out", required=True)
    p_gen.set_defaults(func=_cmd_gen)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG
    except DataError as exc:
        sys.stderr.write(f"data error: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
