"""Command-line front end.

Subcommands: ``partition`` (fragment a labeled CSV into client files),
``lambda`` (heterogeneity degree of a partition directory), ``run`` (full
pipeline on a partition directory), ``evaluate`` (validity indices for a
stored labeling), ``ablate`` (component/granularity ablations), ``bench``
(scaling measurements). All structured output is JSON; reports exclude
wall times so reruns with one seed are byte-identical (timings land in a
sibling document).
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .config import PartitionSpec, RunConfig, apply_lambda_level
from .data import Dataset, load_csv
from .errors import GoldError
from .heterogeneity import non_icd_degree, pairwise_js_matrix
from .metrics import all_indices
from .pipeline import ABLATION_MODES, BenchResult, bench_scaling, run_ablation_detailed, run_gold_detailed
from .simulate import ClientProvenance, FederationSplit, simulate_non_icd


def _dump(doc, path: Path | None = None) -> str:
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if path is not None:
        path.write_text(text, encoding="utf-8")
    return text


def _write_csv(path: Path, values: np.ndarray, labels=None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, row in enumerate(values):
            fields = [repr(float(v)) for v in row]
            if labels is not None:
                fields.append(str(int(labels[i])))
            fh.write(",".join(fields) + "\n")


def _read_scaled_csv(path: Path, has_labels: bool) -> Dataset:
    """Read a CSV written by ``partition`` without rescaling it (all files
    in a partition directory already share the source dataset's scale)."""
    rows = []
    labels = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            fields = [float(f) for f in line.split(",")]
            if has_labels:
                labels.append(int(fields[-1]))
                fields = fields[:-1]
            rows.append(fields)
    return Dataset(values=np.asarray(rows),
                   labels=np.asarray(labels, dtype=np.int64) if has_labels else None,
                   name=str(path))


def _load_partition(directory: Path) -> FederationSplit:
    manifest = json.loads((directory / "manifest.json").read_text(encoding="utf-8"))
    spec = PartitionSpec.from_dict(manifest["spec"])
    clients = []
    provenance = []
    for l, entry in enumerate(manifest["clients"]):
        clients.append(_read_scaled_csv(directory / f"client_{l:02d}.csv", True))
        provenance.append(ClientProvenance(
            global_indices=np.asarray(entry["global_indices"], dtype=np.int64),
            clusters=np.asarray(entry["clusters"], dtype=np.int64),
            subclusters=np.asarray(entry["subclusters"], dtype=np.int64),
            selected={int(k): list(v)
                      for k, v in entry["selected_subclusters"].items()},
        ))
    source_path = directory / "global.csv"
    source = _read_scaled_csv(source_path, True) if source_path.exists() else None
    return FederationSplit(clients=clients, provenance=provenance, spec=spec,
                           source=source)


def _load_config(args) -> tuple[RunConfig, PartitionSpec]:
    run_cfg = RunConfig()
    part_spec = PartitionSpec()
    if args.config:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if "run" in doc:
            run_cfg = RunConfig.from_dict(doc["run"])
        if "partition" in doc:
            part_spec = PartitionSpec.from_dict(doc["partition"])
    if args.seed is not None:
        run_cfg.seed = args.seed
        part_spec.seed = args.seed
    return run_cfg, part_spec


def _out_dir(args) -> Path | None:
    if not args.out:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_partition(args) -> int:
    _, spec = _load_config(args)
    if args.clients:
        d = spec.to_dict()
        d["L"] = args.clients
        spec = PartitionSpec.from_dict(d)
    if args.lambda_level:
        spec = apply_lambda_level(spec, args.lambda_level)
    data = load_csv(args.data, has_labels=True)
    split = simulate_non_icd(data, spec)
    lam = non_icd_degree(split.clients) if split.L >= 2 else None
    manifest = split.manifest()
    manifest["non_icd_degree"] = lam
    out = _out_dir(args) or Path(".")
    for l, client in enumerate(split.clients):
        _write_csv(out / f"client_{l:02d}.csv", client.values, client.labels)
    _write_csv(out / "global.csv", data.values, data.labels)
    _dump(manifest, out / "manifest.json")
    sys.stdout.write(_dump({"clients": split.L, "non_icd_degree": lam,
                            "out": str(out)}))
    return 0


def cmd_lambda(args) -> int:
    split = _load_partition(Path(args.partition))
    matrix = pairwise_js_matrix(split.clients)
    doc = {
        "non_icd_degree": non_icd_degree(split.clients),
        "pairwise_js": [[float(v) for v in row] for row in matrix],
    }
    out = _out_dir(args)
    if out:
        _dump(doc, out / "lambda.json")
    sys.stdout.write(_dump(doc))
    return 0


def _resolve_k_star(args) -> int | None:
    if args.k_star is not None:
        return args.k_star
    if getattr(args, "k_star_from_stack", False):
        return None
    raise GoldError("pass --k-star K or --k-star-from-stack")


def _export_run(run, out: Path | None) -> None:
    if out is None:
        return
    _dump(run.report.to_document(), out / "report.json")
    _dump(run.report.timings_document(), out / "timings.json")
    if run.stack is not None:
        _dump(run.stack.to_document(), out / "stack.json")
    if run.global_result is not None:
        _dump(run.global_result.to_document(), out / "global_result.json")
    rows = ["client_id,row,global_cluster"]
    rows += [f"{c},{r},{g}" for (c, r), g in
             zip(run.stacked.provenance, run.global_assignments.assignments)]
    (out / "stacked_assignments.csv").write_text("\n".join(rows) + "\n",
                                                 encoding="utf-8")


def cmd_run(args) -> int:
    config, _ = _load_config(args)
    split = _load_partition(Path(args.partition))
    run = run_gold_detailed(split, _resolve_k_star(args), config,
                            compute_lambda=not args.no_lambda)
    _export_run(run, _out_dir(args))
    sys.stdout.write(_dump(run.report.to_document()))
    return 0


def cmd_ablate(args) -> int:
    config, _ = _load_config(args)
    split = _load_partition(Path(args.partition))
    run = run_ablation_detailed(split, _resolve_k_star(args), config,
                                args.mode, level=args.level,
                                compute_lambda=not args.no_lambda)
    _export_run(run, _out_dir(args))
    sys.stdout.write(_dump(run.report.to_document()))
    return 0


def cmd_evaluate(args) -> int:
    data = (_read_scaled_csv(Path(args.data), True) if args.scaled
            else load_csv(args.data, has_labels=True))
    pred = np.loadtxt(args.pred, dtype=np.int64, ndmin=1)
    doc = all_indices(data.values, pred, data.labels)
    out = _out_dir(args)
    if out:
        _dump(doc, out / "indices.json")
    sys.stdout.write(_dump(doc))
    return 0


def _bench_doc(result: BenchResult) -> dict:
    return {
        "axis": result.axis,
        "sizes": result.sizes,
        "seconds": result.seconds,
        "slope": result.slope,
        "insufficient_spread": result.insufficient_spread,
    }


def cmd_bench(args) -> int:
    config, _ = _load_config(args)
    result = bench_scaling(args.axis, args.points, config,
                           fixed_dim=args.fixed_dim,
                           fixed_objects=args.fixed_objects,
                           L=args.clients, k_star=args.k_star)
    out = _out_dir(args)
    if out:
        table = "\n".join(f"{size},{sec}" for size, sec in result.table())
        (out / f"bench_{result.axis}.csv").write_text(table + "\n",
                                                      encoding="utf-8")
        _dump(_bench_doc(result), out / f"bench_{result.axis}.json")
    sys.stdout.write(_dump(_bench_doc(result)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="goldfc",
        description="One-shot federated clustering simulator and toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--config", type=str, default=None,
                       help="JSON file with 'run' and/or 'partition' sections")
        p.add_argument("--out", type=str, default=None)

    p = sub.add_parser("partition", help="split a labeled CSV into client files")
    p.add_argument("--data", required=True)
    p.add_argument("--clients", type=int, default=None)
    p.add_argument("--lambda-level", choices=("low", "mid", "high"), default=None)
    common(p)
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("lambda", help="heterogeneity degree of a partition")
    p.add_argument("--partition", required=True)
    common(p)
    p.set_defaults(func=cmd_lambda)

    p = sub.add_parser("run", help="full pipeline on a partition directory")
    p.add_argument("--partition", required=True)
    p.add_argument("--k-star", type=int, default=None)
    p.add_argument("--k-star-from-stack", action="store_true",
                   help="use the coarsest discovered level count as k*")
    p.add_argument("--no-lambda", action="store_true")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("ablate", help="run with a component replaced")
    p.add_argument("--partition", required=True)
    p.add_argument("--k-star", type=int, default=None)
    p.add_argument("--k-star-from-stack", action="store_true")
    p.add_argument("--mode", required=True, choices=ABLATION_MODES)
    p.add_argument("--level", type=int, default=None,
                   help="level for drop_level / prefix_levels (1-based)")
    p.add_argument("--no-lambda", action="store_true")
    common(p)
    p.set_defaults(func=cmd_ablate)

    p = sub.add_parser("evaluate", help="validity indices for a labeling")
    p.add_argument("--data", required=True, help="CSV with a trailing label column")
    p.add_argument("--pred", required=True, help="file with one cluster id per row")
    p.add_argument("--scaled", action="store_true",
                   help="data is already scaled (skip min-max)")
    common(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="scaling measurements on synthetic data")
    p.add_argument("--axis", required=True, choices=("objects", "dims"))
    p.add_argument("--points", type=int, nargs="+", required=True)
    p.add_argument("--fixed-dim", type=int, default=10)
    p.add_argument("--fixed-objects", type=int, default=500)
    p.add_argument("--clients", type=int, default=8)
    p.add_argument("--k-star", type=int, default=5)
    common(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GoldError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
