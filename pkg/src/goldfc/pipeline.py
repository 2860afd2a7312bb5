"""End-to-end federation runs, evaluation protocols, ablations, scaling.

A run has three phases: per-client micro-cluster discovery, server-side
multi-granularity exploration over the stacked uploads, and re-encoded
categorical clustering down to the target cluster count. Every client
object then inherits the global cluster of its local micro-cluster's
stacked row, which is what the federated evaluation protocol scores
against the pooled ground truth. The assign-only protocol instead labels
every raw object by its nearest global representative (the mean of the
member client-centroids) and scores that labeling.

Ablation modes swap a phase for plain k-means (``no_fcpl``, ``no_mcpl``,
``neither``) or filter granularity levels before the final clustering
(``drop_level``, ``prefix_levels``).
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .client import ClientResult, fcpl_fit
from .config import RunConfig
from .data import AffiliationMatrix, Dataset
from .encoding import GlobalResult, encode, remc_cluster
from .errors import ConfigError, ValidationError
from .heterogeneity import non_icd_degree
from .metrics import all_indices
from .messages import CentroidUpload
from .seeding import STREAM_SERVER, fork
from .server import GranularityStack, StackedCentroids, mcpl_explore, stack_uploads
from .simulate import FederationSplit, kmeans

ABLATION_MODES = ("full", "no_fcpl", "no_mcpl", "neither", "drop_level", "prefix_levels")


@dataclass
class ExperimentReport:
    """Everything a run produced. ``to_document`` holds only content that is
    reproducible from (split, config, seed); wall times live in a separate
    document so identical runs serialize identically."""

    config: dict
    mode: str
    k_star: int
    client_k: list[int]
    stack_summary: dict | None
    federated_indices: dict | None
    assign_only_indices: dict | None
    non_icd_degree: float | None
    phase_seconds: dict[str, float]
    notes: dict = field(default_factory=dict)

    def to_document(self) -> dict:
        return {
            "config": self.config,
            "mode": self.mode,
            "k_star": self.k_star,
            "client_k": list(self.client_k),
            "stack": self.stack_summary,
            "federated_indices": self.federated_indices,
            "assign_only_indices": self.assign_only_indices,
            "non_icd_degree": self.non_icd_degree,
            "notes": self.notes,
        }

    def timings_document(self) -> dict:
        return {"phase_seconds": dict(self.phase_seconds)}


@dataclass
class GoldRun:
    """Report plus the intermediate artifacts the CLI can export."""

    report: ExperimentReport
    stacked: StackedCentroids
    stack: GranularityStack | None
    global_result: GlobalResult | None
    global_assignments: AffiliationMatrix
    federated_pred: np.ndarray
    federated_truth: np.ndarray | None
    representatives: np.ndarray


def _clients_full(split: FederationSplit, config: RunConfig) -> list[ClientResult]:
    return [fcpl_fit(client, config, client_id=l)
            for l, client in enumerate(split.clients)]


def _clients_kmeans(split: FederationSplit, config: RunConfig):
    """Ablation substitute: per-client k-means at the sqrt(n) heuristic."""
    results = []
    ks = []
    for l, client in enumerate(split.clients):
        k = min(client.n, max(2, round(np.sqrt(client.n))))
        rng = fork(config.seed, STREAM_SERVER, 100 + l)
        centroids, assign = kmeans(client, k, rng=rng)
        upload = CentroidUpload(client_id=l, k=k, d=client.d, centroids=centroids)
        results.append(ClientResult(upload=upload, local_assignments=assign,
                                    k_local=k))
        ks.append(k)
    return results, ks


def _filter_stack(stack: GranularityStack, mode: str, level: int | None) -> GranularityStack:
    if mode == "drop_level":
        if stack.delta == 1:
            raise ConfigError("cannot drop the only granularity level")
        if level is None or not 1 <= level <= stack.delta:
            raise ConfigError(f"drop_level needs a level in [1, {stack.delta}]")
        keep = [t for t in range(stack.delta) if t != level - 1]
    elif mode == "prefix_levels":
        if level is None or level < 1:
            raise ConfigError("prefix_levels needs a positive level count")
        keep = list(range(min(level, stack.delta)))
    else:
        return stack
    return GranularityStack(
        affiliations=[stack.affiliations[t] for t in keep],
        cluster_counts=[stack.cluster_counts[t] for t in keep],
        objectives=[stack.objectives[t] for t in keep],
    )


def _propagate(split: FederationSplit, client_results: list[ClientResult],
               stacked: StackedCentroids, global_assign: np.ndarray):
    """Client object -> its micro-cluster's stacked row -> global cluster."""
    preds = []
    truths = []
    for l, (client, result) in enumerate(zip(split.clients, client_results)):
        rows = stacked.offsets[l] + result.local_assignments.assignments
        preds.append(global_assign[rows])
        if client.labels is not None:
            truths.append(client.labels)
    pred = np.concatenate(preds)
    truth = np.concatenate(truths) if len(truths) == len(split.clients) else None
    return pred, truth


def _representatives(stacked: StackedCentroids, global_assign: np.ndarray,
                     k_star: int) -> np.ndarray:
    """Raw-space representative of each global cluster: the mean of its
    member client-centroids. Empty clusters get no row."""
    reps = []
    for j in range(k_star):
        members = stacked.data.values[global_assign == j]
        if members.shape[0]:
            reps.append(members.mean(axis=0))
    if not reps:
        raise ValidationError("no non-empty global clusters")
    return np.vstack(reps)


def assign_only_global_eval(raw_global: Dataset, representatives: np.ndarray) -> dict:
    """Label raw objects by nearest representative and score the labeling."""
    representatives = np.atleast_2d(np.asarray(representatives, dtype=np.float64))
    if representatives.shape[0] < 1:
        raise ValidationError("need at least one representative")
    if raw_global.labels is None:
        raise ValidationError("assign-only evaluation needs ground-truth labels")
    X = raw_global.values
    d2 = ((X**2).sum(axis=1)[:, None]
          - 2.0 * X @ representatives.T
          + (representatives**2).sum(axis=1)[None, :])
    pred = np.argmin(d2, axis=1)
    return all_indices(X, pred, raw_global.labels)


def _execute(split: FederationSplit, k_star: int | None, config: RunConfig,
             mode: str, level: int | None = None, compute_lambda: bool = True,
             evaluate: bool = True) -> GoldRun:
    if k_star is not None and k_star < 1:
        raise ConfigError(f"k_star must be >= 1, got {k_star}")
    if mode not in ABLATION_MODES:
        raise ConfigError(f"unknown mode {mode!r}")
    notes: dict = {}
    t_start = time.perf_counter()

    # Phase 1: local discovery
    t0 = time.perf_counter()
    if mode in ("no_fcpl", "neither"):
        client_results, baseline_ks = _clients_kmeans(split, config)
        notes["baseline_client_k"] = baseline_ks
    else:
        client_results = _clients_full(split, config)
    t_phase1 = time.perf_counter() - t0

    # Phase 2: aggregation
    t0 = time.perf_counter()
    stacked = stack_uploads([r.upload for r in client_results])
    stack = None
    global_result = None
    if mode in ("no_mcpl", "neither"):
        if k_star is None:
            raise ConfigError("this mode needs an explicit k_star")
        k_server = min(k_star, stacked.data.n)
        if k_server < k_star:
            notes["server_k_clamped"] = k_server
        rng = fork(config.seed, STREAM_SERVER, 999)
        _, global_affiliation = kmeans(stacked.data, k_server, rng=rng)
        t_phase2 = time.perf_counter() - t0
        t_phase3 = 0.0
    else:
        stack = mcpl_explore(stacked.data, config)
        t_phase2 = time.perf_counter() - t0
        if k_star is None:
            # fall back to the coarsest discovered level count
            k_star = stack.cluster_counts[-1]

        # Phase 3: re-encode and cluster to k*
        t0 = time.perf_counter()
        used_stack = _filter_stack(stack, mode, level)
        encoded = encode(used_stack)
        if k_star > encoded.n:
            notes["k_star_clamped"] = encoded.n
        global_result = remc_cluster(encoded, min(k_star, encoded.n), config)
        if global_result.duplicate_modes:
            notes["duplicate_modes"] = True
        if global_result.empty_clusters:
            notes["empty_global_clusters"] = global_result.empty_clusters
        global_affiliation = global_result.assignments
        t_phase3 = time.perf_counter() - t0

    global_assign = global_affiliation.assignments
    pred, truth = _propagate(split, client_results, stacked, global_assign)
    representatives = _representatives(stacked, global_assign, global_affiliation.k)

    # Evaluation
    t0 = time.perf_counter()
    federated = None
    assign_only = None
    lam = None
    if evaluate and truth is not None:
        pooled = np.vstack([c.values for c in split.clients])
        federated = all_indices(pooled, pred, truth)
        if split.source is not None and split.source.labels is not None:
            assign_only = assign_only_global_eval(split.source, representatives)
    if compute_lambda and split.L >= 2:
        lam = non_icd_degree(split.clients)
    t_eval = time.perf_counter() - t0

    total = time.perf_counter() - t_start
    report = ExperimentReport(
        config=config.to_dict(),
        mode=mode if level is None else f"{mode}:{level}",
        k_star=k_star,
        client_k=[r.k_local for r in client_results],
        stack_summary=stack.summary() if stack is not None else None,
        federated_indices=federated,
        assign_only_indices=assign_only,
        non_icd_degree=lam,
        phase_seconds={
            "phase1": t_phase1,
            "phase2": t_phase2,
            "phase3": t_phase3,
            "evaluate": t_eval,
            "total": total,
        },
        notes=notes,
    )
    return GoldRun(
        report=report,
        stacked=stacked,
        stack=stack,
        global_result=global_result,
        global_assignments=global_affiliation,
        federated_pred=pred,
        federated_truth=truth,
        representatives=representatives,
    )


def run_gold(split: FederationSplit, k_star: int, config: RunConfig,
             compute_lambda: bool = True, evaluate: bool = True) -> ExperimentReport:
    """Run the full pipeline and return its report."""
    return _execute(split, k_star, config, "full",
                    compute_lambda=compute_lambda, evaluate=evaluate).report


def run_gold_detailed(split: FederationSplit, k_star: int, config: RunConfig,
                      compute_lambda: bool = True, evaluate: bool = True) -> GoldRun:
    """Like :func:`run_gold` but keeps intermediate artifacts."""
    return _execute(split, k_star, config, "full",
                    compute_lambda=compute_lambda, evaluate=evaluate)


def ablate(split: FederationSplit, k_star: int, config: RunConfig, mode: str,
           level: int | None = None, compute_lambda: bool = True) -> ExperimentReport:
    """Run with one component replaced or some granularity levels filtered."""
    return _execute(split, k_star, config, mode, level=level,
                    compute_lambda=compute_lambda).report


def run_ablation_detailed(split: FederationSplit, k_star: int | None,
                          config: RunConfig, mode: str, level: int | None = None,
                          compute_lambda: bool = True) -> GoldRun:
    """Like :func:`ablate` but keeps intermediate artifacts."""
    return _execute(split, k_star, config, mode, level=level,
                    compute_lambda=compute_lambda)


@dataclass
class BenchResult:
    axis: str
    sizes: list[int]
    seconds: list[float]
    phase_seconds: list[dict]
    slope: float
    insufficient_spread: bool

    def table(self) -> list[tuple[int, float]]:
        """Plot-ready (size, seconds) rows."""
        return list(zip(self.sizes, self.seconds))


def bench_scaling(axis: str, points: list[int], config: RunConfig,
                  fixed_dim: int = 10, fixed_objects: int = 500,
                  L: int = 8, k_star: int = 5) -> BenchResult:
    """Time full runs on a synthetic five-component mixture of growing size.

    ``axis`` picks what grows: object count (at fixed dimensionality) or
    dimensionality (at a fixed object count). Clients get even random
    shares of the data so timing is not confounded by share imbalance.
    The slope of log(time) against log(size) summarizes the growth rate.
    """
    from .simulate import even_split
    from .synth import isotropic_mixture

    if axis not in ("objects", "dims"):
        raise ConfigError(f"axis must be 'objects' or 'dims', got {axis!r}")
    if len(points) < 3:
        raise ConfigError("need at least 3 sizes")
    sizes = [int(p) for p in points]
    seconds = []
    phase_rows = []
    for size in sizes:
        if axis == "objects":
            data = isotropic_mixture(size, fixed_dim, seed=config.seed)
        else:
            data = isotropic_mixture(fixed_objects, size, seed=config.seed)
        split = even_split(data, L, seed=config.seed)
        run = _execute(split, k_star, config, "full",
                       compute_lambda=False, evaluate=False)
        seconds.append(run.report.phase_seconds["total"])
        phase_rows.append(dict(run.report.phase_seconds))

    insufficient = max(sizes) == min(sizes)
    if insufficient:
        slope = 0.0
    else:
        slope = float(np.polyfit(np.log(sizes), np.log(seconds), 1)[0])
    return BenchResult(axis=axis, sizes=sizes, seconds=seconds,
                       phase_seconds=phase_rows, slope=slope,
                       insufficient_spread=insufficient)
