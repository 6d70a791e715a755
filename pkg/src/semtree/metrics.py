"""Evaluation: P@K, DCG@K, silhouette over sibling groups, benchmark runs.

Each benchmark query has exactly one relevant artifact, so DCG@K
reduces to 1/log2(rank + 1) when the target lands inside the top K and
0 otherwise.  Silhouette treats the child sets of a chosen tree level's
parents as clusters and uses cosine distance on node embeddings.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from semtree.catalog import ArtifactLibrary, IntentSample
from semtree.search import RankedList
from semtree.tree import TreeIndex

logger = logging.getLogger(__name__)


def target_rank(ranked: RankedList, target_id: str) -> int | None:
    """1-based rank of the target in the list, None if absent."""
    for pos, (aid, _) in enumerate(ranked.entries, start=1):
        if aid == target_id:
            return pos
    return None


def precision_at_k(ranked: RankedList, target_id: str, k: int) -> int:
    if k < 1:
        raise ValueError("k must be >= 1")
    rank = target_rank(ranked, target_id)
    return 1 if rank is not None and rank <= k else 0


def dcg_at_k(ranked: RankedList, target_id: str, k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    rank = target_rank(ranked, target_id)
    if rank is None or rank > k:
        return 0.0
    return 1.0 / math.log2(rank + 1)


def mean_precision_at_k(samples: list[tuple[RankedList, str]], k: int) -> float:
    return sum(precision_at_k(r, t, k) for r, t in samples) / len(samples)


def mean_dcg_at_k(samples: list[tuple[RankedList, str]], k: int) -> float:
    return sum(dcg_at_k(r, t, k) for r, t in samples) / len(samples)


def silhouette(tree: TreeIndex, level: int) -> float:
    """Mean silhouette over the features grouped under each parent at ``level``.

    A feature with several parents contributes once per membership;
    singleton clusters score 0 by convention.
    """
    parents = [n for n in tree.nodes.values() if n.level == level and n.children]
    if len(parents) < 2:
        raise ValueError(f"level {level} has fewer than 2 parents; silhouette undefined")
    parents.sort(key=lambda n: n.id)
    clusters = [
        np.stack([tree.nodes[c].embedding for c in parent.children])
        for parent in parents
    ]

    def mean_dist(vec: np.ndarray, members: np.ndarray, skip: int | None = None) -> float:
        sims = members @ vec / (
            np.linalg.norm(members, axis=1) * max(np.linalg.norm(vec), 1e-300)
        )
        dists = 1.0 - sims
        if skip is not None:
            dists = np.delete(dists, skip)
        return float(np.mean(dists)) if dists.size else 0.0

    values: list[float] = []
    for ci, members in enumerate(clusters):
        for mi in range(members.shape[0]):
            if members.shape[0] == 1:
                values.append(0.0)
                continue
            a = mean_dist(members[mi], members, skip=mi)
            b = min(
                mean_dist(members[mi], other)
                for cj, other in enumerate(clusters)
                if cj != ci
            )
            denom = max(a, b)
            values.append(0.0 if denom == 0 else (b - a) / denom)
    return float(np.mean(values))


@dataclass
class QueryRecord:
    intent: str
    target_id: str
    rank: int | None  # None when the target was never retrieved
    elapsed: float
    node_evaluations: int = 0


@dataclass
class EvalReport:
    solution: str
    metrics: dict[str, float]
    timing: dict[str, float]
    records: list[QueryRecord] = field(default_factory=list)

    def to_json(self) -> str:
        doc = {
            "solution": self.solution,
            "metrics": self.metrics,
            "timing": self.timing,
            "records": [
                {
                    "intent": r.intent,
                    "target_id": r.target_id,
                    "rank": r.rank,
                    "elapsed": r.elapsed,
                    "node_evaluations": r.node_evaluations,
                }
                for r in self.records
            ],
        }
        return json.dumps(doc, indent=2, sort_keys=True)

    def csv_row(self) -> dict:
        row = {"solution": self.solution}
        row.update(self.metrics)
        row.update({f"time_{k}": v for k, v in self.timing.items()})
        return row


DEFAULT_KS = {"p@1": ("p", 1), "p@4": ("p", 4), "dcg@2": ("dcg", 2), "dcg@5": ("dcg", 5)}


def metrics_from_records(records: list[QueryRecord],
                         ks: dict | None = None) -> dict[str, float]:
    """Recompute the aggregate metrics from per-query target ranks."""
    ks = ks or DEFAULT_KS
    out: dict[str, float] = {}
    n = len(records)
    for label, (kind, k) in ks.items():
        total = 0.0
        for rec in records:
            if rec.rank is None or rec.rank > k:
                continue
            total += 1.0 if kind == "p" else 1.0 / math.log2(rec.rank + 1)
        out[label] = total / n if n else 0.0
    return out


def run_benchmark(solution_name: str, solution, lib: ArtifactLibrary,
                  pairs: list[IntentSample]) -> EvalReport:
    """Time and score ``solution(intent) -> RankedList`` over every pair.

    Failures on individual samples are recorded as never-retrieved
    (all metrics 0 for that sample) and the run continues.  Timing is
    per recommendation; index/tree build time is not included.
    """
    if not pairs:
        raise ValueError("no benchmark pairs")
    records: list[QueryRecord] = []
    for sample in pairs:
        start = time.perf_counter()
        try:
            ranked = solution(sample.intent)
            rank = target_rank(ranked, sample.target_id)
            evals = ranked.node_evaluations
        except Exception as exc:  # noqa: BLE001 - one bad sample must not kill the run
            logger.warning("solution %s failed on intent %r: %s",
                           solution_name, sample.intent[:60], exc)
            rank = None
            evals = 0
        elapsed = time.perf_counter() - start
        records.append(QueryRecord(
            intent=sample.intent,
            target_id=sample.target_id,
            rank=rank,
            elapsed=elapsed,
            node_evaluations=evals,
        ))
    times = np.asarray([r.elapsed for r in records])
    timing = {
        "mean": float(times.mean()),
        "std": float(times.std()),  # population standard deviation
        "min": float(times.min()),
        "max": float(times.max()),
    }
    return EvalReport(
        solution=solution_name,
        metrics=metrics_from_records(records),
        timing=timing,
        records=records,
    )


def write_csv(reports: list[EvalReport], path: str) -> None:
    """One row per solution, for table building."""
    if not reports:
        raise ValueError("no reports to write")
    rows = [r.csv_row() for r in reports]
    fieldnames = list(rows[0].keys())
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        writer.writerows(rows)
