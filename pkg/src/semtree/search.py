"""Tree-guided beam search over the hierarchical index plus LLM re-rank.

Search walks top-down from the roots: the current frontier is scored by
cosine similarity against the intent embedding, the top-w nodes are
kept (ties by ascending id), and kept internal nodes are expanded into
their children while kept leaves carry themselves forward.  When every
kept node is a leaf the candidates are returned.  Scores are recomputed
per level; the deduplicated child union makes the polyhierarchy cost
nothing.
"""

from __future__ import annotations

import logging
import re
import time
from dataclasses import dataclass, field

import numpy as np

from semtree.llm import LlmError
from semtree.tree import TreeIndex

logger = logging.getLogger(__name__)

RERANK_PROMPT_TEMPLATE = (
    "Given a user requirement and a list of candidate artifacts, rank the "
    "artifacts from best match to worst match according to how well each "
    "artifact satisfies the requirement.\n\n"
    "User Requirements: {intent}\n\n"
    "Candidate Artifacts:\n{candidates}\n\n"
    "Please only output the ID of the sorted artifact in a list format."
)


@dataclass(frozen=True)
class SearchConfig:
    beam_width: int = 10
    final_k: int = 5
    rerank: bool = False

    def __post_init__(self):
        if self.final_k > self.beam_width:
            raise ValueError("final_k must not exceed beam_width")


@dataclass
class RankedList:
    intent: str
    entries: list[tuple[str, float]]
    node_evaluations: int = 0
    elapsed: float = 0.0

    def ids(self) -> list[str]:
        return [aid for aid, _ in self.entries]


def tree_search(t: TreeIndex, intent: str, cfg: SearchConfig, embedder) -> RankedList:
    """Top-down beam traversal returning up to ``beam_width`` leaf candidates."""
    if not t.nodes:
        raise ValueError("empty index")
    start = time.perf_counter()
    query = embedder.embed([intent])[0]
    if query.shape[0] != t.dim:
        raise ValueError("intent embedding dimension does not match the index")

    frontier = list(t.roots)
    evaluations = 0
    max_rounds = t.max_level() + 2
    kept: list[tuple[str, float]] = []
    for _ in range(max_rounds):
        scores = []
        for nid in frontier:
            scores.append((nid, float(np.dot(query, t.nodes[nid].embedding))))
        evaluations += len(frontier)
        scores.sort(key=lambda item: (-item[1], item[0]))
        kept = scores[: cfg.beam_width]
        if all(t.nodes[nid].is_leaf() for nid, _ in kept):
            break
        next_frontier: list[str] = []
        seen: set[str] = set()
        for nid, _ in kept:
            node = t.nodes[nid]
            expand = (nid,) if node.is_leaf() else node.children
            for child in expand:
                if child not in seen:
                    seen.add(child)
                    next_frontier.append(child)
        frontier = next_frontier
    entries = [(t.nodes[nid].artifact_id, score) for nid, score in kept]
    return RankedList(
        intent=intent,
        entries=entries,
        node_evaluations=evaluations,
        elapsed=time.perf_counter() - start,
    )


def render_rerank_prompt(intent: str, candidates: list[tuple[str, str]]) -> str:
    """Fill the re-rank template with ``<ID, description>`` lines.

    Newlines inside descriptions are flattened so each candidate stays
    on a single line.
    """
    if not candidates:
        raise ValueError("no candidates to rerank")
    lines = []
    for cid, desc in candidates:
        flat = " ".join(desc.split())
        lines.append(f"<{cid}, {flat}>")
    return RERANK_PROMPT_TEMPLATE.format(intent=intent, candidates="\n".join(lines))


_ID_TOKEN_RE = re.compile(r"[^\s,\[\]()'\"<>]+")


def parse_id_list(response: str, known_ids: list[str]) -> list[str]:
    """Extract an ordered id list from free-form LLM output.

    Accepts bracketed, comma-, or newline-separated lists; tokens not in
    ``known_ids`` are dropped, duplicates keep their first position.
    """
    known = set(known_ids)
    ordered: list[str] = []
    seen: set[str] = set()
    for token in _ID_TOKEN_RE.findall(response):
        token = token.strip(".:;")
        if token in known and token not in seen:
            seen.add(token)
            ordered.append(token)
    return ordered


def rerank(intent: str, candidates: RankedList, client, t: TreeIndex,
           final_k: int) -> RankedList:
    """LLM re-rank of the candidate set; degrades to the input order.

    Hallucinated ids are dropped, omitted candidates are appended in
    their original order, and the list is truncated to ``final_k``.
    """
    if not candidates.entries:
        raise ValueError("no candidates to rerank")
    leaf_by_artifact = {n.artifact_id: n for n in t.leaves()}
    prompt = render_rerank_prompt(
        intent,
        [(aid, leaf_by_artifact[aid].summary) for aid, _ in candidates.entries],
    )
    original = candidates.ids()
    try:
        response = client.complete(prompt)
        order = parse_id_list(response, original)
    except LlmError as exc:
        logger.warning("re-rank failed (%s); keeping similarity order", exc)
        order = []
    if not order:
        order = list(original)
    else:
        order.extend(aid for aid in original if aid not in set(order))
    score_by_id = dict(candidates.entries)
    entries = [(aid, score_by_id[aid]) for aid in order[:final_k]]
    return RankedList(
        intent=intent,
        entries=entries,
        node_evaluations=candidates.node_evaluations,
        elapsed=candidates.elapsed,
    )


def recommend(t: TreeIndex, intent: str, cfg: SearchConfig, embedder,
              llm_client=None) -> RankedList:
    """Full pipeline: beam search, optional re-rank, truncate to final_k."""
    start = time.perf_counter()
    result = tree_search(t, intent, cfg, embedder)
    if cfg.rerank:
        if llm_client is None:
            raise ValueError("rerank requested but no LLM client provided")
        result = rerank(intent, result, llm_client, t, cfg.final_k)
    else:
        result.entries = result.entries[: cfg.final_k]
    result.elapsed = time.perf_counter() - start
    return result
