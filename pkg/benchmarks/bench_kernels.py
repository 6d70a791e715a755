"""Compare the numba-jitted kernels against the pure-numpy fallback.

Run directly: ``python benchmarks/bench_kernels.py``.  The numpy path is
always imported from the kernels module; the jitted path is only timed
when numba is importable and SEMTREE_NO_NUMBA is unset.
"""

from __future__ import annotations

import time

import numpy as np

from semtree import kernels
from semtree.kernels import _bm25_scores_numpy, _weighted_log_prob_numpy


def timeit(fn, *args, repeat: int = 5) -> float:
    fn(*args)  # warmup / JIT compile
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_gmm(n: int = 20_000, d: int = 10, k: int = 16):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(n, d))
    means = rng.normal(size=(k, d))
    variances = np.abs(rng.normal(size=(k, d))) + 0.1
    log_w = np.log(np.full(k, 1.0 / k))
    args = (X, means, variances, log_w)
    rows = [("gmm log-prob (numpy)", timeit(_weighted_log_prob_numpy, *args))]
    if kernels.USING_NUMBA:
        rows.append(("gmm log-prob (numba)", timeit(kernels.weighted_log_prob, *args)))
    return rows


def bench_bm25(n_docs: int = 50_000, vocab: int = 5_000, nnz_per_doc: int = 30):
    rng = np.random.default_rng(1)
    terms = rng.integers(0, vocab, size=n_docs * nnz_per_doc)
    docs = np.repeat(np.arange(n_docs), nnz_per_doc)
    order = np.lexsort((docs, terms))
    terms, docs = terms[order], docs[order]
    tfs = rng.integers(1, 5, size=terms.shape[0]).astype(np.float64)
    ptr = np.zeros(vocab + 1, dtype=np.int64)
    np.add.at(ptr[1:], terms, 1)
    np.cumsum(ptr, out=ptr)
    df = np.maximum(ptr[1:] - ptr[:-1], 1)
    idf = np.log(1.0 + (n_docs - df + 0.5) / (df + 0.5))
    doc_len = np.full(n_docs, float(nnz_per_doc) * 2)
    q_terms = rng.integers(0, vocab, size=12).astype(np.int64)
    q_counts = np.ones(12)
    args = (q_terms, q_counts, ptr, docs.astype(np.int64), tfs, idf,
            doc_len, float(doc_len.mean()), n_docs, 1.2, 0.75)
    rows = [("bm25 scoring (numpy)", timeit(_bm25_scores_numpy, *args))]
    if kernels.USING_NUMBA:
        rows.append(("bm25 scoring (numba)", timeit(kernels.bm25_scores, *args)))
    return rows


def main():
    print(f"numba active: {kernels.USING_NUMBA}")
    for rows in (bench_gmm(), bench_bm25()):
        for label, seconds in rows:
            print(f"{label:28s} {seconds * 1e3:10.3f} ms")
        if len(rows) == 2:
            print(f"{'speedup':28s} {rows[0][1] / rows[1][1]:10.2f}x")


if __name__ == "__main__":
    main()
