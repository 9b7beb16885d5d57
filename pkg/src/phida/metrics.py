"""Chance-corrected clustering metrics and stream summaries.

ARI follows the Hubert-Arabie pair-counting form.  AMI uses the exact
expected mutual information under the fixed-marginal permutation model and
max-entropy normalization.  The stream summaries are the per-stage mean and
the backward transfer of earlier-stage scores.
"""

from __future__ import annotations

import math

import numpy as np


def _contingency(truth, pred) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    t = np.asarray(truth).ravel()
    p = np.asarray(pred).ravel()
    if t.shape[0] != p.shape[0]:
        raise ValueError("label vectors differ in length")
    if t.shape[0] == 0:
        raise ValueError("empty labelings")
    _, ti = np.unique(t, return_inverse=True)
    _, pi = np.unique(p, return_inverse=True)
    n_t = ti.max() + 1
    n_p = pi.max() + 1
    table = np.zeros((n_t, n_p), dtype=np.int64)
    np.add.at(table, (ti, pi), 1)
    return table, table.sum(axis=1), table.sum(axis=0)


def _comb2(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x * (x - 1.0) / 2.0


def ari(truth, pred) -> float:
    """Adjusted Rand index; 1 for identical partitions, ~0 under chance."""
    table, a, b = _contingency(truth, pred)
    n = a.sum()
    sum_cells = _comb2(table).sum()
    sum_a = _comb2(a).sum()
    sum_b = _comb2(b).sum()
    total = _comb2(n)
    if total == 0:
        return 1.0
    expected = sum_a * sum_b / total
    maximum = 0.5 * (sum_a + sum_b)
    if maximum == expected:
        # Both partitions trivial in the same way; identical by construction.
        return 1.0
    return float((sum_cells - expected) / (maximum - expected))


def _entropy(counts: np.ndarray) -> float:
    n = counts.sum()
    p = counts[counts > 0] / n
    return float(-np.sum(p * np.log(p)))


def _mutual_information(table: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    n = a.sum()
    mi = 0.0
    for i in range(table.shape[0]):
        for j in range(table.shape[1]):
            nij = table[i, j]
            if nij > 0:
                mi += (nij / n) * math.log(n * nij / (a[i] * b[j]))
    return mi


def expected_mutual_information(a, b) -> float:
    """Exact expected MI over random tables with the given fixed marginals."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    n = int(a.sum())
    if n != int(b.sum()):
        raise ValueError("marginals must share the same total")
    lg = math.lgamma
    log_n_fact = lg(n + 1)
    emi = 0.0
    for ai in a:
        ai = int(ai)
        for bj in b:
            bj = int(bj)
            lo = max(1, ai + bj - n)
            hi = min(ai, bj)
            for nij in range(lo, hi + 1):
                term = (nij / n) * math.log(n * nij / (ai * bj))
                log_prob = (
                    lg(ai + 1)
                    + lg(bj + 1)
                    + lg(n - ai + 1)
                    + lg(n - bj + 1)
                    - log_n_fact
                    - lg(nij + 1)
                    - lg(ai - nij + 1)
                    - lg(bj - nij + 1)
                    - lg(n - ai - bj + nij + 1)
                )
                emi += term * math.exp(log_prob)
    return emi


def ami(truth, pred) -> float:
    """Adjusted mutual information with max-entropy normalization.

    Conventions for degenerate inputs: 1 when both labelings are trivial in
    the same way (both one cluster, or both all singletons), 0 when one side
    carries no information about the other.
    """
    table, a, b = _contingency(truth, pred)
    n = int(a.sum())
    if (a.shape[0] == 1 and b.shape[0] == 1) or (a.shape[0] == n and b.shape[0] == n):
        return 1.0
    h_t = _entropy(a)
    h_p = _entropy(b)
    mi = _mutual_information(table, a, b)
    emi = expected_mutual_information(a, b)
    denom = max(h_t, h_p) - emi
    if abs(denom) < 1e-15:
        return 0.0
    return float((mi - emi) / denom)


def avg_inc(per_stage_scores) -> float:
    """Mean of the per-stage scores of a staged stream."""
    scores = np.asarray(per_stage_scores, dtype=float)
    if scores.size == 0:
        raise ValueError("no stage scores")
    return float(scores.mean())


def bwt(matrix) -> float:
    """Backward transfer from a stage-score matrix.

    ``matrix[i][j]`` is the score on stage i after training through stage j
    (0-based, defined for j >= i).  Returns the mean change of earlier-stage
    scores between their own stage and the final stage.
    """
    r = np.asarray(matrix, dtype=float)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ValueError("expected a square stage-score matrix")
    j_final = r.shape[0] - 1
    if j_final < 1:
        raise ValueError("backward transfer needs at least two stages")
    diffs = [r[i, j_final] - r[i, i] for i in range(j_final)]
    return float(np.mean(diffs))
