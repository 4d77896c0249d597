"""Independent brute-force reference implementations used by the tests.

Everything here is deliberately written the slow, obvious way (recursion,
O(n^2) pair enumeration, exhaustive sweeps) and shares no code with the
package, so agreement between the two is meaningful evidence.
"""

from __future__ import annotations

import math
from functools import lru_cache


def lcs_recursive(a: tuple, b: tuple) -> int:
    """Textbook memoized recursion for longest-common-subsequence length."""

    @lru_cache(maxsize=None)
    def rec(i: int, j: int) -> int:
        if i == 0 or j == 0:
            return 0
        if a[i - 1] == b[j - 1]:
            return rec(i - 1, j - 1) + 1
        return max(rec(i - 1, j), rec(i, j - 1))

    result = rec(len(a), len(b))
    rec.cache_clear()
    return result


def pe_oracle(logprob_rows: list[list[float]]) -> float:
    """-(1/B) sum of sequence logprobs, each a plain sum."""
    total = 0.0
    for row in logprob_rows:
        seq = 0.0
        for lp in row:
            seq += lp
        total += seq
    return -total / len(logprob_rows)


def lnpe_oracle(logprob_rows: list[list[float]]) -> float:
    total = 0.0
    for row in logprob_rows:
        seq = 0.0
        for lp in row:
            seq += lp
        total += seq / len(row)
    return -total / len(logprob_rows)


def se_oracle(logprob_rows: list[list[float]], clusters: list[list[int]]) -> float:
    seq_probs = [math.exp(sum(row)) for row in logprob_rows]
    total = 0.0
    for cluster in clusters:
        prob = 0.0
        for index in cluster:
            prob += seq_probs[index]
        total += math.log(prob)
    return -total / len(clusters)


def sar_token_oracle(
    logprob_rows: list[list[float]], relevance_rows: list[list[float]]
) -> float:
    total = 0.0
    for row, relevances in zip(logprob_rows, relevance_rows):
        denom = sum(relevances)
        if denom <= 0.0:
            weights = [1.0 / len(row)] * len(row)
        else:
            weights = [r / denom for r in relevances]
        score = 0.0
        for w, lp in zip(weights, row):
            score += w * lp
        total += -score
    return total / len(logprob_rows)


def sar_sentence_oracle(probs: list[float], sim: list[list[float]], t: float) -> float:
    total = 0.0
    for b in range(len(probs)):
        shifted = probs[b]
        for j in range(len(probs)):
            if j != b:
                shifted += sim[b][j] * probs[j] / t
        total += math.log(shifted)
    return -total / len(probs)


def sar_combined_oracle(
    logprob_rows: list[list[float]],
    relevance_rows: list[list[float]],
    sim: list[list[float]],
    t: float,
) -> float:
    reweighted = []
    for row, relevances in zip(logprob_rows, relevance_rows):
        denom = sum(relevances)
        if denom <= 0.0:
            weights = [1.0 / len(row)] * len(row)
        else:
            weights = [r / denom for r in relevances]
        logit = 0.0
        for w, lp in zip(weights, row):
            logit += w * lp
        reweighted.append(math.exp(logit))
    return sar_sentence_oracle(reweighted, sim, t)


def auroc_pairwise(scores: dict[str, float], labels: dict[str, int]) -> float:
    """Enumerate every (positive, negative) pair; ties count one half."""
    positives = [scores[i] for i in labels if labels[i] == 1]
    negatives = [scores[i] for i in labels if labels[i] == 0]
    if not positives or not negatives:
        raise ValueError("needs both classes")
    wins = 0.0
    for p in positives:
        for n in negatives:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (len(positives) * len(negatives))


def f1_oracle(scores: dict[str, float], labels: dict[str, int], tau: float):
    tp = fp = fn = 0
    for sample_id, label in labels.items():
        predicted = scores[sample_id] > tau
        if predicted and label == 1:
            tp += 1
        elif predicted and label == 0:
            fp += 1
        elif not predicted and label == 1:
            fn += 1
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    if precision + recall == 0.0:
        return precision, recall, 0.0
    return precision, recall, 2 * precision * recall / (precision + recall)


def threshold_sweep_oracle(scores: dict[str, float], labels: dict[str, int]) -> float:
    """Best-F1 threshold by sweeping midpoints and outside sentinels."""
    unique = sorted(set(scores[i] for i in labels))
    candidates = [unique[0] - 1.0]
    candidates += [(a + b) / 2.0 for a, b in zip(unique, unique[1:])]
    candidates.append(unique[-1] + 1.0)
    best_tau, best = None, -1.0
    for tau in candidates:
        value = f1_oracle(scores, labels, tau)[2]
        if value > best:
            best, best_tau = value, tau
    return best_tau


def ece_oracle(uncertainty: dict[str, float], labels: dict[str, int], m: int) -> float:
    """Independent binning: scan bins, membership by interval test."""
    ids = sorted(labels)
    n = len(ids)
    total = 0.0
    for b in range(m):
        lo = b / m
        hi = (b + 1) / m
        members = []
        for i in ids:
            c = 1.0 - uncertainty[i]
            if (lo < c <= hi) or (b == 0 and c == 0.0):
                members.append(i)
        if not members:
            continue
        conf = sum(1.0 - uncertainty[i] for i in members) / len(members)
        acc = sum(1 for i in members if labels[i] == 0) / len(members)
        total += len(members) / n * abs(acc - conf)
    return total


def grid_search_oracle(
    normalized: dict[str, float],
    corrector: dict[str, float],
    dev_labels: dict[str, int],
    ws: list[float],
):
    """Exhaustively re-evaluate fused AUROC at every grid point."""
    best_w, best = None, -math.inf
    curve = []
    for w in ws:
        fused = {
            i: w * normalized[i] + (1.0 - w) * corrector[i] for i in dev_labels
        }
        value = auroc_pairwise(fused, dev_labels)
        curve.append((w, value))
        if value > best:
            best, best_w = value, w
    return best_w, curve


def stable_range_oracle(curve, w_star: float, tolerance: float):
    """Linear scan over the whole curve for the contiguous tolerant block."""
    values = dict(curve)
    floor_value = values[w_star] - tolerance
    ws = [w for w, _ in curve]
    start = ws.index(w_star)
    lo = hi = start
    for i in range(start - 1, -1, -1):
        if curve[i][1] >= floor_value:
            lo = i
        else:
            break
    for i in range(start + 1, len(curve)):
        if curve[i][1] >= floor_value:
            hi = i
        else:
            break
    return ws[lo], ws[hi]


def json_float(x: float) -> float:
    """Round-trip a float the way json.dump/json.load would."""
    import json

    return json.loads(json.dumps(x))
