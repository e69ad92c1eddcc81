"""Slow, obviously-correct reference implementations used only by the tests."""

from __future__ import annotations

import math


def covariance(rows):
    """Sample covariance by explicit sums of outer products (divisor N - 1)."""
    n, d = len(rows), len(rows[0])
    mean = [sum(r[j] for r in rows) / n for j in range(d)]
    cov = [[0.0] * d for _ in range(d)]
    for r in rows:
        c = [r[j] - mean[j] for j in range(d)]
        for i in range(d):
            ci = c[i]
            row = cov[i]
            for j in range(d):
                row[j] += ci * c[j]
    return [[v / (n - 1) for v in row] for row in cov]


def dot(a, b):
    total = 0.0
    for x, y in zip(a, b):
        total += x * y
    return total


def knn_scores(points, n):
    """All-pairs density scores; ties broken by lower frame index.

    ``points`` is a list of ``(frame_index, x, y)``.
    """
    scores = {f: 0 for f, _, _ in points}
    for f, x, y in points:
        others = sorted(
            ((gx - x) ** 2 + (gy - y) ** 2, g) for g, gx, gy in points if g != f
        )
        for _, g in others[:n]:
            scores[g] += 1
    return scores


def hand_histogram(values, bins):
    """Uniform bins over [0, max]; value == max lands in the last bin."""
    top = max(values) if values else 0.0
    if top == 0.0:
        top = 1.0
    width = top / bins
    counts = [0] * bins
    for v in values:
        k = int(v / width)
        counts[min(k, bins - 1)] += 1
    return counts


def first_gap(counts):
    """First empty bin after the first populated one, by linear scan."""
    seen = False
    for i, c in enumerate(counts):
        if c > 0:
            seen = True
        elif seen:
            return i
    return None


def frame_distances(rows, window, shift, mean, components):
    """Distance of every shifted window to the first one, computed long-hand.

    ``rows`` is the list of per-candle feature tuples.
    """
    def point(start):
        flat = [v for r in rows[start:start + window] for v in r]
        centred = [a - b for a, b in zip(flat, mean)]
        return dot(components[0], centred), dot(components[1], centred)

    ref = point(0)
    out = []
    for start in range(0, len(rows) - window + 1, shift):
        x, y = point(start)
        out.append((start, math.hypot(x - ref[0], y - ref[1])))
    return out
