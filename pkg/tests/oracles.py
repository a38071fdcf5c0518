"""Slow, obviously-correct reference implementations used only by the tests."""

from __future__ import annotations

import math

SENTINEL = -1


def naive_bwt(seq):
    """Sort every rotation of seq + [sentinel]; return (last column, row of the original)."""
    text = list(seq) + [SENTINEL]
    n = len(text)
    rotations = sorted(range(n), key=lambda i: text[i:] + text[:i])
    last = [text[(i - 1) % n] for i in rotations]
    return last, rotations.index(0)


def naive_bwt_inverse(last, index):
    """Rebuild the rotation table column by column (quadratic, tiny inputs only)."""
    n = len(last)
    table = [[] for _ in range(n)]
    for _ in range(n):
        table = sorted([[last[i]] + table[i] for i in range(n)])
    row = table[index]
    assert row[-1] == SENTINEL
    return row[:-1]


def naive_mtf(seq, alphabet):
    work = list(alphabet)
    out = []
    for s in seq:
        i = work.index(s)
        out.append(i)
        work.insert(0, work.pop(i))
    return out


def leb128_digits(n):
    digits = []
    while True:
        d = n & 0x7F
        n >>= 7
        if n:
            digits.append(d | 0x80)
        else:
            digits.append(d)
            return digits


def naive_rle(seq, threshold, marker):
    """Runs of length >= threshold become marker, symbol, LEB128 count digits."""
    out = []
    i = 0
    while i < len(seq):
        j = i
        while j < len(seq) and seq[j] == seq[i]:
            j += 1
        run = j - i
        if run >= threshold:
            out += [marker, seq[i]] + leb128_digits(run)
        else:
            out += [seq[i]] * run
        i = j
    return out


def naive_zigzag_derivative(symbols):
    deltas = []
    for a, b in zip(symbols, symbols[1:]):
        d = b - a
        deltas.append(2 * d if d >= 0 else -2 * d - 1)
    return symbols[0], deltas


def naive_entropy(seq):
    counts = {}
    for s in seq:
        counts[s] = counts.get(s, 0) + 1
    n = len(seq)
    return -sum(c / n * math.log2(c / n) for c in counts.values())


def naive_assign(points, centroids):
    out = []
    for p in points:
        best, best_d = 0, None
        for j, c in enumerate(centroids):
            d = sum((a - b) ** 2 for a, b in zip(p, c))
            if best_d is None or d < best_d:
                best, best_d = j, d
        out.append(best)
    return out


def naive_silhouette(points, labels):
    def dist(a, b):
        return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))

    clusters = sorted(set(labels))
    out = []
    for i, p in enumerate(points):
        own = [q for q, l in zip(points, labels) if l == labels[i]]
        if len(own) == 1:
            out.append(0.0)
            continue
        a = sum(dist(p, q) for q in own) / (len(own) - 1)
        b = min(
            sum(dist(p, q) for q, l in zip(points, labels) if l == c)
            / sum(1 for l in labels if l == c)
            for c in clusters if c != labels[i]
        )
        m = max(a, b)
        out.append(0.0 if m == 0 else (b - a) / m)
    return out
