"""Compiled inner loops for the sequential stages.

Every kernel works on int64 arrays and reports malformed input through a
negative status instead of raising, so callers can attach context.
"""

import numpy as np
from numba import njit

# ---------------------------------------------------------------- Fenwick tree


@njit(cache=True)
def _fenwick_build(values):
    size = values.size
    tree = np.zeros(size + 1, np.int64)
    for i in range(size):
        tree[i + 1] += values[i]
        j = (i + 1) + ((i + 1) & -(i + 1))
        if j <= size:
            tree[j] += tree[i + 1]
    return tree


@njit(cache=True)
def _fenwick_add(tree, pos, delta):
    i = pos + 1
    size = tree.size - 1
    while i <= size:
        tree[i] += delta
        i += i & -i


@njit(cache=True)
def _fenwick_prefix(tree, pos):
    # sum of slots [0, pos)
    total = 0
    i = pos
    while i > 0:
        total += tree[i]
        i -= i & -i
    return total


@njit(cache=True)
def _fenwick_kth(tree, k, top_bit):
    # 0-based slot holding the k-th (1-based) occupied position
    pos = 0
    step = top_bit
    size = tree.size - 1
    while step > 0:
        nxt = pos + step
        if nxt <= size and tree[nxt] < k:
            pos = nxt
            k -= tree[nxt]
        step >>= 1
    return pos


# ---------------------------------------------------------------- move-to-front


@njit(cache=True)
def mtf_encode(codes, alphabet_size):
    n = codes.size
    occupied = np.zeros(n + alphabet_size, np.int64)
    occupied[n:] = 1
    tree = _fenwick_build(occupied)
    slot = np.arange(n, n + alphabet_size)
    out = np.empty(n, np.int64)
    for t in range(n):
        s = codes[t]
        p = slot[s]
        out[t] = _fenwick_prefix(tree, p)
        _fenwick_add(tree, p, -1)
        front = n - 1 - t
        _fenwick_add(tree, front, 1)
        slot[s] = front
    return out


@njit(cache=True)
def mtf_decode(indices, alphabet_size):
    n = indices.size
    size = n + alphabet_size
    occupied = np.zeros(size, np.int64)
    occupied[n:] = 1
    tree = _fenwick_build(occupied)
    occupant = np.full(size, -1, np.int64)
    for s in range(alphabet_size):
        occupant[n + s] = s
    top_bit = 1
    while top_bit * 2 <= size:
        top_bit *= 2
    out = np.empty(n, np.int64)
    for t in range(n):
        r = indices[t]
        if r < 0 or r >= alphabet_size:
            return out, t
        p = _fenwick_kth(tree, r + 1, top_bit)
        s = occupant[p]
        out[t] = s
        _fenwick_add(tree, p, -1)
        front = n - 1 - t
        _fenwick_add(tree, front, 1)
        occupant[front] = s
    return out, -1


# ---------------------------------------------------------------- BWT


@njit(cache=True)
def lf_walk(lf, start):
    # row visited when emitting text position j, walking from the last position
    n = lf.size
    rows = np.empty(n, np.int64)
    p = start
    for j in range(n - 1, -1, -1):
        rows[j] = p
        p = lf[p]
    return rows


# ---------------------------------------------------------------- run length


@njit(cache=True)
def rle_encode(seq, threshold, marker):
    n = seq.size
    out = np.empty(3 * n + 8, np.int64)
    k = 0
    i = 0
    while i < n:
        j = i + 1
        while j < n and seq[j] == seq[i]:
            j += 1
        run = j - i
        if run >= threshold:
            out[k] = marker
            out[k + 1] = seq[i]
            k += 2
            v = run
            while v > 127:
                out[k] = (v & 127) | 128
                v >>= 7
                k += 1
            out[k] = v
            k += 1
        else:
            for _ in range(run):
                out[k] = seq[i]
                k += 1
        i = j
    return out[:k]


@njit(cache=True)
def rle_decode(tokens, marker, threshold, expected):
    out = np.empty(expected, np.int64)
    m = tokens.size
    k = 0
    i = 0
    while i < m:
        t = tokens[i]
        if t == marker:
            if i + 2 >= m:
                return out, i
            sym = tokens[i + 1]
            if sym < 0 or sym >= marker:
                return out, i
            count = 0
            shift = 0
            q = i + 2
            while True:
                if q >= m or shift > 56:
                    return out, i
                d = tokens[q]
                if d < 0 or d > 255:
                    return out, i
                count |= (d & 127) << shift
                shift += 7
                q += 1
                if d < 128:
                    break
            if count < threshold or count < 1 or k + count > expected:
                return out, i
            for _ in range(count):
                out[k] = sym
                k += 1
            i = q
        else:
            if t < 0 or t > marker or k >= expected:
                return out, i
            out[k] = t
            k += 1
            i += 1
    if k != expected:
        return out, m
    return out, -1
