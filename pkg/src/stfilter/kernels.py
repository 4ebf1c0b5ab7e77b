"""Hot inner loops: trie construction and per-suffix document scoring.

Every kernel here works on flat numpy arrays only, so the exact same code
runs either compiled by numba or as plain Python.  Set
``STFILTER_DISABLE_NUMBA=1`` before import to force the uncompiled path
(the benchmark under ``benchmarks/`` times both).  With numba enabled the
pure versions stay reachable as ``<kernel>.py_func``.

Array layout (produced by :mod:`stfilter.flat`): nodes are numbered in
breadth-first order with node 0 the synthetic root; the children of node
``i`` occupy the contiguous id range
``first_child[i] .. first_child[i] + n_children[i]`` and are sorted by
character code, so child lookup is a binary search.
"""

from __future__ import annotations

import math
import os

import numpy as np


def _numba_disabled() -> bool:
    return os.environ.get("STFILTER_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false")


try:
    if _numba_disabled():
        raise ImportError("numba disabled by STFILTER_DISABLE_NUMBA")
    from numba import njit

    NUMBA_ENABLED = True
except ImportError:  # pragma: no cover - exercised via subprocess in tests
    NUMBA_ENABLED = False

    def njit(*args, **kwargs):
        """No-op stand-in: kernels run as ordinary Python functions."""
        if args and callable(args[0]):
            return args[0]

        def wrap(func):
            return func

        return wrap


# Integer codes shared with stfilter.scoring.
PHI_CONSTANT = 0
PHI_LINEAR = 1
PHI_SQUARE = 2
PHI_ROOT = 3
PHI_LOGIT = 4
PHI_SIGMOID = 5

NORM_NONE = 0
NORM_PERMUTATION = 1
NORM_LENGTH = 2

_LOGIT_EPS = 1e-6


@njit(cache=True)
def phi_value(code, p):
    """Significance of a conditional probability p in (0, 1].

    Logit and sigmoid are affinely rescaled so both map (0, 1] onto [0, 1];
    logit is clamped at eps=1e-6 to dodge its singularities.
    """
    if code == PHI_CONSTANT:
        return 1.0
    if code == PHI_LINEAR:
        return p
    if code == PHI_SQUARE:
        return p * p
    if code == PHI_ROOT:
        return math.sqrt(p)
    if code == PHI_LOGIT:
        q = p
        if q < _LOGIT_EPS:
            q = _LOGIT_EPS
        elif q > 1.0 - _LOGIT_EPS:
            q = 1.0 - _LOGIT_EPS
        span = math.log((1.0 - _LOGIT_EPS) / _LOGIT_EPS)
        return (math.log(q / (1.0 - q)) + span) / (2.0 * span)
    s0 = 0.5
    s1 = 1.0 / (1.0 + math.exp(-1.0))
    return (1.0 / (1.0 + math.exp(-p)) - s0) / (s1 - s0)


@njit(cache=True)
def build_trie(codes, bounds, depth):
    """Insert every suffix of every document, truncated at `depth`.

    codes:  int32 character codes of all documents, concatenated
    bounds: int64 offsets, document d spans codes[bounds[d]:bounds[d+1]]

    Returns linked-list arrays (char, freq, parent, first_child, next_sib)
    with node 0 the root; sibling lists are in no particular order.
    """
    cap = 4096
    char = np.empty(cap, np.int32)
    freq = np.zeros(cap, np.int64)
    parent = np.empty(cap, np.int64)
    first_child = np.empty(cap, np.int64)
    next_sib = np.empty(cap, np.int64)
    char[0] = -1
    parent[0] = -1
    first_child[0] = -1
    next_sib[0] = -1
    n = 1
    for d in range(bounds.shape[0] - 1):
        start = bounds[d]
        end = bounds[d + 1]
        for i in range(start, end):
            cur = 0
            stop = i + depth
            if stop > end:
                stop = end
            for j in range(i, stop):
                c = codes[j]
                child = first_child[cur]
                while child != -1 and char[child] != c:
                    child = next_sib[child]
                if child == -1:
                    if n == cap:
                        cap2 = cap * 2
                        g1 = np.empty(cap2, np.int32)
                        g1[:cap] = char
                        char = g1
                        g2 = np.zeros(cap2, np.int64)
                        g2[:cap] = freq
                        freq = g2
                        g3 = np.empty(cap2, np.int64)
                        g3[:cap] = parent
                        parent = g3
                        g4 = np.empty(cap2, np.int64)
                        g4[:cap] = first_child
                        first_child = g4
                        g5 = np.empty(cap2, np.int64)
                        g5[:cap] = next_sib
                        next_sib = g5
                        cap = cap2
                    child = n
                    n += 1
                    char[child] = c
                    parent[child] = cur
                    first_child[child] = -1
                    next_sib[child] = first_child[cur]
                    first_child[cur] = child
                freq[child] += 1
                cur = child
    return (
        char[:n].copy(),
        freq[:n].copy(),
        parent[:n].copy(),
        first_child[:n].copy(),
        next_sib[:n].copy(),
    )


@njit(cache=True)
def bfs_layout(first_child, next_sib, char):
    """Canonical breadth-first numbering with siblings sorted by character.

    Returns (order, new_first_child, new_n_children): order[k] is the old id
    of new node k; the latter two are indexed by new ids and give each node
    a contiguous, char-sorted child range.
    """
    n = first_child.shape[0]
    order = np.empty(n, np.int64)
    nfc = np.zeros(n, np.int64)
    nnc = np.zeros(n, np.int64)
    buf = np.empty(n, np.int64)
    order[0] = 0
    filled = 1
    head = 0
    while head < filled:
        old_u = order[head]
        cnt = 0
        ch = first_child[old_u]
        while ch != -1:
            buf[cnt] = ch
            cnt += 1
            ch = next_sib[ch]
        for a in range(1, cnt):
            v = buf[a]
            cv = char[v]
            b = a - 1
            while b >= 0 and char[buf[b]] > cv:
                buf[b + 1] = buf[b]
                b -= 1
            buf[b + 1] = v
        nfc[head] = filled
        nnc[head] = cnt
        for a in range(cnt):
            order[filled] = buf[a]
            filled += 1
        head += 1
    return order, nfc, nnc


@njit(cache=True)
def node_levels(parent):
    """Depth of every node; requires parents to precede children (BFS order)."""
    level = np.zeros(parent.shape[0], np.int64)
    for k in range(1, parent.shape[0]):
        level[k] = level[parent[k]] + 1
    return level


@njit(cache=True)
def find_child(char, first_child, n_children, node, c):
    """Binary search for the child of `node` labelled `c`; -1 if absent."""
    lo = first_child[node]
    hi = lo + n_children[node]
    while lo < hi:
        mid = (lo + hi) // 2
        cm = char[mid]
        if cm < c:
            lo = mid + 1
        elif cm > c:
            hi = mid
        else:
            return mid
    return -1


@njit(cache=True)
def permutation_group_sum(char, freq, first_child, n_children, path_nodes, mlen):
    """Sum of frequencies over all root-paths sharing the character multiset
    of the match stored in path_nodes[:mlen].

    Depth-first walk constrained by the remaining multiset; never enumerates
    factorially many permutations explicitly.
    """
    ucode = np.empty(mlen, np.int32)
    ucnt = np.zeros(mlen, np.int64)
    nu = 0
    for t in range(mlen):
        c = char[path_nodes[t]]
        k = -1
        for q in range(nu):
            if ucode[q] == c:
                k = q
                break
        if k == -1:
            ucode[nu] = c
            ucnt[nu] = 1
            nu += 1
        else:
            ucnt[k] += 1
    total = 0.0
    stack_node = np.empty(mlen + 1, np.int64)
    stack_pos = np.empty(mlen + 1, np.int64)
    depth = 0
    stack_node[0] = 0
    stack_pos[0] = 0
    while depth >= 0:
        u = stack_node[depth]
        pos = stack_pos[depth]
        fc = first_child[u]
        nc = n_children[u]
        descended = False
        while pos < nc:
            v = fc + pos
            pos += 1
            if freq[v] == 0:
                continue
            c = char[v]
            k = -1
            for q in range(nu):
                if ucode[q] == c and ucnt[q] > 0:
                    k = q
                    break
            if k == -1:
                continue
            if depth + 1 == mlen:
                total += freq[v]
                continue
            stack_pos[depth] = pos
            ucnt[k] -= 1
            depth += 1
            stack_node[depth] = v
            stack_pos[depth] = 0
            descended = True
            break
        if not descended:
            depth -= 1
            if depth >= 0:
                c = char[stack_node[depth + 1]]
                for q in range(nu):
                    if ucode[q] == c:
                        ucnt[q] += 1
                        break
    return total


@njit(cache=True)
def score_documents(
    codes,
    bounds,
    depth_cap,
    char,
    freq,
    first_child,
    n_children,
    sibling_sum,
    level_sum,
    phi_code,
    norm_code,
):
    """Score each document: sum over suffixes of the normalised significance
    of the longest match between the suffix and the tree.

    Matching walks at most depth_cap characters.  Summation order is fixed
    (suffixes left to right, characters outward) so results are bit-stable.
    """
    ndocs = bounds.shape[0] - 1
    out = np.zeros(ndocs, np.float64)
    path = np.empty(depth_cap, np.int64)
    for d in range(ndocs):
        start = bounds[d]
        end = bounds[d + 1]
        total = 0.0
        for i in range(start, end):
            cur = 0
            mlen = 0
            sig = 0.0
            stop = i + depth_cap
            if stop > end:
                stop = end
            for j in range(i, stop):
                nxt = find_child(char, first_child, n_children, cur, codes[j])
                if nxt == -1 or freq[nxt] == 0:
                    break
                sig += phi_value(phi_code, freq[nxt] / sibling_sum[nxt])
                path[mlen] = nxt
                mlen += 1
                cur = nxt
            if mlen == 0:
                continue
            if norm_code == NORM_NONE:
                total += sig
            elif norm_code == NORM_LENGTH:
                total += sig * (freq[cur] / level_sum[mlen])
            else:
                denom = permutation_group_sum(
                    char, freq, first_child, n_children, path, mlen
                )
                total += sig * (freq[cur] / denom)
        out[d] = total
    return out


def encode_texts(texts) -> tuple[np.ndarray, np.ndarray]:
    """Concatenate texts into (codes, bounds) arrays of Unicode code points."""
    bounds = np.zeros(len(texts) + 1, dtype=np.int64)
    for i, t in enumerate(texts):
        bounds[i + 1] = bounds[i] + len(t)
    codes = np.empty(bounds[-1], dtype=np.int32)
    for i, t in enumerate(texts):
        if t:
            codes[bounds[i] : bounds[i + 1]] = np.frombuffer(
                t.encode("utf-32-le"), dtype="<u4"
            ).astype(np.int32)
    return codes, bounds
