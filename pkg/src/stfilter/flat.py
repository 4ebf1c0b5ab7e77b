"""Array-backed class trees: the representation the scoring kernels run on.

A :class:`FlatTree` stores the same structure as
:class:`stfilter.suffix_tree.ClassTree` in breadth-first numpy arrays with
char-sorted, contiguous child ranges.  It is immutable once built.  Both
constructors produce the identical canonical layout, which the test suite
checks array-for-array.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels


@dataclass(frozen=True)
class FlatTree:
    depth: int
    doc_count: int
    char_count: int
    char: np.ndarray  # int32, char[0] = -1 (root)
    freq: np.ndarray  # int64
    parent: np.ndarray  # int64, parent[0] = -1
    first_child: np.ndarray  # int64
    n_children: np.ndarray  # int64
    level: np.ndarray = field(init=False)  # int64
    sibling_sum: np.ndarray = field(init=False)  # float64, Eq.-style sibling totals
    level_freq_sum: np.ndarray = field(init=False)  # float64, index = level

    def __post_init__(self):
        level = kernels.node_levels(self.parent)
        acc = np.zeros(self.n_nodes, dtype=np.float64)
        if self.n_nodes > 1:
            np.add.at(acc, self.parent[1:], self.freq[1:].astype(np.float64))
        sibling_sum = acc[np.maximum(self.parent, 0)]
        sibling_sum[0] = 0.0
        level_freq_sum = np.bincount(
            level, weights=self.freq.astype(np.float64), minlength=self.depth + 1
        )
        object.__setattr__(self, "level", level)
        object.__setattr__(self, "sibling_sum", sibling_sum)
        object.__setattr__(self, "level_freq_sum", level_freq_sum)

    @property
    def n_nodes(self) -> int:
        return int(self.char.shape[0])

    @property
    def node_count(self) -> int:
        """Number of real nodes (the synthetic root does not count)."""
        return self.n_nodes - 1

    @property
    def frequency_sum(self) -> int:
        return int(self.freq[1:].sum()) if self.n_nodes > 1 else 0

    @classmethod
    def from_texts(cls, texts, depth: int, doc_count: int | None = None) -> "FlatTree":
        """Build directly from character sequences via the trie kernel."""
        codes, bounds = kernels.encode_texts(list(texts))
        char, freq, parent, first_child, next_sib = kernels.build_trie(
            codes, bounds, depth
        )
        order, nfc, nnc = kernels.bfs_layout(first_child, next_sib, char)
        new_of_old = np.empty_like(order)
        new_of_old[order] = np.arange(order.shape[0], dtype=np.int64)
        new_parent = np.where(
            parent[order] >= 0, new_of_old[np.maximum(parent[order], 0)], -1
        )
        return cls(
            depth=depth,
            doc_count=len(texts) if doc_count is None else doc_count,
            char_count=int(bounds[-1]),
            char=char[order],
            freq=freq[order],
            parent=new_parent,
            first_child=nfc,
            n_children=nnc,
        )

    def walk(self, path: str) -> int:
        """Node id reached by following `path` from the root, or -1."""
        cur = 0
        for ch in path:
            cur = kernels.find_child(
                self.char, self.first_child, self.n_children, cur, ord(ch)
            )
            if cur == -1:
                return -1
        return cur

    def score(self, texts, depth_cap: int, phi_code: int, norm_code: int) -> np.ndarray:
        """Batch document scores; see kernels.score_documents."""
        if depth_cap < 1 or depth_cap > self.depth:
            raise ValueError(f"depth_cap {depth_cap} outside [1, {self.depth}]")
        codes, bounds = kernels.encode_texts(list(texts))
        return kernels.score_documents(
            codes,
            bounds,
            depth_cap,
            self.char,
            self.freq,
            self.first_child,
            self.n_children,
            self.sibling_sum,
            self.level_freq_sum,
            phi_code,
            norm_code,
        )
