"""Depth-limited, frequency-annotated suffix trees over character sequences.

Nodes carry the character label (edges are unlabelled) and the number of
times the substring spelled by their root path occurs in the training text.
There is no terminal symbol: the tree indexes substrings, not suffixes, and
every path is truncated at the tree's depth limit.

Build with :func:`build_class_tree` (or repeated :func:`insert_string`),
then query with :func:`find_node`, :func:`conditional_probability`,
:func:`total_probability` and :func:`tree_stats`.  Trees are mutable only
while building; once frozen, all queries are read-only and safe for
unsynchronized concurrent readers.  Frozen trees convert to the array form
in :mod:`stfilter.flat` for bulk scoring.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import Iterable

from .errors import ConfigError, ContractError
from .flat import FlatTree

MAX_DEPTH = 16


class Node:
    """One tree node: a character, its occurrence count, and its children."""

    __slots__ = ("label", "frequency", "children", "parent")

    def __init__(self, label: str | None, parent: "Node | None"):
        self.label = label
        self.frequency = 0
        self.children: dict[str, Node] = {}
        self.parent = parent

    def __repr__(self):
        return f"Node({self.label!r}, f={self.frequency}, children={len(self.children)})"


class ClassTree:
    """Suffix tree profile of one document class."""

    def __init__(self, depth_limit: int):
        if not 1 <= depth_limit <= MAX_DEPTH:
            raise ConfigError(
                f"depth_limit must be in [1, {MAX_DEPTH}], got {depth_limit}"
            )
        self.depth_limit = depth_limit
        self.root = Node(None, None)
        self.doc_count = 0
        self.char_count = 0
        self._frozen = False
        self._flat: FlatTree | None = None

    @property
    def alphabet(self) -> set[str]:
        """Characters appearing at level one (hence anywhere in the tree)."""
        return set(self.root.children)

    def freeze(self) -> None:
        self._frozen = True

    def flat(self) -> FlatTree:
        """Canonical array form; freezes the tree on first use."""
        if self._flat is None:
            self.freeze()
            self._flat = _flatten(self)
        return self._flat


def insert_string(tree: ClassTree, s: str) -> ClassTree:
    """Add every suffix of s, truncated at the depth limit, counting each node.

    Empty strings are a no-op.  Returns the same (mutated) tree.
    """
    if tree._frozen:
        raise ContractError("tree is frozen; build is over")
    if not s:
        return tree
    d = tree.depth_limit
    n = len(s)
    for i in range(n):
        node = tree.root
        for j in range(i, min(i + d, n)):
            c = s[j]
            child = node.children.get(c)
            if child is None:
                child = Node(c, node)
                node.children[c] = child
            child.frequency += 1
            node = child
    tree.doc_count += 1
    tree.char_count += n
    return tree


def build_class_tree(docs: Iterable[str], d: int) -> ClassTree:
    """Fold insert_string over docs and freeze the result."""
    tree = ClassTree(d)
    for doc in docs:
        insert_string(tree, doc)
        if not doc:
            # insert_string skips empties entirely; still a document
            tree.doc_count += 1
    tree.freeze()
    return tree


def find_node(tree: ClassTree, u: str) -> Node | None:
    """Node reached by walking u from the root, or None."""
    if not u:
        raise ContractError("find_node requires a nonempty path")
    node = tree.root
    for c in u:
        node = node.children.get(c)
        if node is None:
            return None
    return node


def node_path(node: Node) -> str:
    """Root path spelling this node."""
    parts = []
    while node.parent is not None:
        parts.append(node.label)
        node = node.parent
    return "".join(reversed(parts))


def node_level(node: Node) -> int:
    level = 0
    while node.parent is not None:
        level += 1
        node = node.parent
    return level


def conditional_probability(tree: ClassTree, node: Node) -> float:
    """Frequency share among the node's siblings (its parent's children)."""
    if node.parent is None:
        raise ContractError("conditional probability is undefined for the root")
    denom = sum(sib.frequency for sib in node.parent.children.values())
    return node.frequency / denom


def total_probability(tree: ClassTree, node: Node) -> float:
    """Frequency share among all nodes at the node's level."""
    if node.parent is None:
        raise ContractError("total probability is undefined for the root")
    stats = tree_stats(tree)
    return node.frequency / stats.per_level_frequency_sums[node_level(node)]


@dataclass(frozen=True)
class TreeStats:
    node_count: int
    frequency_sum: int
    per_level_frequency_sums: list[int]  # index = level, [0] unused
    per_level_node_counts: list[int]
    density: float  # mean child count over internal nodes (root included)


def tree_stats(tree: ClassTree) -> TreeStats:
    """Counts and sums from a full traversal."""
    d = tree.depth_limit
    freq_sums = [0] * (d + 1)
    node_counts = [0] * (d + 1)
    internal = 0
    child_links = 0
    stack = [(tree.root, 0)]
    while stack:
        node, level = stack.pop()
        if level > 0:
            freq_sums[level] += node.frequency
            node_counts[level] += 1
        if node.children:
            internal += 1
            child_links += len(node.children)
            for child in node.children.values():
                stack.append((child, level + 1))
    return TreeStats(
        node_count=sum(node_counts),
        frequency_sum=sum(freq_sums),
        per_level_frequency_sums=freq_sums,
        per_level_node_counts=node_counts,
        density=(child_links / internal) if internal else 0.0,
    )


def _flatten(tree: ClassTree) -> FlatTree:
    import numpy as np

    nodes: list[Node] = [tree.root]
    first_child = [0]
    n_children = [0]
    chars = [-1]
    freqs = [0]
    parents = [-1]
    head = 0
    while head < len(nodes):
        node = nodes[head]
        kids = sorted(node.children.values(), key=lambda nd: ord(nd.label))
        first_child[head] = len(nodes)
        n_children[head] = len(kids)
        for kid in kids:
            nodes.append(kid)
            chars.append(ord(kid.label))
            freqs.append(kid.frequency)
            parents.append(head)
            first_child.append(0)
            n_children.append(0)
        head += 1
    return FlatTree(
        depth=tree.depth_limit,
        doc_count=tree.doc_count,
        char_count=tree.char_count,
        char=np.asarray(chars, dtype=np.int32),
        freq=np.asarray(freqs, dtype=np.int64),
        parent=np.asarray(parents, dtype=np.int64),
        first_child=np.asarray(first_child, dtype=np.int64),
        n_children=np.asarray(n_children, dtype=np.int64),
    )


# ---------------------------------------------------------------------------
# Profile files: {"depth": d, "doc_count": n, "char_count": m, "root": node}
# where node = {"c": codepoint, "f": frequency, "k": [children]} and the root
# carries only "k".  Children are sorted by codepoint, so a given tree always
# serializes to the same bytes.
# ---------------------------------------------------------------------------


def _node_to_dict(node: Node) -> dict:
    kids = sorted(node.children.values(), key=lambda nd: ord(nd.label))
    return {"c": ord(node.label), "f": node.frequency, "k": [_node_to_dict(k) for k in kids]}


def profile_dict(tree: ClassTree | FlatTree) -> dict:
    if isinstance(tree, FlatTree):
        return _profile_dict_from_flat(tree)
    root_kids = sorted(tree.root.children.values(), key=lambda nd: ord(nd.label))
    return {
        "depth": tree.depth_limit,
        "doc_count": tree.doc_count,
        "char_count": tree.char_count,
        "root": {"k": [_node_to_dict(k) for k in root_kids]},
    }


def _profile_dict_from_flat(flat: FlatTree) -> dict:
    # children hold higher ids than their parents, so a reverse sweep has
    # every child dict ready before its parent needs it
    n = flat.n_nodes
    dicts: list[dict | None] = [None] * n
    for i in range(n - 1, 0, -1):
        lo = int(flat.first_child[i])
        kids = dicts[lo : lo + int(flat.n_children[i])]
        dicts[i] = {"c": int(flat.char[i]), "f": int(flat.freq[i]), "k": kids}
    lo = int(flat.first_child[0])
    return {
        "depth": flat.depth,
        "doc_count": flat.doc_count,
        "char_count": flat.char_count,
        "root": {"k": dicts[lo : lo + int(flat.n_children[0])]},
    }


def save_profile(tree: ClassTree | FlatTree, path: str) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(profile_dict(tree), fh, separators=(",", ":"))
        fh.write("\n")
    os.replace(tmp, path)


def load_profile(path: str) -> ClassTree:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    try:
        tree = ClassTree(int(data["depth"]))
        tree.doc_count = int(data["doc_count"])
        tree.char_count = int(data["char_count"])
        stack = [(tree.root, kid) for kid in data["root"]["k"]]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed profile file {path}: {exc}") from exc
    while stack:
        parent, spec = stack.pop()
        node = Node(chr(spec["c"]), parent)
        node.frequency = int(spec["f"])
        parent.children[node.label] = node
        for kid in spec["k"]:
            stack.append((node, kid))
    tree.freeze()
    return tree
