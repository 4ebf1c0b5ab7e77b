import json
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stfilter.errors import ConfigError, ContractError
from stfilter.flat import FlatTree
from stfilter.suffix_tree import (
    ClassTree,
    build_class_tree,
    conditional_probability,
    find_node,
    insert_string,
    load_profile,
    profile_dict,
    save_profile,
    total_probability,
    tree_stats,
)

from oracles import substring_counts, unique_substrings


@pytest.fixture(scope="module")
def meet_feet():
    return build_class_tree(["meet", "feet"], 8)


class TestWorkedExample:
    """The meet/feet tree, with every number enumerable by hand."""

    def test_meet_alone_has_nine_nodes(self):
        tree = ClassTree(8)
        insert_string(tree, "meet")
        assert tree_stats(tree).node_count == 9

    def test_node_count_13(self, meet_feet):
        assert tree_stats(meet_feet).node_count == 13

    def test_frequency_sum_20(self, meet_feet):
        assert tree_stats(meet_feet).frequency_sum == 20

    def test_level_one_sum_is_char_count(self, meet_feet):
        stats = tree_stats(meet_feet)
        assert stats.per_level_frequency_sums[1] == 8
        assert meet_feet.char_count == 8

    def test_level_two_sum(self, meet_feet):
        assert tree_stats(meet_feet).per_level_frequency_sums[2] == 6

    def test_find_eet_frequency_2(self, meet_feet):
        node = find_node(meet_feet, "eet")
        assert node is not None and node.frequency == 2

    def test_find_ee_frequency_2(self, meet_feet):
        assert find_node(meet_feet, "ee").frequency == 2

    def test_find_absent(self, meet_feet):
        assert find_node(meet_feet, "zz") is None

    def test_conditional_probability_ee(self, meet_feet):
        # parent "e" has children {e: 2, t: 2}
        assert conditional_probability(meet_feet, find_node(meet_feet, "ee")) == 0.5

    def test_conditional_probability_only_child(self, meet_feet):
        assert conditional_probability(meet_feet, find_node(meet_feet, "eet")) == 1.0

    def test_total_probability_ee(self, meet_feet):
        assert total_probability(meet_feet, find_node(meet_feet, "ee")) == pytest.approx(2 / 6)

    def test_total_probability_level_one(self, meet_feet):
        assert total_probability(meet_feet, find_node(meet_feet, "e")) == pytest.approx(4 / 8)

    def test_alphabet(self, meet_feet):
        assert meet_feet.alphabet == {"m", "e", "t", "f"}

    def test_density_from_enumeration(self, meet_feet):
        # oracle: internal nodes are the root plus every substring extendable
        # by one character; every non-root node is exactly one child link
        subs = unique_substrings(["meet", "feet"], 8)
        internal = {u for u in subs if any(u + c in subs for c in "meft")}
        n_internal = len(internal) + 1  # + root
        assert tree_stats(meet_feet).density == pytest.approx(len(subs) / n_internal)


class TestInsertAndBuild:
    def test_depth_2_unique_substrings(self):
        tree = build_class_tree(["meet"], 2)
        assert tree_stats(tree).node_count == 6  # {m, e, t, me, ee, et}

    def test_depth_1_single_char(self):
        tree = build_class_tree(["aa"], 1)
        assert tree_stats(tree).node_count == 1
        assert find_node(tree, "a").frequency == 2

    def test_empty_docs(self):
        tree = build_class_tree([], 8)
        stats = tree_stats(tree)
        assert stats.node_count == 0
        assert stats.frequency_sum == 0
        assert stats.density == 0.0

    def test_empty_string_insert_is_noop(self):
        tree = ClassTree(4)
        insert_string(tree, "")
        assert tree_stats(tree).node_count == 0

    def test_sequential_equals_batch(self):
        a = ClassTree(8)
        insert_string(a, "meet")
        insert_string(a, "feet")
        b = build_class_tree(["meet", "feet"], 8)
        assert profile_dict(a) == profile_dict(b)

    def test_depth_out_of_range(self):
        with pytest.raises(ConfigError):
            ClassTree(0)
        with pytest.raises(ConfigError):
            ClassTree(17)

    def test_insert_after_freeze_rejected(self):
        tree = build_class_tree(["ab"], 4)
        with pytest.raises(ContractError):
            insert_string(tree, "cd")

    def test_doc_and_char_counts(self):
        tree = build_class_tree(["meet", "feet", ""], 8)
        assert tree.doc_count == 3
        assert tree.char_count == 8


class TestOracles:
    """Node counts and frequencies against brute-force enumeration."""

    @pytest.mark.parametrize("seed", range(8))
    def test_node_count_and_frequencies(self, seed):
        rng = random.Random(seed)
        d = rng.randint(1, 8)
        texts = [
            "".join(rng.choice("abc") for _ in range(rng.randint(0, 30)))
            for _ in range(rng.randint(1, 10))
        ]
        tree = build_class_tree(texts, d)
        subs = unique_substrings(texts, d)
        counts = substring_counts(texts, d)
        assert tree_stats(tree).node_count == len(subs)
        assert tree_stats(tree).frequency_sum == sum(counts.values())
        for u in sorted(subs):
            assert find_node(tree, u).frequency == counts[u]
        # absent strings stay absent
        for _ in range(20):
            probe = "".join(rng.choice("abcd") for _ in range(rng.randint(1, d)))
            node = find_node(tree, probe)
            assert (node is not None) == (probe in subs)

    def test_monotone_frequency(self):
        rng = random.Random(99)
        texts = ["".join(rng.choice("ab") for _ in range(40)) for _ in range(5)]
        tree = build_class_tree(texts, 6)
        stack = [tree.root]
        while stack:
            node = stack.pop()
            for child in node.children.values():
                if node is not tree.root:
                    assert node.frequency >= child.frequency
                stack.append(child)


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.text(alphabet="abc", max_size=25), min_size=0, max_size=8),
    st.integers(min_value=1, max_value=8),
)
def test_insertion_order_independence(texts, d):
    base = build_class_tree(texts, d)
    rng = random.Random(7)
    for _ in range(3):
        perm = list(texts)
        rng.shuffle(perm)
        assert profile_dict(build_class_tree(perm, d)) == profile_dict(base)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.text(alphabet="abcd", max_size=30), min_size=1, max_size=8))
def test_probability_normalisation(texts):
    tree = build_class_tree(texts, 6)
    stats = tree_stats(tree)
    stack = [tree.root]
    while stack:
        node = stack.pop()
        if node.children:
            total = sum(
                conditional_probability(tree, c) for c in node.children.values()
            )
            assert abs(total - 1.0) <= 1e-9
            stack.extend(node.children.values())
    for level in range(1, 7):
        if stats.per_level_node_counts[level] == 0:
            continue
        level_nodes = []
        stack = [(tree.root, 0)]
        while stack:
            node, lv = stack.pop()
            if lv == level:
                level_nodes.append(node)
                continue
            stack.extend((c, lv + 1) for c in node.children.values())
        total = sum(total_probability(tree, n) for n in level_nodes)
        assert abs(total - 1.0) <= 1e-9


class TestFlatEquivalence:
    """The kernel-built flat tree matches the dict tree's canonical form."""

    @pytest.mark.parametrize("seed", range(5))
    def test_from_texts_matches_flatten(self, seed):
        rng = random.Random(seed)
        d = rng.randint(1, 8)
        texts = [
            "".join(rng.choice("abcXY z") for _ in range(rng.randint(0, 40)))
            for _ in range(rng.randint(0, 12))
        ]
        via_kernel = FlatTree.from_texts(texts, d)
        via_dict = build_class_tree(texts, d).flat()
        for attr in ("char", "freq", "parent", "first_child", "n_children", "level"):
            np.testing.assert_array_equal(
                getattr(via_kernel, attr), getattr(via_dict, attr), err_msg=attr
            )
        np.testing.assert_allclose(via_kernel.sibling_sum, via_dict.sibling_sum)
        np.testing.assert_allclose(via_kernel.level_freq_sum, via_dict.level_freq_sum)
        assert via_kernel.char_count == via_dict.char_count

    def test_walk(self):
        flat = FlatTree.from_texts(["meet", "feet"], 8)
        assert flat.walk("eet") != -1
        assert flat.freq[flat.walk("eet")] == 2
        assert flat.walk("zz") == -1


class TestProfileSerialization:
    def test_round_trip(self, tmp_path, meet_feet):
        path = tmp_path / "profile.json"
        save_profile(meet_feet, str(path))
        loaded = load_profile(str(path))
        assert profile_dict(loaded) == profile_dict(meet_feet)
        assert loaded.depth_limit == 8
        assert loaded.doc_count == 2
        assert loaded.char_count == 8

    def test_bytes_stable(self, tmp_path, meet_feet):
        p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
        save_profile(meet_feet, str(p1))
        save_profile(build_class_tree(["feet", "meet"], 8), str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_flat_serializes_to_identical_bytes(self, tmp_path, meet_feet):
        import random

        rng = random.Random(2)
        texts = ["".join(rng.choice("abcXY ") for _ in range(30)) for _ in range(6)]
        p1, p2 = tmp_path / "dict.json", tmp_path / "flat.json"
        save_profile(build_class_tree(texts, 5), str(p1))
        save_profile(FlatTree.from_texts(texts, 5), str(p2))
        assert p1.read_bytes() == p2.read_bytes()

    def test_codepoints_are_integers(self, tmp_path, meet_feet):
        path = tmp_path / "profile.json"
        save_profile(meet_feet, str(path))
        data = json.loads(path.read_text())
        assert {k["c"] for k in data["root"]["k"]} == {ord(c) for c in "meft"}

    def test_malformed_profile(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"oops": 1}')
        with pytest.raises(ConfigError):
            load_profile(str(path))


def test_find_node_empty_path_rejected(meet_feet):
    with pytest.raises(ContractError):
        find_node(meet_feet, "")


def test_conditional_probability_of_root_rejected(meet_feet):
    with pytest.raises(ContractError):
        conditional_probability(meet_feet, meet_feet.root)
