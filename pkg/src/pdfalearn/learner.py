"""Active PDFA learner over a classification tree.

Two algorithm variants share the machinery. The zero-omitting variant keeps
every access string defined (positive prefix probability), builds hypothesis
transitions only on support symbols, and reduces every counterexample to its
shortest defined disagreeing prefix. The baseline variant adds transitions
for every symbol and consumes counterexamples unreduced; paired with a
teacher that reports undefined queries it degrades gracefully by classifying
all undefined strings into one reserved leaf that yields no state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

from .automata import LanguageModel, Pdfa, String, trim
from .equivcheck import shortest_defined_ce_prefix
from .errors import (
    NotACounterexampleError,
    QueryBudgetExceededError,
    TeacherUndefinedError,
)
from .simplex import ClassId, Distribution, Partitioner, ZERO_CLASS
from .teacher import Teacher


class LearnerMode(Enum):
    OMIT_ZERO = "omit-zero"
    QNT_STANDARD = "qnt-standard"


@dataclass
class LearnerConfig:
    mode: LearnerMode = LearnerMode.OMIT_ZERO
    max_query_len: Optional[int] = None
    max_queries: Optional[int] = None
    max_iterations: int = 100_000
    seed: int = 0
    monitor: Optional["LearnerMonitor"] = None


class _Leaf:
    __slots__ = ("string", "dist", "parent")

    def __init__(self, string: String, dist: Optional[Distribution], parent=None):
        self.string = string
        self.dist = dist
        self.parent = parent


class _Inner:
    __slots__ = ("string", "arcs", "parent")

    def __init__(self, string: String, parent=None):
        self.string = string
        self.arcs: dict[ClassId, object] = {}
        self.parent = parent


class ClassificationTree:
    """Access strings at the leaves, distinguishing strings at inner nodes.

    Arcs out of an inner node w are keyed by the class of MQ(v·w); the
    reserved ZERO key groups strings whose extension by w is undefined.
    """

    def __init__(self, partitioner: Partitioner):
        self.partitioner = partitioner
        self.root = _Inner(())
        self.leaves: dict[String, _Leaf] = {}

    def add_leaf(self, parent: _Inner, key: ClassId, string: String, dist) -> _Leaf:
        if key in parent.arcs:
            raise ValueError("arc key already present")
        leaf = _Leaf(string, dist, parent)
        parent.arcs[key] = leaf
        self.leaves[string] = leaf
        return leaf

    def defined_leaves(self) -> list[_Leaf]:
        return sorted(
            (l for l in self.leaves.values() if l.dist is not None),
            key=lambda l: (len(l.string), l.string),
        )

    def depth(self) -> int:
        def walk_down(node, d):
            if isinstance(node, _Leaf):
                return d
            return max((walk_down(c, d + 1) for c in node.arcs.values()), default=d)

        return walk_down(self.root, 0)

    def lca(self, u: String, v: String) -> _Inner:
        ancestors = set()
        node = self.leaves[u]
        while node is not None:
            ancestors.add(id(node))
            node = node.parent
        node = self.leaves[v]
        while node is not None:
            if id(node) in ancestors:
                return node
            node = node.parent
        raise ValueError("leaves share no ancestor")

    def access_strings(self) -> list[String]:
        return [l.string for l in self.defined_leaves()]


@dataclass
class LearnerMonitor:
    """Optional assertion hooks evaluated during learning.

    is_defined_fn, when provided, is the ground-truth definedness oracle
    used to check that every leaf keeps a positive prefix probability.
    """

    is_defined_fn: Optional[Callable[[String], bool]] = None
    check_invariants: bool = True
    events: int = 0
    violations: list = field(default_factory=list)

    def _fail(self, message):
        self.violations.append(message)
        raise AssertionError(message)

    def tree_changed(self, tree: ClassificationTree, mode: LearnerMode):
        self.events += 1
        if not self.check_invariants:
            return
        if mode is LearnerMode.OMIT_ZERO:
            for leaf in tree.leaves.values():
                if leaf.dist is None:
                    self._fail(f"leaf {leaf.string!r} stored as undefined")
                if self.is_defined_fn is not None and not self.is_defined_fn(leaf.string):
                    self._fail(f"leaf {leaf.string!r} is not defined in the model")
                node = leaf.parent
                while node is not None:
                    if node.string != () and node.string[0] not in leaf.dist.support():
                        self._fail(
                            f"discriminator {node.string!r} starts outside the support of {leaf.string!r}"
                        )
                    node = node.parent

    def sift_depth(self, before: int, after: int):
        self.events += 1
        if self.check_invariants and after > before:
            self._fail("sift increased the tree depth")

    def counterexample(self, hypothesis: Pdfa, gamma: String, hyp_defined: bool):
        self.events += 1
        if self.check_invariants and not hyp_defined:
            self._fail(f"counterexample {gamma!r} undefined in the hypothesis")

    def progress(self, prev_states: int, new_states: int):
        self.events += 1
        if self.check_invariants and new_states <= prev_states:
            self._fail("hypothesis did not grow across an equivalence failure")


class _MqModel(LanguageModel):
    """Language-model view over a membership-query function."""

    def __init__(self, alphabet, mq):
        self.alphabet = alphabet
        self._mq = mq

    def next(self, u):
        return self._mq(tuple(u))


def _label(partitioner: Partitioner, dist: Optional[Distribution]) -> ClassId:
    return ZERO_CLASS if dist is None else partitioner.label(dist)


def _extension_key(mq, partitioner: Partitioner, mode: LearnerMode, v: String, w: String) -> ClassId:
    """Arc key for the extension v·w.

    The congruence assigns every undefined string to the reserved zero
    class, so in zero-omitting mode the walk along w is checked against the
    supports step by step; a teacher that answers structurally on
    zero-probability paths must not smuggle phantom evidence into the tree.
    Baseline mode keys on the raw answer for v·w.
    """
    if mode is LearnerMode.OMIT_ZERO:
        u = v
        for s in w:
            dist = mq(u)
            if dist is None or s not in dist.support():
                return ZERO_CLASS
            u = u + (s,)
        return _label(partitioner, mq(u))
    return _label(partitioner, mq(v + w))


def sift(
    tree: ClassificationTree,
    mq: Callable[[String], Optional[Distribution]],
    v: String,
    mode: LearnerMode = LearnerMode.OMIT_ZERO,
    monitor: Optional[LearnerMonitor] = None,
) -> tuple[_Leaf, bool]:
    """Classify v to a leaf, adding one when its class is new.

    Returns (leaf, grew). The tree's degree may grow; its depth never does.
    """
    depth_before = tree.depth() if monitor else 0
    node = tree.root
    while isinstance(node, _Inner):
        key = _extension_key(mq, tree.partitioner, mode, v, node.string)
        if key is ZERO_CLASS and node is tree.root and mode is LearnerMode.OMIT_ZERO:
            raise TeacherUndefinedError(
                f"access-string candidate {v!r} reported undefined; tree invariant broken"
            )
        child = node.arcs.get(key)
        if child is None:
            leaf = tree.add_leaf(node, key, v, mq(v))
            if monitor:
                monitor.sift_depth(depth_before, tree.depth())
                monitor.tree_changed(tree, mode)
            return leaf, True
        node = child
    if monitor:
        monitor.sift_depth(depth_before, tree.depth())
    return node, False


def build(
    tree: ClassificationTree,
    mq: Callable[[String], Optional[Distribution]],
    alphabet,
    mode: LearnerMode = LearnerMode.OMIT_ZERO,
    monitor: Optional[LearnerMonitor] = None,
) -> tuple[Pdfa, list[String]]:
    """Construct the hypothesis for the current tree.

    Transition targets come from sifting each (leaf, symbol) extension.
    Whenever a sift adds a leaf, the pass restarts on the grown tree; the
    number of restarts is bounded by the number of distribution classes.
    """
    m = alphabet.size
    while True:
        leaves = tree.defined_leaves()
        index = {l.string: i for i, l in enumerate(leaves)}
        rows: list[list[Optional[int]]] = []
        grew = False
        for leaf in leaves:
            scope = (
                sorted(leaf.dist.support())
                if mode is LearnerMode.OMIT_ZERO
                else range(m)
            )
            row: list[Optional[int]] = [None] * m
            for s in scope:
                target, g = sift(tree, mq, leaf.string + (s,), mode, monitor)
                if g:
                    grew = True
                    break
                row[s] = index[target.string] if target.dist is not None else None
            if grew:
                break
            rows.append(row)
        if grew:
            continue
        dists = tuple(l.dist for l in leaves)
        pdfa = Pdfa(alphabet, dists, tuple(tuple(r) for r in rows), index[()])
        return pdfa, [l.string for l in leaves]


def initialize_tree(
    gamma: String,
    mq: Callable[[String], Optional[Distribution]],
    hypothesis: Pdfa,
    partitioner: Partitioner,
    mode: LearnerMode = LearnerMode.OMIT_ZERO,
    monitor: Optional[LearnerMonitor] = None,
) -> ClassificationTree:
    """First tree: root λ with leaves λ and the (possibly reduced) counterexample."""
    gamma = tuple(gamma)
    if mode is LearnerMode.OMIT_ZERO:
        gamma = shortest_defined_ce_prefix(
            _MqModel(hypothesis.alphabet, mq), hypothesis, partitioner, gamma
        )
    tree = ClassificationTree(partitioner)
    lambda_dist = mq(())
    gamma_dist = mq(gamma)
    key_l = _label(partitioner, lambda_dist)
    key_g = _label(partitioner, gamma_dist)
    if key_l == key_g:
        raise NotACounterexampleError("counterexample agrees with the empty string's class")
    tree.add_leaf(tree.root, key_l, (), lambda_dist)
    tree.add_leaf(tree.root, key_g, gamma, gamma_dist)
    if monitor:
        monitor.tree_changed(tree, mode)
    return tree


def update(
    tree: ClassificationTree,
    mq: Callable[[String], Optional[Distribution]],
    hypothesis: Pdfa,
    access: list[String],
    gamma: String,
    mode: LearnerMode = LearnerMode.OMIT_ZERO,
    monitor: Optional[LearnerMonitor] = None,
) -> None:
    """Fold a counterexample into the tree; exactly one leaf is added.

    Either a sift during the analysis discovers a fresh class (the tree
    already grew, the stale counterexample is dropped), or the first index
    where the tree's view of the prefix diverges from the hypothesis walk
    splits a leaf with a new distinguishing string.
    """
    gamma = tuple(gamma)
    partitioner = tree.partitioner
    if mode is LearnerMode.OMIT_ZERO:
        gamma = shortest_defined_ce_prefix(
            _MqModel(hypothesis.alphabet, mq), hypothesis, partitioner, gamma
        )
    n_before = len(tree.leaves)
    prev_leaf = tree.leaves[()]
    state = hypothesis.initial
    for i in range(1, len(gamma) + 1):
        leaf_i, grew = sift(tree, mq, gamma[:i], mode, monitor)
        if grew:
            if len(tree.leaves) != n_before + 1:
                raise AssertionError("sift added more than one leaf")
            return
        state = hypothesis.trans[state][gamma[i - 1]]
        if state is None:
            raise NotACounterexampleError("counterexample walks off the hypothesis")
        if leaf_i.string != access[state]:
            j = i
            u_j, uprime_j = leaf_i.string, access[state]
            break
        prev_leaf = leaf_i
    else:
        raise NotACounterexampleError("tree and hypothesis agree on every prefix")

    w = tree.lca(u_j, uprime_j)
    new_dis = (gamma[j - 1],) + w.string
    new_string = gamma[: j - 1]
    if new_string in tree.leaves:
        raise NotACounterexampleError("divergence point is already an access string")
    split_leaf = prev_leaf
    key_old = _extension_key(mq, partitioner, mode, split_leaf.string, new_dis)
    key_new = _extension_key(mq, partitioner, mode, new_string, new_dis)
    if key_old == key_new:
        raise NotACounterexampleError("new distinguishing string fails to separate the leaves")

    parent = split_leaf.parent
    arc_key = next(k for k, child in parent.arcs.items() if child is split_leaf)
    inner = _Inner(new_dis, parent)
    parent.arcs[arc_key] = inner
    split_leaf.parent = inner
    inner.arcs[key_old] = split_leaf
    new_leaf = _Leaf(new_string, mq(new_string), inner)
    inner.arcs[key_new] = new_leaf
    tree.leaves[new_string] = new_leaf
    if monitor:
        monitor.tree_changed(tree, mode)


def _initial_hypothesis(alphabet, root_dist: Distribution, mode: LearnerMode) -> Pdfa:
    if mode is LearnerMode.OMIT_ZERO:
        row = tuple(0 if s in root_dist.support() else None for s in range(alphabet.size))
    else:
        row = tuple(0 for _ in range(alphabet.size))
    return Pdfa(alphabet, (root_dist,), (row,))


def learn(teacher: Teacher, partitioner: Partitioner, config: Optional[LearnerConfig] = None) -> Pdfa:
    """Run the main loop: hypothesize, ask for equivalence, refine.

    With an exact teacher the result matches the target's quotient modulo
    the partitioner, with one state per reachable defined class.
    """
    config = config or LearnerConfig()
    mode = config.mode
    monitor = config.monitor
    cache: dict[String, Optional[Distribution]] = {}

    def mq(u: String) -> Optional[Distribution]:
        u = tuple(u)
        if config.max_query_len is not None and len(u) > config.max_query_len:
            raise QueryBudgetExceededError(f"query length {len(u)} exceeds the guard")
        if u not in cache:
            if config.max_queries is not None and teacher.mq_count >= config.max_queries:
                raise QueryBudgetExceededError(f"query budget {config.max_queries} exhausted")
            cache[u] = teacher.mq(u)
        return cache[u]

    root_dist = mq(())
    if root_dist is None:
        raise TeacherUndefinedError("model undefined at the empty string")
    hypothesis = _initial_hypothesis(teacher.alphabet, root_dist, mode)
    ce = teacher.eq(hypothesis, partitioner)
    if ce is None:
        return hypothesis
    if monitor:
        monitor.counterexample(
            hypothesis, ce.gamma, walk_defined(hypothesis, ce.gamma)
        )
    tree = initialize_tree(ce.gamma, mq, hypothesis, partitioner, mode, monitor)

    prev_states = hypothesis.n_states
    for _ in range(config.max_iterations):
        hypothesis, access = build(tree, mq, teacher.alphabet, mode, monitor)
        if monitor:
            monitor.progress(prev_states, hypothesis.n_states)
        prev_states = hypothesis.n_states
        ce = teacher.eq(hypothesis, partitioner)
        if ce is None:
            # updates can strand a leaf without incoming transitions; the
            # returned automaton is the reachable part
            return trim(hypothesis)
        if monitor:
            monitor.counterexample(hypothesis, ce.gamma, walk_defined(hypothesis, ce.gamma))
        update(tree, mq, hypothesis, access, ce.gamma, mode, monitor)
    raise QueryBudgetExceededError("iteration guard exhausted before convergence")


def walk_defined(pdfa: Pdfa, u: String) -> bool:
    """True iff u stays inside the supports of the hypothesis."""
    q = pdfa.initial
    for s in u:
        if s not in pdfa.dists[q].support():
            return False
        q = pdfa.trans[q][s]
    return True
