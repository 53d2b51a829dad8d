"""PDFA core: evaluation, definedness, termination mass, congruences, quotients.

A Pdfa couples a deterministic transition structure with a next-symbol
distribution per state. Transitions may be missing (None): walking into a
missing transition makes the string structurally undefined. Independently, a
string is *probability*-undefined as soon as one step leaves the support of
the current distribution; the language-model view of a PDFA follows supports
and reports such strings as undefined even where the structure is total.
"""

from __future__ import annotations

import collections
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

from .errors import (
    AllZeroError,
    AlphabetMismatchError,
    NonConvergenceError,
    UnknownSymbolError,
)
from .simplex import (
    Alphabet,
    ClassId,
    Distribution,
    Partitioner,
    SamplingStrategy,
    ZERO_CLASS,
    apply_sampling,
    normalize,
)

String = tuple[int, ...]
EMPTY: String = ()


@dataclass(frozen=True)
class Pdfa:
    """Probabilistic deterministic finite automaton.

    `trans[q][s]` is the successor state or None (no transition). Every
    state has a distribution; a symbol inside a state's support must have a
    transition, while symbols outside the support may keep a structural
    zero-probability transition or omit it.
    """

    alphabet: Alphabet
    dists: tuple[Distribution, ...]
    trans: tuple[tuple[Optional[int], ...], ...]
    initial: int = 0

    def __post_init__(self):
        n = len(self.dists)
        if len(self.trans) != n:
            raise ValueError("dists and trans disagree on state count")
        if not 0 <= self.initial < n:
            raise ValueError("initial state out of range")
        m = self.alphabet.size
        for q, (dist, row) in enumerate(zip(self.dists, self.trans)):
            if dist.alphabet != self.alphabet:
                raise AlphabetMismatchError(f"state {q} distribution has a different alphabet")
            if len(row) != m:
                raise ValueError(f"state {q} transition row has wrong arity")
            for s, target in enumerate(row):
                if target is not None and not 0 <= target < n:
                    raise ValueError(f"transition ({q},{s}) target {target} out of range")
                if target is None and s in dist.support():
                    raise ValueError(
                        f"state {q} gives positive probability to symbol {s} but has no transition"
                    )

    @property
    def n_states(self) -> int:
        return len(self.dists)

    def is_total(self) -> bool:
        return all(t is not None for row in self.trans for t in row)

    def language_model(self) -> "PdfaLanguageModel":
        return PdfaLanguageModel(self)


def walk(pdfa: Pdfa, u: Sequence[int]) -> Optional[int]:
    """Follow the transition structure from the initial state; None if a step is missing."""
    q = pdfa.initial
    for s in u:
        if not 0 <= s < pdfa.alphabet.size:
            raise UnknownSymbolError(f"symbol index {s} not in alphabet")
        q = pdfa.trans[q][s]
        if q is None:
            return None
    return q


def next_dist(pdfa: Pdfa, u: Sequence[int]) -> Optional[Distribution]:
    """Distribution at the state reached by u, or None when the walk dies."""
    q = walk(pdfa, u)
    return None if q is None else pdfa.dists[q]


class LanguageModel:
    """Total map from strings to next-symbol distributions, with undefinedness.

    next(u) returns None exactly when some step of u left the support of the
    distribution at the preceding prefix. Implementations must be pure
    functions of u.
    """

    alphabet: Alphabet

    def next(self, u: String) -> Optional[Distribution]:
        raise NotImplementedError


class PdfaLanguageModel(LanguageModel):
    """Support-following view of a PDFA as a language model."""

    def __init__(self, pdfa: Pdfa):
        self.pdfa = pdfa
        self.alphabet = pdfa.alphabet

    def state_after(self, u: Sequence[int]) -> Optional[int]:
        q = self.pdfa.initial
        for s in u:
            if s not in self.pdfa.dists[q].support():
                return None
            q = self.pdfa.trans[q][s]
        return q

    def next(self, u: String) -> Optional[Distribution]:
        q = self.state_after(u)
        return None if q is None else self.pdfa.dists[q]


def prefix_prob(model: LanguageModel, w: Sequence[int]):
    """Probability that w occurs as a prefix of a generated string."""
    p = 1
    for i, s in enumerate(w):
        dist = model.next(tuple(w[:i]))
        if dist is None:
            return 0
        factor = dist.prob(s)
        if factor == 0:
            return 0
        p *= factor
    return p


def string_prob(model: LanguageModel, u: Sequence[int]):
    """Probability that generation produces exactly u and terminates."""
    p = prefix_prob(model, u)
    if p == 0:
        return 0
    dist = model.next(tuple(u))
    if dist is None:
        return 0
    return p * dist.terminal_prob


def is_defined(model: LanguageModel, u: Sequence[int]) -> bool:
    """True iff u has positive prefix probability (checked via supports only)."""
    return model.next(tuple(u)) is not None


def label_at(model: LanguageModel, partitioner: Partitioner, u: String) -> ClassId:
    """Class label of model(u), with the reserved ZERO label for undefined u."""
    dist = model.next(u)
    return ZERO_CLASS if dist is None else partitioner.label(dist)


def termination_mass(pdfa: Pdfa, tol: float = 1e-12, max_iter: int = 10**6) -> list[float]:
    """Per-state probability of eventual termination.

    Monotone fixed-point iteration from 0 of
    x_q = pi(q)($) + sum_s pi(q)(s) * x_{trans(q,s)}; converges from below.
    """
    n = pdfa.n_states
    base = [float(d.terminal_prob) for d in pdfa.dists]
    edges = []
    for q in range(n):
        row = []
        dist = pdfa.dists[q]
        for s in dist.support():
            row.append((float(dist.prob(s)), pdfa.trans[q][s]))
        edges.append(row)
    x = [0.0] * n
    for _ in range(max_iter):
        delta = 0.0
        new = [0.0] * n
        for q in range(n):
            v = base[q]
            for p, t in edges[q]:
                v += p * x[t]
            new[q] = v
            delta = max(delta, abs(v - x[q]))
        x = new
        if delta < tol:
            return x
    raise NonConvergenceError(delta, max_iter)


# ---------------------------------------------------------------------------
# Reachability and trimming
# ---------------------------------------------------------------------------

def reachable_states(pdfa: Pdfa, positive_only: bool = False) -> list[int]:
    """BFS over transitions; positive_only restricts to support symbols."""
    seen = [False] * pdfa.n_states
    seen[pdfa.initial] = True
    order = [pdfa.initial]
    queue = collections.deque([pdfa.initial])
    while queue:
        q = queue.popleft()
        symbols = sorted(pdfa.dists[q].support()) if positive_only else range(pdfa.alphabet.size)
        for s in symbols:
            t = pdfa.trans[q][s]
            if t is not None and not seen[t]:
                seen[t] = True
                order.append(t)
                queue.append(t)
    return order


def trim(pdfa: Pdfa, positive_only: bool = False) -> Pdfa:
    """Restrict to reachable states, renumbering in BFS discovery order."""
    order = reachable_states(pdfa, positive_only)
    remap = {old: new for new, old in enumerate(order)}
    keep_targets = set(order)
    dists = tuple(pdfa.dists[q] for q in order)
    trans = []
    for q in order:
        row = []
        for s in range(pdfa.alphabet.size):
            t = pdfa.trans[q][s]
            if t is None or t not in keep_targets:
                row.append(None)
            else:
                row.append(remap[t])
        # positive trimming may orphan zero-probability transitions; drop them
        trans.append(tuple(row))
    return Pdfa(pdfa.alphabet, dists, tuple(trans), remap[pdfa.initial])


# ---------------------------------------------------------------------------
# Congruence partitioning
# ---------------------------------------------------------------------------

class CongruenceMode(Enum):
    """How state behavior is compared during partition refinement.

    SUPPORT: continuations are compared only on support symbols, so
    zero-probability extensions (undefined strings) collapse together.
    ALL: continuations are compared on every symbol.
    """

    SUPPORT = "support"
    ALL = "all"


@dataclass(frozen=True)
class StatePartition:
    """Blocks over the reachable states plus the reserved zero class.

    block_of[q] is the block index, or None for unreachable states.
    zero_states collects states with no valid distribution; for any Pdfa
    built through this package it is empty (the zero class only ever holds
    undefined strings, which no state represents).
    """

    block_of: tuple[Optional[int], ...]
    blocks: tuple[tuple[int, ...], ...]
    zero_states: tuple[int, ...] = ()

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)


def congruence_partition(
    pdfa: Pdfa, partitioner: Partitioner, mode: CongruenceMode = CongruenceMode.SUPPORT
) -> StatePartition:
    """Moore refinement of reachable states compared as rooted submodels.

    Initial blocks group states by distribution label. SUPPORT mode splits a
    block when two members disagree on the block of a support successor
    (label equality forces equal supports, so the probe set is well defined);
    zero-probability transitions are never followed. ALL mode refines over
    every symbol, treating a missing transition as its own sink.
    """
    reach = reachable_states(pdfa)
    labels: dict[ClassId, int] = {}
    block = {}
    for q in reach:
        lab = partitioner.label(pdfa.dists[q])
        block[q] = labels.setdefault(lab, len(labels))

    m = pdfa.alphabet.size
    while True:
        signatures = {}
        for q in reach:
            if mode is CongruenceMode.SUPPORT:
                probe = sorted(pdfa.dists[q].support())
            else:
                probe = range(m)
            sig = (block[q],) + tuple(
                -1 if pdfa.trans[q][s] is None else block[pdfa.trans[q][s]] for s in probe
            )
            signatures[q] = sig
        fresh: dict[tuple, int] = {}
        new_block = {q: fresh.setdefault(signatures[q], len(fresh)) for q in reach}
        if len(fresh) == len(set(block.values())):
            break
        block = new_block

    # renumber blocks by smallest member state for determinism
    members: dict[int, list[int]] = collections.defaultdict(list)
    for q in reach:
        members[block[q]].append(q)
    ordered = sorted(members.values(), key=min)
    final = {}
    for i, states in enumerate(ordered):
        for q in states:
            final[q] = i
    block_of = tuple(final.get(q) for q in range(pdfa.n_states))
    return StatePartition(block_of, tuple(tuple(sorted(s)) for s in ordered))


def quotient(pdfa: Pdfa, partitioner: Partitioner) -> Pdfa:
    """Smallest PDFA matching pdfa on every defined string, modulo the partitioner.

    The positively-reachable part is partitioned; each block becomes one
    state whose distribution comes from the block's representative (the
    state with the shortest access string, ties broken lexicographically on
    symbol indices). Transitions exist only on support symbols.
    """
    sub = trim(pdfa, positive_only=True)
    part = congruence_partition(sub, partitioner, CongruenceMode.SUPPORT)

    # shortest access string per state: BFS over support symbols
    access: dict[int, String] = {sub.initial: EMPTY}
    queue = collections.deque([sub.initial])
    while queue:
        q = queue.popleft()
        for s in sorted(sub.dists[q].support()):
            t = sub.trans[q][s]
            if t is not None and t not in access:
                access[t] = access[q] + (s,)
                queue.append(t)

    reps = {}
    for b, states in enumerate(part.blocks):
        reps[b] = min(states, key=lambda q: (len(access[q]), access[q]))
    order = sorted(range(part.num_blocks), key=lambda b: (len(access[reps[b]]), access[reps[b]]))
    new_index = {b: i for i, b in enumerate(order)}

    dists = []
    trans = []
    for b in order:
        rep = reps[b]
        dist = sub.dists[rep]
        dists.append(dist)
        row = []
        for s in range(sub.alphabet.size):
            if s in dist.support():
                row.append(new_index[part.block_of[sub.trans[rep][s]]])
            else:
                row.append(None)
        trans.append(tuple(row))
    return Pdfa(sub.alphabet, tuple(dists), tuple(trans), new_index[part.block_of[sub.initial]])


def isomorphic(a: Pdfa, b: Pdfa) -> bool:
    """Structure- and distribution-exact isomorphism on the reachable parts."""
    if a.alphabet != b.alphabet:
        return False
    a, b = trim(a), trim(b)
    if a.n_states != b.n_states:
        return False
    pairing = {a.initial: b.initial}
    queue = collections.deque([(a.initial, b.initial)])
    while queue:
        qa, qb = queue.popleft()
        if a.dists[qa] != b.dists[qb]:
            return False
        for s in range(a.alphabet.size):
            ta, tb = a.trans[qa][s], b.trans[qb][s]
            if (ta is None) != (tb is None):
                return False
            if ta is None:
                continue
            if ta in pairing:
                if pairing[ta] != tb:
                    return False
            else:
                if tb in pairing.values():
                    return False
                pairing[ta] = tb
                queue.append((ta, tb))
    return True


# ---------------------------------------------------------------------------
# Guide automata and composition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GuideAutomaton:
    """Deterministic automaton with a {0,1} mask per state over Σ ∪ {terminal}.

    delta is total; masked-out symbols still have transitions (their targets
    are simply unreachable through any allowed path).
    """

    alphabet: Alphabet
    masks: tuple[tuple[int, ...], ...]
    delta: tuple[tuple[int, ...], ...]
    initial: int = 0

    def __post_init__(self):
        n = len(self.masks)
        if len(self.delta) != n:
            raise ValueError("masks and delta disagree on state count")
        if not 0 <= self.initial < n:
            raise ValueError("initial state out of range")
        m = self.alphabet.size
        for q in range(n):
            if len(self.masks[q]) != m + 1:
                raise ValueError(f"state {q} mask has wrong arity")
            if any(v not in (0, 1) for v in self.masks[q]):
                raise ValueError("mask values must be 0 or 1")
            if len(self.delta[q]) != m:
                raise ValueError(f"state {q} delta row has wrong arity")
            if any(not 0 <= t < n for t in self.delta[q]):
                raise ValueError("delta target out of range")

    @property
    def n_states(self) -> int:
        return len(self.masks)


def _masked(dist: Distribution, mask: Sequence[int]) -> Optional[Distribution]:
    """Mask, renormalize, or report a dead state as None."""
    weights = tuple(p * v for p, v in zip(dist.probs, mask))
    try:
        return normalize(dist.alphabet, weights)
    except AllZeroError:
        return None


class ComposedLanguageModel(LanguageModel):
    """On-demand product of a language model with a guide plus sampling.

    next(u) masks the inner model's distribution with the guide state
    reached by u, renormalizes, and applies the sampling strategy. The
    composite is undefined at u as soon as a step of u leaves the
    composite's own (sampled) support, or the masked weights all vanish.
    """

    def __init__(self, model: LanguageModel, guide: GuideAutomaton, strategy: SamplingStrategy = None):
        if model.alphabet != guide.alphabet:
            raise AlphabetMismatchError("model and guide alphabets differ")
        self.model = model
        self.guide = guide
        self.strategy = strategy
        self.alphabet = model.alphabet
        self._cache: dict[String, Optional[Distribution]] = {}
        self._gstate: dict[String, int] = {EMPTY: guide.initial}

    def _eval(self, u: String) -> Optional[Distribution]:
        if u in self._cache:
            return self._cache[u]
        if u:
            parent = self._eval(u[:-1])
            s = u[-1]
            if parent is None or s not in parent.support():
                self._cache[u] = None
                return None
            self._gstate[u] = self.guide.delta[self._gstate[u[:-1]]][s]
        inner = self.model.next(u)
        if inner is None:
            # composite supports are contained in the inner model's, so a
            # defined composite prefix cannot out-run the inner model
            result = None
        else:
            masked = _masked(inner, self.guide.masks[self._gstate[u]])
            result = None if masked is None else apply_sampling(self.strategy, masked)
        self._cache[u] = result
        return result

    def next(self, u: String) -> Optional[Distribution]:
        return self._eval(tuple(u))


def compose(
    model: LanguageModel, guide: GuideAutomaton, strategy: SamplingStrategy = None
) -> ComposedLanguageModel:
    """Synchronize a model with a guide; no product automaton is built."""
    return ComposedLanguageModel(model, guide, strategy)


def materialize_compose(
    pdfa: Pdfa, guide: GuideAutomaton, strategy: SamplingStrategy = None
) -> Pdfa:
    """Explicit product PDFA of a finite model with a guide.

    Product states with all-zero masked weights are dead: transitions into
    them are dropped (None). A dead state reachable with positive
    probability makes the composition itself undefined mid-generation,
    which AllZeroError reports.
    """
    if pdfa.alphabet != guide.alphabet:
        raise AlphabetMismatchError("model and guide alphabets differ")

    def state_dist(l: int, g: int) -> Optional[Distribution]:
        masked = _masked(pdfa.dists[l], guide.masks[g])
        return None if masked is None else apply_sampling(strategy, masked)

    start = (pdfa.initial, guide.initial)
    init_dist = state_dist(*start)
    if init_dist is None:
        raise AllZeroError("composition is dead at the initial state")
    index = {start: 0}
    dists = [init_dist]
    rows: list[list[Optional[int]]] = []
    queue = collections.deque([start])
    order = [start]
    while queue:
        l, g = queue.popleft()
        dist = dists[index[(l, g)]]
        row: list[Optional[int]] = []
        for s in range(pdfa.alphabet.size):
            lt = pdfa.trans[l][s]
            if lt is None:
                row.append(None)
                continue
            target = (lt, guide.delta[g][s])
            if target not in index:
                tdist = state_dist(*target)
                if tdist is None:
                    if dist.prob(s) > 0:
                        raise AllZeroError(
                            f"composition dies with positive probability on symbol {s}"
                        )
                    row.append(None)
                    continue
                index[target] = len(dists)
                dists.append(tdist)
                order.append(target)
                queue.append(target)
            row.append(index[target])
        rows.append(row)
    # a zero-probability edge may point at a state first discovered as dead
    return Pdfa(pdfa.alphabet, tuple(dists), tuple(tuple(r) for r in rows), 0)


class SampledLanguageModel(LanguageModel):
    """Pointwise application of a sampling strategy to another model."""

    def __init__(self, model: LanguageModel, strategy: SamplingStrategy):
        self.model = model
        self.strategy = strategy
        self.alphabet = model.alphabet
        self._cache: dict[String, Optional[Distribution]] = {}

    def next(self, u: String) -> Optional[Distribution]:
        u = tuple(u)
        if u in self._cache:
            return self._cache[u]
        if u:
            parent = self.next(u[:-1])
            if parent is None or u[-1] not in parent.support():
                self._cache[u] = None
                return None
        inner = self.model.next(u)
        result = None if inner is None else apply_sampling(self.strategy, inner)
        self._cache[u] = result
        return result
