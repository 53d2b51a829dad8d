"""Membership/equivalence oracles backed by a PDFA or a black-box model."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .automata import LanguageModel, Pdfa, is_defined, label_at, next_dist
from .equivcheck import CeKind, Counterexample, hk_equiv, shortest_defined_ce_prefix
from .errors import ModelFailureError, PdfaError, TransportError
from .simplex import Distribution, Partitioner, ZERO_CLASS


class Teacher:
    """Answer membership (mq) and equivalence (eq) queries.

    mq returns the next-symbol distribution of the hidden model, or None
    when the teacher reports the string as undefined. eq returns None for
    equivalence or a counterexample that is always defined in the
    hypothesis. Counters track oracle usage.
    """

    def __init__(self, alphabet, partitioner: Partitioner):
        self.alphabet = alphabet
        self.partitioner = partitioner
        self.mq_count = 0
        self.eq_count = 0
        self.last_ce_length: Optional[int] = None

    def mq(self, u) -> Optional[Distribution]:
        raise NotImplementedError

    def eq(self, hypothesis: Pdfa, partitioner: Optional[Partitioner] = None):
        raise NotImplementedError

    def _record_ce(self, hypothesis: Pdfa, ce: Optional[Counterexample]):
        if ce is not None:
            self.last_ce_length = len(ce.gamma)
            assert is_defined(hypothesis.language_model(), ce.gamma), (
                "equivalence oracle returned a counterexample undefined in the hypothesis"
            )
        return ce


class ExactTeacher(Teacher):
    """Answers every membership query from an explicit target PDFA."""

    def __init__(self, target: Pdfa, partitioner: Partitioner):
        super().__init__(target.alphabet, partitioner)
        self.target = target

    def mq(self, u) -> Optional[Distribution]:
        self.mq_count += 1
        return next_dist(self.target, u)

    def eq(self, hypothesis: Pdfa, partitioner: Optional[Partitioner] = None):
        self.eq_count += 1
        ce = hk_equiv(self.target, hypothesis, partitioner or self.partitioner)
        return self._record_ce(hypothesis, ce)


class FilterTeacher(Teacher):
    """Like ExactTeacher but reports strings through zero transitions as undefined."""

    def __init__(self, target: Pdfa, partitioner: Partitioner):
        super().__init__(target.alphabet, partitioner)
        self.target = target
        self._lm = target.language_model()

    def mq(self, u) -> Optional[Distribution]:
        self.mq_count += 1
        return self._lm.next(tuple(u))

    def eq(self, hypothesis: Pdfa, partitioner: Optional[Partitioner] = None):
        self.eq_count += 1
        ce = hk_equiv(self.target, hypothesis, partitioner or self.partitioner)
        return self._record_ce(hypothesis, ce)


@dataclass(frozen=True)
class PacParams:
    """Sampling-based equivalence parameters.

    Per call number `round` (starting from the configured value), the oracle
    draws ceil((1/epsilon) * (ln(1/delta) + round * ln 2)) strings.
    """

    epsilon: float = 0.05
    delta: float = 0.05
    max_len: int = 50
    round: int = 1

    def __post_init__(self):
        if not 0 < self.epsilon < 1 or not 0 < self.delta < 1:
            raise ValueError("epsilon and delta must lie in (0, 1)")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")

    def sample_count(self, round_index: int) -> int:
        return math.ceil((math.log(1 / self.delta) + round_index * math.log(2)) / self.epsilon)


class PacTeacher(Teacher):
    """Black-box teacher: eq samples random walks over the hypothesis.

    Every sampled string is generated from the hypothesis' own
    distributions, so all its prefixes are defined in the hypothesis and any
    disagreement with the model yields a valid counterexample directly.
    """

    def __init__(self, model: LanguageModel, partitioner: Partitioner, params: PacParams, seed=0):
        super().__init__(model.alphabet, partitioner)
        self.model = model
        self.params = params
        self._rng = np.random.default_rng(seed)
        self._round = params.round
        self.model_query_count = 0
        self._cache: dict[tuple, Optional[Distribution]] = {}

    def _model_next(self, u) -> Optional[Distribution]:
        u = tuple(u)
        if u not in self._cache:
            self.model_query_count += 1
            try:
                self._cache[u] = self.model.next(u)
            except (TransportError, PdfaError) as exc:
                raise ModelFailureError(u, exc) from exc
        return self._cache[u]

    def mq(self, u) -> Optional[Distribution]:
        self.mq_count += 1
        return self._model_next(u)

    def _walk(self, hypothesis: Pdfa) -> tuple:
        q = hypothesis.initial
        u = ()
        term = hypothesis.alphabet.terminal_index
        while len(u) < self.params.max_len:
            probs = np.asarray([float(p) for p in hypothesis.dists[q].probs])
            s = int(self._rng.choice(len(probs), p=probs / probs.sum()))
            if s == term:
                return u
            u = u + (s,)
            q = hypothesis.trans[q][s]
        return u

    def eq(self, hypothesis: Pdfa, partitioner: Optional[Partitioner] = None):
        partitioner = partitioner or self.partitioner
        self.eq_count += 1
        n = self.params.sample_count(self._round)
        self._round += 1
        hyp_lm = hypothesis.language_model()
        for _ in range(n):
            u = self._walk(hypothesis)
            for j in range(len(u) + 1):
                p = u[:j]
                dist = self._model_next(p)
                model_label = ZERO_CLASS if dist is None else partitioner.label(dist)
                if model_label != label_at(hyp_lm, partitioner, p):
                    gamma = shortest_defined_ce_prefix(_CachedModel(self), hypothesis, partitioner, p)
                    kind = CeKind.SUPPORT_MISMATCH if dist is None else CeKind.DIST_MISMATCH
                    return self._record_ce(hypothesis, Counterexample(gamma, kind))
        return None


class _CachedModel(LanguageModel):
    """Teacher-internal view of the model that shares the query cache."""

    def __init__(self, teacher: PacTeacher):
        self.teacher = teacher
        self.alphabet = teacher.alphabet

    def next(self, u):
        return self.teacher._model_next(u)


def exact_teacher(target: Pdfa, partitioner: Partitioner) -> ExactTeacher:
    """Teacher that answers every query, including zero-probability paths."""
    return ExactTeacher(target, partitioner)


def filter_teacher(target: Pdfa, partitioner: Partitioner) -> FilterTeacher:
    """Teacher that flags membership queries through zero transitions as undefined."""
    return FilterTeacher(target, partitioner)


def pac_teacher(
    model: LanguageModel, partitioner: Partitioner, params: PacParams, seed=0
) -> PacTeacher:
    """Sampling-based teacher for models without an explicit automaton."""
    return PacTeacher(model, partitioner, params, seed)
