"""Shared fixtures: the small worked automata used throughout the suite."""

from fractions import Fraction

import pytest

from pdfalearn.automata import GuideAutomaton, Pdfa
from pdfalearn.simplex import Alphabet, Distribution

AB = Alphabet(("a", "b"))


def dist(m):
    return Distribution.from_map(AB, m)


@pytest.fixture(scope="session")
def ab_alphabet():
    return AB


@pytest.fixture(scope="session")
def loop_pdfa():
    """Three-state automaton: a/b split from the start, then self-loops.

    q0 -a/0.3-> q1 (a/0.6 loop, b/0 loop, term 0.4)
    q0 -b/0.7-> q2 (a/0.4 loop, b/0.4 loop, term 0.2)
    Terminates with probability 1.
    """
    return Pdfa(
        AB,
        (
            dist({"a": 0.3, "b": 0.7, "$": 0.0}),
            dist({"a": 0.6, "b": 0.0, "$": 0.4}),
            dist({"a": 0.4, "b": 0.4, "$": 0.2}),
        ),
        ((1, 2), (1, 1), (2, 2)),
    )


@pytest.fixture(scope="session")
def loop_pdfa_top2():
    """The same automaton after top-2 filtering: q2 loses its termination mass."""
    return Pdfa(
        AB,
        (
            dist({"a": 0.3, "b": 0.7, "$": 0.0}),
            dist({"a": 0.6, "b": 0.0, "$": 0.4}),
            dist({"a": 0.5, "b": 0.5, "$": 0.0}),
        ),
        ((1, 2), (1, 1), (2, 2)),
    )


@pytest.fixture(scope="session")
def merged_pair_pdfa():
    """Two behaviorally equal states reachable only through a zero-probability edge.

    q0 and q1 swap on 'a' with identical distributions; q2 hangs off a
    b/0 edge, so every string through it has probability zero.
    """
    return Pdfa(
        AB,
        (
            dist({"a": 0.1, "b": 0.0, "$": 0.9}),
            dist({"a": 0.1, "b": 0.0, "$": 0.9}),
            dist({"a": 0.2, "b": 0.7, "$": 0.1}),
        ),
        ((1, 2), (0, 1), (0, 2)),
    )


@pytest.fixture(scope="session")
def merged_pair_quotient_pdfa():
    """Hand-built two-state reduction of merged_pair_pdfa (zero edge intact)."""
    return Pdfa(
        AB,
        (
            dist({"a": 0.1, "b": 0.0, "$": 0.9}),
            dist({"a": 0.2, "b": 0.7, "$": 0.1}),
        ),
        ((0, 1), (1, 1)),
    )


@pytest.fixture(scope="session")
def sync_model_pdfa():
    """Two-state rational model used for the synchronization example."""
    return Pdfa(
        AB,
        (
            dist({"a": Fraction(7, 10), "b": Fraction(2, 10), "$": Fraction(1, 10)}),
            dist({"a": Fraction(3, 10), "b": Fraction(2, 10), "$": Fraction(5, 10)}),
        ),
        ((0, 1), (1, 0)),
    )


@pytest.fixture(scope="session")
def sync_guide():
    """Guide: b is forbidden until an 'a' has been read; termination always allowed.

    State 2 is the dead completion state (mask all zero).
    """
    return GuideAutomaton(
        AB,
        masks=((1, 0, 1), (1, 1, 1), (0, 0, 0)),
        delta=((1, 2), (1, 0), (2, 2)),
    )
