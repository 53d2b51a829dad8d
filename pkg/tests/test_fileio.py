"""Serialization round trips for automata and guides."""

from fractions import Fraction

import pytest

from pdfalearn.errors import ParseFailureError
from pdfalearn.fileio import (
    format_pdfa,
    load_guide,
    load_pdfa,
    parse_pdfa,
    save_guide,
    save_pdfa,
)
from pdfalearn.pipeline import digit_guide
from pdfalearn.randgen import GenSpec, random_pdfa


def test_float_round_trip_is_bit_exact(tmp_path, loop_pdfa):
    path = tmp_path / "a.pdfa"
    save_pdfa(loop_pdfa, path)
    back = load_pdfa(path)
    assert back.trans == loop_pdfa.trans
    assert all(a.probs == b.probs for a, b in zip(back.dists, loop_pdfa.dists))


def test_rational_round_trip_stays_rational(tmp_path, sync_model_pdfa):
    path = tmp_path / "b.pdfa"
    save_pdfa(sync_model_pdfa, path)
    back = load_pdfa(path)
    assert back.dists[0].prob(0) == Fraction(7, 10)
    assert isinstance(back.dists[0].prob(0), Fraction)
    assert format_pdfa(back) == format_pdfa(sync_model_pdfa)


def test_random_instances_round_trip(tmp_path):
    for seed in range(3):
        pdfa = random_pdfa(GenSpec(25, 4, 0.6, seed=seed))
        path = tmp_path / f"r{seed}.pdfa"
        save_pdfa(pdfa, path)
        back = load_pdfa(path)
        assert back.trans == pdfa.trans
        assert all(a.probs == b.probs for a, b in zip(back.dists, pdfa.dists))


def test_undef_transitions_round_trip(tmp_path, merged_pair_pdfa):
    from pdfalearn.automata import quotient
    from pdfalearn.simplex import ExactPartitioner

    q = quotient(merged_pair_pdfa, ExactPartitioner())
    path = tmp_path / "q.pdfa"
    save_pdfa(q, path)
    assert load_pdfa(path).trans == q.trans


def test_parse_failures_are_reported():
    with pytest.raises(ParseFailureError):
        parse_pdfa("alphabet a b\nstates 1\ninitial 0\nstate 0\ndist a nope\n")
    with pytest.raises(ParseFailureError):
        parse_pdfa("states 1\n")
    with pytest.raises(ParseFailureError):
        parse_pdfa("alphabet a\nstates 2\ninitial 0\nstate 0\ndist a 1\ntrans a 0\n")


def test_guide_file_round_trip(tmp_path):
    g = digit_guide()
    path = tmp_path / "g.guide"
    save_guide(g, path)
    back = load_guide(path)
    assert back.masks == g.masks and back.delta == g.delta
