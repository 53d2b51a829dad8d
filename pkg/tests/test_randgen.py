"""Random benchmark-instance generation."""

import numpy as np
import pytest

from pdfalearn.automata import is_defined
from pdfalearn.randgen import GenSpec, assign_distributions, random_dfa, random_pdfa


def test_single_state_is_all_self_loops():
    dfa = random_dfa(1, 4, seed=0)
    assert dfa == ((0, 0, 0, 0),)


def test_structure_seed_determinism():
    assert random_dfa(50, 5, seed=123) == random_dfa(50, 5, seed=123)
    assert random_pdfa(GenSpec(20, 3, 0.5, seed=9)).dists == random_pdfa(GenSpec(20, 3, 0.5, seed=9)).dists


def test_reachable_size_concentrates_near_nominal():
    sizes = [len(random_dfa(500, 20, seed=s)) for s in range(100)]
    mean = float(np.mean(sizes))
    assert 0.8 * 500 <= mean <= 500


def test_theta_zero_keeps_every_entry_positive():
    pdfa = random_pdfa(GenSpec(30, 4, 0.0, seed=4))
    for d in pdfa.dists:
        assert all(p > 0 for p in d.probs)


def test_high_theta_support_statistics():
    """At theta=0.95 with m=20 the mean |support incl. terminal| sits near
    21*0.05 + P(all zeroed) ~= 1.39, and the revival rule keeps it >= 1."""
    sizes = []
    for seed in range(5):
        pdfa = random_pdfa(GenSpec(500, 20, 0.95, seed=seed))
        for d in pdfa.dists:
            k = len(d.support()) + (1 if d.terminal_prob > 0 else 0)
            assert k >= 1
            sizes.append(k)
    mean = float(np.mean(sizes))
    assert 1.2 <= mean <= 1.6


def test_every_state_has_a_distribution_and_lambda_is_defined():
    for theta in (0.0, 0.5, 0.9):
        pdfa = random_pdfa(GenSpec(40, 5, theta, seed=7))
        assert pdfa.is_total()
        assert is_defined(pdfa.language_model(), ())


def test_genspec_validation():
    with pytest.raises(ValueError):
        GenSpec(0, 3, 0.5)
    with pytest.raises(ValueError):
        GenSpec(3, 3, 1.0)


def test_assign_distributions_structure_preserved():
    dfa = random_dfa(10, 3, seed=2)
    pdfa = assign_distributions(dfa, 0.5, seed=3)
    assert pdfa.trans == dfa
