"""Guided generation pipeline: sampling, fidelity statistics, guide specs.

Sampling walks a language model ancestrally until the termination symbol is
drawn or a length cap is hit. The statistics compare sampled value/length
distributions either against a second sample or against the exact
distribution of a finite model, using Pearson chi-squared over equal-width
value bins and Kolmogorov-Smirnov tests.
"""

from __future__ import annotations

import collections
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import stats
from scipy.special import gammaincc

from .automata import GuideAutomaton, LanguageModel, Pdfa, PdfaLanguageModel, String
from .errors import NondeterministicSpecError, ParseFailureError, UndefinedStartError
from .simplex import Alphabet

DOT_NAMES = frozenset({"dot", "."})


@dataclass(frozen=True)
class SampledString:
    symbols: String
    truncated: bool

    def __len__(self):
        return len(self.symbols)


def guided_sample(model: LanguageModel, n: int, max_len: int = 50, seed: int = 0) -> list[SampledString]:
    """Draw n independent ancestral samples; walks at max_len are truncated.

    Deterministic per (seed, n, max_len). Explicit automata take a batched
    path that steps all pending walks at once.
    """
    if n < 0 or max_len < 1:
        raise ValueError("need n >= 0 and max_len >= 1")
    if n == 0:
        return []
    if model.next(()) is None:
        raise UndefinedStartError("model is undefined at the empty string")
    if isinstance(model, PdfaLanguageModel):
        return _sample_pdfa(model.pdfa, n, max_len, seed)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        u: String = ()
        truncated = True
        while len(u) < max_len:
            dist = model.next(u)
            probs = np.asarray([float(p) for p in dist.probs])
            s = int(rng.choice(len(probs), p=probs / probs.sum()))
            if s == dist.alphabet.terminal_index:
                truncated = False
                break
            u = u + (s,)
        out.append(SampledString(u, truncated))
    return out


def _sample_pdfa(pdfa: Pdfa, n: int, max_len: int, seed: int) -> list[SampledString]:
    rng = np.random.default_rng(seed)
    m = pdfa.alphabet.size
    cum = np.empty((pdfa.n_states, m + 1))
    for q, dist in enumerate(pdfa.dists):
        row = np.asarray([float(p) for p in dist.probs])
        cum[q] = np.cumsum(row / row.sum())
    cum[:, -1] = 1.0  # guard against rounding leaving the last edge below 1
    succ = np.asarray(
        [[t if t is not None else 0 for t in row] for row in pdfa.trans], dtype=np.int64
    )
    states = np.full(n, pdfa.initial, dtype=np.int64)
    active = np.arange(n)
    symbols: list[list[int]] = [[] for _ in range(n)]
    truncated = np.ones(n, dtype=bool)
    for _ in range(max_len):
        if active.size == 0:
            break
        draws = rng.random(active.size)
        picked = (draws[:, None] < cum[states[active]]).argmax(axis=1)
        finished = picked == m
        for idx, s in zip(active[~finished], picked[~finished]):
            symbols[idx].append(int(s))
        truncated[active[finished]] = False
        keep = ~finished
        states[active[keep]] = succ[states[active[keep]], picked[keep]]
        active = active[keep]
    return [SampledString(tuple(syms), bool(trunc)) for syms, trunc in zip(symbols, truncated)]


def digit_indices(alphabet: Alphabet) -> list[Optional[int]]:
    """Per-symbol digit value, None for non-digit symbols."""
    out = []
    for name in alphabet.symbols:
        if len(name) == 1 and name.isdigit():
            out.append(int(name))
        else:
            out.append(None)
    return out


def parse_float_value(symbols: String, alphabet: Alphabet) -> float:
    """Interpret a sampled digit string as the fraction 0.d1d2...

    A single leading dot-like symbol is allowed; any other non-digit symbol
    is a parse failure.
    """
    digits = digit_indices(alphabet)
    value = 0.0
    scale = 0.1
    for pos, s in enumerate(symbols):
        if digits[s] is None:
            if pos == 0 and alphabet.symbols[s] in DOT_NAMES:
                continue
            raise ParseFailureError(
                f"symbol {alphabet.symbols[s]!r} is not a digit in {alphabet.format(symbols)!r}"
            )
        value += digits[s] * scale
        scale /= 10
    return value


@dataclass
class SampleReport:
    """Counts and test statistics for one comparison."""

    n_samples: int
    values: list[float]
    lengths: list[int]
    truncated: int
    bins: int
    observed: list[int]
    expected: list[float]
    chi2: tuple[float, int, float]
    ks_values: Optional[tuple[float, float]]
    ks_lengths: Optional[tuple[float, float]]

    def to_table(self) -> str:
        lines = ["#bin\tobserved\texpected"]
        for i, (o, e) in enumerate(zip(self.observed, self.expected)):
            lines.append(f"{i}\t{o}\t{e:.6f}")
        stat, dof, p = self.chi2
        lines.append(f"#chi2\t{stat:.6f}\tdof={dof}\tpvalue={p:.6g}")
        if self.ks_values is not None:
            lines.append(f"#ks_values\t{self.ks_values[0]:.6f}\tpvalue={self.ks_values[1]:.6g}")
        if self.ks_lengths is not None:
            lines.append(f"#ks_lengths\t{self.ks_lengths[0]:.6f}\tpvalue={self.ks_lengths[1]:.6g}")
        return "\n".join(lines)


def _bin_index(value: float, bins: int) -> int:
    return min(int(value * bins), bins - 1)


def _chi2_pvalue(stat: float, dof: int) -> float:
    if dof <= 0:
        return 1.0
    return float(gammaincc(dof / 2.0, stat / 2.0))


def _chi2_against_expected(observed: Sequence[int], expected: Sequence[float]) -> tuple[float, int, float]:
    stat = 0.0
    dof = -1
    for o, e in zip(observed, expected):
        if e <= 0:
            if o > 0:
                return math.inf, max(dof, 1), 0.0
            continue
        stat += (o - e) ** 2 / e
        dof += 1
    return stat, max(dof, 0), _chi2_pvalue(stat, max(dof, 0))


def _chi2_two_sample(counts_a: Sequence[int], counts_b: Sequence[int]) -> tuple[float, int, float]:
    total_a, total_b = sum(counts_a), sum(counts_b)
    stat = 0.0
    dof = -1
    for a, b in zip(counts_a, counts_b):
        pooled = a + b
        if pooled == 0:
            continue
        ea = total_a * pooled / (total_a + total_b)
        eb = total_b * pooled / (total_a + total_b)
        stat += (a - ea) ** 2 / ea + (b - eb) ** 2 / eb
        dof += 1
    return stat, max(dof, 0), _chi2_pvalue(stat, max(dof, 0))


def _values_and_lengths(samples: list[SampledString], alphabet: Alphabet):
    values = [parse_float_value(s.symbols, alphabet) for s in samples if not s.truncated]
    lengths = [len(s) for s in samples if not s.truncated]
    truncated = sum(1 for s in samples if s.truncated)
    return values, lengths, truncated


def compare_distributions(
    samples: list[SampledString],
    alphabet: Alphabet,
    other: Optional[list[SampledString]] = None,
    model: Optional[Pdfa] = None,
    bins: int = 10,
    max_len: int = 50,
) -> SampleReport:
    """Compare sampled values/lengths against a second sample or a model.

    Truncated walks are excluded from the value and length statistics and
    reported separately. With a model, expected bin masses and the length
    law are computed exactly, conditioned on completion within max_len.
    """
    if not samples:
        raise ValueError("need at least one sample")
    if (other is None) == (model is None):
        raise ValueError("pass exactly one of `other` or `model`")
    values, lengths, truncated = _values_and_lengths(samples, alphabet)
    observed = [0] * bins
    for v in values:
        observed[_bin_index(v, bins)] += 1

    if model is not None:
        probs = analytic_value_bins(model, bins, max_len)
        expected = [p * len(values) for p in probs]
        chi2 = _chi2_against_expected(observed, expected)
        length_pmf = analytic_length_pmf(model, max_len)
        # value KS uses a finer decimal grid so the CDF error stays far
        # below the statistic's noise floor
        fine = 1000
        ks_vals = _ks_against_binned(values, analytic_value_bins(model, fine, max_len), fine)
        ks_lens = _ks_against_pmf(lengths, length_pmf)
    else:
        values_b, lengths_b, _ = _values_and_lengths(other, alphabet)
        counts_b = [0] * bins
        for v in values_b:
            counts_b[_bin_index(v, bins)] += 1
        chi2 = _chi2_two_sample(observed, counts_b)
        scale = len(values) / max(len(values_b), 1)
        expected = [c * scale for c in counts_b]
        ks_vals = _ks_two_sample(values, values_b)
        ks_lens = _ks_two_sample(lengths, lengths_b)
    return SampleReport(
        n_samples=len(samples),
        values=values,
        lengths=lengths,
        truncated=truncated,
        bins=bins,
        observed=observed,
        expected=expected,
        chi2=chi2,
        ks_values=ks_vals,
        ks_lengths=ks_lens,
    )


def _ks_two_sample(a, b):
    if not a or not b:
        return None
    res = stats.ks_2samp(a, b, mode="asymp")
    return float(res.statistic), float(res.pvalue)


def _ks_discrete(ecdf: np.ndarray, cdf: np.ndarray, n: int):
    """KS distance between two right-continuous CDFs sampled at the atoms.

    Both arrays are evaluated at the same support points, which sidesteps
    the tie inflation a continuous-data KS suffers on discrete samples; the
    p-value comes from the asymptotic Kolmogorov law (conservative here).
    """
    stat = float(np.max(np.abs(ecdf - cdf)))
    pvalue = float(stats.kstwobign.sf(stat * math.sqrt(n)))
    return stat, min(pvalue, 1.0)


def _ks_against_binned(values, bin_probs, bins):
    if not values:
        return None
    n = len(values)
    idx = np.clip((np.asarray(values, dtype=float) * bins).astype(int), 0, bins - 1)
    counts = np.bincount(idx, minlength=bins)
    return _ks_discrete(np.cumsum(counts) / n, np.cumsum(bin_probs), n)


def _ks_against_pmf(lengths, pmf):
    if not lengths:
        return None
    n = len(lengths)
    counts = np.bincount(np.clip(lengths, 0, len(pmf) - 1), minlength=len(pmf))
    return _ks_discrete(np.cumsum(counts) / n, np.cumsum(pmf), n)


# ---------------------------------------------------------------------------
# Exact value/length laws of a finite model
# ---------------------------------------------------------------------------

def _completion_table(pdfa: Pdfa, max_len: int) -> list[list[float]]:
    """completes[j][q] = probability of drawing the terminal within j draws."""
    n = pdfa.n_states
    table = [[0.0] * n]
    for _ in range(max_len):
        prev = table[-1]
        row = []
        for q in range(n):
            dist = pdfa.dists[q]
            v = float(dist.terminal_prob)
            for s in dist.support():
                v += float(dist.prob(s)) * prev[pdfa.trans[q][s]]
            row.append(v)
        table.append(row)
    return table


def analytic_value_bins(pdfa: Pdfa, bins: int, max_len: int) -> list[float]:
    """Exact bin masses of parsed values, conditioned on completion.

    Bin edges must align with a decimal grid (bins divides a power of ten),
    so a bounded digit prefix decides every bin.
    """
    depth_needed = None
    for k in range(1, 7):
        if (10**k) % bins == 0:
            depth_needed = k
            break
    if depth_needed is None:
        raise ValueError(f"{bins} equal-width bins do not align with a decimal digit grid")
    digits = digit_indices(pdfa.alphabet)
    completes = _completion_table(pdfa, max_len)
    masses = [0.0] * bins
    total = 0.0
    # frontier over (state, depth, digit prefix); dot-like symbols are allowed
    # before the first digit and contribute nothing to the value
    frontier = {(pdfa.initial, 0, ()): 1.0}
    while frontier:
        grown: dict = collections.defaultdict(float)
        for (q, depth, prefix), mass in frontier.items():
            dist = pdfa.dists[q]
            if len(prefix) >= depth_needed:
                value = sum(d * 10.0 ** -(i + 1) for i, d in enumerate(prefix))
                p = mass * completes[max_len - depth][q]
                masses[_bin_index(value, bins)] += p
                total += p
                continue
            if depth >= max_len:
                continue
            if dist.terminal_prob > 0:
                value = sum(d * 10.0 ** -(i + 1) for i, d in enumerate(prefix))
                p = mass * float(dist.terminal_prob)
                masses[_bin_index(value, bins)] += p
                total += p
            for s in dist.support():
                d = digits[s]
                if d is None:
                    if prefix:
                        raise ParseFailureError(
                            f"non-digit symbol {pdfa.alphabet.symbols[s]!r} after digits"
                        )
                    nxt = prefix
                else:
                    nxt = prefix + (d,)
                grown[(pdfa.trans[q][s], depth + 1, nxt)] += mass * float(dist.prob(s))
        frontier = grown
    if total <= 0:
        raise ValueError("model never completes within max_len")
    return [m / total for m in masses]


def analytic_length_pmf(pdfa: Pdfa, max_len: int) -> list[float]:
    """Exact law of completed lengths (0..max_len-1), conditioned on completion."""
    n = pdfa.n_states
    alive = [0.0] * n
    alive[pdfa.initial] = 1.0
    pmf = []
    for _ in range(max_len):
        done = 0.0
        nxt = [0.0] * n
        for q, mass in enumerate(alive):
            if mass == 0:
                continue
            dist = pdfa.dists[q]
            done += mass * float(dist.terminal_prob)
            for s in dist.support():
                nxt[pdfa.trans[q][s]] += mass * float(dist.prob(s))
        pmf.append(done)
        alive = nxt
    total = sum(pmf)
    if total <= 0:
        raise ValueError("model never completes within max_len")
    return [p / total for p in pmf]


# ---------------------------------------------------------------------------
# Guide specifications
# ---------------------------------------------------------------------------

def guide_from_spec(text: str) -> GuideAutomaton:
    """Parse the guide format (see save_guide_spec) into an automaton.

    Missing transitions lead to an implicit dead state with an all-zero
    mask; duplicate (state, symbol) transitions are rejected.
    """
    alphabet: Optional[Alphabet] = None
    terminal = "$"
    n_states = None
    initial = 0
    allows: dict[int, list[str]] = {}
    edges: dict[tuple[int, int], int] = {}
    symbols: tuple[str, ...] = ()
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        kind = parts[0]
        try:
            if kind == "alphabet":
                symbols = tuple(parts[1:])
            elif kind == "terminal":
                terminal = parts[1]
            elif kind == "states":
                n_states = int(parts[1])
            elif kind == "initial":
                initial = int(parts[1])
            elif kind == "state":
                current = int(parts[1])
                allows.setdefault(current, [])
            elif kind == "allow":
                if current is None:
                    raise ParseFailureError(f"line {lineno}: allow before any state")
                allows[current].extend(parts[1:])
            elif kind == "trans":
                alphabet = alphabet or Alphabet(symbols, terminal)
                src, name, dst = int(parts[1]), parts[2], int(parts[3])
                key = (src, alphabet.index(name))
                if key in edges:
                    raise NondeterministicSpecError(
                        f"line {lineno}: duplicate transition for state {src} symbol {name!r}"
                    )
                edges[key] = dst
            else:
                raise ParseFailureError(f"line {lineno}: unknown directive {kind!r}")
        except (IndexError, ValueError) as exc:
            raise ParseFailureError(f"line {lineno}: {exc}") from None
    if not symbols or n_states is None:
        raise ParseFailureError("guide needs `alphabet` and `states` directives")
    alphabet = alphabet or Alphabet(symbols, terminal)
    m = alphabet.size
    dead = n_states  # implicit sink for unspecified transitions
    masks = []
    delta = []
    for q in range(n_states):
        mask = [0] * (m + 1)
        for name in allows.get(q, []):
            idx = m if name == alphabet.terminal else alphabet.index(name)
            mask[idx] = 1
        masks.append(tuple(mask))
        delta.append(tuple(edges.get((q, s), dead) for s in range(m)))
    used_dead = any(dead in row for row in delta)
    if used_dead:
        masks.append(tuple([0] * (m + 1)))
        delta.append(tuple(dead for _ in range(m)))
    return GuideAutomaton(alphabet, tuple(masks), tuple(delta), initial)


def save_guide_spec(guide: GuideAutomaton) -> str:
    """Serialize a guide in the format accepted by guide_from_spec."""
    lines = [
        "# guide v1",
        "alphabet " + " ".join(guide.alphabet.symbols),
        f"terminal {guide.alphabet.terminal}",
        f"states {guide.n_states}",
        f"initial {guide.initial}",
    ]
    m = guide.alphabet.size
    for q in range(guide.n_states):
        lines.append(f"state {q}")
        allowed = [guide.alphabet.symbols[s] for s in range(m) if guide.masks[q][s]]
        if guide.masks[q][m]:
            allowed.append(guide.alphabet.terminal)
        if allowed:
            lines.append("allow " + " ".join(allowed))
    for q in range(guide.n_states):
        for s in range(m):
            lines.append(f"trans {q} {guide.alphabet.symbols[s]} {guide.delta[q][s]}")
    return "\n".join(lines) + "\n"


def digit_guide() -> GuideAutomaton:
    """Dot, then at least one digit, termination only after a digit."""
    names = ("dot",) + tuple(str(d) for d in range(10))
    spec = [
        "alphabet " + " ".join(names),
        "states 3",
        "initial 0",
        "state 0",
        "allow dot",
        "state 1",
        "allow " + " ".join(str(d) for d in range(10)),
        "state 2",
        "allow " + " ".join(str(d) for d in range(10)) + " $",
        "trans 0 dot 1",
    ]
    for d in range(10):
        spec.append(f"trans 1 {d} 2")
        spec.append(f"trans 2 {d} 2")
    return guide_from_spec("\n".join(spec))


def chain_guide(alphabet: Alphabet, stages: list[list[str]]) -> GuideAutomaton:
    """Linear guide: stage i allows its listed symbols, termination at the end."""
    lines = [
        "alphabet " + " ".join(alphabet.symbols),
        f"terminal {alphabet.terminal}",
        f"states {len(stages) + 1}",
        "initial 0",
    ]
    for i, stage in enumerate(stages):
        lines.append(f"state {i}")
        lines.append("allow " + " ".join(stage))
        for name in stage:
            lines.append(f"trans {i} {name} {i + 1}")
    lines.append(f"state {len(stages)}")
    lines.append(f"allow {alphabet.terminal}")
    return guide_from_spec("\n".join(lines))
