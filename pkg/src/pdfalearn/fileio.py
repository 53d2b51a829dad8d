"""Text formats for automata, guides, and symbol maps.

Probabilities serialize as `p/q` rationals (kept exact) or shortest
round-trip decimals, so files reload bit-exactly.
"""

from __future__ import annotations

from fractions import Fraction

from .automata import GuideAutomaton, Pdfa
from .errors import ParseFailureError, PdfaError
from .pipeline import guide_from_spec, save_guide_spec
from .simplex import Alphabet, Distribution


def _format_number(x) -> str:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def _parse_number(text: str):
    if "/" in text:
        num, _, den = text.partition("/")
        try:
            return Fraction(int(num), int(den))
        except (ValueError, ZeroDivisionError):
            raise ParseFailureError(f"bad rational {text!r}") from None
    try:
        if "." not in text and "e" not in text and "E" not in text:
            return int(text)
        return float(text)
    except ValueError:
        raise ParseFailureError(f"bad number {text!r}") from None


def save_pdfa(pdfa: Pdfa, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_pdfa(pdfa))


def format_pdfa(pdfa: Pdfa) -> str:
    a = pdfa.alphabet
    lines = [
        "# pdfa v1",
        "alphabet " + " ".join(a.symbols),
        f"terminal {a.terminal}",
        f"states {pdfa.n_states}",
        f"initial {pdfa.initial}",
    ]
    for q in range(pdfa.n_states):
        lines.append(f"state {q}")
        dist = pdfa.dists[q]
        for s, name in enumerate(a.symbols):
            lines.append(f"dist {name} {_format_number(dist.prob(s))}")
        lines.append(f"dist {a.terminal} {_format_number(dist.terminal_prob)}")
        for s, name in enumerate(a.symbols):
            target = pdfa.trans[q][s]
            lines.append(f"trans {name} {'UNDEF' if target is None else target}")
    return "\n".join(lines) + "\n"


def load_pdfa(path) -> Pdfa:
    with open(path, encoding="utf-8") as fh:
        return parse_pdfa(fh.read(), source=str(path))


def parse_pdfa(text: str, source: str = "<string>") -> Pdfa:
    symbols: tuple[str, ...] = ()
    terminal = "$"
    n_states = None
    initial = 0
    alphabet = None
    dists: list[dict[str, object]] = []
    trans: list[dict[str, object]] = []
    current = None

    def fail(lineno, message):
        raise ParseFailureError(f"{source}:{lineno}: {message}")

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        kind = parts[0]
        if kind == "alphabet":
            symbols = tuple(parts[1:])
        elif kind == "terminal":
            if len(parts) != 2:
                fail(lineno, "terminal takes one name")
            terminal = parts[1]
        elif kind == "states":
            n_states = int(parts[1])
        elif kind == "initial":
            initial = int(parts[1])
        elif kind == "state":
            current = int(parts[1])
            while len(dists) <= current:
                dists.append({})
                trans.append({})
        elif kind == "dist":
            if current is None or len(parts) != 3:
                fail(lineno, "dist outside a state or malformed")
            dists[current][parts[1]] = _parse_number(parts[2])
        elif kind == "trans":
            if current is None or len(parts) != 3:
                fail(lineno, "trans outside a state or malformed")
            trans[current][parts[1]] = None if parts[2] == "UNDEF" else int(parts[2])
        else:
            fail(lineno, f"unknown directive {kind!r}")
    if not symbols or n_states is None:
        raise ParseFailureError(f"{source}: missing alphabet or states directive")
    if len(dists) != n_states:
        raise ParseFailureError(f"{source}: saw {len(dists)} states, expected {n_states}")
    try:
        alphabet = Alphabet(symbols, terminal)
        built_dists = tuple(Distribution.from_map(alphabet, d) for d in dists)
        built_trans = tuple(
            tuple(t.get(name) for name in symbols) for t in trans
        )
        return Pdfa(alphabet, built_dists, built_trans, initial)
    except ParseFailureError:
        raise
    except (ValueError, KeyError, PdfaError) as exc:
        raise ParseFailureError(f"{source}: {exc}") from exc


def save_guide(guide: GuideAutomaton, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(save_guide_spec(guide))


def load_guide(path) -> GuideAutomaton:
    with open(path, encoding="utf-8") as fh:
        return guide_from_spec(fh.read())
