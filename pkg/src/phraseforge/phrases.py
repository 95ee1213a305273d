"""Phrase pair extraction, translation scoring, and lexicalized reordering.

A phrase pair is a source span and target span that are consistent with
the word alignment: the box contains at least one link, no link leaves the
box on either axis, and spans may extend over unaligned boundary words.

Score columns, in file order and everywhere else: phi(s|t), lex(s|t),
phi(t|s), lex(t|s), abbreviated st/ts for source-given-target and
target-given-source.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, NamedTuple

from .align import AlignmentMatrix, Link, TTable
from .base import DataError, ParseError
from .corpus import NULL_WORD, SentencePair

MONO = "mono"
SWAP = "swap"
DISC = "disc"
ORIENTATIONS = (MONO, SWAP, DISC)


@dataclass(frozen=True)
class PhrasePair:
    """Extracted phrase pair: inclusive spans plus their surface tokens."""

    src_span: tuple[int, int]
    tgt_span: tuple[int, int]
    src: tuple[str, ...]
    tgt: tuple[str, ...]


@dataclass(frozen=True)
class PhraseOccurrence:
    """One extraction instance with its box-internal links and orientations.

    links are re-indexed to the box (0-based from the span starts);
    prev_orient/next_orient classify the pair against the adjacent
    alignment corners (the forward and backward reordering events).
    """

    phrase: PhrasePair
    links: frozenset[Link]
    prev_orient: str
    next_orient: str


class PhraseScores(NamedTuple):
    phrase_st: float
    lex_st: float
    phrase_ts: float
    lex_ts: float


class ReorderingEntry(NamedTuple):
    """Orientation distributions (mono, swap, disc), forward and backward."""

    forward: tuple[float, float, float]
    backward: tuple[float, float, float]


def extract_occurrences(
    pair: SentencePair | tuple,
    alignment: AlignmentMatrix,
    max_phrase_len: int = 7,
) -> list[PhraseOccurrence]:
    """Enumerate consistent phrase pair occurrences for one aligned pair.

    Iterates target spans, projects each onto the source side, rejects
    spans whose projected box leaks links, then emits every extension of
    the source span over adjacent unaligned source words. Runs in
    O(m^2 * (|links| + extension area)) per pair.
    """
    if max_phrase_len < 1:
        raise ValueError(f"max_phrase_len must be >= 1, got {max_phrase_len}")
    src, tgt = tuple(pair[0]), tuple(pair[1])
    n, m = len(src), len(tgt)
    if (alignment.n_source, alignment.m_target) != (n, m):
        raise DataError(
            f"alignment is {alignment.n_source}x{alignment.m_target} "
            f"but the pair is {n}x{m}"
        )
    links = alignment.links
    src_aligned = {i for i, _ in links}
    occurrences = []
    for j1 in range(m):
        for j2 in range(j1, min(j1 + max_phrase_len, m)):
            in_span = [(i, j) for (i, j) in links if j1 <= j <= j2]
            if not in_span:
                continue
            i1 = min(i for i, _ in in_span)
            i2 = max(i for i, _ in in_span)
            if any(i1 <= i <= i2 and not (j1 <= j <= j2) for i, j in links):
                continue
            lo = i1
            while lo > 0 and (lo - 1) not in src_aligned:
                lo -= 1
            hi = i2
            while hi < n - 1 and (hi + 1) not in src_aligned:
                hi += 1
            for s1 in range(lo, i1 + 1):
                for s2 in range(i2, hi + 1):
                    if s2 - s1 + 1 > max_phrase_len:
                        continue
                    occurrences.append(
                        _occurrence(src, tgt, links, n, m, s1, s2, j1, j2)
                    )
    return occurrences


def _occurrence(src, tgt, links, n, m, s1, s2, j1, j2) -> PhraseOccurrence:
    internal = frozenset(
        (i - s1, j - j1) for (i, j) in links if s1 <= i <= s2 and j1 <= j <= j2
    )
    # Orientation against the previous target phrase: monotone when the
    # diagonal corner continues the alignment (the sentence corners count),
    # swap when the anti-diagonal corner does, discontinuous otherwise.
    if (s1 - 1, j1 - 1) in links or (s1 == 0 and j1 == 0):
        prev_orient = MONO
    elif (s2 + 1, j1 - 1) in links:
        prev_orient = SWAP
    else:
        prev_orient = DISC
    if (s2 + 1, j2 + 1) in links or (s2 == n - 1 and j2 == m - 1):
        next_orient = MONO
    elif (s1 - 1, j2 + 1) in links:
        next_orient = SWAP
    else:
        next_orient = DISC
    phrase = PhrasePair((s1, s2), (j1, j2), src[s1 : s2 + 1], tgt[j1 : j2 + 1])
    return PhraseOccurrence(phrase, internal, prev_orient, next_orient)


def extract_phrases(
    pair: SentencePair | tuple,
    alignment: AlignmentMatrix,
    max_phrase_len: int = 7,
) -> set[PhrasePair]:
    """The set of consistent phrase pairs for one aligned sentence pair."""
    return {occ.phrase for occ in extract_occurrences(pair, alignment, max_phrase_len)}


def extract_corpus(
    pairs: Iterable[SentencePair | tuple],
    alignments: Iterable[AlignmentMatrix],
    max_phrase_len: int = 7,
) -> list[PhraseOccurrence]:
    """Extraction over a whole aligned corpus, concatenated in corpus order."""
    occurrences = []
    for pair, alignment in zip(pairs, alignments):
        occurrences.extend(extract_occurrences(pair, alignment, max_phrase_len))
    return occurrences


def _lexical_weight(
    produced: tuple[str, ...],
    producing: tuple[str, ...],
    links: frozenset[Link],
    ttable: TTable,
) -> float:
    """Koehn lexical weight: for each produced word, average t over its
    aligned producing words, or t(word|NULL) when unaligned; multiply."""
    by_produced: defaultdict[int, list[int]] = defaultdict(list)
    for i, j in links:
        by_produced[j].append(i)
    weight = 1.0
    for j, word in enumerate(produced):
        aligned = by_produced.get(j)
        if aligned:
            weight *= math.fsum(ttable.prob(producing[i], word) for i in aligned) / len(
                aligned
            )
        else:
            weight *= ttable.prob(NULL_WORD, word)
    return weight


def score_phrases(
    occurrences: Iterable[PhraseOccurrence],
    ttable_forward: TTable,
    ttable_reverse: TTable,
) -> "PhraseTable":
    """Relative-frequency phrase probabilities plus lexical weights.

    ttable_forward is t(target|source), ttable_reverse is t(source|target).
    Lexical weights take, per pair and direction, the maximum over the
    distinct internal alignments observed for that pair.
    """
    pair_counts: Counter = Counter()
    src_counts: Counter = Counter()
    tgt_counts: Counter = Counter()
    alignments: defaultdict[tuple, set] = defaultdict(set)
    for occ in occurrences:
        key = (occ.phrase.src, occ.phrase.tgt)
        pair_counts[key] += 1
        src_counts[occ.phrase.src] += 1
        tgt_counts[occ.phrase.tgt] += 1
        alignments[key].add(occ.links)
    entries: dict[tuple[str, ...], dict[tuple[str, ...], PhraseScores]] = defaultdict(dict)
    for (src, tgt), count in pair_counts.items():
        best_ts = 0.0
        best_st = 0.0
        for links in sorted(alignments[(src, tgt)], key=sorted):
            best_ts = max(best_ts, _lexical_weight(tgt, src, links, ttable_forward))
            transposed = frozenset((j, i) for i, j in links)
            best_st = max(
                best_st, _lexical_weight(src, tgt, transposed, ttable_reverse)
            )
        entries[src][tgt] = PhraseScores(
            phrase_st=count / tgt_counts[tgt],
            lex_st=best_st,
            phrase_ts=count / src_counts[src],
            lex_ts=best_ts,
        )
    return PhraseTable(dict(entries))


def train_reordering(
    occurrences: Iterable[PhraseOccurrence], smoothing: float = 0.5
) -> "ReorderingTable":
    """Per-pair msd orientation distributions, both directions, add-sigma
    smoothed: P(o) = (count_o + sigma) / (count_total + 3*sigma)."""
    if smoothing < 0:
        raise ValueError(f"smoothing must be >= 0, got {smoothing}")
    fwd_counts: defaultdict[tuple, Counter] = defaultdict(Counter)
    bwd_counts: defaultdict[tuple, Counter] = defaultdict(Counter)
    for occ in occurrences:
        key = (occ.phrase.src, occ.phrase.tgt)
        fwd_counts[key][occ.prev_orient] += 1
        bwd_counts[key][occ.next_orient] += 1
    entries = {}
    for key in fwd_counts:
        entries[key] = ReorderingEntry(
            forward=_smooth_triple(fwd_counts[key], smoothing),
            backward=_smooth_triple(bwd_counts[key], smoothing),
        )
    return ReorderingTable(entries)


def _smooth_triple(counts: Counter, sigma: float) -> tuple[float, float, float]:
    total = sum(counts.values()) + 3 * sigma
    return tuple((counts.get(o, 0) + sigma) / total for o in ORIENTATIONS)


class PhraseTable:
    """Scored phrase pairs: {source tokens: {target tokens: PhraseScores}}."""

    def __init__(self, entries: dict[tuple[str, ...], dict[tuple[str, ...], PhraseScores]]):
        self.entries = entries

    def lookup(self, src: tuple[str, ...]) -> dict[tuple[str, ...], PhraseScores]:
        return self.entries.get(tuple(src), {})

    def __len__(self) -> int:
        return sum(len(t) for t in self.entries.values())

    def max_source_len(self) -> int:
        return max((len(s) for s in self.entries), default=0)

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for src in sorted(self.entries):
                for tgt in sorted(self.entries[src]):
                    s = self.entries[src][tgt]
                    fh.write(
                        f"{' '.join(src)} ||| {' '.join(tgt)} ||| "
                        f"{s.phrase_st:.12g} {s.lex_st:.12g} "
                        f"{s.phrase_ts:.12g} {s.lex_ts:.12g}\n"
                    )

    @classmethod
    def read(cls, path: str) -> "PhraseTable":
        entries: dict = defaultdict(dict)
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n")
                if not line.strip():
                    continue
                fields = line.split(" ||| ")
                if len(fields) != 3:
                    raise ParseError(
                        f"expected 'src ||| tgt ||| scores', got {line!r}",
                        path=path,
                        line=lineno,
                    )
                src = tuple(fields[0].split())
                tgt = tuple(fields[1].split())
                scores = fields[2].split()
                if not src or not tgt or len(scores) != 4:
                    raise ParseError("malformed phrase table entry", path=path, line=lineno)
                try:
                    values = [float(x) for x in scores]
                except ValueError:
                    raise ParseError(f"bad score in {fields[2]!r}", path=path, line=lineno)
                for v in values:
                    if not (0.0 < v <= 1.0):
                        raise ParseError(
                            f"phrase score {v} outside (0, 1]", path=path, line=lineno
                        )
                entries[src][tgt] = PhraseScores(*values)
        return cls(dict(entries))


class ReorderingTable:
    """Lexicalized reordering distributions keyed by (source, target) tokens."""

    def __init__(self, entries: dict[tuple, ReorderingEntry]):
        self.entries = entries

    def lookup(
        self, src: tuple[str, ...], tgt: tuple[str, ...]
    ) -> ReorderingEntry | None:
        return self.entries.get((tuple(src), tuple(tgt)))

    def __len__(self) -> int:
        return len(self.entries)

    def write(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for src, tgt in sorted(self.entries):
                e = self.entries[(src, tgt)]
                nums = " ".join(f"{p:.12g}" for p in e.forward + e.backward)
                fh.write(f"{' '.join(src)} ||| {' '.join(tgt)} ||| {nums}\n")

    @classmethod
    def read(cls, path: str) -> "ReorderingTable":
        entries = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.rstrip("\n")
                if not line.strip():
                    continue
                fields = line.split(" ||| ")
                if len(fields) != 3:
                    raise ParseError(
                        f"expected 'src ||| tgt ||| six probs', got {line!r}",
                        path=path,
                        line=lineno,
                    )
                src = tuple(fields[0].split())
                tgt = tuple(fields[1].split())
                nums = fields[2].split()
                if not src or not tgt or len(nums) != 6:
                    raise ParseError("malformed reordering entry", path=path, line=lineno)
                try:
                    values = [float(x) for x in nums]
                except ValueError:
                    raise ParseError(f"bad probability in {fields[2]!r}", path=path, line=lineno)
                for v in values:
                    if not (0.0 < v <= 1.0):
                        raise ParseError(
                            f"orientation probability {v} outside (0, 1]",
                            path=path,
                            line=lineno,
                        )
                entries[(src, tgt)] = ReorderingEntry(
                    forward=tuple(values[:3]), backward=tuple(values[3:])
                )
        return cls(entries)
