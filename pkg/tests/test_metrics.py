"""BLEU scoring, error rates, and the evaluation report."""

import math
import random
import re

import pytest

from phraseforge.base import DataError
from phraseforge.metrics import (
    BleuStats,
    ErrorAnalysis,
    bleu,
    error_rate,
    report,
    sentence_stats,
    stats_bleu,
)


def random_sentence(rng, vocab="abcde", lo=1, hi=8):
    return tuple(rng.choice(vocab) for _ in range(rng.randint(lo, hi)))


# -- BLEU ---------------------------------------------------------------------


def test_identity_translation_scores_one():
    hyps = [("a", "b", "c"), ("d",), ("a", "a", "b", "b")]
    score = bleu(hyps, hyps)
    assert score.bleu == 1.0
    assert score.brevity_penalty == 1.0
    assert score.precisions == (1.0, 1.0, 1.0, 1.0)


def test_disjoint_translation_scores_zero():
    assert bleu([("a", "b")], [("x", "y")]).bleu == 0.0


def test_unigram_precision_is_clipped():
    stats = sentence_stats(("the", "the", "the"), [("the", "cat")])
    assert stats.matched[0] == 1
    assert stats.totals[0] == 3
    score = bleu([("the", "the", "the")], [("the", "cat")])
    assert score.precisions[0] == pytest.approx(1 / 3, abs=1e-12)


def test_bleu_is_bp_times_geometric_mean():
    rng = random.Random(3)
    for _ in range(50):
        n = rng.randint(1, 6)
        hyps = [random_sentence(rng) for _ in range(n)]
        refs = [random_sentence(rng) for _ in range(n)]
        score = bleu(hyps, refs, smooth=True)
        if all(p > 0 for p in score.precisions) and score.brevity_penalty > 0:
            expected = score.brevity_penalty * math.exp(
                math.fsum(math.log(p) for p in score.precisions) / 4
            )
            assert score.bleu == pytest.approx(expected, abs=1e-12)


def test_smoothing_adds_one_to_higher_orders_only():
    score = bleu([("a", "b", "c")], [("a", "b", "d")], smooth=True)
    assert score.precisions == pytest.approx(
        (2 / 3, (1 + 1) / (2 + 1), (0 + 1) / (1 + 1), (0 + 1) / (0 + 1)), abs=1e-12
    )
    assert score.bleu == pytest.approx((2 / 3 * 2 / 3 * 0.5 * 1.0) ** 0.25, abs=1e-12)
    assert bleu([("a", "b", "c")], [("a", "b", "d")]).bleu == 0.0


def test_brevity_penalty_rules():
    short = bleu([("a", "b")], [("a", "b", "c", "d")])
    assert short.brevity_penalty == pytest.approx(math.exp(1 - 4 / 2), abs=1e-12)
    long = bleu([("a", "b", "c", "d")], [("a", "b")])
    assert long.brevity_penalty == 1.0
    empty = bleu([()], [("a",)])
    assert empty.brevity_penalty == 0.0
    assert empty.bleu == 0.0


def test_multiple_references_clip_at_the_maximum():
    one_ref = sentence_stats(("a", "a"), [("a",)])
    assert one_ref.matched[0] == 1
    two_refs = sentence_stats(("a", "a"), [("a",), ("a", "a", "a")])
    assert two_refs.matched[0] == 2


def test_reference_length_is_the_shortest_reference():
    stats = sentence_stats(("a", "b"), [("a",), ("a", "b", "c")])
    assert stats.ref_length == 1
    assert bleu([("a", "b")], [[("a",), ("a", "b", "c")]]).brevity_penalty == 1.0


def test_adding_a_reference_never_lowers_bleu():
    rng = random.Random(7)
    for _ in range(120):
        n = rng.randint(1, 4)
        hyps = [random_sentence(rng) for _ in range(n)]
        refs = [[random_sentence(rng)] for _ in range(n)]
        before = bleu(hyps, refs, smooth=True).bleu
        extended = [alts + [random_sentence(rng)] for alts in refs]
        after = bleu(hyps, extended, smooth=True).bleu
        assert after >= before - 1e-12


def test_corpus_bleu_ignores_sentence_order():
    rng = random.Random(11)
    hyps = [random_sentence(rng) for _ in range(10)]
    refs = [random_sentence(rng) for _ in range(10)]
    base = bleu(hyps, refs, smooth=True).bleu
    order = list(range(10))
    rng.shuffle(order)
    shuffled = bleu([hyps[i] for i in order], [refs[i] for i in order], smooth=True)
    assert shuffled.bleu == pytest.approx(base, abs=1e-12)


def test_bleu_validates_inputs():
    with pytest.raises(DataError, match="mismatch"):
        bleu([("a",)], [("a",), ("b",)])
    with pytest.raises(DataError, match="empty corpus"):
        bleu([], [])
    with pytest.raises(DataError, match="reference set"):
        bleu([("a",)], [[]])


def test_bleu_stats_add_componentwise():
    a = sentence_stats(("a", "b"), [("a", "b")])
    b = sentence_stats(("c",), [("d",)])
    total = a + b
    assert total.matched == tuple(x + y for x, y in zip(a.matched, b.matched))
    assert total.totals == tuple(x + y for x, y in zip(a.totals, b.totals))
    assert total.hyp_length == 3 and total.ref_length == 3
    assert BleuStats.zero() + a == a
    assert stats_bleu(a) == 0.0  # no trigram or 4-gram support
    full = sentence_stats(("a", "b", "c", "d"), [("a", "b", "c", "d")])
    assert stats_bleu(full) == 1.0


def test_summary_line_format():
    line = bleu([("a", "b", "c", "d")], [("a", "b", "c", "d")]).summary()
    assert line == "BLEU = 100.00 (100.0/100.0/100.0/100.0, BP=1.000, ratio=1.000)"
    pattern = (
        r"^BLEU = \d+\.\d{2} \(\d+\.\d/\d+\.\d/\d+\.\d/\d+\.\d, "
        r"BP=\d\.\d{3}, ratio=\d+\.\d{3}\)$"
    )
    rng = random.Random(13)
    hyps = [random_sentence(rng) for _ in range(5)]
    refs = [random_sentence(rng) for _ in range(5)]
    assert re.match(pattern, bleu(hyps, refs, smooth=True).summary())


# -- error rates --------------------------------------------------------------


@pytest.mark.parametrize(
    "total,unsuccessful,expected",
    [
        (200, 35, 17.5),
        (250, 39, 15.6),
        (300, 41, 13.7),
        (250, 0, 0.0),
        (16, 1, 6.3),  # 6.25 rounds half-up
        (3, 1, 33.3),
        (3, 3, 100.0),
    ],
)
def test_error_rate_rounds_half_up_to_one_decimal(total, unsuccessful, expected):
    assert error_rate(total, unsuccessful) == expected


def test_error_rate_validates_inputs():
    with pytest.raises(DataError, match="total"):
        error_rate(0, 0)
    with pytest.raises(DataError, match="unsuccessful"):
        error_rate(10, -1)
    with pytest.raises(DataError, match="unsuccessful"):
        error_rate(10, 11)


def test_error_analysis_from_flags():
    analysis = ErrorAnalysis.from_flags([True, False, True, True])
    assert analysis == ErrorAnalysis(4, 3, 1, 25.0)
    assert analysis.summary() == (
        "sentences: 4  successful: 3  unsuccessful: 1  error: 25.0%"
    )


def test_error_analysis_checks_its_arithmetic():
    with pytest.raises(DataError):
        ErrorAnalysis(4, 3, 2, 25.0)


# -- report -------------------------------------------------------------------


SOURCES = [("s1",), ("s2",), ("s3",), ("s4",)]
REFS = [("a", "b"), ("c",), ("d", "e"), ("f",)]
HYPS = [("a", "b"), ("c",), ("d", "x"), ("f",)]


def test_report_counts_exact_matches():
    text = report(SOURCES, HYPS, REFS)
    assert "error: 25.0%" in text
    assert text.count(" ok") == 3
    assert text.count("ERROR") == 1
    assert "BLEU = " in text
    assert re.search(r"^bleu: 0\.\d{4}$", text, flags=re.M)


def test_report_success_flags_override_matching():
    text = report(SOURCES, HYPS, REFS, successes=[True, True, True, True])
    assert "error: 0.0%" in text
    assert "ERROR" not in text


def test_report_validates_lengths():
    with pytest.raises(DataError, match="mismatch"):
        report(SOURCES[:3], HYPS, REFS)
    with pytest.raises(DataError, match="success flags"):
        report(SOURCES, HYPS, REFS, successes=[True])


def test_report_lists_every_sentence():
    text = report(SOURCES, HYPS, REFS, smooth=True)
    lines = text.splitlines()
    assert lines[0].startswith("#")
    for i in range(4):
        assert lines[i + 1].startswith(str(i + 1))
        assert " ".join(SOURCES[i]) in lines[i + 1]
