"""Word-level scoring, length-bucketed reports, timing and the hybrid combiner.

F1 follows the bakeoff convention: a predicted word is correct only when
its (start, end) character span exactly matches a gold span, and counts
are micro-averaged over the corpus.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field

from .decoding import DEFAULT_BEAM_WIDTH, decode
from .errors import AlignmentError, ContractError

LENGTH_BUCKETS = ((0, 30), (31, 60), (61, 90), (91, 120), (121, None))

LONG_SENTENCE_THRESHOLD = 30   # characters; longer counts as "long"
HYBRID_THRESHOLD = 90          # characters; longer sentences come from "ours"


def bucket_name(bounds):
    lo, hi = bounds
    return f"{lo}-{hi}" if hi is not None else f"{lo}-inf"


def bucket_of(length):
    for bounds in LENGTH_BUCKETS:
        lo, hi = bounds
        if length >= lo and (hi is None or length <= hi):
            return bucket_name(bounds)
    raise ContractError(f"length {length} fits no bucket")


@dataclass
class EvalReport:
    precision: float
    recall: float
    f1: float
    gold_words: int
    pred_words: int
    correct_words: int
    buckets: dict[str, "EvalReport"] | None = None


def _spans(sentence):
    spans = set()
    prev = 0
    for b in sentence.boundaries:
        spans.add((prev, b))
        prev = b
    return spans


def _counts(gold, pred):
    gold_words = pred_words = correct = 0
    for k, (g, p) in enumerate(zip(gold, pred)):
        if g.chars != p.chars:
            raise AlignmentError(
                f"sentence pair {k}: character sequences differ "
                f"({g.chars[:20]!r} vs {p.chars[:20]!r})"
            )
        gs, ps = _spans(g), _spans(p)
        gold_words += len(gs)
        pred_words += len(ps)
        correct += len(gs & ps)
    return gold_words, pred_words, correct


def _report(gold_words, pred_words, correct):
    precision = correct / pred_words if pred_words else 0.0
    recall = correct / gold_words if gold_words else 0.0
    score = (
        2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    )
    return EvalReport(
        precision=precision,
        recall=recall,
        f1=score,
        gold_words=gold_words,
        pred_words=pred_words,
        correct_words=correct,
    )


def f1(gold, pred):
    """Micro-averaged word-span precision/recall/F1 over aligned sentence lists."""
    if len(gold) != len(pred):
        raise AlignmentError(
            f"gold has {len(gold)} sentences, prediction has {len(pred)}"
        )
    return _report(*_counts(gold, pred))


def bucketed_f1(gold, pred):
    """Overall report plus one sub-report per sentence-length bucket.

    All five buckets are always present; empty ones carry zero counts.
    """
    if len(gold) != len(pred):
        raise AlignmentError(
            f"gold has {len(gold)} sentences, prediction has {len(pred)}"
        )
    groups = {bucket_name(b): ([], []) for b in LENGTH_BUCKETS}
    for g, p in zip(gold, pred):
        name = bucket_of(g.length)
        groups[name][0].append(g)
        groups[name][1].append(p)
    overall = f1(gold, pred)
    overall.buckets = {name: f1(gs, ps) for name, (gs, ps) in groups.items()}
    return overall


def hybrid_combine(base, ours, threshold=HYBRID_THRESHOLD):
    """Per sentence, take `ours` above the length threshold, else `base`."""
    if len(base) != len(ours):
        raise AlignmentError(
            f"base has {len(base)} sentences, ours has {len(ours)}"
        )
    combined = []
    for k, (b, o) in enumerate(zip(base, ours)):
        if b.chars != o.chars:
            raise AlignmentError(
                f"sentence pair {k}: character sequences differ"
            )
        combined.append(o if b.length > threshold else b)
    return combined


# ---------------------------------------------------------------------------
# timing benchmark


@dataclass
class SplitTiming:
    sentences: int
    characters: int
    # phase -> median-over-repeats of summed seconds for this split
    seconds: dict[str, float] = field(default_factory=dict)
    median_sentence_total: float = 0.0

    def per_sentence(self, phase):
        return self.seconds[phase] / self.sentences if self.sentences else 0.0

    def per_character(self, phase):
        return self.seconds[phase] / self.characters if self.characters else 0.0


@dataclass
class BenchReport:
    repeat: int
    decoder: str
    splits: dict[str, SplitTiming]


_PHASES = ("encode", "score", "decode", "total")


def bench(model, sentences, repeat=3, decoder="auto", width=DEFAULT_BEAM_WIDTH):
    """Time encode/score/decode per sentence, split into short vs long.

    Character-index conversion happens up front and is not timed; the
    numbers cover only the model phases. Per-split phase sums take the
    median over `repeat` passes.
    """
    if repeat < 1:
        raise ContractError(f"repeat must be >= 1, got {repeat}")
    jobs = [
        (chars, model.vocab.encode(chars)) for chars in sentences if len(chars) >= 1
    ]
    membership = [
        "long" if len(chars) > LONG_SENTENCE_THRESHOLD else "short"
        for chars, _ in jobs
    ]
    phase_sums = {
        split: {phase: [] for phase in _PHASES} for split in ("short", "long", "all")
    }
    sentence_totals = [[] for _ in jobs]
    for _ in range(repeat):
        sums = {
            split: dict.fromkeys(_PHASES, 0.0) for split in ("short", "long", "all")
        }
        for j, (chars, indices) in enumerate(jobs):
            t0 = time.perf_counter()
            states = model.encode_states(None, indices)
            t1 = time.perf_counter()
            scores = model.score_states(None, states).data
            t2 = time.perf_counter()
            if len(chars) >= 2:
                decode(scores, model.tagset, decoder, width)
            t3 = time.perf_counter()
            spans = {
                "encode": t1 - t0,
                "score": t2 - t1,
                "decode": t3 - t2,
                "total": t3 - t0,
            }
            for split in (membership[j], "all"):
                for phase, dt in spans.items():
                    sums[split][phase] += dt
            sentence_totals[j].append(spans["total"])
        for split in phase_sums:
            for phase in _PHASES:
                phase_sums[split][phase].append(sums[split][phase])

    splits = {}
    for split in ("short", "long", "all"):
        if split == "all":
            selected = list(range(len(jobs)))
        else:
            selected = [j for j, m in enumerate(membership) if m == split]
        chars_total = sum(len(jobs[j][0]) for j in selected)
        per_sentence_medians = [
            statistics.median(sentence_totals[j]) for j in selected
        ]
        splits[split] = SplitTiming(
            sentences=len(selected),
            characters=chars_total,
            seconds={
                phase: statistics.median(phase_sums[split][phase])
                for phase in _PHASES
            },
            median_sentence_total=(
                statistics.median(per_sentence_medians) if per_sentence_medians else 0.0
            ),
        )
    chosen = decoder if decoder != "auto" else ("greedy" if model.tagset.name == "01" else "beam")
    return BenchReport(repeat=repeat, decoder=chosen, splits=splits)


# ---------------------------------------------------------------------------
# report formatting


def eval_report_kv(report, prefix="eval"):
    """Line-oriented key=value rendering of an evaluation report."""
    lines = [
        f"{prefix}.precision={report.precision:.6f}",
        f"{prefix}.recall={report.recall:.6f}",
        f"{prefix}.f1={report.f1:.6f}",
        f"{prefix}.gold_words={report.gold_words}",
        f"{prefix}.pred_words={report.pred_words}",
        f"{prefix}.correct_words={report.correct_words}",
    ]
    if report.buckets:
        for name, sub in report.buckets.items():
            lines.extend(eval_report_kv(sub, prefix=f"{prefix}.bucket.{name}"))
    return lines


def eval_report_table(report):
    rows = [("overall", report)]
    if report.buckets:
        rows.extend(report.buckets.items())
    lines = [
        f"{'scope':<12} {'P':>8} {'R':>8} {'F1':>8} {'gold':>8} {'pred':>8} {'correct':>8}"
    ]
    for name, r in rows:
        lines.append(
            f"{name:<12} {r.precision:>8.4f} {r.recall:>8.4f} {r.f1:>8.4f} "
            f"{r.gold_words:>8} {r.pred_words:>8} {r.correct_words:>8}"
        )
    return lines


def bench_report_kv(report):
    lines = [f"bench.repeat={report.repeat}", f"bench.decoder={report.decoder}"]
    for split, timing in report.splits.items():
        lines.append(f"bench.{split}.sentences={timing.sentences}")
        lines.append(f"bench.{split}.characters={timing.characters}")
        for phase in _PHASES:
            lines.append(
                f"bench.{split}.{phase}.seconds={timing.seconds[phase]:.6f}"
            )
            lines.append(
                f"bench.{split}.{phase}.per_sentence={timing.per_sentence(phase):.9f}"
            )
            lines.append(
                f"bench.{split}.{phase}.per_character={timing.per_character(phase):.9f}"
            )
        lines.append(
            f"bench.{split}.median_sentence_total={timing.median_sentence_total:.9f}"
        )
    return lines


def bench_report_table(report):
    lines = [
        f"decoder={report.decoder} repeat={report.repeat}",
        f"{'split':<8} {'sent':>6} {'chars':>8} "
        f"{'encode/sent':>12} {'score/sent':>12} {'decode/sent':>12} {'total/sent':>12}",
    ]
    for split, t in report.splits.items():
        lines.append(
            f"{split:<8} {t.sentences:>6} {t.characters:>8} "
            f"{t.per_sentence('encode'):>12.6f} {t.per_sentence('score'):>12.6f} "
            f"{t.per_sentence('decode'):>12.6f} {t.per_sentence('total'):>12.6f}"
        )
    return lines
