"""Decoders that turn gap score matrices into valid label sequences.

Scores arrive as an (n-1, L) array, one row per gap, one column per label
in tag-set order. The beam decoder merges hypotheses that end in the same
label before pruning (recombination), so a beam at least as wide as the
label count is exact and matches Viterbi on every input. Ties are broken
by the lexicographically smaller label-index sequence, making every
decoder deterministic.
"""

from __future__ import annotations

import numpy as np

from .corpus import SegmentedSentence, from_gap_labels
from .errors import ContractError, DecodeError

DEFAULT_BEAM_WIDTH = 10


def _check_scores(scores, tagset):
    scores = np.asarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[1] != tagset.num_labels:
        raise ContractError(
            f"score matrix must be (gaps, {tagset.num_labels}), got {scores.shape}"
        )
    return scores


def sequence_score(scores, labels, tagset):
    """Total score of a label sequence under a score matrix."""
    scores = _check_scores(scores, tagset)
    if len(labels) != scores.shape[0]:
        raise ContractError(
            f"{scores.shape[0]} gaps but {len(labels)} labels"
        )
    idx = [tagset.label_index[lab] for lab in labels]
    return float(sum(scores[i, j] for i, j in enumerate(idx)))


def greedy_decode(scores, tagset):
    """Row-wise argmax as label strings; ignores transition constraints."""
    scores = _check_scores(scores, tagset)
    return [tagset.labels[int(j)] for j in scores.argmax(axis=1)]


def beam_decode(scores, tagset, width=DEFAULT_BEAM_WIDTH):
    """Constrained beam search over the tag set's transition graph.

    Hypotheses ending in the same label are merged keeping the better
    (score, then lexicographic) one, then the top `width` survive. The
    final answer is the best hypothesis whose last label may end a
    sentence.
    """
    if width < 1:
        raise ContractError(f"beam width must be >= 1, got {width}")
    scores = _check_scores(scores, tagset)
    m = scores.shape[0]
    if m == 0:
        return []
    last = m - 1
    # hypothesis: (total score, path tuple of label indices)
    beam = {}
    for j in tagset.start_indices:
        if m == 1 and j not in tagset.end_indices:
            continue
        beam[j] = (float(scores[0, j]), (j,))
    beam = _prune(beam, width)
    for t in range(1, m):
        grown = {}
        for state, (total, path) in beam.items():
            for j in tagset.successor_indices[state]:
                if t == last and j not in tagset.end_indices:
                    continue
                cand = (total + float(scores[t, j]), path + (j,))
                cur = grown.get(j)
                if cur is None or _better(cand, cur):
                    grown[j] = cand
        beam = _prune(grown, width)
    if not beam:
        raise DecodeError(
            f"no complete hypothesis satisfies the '{tagset.name}' constraints"
        )
    best = max(beam.values(), key=lambda h: (h[0], _neg_path(h[1])))
    return [tagset.labels[j] for j in best[1]]


def _better(a, b):
    return a[0] > b[0] or (a[0] == b[0] and a[1] < b[1])


def _neg_path(path):
    # max() keeps the lexicographically smaller path among equal scores
    return tuple(-j for j in path)


def _prune(hyps, width):
    if len(hyps) <= width:
        return hyps
    ranked = sorted(hyps.items(), key=lambda kv: (-kv[1][0], kv[1][1]))
    return dict(ranked[:width])


def viterbi_decode(scores, tagset):
    """Exact dynamic-programming maximum over all valid label sequences."""
    scores = _check_scores(scores, tagset)
    m = scores.shape[0]
    if m == 0:
        return []
    # best[(state)] = (score, path); paths kept explicit so score ties
    # resolve to the lexicographically smaller full sequence
    best = {j: (float(scores[0, j]), (j,)) for j in tagset.start_indices}
    for t in range(1, m):
        nxt = {}
        for state, (total, path) in best.items():
            for j in tagset.successor_indices[state]:
                cand = (total + float(scores[t, j]), path + (j,))
                cur = nxt.get(j)
                if cur is None or _better(cand, cur):
                    nxt[j] = cand
        best = nxt
    finals = [h for j, h in best.items() if j in tagset.end_indices]
    if not finals:
        raise DecodeError(
            f"no valid sequence exists under the '{tagset.name}' constraints"
        )
    top = max(finals, key=lambda h: (h[0], _neg_path(h[1])))
    return [tagset.labels[j] for j in top[1]]


def decode(scores, tagset, decoder="auto", width=DEFAULT_BEAM_WIDTH):
    """Dispatch to the requested decoder.

    "auto" picks the per-row argmax for the unconstrained 01 tag set (no
    decoder needed) and beam search otherwise.
    """
    if decoder == "auto":
        decoder = "greedy" if tagset.name == "01" else "beam"
    if decoder == "greedy":
        if tagset.name != "01":
            raise ContractError(
                f"greedy decoding is only valid for tag set 01, not {tagset.name}"
            )
        return greedy_decode(scores, tagset)
    if decoder == "beam":
        return beam_decode(scores, tagset, width)
    if decoder == "viterbi":
        return viterbi_decode(scores, tagset)
    raise ContractError(f"unknown decoder '{decoder}'")


def segment(chars, scores, tagset, decoder="auto", width=DEFAULT_BEAM_WIDTH):
    """Decode gap scores and rebuild the segmentation for `chars`."""
    n = len(chars)
    if n == 0:
        raise ContractError("cannot segment an empty character sequence")
    if n == 1:
        return SegmentedSentence(chars, (1,))
    scores = _check_scores(scores, tagset)
    if scores.shape[0] != n - 1:
        raise ContractError(
            f"expected {n - 1} score rows for {n} characters, got {scores.shape[0]}"
        )
    labels = decode(scores, tagset, decoder, width)
    return from_gap_labels(chars, labels, tagset)


def dump_scores(scores, tagset):
    """Tab-separated dump of a score matrix for debugging."""
    scores = _check_scores(scores, tagset)
    lines = ["gap\t" + "\t".join(tagset.labels)]
    for i, row in enumerate(scores):
        lines.append(f"{i + 1}\t" + "\t".join(f"{v:.6f}" for v in row))
    return "\n".join(lines) + "\n"
