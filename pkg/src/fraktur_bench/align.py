"""Character-level edit distance, optimal alignment and CER aggregation.

Unit costs throughout (insert = delete = substitute = 1). The CER
denominator is the ground-truth length; the empty-ground-truth convention
is documented on AlignmentResult. Traceback tie-breaking is fixed (match
or substitute, then delete, then insert) so that edit scripts, and with
them all confusion statistics, are reproducible.

Small inputs run a plain two-row DP; larger ones switch to a vectorized
row recurrence (the left-neighbor dependency resolves into a running
minimum, so each row is a handful of array operations). Both paths
compute the same matrix.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import PairingError
from .lines import TranscriptionLine

# Below this cell count the numpy row setup costs more than it saves.
_VECTOR_THRESHOLD = 4096


class OpKind(enum.Enum):
    MATCH = "match"
    SUBSTITUTE = "substitute"
    INSERT = "insert"
    DELETE = "delete"


@dataclass(frozen=True, slots=True)
class EditOp:
    """One alignment step. gt/pred are None exactly where the op has no symbol."""

    kind: OpKind
    gt: str | None
    pred: str | None


EditScript = tuple[EditOp, ...]


def match(c: str) -> EditOp:
    return EditOp(OpKind.MATCH, c, c)


def substitute(gt_c: str, pred_c: str) -> EditOp:
    return EditOp(OpKind.SUBSTITUTE, gt_c, pred_c)


def insert(pred_c: str) -> EditOp:
    return EditOp(OpKind.INSERT, None, pred_c)


def delete(gt_c: str) -> EditOp:
    return EditOp(OpKind.DELETE, gt_c, None)


def script_gt_text(ops: EditScript) -> str:
    """Replay the ground-truth side of a script."""
    return "".join(op.gt for op in ops if op.gt is not None)


def script_pred_text(ops: EditScript) -> str:
    """Replay the prediction side of a script."""
    return "".join(op.pred for op in ops if op.pred is not None)


def script_distance(ops: EditScript) -> int:
    return sum(1 for op in ops if op.kind is not OpKind.MATCH)


def _codepoints(s: str) -> np.ndarray:
    return np.frombuffer(s.encode("utf-32-le"), dtype=np.uint32)


def _levenshtein_small(a: str, b: str) -> int:
    n = len(b)
    prev = list(range(n + 1))
    for i, ca in enumerate(a, start=1):
        cur = [i] + [0] * n
        for j in range(1, n + 1):
            if ca == b[j - 1]:
                cur[j] = prev[j - 1]
            else:
                cur[j] = 1 + min(prev[j - 1], prev[j], cur[j - 1])
        prev = cur
    return prev[n]


def _levenshtein_rows(a: str, b: str) -> int:
    # Row update: tentative[j] = min(diag + sub, up + 1); the left-neighbor
    # chain cur[j] = min(tentative[j], cur[j-1] + 1) is a running minimum of
    # (candidate - index), restored by adding the index back.
    A = _codepoints(a)
    B = _codepoints(b)
    n = len(b)
    idx = np.arange(n + 1, dtype=np.int32)
    prev = idx.copy()
    cand = np.empty(n + 1, dtype=np.int32)
    for i in range(1, len(a) + 1):
        neq = (B != A[i - 1]).astype(np.int32)
        cand[0] = i
        np.minimum(prev[:-1] + neq, prev[1:] + 1, out=cand[1:])
        prev = np.minimum.accumulate(cand - idx) + idx
    return int(prev[n])


def levenshtein(gt: str, pred: str) -> int:
    """Minimal unit-cost edit distance between two strings."""
    if gt == pred:
        return 0
    if not gt:
        return len(pred)
    if not pred:
        return len(gt)
    if len(gt) * len(pred) < _VECTOR_THRESHOLD:
        return _levenshtein_small(gt, pred)
    return _levenshtein_rows(gt, pred)


def _cost_matrix(a: str, b: str) -> np.ndarray:
    m, n = len(a), len(b)
    D = np.empty((m + 1, n + 1), dtype=np.int32)
    D[0, :] = np.arange(n + 1, dtype=np.int32)
    D[:, 0] = np.arange(m + 1, dtype=np.int32)
    if m == 0 or n == 0:
        return D
    if m * n < _VECTOR_THRESHOLD:
        for i in range(1, m + 1):
            ca = a[i - 1]
            row = D[i]
            up = D[i - 1]
            for j in range(1, n + 1):
                if ca == b[j - 1]:
                    row[j] = up[j - 1]
                else:
                    row[j] = 1 + min(up[j - 1], up[j], row[j - 1])
        return D
    A = _codepoints(a)
    B = _codepoints(b)
    idx = np.arange(n + 1, dtype=np.int32)
    cand = np.empty(n + 1, dtype=np.int32)
    for i in range(1, m + 1):
        prev = D[i - 1]
        neq = (B != A[i - 1]).astype(np.int32)
        cand[0] = i
        np.minimum(prev[:-1] + neq, prev[1:] + 1, out=cand[1:])
        D[i] = np.minimum.accumulate(cand - idx) + idx
    return D


def _traceback(a: str, b: str, D: np.ndarray) -> EditScript:
    # Preference on cost ties: diagonal (match/substitute), then delete,
    # then insert. Walk backwards, then reverse.
    ops: list[EditOp] = []
    i, j = len(a), len(b)
    while i > 0 or j > 0:
        here = D[i, j]
        if i > 0 and j > 0:
            same = a[i - 1] == b[j - 1]
            if here == D[i - 1, j - 1] + (0 if same else 1):
                ops.append(match(a[i - 1]) if same else substitute(a[i - 1], b[j - 1]))
                i -= 1
                j -= 1
                continue
        if i > 0 and here == D[i - 1, j] + 1:
            ops.append(delete(a[i - 1]))
            i -= 1
            continue
        ops.append(insert(b[j - 1]))
        j -= 1
    ops.reverse()
    return tuple(ops)


@dataclass(frozen=True)
class AlignmentResult:
    """Optimal edit script with its distance and CER.

    cer is distance / gt_len for non-empty ground truth. For empty ground
    truth the line scores pred_len (every hallucinated character counts as
    one error over a virtual length of 1); such lines are excluded from
    macro averages but still feed micro sums.
    """

    ops: EditScript
    distance: int
    gt_len: int
    pred_len: int
    cer: float


def align(gt: str, pred: str) -> AlignmentResult:
    """Cost-optimal alignment of a prediction to its ground truth."""
    D = _cost_matrix(gt, pred)
    ops = _traceback(gt, pred, D)
    distance = int(D[len(gt), len(pred)])
    cer = distance / len(gt) if gt else float(len(pred))
    return AlignmentResult(ops, distance, len(gt), len(pred), cer)


@dataclass(frozen=True)
class CorpusCer:
    """Per-line alignments plus micro and macro aggregates.

    micro weights every ground-truth character equally (sum of distances
    over sum of lengths); macro weights every line equally (mean of
    per-line CER over lines with non-empty ground truth).
    """

    per_line: tuple[AlignmentResult, ...]
    total_distance: int
    total_gt_chars: int
    micro_cer: float
    macro_cer: float


def corpus_cer(
    pairs: list[tuple[TranscriptionLine, TranscriptionLine]],
) -> CorpusCer:
    """Align matched (ground truth, prediction) pairs and aggregate.

    Pairs must agree on (corpus_id, book_id, line_id); mismatches are
    reported together. An empty pair list is an error, not an empty result.
    """
    if not pairs:
        raise PairingError("empty evaluation set")
    mismatched = [
        (g.key, p.key) for g, p in pairs if g.key != p.key
    ]
    if mismatched:
        shown = "; ".join(f"gt {g} vs pred {p}" for g, p in mismatched[:10])
        raise PairingError(
            f"{len(mismatched)} pair(s) with mismatched line identity: {shown}"
        )
    results = tuple(align(g.text, p.text) for g, p in pairs)
    total_distance = sum(r.distance for r in results)
    total_gt_chars = sum(r.gt_len for r in results)
    micro = total_distance / total_gt_chars if total_gt_chars else float(total_distance)
    eligible = [r.cer for r in results if r.gt_len > 0]
    macro = sum(eligible) / len(eligible) if eligible else 0.0
    return CorpusCer(results, total_distance, total_gt_chars, micro, macro)
