"""Core line type shared by every stage of the pipeline.

A TranscriptionLine is one text line together with its source identity.
Ground-truth lines and engine predictions use the same type; predictions
additionally carry the id of the engine that produced them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace


class LineKind(enum.Enum):
    GROUND_TRUTH = "ground_truth"
    PREDICTION = "prediction"


@dataclass(frozen=True, slots=True)
class TranscriptionLine:
    corpus_id: str
    book_id: str
    line_id: str
    text: str
    kind: LineKind
    engine_id: str | None = None

    def __post_init__(self):
        if self.kind is LineKind.PREDICTION and not self.engine_id:
            raise ValueError(f"prediction line {self.key} requires an engine_id")
        if self.kind is LineKind.GROUND_TRUTH and self.engine_id is not None:
            raise ValueError(f"ground-truth line {self.key} must not carry an engine_id")

    @property
    def key(self) -> tuple[str, str, str]:
        """Identity used to match ground truth with predictions."""
        return (self.corpus_id, self.book_id, self.line_id)

    def with_text(self, text: str) -> "TranscriptionLine":
        return replace(self, text=text)


def gt_line(corpus_id: str, book_id: str, line_id: str, text: str) -> TranscriptionLine:
    return TranscriptionLine(corpus_id, book_id, line_id, text, LineKind.GROUND_TRUTH)


def pred_line(
    corpus_id: str, book_id: str, line_id: str, text: str, engine_id: str
) -> TranscriptionLine:
    return TranscriptionLine(corpus_id, book_id, line_id, text, LineKind.PREDICTION, engine_id)
