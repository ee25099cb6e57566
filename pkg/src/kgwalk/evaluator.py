"""Answer scoring with lenient matching.

A response selects choices two ways: standalone uppercase letter tokens
(A-E, optional trailing ". , :") and choice texts appearing at token
boundaries (case-insensitive). Scoring is a total function over the
response text:

  1. two or more letter-selected choices, or two or more text-selected
     choices, is a multi-select (incorrect);
  2. one letter choice plus one different text choice: if the text is the
     answer, the letter is wrong (wrong-letter); any other combination is
     a multi-select;
  3. a single selected choice equal to the answer is correct (letter-match
     or text-match); a stray non-choice letter such as "X" never blocks a
     correct text;
  4. anything else, including a single wrong selection or an empty
     response, is irrelevant.

A text match that lies entirely inside another choice's longer match is
discounted, so nested choice texts ("fall" vs "fall down") do not fake a
multi-select.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass

from .errors import DataError

LETTER_MATCH = "letter-match"
TEXT_MATCH = "text-match"
WRONG_LETTER = "wrong-letter"
MULTI_SELECT = "multi-select"
IRRELEVANT = "irrelevant"
ERROR_FLAGGED = "error-flagged"

REASONS = (LETTER_MATCH, TEXT_MATCH, WRONG_LETTER, MULTI_SELECT,
           IRRELEVANT, ERROR_FLAGGED)

_VALID_LABELS = ("A", "B", "C", "D", "E")
_LETTER_RE = re.compile(r"(?<![A-Za-z0-9])([A-Z])[.,:]?(?![A-Za-z0-9])")


@dataclass(frozen=True)
class Choice:
    label: str
    text: str


@dataclass(frozen=True)
class QAItem:
    id: str
    stem: str
    question_concept: str
    choices: tuple[Choice, ...]
    answer_key: str
    text_match_disabled: bool = False

    def __post_init__(self):
        labels = [c.label for c in self.choices]
        if len(set(labels)) != len(labels):
            raise DataError(f"item {self.id}: duplicate choice labels")
        for label in labels:
            if label not in _VALID_LABELS:
                raise DataError(f"item {self.id}: bad choice label {label!r}")
        if self.answer_key not in labels:
            raise DataError(
                f"item {self.id}: answer key {self.answer_key!r} not among choices"
            )

    def choice_text(self, label: str) -> str:
        for choice in self.choices:
            if choice.label == label:
                return choice.text
        raise KeyError(label)

    @property
    def labels(self) -> list[str]:
        return [c.label for c in self.choices]


@dataclass(frozen=True)
class Verdict:
    item_id: str
    correct: bool
    reason: str


def _text_spans(response: str, choice: Choice) -> list[tuple[int, int]]:
    pattern = re.compile(
        r"(?<![A-Za-z0-9])" + re.escape(choice.text) + r"(?![A-Za-z0-9])",
        re.IGNORECASE,
    )
    return [m.span() for m in pattern.finditer(response)]


def _selected_by_text(response: str, item: QAItem) -> set[str]:
    spans: dict[str, list[tuple[int, int]]] = {}
    for choice in item.choices:
        if not choice.text:
            continue
        found = _text_spans(response, choice)
        if found:
            spans[choice.label] = found
    # drop a choice whose every match is nested inside another choice's match
    selected = set()
    for label, own in spans.items():
        swallowed = all(
            any(
                other != label and o_start <= start and end <= o_end
                and (o_start, o_end) != (start, end)
                for other, other_spans in spans.items()
                for o_start, o_end in other_spans
            )
            for start, end in own
        )
        if not swallowed:
            selected.add(label)
    return selected


def score_response(response: str, item: QAItem) -> Verdict:
    """Apply the lenient matching rules; total, never raises on content."""
    response = response or ""
    letters = {
        m.group(1) for m in _LETTER_RE.finditer(response)
        if m.group(1) in item.labels
    }
    texts = set() if item.text_match_disabled else _selected_by_text(response, item)

    if len(letters) >= 2 or len(texts) >= 2:
        return Verdict(item.id, False, MULTI_SELECT)
    if letters and texts and letters != texts:
        if texts == {item.answer_key}:
            return Verdict(item.id, False, WRONG_LETTER)
        return Verdict(item.id, False, MULTI_SELECT)
    selected = letters | texts
    if selected == {item.answer_key}:
        return Verdict(item.id, True, LETTER_MATCH if letters else TEXT_MATCH)
    return Verdict(item.id, False, IRRELEVANT)


def accuracy(verdicts) -> float:
    verdicts = list(verdicts)
    if not verdicts:
        raise DataError("accuracy of zero verdicts is undefined")
    return sum(1 for v in verdicts if v.correct) / len(verdicts)


def summarize(verdicts, config_digest: str = "") -> dict:
    verdicts = list(verdicts)
    histogram: dict[str, int] = {}
    for verdict in verdicts:
        histogram[verdict.reason] = histogram.get(verdict.reason, 0) + 1
    return {
        "n": len(verdicts),
        "accuracy": accuracy(verdicts),
        "reason_histogram": dict(sorted(histogram.items())),
        "errors": histogram.get(ERROR_FLAGGED, 0),
        "config_digest": config_digest,
    }


def load_dataset(path) -> list[QAItem]:
    """Read CommonsenseQA-style JSON lines.

    Items with duplicate choice texts are kept but flagged so that only
    letter matching applies to them.
    """
    items = []
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    with fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                raw = json.loads(line)
                question = raw["question"]
                choices = tuple(
                    Choice(label=c["label"], text=c["text"])
                    for c in question["choices"]
                )
                texts = [c.text.lower() for c in choices]
                items.append(
                    QAItem(
                        id=raw["id"],
                        stem=question["stem"],
                        question_concept=question["question_concept"],
                        choices=choices,
                        answer_key=raw["answerKey"],
                        text_match_disabled=len(set(texts)) != len(texts),
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise DataError(
                    f"{path}:{line_no}: malformed dataset record: {exc}"
                ) from exc
    if not items:
        raise DataError(f"dataset {path} contains no items")
    return items
